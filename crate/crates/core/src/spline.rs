//! Floating-point B-spline reference: uniform knot grids, the Cox-de Boor
//! recursion and the closed-form cardinal B-spline.
//!
//! Everything quantized in this crate is checked against the functions here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest spline degree the tabulated unit supports.
pub const MAX_DEGREE: usize = 3;

/// Uniform, extended knot sequence of one KAN layer.
///
/// Knots are `t0 + i * delta` for `i = 0 ..= g + 2p`. The input domain is
/// `[knot(p), knot(g + p)]` and the basis has `g + p` functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    t0: f64,
    delta: f64,
    g: usize,
    p: usize,
}

impl UniformGrid {
    pub fn new(t0: f64, delta: f64, g: usize, p: usize) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidGrid(format!("knot spacing must be positive, got {delta}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidGrid(format!("t0 must be finite, got {t0}")));
        }
        if g == 0 {
            return Err(Error::InvalidGrid("grid size G must be at least 1".into()));
        }
        if p == 0 || p > MAX_DEGREE {
            return Err(Error::InvalidGrid(format!(
                "degree P = {p} unsupported, expected 1 <= P <= {MAX_DEGREE}"
            )));
        }
        Ok(Self { t0, delta, g, p })
    }

    /// Grid whose input domain is `[lo, hi]` split into `g` intervals.
    pub fn over_domain(lo: f64, hi: f64, g: usize, p: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("empty domain [{lo}, {hi}]")));
        }
        let delta = (hi - lo) / g.max(1) as f64;
        Self::new(lo - p as f64 * delta, delta, g, p)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn grid_size(&self) -> usize {
        self.g
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn knot(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.delta
    }

    /// Number of basis functions, `G + P`.
    pub fn num_basis(&self) -> usize {
        self.g + self.p
    }

    /// Number of knot intervals of the extended grid, `G + 2P`.
    pub fn num_intervals(&self) -> usize {
        self.g + 2 * self.p
    }

    pub fn knots(&self) -> Vec<f64> {
        (0..=self.num_intervals()).map(|i| self.knot(i)).collect()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knot(self.p), self.knot(self.g + self.p))
    }

    pub fn clamp_to_domain(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        x.clamp(lo, hi)
    }

    /// Same grid shape with a different origin.
    pub fn with_origin(&self, t0: f64) -> Self {
        Self { t0, ..*self }
    }
}

/// Degree-0 B-spline on an arbitrary knot slice. `closed` names the last
/// interval: its right end is included and later intervals are empty.
fn indicator(knots: &[f64], i: usize, x: f64, closed: Option<usize>) -> f64 {
    let (lo, hi) = (knots[i], knots[i + 1]);
    let inside = match closed {
        Some(c) if i == c => lo <= x && x <= hi,
        Some(c) if i > c => false,
        _ => lo <= x && x < hi,
    };
    if inside {
        1.0
    } else {
        0.0
    }
}

fn recurse(knots: &[f64], i: usize, p: usize, x: f64, closed: Option<usize>) -> f64 {
    if p == 0 {
        return indicator(knots, i, x, closed);
    }
    let mut value = 0.0;
    let left_den = knots[i + p] - knots[i];
    if left_den != 0.0 {
        value += (x - knots[i]) / left_den * recurse(knots, i, p - 1, x, closed);
    }
    let right_den = knots[i + p + 1] - knots[i + 1];
    if right_den != 0.0 {
        value += (knots[i + p + 1] - x) / right_den * recurse(knots, i + 1, p - 1, x, closed);
    }
    value
}

/// Cox-de Boor recursion on an arbitrary non-decreasing knot vector.
///
/// Zero-width denominators contribute zero, so the function is total even
/// on degenerate knot vectors.
pub fn cox_de_boor(knots: &[f64], i: usize, p: usize, x: f64) -> f64 {
    assert!(
        i + p + 1 < knots.len(),
        "B-spline index {i} of degree {p} needs knots up to {} but only {} given",
        i + p + 1,
        knots.len()
    );
    recurse(knots, i, p, x, None)
}

/// `B_{i,0}(x)`: one on `[knot(i), knot(i+1))`, zero elsewhere.
pub fn bspline_degree0(grid: &UniformGrid, i: usize, x: f64) -> f64 {
    assert!(i < grid.num_intervals(), "interval index {i} out of range");
    if grid.knot(i) <= x && x < grid.knot(i + 1) {
        1.0
    } else {
        0.0
    }
}

/// `B_{i,p}(x)` on the grid, evaluated by the Cox-de Boor recursion.
pub fn bspline_recursive(grid: &UniformGrid, i: usize, p: usize, x: f64) -> f64 {
    assert!(p <= grid.degree(), "degree {p} above grid degree {}", grid.degree());
    assert!(i + p < grid.num_intervals(), "B-spline index {i} of degree {p} out of range");
    cox_de_boor(&grid.knots(), i, p, x)
}

/// Closed-form cardinal B-spline `B_{0,p}` on integer knots `0 ..= p + 1`.
pub fn cardinal_bspline(p: usize, u: f64) -> f64 {
    assert!((1..=MAX_DEGREE).contains(&p), "cardinal degree {p} unsupported");
    if !(0.0..(p + 1) as f64).contains(&u) {
        return 0.0;
    }
    match p {
        1 => {
            if u < 1.0 {
                u
            } else {
                2.0 - u
            }
        }
        2 => {
            if u < 1.0 {
                0.5 * u * u
            } else if u < 2.0 {
                0.5 * (-2.0 * u * u + 6.0 * u - 3.0)
            } else {
                let r = 3.0 - u;
                0.5 * r * r
            }
        }
        _ => {
            if u < 1.0 {
                u * u * u / 6.0
            } else if u < 2.0 {
                (((-3.0 * u + 12.0) * u - 12.0) * u + 4.0) / 6.0
            } else if u < 3.0 {
                (((3.0 * u - 24.0) * u + 60.0) * u - 44.0) / 6.0
            } else {
                let r = 4.0 - u;
                r * r * r / 6.0
            }
        }
    }
}

/// Maximum of the cardinal B-spline of degree `p`, reached at the midpoint.
pub fn cardinal_peak(p: usize) -> f64 {
    cardinal_bspline(p, (p + 1) as f64 / 2.0)
}

/// All `G + P` basis values at `x`, by recursion.
///
/// `x` must lie in the input domain. At the right domain edge the last
/// interval is taken as closed, so the row equals the left limit there.
pub fn basis_row(grid: &UniformGrid, x: f64) -> Vec<f64> {
    let (lo, hi) = grid.domain();
    let slack = 1e-9 * grid.delta();
    assert!(
        x >= lo - slack && x <= hi + slack,
        "x = {x} outside input domain [{lo}, {hi}]"
    );
    let x = x.clamp(lo, hi);
    let knots = grid.knots();
    let last = grid.num_basis() - 1;
    let closed = if x >= hi { Some(last) } else { None };
    (0..grid.num_basis()).map(|i| recurse(&knots, i, grid.degree(), x, closed)).collect()
}

/// Interval `k` with `knot(k) <= x < knot(k+1)` after clamping `x` into the
/// domain; always in `[P, G + P - 1]`.
pub fn interval_index(grid: &UniformGrid, x: f64) -> usize {
    let raw = ((x - grid.t0()) / grid.delta()).floor();
    let lo = grid.degree() as f64;
    let hi = (grid.num_basis() - 1) as f64;
    // NaN falls through `clamp` unchanged and casts to 0, then the max fixes it.
    (raw.clamp(lo, hi) as usize).max(grid.degree())
}
