//! Bit-accurate model of the tabulated B-spline unit.
//!
//! The unit turns an 8-bit input code into the `P + 1` non-zero basis
//! activations of its interval plus the interval index `k`:
//!
//! 1. **Compare** finds `k` with integer arithmetic.
//! 2. **Align** computes the LUT address
//!    `clip((G + 2P)(x_q - t_q0) - 255 k, 0, 255)`, i.e. the aligned input
//!    `x_a in [0, 1]` on 255 steps.
//! 3. **Lookup** reads half of the cardinal spline `B_{0,P}`. Row `a` of bank
//!    `j` holds `B_{0,P}(a / (depth - 1) + j)`; the other half comes from a
//!    second read at the bitwise-inverted address, since
//!    `B_{0,P}(u) = B_{0,P}(P + 1 - u)`.
//!
//! The tables only depend on `P` and the quantization, never on the knots.
//! Stored codes saturate at [`ACTIVATION_MAX`] because they feed the int8
//! multipliers of the array.

use std::fmt::Write as _;
use std::path::Path;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::{cardinal_bspline, cardinal_peak, UniformGrid, MAX_DEGREE};

/// Largest stored activation code (int8 operand range).
pub const ACTIVATION_MAX: u8 = 127;

/// Maximum input code.
pub const CODE_MAX: i64 = 255;

pub const DEFAULT_ADDR_BITS: u32 = 8;

/// Affine quantization of a layer's inputs plus the B-spline value scale.
///
/// `x = (x_q - x_zero) * x_scale`; a stored spline byte `b` stands for
/// `b / lut_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    pub x_scale: f64,
    pub x_zero: i32,
    pub lut_scale: f64,
    pub addr_bits: u32,
}

impl QuantParams {
    pub fn new(x_scale: f64, x_zero: i32, lut_scale: f64, addr_bits: u32) -> Result<Self> {
        if !(x_scale > 0.0) || !x_scale.is_finite() {
            return Err(Error::InvalidQuant(format!("x_scale must be positive, got {x_scale}")));
        }
        if !(lut_scale > 0.0) || !lut_scale.is_finite() {
            return Err(Error::InvalidQuant(format!("lut_scale must be positive, got {lut_scale}")));
        }
        if !(0..=255).contains(&x_zero) {
            return Err(Error::InvalidQuant(format!("x_zero {x_zero} outside [0, 255]")));
        }
        if !(1..=16).contains(&addr_bits) {
            return Err(Error::InvalidQuant(format!("addr_bits {addr_bits} outside [1, 16]")));
        }
        Ok(Self { x_scale, x_zero, lut_scale, addr_bits })
    }

    /// Default spline scale per degree. `P = 3` uses 192 so that
    /// `B(1) = 1/6` is stored as 32; the others put the peak just under 127.
    pub fn default_lut_scale(p: usize) -> f64 {
        match p {
            1 => 127.0,
            2 => 169.0,
            _ => 192.0,
        }
    }

    /// Min/max calibration over the extended knot range `[t0, t_{G+2P}]`,
    /// which is the range the align formula assumes the 256 codes cover.
    pub fn calibrate(grid: &UniformGrid, lut_scale: f64) -> Result<Self> {
        let span = grid.num_intervals() as f64 * grid.delta();
        let x_scale = span / CODE_MAX as f64;
        let zero = (-grid.t0() / x_scale).round();
        if !(0.0..=255.0).contains(&zero) {
            return Err(Error::InvalidQuant(format!(
                "extended knot range [{}, {}] does not contain zero",
                grid.t0(),
                grid.knot(grid.num_intervals())
            )));
        }
        Self::new(x_scale, zero as i32, lut_scale, DEFAULT_ADDR_BITS)
    }

    pub fn depth(&self) -> usize {
        1usize << self.addr_bits
    }

    pub fn quantize(&self, x: f64) -> u8 {
        ((x / self.x_scale).round() + self.x_zero as f64).clamp(0.0, 255.0) as u8
    }

    pub fn dequantize(&self, x_q: u8) -> f64 {
        (x_q as i32 - self.x_zero) as f64 * self.x_scale
    }

    /// Quantized first knot `t_q0` (not clamped to the code range).
    pub fn knot_code(&self, grid: &UniformGrid) -> i64 {
        (grid.t0() / self.x_scale).round() as i64 + self.x_zero as i64
    }

    /// The grid the integer unit actually represents: `t0` moved onto its
    /// quantized code. Float references should be evaluated on this grid.
    pub fn represented_grid(&self, grid: &UniformGrid) -> UniformGrid {
        let t0 = (self.knot_code(grid) - self.x_zero as i64) as f64 * self.x_scale;
        grid.with_origin(t0)
    }

    /// Checks that 255 code steps span exactly `G + 2P` knot intervals.
    pub fn check_grid(&self, grid: &UniformGrid) -> Result<()> {
        let span = grid.num_intervals() as f64 * grid.delta();
        let rel = (self.x_scale * CODE_MAX as f64 - span).abs() / span;
        if rel > 1e-9 {
            return Err(Error::InvalidQuant(format!(
                "x_scale {} does not map 255 codes onto the {} knot intervals",
                self.x_scale,
                grid.num_intervals()
            )));
        }
        Ok(())
    }
}

/// Up to `P + 1 <= 4` activation codes.
pub type Lanes = ArrayVec<u8, 4>;

/// Half-tabulated cardinal B-spline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BSplineLut {
    degree: usize,
    addr_bits: u32,
    lut_scale_bits: u64,
    /// `banks[j][a]`: code for `B(a / (depth - 1) + j)`. For even degrees the
    /// middle bank only holds the lower half of the rows.
    banks: Vec<Vec<u8>>,
}

/// Number of stored offsets, `ceil((P + 1) / 2)`.
pub fn bank_count(p: usize) -> usize {
    (p + 2) / 2
}

fn quantize_value(v: f64, lut_scale: f64) -> u8 {
    (v * lut_scale).round().clamp(0.0, ACTIVATION_MAX as f64) as u8
}

/// Build the half-table for degree `p`.
///
/// Fails when the spline peak would saturate by more than one code.
pub fn build_lut(p: usize, q: &QuantParams) -> Result<BSplineLut> {
    if !(1..=MAX_DEGREE).contains(&p) {
        return Err(Error::InvalidGrid(format!("LUT degree {p} unsupported")));
    }
    let peak = cardinal_peak(p);
    if peak * q.lut_scale > ACTIVATION_MAX as f64 + 1.0 {
        return Err(Error::LutOverflow { degree: p, peak, lut_scale: q.lut_scale });
    }
    let depth = q.depth();
    let step = 1.0 / (depth - 1) as f64;
    let banks = (0..bank_count(p))
        .map(|j| {
            let rows = if 2 * j == p { depth / 2 } else { depth };
            (0..rows)
                .map(|a| quantize_value(cardinal_bspline(p, a as f64 * step + j as f64), q.lut_scale))
                .collect()
        })
        .collect();
    Ok(BSplineLut { degree: p, addr_bits: q.addr_bits, lut_scale_bits: q.lut_scale.to_bits(), banks })
}

impl BSplineLut {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn depth(&self) -> usize {
        1usize << self.addr_bits
    }

    pub fn addr_bits(&self) -> u32 {
        self.addr_bits
    }

    pub fn lut_scale(&self) -> f64 {
        f64::from_bits(self.lut_scale_bits)
    }

    pub fn banks(&self) -> &[Vec<u8>] {
        &self.banks
    }

    /// Stored code, `None` past the end of a half-depth bank.
    pub fn entry(&self, bank: usize, addr: usize) -> Option<u8> {
        self.banks.get(bank).and_then(|b| b.get(addr)).copied()
    }

    /// Overwrite one entry. Used by fault-injection checks.
    pub fn corrupt(&mut self, bank: usize, addr: usize, value: u8) {
        self.banks[bank][addr] = value;
    }

    /// Total stored bytes.
    pub fn storage_bytes(&self) -> usize {
        self.banks.iter().map(Vec::len).sum()
    }

    /// Sample point behind `banks[bank][addr]`.
    pub fn sample_point(&self, bank: usize, addr: usize) -> f64 {
        addr as f64 / (self.depth() - 1) as f64 + bank as f64
    }

    /// Hex listing: one line per address with the bank bytes, `--` where a
    /// half-depth bank has no row.
    pub fn dump_hex(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# kansa-lut v1");
        let _ = writeln!(out, "degree {}", self.degree);
        let _ = writeln!(out, "addr_bits {}", self.addr_bits);
        let _ = writeln!(out, "lut_scale {}", self.lut_scale());
        let _ = writeln!(out, "banks {}", self.banks.len());
        for a in 0..self.depth() {
            let _ = write!(out, "{a:04x}");
            for bank in &self.banks {
                match bank.get(a) {
                    Some(b) => {
                        let _ = write!(out, " {b:02x}");
                    }
                    None => out.push_str(" --"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_hex(text: &str) -> Result<Self> {
        let mut degree = None;
        let mut addr_bits = None;
        let mut lut_scale = None;
        let mut nbanks = None;
        let mut banks: Vec<Vec<u8>> = Vec::new();
        let bad = |line: usize, msg: String| Error::LutFormat { line: line + 1, msg };
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let head = fields.next().unwrap_or_default();
            let mut value = || fields.next().ok_or_else(|| bad(ln, format!("missing value for `{head}`")));
            match head {
                "degree" => degree = Some(value()?.parse::<usize>().map_err(|e| bad(ln, e.to_string()))?),
                "addr_bits" => addr_bits = Some(value()?.parse::<u32>().map_err(|e| bad(ln, e.to_string()))?),
                "lut_scale" => lut_scale = Some(value()?.parse::<f64>().map_err(|e| bad(ln, e.to_string()))?),
                "banks" => {
                    let n = value()?.parse::<usize>().map_err(|e| bad(ln, e.to_string()))?;
                    nbanks = Some(n);
                    banks = vec![Vec::new(); n];
                }
                addr => {
                    let n = nbanks.ok_or_else(|| bad(ln, "row before `banks` header".into()))?;
                    let a = usize::from_str_radix(addr, 16).map_err(|e| bad(ln, e.to_string()))?;
                    for (j, bank) in banks.iter_mut().enumerate().take(n) {
                        let tok = fields.next().ok_or_else(|| bad(ln, format!("missing bank {j}")))?;
                        if tok == "--" {
                            continue;
                        }
                        if bank.len() != a {
                            return Err(bad(ln, format!("bank {j} row {a} out of sequence")));
                        }
                        bank.push(u8::from_str_radix(tok, 16).map_err(|e| bad(ln, e.to_string()))?);
                    }
                }
            }
        }
        let degree = degree.ok_or_else(|| bad(0, "missing `degree`".into()))?;
        let addr_bits = addr_bits.ok_or_else(|| bad(0, "missing `addr_bits`".into()))?;
        let lut_scale = lut_scale.ok_or_else(|| bad(0, "missing `lut_scale`".into()))?;
        if banks.len() != bank_count(degree) {
            return Err(bad(0, format!("degree {degree} needs {} banks", bank_count(degree))));
        }
        let depth = 1usize << addr_bits;
        for (j, bank) in banks.iter().enumerate() {
            let want = if 2 * j == degree { depth / 2 } else { depth };
            if bank.len() != want {
                return Err(bad(0, format!("bank {j} has {} rows, expected {want}", bank.len())));
            }
        }
        Ok(Self { degree, addr_bits, lut_scale_bits: lut_scale.to_bits(), banks })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.dump_hex())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_hex(&std::fs::read_to_string(path)?)
    }
}

/// The `P + 1` non-zero activations of one input and their position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseActivationBlock {
    /// Codes of `B_{k-P}(x) ..= B_k(x)`, ascending basis index.
    pub values: Lanes,
    pub k: usize,
    /// `k - P`: first coefficient the PE multiplexer selects.
    pub select: usize,
}

/// Interval search on the code: `floor((G + 2P)(x_q - t_q0) / 255)` clamped
/// into `[P, G + P - 1]`.
pub fn compare(x_q: u8, grid: &UniformGrid, q: &QuantParams) -> usize {
    let d = x_q as i64 - q.knot_code(grid);
    let raw = (grid.num_intervals() as i64 * d).div_euclid(CODE_MAX);
    raw.clamp(grid.degree() as i64, grid.num_basis() as i64 - 1) as usize
}

/// LUT address of the aligned input.
pub fn align(x_q: u8, k: usize, grid: &UniformGrid, q: &QuantParams) -> usize {
    let d = x_q as i64 - q.knot_code(grid);
    let num = (grid.num_intervals() as i64 * d - CODE_MAX * k as i64).clamp(0, CODE_MAX);
    let top = q.depth() as i64 - 1;
    if top == CODE_MAX {
        num as usize
    } else {
        ((num * top + CODE_MAX / 2) / CODE_MAX) as usize
    }
}

/// Read all `P + 1` lanes for address `x_addr`, in ascending basis order.
///
/// Lane `j` needs `B(x_a + P - j)`. Offsets below the midpoint come from the
/// direct read, the mirrored ones from bank `P - offset` at `~x_addr`; for
/// even `P` the middle lane picks whichever address lies in the stored half.
pub fn lookup(lut: &BSplineLut, x_addr: usize) -> Lanes {
    let depth = lut.depth();
    assert!(x_addr < depth, "LUT address {x_addr} out of range");
    let inverted = !x_addr & (depth - 1);
    let p = lut.degree;
    let mut lanes = Lanes::new();
    for j in 0..=p {
        let offset = p - j;
        let mirror = p - offset;
        let code = if offset < mirror {
            lut.banks[offset][x_addr]
        } else if offset > mirror {
            lut.banks[mirror][inverted]
        } else if x_addr < depth / 2 {
            lut.banks[offset][x_addr]
        } else {
            lut.banks[offset][inverted]
        };
        lanes.push(code);
    }
    lanes
}

/// Compare, align and lookup for one input code.
pub fn evaluate(x_q: u8, grid: &UniformGrid, lut: &BSplineLut, q: &QuantParams) -> SparseActivationBlock {
    assert_eq!(lut.degree(), grid.degree(), "LUT degree does not match grid");
    let k = compare(x_q, grid, q);
    let addr = align(x_q, k, grid, q);
    SparseActivationBlock { values: lookup(lut, addr), k, select: k - grid.degree() }
}

/// Latency of one B-spline unit evaluation, in cycles.
pub const UNIT_LATENCY_CYCLES: u64 = 1;
