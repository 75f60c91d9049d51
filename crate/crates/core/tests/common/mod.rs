//! Test-side oracles, written without the library's spline code.
#![allow(dead_code)]

use kansa::spline::UniformGrid;

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Cardinal B-spline of degree `p` by the truncated-power formula
/// `1/p! * sum_j (-1)^j C(p+1, j) (u - j)_+^p`.
pub fn truncated_power(p: usize, u: f64) -> f64 {
    if u <= 0.0 || u >= (p + 1) as f64 {
        return 0.0;
    }
    let fact: f64 = (1..=p).map(|i| i as f64).product();
    let mut sum = 0.0;
    for j in 0..=p + 1 {
        let t = u - j as f64;
        if t > 0.0 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binomial(p as u64 + 1, j as u64) * t.powi(p as i32);
        }
    }
    (sum / fact).max(0.0)
}

/// All basis values on a uniform grid via translated cardinal splines.
pub fn oracle_row(grid: &UniformGrid, x: f64) -> Vec<f64> {
    let p = grid.degree();
    (0..grid.num_basis())
        .map(|i| truncated_power(p, (x - grid.knot(i)) / grid.delta()))
        .collect()
}

use kansa::kan_gemm::ConvGeometry;
use kansa::sim::{ArrayConfig, PeKind};
use kansa::workloads::{LayerSpec, SplineSpec, Workload};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small chainable workload plus an array to run it on, drawn from `seed`.
pub fn random_case(seed: u64) -> (Workload, ArrayConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = rng.random_range(1..=8);
    let p = rng.random_range(1..=3);
    let spline = |rng: &mut ChaCha8Rng| SplineSpec { g, p, domain: (-1.0, 1.0), bias: rng.random_bool(0.3) };
    let mut layers = Vec::new();
    if rng.random_bool(0.3) {
        let mut c_in = rng.random_range(1..=3);
        let mut size = rng.random_range(3..=6);
        for _ in 0..rng.random_range(1..=2) {
            let kernel = if rng.random_bool(0.5) { 1 } else { 3 };
            let stride = rng.random_range(1..=2);
            let geom = ConvGeometry {
                c_in,
                c_out: rng.random_range(1..=4),
                k_h: kernel,
                k_w: kernel,
                h: size,
                w: size,
                stride,
                pad: kernel / 2,
            };
            c_in = geom.c_out;
            size = geom.out_h();
            layers.push(LayerSpec::Conv { geom, spline: spline(&mut rng) });
        }
    } else {
        let mut width = rng.random_range(1..=10);
        for _ in 0..rng.random_range(1..=3) {
            let out = rng.random_range(1..=10);
            layers.push(if rng.random_bool(0.15) {
                LayerSpec::Dense { inputs: width, outputs: out }
            } else {
                LayerSpec::Kan { inputs: width, outputs: out, spline: spline(&mut rng) }
            });
            width = out;
        }
    }
    let has_spline = layers.iter().any(|l| l.spline().is_some());
    let pe = if has_spline && rng.random_bool(0.5) { PeKind::matched(g, p) } else { PeKind::Scalar };
    let cfg = ArrayConfig::new(rng.random_range(1..=5), rng.random_range(1..=5), pe).unwrap();
    let w = Workload {
        name: format!("case-{seed}"),
        application: "random".into(),
        batch: rng.random_range(1..=4),
        seed,
        layers,
    };
    (w, cfg)
}
