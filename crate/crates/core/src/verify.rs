//! Self-checks run by `kansa verify`.

use serde::Serialize;

use crate::bspline_unit::{build_lut, evaluate, BSplineLut, QuantParams};
use crate::error::Result;
use crate::sim::{simulate_network, ArrayConfig, PeKind};
use crate::spline::{basis_row, cardinal_bspline, UniformGrid};
use crate::workloads::{random_input, random_parameters, Workload};

/// Overwrite one LUT byte before checking, to exercise failure reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LutFault {
    pub degree: usize,
    pub bank: usize,
    pub addr: usize,
    pub value: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Worst B-spline unit error for one `(G, P)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleCase {
    pub g: usize,
    pub p: usize,
    pub max_error: f64,
    pub bound: f64,
    pub worst_code: u8,
}

fn unit_setup(g: usize, p: usize, fault: Option<LutFault>) -> Result<(UniformGrid, QuantParams, BSplineLut)> {
    let grid = UniformGrid::over_domain(-1.0, 1.0, g, p)?;
    let q = QuantParams::calibrate(&grid, QuantParams::default_lut_scale(p))?;
    let grid = q.represented_grid(&grid);
    let mut lut = build_lut(p, &q)?;
    if let Some(f) = fault.filter(|f| f.degree == p) {
        lut.corrupt(f.bank, f.addr, f.value);
    }
    Ok((grid, q, lut))
}

/// Exhaustive sweep over all input codes: dequantized lanes scattered into
/// a full basis row, against the Cox-de Boor row at the clipped input.
pub fn oracle_case(g: usize, p: usize, fault: Option<LutFault>) -> Result<OracleCase> {
    let (grid, q, lut) = unit_setup(g, p, fault)?;
    let mut case = OracleCase { g, p, max_error: 0.0, bound: 2.0 / q.lut_scale, worst_code: 0 };
    for x_q in 0..=255u8 {
        let block = evaluate(x_q, &grid, &lut, &q);
        let oracle = basis_row(&grid, grid.clamp_to_domain(q.dequantize(x_q)));
        for (i, want) in oracle.iter().enumerate() {
            let got = i
                .checked_sub(block.select)
                .and_then(|j| block.values.get(j))
                .map_or(0.0, |&v| v as f64 / q.lut_scale);
            let err = (got - want).abs();
            if err > case.max_error {
                case.max_error = err;
                case.worst_code = x_q;
            }
        }
    }
    Ok(case)
}

/// Every `(G, P)` with `G` in 2..=10 and `P` in 1..=3.
pub fn oracle_sweep(fault: Option<LutFault>) -> Result<Vec<OracleCase>> {
    let mut out = Vec::new();
    for p in 1..=3 {
        for g in 2..=10 {
            out.push(oracle_case(g, p, fault)?);
        }
    }
    Ok(out)
}

fn check_oracle(fault: Option<LutFault>) -> Result<CheckResult> {
    let cases = oracle_sweep(fault)?;
    let bad = cases.iter().find(|c| c.max_error > c.bound);
    let worst = cases.iter().map(|c| c.max_error * c.bound.recip()).fold(0.0, f64::max);
    let detail = match bad {
        Some(c) => format!(
            "G={} P={} code {}: error {:.5} exceeds bound {:.5}",
            c.g, c.p, c.worst_code, c.max_error, c.bound
        ),
        None => {
            let max = cases.iter().map(|c| c.max_error).fold(0.0, f64::max);
            format!("{} grids, max error {max:.5} ({:.0}% of the 2/lut_scale bound)", cases.len(), worst * 100.0)
        }
    };
    Ok(CheckResult { name: "bspline-oracle", passed: bad.is_none(), detail })
}

fn check_partition(fault: Option<LutFault>) -> Result<CheckResult> {
    for p in 1..=3 {
        for g in 2..=10 {
            let (grid, q, lut) = unit_setup(g, p, fault)?;
            let (lo, hi) = grid.domain();
            for s in 0..=200 {
                let x = lo + (hi - lo) * s as f64 / 200.0;
                let sum: f64 = basis_row(&grid, x).iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    let detail = format!("float basis at G={g} P={p} x={x} sums to {sum}");
                    return Ok(CheckResult { name: "partition-of-unity", passed: false, detail });
                }
            }
            let bound = (p + 1) as f64 / q.lut_scale;
            for x_q in 0..=255u8 {
                let sum: f64 = evaluate(x_q, &grid, &lut, &q).values.iter().map(|&v| v as f64 / q.lut_scale).sum();
                if (sum - 1.0).abs() > bound {
                    let detail = format!("quantized block at G={g} P={p} code {x_q} sums to {sum:.5}");
                    return Ok(CheckResult { name: "partition-of-unity", passed: false, detail });
                }
            }
        }
    }
    let detail = "float sums within 1e-9, quantized within (P+1)/lut_scale".to_string();
    Ok(CheckResult { name: "partition-of-unity", passed: true, detail })
}

fn check_symmetry(fault: Option<LutFault>) -> Result<CheckResult> {
    for p in 1..=3 {
        for s in 0..=100 {
            let u = (p + 1) as f64 * s as f64 / 100.0;
            let (a, b) = (cardinal_bspline(p, u), cardinal_bspline(p, (p + 1) as f64 - u));
            if (a - b).abs() > 1e-12 {
                let detail = format!("B_{p}({u}) = {a} but mirror gives {b}");
                return Ok(CheckResult { name: "symmetry", passed: false, detail });
            }
        }
        // Each stored row must agree with its mirror image within one LSB.
        let (_, q, lut) = unit_setup(5, p, fault)?;
        let top = lut.depth() - 1;
        for (bank, rows) in lut.banks().iter().enumerate() {
            for (a, &code) in rows.iter().enumerate() {
                let x = lut.sample_point(bank, a);
                let want = (cardinal_bspline(p, (p + 1) as f64 - x) * q.lut_scale).round().min(127.0);
                if (code as f64 - want).abs() > 1.0 {
                    let detail = format!("P={p} bank {bank} row {a} (mirror row {}) holds {code}, expected {want}", top - a);
                    return Ok(CheckResult { name: "symmetry", passed: false, detail });
                }
            }
        }
    }
    Ok(CheckResult { name: "symmetry", passed: true, detail: "cardinal splines and stored banks are mirror-consistent".into() })
}

fn check_simulator(fault: Option<LutFault>) -> Result<CheckResult> {
    let cases = [
        (Workload::kan_mlp("v-cubic", "v", &[6, 5, 3], 3, 3).with_batch(5), 3usize, 3usize),
        (Workload::kan_mlp("v-linear", "v", &[4, 7], 5, 1).with_batch(3), 5, 1),
        (Workload::kan_mlp("v-quad", "v", &[3, 4, 2], 2, 2).with_batch(4), 2, 2),
    ];
    for (w, g, p) in &cases {
        let mut net = random_parameters(w, 1)?;
        if let Some(f) = fault.filter(|f| f.degree == *p) {
            for layer in &mut net.layers {
                if let crate::kan_gemm::LayerParams::Kan { params, .. } = layer {
                    let mut lut = params.lut().clone();
                    lut.corrupt(f.bank, f.addr, f.value);
                    *params = params.clone().with_lut(lut);
                }
            }
        }
        let input = random_input(w, 2)?;
        let reference = net.forward_quant(&input)?;
        for cfg in [
            ArrayConfig::new(3, 2, PeKind::Scalar)?,
            ArrayConfig::new(2, 3, PeKind::matched(*g, *p))?,
        ] {
            let run = simulate_network(&net, &input, &cfg)?;
            if run.outputs.as_ref() != Some(&reference) {
                let detail = format!("{} on {}x{} {} differs from the integer reference", w.name, cfg.rows, cfg.cols, cfg.pe);
                return Ok(CheckResult { name: "simulator-bit-exact", passed: false, detail });
            }
        }
    }
    let detail = format!("{} networks on scalar and vector arrays", cases.len());
    Ok(CheckResult { name: "simulator-bit-exact", passed: true, detail })
}

/// All checks in order; a check that errors is reported as failed.
pub fn run_checks(fault: Option<LutFault>) -> Vec<CheckResult> {
    let checks: [(&'static str, fn(Option<LutFault>) -> Result<CheckResult>); 4] = [
        ("bspline-oracle", check_oracle),
        ("partition-of-unity", check_partition),
        ("symmetry", check_symmetry),
        ("simulator-bit-exact", check_simulator),
    ];
    checks
        .iter()
        .map(|(name, f)| {
            f(fault).unwrap_or_else(|e| CheckResult { name, passed: false, detail: format!("error: {e}") })
        })
        .collect()
}
