//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.

mod common;

use std::io::Write;
use std::time::Instant;

use common::{oracle_row, random_case};
use kansa::bspline_unit::{build_lut, evaluate, QuantParams};
use kansa::cost::{
    arkane_cycles, asymptotic_speedup, energy_estimate, per_pe_normalized_energy, units_at_parity, PowerAreaTable,
};
use kansa::report::{prepare_suite, suite_average, summarize, workload_totals, AppSummary, VectorChoice};
use kansa::sim::{op_stats_closed_form, simulate_network, ArrayConfig, PeKind, SimStats};
use kansa::spline::{basis_row, UniformGrid};
use kansa::tiling::{GemmOp, OpKind};
use kansa::workloads::{builtin, builtin_workloads, random_input, random_parameters, Workload};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome) {
    let mut out = std::io::stdout().lock();
    let tag = if o.pass { "PASS" } else { "FAIL" };
    writeln!(out, "criterion {id:>2} [{tag}] {name}: {}", o.detail).unwrap();
}

fn setup(g: usize, p: usize) -> (UniformGrid, QuantParams, kansa::bspline_unit::BSplineLut) {
    let raw = UniformGrid::over_domain(-1.0, 1.0, g, p).unwrap();
    let q = QuantParams::calibrate(&raw, QuantParams::default_lut_scale(p)).unwrap();
    (q.represented_grid(&raw), q, build_lut(p, &q).unwrap())
}

fn c1_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut pass = true;
    for p in 1..=3 {
        for g in 2..=10 {
            let (grid, q, lut) = setup(g, p);
            for x_q in 0..=255u8 {
                let b = evaluate(x_q, &grid, &lut, &q);
                let oracle = oracle_row(&grid, grid.clamp_to_domain(q.dequantize(x_q)));
                for (j, &v) in b.values.iter().enumerate() {
                    let err = (v as f64 / q.lut_scale - oracle[b.select + j]).abs();
                    worst = worst.max(err * q.lut_scale);
                    pass &= err <= 2.0 / q.lut_scale + 1e-12;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome { pass: pass && secs < 10.0, detail: format!("max error {worst:.3} LSB (bound 2), {secs:.2} s") }
}

fn c2_fig4_bytes() -> Outcome {
    let (_, _, lut) = setup(5, 3);
    let banks = lut.banks();
    let stored = (banks[0][0], banks[1][0]);
    let mirrored = (banks[1][255], banks[0][255]);
    Outcome {
        pass: stored == (0, 32) && mirrored == (127, 32),
        detail: format!("row 0 stores {stored:?}, mirrored read {mirrored:?}, lut_scale {}", lut.lut_scale()),
    }
}

fn c3_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut float_worst, mut quant_ok) = (0.0f64, true);
    for _ in 0..10_000 {
        let g = rng.random_range(1..=16);
        let p = rng.random_range(1..=3);
        let grid = UniformGrid::new(rng.random_range(-4.0..4.0), rng.random_range(0.01..2.0), g, p).unwrap();
        let (lo, hi) = grid.domain();
        let x = rng.random_range(lo..=hi);
        let sum: f64 = basis_row(&grid, x).iter().sum();
        float_worst = float_worst.max((sum - 1.0).abs());

        let (rgrid, q, lut) = setup(g, p);
        let b = evaluate(rng.random(), &rgrid, &lut, &q);
        let qsum: f64 = b.values.iter().map(|&v| v as f64).sum::<f64>() / q.lut_scale;
        quant_ok &= (qsum - 1.0).abs() <= (p + 1) as f64 / q.lut_scale;
    }
    Outcome {
        pass: float_worst <= 1e-9 && quant_ok,
        detail: format!("float max |sum-1| {float_worst:.2e}, quantized within (P+1)/lut_scale: {quant_ok}"),
    }
}

fn c4_fidelity() -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    for seed in 0..100u64 {
        let (w, cfg) = random_case(seed);
        let net = random_parameters(&w, seed).unwrap();
        let input = random_input(&w, seed).unwrap();
        let reference = net.forward_quant(&input).unwrap();
        let run = simulate_network(&net, &input, &cfg).unwrap();
        if run.outputs.as_ref() != Some(&reference) {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome { pass: mismatches == 0 && secs < 60.0, detail: format!("{mismatches}/100 mismatches, {secs:.2} s") }
}

fn c5_cycle_ratio() -> Outcome {
    let mut bad = Vec::new();
    for p in 1..=3 {
        for g in 1..=32 {
            let (r, c) = (8, 8);
            let op = GemmOp::kan(64, r, c, UniformGrid::over_domain(-1.0, 1.0, g, p).unwrap()).unwrap();
            let s = op_stats_closed_form(&op, &ArrayConfig::new(r, c, PeKind::Scalar).unwrap()).unwrap();
            let v = op_stats_closed_form(&op, &ArrayConfig::new(r, c, PeKind::matched(g, p)).unwrap()).unwrap();
            if s.compute_cycles != (g + p) as u64 * v.compute_cycles {
                bad.push((g, p));
            }
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("G 1..32, P 1..3; violations {bad:?}") }
}

fn c6_utilization() -> Outcome {
    let mut bound_ok = true;
    for w in builtin_workloads() {
        for (_, op) in w.ops().unwrap() {
            if op.kind != OpKind::Kan {
                continue;
            }
            let grid = op.grid.unwrap();
            let limit = (grid.degree() + 1) as f64 / grid.num_basis() as f64;
            for side in [4, 16, 32] {
                let s = op_stats_closed_form(&op, &ArrayConfig::new(side, side, PeKind::Scalar).unwrap()).unwrap();
                bound_ok &= s.utilization() <= limit + 1e-12;
            }
        }
    }
    let mnist = builtin("MNIST-KAN").unwrap();
    let scalar = workload_totals(&mnist, &ArrayConfig::new(32, 32, PeKind::Scalar).unwrap()).unwrap().utilization();
    let vector = workload_totals(&mnist, &ArrayConfig::new(16, 16, PeKind::VectorNM { n: 4, m: 13 }).unwrap())
        .unwrap()
        .utilization();
    Outcome {
        pass: bound_ok && (0.28..=0.31).contains(&scalar) && vector >= 0.97,
        detail: format!("bound holds: {bound_ok}; MNIST scalar 32x32 {scalar:.4}, NM(4,13) 16x16 {vector:.4}"),
    }
}

fn suite_on(suite: &[(Workload, PeKind)], side: usize, vector: bool) -> Vec<AppSummary> {
    let ws: Vec<Workload> = suite.iter().map(|(w, _)| w.clone()).collect();
    let stats: Vec<SimStats> = suite
        .iter()
        .map(|(w, pe)| {
            let kind = if vector { *pe } else { PeKind::Scalar };
            workload_totals(w, &ArrayConfig::new(side, side, kind).unwrap()).unwrap()
        })
        .collect();
    summarize(&ws, &stats)
}

fn c7_runtime() -> Outcome {
    let suite = prepare_suite(&builtin_workloads(), VectorChoice::Fixed(PeKind::VectorNM { n: 4, m: 8 })).unwrap();
    let (_, scalar) = suite_average(&suite_on(&suite, 32, false));
    let (_, vector) = suite_average(&suite_on(&suite, 16, true));
    let ratio = scalar / vector;
    Outcome {
        pass: (1.6..=2.4).contains(&ratio),
        detail: format!("32x32 scalar {scalar:.0} vs 16x16 NM(4,8) {vector:.0} mean cycles, factor {ratio:.3}"),
    }
}

fn c8_utilization_gain() -> Outcome {
    let suite = prepare_suite(&builtin_workloads(), VectorChoice::Matched).unwrap();
    let scalar_apps = suite_on(&suite, 32, false);
    let vector_apps = suite_on(&suite, 16, true);
    let (su, _) = suite_average(&scalar_apps);
    let (vu, _) = suite_average(&vector_apps);
    let gain = 100.0 * (vu - su);
    let mut out = std::io::stdout().lock();
    for (s, v) in scalar_apps.iter().zip(&vector_apps) {
        writeln!(out, "    {:<20} scalar {:>6.2}%  kan-sa {:>6.2}%", s.application, 100.0 * s.utilization, 100.0 * v.utilization)
            .unwrap();
    }
    Outcome {
        pass: (30.0..=50.0).contains(&gain),
        detail: format!("scalar {:.2}%, kan-sa {:.2}%, gain {gain:.2} pp", 100.0 * su, 100.0 * vu),
    }
}

fn c9_arkane() -> Outcome {
    let table = PowerAreaTable::default();
    let formula_ok = (0..5u64).map(|e| 10u64.pow(e as u32 * 2)).all(|m| arkane_cycles(3, 5, m, 4) == 4 * 4 + 5 + 3 - 1 + m);
    let units = units_at_parity(3, &table);
    let speedup = asymptotic_speedup(3, &table);
    Outcome {
        pass: formula_ok && units == 72 && speedup >= 72.0,
        detail: format!("formula exact: {formula_ok}; units at parity {units}; asymptotic speedup {speedup:.1}"),
    }
}

fn c10_energy() -> Outcome {
    let table = PowerAreaTable::default();
    let mut lines = Vec::new();
    let mut pass = true;
    let one_two = per_pe_normalized_energy(PeKind::VectorNM { n: 1, m: 2 }, &table).unwrap();
    pass &= (one_two - 0.57).abs() <= 0.01;
    lines.push(format!("1:2 {one_two:.3}"));
    for (g, p, want) in [(3, 1, 0.44), (5, 1, 0.37), (3, 3, 0.47), (5, 3, 0.40)] {
        let w = Workload::kan_mlp("energy", "energy", &[64, 64, 64], g, p).with_batch(256);
        let pe = PeKind::matched(g, p);
        let vector = workload_totals(&w, &ArrayConfig::new(16, 16, pe).unwrap()).unwrap();
        let scalar = workload_totals(&w, &ArrayConfig::new(16, 16, PeKind::Scalar).unwrap()).unwrap();
        let e = energy_estimate(&vector, pe, &scalar, &table).unwrap();
        pass &= (e - want).abs() <= 0.01;
        lines.push(format!("{} {e:.3}", pe.ratio_label()));
    }
    Outcome { pass, detail: lines.join(", ") }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("B-spline unit oracle equivalence", c1_oracle),
        ("cubic LUT bytes and mirrored read", c2_fig4_bytes),
        ("partition of unity", c3_partition),
        ("simulator functional fidelity", c4_fidelity),
        ("per-PE cycle-ratio law", c5_cycle_ratio),
        ("utilization bound and MNIST figures", c6_utilization),
        ("area-parity runtime reduction", c7_runtime),
        ("average utilization improvement", c8_utilization_gain),
        ("tabulated vs recursive evaluator", c9_arkane),
        ("normalized energy per N:M kind", c10_energy),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        report(i + 1, name, &o);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
