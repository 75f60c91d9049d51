//! Report rows and suite-level aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{energy_estimate, PowerAreaTable};
use crate::error::{Error, Result};
use crate::sim::{op_stats_closed_form, simulate_workload, ArrayConfig, PeKind, SimMode, SimStats, WorkloadRun};
use crate::workloads::{applications, Workload};

/// One CSV/JSON output row; `op_index` is `"all"` on totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub workload: String,
    pub op_index: String,
    pub pe_kind: String,
    pub rows: usize,
    pub cols: usize,
    pub batch: usize,
    pub preload_cycles: u64,
    pub compute_cycles: u64,
    pub total_cycles: u64,
    pub useful_macs: u64,
    pub issued_slots: u64,
    pub utilization: f64,
    pub norm_energy: Option<f64>,
    pub area_mm2: f64,
}

impl ReportRow {
    fn new(w: &Workload, op_index: String, cfg: &ArrayConfig, s: &SimStats, norm_energy: Option<f64>, table: &PowerAreaTable) -> Self {
        Self {
            workload: w.name.clone(),
            op_index,
            pe_kind: cfg.pe.to_string(),
            rows: cfg.rows,
            cols: cfg.cols,
            batch: w.batch,
            preload_cycles: s.preload_cycles,
            compute_cycles: s.compute_cycles,
            total_cycles: s.total_cycles,
            useful_macs: s.useful_macs,
            issued_slots: s.issued_slots,
            utilization: s.utilization(),
            norm_energy,
            area_mm2: table.area_mm2(cfg),
        }
    }
}

/// Vector PE matched to the workload's spline grid; all spline layers must
/// share one `(G, P)`.
pub fn matched_pe(w: &Workload) -> Result<PeKind> {
    let mut grids = w.layers.iter().filter_map(|l| l.spline()).map(|s| (s.g, s.p));
    let first = grids.next().ok_or_else(|| Error::Config(format!("`{}` has no KAN layer to match", w.name)))?;
    if grids.any(|g| g != first) {
        return Err(Error::Config(format!("`{}` mixes grids; pass an explicit --pe", w.name)));
    }
    Ok(PeKind::matched(first.0, first.1))
}

/// Functional for chainable workloads below `functional_limit` MACs, else timing.
pub fn auto_mode(w: &Workload, functional_limit: u64) -> Result<SimMode> {
    if !w.is_chainable() {
        return Ok(SimMode::Timing);
    }
    let macs: u64 = w
        .ops()?
        .iter()
        .map(|(_, op)| (op.rows * op.effective_weight_rows() * op.n_outputs) as u64)
        .sum();
    Ok(if macs <= functional_limit { SimMode::Functional } else { SimMode::Timing })
}

/// Per-op rows plus an `"all"` total row. Normalized energy compares against
/// a scalar array of the same shape and is empty for kinds without a power entry.
pub fn run_rows(w: &Workload, cfg: &ArrayConfig, mode: SimMode, table: &PowerAreaTable) -> Result<(Vec<ReportRow>, WorkloadRun)> {
    let run = simulate_workload(w, cfg, mode)?;
    let scalar = ArrayConfig { pe: PeKind::Scalar, ..*cfg };
    let mut rows = Vec::with_capacity(run.ops.len() + 1);
    let mut baseline_total = SimStats::default();
    for (i, op) in run.ops.iter().enumerate() {
        let baseline = op_stats_closed_form(&op.op, &scalar)?;
        let e = energy_estimate(&op.stats, cfg.pe, &baseline, table).ok();
        baseline_total.merge(&baseline);
        rows.push(ReportRow::new(w, i.to_string(), cfg, &op.stats, e, table));
    }
    let total = run.total();
    let e = energy_estimate(&total, cfg.pe, &baseline_total, table).ok();
    rows.push(ReportRow::new(w, "all".into(), cfg, &total, e, table));
    Ok((rows, run))
}

/// Totals of one workload on one array (closed form).
pub fn workload_totals(w: &Workload, cfg: &ArrayConfig) -> Result<SimStats> {
    let mut s = SimStats::default();
    for (_, op) in w.ops()? {
        s.merge(&op_stats_closed_form(&op, cfg)?);
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppSummary {
    pub application: String,
    /// `sum useful / sum issued` over the application's variants.
    pub utilization: f64,
    /// Mean total cycles over variants.
    pub mean_cycles: f64,
}

/// Per-application utilization and runtime, in suite order.
pub fn summarize(ws: &[Workload], stats: &[SimStats]) -> Vec<AppSummary> {
    applications(ws)
        .into_iter()
        .map(|(application, members)| {
            let picked: Vec<&SimStats> = members
                .iter()
                .map(|m| &stats[ws.iter().position(|w| std::ptr::eq(w, *m)).expect("member of suite")])
                .collect();
            let useful: u64 = picked.iter().map(|s| s.useful_macs).sum();
            let issued: u64 = picked.iter().map(|s| s.issued_slots).sum();
            let cycles: f64 = picked.iter().map(|s| s.total_cycles as f64).sum::<f64>() / picked.len() as f64;
            AppSummary { application, utilization: useful as f64 / issued.max(1) as f64, mean_cycles: cycles }
        })
        .collect()
}

/// Mean utilization and mean runtime across applications.
pub fn suite_average(apps: &[AppSummary]) -> (f64, f64) {
    let n = apps.len().max(1) as f64;
    (apps.iter().map(|a| a.utilization).sum::<f64>() / n, apps.iter().map(|a| a.mean_cycles).sum::<f64>() / n)
}

/// How the vector side of a comparison picks its PE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorChoice {
    /// `N:M(P+1, G+P)` per workload.
    Matched,
    /// One kind for all; spline grids are set to `G = M - P`, `P = N - 1`
    /// and applications that need a different grid are dropped.
    Fixed(PeKind),
}

/// Applications whose accuracy depends on their own grid size and are left
/// out of fixed-kind comparisons.
pub const GRID_BOUND_APPLICATIONS: &[&str] = &["MNIST-KAN"];

/// The suite prepared for a vector choice, plus the PE each workload uses.
pub fn prepare_suite(ws: &[Workload], choice: VectorChoice) -> Result<Vec<(Workload, PeKind)>> {
    ws.iter()
        .filter_map(|w| match choice {
            VectorChoice::Matched => Some(matched_pe(w).map(|pe| (w.clone(), pe))),
            VectorChoice::Fixed(pe @ PeKind::VectorNM { n, m }) => {
                if GRID_BOUND_APPLICATIONS.contains(&w.application.as_str()) {
                    None
                } else {
                    Some(Ok((w.clone().with_grid(m + 1 - n, n - 1), pe)))
                }
            }
            VectorChoice::Fixed(PeKind::Scalar) => Some(Err(Error::Config("vector side cannot be scalar".into()))),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub side: String,
    pub rows: usize,
    pub cols: usize,
    pub area_mm2: f64,
    pub avg_utilization: f64,
    pub avg_cycles: f64,
    pub per_app: Vec<AppSummary>,
}

/// Scalar and vector results for every `R x C` in `sizes x sizes`, sorted by
/// side then shape regardless of execution order.
pub fn sweep(ws: &[Workload], choice: VectorChoice, sizes: &[usize], table: &PowerAreaTable) -> Result<Vec<SweepPoint>> {
    let suite = prepare_suite(ws, choice)?;
    let workloads: Vec<Workload> = suite.iter().map(|(w, _)| w.clone()).collect();
    let mut jobs = Vec::new();
    for &r in sizes {
        for &c in sizes {
            jobs.push(("scalar", r, c));
            jobs.push(("kan-sa", r, c));
        }
    }
    let mut points = jobs
        .par_iter()
        .map(|&(side, r, c)| {
            let mut area = 0.0;
            let stats = suite
                .iter()
                .map(|(w, pe)| {
                    let kind = if side == "scalar" { PeKind::Scalar } else { *pe };
                    let cfg = ArrayConfig::new(r, c, kind)?;
                    area = table.area_mm2(&cfg);
                    workload_totals(w, &cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            let per_app = summarize(&workloads, &stats);
            let (avg_utilization, avg_cycles) = suite_average(&per_app);
            Ok(SweepPoint { side: side.into(), rows: r, cols: c, area_mm2: area, avg_utilization, avg_cycles, per_app })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| (&a.side, a.rows, a.cols).cmp(&(&b.side, b.rows, b.cols)));
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workloads::builtin;

    #[test]
    fn total_row_sums_ops() {
        let w = builtin("Prefetcher").unwrap().with_batch(8);
        let cfg = ArrayConfig::new(8, 8, PeKind::VectorNM { n: 4, m: 7 }).unwrap();
        let (rows, _) = run_rows(&w, &cfg, SimMode::Timing, &PowerAreaTable::default()).unwrap();
        assert_eq!(rows.len(), 3);
        let total = rows.last().unwrap();
        assert_eq!(total.op_index, "all");
        assert_eq!(total.total_cycles, rows[0].total_cycles + rows[1].total_cycles);
        assert!(total.norm_energy.is_none());
    }

    #[test]
    fn dense_utilization_is_tiling_efficiency() {
        let w = Workload::from_toml("version = 1\nname = \"d\"\nbatch = 3\n[[layers]]\nkind = \"dense\"\nin = 10\nout = 5\n").unwrap();
        let cfg = ArrayConfig::new(4, 4, PeKind::Scalar).unwrap();
        let s = workload_totals(&w, &cfg).unwrap();
        // 3 row tiles x 2 col tiles, 50 mapped weights over 96 PE slots
        assert!((s.utilization() - 50.0 / 96.0).abs() < 1e-12);
    }
}
