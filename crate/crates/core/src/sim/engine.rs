use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use super::array::{preload_weights, run_tile};
use super::pe::Operand;
use super::{ArrayConfig, PeKind, SimStats, TileStats};
use crate::bspline_unit::SparseActivationBlock;
use crate::error::{Error, Result};
use crate::kan_gemm::{activation_blocks, relu_matrix, FeatureMap, LayerParams, Network};
use crate::tiling::{tile_compute_cycles, tile_counts, tile_gemm, GemmOp, OpKind, OpRole, Tile, TileSchedule};
use crate::workloads::{random_input, random_parameters, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SimMode {
    /// Cycle-stepped simulation on seeded data, outputs checked per layer.
    Functional,
    /// Closed-form counters only.
    Timing,
}

#[derive(Debug, Clone, Serialize)]
pub struct OpRun {
    pub layer: usize,
    pub op: GemmOp,
    pub stats: SimStats,
}

#[derive(Debug, Clone)]
pub struct WorkloadRun {
    pub ops: Vec<OpRun>,
    /// Per-layer accumulators (functional mode only).
    pub outputs: Option<Vec<Array2<i32>>>,
}

impl WorkloadRun {
    pub fn total(&self) -> SimStats {
        let mut s = SimStats::default();
        for op in &self.ops {
            s.merge(&op.stats.summary());
        }
        s
    }
}

/// Activation and weight operands of one lowered op.
enum OpData<'a> {
    Kan { blocks: Array2<SparseActivationBlock>, weights: &'a Array2<i8>, p: usize, band: usize },
    Dense { acts: Array2<u8>, weights: &'a Array2<i8> },
}

fn op_data<'a>(op: &GemmOp, layer: &'a LayerParams, rows: ArrayView2<u8>) -> Result<OpData<'a>> {
    match (layer, op.role) {
        (LayerParams::Kan { params, .. }, OpRole::Main) => Ok(OpData::Kan {
            blocks: activation_blocks(rows, params)?,
            weights: params.coeffs(),
            p: params.grid().degree(),
            band: params.grid().num_basis(),
        }),
        (LayerParams::Kan { params, .. }, OpRole::Bias) => {
            let weights = params.bias_weights().ok_or_else(|| Error::Config("bias op on a layer without bias".into()))?;
            Ok(OpData::Dense { acts: relu_matrix(rows, params.relu()), weights })
        }
        (LayerParams::Dense(d), _) => Ok(OpData::Dense { acts: relu_matrix(rows, d.relu()), weights: d.weights() }),
    }
}

fn tile_weights(schedule: &TileSchedule, tile: &Tile, weights: &Array2<i8>) -> Array2<Vec<i8>> {
    Array2::from_shape_fn((tile.pe_rows, tile.pe_cols()), |(r, c)| {
        schedule.pe_weight_rows(tile, r).map(|w| weights[[w, tile.cols.start + c]]).collect()
    })
}

fn operand(schedule: &TileSchedule, tile: &Tile, data: &OpData, row: usize, r: usize) -> Operand {
    let wrows = schedule.pe_weight_rows(tile, r);
    match (schedule.config.pe, data) {
        (PeKind::Scalar, OpData::Kan { blocks, p, band, .. }) => {
            let w = wrows.start;
            let block = &blocks[[row, w / band]];
            let i = w % band;
            if (block.select..=block.select + p).contains(&i) {
                Operand::scalar(block.values[i - block.select], true)
            } else {
                Operand::scalar(0, false)
            }
        }
        (PeKind::VectorNM { .. }, OpData::Kan { blocks, band, .. }) => {
            Operand::from_block(&blocks[[row, wrows.start / band]])
        }
        (pe, OpData::Dense { acts, .. }) => {
            let mut op = Operand::default();
            for (j, w) in wrows.enumerate() {
                op.values.push(acts[[row, w]]);
                op.useful_mask |= 1 << j;
            }
            while op.values.len() < pe.lanes() {
                op.values.push(0);
            }
            op
        }
    }
}

/// Run one lowered op of `layer` tile by tile, adding column sums into `acc`.
pub fn simulate_layer_op(
    schedule: &TileSchedule,
    layer: &LayerParams,
    rows: ArrayView2<u8>,
    acc: &mut Array2<i32>,
) -> Result<SimStats> {
    let op = &schedule.op;
    if rows.nrows() != op.rows || acc.dim() != (op.rows, op.n_outputs) {
        return Err(Error::Shape(format!(
            "op expects {} rows and ({}, {}) accumulators, got {} and {:?}",
            op.rows,
            op.rows,
            op.n_outputs,
            rows.nrows(),
            acc.dim()
        )));
    }
    let data = op_data(op, layer, rows)?;
    let weights = match &data {
        OpData::Kan { weights, .. } | OpData::Dense { weights, .. } => *weights,
    };
    if weights.dim() != (op.effective_weight_rows(), op.n_outputs) {
        return Err(Error::Shape(format!("weights {:?} do not match op", weights.dim())));
    }
    let mut stats = SimStats::default();
    for tile in &schedule.tiles {
        let loaded = preload_weights(&schedule.config, &tile_weights(schedule, tile, weights))?;
        let stream: Vec<Vec<Operand>> = (0..op.rows)
            .map(|i| (0..tile.pe_rows).map(|r| operand(schedule, tile, &data, i, r)).collect())
            .collect();
        let run = run_tile(&loaded, &stream)?;
        for i in 0..op.rows {
            for c in 0..tile.pe_cols() {
                let slot = &mut acc[[i, tile.cols.start + c]];
                *slot = slot
                    .checked_add(run.outputs[[i, c]])
                    .ok_or_else(|| Error::AccumulatorOverflow(format!("row {i} output {}", tile.cols.start + c)))?;
            }
        }
        stats.push_tile(run.stats);
    }
    Ok(stats)
}

/// Per-tile counters without stepping the array. `k_of(row, feature)` gives
/// the interval index the B-spline unit produces; only scalar KAN tiles that
/// split a feature band need it.
pub fn tile_stats_closed_form(schedule: &TileSchedule, k_of: &dyn Fn(usize, usize) -> usize) -> Vec<TileStats> {
    let cfg = &schedule.config;
    let op = &schedule.op;
    let t = op.rows as u64;
    let issued = t * cfg.pe_count() as u64 * cfg.pe.lanes() as u64;
    schedule
        .tiles
        .iter()
        .map(|tile| {
            let cols = tile.pe_cols() as u64;
            let useful = match (cfg.pe, op.kind, op.grid) {
                (_, OpKind::Dense, _) | (_, _, None) => t * tile.weight_rows.len() as u64 * cols,
                (PeKind::VectorNM { n, .. }, OpKind::Kan, _) => t * (tile.pe_rows * n) as u64 * cols,
                (PeKind::Scalar, OpKind::Kan, Some(g)) => {
                    let (band, p) = (g.num_basis(), g.degree());
                    let wr = &tile.weight_rows;
                    let mut count = 0u64;
                    for f in wr.start / band..=(wr.end - 1) / band {
                        let base = f * band;
                        if wr.start <= base && base + band <= wr.end {
                            count += t * (p as u64 + 1);
                            continue;
                        }
                        for i in 0..op.rows {
                            let k = k_of(i, f);
                            let lo = (base + k - p).max(wr.start);
                            let hi = (base + k + 1).min(wr.end);
                            count += hi.saturating_sub(lo) as u64;
                        }
                    }
                    count * cols
                }
            };
            TileStats {
                preload_cycles: cfg.preload_cycles(),
                compute_cycles: tile_compute_cycles(cfg, op.rows),
                useful_macs: useful,
                issued_slots: issued,
            }
        })
        .collect()
}

/// Aggregate counters of one op in O(1). Useful MACs are data independent:
/// every (row, feature, output) contributes `P + 1` spline products.
pub fn op_stats_closed_form(op: &GemmOp, config: &ArrayConfig) -> Result<SimStats> {
    let (rt, ct) = tile_counts(op, config)?;
    let tiles = (rt * ct) as u64;
    let t = op.rows as u64;
    let per_row = match (op.kind, op.grid) {
        (OpKind::Kan, Some(g)) => op.k_features as u64 * (g.degree() as u64 + 1),
        _ => op.k_features as u64,
    };
    let preload = tiles * config.preload_cycles();
    let compute = tiles * tile_compute_cycles(config, op.rows);
    Ok(SimStats {
        total_cycles: preload + compute,
        preload_cycles: preload,
        compute_cycles: compute,
        useful_macs: t * per_row * op.n_outputs as u64,
        issued_slots: tiles * t * config.pe_count() as u64 * config.pe.lanes() as u64,
        per_tile: Vec::new(),
    })
}

/// Functional run of a whole network; every layer's accumulators must match
/// the integer reference or the run fails.
pub fn simulate_network(net: &Network, input: &FeatureMap, config: &ArrayConfig) -> Result<WorkloadRun> {
    let mut ops = Vec::new();
    let mut outputs = Vec::with_capacity(net.layers.len());
    let mut fmap = input.clone();
    for (li, layer) in net.layers.iter().enumerate() {
        let rows = layer.gemm_input(&fmap)?;
        let mut acc = Array2::<i32>::zeros((rows.nrows(), layer.out_features()));
        for op in layer.gemm_ops(rows.nrows())? {
            let schedule = tile_gemm(&op, config)?;
            let stats = simulate_layer_op(&schedule, layer, rows.view(), &mut acc)?;
            ops.push(OpRun { layer: li, op, stats });
        }
        if li + 1 < net.layers.len() {
            fmap = net.next_feature_map(li, &fmap, &acc);
        }
        outputs.push(acc);
    }
    Ok(WorkloadRun { ops, outputs: Some(outputs) })
}

/// Run a workload. Functional mode builds seeded parameters and inputs and
/// needs a chainable layer sequence.
pub fn simulate_workload(workload: &Workload, config: &ArrayConfig, mode: SimMode) -> Result<WorkloadRun> {
    match mode {
        SimMode::Functional => {
            let net = random_parameters(workload, workload.seed)?;
            let input = random_input(workload, workload.seed)?;
            simulate_network(&net, &input, config)
        }
        SimMode::Timing => {
            let ops = workload
                .ops()?
                .into_iter()
                .map(|(layer, op)| Ok(OpRun { layer, op, stats: op_stats_closed_form(&op, config)? }))
                .collect::<Result<Vec<_>>>()?;
            Ok(WorkloadRun { ops, outputs: None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline_unit::QuantParams;
    use crate::kan_gemm::{kan_layer_forward_quant, KanLayerParams};
    use crate::spline::UniformGrid;

    fn kan_layer(k: usize, n: usize, g: usize, p: usize, bias: bool) -> LayerParams {
        let grid = UniformGrid::over_domain(-1.0, 1.0, g, p).unwrap();
        let q = QuantParams::calibrate(&grid, QuantParams::default_lut_scale(p)).unwrap();
        let coeffs = Array2::from_shape_fn(((g + p) * k, n), |(i, j)| ((i * 31 + j * 17) % 255) as i8);
        let b = bias.then(|| Array2::from_shape_fn((k, n), |(i, j)| ((i + 3 * j) % 9) as i8 - 4));
        LayerParams::Kan { params: KanLayerParams::new(&grid, q, coeffs, 0.01, b).unwrap(), conv: None }
    }

    fn inputs(rows: usize, k: usize) -> Array2<u8> {
        Array2::from_shape_fn((rows, k), |(i, j)| ((i * 73 + j * 41 + 5) % 256) as u8)
    }

    fn check(layer: &LayerParams, x: &Array2<u8>, cfg: ArrayConfig) {
        let reference = layer.forward_quant(x.view()).unwrap();
        let mut acc = Array2::zeros(reference.dim());
        for op in layer.gemm_ops(x.nrows()).unwrap() {
            let s = tile_gemm(&op, &cfg).unwrap();
            let stats = simulate_layer_op(&s, layer, x.view(), &mut acc).unwrap();
            let closed = op_stats_closed_form(&op, &cfg).unwrap();
            assert_eq!(stats.summary(), closed);
            assert_eq!(stats.total_cycles, s.predicted_cycles());
        }
        assert_eq!(acc, reference);
    }

    #[test]
    fn scalar_and_vector_match_reference() {
        let layer = kan_layer(5, 7, 3, 3, true);
        let x = inputs(9, 5);
        check(&layer, &x, ArrayConfig::new(4, 3, PeKind::Scalar).unwrap());
        check(&layer, &x, ArrayConfig::new(2, 5, PeKind::VectorNM { n: 4, m: 6 }).unwrap());
        let quad = kan_layer(3, 2, 2, 2, false);
        check(&quad, &inputs(4, 3), ArrayConfig::new(3, 3, PeKind::VectorNM { n: 3, m: 4 }).unwrap());
    }

    #[test]
    fn per_tile_closed_form_matches_stepped() {
        let layer = kan_layer(3, 2, 3, 3, false);
        let LayerParams::Kan { params, .. } = &layer else { unreachable!() };
        let x = inputs(6, 3);
        let cfg = ArrayConfig::new(4, 2, PeKind::Scalar).unwrap();
        let op = layer.gemm_ops(6).unwrap()[0];
        let s = tile_gemm(&op, &cfg).unwrap();
        let mut acc = Array2::zeros((6, 2));
        let stepped = simulate_layer_op(&s, &layer, x.view(), &mut acc).unwrap();
        let blocks = activation_blocks(x.view(), params).unwrap();
        let closed = tile_stats_closed_form(&s, &|i, f| blocks[[i, f]].k);
        assert_eq!(stepped.per_tile, closed);
        assert_eq!(acc, kan_layer_forward_quant(x.view(), params).unwrap());
    }

    #[test]
    fn vector_kan_is_fully_useful_on_full_tiles() {
        let layer = kan_layer(4, 4, 5, 3, false);
        let cfg = ArrayConfig::new(4, 4, PeKind::VectorNM { n: 4, m: 8 }).unwrap();
        let op = layer.gemm_ops(8).unwrap()[0];
        let s = tile_gemm(&op, &cfg).unwrap();
        let mut acc = Array2::zeros((8, 4));
        let stats = simulate_layer_op(&s, &layer, inputs(8, 4).view(), &mut acc).unwrap();
        assert_eq!(stats.utilization(), 1.0);
    }
}
