use ndarray::Array2;

use super::pe::{dot_step, Operand};
use super::{ArrayConfig, TileStats};
use crate::error::{Error, Result};

/// Array state after a weight tile has been loaded.
#[derive(Debug, Clone)]
pub struct LoadedArray {
    config: ArrayConfig,
    /// Row-major `R x C`; `None` marks an unmapped PE.
    weights: Vec<Option<Vec<i8>>>,
}

impl LoadedArray {
    pub fn config(&self) -> &ArrayConfig {
        &self.config
    }

    pub fn is_valid(&self, r: usize, c: usize) -> bool {
        self.weights[r * self.config.cols + c].is_some()
    }

    pub fn weights_at(&self, r: usize, c: usize) -> Option<&[i8]> {
        self.weights[r * self.config.cols + c].as_deref()
    }

    /// Number of coefficients held by mapped PEs.
    pub fn resident_weights(&self) -> usize {
        self.weights.iter().flatten().map(Vec::len).sum()
    }
}

/// Load a `(pe_rows, pe_cols)` block of per-PE weight vectors. Vectors
/// shorter than the PE storage are zero-padded.
pub fn preload_weights(config: &ArrayConfig, tile: &Array2<Vec<i8>>) -> Result<LoadedArray> {
    let (tr, tc) = tile.dim();
    let words = config.pe.words_per_pe();
    if tr > config.rows || tc > config.cols {
        return Err(Error::Shape(format!("{tr}x{tc} tile does not fit a {}x{} array", config.rows, config.cols)));
    }
    let mut weights = vec![None; config.rows * config.cols];
    for ((r, c), w) in tile.indexed_iter() {
        if w.len() > words {
            return Err(Error::Shape(format!("PE ({r},{c}) given {} weights, holds {words}", w.len())));
        }
        let mut v = w.clone();
        v.resize(words, 0);
        weights[r * config.cols + c] = Some(v);
    }
    Ok(LoadedArray { config: *config, weights })
}

/// Result of streaming one activation block through a loaded tile.
#[derive(Debug, Clone)]
pub struct TileRun {
    /// `(T, C)` column sums leaving the bottom PE row.
    pub outputs: Array2<i32>,
    pub stats: TileStats,
}

type ActReg<'a> = Option<(usize, Option<&'a Operand>)>;

/// Cycle-stepped weight-stationary execution.
///
/// `stream[i][r]` is the operand entering PE row `r` for activation row `i`;
/// missing entries are empty. PE `(r, c)` handles row `i` at cycle
/// `i + r + c`; activations (with their select index) move one PE right per
/// cycle and partial sums one PE down. The accumulator latches the bottom
/// row one cycle later, giving `T + R + C - 1` cycles.
pub fn run_tile(array: &LoadedArray, stream: &[Vec<Operand>]) -> Result<TileRun> {
    let ArrayConfig { rows: r_n, cols: c_n, pe, .. } = array.config;
    let t_n = stream.len();
    if let Some(bad) = stream.iter().position(|row| row.len() > r_n) {
        return Err(Error::Shape(format!("stream row {bad} has {} operands for {r_n} PE rows", stream[bad].len())));
    }
    let lanes = pe.lanes() as u64;
    let mut outputs = Array2::<i32>::zeros((t_n, c_n));
    let mut written = vec![false; t_n * c_n];
    let mut act: Vec<ActReg> = vec![None; r_n * c_n];
    let mut psum: Vec<Option<(usize, i32)>> = vec![None; r_n * c_n];
    let mut next_act = act.clone();
    let mut next_psum = psum.clone();
    let (mut useful, mut issued) = (0u64, 0u64);
    let cycles = if t_n == 0 { 0 } else { t_n + r_n + c_n - 1 };

    for t in 0..cycles {
        // Accumulator latches last cycle's bottom-row sums.
        for c in 0..c_n {
            if let Some((i, v)) = psum[(r_n - 1) * c_n + c] {
                outputs[[i, c]] = v;
                written[i * c_n + c] = true;
            }
        }
        for r in 0..r_n {
            for c in 0..c_n {
                let idx = r * c_n + c;
                next_act[idx] = if c == 0 {
                    t.checked_sub(r).filter(|&i| i < t_n).map(|i| (i, stream[i].get(r)))
                } else {
                    act[idx - 1]
                };
                next_psum[idx] = match next_act[idx] {
                    None => None,
                    Some((i, operand)) => {
                        let above = if r == 0 {
                            0
                        } else {
                            let (j, v) = psum[idx - c_n].expect("partial sum missing from PE above");
                            debug_assert_eq!(i, j);
                            v
                        };
                        issued += lanes;
                        let out = match (array.weights[idx].as_deref(), operand) {
                            (Some(w), Some(op)) => {
                                useful += op.useful_lanes();
                                dot_step(above, &op.values, op.select, w)?
                            }
                            _ => above,
                        };
                        Some((i, out))
                    }
                };
            }
        }
        std::mem::swap(&mut act, &mut next_act);
        std::mem::swap(&mut psum, &mut next_psum);
    }
    debug_assert!(written.iter().all(|&w| w));
    Ok(TileRun {
        outputs,
        stats: TileStats {
            preload_cycles: array.config.preload_cycles(),
            compute_cycles: cycles as u64,
            useful_macs: useful,
            issued_slots: issued,
        },
    })
}
