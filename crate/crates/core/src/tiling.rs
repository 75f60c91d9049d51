use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{ArrayConfig, PeKind};
use crate::spline::UniformGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpKind {
    Kan,
    Dense,
}

/// Where an op comes from within its layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OpRole {
    #[default]
    Main,
    /// ReLU branch of a KAN layer, accumulated into the spline outputs.
    Bias,
}

/// One GEMM to schedule: `(rows, K_eff) x (K_eff, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GemmOp {
    pub kind: OpKind,
    pub role: OpRole,
    pub rows: usize,
    pub k_features: usize,
    pub n_outputs: usize,
    pub grid: Option<UniformGrid>,
}

impl GemmOp {
    pub fn kan(rows: usize, k_features: usize, n_outputs: usize, grid: UniformGrid) -> Result<Self> {
        Self::checked(OpKind::Kan, rows, k_features, n_outputs, Some(grid))
    }

    pub fn dense(rows: usize, k_features: usize, n_outputs: usize) -> Result<Self> {
        Self::checked(OpKind::Dense, rows, k_features, n_outputs, None)
    }

    fn checked(kind: OpKind, rows: usize, k: usize, n: usize, grid: Option<UniformGrid>) -> Result<Self> {
        if rows == 0 || k == 0 || n == 0 {
            return Err(Error::Shape(format!("GEMM dims must be positive, got rows={rows} K={k} N={n}")));
        }
        Ok(Self { kind, role: OpRole::Main, rows, k_features: k, n_outputs: n, grid })
    }

    pub fn with_role(mut self, role: OpRole) -> Self {
        self.role = role;
        self
    }

    /// Basis functions per feature, 1 for dense ops.
    pub fn band(&self) -> usize {
        self.grid.map_or(1, |g| g.num_basis())
    }

    /// Weight-matrix rows: `K (G+P)` for KAN, `K` for dense.
    pub fn effective_weight_rows(&self) -> usize {
        self.k_features * self.band()
    }
}

/// One weight tile resident in the array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub row_tile: usize,
    pub col_tile: usize,
    /// Weight-matrix rows held by the tile.
    pub weight_rows: Range<usize>,
    /// Output columns held by the tile.
    pub cols: Range<usize>,
    /// PE rows with a mapping; the rest are invalid.
    pub pe_rows: usize,
}

impl Tile {
    pub fn pe_cols(&self) -> usize {
        self.cols.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileSchedule {
    pub op: GemmOp,
    pub config: ArrayConfig,
    pub tiles: Vec<Tile>,
    /// Activation rows streamed through each tile.
    pub stream_rows: usize,
    pub row_tiles: usize,
    pub col_tiles: usize,
}

impl TileSchedule {
    /// Weight rows held by PE row `r` of `tile`.
    pub fn pe_weight_rows(&self, tile: &Tile, r: usize) -> Range<usize> {
        debug_assert!(r < tile.pe_rows);
        let start = tile.weight_rows.start;
        match (self.config.pe, self.op.kind) {
            (PeKind::Scalar, _) => start + r..start + r + 1,
            (PeKind::VectorNM { m, .. }, OpKind::Kan) => start + r * m..start + (r + 1) * m,
            (PeKind::VectorNM { n, .. }, OpKind::Dense) => {
                start + r * n..(start + (r + 1) * n).min(tile.weight_rows.end)
            }
        }
    }

    /// Mapped PE fraction of a tile.
    pub fn tile_efficiency(&self, tile: &Tile) -> f64 {
        (tile.pe_rows * tile.pe_cols()) as f64 / (self.config.rows * self.config.cols) as f64
    }

    pub fn predicted_cycles(&self) -> u64 {
        predict_cycles(self, &self.config, self.stream_rows)
    }

    /// Structured text listing of the schedule.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "schedule kind={:?} role={:?} rows={} K={} N={} band={} array={}x{} pe={}",
            self.op.kind,
            self.op.role,
            self.op.rows,
            self.op.k_features,
            self.op.n_outputs,
            self.op.band(),
            self.config.rows,
            self.config.cols,
            self.config.pe
        );
        let _ = writeln!(s, "tiles {} ({} row x {} col)", self.tiles.len(), self.row_tiles, self.col_tiles);
        for (i, t) in self.tiles.iter().enumerate() {
            let _ = writeln!(
                s,
                "tile {i} rt={} ct={} wrows={}..{} cols={}..{} pe_rows={} eff={:.4}",
                t.row_tile,
                t.col_tile,
                t.weight_rows.start,
                t.weight_rows.end,
                t.cols.start,
                t.cols.end,
                t.pe_rows,
                self.tile_efficiency(t)
            );
        }
        let _ = writeln!(s, "predicted_cycles {}", self.predicted_cycles());
        s
    }
}

/// Number of weight rows a PE row consumes and the row-tile height in weight rows.
fn row_granule(op: &GemmOp, config: &ArrayConfig) -> Result<usize> {
    match (config.pe, op.kind) {
        (PeKind::Scalar, _) => Ok(1),
        (PeKind::VectorNM { n, m }, OpKind::Kan) => {
            let grid = op.grid.ok_or_else(|| Error::Config("KAN op without a grid".into()))?;
            let (band, p) = (grid.num_basis(), grid.degree());
            if m != band || n != p + 1 {
                return Err(Error::Config(format!(
                    "VectorNM({n},{m}) cannot run a KAN op with G={} P={p}: needs N=P+1={} and M=G+P={band}",
                    grid.grid_size(),
                    p + 1
                )));
            }
            Ok(m)
        }
        (PeKind::VectorNM { n, .. }, OpKind::Dense) => Ok(n),
    }
}

/// Split `op` into weight tiles; output-column tiles outer, row tiles inner.
pub fn tile_gemm(op: &GemmOp, config: &ArrayConfig) -> Result<TileSchedule> {
    let granule = row_granule(op, config)?;
    let k_eff = op.effective_weight_rows();
    let tile_height = config.rows * granule;
    let (row_tiles, col_tiles) = tile_counts(op, config)?;
    let mut tiles = Vec::with_capacity(row_tiles * col_tiles);
    for ct in 0..col_tiles {
        let cols = ct * config.cols..((ct + 1) * config.cols).min(op.n_outputs);
        for rt in 0..row_tiles {
            let weight_rows = rt * tile_height..((rt + 1) * tile_height).min(k_eff);
            let pe_rows = weight_rows.len().div_ceil(granule);
            tiles.push(Tile { row_tile: rt, col_tile: ct, weight_rows, cols: cols.clone(), pe_rows });
        }
    }
    Ok(TileSchedule { op: *op, config: *config, tiles, stream_rows: op.rows, row_tiles, col_tiles })
}

/// `(row tiles, column tiles)` without materializing the schedule.
pub fn tile_counts(op: &GemmOp, config: &ArrayConfig) -> Result<(usize, usize)> {
    let granule = row_granule(op, config)?;
    Ok((op.effective_weight_rows().div_ceil(config.rows * granule), op.n_outputs.div_ceil(config.cols)))
}

/// Per-tile compute cycles for `t` streamed rows: skewed fill, `t` rows, drain
/// and one accumulator write.
pub fn tile_compute_cycles(config: &ArrayConfig, t: usize) -> u64 {
    (t + config.rows + config.cols - 1) as u64
}

/// Closed-form total cycles: `sum over tiles of (preload + T + R + C - 1)`.
pub fn predict_cycles(schedule: &TileSchedule, config: &ArrayConfig, t: usize) -> u64 {
    schedule.tiles.len() as u64 * (config.preload_cycles() + tile_compute_cycles(config, t))
}
