//! Cycle-level model of a weight-stationary systolic array with scalar or
//! N:M vector PEs.

mod array;
mod engine;
mod pe;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use array::{preload_weights, run_tile, LoadedArray, TileRun};
pub use engine::{
    op_stats_closed_form, simulate_layer_op, simulate_network, simulate_workload, tile_stats_closed_form,
    OpRun, SimMode, WorkloadRun,
};
pub use pe::{nm_pe_step, scalar_pe_step, Operand};

pub const ACCUMULATOR_BITS: u32 = 32;

/// PE flavour: scalar MAC (1:1) or N:M vector PE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PeKind {
    Scalar,
    VectorNM { n: usize, m: usize },
}

impl PeKind {
    /// MAC lanes per PE.
    pub fn lanes(&self) -> usize {
        match self {
            PeKind::Scalar => 1,
            PeKind::VectorNM { n, .. } => *n,
        }
    }

    /// Weights resident per PE.
    pub fn words_per_pe(&self) -> usize {
        match self {
            PeKind::Scalar => 1,
            PeKind::VectorNM { m, .. } => *m,
        }
    }

    /// Vector PE matched to a `(G, P)` grid: `N = P + 1`, `M = G + P`.
    pub fn matched(g: usize, p: usize) -> Self {
        PeKind::VectorNM { n: p + 1, m: g + p }
    }

    /// `"1:1"` or `"N:M"`.
    pub fn ratio_label(&self) -> String {
        match self {
            PeKind::Scalar => "1:1".into(),
            PeKind::VectorNM { n, m } => format!("{n}:{m}"),
        }
    }

    fn validate(&self) -> Result<()> {
        if let PeKind::VectorNM { n, m } = *self {
            if n == 0 || n > m {
                return Err(Error::Config(format!("VectorNM needs 1 <= N <= M, got N={n} M={m}")));
            }
            if n > 4 {
                return Err(Error::Config(format!("VectorNM supports at most 4 lanes, got N={n}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for PeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeKind::Scalar => write!(f, "scalar"),
            PeKind::VectorNM { n, m } => write!(f, "nm:{n}:{m}"),
        }
    }
}

impl FromStr for PeKind {
    type Err = Error;

    /// Accepts `scalar`, `1:1`, `nm:N:M` and `N:M`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "scalar" || t == "1:1" {
            return Ok(PeKind::Scalar);
        }
        let body = t.strip_prefix("nm:").unwrap_or(&t);
        let mut parts = body.split(':');
        let parsed = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(m), None) => n.parse().ok().zip(m.parse().ok()),
            _ => None,
        };
        let (n, m) = parsed.ok_or_else(|| Error::UnknownPeKind(s.to_string()))?;
        let kind = PeKind::VectorNM { n, m };
        kind.validate()?;
        Ok(kind)
    }
}

/// Cycles spent loading one weight tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LoadModel {
    /// One PE row per cycle: `R` cycles.
    #[default]
    RowPerCycle,
    Fixed(u64),
    /// Each column bus carries `words` weights per cycle: `ceil(R * words_per_pe / words)`.
    Bus { words: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    pub pe: PeKind,
    pub load: LoadModel,
}

impl ArrayConfig {
    pub fn new(rows: usize, cols: usize, pe: PeKind) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!("array must be at least 1x1, got {rows}x{cols}")));
        }
        pe.validate()?;
        Ok(Self { rows, cols, pe, load: LoadModel::default() })
    }

    pub fn with_load(mut self, load: LoadModel) -> Result<Self> {
        if let LoadModel::Bus { words: 0 } = load {
            return Err(Error::Config("bus width must be positive".into()));
        }
        self.load = load;
        Ok(self)
    }

    pub fn pe_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn preload_cycles(&self) -> u64 {
        match self.load {
            LoadModel::RowPerCycle => self.rows as u64,
            LoadModel::Fixed(n) => n,
            LoadModel::Bus { words } => (self.rows as u64 * self.pe.words_per_pe() as u64).div_ceil(words),
        }
    }
}

/// Counters for one tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TileStats {
    pub preload_cycles: u64,
    pub compute_cycles: u64,
    pub useful_macs: u64,
    pub issued_slots: u64,
}

/// Aggregate counters of a run.
///
/// Issued slots are `lanes` per PE per streamed row; fill and drain
/// bubbles and preload are not slots.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimStats {
    pub total_cycles: u64,
    pub preload_cycles: u64,
    pub compute_cycles: u64,
    pub useful_macs: u64,
    pub issued_slots: u64,
    pub per_tile: Vec<TileStats>,
}

impl SimStats {
    pub fn utilization(&self) -> f64 {
        if self.issued_slots == 0 {
            0.0
        } else {
            self.useful_macs as f64 / self.issued_slots as f64
        }
    }

    pub fn push_tile(&mut self, t: TileStats) {
        self.add_counts(&t);
        self.per_tile.push(t);
    }

    fn add_counts(&mut self, t: &TileStats) {
        self.preload_cycles += t.preload_cycles;
        self.compute_cycles += t.compute_cycles;
        self.total_cycles += t.preload_cycles + t.compute_cycles;
        self.useful_macs += t.useful_macs;
        self.issued_slots += t.issued_slots;
    }

    /// Adds counters; tile lists are concatenated.
    pub fn merge(&mut self, other: &SimStats) {
        self.total_cycles += other.total_cycles;
        self.preload_cycles += other.preload_cycles;
        self.compute_cycles += other.compute_cycles;
        self.useful_macs += other.useful_macs;
        self.issued_slots += other.issued_slots;
        self.per_tile.extend_from_slice(&other.per_tile);
    }

    /// Counters only, no tile list.
    pub fn summary(&self) -> SimStats {
        SimStats { per_tile: Vec::new(), ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pe_kind_parsing() {
        assert_eq!("scalar".parse::<PeKind>().unwrap(), PeKind::Scalar);
        assert_eq!("nm:4:13".parse::<PeKind>().unwrap(), PeKind::VectorNM { n: 4, m: 13 });
        assert_eq!("2:6".parse::<PeKind>().unwrap(), PeKind::VectorNM { n: 2, m: 6 });
        assert!("nm:5:4".parse::<PeKind>().is_err());
        assert!("systolic".parse::<PeKind>().is_err());
        assert_eq!(PeKind::VectorNM { n: 4, m: 8 }.to_string(), "nm:4:8");
    }

    #[test]
    fn preload_models() {
        let c = ArrayConfig::new(16, 8, PeKind::VectorNM { n: 4, m: 8 }).unwrap();
        assert_eq!(c.preload_cycles(), 16);
        assert_eq!(c.with_load(LoadModel::Fixed(0)).unwrap().preload_cycles(), 0);
        assert_eq!(c.with_load(LoadModel::Bus { words: 3 }).unwrap().preload_cycles(), 43);
        assert!(c.with_load(LoadModel::Bus { words: 0 }).is_err());
        assert!(ArrayConfig::new(0, 4, PeKind::Scalar).is_err());
    }
}
