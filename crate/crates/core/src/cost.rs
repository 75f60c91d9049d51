//! Analytical side models: recursive B-spline evaluator cycles, tabulation
//! speedup at equal area, energy from per-PE power, array area.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bspline_unit::UNIT_LATENCY_CYCLES;
use crate::error::{Error, Result};
use crate::sim::{ArrayConfig, PeKind, SimStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaAnchor {
    pub rows: usize,
    pub cols: usize,
    pub area_mm2: f64,
}

/// Hardware constants. Every number is an input, overridable from a TOML
/// file with the same field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerAreaTable {
    /// Per-PE power in mW keyed by `"N:M"` (`"1:1"` is the scalar PE).
    pub power_mw: BTreeMap<String, f64>,
    pub delay_ns: BTreeMap<String, f64>,
    pub scalar_anchor: AreaAnchor,
    /// Vector-PE array anchor; every N:M kind uses its per-PE area.
    pub vector_anchor: AreaAnchor,
    pub bspline_unit_area_um2: f64,
    pub fma_area_mm2: f64,
    pub fma_latency_cycles: u64,
}

impl Default for PowerAreaTable {
    fn default() -> Self {
        let kinds = ["1:1", "1:2", "2:4", "2:6", "4:6", "4:8"];
        let power = [0.35, 0.40, 0.62, 0.77, 0.98, 1.12];
        let delay = [1.02, 1.05, 1.15, 1.19, 1.28, 1.31];
        Self {
            power_mw: kinds.iter().map(|k| k.to_string()).zip(power).collect(),
            delay_ns: kinds.iter().map(|k| k.to_string()).zip(delay).collect(),
            scalar_anchor: AreaAnchor { rows: 32, cols: 32, area_mm2: 0.50 },
            vector_anchor: AreaAnchor { rows: 16, cols: 16, area_mm2: 0.47 },
            bspline_unit_area_um2: 450.0,
            fma_area_mm2: 0.0081,
            fma_latency_cycles: 4,
        }
    }
}

impl PowerAreaTable {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let t: Self = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.power_mw.values().chain(self.delay_ns.values()).all(|&v| v > 0.0)
            && self.scalar_anchor.area_mm2 > 0.0
            && self.vector_anchor.area_mm2 > 0.0
            && self.bspline_unit_area_um2 > 0.0
            && self.fma_area_mm2 > 0.0
            && self.scalar_anchor.rows * self.scalar_anchor.cols > 0
            && self.vector_anchor.rows * self.vector_anchor.cols > 0;
        if !positive {
            return Err(Error::Config("hardware constants must be positive".into()));
        }
        if !self.power_mw.contains_key("1:1") {
            return Err(Error::Config("power table lacks the scalar 1:1 entry".into()));
        }
        Ok(())
    }

    pub fn power(&self, pe: PeKind) -> Result<f64> {
        let key = pe.ratio_label();
        self.power_mw.get(&key).copied().ok_or(Error::UnknownPeKind(key))
    }

    pub fn delay(&self, pe: PeKind) -> Result<f64> {
        let key = pe.ratio_label();
        self.delay_ns.get(&key).copied().ok_or(Error::UnknownPeKind(key))
    }

    pub fn pe_area_mm2(&self, pe: PeKind) -> f64 {
        let a = match pe {
            PeKind::Scalar => &self.scalar_anchor,
            PeKind::VectorNM { .. } => &self.vector_anchor,
        };
        a.area_mm2 / (a.rows * a.cols) as f64
    }

    /// Array area, linear in PE count.
    pub fn area_mm2(&self, config: &ArrayConfig) -> f64 {
        self.pe_area_mm2(config.pe) * config.pe_count() as f64
    }
}

/// Cycles of a pipelined recursive evaluator for `m` inputs:
/// `(P + 1) * latency + G + P - 1 + m`.
pub fn arkane_cycles(p: u64, g: u64, m: u64, pe_latency: u64) -> u64 {
    (p + 1) * pe_latency + g + p - 1 + m
}

/// Tabulated units that fit in the area of `P + 1` FMAs.
pub fn units_at_parity(p: u64, table: &PowerAreaTable) -> u64 {
    let fma_um2 = table.fma_area_mm2 * 1e6;
    ((p + 1) as f64 * fma_um2 / table.bspline_unit_area_um2 + 1e-9).floor() as u64
}

/// Cycles for `m` inputs spread over `units` single-cycle tabulated units.
pub fn tabulation_cycles(m: u64, units: u64) -> u64 {
    m.div_ceil(units.max(1)) * UNIT_LATENCY_CYCLES
}

pub fn tabulation_speedup(p: u64, g: u64, m: u64, table: &PowerAreaTable) -> f64 {
    let units = units_at_parity(p, table);
    arkane_cycles(p, g, m, table.fma_latency_cycles) as f64 / tabulation_cycles(m, units) as f64
}

/// Limit of [`tabulation_speedup`] as `m` grows: the unit count.
pub fn asymptotic_speedup(p: u64, table: &PowerAreaTable) -> f64 {
    units_at_parity(p, table) as f64 * UNIT_LATENCY_CYCLES as f64
}

/// `power(pe) * total_cycles`, in mW x cycles.
pub fn energy(stats: &SimStats, pe: PeKind, table: &PowerAreaTable) -> Result<f64> {
    Ok(table.power(pe)? * stats.total_cycles as f64)
}

/// Energy of a run relative to the scalar baseline on the same workload.
pub fn energy_estimate(stats: &SimStats, pe: PeKind, baseline: &SimStats, table: &PowerAreaTable) -> Result<f64> {
    let base = energy(baseline, PeKind::Scalar, table)?;
    if base == 0.0 {
        return Err(Error::Config("baseline run has zero cycles".into()));
    }
    Ok(energy(stats, pe, table)? / base)
}

/// Per-PE normalized energy when one N:M PE replaces `M` scalar cycles.
pub fn per_pe_normalized_energy(pe: PeKind, table: &PowerAreaTable) -> Result<f64> {
    let ratio = table.power(pe)? / table.power(PeKind::Scalar)?;
    Ok(ratio / pe.words_per_pe() as f64)
}

/// Matched array pairs scaled down from the anchors: with the default
/// anchors, scalar `2s x 2s` against vector `s x s` for `s` = 1, 2, 4, 8, 16.
pub fn area_parity_pairs(table: &PowerAreaTable) -> Result<Vec<(ArrayConfig, ArrayConfig)>> {
    let (sa, va) = (&table.scalar_anchor, &table.vector_anchor);
    if sa.rows % va.rows != 0 || sa.cols % va.cols != 0 {
        return Err(Error::Config("scalar anchor must be a multiple of the vector anchor".into()));
    }
    let (fr, fc) = (sa.rows / va.rows, sa.cols / va.cols);
    let mut pairs = Vec::new();
    let mut s = 1;
    while s <= va.rows.min(va.cols) {
        pairs.push((
            ArrayConfig::new(fr * s, fc * s, PeKind::Scalar)?,
            ArrayConfig::new(s, s, PeKind::VectorNM { n: 4, m: 8 })?,
        ));
        s *= 2;
    }
    Ok(pairs)
}
