use crate::bspline_unit::{Lanes, SparseActivationBlock};
use crate::error::{Error, Result};

/// Activation operand entering a PE: `values.len()` lanes, a multiplexer
/// select and a bitmask of lanes that carry structurally non-zero work.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Operand {
    pub values: Lanes,
    pub select: usize,
    pub useful_mask: u8,
}

impl Operand {
    pub fn scalar(value: u8, useful: bool) -> Self {
        let mut values = Lanes::new();
        values.push(value);
        Self { values, select: 0, useful_mask: useful as u8 }
    }

    pub fn from_block(block: &SparseActivationBlock) -> Self {
        let mask = ((1u16 << block.values.len()) - 1) as u8;
        Self { values: block.values.clone(), select: block.select, useful_mask: mask }
    }

    pub fn useful_lanes(&self) -> u64 {
        self.useful_mask.count_ones() as u64
    }
}

fn overflow() -> Error {
    Error::AccumulatorOverflow("PE partial sum".into())
}

/// `psum + activation * weight` in checked int32.
pub fn scalar_pe_step(psum_in: i32, activation: u8, weight: i8) -> Result<i32> {
    psum_in.checked_add(activation as i32 * weight as i32).ok_or_else(overflow)
}

/// `psum + sum_j weights[select + j] * values[j]`.
///
/// # Panics
/// If the selected window runs past the resident weights.
pub fn nm_pe_step(psum_in: i32, block: &SparseActivationBlock, weights: &[i8]) -> Result<i32> {
    dot_step(psum_in, &block.values, block.select, weights)
}

pub(crate) fn dot_step(psum_in: i32, values: &[u8], select: usize, weights: &[i8]) -> Result<i32> {
    assert!(
        select + values.len() <= weights.len(),
        "select {select} with {} lanes exceeds {} resident weights",
        values.len(),
        weights.len()
    );
    let mut acc = psum_in;
    for (v, w) in values.iter().zip(&weights[select..]) {
        acc = acc.checked_add(*v as i32 * *w as i32).ok_or_else(overflow)?;
    }
    Ok(acc)
}
