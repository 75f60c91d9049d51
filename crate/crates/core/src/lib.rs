//! Bit-accurate functional model and cycle-level simulator of
//! Kolmogorov-Arnold network inference on weight-stationary systolic arrays
//! with scalar or N:M vector processing elements.

pub mod bspline_unit;
pub mod cli;
pub mod cost;
pub mod error;
pub mod kan_gemm;
pub mod report;
pub mod sim;
pub mod spline;
pub mod tiling;
pub mod verify;
pub mod workloads;

pub use error::{Error, Result};
