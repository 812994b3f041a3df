//! Reed-Solomon codes over GF(2^ell) and hints spread over `delta` disks.

pub mod bounds;
pub mod delta;
pub mod field;
pub mod matrix;

use thiserror::Error;

pub use field::Field;
pub use matrix::{combinations, mds_check, rs_generator, GenMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdsError {
    #[error("GF(2^{0}) is not supported; use 1..=16 bits")]
    FieldSize(u32),
    #[error("no {k} x {n} MDS generator over a field of size {q}")]
    Shape { k: usize, n: usize, q: usize },
}
