//! Guessing-moment analysis of secrets split into storage hints.

pub mod check;
pub mod distortion;
pub mod exponents;
pub mod guessing;
pub mod mds;
pub mod prob;
pub mod report;
pub mod scheme;
pub mod suites;
pub mod task;
