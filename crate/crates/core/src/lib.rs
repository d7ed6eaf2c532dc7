//! Sharp constants and optimizers of the critical discrete
//! Hardy-Littlewood-Sobolev inequality on integer grid boxes.
//!
//! The best constant `λ_N` of
//!
//! ```text
//! Σ_{r≠s} a_r b_s / |r-s|^n  <=  λ_N ‖a‖₂ ‖b‖₂
//! ```
//!
//! over a box of `Z^n` is the Perron eigenvalue of the zero-diagonal kernel
//! matrix `A(r, s) = |r-s|^(-n)`, and the unique positive unit optimizer is
//! its Perron vector. This crate computes both, and checks the structural
//! properties of the optimizer (symmetry, monotone decay, uniqueness) and
//! the logarithmic growth of `λ_N` numerically.

pub mod bounds;
pub mod convolution;
pub mod eig;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod maxprinciple;
pub mod optimizer;
pub mod sum;
pub mod verify;

pub use bounds::{BoundsReport, SweepRow, SweepTable};
pub use eig::{EigenResult, PowerOptions, SpectralReport};
pub use error::{Error, Result};
pub use grid::{Convention, GridSpec, Isometry, LatticePoint};
pub use kernel::{KernelOperator, Mode};
pub use maxprinciple::{DecayReport, DecaySystem, FixedPointSystem};
pub use optimizer::{OptimizerResult, SolverConfig};
pub use verify::{CertificationReport, SymmetryReport};
