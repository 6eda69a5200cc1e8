//! Dense complex linear algebra: matrices, tensor products, partial traces
//! and Hermitian eigendecomposition.

mod eig;
mod matrix;

pub use eig::{eig_hermitian, fix_phase, sqrt_psd, HermitianEig, HERMITIAN_TOL, MAX_SWEEPS};
pub use matrix::{
    c, contract_first, contract_second, inner, kron, kron_vec, kron_with_limit, norm,
    partial_trace, ComplexMatrix, Subsystem, DEFAULT_KRON_LIMIT,
};
pub use num_complex::Complex64 as C64;

/// Reconstruction tolerance for eigendecompositions (relative Frobenius).
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Orthonormality tolerance for eigenvector sets.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Trace preservation tolerance for partial traces.
pub const TRACE_TOL: f64 = 1e-12;
