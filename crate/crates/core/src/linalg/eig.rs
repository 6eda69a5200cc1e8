//! Hermitian eigendecomposition (Householder tridiagonalization followed by
//! implicit QR, via nalgebra), with ascending eigenvalues and phase-fixed
//! eigenvectors.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Maximum entrywise `|a - a^dagger|` accepted before symmetrization.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// QR sweeps allowed per row before giving up.
pub const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Non-decreasing.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Largest modulus eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.max_eigenvalue().abs().max(self.min_eigenvalue().abs())
    }

    /// `sum_k f(lambda_k) v_k v_k^dagger`
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    if weights[k] != 0.0 {
                        acc += v[(i, k)] * v[(j, k)].conj() * weights[k];
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
            out[(i, i)] = C64::new(out[(i, i)].re, 0.0);
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|l| l)
    }
}

/// Eigendecomposition of a Hermitian matrix. Deviations up to
/// [`HERMITIAN_TOL`] are symmetrized away; larger ones are an error.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let dev = a.hermitian_deviation();
    let scale = a.max_abs().max(1.0);
    if !(dev <= HERMITIAN_TOL * scale) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    decompose(a.hermitian_part())
}

fn decompose(a: ComplexMatrix) -> Result<HermitianEig> {
    let n = a.rows();
    let m = DMatrix::from_row_slice(n, n, a.as_slice());
    let Some(eig) = SymmetricEigen::try_new(m, f64::EPSILON, MAX_SWEEPS * n) else {
        return Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS * n,
        });
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut vk: Vec<C64> = eig.eigenvectors.column(k).iter().copied().collect();
        fix_phase(&mut vk);
        for i in 0..n {
            vecs[(i, col)] = vk[i];
        }
    }
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors: vecs,
    })
}

/// Rotates a vector's global phase so its first non-negligible amplitude is
/// real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let nrm = super::matrix::norm(v);
    if let Some(first) = v
        .iter()
        .find(|z| z.norm() > 1e-10 * nrm.max(1e-300))
        .copied()
    {
        let ph = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= ph;
        }
    }
}

/// Hermitian square root of a positive semidefinite matrix; negative
/// round-off eigenvalues are clipped to zero.
pub fn sqrt_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(a)?.apply_fn(|l| l.max(0.0).sqrt()))
}
