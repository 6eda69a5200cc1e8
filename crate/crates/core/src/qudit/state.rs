use serde::Serialize;

use super::{PSD_TOL, VALIDITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, partial_trace, ComplexMatrix, Subsystem, C64};

/// A density operator on `dim_a (x) dim_b` (`dim_b = 1` for a single system).
#[derive(Debug, Clone, Serialize)]
pub struct DensityMatrix {
    pub dim_a: usize,
    pub dim_b: usize,
    pub mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(mat: ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<Self> {
        if !mat.is_square() || mat.rows() != dim_a * dim_b {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not an operator on {dim_a}x{dim_b}",
                mat.rows(),
                mat.cols()
            )));
        }
        let dev = mat.hermitian_deviation();
        if dev > VALIDITY_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {dev:.3e})"
            )));
        }
        let tr = mat.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > VALIDITY_TOL {
            return Err(Error::InvalidState(format!("trace {:.12} != 1", tr.re)));
        }
        let lo = eig_hermitian(&mat)?.min_eigenvalue();
        if lo < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:.3e}")));
        }
        Ok(Self {
            dim_a,
            dim_b,
            mat: mat.hermitian_part(),
        })
    }

    pub fn single(mat: ComplexMatrix) -> Result<Self> {
        let n = mat.rows();
        Self::new(mat, n, 1)
    }

    /// Pure state `|psi><psi|` for a unit vector on `dim_a (x) dim_b`.
    pub fn pure(psi: &[C64], dim_a: usize, dim_b: usize) -> Result<Self> {
        let n = crate::linalg::norm(psi);
        if (n - 1.0).abs() > VALIDITY_TOL {
            return Err(Error::InvalidState(format!("state vector has norm {n}")));
        }
        Self::new(ComplexMatrix::projector(psi), dim_a, dim_b)
    }

    /// Skips validation; for operators already known to be states.
    pub(crate) fn from_parts(mat: ComplexMatrix, dim_a: usize, dim_b: usize) -> Self {
        Self { dim_a, dim_b, mat }
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn maximally_mixed(dim_a: usize, dim_b: usize) -> Self {
        let n = dim_a * dim_b;
        Self::from_parts(
            ComplexMatrix::identity(n).scale(1.0 / n as f64),
            dim_a,
            dim_b,
        )
    }

    /// Reduced state of one factor.
    pub fn marginal(&self, keep: Subsystem) -> Self {
        let m =
            partial_trace(&self.mat, self.dim_a, self.dim_b, keep).expect("consistent dimensions");
        let n = m.rows();
        Self::from_parts(m, n, 1)
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if (self.dim_a, self.dim_b) != (other.dim_a, other.dim_b) {
            return Err(Error::DimensionMismatch(
                "mixing states of different shapes".into(),
            ));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfRange {
                what: "mixing weight",
                value: w.to_string(),
            });
        }
        let mut m = self.mat.scale(w);
        m.add_scaled(&other.mat, 1.0 - w);
        Ok(Self::from_parts(m, self.dim_a, self.dim_b))
    }

    /// `self (x) other` as a bipartite state with dims `(self.dim(), other.dim())`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let m = crate::linalg::kron(&self.mat, &other.mat)?;
        Ok(Self::from_parts(m, self.dim(), other.dim()))
    }
}

/// `(1/sqrt d) sum_i |ii>`
pub fn phi_plus_vector(d: usize) -> Vec<C64> {
    let a = 1.0 / (d as f64).sqrt();
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        v[i * d + i] = C64::new(a, 0.0);
    }
    v
}

pub fn max_entangled(d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::OutOfRange {
            what: "dimension",
            value: d.to_string(),
        });
    }
    Ok(DensityMatrix::from_parts(
        ComplexMatrix::projector(&phi_plus_vector(d)),
        d,
        d,
    ))
}

/// `v phi+ + (1 - v) I / d^2`
pub fn isotropic(d: usize, v: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange {
            what: "visibility",
            value: v.to_string(),
        });
    }
    let phi = max_entangled(d)?;
    let noise = DensityMatrix::maximally_mixed(d, d);
    phi.mix(&noise, v)
}

/// `cos t |00> + sin t |11>` for `t` in `[0, pi/4]`.
pub fn pure_schmidt(theta: f64) -> Result<DensityMatrix> {
    if !(0.0..=std::f64::consts::FRAC_PI_4 + 1e-15).contains(&theta) {
        return Err(Error::OutOfRange {
            what: "Schmidt angle",
            value: theta.to_string(),
        });
    }
    let z = C64::new(0.0, 0.0);
    let psi = [C64::new(theta.cos(), 0.0), z, z, C64::new(theta.sin(), 0.0)];
    Ok(DensityMatrix::from_parts(
        ComplexMatrix::projector(&psi),
        2,
        2,
    ))
}

/// `<phi+_d| rho |phi+_d>`
pub fn fidelity_phi_plus(rho: &DensityMatrix) -> Result<f64> {
    let d = rho.dim_a;
    if rho.dim_b != d {
        return Err(Error::DimensionMismatch(format!(
            "phi+ fidelity needs a d x d state, got {}x{}",
            rho.dim_a, rho.dim_b
        )));
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += rho.mat[(i * d + i, j * d + j)];
        }
    }
    Ok(acc.re / d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_plus_properties() {
        for d in [2usize, 3, 5] {
            let phi = max_entangled(d).unwrap();
            assert!((phi.mat.trace().re - 1.0).abs() < 1e-15);
            let marg = phi.marginal(Subsystem::First);
            assert!(marg
                .mat
                .approx_eq(&ComplexMatrix::identity(d).scale(1.0 / d as f64), 1e-15));
            assert!((fidelity_phi_plus(&phi).unwrap() - 1.0).abs() < 1e-14);
            DensityMatrix::new(phi.mat.clone(), d, d).unwrap();
        }
        let phi2 = max_entangled(2).unwrap();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((phi2.mat[(i, j)].re - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn isotropic_limits_and_spectrum() {
        assert!(isotropic(3, 1.0)
            .unwrap()
            .mat
            .approx_eq(&max_entangled(3).unwrap().mat, 1e-15));
        assert!(isotropic(3, 0.0)
            .unwrap()
            .mat
            .approx_eq(&ComplexMatrix::identity(9).scale(1.0 / 9.0), 1e-15));
        let e = eig_hermitian(&isotropic(2, 0.5).unwrap().mat).unwrap();
        let expect = [0.125, 0.125, 0.125, 0.625];
        for (a, b) in e.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        for d in [2usize, 3, 5] {
            for v in [0.0, 0.3, 0.77, 1.0] {
                let f = fidelity_phi_plus(&isotropic(d, v).unwrap()).unwrap();
                assert!((f - (v + (1.0 - v) / (d * d) as f64)).abs() < 1e-12);
            }
        }
        assert!(isotropic(2, 1.5).is_err());
    }

    #[test]
    fn schmidt_family() {
        let s = pure_schmidt(std::f64::consts::FRAC_PI_4).unwrap();
        assert!(s.mat.approx_eq(&max_entangled(2).unwrap().mat, 1e-15));
        let s0 = pure_schmidt(0.0).unwrap();
        assert!((s0.mat[(0, 0)].re - 1.0).abs() < 1e-15);
        let t = std::f64::consts::PI / 8.0;
        let f = fidelity_phi_plus(&pure_schmidt(t).unwrap()).unwrap();
        assert!((f - (1.0 + 0.5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(pure_schmidt(1.0).is_err());
    }

    #[test]
    fn validation() {
        let bad = ComplexMatrix::diag_real(&[1.5, -0.5]);
        assert!(DensityMatrix::single(bad).is_err());
        let bad_trace = ComplexMatrix::diag_real(&[0.5, 0.4]);
        assert!(DensityMatrix::single(bad_trace).is_err());
        assert!(fidelity_phi_plus(&DensityMatrix::maximally_mixed(2, 3)).is_err());
    }
}
