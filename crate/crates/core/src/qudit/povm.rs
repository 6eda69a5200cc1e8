use serde::Serialize;

use super::mub::mub_family;
use super::{modp, PSD_TOL, VALIDITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, kron, ComplexMatrix, C64};

/// A measurement: positive effects summing to the identity.
#[derive(Debug, Clone, Serialize)]
pub struct Povm {
    pub dim: usize,
    pub effects: Vec<ComplexMatrix>,
}

impl Povm {
    /// Validates positivity and completeness.
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(Error::InvalidPovm("no effects".into()));
        };
        let dim = first.rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (k, e) in effects.iter().enumerate() {
            if !e.is_square() || e.rows() != dim {
                return Err(Error::InvalidPovm(format!(
                    "effect {k} has shape {}x{}, expected {dim}x{dim}",
                    e.rows(),
                    e.cols()
                )));
            }
            let dev = e.hermitian_deviation();
            if dev > VALIDITY_TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {k} not Hermitian (deviation {dev:.3e})"
                )));
            }
            let lo = eig_hermitian(e)?.min_eigenvalue();
            if lo < -PSD_TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {k} has eigenvalue {lo:.3e}"
                )));
            }
            sum.add_scaled(e, 1.0);
        }
        let dev = (&sum - &ComplexMatrix::identity(dim)).max_abs();
        if dev > VALIDITY_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {dev:.3e}"
            )));
        }
        Ok(Self {
            dim,
            effects: effects.into_iter().map(|e| e.hermitian_part()).collect(),
        })
    }

    pub(crate) fn from_parts(effects: Vec<ComplexMatrix>) -> Self {
        let dim = effects[0].rows();
        Self { dim, effects }
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    /// Outcome distribution on a state given as a matrix.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.effects.iter().map(|e| rho.inner_re(e)).collect()
    }
}

/// Rank-one projective measurement onto an orthonormal basis.
pub fn basis_measurement(vectors: &[Vec<C64>]) -> Result<Povm> {
    Povm::new(
        vectors
            .iter()
            .map(|v| ComplexMatrix::projector(v))
            .collect(),
    )
}

/// Product measurement on `d (x) d` for basis `z` of the MUB family:
/// the first system is measured in `{|e_{c1,z}>}`, the second in the
/// conjugate basis `{|e*_{c2,z}>}`, and the outcome is `c1 - c2 mod d`.
///
/// For `d = 2` this equals `(I + (-1)^c E_z) / 2` with
/// `E = (X(x)X, XZ(x)XZ, Z(x)Z)`.
pub fn product_measurement(d: usize, z: usize) -> Result<Povm> {
    let mubs = mub_family(d)?;
    if z > d {
        return Err(Error::OutOfRange {
            what: "measurement setting",
            value: z.to_string(),
        });
    }
    let first: Vec<ComplexMatrix> = (0..d)
        .map(|m| ComplexMatrix::projector(mubs.vector(m, z)))
        .collect();
    let second: Vec<ComplexMatrix> = (0..d)
        .map(|m| ComplexMatrix::projector(&mubs.conj_vector(m, z)))
        .collect();
    let mut effects = vec![ComplexMatrix::zeros(d * d, d * d); d];
    for c1 in 0..d {
        for c2 in 0..d {
            let c = modp(c1 as i64 - c2 as i64, d);
            effects[c].add_scaled(&kron(&first[c1], &second[c2])?, 1.0);
        }
    }
    Ok(Povm::from_parts(effects))
}

/// The qubit two-body observable whose eigenbasis pairs with setting `z`:
/// `X(x)X`, `XZ(x)XZ`, `Z(x)Z` for `z = 0, 1, 2`.
pub fn product_observable(z: usize) -> Result<ComplexMatrix> {
    let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let zm = ComplexMatrix::diag_real(&[1.0, -1.0]);
    let xz = &x * &zm;
    let single = match z {
        0 => x,
        1 => xz,
        2 => zm,
        _ => {
            return Err(Error::OutOfRange {
                what: "qubit setting",
                value: z.to_string(),
            })
        }
    };
    kron(&single, &single)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_zz_effects() {
        let p = product_measurement(2, 2).unwrap();
        assert!(p.effects[0].approx_eq(&ComplexMatrix::diag_real(&[1.0, 0.0, 0.0, 1.0]), 1e-15));
        assert!(p.effects[1].approx_eq(&ComplexMatrix::diag_real(&[0.0, 1.0, 1.0, 0.0]), 1e-15));
    }

    #[test]
    fn qubit_effects_match_observables() {
        let id = ComplexMatrix::identity(4);
        for z in 0..3 {
            let p = product_measurement(2, z).unwrap();
            let e = product_observable(z).unwrap();
            for c in 0..2 {
                let sign = if c == 0 { 1.0 } else { -1.0 };
                let mut expect = id.clone();
                expect.add_scaled(&e, sign);
                assert!(
                    p.effects[c].approx_eq(&expect.scale(0.5), 1e-14),
                    "z={z} c={c}"
                );
            }
        }
    }

    #[test]
    fn effects_are_rank_d_projectors() {
        for d in [2usize, 3, 5] {
            for z in 0..=d {
                let p = product_measurement(d, z).unwrap();
                Povm::new(p.effects.clone()).unwrap();
                for e in &p.effects {
                    assert!((e.trace().re - d as f64).abs() < 1e-12);
                    assert!((e * e).approx_eq(e, 1e-10));
                }
            }
        }
        assert!(product_measurement(3, 4).is_err());
    }

    #[test]
    fn rejects_incomplete() {
        let e = vec![
            ComplexMatrix::diag_real(&[1.0, 0.0]),
            ComplexMatrix::diag_real(&[0.0, 0.5]),
        ];
        assert!(Povm::new(e).is_err());
        let neg = vec![
            ComplexMatrix::diag_real(&[1.2, 0.0]),
            ComplexMatrix::diag_real(&[-0.2, 1.0]),
        ];
        assert!(Povm::new(neg).is_err());
    }
}
