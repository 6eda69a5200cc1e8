//! Seeded random sampling of states, channels and measurements.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DensityMatrix, KrausChannel, Povm};
use crate::error::Result;
use crate::linalg::{inner, norm, ComplexMatrix, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector (normalized complex Gaussian).
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

pub fn pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::from_parts(ComplexMatrix::projector(&haar_vector(d, rng)), d, 1)
}

/// Random mixed state `G G^dagger / tr(G G^dagger)` with a `dim x rank`
/// Ginibre matrix `G`.
pub fn mixed_state<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    rank: usize,
    rng: &mut R,
) -> DensityMatrix {
    let n = dim_a * dim_b;
    let g = ComplexMatrix::from_fn(n, rank.max(1), |_, _| gaussian(rng));
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    DensityMatrix::from_parts(w.scale(1.0 / tr).hermitian_part(), dim_a, dim_b)
}

/// Haar-random isometry `d_in -> d_out` (`d_out >= d_in`) by Gram-Schmidt on
/// Gaussian columns.
pub fn isometry<R: Rng + ?Sized>(d_in: usize, d_out: usize, rng: &mut R) -> ComplexMatrix {
    assert!(d_out >= d_in);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d_in);
    while cols.len() < d_in {
        let mut v: Vec<C64> = (0..d_out).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for u in &cols {
                let p = inner(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= p * ui;
                }
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    ComplexMatrix::from_fn(d_out, d_in, |i, j| cols[j][i])
}

pub fn unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    isometry(d, d, rng)
}

/// Random channel with `n_kraus` Kraus operators from the Stinespring
/// dilation of a random isometry `d_in -> d_out * n_kraus`.
pub fn channel<R: Rng + ?Sized>(
    d_in: usize,
    d_out: usize,
    n_kraus: usize,
    rng: &mut R,
) -> Result<KrausChannel> {
    let v = isometry(d_in, d_out * n_kraus, rng);
    let ops = (0..n_kraus)
        .map(|k| ComplexMatrix::from_fn(d_out, d_in, |i, j| v[(k * d_out + i, j)]))
        .collect();
    KrausChannel::new(ops)
}

/// Random `n`-outcome POVM `S^{-1/2} G_c S^{-1/2}` with Wishart `G_c`.
pub fn povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Result<Povm> {
    let raw: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let g = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
            &g * &g.adjoint()
        })
        .collect();
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for r in &raw {
        sum.add_scaled(r, 1.0);
    }
    let e = crate::linalg::eig_hermitian(&sum)?;
    let inv_sqrt = e.apply_fn(|l| 1.0 / l.sqrt());
    let effects = raw
        .iter()
        .map(|r| inv_sqrt.sandwich(r).hermitian_part())
        .collect();
    Povm::new(effects)
}

/// Random orthonormal basis measurement.
pub fn basis_povm<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Povm {
    let u = unitary(dim, rng);
    Povm::from_parts(
        (0..dim)
            .map(|k| ComplexMatrix::projector(&u.column(k)))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let s = mixed_state(2, 3, 4, &mut rng);
            DensityMatrix::new(s.mat.clone(), 2, 3).unwrap();
            let ch = channel(3, 2, 3, &mut rng).unwrap();
            assert_eq!((ch.d_in, ch.d_out), (3, 2));
            let p = povm(3, 4, &mut rng).unwrap();
            assert_eq!(p.outcomes(), 4);
            let u = unitary(4, &mut rng);
            assert!((&u.adjoint() * &u).approx_eq(&ComplexMatrix::identity(4), 1e-12));
            Povm::new(basis_povm(3, &mut rng).effects).unwrap();
        }
    }
}
