use serde::Serialize;

use super::modp;
use super::weyl::{root_of_unity, WeylPair};
use crate::error::{Error, Result};
use crate::linalg::{fix_phase, norm, C64};

/// A complete set of `d + 1` mutually unbiased bases.
///
/// For odd prime `d`, basis `z < d` has vectors
/// `|e_{m,z}> = d^{-1/2} sum_l omega^{l(m + z l)} |l>` and basis `d` is the
/// computational basis. For `d = 2` the quadratic phase degenerates, so the
/// bases are the eigenbases of `X` (`z = 0`), `XZ` (`z = 1`) and `Z` (`z = 2`).
#[derive(Debug, Clone, Serialize)]
pub struct MubFamily {
    pub d: usize,
    /// `bases[z][m]` is `|e_{m,z}>`.
    pub bases: Vec<Vec<Vec<C64>>>,
}

impl MubFamily {
    pub fn vector(&self, m: usize, z: usize) -> &[C64] {
        &self.bases[z][m]
    }

    /// Entrywise conjugate `|e*_{m,z}>`.
    pub fn conj_vector(&self, m: usize, z: usize) -> Vec<C64> {
        self.bases[z][m].iter().map(|a| a.conj()).collect()
    }
}

pub fn mub_family(d: usize) -> Result<MubFamily> {
    super::check_prime(d)?;
    let zero = C64::new(0.0, 0.0);
    let computational: Vec<Vec<C64>> = (0..d)
        .map(|m| {
            (0..d)
                .map(|l| if l == m { C64::new(1.0, 0.0) } else { zero })
                .collect()
        })
        .collect();
    let mut bases = Vec::with_capacity(d + 1);
    if d == 2 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        bases.push(vec![
            vec![C64::new(s, 0.0), C64::new(s, 0.0)],
            vec![C64::new(s, 0.0), C64::new(-s, 0.0)],
        ]);
        bases.push(vec![
            vec![C64::new(s, 0.0), C64::new(0.0, s)],
            vec![C64::new(s, 0.0), C64::new(0.0, -s)],
        ]);
    } else {
        let amp = 1.0 / (d as f64).sqrt();
        for z in 0..d {
            let basis = (0..d)
                .map(|m| {
                    let mut v: Vec<C64> = (0..d)
                        .map(|l| {
                            let (l, m, z) = (l as i64, m as i64, z as i64);
                            root_of_unity(d, l * (m + z * l)) * amp
                        })
                        .collect();
                    fix_phase(&mut v);
                    v
                })
                .collect();
            bases.push(basis);
        }
    }
    bases.push(computational);
    Ok(MubFamily { d, bases })
}

/// Residual norms of the four shift relations of a Weyl pair acting on a
/// non-computational basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftResiduals {
    /// `X^t |e_{m,z}> = omega^{z t^2 - t m} |e_{m-2zt,z}>`
    pub shift: f64,
    /// `Z^t |e_{m,z}> = |e_{m+t,z}>`
    pub clock: f64,
    /// `X^t |e*_{m,z}> = omega^{-z t^2 + t m} |e*_{m-2zt,z}>`
    pub shift_conj: f64,
    /// `Z^t |e*_{m,z}> = |e*_{m-t,z}>`
    pub clock_conj: f64,
}

impl ShiftResiduals {
    pub fn max(&self) -> f64 {
        self.shift
            .max(self.clock)
            .max(self.shift_conj)
            .max(self.clock_conj)
    }
}

pub fn shift_relation_check(
    w: &WeylPair,
    mubs: &MubFamily,
    t: usize,
    z: usize,
    m: usize,
) -> Result<ShiftResiduals> {
    let d = w.d;
    if mubs.d != d {
        return Err(Error::DimensionMismatch(format!(
            "Weyl pair of dimension {d} with MUBs of dimension {}",
            mubs.d
        )));
    }
    if d == 2 {
        return Err(Error::UnsupportedDimension {
            d,
            reason: "shift relations hold for odd primes".into(),
        });
    }
    if z >= d {
        return Err(Error::OutOfRange {
            what: "basis index (relations exclude the computational basis)",
            value: z.to_string(),
        });
    }
    if m >= d {
        return Err(Error::OutOfRange {
            what: "basis element",
            value: m.to_string(),
        });
    }
    let (ti, zi, mi) = (t as i64, z as i64, m as i64);
    let xt = w.x_op.pow(t % d);
    let zt = w.z_op.pow(t % d);
    let e = mubs.vector(m, z).to_vec();
    let ec = mubs.conj_vector(m, z);
    let target = modp(mi - 2 * zi * ti, d);

    let residual = |lhs: Vec<C64>, phase: C64, rhs: &[C64]| -> f64 {
        let diff: Vec<C64> = lhs.iter().zip(rhs).map(|(a, b)| a - phase * b).collect();
        norm(&diff)
    };
    let one = C64::new(1.0, 0.0);
    Ok(ShiftResiduals {
        shift: residual(
            xt.matvec(&e),
            root_of_unity(d, zi * ti * ti - ti * mi),
            mubs.vector(target, z),
        ),
        clock: residual(zt.matvec(&e), one, mubs.vector(modp(mi + ti, d), z)),
        shift_conj: residual(
            xt.matvec(&ec),
            root_of_unity(d, -zi * ti * ti + ti * mi),
            &mubs.conj_vector(target, z),
        ),
        clock_conj: residual(zt.matvec(&ec), one, &mubs.conj_vector(modp(mi - ti, d), z)),
    })
}
