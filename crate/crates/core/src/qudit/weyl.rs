use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Clock and shift operators of a prime dimension.
#[derive(Debug, Clone)]
pub struct WeylPair {
    pub d: usize,
    /// `X|k> = |k+1 mod d>`
    pub x_op: ComplexMatrix,
    /// `Z|k> = omega^k |k>`
    pub z_op: ComplexMatrix,
    pub omega: C64,
}

impl WeylPair {
    /// `omega^k` for any integer exponent.
    pub fn omega_pow(&self, k: i64) -> C64 {
        root_of_unity(self.d, k)
    }
}

/// `exp(2 pi i k / d)`, with the exponent reduced first so the phase is exact
/// for identical residues.
pub fn root_of_unity(d: usize, k: i64) -> C64 {
    let r = k.rem_euclid(d as i64);
    C64::from_polar(1.0, 2.0 * PI * r as f64 / d as f64)
}

pub fn weyl_pair(d: usize) -> Result<WeylPair> {
    super::check_prime(d)?;
    let x_op = ComplexMatrix::from_fn(d, d, |i, j| {
        if i == (j + 1) % d {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let z_op = ComplexMatrix::from_fn(d, d, |i, j| {
        if i == j {
            root_of_unity(d, i as i64)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(WeylPair {
        d,
        x_op,
        z_op,
        omega: root_of_unity(d, 1),
    })
}

/// `X^{x0} Z^{x1}`
pub fn encoding_unitary(w: &WeylPair, x0: usize, x1: usize) -> Result<ComplexMatrix> {
    for (name, v) in [("x0", x0), ("x1", x1)] {
        if v >= w.d {
            return Err(Error::OutOfRange {
                what: "encoding residue",
                value: format!("{name}={v} (d={})", w.d),
            });
        }
    }
    Ok(&w.x_op.pow(x0) * &w.z_op.pow(x1))
}
