//! Concrete quantum objects: clock and shift operators, encoding unitaries,
//! mutually unbiased bases, product measurements, reference states and
//! channels.

mod channel;
mod mub;
mod povm;
pub mod random;
mod state;
mod weyl;

pub use channel::{apply_channel, KrausChannel};
pub use mub::{mub_family, shift_relation_check, MubFamily, ShiftResiduals};
pub use povm::{basis_measurement, product_measurement, product_observable, Povm};
pub use state::{
    fidelity_phi_plus, isotropic, max_entangled, phi_plus_vector, pure_schmidt, DensityMatrix,
};
pub use weyl::{encoding_unitary, weyl_pair, WeylPair};

use crate::error::{Error, Result};

/// Largest dimension accepted by the prime-dimension constructors.
pub const DEFAULT_MAX_DIMENSION: usize = 13;

/// Tolerance for unitarity and commutation checks.
pub const OPERATOR_TOL: f64 = 1e-12;
/// Unbiasedness tolerance for cross-basis overlaps.
pub const UNBIASED_TOL: f64 = 1e-10;
/// Hermiticity, trace and completeness tolerance for states, effects and Kraus sets.
pub const VALIDITY_TOL: f64 = 1e-10;
/// Lowest eigenvalue tolerated for a positive semidefinite operator.
pub const PSD_TOL: f64 = 1e-9;

/// Trial-division primality test.
pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

/// Validates a prime dimension against [`DEFAULT_MAX_DIMENSION`].
pub fn check_prime(d: usize) -> Result<()> {
    check_prime_with_limit(d, DEFAULT_MAX_DIMENSION)
}

pub fn check_prime_with_limit(d: usize, limit: usize) -> Result<()> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    if d > limit {
        return Err(Error::UnsupportedDimension {
            d,
            reason: format!("exceeds the configured limit {limit}"),
        });
    }
    Ok(())
}

/// Reduces `a` into `0..d`.
pub fn modp(a: i64, d: usize) -> usize {
    a.rem_euclid(d as i64) as usize
}

/// `a^e mod d`
pub fn pow_mod(a: usize, mut e: usize, d: usize) -> usize {
    let mut base = a % d;
    let mut acc = 1 % d;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % d;
        }
        base = base * base % d;
        e >>= 1;
    }
    acc
}

/// Modular inverse in a prime field via `a^(d-2)`.
pub fn inv_mod(a: usize, d: usize) -> Option<usize> {
    if a.is_multiple_of(d) {
        None
    } else {
        Some(pow_mod(a, d - 2, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        let ps: Vec<usize> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(check_prime(4).is_err());
        assert!(matches!(
            check_prime(17),
            Err(Error::UnsupportedDimension { .. })
        ));
        assert!(check_prime_with_limit(17, 17).is_ok());
    }

    #[test]
    fn modular_inverse() {
        for d in [3usize, 5, 7, 11, 13] {
            for a in 1..d {
                assert_eq!(a * inv_mod(a, d).unwrap() % d, 1);
            }
            assert_eq!(inv_mod(0, d), None);
        }
        assert_eq!(modp(-3, 5), 2);
    }
}
