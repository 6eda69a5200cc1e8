//! Reference strategies: the entanglement-assisted protocol and the
//! classical relay.

use super::game::Scenario;
use crate::error::Result;
use crate::linalg::{kron, ComplexMatrix, C64};
use crate::qudit::{
    encoding_unitary, modp, product_measurement, weyl_pair, DensityMatrix, KrausChannel, Povm,
};

/// `U_x = X^{x0} Z^{x1}` for `x = x0 * d + x1`.
pub fn ideal_encodings(d: usize) -> Result<Vec<KrausChannel>> {
    let w = weyl_pair(d)?;
    (0..d * d)
        .map(|x| KrausChannel::unitary(encoding_unitary(&w, x / d, x % d)?))
        .collect()
}

/// Product measurements in the MUB family, one per setting `z = 0..=d`.
pub fn ideal_measurements(d: usize) -> Result<Vec<Povm>> {
    (0..=d).map(|z| product_measurement(d, z)).collect()
}

/// A strategy without entanglement: states by `x`, states by `y` (symmetric
/// only) and measurements by `z`.
#[derive(Debug, Clone)]
pub struct UnassistedStrategy {
    pub states_a: Vec<DensityMatrix>,
    pub states_b: Option<Vec<DensityMatrix>>,
    pub povms: Vec<Povm>,
}

fn basis_state(d: usize, k: usize) -> DensityMatrix {
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[k] = C64::new(1.0, 0.0);
    DensityMatrix::from_parts(ComplexMatrix::projector(&v), d, 1)
}

/// Each sender relays `x0` (`y0`) in the computational basis. The receiver
/// reads `a = x0`, `b = y0` and outputs `a - b` at `z = d` and
/// `-2z(a - b)` otherwise. In the symmetric game this scores `2/(d+1)`.
pub fn relay_strategy(d: usize, scenario: Scenario) -> Result<UnassistedStrategy> {
    weyl_pair(d)?;
    let states: Vec<DensityMatrix> = (0..d * d).map(|x| basis_state(d, x / d)).collect();
    let db = match scenario {
        Scenario::Eapm => 1,
        Scenario::Symmetric => d,
    };
    let mut povms = Vec::with_capacity(d + 1);
    for z in 0..=d {
        let mut effects = vec![ComplexMatrix::zeros(d * db, d * db); d];
        for a in 0..d {
            for b in 0..db {
                let diff = a as i64 - b as i64;
                let c = if z == d {
                    modp(diff, d)
                } else {
                    modp(-2 * z as i64 * diff, d)
                };
                effects[c][(a * db + b, a * db + b)] = C64::new(1.0, 0.0);
            }
        }
        povms.push(Povm::from_parts(effects));
    }
    let states_b = (scenario == Scenario::Symmetric).then(|| states.clone());
    Ok(UnassistedStrategy {
        states_a: states,
        states_b,
        povms,
    })
}

/// `sum_z B_z (x) B_z` with `B_z = sum_x (-1)^{w_z(x)} U_x^dagger E_z U_x` on
/// qubits, where `E_z` is the single-qubit factor of the setting-`z`
/// observable and `w_z` the sender's part of the qubit win function.
pub fn qubit_b_sum() -> Result<ComplexMatrix> {
    let w = weyl_pair(2)?;
    let game = super::game::make_game(2, Scenario::Eapm)?;
    let singles = [w.x_op.clone(), &w.x_op * &w.z_op, w.z_op.clone()];
    let mut total = ComplexMatrix::zeros(4, 4);
    for (z, e) in singles.iter().enumerate() {
        let mut b = ComplexMatrix::zeros(2, 2);
        for x in 0..4 {
            let u = encoding_unitary(&w, x / 2, x % 2)?;
            let sign = if game.win(x, 0, z) == 0 { 1.0 } else { -1.0 };
            b.add_scaled(&(&(&u.adjoint() * e) * &u), sign);
        }
        total.add_scaled(&kron(&b, &b)?, 1.0);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{make_game, score, simulate_unassisted};

    #[test]
    fn relay_scores() {
        for d in [2usize, 3, 5] {
            let s = relay_strategy(d, Scenario::Symmetric).unwrap();
            let t = simulate_unassisted(&s.states_a, s.states_b.as_deref(), &s.povms).unwrap();
            t.validate().unwrap();
            let v = score(&make_game(d, Scenario::Symmetric).unwrap(), &t).unwrap();
            assert!((v - 2.0 / (d as f64 + 1.0)).abs() < 1e-12, "d={d} v={v}");
        }
        let e = relay_strategy(3, Scenario::Eapm).unwrap();
        let t = simulate_unassisted(&e.states_a, None, &e.povms).unwrap();
        for x in 0..9 {
            assert!((t.get(x, 0, 3, x / 3) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn b_sum_identity() {
        let phi = ComplexMatrix::projector(&crate::qudit::phi_plus_vector(2));
        let mut expect = phi.scale(64.0);
        expect.add_scaled(&ComplexMatrix::identity(4), -16.0);
        assert!(qubit_b_sum().unwrap().approx_eq(&expect, 1e-12));
    }
}
