use super::game::{make_game, GameSpec, Scenario};
use super::ideal::{ideal_encodings, ideal_measurements};
use super::table::CorrelationTable;
use crate::error::{Error, Result};
use crate::linalg::{kron, Subsystem};
use crate::par;
use crate::qudit::{apply_channel, DensityMatrix, KrausChannel, Povm};

/// Tolerance on the x-independence of the retained marginal.
pub const NO_SIGNALLING_TOL: f64 = 1e-10;

fn common_outcomes(povms: &[Povm], dim: usize) -> Result<usize> {
    let Some(first) = povms.first() else {
        return Err(Error::InvalidPovm("no measurement settings".into()));
    };
    let n_c = first.outcomes();
    for (z, p) in povms.iter().enumerate() {
        if p.dim != dim {
            return Err(Error::DimensionMismatch(format!(
                "measurement {z} acts on dimension {}, expected {dim}",
                p.dim
            )));
        }
        if p.outcomes() != n_c {
            return Err(Error::InvalidPovm(format!(
                "measurement {z} has {} outcomes, expected {n_c}",
                p.outcomes()
            )));
        }
    }
    Ok(n_c)
}

fn check_encodings(chs: &[KrausChannel], d_in: usize, who: &str) -> Result<usize> {
    let Some(first) = chs.first() else {
        return Err(Error::InvalidChannel(format!("no {who} encodings")));
    };
    let d_out = first.d_out;
    for (x, ch) in chs.iter().enumerate() {
        if ch.d_in != d_in || ch.d_out != d_out {
            return Err(Error::DimensionMismatch(format!(
                "{who} encoding {x} maps {} -> {}, expected {d_in} -> {d_out}",
                ch.d_in, ch.d_out
            )));
        }
    }
    Ok(d_out)
}

fn block(state: &DensityMatrix, povms: &[Povm]) -> Vec<f64> {
    povms
        .iter()
        .flat_map(|p| p.probabilities(&state.mat))
        .collect()
}

/// `p(c|x,z) = tr((Lambda_x (x) id)[rho] M_{c|z})`: the first factor of `rho`
/// is encoded and sent, the second is kept by the receiver.
pub fn simulate_eapm(
    rho: &DensityMatrix,
    encodings: &[KrausChannel],
    povms: &[Povm],
) -> Result<CorrelationTable> {
    let d_msg = check_encodings(encodings, rho.dim_a, "sender")?;
    let n_c = common_outcomes(povms, d_msg * rho.dim_b)?;
    let kept = rho.marginal(Subsystem::Second);
    let blocks = par::map(encodings.len(), |x| -> Result<Vec<f64>> {
        let tau = apply_channel(&encodings[x], rho, Subsystem::First)?;
        let drift = (&tau.marginal(Subsystem::Second).mat - &kept.mat).max_abs();
        if drift > NO_SIGNALLING_TOL {
            return Err(Error::InvalidChannel(format!(
                "encoding {x} changes the retained marginal by {drift:.3e}"
            )));
        }
        Ok(block(&tau, povms))
    });
    let blocks = blocks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CorrelationTable::from_blocks(
        Scenario::Eapm,
        encodings.len(),
        1,
        povms.len(),
        n_c,
        blocks,
    ))
}

/// `p(c|x,y,z) = tr((Lambda_x (x) Gamma_y)[rho] M_{c|z})`.
pub fn simulate_symmetric(
    rho: &DensityMatrix,
    enc_a: &[KrausChannel],
    enc_b: &[KrausChannel],
    povms: &[Povm],
) -> Result<CorrelationTable> {
    let da = check_encodings(enc_a, rho.dim_a, "first sender")?;
    let db = check_encodings(enc_b, rho.dim_b, "second sender")?;
    let n_c = common_outcomes(povms, da * db)?;
    let (n_x, n_y) = (enc_a.len(), enc_b.len());
    let rows = par::map(n_x, |x| -> Result<Vec<Vec<f64>>> {
        let tau = apply_channel(&enc_a[x], rho, Subsystem::First)?;
        enc_b
            .iter()
            .map(|ch| Ok(block(&apply_channel(ch, &tau, Subsystem::Second)?, povms)))
            .collect()
    });
    let mut blocks = Vec::with_capacity(n_x * n_y);
    for r in rows {
        blocks.extend(r?);
    }
    Ok(CorrelationTable::from_blocks(
        Scenario::Symmetric,
        n_x,
        n_y,
        povms.len(),
        n_c,
        blocks,
    ))
}

/// Unassisted strategies: `tr(alpha_x M_{c|z})`, or `tr((alpha_x (x) beta_y) M_{c|z})`
/// when the second sender's states are given.
pub fn simulate_unassisted(
    states_a: &[DensityMatrix],
    states_b: Option<&[DensityMatrix]>,
    povms: &[Povm],
) -> Result<CorrelationTable> {
    let da = uniform_dim(states_a, "first sender")?;
    let (scenario, db) = match states_b {
        Some(sb) => (Scenario::Symmetric, uniform_dim(sb, "second sender")?),
        None => (Scenario::Eapm, 1),
    };
    let n_c = common_outcomes(povms, da * db)?;
    let n_x = states_a.len();
    let rows = par::map(n_x, |x| -> Result<Vec<Vec<f64>>> {
        match states_b {
            None => Ok(vec![block(&states_a[x], povms)]),
            Some(sb) => sb
                .iter()
                .map(|b| {
                    let joint = DensityMatrix::from_parts(kron(&states_a[x].mat, &b.mat)?, da, db);
                    Ok(block(&joint, povms))
                })
                .collect(),
        }
    });
    let mut blocks = Vec::new();
    for r in rows {
        blocks.extend(r?);
    }
    let n_y = states_b.map_or(1, <[DensityMatrix]>::len);
    Ok(CorrelationTable::from_blocks(
        scenario,
        n_x,
        n_y,
        povms.len(),
        n_c,
        blocks,
    ))
}

fn uniform_dim(states: &[DensityMatrix], who: &str) -> Result<usize> {
    let Some(first) = states.first() else {
        return Err(Error::InvalidState(format!("no {who} states")));
    };
    let d = first.dim();
    if let Some(k) = states.iter().position(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch(format!(
            "{who} state {k} has dimension {}, expected {d}",
            states[k].dim()
        )));
    }
    Ok(d)
}

/// Uniform average of the winning probabilities `p(c = w_z | x, y, z)`.
pub fn score(game: &GameSpec, table: &CorrelationTable) -> Result<f64> {
    if (game.n_x, game.n_y, game.n_z, game.n_c) != (table.n_x, table.n_y, table.n_z, table.n_c) {
        return Err(Error::DimensionMismatch(format!(
            "game has shape {:?} but table has {:?}",
            (game.n_x, game.n_y, game.n_z, game.n_c),
            (table.n_x, table.n_y, table.n_z, table.n_c)
        )));
    }
    let mut acc = 0.0;
    for x in 0..game.n_x {
        for y in 0..game.n_y {
            for z in 0..game.n_z {
                acc += table.get(x, y, z, game.win(x, y, z));
            }
        }
    }
    Ok(acc / (game.n_x * game.n_y * game.n_z) as f64)
}

/// Score of the ideal protocol of `scenario` on the shared state `rho`, with
/// `d = rho.dim_a`.
pub fn ideal_score(rho: &DensityMatrix, scenario: Scenario) -> Result<f64> {
    let d = rho.dim_a;
    if rho.dim_b != d {
        return Err(Error::DimensionMismatch(format!(
            "shared state is {d}x{}, expected equal local dimensions",
            rho.dim_b
        )));
    }
    let game = make_game(d, scenario)?;
    let enc = ideal_encodings(d)?;
    let meas = ideal_measurements(d)?;
    let table = match scenario {
        Scenario::Eapm => simulate_eapm(rho, &enc, &meas)?,
        Scenario::Symmetric => simulate_symmetric(rho, &enc, &enc, &meas)?,
    };
    score(&game, &table)
}

/// Symmetric-game score of the ideal protocol run on `(ch_a (x) ch_b)[rho]`.
pub fn ef_protocol_value(
    rho: &DensityMatrix,
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    d: usize,
) -> Result<f64> {
    if ch_a.d_out != d || ch_b.d_out != d {
        return Err(Error::DimensionMismatch(format!(
            "pre-channels must output dimension {d}, got {} and {}",
            ch_a.d_out, ch_b.d_out
        )));
    }
    let sigma = apply_channel(ch_a, rho, Subsystem::First)?;
    let sigma = apply_channel(ch_b, &sigma, Subsystem::Second)?;
    let enc = ideal_encodings(d)?;
    let table = simulate_symmetric(&sigma, &enc, &enc, &ideal_measurements(d)?)?;
    score(&make_game(d, Scenario::Symmetric)?, &table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::{isotropic, max_entangled};

    #[test]
    fn ideal_eapm_qubit_and_qutrit() {
        for d in [2usize, 3] {
            let t = simulate_eapm(
                &max_entangled(d).unwrap(),
                &ideal_encodings(d).unwrap(),
                &ideal_measurements(d).unwrap(),
            )
            .unwrap();
            t.validate().unwrap();
            let s = score(&make_game(d, Scenario::Eapm).unwrap(), &t).unwrap();
            assert!((s - 1.0).abs() < 1e-12, "d={d} s={s}");
        }
    }

    #[test]
    fn white_noise_is_uniform() {
        let d = 3;
        let rho = DensityMatrix::maximally_mixed(d, d);
        let t = simulate_eapm(
            &rho,
            &ideal_encodings(d).unwrap(),
            &ideal_measurements(d).unwrap(),
        )
        .unwrap();
        assert!(t.as_slice().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn isotropic_affine_law() {
        let d = 3;
        let g = make_game(d, Scenario::Eapm).unwrap();
        for v in [0.0, 0.3, 1.0] {
            let t = simulate_eapm(
                &isotropic(d, v).unwrap(),
                &ideal_encodings(d).unwrap(),
                &ideal_measurements(d).unwrap(),
            )
            .unwrap();
            let s = score(&g, &t).unwrap();
            assert!((s - (v + (1.0 - v) / 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_encoding_carries_nothing() {
        let d = 2;
        let enc = vec![KrausChannel::identity(d); 4];
        let t = simulate_eapm(
            &max_entangled(d).unwrap(),
            &enc,
            &ideal_measurements(d).unwrap(),
        )
        .unwrap();
        for x in 1..4 {
            for z in 0..3 {
                for c in 0..2 {
                    assert!((t.get(x, 0, z, c) - t.get(0, 0, z, c)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn mismatches_are_errors() {
        let rho = max_entangled(2).unwrap();
        assert!(simulate_eapm(
            &rho,
            &ideal_encodings(3).unwrap(),
            &ideal_measurements(2).unwrap()
        )
        .is_err());
        assert!(simulate_eapm(
            &rho,
            &ideal_encodings(2).unwrap(),
            &ideal_measurements(3).unwrap()
        )
        .is_err());
        let t = CorrelationTable::zeros(Scenario::Eapm, 4, 1, 3, 2);
        assert!(score(&make_game(3, Scenario::Eapm).unwrap(), &t).is_err());
    }
}
