use serde::Serialize;

use super::game::Scenario;
use super::table::CorrelationTable;
use crate::error::{Error, Result};
use crate::linalg::{kron, ComplexMatrix, Subsystem};
use crate::par;
use crate::qudit::{apply_channel, modp, DensityMatrix, KrausChannel, Povm};

const WEIGHT_TOL: f64 = 1e-12;
const RESPONSE_TOL: f64 = 1e-10;

/// Local hidden state model for the retained system: hidden states
/// `tau_lambda` with weights `p(lambda)` and responses `p(c2 | z, lambda)`.
#[derive(Debug, Clone, Serialize)]
pub struct LhsModel {
    pub weights: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// `responses[lambda][z][c2]`
    pub responses: Vec<Vec<Vec<f64>>>,
}

impl LhsModel {
    pub fn new(
        weights: Vec<f64>,
        states: Vec<DensityMatrix>,
        responses: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != states.len() || weights.len() != responses.len() {
            return Err(Error::InvalidModel(format!(
                "{} weights, {} states and {} response sets",
                weights.len(),
                states.len(),
                responses.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidModel("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidModel(format!("weights sum to {total:.15}")));
        }
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(Error::InvalidModel(
                "hidden states of different dimensions".into(),
            ));
        }
        let n_z = responses[0].len();
        for (l, r) in responses.iter().enumerate() {
            if r.len() != n_z {
                return Err(Error::InvalidModel(format!(
                    "hidden variable {l} has {} settings, expected {n_z}",
                    r.len()
                )));
            }
            for (z, dist) in r.iter().enumerate() {
                let s: f64 = dist.iter().sum();
                if dist.iter().any(|&p| p < -RESPONSE_TOL) || (s - 1.0).abs() > RESPONSE_TOL {
                    return Err(Error::InvalidModel(format!(
                        "response p(.|z={z}, lambda={l}) is not a distribution"
                    )));
                }
            }
        }
        Ok(Self {
            weights,
            states,
            responses,
        })
    }

    pub fn settings(&self) -> usize {
        self.responses[0].len()
    }
}

/// Classical post-processing `p(c | c1, c2)`.
#[derive(Debug, Clone, Serialize)]
pub struct PostProcessing {
    pub n_c1: usize,
    pub n_c2: usize,
    pub n_c: usize,
    /// `table[(c1 * n_c2 + c2) * n_c + c]`
    table: Vec<f64>,
}

impl PostProcessing {
    pub fn new(n_c1: usize, n_c2: usize, n_c: usize, table: Vec<f64>) -> Result<Self> {
        if table.len() != n_c1 * n_c2 * n_c {
            return Err(Error::InvalidModel(format!(
                "post-processing table has {} entries",
                table.len()
            )));
        }
        for row in table.chunks(n_c) {
            let s: f64 = row.iter().sum();
            if row.iter().any(|&p| p < 0.0) || (s - 1.0).abs() > RESPONSE_TOL {
                return Err(Error::InvalidModel(
                    "post-processing row is not a distribution".into(),
                ));
            }
        }
        Ok(Self {
            n_c1,
            n_c2,
            n_c,
            table,
        })
    }

    /// Deterministic `c = c1 - c2 mod d`.
    pub fn difference(d: usize) -> Self {
        let mut table = vec![0.0; d * d * d];
        for c1 in 0..d {
            for c2 in 0..d {
                table[(c1 * d + c2) * d + modp(c1 as i64 - c2 as i64, d)] = 1.0;
            }
        }
        Self {
            n_c1: d,
            n_c2: d,
            n_c: d,
            table,
        }
    }

    #[inline]
    pub fn prob(&self, c: usize, c1: usize, c2: usize) -> f64 {
        self.table[(c1 * self.n_c2 + c2) * self.n_c + c]
    }
}

fn check_family(
    msg_povms: &[Vec<Povm>],
    n_z: usize,
    post: &PostProcessing,
    d_msg: usize,
) -> Result<()> {
    if msg_povms.len() != n_z {
        return Err(Error::InvalidModel(format!(
            "{} message settings, model has {n_z}",
            msg_povms.len()
        )));
    }
    for (z, fam) in msg_povms.iter().enumerate() {
        if fam.len() != post.n_c2 {
            return Err(Error::InvalidModel(format!(
                "setting {z}: {} message measurements, expected {}",
                fam.len(),
                post.n_c2
            )));
        }
        for p in fam {
            if p.dim != d_msg || p.outcomes() != post.n_c1 {
                return Err(Error::InvalidModel(format!(
                    "setting {z}: message measurement on dimension {} with {} outcomes",
                    p.dim,
                    p.outcomes()
                )));
            }
        }
    }
    Ok(())
}

/// `p(c|x,z) = sum_lambda p(lambda) sum_{c1,c2} p(c|c1,c2) p(c2|z,lambda)
/// tr(Lambda_x[tau_lambda] M^R_{c1|z,c2})`.
///
/// `msg_povms[z][c2]` is the message measurement selected by the retained
/// outcome `c2`; a non-adaptive scheme repeats one measurement across `c2`.
pub fn lhs_simulation(
    model: &LhsModel,
    encodings: &[KrausChannel],
    msg_povms: &[Vec<Povm>],
    post: &PostProcessing,
) -> Result<CorrelationTable> {
    let d_in = model.states[0].dim();
    let Some(first) = encodings.first() else {
        return Err(Error::InvalidChannel("no encodings".into()));
    };
    let d_msg = first.d_out;
    if encodings
        .iter()
        .any(|ch| ch.d_in != d_in || ch.d_out != d_msg)
    {
        return Err(Error::DimensionMismatch(format!(
            "encodings must map {d_in} -> {d_msg}"
        )));
    }
    let n_z = model.settings();
    check_family(msg_povms, n_z, post, d_msg)?;
    if model
        .responses
        .iter()
        .flatten()
        .any(|r| r.len() != post.n_c2)
    {
        return Err(Error::InvalidModel(format!(
            "responses must have {} outcomes",
            post.n_c2
        )));
    }
    let n_c = post.n_c;
    let blocks = par::map(encodings.len(), |x| -> Result<Vec<f64>> {
        let mut out = vec![0.0; n_z * n_c];
        for (l, tau) in model.states.iter().enumerate() {
            let sent = apply_channel(&encodings[x], tau, Subsystem::First)?;
            for z in 0..n_z {
                for c2 in 0..post.n_c2 {
                    let w = model.weights[l] * model.responses[l][z][c2];
                    if w == 0.0 {
                        continue;
                    }
                    let p1 = msg_povms[z][c2].probabilities(&sent.mat);
                    for (c1, p) in p1.iter().enumerate() {
                        for c in 0..n_c {
                            out[z * n_c + c] += w * post.prob(c, c1, c2) * p;
                        }
                    }
                }
            }
        }
        Ok(out)
    });
    let blocks = blocks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CorrelationTable::from_blocks(
        Scenario::Eapm,
        encodings.len(),
        1,
        n_z,
        n_c,
        blocks,
    ))
}

/// Joint measurement `M_c = sum_{c1,c2} p(c|c1,c2) M^R_{c1|c2} (x) N_{c2}` on
/// message (x) retained system.
pub fn adaptive_product_povm(msg: &[Povm], retained: &Povm, post: &PostProcessing) -> Result<Povm> {
    if msg.len() != retained.outcomes() || msg.len() != post.n_c2 {
        return Err(Error::InvalidPovm(
            "adaptive family does not match the retained measurement".into(),
        ));
    }
    let dm = msg[0].dim;
    let n = dm * retained.dim;
    let mut effects = vec![ComplexMatrix::zeros(n, n); post.n_c];
    for (c2, n_eff) in retained.effects.iter().enumerate() {
        for (c1, m_eff) in msg[c2].effects.iter().enumerate() {
            let prod = kron(m_eff, n_eff)?;
            for (c, e) in effects.iter_mut().enumerate() {
                let p = post.prob(c, c1, c2);
                if p != 0.0 {
                    e.add_scaled(&prod, p);
                }
            }
        }
    }
    Povm::new(effects)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::{basis_measurement, mub_family, product_measurement};

    #[test]
    fn non_adaptive_matches_product_measurement() {
        let d = 3;
        let mubs = mub_family(d).unwrap();
        for z in 0..=d {
            let e: Vec<_> = (0..d).map(|m| mubs.vector(m, z).to_vec()).collect();
            let n: Vec<_> = (0..d).map(|m| mubs.conj_vector(m, z)).collect();
            let msg = vec![basis_measurement(&e).unwrap(); d];
            let joint = adaptive_product_povm(
                &msg,
                &basis_measurement(&n).unwrap(),
                &PostProcessing::difference(d),
            )
            .unwrap();
            let reference = product_measurement(d, z).unwrap();
            for (a, b) in joint.effects.iter().zip(&reference.effects) {
                assert!(a.approx_eq(b, 1e-12));
            }
        }
    }

    #[test]
    fn uniform_responses_give_message_statistics() {
        let d = 2;
        let tau = DensityMatrix::single(ComplexMatrix::diag_real(&[0.8, 0.2])).unwrap();
        let model = LhsModel::new(vec![1.0], vec![tau], vec![vec![vec![0.5, 0.5]]]).unwrap();
        let z_meas = basis_measurement(&mub_family(d).unwrap().bases[d]).unwrap();
        let post =
            PostProcessing::new(2, 2, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let t = lhs_simulation(
            &model,
            &[KrausChannel::identity(2)],
            &[vec![z_meas.clone(), z_meas]],
            &post,
        )
        .unwrap();
        assert!((t.get(0, 0, 0, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        let tau = DensityMatrix::maximally_mixed(2, 1);
        assert!(LhsModel::new(vec![0.5], vec![tau.clone()], vec![vec![vec![1.0]]]).is_err());
        assert!(LhsModel::new(vec![1.0], vec![tau.clone()], vec![vec![vec![0.7, 0.2]]]).is_err());
        assert!(PostProcessing::new(1, 1, 2, vec![0.5, 0.4]).is_err());
    }
}
