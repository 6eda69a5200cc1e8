//! See-saw ascent over unassisted strategies: states of each sender and the
//! receiver's measurements are optimized in turn, each block exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::blocks::{povm_update_with, povm_value, top_eigvec};
use super::sdp::SdpOptions;
use crate::error::{Error, Result};
use crate::linalg::{contract_first, contract_second, kron, ComplexMatrix, C64};
use crate::par;
use crate::protocols::{score, simulate_unassisted, GameSpec, Scenario};
use crate::qudit::random::haar_vector;
use crate::qudit::{DensityMatrix, Povm};

/// Slack allowed when comparing a fresh measurement against the previous one.
const KEEP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SeesawConfig {
    pub restarts: usize,
    /// Stop a restart once a full round improves the score by less than this.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// 1 runs restarts on the calling thread.
    pub workers: usize,
    pub sdp: SdpOptions,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            restarts: 300,
            tol: 1e-4,
            max_iters: 500,
            seed: 0,
            workers: par::default_workers(),
            sdp: SdpOptions::default(),
        }
    }
}

impl SeesawConfig {
    pub const STRICT_TOL: f64 = 1e-7;

    /// Convergence threshold of [`Self::STRICT_TOL`].
    pub fn strict(mut self) -> Self {
        self.tol = Self::STRICT_TOL;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub score: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Score after each block update, in order.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeesawResult {
    pub best_score: f64,
    pub best_restart: usize,
    /// Score of the best strategy recomputed by direct simulation.
    pub recomputed_score: f64,
    pub states_a: Vec<DensityMatrix>,
    pub states_b: Option<Vec<DensityMatrix>>,
    pub povms: Vec<Povm>,
    pub trace: Vec<RestartTrace>,
    pub converged: bool,
}

struct Run {
    alpha: Vec<Vec<C64>>,
    beta: Vec<Vec<C64>>,
    povms: Vec<Povm>,
    trace: RestartTrace,
}

/// Best unassisted value found over `cfg.restarts` seeded restarts.
pub fn seesaw(game: &GameSpec, cfg: &SeesawConfig) -> Result<SeesawResult> {
    cfg.validate()?;
    let runs = par::map_with_workers(cfg.restarts, cfg.workers, |r| {
        run_restart(game, cfg, r).map_err(|e| Error::Restart {
            restart: r,
            source: Box::new(e),
        })
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.trace.score > runs[best].trace.score {
            best = i;
        }
    }
    let trace: Vec<RestartTrace> = runs.iter().map(|r| r.trace.clone()).collect();
    let converged = trace.iter().all(|t| t.converged);
    let run = runs.into_iter().nth(best).expect("at least one restart");
    let d = game.d;
    let states_a: Vec<DensityMatrix> = run
        .alpha
        .iter()
        .map(|v| DensityMatrix::from_parts(ComplexMatrix::projector(v), d, 1))
        .collect();
    let states_b: Option<Vec<DensityMatrix>> = (game.scenario == Scenario::Symmetric).then(|| {
        run.beta
            .iter()
            .map(|v| DensityMatrix::from_parts(ComplexMatrix::projector(v), d, 1))
            .collect()
    });
    let table = simulate_unassisted(&states_a, states_b.as_deref(), &run.povms)?;
    let recomputed_score = score(game, &table)?;
    Ok(SeesawResult {
        best_score: run.trace.score,
        best_restart: best,
        recomputed_score,
        states_a,
        states_b,
        povms: run.povms,
        trace,
        converged,
    })
}

fn run_restart(game: &GameSpec, cfg: &SeesawConfig, restart: usize) -> Result<Run> {
    let d = game.d;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let symmetric = game.scenario == Scenario::Symmetric;
    let db = if symmetric { d } else { 1 };
    let mut alpha: Vec<Vec<C64>> = (0..game.n_x).map(|_| haar_vector(d, &mut rng)).collect();
    let mut beta: Vec<Vec<C64>> = if symmetric {
        (0..game.n_y).map(|_| haar_vector(d, &mut rng)).collect()
    } else {
        vec![vec![C64::new(1.0, 0.0)]]
    };
    let norm = (game.n_x * game.n_y * game.n_z) as f64;
    let mut povms: Vec<Option<Povm>> = vec![None; game.n_z];
    let mut history = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;

        // measurements
        let pa: Vec<ComplexMatrix> = alpha.iter().map(|v| ComplexMatrix::projector(v)).collect();
        let pb: Vec<ComplexMatrix> = beta.iter().map(|v| ComplexMatrix::projector(v)).collect();
        let mut joint = Vec::with_capacity(game.n_x * game.n_y);
        for a in &pa {
            for b in &pb {
                joint.push(kron(a, b)?);
            }
        }
        let mut total = 0.0;
        for z in 0..game.n_z {
            let mut ops = vec![ComplexMatrix::zeros(d * db, d * db); game.n_c];
            for x in 0..game.n_x {
                for y in 0..game.n_y {
                    ops[game.win(x, y, z)].add_scaled(&joint[x * game.n_y + y], 1.0);
                }
            }
            let (fresh, value) = povm_update_with(&ops, &cfg.sdp)?;
            let kept = povms[z].as_ref().map(|old| povm_value(&ops, old));
            match kept {
                Some(old_value) if old_value + KEEP_SLACK >= value => total += old_value,
                _ => {
                    povms[z] = Some(fresh);
                    total += value;
                }
            }
        }
        history.push(total / norm);
        let m: Vec<&Povm> = povms
            .iter()
            .map(|p| p.as_ref().expect("set above"))
            .collect();

        // first sender
        let mut total = 0.0;
        let contracted_b: Vec<Vec<Vec<ComplexMatrix>>> = m
            .iter()
            .map(|p| {
                p.effects
                    .iter()
                    .map(|e| pb.iter().map(|b| contract_second(e, d, b)).collect())
                    .collect()
            })
            .collect();
        for (x, ax) in alpha.iter_mut().enumerate() {
            let mut eff = ComplexMatrix::zeros(d, d);
            for z in 0..game.n_z {
                for y in 0..game.n_y {
                    eff.add_scaled(&contracted_b[z][game.win(x, y, z)][y], 1.0);
                }
            }
            let (v, value) = top_eigvec(&eff.hermitian_part())?;
            *ax = v;
            total += value;
        }
        history.push(total / norm);

        // second sender
        if symmetric {
            let pa: Vec<ComplexMatrix> =
                alpha.iter().map(|v| ComplexMatrix::projector(v)).collect();
            let contracted_a: Vec<Vec<Vec<ComplexMatrix>>> = m
                .iter()
                .map(|p| {
                    p.effects
                        .iter()
                        .map(|e| pa.iter().map(|a| contract_first(e, a, d)).collect())
                        .collect()
                })
                .collect();
            let mut total = 0.0;
            for (y, by) in beta.iter_mut().enumerate() {
                let mut eff = ComplexMatrix::zeros(d, d);
                for z in 0..game.n_z {
                    for x in 0..game.n_x {
                        eff.add_scaled(&contracted_a[z][game.win(x, y, z)][x], 1.0);
                    }
                }
                let (v, value) = top_eigvec(&eff.hermitian_part())?;
                *by = v;
                total += value;
            }
            history.push(total / norm);
        }

        let now = *history.last().expect("nonempty");
        if now - prev < cfg.tol {
            converged = true;
            break;
        }
        prev = now;
    }
    let povms: Vec<Povm> = povms
        .into_iter()
        .map(|p| p.expect("at least one round"))
        .collect();
    let score = *history.last().expect("at least one round");
    Ok(Run {
        alpha,
        beta,
        povms,
        trace: RestartTrace {
            restart,
            score,
            iterations,
            converged,
            history,
        },
    })
}
