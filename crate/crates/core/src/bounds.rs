//! No-entanglement bounds on game scores, the visibilities at which the ideal
//! protocols cross them, and visibility scans.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::optimize::{sdp_solve, Constraint, SdpProblem, SparseHermitian, ACCEPT_GAP};
use crate::protocols::{ideal_score, GameSpec, Scenario};
use crate::qudit::{check_prime, isotropic, max_entangled, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Analytic,
    Sdp,
    Conjectured,
    SeesawLower,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Analytic => "analytic",
            BoundKind::Sdp => "sdp",
            BoundKind::Conjectured => "conjectured",
            BoundKind::SeesawLower => "seesaw-lower",
        }
    }
}

/// Solver diagnostics backing an SDP bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    pub value: f64,
    pub kind: BoundKind,
    pub certificate: Option<Certificate>,
}

impl BoundResult {
    pub fn analytic(value: f64) -> Self {
        Self {
            value,
            kind: BoundKind::Analytic,
            certificate: None,
        }
    }

    pub fn conjectured(value: f64) -> Self {
        Self {
            value,
            kind: BoundKind::Conjectured,
            certificate: None,
        }
    }

    pub fn seesaw_lower(value: f64) -> Self {
        Self {
            value,
            kind: BoundKind::SeesawLower,
            certificate: None,
        }
    }
}

/// `L_d = (1 + (d - 1)/sqrt(d + 1)) / d`, the EAPM bound.
pub fn l_d(d: usize) -> Result<BoundResult> {
    check_prime(d)?;
    let df = d as f64;
    Ok(BoundResult::analytic(
        (1.0 + (df - 1.0) / (df + 1.0).sqrt()) / df,
    ))
}

/// `2/(d + 1)` for odd prime `d`. Only proven at `d = 2`, which is served by
/// [`xor_qubit_bound`] instead.
pub fn conjectured_bound(d: usize) -> Result<BoundResult> {
    check_prime(d)?;
    if d == 2 {
        return Err(Error::UnsupportedDimension {
            d,
            reason: "the qubit bound is proven; use xor_qubit_bound".into(),
        });
    }
    Ok(BoundResult::conjectured(2.0 / (d as f64 + 1.0)))
}

/// The bound a scan compares against: `L_d` for EAPM, the proven `2/3` of the
/// qubit symmetric game (which [`xor_qubit_bound`] reproduces), `2/(d + 1)`
/// otherwise.
pub fn scenario_bound(d: usize, scenario: Scenario) -> Result<BoundResult> {
    match (scenario, d) {
        (Scenario::Eapm, _) => l_d(d),
        (Scenario::Symmetric, 2) => Ok(BoundResult::analytic(2.0 / 3.0)),
        (Scenario::Symmetric, _) => conjectured_bound(d),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceThresholds {
    pub eapm: f64,
    pub symmetric: f64,
    /// `(H_d - 1)/(d - 1)` with `H_d` the harmonic number.
    pub steering_general: f64,
    pub entanglement: f64,
}

pub fn reference_thresholds(d: usize) -> Result<ReferenceThresholds> {
    check_prime(d)?;
    let df = d as f64;
    let harmonic: f64 = (1..=d).map(|k| 1.0 / k as f64).sum();
    Ok(ReferenceThresholds {
        eapm: 1.0 / (df + 1.0).sqrt(),
        symmetric: 1.0 / (df + 1.0),
        steering_general: (harmonic - 1.0) / (df - 1.0),
        entanglement: 1.0 / (df + 1.0),
    })
}

/// Visibility at which `v + (1 - v)/d` reaches `bound`.
pub fn critical_visibility(d: usize, bound: &BoundResult) -> Result<f64> {
    check_prime(d)?;
    let df = d as f64;
    let b = bound.value;
    if !(b > 1.0 / df && b < 1.0) {
        return Err(Error::OutOfRange {
            what: "bound (no crossing inside (1/d, 1))",
            value: format!("{b}"),
        });
    }
    Ok((df * b - 1.0) / (df - 1.0))
}

/// A game on bits whose win functions split as `g_z(x) + h_z(y) mod 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XorGame {
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    /// `g[z][x]`
    pub g: Vec<Vec<u8>>,
    /// `h[z][y]`
    pub h: Vec<Vec<u8>>,
}

fn check_bits(f: &[Vec<u8>], n_z: usize, n: usize, who: &str) -> Result<()> {
    if f.len() != n_z {
        return Err(Error::InvalidGame(format!(
            "{who} has {} settings, expected {n_z}",
            f.len()
        )));
    }
    for (z, row) in f.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidGame(format!(
                "{who}_{z} has {} inputs, expected {n}",
                row.len()
            )));
        }
        if row.iter().any(|&b| b > 1) {
            return Err(Error::InvalidGame(format!(
                "{who}_{z} is not a bit function"
            )));
        }
        let ones = row.iter().filter(|&&b| b == 1).count();
        if n > 1 && 2 * ones != n {
            return Err(Error::InvalidGame(format!(
                "{who}_{z} is unbalanced: {ones} ones over {n} inputs"
            )));
        }
    }
    Ok(())
}

impl XorGame {
    /// Functions over a single input are constant and exempt from balance.
    pub fn new(g: Vec<Vec<u8>>, h: Vec<Vec<u8>>) -> Result<Self> {
        let n_z = g.len();
        if n_z == 0 {
            return Err(Error::InvalidGame("no settings".into()));
        }
        let n_x = g[0].len();
        let n_y = h.first().map_or(0, Vec::len);
        if n_x == 0 || n_y == 0 {
            return Err(Error::InvalidGame("empty input set".into()));
        }
        check_bits(&g, n_z, n_x, "g")?;
        check_bits(&h, n_z, n_y, "h")?;
        Ok(Self {
            n_x,
            n_y,
            n_z,
            g,
            h,
        })
    }

    /// Splits a qubit game into its XOR parts, failing if some `w_z` does not
    /// separate.
    pub fn from_game(game: &GameSpec) -> Result<Self> {
        if game.n_c != 2 {
            return Err(Error::InvalidGame(format!(
                "{} outcomes; XOR bound needs bits",
                game.n_c
            )));
        }
        let mut g = vec![vec![0u8; game.n_x]; game.n_z];
        let mut h = vec![vec![0u8; game.n_y]; game.n_z];
        for z in 0..game.n_z {
            let base = game.win(0, 0, z);
            for x in 0..game.n_x {
                g[z][x] = game.win(x, 0, z) as u8;
            }
            for y in 0..game.n_y {
                h[z][y] = ((game.win(0, y, z) + base) % 2) as u8;
            }
            for x in 0..game.n_x {
                for y in 0..game.n_y {
                    if game.win(x, y, z) as u8 != (g[z][x] + h[z][y]) % 2 {
                        return Err(Error::InvalidGame(format!(
                            "w_{z} is not of the form g(x) + h(y)"
                        )));
                    }
                }
            }
        }
        Self::new(g, h)
    }

    pub fn win(&self, x: usize, y: usize, z: usize) -> u8 {
        (self.g[z][x] + self.h[z][y]) % 2
    }
}

/// `max sum_{x<x'} G_{xx'} c_{xx'}` over Gram matrices, with
/// `c_{xx'} = sum_z (-1)^{f_z(x) + f_z(x')}`.
#[derive(Debug, Clone, Serialize)]
pub struct GramBound {
    pub value: f64,
    pub gram: Vec<Vec<f64>>,
    pub certificate: Option<Certificate>,
}

/// Pair coefficients `c_{xx'}` of the Gram program for the functions `f[z][x]`.
pub fn gram_coefficients(f: &[Vec<u8>]) -> Vec<Vec<f64>> {
    let n = f.first().map_or(0, Vec::len);
    let mut c = vec![vec![0.0; n]; n];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, cij) in row.iter_mut().enumerate() {
            if i != j {
                *cij = f
                    .iter()
                    .map(|fz| if (fz[i] + fz[j]) % 2 == 0 { 1.0 } else { -1.0 })
                    .sum();
            }
        }
    }
    c
}

/// Solves the Gram program as a Hermitian SDP; a real objective makes the
/// real part of any optimum optimal for the real program.
pub fn gram_sdp(f: &[Vec<u8>]) -> Result<GramBound> {
    let c = gram_coefficients(f);
    let n = c.len();
    if n <= 1 {
        return Ok(GramBound {
            value: 0.0,
            gram: vec![vec![1.0; n]; n],
            certificate: None,
        });
    }
    let objective = ComplexMatrix::from_fn(n, n, |i, j| C64::new(c[i][j] / 2.0, 0.0));
    let constraints = (0..n)
        .map(|i| Constraint {
            blocks: vec![(0, SparseHermitian::new().diag(i, 1.0))],
            rhs: 1.0,
        })
        .collect();
    let sol = sdp_solve(&SdpProblem {
        block_sizes: vec![n],
        objective: vec![objective],
        constraints,
    })?;
    let scale = sol
        .primal_objective
        .abs()
        .max(sol.dual_objective.abs())
        .max(1.0);
    if sol.gap > ACCEPT_GAP * scale {
        return Err(Error::SolverFailure {
            iterations: sol.iterations,
            reason: format!("duality gap {:.3e}", sol.gap),
        });
    }
    let gram = (0..n)
        .map(|i| (0..n).map(|j| sol.x[0][(i, j)].re).collect())
        .collect();
    Ok(GramBound {
        value: sol.dual_objective,
        gram,
        certificate: Some(Certificate {
            gap: (sol.primal_objective - sol.dual_objective).abs(),
            iterations: sol.iterations,
        }),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct XorBound {
    pub bound: BoundResult,
    pub eta: GramBound,
    pub xi: GramBound,
}

/// `1/2 + sqrt(N_X N_Z + 2 eta) sqrt(N_Y N_Z + 2 xi) / (2 N_X N_Y N_Z)`, the
/// no-entanglement bound of a qubit XOR game.
pub fn xor_qubit_bound(game: &XorGame) -> Result<XorBound> {
    let eta = gram_sdp(&game.g)?;
    let xi = gram_sdp(&game.h)?;
    let (nx, ny, nz) = (game.n_x as f64, game.n_y as f64, game.n_z as f64);
    let root = |n: f64, v: f64| (n * nz + 2.0 * v).max(0.0).sqrt();
    let value = (0.5 + root(nx, eta.value) * root(ny, xi.value) / (2.0 * nx * ny * nz)).min(1.0);
    let certificate = match (eta.certificate, xi.certificate) {
        (None, None) => None,
        (a, b) => {
            let (a, b) = (
                a.unwrap_or(Certificate {
                    gap: 0.0,
                    iterations: 0,
                }),
                b.unwrap_or(Certificate {
                    gap: 0.0,
                    iterations: 0,
                }),
            );
            Some(Certificate {
                gap: a.gap.max(b.gap),
                iterations: a.iterations + b.iterations,
            })
        }
    };
    let kind = if certificate.is_some() {
        BoundKind::Sdp
    } else {
        BoundKind::Analytic
    };
    Ok(XorBound {
        bound: BoundResult {
            value,
            kind,
            certificate,
        },
        eta,
        xi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub v: f64,
    pub score: f64,
    pub bound: f64,
    pub bound_kind: BoundKind,
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Scan {
    pub d: usize,
    pub scenario: Scenario,
    pub bound: BoundResult,
    /// Analytic crossing of the ideal score with the bound.
    pub crossing: f64,
    pub rows: Vec<ScanRow>,
}

/// Ideal-protocol scores on isotropic states over `steps` evenly spaced
/// visibilities in `[from, to]`. The score is affine in the state, so it is
/// interpolated exactly from simulations at `v = 0` and `v = 1`.
pub fn visibility_scan(
    d: usize,
    scenario: Scenario,
    bound: BoundResult,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<Scan> {
    if !(0.0..=1.0).contains(&from) || !(0.0..=1.0).contains(&to) || from > to {
        return Err(Error::OutOfRange {
            what: "visibility range",
            value: format!("[{from}, {to}]"),
        });
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("scan needs at least one step".into()));
    }
    let crossing = critical_visibility(d, &bound)?;
    let s1 = ideal_score(&max_entangled(d)?, scenario)?;
    let s0 = ideal_score(&DensityMatrix::maximally_mixed(d, d), scenario)?;
    let rows = (0..steps)
        .map(|k| {
            let v = if steps == 1 {
                from
            } else {
                from + (to - from) * k as f64 / (steps - 1) as f64
            };
            let score = v * s1 + (1.0 - v) * s0;
            ScanRow {
                v,
                score,
                bound: bound.value,
                bound_kind: bound.kind,
                certified: score > bound.value,
            }
        })
        .collect();
    Ok(Scan {
        d,
        scenario,
        bound,
        crossing,
        rows,
    })
}

/// Ideal-protocol score on `isotropic(d, v)` by direct simulation.
pub fn isotropic_score(d: usize, scenario: Scenario, v: f64) -> Result<f64> {
    ideal_score(&isotropic(d, v)?, scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::make_game;

    fn r2() -> XorGame {
        XorGame::from_game(&make_game(2, Scenario::Symmetric).unwrap()).unwrap()
    }

    /// Best deterministic strategy sending one bit from each side.
    fn brute_force(game: &XorGame) -> f64 {
        let mut best = 0.0f64;
        for ea in 0..1usize << game.n_x {
            for eb in 0..1usize << game.n_y {
                let mut wins = 0usize;
                for z in 0..game.n_z {
                    let mut cell = [[0usize; 2]; 4];
                    for x in 0..game.n_x {
                        for y in 0..game.n_y {
                            let m = (ea >> x & 1) * 2 + (eb >> y & 1);
                            cell[m][game.win(x, y, z) as usize] += 1;
                        }
                    }
                    wins += cell.iter().map(|c| c[0].max(c[1])).sum::<usize>();
                }
                best = best.max(wins as f64 / (game.n_x * game.n_y * game.n_z) as f64);
            }
        }
        best
    }

    #[test]
    fn l_d_values() {
        assert!((l_d(2).unwrap().value - 0.5 * (1.0 + 1.0 / 3f64.sqrt())).abs() < 1e-15);
        assert!((l_d(3).unwrap().value - 2.0 / 3.0).abs() < 1e-15);
        assert!((l_d(5).unwrap().value - 0.5266).abs() < 5e-5);
        assert!((l_d(7).unwrap().value - 0.4459).abs() < 5e-5);
        assert!(l_d(9).is_err());
        let vals: Vec<f64> = [2, 3, 5, 7, 11, 13]
            .iter()
            .map(|&d| l_d(d).unwrap().value)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn conjecture_and_references() {
        assert_eq!(conjectured_bound(3).unwrap().value, 0.5);
        assert_eq!(conjectured_bound(7).unwrap().kind, BoundKind::Conjectured);
        assert!(conjectured_bound(2).is_err());
        let r = reference_thresholds(2).unwrap();
        assert!((r.eapm - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((r.symmetric - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.steering_general - 0.5).abs() < 1e-15);
        assert_eq!(reference_thresholds(3).unwrap().eapm, 0.5);
    }

    #[test]
    fn critical_visibilities() {
        for d in [2usize, 3, 5, 7, 11, 13] {
            let v = critical_visibility(d, &l_d(d).unwrap()).unwrap();
            assert!((v - 1.0 / (d as f64 + 1.0).sqrt()).abs() < 1e-12);
        }
        let v = critical_visibility(2, &BoundResult::analytic(2.0 / 3.0)).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        let v = critical_visibility(5, &conjectured_bound(5).unwrap()).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        assert!(critical_visibility(3, &BoundResult::analytic(1.0 / 3.0)).is_err());
        assert!(critical_visibility(3, &BoundResult::analytic(1.0)).is_err());
    }

    #[test]
    fn crossing_matches_bisection_on_simulated_scores() {
        for (d, scenario) in [
            (2usize, Scenario::Eapm),
            (3, Scenario::Eapm),
            (3, Scenario::Symmetric),
        ] {
            let b = scenario_bound(d, scenario).unwrap();
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if isotropic_score(d, scenario, mid).unwrap() > b.value {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let v = critical_visibility(d, &b).unwrap();
            assert!((hi - v).abs() < 1e-9, "d={d} {scenario:?}: {hi} vs {v}");
            assert!(isotropic_score(d, scenario, v + 1e-6).unwrap() > b.value);
        }
    }

    #[test]
    fn r2_gram_program() {
        let g = r2();
        let c = gram_coefficients(&g.g);
        assert!(c
            .iter()
            .enumerate()
            .all(|(i, r)| r.iter().enumerate().all(|(j, &v)| i == j || v == -1.0)));
        let out = xor_qubit_bound(&g).unwrap();
        assert!((out.eta.value - 2.0).abs() < 1e-6);
        assert!((out.xi.value - 2.0).abs() < 1e-6);
        assert!((out.bound.value - 2.0 / 3.0).abs() < 1e-6);
        assert_eq!(out.bound.kind, BoundKind::Sdp);
        assert!(out.bound.certificate.unwrap().gap <= 1e-7);
        let proven = scenario_bound(2, Scenario::Symmetric).unwrap();
        assert!((proven.value - out.bound.value).abs() < 1e-6);
        // symmetric reduction G = (1 - u) I + u J: PSD iff u >= -1/(n - 1),
        // and the objective -n(n - 1)u/2 peaks there
        let n = g.n_x as f64;
        let u = -1.0 / (n - 1.0);
        assert!((-n * (n - 1.0) / 2.0 * u - out.eta.value).abs() < 1e-6);
        let row_sums: Vec<f64> = out.eta.gram.iter().map(|r| r.iter().sum()).collect();
        assert!(row_sums.iter().all(|s| s.abs() < 1e-5), "{row_sums:?}");
    }

    #[test]
    fn single_setting_game() {
        let g = XorGame::new(vec![vec![0, 1]], vec![vec![0, 1]]).unwrap();
        let out = xor_qubit_bound(&g).unwrap();
        assert!((out.eta.value - 1.0).abs() < 1e-7);
        assert!((out.bound.value - 1.0).abs() < 1e-7);
        assert!((brute_force(&g) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qubit_eapm_game_recovers_l2() {
        let g = XorGame::from_game(&make_game(2, Scenario::Eapm).unwrap()).unwrap();
        let out = xor_qubit_bound(&g).unwrap();
        assert!((out.bound.value - l_d(2).unwrap().value).abs() < 1e-7);
    }

    #[test]
    fn xor_bound_dominates_brute_force() {
        assert!((brute_force(&r2()) - 2.0 / 3.0).abs() < 1e-15);
        // every balanced function pair on up to four inputs, two settings
        let balanced = |n: usize| -> Vec<Vec<u8>> {
            (0..1usize << n)
                .filter(|m| 2 * m.count_ones() as usize == n)
                .map(|m| (0..n).map(|i| (m >> i & 1) as u8).collect())
                .collect()
        };
        let fs = balanced(4);
        for (i, a) in fs.iter().enumerate() {
            for b in &fs[i..] {
                let g =
                    XorGame::new(vec![a.clone(), b.clone()], vec![vec![0, 1], vec![1, 0]]).unwrap();
                let bound = xor_qubit_bound(&g).unwrap().bound.value;
                assert!(bound >= brute_force(&g) - 1e-7, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn malformed_xor_games() {
        assert!(XorGame::new(vec![vec![0, 0]], vec![vec![0, 1]]).is_err());
        assert!(XorGame::new(vec![vec![0, 2]], vec![vec![0, 1]]).is_err());
        assert!(XorGame::new(vec![vec![0, 1]], vec![]).is_err());
        assert!(XorGame::from_game(&make_game(3, Scenario::Eapm).unwrap()).is_err());
    }

    #[test]
    fn scan_flips_at_crossing() {
        let b = scenario_bound(3, Scenario::Symmetric).unwrap();
        let scan = visibility_scan(3, Scenario::Symmetric, b, 0.0, 1.0, 41).unwrap();
        assert!((scan.crossing - 0.25).abs() < 1e-12);
        let step = 1.0 / 40.0;
        for r in &scan.rows {
            if r.v > scan.crossing + step {
                assert!(r.certified);
            }
            if r.v < scan.crossing - step {
                assert!(!r.certified);
            }
            let direct = isotropic_score(3, Scenario::Symmetric, r.v).unwrap();
            assert!((direct - r.score).abs() < 1e-10);
        }
        assert!(visibility_scan(3, Scenario::Eapm, b, 0.5, 0.2, 3).is_err());
    }
}
