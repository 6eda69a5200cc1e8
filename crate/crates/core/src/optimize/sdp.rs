//! Primal-dual interior-point solver for small block-diagonal complex SDPs.
//!
//! Solves
//!
//! ```text
//! maximize    sum_b Re tr(C_b X_b)
//! subject to  sum_b Re tr(A_ib X_b) = b_i,   X_b >= 0 (Hermitian)
//! ```
//!
//! with the dual `minimize b.y  s.t.  sum_i y_i A_ib - C_b = S_b >= 0`.
//! Directions use Nesterov-Todd scaling and a Mehrotra predictor-corrector.

use std::collections::BTreeMap;

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};
use nalgebra::{Cholesky, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix, C64};

/// Hermitian matrix given by its nonzero entries (both triangles listed).
#[derive(Debug, Clone, Default, Serialize)]
pub struct SparseHermitian {
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseHermitian {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v` at `(i, i)`.
    pub fn diag(mut self, i: usize, v: f64) -> Self {
        self.entries.push((i, i, C64::new(v, 0.0)));
        self
    }

    /// Adds `v` at `(i, j)` and `conj(v)` at `(j, i)`, `i != j`.
    pub fn pair(mut self, i: usize, j: usize, v: C64) -> Self {
        debug_assert_ne!(i, j);
        self.entries.push((i, j, v));
        self.entries.push((j, i, v.conj()));
        self
    }

    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] != C64::new(0.0, 0.0) {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self { entries }
    }

    pub fn to_dense(&self, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// Largest `|a_pq - conj(a_qp)|` after summing duplicate entries.
    fn hermitian_deviation(&self) -> f64 {
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for &(i, j, v) in &self.entries {
            *acc.entry((i, j)).or_default() += v;
        }
        acc.iter()
            .map(|(&(i, j), &v)| (v - acc.get(&(j, i)).copied().unwrap_or_default().conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `Re tr(self * m)`
    fn inner(&self, m: &ComplexMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(p, q, v)| (v * m[(q, p)]).re)
            .sum()
    }
}

/// One equality constraint `sum_b Re tr(A_b X_b) = rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct Constraint {
    pub blocks: Vec<(usize, SparseHermitian)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub objective: Vec<ComplexMatrix>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SdpOptions {
    pub max_iters: usize,
    /// Relative primal and dual infeasibility at which to stop.
    pub feas_tol: f64,
    /// Relative duality gap at which to stop.
    pub gap_tol: f64,
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            feas_tol: 1e-10,
            gap_tol: 1e-9,
            step_fraction: 0.97,
        }
    }
}

/// Bounds a returned solution must meet even when the tighter targets of
/// [`SdpOptions`] stall.
pub const ACCEPT_GAP: f64 = 1e-7;
pub const ACCEPT_RESIDUAL: f64 = 1e-8;
pub const ACCEPT_MIN_EIG: f64 = -1e-9;
const DIVERGENCE: f64 = 1e12;

#[derive(Debug, Clone, Serialize)]
pub struct SdpSolution {
    pub x: Vec<ComplexMatrix>,
    pub y: Vec<f64>,
    pub s: Vec<ComplexMatrix>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `max(|primal - dual|, <X, S>)`
    pub gap: f64,
    /// `||A(X) - b||_2`
    pub primal_residual: f64,
    /// `||A^T y - C - S||_F` over all blocks
    pub dual_residual: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

impl SdpProblem {
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.block_sizes.len() {
            return Err(Error::InvalidConfig(format!(
                "{} objective blocks for {} variable blocks",
                self.objective.len(),
                self.block_sizes.len()
            )));
        }
        for (b, (c, &n)) in self.objective.iter().zip(&self.block_sizes).enumerate() {
            if c.rows() != n || c.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "objective block {b} is not {n}x{n}"
                )));
            }
            let dev = c.hermitian_deviation();
            if dev > 1e-10 * c.max_abs().max(1.0) {
                return Err(Error::NotHermitian { deviation: dev });
            }
        }
        let dof: usize = self.block_sizes.iter().map(|n| n * n).sum();
        if self.constraints.len() > dof {
            return Err(Error::InvalidConfig(format!(
                "{} constraints exceed {dof} degrees of freedom",
                self.constraints.len()
            )));
        }
        for (i, con) in self.constraints.iter().enumerate() {
            for (b, a) in &con.blocks {
                let Some(&n) = self.block_sizes.get(*b) else {
                    return Err(Error::InvalidConfig(format!(
                        "constraint {i} names block {b}"
                    )));
                };
                if a.entries.iter().any(|&(p, q, _)| p >= n || q >= n) {
                    return Err(Error::InvalidConfig(format!(
                        "constraint {i} indexes outside block {b}"
                    )));
                }
                let dev = a.hermitian_deviation();
                if dev > 1e-12 * a.entries.iter().map(|e| e.2.norm()).fold(1.0, f64::max) {
                    return Err(Error::NotHermitian { deviation: dev });
                }
            }
        }
        Ok(())
    }

    fn apply_a(&self, x: &[ComplexMatrix]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.blocks.iter().map(|(b, a)| a.inner(&x[*b])).sum())
            .collect()
    }

    fn apply_at(&self, y: &[f64]) -> Vec<ComplexMatrix> {
        let mut out: Vec<ComplexMatrix> = self
            .block_sizes
            .iter()
            .map(|&n| ComplexMatrix::zeros(n, n))
            .collect();
        for (con, &yi) in self.constraints.iter().zip(y) {
            for (b, a) in &con.blocks {
                for &(p, q, v) in &a.entries {
                    out[*b][(p, q)] += v * yi;
                }
            }
        }
        out
    }

    /// `H_ij = sum_b Re tr(A_ib W_b A_jb W_b)`.
    fn schur(&self, w: &[ComplexMatrix]) -> Vec<f64> {
        let m = self.constraints.len();
        let mut h = vec![0.0; m * m];
        // per block, the constraints touching it
        let mut by_block: Vec<Vec<(usize, &SparseHermitian)>> =
            vec![Vec::new(); self.block_sizes.len()];
        for (i, con) in self.constraints.iter().enumerate() {
            for (b, a) in &con.blocks {
                by_block[*b].push((i, a));
            }
        }
        for (b, list) in by_block.iter().enumerate() {
            let n = w[b].rows();
            let wre: Vec<f64> = w[b].as_slice().iter().map(|z| z.re).collect();
            let wim: Vec<f64> = w[b].as_slice().iter().map(|z| z.im).collect();
            // lower triangle of t = W A_j W = sum_{(p,q,v)} v W[:,p] W[q,:], which is Hermitian
            let mut tre = vec![0.0; n * n];
            let mut tim = vec![0.0; n * n];
            for (jj, &(j, aj)) in list.iter().enumerate() {
                tre.fill(0.0);
                tim.fill(0.0);
                for &(p, q, v) in &aj.entries {
                    let (qre, qim) = (&wre[q * n..(q + 1) * n], &wim[q * n..(q + 1) * n]);
                    for r in 0..n {
                        let f = v * C64::new(wre[r * n + p], wim[r * n + p]);
                        let (rre, rim) = (
                            &mut tre[r * n..r * n + r + 1],
                            &mut tim[r * n..r * n + r + 1],
                        );
                        for c in 0..=r {
                            rre[c] += f.re * qre[c] - f.im * qim[c];
                            rim[c] += f.re * qim[c] + f.im * qre[c];
                        }
                    }
                }
                let t_at = |r: usize, c: usize| {
                    if r >= c {
                        C64::new(tre[r * n + c], tim[r * n + c])
                    } else {
                        C64::new(tre[c * n + r], -tim[c * n + r])
                    }
                };
                for &(i, ai) in &list[..=jj] {
                    let val: f64 = ai
                        .entries
                        .iter()
                        .map(|&(p, q, v)| (v * t_at(q, p)).re)
                        .sum();
                    h[i * m + j] += val;
                    if i != j {
                        h[j * m + i] += val;
                    }
                }
            }
        }
        h
    }
}

/// Cholesky factor of the Schur complement, retried with growing diagonal
/// regularization when round-off makes it numerically indefinite.
fn factor_schur(h: Vec<f64>, m: usize) -> Option<Llt<f64>> {
    let scale = (0..m)
        .map(|i| h[i * m + i])
        .fold(0.0f64, f64::max)
        .max(1e-300);
    [0.0, 1e-14, 1e-12, 1e-10].into_iter().find_map(|k| {
        let a = Mat::from_fn(m, m, |i, j| {
            h[i * m + j] + if i == j { k * scale } else { 0.0 }
        });
        a.llt(Side::Lower).ok()
    })
}

fn chol_solve(l: &Llt<f64>, rhs: &[f64]) -> Vec<f64> {
    let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = l.solve(&b);
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}

/// Largest `a` with `D + a * delta >= 0` for positive diagonal `D`.
fn max_step(d: &[f64], delta: &ComplexMatrix) -> Result<f64> {
    let n = d.len();
    let p = ComplexMatrix::from_fn(n, n, |i, j| delta[(i, j)] / (d[i] * d[j]).sqrt());
    let lo = eig_hermitian(&p.hermitian_part())?.min_eigenvalue();
    Ok(if lo >= 0.0 { f64::INFINITY } else { -1.0 / lo })
}

/// Hermitian Cholesky test with strictly positive real pivots.
fn is_positive_definite(m: &ComplexMatrix) -> bool {
    let n = m.rows();
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = v / d;
        }
    }
    true
}

/// Backtracks from `alpha` until every block of `m + alpha * dm` passes a
/// Cholesky test. Step lengths come from eigenvalues that are only accurate
/// in absolute terms, which can overshoot along nearly singular directions.
fn safe_step(
    m: &[ComplexMatrix],
    dm: &[ComplexMatrix],
    mut alpha: f64,
) -> Option<(f64, Vec<ComplexMatrix>)> {
    while alpha >= 1e-12 {
        let next: Vec<ComplexMatrix> = m
            .iter()
            .zip(dm)
            .map(|(a, d)| {
                let mut t = a.clone();
                t.add_scaled(d, alpha);
                t.hermitian_part()
            })
            .collect();
        if next.iter().all(is_positive_definite) {
            return Some((alpha, next));
        }
        alpha *= 0.8;
    }
    None
}

fn frob_sq(m: &ComplexMatrix) -> f64 {
    m.as_slice().iter().map(|z| z.norm_sqr()).sum()
}

struct Scaling {
    g: ComplexMatrix,
    w: ComplexMatrix,
    d: Vec<f64>,
}

fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn from_na(m: &DMatrix<C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// With `X = Lx Lx^dagger`, `S = Ls Ls^dagger` and `Ls^dagger Lx = U D V^dagger`,
/// `G = Lx V D^{-1/2}` scales both `X` and `S` to `D`. Singular values of the
/// factor product keep relative accuracy where `eig(X^{1/2} S X^{1/2})` does
/// not.
fn nt_scaling(x: &ComplexMatrix, s: &ComplexMatrix) -> Result<Scaling> {
    let not_pd = || Error::SolverFailure {
        iterations: 0,
        reason: "iterate is not positive definite".into(),
    };
    let lx = Cholesky::new(to_na(x)).ok_or_else(not_pd)?.unpack();
    let ls = Cholesky::new(to_na(s)).ok_or_else(not_pd)?.unpack();
    let svd = (ls.adjoint() * &lx).svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let d: Vec<f64> = svd.singular_values.iter().map(|&v| v.max(1e-300)).collect();
    let mut v = v_t.adjoint();
    for (j, dj) in d.iter().enumerate() {
        v.column_mut(j).scale_mut(1.0 / dj.sqrt());
    }
    let g = from_na(&(lx * v));
    let w = (&g * &g.adjoint()).hermitian_part();
    Ok(Scaling { g, w, d })
}

struct Snapshot {
    x: Vec<ComplexMatrix>,
    y: Vec<f64>,
    s: Vec<ComplexMatrix>,
    pobj: f64,
    dobj: f64,
    gap: f64,
    res_p: f64,
    res_d: f64,
    scale: f64,
    merit: f64,
    iterations: usize,
}

/// Returns the best iterate seen if it meets the acceptance bounds.
fn conclude(
    p: &SdpProblem,
    best: Option<Snapshot>,
    iterations: usize,
    why: &str,
    accept: &dyn Fn(&Snapshot) -> bool,
) -> Result<SdpSolution> {
    let Some(mut snap) = best else {
        return Err(Error::SolverFailure {
            iterations,
            reason: why.to_string(),
        });
    };
    // Round-off in the last steps can leave eigenvalues of order -1e-9 on a
    // nearly singular X; project them away and re-derive what they affect.
    let mut min_eig = f64::INFINITY;
    let mut clipped = false;
    for xb in snap.x.iter_mut() {
        let e = eig_hermitian(xb)?;
        if e.min_eigenvalue() < 0.0 {
            *xb = e.apply_fn(|l| l.max(0.0));
            clipped = true;
        }
        min_eig = min_eig.min(eig_hermitian(xb)?.min_eigenvalue());
    }
    if clipped {
        let ax = p.apply_a(&snap.x);
        snap.res_p = p
            .constraints
            .iter()
            .zip(&ax)
            .map(|(c, a)| (c.rhs - a).powi(2))
            .sum::<f64>()
            .sqrt();
        snap.pobj = p
            .objective
            .iter()
            .zip(&snap.x)
            .map(|(c, x)| c.inner_re(x))
            .sum();
        snap.gap = snap.gap.max((snap.pobj - snap.dobj).abs());
    }
    if !accept(&snap) || min_eig < ACCEPT_MIN_EIG {
        return Err(Error::SolverFailure {
            iterations,
            reason: format!(
                "{}best iterate has gap {:.3e}, primal residual {:.3e}, dual residual {:.3e}, min eigenvalue {min_eig:.3e}",
                if why.is_empty() { String::new() } else { format!("{why}; ") },
                snap.gap,
                snap.res_p,
                snap.res_d
            ),
        });
    }
    Ok(SdpSolution {
        x: snap.x,
        y: snap.y.iter().map(|v| -v).collect(),
        s: snap.s,
        primal_objective: snap.pobj,
        dual_objective: snap.dobj,
        gap: snap.gap,
        primal_residual: snap.res_p,
        dual_residual: snap.res_d,
        min_eigenvalue: min_eig,
        iterations: snap.iterations,
    })
}

/// Strictly feasible starting point: `x` positive definite with `A(x) = b`,
/// and `y` with `sum_i y_i A_i - C` positive definite.
#[derive(Debug, Clone)]
pub struct SdpStart {
    pub x: Vec<ComplexMatrix>,
    pub y: Vec<f64>,
}

/// Solves `p` with default options.
pub fn sdp_solve(p: &SdpProblem) -> Result<SdpSolution> {
    sdp_solve_with(p, &SdpOptions::default())
}

pub fn sdp_solve_with(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    solve(p, opts, None)
}

/// Like [`sdp_solve_with`], starting from `start` instead of a scaled identity.
pub fn sdp_solve_from(p: &SdpProblem, opts: &SdpOptions, start: &SdpStart) -> Result<SdpSolution> {
    if start.x.len() != p.block_sizes.len() || start.y.len() != p.constraints.len() {
        return Err(Error::DimensionMismatch(
            "starting point does not match the problem".into(),
        ));
    }
    solve(p, opts, Some(start))
}

fn solve(p: &SdpProblem, opts: &SdpOptions, start: Option<&SdpStart>) -> Result<SdpSolution> {
    p.validate()?;
    let nb = p.block_sizes.len();
    let m = p.constraints.len();
    let n_tot: usize = p.block_sizes.iter().sum();
    let b: Vec<f64> = p.constraints.iter().map(|c| c.rhs).collect();
    let cmin: Vec<ComplexMatrix> = p.objective.iter().map(|c| c.scale(-1.0)).collect();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = p.objective.iter().map(frob_sq).sum::<f64>().sqrt();

    let a_norms: Vec<f64> = p
        .constraints
        .iter()
        .map(|c| {
            c.blocks
                .iter()
                .map(|(_, a)| a.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let sqrt_n = (n_tot as f64).sqrt();
    let mut xi = 10f64.max(sqrt_n);
    for (bi, an) in b.iter().zip(&a_norms) {
        xi = xi.max(n_tot as f64 * (1.0 + bi.abs()) / (1.0 + an));
    }
    let eta = 10f64
        .max(sqrt_n)
        .max(c_norm)
        .max(a_norms.iter().cloned().fold(0.0, f64::max));

    let (mut x, mut y, mut s) = match start {
        Some(st) => {
            let aty = p.apply_at(&st.y);
            let s0: Vec<ComplexMatrix> = (0..nb)
                .map(|k| (&aty[k] - &p.objective[k]).hermitian_part())
                .collect();
            if !st.x.iter().chain(&s0).all(is_positive_definite) {
                return Err(Error::InvalidConfig(
                    "starting point is not strictly feasible".into(),
                ));
            }
            (st.x.clone(), st.y.iter().map(|v| -v).collect(), s0)
        }
        None => (
            p.block_sizes
                .iter()
                .map(|&n| ComplexMatrix::identity(n).scale(xi))
                .collect(),
            vec![0.0; m],
            p.block_sizes
                .iter()
                .map(|&n| ComplexMatrix::identity(n).scale(eta))
                .collect(),
        ),
    };

    let accept = |snap: &Snapshot| {
        snap.gap <= ACCEPT_GAP * snap.scale
            && snap.res_p <= ACCEPT_RESIDUAL * (1.0 + b_norm)
            && snap.res_d <= ACCEPT_RESIDUAL * (1.0 + c_norm)
    };
    let mut best: Option<Snapshot> = None;
    let mut iterations = 0;
    loop {
        let ax = p.apply_a(&x);
        let r_p: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let aty = p.apply_at(&y);
        let r_d: Vec<ComplexMatrix> = (0..nb).map(|k| &(&cmin[k] - &s[k]) - &aty[k]).collect();
        let pobj: f64 = (0..nb).map(|k| p.objective[k].inner_re(&x[k])).sum();
        // internal iterates solve the minimization of -C; y is negated on output
        let dobj: f64 = -b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum::<f64>();
        let comp: f64 = (0..nb).map(|k| x[k].inner_re(&s[k])).sum();
        let res_p = r_p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let res_d = r_d.iter().map(frob_sq).sum::<f64>().sqrt();
        let rel_p = res_p / (1.0 + b_norm);
        let rel_d = res_d / (1.0 + c_norm);
        let scale = 1.0 + pobj.abs() + dobj.abs();
        let rel_gap = (pobj - dobj).abs().max(comp.abs()) / scale;
        if !(rel_p.is_finite() && rel_d.is_finite() && rel_gap.is_finite()) {
            return conclude(p, best, iterations, "numerical breakdown", &accept);
        }
        let merit = (rel_p / opts.feas_tol)
            .max(rel_d / opts.feas_tol)
            .max(rel_gap / opts.gap_tol);
        if best.as_ref().is_none_or(|bs| merit < bs.merit) {
            best = Some(Snapshot {
                x: x.clone(),
                y: y.clone(),
                s: s.clone(),
                pobj,
                dobj,
                gap: (pobj - dobj).abs().max(comp.abs()),
                res_p,
                res_d,
                scale,
                merit,
                iterations,
            });
        }
        if merit <= 1.0 {
            return conclude(p, best, iterations, "", &accept);
        }
        let x_norm = x.iter().map(frob_sq).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if x_norm > DIVERGENCE || y_norm > DIVERGENCE {
            return Err(Error::Infeasible(format!(
                "iterates diverged (|X| = {x_norm:.3e}, |y| = {y_norm:.3e})"
            )));
        }
        if iterations >= opts.max_iters {
            return conclude(p, best, iterations, "iteration cap reached", &accept);
        }
        // a merit that keeps rising after the gap closed means the Schur
        // system has run out of precision
        if best
            .as_ref()
            .is_some_and(|bs| iterations >= bs.iterations + 4)
        {
            return conclude(p, best, iterations, "stalled", &accept);
        }
        iterations += 1;

        let mu = comp / n_tot as f64;
        let Ok(scal) = (0..nb)
            .map(|k| nt_scaling(&x[k], &s[k]))
            .collect::<Result<Vec<Scaling>>>()
        else {
            return conclude(
                p,
                best,
                iterations,
                "iterate left the positive definite cone",
                &accept,
            );
        };
        let w: Vec<ComplexMatrix> = scal.iter().map(|sc| sc.w.clone()).collect();
        let Some(l) = factor_schur(p.schur(&w), m) else {
            return conclude(
                p,
                best,
                iterations,
                "Schur complement not positive definite",
                &accept,
            );
        };
        let wrw: Vec<ComplexMatrix> = (0..nb).map(|k| w[k].sandwich(&r_d[k])).collect();
        let base: Vec<f64> = r_p
            .iter()
            .zip(p.apply_a(&wrw))
            .map(|(a, b)| a + b)
            .collect();

        // returns (dy, dS, dX~, dS~)
        let solve = |rt: &[ComplexMatrix]| -> (
            Vec<f64>,
            Vec<ComplexMatrix>,
            Vec<ComplexMatrix>,
            Vec<ComplexMatrix>,
        ) {
            let grg: Vec<ComplexMatrix> = (0..nb).map(|k| scal[k].g.sandwich(&rt[k])).collect();
            let rhs: Vec<f64> = base
                .iter()
                .zip(p.apply_a(&grg))
                .map(|(a, b)| a - b)
                .collect();
            let dy = chol_solve(&l, &rhs);
            let at_dy = p.apply_at(&dy);
            let ds: Vec<ComplexMatrix> = (0..nb)
                .map(|k| (&r_d[k] - &at_dy[k]).hermitian_part())
                .collect();
            let dst: Vec<ComplexMatrix> = (0..nb)
                .map(|k| scal[k].g.adjoint().sandwich(&ds[k]).hermitian_part())
                .collect();
            let dxt: Vec<ComplexMatrix> = (0..nb).map(|k| &rt[k] - &dst[k]).collect();
            (dy, ds, dxt, dst)
        };
        let steps = |dxt: &[ComplexMatrix], dst: &[ComplexMatrix]| -> Result<(f64, f64)> {
            let mut a = f64::INFINITY;
            let mut bb = f64::INFINITY;
            for k in 0..nb {
                a = a.min(max_step(&scal[k].d, &dxt[k])?);
                bb = bb.min(max_step(&scal[k].d, &dst[k])?);
            }
            Ok((a, bb))
        };

        // predictor
        let rt_aff: Vec<ComplexMatrix> = scal
            .iter()
            .map(|sc| ComplexMatrix::diag_real(&sc.d).scale(-1.0))
            .collect();
        let (_, _, dxt_a, dst_a) = solve(&rt_aff);
        let (ap, bp) = steps(&dxt_a, &dst_a)?;
        let (ap, bp) = (ap.min(1.0), bp.min(1.0));
        let mut mu_aff = 0.0;
        for k in 0..nb {
            let dm = ComplexMatrix::diag_real(&scal[k].d);
            let mut xa = dm.clone();
            xa.add_scaled(&dxt_a[k], ap);
            let mut sa = dm;
            sa.add_scaled(&dst_a[k], bp);
            mu_aff += xa.inner_re(&sa);
        }
        mu_aff /= n_tot as f64;
        let sigma = (mu_aff / mu).max(0.0).powi(3).min(1.0);

        // corrector
        let rt: Vec<ComplexMatrix> = (0..nb)
            .map(|k| {
                let d = &scal[k].d;
                let n = d.len();
                let cross = &(&dxt_a[k] * &dst_a[k]) + &(&dst_a[k] * &dxt_a[k]);
                ComplexMatrix::from_fn(n, n, |i, j| {
                    let mut r = -cross[(i, j)];
                    if i == j {
                        r += C64::new(2.0 * sigma * mu - 2.0 * d[i] * d[i], 0.0);
                    }
                    r / (d[i] + d[j])
                })
            })
            .collect();
        let (dy, ds, dxt, dst) = solve(&rt);
        let (amax, bmax) = steps(&dxt, &dst)?;
        let dx: Vec<ComplexMatrix> = (0..nb).map(|k| scal[k].g.sandwich(&dxt[k])).collect();
        let Some((_, x_next)) = safe_step(&x, &dx, (opts.step_fraction * amax).min(1.0)) else {
            return conclude(p, best, iterations, "step length vanished", &accept);
        };
        let Some((beta, s_next)) = safe_step(&s, &ds, (opts.step_fraction * bmax).min(1.0)) else {
            return conclude(p, best, iterations, "step length vanished", &accept);
        };
        x = x_next;
        s = s_next;
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += beta * di;
        }
    }
}
