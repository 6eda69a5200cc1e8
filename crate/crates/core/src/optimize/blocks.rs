//! Exact block updates of the see-saw: best measurement for fixed states,
//! best state for a fixed effective operator.

use super::sdp::{sdp_solve_from, Constraint, SdpOptions, SdpProblem, SdpStart, SparseHermitian};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, fix_phase, ComplexMatrix, C64};
use crate::qudit::{DensityMatrix, Povm};

const HERMITIAN_INPUT_TOL: f64 = 1e-10;

fn check_ops(ops: &[ComplexMatrix]) -> Result<usize> {
    let Some(first) = ops.first() else {
        return Err(Error::InvalidPovm("no score operators".into()));
    };
    let n = first.rows();
    for (c, o) in ops.iter().enumerate() {
        if !o.is_square() || o.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "score operator {c} is {}x{}, expected {n}x{n}",
                o.rows(),
                o.cols()
            )));
        }
        let dev = o.hermitian_deviation();
        if dev > HERMITIAN_INPUT_TOL * o.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
    }
    Ok(n)
}

/// `sum_c Re tr(O_c M_c)`
pub fn povm_value(ops: &[ComplexMatrix], povm: &Povm) -> f64 {
    ops.iter()
        .zip(&povm.effects)
        .map(|(o, m)| o.inner_re(m))
        .sum()
}

/// The measurement maximizing `sum_c tr(O_c M_c)` and the value it attains.
pub fn povm_update(score_ops: &[ComplexMatrix]) -> Result<(Povm, f64)> {
    povm_update_with(score_ops, &SdpOptions::default())
}

pub fn povm_update_with(score_ops: &[ComplexMatrix], opts: &SdpOptions) -> Result<(Povm, f64)> {
    let n = check_ops(score_ops)?;
    let povm = match score_ops.len() {
        1 => Povm::from_parts(vec![ComplexMatrix::identity(n)]),
        2 => binary_update(&score_ops[0], &score_ops[1])?,
        _ => sdp_update(score_ops, n, opts)?,
    };
    let value = povm_value(score_ops, &povm);
    Ok((povm, value))
}

/// `M_0` projects onto the positive eigenspace of `O_0 - O_1`.
fn binary_update(o0: &ComplexMatrix, o1: &ComplexMatrix) -> Result<Povm> {
    let e = eig_hermitian(&(o0 - o1).hermitian_part())?;
    let m0 = e.apply_fn(|l| if l > 0.0 { 1.0 } else { 0.0 });
    let m1 = &ComplexMatrix::identity(o0.rows()) - &m0;
    Ok(Povm::from_parts(vec![
        m0.hermitian_part(),
        m1.hermitian_part(),
    ]))
}

/// Constraints `sum_c M_c = I` over `n_blocks` blocks of size `n`, one per
/// real degree of freedom of a Hermitian matrix.
pub fn completeness_constraints(n: usize, n_blocks: usize) -> Vec<Constraint> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    let all = |a: SparseHermitian| (0..n_blocks).map(|b| (b, a.clone())).collect::<Vec<_>>();
    for p in 0..n {
        out.push(Constraint {
            blocks: all(SparseHermitian::new().diag(p, 1.0)),
            rhs: 1.0,
        });
        for q in p + 1..n {
            out.push(Constraint {
                blocks: all(SparseHermitian::new().pair(p, q, C64::new(h, 0.0))),
                rhs: 0.0,
            });
            out.push(Constraint {
                blocks: all(SparseHermitian::new().pair(p, q, C64::new(0.0, h))),
                rhs: 0.0,
            });
        }
    }
    out
}

fn sdp_update(ops: &[ComplexMatrix], n: usize, opts: &SdpOptions) -> Result<Povm> {
    let scale = ops.iter().map(|o| o.max_abs()).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let problem = SdpProblem {
        block_sizes: vec![n; ops.len()],
        objective: ops
            .iter()
            .map(|o| o.hermitian_part().scale(1.0 / scale))
            .collect(),
        constraints: completeness_constraints(n, ops.len()),
    };
    // M_c = I/k is strictly feasible, and so is Y = t I for t above every
    // top eigenvalue of the scaled O_c.
    let k = ops.len();
    let mut top = f64::NEG_INFINITY;
    for o in &problem.objective {
        top = top.max(eig_hermitian(o)?.max_eigenvalue());
    }
    let t = top.abs() + 1.0;
    let y: Vec<f64> = problem
        .constraints
        .iter()
        .map(|c| if c.rhs != 0.0 { t } else { 0.0 })
        .collect();
    let start = SdpStart {
        x: vec![ComplexMatrix::identity(n).scale(1.0 / k as f64); k],
        y,
    };
    let sol = sdp_solve_from(&problem, opts, &start)?;
    clean_povm(sol.x)
}

/// Clips negative eigenvalues and restores `sum_c M_c = I` exactly by
/// `M_c -> S^{-1/2} M_c S^{-1/2}`.
pub fn clean_povm(effects: Vec<ComplexMatrix>) -> Result<Povm> {
    let n = effects[0].rows();
    let mut clipped = Vec::with_capacity(effects.len());
    let mut sum = ComplexMatrix::zeros(n, n);
    for m in effects {
        let e = eig_hermitian(&m.hermitian_part())?;
        let c = e.apply_fn(|l| l.max(0.0)).hermitian_part();
        sum.add_scaled(&c, 1.0);
        clipped.push(c);
    }
    let es = eig_hermitian(&sum)?;
    if es.min_eigenvalue() <= 0.0 {
        return Err(Error::InvalidPovm("effects do not span the space".into()));
    }
    let inv_sqrt = es.apply_fn(|l| 1.0 / l.sqrt());
    Ok(Povm::from_parts(
        clipped
            .iter()
            .map(|m| inv_sqrt.sandwich(m).hermitian_part())
            .collect(),
    ))
}

/// Top eigenvector of `op` as a pure state, with its eigenvalue. Ties go to the
/// eigenvector the solver lists last (largest eigenvalue), phase-fixed.
pub fn state_update(op: &ComplexMatrix) -> Result<(DensityMatrix, f64)> {
    let (v, value) = top_eigvec(op)?;
    let n = v.len();
    Ok((
        DensityMatrix::from_parts(ComplexMatrix::projector(&v), n, 1),
        value,
    ))
}

pub(crate) fn top_eigvec(op: &ComplexMatrix) -> Result<(Vec<C64>, f64)> {
    let dev = op.hermitian_deviation();
    if dev > HERMITIAN_INPUT_TOL * op.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let e = eig_hermitian(op)?;
    let k = e.dim() - 1;
    let mut v = e.vector(k);
    fix_phase(&mut v);
    Ok((v, e.eigenvalues[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn commuting_case() {
        let ops = [
            ComplexMatrix::diag_real(&[1.0, 0.0]),
            ComplexMatrix::diag_real(&[0.0, 1.0]),
        ];
        let (p, v) = povm_update(&ops).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!(p.effects[0].approx_eq(&ops[0], 1e-12));
        assert!(p.effects[1].approx_eq(&ops[1], 1e-12));
    }

    #[test]
    fn binary_positive_part() {
        let ops = [
            ComplexMatrix::diag_real(&[1.0, -1.0]),
            ComplexMatrix::zeros(2, 2),
        ];
        let (p, v) = povm_update(&ops).unwrap();
        assert!(p.effects[0].approx_eq(&ComplexMatrix::diag_real(&[1.0, 0.0]), 1e-12));
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_outcome_commuting_sdp() {
        let ops = [
            ComplexMatrix::diag_real(&[1.0, 0.0, 0.2]),
            ComplexMatrix::diag_real(&[0.0, 1.0, 0.3]),
            ComplexMatrix::diag_real(&[0.5, 0.0, 0.9]),
        ];
        let (p, v) = povm_update(&ops).unwrap();
        assert!((v - 2.9).abs() < 1e-8, "v={v}");
        Povm::new(p.effects).unwrap();
    }

    #[test]
    fn state_updates() {
        let (s, v) = state_update(&ComplexMatrix::diag_real(&[0.2, 0.9])).unwrap();
        assert!((v - 0.9).abs() < 1e-14);
        assert!((s.mat[(1, 1)].re - 1.0).abs() < 1e-12);
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let (s, v) = state_update(&x).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!(s.mat.approx_eq(
            &ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]),
            1e-12
        ));
        let bad =
            ComplexMatrix::from_fn(2, 2, |i, j| if i < j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(state_update(&bad).is_err());
    }
}
