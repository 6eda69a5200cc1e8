use serde::Serialize;

use super::state::DensityMatrix;
use super::VALIDITY_TOL;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Subsystem, C64};

/// A CPTP map in Kraus form, `rho -> sum_k K_k rho K_k^dagger`.
#[derive(Debug, Clone, Serialize)]
pub struct KrausChannel {
    pub d_in: usize,
    pub d_out: usize,
    pub kraus_ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validates shapes and trace preservation.
    pub fn new(kraus_ops: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = kraus_ops.first() else {
            return Err(Error::InvalidChannel("empty Kraus set".into()));
        };
        let (d_out, d_in) = (first.rows(), first.cols());
        let mut sum = ComplexMatrix::zeros(d_in, d_in);
        for (k, op) in kraus_ops.iter().enumerate() {
            if op.rows() != d_out || op.cols() != d_in {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operator {k} is {}x{}, expected {d_out}x{d_in}",
                    op.rows(),
                    op.cols()
                )));
            }
            sum.add_scaled(&(&op.adjoint() * op), 1.0);
        }
        let dev = (&sum - &ComplexMatrix::identity(d_in)).max_abs();
        if dev > VALIDITY_TOL {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (deviation {dev:.3e})"
            )));
        }
        Ok(Self {
            d_in,
            d_out,
            kraus_ops,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d_in: d,
            d_out: d,
            kraus_ops: vec![ComplexMatrix::identity(d)],
        }
    }

    /// Single-Kraus channel of a unitary (or isometry).
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// `rho -> tr(rho) I / d`, from the `d^2` Weyl operators scaled by `1/d`.
    pub fn fully_depolarizing(d: usize) -> Result<Self> {
        let w = super::weyl_pair(d)?;
        let mut ops = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                ops.push(super::encoding_unitary(&w, a, b)?.scale(1.0 / d as f64));
            }
        }
        Self::new(ops)
    }

    /// Action on a bare operator of dimension `d_in`.
    pub fn apply_operator(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus_ops {
            out.add_scaled(&k.sandwich(rho), 1.0);
        }
        out
    }
}

/// Applies `ch` to one factor of a bipartite state, leaving the other
/// untouched. Single systems (`dim_b = 1`) use `side = First`.
pub fn apply_channel(
    ch: &KrausChannel,
    rho: &DensityMatrix,
    side: Subsystem,
) -> Result<DensityMatrix> {
    let addressed = match side {
        Subsystem::First => rho.dim_a,
        Subsystem::Second => rho.dim_b,
    };
    if addressed != ch.d_in {
        return Err(Error::DimensionMismatch(format!(
            "channel input dimension {} does not match subsystem dimension {addressed}",
            ch.d_in
        )));
    }
    let (new_a, new_b) = match side {
        Subsystem::First => (ch.d_out, rho.dim_b),
        Subsystem::Second => (rho.dim_a, ch.d_out),
    };
    let mut out = ComplexMatrix::zeros(new_a * new_b, new_a * new_b);
    for k in &ch.kraus_ops {
        let term = match side {
            Subsystem::First => conjugate_first(k, &rho.mat, rho.dim_b),
            Subsystem::Second => conjugate_second(k, &rho.mat, rho.dim_a),
        };
        out.add_scaled(&term, 1.0);
    }
    Ok(DensityMatrix::from_parts(
        out.hermitian_part(),
        new_a,
        new_b,
    ))
}

/// `(K (x) I) m (K (x) I)^dagger` without forming the Kronecker product.
fn conjugate_first(k: &ComplexMatrix, m: &ComplexMatrix, db: usize) -> ComplexMatrix {
    let (d_out, d_in) = (k.rows(), k.cols());
    let n_in = d_in * db;
    let mut t = ComplexMatrix::zeros(d_out * db, n_in);
    for i in 0..d_out {
        for a in 0..d_in {
            let kia = k[(i, a)];
            if kia == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..db {
                let src = m.row(a * db + b);
                let dst = &mut t.as_mut_slice()[(i * db + b) * n_in..(i * db + b + 1) * n_in];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += kia * s;
                }
            }
        }
    }
    let mut out = ComplexMatrix::zeros(d_out * db, d_out * db);
    for j in 0..d_out {
        for a in 0..d_in {
            let kja = k[(j, a)].conj();
            if kja == C64::new(0.0, 0.0) {
                continue;
            }
            for r in 0..d_out * db {
                for b in 0..db {
                    let v = t[(r, a * db + b)];
                    out[(r, j * db + b)] += v * kja;
                }
            }
        }
    }
    out
}

/// `(I (x) K) m (I (x) K)^dagger` without forming the Kronecker product.
fn conjugate_second(k: &ComplexMatrix, m: &ComplexMatrix, da: usize) -> ComplexMatrix {
    let (d_out, d_in) = (k.rows(), k.cols());
    let n_in = da * d_in;
    let n_out = da * d_out;
    let mut t = ComplexMatrix::zeros(n_out, n_in);
    for a in 0..da {
        for i in 0..d_out {
            for b in 0..d_in {
                let kib = k[(i, b)];
                if kib == C64::new(0.0, 0.0) {
                    continue;
                }
                let src = m.row(a * d_in + b);
                let dst = &mut t.as_mut_slice()[(a * d_out + i) * n_in..(a * d_out + i + 1) * n_in];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += kib * s;
                }
            }
        }
    }
    let mut out = ComplexMatrix::zeros(n_out, n_out);
    for r in 0..n_out {
        for a in 0..da {
            for j in 0..d_out {
                let mut acc = C64::new(0.0, 0.0);
                for b in 0..d_in {
                    acc += t[(r, a * d_in + b)] * k[(j, b)].conj();
                }
                out[(r, a * d_out + j)] = acc;
            }
        }
    }
    out
}
