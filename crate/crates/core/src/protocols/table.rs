use serde::Serialize;

use super::game::Scenario;
use crate::error::{Error, Result};

pub const NONNEG_TOL: f64 = 1e-10;
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Conditional distributions `p(c | x, y, z)`; EAPM tables have `n_y = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationTable {
    pub scenario: Scenario,
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub n_c: usize,
    data: Vec<f64>,
}

impl CorrelationTable {
    pub fn zeros(scenario: Scenario, n_x: usize, n_y: usize, n_z: usize, n_c: usize) -> Self {
        Self {
            scenario,
            n_x,
            n_y,
            n_z,
            n_c,
            data: vec![0.0; n_x * n_y * n_z * n_c],
        }
    }

    /// Builds a table from per-`(x, y)` blocks laid out as `[z][c]`.
    pub(crate) fn from_blocks(
        scenario: Scenario,
        n_x: usize,
        n_y: usize,
        n_z: usize,
        n_c: usize,
        blocks: Vec<Vec<f64>>,
    ) -> Self {
        debug_assert_eq!(blocks.len(), n_x * n_y);
        let mut data = Vec::with_capacity(n_x * n_y * n_z * n_c);
        for b in blocks {
            debug_assert_eq!(b.len(), n_z * n_c);
            data.extend(b);
        }
        Self {
            scenario,
            n_x,
            n_y,
            n_z,
            n_c,
            data,
        }
    }

    #[inline]
    fn idx(&self, x: usize, y: usize, z: usize, c: usize) -> usize {
        ((x * self.n_y + y) * self.n_z + z) * self.n_c + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize, c: usize) -> f64 {
        self.data[self.idx(x, y, z, c)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, c: usize, p: f64) {
        let i = self.idx(x, y, z, c);
        self.data[i] = p;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        (self.n_x, self.n_y, self.n_z, self.n_c) == (other.n_x, other.n_y, other.n_z, other.n_c)
    }

    /// Largest entrywise difference; `None` if the shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        self.same_shape(other).then(|| {
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }

    /// Checks nonnegativity and per-input normalization.
    pub fn validate(&self) -> Result<()> {
        for x in 0..self.n_x {
            for y in 0..self.n_y {
                for z in 0..self.n_z {
                    let mut sum = 0.0;
                    for c in 0..self.n_c {
                        let p = self.get(x, y, z, c);
                        if p < -NONNEG_TOL {
                            return Err(Error::InvalidModel(format!(
                                "p({c}|{x},{y},{z}) = {p:.3e} is negative"
                            )));
                        }
                        sum += p;
                    }
                    if (sum - 1.0).abs() > NORMALIZATION_TOL {
                        return Err(Error::InvalidModel(format!(
                            "p(.|{x},{y},{z}) sums to {sum:.12}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
