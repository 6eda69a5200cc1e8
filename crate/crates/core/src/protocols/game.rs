use serde::Serialize;

use crate::error::{Error, Result};
use crate::qudit::{check_prime, modp};

/// Which family of games is played.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// One sender with input `x = (x0, x1)`.
    Eapm,
    /// Two senders with inputs `x` and `y`, measured jointly.
    Symmetric,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Eapm => "eapm",
            Scenario::Symmetric => "symmetric",
        }
    }
}

/// A game with its win table materialized as residues.
///
/// Inputs are flattened as `x = x0 * d + x1` (likewise `y`). For EAPM games
/// `n_y = 1`. Settings run over `z = 0..=d`, and `z = d` is the
/// computational-basis setting.
#[derive(Debug, Clone, Serialize)]
pub struct GameSpec {
    pub d: usize,
    pub scenario: Scenario,
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub n_c: usize,
    /// `table[(z * n_x + x) * n_y + y] = w_z(x, y)`
    table: Vec<usize>,
}

impl GameSpec {
    /// Builds a game from an explicit win function and checks balancedness.
    pub fn from_fn(
        d: usize,
        scenario: Scenario,
        n_x: usize,
        n_y: usize,
        n_z: usize,
        n_c: usize,
        w: impl Fn(usize, usize, usize) -> usize,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(n_z * n_x * n_y);
        for z in 0..n_z {
            for x in 0..n_x {
                for y in 0..n_y {
                    let c = w(x, y, z);
                    if c >= n_c {
                        return Err(Error::InvalidGame(format!(
                            "w_{z}({x},{y}) = {c} outside 0..{n_c}"
                        )));
                    }
                    table.push(c);
                }
            }
        }
        let g = Self {
            d,
            scenario,
            n_x,
            n_y,
            n_z,
            n_c,
            table,
        };
        g.check_balanced()?;
        Ok(g)
    }

    #[inline]
    pub fn win(&self, x: usize, y: usize, z: usize) -> usize {
        self.table[(z * self.n_x + x) * self.n_y + y]
    }

    /// Splits a flattened input into `(x0, x1)`.
    pub fn split(&self, x: usize) -> (usize, usize) {
        (x / self.d, x % self.d)
    }

    /// Every outcome is hit equally often by `x -> w_z(x, y)` for each fixed
    /// `(y, z)`.
    pub fn check_balanced(&self) -> Result<()> {
        if !self.n_x.is_multiple_of(self.n_c) {
            return Err(Error::InvalidGame(format!(
                "{} inputs cannot split evenly over {} outcomes",
                self.n_x, self.n_c
            )));
        }
        let want = self.n_x / self.n_c;
        for z in 0..self.n_z {
            for y in 0..self.n_y {
                let mut counts = vec![0usize; self.n_c];
                for x in 0..self.n_x {
                    counts[self.win(x, y, z)] += 1;
                }
                if counts.iter().any(|&k| k != want) {
                    return Err(Error::InvalidGame(format!(
                        "w_{z}(., y={y}) is unbalanced: counts {counts:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The standard game of each scenario in prime dimension `d`.
///
/// Odd `d`: `w_z = x1 - 2 z x0` (EAPM) and `w_z = x1 + y1 - 2z(x0 - y0)`
/// (symmetric) for `z < d`, with `w_d = x0` and `w_d = x0 - y0`.
///
/// `d = 2`, settings paired with `X(x)X`, `XZ(x)XZ`, `Z(x)Z`:
/// EAPM `(x1, x0 + x1, x0)`; symmetric `(x1 + y1, x0 + x1 + y0 + y1, x0 + y0)`.
pub fn make_game(d: usize, scenario: Scenario) -> Result<GameSpec> {
    check_prime(d)?;
    let n_x = d * d;
    let n_y = match scenario {
        Scenario::Eapm => 1,
        Scenario::Symmetric => d * d,
    };
    let w = move |x: usize, y: usize, z: usize| -> usize {
        let (x0, x1) = ((x / d) as i64, (x % d) as i64);
        let (y0, y1) = match scenario {
            Scenario::Eapm => (0, 0),
            Scenario::Symmetric => ((y / d) as i64, (y % d) as i64),
        };
        let zi = z as i64;
        let v = if d == 2 {
            match z {
                0 => x1 + y1,
                1 => x0 + x1 + y0 + y1,
                _ => x0 + y0,
            }
        } else if z == d {
            x0 - y0
        } else {
            x1 + y1 - 2 * zi * (x0 - y0)
        };
        modp(v, d)
    };
    GameSpec::from_fn(d, scenario, n_x, n_y, d + 1, d, w)
}
