//! Grid search for approximate equilibria of small normal-form games.
//!
//! With `p` players and `s` strategies each, every mixed strategy whose
//! entries are multiples of `1/U`, `U = ceil(2ps/ε)`, is a candidate. Some
//! grid profile is an ε-approximate equilibrium because rounding an exact
//! equilibrium onto the grid while keeping its zeros moves each payoff by
//! at most ε.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::discretizer::largest_remainder_round;
use crate::game_model::{lattice_size, parse_number, Compositions};
use crate::guard::Guard;
use crate::numeric::{format_rational, rat_int, to_f64, Rational};
use crate::{Error, Result};

/// Margin used by the float pre-screen before the exact check.
const SCREEN_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormGame {
    players: usize,
    strategies: usize,
    /// `utilities[player][profile_rank]`, player 1's digit most significant.
    utilities: Vec<Vec<Rational>>,
    utilities_f64: Vec<Vec<f64>>,
}

impl NormalFormGame {
    pub fn new(players: usize, strategies: usize, utilities: Vec<Vec<Rational>>) -> Result<Self> {
        if players < 1 || strategies < 1 {
            return Err(Error::InvalidDimensions(format!("p={players}, s={strategies}")));
        }
        let cells = strategies
            .checked_pow(players as u32)
            .ok_or_else(|| Error::InvalidDimensions("s^p overflows".into()))?;
        if utilities.len() != players {
            return Err(Error::TableSizeMismatch { expected: players, found: utilities.len() });
        }
        for row in &utilities {
            if row.len() != cells {
                return Err(Error::TableSizeMismatch { expected: cells, found: row.len() });
            }
            if let Some(u) = row.iter().find(|u| u.is_negative() || **u > rat_int(1)) {
                return Err(Error::UtilityOutOfRange(format_rational(u)));
            }
        }
        let utilities_f64 = utilities.iter().map(|r| r.iter().map(to_f64).collect()).collect();
        Ok(NormalFormGame { players, strategies, utilities, utilities_f64 })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn strategies(&self) -> usize {
        self.strategies
    }

    pub fn utility(&self, player: usize, pure: &[usize]) -> &Rational {
        &self.utilities[player][self.profile_rank(pure)]
    }

    pub fn profile_rank(&self, pure: &[usize]) -> usize {
        pure.iter().fold(0, |acc, &d| acc * self.strategies + d)
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Vec<String>> = self.utilities.iter().map(|r| r.iter().map(format_rational).collect()).collect();
        json!({ "p": self.players, "s": self.strategies, "utilities": rows })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let get = |key: &str| {
            v.get(key)
                .and_then(Value::as_u64)
                .map(|x| x as usize)
                .ok_or_else(|| Error::Malformed(format!("missing or non-integer field {key:?}")))
        };
        let (p, s) = (get("p")?, get("s")?);
        let rows = v
            .get("utilities")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Malformed("missing utilities array".into()))?;
        let table = rows
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| Error::Malformed("utilities[player] is not an array".into()))?
                    .iter()
                    .map(parse_number)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        NormalFormGame::new(p, s, table)
    }
}

pub fn parse_nf_game(bytes: &[u8]) -> Result<NormalFormGame> {
    NormalFormGame::from_json(&serde_json::from_slice(bytes)?)
}

pub fn serialize_nf_game(game: &NormalFormGame) -> Vec<u8> {
    let mut out = serde_json::to_vec(&game.to_json()).expect("json values always serialize");
    out.push(b'\n');
    out
}

/// Expected payoff of every pure strategy for every player, by full
/// contraction over the pure profiles.
fn pure_payoffs<T>(game: &NormalFormGame, profile: &[Vec<T>], table: impl Fn(usize, usize) -> T) -> Vec<Vec<T>>
where
    T: Clone + std::ops::Add<Output = T> + std::ops::Mul<Output = T> + Zero + One,
{
    let (p, s) = (game.players, game.strategies);
    let mut out = vec![vec![T::zero(); s]; p];
    let mut digits = vec![0usize; p];
    for rank in 0..s.pow(p as u32) {
        let mut r = rank;
        for d in digits.iter_mut().rev() {
            *d = r % s;
            r /= s;
        }
        for player in 0..p {
            // probability that everyone else plays as in `digits`
            let w = digits
                .iter()
                .enumerate()
                .filter(|(q, _)| *q != player)
                .fold(T::one(), |acc, (q, &d)| acc * profile[q][d].clone());
            if w.is_zero() {
                continue;
            }
            let own = digits[player];
            out[player][own] = out[player][own].clone() + w * table(player, rank);
        }
    }
    out
}

fn check_profile<T>(game: &NormalFormGame, profile: &[Vec<T>]) -> Result<()> {
    if profile.len() != game.players || profile.iter().any(|x| x.len() != game.strategies) {
        return Err(Error::DimensionMismatch(format!(
            "profile must have {} strategies of length {}",
            game.players, game.strategies
        )));
    }
    Ok(())
}

/// Best pure payoff minus current expected payoff, per player.
pub fn nf_regret(game: &NormalFormGame, profile: &[Vec<Rational>]) -> Result<Vec<Rational>> {
    check_profile(game, profile)?;
    for x in profile {
        if x.iter().any(Signed::is_negative) || x.iter().sum::<Rational>() != rat_int(1) {
            return Err(Error::InvalidDistribution("each strategy must be a distribution".into()));
        }
    }
    let payoffs = pure_payoffs(game, profile, |pl, r| game.utilities[pl][r].clone());
    Ok(payoffs
        .iter()
        .zip(profile)
        .map(|(u, x)| {
            let best = u.iter().max().expect("s >= 1").clone();
            let current: Rational = u.iter().zip(x).map(|(a, b)| a * b).sum();
            best - current
        })
        .collect())
}

fn nf_regret_f64(game: &NormalFormGame, profile: &[Vec<f64>]) -> f64 {
    let payoffs = pure_payoffs(game, profile, |pl, r| game.utilities_f64[pl][r]);
    payoffs
        .iter()
        .zip(profile)
        .map(|(u, x)| {
            let best = u.iter().cloned().fold(f64::MIN, f64::max);
            best - u.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `U = ceil(2ps/ε)`; grid entries are multiples of `1/U <= ε/(2ps)`.
pub fn grid_units(players: usize, strategies: usize, eps: &Rational) -> Result<u32> {
    if !eps.is_positive() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    let ratio = rat_int(2 * players as u64 * strategies as u64) / eps;
    let (q, r) = ratio.numer().div_rem(ratio.denom());
    let u = if r.is_zero() { q } else { q + BigInt::from(1) };
    u.to_u32().ok_or_else(|| Error::InvalidParameter("epsilon too small".into()))
}

/// Number of grid profiles: `C(U+s-1, s-1)^p`.
pub fn grid_count(players: usize, strategies: usize, units: u32) -> u128 {
    lattice_size(units, strategies).checked_pow(players as u32).unwrap_or(u128::MAX)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuasiOutcome {
    pub profile: Vec<Vec<Rational>>,
    pub regret: Vec<Rational>,
    pub max_regret: Rational,
    pub units: u32,
    pub examined: u128,
}

/// First grid profile (player 1 most significant, each player's strategies
/// in ascending lexicographic order) with max regret at most `eps`.
pub fn quasi_solve(game: &NormalFormGame, eps: &Rational, guard: &Guard) -> Result<QuasiOutcome> {
    let units = grid_units(game.players, game.strategies, eps)?;
    let total = grid_count(game.players, game.strategies, units);
    guard.check("normal-form grid", total)?;
    let grid: Vec<Vec<u32>> = Compositions::new(units, game.strategies).collect();
    let grid_f64: Vec<Vec<f64>> = grid.iter().map(|c| c.iter().map(|&x| x as f64 / units as f64).collect()).collect();
    let den = BigInt::from(units);
    let eps_f = to_f64(eps);
    let p = game.players;
    let mut digits = vec![0usize; p];
    let mut examined: u128 = 0;
    loop {
        examined += 1;
        let candidate: Vec<Vec<f64>> = digits.iter().map(|&d| grid_f64[d].clone()).collect();
        if nf_regret_f64(game, &candidate) <= eps_f + SCREEN_SLACK {
            let exact: Vec<Vec<Rational>> = digits
                .iter()
                .map(|&d| grid[d].iter().map(|&x| Rational::new(BigInt::from(x), den.clone())).collect())
                .collect();
            let regret = nf_regret(game, &exact)?;
            let max_regret = regret.iter().max().cloned().unwrap_or_else(Rational::zero);
            if max_regret <= *eps {
                return Ok(QuasiOutcome { profile: exact, regret, max_regret, units, examined });
            }
        }
        let mut i = p;
        loop {
            if i == 0 {
                return Err(Error::Internal(format!(
                    "no grid profile within epsilon {eps} after {examined} candidates"
                )));
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < grid.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationReport {
    pub rounded: Vec<Vec<Rational>>,
    pub regret: Rational,
    pub pass: bool,
}

/// Rounds an exact equilibrium onto the `1/U` grid, keeping zeros at zero,
/// and checks that the result is an ε-approximate equilibrium.
pub fn perturbation_check(game: &NormalFormGame, exact_ne: &[Vec<Rational>], eps: &Rational) -> Result<PerturbationReport> {
    let regret = nf_regret(game, exact_ne)?;
    let tol = Rational::new(BigInt::from(1), BigInt::from(1_000_000_000u64));
    if let Some(r) = regret.iter().find(|r| **r > tol) {
        return Err(Error::NotAnEquilibrium(format_rational(r)));
    }
    let units = grid_units(game.players, game.strategies, eps)?;
    let rounded: Vec<Vec<Rational>> = exact_ne.iter().map(|x| largest_remainder_round(x, units as u64)).collect();
    let after = nf_regret(game, &rounded)?;
    let max = after.into_iter().max().unwrap_or_else(Rational::zero);
    Ok(PerturbationReport { pass: max <= *eps, regret: max, rounded })
}
