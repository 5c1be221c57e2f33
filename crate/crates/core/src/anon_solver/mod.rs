//! Approximation scheme for anonymous games.
//!
//! Every mixed strategy is restricted to the quantized set `K` of
//! distributions whose entries are multiples of `1/(2^k z)`. The search
//! guesses how many players use each quantized strategy (a composition
//! `theta` of `n` over `K`), connects player `i` to strategy `σ` when `σ` is
//! a `δ`-best response for `i` against `theta` minus one copy of `σ`, and
//! asks an integral max-flow whether every player can be placed. Any
//! profile found this way is re-certified with exact regret.

mod flow;

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::game_model::{lattice_size, AnonymousGame, Compositions, MixedProfile};
use crate::guard::Guard;
use crate::multinomial_dist::{expected_utility_from, regret_profile, SumDistribution};
use crate::numeric::Rational;
use crate::{Error, Result};

pub use flow::max_flow_assign;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedStrategySet {
    pub k: usize,
    pub z: u64,
    pub strategies: Vec<Vec<Rational>>,
}

impl QuantizedStrategySet {
    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    /// Grid denominator `2^k z`.
    pub fn units(&self) -> u64 {
        (1u64 << self.k) * self.z
    }
}

/// `C(2^k z + k - 1, k - 1)`.
pub fn quantized_count(k: usize, z: u64) -> u128 {
    lattice_size(((1u64 << k) * z) as u32, k)
}

pub fn enumerate_quantized_strategies(k: usize, z: u64, guard: &Guard) -> Result<QuantizedStrategySet> {
    if k < 2 || z < 1 {
        return Err(Error::InvalidParameter(format!("need k >= 2 and z >= 1, got k={k}, z={z}")));
    }
    if k >= 32 {
        return Err(Error::InvalidParameter(format!("k={k} is too large")));
    }
    guard.check("quantized strategy set", quantized_count(k, z))?;
    let units = (1u64 << k) * z;
    let den = BigInt::from(units);
    let strategies = Compositions::new(units as u32, k)
        .map(|c| c.into_iter().map(|x| Rational::new(BigInt::from(x), den.clone())).collect())
        .collect();
    Ok(QuantizedStrategySet { k, z, strategies })
}

/// Number of players on each quantized strategy.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThetaPartition {
    pub counts: Vec<u32>,
}

impl ThetaPartition {
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }
}

pub fn theta_count(n: usize, strategies: usize) -> u128 {
    lattice_size(n as u32, strategies)
}

/// All compositions of `n` over `strategies` slots, ascending lexicographic.
pub fn enumerate_theta(n: usize, strategies: usize) -> impl Iterator<Item = ThetaPartition> {
    Compositions::new(n as u32, strategies).map(|counts| ThetaPartition { counts })
}

/// Sum law of the strategies in `theta`, with one copy of `skip` removed.
fn opponent_distribution(set: &QuantizedStrategySet, theta: &ThetaPartition, skip: usize) -> SumDistribution<Rational> {
    let mut dist = SumDistribution::identity(set.k);
    for (s, &c) in theta.counts.iter().enumerate() {
        let copies = if s == skip { c - 1 } else { c };
        for _ in 0..copies {
            dist = dist.convolve(&set.strategies[s]);
        }
    }
    dist
}

/// Edges `(player, σ)` with `theta[σ] > 0` where every pure strategy in the
/// support of `σ` is within `delta` of the best pure reply.
pub fn best_response_edges(
    game: &AnonymousGame,
    set: &QuantizedStrategySet,
    theta: &ThetaPartition,
    delta: &Rational,
) -> Result<Vec<(usize, usize)>> {
    if theta.counts.len() != set.len() {
        return Err(Error::DimensionMismatch(format!("theta has {} slots, K has {}", theta.counts.len(), set.len())));
    }
    if theta.total() as usize != game.n() {
        return Err(Error::InvalidParameter(format!("theta sums to {}, game has {} players", theta.total(), game.n())));
    }
    if set.k != game.k() {
        return Err(Error::DimensionMismatch(format!("K is over {} strategies, game has {}", set.k, game.k())));
    }
    let mut edges = Vec::new();
    for (s, &c) in theta.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let others = opponent_distribution(set, theta, s);
        let sigma = &set.strategies[s];
        for player in 0..game.n() {
            let payoffs: Vec<Rational> = (0..game.k())
                .map(|i| expected_utility_from(game, player, i, &others))
                .collect::<Result<_>>()?;
            let best = payoffs.iter().max().expect("k >= 2");
            let ok = payoffs
                .iter()
                .zip(sigma)
                .filter(|(_, w)| !w.is_zero())
                .all(|(u, _)| best - u <= *delta);
            if ok {
                edges.push((player, s));
            }
        }
    }
    Ok(edges)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PtasOutcome {
    pub profile: MixedProfile,
    /// Exact ε-Nash support gap of `profile`.
    pub support_gap: Rational,
    /// Exact expectation regret of `profile`.
    pub regret: Rational,
    /// Whether `support_gap <= ε`.
    pub certified: bool,
    pub theta: ThetaPartition,
    pub z: u64,
    pub thetas_examined: u128,
}

fn profile_from(set: &QuantizedStrategySet, assignment: &[usize]) -> Result<MixedProfile> {
    MixedProfile::new(set.k, assignment.iter().map(|&s| set.strategies[s].clone()).collect())
}

/// Players fill the slots of `theta` in index order.
fn naive_assignment(theta: &ThetaPartition) -> Vec<usize> {
    theta
        .counts
        .iter()
        .enumerate()
        .flat_map(|(s, &c)| std::iter::repeat_n(s, c as usize))
        .collect()
}

/// Searches every `theta` in lexicographic order and returns the first
/// profile whose exact support gap is at most `eps`. If none exists at this
/// `z`, returns the smallest-gap profile among the naive fillings of every
/// `theta`, with `certified = false`.
pub fn ptas_solve(game: &AnonymousGame, eps: &Rational, z: u64, guard: &Guard) -> Result<PtasOutcome> {
    if eps <= &Rational::zero() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    let set = enumerate_quantized_strategies(game.k(), z, guard)?;
    let count = theta_count(game.n(), set.len());
    guard.check("theta partitions", count)?;
    let thetas: Vec<ThetaPartition> = enumerate_theta(game.n(), set.len()).collect();

    let hit = thetas.par_iter().enumerate().find_map_first(|(idx, theta)| {
        let edges = match best_response_edges(game, &set, theta, eps) {
            Ok(e) => e,
            Err(e) => return Some(Err(e)),
        };
        let assignment = max_flow_assign(&edges, &theta.counts, game.n())?;
        let outcome = (|| {
            let profile = profile_from(&set, &assignment)?;
            let report = regret_profile(game, &profile)?;
            Ok(PtasOutcome {
                certified: report.max_support_gap <= *eps,
                support_gap: report.max_support_gap,
                regret: report.max_regret,
                profile,
                theta: theta.clone(),
                z,
                thetas_examined: idx as u128 + 1,
            })
        })();
        match outcome {
            Ok(o) if !o.certified => Some(Err(Error::Internal(format!(
                "flow assignment failed certification with gap {}",
                o.support_gap
            )))),
            other => Some(other),
        }
    });
    if let Some(found) = hit {
        return found;
    }

    let best = thetas
        .par_iter()
        .enumerate()
        .map(|(idx, theta)| -> Result<(Rational, usize)> {
            let profile = profile_from(&set, &naive_assignment(theta))?;
            Ok((regret_profile(game, &profile)?.max_support_gap, idx))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min()
        .ok_or_else(|| Error::Internal("no theta partitions".into()))?;
    let theta = thetas[best.1].clone();
    let profile = profile_from(&set, &naive_assignment(&theta))?;
    let report = regret_profile(game, &profile)?;
    Ok(PtasOutcome {
        certified: false,
        support_gap: report.max_support_gap,
        regret: report.max_regret,
        profile,
        theta,
        z,
        thetas_examined: count,
    })
}

/// Runs [`ptas_solve`] at `z, 2z, 4z, ...` until a certified profile is
/// found, the budget runs out, or the next `z` trips the guard. Returns the
/// last outcome.
pub fn ptas_solve_escalating(
    game: &AnonymousGame,
    eps: &Rational,
    z: u64,
    budget: Duration,
    guard: &Guard,
) -> Result<PtasOutcome> {
    let start = Instant::now();
    let mut z = z;
    let mut last = ptas_solve(game, eps, z, guard)?;
    while !last.certified && start.elapsed() < budget {
        z = z.saturating_mul(2);
        match ptas_solve(game, eps, z, guard) {
            Ok(o) => last = o,
            Err(Error::GuardExceeded { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(last)
}

/// `ceil(1 + n (k + log2 z) + log2(1/u_min))`.
pub fn utility_bit_bound(n: usize, z: u64, k: usize, u_min: &Rational) -> u64 {
    let inv = (Rational::from_integer(1.into()) / u_min).to_f64().unwrap_or(f64::INFINITY);
    (1.0 + n as f64 * (k as f64 + (z as f64).log2()) + inv.log2()).ceil() as u64
}

/// Exhaustive scan of every profile on the `1/g` grid; returns the first
/// profile with the smallest exact support gap.
pub fn brute_force_oracle(game: &AnonymousGame, g: u32, guard: &Guard) -> Result<(MixedProfile, Rational)> {
    if g == 0 {
        return Err(Error::InvalidParameter("grid resolution must be positive".into()));
    }
    let per_player = lattice_size(g, game.k());
    let total = per_player.checked_pow(game.n() as u32).unwrap_or(u128::MAX);
    Guard::new(guard.cap.min(10_000_000)).check("oracle grid", total)?;
    let den = BigInt::from(g);
    let grid: Vec<Vec<Rational>> = Compositions::new(g, game.k())
        .map(|c| c.into_iter().map(|x| Rational::new(BigInt::from(x), den.clone())).collect())
        .collect();
    let n = game.n();
    let mut digits = vec![0usize; n];
    let mut best: Option<(MixedProfile, Rational)> = None;
    loop {
        let profile = MixedProfile::new(game.k(), digits.iter().map(|&d| grid[d].clone()).collect())?;
        let gap = regret_profile(game, &profile)?.max_support_gap;
        if best.as_ref().is_none_or(|(_, b)| gap < *b) {
            let done = gap.is_zero();
            best = Some((profile, gap));
            if done {
                break;
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(best.expect("grid is non-empty"));
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < grid.len() {
                break;
            }
            digits[i] = 0;
        }
    }
    Ok(best.expect("grid is non-empty"))
}
