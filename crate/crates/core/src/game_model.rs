//! Anonymous games, the partition lattice and mixed profiles.
//!
//! A partition of `m` over `k` strategies is a weak composition
//! `(x_1, ..., x_k)` with `sum x_i = m`. Partitions are ranked by their
//! position in ascending lexicographic order with `x_1` most significant;
//! that rank indexes utility tables and distribution vectors everywhere in
//! the crate.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::numeric::{binomial, format_rational, parse_rational, rat_from_f64, to_f64, Rational};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    counts: Vec<u32>,
}

impl Partition {
    pub fn new(counts: Vec<u32>) -> Self {
        Partition { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }
}

impl From<Vec<u32>> for Partition {
    fn from(counts: Vec<u32>) -> Self {
        Partition::new(counts)
    }
}

/// Number of partitions of `m` into `k` parts, `C(m+k-1, k-1)`.
pub fn lattice_size(m: u32, k: usize) -> u128 {
    if k == 0 {
        return u128::from(m == 0);
    }
    binomial(m as u64 + k as u64 - 1, k as u64 - 1)
}

/// Lazy ascending-lexicographic enumeration of weak compositions of `m`
/// into `k` parts.
#[derive(Clone, Debug)]
pub struct Compositions {
    current: Option<Vec<u32>>,
}

impl Compositions {
    pub fn new(m: u32, k: usize) -> Self {
        if k == 0 {
            return Compositions { current: if m == 0 { Some(Vec::new()) } else { None } };
        }
        let mut first = vec![0; k];
        first[k - 1] = m;
        Compositions { current: Some(first) }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let out = self.current.take()?;
        let k = out.len();
        if k >= 2 {
            // Successor: bump the rightmost position before the tail that can
            // grow, then push everything left in the tail to the last slot.
            let mut next = out.clone();
            let tail = next[k - 1];
            if tail > 0 {
                next[k - 2] += 1;
                next[k - 1] = tail - 1;
                self.current = Some(next);
            } else {
                // find rightmost i < k-1 with next[i] > 0 and i > 0
                let mut i = k - 2;
                loop {
                    if next[i] > 0 && i > 0 {
                        let moved = next[i];
                        next[i] = 0;
                        next[i - 1] += 1;
                        next[k - 1] = moved - 1;
                        self.current = Some(next);
                        break;
                    }
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                }
            }
        }
        Some(out)
    }
}

pub fn enumerate_partitions(m: u32, k: usize) -> Vec<Partition> {
    Compositions::new(m, k).map(Partition::new).collect()
}

/// Rank of a composition in ascending lexicographic order.
pub fn composition_rank(counts: &[u32]) -> usize {
    let k = counts.len();
    let mut remaining: u32 = counts.iter().sum();
    let mut rank: u128 = 0;
    for (i, &x) in counts.iter().enumerate() {
        let slots_after = k - i - 1;
        if slots_after == 0 {
            break;
        }
        for v in 0..x {
            rank += lattice_size(remaining - v, slots_after);
        }
        remaining -= x;
    }
    rank as usize
}

pub fn partition_rank(p: &Partition, m: u32, k: usize) -> Result<usize> {
    if p.k() != k {
        return Err(Error::InvalidPartition(format!("expected {k} parts, found {}", p.k())));
    }
    if p.total() != m {
        return Err(Error::InvalidPartition(format!("entries sum to {}, expected {m}", p.total())));
    }
    Ok(composition_rank(&p.counts))
}

/// An anonymous game: every player's payoff depends on their own strategy
/// and on how many of the other `n-1` players chose each strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct AnonymousGame {
    n: usize,
    k: usize,
    lattice: usize,
    utilities: Vec<Rational>,
    utilities_f64: Vec<f64>,
}

impl AnonymousGame {
    /// `utilities[player][strategy][partition_rank]`.
    pub fn new(n: usize, k: usize, utilities: Vec<Vec<Vec<Rational>>>) -> Result<Self> {
        if n < 2 || k < 2 {
            return Err(Error::InvalidDimensions(format!("need n >= 2 and k >= 2, got n={n}, k={k}")));
        }
        let lattice = lattice_size((n - 1) as u32, k) as usize;
        if utilities.len() != n {
            return Err(Error::TableSizeMismatch { expected: n, found: utilities.len() });
        }
        let mut flat = Vec::with_capacity(n * k * lattice);
        for per_player in utilities {
            if per_player.len() != k {
                return Err(Error::TableSizeMismatch { expected: k, found: per_player.len() });
            }
            for per_strategy in per_player {
                if per_strategy.len() != lattice {
                    return Err(Error::TableSizeMismatch { expected: lattice, found: per_strategy.len() });
                }
                for u in per_strategy {
                    if u.is_negative() || u > Rational::one() {
                        return Err(Error::UtilityOutOfRange(format_rational(&u)));
                    }
                    flat.push(u);
                }
            }
        }
        let utilities_f64 = flat.iter().map(to_f64).collect();
        Ok(AnonymousGame { n, k, lattice, utilities: flat, utilities_f64 })
    }

    /// Game where every payoff is given by `f(player, strategy, partition)`.
    pub fn from_fn(n: usize, k: usize, mut f: impl FnMut(usize, usize, &Partition) -> Rational) -> Result<Self> {
        let parts = enumerate_partitions((n.max(1) - 1) as u32, k);
        let table = (0..n)
            .map(|p| (0..k).map(|i| parts.iter().map(|x| f(p, i, x)).collect()).collect())
            .collect();
        AnonymousGame::new(n, k, table)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `|Π^k_{n-1}|`, the number of opponent partitions.
    pub fn lattice_len(&self) -> usize {
        self.lattice
    }

    fn index(&self, player: usize, strategy: usize, rank: usize) -> usize {
        (player * self.k + strategy) * self.lattice + rank
    }

    pub fn utility(&self, player: usize, strategy: usize, rank: usize) -> &Rational {
        &self.utilities[self.index(player, strategy, rank)]
    }

    pub fn utility_f64(&self, player: usize, strategy: usize, rank: usize) -> f64 {
        self.utilities_f64[self.index(player, strategy, rank)]
    }

    pub fn utilities(&self) -> impl Iterator<Item = &Rational> {
        self.utilities.iter()
    }

    /// Smallest non-zero payoff, if any.
    pub fn min_nonzero_utility(&self) -> Option<&Rational> {
        self.utilities.iter().filter(|u| !u.is_zero()).min()
    }

    pub fn to_json(&self) -> Value {
        let table: Vec<Vec<Vec<String>>> = (0..self.n)
            .map(|p| {
                (0..self.k)
                    .map(|i| (0..self.lattice).map(|r| format_rational(self.utility(p, i, r))).collect())
                    .collect()
            })
            .collect();
        json!({ "n": self.n, "k": self.k, "utilities": table })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let n = read_usize(value, "n")?;
        let k = read_usize(value, "k")?;
        if n < 2 || k < 2 {
            return Err(Error::InvalidDimensions(format!("need n >= 2 and k >= 2, got n={n}, k={k}")));
        }
        let players = value
            .get("utilities")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Malformed("missing utilities array".into()))?;
        let mut table = Vec::with_capacity(players.len());
        for per_player in players {
            let per_player = per_player
                .as_array()
                .ok_or_else(|| Error::Malformed("utilities[player] is not an array".into()))?;
            let mut rows = Vec::with_capacity(per_player.len());
            for per_strategy in per_player {
                let per_strategy = per_strategy
                    .as_array()
                    .ok_or_else(|| Error::Malformed("utilities[player][strategy] is not an array".into()))?;
                rows.push(per_strategy.iter().map(parse_number).collect::<Result<Vec<_>>>()?);
            }
            table.push(rows);
        }
        AnonymousGame::new(n, k, table)
    }
}

pub fn parse_game(bytes: &[u8]) -> Result<AnonymousGame> {
    let value: Value = serde_json::from_slice(bytes)?;
    AnonymousGame::from_json(&value)
}

/// Canonical compact JSON followed by a newline.
pub fn serialize_game(game: &AnonymousGame) -> Vec<u8> {
    let mut out = serde_json::to_vec(&game.to_json()).expect("json values always serialize");
    out.push(b'\n');
    out
}

/// Utilities drawn uniformly from `{0, 1/2^53, ..., 1}` with a ChaCha8
/// generator, which is the float64 grid on `[0,1]` held exactly.
pub fn random_game(n: usize, k: usize, seed: u64) -> Result<AnonymousGame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let den = BigInt::from(1u64 << 53);
    AnonymousGame::from_fn(n, k, |_, _, _| {
        let num = rng.gen_range(0..=(1u64 << 53));
        Rational::new(BigInt::from(num), den.clone())
    })
}

/// One mixed strategy per player, held exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedProfile {
    k: usize,
    probs: Vec<Vec<Rational>>,
}

impl MixedProfile {
    pub fn new(k: usize, probs: Vec<Vec<Rational>>) -> Result<Self> {
        for (i, p) in probs.iter().enumerate() {
            check_distribution(p, k).map_err(|e| Error::InvalidDistribution(format!("player {i}: {e}")))?;
        }
        Ok(MixedProfile { k, probs })
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn probs(&self) -> &[Vec<Rational>] {
        &self.probs
    }

    pub fn player(&self, i: usize) -> &[Rational] {
        &self.probs[i]
    }

    pub fn into_probs(self) -> Vec<Vec<Rational>> {
        self.probs
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.probs.iter().map(|p| p.iter().map(to_f64).collect()).collect()
    }

    pub fn to_json(&self) -> Value {
        let probs: Vec<Vec<String>> =
            self.probs.iter().map(|p| p.iter().map(format_rational).collect()).collect();
        json!({ "n": self.n(), "k": self.k, "probs": probs })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let n = read_usize(value, "n")?;
        let k = read_usize(value, "k")?;
        let rows = value
            .get("probs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Malformed("missing probs array".into()))?;
        if rows.len() != n {
            return Err(Error::TableSizeMismatch { expected: n, found: rows.len() });
        }
        let probs = rows
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| Error::Malformed("probs[player] is not an array".into()))?
                    .iter()
                    .map(parse_number)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        MixedProfile::new(k, probs)
    }
}

pub fn parse_profile(bytes: &[u8]) -> Result<MixedProfile> {
    let value: Value = serde_json::from_slice(bytes)?;
    MixedProfile::from_json(&value)
}

pub fn serialize_profile(profile: &MixedProfile) -> Vec<u8> {
    let mut out = serde_json::to_vec(&profile.to_json()).expect("json values always serialize");
    out.push(b'\n');
    out
}

/// Random full-support profile: each weight uniform on `1..=1000`,
/// normalized exactly.
pub fn random_profile(n: usize, k: usize, seed: u64) -> MixedProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs = (0..n)
        .map(|_| {
            let w: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=1000)).collect();
            let total: u64 = w.iter().sum();
            w.iter().map(|&x| Rational::new(BigInt::from(x), BigInt::from(total))).collect()
        })
        .collect();
    MixedProfile { k, probs }
}

pub fn check_distribution(p: &[Rational], k: usize) -> Result<()> {
    if p.len() != k {
        return Err(Error::DimensionMismatch(format!("expected {k} entries, found {}", p.len())));
    }
    if let Some(x) = p.iter().find(|x| x.is_negative()) {
        return Err(Error::InvalidDistribution(format!("negative entry {x}")));
    }
    let total: Rational = p.iter().sum();
    if !total.is_one() {
        return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
    }
    Ok(())
}

fn read_usize(value: &Value, key: &str) -> Result<usize> {
    value
        .get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Malformed(format!("missing or non-integer field {key:?}")))
}

/// A JSON number (read exactly as a float64) or a `"num/den"` string.
pub fn parse_number(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rational::from_integer(BigInt::from(i)))
            } else {
                rat_from_f64(n.as_f64().ok_or_else(|| Error::Malformed(format!("bad number {n}")))?)
            }
        }
        other => Err(Error::Malformed(format!("expected number or \"num/den\" string, found {other}"))),
    }
}
