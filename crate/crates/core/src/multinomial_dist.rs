//! Exact law of a sum of independent categorical unit vectors.
//!
//! A categorical vector `X_i` equals `e_l` with probability `p_i[l]`. The
//! law of `sum_i X_i` lives on the partition lattice `Π^k_m` and is computed
//! by folding the vectors in one at a time, growing the lattice from
//! `Π^k_i` to `Π^k_{i+1}` at each step.
//!
//! Arithmetic is generic over [`Scalar`]: `f64` for large experiments and
//! [`Rational`] for certification. The caller picks the mode through the
//! type parameter.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_traits::{One, Signed, Zero};

use crate::game_model::{composition_rank, lattice_size, AnonymousGame, Compositions, MixedProfile};
use crate::numeric::{to_f64, Rational};
use crate::{Error, Result};

/// Input vectors may deviate from unit sum by this much in float mode.
pub const INPUT_SUM_TOL: f64 = 1e-9;
/// Output mass must sum to one within this in float mode.
pub const OUTPUT_SUM_TOL: f64 = 1e-12;

pub trait Scalar:
    Clone + Debug + PartialOrd + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Send + Sync
{
    fn from_rational(r: &Rational) -> Self;
    fn from_utility(game: &AnonymousGame, player: usize, strategy: usize, rank: usize) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn half(&self) -> Self;
    /// Whether `total` is an acceptable sum for a probability vector.
    fn is_unit_sum(total: &Self) -> bool;
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        to_f64(r)
    }

    fn from_utility(game: &AnonymousGame, player: usize, strategy: usize, rank: usize) -> Self {
        game.utility_f64(player, strategy, rank)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn half(&self) -> Self {
        self * 0.5
    }

    fn is_unit_sum(total: &Self) -> bool {
        (total - 1.0).abs() <= INPUT_SUM_TOL
    }
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn from_utility(game: &AnonymousGame, player: usize, strategy: usize, rank: usize) -> Self {
        game.utility(player, strategy, rank).clone()
    }

    fn to_f64(&self) -> f64 {
        to_f64(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn half(&self) -> Self {
        self / Rational::from_integer(2.into())
    }

    fn is_unit_sum(total: &Self) -> bool {
        total.is_one()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SumDistribution<T> {
    m: u32,
    k: usize,
    mass: Vec<T>,
}

impl<T: Scalar> SumDistribution<T> {
    /// Point mass at the all-zero partition of `Π^k_0`.
    pub fn identity(k: usize) -> Self {
        SumDistribution { m: 0, k, mass: vec![T::one()] }
    }

    pub fn from_mass(m: u32, k: usize, mass: Vec<T>) -> Result<Self> {
        let expected = lattice_size(m, k) as usize;
        if mass.len() != expected {
            return Err(Error::DimensionMismatch(format!("lattice Π^{k}_{m} has {expected} cells, got {}", mass.len())));
        }
        Ok(SumDistribution { m, k, mass })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Mass indexed by partition rank.
    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    pub fn total(&self) -> T {
        self.mass.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    /// Adds one more independent vector, moving from `Π^k_m` to `Π^k_{m+1}`.
    pub fn convolve(&self, p: &[T]) -> Self {
        let k = self.k;
        let m = self.m + 1;
        let mut out = vec![T::zero(); lattice_size(m, k) as usize];
        for (rank, x) in Compositions::new(self.m, k).enumerate() {
            let w = &self.mass[rank];
            if w.is_zero() {
                continue;
            }
            let mut y = x;
            for (l, pl) in p.iter().enumerate() {
                if pl.is_zero() {
                    continue;
                }
                y[l] += 1;
                let r = composition_rank(&y);
                out[r] = out[r].clone() + w.clone() * pl.clone();
                y[l] -= 1;
            }
        }
        SumDistribution { m, k, mass: out }
    }

    /// CSV rows `partition_rank,mass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("partition_rank,mass\n");
        for (i, w) in self.mass.iter().enumerate() {
            s.push_str(&format!("{i},{}\n", w.to_f64()));
        }
        s
    }
}

fn validate_vector<T: Scalar>(v: &[T], k: usize) -> Result<()> {
    if v.len() != k {
        return Err(Error::DimensionMismatch(format!("vector of length {} in dimension {k}", v.len())));
    }
    if v.iter().any(|x| *x < T::zero()) {
        return Err(Error::InvalidDistribution("negative entry".into()));
    }
    let total = v.iter().cloned().fold(T::zero(), |a, b| a + b);
    if !T::is_unit_sum(&total) {
        return Err(Error::InvalidDistribution(format!("entries sum to {:?}", total)));
    }
    Ok(())
}

/// Law of `sum_i X_i` with `X_i ~ vectors[i]`, independent.
pub fn sum_distribution<T: Scalar>(k: usize, vectors: &[Vec<T>]) -> Result<SumDistribution<T>> {
    for v in vectors {
        validate_vector(v, k)?;
    }
    Ok(sum_distribution_unchecked(k, vectors.iter().map(|v| v.as_slice())))
}

pub(crate) fn sum_distribution_unchecked<'a, T: Scalar + 'a>(
    k: usize,
    vectors: impl IntoIterator<Item = &'a [T]>,
) -> SumDistribution<T> {
    vectors.into_iter().fold(SumDistribution::identity(k), |acc, v| acc.convolve(v))
}

pub fn tv_distance<T: Scalar>(p: &SumDistribution<T>, q: &SumDistribution<T>) -> Result<T> {
    if p.m != q.m || p.k != q.k {
        return Err(Error::DimensionMismatch(format!(
            "Π^{}_{} versus Π^{}_{}",
            p.k, p.m, q.k, q.m
        )));
    }
    let sum = p
        .mass
        .iter()
        .zip(&q.mass)
        .map(|(a, b)| (a.clone() - b.clone()).abs())
        .fold(T::zero(), |a, b| a + b);
    Ok(sum.half())
}

/// Expected payoff of `player` for pure `strategy` when the other players'
/// strategies sum to `others`.
pub fn expected_utility_from<T: Scalar>(
    game: &AnonymousGame,
    player: usize,
    strategy: usize,
    others: &SumDistribution<T>,
) -> Result<T> {
    if others.k != game.k() || others.m as usize + 1 != game.n() {
        return Err(Error::DimensionMismatch(format!(
            "opponent distribution over Π^{}_{} for a game with n={}, k={}",
            others.k,
            others.m,
            game.n(),
            game.k()
        )));
    }
    Ok(others
        .mass
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .map(|(r, w)| T::from_utility(game, player, strategy, r) * w.clone())
        .fold(T::zero(), |a, b| a + b))
}

pub fn expected_utility<T: Scalar>(
    game: &AnonymousGame,
    player: usize,
    strategy: usize,
    others: &[Vec<T>],
) -> Result<T> {
    if others.len() + 1 != game.n() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} opponent strategies, got {}",
            game.n() - 1,
            others.len()
        )));
    }
    let dist = sum_distribution(game.k(), others)?;
    expected_utility_from(game, player, strategy, &dist)
}

/// Per-player payoffs and gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport<T> {
    /// `payoffs[p][j]`: expected payoff of pure `j` for player `p`.
    pub payoffs: Vec<Vec<T>>,
    /// Best pure payoff minus the payoff of the player's own mixture.
    pub regret: Vec<T>,
    /// Best pure payoff minus the worst pure payoff in the player's support.
    pub support_gap: Vec<T>,
    pub max_regret: T,
    pub max_support_gap: T,
}

impl<T: Scalar> RegretReport<T> {
    /// ε-Nash: every support gap is at most `eps`.
    pub fn is_eps_nash(&self, eps: &T) -> bool {
        self.max_support_gap <= *eps
    }
}

fn max_of<T: Scalar>(it: impl Iterator<Item = T>) -> T {
    it.fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Gaps of each player given its payoff vector and mixed strategy.
pub(crate) fn gaps<T: Scalar>(payoffs: &[T], mix: &[T]) -> (T, T) {
    let best = payoffs.iter().cloned().fold(payoffs[0].clone(), |a, b| if b > a { b } else { a });
    let current = payoffs
        .iter()
        .zip(mix)
        .map(|(u, w)| u.clone() * w.clone())
        .fold(T::zero(), |a, b| a + b);
    let support_gap = max_of(
        payoffs
            .iter()
            .zip(mix)
            .filter(|(_, w)| !w.is_zero())
            .map(|(u, _)| best.clone() - u.clone()),
    );
    (best - current, support_gap)
}

pub fn regret_profile_with<T: Scalar>(game: &AnonymousGame, probs: &[Vec<T>]) -> Result<RegretReport<T>> {
    let n = game.n();
    let k = game.k();
    if probs.len() != n {
        return Err(Error::DimensionMismatch(format!("profile has {} players, game has {n}", probs.len())));
    }
    for v in probs {
        validate_vector(v, k)?;
    }
    let mut payoffs = Vec::with_capacity(n);
    let mut regret = Vec::with_capacity(n);
    let mut support_gap = Vec::with_capacity(n);
    for p in 0..n {
        let others = sum_distribution_unchecked(
            k,
            probs.iter().enumerate().filter(|(j, _)| *j != p).map(|(_, v)| v.as_slice()),
        );
        let u: Vec<T> = (0..k)
            .map(|i| expected_utility_from(game, p, i, &others))
            .collect::<Result<_>>()?;
        let (r, g) = gaps(&u, &probs[p]);
        payoffs.push(u);
        regret.push(r);
        support_gap.push(g);
    }
    let max_regret = max_of(regret.iter().cloned());
    let max_support_gap = max_of(support_gap.iter().cloned());
    Ok(RegretReport { payoffs, regret, support_gap, max_regret, max_support_gap })
}

/// Exact regret report for a profile.
pub fn regret_profile(game: &AnonymousGame, profile: &MixedProfile) -> Result<RegretReport<Rational>> {
    if profile.k() != game.k() {
        return Err(Error::DimensionMismatch(format!("profile has k={}, game has k={}", profile.k(), game.k())));
    }
    regret_profile_with(game, profile.probs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{enumerate_partitions, random_game, random_profile};
    use crate::numeric::rat;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn anti_coordination() -> AnonymousGame {
        AnonymousGame::from_fn(2, 2, |_, i, x| if x.counts()[1 - i] == 1 { rat(1, 1) } else { rat(0, 1) }).unwrap()
    }

    fn mass_of(d: &SumDistribution<f64>, counts: &[u32]) -> f64 {
        d.mass()[composition_rank(counts)]
    }

    #[test]
    fn small_sums() {
        let d = sum_distribution(2, &[vec![0.3, 0.7]]).unwrap();
        assert_eq!(mass_of(&d, &[1, 0]), 0.3);
        assert_eq!(mass_of(&d, &[0, 1]), 0.7);

        let d = sum_distribution(2, &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(mass_of(&d, &[2, 0]), 0.25);
        assert_eq!(mass_of(&d, &[1, 1]), 0.5);
        assert_eq!(mass_of(&d, &[0, 2]), 0.25);

        let d = sum_distribution::<f64>(3, &[]).unwrap();
        assert_eq!(d.mass(), &[1.0]);
        assert_eq!(d.m(), 0);
    }

    #[test]
    fn rejects_invalid_vectors() {
        assert!(matches!(sum_distribution(2, &[vec![0.5, 0.4]]), Err(Error::InvalidDistribution(_))));
        assert!(matches!(sum_distribution(2, &[vec![1.2, -0.2]]), Err(Error::InvalidDistribution(_))));
        assert!(matches!(sum_distribution(2, &[vec![rat(1, 3), rat(1, 3)]]), Err(Error::InvalidDistribution(_))));
        assert!(matches!(sum_distribution(3, &[vec![0.5, 0.5]]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn tv_examples() {
        let p = sum_distribution(2, &[vec![0.3, 0.7]]).unwrap();
        let q = sum_distribution(2, &[vec![0.5, 0.5]]).unwrap();
        assert!((tv_distance(&p, &q).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        let a = sum_distribution(2, &[vec![1.0, 0.0]]).unwrap();
        let b = sum_distribution(2, &[vec![0.0, 1.0]]).unwrap();
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        let c = sum_distribution(2, &[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(tv_distance(&a, &c).is_err());
    }

    #[test]
    fn expected_utility_examples() {
        let g = anti_coordination();
        let pure2 = vec![vec![rat(0, 1), rat(1, 1)]];
        assert_eq!(expected_utility(&g, 0, 0, &pure2).unwrap(), rat(1, 1));
        let half = vec![vec![rat(1, 2), rat(1, 2)]];
        assert_eq!(expected_utility(&g, 0, 0, &half).unwrap(), rat(1, 2));
        assert!(expected_utility(&g, 0, 0, &[half[0].clone(), half[0].clone()]).is_err());

        let c = AnonymousGame::from_fn(3, 3, |_, _, _| rat(2, 7)).unwrap();
        let others = vec![vec![rat(1, 5), rat(3, 5), rat(1, 5)], vec![rat(1, 1), rat(0, 1), rat(0, 1)]];
        for i in 0..3 {
            assert_eq!(expected_utility(&c, 1, i, &others).unwrap(), rat(2, 7));
        }
    }

    #[test]
    fn regret_examples() {
        let g = anti_coordination();
        let half = MixedProfile::new(2, vec![vec![rat(1, 2), rat(1, 2)]; 2]).unwrap();
        let r = regret_profile(&g, &half).unwrap();
        assert!(r.regret.iter().all(Zero::is_zero));
        assert!(r.support_gap.iter().all(Zero::is_zero));

        let pure1 = MixedProfile::new(2, vec![vec![rat(1, 1), rat(0, 1)]; 2]).unwrap();
        let r = regret_profile(&g, &pure1).unwrap();
        assert_eq!(r.support_gap, vec![rat(1, 1), rat(1, 1)]);
        assert_eq!(r.max_support_gap, rat(1, 1));
        assert!(!r.is_eps_nash(&rat(1, 2)));
        assert!(r.is_eps_nash(&rat(1, 1)));

        let c = AnonymousGame::from_fn(3, 2, |_, _, _| rat(1, 3)).unwrap();
        let prof = random_profile(3, 2, 4);
        let r = regret_profile(&c, &prof).unwrap();
        assert!(r.max_regret.is_zero() && r.max_support_gap.is_zero());

        let wrong = random_profile(2, 2, 4);
        assert!(regret_profile(&c, &wrong).is_err());
    }

    #[test]
    fn float_and_exact_regret_agree() {
        let g = random_game(4, 3, 9).unwrap();
        let prof = random_profile(4, 3, 10);
        let exact = regret_profile(&g, &prof).unwrap();
        let float = regret_profile_with(&g, &prof.to_f64()).unwrap();
        for (a, b) in exact.regret.iter().zip(&float.regret) {
            assert!((to_f64(a) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_mass_sums_to_one() {
        for seed in 0..5 {
            let prof = random_profile(6, 3, seed);
            let d = sum_distribution(3, prof.probs()).unwrap();
            assert!(d.total().is_one());
        }
    }

    #[test]
    fn monte_carlo_agrees_within_three_sigma() {
        let prof = random_profile(5, 3, 77).to_f64();
        let d = sum_distribution(3, &prof).unwrap();
        let samples = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
        for _ in 0..samples {
            let mut x = vec![0u32; 3];
            for p in &prof {
                let u: f64 = rng.gen();
                let l = if u < p[0] { 0 } else if u < p[0] + p[1] { 1 } else { 2 };
                x[l] += 1;
            }
            *counts.entry(x).or_default() += 1;
        }
        for part in enumerate_partitions(5, 3) {
            let q = mass_of(&d, part.counts());
            let emp = *counts.get(part.counts()).unwrap_or(&0) as f64 / samples as f64;
            let sigma = (q * (1.0 - q) / samples as f64).sqrt();
            // cells with tiny mass get a one-count floor
            assert!((emp - q).abs() <= 3.0 * sigma + 1.0 / samples as f64, "cell {:?}: {emp} vs {q}", part.counts());
        }
    }

    fn vec_strategy(k: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(1u32..100, k).prop_map(|w| {
            let t: u32 = w.iter().sum();
            w.iter().map(|&x| x as f64 / t as f64).collect()
        })
    }

    proptest! {
        #[test]
        fn sum_is_order_invariant(vs in proptest::collection::vec(vec_strategy(3), 1..6), rot in 0usize..6) {
            let d1 = sum_distribution(3, &vs).unwrap();
            let mut shuffled = vs.clone();
            let len = shuffled.len();
            shuffled.rotate_left(rot % len);
            shuffled.reverse();
            let d2 = sum_distribution(3, &shuffled).unwrap();
            for (a, b) in d1.mass().iter().zip(d2.mass()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert!((d1.total() - 1.0).abs() < OUTPUT_SUM_TOL);
        }

        #[test]
        fn tv_is_a_metric(a in proptest::collection::vec(vec_strategy(2), 3),
                          b in proptest::collection::vec(vec_strategy(2), 3),
                          c in proptest::collection::vec(vec_strategy(2), 3)) {
            let (p, q, r) = (sum_distribution(2, &a).unwrap(), sum_distribution(2, &b).unwrap(), sum_distribution(2, &c).unwrap());
            let pq = tv_distance(&p, &q).unwrap();
            prop_assert!((pq - tv_distance(&q, &p).unwrap()).abs() < 1e-15);
            prop_assert!(pq <= tv_distance(&p, &r).unwrap() + tv_distance(&r, &q).unwrap() + 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
        }
    }
}
