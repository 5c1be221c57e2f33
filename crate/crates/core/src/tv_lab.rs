//! Numerical checks of discretization error and of the Poisson-type
//! approximation bounds used alongside it.

use std::io::Write;

use rayon::prelude::*;
use statrs::distribution::{Discrete, Poisson};

use crate::discretizer::discretize_profile;
use crate::game_model::{lattice_size, random_profile, MixedProfile};
use crate::guard::Guard;
use crate::multinomial_dist::{sum_distribution, tv_distance, Scalar};
use crate::numeric::{floor_rational_power, to_f64, Rational};
use crate::{Error, Result};

/// Poisson tails are cut once the remaining mass drops below this.
pub const TAIL_MASS: f64 = 1e-12;

pub const CSV_HEADER: &str = "k,z,alpha,n,trial,seed,tv,tv_loo_max";

/// TV between the sum of a profile and the sum of its discretization, and
/// the largest such TV after removing any single player.
pub fn discretization_tv(profile: &MixedProfile, z: u64, alpha: &Rational) -> Result<(f64, f64)> {
    let rounded = discretize_profile(profile, z, alpha)?;
    let k = profile.k();
    let before = profile.to_f64();
    let after: Vec<Vec<f64>> = rounded.probs.iter().map(|p| p.iter().map(to_f64).collect()).collect();
    let tv = tv_distance(&sum_distribution(k, &before)?, &sum_distribution(k, &after)?)?;
    let mut loo = 0.0f64;
    for j in 0..before.len() {
        let drop = |v: &[Vec<f64>]| -> Vec<Vec<f64>> {
            v.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, x)| x.clone()).collect()
        };
        let d = tv_distance(&sum_distribution(k, &drop(&before))?, &sum_distribution(k, &drop(&after))?)?;
        loo = loo.max(d);
    }
    Ok((tv.clamp(0.0, 1.0), loo.clamp(0.0, 1.0)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TvExperimentRow {
    pub k: usize,
    pub z: u64,
    pub alpha: Rational,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub tv: f64,
    pub tv_loo_max: f64,
}

impl TvExperimentRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.k, self.z, self.alpha, self.n, self.trial, self.seed, self.tv, self.tv_loo_max
        )
    }
}

#[derive(Clone, Debug)]
pub struct TvExperiment {
    pub k: usize,
    pub z_list: Vec<u64>,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub alpha: Rational,
    pub guard: Guard,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one trial. `z` is deliberately absent so that a sweep over `z`
/// discretizes the same profiles.
pub fn trial_seed(base_seed: u64, n: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ n as u64) ^ trial as u64)
}

impl TvExperiment {
    pub fn run(&self) -> Result<Vec<TvExperimentRow>> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        for &n in &self.n_list {
            if n == 0 {
                return Err(Error::InvalidParameter("n must be at least 1".into()));
            }
            self.guard.check("sum lattice", lattice_size(n as u32, self.k))?;
        }
        let mut cases = Vec::new();
        for &z in &self.z_list {
            for &n in &self.n_list {
                for trial in 0..self.trials {
                    cases.push((z, n, trial));
                }
            }
        }
        cases
            .par_iter()
            .map(|&(z, n, trial)| {
                let seed = trial_seed(self.base_seed, n, trial);
                let profile = random_profile(n, self.k, seed);
                let (tv, tv_loo_max) = discretization_tv(&profile, z, &self.alpha)?;
                Ok(TvExperimentRow { k: self.k, z, alpha: self.alpha.clone(), n, trial, seed, tv, tv_loo_max })
            })
            .collect()
    }
}

pub fn write_csv<W: Write>(rows: &[TvExperimentRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

/// Exact pmf of a sum of independent Bernoullis, indexed by the count.
pub fn poisson_binomial_pmf<T: Scalar>(probs: &[T]) -> Vec<T> {
    let mut pmf = vec![T::one()];
    for p in probs {
        let q = T::one() - p.clone();
        let mut next = vec![T::zero(); pmf.len() + 1];
        for (j, w) in pmf.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            next[j] = next[j].clone() + w.clone() * q.clone();
            next[j + 1] = next[j + 1].clone() + w.clone() * p.clone();
        }
        pmf = next;
    }
    pmf
}

/// Poisson pmf on `0..len`, where `len` is the first point past the mean at
/// which the remaining tail mass is below [`TAIL_MASS`].
pub fn poisson_pmf_truncated(lambda: f64) -> Vec<f64> {
    if lambda == 0.0 {
        return vec![1.0];
    }
    let dist = Poisson::new(lambda).expect("positive rate");
    let mut out = Vec::new();
    let mut cum = 0.0;
    let mut j = 0u64;
    loop {
        let p = dist.pmf(j);
        out.push(p);
        cum += p;
        if j as f64 > lambda && 1.0 - cum < TAIL_MASS {
            break;
        }
        j += 1;
    }
    out
}

/// TV between two pmfs on the integers given as `(offset, masses)`; mass
/// missing from either vector counts as unmatched.
fn tv_shifted(a: (i64, &[f64]), b: (i64, &[f64])) -> f64 {
    let lo = a.0.min(b.0);
    let hi = (a.0 + a.1.len() as i64).max(b.0 + b.1.len() as i64);
    let at = |(off, v): (i64, &[f64]), x: i64| -> f64 {
        let i = x - off;
        if i >= 0 && (i as usize) < v.len() {
            v[i as usize]
        } else {
            0.0
        }
    };
    let mut s = 0.0;
    for x in lo..hi {
        s += (at(a, x) - at(b, x)).abs();
    }
    // tails cut by truncation
    let missing = (1.0 - a.1.iter().sum::<f64>()).max(0.0) + (1.0 - b.1.iter().sum::<f64>()).max(0.0);
    (0.5 * (s + missing)).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub tv: f64,
    pub bound: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(tv: f64, bound: f64) -> Self {
        BoundCheck { tv, bound, pass: tv <= bound }
    }
}

/// Bernoulli sum versus the Poisson law with the same mean, for means at
/// most `floor(z^alpha)/z`; the bound is `z^(alpha-1)`.
pub fn poisson_tv_check(probs: &[f64], z: u64, alpha: &Rational) -> Result<BoundCheck> {
    let cap = floor_rational_power(z, alpha)? as f64 / z as f64;
    if let Some(p) = probs.iter().find(|p| !(0.0..=cap).contains(*p)) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0, {cap}]")));
    }
    let pb = poisson_binomial_pmf(probs);
    let po = poisson_pmf_truncated(probs.iter().sum());
    let tv = tv_shifted((0, &pb), (0, &po));
    let bound = (z as f64).powf(to_f64(alpha) - 1.0);
    Ok(BoundCheck::new(tv, bound))
}

/// `TP(mu, var)`: Poisson with rate `var + frac(mu - var)` shifted by
/// `floor(mu - var)`. Returns `(shift, pmf)`.
pub fn translated_poisson_pmf(mu: f64, var: f64) -> Result<(i64, Vec<f64>)> {
    if var.is_nan() || var <= 0.0 {
        return Err(Error::InvalidParameter(format!("variance must be positive, got {var}")));
    }
    let base = (mu - var).floor();
    let rate = var + (mu - var - base);
    Ok((base as i64, poisson_pmf_truncated(rate)))
}

/// Translated-Poisson lemma: `TV <= |mu1-mu2|/sigma1 + (|var1-var2|+1)/var1`,
/// with the pair ordered so the first has the smaller shift.
pub fn translated_poisson_tv_check(mu1: f64, var1: f64, mu2: f64, var2: f64) -> Result<BoundCheck> {
    let (mut a, mut b) = ((mu1, var1), (mu2, var2));
    let (sa, pa) = translated_poisson_pmf(a.0, a.1)?;
    let (sb, pb) = translated_poisson_pmf(b.0, b.1)?;
    if sa > sb {
        std::mem::swap(&mut a, &mut b);
    }
    let tv = tv_shifted((sa, &pa), (sb, &pb));
    let bound = (a.0 - b.0).abs() / a.1.sqrt() + ((a.1 - b.1).abs() + 1.0) / a.1;
    Ok(BoundCheck::new(tv, bound))
}

/// `TV(Poisson(lambda0 + d), Poisson(lambda0)) <= d * sqrt(2/lambda0)`.
pub fn poisson_poisson_tv_check(lambda0: f64, d: f64) -> Result<BoundCheck> {
    if lambda0.is_nan() || lambda0 <= 0.0 {
        return Err(Error::InvalidParameter(format!("lambda0 must be positive, got {lambda0}")));
    }
    if d.is_nan() || d <= 0.0 {
        return Err(Error::InvalidParameter(format!("D must be positive, got {d}")));
    }
    let p = poisson_pmf_truncated(lambda0 + d);
    let q = poisson_pmf_truncated(lambda0);
    let tv = tv_shifted((0, &p), (0, &q));
    Ok(BoundCheck::new(tv, d * (2.0 / lambda0).sqrt()))
}

/// Marginal of a `k = 2` sum on the first coordinate.
pub fn first_coordinate_marginal<T: Scalar>(dist: &crate::SumDistribution<T>) -> Vec<T> {
    // ranks in Π^2_m run over (0,m), (1,m-1), ..., (m,0)
    dist.mass().to_vec()
}

/// Median of a slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
