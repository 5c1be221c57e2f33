//! Cell-by-cell rounding of a mixed profile.
//!
//! Each player's strategy is turned into a trickle-down tree, players are
//! grouped by cell signature, and inside every cell the first-ordered leaf
//! probabilities are rounded jointly to multiples of `1/z` by largest
//! remainder. Rebuilding from the rounded leaves gives entries that are
//! multiples of `1/(2^k z)`, stay within `1/z` of the input and keep zeros at
//! zero.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::game_model::MixedProfile;
use crate::numeric::{floor_nonneg, rat_int, Rational};
use crate::tdp::TdpTree;
use crate::{Error, Result};

/// Rounds each value to a multiple of `1/z`: floors first, then one extra
/// `1/z` to the `r` largest fractional parts (ties to the lower index), where
/// `r` is the rounded sum of fractional parts.
pub fn largest_remainder_round(values: &[Rational], z: u64) -> Vec<Rational> {
    assert!(z >= 1, "z must be positive");
    let zr = rat_int(z);
    let scaled: Vec<Rational> = values.iter().map(|v| v * &zr).collect();
    let floors: Vec<BigInt> = scaled.iter().map(floor_nonneg).collect();
    let fracs: Vec<Rational> = scaled.iter().zip(&floors).map(|(s, f)| s - Rational::from_integer(f.clone())).collect();
    let frac_sum: Rational = fracs.iter().sum();
    let half = Rational::new(1.into(), 2.into());
    let r = floor_nonneg(&(frac_sum + half)).to_usize().unwrap_or(0);

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| fracs[b].cmp(&fracs[a]).then(a.cmp(&b)));
    let mut units = floors;
    for &i in order.iter().take(r) {
        units[i] += 1;
    }
    units.into_iter().map(|u| Rational::new(u, BigInt::from(z))).collect()
}

/// Rounds the leaves of a group of trees that share one cell signature.
/// Returned trees keep the original structure with rounded leaf labels.
pub fn round_cell(members: &[TdpTree], z: u64, alpha: &Rational) -> Result<Vec<TdpTree>> {
    let Some(first) = members.first() else {
        return Ok(Vec::new());
    };
    let sig = first.cell_signature(z, alpha)?;
    for m in &members[1..] {
        if m.cell_signature(z, alpha)? != sig {
            return Err(Error::SignatureMismatch);
        }
    }
    let mut out = members.to_vec();
    for leaf in first.leaf_ids() {
        let firsts: Vec<Rational> = members.iter().map(|t| t.nodes()[leaf].probs[0].clone()).collect();
        for (tree, v) in out.iter_mut().zip(largest_remainder_round(&firsts, z)) {
            tree.set_leaf_first(leaf, v);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscretizedProfile {
    pub probs: Vec<Vec<Rational>>,
    pub z: u64,
    pub k: usize,
}

impl DiscretizedProfile {
    pub fn to_mixed_profile(&self) -> MixedProfile {
        MixedProfile::new(self.k, self.probs.clone()).expect("rounded leaves preserve unit mass")
    }

    /// Grid unit `1/(2^k z)` denominator.
    pub fn unit_denominator(&self) -> u64 {
        (1u64 << self.k) * self.z
    }
}

pub fn discretize_profile(profile: &MixedProfile, z: u64, alpha: &Rational) -> Result<DiscretizedProfile> {
    if z < 2 {
        return Err(Error::InvalidParameter(format!("z must be at least 2, got {z}")));
    }
    let k = profile.k();
    let mut out: Vec<Vec<Rational>> = profile.probs().to_vec();
    let mut cells: BTreeMap<_, Vec<(usize, TdpTree)>> = BTreeMap::new();
    for (i, p) in profile.probs().iter().enumerate() {
        let support = p.iter().filter(|x| !x.is_zero()).count();
        if support <= 1 {
            continue;
        }
        let tree = TdpTree::from_distribution(p)?;
        cells.entry(tree.cell_signature(z, alpha)?).or_default().push((i, tree));
    }
    for members in cells.into_values() {
        let (ids, trees): (Vec<usize>, Vec<TdpTree>) = members.into_iter().unzip();
        for (i, t) in ids.into_iter().zip(round_cell(&trees, z, alpha)?) {
            out[i] = t.reconstruct();
        }
    }
    debug_assert!(out.iter().all(|p| p.len() == k));
    Ok(DiscretizedProfile { probs: out, z, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::random_profile;
    use crate::numeric::{is_multiple_of, rat};
    use num_traits::Signed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(a, b)| rat(a, b)).collect()
    }

    #[test]
    fn largest_remainder_examples() {
        assert_eq!(largest_remainder_round(&r(&[(32, 100), (57, 100)]), 10), r(&[(3, 10), (6, 10)]));
        assert_eq!(largest_remainder_round(&r(&[(3, 10), (1, 1), (0, 1)]), 10), r(&[(3, 10), (1, 1), (0, 1)]));
        assert_eq!(largest_remainder_round(&r(&[(15, 100), (15, 100)]), 10), r(&[(2, 10), (1, 10)]));
    }

    #[test]
    fn round_cell_examples() {
        let alpha = rat(3, 5);
        let t = TdpTree::from_distribution(&r(&[(32, 100), (68, 100)])).unwrap();
        let out = round_cell(&[t], 10, &alpha).unwrap();
        assert_eq!(out[0].reconstruct(), r(&[(3, 10), (7, 10)]));

        let a = TdpTree::from_distribution(&r(&[(32, 100), (68, 100)])).unwrap();
        let b = TdpTree::from_distribution(&r(&[(43, 100), (57, 100)])).unwrap();
        // first-ordered values 0.32 and 0.43: floors 3,4, fracs .2,.3, r=1
        let out = round_cell(&[a, b], 10, &alpha).unwrap();
        assert_eq!(out[0].reconstruct(), r(&[(3, 10), (7, 10)]));
        assert_eq!(out[1].reconstruct(), r(&[(5, 10), (5, 10)]));

        let fixed = TdpTree::from_distribution(&r(&[(2, 10), (8, 10)])).unwrap();
        assert_eq!(round_cell(std::slice::from_ref(&fixed), 10, &alpha).unwrap()[0], fixed);

        let other = TdpTree::from_distribution(&r(&[(1, 3), (1, 3), (1, 3)])).unwrap();
        assert!(matches!(round_cell(&[fixed, other], 10, &alpha), Err(Error::SignatureMismatch)));
    }

    #[test]
    fn two_member_cell_matches_the_vector_example() {
        // first strategy in each leaf carries 0.32 and 0.57 on the same ordering
        let alpha = rat(1, 2);
        let a = TdpTree::build(2, &[(0, rat(32, 100)), (1, rat(68, 100))]).unwrap();
        let b = TdpTree::build(2, &[(0, rat(43, 100)), (1, rat(57, 100))]).unwrap();
        let firsts: Vec<_> = [&a, &b].iter().map(|t| t.root().probs[0].clone()).collect();
        assert_eq!(firsts, r(&[(32, 100), (43, 100)]));
        assert_eq!(largest_remainder_round(&r(&[(32, 100), (57, 100)]), 10), r(&[(3, 10), (6, 10)]));
        let out = round_cell(&[a, b], 10, &alpha).unwrap();
        assert_eq!(out[0].root().probs, r(&[(3, 10), (7, 10)]));
    }

    fn check_properties(input: &MixedProfile, out: &DiscretizedProfile, z: u64) {
        let bound = rat(1, z as i64);
        for (p, q) in input.probs().iter().zip(&out.probs) {
            assert!(q.iter().sum::<Rational>() == rat(1, 1));
            for (a, b) in p.iter().zip(q) {
                assert!((a - b).abs() <= bound, "{a} vs {b}");
                assert!(is_multiple_of(b, out.unit_denominator()));
                if a.is_zero() {
                    assert!(b.is_zero());
                }
            }
        }
    }

    fn sparse_profile(n: usize, k: usize, seed: u64) -> MixedProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probs = (0..n)
            .map(|_| {
                let mut w: Vec<i64> = (0..k).map(|_| if rng.gen_bool(0.25) { 0 } else { rng.gen_range(1..500) }).collect();
                if w.iter().all(|&x| x == 0) {
                    w[0] = 1;
                }
                let t: i64 = w.iter().sum();
                w.iter().map(|&x| rat(x, t)).collect()
            })
            .collect();
        MixedProfile::new(k, probs).unwrap()
    }

    #[test]
    fn properties_hold_on_random_profiles() {
        let alpha = rat(3, 5);
        for seed in 0..20 {
            for &z in &[5u64, 10, 50] {
                let prof = sparse_profile(1 + (seed as usize % 20), 2 + (seed as usize % 3), seed);
                let out = discretize_profile(&prof, z, &alpha).unwrap();
                check_properties(&prof, &out, z);
            }
        }
        let prof = random_profile(10, 3, 1);
        let out = discretize_profile(&prof, 20, &alpha).unwrap();
        assert_eq!(out.unit_denominator(), 160);
        check_properties(&prof, &out, 20);
    }

    #[test]
    fn cell_sums_move_by_at_most_one_unit() {
        let alpha = rat(3, 5);
        let z = 10;
        let prof = random_profile(15, 3, 42);
        let trees: Vec<TdpTree> = prof.probs().iter().map(|p| TdpTree::from_distribution(p).unwrap()).collect();
        let mut cells: BTreeMap<_, Vec<TdpTree>> = BTreeMap::new();
        for t in trees {
            cells.entry(t.cell_signature(z, &alpha).unwrap()).or_default().push(t);
        }
        for members in cells.values() {
            let rounded = round_cell(members, z, &alpha).unwrap();
            for leaf in members[0].leaf_ids() {
                let before: Rational = members.iter().map(|t| &t.nodes()[leaf].probs[0]).sum();
                let after: Rational = rounded.iter().map(|t| &t.nodes()[leaf].probs[0]).sum();
                assert!((before - after).abs() <= rat(1, z as i64));
            }
        }
    }

    #[test]
    fn fixed_points_and_determinism() {
        let alpha = rat(3, 5);
        let prof = MixedProfile::new(3, vec![r(&[(1, 10), (9, 10), (0, 1)]), r(&[(0, 1), (1, 2), (1, 2)]), r(&[(0, 1), (0, 1), (1, 1)])]).unwrap();
        let out = discretize_profile(&prof, 10, &alpha).unwrap();
        assert_eq!(out.probs, prof.probs());

        let prof = random_profile(12, 4, 3);
        let a = discretize_profile(&prof, 10, &alpha).unwrap();
        assert_eq!(a, discretize_profile(&prof, 10, &alpha).unwrap());

        // support-two strategies: the rounded profile is itself a fixed point
        let prof = sparse_profile(12, 2, 8);
        let once = discretize_profile(&prof, 10, &alpha).unwrap();
        let twice = discretize_profile(&once.to_mixed_profile(), 10, &alpha).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn rejects_tiny_z() {
        assert!(discretize_profile(&random_profile(2, 2, 0), 1, &rat(3, 5)).is_err());
    }
}
