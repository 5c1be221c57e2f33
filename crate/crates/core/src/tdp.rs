//! Trickle-down decision trees.
//!
//! A mixed strategy with support `S` is split recursively: order `S` so the
//! largest probability sits second and the rest are non-decreasing, cut at
//! the split index, double both halves (the pivot strategy's mass is shared
//! between them) and recurse until at most two strategies remain. Sampling a
//! fair coin at every internal node and then a two-way choice at the leaf
//! reproduces the original distribution exactly.
//!
//! Ordering ties: among strategies tied for the largest probability the one
//! with the smallest index goes second; the remaining strategies sort by
//! `(probability, index)` ascending. Cell membership depends on this rule.

use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::numeric::{floor_rational_power, rat_int, to_f64, Rational};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TdpNode {
    /// Support in TDP order: largest second, the others non-decreasing.
    pub strategies: Vec<usize>,
    /// Probabilities aligned with `strategies`.
    pub probs: Vec<Rational>,
    pub depth: u32,
    pub children: Option<(usize, usize)>,
}

impl TdpNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn prob_of(&self, strategy: usize) -> Option<&Rational> {
        self.strategies.iter().position(|&s| s == strategy).map(|i| &self.probs[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LeafType {
    A,
    B,
}

/// Nodes are stored in preorder; the root is node 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TdpTree {
    k: usize,
    nodes: Vec<TdpNode>,
}

/// Order a support per the TDP rule.
pub fn tdp_order(entries: &[(usize, Rational)]) -> Vec<(usize, Rational)> {
    let mut rest: Vec<(usize, Rational)> = entries.to_vec();
    if rest.len() <= 1 {
        return rest;
    }
    let top = rest
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("non-empty");
    let largest = rest.remove(top);
    rest.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    rest.insert(1, largest);
    rest
}

/// Indices `l` (0-based) with prefix mass `<= 1/2` and suffix mass `< 1/2`.
pub fn split_candidates(probs: &[Rational]) -> Vec<usize> {
    let half = Rational::new(BigInt::from(1), BigInt::from(2));
    let total: Rational = probs.iter().sum();
    let mut prefix = Rational::zero();
    let mut out = Vec::new();
    for (l, p) in probs.iter().enumerate() {
        let suffix = &total - &prefix - p;
        if prefix <= half && suffix < half {
            out.push(l);
        }
        prefix += p;
    }
    out
}

impl TdpTree {
    /// Builds the tree of a distribution over `[k]` given as
    /// `(strategy, probability)` pairs with strictly positive probabilities.
    pub fn build(k: usize, entries: &[(usize, Rational)]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut seen = vec![false; k];
        for (s, p) in entries {
            if *s >= k {
                return Err(Error::InvalidDistribution(format!("strategy {s} outside [0,{k})")));
            }
            if std::mem::replace(&mut seen[*s], true) {
                return Err(Error::InvalidDistribution(format!("strategy {s} listed twice")));
            }
            if !p.is_positive() {
                return Err(Error::InvalidDistribution(format!("strategy {s} has non-positive probability {p}")));
            }
        }
        let total: Rational = entries.iter().map(|(_, p)| p).sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        let mut tree = TdpTree { k, nodes: Vec::new() };
        tree.grow(entries, 0)?;
        Ok(tree)
    }

    /// Builds from a dense distribution, dropping zero entries.
    pub fn from_distribution(p: &[Rational]) -> Result<Self> {
        if let Some(x) = p.iter().find(|x| x.is_negative()) {
            return Err(Error::InvalidDistribution(format!("negative entry {x}")));
        }
        let entries: Vec<(usize, Rational)> =
            p.iter().enumerate().filter(|(_, x)| x.is_positive()).map(|(s, x)| (s, x.clone())).collect();
        TdpTree::build(p.len(), &entries)
    }

    fn grow(&mut self, entries: &[(usize, Rational)], depth: u32) -> Result<usize> {
        let ordered = tdp_order(entries);
        let id = self.nodes.len();
        let (strategies, probs): (Vec<usize>, Vec<Rational>) = ordered.iter().cloned().unzip();
        self.nodes.push(TdpNode { strategies, probs: probs.clone(), depth, children: None });
        if ordered.len() <= 2 {
            return Ok(id);
        }
        let m = ordered.len();
        let candidates: Vec<usize> = split_candidates(&probs).into_iter().filter(|&l| l + 1 < m).collect();
        let pivot = match candidates.as_slice() {
            [l] => *l,
            _ => {
                return Err(Error::NonUniqueSplit(format!(
                    "{} candidates for support {:?}",
                    candidates.len(),
                    self.nodes[id].strategies
                )))
            }
        };
        let two = rat_int(2);
        let mut left: Vec<(usize, Rational)> = ordered[..pivot].iter().map(|(s, p)| (*s, p * &two)).collect();
        let t = Rational::one() - left.iter().map(|(_, p)| p).sum::<Rational>();
        if t.is_positive() {
            left.push((ordered[pivot].0, t));
        }
        let mut right: Vec<(usize, Rational)> = ordered[pivot + 1..].iter().map(|(s, p)| (*s, p * &two)).collect();
        let rest = Rational::one() - right.iter().map(|(_, p)| p).sum::<Rational>();
        right.insert(0, (ordered[pivot].0, rest));
        let l = self.grow(&left, depth + 1)?;
        let r = self.grow(&right, depth + 1)?;
        self.nodes[id].children = Some((l, r));
        Ok(id)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nodes(&self) -> &[TdpNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TdpNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TdpNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn leaf_ids(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect()
    }

    pub fn max_depth(&self) -> u32 {
        self.leaves().map(|n| n.depth).max().unwrap_or(0)
    }

    /// `p(l) = sum over leaves v containing l of 2^{-depth(v)} p_v(l)`.
    pub fn reconstruct(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.k];
        for leaf in self.leaves() {
            let weight = Rational::new(BigInt::one(), BigInt::one() << leaf.depth);
            for (s, p) in leaf.strategies.iter().zip(&leaf.probs) {
                out[*s] += &weight * p;
            }
        }
        out
    }

    /// Replace one leaf's first-strategy probability; the second receives the complement.
    pub(crate) fn set_leaf_first(&mut self, leaf: usize, first: Rational) {
        let node = &mut self.nodes[leaf];
        debug_assert!(node.is_leaf() && node.strategies.len() == 2);
        node.probs[1] = Rational::one() - &first;
        node.probs[0] = first;
    }

    /// Fair coin at every internal node, then the leaf's two-way choice.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut node = &self.nodes[0];
        while let Some((l, r)) = node.children {
            node = if rng.gen_bool(0.5) { &self.nodes[l] } else { &self.nodes[r] };
        }
        if node.strategies.len() == 1 {
            return node.strategies[0];
        }
        let u: f64 = rng.gen();
        if u < to_f64(&node.probs[0]) {
            node.strategies[0]
        } else {
            node.strategies[1]
        }
    }

    /// Canonical key: shape, ordered strategy lists and leaf types.
    pub fn cell_signature(&self, z: u64, alpha: &Rational) -> Result<CellSignature> {
        let threshold = leaf_threshold(z, alpha)?;
        let mut s = String::new();
        self.write_signature(0, &threshold, &mut s)?;
        Ok(CellSignature(s))
    }

    fn write_signature(&self, id: usize, threshold: &Rational, out: &mut String) -> Result<()> {
        let node = &self.nodes[id];
        let list: Vec<String> = node.strategies.iter().map(|s| s.to_string()).collect();
        match node.children {
            Some((l, r)) => {
                let _ = write!(out, "({}|", list.join(","));
                self.write_signature(l, threshold, out)?;
                out.push(' ');
                self.write_signature(r, threshold, out)?;
                out.push(')');
            }
            None => {
                let ty = classify_with_threshold(node, threshold)?;
                let _ = write!(out, "[{}:{:?}]", list.join(","), ty);
            }
        }
        Ok(())
    }

    /// Structural problems, empty when the tree satisfies every invariant.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let root_support = self.root().strategies.len();
        let leaves = self.leaves().count();
        if root_support >= 2 && leaves > root_support - 1 {
            v.push(format!("{leaves} leaves for support {root_support}"));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if !node.probs.iter().sum::<Rational>().is_one() {
                v.push(format!("node {i} does not sum to one"));
            }
            if node.is_leaf() && node.strategies.len() > 2 {
                v.push(format!("leaf {i} has support {}", node.strategies.len()));
            }
            if node.depth as usize > self.k {
                v.push(format!("node {i} deeper than k"));
            }
            let entries: Vec<(usize, Rational)> =
                node.strategies.iter().cloned().zip(node.probs.iter().cloned()).collect();
            if tdp_order(&entries) != entries {
                v.push(format!("node {i} is not in TDP order"));
            }
        }
        v
    }
}

impl fmt::Display for TdpTree {
    /// Indented dump with exact rationals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for node in &self.nodes {
            let indent = "  ".repeat(node.depth as usize);
            let body: Vec<String> =
                node.strategies.iter().zip(&node.probs).map(|(s, p)| format!("{s}:{p}")).collect();
            let kind = if node.is_leaf() { "leaf" } else { "node" };
            writeln!(f, "{indent}{kind} depth={} [{}]", node.depth, body.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellSignature(String);

impl CellSignature {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CellSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `floor(z^alpha) / z`.
pub fn leaf_threshold(z: u64, alpha: &Rational) -> Result<Rational> {
    if z < 2 {
        return Err(Error::InvalidParameter(format!("z must be at least 2, got {z}")));
    }
    let f = floor_rational_power(z, alpha)?;
    Ok(Rational::new(BigInt::from(f), BigInt::from(z)))
}

fn classify_with_threshold(leaf: &TdpNode, threshold: &Rational) -> Result<LeafType> {
    if leaf.strategies.len() != 2 {
        return Err(Error::DegenerateLeaf(leaf.strategies.len()));
    }
    // the first strategy in TDP order carries the smaller mass
    Ok(if leaf.probs[0] <= *threshold { LeafType::A } else { LeafType::B })
}

/// Type A iff the smaller leaf probability is at most `floor(z^alpha)/z`.
pub fn classify_leaf(leaf: &TdpNode, z: u64, alpha: &Rational) -> Result<LeafType> {
    classify_with_threshold(leaf, &leaf_threshold(z, alpha)?)
}
