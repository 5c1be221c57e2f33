//! `min over p in [0,1]^n of max_k E[f_k(X_1 + ... + X_n)]` with
//! `X_i ~ Bernoulli(p_i)` independent.
//!
//! The objective is symmetric in the `p_i`, so it suffices to search
//! multisets of probabilities. Restricting them to the levels
//! `{0, 1/L, ..., 1}` gives a search over `C(n + L, L)` multisets.

use serde_json::{json, Value};

use crate::guard::Guard;
use crate::numeric::binomial;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveFunctions {
    n: usize,
    functions: Vec<Vec<f64>>,
}

impl ObjectiveFunctions {
    pub fn new(n: usize, functions: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if functions.is_empty() {
            return Err(Error::InvalidParameter("need at least one function".into()));
        }
        for f in &functions {
            if f.len() != n + 1 {
                return Err(Error::DimensionMismatch(format!("function has {} values, domain has {}", f.len(), n + 1)));
            }
            if let Some(v) = f.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::UtilityOutOfRange(v.to_string()));
            }
        }
        Ok(ObjectiveFunctions { n, functions })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn functions(&self) -> &[Vec<f64>] {
        &self.functions
    }

    /// `1 - f` for every function; minimax on the complement solves maximin.
    pub fn complemented(&self) -> Self {
        ObjectiveFunctions {
            n: self.n,
            functions: self.functions.iter().map(|f| f.iter().map(|v| 1.0 - v).collect()).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "n": self.n, "functions": self.functions })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed("missing or non-integer field \"n\"".into()))? as usize;
        let rows = v
            .get("functions")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Malformed("missing functions array".into()))?;
        let functions = rows
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| Error::Malformed("function is not an array".into()))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| Error::Malformed(format!("not a number: {x}"))))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        ObjectiveFunctions::new(n, functions)
    }
}

pub fn parse_functions(bytes: &[u8]) -> Result<ObjectiveFunctions> {
    ObjectiveFunctions::from_json(&serde_json::from_slice(bytes)?)
}

/// Adds one Bernoulli(`p`) to a count pmf.
fn push_bernoulli(pmf: &[f64], p: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(pmf.len() + 1, 0.0);
    let q = 1.0 - p;
    for (j, w) in pmf.iter().enumerate() {
        out[j] += w * q;
        out[j + 1] += w * p;
    }
}

fn objective_from_pmf(funcs: &ObjectiveFunctions, pmf: &[f64]) -> f64 {
    funcs
        .functions
        .iter()
        .map(|f| f.iter().zip(pmf).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max_k sum_j f_k(j) Pr[S = j]`.
pub fn objective_value(funcs: &ObjectiveFunctions, probs: &[f64]) -> Result<f64> {
    if probs.len() != funcs.n {
        return Err(Error::DimensionMismatch(format!("{} probabilities for n = {}", probs.len(), funcs.n)));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0,1]")));
    }
    let mut pmf = vec![1.0];
    let mut next = Vec::new();
    for &p in probs {
        push_bernoulli(&pmf, p, &mut next);
        std::mem::swap(&mut pmf, &mut next);
    }
    Ok(objective_from_pmf(funcs, &pmf))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaxResult {
    pub value: f64,
    /// Minimizing multiset, non-decreasing.
    pub probs: Vec<f64>,
    pub resolution: u32,
    pub candidates: u128,
}

/// `1/ε'` for the largest `ε' = 1/ceil(1/ε) <= ε`.
pub fn resolution_for_epsilon(eps: f64) -> Result<u32> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0,1], got {eps}")));
    }
    let inv = 1.0 / eps;
    let r = inv.round();
    // tolerate the float noise of e.g. 1/0.1
    let res = if (inv - r).abs() < 1e-9 { r } else { inv.ceil() };
    Ok(res as u32)
}

pub fn multiset_count(n: usize, resolution: u32) -> u128 {
    binomial(n as u64 + resolution as u64, resolution as u64)
}

fn level(i: u32, resolution: u32) -> f64 {
    i as f64 / resolution as f64
}

/// Depth-first search over non-decreasing level sequences, carrying the
/// count pmf of the prefix. Ties keep the lexicographically first multiset.
pub fn minimax_ptas(funcs: &ObjectiveFunctions, resolution: u32, guard: &Guard) -> Result<MinimaxResult> {
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let candidates = multiset_count(funcs.n, resolution);
    guard.check("probability multisets", candidates)?;
    let n = funcs.n;
    let mut pmfs: Vec<Vec<f64>> = vec![vec![1.0]; n + 1];
    let mut chosen = vec![0u32; n];
    let mut best = (f64::INFINITY, vec![0u32; n]);

    fn visit(
        depth: usize,
        start: u32,
        funcs: &ObjectiveFunctions,
        resolution: u32,
        pmfs: &mut Vec<Vec<f64>>,
        chosen: &mut Vec<u32>,
        best: &mut (f64, Vec<u32>),
    ) {
        if depth == funcs.n {
            let v = objective_from_pmf(funcs, &pmfs[depth]);
            if v < best.0 {
                best.0 = v;
                best.1.clone_from(chosen);
            }
            return;
        }
        for i in start..=resolution {
            chosen[depth] = i;
            let (head, tail) = pmfs.split_at_mut(depth + 1);
            push_bernoulli(&head[depth], level(i, resolution), &mut tail[0]);
            visit(depth + 1, i, funcs, resolution, pmfs, chosen, best);
        }
    }

    visit(0, 0, funcs, resolution, &mut pmfs, &mut chosen, &mut best);
    Ok(MinimaxResult {
        value: best.0,
        probs: best.1.iter().map(|&i| level(i, resolution)).collect(),
        resolution,
        candidates,
    })
}

/// Maximin through the complement: `max min E f = 1 - min max E (1 - f)`.
pub fn maximin_ptas(funcs: &ObjectiveFunctions, resolution: u32, guard: &Guard) -> Result<MinimaxResult> {
    let mut r = minimax_ptas(&funcs.complemented(), resolution, guard)?;
    r.value = 1.0 - r.value;
    Ok(r)
}

/// Plain odometer over non-decreasing sequences at resolution `g`,
/// evaluating each candidate from scratch.
pub fn minimax_oracle(funcs: &ObjectiveFunctions, g: u32, guard: &Guard) -> Result<MinimaxResult> {
    if g == 0 {
        return Err(Error::InvalidParameter("grid resolution must be positive".into()));
    }
    let candidates = multiset_count(funcs.n, g);
    guard.check("oracle multisets", candidates)?;
    let n = funcs.n;
    let mut idx = vec![0u32; n];
    let mut best = (f64::INFINITY, idx.clone());
    let mut probs = vec![0.0; n];
    loop {
        for (p, &i) in probs.iter_mut().zip(&idx) {
            *p = level(i, g);
        }
        let v = objective_value(funcs, &probs)?;
        if v < best.0 {
            best = (v, idx.clone());
        }
        // next non-decreasing sequence
        let Some(pos) = (0..n).rev().find(|&j| idx[j] < g) else {
            break;
        };
        let nv = idx[pos] + 1;
        for x in idx[pos..].iter_mut() {
            *x = nv;
        }
    }
    Ok(MinimaxResult {
        value: best.0,
        probs: best.1.iter().map(|&i| level(i, g)).collect(),
        resolution: g,
        candidates,
    })
}
