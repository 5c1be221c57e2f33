//! Integral max-flow for the player/strategy assignment.
//!
//! Network: source -> player (capacity 1), player -> strategy for every
//! edge (capacity 1), strategy -> sink (capacity `theta[s]`). Dinic's
//! algorithm; with integer capacities the maximum flow is integral and
//! decomposes directly into an assignment.

use std::collections::VecDeque;

struct Arc {
    to: usize,
    cap: u32,
    rev: usize,
}

struct Network {
    graph: Vec<Vec<Arc>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Network {
    fn new(n: usize) -> Self {
        Network { graph: (0..n).map(|_| Vec::new()).collect(), level: vec![0; n], iter: vec![0; n] }
    }

    fn add(&mut self, from: usize, to: usize, cap: u32) -> (usize, usize) {
        let a = self.graph[from].len();
        let b = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc { to, cap, rev: b });
        self.graph[to].push(Arc { to: from, cap: 0, rev: a });
        (from, a)
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for e in &self.graph[v] {
                if e.cap > 0 && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[v] + 1;
                    q.push_back(e.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, f: u32) -> u32 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.graph[v].len() {
            let i = self.iter[v];
            let (to, cap) = (self.graph[v][i].to, self.graph[v][i].cap);
            if cap > 0 && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, f.min(cap));
                if d > 0 {
                    self.graph[v][i].cap -= d;
                    let rev = self.graph[v][i].rev;
                    self.graph[to][rev].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> u32 {
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, u32::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }
}

/// Assigns each of the `n` players to a strategy slot so that exactly
/// `theta[s]` players use strategy `s` and every pair is an edge. `None`
/// when the maximum flow is below `n`.
pub fn max_flow_assign(edges: &[(usize, usize)], theta: &[u32], n: usize) -> Option<Vec<usize>> {
    let slots = theta.len();
    if theta.iter().map(|&t| t as usize).sum::<usize>() != n {
        return None;
    }
    let source = n + slots;
    let sink = source + 1;
    let mut net = Network::new(sink + 1);
    for p in 0..n {
        net.add(source, p, 1);
    }
    let mut handles = Vec::with_capacity(edges.len());
    for &(p, s) in edges {
        if p < n && s < slots && theta[s] > 0 {
            handles.push((p, s, net.add(p, n + s, 1)));
        }
    }
    for (s, &t) in theta.iter().enumerate() {
        if t > 0 {
            net.add(n + s, sink, t);
        }
    }
    if net.max_flow(source, sink) as usize != n {
        return None;
    }
    let mut assignment = vec![usize::MAX; n];
    for (p, s, (v, i)) in handles {
        if net.graph[v][i].cap == 0 {
            assignment[p] = s;
        }
    }
    debug_assert!(assignment.iter().all(|&s| s != usize::MAX));
    Some(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn valid(assign: &[usize], edges: &[(usize, usize)], theta: &[u32]) -> bool {
        let mut used = vec![0u32; theta.len()];
        for (p, &s) in assign.iter().enumerate() {
            if !edges.contains(&(p, s)) {
                return false;
            }
            used[s] += 1;
        }
        used == theta
    }

    #[test]
    fn complete_graph_is_feasible() {
        let theta = [2, 0, 1];
        let edges: Vec<_> = (0..3).flat_map(|p| (0..3).map(move |s| (p, s))).collect();
        let a = max_flow_assign(&edges, &theta, 3).unwrap();
        assert!(valid(&a, &edges, &theta));
    }

    #[test]
    fn isolated_player_is_infeasible() {
        let edges = [(0, 0), (0, 1)];
        assert!(max_flow_assign(&edges, &[1, 1], 2).is_none());
    }

    #[test]
    fn anti_coordination_pairs() {
        let edges = [(0, 0), (1, 0), (0, 1), (1, 1)];
        let a = max_flow_assign(&edges, &[1, 1], 2).unwrap();
        assert!(a == vec![0, 1] || a == vec![1, 0]);
    }

    #[test]
    fn capacity_is_respected() {
        // both players only like slot 0, which holds one
        let edges = [(0, 0), (1, 0), (1, 1)];
        let a = max_flow_assign(&edges, &[1, 1], 2).unwrap();
        assert_eq!(a, vec![0, 1]);
        assert!(max_flow_assign(&[(0, 0), (1, 0)], &[1, 1], 2).is_none());
        assert!(max_flow_assign(&[(0, 0)], &[2], 1).is_none());
    }
}
