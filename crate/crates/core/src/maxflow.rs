//! Dinic's algorithm over exact rationals.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use crate::Rat;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    residual: Rat,
    original: Rat,
}

#[derive(Clone, Debug)]
pub(crate) struct Dinic {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
    level: Vec<i64>,
    iter: Vec<usize>,
}

impl Dinic {
    pub(crate) fn new(n: usize) -> Self {
        Dinic {
            adj: vec![Vec::new(); n],
            arcs: Vec::new(),
            level: vec![-1; n],
            iter: vec![0; n],
        }
    }

    /// Adds `u -> v` with capacity `cap`; the paired reverse arc starts at
    /// `back` (zero for a directed arc, `cap` for an undirected edge).
    /// Returns the id of the forward arc.
    pub(crate) fn add(&mut self, u: usize, v: usize, cap: Rat, back: Rat) -> usize {
        let id = self.arcs.len();
        self.adj[u].push(id);
        self.arcs.push(Arc {
            to: v,
            residual: cap.clone(),
            original: cap,
        });
        self.adj[v].push(id + 1);
        self.arcs.push(Arc {
            to: u,
            residual: back.clone(),
            original: back,
        });
        id
    }

    /// Net flow pushed along forward arc `id`.
    pub(crate) fn flow(&self, id: usize) -> Rat {
        &self.arcs[id].original - &self.arcs[id].residual
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &id in &self.adj[u] {
                let a = &self.arcs[id];
                if a.residual.is_positive() && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[u] + 1;
                    q.push_back(a.to);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, limit: Rat) -> Rat {
        if u == t {
            return limit;
        }
        while self.iter[u] < self.adj[u].len() {
            let id = self.adj[u][self.iter[u]];
            let to = self.arcs[id].to;
            if self.arcs[id].residual.is_positive() && self.level[u] < self.level[to] {
                let want = if self.arcs[id].residual < limit {
                    self.arcs[id].residual.clone()
                } else {
                    limit.clone()
                };
                let got = self.dfs(to, t, want);
                if got.is_positive() {
                    self.arcs[id].residual -= &got;
                    self.arcs[id ^ 1].residual += &got;
                    return got;
                }
            }
            self.iter[u] += 1;
        }
        Rat::zero()
    }

    pub(crate) fn max_flow(&mut self, s: usize, t: usize, infinity: &Rat) -> Rat {
        let mut total = Rat::zero();
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return total;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, infinity.clone());
                if f.is_zero() {
                    break;
                }
                total += f;
            }
        }
    }

    /// Nodes reachable from `s` in the residual graph.
    pub(crate) fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &id in &self.adj[u] {
                let a = &self.arcs[id];
                if a.residual.is_positive() && !seen[a.to] {
                    seen[a.to] = true;
                    stack.push(a.to);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::int;

    #[test]
    fn textbook_instance() {
        let mut d = Dinic::new(6);
        for (u, v, c) in [
            (0, 1, 10),
            (0, 2, 10),
            (1, 3, 4),
            (1, 4, 8),
            (2, 4, 9),
            (3, 5, 10),
            (4, 3, 6),
            (4, 5, 10),
        ] {
            d.add(u, v, int(c), int(0));
        }
        assert_eq!(d.max_flow(0, 5, &int(1000)), int(19));
    }

    #[test]
    fn undirected_edges_carry_flow_both_ways() {
        let mut d = Dinic::new(3);
        let e = d.add(1, 0, int(2), int(2));
        d.add(0, 2, int(5), int(0));
        let s = 1;
        assert_eq!(d.max_flow(s, 2, &int(100)), int(2));
        assert_eq!(d.flow(e), int(2));
        let mut d = Dinic::new(3);
        let e = d.add(0, 1, int(2), int(2));
        d.add(2, 1, int(5), int(0));
        assert_eq!(d.max_flow(2, 0, &int(100)), int(2));
        assert_eq!(d.flow(e), int(-2));
    }
}
