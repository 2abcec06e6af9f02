//! Edmonds–Karp maximum flow, generic over exact and floating capacities.

use std::collections::VecDeque;
use std::ops::{Add, Sub};

use num_traits::Zero;

pub(crate) trait Capacity: Clone + PartialOrd + Zero + Add<Output = Self> + Sub<Output = Self> {}

impl<T> Capacity for T where T: Clone + PartialOrd + Zero + Add<Output = T> + Sub<Output = T> {}

struct Edge<T> {
    to: usize,
    cap: T,
    rev: usize,
}

pub(crate) struct FlowNetwork<T> {
    adj: Vec<Vec<Edge<T>>>,
}

impl<T: Capacity> FlowNetwork<T> {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            adj: (0..nodes).map(|_| Vec::new()).collect(),
        }
    }

    /// Adds `from → to` and returns a handle for reading its flow back.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: T) -> (usize, usize) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Edge { to, cap: cap.clone(), rev: rev_from });
        self.adj[to].push(Edge { to: from, cap: T::zero(), rev: rev_to });
        (from, rev_to)
    }

    /// Flow pushed along an edge: the residual capacity of its reverse edge.
    pub fn flow(&self, handle: (usize, usize)) -> T {
        let e = &self.adj[handle.0][handle.1];
        self.adj[e.to][e.rev].cap.clone()
    }

    /// Maximum flow, treating residual capacities `≤ eps` as saturated.
    pub fn max_flow(&mut self, source: usize, sink: usize, eps: &T) -> T {
        let mut total = T::zero();
        loop {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::from([source]);
            let mut seen = vec![false; self.adj.len()];
            seen[source] = true;
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for (k, e) in self.adj[u].iter().enumerate() {
                    if !seen[e.to] && e.cap > *eps {
                        seen[e.to] = true;
                        prev[e.to] = Some((u, k));
                        queue.push_back(e.to);
                    }
                }
            }
            if !seen[sink] {
                return total;
            }
            let mut bottleneck: Option<T> = None;
            let mut v = sink;
            while let Some((u, k)) = prev[v] {
                let cap = self.adj[u][k].cap.clone();
                bottleneck = Some(match bottleneck {
                    Some(b) if b < cap => b,
                    _ => cap,
                });
                v = u;
            }
            let push = bottleneck.expect("non-empty path");
            let mut v = sink;
            while let Some((u, k)) = prev[v] {
                let rev = self.adj[u][k].rev;
                let to = self.adj[u][k].to;
                self.adj[u][k].cap = self.adj[u][k].cap.clone() - push.clone();
                self.adj[to][rev].cap = self.adj[to][rev].cap.clone() + push.clone();
                v = u;
            }
            total = total + push;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond_network() {
        let mut g = FlowNetwork::new(4);
        g.add_edge(0, 1, 3.0);
        g.add_edge(0, 2, 2.0);
        let mid = g.add_edge(1, 2, 5.0);
        g.add_edge(1, 3, 2.0);
        g.add_edge(2, 3, 3.0);
        assert_eq!(g.max_flow(0, 3, &0.0), 5.0);
        assert_eq!(g.flow(mid), 1.0);
    }
}
