//! Exact max-flow / min-cut kernel with symbolic infinite capacities.
//!
//! Augmenting paths are found breadth-first (shortest first), which bounds
//! the number of augmentations by O(V·E) independent of the capacity
//! values; the capacities here are arbitrary rationals, so no scaling
//! argument is available. Infinity is a tag, not a large number; a flow is
//! infinite exactly when the sink is reachable from the source through
//! infinite arcs alone.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::ops::{Add, AddAssign};

use num::{Signed, Zero};
use thiserror::Error;

use crate::model::Rat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("no finite cut separates source from sink")]
    NoFiniteCut,
}

/// Arc capacity: a non-negative rational or infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capacity {
    Finite(Rat),
    Infinite,
}

impl Capacity {
    pub fn zero() -> Self {
        Capacity::Finite(Rat::zero())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Capacity::Infinite)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Capacity::Finite(r) if r.is_zero())
    }

    pub fn as_finite(&self) -> Option<&Rat> {
        match self {
            Capacity::Finite(r) => Some(r),
            Capacity::Infinite => None,
        }
    }
}

impl From<Rat> for Capacity {
    fn from(r: Rat) -> Self {
        Capacity::Finite(r)
    }
}

impl PartialOrd for Capacity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Capacity {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Capacity::Infinite, Capacity::Infinite) => Ordering::Equal,
            (Capacity::Infinite, Capacity::Finite(_)) => Ordering::Greater,
            (Capacity::Finite(_), Capacity::Infinite) => Ordering::Less,
            (Capacity::Finite(a), Capacity::Finite(b)) => a.cmp(b),
        }
    }
}

impl Add for Capacity {
    type Output = Capacity;
    fn add(self, rhs: Capacity) -> Capacity {
        match (self, rhs) {
            (Capacity::Finite(a), Capacity::Finite(b)) => Capacity::Finite(a + b),
            _ => Capacity::Infinite,
        }
    }
}

impl AddAssign for Capacity {
    fn add_assign(&mut self, rhs: Capacity) {
        let lhs = std::mem::replace(self, Capacity::Infinite);
        *self = lhs + rhs;
    }
}

/// Capacitated digraph with a fixed source and sink.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub node_count: usize,
    pub arcs: Vec<(usize, usize, Capacity)>,
    pub source: usize,
    pub sink: usize,
}

/// Minimum cut: its value and the source side (as a membership mask over
/// network nodes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutResult {
    pub value: Capacity,
    pub source_side: Vec<bool>,
}

impl CutResult {
    pub fn members(&self) -> Vec<usize> {
        self.source_side
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }
}

// Residual edge; paired storage, edge e's reverse is e ^ 1.
#[derive(Debug, Clone)]
struct REdge {
    to: usize,
    cap: Capacity,
    flow: Rat,
}

impl REdge {
    fn residual(&self) -> Capacity {
        match &self.cap {
            Capacity::Infinite => Capacity::Infinite,
            Capacity::Finite(c) => Capacity::Finite(c - &self.flow),
        }
    }
}

/// The state of a solved network: flow values plus the final residual
/// graph, from which both extremal minimum cuts can be read off.
#[derive(Debug)]
pub struct FlowOutcome {
    pub value: Capacity,
    /// Flow per input arc, aligned with `FlowNetwork::arcs`.
    pub flow: Vec<Rat>,
    node_count: usize,
    source: usize,
    sink: usize,
    edges: Vec<REdge>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(node_count: usize, source: usize, sink: usize) -> Self {
        FlowNetwork { node_count, arcs: Vec::new(), source, sink }
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, cap: Capacity) {
        debug_assert!(tail < self.node_count && head < self.node_count);
        self.arcs.push((tail, head, cap));
    }

    /// Maximum flow value and a witnessing feasible flow.
    pub fn max_flow(&self) -> (Capacity, Vec<Rat>) {
        let out = self.solve();
        (out.value, out.flow)
    }

    /// Inclusion-wise minimal minimum cut.
    pub fn min_cut_minimal(&self) -> Result<CutResult, FlowError> {
        self.solve().min_cut_minimal()
    }

    /// Inclusion-wise maximal minimum cut.
    pub fn min_cut_maximal(&self) -> Result<CutResult, FlowError> {
        self.solve().min_cut_maximal()
    }

    /// Runs Edmonds–Karp once; cuts can then be extracted without
    /// re-solving.
    pub fn solve(&self) -> FlowOutcome {
        assert_ne!(self.source, self.sink, "source and sink must differ");
        let mut edges: Vec<REdge> = Vec::with_capacity(2 * self.arcs.len());
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.node_count];
        for &(t, h, ref cap) in &self.arcs {
            adj[t].push(edges.len());
            edges.push(REdge { to: h, cap: cap.clone(), flow: Rat::zero() });
            adj[h].push(edges.len());
            edges.push(REdge { to: t, cap: Capacity::zero(), flow: Rat::zero() });
        }

        // An infinite flow exists iff the sink is reachable through
        // infinite arcs alone; that subgraph never changes during
        // augmentation, so test it once up front.
        if self.reachable_infinite_only() {
            return FlowOutcome {
                value: Capacity::Infinite,
                flow: vec![Rat::zero(); self.arcs.len()],
                node_count: self.node_count,
                source: self.source,
                sink: self.sink,
                edges,
                adj,
            };
        }

        let mut total = Rat::zero();
        loop {
            // BFS for a shortest augmenting path.
            let mut parent_edge: Vec<Option<usize>> = vec![None; self.node_count];
            let mut seen = vec![false; self.node_count];
            seen[self.source] = true;
            let mut queue = VecDeque::from([self.source]);
            'bfs: while let Some(v) = queue.pop_front() {
                for &e in &adj[v] {
                    let w = edges[e].to;
                    if !seen[w] && !edges[e].residual().is_zero() {
                        seen[w] = true;
                        parent_edge[w] = Some(e);
                        if w == self.sink {
                            break 'bfs;
                        }
                        queue.push_back(w);
                    }
                }
            }
            if !seen[self.sink] {
                break;
            }

            // Bottleneck along the path; finite because every s-t path
            // crosses at least one finite arc here.
            let mut bottleneck: Option<Rat> = None;
            let mut v = self.sink;
            while v != self.source {
                let e = parent_edge[v].unwrap();
                if let Capacity::Finite(r) = edges[e].residual() {
                    bottleneck = Some(match bottleneck {
                        None => r,
                        Some(b) => b.min(r),
                    });
                }
                v = edges[e ^ 1].to;
            }
            let delta = bottleneck.expect("augmenting path has a finite arc");
            debug_assert!(delta.is_positive());

            let mut v = self.sink;
            while v != self.source {
                let e = parent_edge[v].unwrap();
                edges[e].flow += &delta;
                edges[e ^ 1].flow -= &delta;
                v = edges[e ^ 1].to;
            }
            total += delta;
        }

        let flow = (0..self.arcs.len()).map(|i| edges[2 * i].flow.clone()).collect();
        FlowOutcome {
            value: Capacity::Finite(total),
            flow,
            node_count: self.node_count,
            source: self.source,
            sink: self.sink,
            edges,
            adj,
        }
    }

    fn reachable_infinite_only(&self) -> bool {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.node_count];
        for &(t, h, ref cap) in &self.arcs {
            if cap.is_infinite() {
                adj[t].push(h);
            }
        }
        let mut seen = vec![false; self.node_count];
        seen[self.source] = true;
        let mut stack = vec![self.source];
        while let Some(v) = stack.pop() {
            if v == self.sink {
                return true;
            }
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }
}

impl FlowOutcome {
    /// Source side = nodes reachable from the source in the residual graph.
    pub fn min_cut_minimal(&self) -> Result<CutResult, FlowError> {
        if self.value.is_infinite() {
            return Err(FlowError::NoFiniteCut);
        }
        let mut side = vec![false; self.node_count];
        side[self.source] = true;
        let mut stack = vec![self.source];
        while let Some(v) = stack.pop() {
            for &e in &self.adj[v] {
                let w = self.edges[e].to;
                if !side[w] && !self.edges[e].residual().is_zero() {
                    side[w] = true;
                    stack.push(w);
                }
            }
        }
        debug_assert!(!side[self.sink]);
        Ok(CutResult { value: self.value.clone(), source_side: side })
    }

    /// Source side = nodes that cannot reach the sink in the residual graph.
    pub fn min_cut_maximal(&self) -> Result<CutResult, FlowError> {
        if self.value.is_infinite() {
            return Err(FlowError::NoFiniteCut);
        }
        // Reverse reachability to the sink over positive-residual edges.
        let mut reaches = vec![false; self.node_count];
        reaches[self.sink] = true;
        let mut stack = vec![self.sink];
        while let Some(v) = stack.pop() {
            for &e in &self.adj[v] {
                // edge e leaves v; its pair enters v, so the tail of the
                // entering edge is edges[e].to
                let w = self.edges[e].to;
                if !reaches[w] && !self.edges[e ^ 1].residual().is_zero() {
                    reaches[w] = true;
                    stack.push(w);
                }
            }
        }
        debug_assert!(!reaches[self.source]);
        let side: Vec<bool> = reaches.iter().map(|r| !r).collect();
        Ok(CutResult { value: self.value.clone(), source_side: side })
    }
}
