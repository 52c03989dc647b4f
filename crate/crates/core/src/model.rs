//! Graph and component data model shared by all solver stages.
//!
//! Everything numeric is an exact rational ([`Rat`]); vertex ids are dense
//! integers `0..n` with terminals flagged by a membership table so that the
//! hot cut loops get O(1) tests. All types are immutable values after
//! construction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use num::{BigInt, BigRational, Signed, Zero};
use thiserror::Error;

/// Exact rational number used for every cost, LP value and step width.
pub type Rat = BigRational;

/// Shorthand for building a rational from machine integers.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn rat_int(num: i64) -> Rat {
    Rat::from_integer(BigInt::from(num))
}

/// Renders a rational as `p/q`, always with an explicit denominator.
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("edge {{{u}, {v}}} joins two Steiner vertices (instance is not quasi-bipartite)")]
    SteinerSteinerEdge { u: usize, v: usize },
    #[error("edge {{{u}, {v}}} has negative cost")]
    NegativeCost { u: usize, v: usize },
    #[error("root {root} is not a terminal")]
    RootNotTerminal { root: usize },
    #[error("terminal set is empty")]
    EmptyTerminalSet,
    #[error("self-loop at vertex {v}")]
    SelfLoop { v: usize },
    #[error("vertex id {v} out of range (n = {n})")]
    VertexOutOfRange { v: usize, n: usize },
}

/// Undirected edge with exact cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: Rat,
}

/// A validated quasi-bipartite Steiner tree instance.
///
/// Construction canonicalizes the edge list: parallel edges are collapsed
/// to the cheapest copy, self-loops and Steiner–Steiner edges are rejected,
/// and the root must be a terminal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
    terminals: Vec<usize>,
    is_terminal: Vec<bool>,
    pub root: usize,
}

impl Instance {
    pub fn new(
        vertex_count: usize,
        edges: Vec<(usize, usize, Rat)>,
        terminals: Vec<usize>,
        root: usize,
    ) -> Result<Self, ModelError> {
        if terminals.is_empty() {
            return Err(ModelError::EmptyTerminalSet);
        }
        let mut is_terminal = vec![false; vertex_count];
        for &t in &terminals {
            if t >= vertex_count {
                return Err(ModelError::VertexOutOfRange { v: t, n: vertex_count });
            }
            is_terminal[t] = true;
        }
        if root >= vertex_count || !is_terminal[root] {
            return Err(ModelError::RootNotTerminal { root });
        }

        let mut canonical: Vec<Edge> = Vec::new();
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (u, v, cost) in edges {
            if u >= vertex_count || v >= vertex_count {
                let w = if u >= vertex_count { u } else { v };
                return Err(ModelError::VertexOutOfRange { v: w, n: vertex_count });
            }
            if u == v {
                return Err(ModelError::SelfLoop { v: u });
            }
            if !is_terminal[u] && !is_terminal[v] {
                return Err(ModelError::SteinerSteinerEdge { u, v });
            }
            if cost.is_negative() {
                return Err(ModelError::NegativeCost { u, v });
            }
            let key = (u.min(v), u.max(v));
            match seen.get(&key) {
                Some(&idx) => {
                    // cheapest parallel copy wins
                    if cost < canonical[idx].cost {
                        canonical[idx].cost = cost;
                    }
                }
                None => {
                    seen.insert(key, canonical.len());
                    canonical.push(Edge { u: key.0, v: key.1, cost });
                }
            }
        }

        let mut terminals: Vec<usize> = terminals;
        terminals.sort_unstable();
        terminals.dedup();

        Ok(Instance { vertex_count, edges: canonical, terminals, is_terminal, root })
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        self.is_terminal[v]
    }

    pub fn steiner_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertex_count).filter(move |&v| !self.is_terminal[v])
    }

    /// True iff the whole graph is connected (ignoring direction).
    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.vertex_count];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

pub type ArcId = usize;

/// Directed arc with exact cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub cost: Rat,
}

/// Bidirection of an instance: every edge `uv` becomes arcs `(u,v)` and
/// `(v,u)` of equal cost. Carries the terminal structure of the instance
/// so that cut and crossing queries need no extra context.
#[derive(Debug, Clone)]
pub struct Digraph {
    pub vertex_count: usize,
    pub arcs: Vec<Arc>,
    out_arcs: Vec<Vec<ArcId>>,
    lookup: HashMap<(usize, usize), ArcId>,
    terminals: Vec<usize>,
    is_terminal: Vec<bool>,
    pub root: usize,
}

/// Replaces each edge `uv` with the two arcs `(u,v)` and `(v,u)`.
pub fn bidirect(inst: &Instance) -> Digraph {
    let mut arcs = Vec::with_capacity(2 * inst.edges.len());
    let mut out_arcs = vec![Vec::new(); inst.vertex_count];
    let mut lookup = HashMap::new();
    for e in &inst.edges {
        for (t, h) in [(e.u, e.v), (e.v, e.u)] {
            let id = arcs.len();
            arcs.push(Arc { tail: t, head: h, cost: e.cost.clone() });
            out_arcs[t].push(id);
            lookup.insert((t, h), id);
        }
    }
    Digraph {
        vertex_count: inst.vertex_count,
        arcs,
        out_arcs,
        lookup,
        terminals: inst.terminals.clone(),
        is_terminal: inst.is_terminal.clone(),
        root: inst.root,
    }
}

impl Digraph {
    pub fn arc_id(&self, tail: usize, head: usize) -> Option<ArcId> {
        self.lookup.get(&(tail, head)).copied()
    }

    pub fn out_arcs(&self, v: usize) -> &[ArcId] {
        &self.out_arcs[v]
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        self.is_terminal[v]
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn steiner_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertex_count).filter(move |&v| !self.is_terminal[v])
    }

    /// Out-neighbours of `v` in ascending arc order.
    pub fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_arcs[v].iter().map(move |&a| self.arcs[a].head)
    }

    /// δ⁺(U): arcs with tail in `U` and head outside, for a membership mask
    /// over the vertex ids.
    pub fn cut_arcs(&self, in_u: &[bool]) -> Vec<ArcId> {
        self.arcs
            .iter()
            .enumerate()
            .filter(|(_, a)| in_u[a.tail] && !in_u[a.head])
            .map(|(id, _)| id)
            .collect()
    }

    /// A set is valid when it contains a terminal but not the root.
    pub fn is_valid_set(&self, in_u: &[bool]) -> bool {
        !in_u[self.root] && self.terminals.iter().any(|&t| in_u[t])
    }
}

/// Directed full component: a star of arcs oriented towards its sink
/// terminal, around an optional Steiner centre.
///
/// Identity (ordering, equality) is the triple `(centre, sink, sources)`;
/// the arc list and cost are derived data.
#[derive(Debug, Clone)]
pub struct DirectedFullComponent {
    pub sink: usize,
    pub sources: Vec<usize>,
    pub centre: Option<usize>,
    pub arcs: Vec<ArcId>,
    pub cost: Rat,
}

impl DirectedFullComponent {
    /// Centred star: arcs `{(w, centre) : w ∈ sources} ∪ {(centre, sink)}`.
    ///
    /// Panics if a required arc is missing from the digraph; callers only
    /// assemble components from existing adjacency.
    pub fn star(dg: &Digraph, centre: usize, sink: usize, sources: &[usize]) -> Self {
        assert!(!sources.is_empty(), "a full component needs at least one source");
        let mut sources: Vec<usize> = sources.to_vec();
        sources.sort_unstable();
        sources.dedup();
        assert!(!sources.contains(&sink), "sink cannot be a source");
        let mut arcs = Vec::with_capacity(sources.len() + 1);
        let mut cost = Rat::zero();
        for &w in &sources {
            let a = dg.arc_id(w, centre).expect("source arc exists");
            cost += &dg.arcs[a].cost;
            arcs.push(a);
        }
        let a = dg.arc_id(centre, sink).expect("sink arc exists");
        cost += &dg.arcs[a].cost;
        arcs.push(a);
        DirectedFullComponent { sink, sources, centre: Some(centre), arcs, cost }
    }

    /// Two-terminal component: the single arc `(source, sink)`.
    pub fn terminal_edge(dg: &Digraph, source: usize, sink: usize) -> Self {
        let a = dg.arc_id(source, sink).expect("terminal-terminal arc exists");
        DirectedFullComponent {
            sink,
            sources: vec![source],
            centre: None,
            arcs: vec![a],
            cost: dg.arcs[a].cost.clone(),
        }
    }

    /// Δ⁺_K(U): 1 iff the sink lies outside `U` and some source lies in `U`.
    pub fn crosses(&self, in_u: &[bool]) -> bool {
        !in_u[self.sink] && self.sources.iter().any(|&w| in_u[w])
    }

    fn key(&self) -> (Option<usize>, usize, &[usize]) {
        (self.centre, self.sink, &self.sources)
    }
}

impl PartialEq for DirectedFullComponent {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for DirectedFullComponent {}

impl PartialOrd for DirectedFullComponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DirectedFullComponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Sparse exact-rational vector over arcs; zero entries are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArcVector {
    entries: BTreeMap<ArcId, Rat>,
}

impl ArcVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, a: ArcId) -> Rat {
        self.entries.get(&a).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_positive(&self, a: ArcId) -> bool {
        self.entries.contains_key(&a)
    }

    pub fn set(&mut self, a: ArcId, value: Rat) {
        assert!(!value.is_negative(), "arc values must stay non-negative");
        if value.is_zero() {
            self.entries.remove(&a);
        } else {
            self.entries.insert(a, value);
        }
    }

    pub fn add(&mut self, a: ArcId, delta: &Rat) {
        let v = self.get(a) + delta;
        self.set(a, v);
    }

    pub fn sub(&mut self, a: ArcId, delta: &Rat) {
        let v = self.get(a) - delta;
        self.set(a, v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (ArcId, &Rat)> {
        self.entries.iter().map(|(&a, r)| (a, r))
    }

    pub fn support(&self) -> impl Iterator<Item = ArcId> + '_ {
        self.entries.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// x(δ⁺(U)) for a vertex membership mask.
    pub fn cut_value(&self, dg: &Digraph, in_u: &[bool]) -> Rat {
        let mut sum = Rat::zero();
        for (a, v) in self.iter() {
            let arc = &dg.arcs[a];
            if in_u[arc.tail] && !in_u[arc.head] {
                sum += v;
            }
        }
        sum
    }

    /// c·x over the digraph's arc costs.
    pub fn total_cost(&self, dg: &Digraph) -> Rat {
        let mut sum = Rat::zero();
        for (a, v) in self.iter() {
            sum += v * &dg.arcs[a].cost;
        }
        sum
    }

    /// x(δ⁺(v)): total value on arcs leaving a single vertex.
    pub fn out_value(&self, dg: &Digraph, v: usize) -> Rat {
        let mut sum = Rat::zero();
        for &a in dg.out_arcs(v) {
            if let Some(val) = self.entries.get(&a) {
                sum += val;
            }
        }
        sum
    }
}

impl FromIterator<(ArcId, Rat)> for ArcVector {
    fn from_iter<I: IntoIterator<Item = (ArcId, Rat)>>(iter: I) -> Self {
        let mut v = ArcVector::new();
        for (a, r) in iter {
            v.set(a, r);
        }
        v
    }
}

/// Sparse exact-rational vector over directed full components, keyed by
/// `(centre, sink, sources)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComponentVector {
    entries: BTreeMap<DirectedFullComponent, Rat>,
}

impl ComponentVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, k: &DirectedFullComponent) -> Rat {
        self.entries.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add(&mut self, k: DirectedFullComponent, delta: &Rat) {
        let v = self.get(&k) + delta;
        assert!(!v.is_negative(), "component weights must stay non-negative");
        if v.is_zero() {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DirectedFullComponent, &Rat)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// y(Δ⁺(U)): total weight of components crossing the set.
    pub fn crossing_value(&self, in_u: &[bool]) -> Rat {
        let mut sum = Rat::zero();
        for (k, v) in self.iter() {
            if k.crosses(in_u) {
                sum += v;
            }
        }
        sum
    }

    /// 1ᵀy over all components.
    pub fn total_mass(&self) -> Rat {
        let mut sum = Rat::zero();
        for (_, v) in self.iter() {
            sum += v;
        }
        sum
    }

    /// Total weight of components centred at `v`.
    pub fn mass_at_centre(&self, v: usize) -> Rat {
        let mut sum = Rat::zero();
        for (k, w) in self.iter() {
            if k.centre == Some(v) {
                sum += w;
            }
        }
        sum
    }

    /// Total weight of centre-less (terminal–terminal) components.
    pub fn edge_component_mass(&self) -> Rat {
        let mut sum = Rat::zero();
        for (k, w) in self.iter() {
            if k.centre.is_none() {
                sum += w;
            }
        }
        sum
    }

    /// Σ c_K y_K.
    pub fn total_cost(&self) -> Rat {
        let mut sum = Rat::zero();
        for (k, v) in self.iter() {
            sum += v * &k.cost;
        }
        sum
    }
}

/// Builds a vertex membership mask from a set of ids.
pub fn mask_of(n: usize, members: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in members {
        m[v] = true;
    }
    m
}
