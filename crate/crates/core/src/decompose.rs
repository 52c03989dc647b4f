//! Decomposition of a minimal (BCR) solution into directed full components.
//!
//! Starting from the point `(x, 0)` of the mixed polyhedron
//! `𝓘 = {(x, y) ≥ 0 : x(δ⁺(U)) + y(Δ⁺(U)) ≥ 1 for all valid U}`, weight is
//! shifted step by step from the arcs of a *feasible component* onto its
//! component coordinate until no arc out of a Steiner vertex carries mass;
//! leftover terminal–terminal arcs convert directly into two-terminal
//! components. The result `y` satisfies `Φ(y) = x`, costs exactly the same,
//! and is feasible for (DCR).
//!
//! Feasible components are located through three families of tight sets,
//! each family computed with one exact min-cut per candidate terminal on an
//! auxiliary digraph whose component gadgets re-root every support
//! component at a private node.

use std::collections::BTreeSet;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::flow::{Capacity, FlowNetwork, FlowOutcome};
use crate::model::{rat_int, ArcVector, ComponentVector, Digraph, DirectedFullComponent, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("no feasible component with centre {centre} and sink {sink}: input was not a minimal feasible solution")]
    NoFeasibleComponent { centre: usize, sink: usize },
    #[error("step weight collapsed to zero at centre {centre}, sink {sink}")]
    ZeroStep { centre: usize, sink: usize },
    #[error("arc ({tail}, {head}) still carries mass but touches a Steiner vertex")]
    ResidualSteinerArc { tail: usize, head: usize },
    #[error("step limit {limit} exceeded; aborting runaway decomposition")]
    StepLimitExceeded { limit: usize },
}

/// A point of the mixed polyhedron 𝓘.
#[derive(Debug, Clone, Default)]
pub struct PolyhedronPoint {
    pub x: ArcVector,
    pub y: ComponentVector,
}

impl PolyhedronPoint {
    pub fn from_arc_vector(x: ArcVector) -> Self {
        PolyhedronPoint { x, y: ComponentVector::new() }
    }

    /// x(δ⁺(U)) + y(Δ⁺(U)) for a vertex membership mask.
    pub fn constraint_value(&self, dg: &Digraph, in_u: &[bool]) -> Rat {
        self.x.cut_value(dg, in_u) + self.y.crossing_value(in_u)
    }

    /// The candidate point after shifting `lambda` from K's arcs onto K.
    fn shifted(&self, k: &DirectedFullComponent, lambda: &Rat) -> Self {
        let mut next = self.clone();
        next.apply(k, lambda);
        next
    }

    fn apply(&mut self, k: &DirectedFullComponent, lambda: &Rat) {
        for &a in &k.arcs {
            self.x.sub(a, lambda);
        }
        self.y.add(k.clone(), lambda);
    }
}

/// Auxiliary digraph: the x-support at its values, plus, per support
/// component K, a private node carrying K's sink arc at capacity y_K and
/// its source arcs at infinite capacity. A detached super-source is
/// reserved for per-query forcing arcs.
pub struct SupportDigraph {
    pub node_count: usize,
    pub super_source: usize,
    arcs: Vec<(usize, usize, Capacity)>,
}

pub fn build_support_digraph(pt: &PolyhedronPoint, dg: &Digraph) -> SupportDigraph {
    let mut arcs: Vec<(usize, usize, Capacity)> = Vec::new();
    for (a, v) in pt.x.iter() {
        let arc = &dg.arcs[a];
        arcs.push((arc.tail, arc.head, Capacity::Finite(v.clone())));
    }
    let super_source = dg.vertex_count;
    let mut next = dg.vertex_count + 1;
    for (k, w) in pt.y.iter() {
        let hub = next;
        next += 1;
        for &src in &k.sources {
            arcs.push((src, hub, Capacity::Infinite));
        }
        arcs.push((hub, k.sink, Capacity::Finite(w.clone())));
    }
    SupportDigraph { node_count: next, super_source, arcs }
}

impl SupportDigraph {
    /// Network to `sink` with extra forcing arcs appended.
    pub fn network(&self, sink: usize, extra: &[(usize, usize, Capacity)]) -> FlowNetwork {
        let mut net = FlowNetwork::new(self.node_count, self.super_source, sink);
        for (t, h, c) in &self.arcs {
            net.add_arc(*t, *h, c.clone());
        }
        for (t, h, c) in extra {
            net.add_arc(*t, *h, c.clone());
        }
        net
    }
}

/// The three tight-set families steering component selection for a fixed
/// centre and sink:
///
/// * `eligible`: terminals usable as sources at all,
/// * `at_most_one`: disjoint terminal sets from which a feasible component
///   may take at most one source,
/// * `at_least_one`: disjoint terminal sets that must each contribute a
///   source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityFamilies {
    pub centre: usize,
    pub sink: usize,
    pub eligible: Vec<usize>,
    pub at_most_one: Vec<Vec<usize>>,
    pub at_least_one: Vec<Vec<usize>>,
}

pub(crate) fn keep_maximal(mut sets: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    sets.sort();
    sets.dedup();
    let is_subset =
        |a: &[usize], b: &[usize]| a.iter().all(|v| b.binary_search(v).is_ok());
    let kept: Vec<Vec<usize>> = sets
        .iter()
        .filter(|s| !sets.iter().any(|t| t.len() > s.len() && is_subset(s, t)))
        .cloned()
        .collect();
    kept
}

pub(crate) fn keep_minimal(mut sets: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    sets.sort();
    sets.dedup();
    let is_subset =
        |a: &[usize], b: &[usize]| a.iter().all(|v| b.binary_search(v).is_ok());
    let kept: Vec<Vec<usize>> = sets
        .iter()
        .filter(|s| !sets.iter().any(|t| t.len() < s.len() && is_subset(t, s)))
        .cloned()
        .collect();
    kept
}

/// Source side of a solved cut restricted to original vertices.
fn cut_vertex_set(outcome: &FlowOutcome, n: usize) -> Vec<bool> {
    let cut = outcome.min_cut_minimal().expect("finite cut");
    cut.source_side[..n].to_vec()
}

/// Computes the feasibility families for `(centre, sink)` with one min-cut
/// per candidate terminal and family.
///
/// Every test pins chosen vertices to a cut side by adding infinite arcs:
/// an arc `(s, w)` keeps `w` on the source side, an arc `(z, root)` keeps
/// `z` on the root side. Cut values then range over exactly the valid sets
/// of the wanted shape, so a minimum of 1 witnesses a tight one.
pub fn compute_families(
    pt: &PolyhedronPoint,
    dg: &Digraph,
    centre: usize,
    sink: usize,
) -> FeasibilityFamilies {
    let n = dg.vertex_count;
    let root = dg.root;
    let aux = build_support_digraph(pt, dg);
    let s = aux.super_source;
    let one = Capacity::Finite(Rat::one());
    let inf = || Capacity::Infinite;

    let mut candidates: Vec<usize> = dg
        .neighbours(centre)
        .filter(|&w| w != sink)
        .filter(|&w| {
            dg.arc_id(w, centre).map(|a| pt.x.is_positive(a)).unwrap_or(false)
        })
        .collect();
    candidates.sort_unstable();
    candidates.dedup();

    // Eligibility: w drops out iff some tight valid set contains both the
    // sink and w but not the centre.
    let mut eligible: Vec<usize> = Vec::new();
    for &w in &candidates {
        let extra = [(s, w, inf()), (s, sink, inf()), (centre, root, inf())];
        let net = aux.network(root, &extra);
        let (value, _) = net.max_flow();
        debug_assert!(value >= one);
        if value != one {
            eligible.push(w);
        }
    }

    // At-most-one sets: maximal tight sets avoiding both centre and sink.
    let mut at_most_one: Vec<Vec<usize>> = Vec::new();
    for &w in &eligible {
        let mut extra = vec![(s, w, inf()), (centre, sink, inf())];
        if sink != root {
            extra.push((sink, root, inf()));
        }
        let net = aux.network(root, &extra);
        let outcome = net.solve();
        debug_assert!(outcome.value >= one);
        if outcome.value == one {
            let cut = outcome.min_cut_maximal().expect("finite cut");
            let set: Vec<usize> =
                eligible.iter().copied().filter(|&t| cut.source_side[t]).collect();
            at_most_one.push(set);
        }
    }
    let at_most_one = keep_maximal(at_most_one);

    // At-least-one sets: minimal tight sets containing the centre but not
    // the sink.
    let mut at_least_one: Vec<Vec<usize>> = Vec::new();
    for &w in &eligible {
        let mut extra = vec![(s, w, inf()), (s, centre, inf())];
        if sink != root {
            extra.push((sink, root, inf()));
        }
        let net = aux.network(root, &extra);
        let outcome = net.solve();
        debug_assert!(outcome.value >= one);
        if outcome.value == one {
            let side = cut_vertex_set(&outcome, n);
            let set: Vec<usize> =
                eligible.iter().copied().filter(|&t| side[t]).collect();
            at_least_one.push(set);
        }
    }
    let at_least_one = keep_minimal(at_least_one);

    debug_assert!(pairwise_disjoint(&at_most_one));
    debug_assert!(pairwise_disjoint(&at_least_one));

    FeasibilityFamilies { centre, sink, eligible, at_most_one, at_least_one }
}

fn pairwise_disjoint(sets: &[Vec<usize>]) -> bool {
    let mut seen = BTreeSet::new();
    for s in sets {
        for v in s {
            if !seen.insert(*v) {
                return false;
            }
        }
    }
    true
}

/// Picks a feasible component for the families via bipartite matching:
/// one unit of flow per demanded set, routed through the capped sets
/// (terminals outside every capped set act as their own singleton caps).
pub fn find_feasible_component(
    fam: &FeasibilityFamilies,
    pt: &PolyhedronPoint,
    dg: &Digraph,
) -> Result<DirectedFullComponent, DecomposeError> {
    let fail = || DecomposeError::NoFeasibleComponent { centre: fam.centre, sink: fam.sink };

    if fam.at_least_one.is_empty() {
        // No set demands a source; any single eligible terminal will do.
        // Take the one with the largest arc value (ties to the lowest id)
        // to keep the subsequent step as large as possible.
        let mut best: Option<(usize, Rat)> = None;
        for &w in &fam.eligible {
            let a = dg.arc_id(w, fam.centre).expect("candidate arc exists");
            let v = pt.x.get(a);
            best = match best {
                None => Some((w, v)),
                Some((bw, bv)) => {
                    if v > bv {
                        Some((w, v))
                    } else {
                        Some((bw, bv))
                    }
                }
            };
        }
        let (w, _) = best.ok_or_else(fail)?;
        return Ok(DirectedFullComponent::star(dg, fam.centre, fam.sink, &[w]));
    }

    // Capped nodes: the computed sets plus a singleton per uncovered
    // eligible terminal.
    let mut capped: Vec<Vec<usize>> = fam.at_most_one.clone();
    let covered: BTreeSet<usize> = capped.iter().flatten().copied().collect();
    for &w in &fam.eligible {
        if !covered.contains(&w) {
            capped.push(vec![w]);
        }
    }

    // source -> capped (cap 1) -> demanded (cap 1, when sharing a
    // terminal) -> sink (cap 1)
    let x_base = 2;
    let y_base = x_base + capped.len();
    let node_count = y_base + fam.at_least_one.len();
    let mut net = FlowNetwork::new(node_count, 0, 1);
    let one = || Capacity::Finite(Rat::one());
    for xi in 0..capped.len() {
        net.add_arc(0, x_base + xi, one());
    }
    for yi in 0..fam.at_least_one.len() {
        net.add_arc(y_base + yi, 1, one());
    }
    let mut links: Vec<(usize, usize)> = Vec::new(); // (net arc idx, shared terminal)
    for (xi, xset) in capped.iter().enumerate() {
        for (yi, yset) in fam.at_least_one.iter().enumerate() {
            // lowest shared terminal, if any
            let shared = xset.iter().copied().find(|t| yset.binary_search(t).is_ok());
            if let Some(t) = shared {
                links.push((net.arcs.len(), t));
                net.add_arc(x_base + xi, y_base + yi, one());
            }
        }
    }

    let outcome = net.solve();
    if outcome.value != Capacity::Finite(rat_int(fam.at_least_one.len() as i64)) {
        return Err(fail());
    }

    let mut sources: Vec<usize> = Vec::new();
    for &(arc_idx, t) in &links {
        if outcome.flow[arc_idx].is_one() {
            sources.push(t);
        }
    }
    sources.sort_unstable();
    sources.dedup();
    if sources.len() != fam.at_least_one.len() {
        return Err(fail());
    }
    Ok(DirectedFullComponent::star(dg, fam.centre, fam.sink, &sources))
}

/// Outcome of one weight shift.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub component: DirectedFullComponent,
    pub lambda: Rat,
    /// The valid set that became tight, absent when an arc hit zero first.
    pub binding_set: Option<Vec<usize>>,
}

/// Largest `lambda` keeping the shifted point inside 𝓘.
///
/// Starts at the smallest arc value of the component and repairs downward:
/// each round finds the most violated valid set `U` with one min-cut per
/// terminal and re-tightens `lambda = (x(δ⁺(U)) + y(Δ⁺(U)) − 1) / α(U)`
/// with `α(U) = |δ⁺(U) ∩ K| − Δ⁺_K(U)`. The α values strictly decrease, so
/// this ends after at most n rounds.
pub fn max_step_lambda(
    pt: &PolyhedronPoint,
    k: &DirectedFullComponent,
    dg: &Digraph,
) -> Result<StepResult, DecomposeError> {
    let n = dg.vertex_count;
    let mut lambda = k
        .arcs
        .iter()
        .map(|&a| pt.x.get(a))
        .min()
        .expect("component has arcs");
    if !lambda.is_positive() {
        return Err(DecomposeError::ZeroStep { centre: k.centre.unwrap_or(k.sink), sink: k.sink });
    }
    let mut binding: Option<Vec<bool>> = None;

    let mut rounds = 0usize;
    loop {
        rounds += 1;
        assert!(rounds <= n + 2, "step search must finish within n rounds");

        let candidate = pt.shifted(k, &lambda);
        let aux = build_support_digraph(&candidate, dg);
        let s = aux.super_source;

        let mut worst: Option<(Rat, Vec<bool>)> = None;
        for &w in dg.terminals() {
            if w == dg.root {
                continue;
            }
            let net = aux.network(dg.root, &[(s, w, Capacity::Infinite)]);
            let outcome = net.solve();
            if let Capacity::Finite(value) = &outcome.value {
                if value < &Rat::one() {
                    let better = match &worst {
                        None => true,
                        Some((v, _)) => value < v,
                    };
                    if better {
                        worst = Some((value.clone(), cut_vertex_set(&outcome, n)));
                    }
                }
            }
        }

        let Some((_, in_u)) = worst else {
            let binding_set = binding.map(|mask| {
                mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
            });
            return Ok(StepResult { component: k.clone(), lambda, binding_set });
        };

        // Re-tighten against the violated set, measured at the unshifted
        // point.
        let crossing_arcs = k
            .arcs
            .iter()
            .filter(|&&a| {
                let arc = &dg.arcs[a];
                in_u[arc.tail] && !in_u[arc.head]
            })
            .count() as i64;
        let alpha = crossing_arcs - i64::from(k.crosses(&in_u));
        if alpha <= 0 {
            return Err(DecomposeError::ZeroStep {
                centre: k.centre.unwrap_or(k.sink),
                sink: k.sink,
            });
        }
        let slack = pt.constraint_value(dg, &in_u) - Rat::one();
        let next = slack / rat_int(alpha);
        if !next.is_positive() {
            return Err(DecomposeError::ZeroStep {
                centre: k.centre.unwrap_or(k.sink),
                sink: k.sink,
            });
        }
        debug_assert!(next < lambda);
        lambda = next;
        binding = Some(in_u);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Saturating,
    SetBinding,
}

/// One trace row per extracted component.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub centre: Option<usize>,
    pub sink: usize,
    pub sources: Vec<usize>,
    pub lambda: Rat,
    pub kind: StepKind,
}

/// Per-step capture for verification at oracle scale.
#[derive(Debug, Clone)]
pub struct StepSnapshot {
    pub x: ArcVector,
    pub y: ComponentVector,
    pub families: FeasibilityFamilies,
    pub component: DirectedFullComponent,
    pub lambda: Rat,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DecomposeOptions {
    /// Record a full snapshot before every step (oracle-scale only).
    pub capture_snapshots: bool,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub y: ComponentVector,
    /// Inner-loop iterations, residual conversions included.
    pub extraction_steps: usize,
    pub trace: Vec<StepRecord>,
    pub snapshots: Vec<StepSnapshot>,
}

/// Runs the full decomposition of a minimal feasible (BCR) solution.
pub fn decompose(x: &ArcVector, dg: &Digraph) -> Result<Decomposition, DecomposeError> {
    decompose_with(x, dg, DecomposeOptions::default())
}

pub fn decompose_with(
    x: &ArcVector,
    dg: &Digraph,
    options: DecomposeOptions,
) -> Result<Decomposition, DecomposeError> {
    let n = dg.vertex_count;
    let m = dg.arcs.len() / 2;
    // generous runaway guard; the expected bound is 10·m·n
    let limit = 1000 * m.max(1) * n.max(1);

    let mut pt = PolyhedronPoint::from_arc_vector(x.clone());
    let mut trace: Vec<StepRecord> = Vec::new();
    let mut snapshots: Vec<StepSnapshot> = Vec::new();
    let mut steps = 0usize;

    for centre in 0..n {
        if dg.is_terminal(centre) {
            continue;
        }
        let mut sinks: Vec<usize> = dg.neighbours(centre).collect();
        sinks.sort_unstable();
        sinks.dedup();
        for sink in sinks {
            let arc = dg.arc_id(centre, sink).expect("symmetric digraph");
            while pt.x.is_positive(arc) {
                steps += 1;
                if steps > limit {
                    return Err(DecomposeError::StepLimitExceeded { limit });
                }
                let fam = compute_families(&pt, dg, centre, sink);
                let k = find_feasible_component(&fam, &pt, dg)?;
                let step = max_step_lambda(&pt, &k, dg)?;
                if options.capture_snapshots {
                    snapshots.push(StepSnapshot {
                        x: pt.x.clone(),
                        y: pt.y.clone(),
                        families: fam,
                        component: k.clone(),
                        lambda: step.lambda.clone(),
                    });
                }
                trace.push(StepRecord {
                    centre: Some(centre),
                    sink,
                    sources: k.sources.clone(),
                    lambda: step.lambda.clone(),
                    kind: if step.binding_set.is_some() {
                        StepKind::SetBinding
                    } else {
                        StepKind::Saturating
                    },
                });
                pt.apply(&k, &step.lambda);
            }
        }
    }

    // Whatever mass remains joins two terminals; convert it arc by arc.
    let residual: Vec<(usize, Rat)> = pt.x.iter().map(|(a, v)| (a, v.clone())).collect();
    for (a, v) in residual {
        let (tail, head) = (dg.arcs[a].tail, dg.arcs[a].head);
        if !dg.is_terminal(tail) || !dg.is_terminal(head) {
            return Err(DecomposeError::ResidualSteinerArc { tail, head });
        }
        steps += 1;
        let k = DirectedFullComponent::terminal_edge(dg, tail, head);
        trace.push(StepRecord {
            centre: None,
            sink: head,
            sources: vec![tail],
            lambda: v.clone(),
            kind: StepKind::Saturating,
        });
        pt.y.add(k, &v);
        pt.x.set(a, Rat::zero());
    }
    debug_assert!(pt.x.is_empty());

    Ok(Decomposition { y: pt.y, extraction_steps: steps, trace, snapshots })
}

/// Φ: arc vector of a component vector, summing `y_K` over the components
/// containing each arc. Cost-preserving by construction.
pub fn phi(y: &ComponentVector, dg: &Digraph) -> ArcVector {
    let mut x = ArcVector::new();
    for (k, w) in y.iter() {
        for &a in &k.arcs {
            debug_assert!(a < dg.arcs.len());
            x.add(a, w);
        }
    }
    x
}
