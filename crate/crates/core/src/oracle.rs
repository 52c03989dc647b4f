//! Brute-force ground truth at desk scale.
//!
//! Everything here trades time for certainty: full components are listed
//! explicitly, (DCR) is solved as one LP over every valid terminal subset,
//! tight sets are enumerated by scanning all vertex subsets, and the
//! feasibility families and step widths of the decomposition are recomputed
//! from first principles. The rest of the crate is tested against these
//! routines.

use num::{BigInt, One, Signed};
use thiserror::Error;

use crate::decompose::{keep_maximal, keep_minimal, FeasibilityFamilies, PolyhedronPoint};
use crate::model::{rat_int, ComponentVector, Digraph, DirectedFullComponent, Rat};
use crate::simplex::{simplex_solve, Constraint, LinearProgram, SimplexError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {terminals} terminals, oracle limit is {limit}")]
    TooLarge { terminals: usize, limit: usize },
    #[error("directed component relaxation is infeasible")]
    Infeasible,
    #[error("component bound k = {k} must be at least 2")]
    RhoUndefined { k: u64 },
}

/// Terminal subsets eligible as (DCR) constraints: non-empty subsets of
/// R \ {root}, returned as vertex masks in ascending bitmask order.
pub fn valid_terminal_sets(dg: &Digraph) -> Vec<Vec<bool>> {
    let others: Vec<usize> =
        dg.terminals().iter().copied().filter(|&t| t != dg.root).collect();
    let mut sets = Vec::with_capacity((1usize << others.len()).saturating_sub(1));
    for mask in 1u64..(1u64 << others.len()) {
        let mut m = vec![false; dg.vertex_count];
        for (i, &t) in others.iter().enumerate() {
            if mask >> i & 1 == 1 {
                m[t] = true;
            }
        }
        sets.push(m);
    }
    sets
}

/// Every directed full component with at most `max_sources` sources:
/// all terminal–terminal arcs, plus every sink choice over every terminal
/// subset around every Steiner centre.
pub fn enumerate_components(dg: &Digraph, max_sources: usize) -> Vec<DirectedFullComponent> {
    let mut out = Vec::new();
    for (a, arc) in dg.arcs.iter().enumerate() {
        if dg.is_terminal(arc.tail) && dg.is_terminal(arc.head) {
            debug_assert_eq!(dg.arc_id(arc.tail, arc.head), Some(a));
            out.push(DirectedFullComponent::terminal_edge(dg, arc.tail, arc.head));
        }
    }
    for v in dg.steiner_vertices() {
        let mut nbrs: Vec<usize> = dg.neighbours(v).collect();
        nbrs.sort_unstable();
        nbrs.dedup();
        let spanned_max = max_sources.saturating_add(1).min(nbrs.len());
        if nbrs.len() < 2 || spanned_max < 2 {
            continue;
        }
        for mask in 1u64..(1u64 << nbrs.len()) {
            let size = mask.count_ones() as usize;
            if size < 2 || size > spanned_max {
                continue;
            }
            let spanned: Vec<usize> = nbrs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &t)| t)
                .collect();
            for &sink in &spanned {
                let sources: Vec<usize> =
                    spanned.iter().copied().filter(|&t| t != sink).collect();
                out.push(DirectedFullComponent::star(dg, v, sink, &sources));
            }
        }
    }
    out
}

pub const DCR_ORACLE_TERMINAL_LIMIT: usize = 12;

/// Exact (DCR) optimum over all enumerated components and all valid
/// terminal subsets. Usable up to twelve terminals.
pub fn solve_dcr_bruteforce(dg: &Digraph) -> Result<(ComponentVector, Rat), OracleError> {
    let max_sources = dg.terminals().len().saturating_sub(1).max(1);
    solve_dcr_truncated(dg, max_sources)
}

/// (DCR) restricted to components with at most `max_sources` sources.
pub fn solve_dcr_truncated(
    dg: &Digraph,
    max_sources: usize,
) -> Result<(ComponentVector, Rat), OracleError> {
    let t = dg.terminals().len();
    if t > DCR_ORACLE_TERMINAL_LIMIT {
        return Err(OracleError::TooLarge { terminals: t, limit: DCR_ORACLE_TERMINAL_LIMIT });
    }
    let components = enumerate_components(dg, max_sources);
    let lp = LinearProgram {
        num_vars: components.len(),
        objective: components.iter().map(|k| k.cost.clone()).collect(),
        constraints: valid_terminal_sets(dg)
            .iter()
            .map(|mask| Constraint {
                coeffs: components
                    .iter()
                    .enumerate()
                    .filter(|(_, k)| k.crosses(mask))
                    .map(|(i, _)| (i, Rat::one()))
                    .collect(),
                rhs: Rat::one(),
            })
            .collect(),
    };
    match simplex_solve(&lp) {
        Ok(sol) => {
            let mut y = ComponentVector::new();
            for (i, v) in sol.values.iter().enumerate() {
                if v.is_positive() {
                    y.add(components[i].clone(), v);
                }
            }
            Ok((y, sol.objective))
        }
        Err(SimplexError::Infeasible) => Err(OracleError::Infeasible),
        Err(SimplexError::Unbounded) => unreachable!("covering LP with non-negative costs"),
    }
}

/// Checks `y(Δ⁺(U)) ≥ 1` for every valid terminal subset; returns the first
/// violated set, if any.
pub fn check_feasible_dcr(
    dg: &Digraph,
    y: &ComponentVector,
    terminal_limit: usize,
) -> Result<Option<Vec<usize>>, OracleError> {
    let t = dg.terminals().len();
    if t > terminal_limit {
        return Err(OracleError::TooLarge { terminals: t, limit: terminal_limit });
    }
    for mask in valid_terminal_sets(dg) {
        if y.crossing_value(&mask) < Rat::one() {
            let witness =
                mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
            return Ok(Some(witness));
        }
    }
    Ok(None)
}

/// Loss bound for restricting (DCR) to components spanning at most `k`
/// terminals: with `k = 2^t + s`, `s < 2^t`, the bound is
/// `((t+1)·2^t + s) / (t·2^t + s)`.
pub fn borchers_du_rho(k: u64) -> Result<Rat, OracleError> {
    if k < 2 {
        return Err(OracleError::RhoUndefined { k });
    }
    let t = 63 - k.leading_zeros() as u64;
    let pow = BigInt::one() << t;
    let s = BigInt::from(k) - &pow;
    let numer = BigInt::from(t + 1) * &pow + &s;
    let denom = BigInt::from(t) * &pow + &s;
    Ok(Rat::new(numer, denom))
}

fn submodular_violation(
    k: &DirectedFullComponent,
    u: &[bool],
    w: &[bool],
) -> bool {
    let inter: Vec<bool> = u.iter().zip(w).map(|(&a, &b)| a && b).collect();
    let union: Vec<bool> = u.iter().zip(w).map(|(&a, &b)| a || b).collect();
    let lhs = i32::from(k.crosses(u)) + i32::from(k.crosses(w));
    let rhs = i32::from(k.crosses(&inter)) + i32::from(k.crosses(&union));
    lhs < rhs
}

/// Random search for a violation of the crossing-submodularity inequality;
/// returns a witnessing pair if one is found.
pub fn check_submodularity(
    k: &DirectedFullComponent,
    dg: &Digraph,
    trials: usize,
    seed: u64,
) -> Option<(Vec<usize>, Vec<usize>)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let terminals = dg.terminals();
    for _ in 0..trials {
        let mut u = vec![false; dg.vertex_count];
        let mut w = vec![false; dg.vertex_count];
        for &t in terminals {
            if rng.random_bool(0.5) {
                u[t] = true;
            }
            if rng.random_bool(0.5) {
                w[t] = true;
            }
        }
        if submodular_violation(k, &u, &w) {
            let members = |m: &[bool]| {
                m.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
            };
            return Some((members(&u), members(&w)));
        }
    }
    None
}

/// Exhaustive submodularity check over all terminal subset pairs.
pub fn check_submodularity_exhaustive(
    k: &DirectedFullComponent,
    dg: &Digraph,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let terminals = dg.terminals();
    let count = 1u64 << terminals.len();
    for mu in 0..count {
        let mut u = vec![false; dg.vertex_count];
        for (i, &t) in terminals.iter().enumerate() {
            u[t] = mu >> i & 1 == 1;
        }
        for mw in 0..count {
            let mut w = vec![false; dg.vertex_count];
            for (i, &t) in terminals.iter().enumerate() {
                w[t] = mw >> i & 1 == 1;
            }
            if submodular_violation(k, &u, &w) {
                let members = |m: &[bool]| {
                    m.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
                };
                return Some((members(&u), members(&w)));
            }
        }
    }
    None
}

/// All valid vertex subsets (over the whole vertex set, Steiner vertices
/// included), ascending by bitmask.
pub fn valid_vertex_sets(dg: &Digraph) -> Vec<Vec<bool>> {
    let n = dg.vertex_count;
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << n) {
        if mask >> dg.root & 1 == 1 {
            continue;
        }
        let m: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
        if dg.terminals().iter().any(|&t| m[t]) {
            out.push(m);
        }
    }
    out
}

/// Membership test for the mixed polyhedron 𝓘, exhaustive over all valid
/// vertex sets; returns the first violated set.
pub fn check_point_feasible(pt: &PolyhedronPoint, dg: &Digraph) -> Option<Vec<usize>> {
    for mask in valid_vertex_sets(dg) {
        if pt.constraint_value(dg, &mask) < Rat::one() {
            return Some(
                mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect(),
            );
        }
    }
    None
}

/// All tight valid vertex sets of the point, as masks.
pub fn tight_sets(pt: &PolyhedronPoint, dg: &Digraph) -> Vec<Vec<bool>> {
    valid_vertex_sets(dg)
        .into_iter()
        .filter(|mask| pt.constraint_value(dg, mask) == Rat::one())
        .collect()
}

/// Feasibility families recomputed verbatim from the enumerated tight-set
/// list (empty intersections dropped, since they name no source terminal).
pub fn families_bruteforce(
    pt: &PolyhedronPoint,
    dg: &Digraph,
    centre: usize,
    sink: usize,
) -> FeasibilityFamilies {
    let tights = tight_sets(pt, dg);
    let mut candidates: Vec<usize> = dg
        .neighbours(centre)
        .filter(|&w| w != sink)
        .filter(|&w| dg.arc_id(w, centre).map(|a| pt.x.is_positive(a)).unwrap_or(false))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();

    let eligible: Vec<usize> = candidates
        .into_iter()
        .filter(|&w| {
            !tights.iter().any(|u| u[sink] && u[w] && !u[centre])
        })
        .collect();

    let mut at_most_one = Vec::new();
    let mut at_least_one = Vec::new();
    for u in &tights {
        let section: Vec<usize> =
            eligible.iter().copied().filter(|&t| u[t]).collect();
        if section.is_empty() {
            continue;
        }
        if !u[centre] && !u[sink] {
            at_most_one.push(section);
        } else if u[centre] && !u[sink] {
            at_least_one.push(section);
        }
    }

    FeasibilityFamilies {
        centre,
        sink,
        eligible,
        at_most_one: keep_maximal(at_most_one),
        at_least_one: keep_minimal(at_least_one),
    }
}

/// Largest feasible step width recomputed by direct minimization over all
/// valid vertex sets: the arc bound `min_{a∈K} x_a` capped by
/// `slack(U)/α(U)` for every valid set with positive `α`.
pub fn max_lambda_bruteforce(
    pt: &PolyhedronPoint,
    k: &DirectedFullComponent,
    dg: &Digraph,
) -> Rat {
    let mut lambda = k
        .arcs
        .iter()
        .map(|&a| pt.x.get(a))
        .min()
        .expect("component has arcs");
    for mask in valid_vertex_sets(dg) {
        let crossing_arcs = k
            .arcs
            .iter()
            .filter(|&&a| {
                let arc = &dg.arcs[a];
                mask[arc.tail] && !mask[arc.head]
            })
            .count() as i64;
        let alpha = crossing_arcs - i64::from(k.crosses(&mask));
        if alpha <= 0 {
            continue;
        }
        let bound = (pt.constraint_value(dg, &mask) - Rat::one()) / rat_int(alpha);
        lambda = lambda.min(bound);
    }
    lambda
}

/// The four feasibility conditions of a component, checked against the
/// enumerated tight sets: positive arcs, eligible sources, at most one
/// source inside any tight set avoiding centre and sink, at least one
/// source inside any tight set holding the centre but not the sink.
pub fn component_conditions_hold(
    k: &DirectedFullComponent,
    pt: &PolyhedronPoint,
    dg: &Digraph,
) -> bool {
    let Some(centre) = k.centre else {
        return false;
    };
    let sink = k.sink;
    if !k.arcs.iter().all(|&a| pt.x.is_positive(a)) {
        return false; // (a)
    }
    let fam = families_bruteforce(pt, dg, centre, sink);
    if !k.sources.iter().all(|w| fam.eligible.contains(w)) {
        return false; // (b)
    }
    for u in tight_sets(pt, dg) {
        let inside = k.sources.iter().filter(|&&w| u[w]).count();
        if !u[centre] && !u[sink] && inside > 1 {
            return false; // (c)
        }
        if u[centre] && !u[sink] && inside < 1 {
            return false; // (d)
        }
    }
    true
}
