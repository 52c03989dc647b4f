//! Bidirected cut relaxation solver.
//!
//! (BCR) has a constraint `x(δ⁺(U)) ≥ 1` for every valid set `U` (a set
//! containing a terminal but not the root), exponentially many in total.
//! The solver runs lazy constraint generation: solve a restricted LP,
//! separate with one exact min-cut per terminal, add violated sets,
//! repeat. The certified optimum is then pruned to a *minimal* feasible
//! solution, the precondition of the decomposition stage.

use std::collections::BTreeSet;

use log::debug;
use num::{One, Signed, Zero};
use thiserror::Error;

use crate::flow::{Capacity, FlowNetwork};
use crate::model::{ArcVector, Digraph, Rat};
use crate::simplex::{simplex_solve, Constraint, LinearProgram, SimplexError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BcrError {
    #[error("terminal {terminal} cannot reach the root")]
    Infeasible { terminal: usize },
    #[error("restricted LP failed: {0}")]
    Lp(#[from] SimplexError),
}

/// Certified optimal (and minimal) solution of (BCR).
#[derive(Debug, Clone)]
pub struct BcrSolution {
    pub x: ArcVector,
    pub objective_value: Rat,
    /// Valid sets whose cut constraints entered the restricted LP, as
    /// sorted vertex lists, in generation order.
    pub generated_cuts: Vec<Vec<usize>>,
    pub is_minimal: bool,
}

impl BcrSolution {
    /// One generated valid set per line: `U: 0 3 5`.
    pub fn cut_log(&self) -> String {
        let mut out = String::new();
        for cut in &self.generated_cuts {
            out.push_str("U:");
            for v in cut {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// One exact min-cut per terminal; every returned set is valid and has
/// `x(δ⁺(U)) < 1`. An empty result certifies feasibility of `x`.
pub fn separate(dg: &Digraph, x: &ArcVector) -> Vec<Vec<bool>> {
    let mut violated: Vec<Vec<bool>> = Vec::new();
    let mut seen: BTreeSet<Vec<bool>> = BTreeSet::new();
    for &w in dg.terminals() {
        if w == dg.root {
            continue;
        }
        let mut net = FlowNetwork::new(dg.vertex_count, w, dg.root);
        for (a, v) in x.iter() {
            let arc = &dg.arcs[a];
            net.add_arc(arc.tail, arc.head, Capacity::Finite(v.clone()));
        }
        let outcome = net.solve();
        if outcome.value < Capacity::Finite(Rat::one()) {
            let cut = outcome.min_cut_minimal().expect("finite value has a cut");
            debug_assert!(dg.is_valid_set(&cut.source_side));
            if seen.insert(cut.source_side.clone()) {
                violated.push(cut.source_side);
            }
        }
    }
    violated
}

fn mask_to_sorted(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

/// Solves (BCR) to optimality by cutting planes, then applies
/// [`make_minimal`].
pub fn solve_bcr(dg: &Digraph) -> Result<BcrSolution, BcrError> {
    // Reachability pre-check: a terminal that cannot reach the root makes
    // the LP infeasible outright.
    for &w in dg.terminals() {
        if w != dg.root && !reaches_root(dg, w) {
            return Err(BcrError::Infeasible { terminal: w });
        }
    }

    let num_vars = dg.arcs.len();
    let objective: Vec<Rat> = dg.arcs.iter().map(|a| a.cost.clone()).collect();

    // Start from the singleton cuts δ⁺({w}): cheap and they anchor the
    // first LP rounds.
    let mut cut_masks: Vec<Vec<bool>> = Vec::new();
    let mut cut_set: BTreeSet<Vec<bool>> = BTreeSet::new();
    for &w in dg.terminals() {
        if w == dg.root {
            continue;
        }
        let mut mask = vec![false; dg.vertex_count];
        mask[w] = true;
        cut_set.insert(mask.clone());
        cut_masks.push(mask);
    }

    let (x, objective_value) = loop {
        let lp = LinearProgram {
            num_vars,
            objective: objective.clone(),
            constraints: cut_masks
                .iter()
                .map(|mask| Constraint {
                    coeffs: dg
                        .cut_arcs(mask)
                        .into_iter()
                        .map(|a| (a, Rat::one()))
                        .collect(),
                    rhs: Rat::one(),
                })
                .collect(),
        };
        let sol = simplex_solve(&lp)?;
        let x: ArcVector = sol
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_positive())
            .map(|(a, v)| (a, v.clone()))
            .collect();

        let violated = separate(dg, &x);
        if violated.is_empty() {
            break (x, sol.objective);
        }
        debug!(
            "separation round: {} violated sets, {} cuts so far",
            violated.len(),
            cut_masks.len()
        );
        let mut grew = false;
        for mask in violated {
            if cut_set.insert(mask.clone()) {
                cut_masks.push(mask);
                grew = true;
            }
        }
        assert!(grew, "separation returned only cuts already in the LP");
    };

    let minimal = make_minimal(dg, &x);
    debug_assert_eq!(minimal.total_cost(dg), objective_value);
    Ok(BcrSolution {
        x: minimal,
        objective_value,
        generated_cuts: cut_masks.iter().map(|m| mask_to_sorted(m)).collect(),
        is_minimal: true,
    })
}

fn reaches_root(dg: &Digraph, from: usize) -> bool {
    let mut seen = vec![false; dg.vertex_count];
    seen[from] = true;
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == dg.root {
            return true;
        }
        for &a in dg.out_arcs(v) {
            let h = dg.arcs[a].head;
            if !seen[h] {
                seen[h] = true;
                stack.push(h);
            }
        }
    }
    false
}

/// Prunes a feasible solution to a minimal one: in ascending arc order,
/// each arc value is lowered by the smallest slack over the valid cuts
/// containing the arc (all of it when no valid cut does).
///
/// The slack for arc `a = (p, q)` is found with one min-cut per candidate
/// terminal `w`: an auxiliary super-source forces `p` and `w` onto the
/// source side, and an infinite arc `(q, root)` keeps `q` on the root side.
pub fn make_minimal(dg: &Digraph, x: &ArcVector) -> ArcVector {
    let n = dg.vertex_count;
    let s = n; // super-source node id
    let mut x = x.clone();
    for a in 0..dg.arcs.len() {
        if !x.is_positive(a) {
            continue;
        }
        let (p, q) = (dg.arcs[a].tail, dg.arcs[a].head);
        let mut slack: Option<Rat> = None;
        for &w in dg.terminals() {
            if w == dg.root || w == q {
                continue;
            }
            let mut net = FlowNetwork::new(n + 1, s, dg.root);
            for (b, v) in x.iter() {
                let arc = &dg.arcs[b];
                net.add_arc(arc.tail, arc.head, Capacity::Finite(v.clone()));
            }
            net.add_arc(s, p, Capacity::Infinite);
            net.add_arc(s, w, Capacity::Infinite);
            if q != dg.root {
                net.add_arc(q, dg.root, Capacity::Infinite);
            }
            let (value, _) = net.max_flow();
            if let Capacity::Finite(v) = value {
                let candidate = v - Rat::one();
                debug_assert!(!candidate.is_negative(), "input must be feasible");
                slack = Some(match slack {
                    None => candidate,
                    Some(best) => best.min(candidate),
                });
            }
        }
        match slack {
            // the arc lies in no valid cut: drop it entirely
            None => x.set(a, Rat::zero()),
            Some(sl) => {
                let dec = sl.min(x.get(a));
                if dec.is_positive() {
                    x.sub(a, &dec);
                }
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bidirect, mask_of, rat_int, Instance};

    fn path_rva() -> Digraph {
        // r=0 — v=1 — a=2, unit costs, terminals {0, 2}, root 0
        let inst = Instance::new(
            3,
            vec![(0, 1, rat_int(1)), (1, 2, rat_int(1))],
            vec![0, 2],
            0,
        )
        .unwrap();
        bidirect(&inst)
    }

    fn star() -> Digraph {
        // terminals r=0, a=1, b=2 around Steiner v=3, unit costs
        let inst = Instance::new(
            4,
            vec![(0, 3, rat_int(1)), (1, 3, rat_int(1)), (2, 3, rat_int(1))],
            vec![0, 1, 2],
            0,
        )
        .unwrap();
        bidirect(&inst)
    }

    #[test]
    fn separate_finds_everything_at_zero() {
        let dg = path_rva();
        let violated = separate(&dg, &ArcVector::new());
        assert_eq!(violated.len(), 1);
        assert!(violated[0][2]); // contains terminal a
        assert!(!violated[0][0]);
    }

    #[test]
    fn separate_accepts_arborescence() {
        let dg = path_rva();
        let mut x = ArcVector::new();
        x.set(dg.arc_id(2, 1).unwrap(), rat_int(1));
        x.set(dg.arc_id(1, 0).unwrap(), rat_int(1));
        assert!(separate(&dg, &x).is_empty());
    }

    #[test]
    fn separate_finds_fractional_violation() {
        let dg = star();
        let mut x = ArcVector::new();
        x.set(dg.arc_id(1, 3).unwrap(), rat_int(1));
        x.set(dg.arc_id(2, 3).unwrap(), rat_int(1));
        x.set(dg.arc_id(3, 0).unwrap(), crate::model::rat(1, 2));
        let violated = separate(&dg, &x);
        assert!(!violated.is_empty());
        // each reported set is valid and beats the cut threshold by 1/2,
        // like the fully-enumerated witness {a, b, v} does
        let witness = x.cut_value(&dg, &mask_of(4, &[1, 2, 3]));
        assert_eq!(witness, crate::model::rat(1, 2));
        for m in &violated {
            assert!(dg.is_valid_set(m));
            assert_eq!(x.cut_value(&dg, m), witness);
        }
    }

    #[test]
    fn solve_bcr_on_path() {
        let dg = path_rva();
        let sol = solve_bcr(&dg).unwrap();
        assert_eq!(sol.objective_value, rat_int(2));
        assert_eq!(sol.x.get(dg.arc_id(2, 1).unwrap()), rat_int(1));
        assert_eq!(sol.x.get(dg.arc_id(1, 0).unwrap()), rat_int(1));
        assert_eq!(sol.x.iter().count(), 2);
        assert!(sol.is_minimal);
    }

    #[test]
    fn solve_bcr_on_star() {
        let dg = star();
        let sol = solve_bcr(&dg).unwrap();
        assert_eq!(sol.objective_value, rat_int(3));
        assert_eq!(sol.x.get(dg.arc_id(1, 3).unwrap()), rat_int(1));
        assert_eq!(sol.x.get(dg.arc_id(2, 3).unwrap()), rat_int(1));
        assert_eq!(sol.x.get(dg.arc_id(3, 0).unwrap()), rat_int(1));
    }

    #[test]
    fn solve_bcr_single_terminal() {
        let inst = Instance::new(2, vec![(0, 1, rat_int(1))], vec![0], 0).unwrap();
        let sol = solve_bcr(&bidirect(&inst)).unwrap();
        assert!(sol.x.is_empty());
        assert_eq!(sol.objective_value, rat_int(0));
    }

    #[test]
    fn solve_bcr_detects_disconnected_terminal() {
        let inst = Instance::new(3, vec![(0, 1, rat_int(1))], vec![0, 2], 0).unwrap();
        assert_eq!(
            solve_bcr(&bidirect(&inst)).unwrap_err(),
            BcrError::Infeasible { terminal: 2 }
        );
    }

    #[test]
    fn make_minimal_is_fixed_point_on_minimal_input() {
        let dg = path_rva();
        let sol = solve_bcr(&dg).unwrap();
        assert_eq!(make_minimal(&dg, &sol.x), sol.x);
    }

    #[test]
    fn make_minimal_prunes_doubled_path() {
        let dg = path_rva();
        let mut x = ArcVector::new();
        for a in 0..dg.arcs.len() {
            x.set(a, rat_int(2));
        }
        let pruned = make_minimal(&dg, &x);
        assert_eq!(pruned.get(dg.arc_id(2, 1).unwrap()), rat_int(1));
        assert_eq!(pruned.get(dg.arc_id(1, 0).unwrap()), rat_int(1));
        assert_eq!(pruned.iter().count(), 2);
    }

    #[test]
    fn make_minimal_zeroes_dead_end_arc() {
        // r=0 — a=1 plus Steiner leaf v=2 hanging off a
        let inst = Instance::new(
            3,
            vec![(0, 1, rat_int(1)), (1, 2, rat_int(1))],
            vec![0, 1],
            0,
        )
        .unwrap();
        let dg = bidirect(&inst);
        let mut x = ArcVector::new();
        x.set(dg.arc_id(1, 0).unwrap(), rat_int(1));
        x.set(dg.arc_id(1, 2).unwrap(), rat_int(1));
        let pruned = make_minimal(&dg, &x);
        assert_eq!(pruned.get(dg.arc_id(1, 0).unwrap()), rat_int(1));
        assert_eq!(pruned.get(dg.arc_id(1, 2).unwrap()), rat_int(0));
    }
}
