//! Steiner-centre sampling on top of a (BCR) solution.
//!
//! Each round draws one Steiner vertex `v` with probability
//! `x(δ⁺(v)) / M`, where `M` is the total outgoing mass over all Steiner
//! vertices; the result is a minimum spanning tree over the terminals and
//! the drawn vertices. Draws are exact: the rational probabilities are
//! realized by a uniform integer below their common denominator, so no
//! floating point enters the distribution.

use std::collections::BTreeMap;

use num::bigint::BigUint;
use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{ArcVector, ComponentVector, Digraph, Instance, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SampleError {
    #[error("no Steiner mass but the terminals do not span a connected subgraph; x cannot be feasible")]
    ZeroMass,
    #[error("sampled subgraph stayed disconnected after {retries} redraws")]
    DisconnectedAfterRetries { retries: u32 },
}

/// Upper bound on ln 3 with 16 decimal digits; rounding up only ever adds
/// rounds, which helps connectivity.
fn ln3_upper() -> Rat {
    Rat::new(BigInt::from(10_986_122_886_681_097u64), BigInt::from(10_000_000_000_000_000u64))
}

/// Fixed sampling distribution derived from an arc vector.
#[derive(Debug, Clone)]
pub struct SamplingPlan {
    /// x(δ⁺(v)) per Steiner vertex, zero masses omitted.
    pub mass_per_centre: BTreeMap<usize, Rat>,
    /// M: total outgoing Steiner mass.
    pub total_mass: Rat,
    /// ⌈M·ln 3⌉ draws per trial.
    pub rounds: usize,
    pub seed: u64,
    // integer weights over the common denominator, for exact draws
    weights: Vec<(usize, BigUint)>,
    weight_sum: BigUint,
}

impl SamplingPlan {
    /// Exact per-centre probabilities `mass / M`.
    pub fn probabilities(&self) -> Vec<(usize, Rat)> {
        self.mass_per_centre
            .iter()
            .map(|(&v, m)| (v, m / &self.total_mass))
            .collect()
    }
}

/// Derives the sampling plan of an arc vector (normally a feasible (BCR)
/// solution).
pub fn build_plan(x: &ArcVector, dg: &Digraph, seed: u64) -> Result<SamplingPlan, SampleError> {
    let mut mass_per_centre = BTreeMap::new();
    let mut total_mass = Rat::zero();
    for v in dg.steiner_vertices() {
        let m = x.out_value(dg, v);
        if m.is_positive() {
            total_mass += &m;
            mass_per_centre.insert(v, m);
        }
    }

    if total_mass.is_zero() {
        // Feasibility forces the terminals to hang together on their own
        // terminal–terminal support; anything else means x was not a
        // (BCR) solution in the first place.
        if dg.terminals().len() >= 2 && !terminal_support_connected(x, dg) {
            return Err(SampleError::ZeroMass);
        }
        return Ok(SamplingPlan {
            mass_per_centre,
            total_mass,
            rounds: 0,
            seed,
            weights: Vec::new(),
            weight_sum: BigUint::zero(),
        });
    }

    let rounds = (&total_mass * ln3_upper())
        .ceil()
        .to_integer()
        .to_usize()
        .expect("round count fits a machine word");

    // probabilities over one common denominator; the numerators sum to
    // exactly that denominator
    let probs: Vec<(usize, Rat)> =
        mass_per_centre.iter().map(|(&v, m)| (v, m / &total_mass)).collect();
    let mut denom = BigInt::one();
    for (_, p) in &probs {
        denom = denom.lcm(p.denom());
    }
    let mut weights = Vec::with_capacity(probs.len());
    let mut weight_sum = BigUint::zero();
    for (v, p) in &probs {
        let w = (p * &denom).to_integer().to_biguint().expect("probabilities are positive");
        weight_sum += &w;
        weights.push((*v, w));
    }
    debug_assert_eq!(Some(weight_sum.clone()), denom.to_biguint());

    Ok(SamplingPlan { mass_per_centre, total_mass, rounds, seed, weights, weight_sum })
}

fn terminal_support_connected(x: &ArcVector, dg: &Digraph) -> bool {
    let mut uf = UnionFind::new(dg.vertex_count);
    for (a, _) in x.iter() {
        let arc = &dg.arcs[a];
        if dg.is_terminal(arc.tail) && dg.is_terminal(arc.head) {
            uf.union(arc.tail, arc.head);
        }
    }
    let root = dg.root;
    dg.terminals().iter().all(|&t| uf.find(t) == uf.find(root))
}

/// Integral Steiner tree produced by one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledTree {
    /// Drawn Steiner vertices in draw order (a multiset).
    pub sampled: Vec<usize>,
    /// Edge indices into the instance's edge list.
    pub tree_edges: Vec<usize>,
    pub cost: Rat,
    pub retries: u32,
}

const RETRY_BUDGET: u32 = 64;

/// Runs one sampling trial: draw `rounds` centres, then span the terminals
/// plus the drawn vertices by a minimum spanning tree. A draw whose induced
/// subgraph is disconnected is discarded wholesale and redrawn.
pub fn sample_tree(
    plan: &SamplingPlan,
    inst: &Instance,
    trial: u64,
) -> Result<SampledTree, SampleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    rng.set_stream(trial);

    let mut retries = 0u32;
    loop {
        let sampled = draw_centres(plan, &mut rng);
        match spanning_tree(inst, &sampled) {
            Some((tree_edges, cost)) => {
                return Ok(SampledTree { sampled, tree_edges, cost, retries })
            }
            None => {
                retries += 1;
                if retries >= RETRY_BUDGET {
                    return Err(SampleError::DisconnectedAfterRetries { retries });
                }
            }
        }
    }
}

fn draw_centres(plan: &SamplingPlan, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(plan.rounds);
    for _ in 0..plan.rounds {
        let mut ticket = uniform_below(rng, &plan.weight_sum);
        let mut chosen = None;
        for (v, w) in &plan.weights {
            if &ticket < w {
                chosen = Some(*v);
                break;
            }
            ticket -= w;
        }
        out.push(chosen.expect("weights sum to the ticket bound"));
    }
    out
}

/// Uniform integer in `[0, bound)` from whole random words, by rejection.
fn uniform_below(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    let bits = bound.bits();
    assert!(bits > 0, "bound must be positive");
    loop {
        let mut val = BigUint::zero();
        let mut remaining = bits;
        while remaining > 0 {
            let take = remaining.min(64);
            let mut chunk: u64 = rng.random();
            if take < 64 {
                chunk &= (1u64 << take) - 1;
            }
            val = (val << take) | BigUint::from(chunk);
            remaining -= take;
        }
        if &val < bound {
            return val;
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, v: usize) -> usize {
        if self.parent[v] != v {
            let r = self.find(self.parent[v]);
            self.parent[v] = r;
        }
        self.parent[v]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.rank[ra] < self.rank[rb] {
            self.parent[ra] = rb;
        } else {
            self.parent[rb] = ra;
            if self.rank[ra] == self.rank[rb] {
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Kruskal over the subgraph induced on terminals plus sampled vertices;
/// ties break on the edge index. None when that subgraph cannot span.
fn spanning_tree(inst: &Instance, sampled: &[usize]) -> Option<(Vec<usize>, Rat)> {
    let mut keep = vec![false; inst.vertex_count];
    for &t in inst.terminals() {
        keep[t] = true;
    }
    for &v in sampled {
        keep[v] = true;
    }
    let members = keep.iter().filter(|&&b| b).count();
    if members <= 1 {
        return Some((Vec::new(), Rat::zero()));
    }

    let mut order: Vec<usize> = (0..inst.edges.len())
        .filter(|&i| keep[inst.edges[i].u] && keep[inst.edges[i].v])
        .collect();
    order.sort_by(|&i, &j| inst.edges[i].cost.cmp(&inst.edges[j].cost).then(i.cmp(&j)));

    let mut uf = UnionFind::new(inst.vertex_count);
    let mut tree = Vec::with_capacity(members - 1);
    let mut cost = Rat::zero();
    for i in order {
        let e = &inst.edges[i];
        if uf.union(e.u, e.v) {
            tree.push(i);
            cost += &e.cost;
            if tree.len() == members - 1 {
                return Some((tree, cost));
            }
        }
    }
    None
}

/// Identity the sampler relies on: for every Steiner vertex the outgoing
/// arc mass equals the total weight of components centred there. Requires
/// that `y` maps onto `x` arc-for-arc.
pub fn verify_distribution(x: &ArcVector, y: &ComponentVector, dg: &Digraph) -> bool {
    dg.steiner_vertices().all(|v| x.out_value(dg, v) == y.mass_at_centre(v))
}
