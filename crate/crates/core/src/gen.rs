//! Random quasi-bipartite instance generator for tests and experiments.

use rand::Rng;

use crate::model::{Instance, Rat};
use num::BigInt;

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_vertices: usize,
    pub max_terminals: usize,
    pub max_cost_numer: i64,
    pub max_cost_denom: i64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_vertices: 12, max_terminals: 7, max_cost_numer: 20, max_cost_denom: 5 }
    }
}

fn random_cost(rng: &mut impl Rng, cfg: &GenConfig) -> Rat {
    // mostly positive; the occasional zero-cost edge exercises degeneracy
    let numer = if rng.random_range(0..20) == 0 {
        0
    } else {
        rng.random_range(1..=cfg.max_cost_numer)
    };
    let denom = rng.random_range(1..=cfg.max_cost_denom);
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

/// Connected quasi-bipartite instance with random terminals, random root
/// and random rational costs. Every edge touches at least one terminal by
/// construction.
pub fn random_instance(rng: &mut impl Rng, cfg: &GenConfig) -> Instance {
    let n = rng.random_range(2..=cfg.max_vertices.max(2));
    let t_max = cfg.max_terminals.min(n);
    let t = if t_max >= 2 && rng.random_range(0..10) > 0 {
        rng.random_range(2..=t_max)
    } else {
        1
    };

    let mut ids: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    let terminals: Vec<usize> = ids[..t].to_vec();
    let root = terminals[rng.random_range(0..t)];
    let is_terminal = {
        let mut m = vec![false; n];
        for &v in &terminals {
            m[v] = true;
        }
        m
    };

    let density = 0.35 + rng.random_range(0..=45) as f64 / 100.0;
    let mut edges: Vec<(usize, usize, Rat)> = Vec::new();
    let mut present = std::collections::HashSet::new();
    for u in 0..n {
        for v in u + 1..n {
            if !is_terminal[u] && !is_terminal[v] {
                continue;
            }
            if rng.random_bool(density) {
                present.insert((u, v));
                edges.push((u, v, random_cost(rng, cfg)));
            }
        }
    }

    // Connectivity repair: union-find, then stitch stray components to the
    // root's component through an allowed (terminal-touching) pair.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, v: usize) -> usize {
        if parent[v] != v {
            let r = find(parent, parent[v]);
            parent[v] = r;
        }
        parent[v]
    }
    for &(u, v, _) in &edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
        }
    }
    loop {
        let root_comp = find(&mut parent, root);
        let stray = (0..n).find(|&v| find(&mut parent, v) != root_comp);
        let Some(v) = stray else { break };
        // pick a partner in the root component; if v is Steiner it must be
        // a terminal
        let partners: Vec<usize> = (0..n)
            .filter(|&u| find(&mut parent, u) == root_comp)
            .filter(|&u| is_terminal[u] || is_terminal[v])
            .collect();
        let u = if partners.is_empty() {
            // root component holds no terminal-compatible partner; fall
            // back to the root itself (always a terminal)
            root
        } else {
            partners[rng.random_range(0..partners.len())]
        };
        let key = (u.min(v), u.max(v));
        if !present.contains(&key) {
            present.insert(key);
            edges.push((key.0, key.1, random_cost(rng, cfg)));
        }
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
        }
    }

    Instance::new(n, edges, terminals, root).expect("generator keeps the invariants")
}
