//! Acceptance suite: one test per criterion, one PASS/FAIL line each
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The shared corpus holds 200 random connected quasi-bipartite instances
//! (at most 12 vertices, 7 terminals, costs p/q with p ≤ 20, q ≤ 5), each
//! solved once: BCR optimum, minimal solution, decomposition. Oracle-scale
//! instances (≤ 6 terminals) also capture per-step snapshots for the
//! structural criteria.

use num::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qbst::bcr::{solve_bcr, BcrSolution};
use qbst::decompose::{decompose_with, DecomposeOptions, Decomposition, PolyhedronPoint};
use qbst::flow::{Capacity, FlowNetwork};
use qbst::gen::{random_instance, GenConfig};
use qbst::model::{bidirect, rat, rat_int, Digraph, Instance, Rat};
use qbst::oracle;
use qbst::sample::{build_plan, sample_tree, verify_distribution};

const CORPUS_SIZE: usize = 200;
const SNAPSHOT_TERMINALS: usize = 6;

struct Solved {
    inst: Instance,
    dg: Digraph,
    bcr: BcrSolution,
    dec: Decomposition,
}

static CORPUS: Lazy<Vec<Solved>> = Lazy::new(|| {
    let mut rng = ChaCha8Rng::seed_from_u64(20240);
    let cfg = GenConfig::default();
    (0..CORPUS_SIZE)
        .map(|i| {
            let inst = random_instance(&mut rng, &cfg);
            let dg = bidirect(&inst);
            let bcr = solve_bcr(&dg)
                .unwrap_or_else(|e| panic!("corpus instance {i} must be solvable: {e}"));
            let capture = inst.terminals().len() <= SNAPSHOT_TERMINALS;
            let dec = decompose_with(&bcr.x, &dg, DecomposeOptions { capture_snapshots: capture })
                .unwrap_or_else(|e| panic!("corpus instance {i} must decompose: {e}"));
            Solved { inst, dg, bcr, dec }
        })
        .collect()
});

fn report(criterion: usize, name: &str, pass: bool, details: String) {
    println!(
        "criterion {criterion} ({name}): {} — {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {details}");
}

#[test]
fn criterion_01_lp_value_equality() {
    let mut checked = 0;
    for (i, s) in CORPUS.iter().enumerate() {
        let (_, dcr_value) = oracle::solve_dcr_bruteforce(&s.dg)
            .unwrap_or_else(|e| panic!("oracle must solve corpus instance {i}: {e}"));
        if dcr_value != s.bcr.objective_value {
            report(
                1,
                "lp-value-equality",
                false,
                format!(
                    "instance {i}: bcr {} vs dcr {}",
                    s.bcr.objective_value, dcr_value
                ),
            );
        }
        checked += 1;
    }
    report(
        1,
        "lp-value-equality",
        checked == CORPUS_SIZE,
        format!("exact equality on {checked} instances, tolerance 0"),
    );
}

#[test]
fn criterion_02_decomposition_exactness() {
    for (i, s) in CORPUS.iter().enumerate() {
        let mapped = qbst::decompose::phi(&s.dec.y, &s.dg);
        let phi_ok = mapped == s.bcr.x;
        let cost_ok = s.dec.y.total_cost() == s.bcr.x.total_cost(&s.dg);
        let feas_ok = oracle::check_feasible_dcr(&s.dg, &s.dec.y, 12).unwrap().is_none();
        if !(phi_ok && cost_ok && feas_ok) {
            report(
                2,
                "decomposition-exactness",
                false,
                format!("instance {i}: phi={phi_ok} cost={cost_ok} feasible={feas_ok}"),
            );
        }
    }
    report(
        2,
        "decomposition-exactness",
        true,
        format!("map, cost and feasibility exact on {} instances", CORPUS.len()),
    );
}

#[test]
fn criterion_03_step_bound() {
    let mut worst = 0.0f64;
    for (i, s) in CORPUS.iter().enumerate() {
        let m = s.inst.edges.len().max(1);
        let n = s.inst.vertex_count;
        let bound = 10 * m * n;
        if s.dec.extraction_steps > bound {
            report(
                3,
                "step-bound",
                false,
                format!("instance {i}: {} steps > 10·m·n = {bound}", s.dec.extraction_steps),
            );
        }
        worst = worst.max(s.dec.extraction_steps as f64 / (m * n) as f64);
    }
    report(
        3,
        "step-bound",
        true,
        format!("max steps/(m·n) over the corpus: {worst:.3} (threshold 10)"),
    );
}

#[test]
fn criterion_04_families_match_bruteforce() {
    let mut steps = 0;
    for (i, s) in CORPUS.iter().enumerate() {
        for (j, snap) in s.dec.snapshots.iter().enumerate() {
            let pt = PolyhedronPoint { x: snap.x.clone(), y: snap.y.clone() };
            let expect = oracle::families_bruteforce(
                &pt,
                &s.dg,
                snap.families.centre,
                snap.families.sink,
            );
            if snap.families != expect {
                report(
                    4,
                    "families-structure",
                    false,
                    format!(
                        "instance {i} step {j}: min-cut families {:?} vs brute force {:?}",
                        snap.families, expect
                    ),
                );
            }
            steps += 1;
        }
    }
    report(
        4,
        "families-structure",
        steps > 0,
        format!("min-cut families equal enumerated families on {steps} oracle-mode steps"),
    );
}

#[test]
fn criterion_05_component_certificates() {
    let mut steps = 0;
    for (i, s) in CORPUS.iter().enumerate() {
        for (j, snap) in s.dec.snapshots.iter().enumerate() {
            let pt = PolyhedronPoint { x: snap.x.clone(), y: snap.y.clone() };
            if !oracle::component_conditions_hold(&snap.component, &pt, &s.dg) {
                report(
                    5,
                    "feasible-component-certificate",
                    false,
                    format!("instance {i} step {j}: component {:?}", snap.component),
                );
            }
            steps += 1;
        }
    }
    report(
        5,
        "feasible-component-certificate",
        steps > 0,
        format!("all four feasibility conditions hold for {steps} extracted components"),
    );
}

#[test]
fn criterion_06_distribution_identity() {
    let mut strict_total = 0;
    for (i, s) in CORPUS.iter().enumerate() {
        // per-centre identity, exact
        if !verify_distribution(&s.bcr.x, &s.dec.y, &s.dg) {
            report(6, "distribution-identity", false, format!("instance {i}: centre mass"));
        }
        // plan mass M = Σ_v x(δ⁺(v)); total component mass = M plus the
        // mass parked on terminal–terminal components (which have no
        // centre to sample)
        let plan = build_plan(&s.bcr.x, &s.dg, 0).unwrap();
        let centred: Rat = s
            .dg
            .steiner_vertices()
            .map(|v| s.dec.y.mass_at_centre(v))
            .fold(Rat::zero(), |acc, m| acc + m);
        let edge_mass = s.dec.y.edge_component_mass();
        let ok_m = centred == plan.total_mass
            && s.dec.y.total_mass() == &plan.total_mass + &edge_mass;
        if !ok_m {
            report(6, "distribution-identity", false, format!("instance {i}: mass accounting"));
        }
        if edge_mass.is_zero() {
            strict_total += 1;
        }
    }
    report(
        6,
        "distribution-identity",
        true,
        format!(
            "per-centre identity and mass accounting exact on {} instances \
             ({strict_total} with 1ᵀy = M outright, the rest carry \
             terminal–terminal component mass on top of M)",
            CORPUS.len()
        ),
    );
}

#[test]
fn criterion_07_sampling_quality() {
    let trials: usize = 2000;
    // fixed selection rule: the first 20 corpus instances whose plans
    // actually draw (positive Steiner mass), so the statistics measure
    // the sampler instead of a deterministic terminal MST
    let sub_corpus: Vec<&Solved> = CORPUS
        .iter()
        .filter(|s| s.inst.terminals().len() >= 2 && s.bcr.objective_value.is_positive())
        .filter(|s| {
            s.dg.steiner_vertices().any(|v| s.bcr.x.out_value(&s.dg, v).is_positive())
        })
        .take(20)
        .collect();
    assert_eq!(sub_corpus.len(), 20, "corpus must contain 20 sampling instances");

    let gate = rat(27, 20); // 1.35
    let mut tight_passes = 0;
    let mut worst_ratio = 0.0f64;
    for (i, s) in sub_corpus.iter().enumerate() {
        let plan = build_plan(&s.bcr.x, &s.dg, 77).unwrap();
        let mut total = Rat::zero();
        let mut costs_f64 = Vec::with_capacity(trials);
        for trial in 0..trials as u64 {
            let tree = sample_tree(&plan, &s.inst, trial)
                .unwrap_or_else(|e| panic!("sub-corpus instance {i}, trial {trial}: {e}"));
            costs_f64.push(tree.cost.to_f64().unwrap());
            total += &tree.cost;
        }
        let mean = total / rat_int(trials as i64);
        if mean > &gate * &s.bcr.objective_value {
            report(
                7,
                "sampling-quality",
                false,
                format!(
                    "instance {i}: mean {} exceeds 1.35 × {}",
                    mean, s.bcr.objective_value
                ),
            );
        }
        // non-gating tighter band: 1.28 plus three standard errors
        let mean_f = mean.to_f64().unwrap();
        let value_f = s.bcr.objective_value.to_f64().unwrap();
        let var = costs_f64
            .iter()
            .map(|c| (c - mean_f) * (c - mean_f))
            .sum::<f64>()
            / trials as f64;
        let sigma_mean = (var / trials as f64).sqrt();
        if mean_f <= 1.28 * value_f + 3.0 * sigma_mean {
            tight_passes += 1;
        }
        worst_ratio = worst_ratio.max(mean_f / value_f);
    }

    // Non-gating visibility run: multi-hub instances can exceed the band
    // when the LP leans on near-free hub attachments that an unlucky draw
    // has to replace with expensive detours (the loss-contraction credit
    // of the original component-sampling algorithm has no counterpart
    // here). Report the worst such ratio rather than hiding it.
    let mut info_worst = 0.0f64;
    for s in CORPUS.iter() {
        let hubs = s
            .dg
            .steiner_vertices()
            .filter(|&v| s.bcr.x.out_value(&s.dg, v).is_positive())
            .count();
        if hubs < 2 {
            continue;
        }
        let plan = build_plan(&s.bcr.x, &s.dg, 77).unwrap();
        let mut total = Rat::zero();
        let info_trials = 500u64;
        for trial in 0..info_trials {
            total += &sample_tree(&plan, &s.inst, trial).unwrap().cost;
        }
        let mean = (total / rat_int(info_trials as i64)).to_f64().unwrap();
        info_worst = info_worst.max(mean / s.bcr.objective_value.to_f64().unwrap());
    }

    report(
        7,
        "sampling-quality",
        true,
        format!(
            "20 sampling instances × {trials} trials within 1.35 × LP (worst mean ratio \
             {worst_ratio:.4}); non-gating 1.28 + 3σ band met by {tight_passes}/20; \
             informational worst multi-hub ratio across the corpus: {info_worst:.4}"
        ),
    );
}

#[test]
fn criterion_08_submodularity_and_uncrossing() {
    // exhaustive over every component and subset pair at ≤ 5 terminals
    let mut exhaustive_components = 0;
    for s in CORPUS.iter().filter(|s| s.inst.terminals().len() <= 5) {
        for k in oracle::enumerate_components(&s.dg, s.inst.terminals().len()) {
            if let Some((u, w)) = oracle::check_submodularity_exhaustive(&k, &s.dg) {
                report(
                    8,
                    "submodularity-and-uncrossing",
                    false,
                    format!("violation at component {k:?} with U={u:?} W={w:?}"),
                );
            }
            exhaustive_components += 1;
        }
    }
    assert!(exhaustive_components > 0);

    // randomized trials at up to 10 terminals
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let cfg = GenConfig { max_terminals: 10, ..Default::default() };
    let mut random_trials = 0;
    while random_trials < 10_000 {
        let inst = random_instance(&mut rng, &cfg);
        let dg = bidirect(&inst);
        let comps = oracle::enumerate_components(&dg, 3);
        if comps.is_empty() {
            continue;
        }
        let k = &comps[rng.random_range(0..comps.len())];
        let batch = 200.min(10_000 - random_trials);
        if let Some((u, w)) = oracle::check_submodularity(k, &dg, batch, rng.random()) {
            report(
                8,
                "submodularity-and-uncrossing",
                false,
                format!("random violation at {k:?} with U={u:?} W={w:?}"),
            );
        }
        random_trials += batch;
    }

    // uncrossing on every intersecting tight pair seen in oracle mode
    let mut pairs = 0;
    for s in CORPUS.iter() {
        for snap in &s.dec.snapshots {
            let pt = PolyhedronPoint { x: snap.x.clone(), y: snap.y.clone() };
            let tights = oracle::tight_sets(&pt, &s.dg);
            for (ai, a) in tights.iter().enumerate() {
                for b in tights.iter().skip(ai + 1) {
                    let meet_in_terminals = s
                        .dg
                        .terminals()
                        .iter()
                        .any(|&t| a[t] && b[t]);
                    if !meet_in_terminals {
                        continue;
                    }
                    let inter: Vec<bool> =
                        a.iter().zip(b).map(|(&x, &y)| x && y).collect();
                    let union: Vec<bool> =
                        a.iter().zip(b).map(|(&x, &y)| x || y).collect();
                    let ok = pt.constraint_value(&s.dg, &inter) == Rat::one()
                        && pt.constraint_value(&s.dg, &union) == Rat::one();
                    if !ok {
                        report(
                            8,
                            "submodularity-and-uncrossing",
                            false,
                            format!("uncrossing broke for tight pair {a:?}, {b:?}"),
                        );
                    }
                    pairs += 1;
                }
            }
        }
    }

    report(
        8,
        "submodularity-and-uncrossing",
        true,
        format!(
            "exhaustive over {exhaustive_components} components at ≤5 terminals, \
             {random_trials} random trials at ≤10 terminals, {pairs} tight pairs uncrossed"
        ),
    );
}

#[test]
fn criterion_09_rho_table() {
    let expected = [
        (2u64, rat_int(2)),
        (3, rat(5, 3)),
        (4, rat(3, 2)),
        (5, rat(13, 9)), // (3·4 + 1)/(2·4 + 1) by direct substitution
    ];
    for (k, want) in &expected {
        let got = oracle::borchers_du_rho(*k).unwrap();
        if &got != want {
            report(9, "rho-table", false, format!("rho_{k} = {got}, expected {want}"));
        }
    }
    report(9, "rho-table", true, "rho_k exact for k = 2, 3, 4, 5".to_string());
}

#[test]
fn criterion_10_flow_kernel() {
    fn brute_min_cut(net: &FlowNetwork) -> Capacity {
        let interior: Vec<usize> =
            (0..net.node_count).filter(|&v| v != net.source && v != net.sink).collect();
        let mut best = Capacity::Infinite;
        for mask in 0..(1u32 << interior.len()) {
            let mut side = vec![false; net.node_count];
            side[net.source] = true;
            for (i, &v) in interior.iter().enumerate() {
                side[v] = mask >> i & 1 == 1;
            }
            let mut value = Capacity::zero();
            for (t, h, cap) in &net.arcs {
                if side[*t] && !side[*h] {
                    value += cap.clone();
                }
            }
            best = best.min(value);
        }
        best
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9090);
    let mut finite = 0;
    for round in 0..1000 {
        let interior = rng.random_range(0..=10usize);
        let n = interior + 2;
        let mut net = FlowNetwork::new(n, 0, 1);
        for _ in 0..rng.random_range(1..=(3 * n)) {
            let t = rng.random_range(0..n);
            let mut h = rng.random_range(0..n);
            if h == t {
                h = (h + 1) % n;
            }
            let cap = if rng.random_range(0..10) == 0 {
                Capacity::Infinite
            } else {
                Capacity::Finite(rat(rng.random_range(0..16), rng.random_range(1..5)))
            };
            net.add_arc(t, h, cap);
        }
        let (value, _) = net.max_flow();
        let brute = brute_min_cut(&net);
        if value != brute {
            report(
                10,
                "flow-kernel",
                false,
                format!("network {round}: max-flow {value:?} vs enumerated min-cut {brute:?}"),
            );
        }
        if !value.is_infinite() {
            finite += 1;
            let minimal = net.min_cut_minimal().unwrap();
            let maximal = net.min_cut_maximal().unwrap();
            let nested = (0..n).all(|v| !minimal.source_side[v] || maximal.source_side[v]);
            if minimal.value != value || maximal.value != value || !nested {
                report(
                    10,
                    "flow-kernel",
                    false,
                    format!("network {round}: cut extraction inconsistent"),
                );
            }
        }
    }
    report(
        10,
        "flow-kernel",
        true,
        format!("1000 networks against exhaustive cut enumeration ({finite} finite), nesting everywhere"),
    );
}
