//! Command pipeline: ingest an instance, run the requested stages, emit a
//! structured report.
//!
//! Reports are line-oriented `key: value` text with a stable key order, so
//! identical runs produce byte-identical output; `--json` emits the same
//! data as one JSON object (repeated keys become arrays). All exact values
//! print as `p/q`; decimal fields are display-only conveniences.

use std::fmt::Write as _;
use std::path::PathBuf;

use num::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::bcr::{solve_bcr, BcrError, BcrSolution};
use crate::decompose::{decompose, DecomposeError, Decomposition, StepKind};
use crate::model::{format_rat, Digraph, Instance, Rat};
use crate::oracle::{check_feasible_dcr, solve_dcr_bruteforce, OracleError};
use crate::sample::{build_plan, sample_tree, verify_distribution, SampleError};
use crate::stp::{parse_stp, StpError};

pub const ORACLE_LIMIT_MAX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveBcr,
    Decompose,
    Sample,
    OracleCheck,
    FullPipeline,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveBcr => "solve-bcr",
            Command::Decompose => "decompose",
            Command::Sample => "sample",
            Command::OracleCheck => "oracle-check",
            Command::FullPipeline => "full-pipeline",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: PathBuf,
    pub seed: u64,
    pub trials: usize,
    pub oracle_limit: usize,
    pub output: Option<PathBuf>,
    pub trace: bool,
    pub json: bool,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read input: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Stp(#[from] StpError),
    #[error(transparent)]
    Bcr(#[from] BcrError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("bad configuration: {0}")]
    Config(String),
}

impl PipelineError {
    /// Machine-readable error code for scripts.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Io(_) => "io",
            PipelineError::Stp(StpError::Parse { .. }) => "parse",
            PipelineError::Stp(StpError::Validation(_)) => "validation",
            PipelineError::Bcr(BcrError::Infeasible { .. }) => "infeasible",
            PipelineError::Bcr(_) => "lp",
            PipelineError::Decompose(_) => "invariant_breach",
            PipelineError::Oracle(OracleError::TooLarge { .. }) => "too_large",
            PipelineError::Oracle(OracleError::Infeasible) => "infeasible",
            PipelineError::Oracle(_) => "oracle",
            PipelineError::Sample(SampleError::ZeroMass) => "zero_mass",
            PipelineError::Sample(_) => "disconnected",
            PipelineError::Config(_) => "config",
        }
    }

    /// 1 for solver/input errors, 2 for invariant breaches.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Decompose(_) => 2,
            _ => 1,
        }
    }
}

pub struct RunOutcome {
    pub exit_code: i32,
    pub report: String,
    pub json: Option<String>,
}

#[derive(Default)]
struct Report {
    text: String,
    json: Map<String, Value>,
    breach: bool,
}

impl Report {
    fn scalar(&mut self, key: &str, display: impl std::fmt::Display, value: Value) {
        writeln!(self.text, "{key}: {display}").unwrap();
        self.json.insert(key.to_string(), value);
    }

    fn verdict(&mut self, key: &str, pass: bool) {
        if !pass {
            self.breach = true;
        }
        self.scalar(key, if pass { "PASS" } else { "FAIL" }, json!(pass));
    }

    fn row(&mut self, key: &str, display: String, value: Value) {
        writeln!(self.text, "{key}: {display}").unwrap();
        match self.json.entry(format!("{key}s")).or_insert_with(|| Value::Array(vec![])) {
            Value::Array(rows) => rows.push(value),
            _ => unreachable!(),
        }
    }

    fn raw_line(&mut self, line: &str) {
        writeln!(self.text, "{line}").unwrap();
    }
}

fn ratio_display(cost: &Rat, base: &Rat) -> (String, Value) {
    if base.is_zero() {
        return ("n/a".to_string(), Value::Null);
    }
    let r = (cost / base).to_f64().unwrap_or(f64::NAN);
    (format!("{r:.6}"), json!(r))
}

/// Executes the configured command and renders the report. Never panics on
/// bad input; failures become error reports with the matching exit code.
pub fn run(config: &RunConfig) -> RunOutcome {
    match execute(config) {
        Ok(outcome) => outcome,
        Err(e) => {
            let mut report = Report::default();
            report.scalar("command", config.command.name(), json!(config.command.name()));
            report.scalar("error", e.code(), json!(e.code()));
            report.scalar("message", &e, json!(e.to_string()));
            let json = config
                .json
                .then(|| serde_json::to_string_pretty(&Value::Object(report.json.clone())).unwrap());
            RunOutcome { exit_code: e.exit_code(), report: report.text, json }
        }
    }
}

fn execute(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    if config.trials < 1 {
        return Err(PipelineError::Config("trials must be at least 1".into()));
    }
    if config.oracle_limit > ORACLE_LIMIT_MAX {
        return Err(PipelineError::Config(format!(
            "oracle limit {} exceeds the exhaustive-check bound {ORACLE_LIMIT_MAX}",
            config.oracle_limit
        )));
    }

    let text = std::fs::read_to_string(&config.input_path)?;
    let inst = parse_stp(&text)?;
    let dg = crate::model::bidirect(&inst);

    let mut report = Report::default();
    report.scalar("command", config.command.name(), json!(config.command.name()));
    report.scalar("input", config.input_path.display(), json!(config.input_path.display().to_string()));
    report.scalar("vertices", inst.vertex_count, json!(inst.vertex_count));
    report.scalar("edges", inst.edges.len(), json!(inst.edges.len()));
    report.scalar("terminals", inst.terminals().len(), json!(inst.terminals().len()));
    report.scalar("root", inst.root, json!(inst.root));

    match config.command {
        Command::SolveBcr => {
            let sol = solve_bcr(&dg)?;
            report_bcr(&mut report, &dg, &sol, config.trace);
        }
        Command::Decompose => {
            let sol = solve_bcr(&dg)?;
            report_bcr(&mut report, &dg, &sol, config.trace);
            let dec = decompose(&sol.x, &dg)?;
            report_decomposition(&mut report, &dg, &sol, &dec, config.trace);
        }
        Command::Sample => {
            let sol = solve_bcr(&dg)?;
            report_bcr(&mut report, &dg, &sol, config.trace);
            report_sampling(&mut report, &inst, &dg, &sol, config)?;
        }
        Command::OracleCheck => {
            if inst.terminals().len() > config.oracle_limit {
                return Err(PipelineError::Oracle(OracleError::TooLarge {
                    terminals: inst.terminals().len(),
                    limit: config.oracle_limit,
                }));
            }
            let sol = solve_bcr(&dg)?;
            report_bcr(&mut report, &dg, &sol, config.trace);
            let dec = decompose(&sol.x, &dg)?;
            report_decomposition(&mut report, &dg, &sol, &dec, config.trace);
            report_oracle(&mut report, &dg, &sol, &dec)?;
        }
        Command::FullPipeline => {
            let sol = solve_bcr(&dg)?;
            report_bcr(&mut report, &dg, &sol, config.trace);
            let dec = decompose(&sol.x, &dg)?;
            report_decomposition(&mut report, &dg, &sol, &dec, config.trace);
            if inst.terminals().len() <= config.oracle_limit {
                report_oracle(&mut report, &dg, &sol, &dec)?;
            } else {
                report.scalar(
                    "oracle",
                    format!(
                        "skipped ({} terminals exceed limit {})",
                        inst.terminals().len(),
                        config.oracle_limit
                    ),
                    json!("skipped"),
                );
            }
            report_sampling(&mut report, &inst, &dg, &sol, config)?;
        }
    }

    let exit_code = if report.breach { 2 } else { 0 };
    report.scalar("exit", exit_code, json!(exit_code));
    let json = config
        .json
        .then(|| serde_json::to_string_pretty(&Value::Object(report.json.clone())).unwrap());
    Ok(RunOutcome { exit_code, report: report.text, json })
}

fn report_bcr(report: &mut Report, dg: &Digraph, sol: &BcrSolution, trace: bool) {
    report.scalar("bcr_value", format_rat(&sol.objective_value), json!(format_rat(&sol.objective_value)));
    report.scalar("bcr_support", sol.x.iter().count(), json!(sol.x.iter().count()));
    report.scalar("bcr_minimal", sol.is_minimal, json!(sol.is_minimal));
    report.scalar("cut_count", sol.generated_cuts.len(), json!(sol.generated_cuts.len()));
    for (a, v) in sol.x.iter() {
        let arc = &dg.arcs[a];
        report.row(
            "arc",
            format!("{} -> {} value={}", arc.tail, arc.head, format_rat(v)),
            json!({"tail": arc.tail, "head": arc.head, "value": format_rat(v)}),
        );
    }
    if trace {
        for line in sol.cut_log().lines() {
            report.raw_line(line);
        }
    }
}

fn report_decomposition(
    report: &mut Report,
    dg: &Digraph,
    sol: &BcrSolution,
    dec: &Decomposition,
    trace: bool,
) {
    report.scalar("component_count", dec.y.len(), json!(dec.y.len()));
    for (k, w) in dec.y.iter() {
        let sources: Vec<String> = k.sources.iter().map(|s| s.to_string()).collect();
        let centre = k.centre.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
        report.row(
            "component",
            format!(
                "centre={} sink={} sources={} weight={}",
                centre,
                k.sink,
                sources.join(","),
                format_rat(w)
            ),
            json!({
                "centre": k.centre,
                "sink": k.sink,
                "sources": k.sources,
                "weight": format_rat(w),
            }),
        );
    }
    report.scalar("extraction_steps", dec.extraction_steps, json!(dec.extraction_steps));
    if trace {
        for step in &dec.trace {
            let kind = match step.kind {
                StepKind::Saturating => "saturating",
                StepKind::SetBinding => "set-binding",
            };
            let sources: Vec<String> = step.sources.iter().map(|s| s.to_string()).collect();
            let centre = step.centre.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
            report.row(
                "step",
                format!(
                    "centre={} sink={} sources={} lambda={} kind={}",
                    centre,
                    step.sink,
                    sources.join(","),
                    format_rat(&step.lambda),
                    kind
                ),
                json!({
                    "centre": step.centre,
                    "sink": step.sink,
                    "sources": step.sources,
                    "lambda": format_rat(&step.lambda),
                    "kind": kind,
                }),
            );
        }
    }

    // always-on exact certificates
    let mapped = crate::decompose::phi(&dec.y, dg);
    report.verdict("phi_exact", mapped == sol.x);
    report.verdict("cost_preserved", dec.y.total_cost() == sol.x.total_cost(dg));
    report.verdict("centre_mass_identity", verify_distribution(&sol.x, &dec.y, dg));
}

fn report_oracle(
    report: &mut Report,
    dg: &Digraph,
    sol: &BcrSolution,
    dec: &Decomposition,
) -> Result<(), PipelineError> {
    let (_, dcr_value) = solve_dcr_bruteforce(dg)?;
    report.scalar("oracle_dcr_value", format_rat(&dcr_value), json!(format_rat(&dcr_value)));
    report.verdict("oracle_value_match", dcr_value == sol.objective_value);
    let witness = check_feasible_dcr(dg, &dec.y, ORACLE_LIMIT_MAX)?;
    report.verdict("oracle_feasible", witness.is_none());
    Ok(())
}

fn report_sampling(
    report: &mut Report,
    inst: &Instance,
    dg: &Digraph,
    sol: &BcrSolution,
    config: &RunConfig,
) -> Result<(), PipelineError> {
    let plan = build_plan(&sol.x, dg, config.seed)?;
    report.scalar("plan_mass", format_rat(&plan.total_mass), json!(format_rat(&plan.total_mass)));
    report.scalar("plan_rounds", plan.rounds, json!(plan.rounds));
    for (v, m) in &plan.mass_per_centre {
        report.row(
            "centre_mass",
            format!("vertex={} mass={}", v, format_rat(m)),
            json!({"vertex": v, "mass": format_rat(m)}),
        );
    }

    let mut total_cost = Rat::zero();
    for trial in 0..config.trials as u64 {
        let tree = sample_tree(&plan, inst, trial)?;
        total_cost += &tree.cost;
        let sampled: Vec<String> = tree.sampled.iter().map(|v| v.to_string()).collect();
        let (ratio, ratio_json) = ratio_display(&tree.cost, &sol.objective_value);
        report.row(
            "trial",
            format!(
                "seed={} trial={} rounds={} retries={} sampled={} cost={} ratio_display={}",
                plan.seed,
                trial,
                plan.rounds,
                tree.retries,
                if sampled.is_empty() { "-".into() } else { sampled.join(",") },
                format_rat(&tree.cost),
                ratio
            ),
            json!({
                "seed": plan.seed,
                "trial": trial,
                "rounds": plan.rounds,
                "retries": tree.retries,
                "sampled": tree.sampled,
                "cost": format_rat(&tree.cost),
                "ratio_display": ratio_json,
            }),
        );
    }
    let mean = total_cost / crate::model::rat_int(config.trials as i64);
    report.scalar("mean_cost", format_rat(&mean), json!(format_rat(&mean)));
    let (mean_ratio, mean_ratio_json) = ratio_display(&mean, &sol.objective_value);
    report.scalar("mean_ratio_display", &mean_ratio, mean_ratio_json);
    Ok(())
}
