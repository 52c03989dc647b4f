//! SteinLib-style STP reader and writer (Graph and Terminals sections,
//! optional root, rational `p/q` edge weights as an extension).
//!
//! Vertex ids are 1-based on disk and 0-based in memory. Unknown sections
//! are skipped so that ordinary SteinLib files with comment or coordinate
//! blocks still load.

use num::BigInt;
use thiserror::Error;

use crate::model::{Instance, ModelError, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StpError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Validation(#[from] ModelError),
}

fn err(line: usize, msg: impl Into<String>) -> StpError {
    StpError::Parse { line, msg: msg.into() }
}

fn parse_rat(tok: &str, line: usize) -> Result<Rat, StpError> {
    let parse_int = |s: &str| -> Result<BigInt, StpError> {
        s.parse::<BigInt>().map_err(|_| err(line, format!("bad number `{s}`")))
    };
    match tok.split_once('/') {
        None => Ok(Rat::from_integer(parse_int(tok)?)),
        Some((p, q)) => {
            let den = parse_int(q)?;
            if den == BigInt::from(0) {
                return Err(err(line, "zero denominator"));
            }
            Ok(Rat::new(parse_int(p)?, den))
        }
    }
}

fn parse_id(tok: &str, line: usize, nodes: usize) -> Result<usize, StpError> {
    let id: usize =
        tok.parse().map_err(|_| err(line, format!("bad vertex id `{tok}`")))?;
    if id == 0 || id > nodes {
        return Err(err(line, format!("vertex id {id} out of range 1..={nodes}")));
    }
    Ok(id - 1)
}

pub fn parse_stp(text: &str) -> Result<Instance, StpError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Graph,
        Terminals,
        Skip,
    }

    let mut section = Section::None;
    let mut nodes: Option<usize> = None;
    let mut declared_edges: Option<usize> = None;
    let mut edges: Vec<(usize, usize, Rat)> = Vec::new();
    let mut declared_terminals: Option<usize> = None;
    let mut terminals: Vec<usize> = Vec::new();
    let mut root: Option<usize> = None;
    let mut saw_graph = false;
    let mut saw_terminals = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let keyword = tokens[0].to_ascii_uppercase();
        if keyword == "EOF" {
            break;
        }
        if keyword == "SECTION" {
            if section != Section::None {
                return Err(err(line, "nested SECTION"));
            }
            let name = tokens.get(1).map(|s| s.to_ascii_lowercase()).unwrap_or_default();
            section = match name.as_str() {
                "graph" => {
                    saw_graph = true;
                    Section::Graph
                }
                "terminals" => {
                    saw_terminals = true;
                    Section::Terminals
                }
                _ => Section::Skip,
            };
            continue;
        }
        if keyword == "END" {
            section = Section::None;
            continue;
        }
        match section {
            Section::None => {
                // header magic and stray text outside sections are ignored
            }
            Section::Skip => {}
            Section::Graph => match keyword.as_str() {
                "NODES" => {
                    let v = tokens
                        .get(1)
                        .and_then(|t| t.parse::<usize>().ok())
                        .ok_or_else(|| err(line, "expected `Nodes <count>`"))?;
                    nodes = Some(v);
                }
                "EDGES" | "ARCS" => {
                    let v = tokens
                        .get(1)
                        .and_then(|t| t.parse::<usize>().ok())
                        .ok_or_else(|| err(line, "expected `Edges <count>`"))?;
                    declared_edges = Some(v);
                }
                "E" => {
                    let n = nodes.ok_or_else(|| err(line, "E line before Nodes"))?;
                    if tokens.len() != 4 {
                        return Err(err(line, "expected `E <u> <v> <weight>`"));
                    }
                    let u = parse_id(tokens[1], line, n)?;
                    let v = parse_id(tokens[2], line, n)?;
                    let w = parse_rat(tokens[3], line)?;
                    edges.push((u, v, w));
                }
                _ => return Err(err(line, format!("unexpected `{}` in Graph section", tokens[0]))),
            },
            Section::Terminals => match keyword.as_str() {
                "TERMINALS" => {
                    let v = tokens
                        .get(1)
                        .and_then(|t| t.parse::<usize>().ok())
                        .ok_or_else(|| err(line, "expected `Terminals <count>`"))?;
                    declared_terminals = Some(v);
                }
                "T" => {
                    let n = nodes.ok_or_else(|| err(line, "Terminals before Graph"))?;
                    let t = tokens
                        .get(1)
                        .ok_or_else(|| err(line, "expected `T <vertex>`"))
                        .and_then(|tok| parse_id(tok, line, n))?;
                    terminals.push(t);
                }
                "ROOT" => {
                    let n = nodes.ok_or_else(|| err(line, "Root before Graph"))?;
                    let r = tokens
                        .get(1)
                        .ok_or_else(|| err(line, "expected `Root <vertex>`"))
                        .and_then(|tok| parse_id(tok, line, n))?;
                    root = Some(r);
                }
                _ => {
                    return Err(err(line, format!("unexpected `{}` in Terminals section", tokens[0])))
                }
            },
        }
    }

    if !saw_graph {
        return Err(err(0, "missing SECTION Graph"));
    }
    if !saw_terminals {
        return Err(err(0, "missing SECTION Terminals"));
    }
    let nodes = nodes.ok_or_else(|| err(0, "missing Nodes declaration"))?;
    if let Some(m) = declared_edges {
        if m != edges.len() {
            return Err(err(0, format!("declared {m} edges, found {}", edges.len())));
        }
    }
    if let Some(t) = declared_terminals {
        if t != terminals.len() {
            return Err(err(0, format!("declared {t} terminals, found {}", terminals.len())));
        }
    }
    let root = match root {
        Some(r) => r,
        None => *terminals
            .iter()
            .min()
            .ok_or_else(|| err(0, "no terminals declared"))?,
    };
    Ok(Instance::new(nodes, edges, terminals, root)?)
}

/// Writes the instance in the same subset the parser reads; weights with
/// denominator one print as plain integers.
pub fn serialize_stp(inst: &Instance) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    out.push_str("SECTION Graph\n");
    writeln!(out, "Nodes {}", inst.vertex_count).unwrap();
    writeln!(out, "Edges {}", inst.edges.len()).unwrap();
    for e in &inst.edges {
        if e.cost.denom() == &BigInt::from(1) {
            writeln!(out, "E {} {} {}", e.u + 1, e.v + 1, e.cost.numer()).unwrap();
        } else {
            writeln!(out, "E {} {} {}/{}", e.u + 1, e.v + 1, e.cost.numer(), e.cost.denom())
                .unwrap();
        }
    }
    out.push_str("END\n\nSECTION Terminals\n");
    writeln!(out, "Terminals {}", inst.terminals().len()).unwrap();
    for &t in inst.terminals() {
        writeln!(out, "T {}", t + 1).unwrap();
    }
    writeln!(out, "Root {}", inst.root + 1).unwrap();
    out.push_str("END\n\nEOF\n");
    out
}
