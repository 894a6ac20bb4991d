//! Text formats.
//!
//! Edge lists have one edge per line, `u v` or `u v weight`, with `#`
//! starting a comment. A line holding a single identifier declares a node
//! without edges. Node identifiers are mapped to indices in increasing order.
//!
//! Node-weight sidecars, layerings and color assignments are `u value` maps;
//! list files are `u c1 c2 ...`. Every node of the graph must appear exactly
//! once in a map file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Rational;

use super::graph::{NodeIdx, SimGraph};
use super::verify::ColorAssignment;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeListFormat {
    /// Every edge line must carry a third column with a non-negative weight.
    pub weighted: bool,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-empty lines with comments stripped, as `(1-based line number, tokens)`.
fn tokenized(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse_id(line: usize, tok: &str) -> Result<u64> {
    tok.parse().map_err(|_| parse_err(line, format!("invalid node id {tok:?}")))
}

fn parse_weight(line: usize, tok: &str) -> Result<Rational> {
    let w: Rational = tok.parse().map_err(|_| parse_err(line, format!("invalid weight {tok:?}")))?;
    if w.is_negative() {
        return Err(parse_err(line, format!("negative weight {tok}")));
    }
    Ok(w)
}

pub fn parse_edge_list(text: &str, format: EdgeListFormat) -> Result<SimGraph> {
    let mut nodes = BTreeSet::new();
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, toks) in tokenized(text) {
        match toks.len() {
            1 => {
                nodes.insert(parse_id(line, toks[0])?);
            }
            2 | 3 => {
                let u = parse_id(line, toks[0])?;
                let v = parse_id(line, toks[1])?;
                if u == v {
                    return Err(parse_err(line, format!("self-loop at node {u}")));
                }
                if !seen.insert((u.min(v), u.max(v))) {
                    return Err(parse_err(line, format!("duplicate edge {{{u},{v}}}")));
                }
                let w = match (toks.get(2), format.weighted) {
                    (Some(t), true) => Some(parse_weight(line, t)?),
                    (None, true) => return Err(parse_err(line, "missing edge weight")),
                    (Some(_), false) => return Err(parse_err(line, "unexpected weight column (weights disabled)")),
                    (None, false) => None,
                };
                nodes.insert(u);
                nodes.insert(v);
                edges.push((u, v, w));
            }
            _ => return Err(parse_err(line, "expected `u v [weight]`")),
        }
    }
    let mut g = SimGraph::build(nodes.into_iter().collect(), &edges)?;
    if format.weighted && edges.is_empty() {
        g = g.with_edge_weights(|_, _| Rational::one())?;
    }
    Ok(g)
}

pub fn load_graph(path: impl AsRef<Path>, format: EdgeListFormat) -> Result<SimGraph> {
    parse_edge_list(&std::fs::read_to_string(path)?, format)
}

pub fn write_edge_list(g: &SimGraph) -> String {
    let mut out = String::new();
    let mut isolated = Vec::new();
    for v in 0..g.n() as NodeIdx {
        if g.degree(v) == 0 {
            isolated.push(g.id(v));
        }
    }
    for id in isolated {
        let _ = writeln!(out, "{id}");
    }
    for (u, v) in g.edges() {
        if g.is_weighted() {
            let _ = writeln!(out, "{} {} {}", g.id(u), g.id(v), g.edge_weight(u, v).unwrap());
        } else {
            let _ = writeln!(out, "{} {}", g.id(u), g.id(v));
        }
    }
    out
}

fn index_of(g: &SimGraph) -> BTreeMap<u64, NodeIdx> {
    (0..g.n() as NodeIdx).map(|v| (g.id(v), v)).collect()
}

/// Parses a `u value...` map covering every node exactly once.
fn parse_node_map<T>(
    text: &str,
    g: &SimGraph,
    mut value: impl FnMut(usize, &[&str]) -> Result<T>,
) -> Result<Vec<T>> {
    let index = index_of(g);
    let mut out: Vec<Option<T>> = (0..g.n()).map(|_| None).collect();
    for (line, toks) in tokenized(text) {
        let id = parse_id(line, toks[0])?;
        let &v = index.get(&id).ok_or_else(|| parse_err(line, format!("unknown node {id}")))?;
        if out[v as usize].is_some() {
            return Err(parse_err(line, format!("node {id} listed twice")));
        }
        out[v as usize] = Some(value(line, &toks[1..])?);
    }
    out.into_iter()
        .enumerate()
        .map(|(v, x)| x.ok_or_else(|| parse_err(0, format!("node {} is missing", g.id(v as NodeIdx)))))
        .collect()
}

fn single<'a>(line: usize, rest: &[&'a str]) -> Result<&'a str> {
    match rest {
        [t] => Ok(t),
        _ => Err(parse_err(line, "expected `u value`")),
    }
}

pub fn parse_node_weights(text: &str, g: &SimGraph) -> Result<Vec<Rational>> {
    parse_node_map(text, g, |line, rest| parse_weight(line, single(line, rest)?))
}

pub fn load_node_weights(path: impl AsRef<Path>, g: &SimGraph) -> Result<Vec<Rational>> {
    parse_node_weights(&std::fs::read_to_string(path)?, g)
}

/// Layer per node, 1-based.
pub fn parse_layering(text: &str, g: &SimGraph) -> Result<Vec<u32>> {
    parse_node_map(text, g, |line, rest| {
        let t = single(line, rest)?;
        match t.parse::<u32>() {
            Ok(l) if l >= 1 => Ok(l),
            _ => Err(parse_err(line, format!("invalid layer {t:?} (layers start at 1)"))),
        }
    })
}

pub fn load_layering(path: impl AsRef<Path>, g: &SimGraph) -> Result<Vec<u32>> {
    parse_layering(&std::fs::read_to_string(path)?, g)
}

pub fn write_node_map<T: std::fmt::Display>(g: &SimGraph, values: &[T]) -> String {
    let mut out = String::new();
    for (v, x) in values.iter().enumerate() {
        let _ = writeln!(out, "{} {}", g.id(v as NodeIdx), x);
    }
    out
}

/// Color assignment file; nodes may be omitted (uncolored) and `-` marks an
/// uncolored node explicitly.
pub fn parse_assignment(text: &str, g: &SimGraph) -> Result<ColorAssignment> {
    let index = index_of(g);
    let mut a = ColorAssignment::new(g.n());
    let mut seen = BTreeSet::new();
    for (line, toks) in tokenized(text) {
        let id = parse_id(line, toks[0])?;
        let &v = index.get(&id).ok_or_else(|| parse_err(line, format!("unknown node {id}")))?;
        if !seen.insert(v) {
            return Err(parse_err(line, format!("node {id} listed twice")));
        }
        let t = single(line, &toks[1..])?;
        if t != "-" {
            match t.parse::<u32>() {
                Ok(c) if c >= 1 => a.set(v, c),
                _ => return Err(parse_err(line, format!("invalid color {t:?} (colors are positive)"))),
            }
        }
    }
    Ok(a)
}

pub fn write_assignment(g: &SimGraph, a: &ColorAssignment) -> String {
    let mut out = String::new();
    for v in 0..g.n() as NodeIdx {
        match a.get(v) {
            Some(c) => {
                let _ = writeln!(out, "{} {}", g.id(v), c);
            }
            None => {
                let _ = writeln!(out, "{} -", g.id(v));
            }
        }
    }
    out
}

/// Color lists, one line per node: `u c1 c2 ...`. Lists are returned sorted
/// and deduplicated.
pub fn parse_lists(text: &str, g: &SimGraph) -> Result<Vec<Vec<u32>>> {
    parse_node_map(text, g, |line, rest| {
        let mut list = rest
            .iter()
            .map(|t| match t.parse::<u32>() {
                Ok(c) if c >= 1 => Ok(c),
                _ => Err(parse_err(line, format!("invalid color {t:?}"))),
            })
            .collect::<Result<Vec<u32>>>()?;
        list.sort_unstable();
        list.dedup();
        Ok(list)
    })
}
