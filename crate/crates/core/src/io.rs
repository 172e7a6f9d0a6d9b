//! Text formats for structures, graphs and sequence manifests.
//!
//! ```text
//! structure 4          graph 3
//! rel E/2              a b
//! 0 1                  b c   # comment
//! 1 2
//! rel P/1
//! 3
//! const c 0
//! ```
//!
//! Element labels are arbitrary tokens. When every label is a decimal
//! integer below `n` the labels are the elements themselves; otherwise labels
//! are numbered in order of first appearance.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::structure::{Signature, Structure, ADJ};

/// A parsed structure together with the label of each element.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub structure: Structure,
    pub labels: Vec<String>,
}

impl Loaded {
    pub fn element(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn format_err(line_no: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("line {}: {}", line_no + 1, msg))
}

struct Labeller {
    labels: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl Labeller {
    /// Decides the label scheme from every label token in the file.
    fn new(n: usize, tokens: &[&str]) -> Result<Self> {
        let numeric = tokens
            .iter()
            .all(|t| t.parse::<usize>().map(|v| v < n).unwrap_or(false));
        let mut labels: Vec<String> = Vec::new();
        let mut lookup = HashMap::new();
        if numeric {
            labels = (0..n).map(|i| i.to_string()).collect();
            lookup = labels.iter().cloned().zip(0..).collect();
            return Ok(Labeller { labels, lookup });
        }
        for t in tokens {
            if !lookup.contains_key(*t) {
                lookup.insert(t.to_string(), labels.len());
                labels.push(t.to_string());
            }
        }
        if labels.len() > n {
            return Err(Error::Format(format!(
                "{} distinct labels for a universe of size {n}",
                labels.len()
            )));
        }
        for i in labels.len()..n {
            labels.push(format!("_{i}"));
        }
        Ok(Labeller { labels, lookup })
    }

    fn index(&self, token: &str) -> usize {
        self.lookup[token]
    }
}

fn parse_header(text: &str, keyword: &str) -> Result<(usize, Vec<(usize, Vec<String>)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i, strip_comment(l).split_whitespace().map(String::from).collect::<Vec<_>>()))
        .filter(|(_, toks)| !toks.is_empty());
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))?;
    if header.len() != 2 || header[0] != keyword {
        return Err(format_err(line_no, format!("expected `{keyword} <n>`")));
    }
    let n = header[1]
        .parse()
        .map_err(|_| format_err(line_no, "universe size is not a number"))?;
    Ok((n, lines.collect()))
}

/// Parses the `structure <n>` format.
pub fn parse_structure(text: &str) -> Result<Loaded> {
    let (n, body) = parse_header(text, "structure")?;
    let mut rels: Vec<(String, usize, Vec<String>)> = Vec::new();
    let mut consts: Vec<(String, String)> = Vec::new();
    for (line_no, toks) in &body {
        match toks[0].as_str() {
            "rel" => {
                let spec = toks
                    .get(1)
                    .filter(|_| toks.len() == 2)
                    .ok_or_else(|| format_err(*line_no, "expected `rel <name>/<arity>`"))?;
                let (name, arity) = spec
                    .split_once('/')
                    .ok_or_else(|| format_err(*line_no, "expected `<name>/<arity>`"))?;
                let arity = arity
                    .parse()
                    .map_err(|_| format_err(*line_no, "arity is not a number"))?;
                rels.push((name.to_string(), arity, Vec::new()));
            }
            "const" => {
                if toks.len() != 3 {
                    return Err(format_err(*line_no, "expected `const <name> <element>`"));
                }
                consts.push((toks[1].clone(), toks[2].clone()));
            }
            _ => match rels.last_mut() {
                Some((_, _, tokens)) => tokens.extend(toks.iter().cloned()),
                None => return Err(format_err(*line_no, "tuple before any `rel` line")),
            },
        }
    }
    let all: Vec<&str> = rels
        .iter()
        .flat_map(|(_, _, t)| t.iter().map(String::as_str))
        .chain(consts.iter().map(|(_, e)| e.as_str()))
        .collect();
    let labeller = Labeller::new(n, &all)?;
    let signature = Signature::new(
        rels.iter().map(|(name, arity, _)| (name.clone(), *arity)),
        consts.iter().map(|(name, _)| name.clone()),
    )?;
    let mut relations = Vec::with_capacity(rels.len());
    for (name, arity, tokens) in &rels {
        if *arity == 0 || tokens.len() % arity != 0 {
            return Err(Error::Format(format!(
                "relation `{name}`: {} elements do not split into tuples of arity {arity}",
                tokens.len()
            )));
        }
        relations.push(
            tokens
                .chunks(*arity)
                .map(|c| c.iter().map(|t| labeller.index(t)).collect())
                .collect(),
        );
    }
    let constants = consts.iter().map(|(_, e)| labeller.index(e)).collect();
    let structure = Structure::new(signature, n, relations, constants)?;
    Ok(Loaded {
        structure,
        labels: labeller.labels,
    })
}

/// Parses the `graph <n>` shorthand into the graph signature.
pub fn parse_graph(text: &str) -> Result<Loaded> {
    let (n, body) = parse_header(text, "graph")?;
    for (line_no, toks) in &body {
        if toks.len() != 2 {
            return Err(format_err(*line_no, "expected one edge `u v` per line"));
        }
    }
    let all: Vec<&str> = body
        .iter()
        .flat_map(|(_, t)| t.iter().map(String::as_str))
        .collect();
    let labeller = Labeller::new(n, &all)?;
    let edges: Vec<(usize, usize)> = body
        .iter()
        .map(|(_, t)| (labeller.index(&t[0]), labeller.index(&t[1])))
        .collect();
    Ok(Loaded {
        structure: Structure::graph(n, &edges)?,
        labels: labeller.labels,
    })
}

/// Parses either format, dispatching on the header keyword.
pub fn parse_any(text: &str) -> Result<Loaded> {
    let first = text
        .lines()
        .map(strip_comment)
        .find(|l| !l.trim().is_empty())
        .unwrap_or("");
    match first.split_whitespace().next() {
        Some("graph") => parse_graph(text),
        Some("structure") => parse_structure(text),
        _ => Err(Error::Format(
            "expected a `structure <n>` or `graph <n>` header".into(),
        )),
    }
}

/// Serialises a structure in the `structure` format (or `graph` format for
/// the graph signature), using element indices as labels.
pub fn write_structure(s: &Structure) -> String {
    let mut out = String::new();
    if *s.signature() == Signature::graph() {
        out.push_str(&format!("graph {}\n", s.size()));
        for (u, v) in s.gaifman().edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        return out;
    }
    out.push_str(&format!("structure {}\n", s.size()));
    for (sym, rel) in s.signature().relations().iter().zip(s.relations()) {
        out.push_str(&format!("rel {}/{}\n", sym.name, sym.arity));
        for t in rel.tuples() {
            // adj is stored symmetrically; one orientation suffices
            if sym.name == ADJ && sym.arity == 2 && t[0] > t[1] {
                continue;
            }
            let line: Vec<String> = t.iter().map(|e| e.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    for (name, &c) in s.signature().constants().iter().zip(s.constants()) {
        out.push_str(&format!("const {name} {c}\n"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Option<String>,
}

/// An ordered, non-empty list of structure files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// One `path [label]` per line; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let toks: Vec<&str> = strip_comment(line).split_whitespace().collect();
            match toks.as_slice() {
                [] => {}
                [path] | [path, _] => {
                    let p = Path::new(path);
                    entries.push(ManifestEntry {
                        path: if p.is_absolute() { p.to_path_buf() } else { base.join(p) },
                        label: toks.get(1).map(|s| s.to_string()),
                    });
                }
                _ => return Err(format_err(line_no, "expected `<path> [label]`")),
            }
        }
        if entries.is_empty() {
            return Err(Error::Format("manifest lists no structures".into()));
        }
        Ok(Manifest { entries })
    }
}
