use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::Structure;
use crate::syntax::Signature;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct StructureParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> StructureParseError {
    StructureParseError {
        line,
        message: message.into(),
    }
}

/// Reads the structure file format:
///
/// ```text
/// structure
/// universe: a0 a1
/// constant c = a0
/// rel R/2: (a0,a1) (a1,a1)
/// end
/// ```
///
/// The `/ARITY` suffix is optional when tuples are present or `sig` declares
/// the relation. Relations of `sig` missing from the file are empty.
pub fn parse_structure(
    text: &str,
    sig: Option<&Signature>,
) -> Result<Structure, StructureParseError> {
    let mut names: Option<Vec<String>> = None;
    let mut rels: BTreeMap<String, (Option<usize>, Vec<(usize, Vec<String>)>)> = BTreeMap::new();
    let mut consts: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut started = false;
    let mut ended = false;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if ended {
            return Err(err(ln, "content after `end`"));
        }
        if !started {
            if line != "structure" {
                return Err(err(ln, "expected `structure`"));
            }
            started = true;
            continue;
        }
        if line == "end" {
            ended = true;
        } else if let Some(rest) = line.strip_prefix("universe:") {
            let list: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            let uniq: BTreeSet<&String> = list.iter().collect();
            if uniq.len() != list.len() {
                return Err(err(ln, "duplicate element name"));
            }
            if list.is_empty() {
                return Err(err(ln, "universe must be nonempty"));
            }
            names = Some(list);
        } else if let Some(rest) = line.strip_prefix("constant ") {
            let (c, e) = rest
                .split_once('=')
                .ok_or_else(|| err(ln, "expected `constant NAME = ELEMENT`"))?;
            consts.insert(c.trim().to_string(), (ln, e.trim().to_string()));
        } else if let Some(rest) = line.strip_prefix("rel ") {
            let (head, body) = rest
                .split_once(':')
                .ok_or_else(|| err(ln, "expected `rel NAME: tuples`"))?;
            let head = head.trim();
            let (name, arity) = match head.split_once('/') {
                Some((n, a)) => (
                    n.trim().to_string(),
                    Some(
                        a.trim()
                            .parse::<usize>()
                            .map_err(|_| err(ln, "bad arity"))?,
                    ),
                ),
                None => (head.to_string(), None),
            };
            let mut tuples = Vec::new();
            let mut rest = body.trim();
            while !rest.is_empty() {
                let inner = rest
                    .strip_prefix('(')
                    .ok_or_else(|| err(ln, "expected `(`"))?;
                let close = inner.find(')').ok_or_else(|| err(ln, "missing `)`"))?;
                let items: Vec<String> = inner[..close]
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .collect();
                tuples.push((ln, items));
                rest = inner[close + 1..].trim_start();
            }
            let entry = rels.entry(name).or_insert((arity, Vec::new()));
            if entry.0.is_none() {
                entry.0 = arity;
            }
            entry.1.extend(tuples);
        } else {
            return Err(err(ln, format!("unrecognized line `{line}`")));
        }
    }
    if !ended {
        return Err(err(text.lines().count().max(1), "missing `end`"));
    }
    let names = names.ok_or_else(|| err(1, "missing `universe:` line"))?;
    let lookup = |ln: usize, nm: &str| {
        names
            .iter()
            .position(|x| x == nm)
            .ok_or_else(|| err(ln, format!("unknown element `{nm}`")))
    };

    let mut signature = sig.cloned().unwrap_or_default();
    for (r, (arity, tuples)) in &rels {
        let inferred = arity.or_else(|| tuples.first().map(|(_, t)| t.len()));
        match (signature.arity(r), inferred) {
            (Some(a), Some(b)) if a != b => {
                return Err(err(
                    tuples.first().map_or(1, |t| t.0),
                    format!("relation `{r}` has arity {a}, not {b}"),
                ))
            }
            (None, Some(b)) if b >= 1 => signature.add_relation(r, b),
            (None, _) => return Err(err(1, format!("cannot infer arity of `{r}`"))),
            _ => {}
        }
    }
    for c in consts.keys() {
        signature.constants.insert(c.clone());
    }
    for c in &signature.constants {
        if !consts.contains_key(c) {
            return Err(err(1, format!("constant `{c}` is not interpreted")));
        }
    }
    let mut s = Structure::new(signature.clone(), names.len()).with_names(names.clone());
    for (r, (_, tuples)) in &rels {
        let arity = signature.arity(r).unwrap();
        for (ln, t) in tuples {
            if t.len() != arity {
                return Err(err(
                    *ln,
                    format!("tuple of length {} for `{r}`/{arity}", t.len()),
                ));
            }
            let ids = t
                .iter()
                .map(|nm| lookup(*ln, nm))
                .collect::<Result<Vec<_>, _>>()?;
            s.insert(r, ids);
        }
    }
    for (c, (ln, e)) in &consts {
        s.set_constant(c, lookup(*ln, e)?);
    }
    Ok(s)
}

pub fn render_structure(s: &Structure) -> String {
    let mut out = String::from("structure\n");
    out.push_str("universe:");
    for n in s.names() {
        out.push(' ');
        out.push_str(n);
    }
    out.push('\n');
    for (c, &e) in s.constants() {
        out.push_str(&format!("constant {c} = {}\n", s.name(e)));
    }
    for (r, &arity) in &s.signature().relations {
        out.push_str(&format!("rel {r}/{arity}:"));
        for t in s.tuples(r) {
            let items: Vec<&str> = t.iter().map(|&e| s.name(e)).collect();
            out.push_str(&format!(" ({})", items.join(",")));
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}
