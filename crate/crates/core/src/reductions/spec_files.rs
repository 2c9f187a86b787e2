use std::collections::BTreeMap;

use super::{AtmSpec, Direction, Move, ReductionError, TilingSystem};

fn err(line: usize, msg: impl Into<String>) -> ReductionError {
    ReductionError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Non-empty, comment-stripped lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap().trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_')
        && cs.all(|c| c.is_alphanumeric() || c == '_')
}

fn lookup(names: &[String], name: &str, line: usize, what: &str) -> Result<usize, ReductionError> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| err(line, format!("unknown {what} `{name}`")))
}

/// Parses the tiling file format:
///
/// ```text
/// colors: c0 c1
/// initial: c0
/// hor: (c0,c1) (c1,c0)
/// ver: (c0,c0) (c1,c1)
/// ```
pub fn parse_tiling(text: &str) -> Result<TilingSystem, ReductionError> {
    let mut colors: Option<Vec<String>> = None;
    let mut initial = None;
    let mut hor = Vec::new();
    let mut ver = Vec::new();
    for (no, line) in lines(text) {
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| err(no, "expected `key: value`"))?;
        match key.trim() {
            "colors" => {
                let cs: Vec<String> = rest.split_whitespace().map(String::from).collect();
                if let Some(bad) = cs.iter().find(|c| !is_ident(c)) {
                    return Err(err(no, format!("colour name `{bad}` is not an identifier")));
                }
                if cs.is_empty() {
                    return Err(err(no, "no colours"));
                }
                colors = Some(cs);
            }
            "initial" | "hor" | "ver" => {
                let cs = colors
                    .as_ref()
                    .ok_or_else(|| err(no, "`colors` must come first"))?;
                if key.trim() == "initial" {
                    initial = Some(lookup(cs, rest.trim(), no, "colour")?);
                    continue;
                }
                let cleaned: String = rest
                    .chars()
                    .map(|c| if "(),".contains(c) { ' ' } else { c })
                    .collect();
                let toks: Vec<&str> = cleaned.split_whitespace().collect();
                if !toks.len().is_multiple_of(2) {
                    return Err(err(no, "constraints must be pairs"));
                }
                let target = if key.trim() == "hor" {
                    &mut hor
                } else {
                    &mut ver
                };
                for p in toks.chunks(2) {
                    target.push((
                        lookup(cs, p[0], no, "colour")?,
                        lookup(cs, p[1], no, "colour")?,
                    ));
                }
            }
            other => return Err(err(no, format!("unknown key `{other}`"))),
        }
    }
    let colors = colors.ok_or_else(|| err(0, "missing `colors`"))?;
    let t = TilingSystem {
        colors,
        initial: initial.ok_or_else(|| err(0, "missing `initial`"))?,
        hor,
        ver,
    };
    t.validate()?;
    Ok(t)
}

/// Parses the machine file format:
///
/// ```text
/// states: q0 acc rej        # the first state is initial
/// accepting: acc
/// rejecting: rej
/// existential: q0
/// universal:
/// alphabet: _ a             # the first letter is the blank
/// input: a
/// move q0 a -> acc a R
/// move q0 a -> rej a L
/// ```
pub fn parse_atm(text: &str) -> Result<AtmSpec, ReductionError> {
    let mut fields: BTreeMap<&str, (usize, Vec<String>)> = BTreeMap::new();
    let mut raw_moves = Vec::new();
    for (no, line) in lines(text) {
        if let Some(rest) = line.strip_prefix("move ") {
            raw_moves.push((no, rest.to_string()));
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| err(no, "expected `key: value` or `move …`"))?;
        let key = key.trim();
        if ![
            "states",
            "accepting",
            "rejecting",
            "existential",
            "universal",
            "alphabet",
            "input",
        ]
        .contains(&key)
        {
            return Err(err(no, format!("unknown key `{key}`")));
        }
        if fields.contains_key(key) {
            return Err(err(no, format!("duplicate key `{key}`")));
        }
        fields.insert(
            key,
            (no, rest.split_whitespace().map(String::from).collect()),
        );
    }
    let get = |k: &str| {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| err(0, format!("missing `{k}`")))
    };
    let (_, states) = get("states")?;
    let (_, alphabet) = get("alphabet")?;
    let single = |k: &str| -> Result<usize, ReductionError> {
        let (no, v) = get(k)?;
        if v.len() != 1 {
            return Err(err(no, format!("`{k}` takes one state")));
        }
        lookup(&states, &v[0], no, "state")
    };
    let accepting = single("accepting")?;
    let rejecting = single("rejecting")?;
    let mut kind: Vec<Option<bool>> = vec![None; states.len()];
    for (key, universal) in [("existential", false), ("universal", true)] {
        if let Some((no, names)) = fields.get(key) {
            for name in names {
                let s = lookup(&states, name, *no, "state")?;
                if kind[s].is_some() {
                    return Err(err(*no, format!("state `{name}` listed twice")));
                }
                kind[s] = Some(universal);
            }
        }
    }
    for (s, k) in kind.iter().enumerate() {
        if k.is_none() && s != accepting && s != rejecting {
            return Err(err(
                0,
                format!("state `{}` is neither existential nor universal", states[s]),
            ));
        }
    }
    let input = match fields.get("input") {
        Some((no, word)) => word
            .iter()
            .map(|a| lookup(&alphabet, a, *no, "letter"))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    let mut moves = vec![vec![Vec::new(); alphabet.len()]; states.len()];
    for (no, m) in raw_moves {
        let toks: Vec<&str> = m.split_whitespace().collect();
        if toks.len() != 6 || toks[2] != "->" {
            return Err(err(no, "expected `move STATE LETTER -> STATE LETTER L|R`"));
        }
        let s = lookup(&states, toks[0], no, "state")?;
        let a = lookup(&alphabet, toks[1], no, "letter")?;
        let dir = match toks[5] {
            "L" => Direction::Left,
            "R" => Direction::Right,
            d => return Err(err(no, format!("direction must be L or R, got `{d}`"))),
        };
        moves[s][a].push(Move {
            state: lookup(&states, toks[3], no, "state")?,
            letter: lookup(&alphabet, toks[4], no, "letter")?,
            dir,
        });
    }
    let m = AtmSpec {
        universal: kind.iter().map(|k| k.unwrap_or(false)).collect(),
        states,
        accepting,
        rejecting,
        alphabet,
        input,
        moves,
    };
    m.validate()?;
    Ok(m)
}
