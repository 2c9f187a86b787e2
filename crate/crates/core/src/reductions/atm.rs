use std::collections::HashMap;

use crate::structures::Structure;
use crate::syntax::{Formula, Signature, Term};

use super::lambda::{bit_vars, build_lambda, LambdaKind};
use super::{AtmSpec, BitTuple, Direction, Move, ReductionError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtmVerdict {
    Accepts,
    Rejects,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    pub state: usize,
    pub head: usize,
    pub tape: Vec<usize>,
}

impl Config {
    pub fn initial(m: &AtmSpec) -> Config {
        let mut tape = vec![0; 1 << m.width()];
        tape[..m.input.len()].copy_from_slice(&m.input);
        Config {
            state: 0,
            head: 0,
            tape,
        }
    }

    /// The successor under `mv`, or `None` when the head would leave the tape.
    pub fn apply(&self, mv: &Move) -> Option<Config> {
        let head = match mv.dir {
            Direction::Left => self.head.checked_sub(1)?,
            Direction::Right => Some(self.head + 1).filter(|&h| h < self.tape.len())?,
        };
        let mut tape = self.tape.clone();
        tape[self.head] = mv.letter;
        Some(Config {
            state: mv.state,
            head,
            tape,
        })
    }
}

/// Reachable configurations with successor indices (`None` = off the tape)
/// and the least set of rejecting configurations.
struct Graph {
    configs: Vec<Config>,
    succ: Vec<Vec<Option<usize>>>,
    rejects: Vec<bool>,
}

fn explore(m: &AtmSpec, max_configs: u64) -> Result<Graph, ReductionError> {
    m.validate()?;
    let mut index: HashMap<Config, usize> = HashMap::new();
    let mut configs = vec![Config::initial(m)];
    index.insert(configs[0].clone(), 0);
    let mut succ = Vec::new();
    let mut i = 0;
    while i < configs.len() {
        let c = configs[i].clone();
        let mut out = Vec::new();
        for mv in &m.moves[c.state][c.tape[c.head]] {
            out.push(match c.apply(mv) {
                None => None,
                Some(d) => Some(match index.get(&d) {
                    Some(&j) => j,
                    None => {
                        if configs.len() as u64 >= max_configs {
                            return Err(ReductionError::Ceiling(max_configs));
                        }
                        index.insert(d.clone(), configs.len());
                        configs.push(d);
                        configs.len() - 1
                    }
                }),
            });
        }
        succ.push(out);
        i += 1;
    }
    // A configuration rejects when it is the rejecting state, or when it is
    // existential and both moves lead to rejection, or universal and one does.
    // A move off the tape never rejects.
    let mut rejects: Vec<bool> = configs.iter().map(|c| c.state == m.rejecting).collect();
    loop {
        let mut changed = false;
        for (k, c) in configs.iter().enumerate() {
            if rejects[k] || m.is_final(c.state) {
                continue;
            }
            let bad = |s: &Option<usize>| s.is_some_and(|j| rejects[j]);
            let r = if m.universal[c.state] {
                succ[k].iter().any(bad)
            } else {
                succ[k].iter().all(bad)
            };
            if r {
                rejects[k] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Graph {
        configs,
        succ,
        rejects,
    })
}

/// AND-OR evaluation of the computation tree from the initial configuration,
/// shared over equal configurations. Paths that never reach the rejecting
/// state count as accepting, and so does a move off the tape.
pub fn atm_oracle(m: &AtmSpec, max_configs: u64) -> Result<AtmVerdict, ReductionError> {
    let g = explore(m, max_configs)?;
    Ok(if g.rejects[0] {
        AtmVerdict::Rejects
    } else {
        AtmVerdict::Accepts
    })
}

fn signature(m: &AtmSpec, constants: bool) -> Signature {
    let n = m.width();
    let mut sig = Signature::new()
        .with_relation("Z", 1)
        .with_relation("O", 1)
        .with_relation("H", 1 + n)
        .with_relation("C", 1 + 2 * n)
        .with_relation("Succ1", 2 + 3 * n)
        .with_relation("Succ2", 2 + 3 * n)
        .with_relation("Init", 1);
    for s in 0..m.states.len() {
        sig.add_relation(&format!("S{s}"), 1 + n);
    }
    for a in 0..m.alphabet.len() {
        sig.add_relation(&format!("A{a}"), 1 + n);
    }
    if constants {
        sig = sig.with_constant("c0").with_constant("c1");
    }
    sig
}

fn at(rel: &str, head: &[&str], bits: &[&[String]]) -> Formula {
    let mut args: Vec<Term> = head.iter().map(|v| Term::var(v)).collect();
    for b in bits {
        args.extend(b.iter().map(|v| Term::var(v)));
    }
    Formula::atom(rel, args)
}

fn un(rel: &str, v: &str) -> Formula {
    Formula::atom(rel, vec![Term::var(v)])
}

/// `rel(head, bit tuples with i ones for i = 0..=k)` for bit terms one/zero.
fn seeds(rel: &str, head: &[&str], k: usize, one: &Term, zero: &Term) -> Vec<Formula> {
    (0..=k)
        .map(|i| {
            let mut args: Vec<Term> = head.iter().map(|v| Term::var(v)).collect();
            args.extend((0..k).map(|j| if j < i { one.clone() } else { zero.clone() }));
            Formula::atom(rel, args)
        })
        .collect()
}

/// Closure of `rel` under the swap of the first two bit positions and the
/// rotation by one.
fn permutation_axiom(rel: &str, head: &[&str], k: usize, prefix: &str) -> Formula {
    let z = bit_vars(prefix, k);
    let mut swapped = z.clone();
    swapped.swap(0, 1);
    let mut rotated = z[1..].to_vec();
    rotated.push(z[0].clone());
    let mut vars: Vec<String> = head.iter().map(|s| s.to_string()).collect();
    vars.extend(z.iter().cloned());
    Formula::forall(
        &vars,
        Formula::implies(
            at(rel, head, &[&z]),
            Formula::conj([at(rel, head, &[&swapped]), at(rel, head, &[&rotated])]),
        ),
    )
}

fn encode(m: &AtmSpec, constants: bool) -> Result<(Signature, Formula), ReductionError> {
    m.validate()?;
    let n = m.width();
    let sig = signature(m, constants);
    let (u, v, w) = (bit_vars("u", n), bit_vars("v", n), bit_vars("w", n));
    let s = |i: usize| format!("S{i}");
    let a = |j: usize| format!("A{j}");
    let mut parts = Vec::new();

    let (one, zero) = if constants {
        parts.push(Formula::conj([
            Formula::atom("Z", vec![Term::constant("c0")]),
            Formula::not(Formula::atom("O", vec![Term::constant("c0")])),
            Formula::atom("O", vec![Term::constant("c1")]),
            Formula::not(Formula::atom("Z", vec![Term::constant("c1")])),
        ]));
        (Term::constant("c1"), Term::constant("c0"))
    } else {
        for (p, q) in [("Z", "O"), ("O", "Z")] {
            parts.push(Formula::exists(
                &["x"],
                Formula::conj([un(p, "x"), Formula::not(un(q, "x"))]),
            ));
            parts.push(Formula::forall(
                &["x", "y"],
                Formula::implies(
                    Formula::conj([un(p, "x"), un(p, "y")]),
                    Formula::eq(Term::var("x"), Term::var("y")),
                ),
            ));
        }
        (Term::var("t1"), Term::var("t0"))
    };
    let bit_pair = || Formula::conj([un("O", "t1"), un("Z", "t0")]);

    // C on every tuple of x followed by 2n bits.
    let mut c_seeds = seeds("C", &["x"], 2 * n, &one, &zero);
    if constants {
        parts.push(Formula::forall(&["x"], Formula::conj(c_seeds)));
    } else {
        let guard = c_seeds.remove(1);
        parts.push(Formula::forall(
            &["x"],
            Formula::exists(
                &["t1", "t0"],
                Formula::conj([guard, bit_pair()].into_iter().chain(c_seeds)),
            ),
        ));
    }
    parts.push(permutation_axiom("C", &["x"], 2 * n, "z"));

    // Configurations are well formed.
    if !constants {
        let bits = Formula::conj(u.iter().map(|b| Formula::disj([un("O", b), un("Z", b)])));
        parts.push(Formula::forall(
            &["x"],
            Formula::exists(&u, Formula::conj([at("H", &["x"], &[&u]), bits])),
        ));
    }
    let xuv: Vec<String> = ["x".to_string()]
        .into_iter()
        .chain(u.iter().cloned())
        .chain(v.iter().cloned())
        .collect();
    let xu: Vec<String> = ["x".to_string()]
        .into_iter()
        .chain(u.iter().cloned())
        .collect();
    parts.push(Formula::forall(
        &xuv,
        Formula::implies(
            at("C", &["x"], &[&u, &v]),
            Formula::implies(
                Formula::conj([
                    at("H", &["x"], &[&u]),
                    build_lambda(LambdaKind::Diff, n, &u, &v)?,
                ]),
                Formula::not(at("H", &["x"], &[&v])),
            ),
        ),
    ));
    parts.push(Formula::forall(
        &xu,
        Formula::implies(
            at("H", &["x"], &[&u]),
            Formula::exactly_one(
                (0..m.states.len())
                    .map(|i| at(&s(i), &["x"], &[&u]))
                    .collect(),
            ),
        ),
    ));
    parts.push(Formula::forall(
        &xu,
        Formula::implies(
            at("C", &["x"], &[&u, &u]),
            Formula::exactly_one(
                (0..m.alphabet.len())
                    .map(|j| at(&a(j), &["x"], &[&u]))
                    .collect(),
            ),
        ),
    ));

    // Two successors per element, with guards on all bit tuples.
    for succ in ["Succ1", "Succ2"] {
        let mut sd = seeds(succ, &["x", "y"], 3 * n, &one, &zero);
        if constants {
            let guard = sd.remove(1);
            parts.push(Formula::forall(
                &["x"],
                Formula::exists(&["y"], Formula::conj([guard].into_iter().chain(sd))),
            ));
        } else {
            let guard = sd.remove(1);
            parts.push(Formula::forall(
                &["x"],
                Formula::exists(
                    &["y", "t1", "t0"],
                    Formula::conj([guard, bit_pair()].into_iter().chain(sd)),
                ),
            ));
        }
        parts.push(permutation_axiom(succ, &["x", "y"], 3 * n, "t"));
    }

    let xyu: Vec<String> = ["x".to_string(), "y".to_string()]
        .into_iter()
        .chain(u.iter().cloned())
        .collect();
    for succ in ["Succ1", "Succ2"] {
        let keep = Formula::conj(
            (0..m.alphabet.len())
                .map(|j| Formula::implies(at(&a(j), &["x"], &[&u]), at(&a(j), &["y"], &[&u]))),
        );
        parts.push(Formula::forall(
            &xyu,
            Formula::implies(
                at(succ, &["x", "y"], &[&u, &u, &u]),
                Formula::implies(Formula::not(at("H", &["x"], &[&u])), keep.clone()),
            ),
        ));
        for f in [m.accepting, m.rejecting] {
            parts.push(Formula::forall(
                &xyu,
                Formula::implies(
                    at(succ, &["x", "y"], &[&u, &u, &u]),
                    Formula::implies(
                        Formula::conj([at("H", &["x"], &[&u]), at(&s(f), &["x"], &[&u])]),
                        Formula::conj([
                            at("H", &["y"], &[&u]),
                            at(&s(f), &["y"], &[&u]),
                            keep.clone(),
                        ]),
                    ),
                ),
            ));
        }
    }

    // Moves.
    let step = |dir: Direction, target: &[String]| match dir {
        Direction::Right => build_lambda(LambdaKind::Next, n, &u, target),
        Direction::Left => build_lambda(LambdaKind::Next, n, target, &u),
    };
    let result = |mv: &Move, target: &[String]| {
        Formula::conj([
            at("H", &["y"], &[target]),
            at(&s(mv.state), &["y"], &[target]),
            at(&a(mv.letter), &["y"], &[&u]),
        ])
    };
    for i in 0..m.states.len() {
        if m.is_final(i) {
            continue;
        }
        for j in 0..m.alphabet.len() {
            let [m1, m2] = [m.moves[i][j][0], m.moves[i][j][1]];
            let base = || {
                vec![
                    at("H", &["x"], &[&u]),
                    at(&s(i), &["x"], &[&u]),
                    at(&a(j), &["x"], &[&u]),
                ]
            };
            if m.universal[i] {
                for (succ, mv, target) in [("Succ1", m1, &v), ("Succ2", m2, &w)] {
                    let vars: Vec<String> =
                        xyu.iter().cloned().chain(target.iter().cloned()).collect();
                    let mut pre = base();
                    pre.push(step(mv.dir, target)?);
                    parts.push(Formula::forall(
                        &vars,
                        Formula::implies(
                            at(succ, &["x", "y"], &[&u, target, target]),
                            Formula::implies(Formula::conj(pre), result(&mv, target)),
                        ),
                    ));
                }
            } else {
                let vars: Vec<String> = xyu
                    .iter()
                    .cloned()
                    .chain(v.iter().cloned())
                    .chain(w.iter().cloned())
                    .collect();
                let mut pre = base();
                pre.push(step(m1.dir, &v)?);
                pre.push(step(m2.dir, &w)?);
                parts.push(Formula::forall(
                    &vars,
                    Formula::implies(
                        at("Succ1", &["x", "y"], &[&u, &v, &w]),
                        Formula::implies(
                            Formula::conj(pre),
                            Formula::disj([result(&m1, &v), result(&m2, &w)]),
                        ),
                    ),
                ));
            }
        }
    }

    // No rejecting configuration; an initial one exists.
    parts.push(Formula::not(Formula::exists(
        &xu,
        at(&s(m.rejecting), &["x"], &[&u]),
    )));
    parts.push(Formula::exists(&["x"], un("Init", "x")));
    let mut init = Vec::new();
    for (p, &letter) in m.input.iter().enumerate() {
        init.push(Formula::implies(
            build_lambda(LambdaKind::EqConst(p as u64), n, &u, &[])?,
            at(&a(letter), &["x"], &[&u]),
        ));
    }
    init.push(Formula::implies(
        build_lambda(LambdaKind::EqConst(0), n, &u, &[])?,
        Formula::conj([at("H", &["x"], &[&u]), at(&s(0), &["x"], &[&u])]),
    ));
    init.push(Formula::implies(
        build_lambda(LambdaKind::GeqConst(m.input.len() as u64), n, &u, &[])?,
        at(&a(0), &["x"], &[&u]),
    ));
    parts.push(Formula::forall(
        &xu,
        Formula::implies(
            at("C", &["x"], &[&u, &u]),
            Formula::implies(un("Init", "x"), Formula::conj(init)),
        ),
    ));
    Ok((sig, Formula::conj(parts)))
}

/// Encodes "m accepts its input" as a TGF₁ sentence with equality. The bits
/// zero and one are kings.
pub fn encode_atm_tgf1eq(m: &AtmSpec) -> Result<(Signature, Formula), ReductionError> {
    encode(m, false)
}

/// Encodes "m accepts its input" as a GF₁ sentence without equality. The
/// bits are the constants c0 and c1; the head-existence axiom is dropped.
pub fn encode_atm_gf1_const(m: &AtmSpec) -> Result<(Signature, Formula), ReductionError> {
    encode(m, true)
}

/// A model of the machine encoding (`constants` selects the GF₁ variant)
/// built from the accepting part of the computation graph, or `None` when
/// the machine rejects. Elements 0 and 1 are the bits zero and one; they
/// encode the initial configuration as well.
pub fn atm_model(
    m: &AtmSpec,
    constants: bool,
    max_configs: u64,
) -> Result<Option<Structure>, ReductionError> {
    let g = explore(m, max_configs)?;
    if g.rejects[0] {
        return Ok(None);
    }
    let n = m.width();
    // Pick the configurations the model needs and each one's two successors.
    let mut element: HashMap<usize, usize> = HashMap::new();
    let mut order = vec![0usize];
    element.insert(0, 2);
    let mut succs: Vec<[usize; 2]> = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let k = order[i];
        let c = &g.configs[k];
        let me = i + 2;
        let targets: [Option<usize>; 2] = if m.is_final(c.state)
            || g.succ[k].iter().any(Option::is_none) && !m.universal[c.state]
        {
            [None, None]
        } else if m.universal[c.state] {
            [g.succ[k][0], g.succ[k][1]]
        } else {
            let good = g.succ[k]
                .iter()
                .flatten()
                .find(|&&j| !g.rejects[j])
                .copied();
            [good, None]
        };
        let mut pair = [me, me];
        for (slot, t) in targets.iter().enumerate() {
            if let Some(j) = *t {
                let e = *element.entry(j).or_insert_with(|| {
                    order.push(j);
                    order.len() + 1
                });
                pair[slot] = e;
            }
        }
        succs.push(pair);
        i += 1;
    }
    let size = order.len() + 2;
    let mut names = vec!["zero".to_string(), "one".to_string()];
    names.extend((0..order.len()).map(|i| format!("k{i}")));
    let mut s = Structure::new(signature(m, constants), size).with_names(names);
    s.insert("Z", vec![0]);
    s.insert("O", vec![1]);
    if constants {
        s.set_constant("c0", 0);
        s.set_constant("c1", 1);
    }
    s.insert("Init", vec![2]);
    let cell = |p: usize| -> Vec<usize> {
        BitTuple::from_value(p as u64, n)
            .0
            .iter()
            .map(|&b| b as usize)
            .collect()
    };
    let tuples = |k: usize| -> Vec<Vec<usize>> {
        BitTuple::all(k)
            .map(|b| b.0.iter().map(|&x| x as usize).collect())
            .collect()
    };
    let (t2, t3) = (tuples(2 * n), tuples(3 * n));
    for e in 0..size {
        // The bits encode the initial configuration.
        let idx = e.saturating_sub(2);
        let c = &g.configs[order[idx]];
        let with = |prefix: &[usize], rest: &[usize]| {
            prefix.iter().chain(rest).copied().collect::<Vec<_>>()
        };
        s.insert("H", with(&[e], &cell(c.head)));
        s.insert(&format!("S{}", c.state), with(&[e], &cell(c.head)));
        for (p, &letter) in c.tape.iter().enumerate() {
            s.insert(&format!("A{letter}"), with(&[e], &cell(p)));
        }
        for t in &t2 {
            s.insert("C", with(&[e], t));
        }
        let pair = succs[idx];
        let pair = [
            if pair[0] == idx + 2 { e } else { pair[0] },
            if pair[1] == idx + 2 { e } else { pair[1] },
        ];
        for (r, target) in [("Succ1", pair[0]), ("Succ2", pair[1])] {
            for t in &t3 {
                s.insert(r, with(&[e, target], t));
            }
        }
    }
    Ok(Some(s))
}

#[cfg(test)]
mod tests {
    use super::super::parse_atm;
    use super::*;
    use crate::fragments::classify;
    use crate::structures::models;

    const ACCEPT_NOW: &str = "states: acc rej\naccepting: acc\nrejecting: rej\nalphabet: _\n";
    const REJECT_NOW: &str = "states: rej acc\naccepting: acc\nrejecting: rej\nalphabet: _\n";
    const UNIVERSAL_SPLIT: &str =
        "states: q acc rej\naccepting: acc\nrejecting: rej\nuniversal: q\nalphabet: _\n\
        move q _ -> acc _ R\nmove q _ -> rej _ R\n";

    #[test]
    fn oracle_examples() {
        assert_eq!(
            atm_oracle(&parse_atm(ACCEPT_NOW).unwrap(), 100).unwrap(),
            AtmVerdict::Accepts
        );
        assert_eq!(
            atm_oracle(&parse_atm(REJECT_NOW).unwrap(), 100).unwrap(),
            AtmVerdict::Rejects
        );
        assert_eq!(
            atm_oracle(&parse_atm(UNIVERSAL_SPLIT).unwrap(), 100).unwrap(),
            AtmVerdict::Rejects
        );
        let existential = UNIVERSAL_SPLIT.replace("universal", "existential");
        assert_eq!(
            atm_oracle(&parse_atm(&existential).unwrap(), 100).unwrap(),
            AtmVerdict::Accepts
        );
    }

    #[test]
    fn classification() {
        let m = parse_atm(UNIVERSAL_SPLIT).unwrap();
        let r = classify(&encode_atm_tgf1eq(&m).unwrap().1);
        assert!(r.in_tgf1 && r.uses_equality && !r.in_gf && !r.uses_constants);
        let r = classify(&encode_atm_gf1_const(&m).unwrap().1);
        assert!(r.in_gf1 && r.uses_constants && !r.uses_equality);
    }

    #[test]
    fn constructive_certificates() {
        let existential = UNIVERSAL_SPLIT.replace("universal", "existential");
        for text in [ACCEPT_NOW, existential.as_str()] {
            let m = parse_atm(text).unwrap();
            for constants in [false, true] {
                let (_, f) = encode(&m, constants).unwrap();
                let s = atm_model(&m, constants, 1000).unwrap().unwrap();
                assert!(models(&s, &f).unwrap(), "{text} constants={constants}");
            }
        }
        assert!(atm_model(&parse_atm(UNIVERSAL_SPLIT).unwrap(), false, 1000)
            .unwrap()
            .is_none());
    }
}
