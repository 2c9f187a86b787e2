//! Scott-type normal form and the enumeration of its nondeterministic
//! conversion runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fragments::{analyze_block, block, classify, GuardStatus};
use crate::structures::{CompiledFormula, DenseStructure, EvalError, Structure};
use crate::syntax::{free_variables, Formula, FormulaMetrics, Quantifier, Signature, Term};

pub const RESERVED_PREFIX: &str = "_nf";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dialect {
    Gf1,
    Tgf1,
    Tgf1NoEq,
    Lgf1,
}

impl Dialect {
    pub fn name(self) -> &'static str {
        match self {
            Dialect::Gf1 => "gf1",
            Dialect::Tgf1 => "tgf1",
            Dialect::Tgf1NoEq => "tgf1-noeq",
            Dialect::Lgf1 => "lgf1",
        }
    }

    fn allows_pair(self) -> bool {
        matches!(self, Dialect::Tgf1 | Dialect::Tgf1NoEq)
    }

    fn accepts(self, status: GuardStatus) -> bool {
        match status {
            GuardStatus::AtomicGuard => true,
            GuardStatus::LooseGuard => self == Dialect::Lgf1,
            GuardStatus::UnguardedBinaryOk => self.allows_pair(),
            GuardStatus::Unguarded => false,
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gf1" => Ok(Dialect::Gf1),
            "tgf1" => Ok(Dialect::Tgf1),
            "tgf1-noeq" => Ok(Dialect::Tgf1NoEq),
            "lgf1" => Ok(Dialect::Lgf1),
            other => Err(format!(
                "unknown dialect `{other}` (expected gf1, tgf1, tgf1-noeq or lgf1)"
            )),
        }
    }
}

/// `∀x̄ (γ → ψ)` with γ the conjunction of `guard`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardedUniversal {
    pub vars: Vec<String>,
    pub guard: Vec<Formula>,
    pub matrix: Formula,
}

/// `∀x ∃ȳ ψ′(x, ȳ)`; `witnesses` may be empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForallExists {
    pub var: String,
    pub witnesses: Vec<String>,
    pub matrix: Formula,
}

/// `∀xy ψ″(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniversalPair {
    pub vars: [String; 2],
    pub matrix: Formula,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub guarded_universals: Vec<GuardedUniversal>,
    pub forall_exists: Vec<ForallExists>,
    pub universal_pair: Option<UniversalPair>,
    /// Input signature extended by the fresh unary predicates.
    pub signature: Signature,
    pub original_signature: Signature,
    pub size_n: usize,
    pub dialect: Dialect,
    /// How each fresh predicate reads off the input formula, innermost first.
    pub definitions: Vec<Definition>,
}

/// `predicate(var) ↔ formula`, where `formula` may use earlier predicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub predicate: String,
    pub var: String,
    pub formula: Formula,
}

impl GuardedUniversal {
    pub fn to_formula(&self) -> Formula {
        Formula::forall(
            &self.vars,
            Formula::implies(Formula::conj(self.guard.clone()), self.matrix.clone()),
        )
    }
}

impl ForallExists {
    pub fn to_formula(&self) -> Formula {
        Formula::forall(
            &[&self.var],
            Formula::exists(&self.witnesses, self.matrix.clone()),
        )
    }
}

impl UniversalPair {
    pub fn to_formula(&self) -> Formula {
        Formula::forall(&self.vars, self.matrix.clone())
    }
}

impl NormalForm {
    pub fn to_formula(&self) -> Formula {
        let mut parts: Vec<Formula> = self
            .guarded_universals
            .iter()
            .map(|g| g.to_formula())
            .collect();
        parts.extend(self.forall_exists.iter().map(|c| c.to_formula()));
        parts.extend(self.universal_pair.iter().map(|p| p.to_formula()));
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Whether doubling turns every model into a kingless one: `2𝔄` when
    /// there is no pair conjunct, `2𝔄⁺` when no universal conjunct mentions
    /// equality (witness tuples never straddle the two copies).
    pub fn doubling_removes_kings(&self) -> bool {
        let Some(pair) = &self.universal_pair else {
            return true;
        };
        !pair.matrix.uses_equality()
            && self
                .guarded_universals
                .iter()
                .all(|u| !u.matrix.uses_equality() && u.guard.iter().all(|g| !g.uses_equality()))
    }

    /// Expands a structure for the input signature by the fresh predicates,
    /// read off their definitions. When `s` models the input formula, the
    /// expansion models the candidate whose guesses are true in `s`.
    pub fn expand(&self, s: &Structure) -> Result<Structure, EvalError> {
        let mut out =
            Structure::new(self.signature.clone(), s.size()).with_names(s.names().to_vec());
        for r in s.relation_names() {
            for t in s.tuples(r) {
                out.insert(r, t.clone());
            }
        }
        for (c, &e) in s.constants() {
            out.set_constant(c, e);
        }
        for d in &self.definitions {
            let compiled = CompiledFormula::new(&self.signature, &d.formula)?;
            let dense = DenseStructure::from_structure(&out);
            let mut env = BTreeMap::new();
            for e in 0..s.size() {
                env.insert(d.var.clone(), e);
                if compiled.eval(&dense, &env)? == Some(true) {
                    out.insert(&d.predicate, vec![e]);
                }
            }
        }
        Ok(out)
    }

    /// Maximum witness-tuple length over the ∀∃ conjuncts.
    pub fn max_witnesses(&self) -> usize {
        self.forall_exists
            .iter()
            .map(|c| c.witnesses.len())
            .max()
            .unwrap_or(0)
    }

    pub fn fresh_predicates(&self) -> Vec<&String> {
        self.signature
            .relations
            .keys()
            .filter(|r| !self.original_signature.relations.contains_key(*r))
            .collect()
    }

    fn recompute_size(&mut self) {
        self.size_n = FormulaMetrics::of(&self.to_formula()).length;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GuessTrace {
    pub guesses: Vec<(Formula, bool)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum NormalFormError {
    #[error("formula is not in {dialect}: {reason}")]
    DialectMismatch { dialect: Dialect, reason: String },
    #[error("relation name `{0}` uses the reserved prefix `_nf`")]
    ReservedName(String),
    #[error("formula has free variables: {0}")]
    NotASentence(String),
    #[error("too many closed subsentences to enumerate ({0})")]
    TooManyGuesses(usize),
}

fn mismatch(dialect: Dialect, reason: impl Into<String>) -> NormalFormError {
    NormalFormError::DialectMismatch {
        dialect,
        reason: reason.into(),
    }
}

/// Checks that `f` is a sentence of the dialect's fragment.
pub fn check_dialect(f: &Formula, dialect: Dialect) -> Result<(), NormalFormError> {
    let fv = free_variables(f);
    if !fv.is_empty() {
        return Err(NormalFormError::NotASentence(
            fv.into_iter().collect::<Vec<_>>().join(", "),
        ));
    }
    let r = classify(f);
    let why = || {
        r.first_violation
            .as_ref()
            .map(|v| v.to_string())
            .unwrap_or_else(|| "fragment check failed".into())
    };
    let ok = match dialect {
        Dialect::Gf1 => r.in_gf1,
        Dialect::Tgf1 => r.in_tgf1,
        Dialect::Tgf1NoEq => {
            if r.uses_equality {
                return Err(mismatch(dialect, "formula uses equality"));
            }
            r.in_tgf1
        }
        Dialect::Lgf1 => r.in_lgf1,
    };
    if ok {
        Ok(())
    } else {
        Err(mismatch(dialect, why()))
    }
}

struct Run<'a> {
    dialect: Dialect,
    sig: Signature,
    mask: u64,
    guess_count: usize,
    trace: GuessTrace,
    fresh: usize,
    definitions: Vec<Definition>,
    guarded: Vec<GuardedUniversal>,
    fe: Vec<ForallExists>,
    pairs: Vec<Formula>,
    avoid: &'a BTreeSet<String>,
}

fn occurring(vars: &[String], body: &Formula) -> Vec<String> {
    let fv = free_variables(body);
    let mut out: Vec<String> = Vec::new();
    for v in vars {
        if fv.contains(v) && !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}

/// Body of `∃x̄ ¬body` for a universal block, keeping the guard visible as a
/// conjunct.
fn negate_universal_body(body: Formula) -> Formula {
    match body {
        Formula::Implies(lhs, rhs) => {
            let mut parts: Vec<Formula> = lhs.conjuncts().into_iter().cloned().collect();
            parts.push(Formula::not(*rhs));
            Formula::conj(parts)
        }
        Formula::Or(items) => Formula::conj(items.into_iter().map(|g| match g {
            Formula::Not(inner) => *inner,
            other => Formula::not(other),
        })),
        Formula::Not(inner) => *inner,
        other => Formula::not(other),
    }
}

/// Splits a conjunction into the listed guard atoms and the rest.
fn split_guard(body: &Formula, guard: &[Formula]) -> Formula {
    let mut used = vec![false; guard.len()];
    let mut rest = Vec::new();
    for c in body.conjuncts() {
        match guard
            .iter()
            .enumerate()
            .position(|(i, g)| !used[i] && g == c)
        {
            Some(i) => used[i] = true,
            None => rest.push(c.clone()),
        }
    }
    Formula::conj(rest)
}

impl Run<'_> {
    fn fresh_var(&self, base: &str, taken: &BTreeSet<String>) -> String {
        let mut k = 0;
        let mut name = base.to_string();
        while taken.contains(&name)
            || self.avoid.contains(&name)
            || self.sig.constants.contains(&name)
        {
            name = format!("{base}{k}");
            k += 1;
        }
        name
    }

    fn fresh_predicate(&mut self) -> String {
        let name = format!("{RESERVED_PREFIX}{}", self.fresh);
        self.fresh += 1;
        self.sig.add_relation(&name, 1);
        name
    }

    fn push_pair(&mut self, a: &str, b: &str, matrix: Formula) {
        let [x, y] = self.pair_names();
        let mut map = std::collections::BTreeMap::new();
        map.insert(a.to_string(), Term::Var(x));
        map.insert(b.to_string(), Term::Var(y));
        self.pairs.push(matrix.rename_free(&map));
    }

    fn pair_names(&self) -> [String; 2] {
        let empty = BTreeSet::new();
        let x = self.fresh_var("x", &empty);
        let y = self.fresh_var("y", &BTreeSet::from([x.clone()]));
        [x, y]
    }

    /// Replaces every quantifier block in `f` by a quantifier-free formula,
    /// emitting normal form conjuncts on the way.
    fn process(&mut self, f: &Formula) -> Result<Formula, NormalFormError> {
        Ok(match f {
            Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => f.clone(),
            Formula::Not(g) => Formula::not(self.process(g)?),
            Formula::And(fs) => Formula::And(
                fs.iter()
                    .map(|g| self.process(g))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Or(fs) => Formula::Or(
                fs.iter()
                    .map(|g| self.process(g))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Implies(a, b) => Formula::implies(self.process(a)?, self.process(b)?),
            Formula::Iff(a, b) => Formula::iff(self.process(a)?, self.process(b)?),
            Formula::Quant { .. } => {
                let b = block(f).unwrap();
                let body = self.process(b.body)?;
                match b.kind {
                    Quantifier::Exists => self.existential(&b.vars, body)?,
                    Quantifier::Forall => {
                        Formula::not(self.existential(&b.vars, negate_universal_body(body))?)
                    }
                }
            }
        })
    }

    /// Handles `∃ vars. body` with `body` quantifier-free.
    fn existential(&mut self, vars: &[String], body: Formula) -> Result<Formula, NormalFormError> {
        let vars = occurring(vars, &body);
        if vars.is_empty() {
            return Ok(body);
        }
        let outer: Vec<String> = free_variables(&body)
            .into_iter()
            .filter(|v| !vars.contains(v))
            .collect();
        match outer.len() {
            0 => {
                let bit = self.guess_count;
                self.guess_count += 1;
                if bit >= 63 {
                    return Err(NormalFormError::TooManyGuesses(bit + 1));
                }
                let value = self.mask >> bit & 1 == 1;
                let sentence = Formula::exists(&vars, body.clone());
                self.trace.guesses.push((sentence, value));
                if value {
                    let z = self.fresh_var("z", &vars.iter().cloned().collect());
                    self.fe.push(ForallExists {
                        var: z,
                        witnesses: vars,
                        matrix: body,
                    });
                    Ok(Formula::True)
                } else {
                    self.universal_sentence(&vars, body)?;
                    Ok(Formula::False)
                }
            }
            1 => {
                let x = outer[0].clone();
                let a = analyze_block(Quantifier::Exists, &vars, &body);
                if !self.dialect.accepts(a.status) {
                    return Err(mismatch(
                        self.dialect,
                        format!("block exists {} is {}", vars.join(" "), a.status),
                    ));
                }
                let p = self.fresh_predicate();
                let px = Formula::atom(&p, vec![Term::Var(x.clone())]);
                self.definitions.push(Definition {
                    predicate: p.clone(),
                    var: x.clone(),
                    formula: Formula::exists(&vars, body.clone()),
                });
                match a.status {
                    GuardStatus::AtomicGuard | GuardStatus::LooseGuard if !a.guard.is_empty() => {
                        let rest = split_guard(&body, &a.guard);
                        let guard_conj = Formula::conj(a.guard.clone());
                        self.fe.push(ForallExists {
                            var: x.clone(),
                            witnesses: vars.clone(),
                            matrix: Formula::implies(
                                px.clone(),
                                Formula::conj([guard_conj, rest.clone()]),
                            ),
                        });
                        let mut all = vec![x.clone()];
                        all.extend(vars.iter().cloned());
                        self.guarded.push(GuardedUniversal {
                            vars: all,
                            guard: a.guard,
                            matrix: Formula::disj([Formula::not(rest), px.clone()]),
                        });
                    }
                    _ => {
                        if vars.len() != 1 {
                            return Err(mismatch(
                                self.dialect,
                                format!(
                                    "unguarded block exists {} binds more than one variable",
                                    vars.join(" ")
                                ),
                            ));
                        }
                        self.fe.push(ForallExists {
                            var: x.clone(),
                            witnesses: vars.clone(),
                            matrix: Formula::implies(px.clone(), body.clone()),
                        });
                        self.push_pair(&x, &vars[0], Formula::implies(body, px.clone()));
                    }
                }
                Ok(px)
            }
            _ => Err(mismatch(
                self.dialect,
                format!(
                    "block exists {} leaves {} variables free",
                    vars.join(" "),
                    outer.len()
                ),
            )),
        }
    }

    /// Adds the conjunct `∀ vars. ¬body` (a closed universal sentence).
    fn universal_sentence(
        &mut self,
        vars: &[String],
        body: Formula,
    ) -> Result<(), NormalFormError> {
        if vars.len() == 1 {
            self.fe.push(ForallExists {
                var: vars[0].clone(),
                witnesses: Vec::new(),
                matrix: Formula::not(body),
            });
            return Ok(());
        }
        let a = analyze_block(Quantifier::Exists, vars, &body);
        match a.status {
            GuardStatus::AtomicGuard | GuardStatus::LooseGuard
                if self.dialect.accepts(a.status) && !a.guard.is_empty() =>
            {
                let rest = split_guard(&body, &a.guard);
                self.guarded.push(GuardedUniversal {
                    vars: vars.to_vec(),
                    guard: a.guard,
                    matrix: Formula::not(rest),
                });
                Ok(())
            }
            GuardStatus::UnguardedBinaryOk if self.dialect.allows_pair() && vars.len() == 2 => {
                self.push_pair(&vars[0], &vars[1], Formula::not(body));
                Ok(())
            }
            status => Err(mismatch(
                self.dialect,
                format!("sentence block over {} is {status}", vars.join(" ")),
            )),
        }
    }

    fn top_conjunct(&mut self, c: &Formula) -> Result<(), NormalFormError> {
        if let Some(b) = block(c) {
            match b.kind {
                Quantifier::Forall if b.vars.len() == 1 => {
                    if let Some(inner) = block(b.body).filter(|i| i.kind == Quantifier::Exists) {
                        let matrix = self.process(inner.body)?;
                        let witnesses = occurring(&inner.vars, &matrix)
                            .into_iter()
                            .filter(|w| *w != b.vars[0])
                            .collect();
                        self.fe.push(ForallExists {
                            var: b.vars[0].clone(),
                            witnesses,
                            matrix,
                        });
                        return Ok(());
                    }
                    let matrix = self.process(b.body)?;
                    self.fe.push(ForallExists {
                        var: b.vars[0].clone(),
                        witnesses: Vec::new(),
                        matrix,
                    });
                    return Ok(());
                }
                Quantifier::Forall => {
                    let body = self.process(b.body)?;
                    let vars = occurring(&b.vars, &body);
                    if vars.len() <= 1 {
                        let z = match vars.first() {
                            Some(v) => v.clone(),
                            None => self.fresh_var("z", &BTreeSet::new()),
                        };
                        self.fe.push(ForallExists {
                            var: z,
                            witnesses: Vec::new(),
                            matrix: body,
                        });
                        return Ok(());
                    }
                    let a = analyze_block(Quantifier::Forall, &vars, &body);
                    match a.status {
                        GuardStatus::AtomicGuard | GuardStatus::LooseGuard
                            if self.dialect.accepts(a.status) && !a.guard.is_empty() =>
                        {
                            let matrix = match &body {
                                Formula::Implies(lhs, rhs)
                                    if lhs.conjuncts() == a.guard.iter().collect::<Vec<_>>() =>
                                {
                                    (**rhs).clone()
                                }
                                _ => body.clone(),
                            };
                            self.guarded.push(GuardedUniversal {
                                vars,
                                guard: a.guard,
                                matrix,
                            });
                        }
                        _ if self.dialect.allows_pair() && vars.len() == 2 => {
                            self.push_pair(&vars[0], &vars[1], body);
                        }
                        _ => {
                            // Fall back to the existential reading.
                            self.universal_sentence(&vars, negate_universal_body(body))?;
                        }
                    }
                    return Ok(());
                }
                Quantifier::Exists => {
                    let body = self.process(b.body)?;
                    let vars = occurring(&b.vars, &body);
                    let z = self.fresh_var("z", &vars.iter().cloned().collect());
                    self.fe.push(ForallExists {
                        var: z,
                        witnesses: vars,
                        matrix: body,
                    });
                    return Ok(());
                }
            }
        }
        let matrix = self.process(c)?;
        let z = self.fresh_var("z", &BTreeSet::new());
        self.fe.push(ForallExists {
            var: z,
            witnesses: Vec::new(),
            matrix,
        });
        Ok(())
    }
}

fn all_variables(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    f.visit(&mut |g| {
        if let Formula::Quant { vars, .. } = g {
            out.extend(vars.iter().cloned());
        }
    });
    out
}

fn run_once(
    f: &Formula,
    sig: &Signature,
    dialect: Dialect,
    mask: u64,
) -> Result<(NormalForm, GuessTrace, usize), NormalFormError> {
    let avoid = all_variables(f);
    let mut run = Run {
        dialect,
        sig: sig.clone(),
        mask,
        guess_count: 0,
        trace: GuessTrace::default(),
        fresh: 0,
        definitions: Vec::new(),
        guarded: Vec::new(),
        fe: Vec::new(),
        pairs: Vec::new(),
        avoid: &avoid,
    };
    for c in f.conjuncts() {
        run.top_conjunct(c)?;
    }
    let universal_pair = if run.pairs.is_empty() {
        None
    } else {
        let vars = run.pair_names();
        Some(UniversalPair {
            vars,
            matrix: Formula::conj(run.pairs.clone()),
        })
    };
    let mut nf = NormalForm {
        guarded_universals: run.guarded,
        forall_exists: run.fe,
        universal_pair,
        signature: run.sig,
        original_signature: sig.clone(),
        size_n: 0,
        dialect,
        definitions: run.definitions,
    };
    nf.recompute_size();
    Ok((nf, run.trace, run.guess_count))
}

/// Lazy enumeration of all runs of the normal form procedure, one per
/// assignment of truth values to the guessed subsentences (false first).
pub struct Candidates {
    formula: Formula,
    signature: Signature,
    dialect: Dialect,
    guesses: usize,
    next: u64,
}

impl Candidates {
    /// Number of guessed closed subsentences; the sequence has `2^k` items.
    pub fn guess_count(&self) -> usize {
        self.guesses
    }

    pub fn len(&self) -> u64 {
        1u64 << self.guesses
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Iterator for Candidates {
    type Item = (NormalForm, GuessTrace);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= 1u64 << self.guesses {
            return None;
        }
        let mask = self.next;
        self.next += 1;
        let (nf, trace, _) = run_once(&self.formula, &self.signature, self.dialect, mask)
            .expect("every run succeeds once the first one did");
        Some((nf, trace))
    }
}

pub fn to_normal_form(
    f: &Formula,
    sig: &Signature,
    dialect: Dialect,
) -> Result<Candidates, NormalFormError> {
    if let Some(r) = sig
        .relations
        .keys()
        .find(|r| r.starts_with(RESERVED_PREFIX))
    {
        return Err(NormalFormError::ReservedName(r.clone()));
    }
    check_dialect(f, dialect)?;
    let (_, _, guesses) = run_once(f, sig, dialect, 0)?;
    if guesses > 20 {
        return Err(NormalFormError::TooManyGuesses(guesses));
    }
    Ok(Candidates {
        formula: f.clone(),
        signature: sig.clone(),
        dialect,
        guesses,
        next: 0,
    })
}

/// Reads `f` as a normal form of the dialect, if it has the right shape.
pub fn recognize_normal_form(f: &Formula, sig: &Signature, dialect: Dialect) -> Option<NormalForm> {
    if !free_variables(f).is_empty() {
        return None;
    }
    if dialect == Dialect::Tgf1NoEq && f.uses_equality() {
        return None;
    }
    let mut nf = NormalForm {
        guarded_universals: Vec::new(),
        forall_exists: Vec::new(),
        universal_pair: None,
        signature: sig.clone(),
        original_signature: sig.clone(),
        size_n: 0,
        dialect,
        definitions: Vec::new(),
    };
    let mut pairs = Vec::new();
    for c in f.conjuncts() {
        let Formula::Quant {
            kind: Quantifier::Forall,
            vars,
            body,
        } = c
        else {
            return None;
        };
        if vars.len() == 1 {
            if let Formula::Quant {
                kind: Quantifier::Exists,
                vars: ys,
                body: inner,
            } = body.as_ref()
            {
                if inner.is_quantifier_free() {
                    nf.forall_exists.push(ForallExists {
                        var: vars[0].clone(),
                        witnesses: ys.clone(),
                        matrix: (**inner).clone(),
                    });
                    continue;
                }
                return None;
            }
            if body.is_quantifier_free() {
                nf.forall_exists.push(ForallExists {
                    var: vars[0].clone(),
                    witnesses: Vec::new(),
                    matrix: (**body).clone(),
                });
                continue;
            }
            return None;
        }
        if !body.is_quantifier_free() {
            return None;
        }
        let a = analyze_block(Quantifier::Forall, vars, body);
        match a.status {
            GuardStatus::AtomicGuard | GuardStatus::LooseGuard
                if dialect.accepts(a.status) && !a.guard.is_empty() =>
            {
                let matrix = match body.as_ref() {
                    Formula::Implies(lhs, rhs)
                        if lhs.conjuncts() == a.guard.iter().collect::<Vec<_>>() =>
                    {
                        (**rhs).clone()
                    }
                    other => other.clone(),
                };
                nf.guarded_universals.push(GuardedUniversal {
                    vars: vars.clone(),
                    guard: a.guard,
                    matrix,
                });
            }
            GuardStatus::AtomicGuard if a.guard.is_empty() => {
                // All but one bound variable are vacuous.
                nf.forall_exists.push(ForallExists {
                    var: occurring(vars, body)
                        .first()
                        .cloned()
                        .unwrap_or_else(|| vars[0].clone()),
                    witnesses: Vec::new(),
                    matrix: (**body).clone(),
                });
            }
            _ if dialect.allows_pair() && vars.len() == 2 => {
                pairs.push((vars.clone(), (**body).clone()))
            }
            _ => return None,
        }
    }
    if !pairs.is_empty() {
        let (v0, m0) = pairs[0].clone();
        let mut parts = vec![m0];
        for (vs, m) in pairs.into_iter().skip(1) {
            let map = [
                (vs[0].clone(), Term::Var(v0[0].clone())),
                (vs[1].clone(), Term::Var(v0[1].clone())),
            ]
            .into_iter()
            .collect();
            parts.push(m.rename_free(&map));
        }
        nf.universal_pair = Some(UniversalPair {
            vars: [v0[0].clone(), v0[1].clone()],
            matrix: Formula::conj(parts),
        });
    }
    nf.recompute_size();
    Some(nf)
}

pub fn is_normal_form(f: &Formula, sig: &Signature, dialect: Dialect) -> bool {
    recognize_normal_form(f, sig, dialect).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    fn nf_of(text: &str, d: Dialect) -> Vec<(NormalForm, GuessTrace)> {
        let (sig, f) = parse_formula(text).unwrap();
        to_normal_form(&f, &sig, d).unwrap().collect()
    }

    #[test]
    fn already_normal() {
        let c = nf_of("relation R/2\nforall x. exists y. R(x,y)", Dialect::Gf1);
        assert_eq!(c.len(), 1);
        let nf = &c[0].0;
        assert_eq!(nf.forall_exists.len(), 1);
        assert_eq!(nf.forall_exists[0].witnesses, vec!["y".to_string()]);
        assert!(nf.guarded_universals.is_empty());
        assert!(c[0].1.guesses.is_empty());
    }

    #[test]
    fn existential_sentence_gets_dummy_variable() {
        let c = nf_of("relation P/1\nexists x. P(x)", Dialect::Gf1);
        assert_eq!(c.len(), 1);
        let fe = &c[0].0.forall_exists[0];
        assert_eq!(fe.witnesses, vec!["x".to_string()]);
        assert_ne!(fe.var, "x");
    }

    #[test]
    fn inner_block_gets_fresh_predicate() {
        let c = nf_of(
            "relation Q/1 relation R/3 relation P/1\nforall x. (Q(x) -> exists y z. R(x,y,z) & P(y))",
            Dialect::Gf1,
        );
        assert_eq!(c.len(), 1);
        let nf = &c[0].0;
        assert_eq!(nf.fresh_predicates(), vec!["_nf0"]);
        assert_eq!(nf.forall_exists.len(), 2);
        assert_eq!(nf.guarded_universals.len(), 1);
        assert_eq!(nf.guarded_universals[0].vars, vec!["x", "y", "z"]);
        assert!(nf.universal_pair.is_none());
        assert!(is_normal_form(
            &nf.to_formula(),
            &nf.signature,
            Dialect::Gf1
        ));
    }

    #[test]
    fn closed_subsentences_are_guessed() {
        let c = nf_of(
            "relation P/1 relation Q/1\n(exists x. P(x)) -> (forall y. Q(y))",
            Dialect::Gf1,
        );
        assert_eq!(c.len(), 4);
        assert_eq!(c[0].1.guesses.len(), 2);
        assert!(c[0].1.guesses.iter().all(|(_, v)| !v));
        assert!(c[3].1.guesses.iter().all(|(_, v)| *v));
    }

    #[test]
    fn tgf_pair_conjunct() {
        let c = nf_of(
            "relation P/1 relation Q/1 relation R/2\nforall x y. (P(x) & Q(y) -> R(x,y))",
            Dialect::Tgf1,
        );
        assert!(c[0].0.universal_pair.is_some());
        let (sig, f) = parse_formula(
            "relation P/1 relation Q/1 relation R/2\nforall x y. (P(x) & Q(y) -> R(x,y))",
        )
        .unwrap();
        assert!(matches!(
            to_normal_form(&f, &sig, Dialect::Gf1),
            Err(NormalFormError::DialectMismatch { .. })
        ));
    }

    #[test]
    fn unguarded_inner_block_in_tgf() {
        let c = nf_of(
            "relation R/2\nforall x. (exists y. !R(x,y) & !R(y,x)) | R(x,x)",
            Dialect::Tgf1NoEq,
        );
        let nf = &c[0].0;
        assert!(nf.universal_pair.is_some());
        assert!(is_normal_form(
            &nf.to_formula(),
            &nf.signature,
            Dialect::Tgf1NoEq
        ));
    }

    #[test]
    fn shape_recognition() {
        let (sig, f) =
            parse_formula("relation R/3\nforall x. exists y. forall z. R(x,y,z)").unwrap();
        assert!(!is_normal_form(&f, &sig, Dialect::Tgf1));
        let (sig, f) = parse_formula("relation R/2\nforall x y. R(x,y) | R(y,x)").unwrap();
        assert!(!is_normal_form(&f, &sig, Dialect::Gf1));
        assert!(is_normal_form(&f, &sig, Dialect::Tgf1));
    }

    #[test]
    fn reserved_prefix_rejected() {
        let (sig, f) = parse_formula("relation _nf0/1\nexists x. _nf0(x)").unwrap();
        assert!(matches!(
            to_normal_form(&f, &sig, Dialect::Gf1),
            Err(NormalFormError::ReservedName(_))
        ));
    }

    #[test]
    fn equality_free_input_gives_equality_free_candidates() {
        let c = nf_of(
            "relation R/2 relation P/1\nforall x. (P(x) -> exists y. R(x,y) & forall z. (R(y,z) -> P(z)))",
            Dialect::Tgf1NoEq,
        );
        assert!(c.iter().all(|(nf, _)| !nf.to_formula().uses_equality()));
    }
}
