//! Relational first-order syntax: signatures, terms, formulas, rendering and
//! the formula file format.

mod parser;
mod render;

pub use parser::{parse_formula, ParseError, ParseErrorKind};
pub use render::{render_file, render_formula};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Relation symbols with their arities plus constant symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub relations: BTreeMap<String, usize>,
    pub constants: BTreeSet<String>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_relation(mut self, name: &str, arity: usize) -> Self {
        self.add_relation(name, arity);
        self
    }

    pub fn with_constant(mut self, name: &str) -> Self {
        self.constants.insert(name.to_string());
        self
    }

    /// Adds (or overwrites) a relation symbol. Arity 0 is rejected by the
    /// parser; programmatic callers are trusted to keep arities positive.
    pub fn add_relation(&mut self, name: &str, arity: usize) {
        debug_assert!(arity >= 1, "relation {name} must have positive arity");
        self.relations.insert(name.to_string(), arity);
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.contains(name)
    }

    pub fn max_arity(&self) -> usize {
        self.relations.values().copied().max().unwrap_or(0)
    }

    /// Union of two signatures; on an arity clash the left one wins.
    pub fn merged(&self, other: &Signature) -> Signature {
        let mut out = self.clone();
        for (name, arity) in &other.relations {
            out.relations.entry(name.clone()).or_insert(*arity);
        }
        out.constants.extend(other.constants.iter().cloned());
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(n) => Some(n),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Exists => "exists",
            Quantifier::Forall => "forall",
        }
    }

    pub fn dual(self) -> Quantifier {
        match self {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        }
    }
}

/// First-order formula over a relational signature with optional constants.
///
/// `And`/`Or` are n-ary; the parser produces one node per unparenthesized
/// chain, so `a & b & c` and `(a & b) & c` are different trees.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom {
        rel: String,
        args: Vec<Term>,
    },
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Quant {
        kind: Quantifier,
        vars: Vec<String>,
        body: Box<Formula>,
    },
}

impl Formula {
    pub fn atom(rel: &str, args: Vec<Term>) -> Formula {
        Formula::Atom {
            rel: rel.to_string(),
            args,
        }
    }

    /// Atom whose arguments are all variables.
    pub fn atom_vars<S: AsRef<str>>(rel: &str, vars: &[S]) -> Formula {
        Formula::atom(rel, vars.iter().map(|v| Term::var(v.as_ref())).collect())
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Conjunction that flattens nested conjunctions and collapses the
    /// empty and singleton cases.
    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::And(inner) => out.extend(inner),
                Formula::True => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn disj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::Or(inner) => out.extend(inner),
                Formula::False => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    /// "Exactly one of" in the quadratic form: at least one, and no two.
    pub fn exactly_one(items: Vec<Formula>) -> Formula {
        let mut parts = vec![Formula::disj(items.clone())];
        for i in 0..items.len() {
            for j in (i + 1)..items.len() {
                parts.push(Formula::not(Formula::conj([
                    items[i].clone(),
                    items[j].clone(),
                ])));
            }
        }
        Formula::conj(parts)
    }

    pub fn quant<S: AsRef<str>>(kind: Quantifier, vars: &[S], body: Formula) -> Formula {
        if vars.is_empty() {
            return body;
        }
        Formula::Quant {
            kind,
            vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
            body: Box::new(body),
        }
    }

    pub fn forall<S: AsRef<str>>(vars: &[S], body: Formula) -> Formula {
        Formula::quant(Quantifier::Forall, vars, body)
    }

    pub fn exists<S: AsRef<str>>(vars: &[S], body: Formula) -> Formula {
        Formula::quant(Quantifier::Exists, vars, body)
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom { .. } | Formula::Eq(..))
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_quantifier_free),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::Quant { .. } => false,
        }
    }

    /// Top-level conjuncts (a non-conjunction is its own single conjunct).
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(fs) => fs.iter().flat_map(|f| f.conjuncts()).collect(),
            Formula::True => Vec::new(),
            other => vec![other],
        }
    }

    /// Immediate subformulas, in order.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => Vec::new(),
            Formula::Not(f) => vec![f],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Implies(a, b) | Formula::Iff(a, b) => vec![a, b],
            Formula::Quant { body, .. } => vec![body],
        }
    }

    pub fn relations_used(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom { rel, .. } = f {
                out.insert(rel.clone());
            }
        });
        out
    }

    pub fn constants_used(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom { args, .. } => {
                for t in args {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
            _ => {}
        });
        out
    }

    pub fn uses_equality(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::Eq(..)));
        found
    }

    /// Pre-order traversal.
    pub fn visit<F: FnMut(&Formula)>(&self, f: &mut F) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Applies a variable renaming to free occurrences.
    pub fn rename_free(&self, map: &BTreeMap<String, Term>) -> Formula {
        let sub_term = |t: &Term| -> Term {
            match t {
                Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
                Term::Const(_) => t.clone(),
            }
        };
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom { rel, args } => Formula::Atom {
                rel: rel.clone(),
                args: args.iter().map(sub_term).collect(),
            },
            Formula::Eq(a, b) => Formula::Eq(sub_term(a), sub_term(b)),
            Formula::Not(f) => Formula::not(f.rename_free(map)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.rename_free(map)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.rename_free(map)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.rename_free(map), b.rename_free(map)),
            Formula::Iff(a, b) => Formula::iff(a.rename_free(map), b.rename_free(map)),
            Formula::Quant { kind, vars, body } => {
                let mut inner = map.clone();
                for v in vars {
                    inner.remove(v);
                }
                Formula::Quant {
                    kind: *kind,
                    vars: vars.clone(),
                    body: Box::new(body.rename_free(&inner)),
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_formula(self))
    }
}

/// Variables with at least one unbound occurrence.
pub fn free_variables(f: &Formula) -> BTreeSet<String> {
    fn term_vars(t: &Term, out: &mut BTreeSet<String>) {
        if let Term::Var(v) = t {
            out.insert(v.clone());
        }
    }
    match f {
        Formula::True | Formula::False => BTreeSet::new(),
        Formula::Atom { args, .. } => {
            let mut out = BTreeSet::new();
            for t in args {
                term_vars(t, &mut out);
            }
            out
        }
        Formula::Eq(a, b) => {
            let mut out = BTreeSet::new();
            term_vars(a, &mut out);
            term_vars(b, &mut out);
            out
        }
        Formula::Not(g) => free_variables(g),
        Formula::And(fs) | Formula::Or(fs) => fs.iter().flat_map(free_variables).collect(),
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            let mut out = free_variables(a);
            out.extend(free_variables(b));
            out
        }
        Formula::Quant { vars, body, .. } => {
            let mut out = free_variables(body);
            for v in vars {
                out.remove(v);
            }
            out
        }
    }
}

/// Size measures used by the model-size bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormulaMetrics {
    /// Symbol count: every relation symbol, term, connective, quantifier and
    /// bound variable counts once.
    pub length: usize,
    pub relation_count: usize,
    pub max_arity: usize,
    pub variable_count: usize,
}

impl FormulaMetrics {
    pub fn of(f: &Formula) -> FormulaMetrics {
        fn len(f: &Formula) -> usize {
            match f {
                Formula::True | Formula::False => 1,
                Formula::Atom { args, .. } => 1 + args.len(),
                Formula::Eq(..) => 3,
                Formula::Not(g) => 1 + len(g),
                Formula::And(fs) | Formula::Or(fs) => {
                    fs.len().saturating_sub(1) + fs.iter().map(len).sum::<usize>()
                }
                Formula::Implies(a, b) | Formula::Iff(a, b) => 1 + len(a) + len(b),
                Formula::Quant { vars, body, .. } => 1 + vars.len() + len(body),
            }
        }
        let mut max_arity = 0;
        let mut vars = BTreeSet::new();
        f.visit(&mut |g| match g {
            Formula::Atom { args, .. } => {
                max_arity = max_arity.max(args.len());
                for t in args {
                    if let Term::Var(v) = t {
                        vars.insert(v.clone());
                    }
                }
            }
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Var(v) = t {
                        vars.insert(v.clone());
                    }
                }
            }
            Formula::Quant { vars: bound, .. } => vars.extend(bound.iter().cloned()),
            _ => {}
        });
        FormulaMetrics {
            length: len(f).max(1),
            relation_count: f.relations_used().len(),
            max_arity,
            variable_count: vars.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_variables_examples() {
        let (_, f) = parse_formula("relation P/1\nP(x)").unwrap();
        assert_eq!(free_variables(&f), BTreeSet::from(["x".to_string()]));

        let (_, f) = parse_formula("relation R/2\nexists y. R(x,y)").unwrap();
        assert_eq!(free_variables(&f), BTreeSet::from(["x".to_string()]));

        let (_, f) = parse_formula(
            "relation P/1 relation Q/1 relation R/2\nforall x y. P(x) & Q(y) -> R(x,y)",
        )
        .unwrap();
        assert!(free_variables(&f).is_empty());
    }

    #[test]
    fn metrics_bounds() {
        let (_, f) = parse_formula("relation R/3\nforall x. exists y z. R(x,y,z)").unwrap();
        let m = FormulaMetrics::of(&f);
        assert_eq!(m.max_arity, 3);
        assert_eq!(m.variable_count, 3);
        assert_eq!(m.relation_count, 1);
        // forall(1) x(1) exists(1) y z(2) R(1) args(3)
        assert_eq!(m.length, 9);
        assert!(m.max_arity <= m.length);
    }

    #[test]
    fn conj_flattens_and_collapses() {
        let p = Formula::atom_vars("P", &["x"]);
        assert_eq!(Formula::conj(Vec::<Formula>::new()), Formula::True);
        assert_eq!(Formula::conj([p.clone()]), p);
        let nested = Formula::conj([Formula::conj([p.clone(), p.clone()]), p.clone()]);
        assert_eq!(nested, Formula::And(vec![p.clone(), p.clone(), p]));
    }
}
