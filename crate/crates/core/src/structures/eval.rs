//! Compiled model checking, with a three-valued mode for partial structures.

use std::collections::BTreeMap;

use thiserror::Error;

use super::Structure;
use crate::syntax::{Formula, Signature, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("free variable `{0}` has no assigned element")]
    UnassignedVariable(String),
    #[error("relation `{0}` is not in the structure's signature")]
    UnknownRelation(String),
    #[error("relation `{name}` has arity {expected} in the structure but {found} in the formula")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("constant `{0}` is not interpreted in the structure")]
    UnknownConstant(String),
    #[error("element {0} is outside the universe")]
    ElementOutOfRange(usize),
}

pub(crate) const FALSE: u8 = 0;
pub(crate) const TRUE: u8 = 1;
pub(crate) const UNKNOWN: u8 = 2;

/// Relation tables laid out as flat arrays indexed by tuple; entries are
/// `FALSE`, `TRUE` or (in partial structures) `UNKNOWN`.
#[derive(Clone, Debug)]
pub struct DenseStructure {
    pub(crate) n: usize,
    pub(crate) names: Vec<String>,
    pub(crate) arities: Vec<usize>,
    pub(crate) tables: Vec<Vec<u8>>,
    pub(crate) constants: Vec<usize>,
    tuples: Option<Vec<Vec<Vec<usize>>>>,
}

impl DenseStructure {
    /// A structure over `n` elements where every atom is unknown.
    pub fn unknown(sig: &Signature, n: usize, constants: Vec<usize>) -> DenseStructure {
        let arities: Vec<usize> = sig.relations.values().copied().collect();
        DenseStructure {
            n,
            names: sig.relations.keys().cloned().collect(),
            tables: arities
                .iter()
                .map(|&a| vec![UNKNOWN; n.pow(a as u32)])
                .collect(),
            arities,
            constants,
            tuples: None,
        }
    }

    pub fn from_structure(s: &Structure) -> DenseStructure {
        let sig = s.signature();
        let n = s.size();
        let consts = sig
            .constants
            .iter()
            .map(|c| s.constant(c).expect("structure interprets every constant"))
            .collect();
        let mut d = DenseStructure::unknown(sig, n, consts);
        for t in d.tables.iter_mut() {
            t.fill(FALSE);
        }
        for (ri, name) in d.names.clone().iter().enumerate() {
            for tuple in s.tuples(name) {
                let idx = d.index(tuple);
                d.tables[ri][idx] = TRUE;
            }
        }
        d.finalize();
        d
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &e| acc * self.n + e)
    }

    pub fn decode(&self, arity: usize, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; arity];
        for slot in out.iter_mut().rev() {
            *slot = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|r| r == name)
    }

    pub fn set(&mut self, rel: usize, idx: usize, value: u8) {
        self.tables[rel][idx] = value;
        self.tuples = None;
    }

    pub fn get(&self, rel: usize, idx: usize) -> u8 {
        self.tables[rel][idx]
    }

    /// Builds the per-relation tuple lists used for guard-driven quantifier
    /// iteration. Only meaningful once every atom is known.
    pub fn finalize(&mut self) {
        if self.tables.iter().any(|t| t.contains(&UNKNOWN)) {
            self.tuples = None;
            return;
        }
        let lists = self
            .tables
            .iter()
            .zip(&self.arities)
            .map(|(t, &a)| {
                t.iter()
                    .enumerate()
                    .filter(|(_, &v)| v == TRUE)
                    .map(|(i, _)| self.decode(a, i))
                    .collect()
            })
            .collect();
        self.tuples = Some(lists);
    }

    pub fn to_structure(&self, sig: &Signature) -> Structure {
        let mut s = Structure::new(sig.clone(), self.n);
        for (ri, name) in self.names.iter().enumerate() {
            for (i, &v) in self.tables[ri].iter().enumerate() {
                if v == TRUE {
                    s.insert(name, self.decode(self.arities[ri], i));
                }
            }
        }
        for (c, &e) in sig.constants.iter().zip(&self.constants) {
            s.set_constant(c, e);
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
enum Arg {
    Var(usize),
    Const(usize),
}

#[derive(Clone, Debug)]
enum Node {
    Lit(bool),
    Atom(usize, Vec<Arg>),
    Eq(Arg, Arg),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Implies(Box<Node>, Box<Node>),
    Iff(Box<Node>, Box<Node>),
    Quant {
        exists: bool,
        vars: Vec<usize>,
        body: Box<Node>,
        guard: Option<(usize, Vec<Arg>)>,
    },
}

/// A formula compiled against a fixed signature, reusable across structures
/// over that signature.
#[derive(Clone, Debug)]
pub struct CompiledFormula {
    root: Node,
    slots: usize,
    free: Vec<(String, usize)>,
}

struct Compiler<'a> {
    sig: &'a Signature,
    scope: Vec<(String, usize)>,
    slots: usize,
    free: Vec<(String, usize)>,
}

impl Compiler<'_> {
    fn arg(&mut self, t: &Term) -> Result<Arg, EvalError> {
        match t {
            Term::Const(c) => self
                .sig
                .constants
                .iter()
                .position(|k| k == c)
                .map(Arg::Const)
                .ok_or_else(|| EvalError::UnknownConstant(c.clone())),
            Term::Var(v) => {
                if let Some((_, s)) = self.scope.iter().rev().find(|(n, _)| n == v) {
                    return Ok(Arg::Var(*s));
                }
                if let Some((_, s)) = self.free.iter().find(|(n, _)| n == v) {
                    return Ok(Arg::Var(*s));
                }
                let s = self.slots;
                self.slots += 1;
                self.free.push((v.clone(), s));
                Ok(Arg::Var(s))
            }
        }
    }

    fn node(&mut self, f: &Formula) -> Result<Node, EvalError> {
        Ok(match f {
            Formula::True => Node::Lit(true),
            Formula::False => Node::Lit(false),
            Formula::Atom { rel, args } => {
                let Some(ri) = self.sig.relations.keys().position(|r| r == rel) else {
                    return Err(EvalError::UnknownRelation(rel.clone()));
                };
                let arity = self.sig.relations[rel];
                if arity != args.len() {
                    return Err(EvalError::ArityMismatch {
                        name: rel.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                let args = args.iter().map(|t| self.arg(t)).collect::<Result<_, _>>()?;
                Node::Atom(ri, args)
            }
            Formula::Eq(a, b) => Node::Eq(self.arg(a)?, self.arg(b)?),
            Formula::Not(g) => Node::Not(Box::new(self.node(g)?)),
            Formula::And(fs) => {
                Node::And(fs.iter().map(|g| self.node(g)).collect::<Result<_, _>>()?)
            }
            Formula::Or(fs) => Node::Or(fs.iter().map(|g| self.node(g)).collect::<Result<_, _>>()?),
            Formula::Implies(a, b) => {
                Node::Implies(Box::new(self.node(a)?), Box::new(self.node(b)?))
            }
            Formula::Iff(a, b) => Node::Iff(Box::new(self.node(a)?), Box::new(self.node(b)?)),
            Formula::Quant { kind, vars, body } => {
                let depth = self.scope.len();
                let mut slots = Vec::new();
                for v in vars {
                    let s = self.slots;
                    self.slots += 1;
                    self.scope.push((v.clone(), s));
                    slots.push(s);
                }
                let body = self.node(body)?;
                self.scope.truncate(depth);
                let exists = *kind == crate::syntax::Quantifier::Exists;
                let guard = find_guard(exists, &body, &slots);
                Node::Quant {
                    exists,
                    vars: slots,
                    body: Box::new(body),
                    guard,
                }
            }
        })
    }
}

fn covers(args: &[Arg], vars: &[usize]) -> bool {
    vars.iter()
        .all(|v| args.iter().any(|a| matches!(a, Arg::Var(s) if s == v)))
}

fn covering_atom(f: &Node, vars: &[usize]) -> Option<(usize, Vec<Arg>)> {
    match f {
        Node::Atom(r, args) if covers(args, vars) => Some((*r, args.clone())),
        Node::And(items) => items.iter().find_map(|g| match g {
            Node::Atom(r, args) if covers(args, vars) => Some((*r, args.clone())),
            _ => None,
        }),
        _ => None,
    }
}

fn find_guard(exists: bool, body: &Node, vars: &[usize]) -> Option<(usize, Vec<Arg>)> {
    if exists {
        covering_atom(body, vars)
    } else {
        match body {
            Node::Implies(lhs, _) => covering_atom(lhs, vars),
            _ => None,
        }
    }
}

fn not3(v: u8) -> u8 {
    match v {
        TRUE => FALSE,
        FALSE => TRUE,
        _ => UNKNOWN,
    }
}

impl CompiledFormula {
    pub fn new(sig: &Signature, f: &Formula) -> Result<CompiledFormula, EvalError> {
        let mut c = Compiler {
            sig,
            scope: Vec::new(),
            slots: 0,
            free: Vec::new(),
        };
        let root = c.node(f)?;
        Ok(CompiledFormula {
            root,
            slots: c.slots,
            free: c.free,
        })
    }

    /// Free variables in slot order.
    pub fn free_variables(&self) -> Vec<&str> {
        self.free.iter().map(|(n, _)| n.as_str()).collect()
    }

    fn env(
        &self,
        d: &DenseStructure,
        assignment: &BTreeMap<String, usize>,
    ) -> Result<Vec<usize>, EvalError> {
        let mut env = vec![0; self.slots.max(1)];
        for (name, slot) in &self.free {
            let e = *assignment
                .get(name)
                .ok_or_else(|| EvalError::UnassignedVariable(name.clone()))?;
            if e >= d.n {
                return Err(EvalError::ElementOutOfRange(e));
            }
            env[*slot] = e;
        }
        Ok(env)
    }

    /// Three-valued evaluation: `Some(b)` if the value is determined by the
    /// known atoms, `None` otherwise.
    pub fn eval(
        &self,
        d: &DenseStructure,
        assignment: &BTreeMap<String, usize>,
    ) -> Result<Option<bool>, EvalError> {
        let mut env = self.env(d, assignment)?;
        Ok(match self.eval_node(&self.root, d, &mut env) {
            TRUE => Some(true),
            FALSE => Some(false),
            _ => None,
        })
    }

    /// Evaluation of a sentence on a total structure.
    pub fn holds(&self, d: &DenseStructure) -> bool {
        let mut env = vec![0; self.slots.max(1)];
        self.eval_node(&self.root, d, &mut env) == TRUE
    }

    /// Evaluation with explicit slot values for the free variables, in the
    /// order reported by `free_variables`.
    pub fn holds_at(&self, d: &DenseStructure, values: &[usize]) -> u8 {
        let mut env = vec![0; self.slots.max(1)];
        for ((_, slot), &v) in self.free.iter().zip(values) {
            env[*slot] = v;
        }
        self.eval_node(&self.root, d, &mut env)
    }

    fn arg(&self, a: Arg, d: &DenseStructure, env: &[usize]) -> usize {
        match a {
            Arg::Var(s) => env[s],
            Arg::Const(c) => d.constants[c],
        }
    }

    fn eval_node(&self, node: &Node, d: &DenseStructure, env: &mut Vec<usize>) -> u8 {
        match node {
            Node::Lit(b) => *b as u8,
            Node::Atom(r, args) => {
                let idx = args
                    .iter()
                    .fold(0, |acc, &a| acc * d.n + self.arg(a, d, env));
                d.tables[*r][idx]
            }
            Node::Eq(a, b) => (self.arg(*a, d, env) == self.arg(*b, d, env)) as u8,
            Node::Not(g) => not3(self.eval_node(g, d, env)),
            Node::And(items) => {
                let mut out = TRUE;
                for g in items {
                    match self.eval_node(g, d, env) {
                        FALSE => return FALSE,
                        UNKNOWN => out = UNKNOWN,
                        _ => {}
                    }
                }
                out
            }
            Node::Or(items) => {
                let mut out = FALSE;
                for g in items {
                    match self.eval_node(g, d, env) {
                        TRUE => return TRUE,
                        UNKNOWN => out = UNKNOWN,
                        _ => {}
                    }
                }
                out
            }
            Node::Implies(a, b) => {
                let va = self.eval_node(a, d, env);
                if va == FALSE {
                    return TRUE;
                }
                let vb = self.eval_node(b, d, env);
                match (va, vb) {
                    (_, TRUE) => TRUE,
                    (TRUE, FALSE) => FALSE,
                    _ => UNKNOWN,
                }
            }
            Node::Iff(a, b) => {
                let va = self.eval_node(a, d, env);
                if va == UNKNOWN {
                    return UNKNOWN;
                }
                let vb = self.eval_node(b, d, env);
                if vb == UNKNOWN {
                    UNKNOWN
                } else {
                    (va == vb) as u8
                }
            }
            Node::Quant {
                exists,
                vars,
                body,
                guard,
            } => {
                let (hit, miss) = if *exists {
                    (TRUE, FALSE)
                } else {
                    (FALSE, TRUE)
                };
                if let (Some((r, gargs)), Some(lists)) = (guard, d.tuples.as_ref()) {
                    for tuple in &lists[*r] {
                        if !self.bind_guard(gargs, vars, tuple, d, env) {
                            continue;
                        }
                        if self.eval_node(body, d, env) == hit {
                            return hit;
                        }
                    }
                    return miss;
                }
                let mut out = miss;
                let k = vars.len();
                let mut counter = vec![0usize; k];
                for &v in vars {
                    env[v] = 0;
                }
                loop {
                    match self.eval_node(body, d, env) {
                        v if v == hit => return hit,
                        UNKNOWN => out = UNKNOWN,
                        _ => {}
                    }
                    let mut pos = k;
                    loop {
                        if pos == 0 {
                            return out;
                        }
                        pos -= 1;
                        counter[pos] += 1;
                        if counter[pos] < d.n {
                            env[vars[pos]] = counter[pos];
                            break;
                        }
                        counter[pos] = 0;
                        env[vars[pos]] = 0;
                    }
                }
            }
        }
    }

    fn bind_guard(
        &self,
        gargs: &[Arg],
        vars: &[usize],
        tuple: &[usize],
        d: &DenseStructure,
        env: &mut [usize],
    ) -> bool {
        let mut bound: u64 = 0;
        for (a, &e) in gargs.iter().zip(tuple) {
            match *a {
                Arg::Const(c) => {
                    if d.constants[c] != e {
                        return false;
                    }
                }
                Arg::Var(s) => match vars.iter().position(|&v| v == s) {
                    Some(p) => {
                        if bound & (1 << p) != 0 {
                            if env[s] != e {
                                return false;
                            }
                        } else {
                            bound |= 1 << p;
                            env[s] = e;
                        }
                    }
                    None => {
                        if env[s] != e {
                            return false;
                        }
                    }
                },
            }
        }
        true
    }
}

/// Truth value of `f` in `s` under `assignment` (which must cover the free
/// variables of `f`).
pub fn evaluate(
    s: &Structure,
    f: &Formula,
    assignment: &BTreeMap<String, usize>,
) -> Result<bool, EvalError> {
    let c = CompiledFormula::new(s.signature(), f)?;
    let d = DenseStructure::from_structure(s);
    Ok(c.eval(&d, assignment)?
        .expect("total structures evaluate to a definite value"))
}

/// Truth value of a sentence in `s`.
pub fn models(s: &Structure, f: &Formula) -> Result<bool, EvalError> {
    evaluate(s, f, &BTreeMap::new())
}
