//! Grounding of quantifier-free matrices over a fixed finite universe into
//! CNF, with atoms that are already known in a partial structure folded in
//! as constants.

use std::collections::BTreeMap;

use super::solver::{Lit, SolveResult, Solver};
use crate::normal_form::NormalForm;
use crate::structures::eval::{DenseStructure, FALSE, TRUE, UNKNOWN};
use crate::syntax::{Formula, Term};

#[derive(Clone, Copy, Debug)]
pub enum Slot {
    Var(usize),
    Elem(usize),
}

/// A quantifier-free formula with variables replaced by slot numbers and
/// relations by their index in the signature.
#[derive(Clone, Debug)]
pub enum Qf {
    Const(bool),
    Atom(usize, Vec<Slot>),
    Eq(Slot, Slot),
    Not(Box<Qf>),
    And(Vec<Qf>),
    Or(Vec<Qf>),
    Implies(Box<Qf>, Box<Qf>),
    Iff(Box<Qf>, Box<Qf>),
}

pub fn compile_qf(
    f: &Formula,
    relations: &[String],
    vars: &[String],
    constants: &BTreeMap<String, usize>,
) -> Result<Qf, String> {
    let term = |t: &Term| -> Result<Slot, String> {
        match t {
            Term::Var(v) => vars
                .iter()
                .position(|x| x == v)
                .map(Slot::Var)
                .ok_or_else(|| format!("variable `{v}` is not in scope")),
            Term::Const(c) => constants
                .get(c)
                .map(|&e| Slot::Elem(e))
                .ok_or_else(|| format!("constant `{c}` is not interpreted")),
        }
    };
    let rec = |g: &Formula| compile_qf(g, relations, vars, constants);
    Ok(match f {
        Formula::True => Qf::Const(true),
        Formula::False => Qf::Const(false),
        Formula::Atom { rel, args } => {
            let ri = relations
                .iter()
                .position(|r| r == rel)
                .ok_or_else(|| format!("unknown relation `{rel}`"))?;
            Qf::Atom(ri, args.iter().map(term).collect::<Result<_, _>>()?)
        }
        Formula::Eq(a, b) => Qf::Eq(term(a)?, term(b)?),
        Formula::Not(g) => Qf::Not(Box::new(rec(g)?)),
        Formula::And(gs) => Qf::And(gs.iter().map(rec).collect::<Result<_, _>>()?),
        Formula::Or(gs) => Qf::Or(gs.iter().map(rec).collect::<Result<_, _>>()?),
        Formula::Implies(a, b) => Qf::Implies(Box::new(rec(a)?), Box::new(rec(b)?)),
        Formula::Iff(a, b) => Qf::Iff(Box::new(rec(a)?), Box::new(rec(b)?)),
        Formula::Quant { .. } => return Err("quantifier inside a normal-form matrix".into()),
    })
}

/// Ground formula in negation normal form.
#[derive(Clone, Debug)]
pub enum G {
    True,
    False,
    Lit(Lit),
    And(Vec<G>),
    Or(Vec<G>),
}

pub fn mk_and(parts: Vec<G>) -> G {
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        match p {
            G::True => {}
            G::False => return G::False,
            G::And(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => G::True,
        1 => out.pop().unwrap(),
        _ => G::And(out),
    }
}

pub fn mk_or(parts: Vec<G>) -> G {
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        match p {
            G::False => {}
            G::True => return G::True,
            G::Or(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => G::False,
        1 => out.pop().unwrap(),
        _ => G::Or(out),
    }
}

/// Calls `f` on every tuple in `{0..n}^k`, in lexicographic order.
pub fn for_each_tuple(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if n == 0 && k > 0 {
        return;
    }
    let mut t = vec![0; k];
    loop {
        f(&t);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < n {
                break;
            }
            t[i] = 0;
        }
    }
}

pub struct Grounder {
    pub d: DenseStructure,
    vars: Vec<Vec<u32>>,
    pub solver: Solver,
    true_lit: Option<Lit>,
}

const NONE: u32 = u32::MAX;

impl Grounder {
    /// Atoms that are `UNKNOWN` in `d` become solver variables on first use.
    pub fn new(d: DenseStructure) -> Grounder {
        let vars = d.tables.iter().map(|t| vec![NONE; t.len()]).collect();
        Grounder {
            d,
            vars,
            solver: Solver::new(),
            true_lit: None,
        }
    }

    pub fn atom(&mut self, rel: usize, idx: usize) -> G {
        match self.d.tables[rel][idx] {
            FALSE => G::False,
            TRUE => G::True,
            _ => {
                if self.vars[rel][idx] == NONE {
                    self.vars[rel][idx] = self.solver.new_var();
                }
                G::Lit(Lit::pos(self.vars[rel][idx]))
            }
        }
    }

    pub fn ground(&mut self, q: &Qf, vals: &[usize], pos: bool) -> G {
        let elem = |s: &Slot| match *s {
            Slot::Var(i) => vals[i],
            Slot::Elem(e) => e,
        };
        match q {
            Qf::Const(b) => {
                if *b == pos {
                    G::True
                } else {
                    G::False
                }
            }
            Qf::Atom(r, args) => {
                let idx = args.iter().fold(0, |acc, s| acc * self.d.n + elem(s));
                match self.atom(*r, idx) {
                    G::Lit(l) if !pos => G::Lit(!l),
                    G::True if !pos => G::False,
                    G::False if !pos => G::True,
                    g => g,
                }
            }
            Qf::Eq(a, b) => {
                if (elem(a) == elem(b)) == pos {
                    G::True
                } else {
                    G::False
                }
            }
            Qf::Not(g) => self.ground(g, vals, !pos),
            Qf::And(gs) => {
                let parts = gs.iter().map(|g| self.ground(g, vals, pos)).collect();
                if pos {
                    mk_and(parts)
                } else {
                    mk_or(parts)
                }
            }
            Qf::Or(gs) => {
                let parts = gs.iter().map(|g| self.ground(g, vals, pos)).collect();
                if pos {
                    mk_or(parts)
                } else {
                    mk_and(parts)
                }
            }
            Qf::Implies(a, b) => {
                let l = self.ground(a, vals, !pos);
                let r = self.ground(b, vals, pos);
                if pos {
                    mk_or(vec![l, r])
                } else {
                    mk_and(vec![l, r])
                }
            }
            Qf::Iff(a, b) => {
                let ap = self.ground(a, vals, true);
                let an = self.ground(a, vals, false);
                let bp = self.ground(b, vals, true);
                let bn = self.ground(b, vals, false);
                if pos {
                    mk_and(vec![mk_or(vec![an, bp]), mk_or(vec![ap, bn])])
                } else {
                    mk_or(vec![mk_and(vec![ap, bn]), mk_and(vec![an, bp])])
                }
            }
        }
    }

    fn true_lit(&mut self) -> Lit {
        if let Some(l) = self.true_lit {
            return l;
        }
        let l = Lit::pos(self.solver.new_var());
        self.solver.add_clause(&[l]);
        self.true_lit = Some(l);
        l
    }

    /// A literal that implies `g` (one-sided definition).
    pub fn lit_of(&mut self, g: G) -> Lit {
        match g {
            G::True => self.true_lit(),
            G::False => !self.true_lit(),
            G::Lit(l) => l,
            G::And(parts) => {
                let t = Lit::pos(self.solver.new_var());
                for p in parts {
                    let l = self.lit_of(p);
                    self.solver.add_clause(&[!t, l]);
                }
                t
            }
            G::Or(parts) => {
                let t = Lit::pos(self.solver.new_var());
                let mut clause = vec![!t];
                for p in parts {
                    clause.push(self.lit_of(p));
                }
                self.solver.add_clause(&clause);
                t
            }
        }
    }

    pub fn assert(&mut self, g: G) {
        match g {
            G::True => {}
            G::False => {
                self.solver.add_clause(&[]);
            }
            G::Lit(l) => {
                self.solver.add_clause(&[l]);
            }
            G::And(parts) => {
                for p in parts {
                    self.assert(p);
                }
            }
            G::Or(parts) => {
                let clause: Vec<Lit> = parts.into_iter().map(|p| self.lit_of(p)).collect();
                self.solver.add_clause(&clause);
            }
        }
    }

    /// Constrains the bit vector `a` to be lexicographically at most `b`.
    pub fn lex_leq(&mut self, a: Vec<G>, b: Vec<G>) {
        let mut eq = self.true_lit();
        let m = a.len();
        for (i, (x, y)) in a.into_iter().zip(b).enumerate() {
            let x = self.lit_of(x);
            let y = self.lit_of(y);
            self.solver.add_clause(&[!eq, !x, y]);
            if i + 1 < m {
                let next = Lit::pos(self.solver.new_var());
                self.solver.add_clause(&[!eq, !x, !y, next]);
                self.solver.add_clause(&[!eq, x, y, next]);
                eq = next;
            }
        }
    }

    /// Allocates a variable for every unknown atom.
    pub fn allocate_all(&mut self) {
        for r in 0..self.d.tables.len() {
            for i in 0..self.d.tables[r].len() {
                self.atom(r, i);
            }
        }
    }

    /// Excludes the current model's values on the allocated atom variables.
    pub fn block_model(&mut self) {
        let clause: Vec<Lit> = self
            .vars
            .iter()
            .flatten()
            .filter(|&&v| v != NONE)
            .map(|&v| Lit::new(v, !self.solver.value(v)))
            .collect();
        self.solver.add_clause(&clause);
    }

    pub fn solve(&mut self, budget: &mut u64) -> SolveResult {
        self.solver.solve(budget)
    }

    /// The partial structure completed with the solver's model; atoms never
    /// mentioned in a constraint are false.
    pub fn model(&self) -> DenseStructure {
        let mut d = self.d.clone();
        for (r, table) in d.tables.iter_mut().enumerate() {
            for (i, v) in table.iter_mut().enumerate() {
                if *v == UNKNOWN {
                    let var = self.vars[r][i];
                    *v = if var != NONE && self.solver.value(var) {
                        TRUE
                    } else {
                        FALSE
                    };
                }
            }
        }
        d.finalize();
        d
    }
}

/// The normal form's matrices compiled against a signature ordering and a
/// constant interpretation.
pub struct CompiledNf {
    /// `(arity, guard → matrix)` per guarded universal conjunct.
    pub universals: Vec<(usize, Qf)>,
    /// `(1 + |ȳ|, matrix)` per ∀∃ conjunct; slot 0 is the universal variable.
    pub forall_exists: Vec<(usize, Qf)>,
    pub pair: Option<Qf>,
}

impl CompiledNf {
    pub fn new(nf: &NormalForm, constants: &BTreeMap<String, usize>) -> Result<CompiledNf, String> {
        let relations: Vec<String> = nf.signature.relations.keys().cloned().collect();
        let mut universals = Vec::new();
        for g in &nf.guarded_universals {
            let body = Formula::implies(Formula::conj(g.guard.clone()), g.matrix.clone());
            universals.push((
                g.vars.len(),
                compile_qf(&body, &relations, &g.vars, constants)?,
            ));
        }
        let mut forall_exists = Vec::new();
        for c in &nf.forall_exists {
            let mut vars = vec![c.var.clone()];
            vars.extend(c.witnesses.iter().cloned());
            forall_exists.push((
                vars.len(),
                compile_qf(&c.matrix, &relations, &vars, constants)?,
            ));
        }
        let pair = match &nf.universal_pair {
            Some(p) => Some(compile_qf(&p.matrix, &relations, &p.vars, constants)?),
            None => None,
        };
        Ok(CompiledNf {
            universals,
            forall_exists,
            pair,
        })
    }

    /// Number of ground instances needed over a universe of size `n`.
    pub fn instance_count(&self, n: usize) -> u128 {
        let n = n as u128;
        let mut total = 0u128;
        for (k, _) in &self.universals {
            total = total.saturating_add(n.saturating_pow(*k as u32));
        }
        for (k, _) in &self.forall_exists {
            total = total.saturating_add(n.saturating_pow(*k as u32));
        }
        if self.pair.is_some() {
            total = total.saturating_add(n * n);
        }
        total
    }

    /// Asserts the universal conjuncts on every tuple accepted by `keep`.
    pub fn assert_universals(&self, g: &mut Grounder, keep: &dyn Fn(&[usize]) -> bool) {
        let n = g.d.n;
        for (k, q) in &self.universals {
            for_each_tuple(n, *k, |t| {
                if keep(t) {
                    let inst = g.ground(q, t, true);
                    g.assert(inst);
                }
            });
        }
        if let Some(q) = &self.pair {
            for_each_tuple(n, 2, |t| {
                if keep(t) {
                    let inst = g.ground(q, t, true);
                    g.assert(inst);
                }
            });
        }
    }

    /// The disjunction over all witness tuples for element `a` and conjunct `i`.
    pub fn witness_disjunction(&self, g: &mut Grounder, i: usize, a: usize) -> G {
        let (k, q) = &self.forall_exists[i];
        let n = g.d.n;
        let mut parts = Vec::new();
        let mut vals = vec![a; *k];
        for_each_tuple(n, k - 1, |t| {
            vals[1..].copy_from_slice(t);
            parts.push(g.ground(q, &vals, true));
        });
        mk_or(parts)
    }
}
