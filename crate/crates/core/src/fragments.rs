//! Syntactic membership tests for the guarded, tri-guarded, loosely guarded
//! and one-dimensional fragments.

use std::collections::BTreeSet;
use std::fmt;

use crate::syntax::{free_variables, Formula, Quantifier, Term};

/// A maximal run of directly nested same-kind quantifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block<'a> {
    pub kind: Quantifier,
    pub vars: Vec<String>,
    pub body: &'a Formula,
    /// Number of `Quant` nodes merged into the block.
    pub depth: usize,
}

/// Merges `f` with directly nested quantifiers of the same kind.
pub fn block(f: &Formula) -> Option<Block<'_>> {
    let Formula::Quant { kind, vars, body } = f else {
        return None;
    };
    let mut vars = vars.clone();
    let mut body: &Formula = body;
    let mut depth = 1;
    while let Formula::Quant {
        kind: k2,
        vars: v2,
        body: b2,
    } = body
    {
        if k2 != kind {
            break;
        }
        vars.extend(v2.iter().cloned());
        body = b2;
        depth += 1;
    }
    Some(Block {
        kind: *kind,
        vars,
        body,
        depth,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GuardStatus {
    AtomicGuard,
    LooseGuard,
    UnguardedBinaryOk,
    Unguarded,
}

impl fmt::Display for GuardStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GuardStatus::AtomicGuard => "atomic_guard",
            GuardStatus::LooseGuard => "loose_guard",
            GuardStatus::UnguardedBinaryOk => "unguarded_binary_ok",
            GuardStatus::Unguarded => "unguarded",
        })
    }
}

fn term_vars(args: &[Term]) -> BTreeSet<&str> {
    args.iter().filter_map(Term::as_var).collect()
}

fn atom_vars(f: &Formula) -> Option<BTreeSet<&str>> {
    match f {
        Formula::Atom { args, .. } => Some(term_vars(args)),
        Formula::Eq(a, b) => Some([a, b].into_iter().filter_map(|t| t.as_var()).collect()),
        _ => None,
    }
}

/// Candidate guard atoms of a block body: the positive atomic conjuncts of an
/// existential body, or of the antecedent of a universal body.
pub fn guard_candidates(kind: Quantifier, body: &Formula) -> Vec<&Formula> {
    let pool: Vec<&Formula> = match (kind, body) {
        (Quantifier::Exists, f) => f.conjuncts(),
        (Quantifier::Forall, Formula::Implies(lhs, _)) => lhs.conjuncts(),
        (Quantifier::Forall, Formula::Or(items)) => items
            .iter()
            .filter_map(|g| match g {
                Formula::Not(inner) => Some(inner.as_ref()),
                _ => None,
            })
            .flat_map(|g| g.conjuncts())
            .collect(),
        _ => Vec::new(),
    };
    pool.into_iter().filter(|g| g.is_atomic()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardAnalysis {
    pub status: GuardStatus,
    /// The covering guard (atomic status) or all candidate atoms (loose).
    pub guard: Vec<Formula>,
    pub equality_guard: bool,
}

/// Guard analysis of a merged block with bound `vars` over `body`.
pub fn analyze_block(kind: Quantifier, vars: &[String], body: &Formula) -> GuardAnalysis {
    let fv = free_variables(body);
    let bound: BTreeSet<&str> = vars
        .iter()
        .map(String::as_str)
        .filter(|v| fv.contains(*v))
        .collect();
    let outer: BTreeSet<&str> = fv
        .iter()
        .map(String::as_str)
        .filter(|v| !bound.contains(v))
        .collect();
    if fv.len() <= 1 && outer.is_empty() {
        return GuardAnalysis {
            status: GuardStatus::AtomicGuard,
            guard: Vec::new(),
            equality_guard: false,
        };
    }
    let cands = guard_candidates(kind, body);
    for g in &cands {
        let av = atom_vars(g).unwrap();
        if fv.iter().all(|v| av.contains(v.as_str())) {
            return GuardAnalysis {
                status: GuardStatus::AtomicGuard,
                guard: vec![(*g).clone()],
                equality_guard: matches!(g, Formula::Eq(..)),
            };
        }
    }
    let sets: Vec<BTreeSet<&str>> = cands.iter().map(|g| atom_vars(g).unwrap()).collect();
    let loose = !cands.is_empty()
        && bound.iter().all(|y| {
            fv.iter()
                .all(|v| sets.iter().any(|s| s.contains(y) && s.contains(v.as_str())))
        });
    if loose {
        return GuardAnalysis {
            status: GuardStatus::LooseGuard,
            equality_guard: cands.iter().any(|g| matches!(g, Formula::Eq(..))),
            guard: cands.into_iter().cloned().collect(),
        };
    }
    let status = if fv.len() <= 2 {
        GuardStatus::UnguardedBinaryOk
    } else {
        GuardStatus::Unguarded
    };
    GuardAnalysis {
        status,
        guard: Vec::new(),
        equality_guard: false,
    }
}

/// Strongest guard status of the block starting at a quantifier node;
/// `None` for other nodes.
pub fn guard_status(f: &Formula) -> Option<GuardStatus> {
    let b = block(f)?;
    Some(analyze_block(b.kind, &b.vars, b.body).status)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub fragment: &'static str,
    /// Child indices from the root to the offending node.
    pub path: Vec<usize>,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        write!(
            f,
            "{} at [{}]: {}",
            self.fragment,
            path.join("."),
            self.reason
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentReport {
    pub uses_equality: bool,
    pub uses_constants: bool,
    pub uses_equality_guard: bool,
    pub in_fo2: bool,
    pub one_dimensional: bool,
    pub in_gf: bool,
    pub in_gf1: bool,
    pub in_tgf: bool,
    pub in_tgf1: bool,
    pub in_lgf: bool,
    pub in_lgf1: bool,
    pub uniform_sentence_shape: bool,
    pub first_violation: Option<Violation>,
}

impl FragmentReport {
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        let flags = [
            ("uses_equality", self.uses_equality),
            ("uses_constants", self.uses_constants),
            ("uses_equality_guard", self.uses_equality_guard),
            ("in_fo2", self.in_fo2),
            ("one_dimensional", self.one_dimensional),
            ("in_gf", self.in_gf),
            ("in_gf1", self.in_gf1),
            ("in_tgf", self.in_tgf),
            ("in_tgf1", self.in_tgf1),
            ("in_lgf", self.in_lgf),
            ("in_lgf1", self.in_lgf1),
            ("uniform_sentence_shape", self.uniform_sentence_shape),
        ];
        for (k, v) in flags {
            out.push_str(&format!("{k}: {v}\n"));
        }
        match &self.first_violation {
            Some(v) => out.push_str(&format!("first_violation: {v}\n")),
            None => out.push_str("first_violation: none\n"),
        }
        out
    }
}

struct Walker {
    /// Variable names seen so far.
    names: BTreeSet<String>,
    fo2: Option<Violation>,
    one_dim: Option<Violation>,
    gf: Option<Violation>,
    tgf: Option<Violation>,
    lgf: Option<Violation>,
    equality_guard: bool,
}

fn note(slot: &mut Option<Violation>, fragment: &'static str, path: &[usize], reason: String) {
    if slot.is_none() {
        *slot = Some(Violation {
            fragment,
            path: path.to_vec(),
            reason,
        });
    }
}

impl Walker {
    /// Post-order walk; `in_block` is true when `f` is the inner part of a
    /// block already analyzed at an ancestor.
    fn walk(&mut self, f: &Formula, path: &mut Vec<usize>, in_block: bool) {
        for (i, c) in f.children().into_iter().enumerate() {
            path.push(i);
            let continues = matches!((f, c), (Formula::Quant { kind: k1, .. }, Formula::Quant { kind: k2, .. }) if k1 == k2);
            self.walk(c, path, continues);
            path.pop();
        }
        let fv = free_variables(f);
        self.names.extend(fv.iter().cloned());
        if let Formula::Quant { vars, .. } = f {
            self.names.extend(vars.iter().cloned());
        }
        if self.names.len() > 2 {
            let names: Vec<&str> = self.names.iter().map(String::as_str).collect();
            note(
                &mut self.fo2,
                "fo2",
                path,
                format!("uses variables {}", names.join(", ")),
            );
        }
        if in_block {
            return;
        }
        let Some(b) = block(f) else { return };
        let leftover = fv.len();
        if leftover > 1 {
            let names: Vec<&str> = fv.iter().map(String::as_str).collect();
            note(
                &mut self.one_dim,
                "one_dimensional",
                path,
                format!(
                    "quantifier block leaves {} variables free ({})",
                    leftover,
                    names.join(", ")
                ),
            );
        }
        let a = analyze_block(b.kind, &b.vars, b.body);
        if a.equality_guard && a.status == GuardStatus::AtomicGuard {
            self.equality_guard = true;
        }
        let label = format!("block {} {}", b.kind.keyword(), b.vars.join(" "));
        if a.status != GuardStatus::AtomicGuard {
            note(
                &mut self.gf,
                "gf",
                path,
                format!("{label} has no atomic guard"),
            );
        }
        if a.status != GuardStatus::AtomicGuard && free_variables(b.body).len() > 2 {
            note(
                &mut self.tgf,
                "tgf",
                path,
                format!("{label} is unguarded with more than two free variables in its body"),
            );
        }
        if !matches!(a.status, GuardStatus::AtomicGuard | GuardStatus::LooseGuard) {
            note(
                &mut self.lgf,
                "lgf",
                path,
                format!("{label} has no loose guard"),
            );
        }
    }
}

/// True iff every maximal same-kind quantifier block leaves at most one
/// variable free; otherwise the path to the first offending block.
pub fn check_one_dimensional(f: &Formula) -> (bool, Option<Vec<usize>>) {
    let r = classify(f);
    match r.one_dimensional {
        true => (true, None),
        false => {
            let mut w = Walker {
                names: BTreeSet::new(),
                fo2: None,
                one_dim: None,
                gf: None,
                tgf: None,
                lgf: None,
                equality_guard: false,
            };
            w.walk(f, &mut Vec::new(), false);
            (false, w.one_dim.map(|v| v.path))
        }
    }
}

/// Conjunction of one-block prenex sentences whose matrices use, in each
/// non-equality atom, either all block variables or exactly one.
pub fn check_uniform_sentence_shape(f: &Formula) -> bool {
    if !free_variables(f).is_empty() {
        return false;
    }
    f.conjuncts().into_iter().all(|c| {
        let Some(b) = block(c) else { return false };
        if !b.body.is_quantifier_free() {
            return false;
        }
        let all: BTreeSet<&str> = b.vars.iter().map(String::as_str).collect();
        let mut ok = true;
        b.body.visit(&mut |g| {
            if let Formula::Atom { args, .. } = g {
                let used = term_vars(args);
                if used.len() != 1 && used != all {
                    ok = false;
                }
            }
        });
        ok
    })
}

pub fn classify(f: &Formula) -> FragmentReport {
    let mut w = Walker {
        names: BTreeSet::new(),
        fo2: None,
        one_dim: None,
        gf: None,
        tgf: None,
        lgf: None,
        equality_guard: false,
    };
    w.walk(f, &mut Vec::new(), false);
    let one_dimensional = w.one_dim.is_none();
    let in_gf = w.gf.is_none();
    let in_tgf = w.tgf.is_none();
    let in_lgf = w.lgf.is_none();
    let in_gf1 = in_gf && one_dimensional;
    let in_tgf1 = in_tgf && one_dimensional;
    let in_lgf1 = in_lgf && one_dimensional;
    let in_fo2 = w.fo2.is_none();
    let mut violations: Vec<Violation> = [w.one_dim, w.gf, w.tgf, w.lgf]
        .into_iter()
        .flatten()
        .collect();
    violations.sort_by(|a, b| post_order_cmp(&a.path, &b.path));
    if violations.is_empty() {
        violations.extend(w.fo2);
    }
    FragmentReport {
        uses_equality: f.uses_equality(),
        uses_constants: !f.constants_used().is_empty(),
        uses_equality_guard: w.equality_guard,
        in_fo2,
        one_dimensional,
        in_gf,
        in_gf1,
        in_tgf,
        in_tgf1,
        in_lgf,
        in_lgf1,
        uniform_sentence_shape: check_uniform_sentence_shape(f),
        first_violation: violations.into_iter().next(),
    }
}

fn post_order_cmp(a: &[usize], b: &[usize]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x.cmp(y);
        }
    }
    // A descendant (longer path) is visited before its ancestor.
    b.len().cmp(&a.len())
}
