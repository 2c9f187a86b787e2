#![allow(dead_code)]

use guardedsat::reductions::{parse_atm, AtmSpec, TilingSystem};
use guardedsat::syntax::{Quantifier, Term};
use guardedsat::{classify, Dialect, Formula, Signature, Structure};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub struct Gen {
    rng: StdRng,
    rels: Vec<(String, usize)>,
    fresh: usize,
    quantifiers: usize,
    max_quantifiers: usize,
    unguarded_pairs: bool,
    equality: bool,
}

impl Gen {
    fn var(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn atom_over(&mut self, vars: &[String]) -> Formula {
        if self.equality && vars.len() >= 2 && self.rng.gen_ratio(1, 6) {
            let a = vars.choose(&mut self.rng).unwrap().clone();
            let b = vars.choose(&mut self.rng).unwrap().clone();
            return Formula::eq(Term::var(&a), Term::var(&b));
        }
        let (rel, arity) = self.rels.choose(&mut self.rng).unwrap().clone();
        let args: Vec<String> = (0..arity)
            .map(|_| vars.choose(&mut self.rng).unwrap().clone())
            .collect();
        Formula::atom_vars(&rel, &args)
    }

    fn literal(&mut self, vars: &[String]) -> Formula {
        let a = self.atom_over(vars);
        if self.rng.gen_bool(0.4) {
            Formula::not(a)
        } else {
            a
        }
    }

    /// Quantifier-free combination of atoms over `vars`, with occasional
    /// one-variable subformulas about single variables.
    fn matrix(&mut self, vars: &[String], depth: usize) -> Formula {
        let k = self.rng.gen_range(1..=3);
        let mut parts = Vec::new();
        for _ in 0..k {
            if depth > 0 && self.rng.gen_ratio(1, 4) {
                let v = vars.choose(&mut self.rng).unwrap().clone();
                if let Some(f) = self.one_var(&v, depth - 1) {
                    parts.push(f);
                    continue;
                }
            }
            parts.push(self.literal(vars));
        }
        match self.rng.gen_range(0..3) {
            0 => Formula::conj(parts),
            1 => Formula::disj(parts),
            _ => {
                let last = parts.pop().unwrap();
                Formula::implies(Formula::conj(parts), last)
            }
        }
    }

    /// A formula with the single free variable `x`.
    fn one_var(&mut self, x: &str, depth: usize) -> Option<Formula> {
        let room = self.max_quantifiers.saturating_sub(self.quantifiers);
        if room == 0 {
            return None;
        }
        let max_arity = self.rels.iter().map(|r| r.1).max().unwrap();
        let width = self
            .rng
            .gen_range(1..=room.min(2).min(max_arity.max(2) - 1).max(1));
        let ys: Vec<String> = (0..width).map(|_| self.var()).collect();
        self.quantifiers += width;
        let mut vars = vec![x.to_string()];
        vars.extend(ys.iter().cloned());
        let kind = if self.rng.gen_bool(0.5) {
            Quantifier::Exists
        } else {
            Quantifier::Forall
        };
        let body = self.matrix(&vars, depth);
        let guards: Vec<(String, usize)> = self
            .rels
            .iter()
            .filter(|r| r.1 >= vars.len())
            .cloned()
            .collect();
        let unguarded = self.unguarded_pairs && vars.len() == 2 && self.rng.gen_ratio(1, 3);
        if unguarded || guards.is_empty() {
            if !(self.unguarded_pairs && vars.len() == 2) {
                return None;
            }
            return Some(Formula::quant(kind, &ys, body));
        }
        let (g, arity) = guards.choose(&mut self.rng).unwrap().clone();
        let mut args = vars.clone();
        while args.len() < arity {
            args.push(vars.choose(&mut self.rng).unwrap().clone());
        }
        args.shuffle(&mut self.rng);
        let guard = Formula::atom_vars(&g, &args);
        Some(match kind {
            Quantifier::Exists => Formula::quant(kind, &ys, Formula::conj([guard, body])),
            Quantifier::Forall => Formula::quant(kind, &ys, Formula::implies(guard, body)),
        })
    }

    fn sentence(&mut self) -> Formula {
        let k = self.rng.gen_range(1..=3);
        let mut parts = Vec::new();
        for _ in 0..k {
            if self.quantifiers >= self.max_quantifiers {
                break;
            }
            let x = self.var();
            self.quantifiers += 1;
            let inner = self.one_var(&x, 1).unwrap_or(Formula::True);
            let body = Formula::conj([self.literal(std::slice::from_ref(&x)), inner]);
            let body = if self.rng.gen_bool(0.5) {
                body
            } else {
                Formula::disj([self.literal(std::slice::from_ref(&x)), body])
            };
            let kind = if self.rng.gen_bool(0.5) {
                Quantifier::Exists
            } else {
                Quantifier::Forall
            };
            parts.push(Formula::quant(kind, &[x], body));
        }
        Formula::conj(parts)
    }
}

/// Random sentence of `dialect` over at most two relations of arity at most
/// three and at most six quantified variables, with its signature.
pub fn random_formula(seed: u64, dialect: Dialect) -> (Signature, Formula) {
    let mut rng = StdRng::seed_from_u64(seed);
    loop {
        let n_rels = rng.gen_range(1..=2);
        let mut sig = Signature::new();
        let mut rels = Vec::new();
        let names = ["P", "R"];
        for (i, name) in names.iter().enumerate().take(n_rels) {
            let arity = if i == 1 {
                rng.gen_range(1..=3)
            } else {
                rng.gen_range(1..=2)
            };
            sig = sig.with_relation(name, arity);
            rels.push((name.to_string(), arity));
        }
        let mut g = Gen {
            rng: StdRng::seed_from_u64(rng.gen()),
            rels,
            fresh: 0,
            quantifiers: 0,
            max_quantifiers: 6,
            unguarded_pairs: matches!(dialect, Dialect::Tgf1 | Dialect::Tgf1NoEq),
            equality: matches!(dialect, Dialect::Gf1 | Dialect::Tgf1),
        };
        let f = g.sentence();
        let r = classify(&f);
        let fits = match dialect {
            Dialect::Gf1 => r.in_gf1,
            Dialect::Tgf1 => r.in_tgf1,
            Dialect::Tgf1NoEq => r.in_tgf1 && !r.uses_equality,
            Dialect::Lgf1 => r.in_lgf1,
        };
        if fits {
            return (sig, f);
        }
    }
}

/// Named satisfiable and unsatisfiable fixtures in the text syntax.
pub const FIXTURES: &[(&str, &str, Dialect)] = &[
    ("serial", "relation R/2\nforall x. exists y. R(x,y)", Dialect::Gf1),
    ("asym-serial", "relation R/2\nforall x. exists y. R(x,y) & !R(y,x)", Dialect::Gf1),
    ("contradiction", "relation P/1\nexists x. P(x) & !P(x)", Dialect::Gf1),
    (
        "two-kings",
        "relation Z/1 relation O/1\n(exists x. Z(x) & !O(x)) & (forall x y. Z(x) & Z(y) -> x = y) & (exists x. O(x) & !Z(x)) & (forall x y. O(x) & O(y) -> x = y)",
        Dialect::Tgf1,
    ),
    (
        "product",
        "relation P/1 relation Q/1 relation R/2\n(forall x y. P(x) & Q(y) -> R(x,y)) & (exists x. P(x)) & (exists x. Q(x))",
        Dialect::Tgf1,
    ),
    (
        "lgf-triangle-free",
        "relation R/2\n(forall x y z. R(x,y) & R(y,z) & R(z,x) -> false) & forall x. exists y. R(x,y)",
        Dialect::Lgf1,
    ),
    (
        "guarded-ternary",
        "relation P/1 relation R/3\nforall x. P(x) -> exists y z. R(x,y,z) & !P(y) & P(z)",
        Dialect::Gf1,
    ),
    (
        "unique-point",
        "relation P/1\n(exists x. P(x)) & forall x y. P(x) & P(y) -> x = y",
        Dialect::Tgf1,
    ),
    (
        "no-loops-serial",
        "relation R/2\n(forall x. exists y. R(x,y)) & forall x. !R(x,x)",
        Dialect::Gf1,
    ),
    (
        "pair-total-order-free",
        "relation R/2 relation P/1\n(forall x y. R(x,y) | R(y,x) | x = y) & (exists x. P(x)) & (exists x. !P(x))",
        Dialect::Tgf1,
    ),
];

/// Tiling systems with whether they tile the 2×2 torus.
pub fn tiling_systems() -> Vec<(&'static str, TilingSystem, bool)> {
    vec![
        (
            "mono",
            TilingSystem::new(&["a"], 0, &[(0, 0)], &[(0, 0)]),
            true,
        ),
        (
            "mono-no-hor",
            TilingSystem::new(&["a"], 0, &[], &[(0, 0)]),
            false,
        ),
        (
            "stripes",
            TilingSystem::new(&["a", "b"], 0, &[(0, 1), (1, 0)], &[(0, 0), (1, 1)]),
            true,
        ),
        // Rows must be constant, columns must alternate.
        (
            "rows-vs-columns",
            TilingSystem::new(&["a", "b"], 0, &[(0, 0)], &[(0, 1), (1, 0)]),
            false,
        ),
        (
            "initial-stuck",
            TilingSystem::new(&["a", "b"], 0, &[(0, 0), (1, 1)], &[(1, 1)]),
            false,
        ),
        (
            "checkerboard",
            TilingSystem::new(&["a", "b"], 0, &[(0, 1), (1, 0)], &[(0, 1), (1, 0)]),
            true,
        ),
        (
            "three-cycle",
            TilingSystem::new(
                &["a", "b", "c"],
                0,
                &[(0, 1), (1, 2), (2, 0)],
                &[(0, 0), (1, 1), (2, 2)],
            ),
            false,
        ),
        (
            "initial-b",
            TilingSystem::new(&["a", "b"], 1, &[(1, 0), (0, 1), (0, 0)], &[(1, 1), (0, 0)]),
            true,
        ),
    ]
}

const ACCEPT_NOW: &str = "states: acc rej\naccepting: acc\nrejecting: rej\nalphabet: _\n";
const REJECT_NOW: &str = "states: rej acc\naccepting: acc\nrejecting: rej\nalphabet: _\n";
const EXISTS_SPLIT: &str =
    "states: q acc rej\naccepting: acc\nrejecting: rej\nexistential: q\nalphabet: _\n\
    move q _ -> acc _ R\nmove q _ -> rej _ R\n";
const FORALL_SPLIT: &str =
    "states: q acc rej\naccepting: acc\nrejecting: rej\nuniversal: q\nalphabet: _\n\
    move q _ -> acc _ R\nmove q _ -> rej _ R\n";
const WALKER: &str =
    "states: q p acc rej\naccepting: acc\nrejecting: rej\nuniversal: q\nexistential: p\n\
    alphabet: _ a\ninput: a\n\
    move q a -> p _ R\nmove q a -> acc a R\nmove q _ -> rej _ R\nmove q _ -> rej _ R\n\
    move p _ -> acc a L\nmove p _ -> rej a L\nmove p a -> rej a L\nmove p a -> rej a L\n";
const ERASER: &str =
    "states: q acc rej\naccepting: acc\nrejecting: rej\nexistential: q\nalphabet: _ a\ninput: a\n\
    move q _ -> rej _ R\nmove q _ -> rej _ R\nmove q a -> rej a R\nmove q a -> rej _ R\n";
// The only accepting branch moves off the tape.
const FALLS_OFF: &str =
    "states: q acc rej\naccepting: acc\nrejecting: rej\nuniversal: q\nalphabet: _\n\
    move q _ -> rej _ L\nmove q _ -> acc _ R\n";

/// Machines with whether they accept their input.
pub fn machines() -> Vec<(&'static str, AtmSpec, bool)> {
    [
        ("accept-now", ACCEPT_NOW, true),
        ("exists-split", EXISTS_SPLIT, true),
        ("walker", WALKER, true),
        ("falls-off", FALLS_OFF, true),
        ("reject-now", REJECT_NOW, false),
        ("forall-split", FORALL_SPLIT, false),
        ("eraser", ERASER, false),
    ]
    .into_iter()
    .map(|(name, text, acc)| (name, parse_atm(text).unwrap(), acc))
    .collect()
}

/// Whether every tuple of `rel` stays in `rel` when its positions after the
/// first `skip` are swapped at the front or rotated by one.
pub fn closed_under_generators(s: &Structure, rel: &str, skip: usize) -> bool {
    s.tuples(rel).all(|t| {
        let (head, bits) = t.split_at(skip);
        let mut swapped = bits.to_vec();
        swapped.swap(0, 1);
        let mut rotated = bits[1..].to_vec();
        rotated.push(bits[0]);
        [swapped, rotated].iter().all(|b| {
            let full: Vec<usize> = head.iter().chain(b).copied().collect();
            s.holds(rel, &full)
        })
    })
}
