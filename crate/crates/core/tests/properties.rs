mod common;

use common::random_formula;
use guardedsat::structures::{double, kings, parse_structure, render_structure};
use guardedsat::syntax::{render_file, Quantifier, Term};
use guardedsat::{
    classify, models, parse_formula, to_normal_form, Dialect, Formula, Signature, Structure,
};
use proptest::prelude::*;

fn sig() -> Signature {
    Signature::new()
        .with_relation("P", 1)
        .with_relation("R", 2)
        .with_relation("T", 3)
        .with_constant("c")
}

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        4 => prop::sample::select(vec!["x", "y", "z"]).prop_map(Term::var),
        1 => Just(Term::constant("c")),
    ]
}

fn atom() -> impl Strategy<Value = Formula> {
    prop_oneof![
        term().prop_map(|t| Formula::atom("P", vec![t])),
        prop::collection::vec(term(), 2).prop_map(|a| Formula::atom("R", a)),
        prop::collection::vec(term(), 3).prop_map(|a| Formula::atom("T", a)),
        (term(), term()).prop_map(|(a, b)| Formula::eq(a, b)),
        Just(Formula::True),
        Just(Formula::False),
    ]
}

fn formula() -> impl Strategy<Value = Formula> {
    atom().prop_recursive(4, 24, 3, |inner| {
        let vars = prop::sample::subsequence(vec!["x", "y", "z"], 1..=3)
            .prop_map(|v| v.into_iter().map(String::from).collect::<Vec<_>>());
        prop_oneof![
            inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
            (any::<bool>(), vars, inner).prop_map(|(e, vars, body)| Formula::Quant {
                kind: if e {
                    Quantifier::Exists
                } else {
                    Quantifier::Forall
                },
                vars,
                body: Box::new(body),
            }),
        ]
    })
}

fn structure() -> impl Strategy<Value = Structure> {
    (1usize..=4).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n * n),
            0..n,
        )
            .prop_map(|(n, p, r, c)| {
                let sig = Signature::new()
                    .with_relation("P", 1)
                    .with_relation("R", 2)
                    .with_constant("c");
                let mut s = Structure::new(sig, n);
                s.set_constant("c", c);
                for a in 0..n {
                    s.set("P", vec![a], p[a]);
                    for b in 0..n {
                        s.set("R", vec![a, b], r[a * n + b]);
                    }
                }
                s
            })
    })
}

/// `s` over `target`, keeping the relations whose arity matches.
fn transplant(s: &Structure, target: &Signature) -> Structure {
    let mut m = Structure::new(target.clone(), s.size());
    for (rel, &arity) in &target.relations {
        if s.signature().arity(rel) == Some(arity) {
            for t in s.tuples(rel) {
                m.insert(rel, t.clone());
            }
        }
    }
    m
}

proptest! {
    #[test]
    fn render_then_parse_is_identity(f in formula()) {
        let text = render_file(&sig(), &f);
        let (parsed_sig, parsed) = parse_formula(&text).unwrap();
        prop_assert_eq!(parsed_sig, sig());
        prop_assert_eq!(parsed, f);
    }

    #[test]
    fn fragment_lattice_is_consistent(f in formula()) {
        let r = classify(&f);
        prop_assert_eq!(r.in_gf1, r.in_gf && r.one_dimensional);
        prop_assert_eq!(r.in_tgf1, r.in_tgf && r.one_dimensional);
        prop_assert_eq!(r.in_lgf1, r.in_lgf && r.one_dimensional);
        prop_assert!(!r.in_gf || r.in_tgf);
        prop_assert!(!r.in_gf || r.in_lgf);
        prop_assert!(!r.in_fo2 || r.in_tgf1);
        prop_assert_eq!(r.uses_equality, f.uses_equality());
        prop_assert_eq!(r.first_violation.is_none(), r.in_gf1 && r.in_tgf1 && r.in_lgf1 && r.in_fo2);
        prop_assert_eq!(classify(&f), r);
    }

    #[test]
    fn structure_text_round_trip(s in structure()) {
        let text = render_structure(&s);
        let back = parse_structure(&text, Some(s.signature())).unwrap();
        prop_assert_eq!(render_structure(&back), text);
        prop_assert_eq!(back, s);
    }

    #[test]
    fn doubling_is_kingless_and_preserves_gf1(s in structure(), seed in 0u64..500) {
        let plain = s.reduct(&Signature::new().with_relation("P", 1).with_relation("R", 2));
        for plus in [false, true] {
            let d = double(&plain, plus).unwrap();
            prop_assert_eq!(d.size(), 2 * plain.size());
            prop_assert!(kings(&d).is_empty());
        }
        let (fsig, f) = random_formula(seed, Dialect::Gf1);
        let m = transplant(&plain, &fsig);
        if models(&m, &f).unwrap() {
            prop_assert!(models(&double(&m, false).unwrap(), &f).unwrap());
        }
    }

    #[test]
    fn expansions_reduce_to_the_original(s in structure(), seed in 0u64..500) {
        let (fsig, f) = random_formula(seed, Dialect::Tgf1);
        let m = transplant(&s, &fsig);
        let holds = models(&m, &f).unwrap();
        let mut accepted = false;
        for (nf, _) in to_normal_form(&f, &fsig, Dialect::Tgf1).unwrap() {
            let e = nf.expand(&m).unwrap();
            prop_assert_eq!(e.reduct(&fsig), m.clone());
            accepted |= models(&e, &nf.to_formula()).unwrap();
        }
        prop_assert_eq!(accepted, holds);
    }
}
