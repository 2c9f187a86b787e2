mod common;

use common::{random_formula, FIXTURES};
use guardedsat::decision::DecisionError;
use guardedsat::{
    brute_force_sat, decide, models, parse_formula, sat_alternating, to_normal_form, Dialect,
    Engine, Options, SatStatus, SizeLimit,
};

fn opts(max: usize) -> Options {
    Options {
        max_size: SizeLimit::Fixed(max),
        atom_ceiling: 64,
        ..Options::default()
    }
}

#[test]
fn brute_force_examples() {
    let (sig, f) = parse_formula("relation P/1\nexists x. P(x) & !P(x)").unwrap();
    let v = brute_force_sat(&f, &sig, 3, &opts(3)).unwrap();
    assert_eq!(v.status, SatStatus::UnsatUpTo(3));

    let (sig, f) = parse_formula("relation P/1\nexists x. P(x)").unwrap();
    let v = brute_force_sat(&f, &sig, 1, &opts(1)).unwrap();
    assert_eq!(v.status.model().unwrap().size(), 1);

    let (sig, f) = parse_formula("relation R/2\nforall x. exists y. R(x,y) & !R(y,x)").unwrap();
    let v = brute_force_sat(&f, &sig, 2, &opts(2)).unwrap();
    assert_eq!(v.status, SatStatus::UnsatUpTo(2));
    let v = brute_force_sat(&f, &sig, 3, &opts(3)).unwrap();
    let m = v.status.model().unwrap();
    assert_eq!(m.size(), 3);
    assert!(models(m, &f).unwrap());
}

#[test]
fn brute_force_ceiling() {
    let (sig, f) = parse_formula("relation P/1 relation R/3\nexists x. P(x) & !P(x)").unwrap();
    let e = brute_force_sat(&f, &sig, 4, &Options::default()).unwrap_err();
    assert!(matches!(e, DecisionError::AtomCeiling { required: 68, .. }));
}

#[test]
fn two_kings_minimum_size_two() {
    let (_, text, d) = FIXTURES.iter().find(|x| x.0 == "two-kings").unwrap();
    let (sig, f) = parse_formula(text).unwrap();
    let v = decide(&f, &sig, *d, Engine::Bounded, &opts(3)).unwrap();
    let m = v.status.model().unwrap();
    assert!(models(m, &f).unwrap());
    assert_eq!(
        brute_force_sat(&f, &sig, 1, &opts(1)).unwrap().status,
        SatStatus::UnsatUpTo(1)
    );
    assert!(brute_force_sat(&f, &sig, 2, &opts(2))
        .unwrap()
        .status
        .is_sat());
}

#[test]
fn product_formula_sat_and_verified() {
    let (_, text, d) = FIXTURES.iter().find(|x| x.0 == "product").unwrap();
    let (sig, f) = parse_formula(text).unwrap();
    for engine in [Engine::Bounded, Engine::Alternating] {
        let v = decide(&f, &sig, *d, engine, &opts(2)).unwrap();
        assert!(models(v.status.model().unwrap(), &f).unwrap());
    }
}

#[test]
fn gf1_bound_gives_definitive_answers() {
    let mut o = opts(1);
    o.max_size = SizeLimit::Bound;
    let (sig, f) = parse_formula("relation P/1\nexists x. P(x) & !P(x)").unwrap();
    let v = decide(&f, &sig, Dialect::Gf1, Engine::Bounded, &o).unwrap();
    assert_eq!(v.status, SatStatus::Unsat);

    let (sig, f) = parse_formula("relation R/2\nforall x. exists y. R(x,y) & !R(y,x)").unwrap();
    let v = decide(&f, &sig, Dialect::Gf1, Engine::Bounded, &o).unwrap();
    assert!(v.status.is_sat());
}

#[test]
fn satisfiable_at_four_found_within_bound() {
    // Needs four elements: a directed structure where every element has an
    // R-successor outside its own P/Q class, with both classes split.
    let text = "relation P/1 relation R/2\n\
        (forall x. exists y. R(x,y) & !R(y,x) & (P(x) <-> !P(y))) & forall x. (exists y. R(x,y) & (P(x) <-> P(y)) & x != y)";
    let (sig, f) = parse_formula(text).unwrap();
    let small = brute_force_sat(&f, &sig, 3, &opts(3)).unwrap();
    let mut o = opts(6);
    o.max_size = SizeLimit::Bound;
    let v = decide(&f, &sig, Dialect::Gf1, Engine::Bounded, &o).unwrap();
    let m = v.status.model().expect("satisfiable");
    assert!(models(m, &f).unwrap());
    if small.status.is_unsat() {
        assert!(m.size() >= 4);
    }
}

#[test]
fn alternating_examples() {
    let (sig, f) = parse_formula("relation P/1\nexists x. P(x) & !P(x)").unwrap();
    let v = decide(&f, &sig, Dialect::Tgf1, Engine::Alternating, &opts(3)).unwrap();
    assert_eq!(v.status, SatStatus::Unsat);

    // Kingless: every element has a type-mate.
    let (sig, f) = parse_formula("relation R/2\nforall x. exists y. R(x,y)").unwrap();
    for (nf, _) in to_normal_form(&f, &sig, Dialect::Tgf1).unwrap() {
        let v = sat_alternating(&nf, &opts(3));
        assert!(v.status.is_sat());
    }
}

#[test]
fn decide_rejects_out_of_fragment() {
    let (sig, f) = parse_formula("relation R/2\nforall x y. exists z. R(x,z) & R(y,z)").unwrap();
    let e = decide(&f, &sig, Dialect::Gf1, Engine::Bounded, &opts(2)).unwrap_err();
    assert!(matches!(e, DecisionError::Classification(_)));
}

#[test]
fn fixtures_agree_across_engines() {
    for (name, text, dialect) in FIXTURES {
        let (sig, f) = parse_formula(text).unwrap();
        let brute = brute_force_sat(&f, &sig, 3, &opts(3)).unwrap();
        let bounded = decide(&f, &sig, *dialect, Engine::Bounded, &opts(3)).unwrap();
        assert_eq!(brute.status.is_sat(), bounded.status.is_sat(), "{name}");
        if let Some(m) = bounded.status.model() {
            assert!(models(m, &f).unwrap(), "{name}");
        }
        if *dialect != Dialect::Lgf1 {
            let alt = decide(&f, &sig, *dialect, Engine::Alternating, &opts(3)).unwrap();
            if let SatStatus::Unknown(_) = alt.status {
                continue;
            }
            if bounded.status.is_sat() {
                assert!(alt.status.is_sat(), "{name}");
            }
            if alt.status == SatStatus::Unsat {
                assert!(!brute.status.is_sat(), "{name}");
            }
        }
    }
}

#[test]
fn random_engine_agreement() {
    let mut alt_decided = 0;
    for seed in 0..60u64 {
        let dialect = if seed % 2 == 0 {
            Dialect::Gf1
        } else {
            Dialect::Tgf1
        };
        let (sig, f) = random_formula(seed, dialect);
        let brute = brute_force_sat(&f, &sig, 3, &opts(3)).unwrap();
        let bounded = decide(&f, &sig, dialect, Engine::Bounded, &opts(3)).unwrap();
        assert_eq!(
            brute.status.is_sat(),
            bounded.status.is_sat(),
            "seed {seed}"
        );
        let alt = decide(&f, &sig, dialect, Engine::Alternating, &opts(3)).unwrap();
        match &alt.status {
            SatStatus::Sat(m) => assert!(models(m, &f).unwrap()),
            SatStatus::Unsat => assert!(!brute.status.is_sat(), "seed {seed}"),
            _ => continue,
        }
        alt_decided += 1;
        if bounded.status.is_sat() {
            assert!(alt.status.is_sat(), "seed {seed}");
        }
    }
    assert!(alt_decided > 30);
}

#[test]
fn memo_off_never_flips_a_verdict() {
    for seed in 100..130u64 {
        let (sig, f) = random_formula(seed, Dialect::Tgf1);
        let on = decide(&f, &sig, Dialect::Tgf1, Engine::Alternating, &opts(3)).unwrap();
        let mut o = opts(3);
        o.memo = false;
        let off = decide(&f, &sig, Dialect::Tgf1, Engine::Alternating, &o).unwrap();
        if matches!(on.status, SatStatus::Unknown(_)) || matches!(off.status, SatStatus::Unknown(_))
        {
            continue;
        }
        assert_eq!(on.status.label(), off.status.label(), "seed {seed}");
    }
}

#[test]
fn budget_exhaustion_is_unknown() {
    let (sig, f) = parse_formula("relation R/2\nforall x. exists y. R(x,y) & !R(y,x)").unwrap();
    let mut o = opts(3);
    o.budget_nodes = 3;
    let v = brute_force_sat(&f, &sig, 3, &o).unwrap();
    assert!(matches!(v.status, SatStatus::Unknown(_)));
}
