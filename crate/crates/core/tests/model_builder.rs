mod common;

use std::collections::BTreeSet;

use common::{random_formula, FIXTURES};
use guardedsat::model_builder::{
    build_court, construction_bound, find_kings, gaifman_triangles, size_bound, shrink_model,
    BuildError, SizeBound,
};
use guardedsat::structures::{double, kings, parse_structure};
use guardedsat::{
    models, parse_formula, sat_bounded, to_normal_form, Dialect, NormalForm, Options, SizeLimit,
    Structure,
};

fn first_nf(text: &str, dialect: Dialect) -> NormalForm {
    let (sig, f) = parse_formula(text).unwrap();
    to_normal_form(&f, &sig, dialect).unwrap().next().unwrap().0
}

fn cycle(nf: &NormalForm, n: usize) -> Structure {
    let mut s = Structure::new(nf.signature.clone(), n);
    for i in 0..n {
        s.insert("R", vec![i, (i + 1) % n]);
    }
    s
}

#[test]
fn bound_arithmetic() {
    assert_eq!(
        size_bound(Dialect::Gf1, 3),
        SizeBound::Finite(3 * 3 * 2 * 8)
    );
    assert_eq!(
        size_bound(Dialect::Tgf1NoEq, 4),
        SizeBound::Finite(3 * 4 * 3 * 16)
    );
    assert_eq!(
        size_bound(Dialect::Lgf1, 3),
        SizeBound::Finite(4 * 3 * 3 * 2 * 8)
    );
    // 2 + 2·2 + 3·2·2^(2^8) overflows u128.
    assert_eq!(size_bound(Dialect::Tgf1, 2), SizeBound::Astronomical);
    assert_eq!(size_bound(Dialect::Tgf1, 1), SizeBound::Finite(2));
}

#[test]
fn four_cycle_gf1() {
    let nf = first_nf("relation R/2\nforall x. exists y. R(x,y)", Dialect::Gf1);
    let s = cycle(&nf, 4);
    let out = shrink_model(&s, &nf, Dialect::Gf1).unwrap();
    assert!(out.verified);
    assert!(models(&out.structure, &nf.to_formula()).unwrap());
    assert!(out.within_bound());
    let n = nf.size_n as u128;
    assert!((out.structure.size() as u128) <= 3 * n * (n - 1) * (1u128 << n));
    assert!(out.plan.doubled && out.plan.kings.is_empty());
}

#[test]
fn lgf_triangle_free_stress_case() {
    let text = "relation R/2\n(forall x y z. R(x,y) & R(y,z) & R(z,x) -> false) & forall x. exists y. R(x,y)";
    let nf = first_nf(text, Dialect::Lgf1);
    let s = cycle(&nf, 4);
    assert!(models(&s, &nf.to_formula()).unwrap());
    let out = shrink_model(&s, &nf, Dialect::Lgf1).unwrap();
    assert!(out.verified);
    assert!(out.within_bound());
    let r_triangles = (0..out.structure.size()).any(|a| {
        (0..out.structure.size()).any(|b| {
            (0..out.structure.size()).any(|c| {
                out.structure.holds("R", &[a, b])
                    && out.structure.holds("R", &[b, c])
                    && out.structure.holds("R", &[c, a])
            })
        })
    });
    assert!(!r_triangles);
    assert!(gaifman_triangles(&out.structure).is_empty());
    assert_eq!(out.plan.copies, 4);
}

#[test]
fn trivial_witnesses_collapse_to_one_element() {
    let nf = first_nf("relation P/1\nforall x. P(x)", Dialect::Gf1);
    let mut s = Structure::new(nf.signature.clone(), 3);
    for e in 0..3 {
        s.insert("P", vec![e]);
    }
    let out = shrink_model(&s, &nf, Dialect::Gf1).unwrap();
    assert!(out.verified && out.within_bound());
    assert_eq!(out.structure.size(), 1);
}

#[test]
fn non_models_are_rejected() {
    let nf = first_nf("relation R/2\nforall x. exists y. R(x,y)", Dialect::Gf1);
    let s = Structure::new(nf.signature.clone(), 2);
    assert_eq!(
        shrink_model(&s, &nf, Dialect::Gf1).unwrap_err(),
        BuildError::NotAModel
    );
    assert_eq!(build_court(&s, &nf).unwrap_err(), BuildError::NotAModel);
}

#[test]
fn kings_examples() {
    let s = parse_structure(
        "structure\nuniverse: a b\nrel P/1: (a)\nrel Q/1:\nend\n",
        None,
    )
    .unwrap();
    assert_eq!(find_kings(&s), BTreeSet::from([0, 1]));
    let s = parse_structure("structure\nuniverse: a b\nrel P/1:\nend\n", None).unwrap();
    assert!(find_kings(&s).is_empty());
    let s = parse_structure(
        "structure\nuniverse: a b c\nrel P/1: (a)\nrel R/2: (a,b) (b,c)\nend\n",
        None,
    )
    .unwrap();
    assert!(kings(&double(&s, false).unwrap()).is_empty());
    assert!(kings(&double(&s, true).unwrap()).is_empty());
}

#[test]
fn court_examples() {
    let nf = first_nf("relation R/2\nforall x. exists y. R(x,y)", Dialect::Gf1);
    assert_eq!(build_court(&cycle(&nf, 3), &nf).unwrap(), None);

    // One king (the only P element) whose witness is element 1.
    let nf = first_nf(
        "relation P/1 relation R/2\nforall x. exists y. R(x,y)",
        Dialect::Gf1,
    );
    let mut s = Structure::new(nf.signature.clone(), 3);
    s.insert("P", vec![0]);
    s.insert("R", vec![0, 1]);
    s.insert("R", vec![1, 2]);
    s.insert("R", vec![2, 1]);
    let court = build_court(&s, &nf).unwrap().unwrap();
    assert_eq!(court.size(), 2);
    assert!(court.holds("P", &[0]) && court.holds("R", &[0, 1]));
}

#[test]
fn kings_survive_in_tgf1() {
    let (_, text, _) = FIXTURES.iter().find(|x| x.0 == "two-kings").unwrap();
    let nf = first_nf(text, Dialect::Tgf1);
    let opts = Options::default();
    let model = sat_bounded(&nf, 4, &opts)
        .unwrap()
        .status
        .model()
        .unwrap()
        .clone();
    let out = shrink_model(&model, &nf, Dialect::Tgf1).unwrap();
    assert!(out.verified);
    let royal =
        |s: &Structure| -> BTreeSet<_> { kings(s).into_iter().map(|e| s.one_type(e)).collect() };
    assert_eq!(royal(&out.structure), royal(&model));
    assert!(!out.plan.doubled);
}

#[test]
fn shrink_is_deterministic() {
    let nf = first_nf(
        "relation P/1 relation R/2\nforall x. exists y. R(x,y) & (P(x) <-> !P(y))",
        Dialect::Gf1,
    );
    let mut s = cycle(&nf, 4);
    s.insert("P", vec![0]);
    s.insert("P", vec![2]);
    let a = shrink_model(&s, &nf, Dialect::Gf1).unwrap();
    let b = shrink_model(&s, &nf, Dialect::Gf1).unwrap();
    assert_eq!(a.structure, b.structure);
    assert_eq!(a.plan, b.plan);
    assert!(a.verified);
}

#[test]
fn constants_skip_doubling() {
    let nf = first_nf(
        "constant c relation R/2\n(forall x. exists y. R(x,y)) & R(c,c)",
        Dialect::Gf1,
    );
    let s = sat_bounded(&nf, 3, &Options::default())
        .unwrap()
        .status
        .model()
        .unwrap()
        .clone();
    assert!(!s.constants().is_empty());
    let out = shrink_model(&s, &nf, Dialect::Gf1).unwrap();
    assert!(out.verified && !out.plan.doubled);
    assert_eq!(
        shrink_model(&s, &nf, Dialect::Lgf1).unwrap_err(),
        BuildError::ConstantsUnsupported(Dialect::Lgf1)
    );
}

#[test]
fn random_corpus_shrinks_within_bounds() {
    let opts = Options {
        max_size: SizeLimit::Fixed(4),
        ..Options::default()
    };
    let mut checked = 0;
    for seed in 0..90u64 {
        let dialect = [Dialect::Gf1, Dialect::Tgf1, Dialect::Tgf1NoEq][(seed % 3) as usize];
        let (sig, f) = random_formula(seed, dialect);
        for (nf, _) in to_normal_form(&f, &sig, dialect).unwrap() {
            let Some(model) = sat_bounded(&nf, 4, &opts).unwrap().status.model().cloned() else {
                continue;
            };
            let out =
                shrink_model(&model, &nf, dialect).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert!(out.verified, "seed {seed}");
            assert!(out.within_bound(), "seed {seed}");
            if let Some(b) = construction_bound(&nf, dialect) {
                if dialect != Dialect::Tgf1 {
                    assert!(out.structure.size() as u128 <= b, "seed {seed}");
                }
            }
            checked += 1;
        }
    }
    assert!(checked > 50);
}
