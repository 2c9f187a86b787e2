use std::fs;
use std::path::{Path, PathBuf};

use guardedsat::reductions::{parse_tiling, tiling_oracle};
use guardedsat::structures::parse_structure;
use guardedsat::{models, parse_formula};
use guardedsat_cli::{run, EXIT_BUDGET, EXIT_FALSE, EXIT_OK, EXIT_USAGE};
use tempfile::TempDir;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("guardedsat").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn field<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(": "))
}

fn put(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const ALTERNATE: &str = "relation P/1\nrelation R/2\n\
(exists x. P(x)) & (forall x. P(x) -> exists y. R(x,y) & !P(y)) & (forall x. !P(x) -> exists y. R(x,y) & P(y))\n";

const CONTRADICTION: &str = "relation P/1\n(exists x. P(x)) & (forall x. !P(x))\n";

const STRIPES: &str = "colors: a b\ninitial: a\nhor: (a,b) (b,a)\nver: (a,a) (b,b)\n";

const ONE_WAY: &str = "colors: a b\ninitial: a\nhor: (a,b)\nver: (a,a) (b,b)\n";

#[test]
fn classify_prints_flags() {
    let dir = TempDir::new().unwrap();
    let f = put(
        &dir,
        "f.gf",
        "relation P/1\nrelation Q/1\nrelation R/2\nforall x y. P(x) & Q(y) -> R(x,y)\n",
    );
    let (code, out, _) = call(&["classify", s(&f)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&out, "in_gf"), Some("false"));
    assert_eq!(field(&out, "in_tgf1"), Some("true"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(call(&["sat", "/nonexistent/file"]).0, EXIT_USAGE);
    let bad = put(&dir, "bad.gf", "forall x. P(x)\n");
    let (code, _, err) = call(&["sat", s(&bad)]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("error"));
    let f = put(&dir, "f.gf", ALTERNATE);
    assert_eq!(call(&["sat", s(&f), "--engine", "magic"]).0, EXIT_USAGE);
    assert_eq!(call(&["sat", s(&f), "--budget-nodes", "0"]).0, EXIT_USAGE);
    assert_eq!(call(&["sat", s(&f), "--max-size", "lots"]).0, EXIT_USAGE);
    let outside = put(
        &dir,
        "o.gf",
        "relation R/3\nforall x y z. R(x,y,z) | exists u v. R(x,u,v) & R(y,u,v)\n",
    );
    assert_eq!(call(&["sat", s(&outside)]).0, EXIT_USAGE);
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("sat"));
}

#[test]
fn sat_certificate_checks() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "f.gf", ALTERNATE);
    for engine in ["brute", "bounded", "alternating"] {
        let cert = dir.path().join(format!("{engine}.st"));
        let (code, out, _) = call(&[
            "sat",
            s(&f),
            "--engine",
            engine,
            "--max-size",
            "3",
            "-o",
            s(&cert),
        ]);
        assert_eq!(code, EXIT_OK, "{engine}");
        assert_eq!(field(&out, "status"), Some("SAT"));
        assert_eq!(field(&out, "max-size"), Some("3"));
        assert_eq!(field(&out, "budget-nodes"), Some("10000000"));
        let (code, out, _) = call(&["check", "--formula", s(&f), "--structure", s(&cert)]);
        assert_eq!(code, EXIT_OK, "{engine}");
        assert_eq!(field(&out, "model"), Some("true"));
    }
}

#[test]
fn unsat_and_budget_exit_codes() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "f.gf", CONTRADICTION);
    let (code, out, _) = call(&["sat", s(&f)]);
    assert_eq!(code, EXIT_FALSE);
    assert_eq!(field(&out, "status"), Some("UNSAT_UP_TO"));
    let (code, out, _) = call(&[
        "sat",
        s(&f),
        "--engine",
        "alternating",
        "--max-size",
        "bound",
    ]);
    assert_eq!(code, EXIT_FALSE);
    assert_eq!(field(&out, "status"), Some("UNSAT"));

    let g = put(&dir, "g.gf", ALTERNATE);
    let (code, out, _) = call(&[
        "sat",
        s(&g),
        "--engine",
        "alternating",
        "--budget-nodes",
        "1",
    ]);
    assert_eq!(code, EXIT_BUDGET);
    assert_eq!(field(&out, "status"), Some("UNKNOWN"));
    assert_eq!(field(&out, "budget-nodes"), Some("1"));
}

#[test]
fn check_rejects_non_model() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "f.gf", ALTERNATE);
    let st = put(
        &dir,
        "s.st",
        "structure\nuniverse: a\nrel P/1: (a)\nrel R/2: (a,a)\nend\n",
    );
    let (code, out, _) = call(&["check", "--formula", s(&f), "--structure", s(&st)]);
    assert_eq!(code, EXIT_FALSE);
    assert_eq!(field(&out, "model"), Some("false"));
}

#[test]
fn shrink_produces_a_model_within_bound() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "f.gf", ALTERNATE);
    let universe: Vec<String> = (0..9).map(|i| format!("e{i}")).collect();
    let p: Vec<String> = universe
        .iter()
        .step_by(2)
        .map(|e| format!("({e})"))
        .collect();
    let r: Vec<String> = (0..9)
        .map(|i| format!("(e{i},e{})", (i + 1) % 10))
        .collect();
    let text = format!(
        "structure\nuniverse: {} e9\nrel P/1: {}\nrel R/2: {} (e9,e0)\nend\n",
        universe.join(" "),
        p.join(" "),
        r.join(" ")
    );
    let big = put(&dir, "big.st", &text);
    let (code, _, err) = call(&["check", "--formula", s(&f), "--structure", s(&big)]);
    assert_eq!(code, EXIT_OK, "{err}");
    let small = dir.path().join("small.st");
    let (code, out, err) = call(&[
        "shrink",
        "--formula",
        s(&f),
        "--structure",
        s(&big),
        "-o",
        s(&small),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(field(&out, "within-bound"), Some("true"));
    assert_eq!(field(&out, "verified"), Some("true"));
    let (sig, formula) = parse_formula(ALTERNATE).unwrap();
    let m = parse_structure(&fs::read_to_string(&small).unwrap(), Some(&sig)).unwrap();
    assert!(models(&m, &formula).unwrap());

    let (code, _, _) = call(&[
        "shrink",
        "--formula",
        s(&f),
        "--structure",
        s(&put(&dir, "n.st", "structure\nuniverse: a\nend\n")),
        "-o",
        s(&small),
    ]);
    assert_eq!(code, EXIT_FALSE);
}

#[test]
fn normalize_lists_candidates() {
    let dir = TempDir::new().unwrap();
    let f = put(&dir, "f.gf", "relation P/1\nrelation R/2\n(forall x. exists y. R(x,y)) & (exists x. P(x) & !exists y. R(x,y) & P(y))\n");
    let (code, first, _) = call(&["normalize", s(&f)]);
    assert_eq!(code, EXIT_OK);
    let (code, all, _) = call(&["normalize", s(&f), "--all"]);
    assert_eq!(code, EXIT_OK);
    let k: usize = field(&all, "candidates").unwrap().parse().unwrap();
    assert_eq!(all.matches("candidate: ").count(), k);
    assert_eq!(first.matches("candidate: ").count(), 1);
    assert!(first.contains("relation _nf"));
}

#[test]
fn tiling_pipeline_matches_oracle() {
    let dir = TempDir::new().unwrap();
    for (text, tiles) in [(STRIPES, true), (ONE_WAY, false)] {
        let spec = put(&dir, "t.tiling", text);
        let (code, out, _) = call(&["oracle", "tiling", "--spec", s(&spec), "-m", "2"]);
        assert_eq!(code == EXIT_OK, tiles);
        assert_eq!(
            field(&out, "tiles"),
            Some(if tiles { "true" } else { "false" })
        );
        assert_eq!(
            tiling_oracle(&parse_tiling(text).unwrap(), 2, 1_000_000)
                .unwrap()
                .is_some(),
            tiles
        );

        let enc = dir.path().join("t.gf");
        let (code, out, _) = call(&[
            "encode",
            "tiling",
            "--spec",
            s(&spec),
            "-n",
            "1",
            "-o",
            s(&enc),
        ]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(field(&out, "uniform_sentence_shape"), Some("true"));
        let cert = dir.path().join("t.st");
        let (code, _, _) = call(&["sat", s(&enc), "-o", s(&cert)]);
        assert_eq!(code == EXIT_OK, tiles);
        if tiles {
            assert_eq!(
                call(&["check", "--formula", s(&enc), "--structure", s(&cert)]).0,
                EXIT_OK
            );
        }
    }
    let spec = put(&dir, "t.tiling", STRIPES);
    assert_eq!(
        call(&["encode", "tiling", "--spec", s(&spec), "-o", "x"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        call(&["oracle", "tiling", "--spec", s(&spec)]).0,
        EXIT_USAGE
    );
}

#[test]
fn machine_pipeline_matches_oracle() {
    let dir = TempDir::new().unwrap();
    let accept = "states: q0 acc rej\naccepting: acc\nrejecting: rej\nexistential: q0\nalphabet: _ x\ninput: x\n\
move q0 _ -> acc _ R\nmove q0 _ -> rej _ R\nmove q0 x -> rej x R\nmove q0 x -> acc x L\n";
    let reject = accept.replace("existential", "universal");
    for (text, accepts) in [(accept.to_string(), true), (reject, false)] {
        let spec = put(&dir, "m.atm", &text);
        let (code, out, _) = call(&["oracle", "atm", "--spec", s(&spec)]);
        assert_eq!(code == EXIT_OK, accepts);
        assert_eq!(
            field(&out, "verdict"),
            Some(if accepts { "accepts" } else { "rejects" })
        );
        for (kind, dialect) in [("atm", "tgf1"), ("atm-const", "gf1")] {
            let enc = dir.path().join("m.gf");
            let (code, out, _) = call(&["encode", kind, "--spec", s(&spec), "-o", s(&enc)]);
            assert_eq!(code, EXIT_OK);
            assert_eq!(field(&out, "encoding"), Some(kind));
            let (code, out, _) = call(&["sat", s(&enc), "--dialect", dialect, "--max-size", "5"]);
            assert_eq!(code == EXIT_OK, accepts, "{kind}: {out}");
        }
        assert_eq!(
            call(&["encode", "atm", "--spec", s(&spec), "-n", "3", "-o", "x"]).0,
            EXIT_USAGE
        );
    }
}
