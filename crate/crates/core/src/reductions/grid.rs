use crate::structures::Structure;
use crate::syntax::{Formula, Signature, Term};

use super::lambda::{bit_vars, build_lambda, LambdaKind};
use super::tiling::Tiling;
use super::{BitTuple, ReductionError, TilingSystem};

fn atom(rel: &str, args: Vec<Term>) -> Formula {
    Formula::atom(rel, args)
}

fn vars(head: &[&str], bits: &[&[String]]) -> Vec<Term> {
    let mut out: Vec<Term> = head.iter().map(|v| Term::var(v)).collect();
    for b in bits {
        out.extend(b.iter().map(|v| Term::var(v)));
    }
    out
}

fn consts(head: &[&str], c: &str, n: usize) -> Vec<Term> {
    let mut out: Vec<Term> = head.iter().map(|v| Term::var(v)).collect();
    out.extend((0..n).map(|_| Term::constant(c)));
    out
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Encodes "𝒯 tiles the 2^(2^n) × 2^(2^n) torus" as a TGF₁ sentence with the
/// constants c0 and c1 as bits. Each element carries two coordinates whose
/// binary digits are indexed by n-bit tuples.
pub fn encode_grid_tgf1_const(
    t: &TilingSystem,
    n: usize,
) -> Result<(Signature, Formula), ReductionError> {
    t.validate()?;
    if n == 0 {
        return Err(ReductionError::ZeroWidth);
    }
    let mut sig = Signature::new()
        .with_relation("Z", 1)
        .with_relation("O", 1)
        .with_relation("G", 2 + 2 * n)
        .with_relation("H", 2)
        .with_relation("V", 2)
        .with_relation("Equal", 2)
        .with_constant("c0")
        .with_constant("c1");
    for d in ["H", "V"] {
        sig.add_relation(&format!("B{d}"), n + 1);
        for r in ["Tail", "Pivot", "Head"] {
            sig.add_relation(&format!("{r}{d}"), n + 1);
        }
        sig.add_relation(&format!("EqUpTo{d}"), n + 2);
    }
    for c in &t.colors {
        sig.add_relation(&format!("D_{c}"), 1);
    }
    let (u, v) = (bit_vars("u", n), bit_vars("v", n));
    let z2 = bit_vars("z", 2 * n);
    let mut parts = vec![Formula::conj([
        atom("Z", vec![Term::constant("c0")]),
        Formula::not(atom("O", vec![Term::constant("c0")])),
        atom("O", vec![Term::constant("c1")]),
        Formula::not(atom("Z", vec![Term::constant("c1")])),
    ])];

    // G holds of any two elements followed by 2n bits.
    parts.push(Formula::forall(
        &["x", "y"],
        Formula::conj((0..=2 * n).map(|i| {
            let mut args = vec![Term::var("x"), Term::var("y")];
            args.extend((0..2 * n).map(|j| Term::constant(if j < i { "c1" } else { "c0" })));
            atom("G", args)
        })),
    ));
    let mut swapped = z2.clone();
    swapped.swap(0, 1);
    let mut rotated = z2[1..].to_vec();
    rotated.push(z2[0].clone());
    let xyz: Vec<String> = names(&["x", "y"])
        .into_iter()
        .chain(z2.iter().cloned())
        .collect();
    parts.push(Formula::forall(
        &xyz,
        Formula::implies(
            atom("G", vars(&["x", "y"], &[&z2])),
            Formula::conj([
                atom("G", vars(&["x", "y"], &[&swapped])),
                atom("G", vars(&["x", "y"], &[&rotated])),
            ]),
        ),
    ));

    let xu: Vec<String> = names(&["x"]).into_iter().chain(u.iter().cloned()).collect();
    let xuv: Vec<String> = xu.iter().cloned().chain(v.iter().cloned()).collect();
    let xyu: Vec<String> = names(&["x", "y"])
        .into_iter()
        .chain(u.iter().cloned())
        .collect();
    let xyuv: Vec<String> = xyu.iter().cloned().chain(v.iter().cloned()).collect();
    let next = build_lambda(LambdaKind::Next, n, &u, &v)?;
    let guard_xu = || atom("G", vars(&["x", "x"], &[&u, &u]));
    let guard_xuv = || atom("G", vars(&["x", "x"], &[&u, &v]));
    for d in ["H", "V"] {
        let (b, tail, pivot, head) = (
            format!("B{d}"),
            format!("Tail{d}"),
            format!("Pivot{d}"),
            format!("Head{d}"),
        );
        let on = |r: &str, x: &str, bits: &[String]| atom(r, vars(&[x], &[bits]));
        parts.push(Formula::forall(
            &xu,
            Formula::implies(
                guard_xu(),
                Formula::exactly_one(vec![
                    on(&tail, "x", &u),
                    on(&pivot, "x", &u),
                    on(&head, "x", &u),
                ]),
            ),
        ));
        let low = |r: &str| atom(r, consts(&["x"], "c0", n));
        parts.push(Formula::forall(
            &["x"],
            Formula::implies(Formula::not(low(&b)), low(&pivot)),
        ));
        parts.push(Formula::forall(
            &["x"],
            Formula::implies(low(&b), low(&tail)),
        ));
        let rule = |pre: Vec<Formula>, post: Formula| {
            Formula::forall(
                &xuv,
                Formula::implies(guard_xuv(), Formula::implies(Formula::conj(pre), post)),
            )
        };
        parts.push(rule(
            vec![next.clone(), on(&b, "x", &v), on(&tail, "x", &u)],
            on(&tail, "x", &v),
        ));
        parts.push(rule(
            vec![
                next.clone(),
                Formula::not(on(&b, "x", &v)),
                on(&tail, "x", &u),
            ],
            on(&pivot, "x", &v),
        ));
        parts.push(rule(
            vec![
                next.clone(),
                Formula::disj([on(&pivot, "x", &u), on(&head, "x", &u)]),
            ],
            on(&head, "x", &v),
        ));
    }

    // The origin, and neighbours of every element.
    let no_bits = |r: &str| Formula::not(Formula::exists(&u, atom(r, vars(&["x"], &[&u]))));
    let origin = || Formula::conj([no_bits("BH"), no_bits("BV")]);
    parts.push(Formula::exists(&["x"], origin()));
    parts.push(Formula::forall(
        &["x"],
        Formula::conj([
            Formula::exists(&["y"], atom("H", vars(&["x", "y"], &[]))),
            Formula::exists(&["y"], atom("V", vars(&["x", "y"], &[]))),
        ]),
    ));
    for (d, other) in [("H", "V"), ("V", "H")] {
        let b = |x: &str| atom(&format!("B{d}"), vars(&[x], &[&u]));
        let ob = |x: &str| atom(&format!("B{other}"), vars(&[x], &[&u]));
        let pos = |r: &str| atom(&format!("{r}{d}"), vars(&["x"], &[&u]));
        parts.push(Formula::forall(
            &xyu,
            Formula::implies(
                atom("G", vars(&["x", "y"], &[&u, &u])),
                Formula::implies(
                    atom(d, vars(&["x", "y"], &[])),
                    Formula::conj([
                        Formula::iff(ob("x"), ob("y")),
                        Formula::implies(pos("Tail"), Formula::not(b("y"))),
                        Formula::implies(pos("Pivot"), b("y")),
                        Formula::implies(pos("Head"), Formula::iff(b("y"), b("x"))),
                    ]),
                ),
            ),
        ));
    }

    // Equal links elements with the same coordinates.
    for d in ["H", "V"] {
        let (b, eq) = (format!("B{d}"), format!("EqUpTo{d}"));
        parts.push(Formula::forall(
            &["x", "y"],
            Formula::implies(
                Formula::iff(
                    atom(&b, consts(&["x"], "c0", n)),
                    atom(&b, consts(&["y"], "c0", n)),
                ),
                atom(&eq, consts(&["x", "y"], "c0", n)),
            ),
        ));
        parts.push(Formula::forall(
            &xyuv,
            Formula::implies(
                atom("G", vars(&["x", "y"], &[&u, &v])),
                Formula::implies(
                    Formula::conj([
                        next.clone(),
                        Formula::iff(atom(&b, vars(&["x"], &[&v])), atom(&b, vars(&["y"], &[&v]))),
                        atom(&eq, vars(&["x", "y"], &[&u])),
                    ]),
                    atom(&eq, vars(&["x", "y"], &[&v])),
                ),
            ),
        ));
    }
    parts.push(Formula::forall(
        &["x", "y"],
        Formula::implies(
            Formula::conj([
                atom("EqUpToH", consts(&["x", "y"], "c1", n)),
                atom("EqUpToV", consts(&["x", "y"], "c1", n)),
            ]),
            atom("Equal", vars(&["x", "y"], &[])),
        ),
    ));

    // The tiling itself.
    let dc = |c: usize, x: &str| atom(&format!("D_{}", t.colors[c]), vec![Term::var(x)]);
    let k = t.colors.len();
    parts.push(Formula::forall(
        &["x"],
        Formula::exactly_one((0..k).map(|c| dc(c, "x")).collect()),
    ));
    for (rel, pairs) in [("H", &t.hor), ("V", &t.ver)] {
        parts.push(Formula::forall(
            &["x", "y"],
            Formula::implies(
                atom(rel, vars(&["x", "y"], &[])),
                Formula::disj(
                    pairs
                        .iter()
                        .map(|&(a, b)| Formula::conj([dc(a, "x"), dc(b, "y")])),
                ),
            ),
        ));
    }
    parts.push(Formula::forall(
        &["x", "y"],
        Formula::implies(
            atom("Equal", vars(&["x", "y"], &[])),
            Formula::conj((0..k).map(|c| Formula::iff(dc(c, "x"), dc(c, "y")))),
        ),
    ));
    parts.push(Formula::forall(
        &["x"],
        Formula::implies(origin(), dc(t.initial, "x")),
    ));
    Ok((sig, Formula::conj(parts)))
}

/// The model of the grid encoding with one element per cell of the
/// 2^(2^n) torus; cells (0,0) and (1,0) double as the bits zero and one.
pub fn grid_model(t: &TilingSystem, n: usize, f: &Tiling) -> Result<Structure, ReductionError> {
    let (sig, _) = encode_grid_tgf1_const(t, n)?;
    let digits = 1usize << n;
    if digits > 4 {
        return Err(ReductionError::Ceiling(digits as u64));
    }
    let m = 1usize << digits;
    if f.len() != m || f.iter().any(|col| col.len() != m) {
        return Err(ReductionError::Malformed(format!("tiling is not {m}×{m}")));
    }
    let el = |p: usize, q: usize| q * m + p;
    let mut s = Structure::new(sig, m * m).with_names(
        (0..m * m)
            .map(|e| format!("g{}_{}", e % m, e / m))
            .collect(),
    );
    let (zero, one) = (el(0, 0), el(1 % m, 0));
    s.insert("Z", vec![zero]);
    s.insert("O", vec![one]);
    s.set_constant("c0", zero);
    s.set_constant("c1", one);
    let bits =
        |b: &BitTuple| -> Vec<usize> { b.0.iter().map(|&x| if x { one } else { zero }).collect() };
    let idx: Vec<BitTuple> = BitTuple::all(n).collect();
    for x in 0..m * m {
        for y in 0..m * m {
            for b in BitTuple::all(2 * n) {
                let mut tuple = vec![x, y];
                tuple.extend(bits(&b));
                s.insert("G", tuple);
            }
        }
    }
    for p in 0..m {
        for q in 0..m {
            let e = el(p, q);
            s.insert("H", vec![e, el((p + 1) % m, q)]);
            s.insert("V", vec![e, el(p, (q + 1) % m)]);
            s.insert(&format!("D_{}", t.colors[f[p][q]]), vec![e]);
            for (d, coord) in [("H", p), ("V", q)] {
                for ib in &idx {
                    let i = ib.value() as usize;
                    let mut tuple = vec![e];
                    tuple.extend(bits(ib));
                    if (coord >> i) & 1 == 1 {
                        s.insert(&format!("B{d}"), tuple.clone());
                    }
                    let below_ones = (0..i).all(|j| (coord >> j) & 1 == 1);
                    let pos = match (below_ones, (coord >> i) & 1 == 1) {
                        (true, true) => "Tail",
                        (true, false) => "Pivot",
                        _ => "Head",
                    };
                    s.insert(&format!("{pos}{d}"), tuple);
                }
            }
        }
    }
    for a in 0..m * m {
        for b in 0..m * m {
            let ca = [a % m, a / m];
            let cb = [b % m, b / m];
            for (d, k) in [("H", 0), ("V", 1)] {
                for ib in &idx {
                    let i = ib.value() as usize;
                    let mask = (1usize << (i + 1)) - 1;
                    if ca[k] & mask == cb[k] & mask {
                        let mut tuple = vec![a, b];
                        tuple.extend(bits(ib));
                        s.insert(&format!("EqUpTo{d}"), tuple);
                    }
                }
            }
            if ca == cb {
                s.insert("Equal", vec![a, b]);
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::super::tiling_oracle;
    use super::*;
    use crate::fragments::classify;
    use crate::structures::models;

    #[test]
    fn shape_and_certificate() {
        let t = TilingSystem::new(&["c"], 0, &[(0, 0)], &[(0, 0)]);
        let (sig, f) = encode_grid_tgf1_const(&t, 1).unwrap();
        assert_eq!(sig.arity("BH"), Some(2));
        assert_eq!(sig.arity("G"), Some(4));
        let r = classify(&f);
        assert!(r.in_tgf1 && r.uses_constants && !r.in_gf);
        let tiling = tiling_oracle(&t, 4, 10_000).unwrap().unwrap();
        let s = grid_model(&t, 1, &tiling).unwrap();
        assert!(models(&s, &f).unwrap());
    }

    #[test]
    fn striped_certificate() {
        let t = TilingSystem::new(&["a", "b"], 0, &[(0, 1), (1, 0)], &[(0, 0), (1, 1)]);
        let (_, f) = encode_grid_tgf1_const(&t, 1).unwrap();
        let tiling = tiling_oracle(&t, 4, 100_000).unwrap().unwrap();
        assert!(models(&grid_model(&t, 1, &tiling).unwrap(), &f).unwrap());
    }
}
