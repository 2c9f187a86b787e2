use crate::structures::Structure;
use crate::syntax::{Formula, Signature, Term};

use super::lambda::{bit_vars, build_lambda, LambdaKind};
use super::{BitTuple, ReductionError, TilingSystem};

/// A colouring `f[p][q]` of the m×m torus; p is the horizontal coordinate.
pub type Tiling = Vec<Vec<usize>>;

/// Backtracking search for a tiling of the m×m torus with f(0,0) = c₀.
/// Gives up with `Ceiling` after `max_steps` assignments.
pub fn tiling_oracle(
    t: &TilingSystem,
    m: usize,
    max_steps: u64,
) -> Result<Option<Tiling>, ReductionError> {
    t.validate()?;
    if m == 0 {
        return Err(ReductionError::Malformed(
            "grid side must be at least 1".into(),
        ));
    }
    let mut f = vec![vec![usize::MAX; m]; m];
    let mut steps = 0u64;
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|q| (0..m).map(move |p| (p, q))).collect();
    fn fits(t: &TilingSystem, f: &Tiling, m: usize, p: usize, q: usize, c: usize) -> bool {
        let val = |a: usize, b: usize| match (a, b) == (p, q) {
            true => Some(c),
            false => (f[a][b] != usize::MAX).then_some(f[a][b]),
        };
        let (left, right, down, up) = ((p + m - 1) % m, (p + 1) % m, (q + m - 1) % m, (q + 1) % m);
        val(left, q).is_none_or(|l| t.hor_ok(l, c))
            && val(right, q).is_none_or(|r| t.hor_ok(c, r))
            && val(p, down).is_none_or(|d| t.ver_ok(d, c))
            && val(p, up).is_none_or(|u| t.ver_ok(c, u))
    }
    fn go(
        t: &TilingSystem,
        f: &mut Tiling,
        cells: &[(usize, usize)],
        i: usize,
        m: usize,
        steps: &mut u64,
        max: u64,
    ) -> Result<bool, ReductionError> {
        let Some(&(p, q)) = cells.get(i) else {
            return Ok(true);
        };
        let options: Vec<usize> = if i == 0 {
            vec![t.initial]
        } else {
            (0..t.colors.len()).collect()
        };
        for c in options {
            *steps += 1;
            if *steps > max {
                return Err(ReductionError::Ceiling(max));
            }
            if fits(t, f, m, p, q, c) {
                f[p][q] = c;
                if go(t, f, cells, i + 1, m, steps, max)? {
                    return Ok(true);
                }
                f[p][q] = usize::MAX;
            }
        }
        Ok(false)
    }
    Ok(go(t, &mut f, &cells, 0, m, &mut steps, max_steps)?.then_some(f))
}

/// Checks a colouring against the tiling conditions.
pub fn is_tiling(t: &TilingSystem, f: &Tiling) -> bool {
    let m = f.len();
    f[0][0] == t.initial
        && (0..m).all(|p| {
            (0..m).all(|q| {
                t.hor_ok(f[p][q], f[(p + 1) % m][q]) && t.ver_ok(f[p][q], f[p][(q + 1) % m])
            })
        })
}

fn d_name(t: &TilingSystem, c: usize) -> String {
    format!("D_{}", t.colors[c])
}

fn atom(rel: &str, args: &[&String]) -> Formula {
    Formula::atom(rel, args.iter().map(|a| Term::var(a)).collect())
}

fn cat<'a>(parts: &[&'a [String]]) -> Vec<&'a String> {
    parts.iter().flat_map(|p| p.iter()).collect()
}

fn swap_rot<'a>(prefix: &[&'a String], tail: &[&'a String]) -> (Vec<&'a String>, Vec<&'a String>) {
    let mut swapped = prefix.to_vec();
    let mut rotated = prefix.to_vec();
    let mut s = tail.to_vec();
    s.swap(0, 1);
    swapped.extend(s);
    rotated.extend(tail[1..].iter().copied());
    rotated.push(tail[0]);
    (swapped, rotated)
}

/// Encodes "𝒯 tiles the 2^n × 2^n torus" as a uniform GF₁ sentence.
///
/// D_t(x̄,ȳ,w̄) places colour t at (x̄,ȳ) whatever the second half w̄ is.
/// Besides the permutation axioms on w̄, the encoding links second halves
/// whose numbers of ones differ by one, so that the colour of a cell does
/// not depend on which representation a constraint reads.
pub fn encode_tiling_ufgf1(
    t: &TilingSystem,
    n: usize,
) -> Result<(Signature, Formula), ReductionError> {
    t.validate()?;
    if n == 0 {
        return Err(ReductionError::ZeroWidth);
    }
    let k = 4 * n;
    let mut sig = Signature::new()
        .with_relation("Z", 1)
        .with_relation("O", 1)
        .with_relation("N", k);
    for c in 0..t.colors.len() {
        sig.add_relation(&d_name(t, c), k);
    }
    let z = |v: &str| Formula::atom("Z", vec![Term::var(v)]);
    let o = |v: &str| Formula::atom("O", vec![Term::var(v)]);
    let mut parts = Vec::new();

    // Two bits, and N on one tuple per number of ones.
    let (x, y) = ("x".to_string(), "y".to_string());
    let mut start = vec![z("x"), Formula::not(o("x")), o("y"), Formula::not(z("y"))];
    for i in 0..=k {
        let args: Vec<&String> = (0..k).map(|j| if j < i { &y } else { &x }).collect();
        start.push(atom("N", &args));
    }
    parts.push(Formula::exists(&["x", "y"], Formula::conj(start)));

    let u = bit_vars("u", k);
    let uu = cat(&[&u]);
    let (sw, rot) = swap_rot(&[], &uu);
    parts.push(Formula::forall(
        &u,
        Formula::implies(
            atom("N", &uu),
            Formula::conj([atom("N", &sw), atom("N", &rot)]),
        ),
    ));
    parts.push(Formula::forall(
        &u,
        Formula::implies(
            atom("N", &uu),
            Formula::exactly_one(
                (0..t.colors.len())
                    .map(|c| atom(&d_name(t, c), &uu))
                    .collect(),
            ),
        ),
    ));

    let p = bit_vars("p", 2 * n);
    let w = bit_vars("w", 2 * n);
    let w1 = bit_vars("w", 2 * n - 1);
    for c in 0..t.colors.len() {
        let d = d_name(t, c);
        let pw = cat(&[&p, &w]);
        let (sw, rot) = swap_rot(&cat(&[&p]), &cat(&[&w]));
        let mut vars = p.clone();
        vars.extend(w.iter().cloned());
        parts.push(Formula::forall(
            &vars,
            Formula::implies(
                atom(&d, &pw),
                Formula::conj([atom(&d, &sw), atom(&d, &rot)]),
            ),
        ));

        // Second halves (w̄′, p_a) and (w̄′, p_b): for a cell with p_a = 1 and
        // p_b = 0 these differ by one in their number of ones.
        let mut vars = p.clone();
        vars.extend(w1.iter().cloned());
        for a in 0..2 * n {
            for b in 0..2 * n {
                if a == b {
                    continue;
                }
                let lhs = cat(&[&p, &w1, std::slice::from_ref(&p[a])]);
                let rhs = cat(&[&p, &w1, std::slice::from_ref(&p[b])]);
                parts.push(Formula::forall(
                    &vars,
                    Formula::implies(atom(&d, &lhs), atom(&d, &rhs)),
                ));
            }
        }
        // (w₁,w₁,w₂,…) against (w₁,w₂,w₂,…): reaches cells whose coordinates
        // are all zeros or all ones.
        if n >= 2 {
            let mut first = vec![&w1[0], &w1[0]];
            first.extend(w1[1..].iter());
            let mut second = vec![&w1[0], &w1[1], &w1[1]];
            second.extend(w1[2..].iter());
            let lhs = cat(&[&p]).into_iter().chain(first).collect::<Vec<_>>();
            let rhs = cat(&[&p]).into_iter().chain(second).collect::<Vec<_>>();
            parts.push(Formula::forall(
                &vars,
                Formula::implies(atom(&d, &lhs), atom(&d, &rhs)),
            ));
            parts.push(Formula::forall(
                &vars,
                Formula::implies(atom(&d, &rhs), atom(&d, &lhs)),
            ));
        }
    }

    let xs = bit_vars("x", n);
    let ys = bit_vars("y", n);
    let zs = bit_vars("z", n);
    let mut xyz = xs.clone();
    xyz.extend(ys.iter().cloned());
    xyz.extend(zs.iter().cloned());
    let next_h = build_lambda(LambdaKind::NextMod, n, &xs, &zs)?;
    let next_v = build_lambda(LambdaKind::NextMod, n, &ys, &zs)?;
    for c in 0..t.colors.len() {
        let d = d_name(t, c);
        let src = atom(&d, &cat(&[&xs, &ys, &zs, &ys]));
        let right = Formula::disj(
            t.hor
                .iter()
                .filter(|h| h.0 == c)
                .map(|h| atom(&d_name(t, h.1), &cat(&[&zs, &ys, &xs, &ys]))),
        );
        parts.push(Formula::forall(
            &xyz,
            Formula::implies(src.clone(), Formula::implies(next_h.clone(), right)),
        ));
        let up = Formula::disj(
            t.ver
                .iter()
                .filter(|v| v.0 == c)
                .map(|v| atom(&d_name(t, v.1), &cat(&[&xs, &zs, &xs, &ys]))),
        );
        parts.push(Formula::forall(
            &xyz,
            Formula::implies(
                atom(&d, &cat(&[&xs, &ys, &xs, &zs])),
                Formula::implies(next_v.clone(), up),
            ),
        ));
        if c != t.initial {
            let origin = Formula::conj([
                build_lambda(LambdaKind::EqConst(0), n, &xs, &[])?,
                build_lambda(LambdaKind::EqConst(0), n, &ys, &[])?,
                next_h.clone(),
            ]);
            parts.push(Formula::forall(
                &xyz,
                Formula::implies(src, Formula::not(origin)),
            ));
        }
    }
    Ok((sig, Formula::conj(parts)))
}

/// The two-element model of the tiling encoding induced by a tiling of the
/// 2^n × 2^n torus.
pub fn tiling_model(t: &TilingSystem, n: usize, f: &Tiling) -> Result<Structure, ReductionError> {
    let (sig, _) = encode_tiling_ufgf1(t, n)?;
    let m = 1usize << n;
    if f.len() != m || f.iter().any(|col| col.len() != m) {
        return Err(ReductionError::Malformed(format!("tiling is not {m}×{m}")));
    }
    let mut s = Structure::new(sig, 2).with_names(vec!["zero".into(), "one".into()]);
    s.insert("Z", vec![0]);
    s.insert("O", vec![1]);
    for bits in BitTuple::all(4 * n) {
        let tuple: Vec<usize> = bits.0.iter().map(|&b| b as usize).collect();
        let p = BitTuple(bits.0[..n].to_vec()).value() as usize;
        let q = BitTuple(bits.0[n..2 * n].to_vec()).value() as usize;
        s.insert(&d_name(t, f[p][q]), tuple.clone());
        s.insert("N", tuple);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragments::classify;
    use crate::structures::models;

    fn mono() -> TilingSystem {
        TilingSystem::new(&["c0"], 0, &[(0, 0)], &[(0, 0)])
    }

    fn alternating() -> TilingSystem {
        TilingSystem::new(&["a", "b"], 0, &[(0, 1), (1, 0)], &[(0, 0), (1, 1)])
    }

    #[test]
    fn oracle_examples() {
        assert!(tiling_oracle(&mono(), 2, 1000).unwrap().is_some());
        let no_hor = TilingSystem::new(&["c0"], 0, &[], &[(0, 0)]);
        assert!(tiling_oracle(&no_hor, 2, 1000).unwrap().is_none());
        for m in 1..=6 {
            let r = tiling_oracle(&alternating(), m, 1_000_000).unwrap();
            assert_eq!(r.is_some(), m % 2 == 0, "m = {m}");
            if let Some(f) = r {
                assert!(is_tiling(&alternating(), &f));
            }
        }
    }

    #[test]
    fn arities_and_shape() {
        for n in 1..=2 {
            let (sig, f) = encode_tiling_ufgf1(&alternating(), n).unwrap();
            assert_eq!(sig.arity("N"), Some(4 * n));
            assert_eq!(sig.arity("D_a"), Some(4 * n));
            let r = classify(&f);
            assert!(r.in_gf1 && r.uniform_sentence_shape && !r.uses_equality && !r.uses_constants);
        }
    }

    #[test]
    fn constructive_models() {
        for n in 1..=2 {
            let m = 1 << n;
            let f = tiling_oracle(&alternating(), m, 1_000_000)
                .unwrap()
                .unwrap();
            let (_, phi) = encode_tiling_ufgf1(&alternating(), n).unwrap();
            let s = tiling_model(&alternating(), n, &f).unwrap();
            assert!(models(&s, &phi).unwrap(), "n = {n}");
        }
    }
}
