use crate::syntax::{Formula, Term};

use super::ReductionError;

/// The λ helper formulas over bit variables. Variable lists are most
/// significant first; a variable stands for one when `O` holds of it and for
/// zero when `Z` holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaKind {
    /// v̄ = ū + 1, no wraparound.
    Next,
    /// v̄ = ū + 1 mod 2^n.
    NextMod,
    /// ū ≠ v̄.
    Diff,
    /// ū = i.
    EqConst(u64),
    /// ū ≥ i.
    GeqConst(u64),
}

impl LambdaKind {
    pub fn is_binary(self) -> bool {
        matches!(
            self,
            LambdaKind::Next | LambdaKind::NextMod | LambdaKind::Diff
        )
    }
}

/// `prefix{n-1} … prefix0`, most significant first.
pub fn bit_vars(prefix: &str, n: usize) -> Vec<String> {
    (0..n).rev().map(|i| format!("{prefix}{i}")).collect()
}

fn o(t: &str) -> Formula {
    Formula::atom("O", vec![Term::var(t)])
}

fn z(t: &str) -> Formula {
    Formula::atom("Z", vec![Term::var(t)])
}

fn bit(t: &str, one: bool) -> Formula {
    if one {
        o(t)
    } else {
        z(t)
    }
}

/// Builds λ of the given kind. `v` is ignored for the unary kinds.
pub fn build_lambda(
    kind: LambdaKind,
    n: usize,
    u: &[String],
    v: &[String],
) -> Result<Formula, ReductionError> {
    if n == 0 {
        return Err(ReductionError::ZeroWidth);
    }
    if u.len() != n {
        return Err(ReductionError::WidthMismatch {
            expected: n,
            got: u.len(),
        });
    }
    if kind.is_binary() && v.len() != n {
        return Err(ReductionError::WidthMismatch {
            expected: n,
            got: v.len(),
        });
    }
    // Position of bit i (i = 0 least significant) in the lists.
    let at = |i: usize| n - 1 - i;
    Ok(match kind {
        LambdaKind::Next => next(n, u, v),
        LambdaKind::NextMod => {
            let wrap = Formula::conj((0..n).flat_map(|i| [o(&u[i]), z(&v[i])]));
            Formula::disj([next(n, u, v), wrap])
        }
        LambdaKind::Diff => {
            Formula::disj((0..n).map(|i| Formula::not(Formula::iff(o(&u[i]), o(&v[i])))))
        }
        LambdaKind::EqConst(c) => {
            if n < 64 && c >> n != 0 {
                Formula::False
            } else {
                Formula::conj((0..n).map(|i| bit(&u[at(i)], (c >> i) & 1 == 1)))
            }
        }
        LambdaKind::GeqConst(c) => {
            if n < 64 && c >> n != 0 {
                Formula::False
            } else {
                // ū ≥ c iff ū = c, or at some position where c has a zero ū
                // has a one and all higher positions agree with c.
                let agree_above =
                    |p: usize| Formula::conj((p + 1..n).map(|j| bit(&u[at(j)], (c >> j) & 1 == 1)));
                let mut parts = vec![Formula::conj(
                    (0..n).map(|j| bit(&u[at(j)], (c >> j) & 1 == 1)),
                )];
                for p in 0..n {
                    if (c >> p) & 1 == 0 {
                        parts.push(Formula::conj([o(&u[at(p)]), agree_above(p)]));
                    }
                }
                Formula::disj(parts)
            }
        }
    })
}

fn next(n: usize, u: &[String], v: &[String]) -> Formula {
    let at = |i: usize| n - 1 - i;
    Formula::disj((0..n).map(|i| {
        let mut parts = vec![z(&u[at(i)]), o(&v[at(i)])];
        for j in 0..i {
            parts.push(o(&u[at(j)]));
            parts.push(z(&v[at(j)]));
        }
        for j in i + 1..n {
            parts.push(Formula::iff(o(&u[at(j)]), o(&v[at(j)])));
        }
        Formula::conj(parts)
    }))
}
