use super::{Formula, Signature};

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Quant { .. } => 0,
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(fs) if fs.len() >= 2 => 3,
        Formula::And(fs) if fs.len() >= 2 => 4,
        Formula::Or(fs) | Formula::And(fs) => fs.first().map_or(6, prec),
        Formula::Not(_) => 5,
        _ => 6,
    }
}

fn child(out: &mut String, f: &Formula, parens: bool) {
    if parens {
        out.push('(');
        write(out, f);
        out.push(')');
    } else {
        write(out, f);
    }
}

fn write(out: &mut String, f: &Formula) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom { rel, args } => {
            out.push_str(rel);
            out.push('(');
            for (i, t) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(t.name());
            }
            out.push(')');
        }
        Formula::Eq(a, b) => {
            out.push_str(a.name());
            out.push_str(" = ");
            out.push_str(b.name());
        }
        Formula::Not(g) => {
            out.push('!');
            child(out, g, prec(g) < 5 || matches!(**g, Formula::Eq(..)));
        }
        Formula::And(fs) | Formula::Or(fs) => {
            if fs.is_empty() {
                out.push_str(if matches!(f, Formula::And(_)) {
                    "true"
                } else {
                    "false"
                });
                return;
            }
            if fs.len() == 1 {
                write(out, &fs[0]);
                return;
            }
            let (p, sep) = if matches!(f, Formula::And(_)) {
                (4, " & ")
            } else {
                (3, " | ")
            };
            for (i, g) in fs.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                let q = prec(g);
                let nested_same = q == p
                    || matches!(
                        (f, g),
                        (Formula::And(_), Formula::And(_)) | (Formula::Or(_), Formula::Or(_))
                    );
                child(out, g, q < p || nested_same);
            }
        }
        Formula::Implies(a, b) => {
            child(out, a, prec(a) <= 2);
            out.push_str(" -> ");
            child(out, b, prec(b) < 2);
        }
        Formula::Iff(a, b) => {
            child(out, a, prec(a) < 1);
            out.push_str(" <-> ");
            child(out, b, prec(b) <= 1);
        }
        Formula::Quant { kind, vars, body } => {
            out.push_str(kind.keyword());
            for v in vars {
                out.push(' ');
                out.push_str(v);
            }
            out.push_str(". ");
            let compound = matches!(
                **body,
                Formula::And(_) | Formula::Or(_) | Formula::Implies(..) | Formula::Iff(..)
            );
            child(out, body, compound);
        }
    }
}

/// Renders a formula in the concrete syntax accepted by `parse_formula`.
pub fn render_formula(f: &Formula) -> String {
    let mut out = String::new();
    write(&mut out, f);
    out
}

/// Renders a complete formula file: declarations, then the formula.
pub fn render_file(sig: &Signature, f: &Formula) -> String {
    let mut out = String::new();
    for (name, arity) in &sig.relations {
        out.push_str(&format!("relation {name}/{arity}\n"));
    }
    for c in &sig.constants {
        out.push_str(&format!("constant {c}\n"));
    }
    out.push_str(&render_formula(f));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, Term};

    #[test]
    fn renders_atoms_and_blocks() {
        assert_eq!(render_formula(&Formula::atom_vars("P", &["x"])), "P(x)");
        let f = Formula::forall(
            &["x", "y"],
            Formula::implies(
                Formula::And(vec![
                    Formula::atom_vars("P", &["x"]),
                    Formula::atom_vars("Q", &["y"]),
                ]),
                Formula::atom_vars("R", &["x", "y"]),
            ),
        );
        assert_eq!(render_formula(&f), "forall x y. (P(x) & Q(y) -> R(x,y))");
    }

    #[test]
    fn nested_structure_survives_round_trip() {
        let p = Formula::atom_vars("P", &["x"]);
        let q = Formula::atom_vars("Q", &["x"]);
        let cases = vec![
            Formula::And(vec![Formula::And(vec![p.clone(), q.clone()]), p.clone()]),
            Formula::implies(Formula::implies(p.clone(), q.clone()), p.clone()),
            Formula::iff(p.clone(), Formula::iff(q.clone(), p.clone())),
            Formula::And(vec![Formula::exists(&["y"], p.clone()), q.clone()]),
            Formula::not(Formula::Eq(Term::var("x"), Term::var("y"))),
            Formula::not(Formula::not(p.clone())),
        ];
        let header = "relation P/1 relation Q/1\n";
        for f in cases {
            let text = format!("{header}{}", render_formula(&f));
            let (_, g) = parse_formula(&text).unwrap();
            assert_eq!(f, g, "{text}");
        }
    }
}
