use std::collections::BTreeMap;
use web_time::Instant;

use super::ground::{CompiledNf, Grounder, G};
use super::solver::SolveResult;
use super::{DecisionError, Engine, Options, SatStatus, SatVerdict, Stats};
use crate::model_builder::construction_bound;
use crate::normal_form::NormalForm;
use crate::structures::eval::DenseStructure;
use crate::structures::models;

/// Interpretations of `k` constants in a universe of size `n` up to
/// renaming of elements: restricted growth strings.
fn constant_layouts(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(k: usize, n: usize, next: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..=next.min(n - 1) {
            cur.push(v);
            go(k, n, if v == next { next + 1 } else { next }, cur, out);
            cur.pop();
        }
    }
    go(k, n, 0, &mut cur, &mut out);
    out
}

/// Searches for a model of `nf` of size at most `max_size` by grounding it
/// over each universe size in turn and handing the clauses to the solver.
pub fn sat_bounded(
    nf: &NormalForm,
    max_size: usize,
    opts: &Options,
) -> Result<SatVerdict, DecisionError> {
    let start = Instant::now();
    let sig = &nf.signature;
    let consts: Vec<String> = sig.constants.iter().cloned().collect();
    let mut budget = opts.budget_nodes;
    let finish = |status, budget_left: u64| SatVerdict {
        status,
        engine: Engine::Bounded,
        stats: Stats {
            nodes: opts.budget_nodes - budget_left,
            elapsed: start.elapsed(),
            candidates: 1,
        },
        bound: construction_bound(nf, nf.dialect),
    };
    let formula = nf.to_formula();
    for n in 1..=max_size {
        for layout in constant_layouts(consts.len(), n) {
            let interp: BTreeMap<String, usize> =
                consts.iter().cloned().zip(layout.iter().copied()).collect();
            let compiled =
                CompiledNf::new(nf, &interp).expect("normal-form matrices are quantifier-free");
            let required = compiled.instance_count(n);
            if required > opts.ground_ceiling {
                return Err(DecisionError::GroundingCeiling {
                    required,
                    ceiling: opts.ground_ceiling,
                });
            }
            let mut g = Grounder::new(DenseStructure::unknown(sig, n, layout.clone()));
            compiled.assert_universals(&mut g, &|_| true);
            for i in 0..compiled.forall_exists.len() {
                for a in 0..n {
                    let w = compiled.witness_disjunction(&mut g, i, a);
                    g.assert(w);
                }
            }
            // Elements not naming a constant are interchangeable: order them
            // by the diagonal atoms R(e,…,e).
            let first_free = layout.iter().map(|&e| e + 1).max().unwrap_or(0);
            let diag = |g: &mut Grounder, e: usize| -> Vec<G> {
                let arities = g.d.arities.clone();
                arities
                    .iter()
                    .enumerate()
                    .map(|(r, &a)| {
                        let idx = (0..a).fold(0, |acc, _| acc * n + e);
                        g.atom(r, idx)
                    })
                    .collect()
            };
            for e in first_free..n.saturating_sub(1) {
                let a = diag(&mut g, e);
                let b = diag(&mut g, e + 1);
                g.lex_leq(a, b);
            }
            match g.solve(&mut budget) {
                SolveResult::Sat => {
                    let s = g.model().to_structure(sig);
                    assert!(
                        models(&s, &formula).unwrap_or(false),
                        "grounded model fails the normal form"
                    );
                    return Ok(finish(SatStatus::Sat(s), budget));
                }
                SolveResult::Unknown => {
                    return Ok(finish(
                        SatStatus::Unknown(format!("node budget exhausted at size {n}")),
                        budget,
                    ))
                }
                SolveResult::Unsat => {}
            }
        }
    }
    Ok(finish(SatStatus::UnsatUpTo(max_size), budget))
}
