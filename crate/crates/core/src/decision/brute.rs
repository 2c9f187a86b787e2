use web_time::Instant;

use super::{DecisionError, Engine, Options, SatStatus, SatVerdict, Stats};
use crate::structures::eval::{CompiledFormula, DenseStructure, FALSE, TRUE, UNKNOWN};
use crate::structures::models;
use crate::syntax::{free_variables, Formula, Signature};

struct Search<'a> {
    f: &'a CompiledFormula,
    atoms: Vec<(usize, usize)>,
    budget: u64,
    nodes: u64,
}

impl Search<'_> {
    /// Branches on atoms in order, false first, cutting a branch as soon as
    /// the three-valued value of the sentence is determined.
    fn dfs(&mut self, d: &mut DenseStructure, next: usize) -> Option<Option<()>> {
        if self.budget == 0 {
            return None;
        }
        self.budget -= 1;
        self.nodes += 1;
        match self.f.holds_at(d, &[]) {
            FALSE => return Some(None),
            TRUE => {
                for &(r, i) in &self.atoms[next..] {
                    d.set(r, i, FALSE);
                }
                return Some(Some(()));
            }
            _ => {}
        }
        let Some(&(r, i)) = self.atoms.get(next) else {
            return Some(None);
        };
        for value in [FALSE, TRUE] {
            d.set(r, i, value);
            if self.dfs(d, next + 1)?.is_some() {
                return Some(Some(()));
            }
        }
        d.set(r, i, UNKNOWN);
        Some(None)
    }
}

/// Exhaustive search over all structures of size `1..=max_size` (every
/// constant interpretation, every atom), smallest size first.
pub fn brute_force_sat(
    f: &Formula,
    sig: &Signature,
    max_size: usize,
    opts: &Options,
) -> Result<SatVerdict, DecisionError> {
    let start = Instant::now();
    if !free_variables(f).is_empty() {
        return Err(DecisionError::NotASentence);
    }
    let compiled = CompiledFormula::new(sig, f).map_err(|_| DecisionError::NotASentence)?;
    let mut search = Search {
        f: &compiled,
        atoms: Vec::new(),
        budget: opts.budget_nodes,
        nodes: 0,
    };
    let consts = sig.constants.len();
    let verdict = |status, nodes| SatVerdict {
        status,
        engine: Engine::Brute,
        stats: Stats {
            nodes,
            elapsed: start.elapsed(),
            candidates: 0,
        },
        bound: None,
    };
    for n in 1..=max_size {
        let total: usize = sig.relations.values().map(|&a| n.pow(a as u32)).sum();
        if total > opts.atom_ceiling {
            return Err(DecisionError::AtomCeiling {
                required: total,
                ceiling: opts.atom_ceiling,
            });
        }
        let mut atoms: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(total);
        for (r, &a) in sig.relations.values().enumerate() {
            for i in 0..n.pow(a as u32) {
                let digits: Vec<usize> = (0..a).map(|k| i / n.pow(k as u32) % n).collect();
                let distinct = (0..n).filter(|e| digits.contains(e)).count();
                atoms.push((distinct, digits.iter().copied().max().unwrap_or(0), r, i));
            }
        }
        // Diagonal atoms first: they are the ones reflexive constraints
        // and equalities pin down.
        atoms.sort_unstable();
        search.atoms = atoms.into_iter().map(|(_, _, r, i)| (r, i)).collect();
        for mut code in 0..n.pow(consts as u32) {
            let mut assignment = Vec::with_capacity(consts);
            for _ in 0..consts {
                assignment.push(code % n);
                code /= n;
            }
            let mut d = DenseStructure::unknown(sig, n, assignment);
            match search.dfs(&mut d, 0) {
                None => {
                    return Ok(verdict(
                        SatStatus::Unknown(format!("node budget exhausted at size {n}")),
                        search.nodes,
                    ))
                }
                Some(Some(())) => {
                    let s = d.to_structure(sig);
                    assert!(
                        models(&s, f).unwrap_or(false),
                        "exhaustive search returned a non-model"
                    );
                    return Ok(verdict(SatStatus::Sat(s), search.nodes));
                }
                Some(None) => {}
            }
        }
    }
    Ok(verdict(SatStatus::UnsatUpTo(max_size), search.nodes))
}
