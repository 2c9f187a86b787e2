//! A compact CDCL SAT solver: two watched literals, first-UIP learning,
//! activity-based branching with phase saving, Luby restarts.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Not;

pub type Var = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn pos(v: Var) -> Lit {
        Lit(v << 1)
    }

    pub fn neg(v: Var) -> Lit {
        Lit(v << 1 | 1)
    }

    pub fn new(v: Var, positive: bool) -> Lit {
        if positive {
            Lit::pos(v)
        } else {
            Lit::neg(v)
        }
    }

    pub fn var(self) -> Var {
        self.0 >> 1
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    Unknown,
}

const NO_REASON: u32 = u32::MAX;
const UNASSIGNED: i8 = -1;

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
}

#[derive(PartialEq)]
struct Scored(f64, Var);

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .partial_cmp(&other.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

#[derive(Default)]
pub struct Solver {
    clauses: Vec<Option<Clause>>,
    watches: Vec<Vec<u32>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: BinaryHeap<Scored>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    learnts: usize,
    unsat: bool,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
}

fn luby(mut x: u64) -> u64 {
    let (mut size, mut seq) = (1u64, 0u32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1 << seq
}

impl Solver {
    pub fn new() -> Solver {
        Solver {
            var_inc: 1.0,
            ..Solver::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.as_ref().is_some_and(|c| !c.learnt))
            .count()
    }

    pub fn new_var(&mut self) -> Var {
        let v = self.assigns.len() as Var;
        self.assigns.push(UNASSIGNED);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.push(Scored(0.0, v));
        v
    }

    fn lit_value(&self, l: Lit) -> i8 {
        let a = self.assigns[l.var() as usize];
        if a == UNASSIGNED {
            UNASSIGNED
        } else {
            a ^ (!l.is_positive() as i8)
        }
    }

    /// Model value of a variable after a `Sat` answer.
    pub fn value(&self, v: Var) -> bool {
        self.assigns[v as usize] == 1
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var() as usize;
        self.assigns[v] = l.is_positive() as i8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Adds a clause; returns false once the clause set is known unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if self.unsat {
            return false;
        }
        self.cancel_until(0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        let mut kept = Vec::with_capacity(c.len());
        for l in c {
            match self.lit_value(l) {
                1 => return true,
                0 => {}
                _ => kept.push(l),
            }
        }
        match kept.len() {
            0 => {
                self.unsat = true;
                false
            }
            1 => {
                self.enqueue(kept[0], NO_REASON);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
                !self.unsat
            }
            _ => {
                self.attach(kept, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].index()].push(cref);
        self.watches[lits[1].index()].push(cref);
        if learnt {
            self.learnts += 1;
        }
        self.clauses.push(Some(Clause { lits, learnt }));
        cref
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut i = 0;
            let mut conflict = None;
            while i < ws.len() {
                let cref = ws[i];
                let Some(clause) = self.clauses[cref as usize].as_mut() else {
                    ws.swap_remove(i);
                    continue;
                };
                if clause.lits[0] == false_lit {
                    clause.lits.swap(0, 1);
                }
                let first = clause.lits[0];
                let first_val = {
                    let a = self.assigns[first.var() as usize];
                    if a == UNASSIGNED {
                        UNASSIGNED
                    } else {
                        a ^ (!first.is_positive() as i8)
                    }
                };
                if first_val == 1 {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.lits.len() {
                    let l = clause.lits[k];
                    let a = self.assigns[l.var() as usize];
                    let val = if a == UNASSIGNED {
                        UNASSIGNED
                    } else {
                        a ^ (!l.is_positive() as i8)
                    };
                    if val != 0 {
                        clause.lits.swap(1, k);
                        let new_watch = clause.lits[1];
                        self.watches[new_watch.index()].push(cref);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if first_val == 0 {
                    conflict = Some(cref);
                    break;
                }
                self.enqueue(first, cref);
                i += 1;
            }
            let restored = &mut self.watches[false_lit.index()];
            ws.append(restored);
            *restored = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: Var) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
            self.heap = (0..self.assigns.len() as Var)
                .map(|u| Scored(self.activity[u as usize], u))
                .collect();
        }
        self.heap.push(Scored(self.activity[v as usize], v));
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level();
        loop {
            let lits = self.clauses[confl as usize]
                .as_ref()
                .expect("live reason")
                .lits
                .clone();
            let start = if p.is_some() { 1 } else { 0 };
            for &q in &lits[start..] {
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump(q.var());
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[index];
            self.seen[lit.var() as usize] = false;
            p = Some(lit);
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var() as usize];
        }
        learnt[0] = !p.unwrap();
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[max_i].var() as usize] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var() as usize];
        }
        (learnt, bt)
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            self.phase[v] = l.is_positive();
            self.assigns[v] = UNASSIGNED;
            self.reason[v] = NO_REASON;
            self.heap.push(Scored(self.activity[v], l.var()));
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Var> {
        while let Some(Scored(_, v)) = self.heap.pop() {
            if self.assigns[v as usize] == UNASSIGNED {
                return Some(v);
            }
        }
        None
    }

    fn reduce_learnts(&mut self) {
        let mut sizes: Vec<(usize, usize)> = self
            .clauses
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                c.as_ref()
                    .filter(|c| c.learnt && c.lits.len() > 2)
                    .map(|c| (c.lits.len(), i))
            })
            .collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let drop = sizes.len() / 2;
        for &(_, i) in &sizes[..drop] {
            self.clauses[i] = None;
            self.learnts -= 1;
        }
        for w in self.watches.iter_mut() {
            w.clear();
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if let Some(c) = c {
                self.watches[c.lits[0].index()].push(i as u32);
                self.watches[c.lits[1].index()].push(i as u32);
            }
        }
    }

    /// Runs the search until an answer is found or `budget` (counted in
    /// decisions plus conflicts) is used up.
    pub fn solve(&mut self, budget: &mut u64) -> SolveResult {
        if self.unsat {
            return SolveResult::Unsat;
        }
        if self.propagate().is_some() {
            self.unsat = true;
            return SolveResult::Unsat;
        }
        let mut restart = 0u64;
        let mut max_learnts = 4000 + self.num_clauses() / 3;
        loop {
            let limit = 100 * luby(restart);
            restart += 1;
            let mut local = 0u64;
            loop {
                if let Some(confl) = self.propagate() {
                    self.conflicts += 1;
                    local += 1;
                    if *budget == 0 {
                        self.cancel_until(0);
                        return SolveResult::Unknown;
                    }
                    *budget -= 1;
                    if self.decision_level() == 0 {
                        self.unsat = true;
                        return SolveResult::Unsat;
                    }
                    let (learnt, bt) = self.analyze(confl);
                    self.cancel_until(bt);
                    if learnt.len() == 1 {
                        self.enqueue(learnt[0], NO_REASON);
                    } else {
                        let first = learnt[0];
                        let cref = self.attach(learnt, true);
                        self.enqueue(first, cref);
                    }
                    self.var_inc *= 1.0 / 0.95;
                } else {
                    if local >= limit {
                        self.cancel_until(0);
                        if self.learnts > max_learnts {
                            self.reduce_learnts();
                            max_learnts += max_learnts / 10;
                        }
                        break;
                    }
                    let Some(v) = self.pick_branch() else {
                        return SolveResult::Sat;
                    };
                    if *budget == 0 {
                        self.cancel_until(0);
                        return SolveResult::Unknown;
                    }
                    *budget -= 1;
                    self.decisions += 1;
                    self.trail_lim.push(self.trail.len());
                    let lit = Lit::new(v, self.phase[v as usize]);
                    self.enqueue(lit, NO_REASON);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn brute(n: usize, clauses: &[Vec<Lit>]) -> bool {
        (0..1u32 << n).any(|m| {
            clauses.iter().all(|c| {
                c.iter()
                    .any(|l| ((m >> l.var()) & 1 == 1) == l.is_positive())
            })
        })
    }

    #[test]
    fn pigeonhole_is_unsat() {
        let mut s = Solver::new();
        let (p, h) = (4u32, 3u32);
        let vars: Vec<Vec<Var>> = (0..p)
            .map(|_| (0..h).map(|_| s.new_var()).collect())
            .collect();
        for row in &vars {
            s.add_clause(&row.iter().map(|&v| Lit::pos(v)).collect::<Vec<_>>());
        }
        for j in 0..h as usize {
            for a in 0..p as usize {
                for b in a + 1..p as usize {
                    s.add_clause(&[Lit::neg(vars[a][j]), Lit::neg(vars[b][j])]);
                }
            }
        }
        assert_eq!(s.solve(&mut 1_000_000), SolveResult::Unsat);
    }

    #[test]
    fn random_3sat_matches_truth_table() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.gen_range(3..=10usize);
            let m = rng.gen_range(1..=5 * n);
            let clauses: Vec<Vec<Lit>> = (0..m)
                .map(|_| {
                    (0..rng.gen_range(1..=3))
                        .map(|_| Lit::new(rng.gen_range(0..n as u32), rng.gen_bool(0.5)))
                        .collect()
                })
                .collect();
            let mut s = Solver::new();
            for _ in 0..n {
                s.new_var();
            }
            for c in &clauses {
                s.add_clause(c);
            }
            let r = s.solve(&mut 1_000_000);
            assert_eq!(r == SolveResult::Sat, brute(n, &clauses));
            if r == SolveResult::Sat {
                assert!(clauses
                    .iter()
                    .all(|c| c.iter().any(|l| s.value(l.var()) == l.is_positive())));
            }
        }
    }

    #[test]
    fn budget_exhaustion_reports_unknown() {
        let mut s = Solver::new();
        let (p, h) = (9u32, 8u32);
        let vars: Vec<Vec<Var>> = (0..p)
            .map(|_| (0..h).map(|_| s.new_var()).collect())
            .collect();
        for row in &vars {
            s.add_clause(&row.iter().map(|&v| Lit::pos(v)).collect::<Vec<_>>());
        }
        for j in 0..h as usize {
            for a in 0..p as usize {
                for b in a + 1..p as usize {
                    s.add_clause(&[Lit::neg(vars[a][j]), Lit::neg(vars[b][j])]);
                }
            }
        }
        assert_eq!(s.solve(&mut 50), SolveResult::Unknown);
    }

    #[test]
    fn luby_sequence() {
        let seq: Vec<u64> = (0..7).map(luby).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4]);
    }
}
