//! The alternating procedure realized as AND-OR search. Existential steps
//! (royal and non-royal 1-type sets, the king structure, the court, each
//! extension 𝔇) are choice points solved with the CDCL solver; universal
//! steps (each non-royal K-type and ∀∃ conjunct) are conjunctive branches.
//! With memoization the loop of steps 6–9 becomes a greatest fixpoint over
//! the explored K-types: a K-type is dropped once some conjunct has no
//! extension whose new elements avoid the dropped K-types.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use web_time::Instant;

use super::ground::{mk_and, mk_or, CompiledNf, Grounder, G};
use super::solver::SolveResult;
use super::{Engine, Options, SatStatus, SatVerdict, Stats};
use crate::normal_form::{Dialect, NormalForm};
use crate::structures::eval::{DenseStructure, FALSE, TRUE};
use crate::structures::{models, Structure};

/// Truth values of the atoms over K ∪ {c} that mention c.
type Key = Vec<bool>;

struct Exhausted;

struct Strategy {
    d: DenseStructure,
    new: usize,
    succ: Vec<Key>,
}

struct Ctx<'a> {
    nf: &'a NormalForm,
    cnf: CompiledNf,
    arities: Vec<usize>,
    lgf: bool,
    budget: u64,
    start_budget: u64,
    /// Set when the unmemoized search accepts but no finite model follows.
    disagreement: Option<String>,
}

/// Distinguished-element atoms over `k + 1` elements, with `k` standing
/// for the distinguished element.
fn k_atoms(arities: &[usize], k: usize) -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::new();
    for (r, &a) in arities.iter().enumerate() {
        let n = k + 1;
        for mut idx in 0..n.pow(a as u32) {
            let mut t = vec![0; a];
            for slot in t.iter_mut().rev() {
                *slot = idx % n;
                idx /= n;
            }
            if t.contains(&k) {
                out.push((r, t));
            }
        }
    }
    out
}

fn index(n: usize, t: &[usize]) -> usize {
    t.iter().fold(0, |acc, &e| acc * n + e)
}

fn subst(t: &[usize], k: usize, e: usize) -> Vec<usize> {
    t.iter().map(|&x| if x == k { e } else { x }).collect()
}

impl<'a> Ctx<'a> {
    fn fresh(&self, n: usize) -> DenseStructure {
        DenseStructure::unknown(&self.nf.signature, n, Vec::new())
    }

    fn set_type(&self, d: &mut DenseStructure, e: usize, mask: u64) {
        for (r, &a) in self.arities.iter().enumerate() {
            let idx = index(d.n, &vec![e; a]);
            d.set(r, idx, if mask >> r & 1 == 1 { TRUE } else { FALSE });
        }
    }

    /// Runs the solver, charging the size of the ground problem on top of
    /// the solver's own decisions and conflicts.
    fn solve(&mut self, g: &mut Grounder) -> Result<bool, Exhausted> {
        let size = (g.solver.num_clauses() + g.solver.num_vars()) as u64;
        if self.budget < size {
            self.budget = 0;
            return Err(Exhausted);
        }
        self.budget -= size;
        match g.solve(&mut self.budget) {
            SolveResult::Sat => Ok(true),
            SolveResult::Unsat => Ok(false),
            SolveResult::Unknown => Err(Exhausted),
        }
    }

    fn tick(&mut self) -> Result<(), Exhausted> {
        if self.budget == 0 {
            return Err(Exhausted);
        }
        self.budget -= 1;
        Ok(())
    }

    /// Requires the 1-type of `e` to be one of `allowed`.
    fn restrict_type(&self, g: &mut Grounder, e: usize, allowed: &[u64]) {
        let n = g.d.n;
        let options = allowed
            .iter()
            .map(|&mask| {
                mk_and(
                    self.arities
                        .iter()
                        .enumerate()
                        .map(|(r, &a)| {
                            let atom = g.atom(r, index(n, &vec![e; a]));
                            if mask >> r & 1 == 1 {
                                atom
                            } else {
                                negate(atom)
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        g.assert(mk_or(options));
    }

    /// Forbids `e` (in a structure whose first `k` elements are the kings)
    /// from realizing any K-type in `bad`.
    fn forbid_keys(
        &self,
        g: &mut Grounder,
        katoms: &[(usize, Vec<usize>)],
        k: usize,
        e: usize,
        bad: &BTreeSet<Key>,
    ) {
        let n = g.d.n;
        for key in bad {
            let parts = katoms
                .iter()
                .zip(key)
                .map(|((r, t), &v)| {
                    let atom = g.atom(*r, index(n, &subst(t, k, e)));
                    if v {
                        negate(atom)
                    } else {
                        atom
                    }
                })
                .collect();
            g.assert(mk_or(parts));
        }
    }

    fn key_of(
        &self,
        d: &DenseStructure,
        katoms: &[(usize, Vec<usize>)],
        k: usize,
        e: usize,
    ) -> Key {
        katoms
            .iter()
            .map(|(r, t)| d.get(*r, index(d.n, &subst(t, k, e))) == TRUE)
            .collect()
    }

    fn key_lits(
        &self,
        g: &mut Grounder,
        katoms: &[(usize, Vec<usize>)],
        k: usize,
        e: usize,
    ) -> Vec<G> {
        let n = g.d.n;
        katoms
            .iter()
            .map(|(r, t)| g.atom(*r, index(n, &subst(t, k, e))))
            .collect()
    }
}

fn negate(g: G) -> G {
    match g {
        G::True => G::False,
        G::False => G::True,
        G::Lit(l) => G::Lit(!l),
        other => panic!("negating compound ground formula {other:?}"),
    }
}

/// Maximal cliques (Bron–Kerbosch with pivoting), each sorted, in
/// lexicographic order.
fn maximal_cliques(nodes: &[usize], adj: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    fn bk(
        r: &mut Vec<usize>,
        p: Vec<usize>,
        x: Vec<usize>,
        adj: &dyn Fn(usize, usize) -> bool,
        out: &mut Vec<Vec<usize>>,
    ) {
        if p.is_empty() && x.is_empty() {
            let mut c = r.clone();
            c.sort_unstable();
            out.push(c);
            return;
        }
        let nb = |u: usize, v: usize| u != v && adj(u, v);
        let pivot = *p
            .iter()
            .chain(&x)
            .max_by_key(|&&u| p.iter().filter(|&&v| nb(u, v)).count())
            .unwrap();
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !nb(pivot, v)).collect();
        let (mut p, mut x) = (p, x);
        for v in candidates {
            r.push(v);
            let np = p.iter().copied().filter(|&w| nb(v, w)).collect();
            let nx = x.iter().copied().filter(|&w| nb(v, w)).collect();
            bk(r, np, nx, adj, out);
            r.pop();
            p.retain(|&w| w != v);
            x.push(v);
        }
    }
    let mut out = Vec::new();
    bk(&mut Vec::new(), nodes.to_vec(), Vec::new(), adj, &mut out);
    out.sort();
    out
}

/// Iterates over the k-element subsets of `items` in lexicographic order.
fn combinations(items: &[u64], k: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > items.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < items.len() - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Search state for one choice of kings and non-royal types.
struct Explorer {
    k: usize,
    kings: DenseStructure,
    allowed: Vec<u64>,
    katoms: Vec<(usize, Vec<usize>)>,
    bad: BTreeSet<Key>,
    strategies: BTreeMap<Key, Vec<Option<Strategy>>>,
}

impl Explorer {
    /// Looks for an extension 𝔇 of K ∪ {c} (c of K-type `key`) holding a
    /// witness structure for c and conjunct `i`, with every new element of
    /// non-royal type and K-type outside `bad`.
    fn extension(
        &self,
        ctx: &mut Ctx,
        key: &Key,
        i: usize,
        bad: &BTreeSet<Key>,
    ) -> Result<Option<Strategy>, Exhausted> {
        ctx.tick()?;
        let k = self.k;
        let witnesses = ctx.nf.forall_exists[i].witnesses.len();
        for t in 0..=witnesses {
            let n = k + 1 + t;
            let mut d = ctx.fresh(n);
            copy_into(&self.kings, &mut d, &ctx.arities);
            for ((r, tup), &v) in self.katoms.iter().zip(key) {
                d.set(*r, index(n, tup), if v { TRUE } else { FALSE });
            }
            let mut g = Grounder::new(d);
            ctx.cnf
                .assert_universals(&mut g, &|tup| tup.iter().any(|&e| e > k));
            let w = ctx.cnf.witness_disjunction(&mut g, i, k);
            g.assert(w);
            for e in k + 1..n {
                ctx.restrict_type(&mut g, e, &self.allowed);
                ctx.forbid_keys(&mut g, &self.katoms, k, e, bad);
            }
            if ctx.solve(&mut g)? {
                let d = g.model();
                let succ = (k + 1..n)
                    .map(|e| ctx.key_of(&d, &self.katoms, k, e))
                    .collect();
                return Ok(Some(Strategy { d, new: t, succ }));
            }
        }
        Ok(None)
    }

    /// Greatest-fixpoint check that every root K-type can be given
    /// witnesses forever.
    fn good_memo(&mut self, ctx: &mut Ctx, roots: &[Key]) -> Result<bool, Exhausted> {
        let conjuncts = ctx.nf.forall_exists.len();
        for r in roots {
            self.strategies
                .entry(r.clone())
                .or_insert_with(|| (0..conjuncts).map(|_| None).collect());
        }
        loop {
            let mut changed = false;
            let keys: Vec<Key> = self
                .strategies
                .keys()
                .filter(|k| !self.bad.contains(*k))
                .cloned()
                .collect();
            for key in keys {
                for i in 0..conjuncts {
                    let stale = match &self.strategies[&key][i] {
                        None => true,
                        Some(s) => s.succ.iter().any(|x| self.bad.contains(x)),
                    };
                    if !stale {
                        continue;
                    }
                    let bad = self.bad.clone();
                    match self.extension(ctx, &key, i, &bad)? {
                        None => {
                            self.bad.insert(key.clone());
                            changed = true;
                            break;
                        }
                        Some(s) => {
                            for x in &s.succ {
                                if !self.strategies.contains_key(x) {
                                    self.strategies
                                        .insert(x.clone(), (0..conjuncts).map(|_| None).collect());
                                    changed = true;
                                }
                            }
                            self.strategies.get_mut(&key).unwrap()[i] = Some(s);
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Ok(roots.iter().all(|r| !self.bad.contains(r)))
    }

    /// Depth-bounded unrolling without memoization; branches reaching the
    /// guard are accepted.
    fn good_dfs(
        &self,
        ctx: &mut Ctx,
        key: &Key,
        depth: usize,
        guard: usize,
    ) -> Result<bool, Exhausted> {
        if depth >= guard {
            return Ok(true);
        }
        for i in 0..ctx.nf.forall_exists.len() {
            let mut local = BTreeSet::new();
            'choice: loop {
                let Some(s) = self.extension(ctx, key, i, &local)? else {
                    return Ok(false);
                };
                for x in &s.succ {
                    if !self.good_dfs(ctx, x, depth + 1, guard)? {
                        local.insert(x.clone());
                        continue 'choice;
                    }
                }
                break;
            }
        }
        Ok(true)
    }
}

fn copy_into(src: &DenseStructure, dst: &mut DenseStructure, arities: &[usize]) {
    for (r, &a) in arities.iter().enumerate() {
        for idx in 0..src.n.pow(a as u32) {
            let t = src.decode(a, idx);
            dst.set(r, index(dst.n, &t), src.get(r, idx));
        }
    }
}

/// Satisfiability of a normal form by the alternating procedure, searched
/// exhaustively; the answer is definitive unless the node budget runs out.
pub fn sat_alternating(nf: &NormalForm, opts: &Options) -> SatVerdict {
    let start = Instant::now();
    let finish = |status, ctx_budget: u64| SatVerdict {
        status,
        engine: Engine::Alternating,
        stats: Stats {
            nodes: opts.budget_nodes - ctx_budget,
            elapsed: start.elapsed(),
            candidates: 1,
        },
        bound: None,
    };
    if !nf.signature.constants.is_empty() {
        return finish(
            SatStatus::Unknown("the alternating engine does not handle constants".into()),
            opts.budget_nodes,
        );
    }
    if nf.signature.relations.len() > 16 {
        return finish(
            SatStatus::Unknown("more than 16 relation symbols in the normal form".into()),
            opts.budget_nodes,
        );
    }
    let cnf =
        CompiledNf::new(nf, &BTreeMap::new()).expect("normal-form matrices are quantifier-free");
    let mut ctx = Ctx {
        nf,
        cnf,
        arities: nf.signature.relations.values().copied().collect(),
        lgf: nf.dialect == Dialect::Lgf1,
        budget: opts.budget_nodes,
        start_budget: opts.budget_nodes,
        disagreement: None,
    };
    let status = match run(&mut ctx, opts) {
        Ok(Some(model)) => {
            if models(&model, &nf.to_formula()).unwrap_or(false) {
                SatStatus::Sat(model)
            } else {
                SatStatus::Unknown("assembled structure failed verification".into())
            }
        }
        Ok(None) => match ctx.disagreement.take() {
            Some(reason) => SatStatus::Unknown(reason),
            None => SatStatus::Unsat,
        },
        Err(Exhausted) => {
            SatStatus::Unknown(format!("node budget of {} exhausted", ctx.start_budget))
        }
    };
    finish(status, ctx.budget)
}

fn run(ctx: &mut Ctx, opts: &Options) -> Result<Option<Structure>, Exhausted> {
    let rels = ctx.arities.len();
    // Step 2: 1-types consistent on their own and pairwise compatible.
    let mut types = Vec::new();
    for mask in 0..1u64 << rels {
        let mut d = ctx.fresh(1);
        ctx.set_type(&mut d, 0, mask);
        let mut g = Grounder::new(d);
        ctx.cnf.assert_universals(&mut g, &|_| true);
        if ctx.solve(&mut g)? {
            types.push(mask);
        }
    }
    let mut compat: HashMap<(u64, u64), DenseStructure> = HashMap::new();
    for &a in &types {
        for &b in &types {
            let mut d = ctx.fresh(2);
            ctx.set_type(&mut d, 0, a);
            ctx.set_type(&mut d, 1, b);
            if ctx.lgf {
                for (r, &ar) in ctx.arities.iter().enumerate() {
                    for idx in 0..2usize.pow(ar as u32) {
                        let t = d.decode(ar, idx);
                        if t.contains(&0) && t.contains(&1) {
                            d.set(r, idx, FALSE);
                        }
                    }
                }
            }
            let mut g = Grounder::new(d);
            ctx.cnf.assert_universals(&mut g, &|_| true);
            if ctx.solve(&mut g)? {
                compat.insert((a, b), g.model());
            }
        }
    }
    let needs_kings = !ctx.lgf && !ctx.nf.doubling_removes_kings();
    let max_kings = if needs_kings { types.len() } else { 0 };
    let total_witnesses: usize = ctx.nf.forall_exists.iter().map(|c| c.witnesses.len()).sum();
    // Royal sets without any king structure; their supersets have none.
    let mut dead: Vec<Vec<u64>> = Vec::new();
    for kcount in 0..=max_kings {
        for royal in combinations(&types, kcount) {
            ctx.tick()?;
            if !royal.iter().all(|&a| {
                royal
                    .iter()
                    .all(|&b| a == b || compat.contains_key(&(a, b)))
            }) || dead.iter().any(|d| d.iter().all(|t| royal.contains(t)))
            {
                continue;
            }
            let mut kd = ctx.fresh(kcount);
            for (e, &mask) in royal.iter().enumerate() {
                ctx.set_type(&mut kd, e, mask);
            }
            let mut kg = Grounder::new(kd);
            ctx.cnf.assert_universals(&mut kg, &|_| true);
            kg.allocate_all();
            if !ctx.solve(&mut kg)? {
                dead.push(royal.clone());
                continue;
            }
            let rest: Vec<usize> = types
                .iter()
                .copied()
                .filter(|t| !royal.contains(t))
                .filter(|&t| {
                    compat.contains_key(&(t, t))
                        && royal.iter().all(|&r| compat.contains_key(&(r, t)))
                })
                .map(|t| t as usize)
                .collect();
            let cliques = if rest.is_empty() {
                vec![Vec::new()]
            } else {
                maximal_cliques(&rest, &|a, b| compat.contains_key(&(a as u64, b as u64)))
            };
            for clique in cliques {
                ctx.tick()?;
                let allowed: Vec<u64> = clique.iter().map(|&t| t as u64).collect();
                if kcount == 0 && allowed.is_empty() {
                    continue;
                }
                // Step 3: king structures with the royal types in order.
                let mut kd = ctx.fresh(kcount);
                for (e, &mask) in royal.iter().enumerate() {
                    ctx.set_type(&mut kd, e, mask);
                }
                let mut kg = Grounder::new(kd);
                ctx.cnf.assert_universals(&mut kg, &|_| true);
                kg.allocate_all();
                while ctx.solve(&mut kg)? {
                    ctx.tick()?;
                    let kings = kg.model();
                    kg.block_model();
                    let mcap = if kcount == 0 {
                        1
                    } else {
                        kcount * total_witnesses
                    };
                    let mut ex = Explorer {
                        k: kcount,
                        kings,
                        allowed: allowed.clone(),
                        katoms: k_atoms(&ctx.arities, kcount),
                        bad: BTreeSet::new(),
                        strategies: BTreeMap::new(),
                    };
                    if let Some(model) = court(ctx, &mut ex, mcap, opts, &compat)? {
                        return Ok(Some(model));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Steps 3–4: a court over the kings whose non-royal elements all have
/// K-types that survive the exploration.
fn court(
    ctx: &mut Ctx,
    ex: &mut Explorer,
    mcap: usize,
    opts: &Options,
    compat: &HashMap<(u64, u64), DenseStructure>,
) -> Result<Option<Structure>, Exhausted> {
    let k = ex.k;
    let mstart = if k == 0 { 1 } else { 0 };
    for m in mstart..=mcap {
        loop {
            ctx.tick()?;
            let n = k + m;
            let mut d = ctx.fresh(n);
            copy_into(&ex.kings, &mut d, &ctx.arities);
            let mut g = Grounder::new(d);
            ctx.cnf
                .assert_universals(&mut g, &|t| t.iter().any(|&e| e >= k));
            for i in 0..ctx.nf.forall_exists.len() {
                for king in 0..k {
                    let w = ctx.cnf.witness_disjunction(&mut g, i, king);
                    g.assert(w);
                }
            }
            for e in k..n {
                ctx.restrict_type(&mut g, e, &ex.allowed);
                ctx.forbid_keys(&mut g, &ex.katoms, k, e, &ex.bad);
            }
            for e in k..n.saturating_sub(1) {
                let a = ctx.key_lits(&mut g, &ex.katoms, k, e);
                let b = ctx.key_lits(&mut g, &ex.katoms, k, e + 1);
                g.lex_leq(a, b);
            }
            if !ctx.solve(&mut g)? {
                break;
            }
            let c = g.model();
            let roots: Vec<Key> = (k..n).map(|e| ctx.key_of(&c, &ex.katoms, k, e)).collect();
            if opts.memo {
                if ex.good_memo(ctx, &roots)? {
                    return Ok(Some(assemble(ctx, ex, &c, compat)));
                }
                continue;
            }
            let mut all = true;
            for r in &roots {
                if !ex.good_dfs(ctx, r, 0, opts.depth_guard)? {
                    ex.bad.insert(r.clone());
                    all = false;
                }
            }
            if all {
                ex.bad.clear();
                if ex.good_memo(ctx, &roots)? {
                    return Ok(Some(assemble(ctx, ex, &c, compat)));
                }
                ctx.disagreement = Some(format!(
                    "unrolling to depth {} accepts, but no finite model was assembled",
                    opts.depth_guard
                ));
                return Ok(None);
            }
        }
    }
    Ok(None)
}

/// Builds a finite model from the court and the explored strategies: every
/// reachable (K-type, conjunct) extension gets three copies (four times the
/// slot count for LGF₁), and element b of copy j takes its witnesses from
/// copy j+1.
fn assemble(
    ctx: &Ctx,
    ex: &Explorer,
    c: &DenseStructure,
    compat: &HashMap<(u64, u64), DenseStructure>,
) -> Structure {
    let k = ex.k;
    let copies = if ctx.lgf { 4 } else { 3 };
    let mut reach: BTreeSet<Key> = BTreeSet::new();
    let mut stack: Vec<Key> = (k..c.n).map(|e| ctx.key_of(c, &ex.katoms, k, e)).collect();
    while let Some(key) = stack.pop() {
        if reach.insert(key.clone()) {
            for s in ex.strategies[&key].iter().flatten() {
                stack.extend(s.succ.iter().cloned());
            }
        }
    }
    let slots = if ctx.lgf {
        reach
            .iter()
            .flat_map(|key| ex.strategies[key].iter().flatten().map(|s| s.new))
            .max()
            .unwrap_or(0)
            .max(1)
    } else {
        1
    };

    let mut atoms: HashMap<(usize, Vec<usize>), bool> = HashMap::new();
    let mut paired: HashSet<(usize, usize)> = HashSet::new();
    let mut size = c.n;
    // (element, key, copy index or None for the court, slot number)
    let mut elements: Vec<(usize, Key, Option<usize>, usize)> = (k..c.n)
        .map(|e| (e, ctx.key_of(c, &ex.katoms, k, e), None, 1))
        .collect();
    let put = |atoms: &mut HashMap<(usize, Vec<usize>), bool>,
               paired: &mut HashSet<(usize, usize)>,
               src: &DenseStructure,
               map: &[usize]| {
        for (r, &a) in ctx.arities.iter().enumerate() {
            for idx in 0..src.n.pow(a as u32) {
                let t = src.decode(a, idx);
                let image: Vec<usize> = t.iter().map(|&x| map[x]).collect();
                atoms.insert((r, image), src.get(r, idx) == TRUE);
            }
        }
        for &x in map {
            for &y in map {
                if x != y {
                    paired.insert((x.min(y), x.max(y)));
                }
            }
        }
    };
    put(&mut atoms, &mut paired, c, &(0..c.n).collect::<Vec<_>>());
    let mut copy_ids: BTreeMap<(Key, usize, usize, usize), Vec<usize>> = BTreeMap::new();
    for key in &reach {
        for (i, s) in ex.strategies[key].iter().enumerate() {
            let s = s.as_ref().expect("reachable K-types have strategies");
            for j in 0..copies {
                for slot in 1..=slots {
                    let ids: Vec<usize> = (0..s.new).map(|x| size + x).collect();
                    size += s.new;
                    let mut map: Vec<usize> = (0..k).collect();
                    map.push(usize::MAX);
                    map.extend(ids.iter().copied());
                    let sub: Vec<usize> = (0..k).chain(k + 1..s.d.n).collect();
                    let (sd, sub_map) = substructure(&s.d, &sub, &ctx.arities);
                    let target: Vec<usize> = sub_map.iter().map(|&x| map[x]).collect();
                    put(&mut atoms, &mut paired, &sd, &target);
                    for (pos, &id) in ids.iter().enumerate() {
                        elements.push((id, s.succ[pos].clone(), Some(j), pos + 1));
                    }
                    copy_ids.insert((key.clone(), i, j, slot), ids);
                }
            }
        }
    }
    for (b, key, j, slot) in &elements {
        let next = j.map_or(0, |j| (j + 1) % copies);
        let slot = if ctx.lgf { *slot } else { 1 };
        for (i, s) in ex.strategies[key].iter().enumerate() {
            let s = s.as_ref().unwrap();
            let mut map: Vec<usize> = (0..k).collect();
            map.push(*b);
            map.extend(copy_ids[&(key.clone(), i, next, slot)].iter().copied());
            put(&mut atoms, &mut paired, &s.d, &map);
        }
    }
    let mut out = Structure::new(ctx.nf.signature.clone(), size);
    let names: Vec<&String> = ctx.nf.signature.relations.keys().collect();
    let mut type_of = vec![0u64; size];
    for ((r, t), &v) in &atoms {
        if v && t.iter().all(|&x| x == t[0]) {
            type_of[t[0]] |= 1 << r;
        }
    }
    for b in k..size {
        for b2 in b + 1..size {
            if paired.contains(&(b, b2)) {
                continue;
            }
            let beta = &compat[&(type_of[b], type_of[b2])];
            for (r, &a) in ctx.arities.iter().enumerate() {
                for idx in 0..2usize.pow(a as u32) {
                    let t = beta.decode(a, idx);
                    if t.contains(&0) && t.contains(&1) && beta.get(r, idx) == TRUE {
                        let image: Vec<usize> =
                            t.iter().map(|&x| if x == 0 { b } else { b2 }).collect();
                        atoms.insert((r, image), true);
                    }
                }
            }
        }
    }
    for ((r, t), v) in atoms {
        if v {
            out.insert(names[r], t);
        }
    }
    out
}

/// Substructure on `elems` (renumbered 0..), with `map[new] = old`.
fn substructure(
    d: &DenseStructure,
    elems: &[usize],
    arities: &[usize],
) -> (DenseStructure, Vec<usize>) {
    let mut out = d.clone();
    out.n = elems.len();
    for (r, &a) in arities.iter().enumerate() {
        let mut table = vec![FALSE; elems.len().pow(a as u32)];
        for (idx, slot) in table.iter_mut().enumerate() {
            let t: Vec<usize> = out.decode(a, idx).iter().map(|&x| elems[x]).collect();
            *slot = d.get(r, index(d.n, &t));
        }
        out.tables[r] = table;
    }
    out.finalize();
    (out, elems.to_vec())
}
