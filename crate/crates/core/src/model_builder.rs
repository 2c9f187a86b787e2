//! Small-model construction: kings and court, pattern witness structures,
//! copy-and-link with three (or, for LGF₁, four times `s`) copies, and the
//! completion step.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::normal_form::{Dialect, NormalForm};
use crate::structures::{
    double, find_witness_structure, k_type, models, restrict, AtomicType, KType, Structure,
    StructureError,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("the input structure is not a model of the normal form")]
    NotAModel,
    #[error("the signature of the structure does not match the normal form")]
    SignatureMismatch,
    #[error("constants are not supported by the {0} construction")]
    ConstantsUnsupported(Dialect),
    #[error("conflicting assignment to {0} during construction")]
    Conflict(String),
    #[error("no pair of distinct donor elements realizes the 1-types {0} and {1}")]
    NoDonor(usize, usize),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// A size bound that may be too large to write down.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeBound {
    Finite(u128),
    Astronomical,
}

impl SizeBound {
    pub fn admits(self, size: usize) -> bool {
        match self {
            SizeBound::Finite(b) => size as u128 <= b,
            SizeBound::Astronomical => true,
        }
    }

    pub fn finite(self) -> Option<u128> {
        match self {
            SizeBound::Finite(b) => Some(b),
            SizeBound::Astronomical => None,
        }
    }
}

impl fmt::Display for SizeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeBound::Finite(b) => write!(f, "{b}"),
            SizeBound::Astronomical => write!(f, "astronomical"),
        }
    }
}

fn pow2(e: u128) -> Option<u128> {
    if e < 127 {
        Some(1u128 << e)
    } else {
        None
    }
}

/// The size bound of the construction for a normal form of length `n`.
pub fn size_bound(dialect: Dialect, n: usize) -> SizeBound {
    let n = n as u128;
    let nn1 = n * n.saturating_sub(1);
    let value = match dialect {
        Dialect::Gf1 | Dialect::Tgf1NoEq => pow2(n).and_then(|p| p.checked_mul(3 * nn1)),
        Dialect::Lgf1 => pow2(n).and_then(|p| p.checked_mul(4 * n * nn1)),
        Dialect::Tgf1 => pow2(2 * n * n)
            .and_then(pow2)
            .and_then(|p| p.checked_mul(3 * nn1))
            .and_then(|x| x.checked_add(pow2(n)? * (1 + nn1))),
    };
    value.map_or(SizeBound::Astronomical, SizeBound::Finite)
}

/// Number of 1-types over the normal form's signature that are consistent
/// with its universal conjuncts on a one-element structure.
pub fn consistent_one_types(nf: &NormalForm) -> usize {
    let sig = &nf.signature;
    let rels: Vec<(&String, usize)> = sig.relations.iter().map(|(r, &a)| (r, a)).collect();
    if rels.len() > 20 || !sig.constants.is_empty() {
        return 1usize << rels.len().min(63);
    }
    let universal = crate::syntax::Formula::conj(
        nf.guarded_universals
            .iter()
            .map(|g| g.to_formula())
            .chain(nf.universal_pair.iter().map(|p| p.to_formula())),
    );
    (0..1u64 << rels.len())
        .filter(|mask| {
            let mut s = Structure::new(sig.clone(), 1);
            for (i, (r, a)) in rels.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    s.insert(r, vec![0; *a]);
                }
            }
            models(&s, &universal).unwrap_or(true)
        })
        .count()
}

/// Size bound read off the kingless construction itself: at most
/// `copies · types · Σ|ȳᵢ|` elements (times `max |ȳᵢ|` for LGF₁), and at
/// least one. `None` when the construction needs kings (a pair conjunct
/// next to equality in TGF₁, or constants).
pub fn construction_bound(nf: &NormalForm, dialect: Dialect) -> Option<u128> {
    if (dialect == Dialect::Tgf1 && !nf.doubling_removes_kings())
        || !nf.signature.constants.is_empty()
    {
        return None;
    }
    let types = consistent_one_types(nf) as u128;
    let total: u128 = nf
        .forall_exists
        .iter()
        .map(|c| c.witnesses.len() as u128)
        .sum();
    let per = if dialect == Dialect::Lgf1 {
        4 * nf.max_witnesses() as u128
    } else {
        3
    };
    Some((per * types * total).max(1))
}

/// Kings: elements whose 1-type is realized only once, plus constants.
pub fn find_kings(s: &Structure) -> BTreeSet<usize> {
    crate::structures::kings(s)
}

fn check_model(s: &Structure, nf: &NormalForm) -> Result<(), BuildError> {
    if s.signature().relations != nf.signature.relations {
        return Err(BuildError::SignatureMismatch);
    }
    match models(s, &nf.to_formula()) {
        Ok(true) => Ok(()),
        Ok(false) => Err(BuildError::NotAModel),
        Err(_) => Err(BuildError::SignatureMismatch),
    }
}

/// Court elements: the kings plus one witness structure (lowest witness
/// tuple) per king and ∀∃ conjunct.
fn court_elements(
    s: &Structure,
    nf: &NormalForm,
    kings: &BTreeSet<usize>,
) -> Result<BTreeSet<usize>, BuildError> {
    let mut court = kings.clone();
    for &k in kings {
        for i in 0..nf.forall_exists.len() {
            let w = find_witness_structure(s, k, nf, i).ok_or(BuildError::NotAModel)?;
            court.extend(w.elements);
        }
    }
    Ok(court)
}

/// The court of `s` as a substructure, or `None` when there are no kings.
pub fn build_court(s: &Structure, nf: &NormalForm) -> Result<Option<Structure>, BuildError> {
    check_model(s, nf)?;
    let kings = find_kings(s);
    if kings.is_empty() {
        return Ok(None);
    }
    Ok(Some(restrict(s, &court_elements(s, nf, &kings)?)?))
}

/// One pattern witness structure `W_{π,i}`: the representative element,
/// the kings it uses and the remaining elements `W*` in witness order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub k_type: usize,
    pub conjunct: usize,
    pub representative: usize,
    pub kings: Vec<usize>,
    pub rest: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShrinkPlan {
    pub doubled: bool,
    pub kings: Vec<usize>,
    pub court: Vec<usize>,
    pub royal_types: BTreeSet<AtomicType>,
    pub non_royal_types: BTreeSet<AtomicType>,
    pub k_types: Vec<KType>,
    pub patterns: Vec<Pattern>,
    /// Values of the copy index `j`.
    pub copies: usize,
    /// Values of the extra index `s` (1 outside LGF₁).
    pub slots: usize,
}

#[derive(Clone, Debug)]
pub struct ShrinkOutcome {
    pub plan: ShrinkPlan,
    pub structure: Structure,
    pub bound: SizeBound,
    pub verified: bool,
}

impl ShrinkOutcome {
    pub fn within_bound(&self) -> bool {
        self.bound.admits(self.structure.size())
    }
}

/// Partial assignment of atoms of the structure under construction.
struct Draft<'a> {
    donor: &'a Structure,
    size: usize,
    atoms: HashMap<(String, Vec<usize>), bool>,
    origin: Vec<usize>,
}

impl<'a> Draft<'a> {
    /// Makes the structure on `map`'s domain isomorphic (via `map`) to the
    /// donor's structure on its range. Tuples rejected by `keep` are skipped.
    fn copy(
        &mut self,
        map: &[(usize, usize)],
        keep: &dyn Fn(&[usize]) -> bool,
    ) -> Result<(), BuildError> {
        for (r, &arity) in &self.donor.signature().relations {
            let m = map.len();
            let total = m.pow(arity as u32);
            for mut idx in 0..total {
                let mut t = vec![0; arity];
                let mut src = vec![0; arity];
                for p in (0..arity).rev() {
                    let (b, a) = map[idx % m];
                    t[p] = b;
                    src[p] = a;
                    idx /= m;
                }
                if !keep(&t) {
                    continue;
                }
                let value = self.donor.holds(r, &src);
                match self.atoms.insert((r.clone(), t.clone()), value) {
                    Some(old) if old != value => {
                        let names: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                        return Err(BuildError::Conflict(format!("{r}({})", names.join(","))));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn add(&mut self, origin: usize) -> usize {
        self.origin.push(origin);
        self.size += 1;
        self.size - 1
    }

    fn pair_defined(&self, b: usize, c: usize) -> bool {
        self.donor.signature().relations.iter().any(|(r, &a)| {
            a >= 2 && {
                let mut t = vec![b; a];
                t[a - 1] = c;
                self.atoms.contains_key(&(r.clone(), t))
            }
        })
    }

    fn finish(self, kings_constants: &BTreeMap<String, usize>) -> Structure {
        let mut s = Structure::new(self.donor.signature().clone(), self.size);
        for ((r, t), v) in self.atoms {
            if v {
                s.insert(&r, t);
            }
        }
        for (c, &e) in kings_constants {
            s.set_constant(c, e);
        }
        s
    }
}

/// Builds a model of `nf` bounded as in the dialect's construction,
/// starting from the model `s`.
pub fn shrink_model(
    s: &Structure,
    nf: &NormalForm,
    dialect: Dialect,
) -> Result<ShrinkOutcome, BuildError> {
    check_model(s, nf)?;
    let has_constants = !s.constants().is_empty();
    if dialect == Dialect::Lgf1 && has_constants {
        return Err(BuildError::ConstantsUnsupported(dialect));
    }
    let doubled = dialect != Dialect::Tgf1 && !has_constants;
    let donor = if doubled {
        double(s, dialect == Dialect::Tgf1NoEq)?
    } else {
        s.clone()
    };
    debug_assert!(!doubled || models(&donor, &nf.to_formula()).unwrap_or(false));
    let bound = size_bound(dialect, nf.size_n);
    let (plan, structure) = if dialect == Dialect::Lgf1 {
        build_lgf(&donor, nf)?
    } else {
        build_tgf(&donor, nf, doubled)?
    };
    let verified = models(&structure, &nf.to_formula()).unwrap_or(false);
    Ok(ShrinkOutcome {
        plan,
        structure,
        bound,
        verified,
    })
}

fn type_sets(
    a: &Structure,
    kings: &BTreeSet<usize>,
) -> (BTreeSet<AtomicType>, BTreeSet<AtomicType>) {
    let mut royal = BTreeSet::new();
    let mut other = BTreeSet::new();
    for e in 0..a.size() {
        if kings.contains(&e) {
            royal.insert(a.one_type(e));
        } else {
            other.insert(a.one_type(e));
        }
    }
    (royal, other)
}

fn single_element(a: &Structure, plan: ShrinkPlan) -> Result<(ShrinkPlan, Structure), BuildError> {
    let elem = plan.patterns.first().map_or(0, |p| p.representative);
    let s = restrict(a, &BTreeSet::from([elem]))?;
    Ok((plan, s))
}

fn build_tgf(
    a: &Structure,
    nf: &NormalForm,
    doubled: bool,
) -> Result<(ShrinkPlan, Structure), BuildError> {
    let kings = find_kings(a);
    let court = court_elements(a, nf, &kings)?;
    let (royal_types, non_royal_types) = type_sets(a, &kings);

    let mut inventory: Vec<(KType, usize)> = Vec::new();
    let mut index: BTreeMap<KType, usize> = BTreeMap::new();
    let mut type_of = vec![usize::MAX; a.size()];
    for e in 0..a.size() {
        if kings.contains(&e) {
            continue;
        }
        let kt = k_type(a, &kings, e)?;
        let id = *index.entry(kt.clone()).or_insert_with(|| {
            inventory.push((kt, e));
            inventory.len() - 1
        });
        type_of[e] = id;
    }
    let conjuncts = nf.forall_exists.len();
    let mut patterns = Vec::new();
    for (pi, (_, rep)) in inventory.iter().enumerate() {
        for i in 0..conjuncts {
            let w = find_witness_structure(a, *rep, nf, i).ok_or(BuildError::NotAModel)?;
            let mut rest = Vec::new();
            for &e in &w.witnesses {
                if e != *rep && !kings.contains(&e) && !rest.contains(&e) {
                    rest.push(e);
                }
            }
            let used_kings = w
                .elements
                .iter()
                .copied()
                .filter(|e| kings.contains(e))
                .collect();
            patterns.push(Pattern {
                k_type: pi,
                conjunct: i,
                representative: *rep,
                kings: used_kings,
                rest,
            });
        }
    }
    let plan = ShrinkPlan {
        doubled,
        kings: kings.iter().copied().collect(),
        court: court.iter().copied().collect(),
        royal_types,
        non_royal_types,
        k_types: inventory.iter().map(|(k, _)| k.clone()).collect(),
        patterns,
        copies: 3,
        slots: 1,
    };
    if court.is_empty() && plan.patterns.iter().all(|p| p.rest.is_empty()) {
        return single_element(a, plan);
    }

    let mut draft = Draft {
        donor: a,
        size: 0,
        atoms: HashMap::new(),
        origin: Vec::new(),
    };
    // Court, kept as in the donor. Kings keep their ids relative to the court.
    let mut new_id: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &court {
        new_id.insert(c, draft.add(c));
    }
    let court_map: Vec<(usize, usize)> = court.iter().map(|&c| (new_id[&c], c)).collect();
    draft.copy(&court_map, &|_| true)?;
    let king_map: Vec<(usize, usize)> = kings.iter().map(|&k| (new_id[&k], k)).collect();

    // Copies W*_{π,i,j}; copies[(p, j)] lists the new ids in `rest` order.
    let mut copies: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut member: Vec<Option<(usize, usize)>> = Vec::new();
    for (p, pat) in plan.patterns.iter().enumerate() {
        for j in 0..3 {
            let ids: Vec<usize> = pat.rest.iter().map(|&e| draft.add(e)).collect();
            member.resize(draft.size, None);
            for &b in &ids {
                member[b] = Some((p, j));
            }
            let mut map = king_map.clone();
            map.extend(ids.iter().copied().zip(pat.rest.iter().copied()));
            draft.copy(&map, &|_| true)?;
            copies.insert((p, j), ids);
        }
    }
    member.resize(draft.size, None);

    let pattern_index: BTreeMap<(usize, usize), usize> = plan
        .patterns
        .iter()
        .enumerate()
        .map(|(p, pat)| ((pat.k_type, pat.conjunct), p))
        .collect();
    let link = |draft: &mut Draft, b: usize, pi: usize, j: usize| -> Result<(), BuildError> {
        for i in 0..conjuncts {
            let p = pattern_index[&(pi, i)];
            let pat = &plan.patterns[p];
            let mut map = vec![(b, pat.representative)];
            map.extend(pat.kings.iter().map(|&k| (new_id[&k], k)));
            map.extend(
                copies[&(p, j)]
                    .iter()
                    .copied()
                    .zip(pat.rest.iter().copied()),
            );
            draft.copy(&map, &|_| true)?;
        }
        Ok(())
    };
    for &c in &court {
        if !kings.contains(&c) {
            link(&mut draft, new_id[&c], type_of[c], 0)?;
        }
    }
    for b in 0..draft.size {
        if let Some((_, j)) = member[b] {
            let pi = type_of[draft.origin[b]];
            link(&mut draft, b, pi, (j + 1) % 3)?;
        }
    }

    complete_pairs(&mut draft, a, &kings.iter().map(|&k| new_id[&k]).collect())?;
    let constants: BTreeMap<String, usize> = a
        .constants()
        .iter()
        .map(|(c, e)| (c.clone(), new_id[e]))
        .collect();
    Ok((plan, draft.finish(&constants)))
}

/// Gives every undefined pair of distinct elements the 2-type of a donor
/// pair with matching 1-types (lowest ids first). Tuples over the pair and
/// the constants (kings) that are still undefined are copied as well.
fn complete_pairs(
    draft: &mut Draft,
    a: &Structure,
    kings: &BTreeSet<usize>,
) -> Result<(), BuildError> {
    let census = a.one_type_census();
    let type_ids: BTreeMap<&AtomicType, usize> =
        census.keys().enumerate().map(|(i, t)| (t, i)).collect();
    let members: Vec<&Vec<usize>> = census.values().collect();
    let tp: Vec<usize> = draft
        .origin
        .iter()
        .map(|&o| type_ids[&a.one_type(o)])
        .collect();
    let constant_kings: Vec<(usize, usize)> = a
        .constants()
        .values()
        .map(|&e| {
            let b = draft
                .origin
                .iter()
                .position(|&o| o == e)
                .expect("constants are in the court");
            (b, e)
        })
        .collect();
    for b in 0..draft.size {
        for c in b + 1..draft.size {
            if kings.contains(&b) && kings.contains(&c) || draft.pair_defined(b, c) {
                continue;
            }
            let (t1, t2) = (tp[b], tp[c]);
            let donor = members[t1]
                .iter()
                .flat_map(|&x| members[t2].iter().map(move |&y| (x, y)))
                .find(|(x, y)| x != y)
                .ok_or(BuildError::NoDonor(t1, t2))?;
            let mut map = vec![(b, donor.0), (c, donor.1)];
            for &(kb, ke) in &constant_kings {
                if ke != donor.0 && ke != donor.1 {
                    map.push((kb, ke));
                }
            }
            draft.copy(&map, &|t| t.contains(&b) && t.contains(&c))?;
        }
    }
    Ok(())
}

fn build_lgf(a: &Structure, nf: &NormalForm) -> Result<(ShrinkPlan, Structure), BuildError> {
    let census = a.one_type_census();
    let reps: Vec<usize> = census.values().map(|v| v[0]).collect();
    let type_ids: BTreeMap<&AtomicType, usize> =
        census.keys().enumerate().map(|(i, t)| (t, i)).collect();
    let conjuncts = nf.forall_exists.len();
    let mut patterns = Vec::new();
    for (pi, &rep) in reps.iter().enumerate() {
        for i in 0..conjuncts {
            let w = find_witness_structure(a, rep, nf, i).ok_or(BuildError::NotAModel)?;
            let mut rest = Vec::new();
            for &e in &w.witnesses {
                if e != rep && !rest.contains(&e) {
                    rest.push(e);
                }
            }
            patterns.push(Pattern {
                k_type: pi,
                conjunct: i,
                representative: rep,
                kings: Vec::new(),
                rest,
            });
        }
    }
    let slots = patterns.iter().map(|p| p.rest.len()).max().unwrap_or(0);
    let plan = ShrinkPlan {
        doubled: true,
        kings: Vec::new(),
        court: Vec::new(),
        royal_types: BTreeSet::new(),
        non_royal_types: census.keys().cloned().collect(),
        k_types: reps
            .iter()
            .map(|&r| k_type(a, &BTreeSet::new(), r))
            .collect::<Result<_, _>>()?,
        patterns,
        copies: 4,
        slots,
    };
    if slots == 0 {
        return single_element(a, plan);
    }
    let mut draft = Draft {
        donor: a,
        size: 0,
        atoms: HashMap::new(),
        origin: Vec::new(),
    };
    // member[b] = (j, position s ≥ 1 within its copy)
    let mut member: Vec<(usize, usize)> = Vec::new();
    let mut copies: BTreeMap<(usize, usize, usize), Vec<usize>> = BTreeMap::new();
    for (p, pat) in plan.patterns.iter().enumerate() {
        for j in 0..4 {
            for s in 1..=slots {
                let ids: Vec<usize> = pat.rest.iter().map(|&e| draft.add(e)).collect();
                for (pos, _) in ids.iter().enumerate() {
                    member.push((j, pos + 1));
                }
                let map: Vec<(usize, usize)> =
                    ids.iter().copied().zip(pat.rest.iter().copied()).collect();
                draft.copy(&map, &|_| true)?;
                copies.insert((p, j, s), ids);
            }
        }
    }
    let pattern_index: BTreeMap<(usize, usize), usize> = plan
        .patterns
        .iter()
        .enumerate()
        .map(|(p, pat)| ((pat.k_type, pat.conjunct), p))
        .collect();
    for b in 0..draft.size {
        let (j, s) = member[b];
        let pi = type_ids[&a.one_type(draft.origin[b])];
        for i in 0..conjuncts {
            let p = pattern_index[&(pi, i)];
            let pat = &plan.patterns[p];
            let mut map = vec![(b, pat.representative)];
            map.extend(
                copies[&(p, (j + 1) % 4, s)]
                    .iter()
                    .copied()
                    .zip(pat.rest.iter().copied()),
            );
            draft.copy(&map, &|t| t.contains(&b))?;
        }
    }
    let s = draft.finish(&BTreeMap::new());
    Ok((plan, s))
}

/// Cliques of size ≥ 3 in the Gaifman graph (listed as sorted element sets).
pub fn gaifman_triangles(s: &Structure) -> Vec<[usize; 3]> {
    let edges = s.gaifman_edges();
    let adj = |a: usize, b: usize| edges.contains(&(a.min(b), a.max(b)));
    let n = s.size();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if !adj(a, b) {
                continue;
            }
            for c in b + 1..n {
                if adj(a, c) && adj(b, c) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}
