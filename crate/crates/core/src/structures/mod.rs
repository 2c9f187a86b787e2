//! Finite relational structures: tables, restriction, atomic types,
//! K-types, enumeration, doubling and witness search.

pub(crate) mod eval;
mod io;

pub use eval::{evaluate, models, CompiledFormula, DenseStructure, EvalError};
pub use io::{parse_structure, render_structure, StructureParseError};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::normal_form::NormalForm;
use crate::syntax::Signature;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("structures must have a nonempty universe")]
    EmptyUniverse,
    #[error("constant `{0}` is interpreted outside the chosen subset")]
    ConstantOutside(String),
    #[error("element {0} is not in the universe")]
    UnknownElement(usize),
    #[error("element {0} occurs twice in the tuple")]
    DuplicateElement(usize),
    #[error("distinguished element {0} belongs to K")]
    DistinguishedInK(usize),
    #[error("doubling is undefined for structures with constants")]
    ConstantsPresent,
}

/// A finite structure with universe `0..size`. Element names are only used
/// for input and output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    signature: Signature,
    names: Vec<String>,
    relations: BTreeMap<String, BTreeSet<Vec<usize>>>,
    constants: BTreeMap<String, usize>,
}

impl Structure {
    /// Empty relations over `size` elements named `a0, a1, ...`; every
    /// constant initially denotes element 0.
    pub fn new(signature: Signature, size: usize) -> Structure {
        let relations = signature
            .relations
            .keys()
            .map(|r| (r.clone(), BTreeSet::new()))
            .collect();
        let constants = signature.constants.iter().map(|c| (c.clone(), 0)).collect();
        Structure {
            signature,
            names: (0..size).map(|i| format!("a{i}")).collect(),
            relations,
            constants,
        }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Structure {
        assert_eq!(names.len(), self.names.len());
        self.names = names;
        self
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, e: usize) -> &str {
        &self.names[e]
    }

    pub fn element(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn holds(&self, rel: &str, tuple: &[usize]) -> bool {
        self.relations.get(rel).is_some_and(|t| t.contains(tuple))
    }

    pub fn insert(&mut self, rel: &str, tuple: Vec<usize>) {
        debug_assert_eq!(self.signature.arity(rel), Some(tuple.len()));
        debug_assert!(tuple.iter().all(|&e| e < self.size()));
        self.relations
            .entry(rel.to_string())
            .or_default()
            .insert(tuple);
    }

    pub fn set(&mut self, rel: &str, tuple: Vec<usize>, value: bool) {
        if value {
            self.insert(rel, tuple);
        } else if let Some(t) = self.relations.get_mut(rel) {
            t.remove(&tuple);
        }
    }

    pub fn tuples(&self, rel: &str) -> impl Iterator<Item = &Vec<usize>> {
        self.relations.get(rel).into_iter().flatten()
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &String> {
        self.relations.keys()
    }

    pub fn set_constant(&mut self, name: &str, e: usize) {
        debug_assert!(self.signature.is_constant(name));
        self.constants.insert(name.to_string(), e);
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.get(name).copied()
    }

    pub fn constants(&self) -> &BTreeMap<String, usize> {
        &self.constants
    }

    pub fn constant_elements(&self) -> BTreeSet<usize> {
        self.constants.values().copied().collect()
    }

    /// Drops every relation and constant not in `sig`.
    pub fn reduct(&self, sig: &Signature) -> Structure {
        let mut out = Structure::new(sig.clone(), self.size()).with_names(self.names.clone());
        for r in sig.relations.keys() {
            for t in self.tuples(r) {
                out.insert(r, t.clone());
            }
        }
        for c in &sig.constants {
            if let Some(e) = self.constant(c) {
                out.set_constant(c, e);
            }
        }
        out
    }

    /// Image under the renaming `perm[old] = new`.
    pub fn permuted(&self, perm: &[usize]) -> Structure {
        let mut names = vec![String::new(); self.size()];
        for (old, &new) in perm.iter().enumerate() {
            names[new] = self.names[old].clone();
        }
        let mut out = Structure::new(self.signature.clone(), self.size()).with_names(names);
        for (r, ts) in &self.relations {
            for t in ts {
                out.insert(r, t.iter().map(|&e| perm[e]).collect());
            }
        }
        for (c, &e) in &self.constants {
            out.set_constant(c, perm[e]);
        }
        out
    }

    /// Pairs of distinct elements that co-occur in some tuple.
    pub fn gaifman_edges(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for ts in self.relations.values() {
            for t in ts {
                for &a in t {
                    for &b in t {
                        if a < b {
                            out.insert((a, b));
                        }
                    }
                }
            }
        }
        out
    }

    /// Elements of the 1-type of `a`, as a canonical key.
    pub fn one_type(&self, a: usize) -> AtomicType {
        atomic_type(self, &[a]).expect("single element tuple")
    }

    /// Number of elements realizing each 1-type.
    pub fn one_type_census(&self) -> BTreeMap<AtomicType, Vec<usize>> {
        let mut out: BTreeMap<AtomicType, Vec<usize>> = BTreeMap::new();
        for a in 0..self.size() {
            out.entry(self.one_type(a)).or_default().push(a);
        }
        out
    }
}

/// Substructure on `subset` (renumbered in increasing order); also returns
/// the list of original ids, so that `ids[new] = old`.
pub fn restrict_with_map(
    s: &Structure,
    subset: &BTreeSet<usize>,
) -> Result<(Structure, Vec<usize>), StructureError> {
    if subset.is_empty() {
        return Err(StructureError::EmptyUniverse);
    }
    if let Some(&e) = subset.iter().find(|&&e| e >= s.size()) {
        return Err(StructureError::UnknownElement(e));
    }
    let ids: Vec<usize> = subset.iter().copied().collect();
    let mut new_id = vec![usize::MAX; s.size()];
    for (i, &e) in ids.iter().enumerate() {
        new_id[e] = i;
    }
    let names = ids.iter().map(|&e| s.names[e].clone()).collect();
    let mut out = Structure::new(s.signature.clone(), ids.len()).with_names(names);
    for (r, ts) in &s.relations {
        for t in ts {
            if t.iter().all(|&e| new_id[e] != usize::MAX) {
                out.insert(r, t.iter().map(|&e| new_id[e]).collect());
            }
        }
    }
    for (c, &e) in &s.constants {
        if new_id[e] == usize::MAX {
            return Err(StructureError::ConstantOutside(c.clone()));
        }
        out.set_constant(c, new_id[e]);
    }
    Ok((out, ids))
}

pub fn restrict(s: &Structure, subset: &BTreeSet<usize>) -> Result<Structure, StructureError> {
    restrict_with_map(s, subset).map(|(r, _)| r)
}

/// Atomic l-type: the set of atoms true of (x₀, …, x_{l−1}), listed by
/// relation name and variable-index tuple. Atoms absent from the set are
/// false; distinct variables denote distinct elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicType {
    pub arity: usize,
    pub atoms: BTreeSet<(String, Vec<usize>)>,
}

impl AtomicType {
    /// The 1-type of the `i`-th variable.
    pub fn restrict_to(&self, i: usize) -> AtomicType {
        AtomicType {
            arity: 1,
            atoms: self
                .atoms
                .iter()
                .filter(|(_, args)| args.iter().all(|&v| v == i))
                .map(|(r, args)| (r.clone(), vec![0; args.len()]))
                .collect(),
        }
    }

    /// Number of atoms over `arity` variables in `sig` (true or false).
    pub fn atom_count(sig: &Signature, arity: usize) -> usize {
        sig.relations.values().map(|&a| arity.pow(a as u32)).sum()
    }
}

pub fn atomic_type(s: &Structure, elements: &[usize]) -> Result<AtomicType, StructureError> {
    for (i, &e) in elements.iter().enumerate() {
        if e >= s.size() {
            return Err(StructureError::UnknownElement(e));
        }
        if elements[..i].contains(&e) {
            return Err(StructureError::DuplicateElement(e));
        }
    }
    let mut atoms = BTreeSet::new();
    for (r, ts) in &s.relations {
        for t in ts {
            let idx: Option<Vec<usize>> = t
                .iter()
                .map(|e| elements.iter().position(|x| x == e))
                .collect();
            if let Some(idx) = idx {
                atoms.insert((r.clone(), idx));
            }
        }
    }
    Ok(AtomicType {
        arity: elements.len(),
        atoms,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KElem {
    King(usize),
    Distinguished,
}

/// Isomorphism type of the substructure on K ∪ {a} with K fixed pointwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KType {
    pub kings: Vec<usize>,
    pub atoms: BTreeSet<(String, Vec<KElem>)>,
    pub constants: BTreeSet<(String, KElem)>,
}

impl KType {
    pub fn one_type(&self) -> AtomicType {
        AtomicType {
            arity: 1,
            atoms: self
                .atoms
                .iter()
                .filter(|(_, args)| args.iter().all(|a| *a == KElem::Distinguished))
                .map(|(r, args)| (r.clone(), vec![0; args.len()]))
                .collect(),
        }
    }
}

pub fn k_type(s: &Structure, kings: &BTreeSet<usize>, a: usize) -> Result<KType, StructureError> {
    if kings.contains(&a) {
        return Err(StructureError::DistinguishedInK(a));
    }
    if let Some(&e) = kings.iter().chain([&a]).find(|&&e| e >= s.size()) {
        return Err(StructureError::UnknownElement(e));
    }
    let map = |e: usize| {
        if e == a {
            Some(KElem::Distinguished)
        } else if kings.contains(&e) {
            Some(KElem::King(e))
        } else {
            None
        }
    };
    let mut atoms = BTreeSet::new();
    for (r, ts) in &s.relations {
        for t in ts {
            if let Some(args) = t.iter().map(|&e| map(e)).collect::<Option<Vec<_>>>() {
                atoms.insert((r.clone(), args));
            }
        }
    }
    let constants = s
        .constants
        .iter()
        .filter_map(|(c, &e)| map(e).map(|k| (c.clone(), k)))
        .collect();
    Ok(KType {
        kings: kings.iter().copied().collect(),
        atoms,
        constants,
    })
}

/// Every structure over the universe `0..size`, each exactly once: constant
/// interpretations vary slowest, then relation tables in binary counting
/// order over the atom list.
pub fn enumerate_structures(sig: &Signature, size: usize) -> impl Iterator<Item = Structure> + '_ {
    assert!(size >= 1, "structures are nonempty");
    let atoms: Vec<(String, Vec<usize>)> = sig
        .relations
        .iter()
        .flat_map(|(r, &a)| {
            let total = size.pow(a as u32);
            (0..total).map(move |mut idx| {
                let mut t = vec![0; a];
                for slot in t.iter_mut().rev() {
                    *slot = idx % size;
                    idx /= size;
                }
                (r.clone(), t)
            })
        })
        .collect();
    assert!(atoms.len() < 64, "too many ground atoms to enumerate");
    let consts: Vec<String> = sig.constants.iter().cloned().collect();
    let const_choices = size.pow(consts.len() as u32);
    (0..const_choices).flat_map(move |mut cidx| {
        let mut assignment = Vec::new();
        for _ in 0..consts.len() {
            assignment.push(cidx % size);
            cidx /= size;
        }
        let atoms = atoms.clone();
        let consts = consts.clone();
        (0..(1u64 << atoms.len())).map(move |mask| {
            let mut s = Structure::new(sig.clone(), size);
            for (i, (r, t)) in atoms.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    s.insert(r, t.clone());
                }
            }
            for (c, &e) in consts.iter().zip(&assignment) {
                s.set_constant(c, e);
            }
            s
        })
    })
}

/// The doubled structures 2𝔄 (`plus = false`) and 2𝔄⁺ (`plus = true`).
/// Element `(a, c)` gets id `a + c·|A|`.
pub fn double(s: &Structure, plus: bool) -> Result<Structure, StructureError> {
    if !s.constants.is_empty() {
        return Err(StructureError::ConstantsPresent);
    }
    let n = s.size();
    let names = (0..2)
        .flat_map(|c| s.names.iter().map(move |nm| format!("{nm}_{c}")))
        .collect();
    let mut out = Structure::new(s.signature.clone(), 2 * n).with_names(names);
    for (r, ts) in &s.relations {
        for t in ts {
            out.insert(r, t.clone());
            out.insert(r, t.iter().map(|&e| e + n).collect());
        }
    }
    if plus {
        // Cross tuples over exactly two distinct elements (a,0), (a',1):
        // every choice of copies per position that mixes both.
        for (r, &arity) in &s.signature.relations {
            let ts: Vec<Vec<usize>> = s.tuples(r).cloned().collect();
            for t in ts {
                for mask in 1..(1u64 << arity) - 1 {
                    let lifted: Vec<usize> = t
                        .iter()
                        .enumerate()
                        .map(|(i, &e)| e + n * ((mask >> i & 1) as usize))
                        .collect();
                    let distinct: BTreeSet<usize> = lifted.iter().copied().collect();
                    if distinct.len() == 2 {
                        out.insert(r, lifted);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Elements whose 1-type is realized only by themselves, plus every
/// constant interpretation.
pub fn kings(s: &Structure) -> BTreeSet<usize> {
    let mut out: BTreeSet<usize> = s
        .one_type_census()
        .into_values()
        .filter(|v| v.len() == 1)
        .map(|v| v[0])
        .collect();
    out.extend(s.constant_elements());
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessStructure {
    pub element: usize,
    pub conjunct: usize,
    pub witnesses: Vec<usize>,
    pub elements: BTreeSet<usize>,
    pub structure: Structure,
}

/// First witness tuple (in lexicographic order) for element `a` and the
/// `i`-th ∀∃ conjunct of `nf`.
pub fn find_witness_structure(
    s: &Structure,
    a: usize,
    nf: &NormalForm,
    i: usize,
) -> Option<WitnessStructure> {
    let conj = nf.forall_exists.get(i)?;
    let compiled = CompiledFormula::new(s.signature(), &conj.matrix).ok()?;
    let d = DenseStructure::from_structure(s);
    let order: Vec<&str> = compiled.free_variables();
    let k = conj.witnesses.len();
    let n = s.size();
    let mut tuple = vec![0usize; k];
    loop {
        let values: Vec<usize> = order
            .iter()
            .map(|v| {
                if *v == conj.var {
                    a
                } else {
                    let p = conj
                        .witnesses
                        .iter()
                        .position(|w| w == v)
                        .expect("matrix variables are bound");
                    tuple[p]
                }
            })
            .collect();
        if compiled.holds_at(&d, &values) == eval::TRUE {
            let mut elements: BTreeSet<usize> = tuple.iter().copied().collect();
            elements.insert(a);
            let structure = restrict(s, &elements).ok()?;
            return Some(WitnessStructure {
                element: a,
                conjunct: i,
                witnesses: tuple,
                elements,
                structure,
            });
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return None;
            }
            pos -= 1;
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    fn cycle(n: usize) -> Structure {
        let sig = Signature::new().with_relation("R", 2);
        let mut s = Structure::new(sig, n);
        for i in 0..n {
            s.insert("R", vec![i, (i + 1) % n]);
        }
        s
    }

    #[test]
    fn evaluate_examples() {
        let sig = Signature::new().with_relation("P", 1);
        let mut s = Structure::new(sig, 1);
        s.insert("P", vec![0]);
        let (_, f) = parse_formula("relation P/1\nexists x. P(x)").unwrap();
        assert!(models(&s, &f).unwrap());
        let (_, f) = parse_formula("relation P/1\nexists x. P(x) & !P(x)").unwrap();
        assert!(!models(&s, &f).unwrap());
        let (_, f) = parse_formula("relation R/2\nforall x. exists y. R(x,y)").unwrap();
        assert!(models(&cycle(4), &f).unwrap());
    }

    #[test]
    fn evaluate_reports_missing_assignment() {
        let (_, f) = parse_formula("relation R/2\nexists y. R(x,y)").unwrap();
        let err = evaluate(&cycle(3), &f, &BTreeMap::new()).unwrap_err();
        assert_eq!(err, EvalError::UnassignedVariable("x".into()));
        let ok = evaluate(&cycle(3), &f, &BTreeMap::from([("x".to_string(), 1)])).unwrap();
        assert!(ok);
    }

    #[test]
    fn restrict_examples() {
        let c = cycle(4);
        let all: BTreeSet<usize> = (0..4).collect();
        assert_eq!(restrict(&c, &all).unwrap(), c);
        assert_eq!(
            restrict(&c, &BTreeSet::new()),
            Err(StructureError::EmptyUniverse)
        );
        let two = restrict(&c, &BTreeSet::from([1, 2])).unwrap();
        assert_eq!(
            two.tuples("R").cloned().collect::<Vec<_>>(),
            vec![vec![0, 1]]
        );
    }

    #[test]
    fn atomic_type_counts() {
        let sig = Signature::new().with_relation("P", 1);
        let types: BTreeSet<AtomicType> = enumerate_structures(&sig, 1)
            .map(|s| s.one_type(0))
            .collect();
        assert_eq!(types.len(), 2);

        let sig = Signature::new().with_relation("R", 2);
        let types: BTreeSet<AtomicType> = enumerate_structures(&sig, 2)
            .map(|s| atomic_type(&s, &[0, 1]).unwrap())
            .collect();
        assert_eq!(types.len(), 1 << 4);
        assert!(atomic_type(&cycle(3), &[1, 1]).is_err());
    }

    #[test]
    fn k_types() {
        let sig = Signature::new().with_relation("R", 2).with_relation("P", 1);
        let mut s = Structure::new(sig, 3);
        s.insert("R", vec![0, 1]);
        s.insert("R", vec![2, 0]);
        let k = BTreeSet::from([0]);
        assert_ne!(k_type(&s, &k, 1).unwrap(), k_type(&s, &k, 2).unwrap());
        s.insert("R", vec![0, 2]);
        s.insert("R", vec![1, 0]);
        assert_eq!(k_type(&s, &k, 1).unwrap(), k_type(&s, &k, 2).unwrap());
        let empty = k_type(&s, &BTreeSet::new(), 1).unwrap();
        assert_eq!(empty.one_type(), s.one_type(1));
        assert!(k_type(&s, &k, 0).is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(
            enumerate_structures(&Signature::new().with_relation("P", 1), 1).count(),
            2
        );
        assert_eq!(
            enumerate_structures(&Signature::new().with_relation("R", 2), 2).count(),
            16
        );
        let sig = Signature::new().with_relation("P", 1).with_constant("c");
        assert_eq!(enumerate_structures(&sig, 2).count(), 8);
    }

    #[test]
    fn doubling_removes_kings() {
        let sig = Signature::new().with_relation("P", 1).with_relation("Q", 1);
        let mut s = Structure::new(sig, 2);
        s.insert("P", vec![0]);
        assert_eq!(kings(&s), BTreeSet::from([0, 1]));
        assert!(kings(&double(&s, false).unwrap()).is_empty());
        assert!(kings(&double(&s, true).unwrap()).is_empty());
    }

    #[test]
    fn double_plus_projects_pairs() {
        let sig = Signature::new().with_relation("R", 2);
        let mut s = Structure::new(sig, 1);
        s.insert("R", vec![0, 0]);
        let d = double(&s, true).unwrap();
        assert!(d.holds("R", &[0, 1]) && d.holds("R", &[1, 0]));
        let d = double(&s, false).unwrap();
        assert!(!d.holds("R", &[0, 1]));
    }
}
