//! Finite relational structures over the fixed vocabulary used throughout the
//! crate, with embedding search, canonical forms and the irreducibility /
//! homomorphism-embedding predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::lattice::{Elem, Lattice};

/// Relation symbols. Lattice elements and copy indices are baked into the
/// symbol, so one enum covers every language in use.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// Binary: `d(x, y) = level` in an ordered space.
    Dist(Elem),
    /// Binary: the pulled-back subquotient order of language slot `k`.
    Order(usize),
    /// Unary sort predicate `P_{E,i}` (copy indices are 1-based).
    P(Elem, usize),
    /// Binary `U_{E,E'}` with `E < E'`.
    U(Elem, Elem),
    /// Binary `B_{E,i,j}`.
    B(Elem, usize, usize),
    /// Ternary `D_{E,E'}`.
    D(Elem, Elem),
    /// Binary `D^exists`.
    DEx,
    /// Binary linear order.
    Less,
}

impl Symbol {
    pub fn arity(&self) -> usize {
        match self {
            Symbol::P(..) => 1,
            Symbol::D(..) => 3,
            _ => 2,
        }
    }

    pub fn describe(&self, l: &Lattice) -> String {
        match *self {
            Symbol::Dist(e) => format!("d={}", l.label(e)),
            Symbol::Order(k) => format!("<[{k}]"),
            Symbol::P(e, i) => format!("P({},{})", l.label(e), i),
            Symbol::U(e, f) => format!("U({},{})", l.label(e), l.label(f)),
            Symbol::B(e, i, j) => format!("B({},{},{})", l.label(e), i, j),
            Symbol::D(e, f) => format!("D({},{})", l.label(e), l.label(f)),
            Symbol::DEx => "Dex".into(),
            Symbol::Less => "<".into(),
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub sym: Symbol,
    args: [usize; 3],
}

impl Fact {
    pub fn new(sym: Symbol, args: &[usize]) -> Self {
        assert_eq!(args.len(), sym.arity(), "arity mismatch for {sym:?}");
        let mut a = [0; 3];
        a[..args.len()].copy_from_slice(args);
        Fact { sym, args: a }
    }

    pub fn unary(sym: Symbol, x: usize) -> Self {
        Self::new(sym, &[x])
    }

    pub fn binary(sym: Symbol, x: usize, y: usize) -> Self {
        Self::new(sym, &[x, y])
    }

    pub fn args(&self) -> &[usize] {
        &self.args[..self.sym.arity()]
    }

    pub fn map(&self, f: impl Fn(usize) -> usize) -> Fact {
        let mapped: Vec<usize> = self.args().iter().map(|&x| f(x)).collect();
        Fact::new(self.sym, &mapped)
    }
}

impl fmt::Debug for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.sym, self.args())
    }
}

#[derive(Clone, Default)]
pub struct Structure {
    len: usize,
    facts: BTreeSet<Fact>,
    incident: Vec<Vec<Fact>>,
}

// Incidence lists depend on insertion order; equality is on facts.
impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.facts == other.facts
    }
}

impl Eq for Structure {}

impl fmt::Debug for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Structure").field("len", &self.len).field("facts", &self.facts).finish()
    }
}

impl Structure {
    pub fn new(len: usize) -> Self {
        Structure { len, facts: BTreeSet::new(), incident: vec![vec![]; len] }
    }

    pub fn from_facts(len: usize, facts: impl IntoIterator<Item = Fact>) -> Self {
        let mut s = Self::new(len);
        for f in facts {
            s.insert(f);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn add_element(&mut self) -> usize {
        self.incident.push(vec![]);
        self.len += 1;
        self.len - 1
    }

    pub fn insert(&mut self, f: Fact) -> bool {
        assert!(f.args().iter().all(|&x| x < self.len), "fact {f:?} out of range");
        if !self.facts.insert(f) {
            return false;
        }
        let mut seen = [usize::MAX; 3];
        for (k, &x) in f.args().iter().enumerate() {
            if !seen[..k].contains(&x) {
                self.incident[x].push(f);
            }
            seen[k] = x;
        }
        true
    }

    pub fn remove(&mut self, f: &Fact) -> bool {
        if !self.facts.remove(f) {
            return false;
        }
        for &x in f.args() {
            self.incident[x].retain(|g| g != f);
        }
        true
    }

    /// Drops every fact with the given symbol predicate.
    pub fn remove_where(&mut self, pred: impl Fn(&Symbol) -> bool) {
        let doomed: Vec<Fact> = self.facts.iter().filter(|f| pred(&f.sym)).copied().collect();
        for f in doomed {
            self.remove(&f);
        }
    }

    pub fn holds(&self, f: &Fact) -> bool {
        self.facts.contains(f)
    }

    pub fn holds2(&self, sym: Symbol, x: usize, y: usize) -> bool {
        self.facts.contains(&Fact::binary(sym, x, y))
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn incident(&self, x: usize) -> &[Fact] {
        &self.incident[x]
    }

    pub fn unary_of(&self, x: usize) -> impl Iterator<Item = Symbol> + '_ {
        self.incident[x].iter().filter(|f| f.sym.arity() == 1).map(|f| f.sym)
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.facts.iter().map(|f| f.sym).collect()
    }

    /// Induced substructure on `elems`, relabelled `0..elems.len()` in the
    /// given order.
    pub fn substructure(&self, elems: &[usize]) -> Structure {
        let mut pos = vec![usize::MAX; self.len];
        for (i, &e) in elems.iter().enumerate() {
            pos[e] = i;
        }
        let mut s = Structure::new(elems.len());
        for &e in elems {
            for f in &self.incident[e] {
                if f.args().iter().all(|&x| pos[x] != usize::MAX) {
                    s.insert(f.map(|x| pos[x]));
                }
            }
        }
        s
    }

    /// Relabels element `x` as `perm[x]`.
    pub fn permuted(&self, perm: &[usize]) -> Structure {
        Structure::from_facts(self.len, self.facts.iter().map(|f| f.map(|x| perm[x])))
    }

    /// `map` is injective and reflects and preserves every fact.
    pub fn is_embedding(&self, target: &Structure, map: &[usize]) -> bool {
        if map.len() != self.len || map.iter().any(|&x| x >= target.len) {
            return false;
        }
        let mut inv = vec![usize::MAX; target.len];
        for (i, &m) in map.iter().enumerate() {
            if inv[m] != usize::MAX {
                return false;
            }
            inv[m] = i;
        }
        if !self.facts.iter().all(|f| target.holds(&f.map(|x| map[x]))) {
            return false;
        }
        map.iter().all(|&m| {
            target.incident[m]
                .iter()
                .all(|f| f.args().iter().any(|&x| inv[x] == usize::MAX) || self.holds(&f.map(|x| inv[x])))
        })
    }

    /// Embeddings `self -> target` in lexicographic order, at most `limit`.
    pub fn embeddings(&self, target: &Structure, limit: usize) -> Vec<Vec<usize>> {
        let mut out = vec![];
        if self.len > target.len || limit == 0 {
            return out;
        }
        let sig_a: Vec<Vec<Symbol>> = (0..self.len).map(|x| self.local_signature(x)).collect();
        let sig_b: Vec<Vec<Symbol>> = (0..target.len).map(|x| target.local_signature(x)).collect();
        let candidates: Vec<Vec<usize>> =
            (0..self.len).map(|x| (0..target.len).filter(|&y| sig_a[x] == sig_b[y]).collect()).collect();
        if candidates.iter().any(|c| c.is_empty()) {
            return out;
        }
        let mut search = EmbeddingSearch {
            a: self,
            b: target,
            candidates,
            map: vec![usize::MAX; self.len],
            inv: vec![usize::MAX; target.len],
            out: &mut out,
            limit,
        };
        search.run(0);
        out
    }

    /// Backtracking search restricted to elements of equal refined colour.
    pub fn is_isomorphic(&self, other: &Structure) -> bool {
        if self.len != other.len || self.facts.len() != other.facts.len() {
            return false;
        }
        let (ca, cb) = (self.refined_colors(), other.refined_colors());
        let mut sa = ca.clone();
        let mut sb = cb.clone();
        sa.sort();
        sb.sort();
        if sa != sb {
            return false;
        }
        let candidates: Vec<Vec<usize>> =
            (0..self.len).map(|x| (0..other.len).filter(|&y| ca[x] == cb[y]).collect()).collect();
        let mut out = vec![];
        let mut search = EmbeddingSearch {
            a: self,
            b: other,
            candidates,
            map: vec![usize::MAX; self.len],
            inv: vec![usize::MAX; other.len],
            out: &mut out,
            limit: 1,
        };
        search.run(0);
        !out.is_empty()
    }

    /// Isomorphism-invariant hash: size, fact count and the multiset of
    /// refined colours.
    pub fn invariant(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut c = self.refined_colors();
        c.sort();
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (self.len, self.facts.len(), c).hash(&mut h);
        h.finish()
    }

    /// Distinct images of embeddings of `self` into `target`, each sorted.
    pub fn copies_in(&self, target: &Structure) -> Vec<Vec<usize>> {
        let set: BTreeSet<Vec<usize>> = self
            .embeddings(target, usize::MAX)
            .into_iter()
            .map(|mut m| {
                m.sort_unstable();
                m
            })
            .collect();
        set.into_iter().collect()
    }

    /// Unary facts and reflexive facts on `x`; these must be matched exactly
    /// by any embedding.
    fn local_signature(&self, x: usize) -> Vec<Symbol> {
        let mut v: Vec<Symbol> =
            self.incident[x].iter().filter(|f| f.args().iter().all(|&y| y == x)).map(|f| f.sym).collect();
        v.sort();
        v
    }

    /// Every two distinct elements occur together in some fact.
    pub fn is_irreducible(&self) -> bool {
        let mut covered = vec![vec![false; self.len]; self.len];
        for f in &self.facts {
            for &x in f.args() {
                for &y in f.args() {
                    covered[x][y] = true;
                }
            }
        }
        (0..self.len).all(|x| (0..self.len).all(|y| x == y || covered[x][y]))
    }

    /// `map` is a homomorphism whose restriction to every irreducible
    /// substructure is an embedding. Exhaustive over subsets, so only for
    /// small structures (at most 20 elements).
    pub fn is_hom_embedding(&self, target: &Structure, map: &[usize]) -> bool {
        assert!(self.len <= 20, "homomorphism-embedding check is exponential");
        if map.len() != self.len || map.iter().any(|&x| x >= target.len) {
            return false;
        }
        if !self.facts.iter().all(|f| target.holds(&f.map(|x| map[x]))) {
            return false;
        }
        for mask in 1u32..(1u32 << self.len) {
            let elems: Vec<usize> = (0..self.len).filter(|i| mask & (1 << i) != 0).collect();
            let sub = self.substructure(&elems);
            if !sub.is_irreducible() {
                continue;
            }
            let image: Vec<usize> = elems.iter().map(|&e| map[e]).collect();
            let mut sorted = image.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != image.len() {
                return false;
            }
            // Image of an injective restriction must reflect facts among
            // the image as well.
            let tsub = target.substructure(&image);
            if tsub != sub {
                return false;
            }
        }
        true
    }

    /// Canonical relabelling: the lexicographically least sorted fact list
    /// over all relabellings that respect an iterated colour refinement.
    pub fn canonical_form(&self) -> CanonicalForm {
        let n = self.len;
        let colors = self.refined_colors();
        let mut cells: BTreeMap<&Vec<u64>, Vec<usize>> = BTreeMap::new();
        for (x, c) in colors.iter().enumerate() {
            cells.entry(c).or_default().push(x);
        }
        let cells: Vec<Vec<usize>> = cells.into_values().collect();
        let mut best: Option<Vec<Fact>> = None;
        let mut perm = vec![0usize; n];
        let mut cell_perms: Vec<Vec<usize>> = cells.clone();
        fn recurse(
            s: &Structure,
            cells: &[Vec<usize>],
            cell_perms: &mut Vec<Vec<usize>>,
            depth: usize,
            perm: &mut Vec<usize>,
            best: &mut Option<Vec<Fact>>,
        ) {
            if depth == cells.len() {
                let mut next = 0;
                for cp in cell_perms.iter() {
                    for &x in cp {
                        perm[x] = next;
                        next += 1;
                    }
                }
                let mut facts: Vec<Fact> = s.facts.iter().map(|f| f.map(|x| perm[x])).collect();
                facts.sort();
                if best.as_ref().is_none_or(|b| facts < *b) {
                    *best = Some(facts);
                }
                return;
            }
            let mut items = cells[depth].clone();
            permute_all(&mut items, 0, &mut |p| {
                cell_perms[depth] = p.to_vec();
                recurse(s, cells, cell_perms, depth + 1, perm, best);
            });
        }
        recurse(self, &cells, &mut cell_perms, 0, &mut perm, &mut best);
        CanonicalForm { len: n, facts: best.unwrap_or_default() }
    }

    fn refined_colors(&self) -> Vec<Vec<u64>> {
        use std::collections::hash_map::DefaultHasher;
        use std::hash::{Hash, Hasher};
        let n = self.len;
        let mut colors: Vec<u64> = (0..n)
            .map(|x| {
                let mut h = DefaultHasher::new();
                self.local_signature(x).hash(&mut h);
                h.finish()
            })
            .collect();
        for _ in 0..n.max(1) {
            let next: Vec<u64> = (0..n)
                .map(|x| {
                    let mut parts: Vec<(Symbol, usize, Vec<u64>)> = self.incident[x]
                        .iter()
                        .flat_map(|f| {
                            let args = f.args();
                            args.iter()
                                .enumerate()
                                .filter(|(_, &y)| y == x)
                                .map(|(pos, _)| (f.sym, pos, args.iter().map(|&y| colors[y]).collect()))
                                .collect::<Vec<_>>()
                        })
                        .collect();
                    parts.sort();
                    let mut h = DefaultHasher::new();
                    colors[x].hash(&mut h);
                    parts.hash(&mut h);
                    h.finish()
                })
                .collect();
            let distinct = |c: &[u64]| c.iter().collect::<BTreeSet<_>>().len();
            let stable = distinct(&next) == distinct(&colors);
            colors = next;
            if stable {
                break;
            }
        }
        // Colours are hashes; order cells by the hash value, which is
        // isomorphism-invariant.
        colors.into_iter().map(|c| vec![c]).collect()
    }
}

struct EmbeddingSearch<'a> {
    a: &'a Structure,
    b: &'a Structure,
    candidates: Vec<Vec<usize>>,
    map: Vec<usize>,
    inv: Vec<usize>,
    out: &'a mut Vec<Vec<usize>>,
    limit: usize,
}

impl EmbeddingSearch<'_> {
    fn run(&mut self, i: usize) {
        if self.out.len() >= self.limit {
            return;
        }
        if i == self.a.len {
            self.out.push(self.map.clone());
            return;
        }
        for k in 0..self.candidates[i].len() {
            let y = self.candidates[i][k];
            if self.inv[y] != usize::MAX {
                continue;
            }
            self.map[i] = y;
            self.inv[y] = i;
            if self.consistent(i, y) {
                self.run(i + 1);
            }
            self.map[i] = usize::MAX;
            self.inv[y] = usize::MAX;
            if self.out.len() >= self.limit {
                return;
            }
        }
    }

    fn consistent(&self, x: usize, y: usize) -> bool {
        let forward = self.a.incident[x]
            .iter()
            .all(|f| f.args().iter().any(|&z| self.map[z] == usize::MAX) || self.b.holds(&f.map(|z| self.map[z])));
        forward
            && self.b.incident[y]
                .iter()
                .all(|f| f.args().iter().any(|&z| self.inv[z] == usize::MAX) || self.a.holds(&f.map(|z| self.inv[z])))
    }
}

/// Heap's algorithm, calling `f` on every permutation of `items[k..]`.
pub(crate) fn permute_all<F: FnMut(&[usize])>(items: &mut Vec<usize>, k: usize, f: &mut F) {
    if k + 1 >= items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute_all(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Isomorphism-invariant key of a structure.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm {
    pub len: usize,
    pub facts: Vec<Fact>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> Structure {
        let mut s = Structure::new(n);
        for i in 0..n {
            for j in i + 1..n {
                s.insert(Fact::binary(Symbol::Less, i, j));
            }
        }
        s
    }

    #[test]
    fn chain_embeddings_are_increasing_maps() {
        let a = chain(2);
        let c = chain(4);
        assert_eq!(a.embeddings(&c, usize::MAX).len(), 6);
        assert_eq!(a.copies_in(&c).len(), 6);
    }

    #[test]
    fn isomorphism_respects_relabelling() {
        let s = chain(4);
        let p = s.permuted(&[2, 0, 3, 1]);
        assert!(s.is_isomorphic(&p));
        assert_eq!(s.canonical_form(), p.canonical_form());
        assert_ne!(s.canonical_form(), chain(3).canonical_form());
    }

    #[test]
    fn irreducibility() {
        assert!(chain(3).is_irreducible());
        assert!(Structure::new(1).is_irreducible());
        assert!(!Structure::new(2).is_irreducible());
    }

    #[test]
    fn hom_embedding_can_collapse_unrelated_points() {
        let a = Structure::new(2);
        let b = Structure::new(1);
        assert!(a.is_hom_embedding(&b, &[0, 0]));
        let c = chain(2);
        let mut loopy = Structure::new(1);
        loopy.insert(Fact::binary(Symbol::Less, 0, 0));
        assert!(!c.is_hom_embedding(&loopy, &[0, 0]));
        assert!(c.is_hom_embedding(&chain(3), &[0, 2]));
    }

    #[test]
    fn substructure_is_induced() {
        let s = chain(4);
        let sub = s.substructure(&[3, 1]);
        assert!(sub.holds2(Symbol::Less, 1, 0));
        assert_eq!(sub.fact_count(), 1);
    }
}
