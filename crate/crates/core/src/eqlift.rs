//! Structures of imaginary elements: each element is a class at some level
//! `E`, linked upwards to the classes containing it.

use std::sync::Arc;

use thiserror::Error;

use crate::lattice::{Elem, Lattice};
use crate::space::{Point, SpaceError, UltrametricSpace};
use crate::structure::{Fact, Structure, Symbol};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum K0Error {
    #[error("duplicate element label `{0}`")]
    DuplicateLabel(String),
    #[error("U edge from `{0}` to `{1}` is ill-typed")]
    UTyped(String, String),
    #[error("`{0}` has no U edge to level {1}")]
    UClosed(String, String),
    #[error("`{0}` has several U edges to level {1}")]
    UNotFunctional(String, String),
    #[error("U edges from `{0}` are not coherent at level {1}")]
    Coherent(String, String),
    #[error("`{0}` and `{1}` have several common lower classes")]
    DownSemiClosed(String, String),
    #[error("`{0}` and `{1}` have no common class")]
    NoCommonClass(String, String),
    #[error("`{0}` and `{1}` have no least common level")]
    DeltaUndefined(String, String),
    #[error("saturation exceeded its budget of {0} new elements")]
    SaturationBudgetExceeded(u64),
    #[error("amalgamation factors must be downward closed")]
    FactorsNotClosed,
    #[error("map is not an embedding")]
    NotAnEmbedding,
    #[error("structures are over different lattices")]
    LatticeMismatch,
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// A `U`-closed, coherent, downward semi-closed structure of classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct K0Structure {
    lattice: Arc<Lattice>,
    labels: Vec<String>,
    sort: Vec<Elem>,
    /// `up[x][F] = x/F` for `F >= sort(x)`.
    up: Vec<Vec<Option<usize>>>,
}

impl K0Structure {
    /// `edges` are `(x, F, y)` meaning `U_{sort(x), F}(x, y)`.
    pub fn new(
        lattice: Arc<Lattice>,
        labels: Vec<String>,
        sort: Vec<Elem>,
        edges: &[(usize, Elem, usize)],
    ) -> Result<Self, K0Error> {
        let n = labels.len();
        assert_eq!(sort.len(), n);
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(K0Error::DuplicateLabel(l.clone()));
            }
        }
        let m = lattice.len();
        let mut up = vec![vec![None; m]; n];
        for x in 0..n {
            up[x][sort[x]] = Some(x);
        }
        for &(x, f, y) in edges {
            if !lattice.lt(sort[x], f) || sort[y] != f {
                return Err(K0Error::UTyped(labels[x].clone(), labels[y].clone()));
            }
            match up[x][f] {
                Some(z) if z != y => return Err(K0Error::UNotFunctional(labels[x].clone(), lattice.label(f).into())),
                _ => up[x][f] = Some(y),
            }
        }
        let k = K0Structure { lattice, labels, sort, up };
        k.validate()?;
        Ok(k)
    }

    fn validate(&self) -> Result<(), K0Error> {
        let l = &self.lattice;
        let name = |x: usize| self.labels[x].clone();
        for x in 0..self.len() {
            for f in l.elements().filter(|&f| l.leq(self.sort[x], f)) {
                let Some(y) = self.up[x][f] else {
                    return Err(K0Error::UClosed(name(x), l.label(f).into()));
                };
                for g in l.elements().filter(|&g| l.leq(f, g)) {
                    if self.up[y][g] != self.up[x][g] {
                        return Err(K0Error::Coherent(name(x), l.label(g).into()));
                    }
                }
            }
        }
        for x in 0..self.len() {
            for y in x + 1..self.len() {
                let m = l.meet(self.sort[x], self.sort[y]);
                let below =
                    (0..self.len()).filter(|&z| self.sort[z] == m && self.leq_u(z, x) && self.leq_u(z, y)).count();
                if below > 1 {
                    return Err(K0Error::DownSemiClosed(name(x), name(y)));
                }
            }
        }
        Ok(())
    }

    pub fn empty(lattice: Arc<Lattice>) -> Self {
        K0Structure { lattice, labels: vec![], sort: vec![], up: vec![] }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn sort(&self, x: usize) -> Elem {
        self.sort[x]
    }

    pub fn sorts(&self) -> &[Elem] {
        &self.sort
    }

    /// `x/F`, defined for `F >= sort(x)`.
    pub fn up(&self, x: usize, f: Elem) -> Option<usize> {
        self.up[x][f]
    }

    /// Reflexive `<=_U`.
    pub fn leq_u(&self, x: usize, y: usize) -> bool {
        self.up[x][self.sort[y]] == Some(y)
    }

    /// `(x, F, x/F)` for every proper upward link.
    pub fn edges(&self) -> Vec<(usize, Elem, usize)> {
        let mut out = vec![];
        for x in 0..self.len() {
            for f in self.lattice.elements() {
                if f != self.sort[x] {
                    if let Some(y) = self.up[x][f] {
                        out.push((x, f, y));
                    }
                }
            }
        }
        out
    }

    /// Least level at which `x` and `y` lie in a common class.
    pub fn delta(&self, x: usize, y: usize) -> Result<Elem, K0Error> {
        let l = &self.lattice;
        let common: Vec<Elem> =
            l.elements().filter(|&f| self.up[x][f].is_some() && self.up[x][f] == self.up[y][f]).collect();
        if common.is_empty() {
            return Err(K0Error::NoCommonClass(self.labels[x].clone(), self.labels[y].clone()));
        }
        let m = l.meet_all(common.iter().copied());
        if !common.contains(&m) {
            return Err(K0Error::DeltaUndefined(self.labels[x].clone(), self.labels[y].clone()));
        }
        Ok(m)
    }

    /// The common lower element required by downward closure, if present.
    pub fn lower_witness(&self, x: usize, y: usize) -> Option<usize> {
        let m = self.lattice.meet(self.sort[x], self.sort[y]);
        (0..self.len()).find(|&z| self.sort[z] == m && self.leq_u(z, x) && self.leq_u(z, y))
    }

    /// Pairs `x, y` with `delta(x, y) = sort(x) v sort(y)`.
    pub fn needs_witness(&self, x: usize, y: usize) -> bool {
        let j = self.lattice.join(self.sort[x], self.sort[y]);
        self.delta(x, y).is_ok_and(|d| d == j)
    }

    pub fn is_downward_closed(&self) -> bool {
        self.unwitnessed_pair().is_none()
    }

    fn unwitnessed_pair(&self) -> Option<(usize, usize)> {
        (0..self.len())
            .flat_map(|x| (x + 1..self.len()).map(move |y| (x, y)))
            .find(|&(x, y)| self.needs_witness(x, y) && self.lower_witness(x, y).is_none())
    }

    pub fn to_structure(&self) -> Structure {
        let mut s = Structure::new(self.len());
        for x in 0..self.len() {
            s.insert(Fact::unary(Symbol::P(self.sort[x], 1), x));
        }
        for (x, f, y) in self.edges() {
            s.insert(Fact::binary(Symbol::U(self.sort[x], f), x, y));
        }
        s
    }

    pub fn from_structure(lattice: Arc<Lattice>, s: &Structure, labels: Vec<String>) -> Result<Self, K0Error> {
        let mut sort = vec![lattice.top(); s.len()];
        let mut edges = vec![];
        for f in s.facts() {
            match f.sym {
                Symbol::P(e, 1) => sort[f.args()[0]] = e,
                Symbol::U(_, g) => edges.push((f.args()[0], g, f.args()[1])),
                _ => {}
            }
        }
        Self::new(lattice, labels, sort, &edges)
    }

    pub fn is_isomorphic(&self, other: &K0Structure) -> bool {
        self.to_structure().is_isomorphic(&other.to_structure())
    }

    /// `map` preserves sorts and is an embedding of the `U` structure.
    pub fn is_embedding(&self, target: &K0Structure, map: &[usize]) -> bool {
        self.to_structure().is_embedding(&target.to_structure(), map)
    }

    /// Induced substructure on an upward-closed set of elements.
    pub fn substructure(&self, elems: &[usize]) -> Result<K0Structure, K0Error> {
        let s = self.to_structure().substructure(elems);
        let labels = elems.iter().map(|&x| self.labels[x].clone()).collect();
        Self::from_structure(self.lattice.clone(), &s, labels)
    }

    /// Appends a new element of sort `e` whose upward links are `up` (one
    /// entry per lattice element, `None` below `e`). Not validated.
    fn push_raw(&mut self, label: String, e: Elem, mut up: Vec<Option<usize>>) -> usize {
        let x = self.len();
        up[e] = Some(x);
        self.labels.push(label);
        self.sort.push(e);
        self.up.push(up);
        x
    }

    fn fresh_label(&self, stem: &str) -> String {
        let mut k = self.len();
        loop {
            let l = format!("{stem}{k}");
            if !self.labels.contains(&l) {
                return l;
            }
            k += 1;
        }
    }
}

/// `A^eq`: one element per `E`-class per level, levels in lattice order and
/// classes by first point. Also returns `elem[E][p]`, the element for
/// `p/E`.
pub fn a_eq_map(space: &UltrametricSpace) -> (K0Structure, Vec<Vec<usize>>) {
    let l = space.lattice().clone();
    let mut labels = vec![];
    let mut sort = vec![];
    let mut elem = vec![vec![0; space.len()]; l.len()];
    for e in l.elements() {
        let part = space.classes(e);
        let base = labels.len();
        for (c, members) in part.classes().iter().enumerate() {
            let head = space.label(members[0]);
            labels.push(if e == l.bottom() { head.to_string() } else { format!("{head}/{}", l.label(e)) });
            sort.push(e);
            for &p in members {
                elem[e][p] = base + c;
            }
        }
    }
    let mut edges = vec![];
    for e in l.elements() {
        for f in l.elements().filter(|&f| l.lt(e, f)) {
            for p in space.points() {
                edges.push((elem[e][p], f, elem[f][p]));
            }
        }
    }
    edges.sort();
    edges.dedup();
    let k = K0Structure::new(l, labels, sort, &edges).expect("classes of a space form a valid structure");
    (k, elem)
}

pub fn a_eq(space: &UltrametricSpace) -> K0Structure {
    a_eq_map(space).0
}

/// One generic point per element, at distance `delta` from the others.
pub fn a_k(k: &K0Structure) -> Result<UltrametricSpace, K0Error> {
    let n = k.len();
    let l = k.lattice.clone();
    let mut d = vec![vec![l.bottom(); n]; n];
    for x in 0..n {
        for y in 0..n {
            if x != y {
                d[x][y] = k.delta(x, y)?;
            }
        }
    }
    Ok(UltrametricSpace::new(l, k.labels.clone(), d)?)
}

/// The map `x -> x_A / sort(x)` into `a_eq(a_k(K))`, checked to be an
/// embedding.
pub fn embed_check_eqsub(k: &K0Structure) -> Result<(Vec<usize>, K0Structure), K0Error> {
    let space = a_k(k)?;
    let (eq, elem) = a_eq_map(&space);
    let map: Vec<usize> = (0..k.len()).map(|x| elem[k.sort(x)][x]).collect();
    if !k.is_embedding(&eq, &map) {
        return Err(K0Error::NotAnEmbedding);
    }
    Ok((map, eq))
}

/// Downward closure by saturation. Input elements keep their indices; new
/// elements are appended in creation order.
pub fn cl0(k: &K0Structure) -> Result<K0Structure, K0Error> {
    let budget = saturation_budget(k);
    let mut out = k.clone();
    let mut added: u64 = 0;
    while let Some((x, y)) = out.unwitnessed_pair() {
        added += add_witness(&mut out, x, y)? as u64;
        if added > budget {
            return Err(K0Error::SaturationBudgetExceeded(budget));
        }
    }
    Ok(out)
}

/// `2^(|Λ|·|K|)`, saturating.
pub fn saturation_budget(k: &K0Structure) -> u64 {
    let exp = (k.lattice.len() * k.len().max(1)) as u32;
    1u64.checked_shl(exp).unwrap_or(u64::MAX)
}

/// Adds the common lower class of `x` and `y` together with whichever of
/// its upper classes are not already present. Returns the number of
/// elements added.
fn add_witness(k: &mut K0Structure, x: usize, y: usize) -> Result<usize, K0Error> {
    let l = k.lattice.clone();
    let (e, f) = (k.sort[x], k.sort[y]);
    let m = l.meet(e, f);
    // The new class behaves like a point at distance E from x and F from y;
    // its distance to any other element w is (E v δ(x,w)) ^ (F v δ(y,w)).
    let dist_to = |k: &K0Structure, w: usize| -> Option<Elem> {
        let dx = k.delta(x, w).ok()?;
        let dy = k.delta(y, w).ok()?;
        Some(l.meet(l.join(e, dx), l.join(f, dy)))
    };
    let mut chain: Vec<Option<usize>> = vec![None; l.len()];
    let above: Vec<Elem> = l.elements().filter(|&g| l.leq(m, g)).collect();
    for &g in &above {
        chain[g] = (0..k.len()).find(|&w| k.sort[w] == g && dist_to(k, w).is_some_and(|d| l.leq(d, g)));
    }
    // Create missing levels from the top down so upward links exist.
    let mut order = above.clone();
    order.sort_by_key(|&g| l.elements().filter(|&h| l.leq(g, h)).count());
    let mut created = 0;
    for g in order {
        if chain[g].is_some() {
            continue;
        }
        let up: Vec<Option<usize>> = l.elements().map(|h| if l.lt(g, h) { chain[h] } else { None }).collect();
        debug_assert!(l.elements().all(|h| !l.lt(g, h) || up[h].is_some()));
        let label = k.fresh_label("w");
        chain[g] = Some(k.push_raw(label, g, up));
        created += 1;
    }
    Ok(created)
}

/// Strong amalgam of two structures over a common base.
#[derive(Clone, Debug)]
pub struct K0Amalgam {
    pub structure: K0Structure,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Free amalgam of `k1` and `k2` over `base`, then `cl0`.
pub fn amalgamate_k0(
    base: &K0Structure,
    k1: &K0Structure,
    f1: &[usize],
    k2: &K0Structure,
    f2: &[usize],
) -> Result<K0Amalgam, K0Error> {
    if *k1.lattice != *base.lattice || *k2.lattice != *base.lattice {
        return Err(K0Error::LatticeMismatch);
    }
    if !k1.is_downward_closed() || !k2.is_downward_closed() || !base.is_downward_closed() {
        return Err(K0Error::FactorsNotClosed);
    }
    if !base.is_embedding(k1, f1) || !base.is_embedding(k2, f2) {
        return Err(K0Error::NotAnEmbedding);
    }
    let (s, left, right) = free_amalgam(&k1.to_structure(), f1, &k2.to_structure(), f2);
    let mut labels = k1.labels.clone();
    for y in 0..k2.len() {
        if !f2.contains(&y) {
            let mut lab = k2.labels[y].clone();
            while labels.contains(&lab) {
                lab.push('\'');
            }
            labels.push(lab);
        }
    }
    let free = K0Structure::from_structure(base.lattice.clone(), &s, labels)?;
    Ok(K0Amalgam { structure: cl0(&free)?, left, right })
}

/// Disjoint union of two structures glued along the images of a common
/// base (`f1[c]`, `f2[c]` are the images of base element `c`). The first
/// factor keeps its indices.
pub fn free_amalgam(s1: &Structure, f1: &[usize], s2: &Structure, f2: &[usize]) -> (Structure, Vec<usize>, Vec<usize>) {
    let left: Vec<usize> = (0..s1.len()).collect();
    let mut right = vec![usize::MAX; s2.len()];
    for (c, &y) in f2.iter().enumerate() {
        right[y] = f1[c];
    }
    let mut next = s1.len();
    for r in right.iter_mut() {
        if *r == usize::MAX {
            *r = next;
            next += 1;
        }
    }
    let mut s = Structure::from_facts(next, s1.facts().copied());
    for f in s2.facts() {
        s.insert(f.map(|x| right[x]));
    }
    (s, left, right)
}

/// The space side of `cl0`: realize `K`, add one generic point per missing
/// witness, and read the generated classes back. Used as an independent
/// check of [`cl0`].
pub fn cl0_oracle(k: &K0Structure) -> Result<K0Structure, K0Error> {
    let l = k.lattice.clone();
    let mut space = a_k(k)?;
    // Element of the current structure -> (point, level).
    let mut gen: Vec<(Point, Elem)> = (0..k.len()).map(|x| (x, k.sort(x))).collect();
    loop {
        let (eq, elem) = a_eq_map(&space);
        let mut keep: Vec<usize> = gen.iter().map(|&(p, e)| elem[e][p]).collect();
        keep.sort_unstable();
        keep.dedup();
        let cur = eq.substructure(&keep)?;
        let Some((x, y)) = cur.unwitnessed_pair() else {
            return Ok(cur);
        };
        let (ex, ey) = (cur.sort(x), cur.sort(y));
        let (px, py) = (
            space.points().find(|&p| elem[ex][p] == keep[x]).unwrap(),
            space.points().find(|&p| elem[ey][p] == keep[y]).unwrap(),
        );
        let dists: Vec<Elem> =
            space.points().map(|c| l.meet(l.join(ex, space.dist(px, c)), l.join(ey, space.dist(py, c)))).collect();
        let label = format!("r{}", space.len());
        space = space.with_point(label, &dists)?;
        let r = space.len() - 1;
        for g in l.elements().filter(|&g| l.leq(l.meet(ex, ey), g)) {
            gen.push((r, g));
        }
        if space.len() > 64 {
            return Err(K0Error::SaturationBudgetExceeded(64));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b2_three() -> K0Structure {
        let l = Arc::new(Lattice::boolean_square());
        let (a, b, t) = (l.elem("a").unwrap(), l.elem("b").unwrap(), l.top());
        K0Structure::new(l, vec!["x".into(), "y".into(), "t".into()], vec![a, b, t], &[(0, t, 2), (1, t, 2)]).unwrap()
    }

    #[test]
    fn delta_of_classes() {
        let k = b2_three();
        assert_eq!(k.delta(0, 1).unwrap(), k.lattice().top());
        assert_eq!(k.delta(0, 0).unwrap(), k.sort(0));
    }

    #[test]
    fn a_eq_counts() {
        let l = Arc::new(Lattice::boolean_square());
        let (a, b) = (l.elem("a").unwrap(), l.elem("b").unwrap());
        let g = UltrametricSpace::grid(l.clone(), 2, 2, a, b).unwrap();
        assert_eq!(a_eq(&g).len(), 9);
        assert_eq!(a_eq(&UltrametricSpace::single_point(l)).len(), 4);
    }

    #[test]
    fn cl0_adds_bottom_witness() {
        let k = b2_three();
        assert!(!k.is_downward_closed());
        let c = cl0(&k).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.is_downward_closed());
        assert!(c.is_isomorphic(&cl0_oracle(&k).unwrap()));
        assert_eq!(cl0(&c).unwrap(), c);
    }

    #[test]
    fn a_k_distances() {
        let k = b2_three();
        let s = a_k(&k).unwrap();
        let t = k.lattice().top();
        assert!(s.matrix().iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, &d)| i == j || d == t)));
        embed_check_eqsub(&k).unwrap();
    }

    #[test]
    fn semi_closure_is_enforced() {
        let l = Arc::new(Lattice::chain(2));
        let err = K0Structure::new(l, vec!["x".into(), "y".into()], vec![0, 0], &[]).unwrap_err();
        assert!(matches!(err, K0Error::UClosed(..)));
    }
}
