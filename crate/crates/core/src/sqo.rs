//! Subquotient orders, their composition calculus, well-equipped languages
//! and the canonical top orders derived from them.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::lattice::{Elem, Lattice};
use crate::space::{Point, UltrametricSpace};
use crate::structure::{Fact, Structure, Symbol};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SqoError {
    #[error("bottom relation {0} is not below top relation {1}")]
    BottomAboveTop(String, String),
    #[error("order is not a relation on bottom classes")]
    NotClassInvariant,
    #[error("classes of `{0}` and `{1}` are compared across distinct top classes")]
    ComparableAcrossTop(String, String),
    #[error("classes of `{0}` and `{1}` share a top class but are incomparable")]
    NotLinearWithinTop(String, String),
    #[error("order has a cycle through `{0}` and `{1}`")]
    CycleDetected(String, String),
    #[error("inner top {0} differs from outer bottom {1}")]
    TopBottomMismatch(String, String),
    #[error("restriction level {0} is outside the order's range")]
    GOutOfRange(String),
    #[error("language is not well-equipped")]
    NotWellEquipped,
    #[error("{0} has no unique cover")]
    AmbiguousCover(String),
    #[error("ordered space has {0} orders but its language has {1} slots")]
    SlotCount(usize, usize),
    #[error("order for slot {0} has the wrong bottom or top relation")]
    SlotMismatch(usize),
}

/// A strict order on the `bottom`-classes of a space, stored pulled back to
/// points: `lt[x][y]` iff the class of `x` is below the class of `y`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubquotientOrder {
    bottom: Elem,
    top: Elem,
    lt: Vec<Vec<bool>>,
}

impl SubquotientOrder {
    /// Validates a pulled-back relation.
    pub fn new(space: &UltrametricSpace, bottom: Elem, top: Elem, lt: Vec<Vec<bool>>) -> Result<Self, SqoError> {
        let o = SubquotientOrder { bottom, top, lt };
        o.validate(space)?;
        Ok(o)
    }

    /// Builds the order from a list of `(x, y)` pairs meaning `x/E < y/E`.
    pub fn from_pairs(
        space: &UltrametricSpace,
        bottom: Elem,
        top: Elem,
        pairs: &[(Point, Point)],
    ) -> Result<Self, SqoError> {
        let n = space.len();
        let mut lt = vec![vec![false; n]; n];
        for &(x, y) in pairs {
            for a in space.points().filter(|&a| space.within(a, x, bottom)) {
                for b in space.points().filter(|&b| space.within(b, y, bottom)) {
                    lt[a][b] = true;
                }
            }
        }
        Self::new(space, bottom, top, lt)
    }

    /// `x < y` iff the points share a top class, lie in different bottom
    /// classes and `key[x] < key[y]`. `key` must be constant on bottom
    /// classes and injective on them within a top class.
    pub fn from_keys(space: &UltrametricSpace, bottom: Elem, top: Elem, key: &[usize]) -> Result<Self, SqoError> {
        let n = space.len();
        let mut lt = vec![vec![false; n]; n];
        for x in 0..n {
            for y in 0..n {
                lt[x][y] = space.within(x, y, top) && !space.within(x, y, bottom) && key[x] < key[y];
            }
        }
        Self::new(space, bottom, top, lt)
    }

    /// The empty order `E -> E`.
    pub fn trivial(space: &UltrametricSpace, level: Elem) -> Self {
        let n = space.len();
        SubquotientOrder { bottom: level, top: level, lt: vec![vec![false; n]; n] }
    }

    pub fn bottom(&self) -> Elem {
        self.bottom
    }

    pub fn top(&self) -> Elem {
        self.top
    }

    pub fn lt(&self, x: Point, y: Point) -> bool {
        self.lt[x][y]
    }

    pub fn len(&self) -> usize {
        self.lt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lt.is_empty()
    }

    pub fn relation(&self) -> &[Vec<bool>] {
        &self.lt
    }

    pub fn validate(&self, space: &UltrametricSpace) -> Result<(), SqoError> {
        let l = space.lattice();
        let (e, f) = (self.bottom, self.top);
        if !l.leq(e, f) {
            return Err(SqoError::BottomAboveTop(l.label(e).into(), l.label(f).into()));
        }
        let n = space.len();
        if self.lt.len() != n || self.lt.iter().any(|r| r.len() != n) {
            return Err(SqoError::NotClassInvariant);
        }
        let name = |p: Point| space.label(p).to_string();
        let reps = representatives(space, e);
        for x in 0..n {
            for y in 0..n {
                if self.lt[x][y] != self.lt[reps[x]][reps[y]] {
                    return Err(SqoError::NotClassInvariant);
                }
                if self.lt[x][y] && !space.within(x, y, f) {
                    return Err(SqoError::ComparableAcrossTop(name(x), name(y)));
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                if space.within(x, y, e) {
                    if self.lt[x][y] {
                        return Err(SqoError::CycleDetected(name(x), name(y)));
                    }
                    continue;
                }
                if self.lt[x][y] && self.lt[y][x] {
                    return Err(SqoError::CycleDetected(name(x), name(y)));
                }
                if space.within(x, y, f) && !self.lt[x][y] && !self.lt[y][x] {
                    return Err(SqoError::NotLinearWithinTop(name(x), name(y)));
                }
            }
        }
        // Asymmetric and total on classes: a failure of transitivity is a
        // 3-cycle.
        for x in 0..n {
            for y in 0..n {
                if !self.lt[x][y] {
                    continue;
                }
                for z in 0..n {
                    if self.lt[y][z] && !self.lt[x][z] {
                        return Err(SqoError::CycleDetected(name(x), name(z)));
                    }
                }
            }
        }
        Ok(())
    }

    /// The relation with both sides swapped.
    pub fn reversed(&self) -> Self {
        let n = self.lt.len();
        let lt = (0..n).map(|x| (0..n).map(|y| self.lt[y][x]).collect()).collect();
        SubquotientOrder { bottom: self.bottom, top: self.top, lt }
    }

    /// Bottom classes in each top class, listed in increasing order; one
    /// representative point (the least) per class.
    pub fn chains(&self, space: &UltrametricSpace) -> Vec<Vec<Point>> {
        let reps = representatives(space, self.bottom);
        let tops = representatives(space, self.top);
        let mut out: Vec<(Point, Vec<Point>)> = vec![];
        for t in space.points().filter(|&p| tops[p] == p) {
            let mut members: Vec<Point> = space.points().filter(|&p| tops[p] == t && reps[p] == p).collect();
            members.sort_by_key(|&p| members_below(self, p, space.len()));
            out.push((t, members));
        }
        out.into_iter().map(|(_, m)| m).collect()
    }

    /// Covering pairs between class representatives.
    pub fn hasse_pairs(&self, space: &UltrametricSpace) -> Vec<(Point, Point)> {
        self.chains(space).iter().flat_map(|c| c.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>()).collect()
    }

    pub fn to_dot(&self, space: &UltrametricSpace) -> String {
        let l = space.lattice();
        let mut s =
            format!("digraph sqo {{\n  label=\"{} -> {}\";\n  rankdir=LR;\n", l.label(self.bottom), l.label(self.top));
        let reps = representatives(space, self.bottom);
        for (k, chain) in self.chains(space).iter().enumerate() {
            s.push_str(&format!("  subgraph cluster_{k} {{\n"));
            for &c in chain {
                let members: Vec<&str> = space.points().filter(|&p| reps[p] == c).map(|p| space.label(p)).collect();
                s.push_str(&format!("    c{c} [label=\"{}\"];\n", members.join(",")));
            }
            for w in chain.windows(2) {
                s.push_str(&format!("    c{} -> c{};\n", w[0], w[1]));
            }
            s.push_str("  }\n");
        }
        s.push_str("}\n");
        s
    }
}

fn members_below(o: &SubquotientOrder, p: Point, n: usize) -> usize {
    (0..n).filter(|&q| o.lt[q][p]).count()
}

/// Least point of each `level`-class, per point.
pub fn representatives(space: &UltrametricSpace, level: Elem) -> Vec<Point> {
    space.points().map(|x| space.points().find(|&y| space.within(x, y, level)).unwrap_or(x)).collect()
}

/// `inner: E -> F`, `outer: F -> G` gives `E -> G`: inside an `F`-class use
/// `inner`, across `F`-classes use `outer`.
pub fn compose(
    space: &UltrametricSpace,
    outer: &SubquotientOrder,
    inner: &SubquotientOrder,
) -> Result<SubquotientOrder, SqoError> {
    let l = space.lattice();
    if inner.top != outer.bottom {
        return Err(SqoError::TopBottomMismatch(l.label(inner.top).into(), l.label(outer.bottom).into()));
    }
    let f = inner.top;
    let n = space.len();
    let lt = (0..n)
        .map(|x| (0..n).map(|y| if space.within(x, y, f) { inner.lt[x][y] } else { outer.lt[x][y] }).collect())
        .collect();
    Ok(SubquotientOrder { bottom: inner.bottom, top: outer.top, lt })
}

/// Keeps only comparisons inside a common `g`-class.
pub fn restrict(space: &UltrametricSpace, o: &SubquotientOrder, g: Elem) -> Result<SubquotientOrder, SqoError> {
    let l = space.lattice();
    if !l.leq(o.bottom, g) || !l.leq(g, o.top) {
        return Err(SqoError::GOutOfRange(l.label(g).into()));
    }
    let n = space.len();
    let lt = (0..n).map(|x| (0..n).map(|y| o.lt[x][y] && space.within(x, y, g)).collect()).collect();
    Ok(SubquotientOrder { bottom: o.bottom, top: g, lt })
}

/// From `o: F1 -> F1 v F2`, the order `F1 ^ F2 -> F2` comparing classes
/// inside an `F2`-class by their `F1`-classes.
pub fn induce_meet(space: &UltrametricSpace, o: &SubquotientOrder, f2: Elem) -> Result<SubquotientOrder, SqoError> {
    let l = space.lattice();
    let f1 = o.bottom;
    if o.top != l.join(f1, f2) {
        return Err(SqoError::GOutOfRange(l.label(f2).into()));
    }
    let e = l.meet(f1, f2);
    let n = space.len();
    let lt = (0..n).map(|x| (0..n).map(|y| space.within(x, y, f2) && o.lt[x][y]).collect()).collect();
    Ok(SubquotientOrder { bottom: e, top: f2, lt })
}

/// Every subquotient order `bottom -> top` on a space: a product of
/// permutations of bottom classes inside each top class.
pub fn all_sqos(space: &UltrametricSpace, bottom: Elem, top: Elem) -> Vec<SubquotientOrder> {
    let reps = representatives(space, bottom);
    let treps = representatives(space, top);
    let groups: Vec<Vec<Point>> = space
        .points()
        .filter(|&t| treps[t] == t)
        .map(|t| space.points().filter(|&p| treps[p] == t && reps[p] == p).collect())
        .collect();
    let mut keys = vec![0usize; space.len()];
    let mut out = vec![];
    fn go(
        space: &UltrametricSpace,
        bottom: Elem,
        top: Elem,
        groups: &[Vec<Point>],
        reps: &[Point],
        g: usize,
        keys: &mut Vec<usize>,
        out: &mut Vec<SubquotientOrder>,
    ) {
        if g == groups.len() {
            let full: Vec<usize> = (0..space.len()).map(|p| keys[reps[p]]).collect();
            out.push(SubquotientOrder::from_keys(space, bottom, top, &full).expect("valid by construction"));
            return;
        }
        let mut perm: Vec<usize> = (0..groups[g].len()).collect();
        loop {
            for (rank, &k) in perm.iter().enumerate() {
                keys[groups[g][k]] = rank;
            }
            go(space, bottom, top, groups, reps, g + 1, keys, out);
            if !next_permutation(&mut perm) {
                break;
            }
        }
    }
    go(space, bottom, top, &groups, &reps, 0, &mut keys, &mut out);
    out
}

pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub bottom: Elem,
    pub top: Elem,
    /// 1-based among slots sharing `bottom`.
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageDescriptor {
    pub lattice: Arc<Lattice>,
    pub slots: Vec<Slot>,
}

impl LanguageDescriptor {
    /// Slots are indexed in the order given, per bottom relation.
    pub fn new(lattice: Arc<Lattice>, pairs: &[(Elem, Elem)]) -> Result<Self, SqoError> {
        let mut count: HashMap<Elem, usize> = HashMap::new();
        let mut slots = vec![];
        for &(b, t) in pairs {
            if !lattice.leq(b, t) {
                return Err(SqoError::BottomAboveTop(lattice.label(b).into(), lattice.label(t).into()));
            }
            let c = count.entry(b).or_insert(0);
            *c += 1;
            slots.push(Slot { bottom: b, top: t, index: *c });
        }
        Ok(LanguageDescriptor { lattice, slots })
    }

    /// One slot `E -> E+` per meet-irreducible `E`.
    pub fn min_language(lattice: Arc<Lattice>) -> Result<Self, SqoError> {
        let pairs: Vec<(Elem, Elem)> = lattice
            .meet_irreducibles()
            .into_iter()
            .map(|e| match lattice.covers(e).as_slice() {
                [c] => Ok((e, *c)),
                _ => Err(SqoError::AmbiguousCover(lattice.label(e).into())),
            })
            .collect::<Result<_, _>>()?;
        Self::new(lattice, &pairs)
    }

    pub fn is_well_equipped(&self) -> bool {
        let l = &self.lattice;
        l.elements().all(|e| {
            let has = self.slots.iter().any(|s| s.bottom == e && s.top != e);
            has == l.is_meet_irreducible(e)
        })
    }

    /// Slots with `bottom = e` and a nontrivial top, in index order.
    pub fn proper_slots(&self, e: Elem) -> Vec<usize> {
        (0..self.slots.len()).filter(|&k| self.slots[k].bottom == e && self.slots[k].top != e).collect()
    }

    pub fn slot_position(&self, bottom: Elem, index: usize) -> Option<usize> {
        self.slots.iter().position(|s| s.bottom == bottom && s.index == index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedSpace {
    pub language: LanguageDescriptor,
    pub space: UltrametricSpace,
    pub orders: Vec<SubquotientOrder>,
}

impl OrderedSpace {
    pub fn new(
        language: LanguageDescriptor,
        space: UltrametricSpace,
        orders: Vec<SubquotientOrder>,
    ) -> Result<Self, SqoError> {
        if orders.len() != language.slots.len() {
            return Err(SqoError::SlotCount(orders.len(), language.slots.len()));
        }
        for (k, (o, s)) in orders.iter().zip(&language.slots).enumerate() {
            if o.bottom != s.bottom || o.top != s.top {
                return Err(SqoError::SlotMismatch(k));
            }
            o.validate(&space)?;
        }
        Ok(OrderedSpace { language, space, orders })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        self.space.lattice()
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Restriction to a subset of points, relabelled in the given order.
    pub fn subspace(&self, pts: &[Point]) -> OrderedSpace {
        let space = self.space.subspace(pts);
        let orders = self
            .orders
            .iter()
            .map(|o| SubquotientOrder {
                bottom: o.bottom,
                top: o.top,
                lt: pts.iter().map(|&x| pts.iter().map(|&y| o.lt[x][y]).collect()).collect(),
            })
            .collect();
        OrderedSpace { language: self.language.clone(), space, orders }
    }

    /// Distances as `Dist` facts between distinct points and each order
    /// as `Order(k)`.
    pub fn to_structure(&self) -> Structure {
        let n = self.space.len();
        let mut s = Structure::new(n);
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    s.insert(Fact::binary(Symbol::Dist(self.space.dist(x, y)), x, y));
                }
                for (k, o) in self.orders.iter().enumerate() {
                    if o.lt[x][y] {
                        s.insert(Fact::binary(Symbol::Order(k), x, y));
                    }
                }
            }
        }
        s
    }

    pub fn is_isomorphic(&self, other: &OrderedSpace) -> bool {
        self.language == other.language && self.to_structure().is_isomorphic(&other.to_structure())
    }

    /// Every order in slot set `slots` reversed.
    pub fn reversed(&self, slots: &[usize]) -> OrderedSpace {
        let mut out = self.clone();
        for &k in slots {
            out.orders[k] = out.orders[k].reversed();
        }
        out
    }
}

/// Deterministic choice of a cover `F'_E` for every `E < 1` and, for
/// meet-reducible `E`, a partner `F''_E` with `E = F'_E ^ F''_E`. Ties are
/// broken by least label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Choice {
    pub cover: Vec<Option<Elem>>,
    pub partner: Vec<Option<Elem>>,
}

impl Choice {
    pub fn canonical(l: &Lattice) -> Self {
        let least = |v: Vec<Elem>| v.into_iter().min_by(|&a, &b| l.label(a).cmp(l.label(b)));
        let cover: Vec<Option<Elem>> = l.elements().map(|e| least(l.covers(e))).collect();
        let partner = l
            .elements()
            .map(|e| {
                if e == l.top() || l.is_meet_irreducible(e) {
                    return None;
                }
                let c = cover[e].expect("non-top elements have covers");
                least(l.elements().filter(|&f| f != c && l.lt(e, f) && l.meet(c, f) == e).collect())
            })
            .collect();
        Choice { cover, partner }
    }

    pub fn validate(&self, l: &Lattice) -> bool {
        l.elements().all(|e| {
            if e == l.top() {
                return true;
            }
            let Some(c) = self.cover[e] else { return false };
            if !l.covers(e).contains(&c) {
                return false;
            }
            if l.is_meet_irreducible(e) {
                return true;
            }
            matches!(self.partner[e], Some(p) if l.lt(e, p) && l.meet(c, p) == e && p != c)
        })
    }
}

/// The canonical definable orders `E -> 1` of a well-equipped ordered
/// space, built by downward induction over the lattice.
pub struct TopOrders<'a> {
    x: &'a OrderedSpace,
    choice: Choice,
    memo: Vec<Option<SubquotientOrder>>,
}

impl<'a> TopOrders<'a> {
    pub fn new(x: &'a OrderedSpace, choice: Choice) -> Result<Self, SqoError> {
        if !x.language.is_well_equipped() || !choice.validate(x.space.lattice()) {
            return Err(SqoError::NotWellEquipped);
        }
        let n = x.space.lattice().len();
        Ok(TopOrders { x, choice, memo: vec![None; n] })
    }

    pub fn canonical(x: &'a OrderedSpace) -> Result<Self, SqoError> {
        Self::new(x, Choice::canonical(x.space.lattice()))
    }

    pub fn choice(&self) -> &Choice {
        &self.choice
    }

    fn space(&self) -> &'a UltrametricSpace {
        &self.x.space
    }

    /// `Ω_E : E -> 1`.
    pub fn omega(&mut self, e: Elem) -> SubquotientOrder {
        if let Some(o) = &self.memo[e] {
            return o.clone();
        }
        let sp = self.space();
        let l = sp.lattice().clone();
        let o = if e == l.top() {
            SubquotientOrder::trivial(sp, e)
        } else if l.is_meet_irreducible(e) {
            let k = self.x.language.proper_slots(e)[0];
            self.phi(k)
        } else {
            let f1 = self.choice.cover[e].unwrap();
            let f2 = self.choice.partner[e].unwrap();
            let outer = self.omega(f1);
            let far = self.omega(f2);
            let r = restrict(sp, &far, l.join(f1, f2)).expect("in range");
            let inner = induce_meet(sp, &r, f1).expect("in range");
            compose(sp, &outer, &inner).expect("composable")
        };
        self.memo[e] = Some(o.clone());
        o
    }

    /// The extension of language order `k` to the top relation.
    pub fn phi(&mut self, k: usize) -> SubquotientOrder {
        let o = self.x.orders[k].clone();
        self.extend_to_top(&o)
    }

    /// `E -> F` order obtained from `Ω_E`.
    pub fn derive(&mut self, e: Elem, f: Elem) -> Result<SubquotientOrder, SqoError> {
        let om = self.omega(e);
        restrict(self.space(), &om, f)
    }

    /// Extends `o : E -> F` to `E -> 1` agreeing with `o` inside `F`-classes.
    pub fn extend_to_top(&mut self, o: &SubquotientOrder) -> SubquotientOrder {
        let outer = self.omega(o.top);
        compose(self.space(), &outer, o).expect("composable")
    }

    /// `<_E`: an `E`-convex linear order of the points.
    pub fn convex_order(&mut self, e: Elem) -> SubquotientOrder {
        let sp = self.space();
        let bottom = sp.lattice().bottom();
        let om = self.omega(e);
        let within = self.derive(bottom, e).expect("in range");
        compose(sp, &om, &within).expect("composable")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinearLabel {
    /// Extension of the language order at this slot position.
    Slot(usize),
    /// `<*_E`.
    Star(Elem),
    /// The `E`-convex order `<*_E` is built from; needed to read `E` back.
    Convex(Elem),
}

/// A total order on points, as the sequence of points in increasing order.
pub type LinearOrder = Vec<Point>;

pub fn sequence(o: &SubquotientOrder) -> LinearOrder {
    let n = o.len();
    let mut pts: Vec<Point> = (0..n).collect();
    pts.sort_by_key(|&p| members_below(o, p, n));
    pts
}

/// One linear order per language slot plus two per lattice element (`<*_E`
/// and the convex order it reverses), from which the ordered space can be
/// recovered.
pub fn linearize(x: &OrderedSpace, choice: Choice) -> Result<Vec<(LinearLabel, LinearOrder)>, SqoError> {
    let mut t = TopOrders::new(x, choice)?;
    let sp = &x.space;
    let l = sp.lattice().clone();
    let mut out = vec![];
    for k in 0..x.orders.len() {
        let ext = t.phi(k);
        let within = t.derive(l.bottom(), x.orders[k].bottom)?;
        out.push((LinearLabel::Slot(k), sequence(&compose(sp, &ext, &within)?)));
    }
    for e in l.elements() {
        let conv = t.convex_order(e);
        let n = sp.len();
        let lt: Vec<Vec<bool>> = (0..n)
            .map(|a| (0..n).map(|b| if sp.within(a, b, e) { conv.lt[a][b] } else { conv.lt[b][a] }).collect())
            .collect();
        let star = SubquotientOrder { bottom: l.bottom(), top: l.top(), lt };
        out.push((LinearLabel::Star(e), sequence(&star)));
        out.push((LinearLabel::Convex(e), sequence(&conv)));
    }
    Ok(out)
}

/// Recovers the language orders and the relations `E_λ` from the output of
/// [`linearize`].
pub fn delinearize(
    language: &LanguageDescriptor,
    space_size: usize,
    orders: &[(LinearLabel, LinearOrder)],
) -> (Vec<Vec<Vec<bool>>>, Vec<Vec<Vec<bool>>>) {
    let l = &language.lattice;
    let pos = |seq: &LinearOrder| {
        let mut p = vec![0; space_size];
        for (i, &x) in seq.iter().enumerate() {
            p[x] = i;
        }
        p
    };
    let find = |lab: LinearLabel| pos(&orders.iter().find(|(k, _)| *k == lab).expect("label present").1);
    // `<*_E` agrees with its convex order exactly inside `E`-classes.
    let mut rels = vec![];
    for e in l.elements() {
        let star = find(LinearLabel::Star(e));
        let conv = find(LinearLabel::Convex(e));
        rels.push(
            (0..space_size)
                .map(|a| (0..space_size).map(|b| (conv[a] < conv[b]) == (star[a] < star[b])).collect())
                .collect::<Vec<Vec<bool>>>(),
        );
    }
    let mut slots = vec![];
    for (k, s) in language.slots.iter().enumerate() {
        let p = find(LinearLabel::Slot(k));
        slots.push(
            (0..space_size)
                .map(|a| (0..space_size).map(|b| rels[s.top][a][b] && !rels[s.bottom][a][b] && p[a] < p[b]).collect())
                .collect(),
        );
    }
    (slots, rels)
}
