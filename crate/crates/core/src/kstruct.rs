//! Lifted structures: copies of the class sorts joined by bijections,
//! witness relations and a single linear order, plus the quantifier-free
//! reinterpretation that rebuilds that order from a few of its restrictions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::eqlift::{cl0, K0Error, K0Structure};
use crate::lattice::{Elem, Lattice};
use crate::sqo::{Choice, LanguageDescriptor, SqoError};
use crate::structure::{Fact, Structure, Symbol};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KError {
    #[error("invalid structure: {}", list(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("structure is not closed")]
    NotClosed,
    #[error("the new metric part does not contain the old one")]
    NotContaining,
    #[error("formula for {0} has the wrong arity")]
    FormulaIllTyped(String),
    #[error("parameters do not match the language: {0}")]
    ParamMismatch(String),
    #[error(transparent)]
    K0(#[from] K0Error),
    #[error(transparent)]
    Sqo(#[from] SqoError),
}

fn list(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

/// The named constraints a lifted structure can violate.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    Partition,
    UClosed,
    Coherent,
    OrderAcyclic,
    OrderLinear,
    TypeOrderRespected,
    UTyped,
    DexTyped,
    DTyped,
    DUnique,
    BBijective,
    BCoherent,
    DownSemiClosed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub constraint: Constraint,
    pub detail: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.constraint, self.detail)
    }
}

/// A type `(E, i)`: sort `P_{E,i}`.
pub type SortType = (Elem, usize);

/// Parameters fixed before lifting: copy counts, the order of sorts, cover
/// and partner choices, and which language slot each copy carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftParams {
    pub language: LanguageDescriptor,
    /// `N_E`.
    pub n: Vec<usize>,
    /// `slot_of[E][i - 1]`: language slot carried by copy `i` of a
    /// meet-irreducible `E`.
    pub slot_of: Vec<Vec<usize>>,
    /// All types, in increasing `<_{1-types}` order.
    pub type_order: Vec<SortType>,
    pub choice: Choice,
}

impl LiftParams {
    /// Copy counts from the language's nontrivial slots; types ordered by
    /// lattice index, then copy index; canonical cover choices.
    pub fn new(language: LanguageDescriptor) -> Result<Self, KError> {
        if !language.is_well_equipped() {
            return Err(SqoError::NotWellEquipped.into());
        }
        let l = language.lattice.clone();
        let slot_of: Vec<Vec<usize>> =
            l.elements().map(|e| if l.is_meet_irreducible(e) { language.proper_slots(e) } else { vec![] }).collect();
        let n: Vec<usize> = slot_of.iter().map(|s| s.len().max(1)).collect();
        let type_order = l.elements().flat_map(|e| (1..=n[e]).map(move |i| (e, i))).collect();
        Ok(LiftParams { choice: Choice::canonical(&l), language, n, slot_of, type_order })
    }

    pub fn min(lattice: Arc<Lattice>) -> Result<Self, KError> {
        Self::new(LanguageDescriptor::min_language(lattice)?)
    }

    pub fn with_type_order(mut self, order: Vec<SortType>) -> Result<Self, KError> {
        let mut a = order.clone();
        let mut b = self.type_order.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(KError::ParamMismatch("type order must list every type once".into()));
        }
        self.type_order = order;
        Ok(self)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.language.lattice
    }

    pub fn type_rank(&self, t: SortType) -> usize {
        self.type_order.iter().position(|&u| u == t).expect("known type")
    }

    /// Top relation of the slot carried by copy `i` of `e`.
    pub fn slot_top(&self, e: Elem, i: usize) -> Option<Elem> {
        self.slot_of[e].get(i - 1).map(|&k| self.language.slots[k].top)
    }
}

/// A validated lifted structure. Element indices are stable; the order
/// `Less` is stored as facts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KStructure {
    params: Arc<LiftParams>,
    labels: Vec<String>,
    s: Structure,
    sort: Vec<SortType>,
    /// `to_one[x]`: the copy-1 element in bijection with `x`.
    to_one: Vec<usize>,
    /// `up[x][F]` for metric `x`.
    up: Vec<Vec<Option<usize>>>,
    rank: Vec<usize>,
}

impl KStructure {
    pub fn new(params: Arc<LiftParams>, labels: Vec<String>, s: Structure) -> Result<Self, KError> {
        let d = diagnose(&params, &s, &labels, Mode::Full);
        if !d.is_empty() {
            return Err(KError::Invalid(d));
        }
        Ok(Self::build(params, labels, s))
    }

    fn build(params: Arc<LiftParams>, labels: Vec<String>, s: Structure) -> Self {
        let n = s.len();
        let m = params.lattice().len();
        let sort: Vec<SortType> = (0..n).map(|x| sort_of(&s, x).expect("validated")).collect();
        let mut to_one: Vec<usize> = (0..n).collect();
        let mut up = vec![vec![None; m]; n];
        for f in s.facts() {
            match f.sym {
                Symbol::B(_, _, 1) => to_one[f.args()[0]] = f.args()[1],
                Symbol::U(_, g) => up[f.args()[0]][g] = Some(f.args()[1]),
                _ => {}
            }
        }
        for x in 0..n {
            if sort[x].1 == 1 {
                up[x][sort[x].0] = Some(x);
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&x| (0..n).filter(|&y| s.holds2(Symbol::Less, y, x)).count());
        let mut rank = vec![0; n];
        for (r, &x) in order.iter().enumerate() {
            rank[x] = r;
        }
        KStructure { params, labels, s, sort, to_one, up, rank }
    }

    pub fn params(&self) -> &Arc<LiftParams> {
        &self.params
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        self.params.lattice()
    }

    pub fn structure(&self) -> &Structure {
        &self.s
    }

    pub fn into_parts(self) -> (Arc<LiftParams>, Vec<String>, Structure) {
        (self.params, self.labels, self.s)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn sort(&self, x: usize) -> SortType {
        self.sort[x]
    }

    pub fn metric(&self, x: usize) -> usize {
        self.to_one[x]
    }

    /// `x/F` through the copy-1 element.
    pub fn up(&self, x: usize, f: Elem) -> Option<usize> {
        self.up[self.to_one[x]][f]
    }

    pub fn less(&self, x: usize, y: usize) -> bool {
        self.rank[x] < self.rank[y]
    }

    pub fn order_cmp(&self, x: usize, y: usize) -> std::cmp::Ordering {
        self.rank[x].cmp(&self.rank[y])
    }

    /// Elements in increasing order.
    pub fn order(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.len()).collect();
        v.sort_by_key(|&x| self.rank[x]);
        v
    }

    /// Distance through the metric part.
    pub fn delta(&self, x: usize, y: usize) -> Option<Elem> {
        let l = self.lattice();
        let (a, b) = (self.to_one[x], self.to_one[y]);
        let common: Vec<Elem> =
            l.elements().filter(|&f| self.up[a][f].is_some() && self.up[a][f] == self.up[b][f]).collect();
        (!common.is_empty()).then(|| l.meet_all(common))
    }

    /// The metric part and the indices of its elements in `self`.
    pub fn metric_part(&self) -> (K0Structure, Vec<usize>) {
        let elems: Vec<usize> = (0..self.len()).filter(|&x| self.sort[x].1 == 1).collect();
        let mut pos = vec![usize::MAX; self.len()];
        for (k, &x) in elems.iter().enumerate() {
            pos[x] = k;
        }
        let sorts = elems.iter().map(|&x| self.sort[x].0).collect();
        let mut edges = vec![];
        for f in self.s.facts() {
            if let Symbol::U(_, g) = f.sym {
                edges.push((pos[f.args()[0]], g, pos[f.args()[1]]));
            }
        }
        let labels = elems.iter().map(|&x| self.labels[x].clone()).collect();
        let k0 = K0Structure::new(self.lattice().clone(), labels, sorts, &edges).expect("validated metric part");
        (k0, elems)
    }

    pub fn is_closed(&self) -> bool {
        ClosureDescription::u_k(&self.params).is_closed(&self.s)
    }

    pub fn is_isomorphic(&self, other: &KStructure) -> bool {
        self.s.is_isomorphic(&other.s)
    }

    /// The substructure on `elems`, if it is itself a valid structure.
    pub fn substructure(&self, elems: &[usize]) -> Result<KStructure, KError> {
        let s = self.s.substructure(elems);
        let labels = elems.iter().map(|&x| self.labels[x].clone()).collect();
        KStructure::new(self.params.clone(), labels, s)
    }

    /// Smallest closed substructure containing `elems`: closes under `U`,
    /// `B` and `D` witnesses. Returned sorted.
    pub fn closure_of(&self, elems: &[usize]) -> Vec<usize> {
        let mut set: BTreeSet<usize> = elems.iter().copied().collect();
        loop {
            let before = set.len();
            let cur: Vec<usize> = set.iter().copied().collect();
            for &x in &cur {
                for f in self.s.incident(x) {
                    let a = f.args();
                    let root_in = match f.sym {
                        Symbol::U(..) | Symbol::B(..) => a[0] == x,
                        Symbol::D(..) => a[0] == x && set.contains(&a[1]) || a[1] == x && set.contains(&a[0]),
                        _ => false,
                    };
                    if root_in {
                        set.insert(*a.last().unwrap());
                    }
                }
            }
            if set.len() == before {
                return set.into_iter().collect();
            }
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Every constraint of a lifted structure.
    Full,
    /// The weaker constraints of a union of copies awaiting completion:
    /// the order need only be acyclic, bijections need only be partial and
    /// `D^exists` need only imply a common class.
    Partial,
}

fn sort_of(s: &Structure, x: usize) -> Option<SortType> {
    let mut it = s.unary_of(x).filter_map(|sym| match sym {
        Symbol::P(e, i) => Some((e, i)),
        _ => None,
    });
    let first = it.next()?;
    it.next().is_none().then_some(first)
}

/// Checks the named constraints and reports every violation.
pub fn diagnose(params: &LiftParams, s: &Structure, labels: &[String], mode: Mode) -> Vec<Diagnostic> {
    let l = params.lattice();
    let n = s.len();
    let mut out = vec![];
    let name = |x: usize| labels.get(x).cloned().unwrap_or_else(|| x.to_string());
    let mut bad = |c: Constraint, detail: String| out.push(Diagnostic { constraint: c, detail });

    let mut sort = vec![None; n];
    for x in 0..n {
        let ps: Vec<SortType> =
            s.unary_of(x).filter_map(|sym| if let Symbol::P(e, i) = sym { Some((e, i)) } else { None }).collect();
        match ps.as_slice() {
            [(e, i)] if *e < l.len() && *i >= 1 && *i <= params.n[*e] => sort[x] = Some((*e, *i)),
            _ => bad(Constraint::Partition, format!("`{}` does not have exactly one valid sort", name(x))),
        }
    }
    if sort.iter().any(|s| s.is_none()) {
        return out;
    }
    let sort: Vec<SortType> = sort.into_iter().map(Option::unwrap).collect();
    let members = |t: SortType| (0..n).filter(|&x| sort[x] == t).count();
    if mode == Mode::Full {
        for e in l.elements() {
            let c1 = members((e, 1));
            for i in 2..=params.n[e] {
                if members((e, i)) != c1 {
                    bad(
                        Constraint::Partition,
                        format!("sorts ({},1) and ({},{i}) differ in size", l.label(e), l.label(e)),
                    );
                }
            }
        }
    }

    // Metric part.
    let mut up: Vec<BTreeMap<Elem, Vec<usize>>> = vec![BTreeMap::new(); n];
    for f in s.facts() {
        if let Symbol::U(e, g) = f.sym {
            let (x, y) = (f.args()[0], f.args()[1]);
            if !l.lt(e, g) || sort[x] != (e, 1) || sort[y] != (g, 1) {
                bad(
                    Constraint::UTyped,
                    format!("U({},{}) edge `{}` -> `{}`", l.label(e), l.label(g), name(x), name(y)),
                );
                continue;
            }
            up[x].entry(g).or_default().push(y);
        }
    }
    let upf = |x: usize, g: Elem| -> Option<usize> {
        if sort[x] == (g, 1) {
            return Some(x);
        }
        match up[x].get(&g).map(Vec::as_slice) {
            Some([y]) => Some(*y),
            _ => None,
        }
    };
    for x in (0..n).filter(|&x| sort[x].1 == 1) {
        let e = sort[x].0;
        for g in l.elements().filter(|&g| l.lt(e, g)) {
            let k = up[x].get(&g).map_or(0, Vec::len);
            if k != 1 {
                bad(Constraint::UClosed, format!("`{}` has {k} U edges to level {}", name(x), l.label(g)));
            }
        }
    }
    for x in (0..n).filter(|&x| sort[x].1 == 1) {
        let e = sort[x].0;
        for f in l.elements().filter(|&f| l.lt(e, f)) {
            let Some(y) = upf(x, f) else { continue };
            for g in l.elements().filter(|&g| l.lt(f, g)) {
                if upf(y, g) != upf(x, g) {
                    bad(
                        Constraint::Coherent,
                        format!("`{}` via level {} at level {}", name(x), l.label(f), l.label(g)),
                    );
                }
            }
        }
    }
    let metric: Vec<usize> = (0..n).filter(|&x| sort[x].1 == 1).collect();
    let leq_u = |z: usize, x: usize| upf(z, sort[x].0) == Some(x);
    for (a, &x) in metric.iter().enumerate() {
        for &y in &metric[a + 1..] {
            let m = l.meet(sort[x].0, sort[y].0);
            let c = metric.iter().filter(|&&z| sort[z].0 == m && leq_u(z, x) && leq_u(z, y)).count();
            if c > 1 {
                bad(
                    Constraint::DownSemiClosed,
                    format!("`{}` and `{}` have {c} common lower classes", name(x), name(y)),
                );
            }
        }
    }

    // Order.
    let mut reach = vec![vec![false; n]; n];
    for f in s.facts().filter(|f| f.sym == Symbol::Less) {
        let (x, y) = (f.args()[0], f.args()[1]);
        reach[x][y] = true;
        if sort[x] != sort[y] && params.type_rank(sort[x]) > params.type_rank(sort[y]) {
            bad(Constraint::TypeOrderRespected, format!("`{}` < `{}` against the type order", name(x), name(y)));
        }
    }
    let direct = reach.clone();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    if let Some(x) = (0..n).find(|&x| reach[x][x]) {
        bad(Constraint::OrderAcyclic, format!("cycle through `{}`", name(x)));
    } else if mode == Mode::Full {
        for x in 0..n {
            for y in 0..n {
                if x < y && !direct[x][y] && !direct[y][x] {
                    bad(Constraint::OrderLinear, format!("`{}` and `{}` are incomparable", name(x), name(y)));
                }
            }
        }
        if (0..n).any(|i| (0..n).any(|j| reach[i][j] && !direct[i][j])) {
            bad(Constraint::OrderLinear, "order is not transitive".into());
        }
    }

    // Witness relations.
    let common = |x: usize, y: usize| {
        let j = l.join(sort[x].0, sort[y].0);
        upf(x, j).is_some() && upf(x, j) == upf(y, j)
    };
    let mut dex = BTreeSet::new();
    for f in s.facts().filter(|f| f.sym == Symbol::DEx) {
        let (x, y) = (f.args()[0], f.args()[1]);
        dex.insert((x, y));
        if sort[x].1 != 1 || sort[y].1 != 1 || !common(x, y) {
            bad(Constraint::DexTyped, format!("Dex(`{}`, `{}`) without a common class", name(x), name(y)));
        }
    }
    if mode == Mode::Full {
        for &x in &metric {
            for &y in &metric {
                if common(x, y) && !dex.contains(&(x, y)) {
                    bad(Constraint::DexTyped, format!("`{}` and `{}` share a class but lack Dex", name(x), name(y)));
                }
            }
        }
    }
    let mut dcount: BTreeMap<(Symbol, usize, usize), usize> = BTreeMap::new();
    for f in s.facts() {
        if let Symbol::D(e, g) = f.sym {
            let (x1, x2, y) = (f.args()[0], f.args()[1], f.args()[2]);
            let ok = e != g
                && sort[x1] == (e, 1)
                && sort[x2] == (g, 1)
                && dex.contains(&(x1, x2))
                && sort[y] == (l.meet(e, g), 1)
                && leq_u(y, x1)
                && leq_u(y, x2);
            if !ok {
                bad(Constraint::DTyped, format!("D(`{}`, `{}`, `{}`)", name(x1), name(x2), name(y)));
            }
            *dcount.entry((f.sym, x1, x2)).or_default() += 1;
        }
    }
    for ((_, x1, x2), c) in dcount {
        if c > 1 {
            bad(Constraint::DUnique, format!("`{}`, `{}` have {c} D witnesses", name(x1), name(x2)));
        }
    }

    // Bijections.
    let mut bmap: BTreeMap<(Elem, usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for f in s.facts() {
        if let Symbol::B(e, i, j) = f.sym {
            let (x, y) = (f.args()[0], f.args()[1]);
            if sort[x] != (e, i) || sort[y] != (e, j) {
                bad(
                    Constraint::BBijective,
                    format!("B({},{i},{j}) edge `{}` -> `{}` is ill-typed", l.label(e), name(x), name(y)),
                );
                continue;
            }
            bmap.entry((e, i, j)).or_default().push((x, y));
        }
    }
    for e in l.elements() {
        for i in 1..=params.n[e] {
            for j in 1..=params.n[e] {
                let edges = bmap.get(&(e, i, j)).cloned().unwrap_or_default();
                let dom: Vec<usize> = edges.iter().map(|p| p.0).collect();
                let cod: Vec<usize> = edges.iter().map(|p| p.1).collect();
                let distinct = |v: &[usize]| v.iter().collect::<BTreeSet<_>>().len() == v.len();
                if !distinct(&dom) || !distinct(&cod) {
                    bad(Constraint::BBijective, format!("B({},{i},{j}) is not injective and functional", l.label(e)));
                } else if mode == Mode::Full && (dom.len() != members((e, i)) || cod.len() != members((e, j))) {
                    bad(Constraint::BBijective, format!("B({},{i},{j}) is not total", l.label(e)));
                }
            }
        }
    }
    for (&(e, i, j), edges) in &bmap {
        for &(x, y) in edges {
            for k in 1..=params.n[e] {
                if let Some(second) = bmap.get(&(e, j, k)) {
                    for &(_, z) in second.iter().filter(|p| p.0 == y) {
                        if !s.holds(&Fact::binary(Symbol::B(e, i, k), x, z)) {
                            bad(
                                Constraint::BCoherent,
                                format!("B({},{i},{j}) then B({},{j},{k}) from `{}`", l.label(e), l.label(e), name(x)),
                            );
                        }
                    }
                }
            }
        }
    }
    out
}

/// Root condition of a closure relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Root {
    /// One element with the given sort.
    Unary(Symbol),
    /// Two elements with the given sorts, plus these binary facts among
    /// them (`0`, `1` index the root).
    Pair(Symbol, Symbol, Vec<(Symbol, usize, usize)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureRule {
    /// The closure relation; its last argument is the closed-off element.
    pub symbol: Symbol,
    pub root: Root,
}

/// A list of closure relations with their roots.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ClosureDescription {
    pub rules: Vec<ClosureRule>,
}

impl ClosureDescription {
    /// `U_{E,E'}` with root a single `P_{E,1}` element.
    pub fn u_u(l: &Lattice) -> Self {
        let mut rules = vec![];
        for e in l.elements() {
            for g in l.elements().filter(|&g| l.lt(e, g)) {
                rules.push(ClosureRule { symbol: Symbol::U(e, g), root: Root::Unary(Symbol::P(e, 1)) });
            }
        }
        ClosureDescription { rules }
    }

    /// `U`, `B` and `D` closure relations.
    pub fn u_k(params: &LiftParams) -> Self {
        let l = params.lattice();
        let mut d = Self::u_u(l);
        for e in l.elements() {
            for i in 1..=params.n[e] {
                for j in 1..=params.n[e] {
                    d.rules.push(ClosureRule { symbol: Symbol::B(e, i, j), root: Root::Unary(Symbol::P(e, i)) });
                }
            }
        }
        for e in l.elements() {
            for g in l.elements().filter(|&g| g != e) {
                let mut facts = vec![(Symbol::DEx, 0, 1)];
                if l.lt(e, g) {
                    facts.push((Symbol::U(e, g), 0, 1));
                } else if l.lt(g, e) {
                    facts.push((Symbol::U(g, e), 1, 0));
                }
                if params.type_rank((e, 1)) < params.type_rank((g, 1)) {
                    facts.push((Symbol::Less, 0, 1));
                } else {
                    facts.push((Symbol::Less, 1, 0));
                }
                d.rules.push(ClosureRule {
                    symbol: Symbol::D(e, g),
                    root: Root::Pair(Symbol::P(e, 1), Symbol::P(g, 1), facts),
                });
            }
        }
        d
    }

    fn out_degrees(&self, s: &Structure) -> Vec<(usize, usize)> {
        let mut degs = vec![];
        for rule in &self.rules {
            let mut count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for f in s.facts().filter(|f| f.sym == rule.symbol) {
                let a = f.args();
                *count.entry(a[..a.len() - 1].to_vec()).or_default() += 1;
            }
            let roots: BTreeSet<Vec<usize>> = match &rule.root {
                Root::Unary(p) => (0..s.len()).filter(|&x| s.holds(&Fact::unary(*p, x))).map(|x| vec![x]).collect(),
                Root::Pair(p, q, facts) => {
                    let xs: Vec<usize> = (0..s.len()).filter(|&x| s.holds(&Fact::unary(*p, x))).collect();
                    let ys: Vec<usize> = (0..s.len()).filter(|&y| s.holds(&Fact::unary(*q, y))).collect();
                    xs.iter()
                        .flat_map(|&x| ys.iter().map(move |&y| vec![x, y]))
                        .filter(|r| facts.iter().all(|&(sym, a, b)| s.holds2(sym, r[a], r[b])))
                        .collect()
                }
            };
            for r in &roots {
                degs.push((1, count.get(r).copied().unwrap_or(0)));
            }
            for (t, c) in &count {
                if !roots.contains(t) {
                    degs.push((0, *c));
                }
            }
        }
        degs
    }

    /// Out-degree exactly one on every root and zero elsewhere.
    pub fn is_closed(&self, s: &Structure) -> bool {
        self.out_degrees(s).iter().all(|&(want, got)| want == got)
    }

    /// Out-degree at most one on every root and zero elsewhere.
    pub fn is_semi_closed(&self, s: &Structure) -> bool {
        self.out_degrees(s).iter().all(|&(want, got)| got <= want)
    }
}

/// Extends `k` so that its metric part becomes `k0`; `map[j]` is the image
/// in `k0` of the `j`-th metric element of `k` (in index order). New
/// elements are appended, each metric element followed by its copies, and
/// placed after the existing elements of their sort. `D` is added for
/// every witnessed pair, so a downward-closed `k0` gives a closed result.
pub fn extend_k(k: &KStructure, k0: &K0Structure, map: &[usize]) -> Result<KStructure, KError> {
    let params = k.params.clone();
    let l = params.lattice().clone();
    let (old, old_elems) = k.metric_part();
    if map.len() != old.len() || !old.is_embedding(k0, map) {
        return Err(KError::NotContaining);
    }
    let mut s = k.s.clone();
    let mut labels = k.labels.clone();
    // k0 index -> structure index.
    let mut at = vec![usize::MAX; k0.len()];
    for (j, &x) in old_elems.iter().enumerate() {
        at[map[j]] = x;
    }
    for x in 0..k0.len() {
        if at[x] != usize::MAX {
            continue;
        }
        let e = k0.sort(x);
        let mut copies = vec![];
        for i in 1..=params.n[e] {
            let y = s.add_element();
            s.insert(Fact::unary(Symbol::P(e, i), y));
            let mut lab = if i == 1 { k0.label(x).to_string() } else { format!("{}#{i}", k0.label(x)) };
            while labels.contains(&lab) {
                lab.push('\'');
            }
            labels.push(lab);
            copies.push(y);
        }
        at[x] = copies[0];
        for (a, &ya) in copies.iter().enumerate() {
            for (b, &yb) in copies.iter().enumerate() {
                s.insert(Fact::binary(Symbol::B(e, a + 1, b + 1), ya, yb));
            }
        }
    }
    for (x, g, y) in k0.edges() {
        s.insert(Fact::binary(Symbol::U(k0.sort(x), g), at[x], at[y]));
    }
    for x in 0..k0.len() {
        for y in 0..k0.len() {
            let (e, g) = (k0.sort(x), k0.sort(y));
            if !k0.delta(x, y).is_ok_and(|d| d == l.join(e, g)) {
                continue;
            }
            s.insert(Fact::binary(Symbol::DEx, at[x], at[y]));
            if e != g {
                if let Some(z) = k0.lower_witness(x, y) {
                    s.insert(Fact::new(Symbol::D(e, g), &[at[x], at[y], at[z]]));
                }
            }
        }
    }
    // Order: types first, then old elements in their order, then new ones
    // by creation.
    let n = s.len();
    let old_rank = |x: usize| if x < k.len() { (0, k.rank[x]) } else { (1, x) };
    let sort: Vec<SortType> = (0..n).map(|x| sort_of(&s, x).expect("sorted")).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&x| (params.type_rank(sort[x]), old_rank(x)));
    set_order(&mut s, &order);
    KStructure::new(params, labels, s)
}

/// Replaces `Less` by the linear order listing `order`.
pub(crate) fn set_order(s: &mut Structure, order: &[usize]) {
    s.remove_where(|sym| *sym == Symbol::Less);
    for (a, &x) in order.iter().enumerate() {
        for &y in &order[a + 1..] {
            s.insert(Fact::binary(Symbol::Less, x, y));
        }
    }
}

/// `extend_k` with the downward closure of the metric part.
pub fn cl(k: &KStructure) -> Result<KStructure, KError> {
    let (m, _) = k.metric_part();
    let closed = cl0(&m)?;
    let map: Vec<usize> = (0..m.len()).collect();
    extend_k(k, &closed, &map)
}

/// Terms: variables and upward class maps. `Up(t, F)` sends an element of
/// sort `(E, i)` to `x/F`, through the copy-1 element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    Up(Box<Term>, Elem),
}

impl Term {
    pub fn up(self, f: Elem) -> Term {
        Term::Up(Box::new(self), f)
    }

    fn eval(&self, s: &Structure, args: &[usize]) -> Option<usize> {
        match self {
            Term::Var(k) => args.get(*k).copied(),
            Term::Up(t, f) => {
                let x = t.eval(s, args)?;
                let (e, _) = sort_of(s, x)?;
                let one = s.incident(x).iter().find_map(|fact| match fact.sym {
                    Symbol::B(_, _, 1) if fact.args()[0] == x => Some(fact.args()[1]),
                    _ => None,
                });
                let one = one.or_else(|| s.holds(&Fact::unary(Symbol::P(e, 1), x)).then_some(x))?;
                if *f == e {
                    return Some(one);
                }
                s.incident(one).iter().find_map(|fact| match fact.sym {
                    Symbol::U(_, g) if g == *f && fact.args()[0] == one => Some(fact.args()[1]),
                    _ => None,
                })
            }
        }
    }

    fn subst(&self, terms: &[Term]) -> Term {
        match self {
            Term::Var(k) => terms[*k].clone(),
            Term::Up(t, f) => Term::Up(Box::new(t.subst(terms)), *f),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Term::Var(k) => Some(*k),
            Term::Up(t, _) => t.max_var(),
        }
    }
}

/// Quantifier-free formulas. Atoms with an undefined term are false.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Symbol, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn atom(sym: Symbol, vars: &[usize]) -> Formula {
        Formula::Atom(sym, vars.iter().map(|&v| Term::Var(v)).collect())
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn eval(&self, s: &Structure, args: &[usize]) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(sym, terms) => {
                let vals: Option<Vec<usize>> = terms.iter().map(|t| t.eval(s, args)).collect();
                vals.is_some_and(|v| v.len() == sym.arity() && s.holds(&Fact::new(*sym, &v)))
            }
            Formula::Eq(a, b) => match (a.eval(s, args), b.eval(s, args)) {
                (Some(x), Some(y)) => x == y,
                _ => false,
            },
            Formula::Not(f) => !f.eval(s, args),
            Formula::And(fs) => fs.iter().all(|f| f.eval(s, args)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(s, args)),
        }
    }

    /// Replaces variable `k` by `terms[k]`.
    pub fn subst(&self, terms: &[Term]) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(sym, ts) => Formula::Atom(*sym, ts.iter().map(|t| t.subst(terms)).collect()),
            Formula::Eq(a, b) => Formula::Eq(a.subst(terms), b.subst(terms)),
            Formula::Not(f) => Formula::not(f.subst(terms)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.subst(terms)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.subst(terms)).collect()),
        }
    }

    /// Number of free variables, i.e. one more than the largest index.
    pub fn arity(&self) -> usize {
        fn go(f: &Formula) -> Option<usize> {
            match f {
                Formula::True | Formula::False => None,
                Formula::Atom(_, ts) => ts.iter().filter_map(Term::max_var).max(),
                Formula::Eq(a, b) => a.max_var().max(b.max_var()),
                Formula::Not(g) => go(g),
                Formula::And(fs) | Formula::Or(fs) => fs.iter().filter_map(go).max(),
            }
        }
        go(self).map_or(0, |m| m + 1)
    }
}

/// `x/F = y/F`, i.e. `δ(x, y) <= F`.
fn same_class(f: Elem) -> Formula {
    Formula::Eq(Term::Var(0).up(f), Term::Var(1).up(f))
}

fn at_level(psi: &Formula, f: Elem) -> Formula {
    psi.subst(&[Term::Var(0).up(f), Term::Var(1).up(f)])
}

/// The recursive order formula `ψ_{E,i}` on sort `(E, i)`.
pub fn psi_formula(params: &LiftParams, e: Elem, i: usize) -> Formula {
    let l = params.lattice();
    let less = Formula::atom(Symbol::Less, &[0, 1]);
    if e == l.top() {
        return less;
    }
    if l.is_meet_irreducible(e) {
        let t = params.slot_top(e, i).expect("meet-irreducible sorts carry a slot");
        let above = psi_formula(params, t, 1);
        return Formula::Or(vec![
            Formula::And(vec![same_class(t), less]),
            Formula::And(vec![Formula::not(same_class(t)), at_level(&above, t)]),
        ]);
    }
    let f1 = params.choice.cover[e].expect("cover chosen");
    let f2 = params.choice.partner[e].expect("partner chosen");
    let p1 = psi_formula(params, f1, 1);
    let p2 = psi_formula(params, f2, 1);
    Formula::And(vec![
        Formula::not(Formula::Eq(Term::Var(0), Term::Var(1))),
        Formula::Or(vec![
            Formula::And(vec![same_class(f1), at_level(&p2, f2)]),
            Formula::And(vec![Formula::not(same_class(f1)), at_level(&p1, f1)]),
        ]),
    ])
}

/// Evaluates `ψ_{E,i}(x, y)` on a closed structure.
pub fn psi_less(k: &KStructure, e: Elem, i: usize, x: usize, y: usize) -> Result<bool, KError> {
    if !k.is_closed() {
        return Err(KError::NotClosed);
    }
    Ok(psi_formula(&k.params, e, i).eval(&k.s, &[x, y]))
}

/// One formula per relation symbol; symbols without an entry keep their
/// interpretation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReinterpretationScheme {
    pub formulas: BTreeMap<Symbol, Formula>,
}

impl ReinterpretationScheme {
    /// `Φ_<`: within a sort use `ψ`, across sorts the type order.
    pub fn phi_less(params: &LiftParams) -> Self {
        let mut within = vec![];
        let mut across = vec![];
        for &(e, i) in &params.type_order {
            within.push(Formula::And(vec![
                Formula::atom(Symbol::P(e, i), &[0]),
                Formula::atom(Symbol::P(e, i), &[1]),
                psi_formula(params, e, i),
            ]));
        }
        for (a, &t) in params.type_order.iter().enumerate() {
            for &u in &params.type_order[a + 1..] {
                across.push(Formula::And(vec![
                    Formula::atom(Symbol::P(t.0, t.1), &[0]),
                    Formula::atom(Symbol::P(u.0, u.1), &[1]),
                ]));
            }
        }
        within.extend(across);
        let mut formulas = BTreeMap::new();
        formulas.insert(Symbol::Less, Formula::Or(within));
        ReinterpretationScheme { formulas }
    }
}

/// Recomputes every relation with a formula on the same universe.
pub fn reinterpret(s: &Structure, scheme: &ReinterpretationScheme) -> Result<Structure, KError> {
    for (sym, f) in &scheme.formulas {
        if f.arity() > sym.arity() {
            return Err(KError::FormulaIllTyped(format!("{sym:?}")));
        }
    }
    let n = s.len();
    let mut out = s.clone();
    out.remove_where(|sym| scheme.formulas.contains_key(sym));
    for (sym, f) in &scheme.formulas {
        let r = sym.arity();
        let mut args = vec![0; r];
        loop {
            if f.eval(s, &args) {
                out.insert(Fact::new(*sym, &args));
            }
            let mut k = 0;
            while k < r {
                args[k] += 1;
                if args[k] < n {
                    break;
                }
                args[k] = 0;
                k += 1;
            }
            if k == r {
                break;
            }
        }
    }
    Ok(out)
}

/// `Φ_<` applied to a lifted structure.
pub fn retract(k: &KStructure) -> Result<KStructure, KError> {
    let s = reinterpret(&k.s, &ReinterpretationScheme::phi_less(&k.params))?;
    KStructure::new(k.params.clone(), k.labels.clone(), s)
}

/// Closed and fixed by `Φ_<`.
pub fn in_k_prime(k: &KStructure) -> bool {
    k.is_closed() && reinterpret(&k.s, &ReinterpretationScheme::phi_less(&k.params)).is_ok_and(|s| s == k.s)
}

/// Lifts a structure of classes with copy counts from `params` and every
/// sort ordered by element index. `D` is added where witnesses exist.
pub fn from_k0(params: Arc<LiftParams>, k0: &K0Structure) -> Result<KStructure, KError> {
    let empty = KStructure::build(params, vec![], Structure::new(0));
    extend_k(&empty, k0, &[])
}
