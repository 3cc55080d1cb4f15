//! Λ-ultrametric spaces and their presentation as labelled equivalence systems.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lattice::{Elem, Lattice};

pub type Point = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("distance table is not square over {0} points")]
    Shape(usize),
    #[error("d({0},{0}) is not the bottom element")]
    NonZeroSelfDistance(String),
    #[error("distinct points `{0}` and `{1}` are at distance zero")]
    ZeroDistanceDistinctPoints(String, String),
    #[error("d({0},{1}) differs from d({1},{0})")]
    Asymmetric(String, String),
    #[error("triangle inequality fails: d({0},{2}) is not below d({0},{1}) v d({1},{2})")]
    TriangleViolation(String, String, String),
    #[error("distance value out of range")]
    BadDistance,
    #[error("spaces are over different lattices")]
    LatticeMismatch,
    #[error("lattice is not distributive")]
    NotDistributive,
    #[error("map is not an embedding")]
    NotAnEmbedding,
    #[error("equivalence system is invalid: {0}")]
    InvalidSystem(String),
    #[error("the system does not induce a valid space: {0}")]
    ResultViolatesTriangle(Box<SpaceError>),
    #[error("duplicate point label `{0}`")]
    DuplicateLabel(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UltrametricSpace {
    lattice: Arc<Lattice>,
    labels: Vec<String>,
    d: Vec<Vec<Elem>>,
}

impl UltrametricSpace {
    pub fn new(lattice: Arc<Lattice>, labels: Vec<String>, d: Vec<Vec<Elem>>) -> Result<Self, SpaceError> {
        let n = labels.len();
        if d.len() != n || d.iter().any(|r| r.len() != n) {
            return Err(SpaceError::Shape(n));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(SpaceError::DuplicateLabel(l.clone()));
            }
        }
        if d.iter().flatten().any(|&v| v >= lattice.len()) {
            return Err(SpaceError::BadDistance);
        }
        let zero = lattice.bottom();
        for x in 0..n {
            if d[x][x] != zero {
                return Err(SpaceError::NonZeroSelfDistance(labels[x].clone()));
            }
            for y in 0..n {
                if d[x][y] != d[y][x] {
                    return Err(SpaceError::Asymmetric(labels[x].clone(), labels[y].clone()));
                }
                if x != y && d[x][y] == zero {
                    return Err(SpaceError::ZeroDistanceDistinctPoints(labels[x].clone(), labels[y].clone()));
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if !lattice.leq(d[x][z], lattice.join(d[x][y], d[y][z])) {
                        return Err(SpaceError::TriangleViolation(
                            labels[x].clone(),
                            labels[y].clone(),
                            labels[z].clone(),
                        ));
                    }
                }
            }
        }
        Ok(UltrametricSpace { lattice, labels, d })
    }

    /// Points labelled `p0, p1, ...`.
    pub fn from_matrix(lattice: Arc<Lattice>, d: Vec<Vec<Elem>>) -> Result<Self, SpaceError> {
        let labels = (0..d.len()).map(|i| format!("p{i}")).collect();
        Self::new(lattice, labels, d)
    }

    pub fn empty(lattice: Arc<Lattice>) -> Self {
        UltrametricSpace { lattice, labels: vec![], d: vec![] }
    }

    pub fn single_point(lattice: Arc<Lattice>) -> Self {
        let zero = lattice.bottom();
        UltrametricSpace { lattice, labels: vec!["p0".into()], d: vec![vec![zero]] }
    }

    /// `rows x cols` grid: same row at distance `row_level`, same column at
    /// `col_level`, everything else at the top. Labels are `x{row}{col}`,
    /// 1-based.
    pub fn grid(
        lattice: Arc<Lattice>,
        rows: usize,
        cols: usize,
        row_level: Elem,
        col_level: Elem,
    ) -> Result<Self, SpaceError> {
        let mut labels = vec![];
        let mut coords = vec![];
        for i in 0..rows {
            for j in 0..cols {
                labels.push(format!("x{}{}", i + 1, j + 1));
                coords.push((i, j));
            }
        }
        let n = coords.len();
        let d = (0..n)
            .map(|p| {
                (0..n)
                    .map(|q| {
                        let (a, b) = (coords[p], coords[q]);
                        if p == q {
                            lattice.bottom()
                        } else if a.0 == b.0 {
                            row_level
                        } else if a.1 == b.1 {
                            col_level
                        } else {
                            lattice.top()
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(lattice, labels, d)
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

    pub fn points(&self) -> std::ops::Range<Point> {
        0..self.labels.len()
    }

    pub fn label(&self, p: Point) -> &str {
        &self.labels[p]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn point(&self, label: &str) -> Option<Point> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn dist(&self, x: Point, y: Point) -> Elem {
        self.d[x][y]
    }

    pub fn matrix(&self) -> &[Vec<Elem>] {
        &self.d
    }

    /// `x` and `y` lie in a common `level`-class.
    pub fn within(&self, x: Point, y: Point, level: Elem) -> bool {
        self.lattice.leq(self.d[x][y], level)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, SpaceError> {
        if labels.len() != self.len() {
            return Err(SpaceError::Shape(self.len()));
        }
        self.labels = labels;
        Self::new(self.lattice, self.labels, self.d)
    }

    pub fn subspace(&self, pts: &[Point]) -> UltrametricSpace {
        UltrametricSpace {
            lattice: self.lattice.clone(),
            labels: pts.iter().map(|&p| self.labels[p].clone()).collect(),
            d: pts.iter().map(|&p| pts.iter().map(|&q| self.d[p][q]).collect()).collect(),
        }
    }

    /// Partition of the points into classes of "distance at most `level`".
    pub fn classes(&self, level: Elem) -> Partition {
        Partition::from_relation(self.len(), |x, y| self.within(x, y, level))
    }

    pub fn to_equivalence_system(&self) -> EquivalenceSystem {
        EquivalenceSystem {
            lattice: self.lattice.clone(),
            labels: self.labels.clone(),
            partitions: self.lattice.elements().map(|l| self.classes(l)).collect(),
        }
    }

    pub fn from_equivalence_system(sys: &EquivalenceSystem) -> Result<Self, SpaceError> {
        sys.validate()?;
        let l = &sys.lattice;
        let n = sys.labels.len();
        let d = (0..n)
            .map(|x| (0..n).map(|y| l.meet_all(l.elements().filter(|&e| sys.partitions[e].same(x, y)))).collect())
            .collect();
        Self::new(l.clone(), sys.labels.clone(), d).map_err(|e| SpaceError::ResultViolatesTriangle(Box::new(e)))
    }

    /// All distance-preserving injections `self -> other`, in lexicographic
    /// order of their image tuples.
    pub fn embeddings_into(&self, other: &UltrametricSpace) -> Result<Vec<Vec<Point>>, SpaceError> {
        if self.lattice != other.lattice {
            return Err(SpaceError::LatticeMismatch);
        }
        let mut out = vec![];
        let mut map = Vec::with_capacity(self.len());
        let mut used = vec![false; other.len()];
        self.extend_embedding(other, &mut map, &mut used, &mut out);
        Ok(out)
    }

    fn extend_embedding(
        &self,
        other: &UltrametricSpace,
        map: &mut Vec<Point>,
        used: &mut [bool],
        out: &mut Vec<Vec<Point>>,
    ) {
        let i = map.len();
        if i == self.len() {
            out.push(map.clone());
            return;
        }
        for cand in other.points() {
            if used[cand] || (0..i).any(|j| self.d[i][j] != other.d[cand][map[j]]) {
                continue;
            }
            used[cand] = true;
            map.push(cand);
            self.extend_embedding(other, map, used, out);
            map.pop();
            used[cand] = false;
        }
    }

    /// Substructures of `other` isomorphic to `self`, as sorted point sets.
    pub fn copies_in(&self, other: &UltrametricSpace) -> Result<Vec<Vec<Point>>, SpaceError> {
        let set: BTreeSet<Vec<Point>> = self
            .embeddings_into(other)?
            .into_iter()
            .map(|mut m| {
                m.sort_unstable();
                m
            })
            .collect();
        Ok(set.into_iter().collect())
    }

    pub fn is_embedding(&self, other: &UltrametricSpace, map: &[Point]) -> bool {
        map.len() == self.len()
            && map.iter().collect::<HashSet<_>>().len() == map.len()
            && map.iter().all(|&p| p < other.len())
            && self.points().all(|x| self.points().all(|y| self.d[x][y] == other.d[map[x]][map[y]]))
    }

    pub fn is_isomorphic(&self, other: &UltrametricSpace) -> bool {
        self.len() == other.len() && self.embeddings_into(other).map(|e| !e.is_empty()).unwrap_or(false)
    }

    /// Adds one point at the given distances from the existing points.
    pub fn with_point(&self, label: String, dists: &[Elem]) -> Result<UltrametricSpace, SpaceError> {
        let n = self.len();
        let mut d = self.d.clone();
        for (row, &v) in d.iter_mut().zip(dists) {
            row.push(v);
        }
        let mut last = dists.to_vec();
        last.push(self.lattice.bottom());
        d.push(last);
        let mut labels = self.labels.clone();
        labels.push(label);
        debug_assert_eq!(d.len(), n + 1);
        Self::new(self.lattice.clone(), labels, d)
    }
}

/// A partition of `0..n` stored as a class index per point. Class indices
/// are numbered by first occurrence, so equal partitions compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    class_of: Vec<usize>,
    count: usize,
}

impl Partition {
    pub fn from_relation(n: usize, same: impl Fn(usize, usize) -> bool) -> Self {
        let mut class_of = vec![usize::MAX; n];
        let mut count = 0;
        for x in 0..n {
            if class_of[x] != usize::MAX {
                continue;
            }
            for y in x..n {
                if class_of[y] == usize::MAX && same(x, y) {
                    class_of[y] = count;
                }
            }
            count += 1;
        }
        Partition { class_of, count }
    }

    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Option<Self> {
        let mut raw = vec![usize::MAX; n];
        for (i, b) in blocks.iter().enumerate() {
            for &x in b {
                if x >= n || raw[x] != usize::MAX {
                    return None;
                }
                raw[x] = i;
            }
        }
        if raw.contains(&usize::MAX) {
            return None;
        }
        Some(Self::from_relation(n, |x, y| raw[x] == raw[y]))
    }

    pub fn discrete(n: usize) -> Self {
        Self::from_relation(n, |x, y| x == y)
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.count
    }

    pub fn class_of(&self, x: usize) -> usize {
        self.class_of[x]
    }

    pub fn same(&self, x: usize, y: usize) -> bool {
        self.class_of[x] == self.class_of[y]
    }

    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]; self.count];
        for (x, &c) in self.class_of.iter().enumerate() {
            out[c].push(x);
        }
        out
    }

    /// Common refinement.
    pub fn meet(&self, other: &Partition) -> Partition {
        Partition::from_relation(self.len(), |x, y| self.same(x, y) && other.same(x, y))
    }

    pub fn refines(&self, other: &Partition) -> bool {
        (0..self.len()).all(|x| (0..self.len()).all(|y| !self.same(x, y) || other.same(x, y)))
    }
}

/// A family of equivalence relations on a point set indexed by lattice
/// elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceSystem {
    pub lattice: Arc<Lattice>,
    pub labels: Vec<String>,
    pub partitions: Vec<Partition>,
}

impl EquivalenceSystem {
    pub fn validate(&self) -> Result<(), SpaceError> {
        let l = &self.lattice;
        let n = self.labels.len();
        if self.partitions.len() != l.len() || self.partitions.iter().any(|p| p.len() != n) {
            return Err(SpaceError::InvalidSystem("one partition per lattice element is required".into()));
        }
        if self.partitions[l.bottom()] != Partition::discrete(n) {
            return Err(SpaceError::InvalidSystem("the bottom relation must be equality".into()));
        }
        if n > 0 && self.partitions[l.top()].class_count() != 1 {
            return Err(SpaceError::InvalidSystem("the top relation must have a single class".into()));
        }
        for a in l.elements() {
            for b in l.elements() {
                let pa = &self.partitions[a];
                let pb = &self.partitions[b];
                if pa.meet(pb) != self.partitions[l.meet(a, b)] {
                    return Err(SpaceError::InvalidSystem(format!(
                        "E_{} is not the intersection of E_{} and E_{}",
                        l.label(l.meet(a, b)),
                        l.label(a),
                        l.label(b)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Result of gluing two spaces over a common base.
#[derive(Clone, Debug)]
pub struct Amalgam {
    pub space: UltrametricSpace,
    /// Image of each point of the first factor.
    pub left: Vec<Point>,
    /// Image of each point of the second factor.
    pub right: Vec<Point>,
}

/// Strong amalgam of `a1` and `a2` over `base`, with cross distances
/// `d(x, y) = meet over base points c of (d(x, c) v d(c, y))`.
pub fn amalgamate_spaces(
    base: &UltrametricSpace,
    a1: &UltrametricSpace,
    f1: &[Point],
    a2: &UltrametricSpace,
    f2: &[Point],
) -> Result<Amalgam, SpaceError> {
    let l = base.lattice.clone();
    if *a1.lattice != *l || *a2.lattice != *l {
        return Err(SpaceError::LatticeMismatch);
    }
    if !l.is_distributive() {
        return Err(SpaceError::NotDistributive);
    }
    if !base.is_embedding(a1, f1) || !base.is_embedding(a2, f2) {
        return Err(SpaceError::NotAnEmbedding);
    }
    let left: Vec<Point> = a1.points().collect();
    let mut right = vec![usize::MAX; a2.len()];
    for (c, &y) in f2.iter().enumerate() {
        right[y] = f1[c];
    }
    let mut labels = a1.labels.clone();
    let mut fresh = vec![];
    for y in a2.points() {
        if right[y] == usize::MAX {
            right[y] = labels.len();
            let mut label = a2.labels[y].clone();
            while labels.contains(&label) {
                label.push('\'');
            }
            labels.push(label);
            fresh.push(y);
        }
    }
    let n = labels.len();
    let mut d = vec![vec![l.bottom(); n]; n];
    for x in a1.points() {
        for y in a1.points() {
            d[x][y] = a1.d[x][y];
        }
    }
    for y in a2.points() {
        for z in a2.points() {
            d[right[y]][right[z]] = a2.d[y][z];
        }
    }
    for x in a1.points().filter(|x| !f1.contains(x)) {
        for &y in &fresh {
            let v = l.meet_all(base.points().map(|c| l.join(a1.d[x][f1[c]], a2.d[f2[c]][y])));
            d[x][right[y]] = v;
            d[right[y]][x] = v;
        }
    }
    let space = UltrametricSpace::new(l, labels, d)?;
    Ok(Amalgam { space, left, right })
}

/// Every distance vector from a new point to `subset` that keeps
/// `subset` plus the new point a valid space. The new point is distinct
/// from all existing ones.
pub fn one_point_types(space: &UltrametricSpace, subset: &[Point]) -> Vec<Vec<Elem>> {
    let l = &space.lattice;
    let nonzero: Vec<Elem> = l.elements().filter(|&e| e != l.bottom()).collect();
    let mut out = vec![];
    let mut cur = vec![];
    fn go(space: &UltrametricSpace, subset: &[Point], nonzero: &[Elem], cur: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        let i = cur.len();
        if i == subset.len() {
            out.push(cur.clone());
            return;
        }
        let l = &space.lattice;
        for &v in nonzero {
            let ok = (0..i).all(|j| {
                let between = space.d[subset[i]][subset[j]];
                l.leq(v, l.join(cur[j], between))
                    && l.leq(cur[j], l.join(v, between))
                    && l.leq(between, l.join(v, cur[j]))
            });
            if ok {
                cur.push(v);
                go(space, subset, nonzero, cur, out);
                cur.pop();
            }
        }
    }
    go(space, subset, &nonzero, &mut cur, &mut out);
    out
}

fn realizes(space: &UltrametricSpace, subset: &[Point], ty: &[Elem]) -> bool {
    space.points().any(|p| !subset.contains(&p) && subset.iter().zip(ty).all(|(&s, &t)| space.d[p][s] == t))
}

fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<Point>> {
    let mut out = vec![];
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<Point>, out: &mut Vec<Vec<Point>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == k {
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut vec![], &mut out);
    out
}

/// Largest `k <= max_k` such that every one-point extension of every
/// substructure of size at most `k` is realized inside `space`.
pub fn extension_level(space: &UltrametricSpace, max_k: usize) -> usize {
    let mut level = 0;
    for k in 1..=max_k.min(space.len()) {
        let ok = subsets_up_to(space.len(), k)
            .iter()
            .filter(|s| s.len() == k)
            .all(|s| one_point_types(space, s).iter().all(|t| realizes(space, s, t)));
        if !ok {
            break;
        }
        level = k;
    }
    level
}

/// Bounded approximation of the generic space: iterated one-point extension
/// saturation, level by level, never exceeding `max_points`.
#[derive(Clone, Debug)]
pub struct GenericApprox {
    pub space: UltrametricSpace,
    /// Every one-point extension of every substructure of at most this many
    /// points is realized.
    pub level: usize,
}

const CANDIDATE_CAP: usize = 50_000;

pub fn generic_space(lattice: Arc<Lattice>, max_points: usize, seed: u64) -> Result<GenericApprox, SpaceError> {
    if !lattice.is_distributive() {
        return Err(SpaceError::NotDistributive);
    }
    if max_points == 0 {
        return Ok(GenericApprox { space: UltrametricSpace::empty(lattice), level: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut space = UltrametricSpace::single_point(lattice.clone());
    let mut level = 0;
    if lattice.len() == 1 {
        return Ok(GenericApprox { space, level });
    }
    for k in 1..=max_points {
        let snapshot = space.clone();
        let mut complete = false;
        loop {
            let mut reqs = requirements(&space, k);
            reqs.shuffle(&mut rng);
            let Some((subset, ty)) = reqs.iter().find(|(s, t)| !realizes(&space, s, t)).cloned() else {
                complete = true;
                break;
            };
            if space.len() >= max_points {
                break;
            }
            let unmet: Vec<(Vec<Point>, Vec<Elem>)> =
                reqs.into_iter().filter(|(s, t)| !realizes(&space, s, t)).collect();
            let dists = best_extension(&space, &subset, &ty, &unmet);
            let label = format!("p{}", space.len());
            space = space.with_point(label, &dists)?;
        }
        if !complete {
            space = snapshot;
            break;
        }
        level = k;
        if k >= space.len() {
            break;
        }
    }
    Ok(GenericApprox { space, level })
}

fn requirements(space: &UltrametricSpace, k: usize) -> Vec<(Vec<Point>, Vec<Elem>)> {
    let mut out = vec![];
    for s in subsets_up_to(space.len(), k) {
        for t in one_point_types(space, &s) {
            out.push((s.clone(), t));
        }
    }
    out
}

/// Chooses distances from a new point to every existing point, matching
/// `ty` on `subset` and realizing as many currently unmet requirements as
/// possible. Falls back to the farthest consistent choice when the search
/// space is too large.
fn best_extension(
    space: &UltrametricSpace,
    subset: &[Point],
    ty: &[Elem],
    unmet: &[(Vec<Point>, Vec<Elem>)],
) -> Vec<Elem> {
    let l = &space.lattice;
    let n = space.len();
    let mut fixed = vec![None; n];
    for (&s, &t) in subset.iter().zip(ty) {
        fixed[s] = Some(t);
    }
    let order: Vec<Point> = subset.iter().copied().chain((0..n).filter(|p| !subset.contains(p))).collect();
    let nonzero: Vec<Elem> = l.elements().filter(|&e| e != l.bottom()).collect();
    let mut candidates = vec![];
    let mut cur = vec![l.bottom(); n];
    let mut overflow = false;
    fn go(
        space: &UltrametricSpace,
        order: &[Point],
        fixed: &[Option<Elem>],
        nonzero: &[Elem],
        i: usize,
        cur: &mut Vec<Elem>,
        out: &mut Vec<Vec<Elem>>,
        overflow: &mut bool,
    ) {
        if *overflow {
            return;
        }
        if i == order.len() {
            out.push(cur.clone());
            if out.len() >= CANDIDATE_CAP {
                *overflow = true;
            }
            return;
        }
        let l = &space.lattice;
        let p = order[i];
        let choices: Vec<Elem> = match fixed[p] {
            Some(v) => vec![v],
            None => nonzero.to_vec(),
        };
        for v in choices {
            let ok = order[..i].iter().all(|&q| {
                let between = space.d[p][q];
                l.leq(v, l.join(cur[q], between))
                    && l.leq(cur[q], l.join(v, between))
                    && l.leq(between, l.join(v, cur[q]))
            });
            if ok {
                cur[p] = v;
                go(space, order, fixed, nonzero, i + 1, cur, out, overflow);
            }
        }
    }
    go(space, &order, &fixed, &nonzero, 0, &mut cur, &mut candidates, &mut overflow);
    if overflow || candidates.is_empty() {
        // Farthest consistent point: amalgamate over the subset.
        return (0..n)
            .map(|p| match fixed[p] {
                Some(v) => v,
                None => l.meet_all(subset.iter().zip(ty).map(|(&s, &t)| l.join(t, space.d[s][p]))),
            })
            .collect();
    }
    let score = |c: &Vec<Elem>| unmet.iter().filter(|(s, t)| s.iter().zip(t).all(|(&p, &v)| c[p] == v)).count();
    let mut best = 0;
    let mut best_score = score(&candidates[0]);
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let sc = score(c);
        if sc > best_score {
            best = i;
            best_score = sc;
        }
    }
    candidates.swap_remove(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b2() -> Arc<Lattice> {
        Arc::new(Lattice::boolean_square())
    }

    #[test]
    fn join_triangle_accepts_and_rejects() {
        let l = b2();
        let (a, b, one) = (l.elem("a").unwrap(), l.elem("b").unwrap(), l.top());
        let ok = UltrametricSpace::from_matrix(l.clone(), vec![vec![0, a, one], vec![a, 0, b], vec![one, b, 0]]);
        assert!(ok.is_ok());
        let bad = UltrametricSpace::from_matrix(l.clone(), vec![vec![0, a, one], vec![a, 0, a], vec![one, a, 0]]);
        assert!(matches!(bad, Err(SpaceError::TriangleViolation(..))));
        assert!(UltrametricSpace::from_matrix(l, vec![vec![0]]).is_ok());
    }

    #[test]
    fn zero_distance_between_distinct_points() {
        let l = Arc::new(Lattice::chain(2));
        let err = UltrametricSpace::from_matrix(l.clone(), vec![vec![0, 0], vec![0, 0]]).unwrap_err();
        assert!(matches!(err, SpaceError::ZeroDistanceDistinctPoints(..)));
        let err = UltrametricSpace::from_matrix(l, vec![vec![1]]).unwrap_err();
        assert!(matches!(err, SpaceError::NonZeroSelfDistance(_)));
    }

    #[test]
    fn grid_classes_are_rows_and_columns() {
        let l = b2();
        let (a, b) = (l.elem("a").unwrap(), l.elem("b").unwrap());
        let g = UltrametricSpace::grid(l.clone(), 2, 2, a, b).unwrap();
        let idx = |s: &str| g.point(s).unwrap();
        let rows = g.classes(a).classes();
        assert_eq!(rows, vec![vec![idx("x11"), idx("x12")], vec![idx("x21"), idx("x22")]]);
        let cols = g.classes(b).classes();
        assert_eq!(cols, vec![vec![idx("x11"), idx("x21")], vec![idx("x12"), idx("x22")]]);
        assert_eq!(g.classes(l.bottom()).class_count(), 4);
        assert_eq!(g.classes(l.top()).class_count(), 1);
    }

    #[test]
    fn two_points_equivalence_system() {
        let l = Arc::new(Lattice::chain(2));
        let s = UltrametricSpace::from_matrix(l.clone(), vec![vec![0, 1], vec![1, 0]]).unwrap();
        let sys = s.to_equivalence_system();
        assert_eq!(sys.partitions[0].classes(), vec![vec![0], vec![1]]);
        assert_eq!(sys.partitions[1].classes(), vec![vec![0, 1]]);
        assert_eq!(UltrametricSpace::from_equivalence_system(&sys).unwrap(), s);
    }

    #[test]
    fn system_that_is_not_meet_preserving() {
        let l = b2();
        let (a, b) = (l.elem("a").unwrap(), l.elem("b").unwrap());
        let all = Partition::from_relation(2, |_, _| true);
        let mut partitions = vec![Partition::discrete(2); 4];
        partitions[a] = all.clone();
        partitions[b] = all.clone();
        partitions[l.top()] = all;
        let sys = EquivalenceSystem { lattice: l, labels: vec!["x".into(), "y".into()], partitions };
        assert!(matches!(sys.validate(), Err(SpaceError::InvalidSystem(_))));
    }

    #[test]
    fn embeddings_and_copies() {
        let l = Arc::new(Lattice::chain(2));
        let one = UltrametricSpace::single_point(l.clone());
        let three =
            UltrametricSpace::from_matrix(l.clone(), vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]).unwrap();
        assert_eq!(one.embeddings_into(&three).unwrap().len(), 3);
        let two = three.subspace(&[0, 1]);
        assert_eq!(two.embeddings_into(&two).unwrap().len(), 2);
        assert_eq!(two.copies_in(&two).unwrap().len(), 1);
    }

    #[test]
    fn amalgam_over_one_point() {
        let l = b2();
        let (a, b) = (l.elem("a").unwrap(), l.elem("b").unwrap());
        let base = UltrametricSpace::single_point(l.clone());
        let a1 = UltrametricSpace::from_matrix(l.clone(), vec![vec![0, a], vec![a, 0]]).unwrap();
        let a2 = UltrametricSpace::from_matrix(l.clone(), vec![vec![0, b], vec![b, 0]]).unwrap();
        let am = amalgamate_spaces(&base, &a1, &[0], &a2, &[0]).unwrap();
        assert_eq!(am.space.len(), 3);
        assert_eq!(am.space.dist(am.left[1], am.right[1]), l.top());
    }

    #[test]
    fn amalgam_over_empty_base_is_generic() {
        let l = Arc::new(Lattice::chain(3));
        let base = UltrametricSpace::empty(l.clone());
        let p = UltrametricSpace::single_point(l.clone());
        let am = amalgamate_spaces(&base, &p, &[], &p, &[]).unwrap();
        assert_eq!(am.space.dist(0, 1), l.top());
    }

    #[test]
    fn amalgam_rejects_non_distributive() {
        let l = Arc::new(Lattice::m3());
        let p = UltrametricSpace::single_point(l.clone());
        let e = UltrametricSpace::empty(l);
        assert!(matches!(amalgamate_spaces(&e, &p, &[], &p, &[]), Err(SpaceError::NotDistributive)));
    }

    #[test]
    fn generic_two_element_chain() {
        let g = generic_space(Arc::new(Lattice::chain(2)), 3, 7).unwrap();
        assert_eq!(g.space.len(), 3);
        assert!(g.space.points().all(|x| g.space.points().all(|y| x == y || g.space.dist(x, y) == 1)));
        assert!(g.level >= 1);
        assert!(extension_level(&g.space, 1) >= 1);
    }

    #[test]
    fn generic_single_point() {
        let g = generic_space(Arc::new(Lattice::chain(3)), 1, 0).unwrap();
        assert_eq!(g.space.len(), 1);
        assert_eq!(g.level, 0);
    }

    #[test]
    fn generic_square_is_a_grid() {
        let l = b2();
        let g = generic_space(l.clone(), 4, 1).unwrap();
        assert_eq!(g.space.len(), 4);
        assert_eq!(g.level, 1);
        let grid = UltrametricSpace::grid(l.clone(), 2, 2, l.elem("a").unwrap(), l.elem("b").unwrap()).unwrap();
        assert!(g.space.is_isomorphic(&grid));
    }

    #[test]
    fn generic_is_deterministic() {
        let l = Arc::new(Lattice::chain(3));
        let a = generic_space(l.clone(), 6, 42).unwrap();
        let b = generic_space(l, 6, 42).unwrap();
        assert_eq!(a.space, b.space);
    }
}
