//! Structures of a given size, one per isomorphism type.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{space_structure, Budget, Family, HarnessError, Item};
use crate::eqlift::{a_eq, K0Structure};
use crate::kstruct::{from_k0, set_order, KStructure, LiftParams};
use crate::lattice::{Elem, Lattice};
use crate::space::UltrametricSpace;
use crate::sqo::{all_sqos, next_permutation, LanguageDescriptor, OrderedSpace, SubquotientOrder};
use crate::structure::Structure;

/// Every structure of the family with exactly `n` elements (points for
/// spaces, classes for `k0`, metric elements for `kstruct`), deduplicated by
/// canonical form. Ordered spaces and lifted structures use the minimal
/// language. `budget` bounds the number of candidates examined.
pub fn enumerate_structures(
    family: Family,
    l: &Arc<Lattice>,
    n: usize,
    budget: u64,
) -> Result<Vec<Item>, HarnessError> {
    let mut b = Budget::new(budget);
    Ok(match family {
        Family::Space => spaces(l, n, &mut b)?.into_iter().map(Item::Space).collect(),
        Family::OrderedSpace => {
            let lang = min_language(l)?;
            ordered_spaces(&lang, n, &mut b)?.into_iter().map(Item::Ordered).collect()
        }
        Family::K0 => k0s(l, n, &mut b)?.into_iter().map(Item::K0).collect(),
        Family::KStruct => {
            let params = Arc::new(LiftParams::min(l.clone()).map_err(|e| HarnessError::Invalid(e.to_string()))?);
            kstructs(&params, n, &mut b)?.into_iter().map(Item::K).collect()
        }
    })
}

fn min_language(l: &Arc<Lattice>) -> Result<LanguageDescriptor, HarnessError> {
    LanguageDescriptor::min_language(l.clone()).map_err(|e| HarnessError::Invalid(e.to_string()))
}

/// Keeps the first representative of each isomorphism type: structures
/// are bucketed by an invariant and compared within a bucket.
struct Dedup(HashMap<u64, Vec<Structure>>);

impl Dedup {
    fn new() -> Self {
        Dedup(HashMap::new())
    }
    fn fresh(&mut self, s: &Structure) -> bool {
        let bucket = self.0.entry(s.invariant()).or_default();
        if bucket.iter().any(|t| t.is_isomorphic(s)) {
            return false;
        }
        bucket.push(s.clone());
        true
    }
}

pub(crate) fn spaces(l: &Arc<Lattice>, n: usize, b: &mut Budget) -> Result<Vec<UltrametricSpace>, HarnessError> {
    let values: Vec<Elem> = l.elements().filter(|&e| e != l.bottom()).collect();
    let mut out = vec![];
    let mut seen = Dedup::new();
    let mut d = vec![vec![l.bottom(); n]; n];
    let mut err = None;
    fill(l, &values, &mut d, 1, 0, &mut |d| {
        if err.is_some() {
            return;
        }
        if let Err(e) = b.spend(1) {
            err = Some(e);
            return;
        }
        let sp = UltrametricSpace::from_matrix(l.clone(), d.to_vec()).expect("checked incrementally");
        if seen.fresh(&space_structure(&sp)) {
            out.push(sp);
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Assigns `d[x][y]` for `y < x` in row-major order, pruning on the
/// triangle inequality as soon as a triangle is complete.
fn fill(l: &Lattice, values: &[Elem], d: &mut Vec<Vec<Elem>>, x: usize, y: usize, emit: &mut dyn FnMut(&[Vec<Elem>])) {
    let n = d.len();
    if x >= n {
        emit(d);
        return;
    }
    if y == x {
        fill(l, values, d, x + 1, 0, emit);
        return;
    }
    for &v in values {
        d[x][y] = v;
        d[y][x] = v;
        // Triangles x, y, z with z < y are now complete.
        let ok = (0..y).all(|z| {
            let (a, b, c) = (d[x][y], d[x][z], d[y][z]);
            l.leq(a, l.join(b, c)) && l.leq(b, l.join(a, c)) && l.leq(c, l.join(a, b))
        });
        if ok {
            fill(l, values, d, x, y + 1, emit);
        }
    }
    d[x][y] = l.bottom();
    d[y][x] = l.bottom();
}

pub(crate) fn ordered_spaces(
    lang: &LanguageDescriptor,
    n: usize,
    b: &mut Budget,
) -> Result<Vec<OrderedSpace>, HarnessError> {
    let mut out = vec![];
    let mut seen = Dedup::new();
    for sp in spaces(&lang.lattice, n, b)? {
        // Charge for every candidate before materializing any of them.
        let total = lang.slots.iter().fold(1u64, |acc, s| acc.saturating_mul(sqo_count(&sp, s.bottom, s.top)));
        b.spend(total.saturating_mul((n * n).max(1) as u64))?;
        let choices: Vec<Vec<SubquotientOrder>> = lang.slots.iter().map(|s| all_sqos(&sp, s.bottom, s.top)).collect();
        let mut idx = vec![0usize; choices.len()];
        loop {
            let orders = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
            let x = OrderedSpace::new(lang.clone(), sp.clone(), orders).expect("enumerated orders validate");
            if seen.fresh(&x.to_structure()) {
                out.push(x);
            }
            if !odometer(&mut idx, &choices.iter().map(Vec::len).collect::<Vec<_>>()) {
                break;
            }
        }
    }
    Ok(out)
}

/// Number of subquotient orders with the given bottom and top: the
/// product over top classes of the factorial of their bottom-class count.
fn sqo_count(sp: &UltrametricSpace, bottom: Elem, top: Elem) -> u64 {
    let reps = crate::sqo::representatives(sp, bottom);
    let treps = crate::sqo::representatives(sp, top);
    sp.points()
        .filter(|&t| treps[t] == t)
        .map(|t| {
            let k = sp.points().filter(|&p| treps[p] == t && reps[p] == p).count() as u64;
            (1..=k).fold(1u64, |a, i| a.saturating_mul(i))
        })
        .fold(1u64, |a, f| a.saturating_mul(f))
}

/// Advances a mixed-radix counter; false once it wraps around.
fn odometer(idx: &mut [usize], radix: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < radix[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

pub(crate) fn k0s(l: &Arc<Lattice>, n: usize, b: &mut Budget) -> Result<Vec<K0Structure>, HarnessError> {
    let height: Vec<usize> = l.elements().map(|e| l.elements().filter(|&f| l.lt(f, e)).count()).collect();
    let mut elems: Vec<Elem> = l.elements().collect();
    elems.sort_by_key(|&e| (height[e], e));
    let mut out = vec![];
    let mut seen = Dedup::new();
    let mut sorts = vec![0usize; n];
    // Nondecreasing position sequences into `elems`.
    loop {
        let sort: Vec<Elem> = sorts.iter().map(|&i| elems[i]).collect();
        k0s_with_sorts(l, &sort, &height, b, &mut |k| {
            if seen.fresh(&k.to_structure()) {
                out.push(k);
            }
        })?;
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if sorts[k] + 1 < elems.len() {
                sorts[k] += 1;
                for j in k + 1..n {
                    sorts[j] = sorts[k];
                }
                break;
            }
        }
    }
}

fn k0s_with_sorts(
    l: &Arc<Lattice>,
    sort: &[Elem],
    height: &[usize],
    b: &mut Budget,
    emit: &mut dyn FnMut(K0Structure),
) -> Result<(), HarnessError> {
    let n = sort.len();
    // One choice slot per (element, cover of its sort).
    let slots: Vec<(usize, Elem)> = (0..n).flat_map(|x| l.covers(sort[x]).into_iter().map(move |c| (x, c))).collect();
    let options: Vec<Vec<usize>> = slots.iter().map(|&(_, c)| (0..n).filter(|&y| sort[y] == c).collect()).collect();
    if options.iter().any(Vec::is_empty) {
        return Ok(());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&x| std::cmp::Reverse(height[sort[x]]));
    let labels: Vec<String> = (0..n).map(|i| format!("k{i}")).collect();
    let mut idx = vec![0usize; slots.len()];
    loop {
        b.spend(1)?;
        if let Some(edges) = derive_edges(l, sort, &order, &slots, &options, &idx) {
            if let Ok(k) = K0Structure::new(l.clone(), labels.clone(), sort.to_vec(), &edges) {
                emit(k);
            }
        }
        if !odometer(&mut idx, &options.iter().map(Vec::len).collect::<Vec<_>>()) {
            return Ok(());
        }
    }
}

/// Extends chosen cover parents to all levels above each sort; `None` if
/// two routes disagree.
fn derive_edges(
    l: &Lattice,
    sort: &[Elem],
    order: &[usize],
    slots: &[(usize, Elem)],
    options: &[Vec<usize>],
    idx: &[usize],
) -> Option<Vec<(usize, Elem, usize)>> {
    let n = sort.len();
    let mut up = vec![vec![None; l.len()]; n];
    for &x in order {
        up[x][sort[x]] = Some(x);
        for (s, &(y, c)) in slots.iter().enumerate() {
            if y != x {
                continue;
            }
            let p = options[s][idx[s]];
            for g in l.elements().filter(|&g| l.leq(c, g)) {
                let v = up[p][g];
                match up[x][g] {
                    Some(w) if Some(w) != v => return None,
                    _ => up[x][g] = v,
                }
            }
        }
    }
    let mut edges = vec![];
    for x in 0..n {
        for g in l.elements().filter(|&g| l.lt(sort[x], g)) {
            edges.push((x, g, up[x][g]?));
        }
    }
    Some(edges)
}

pub(crate) fn kstructs(params: &Arc<LiftParams>, n: usize, b: &mut Budget) -> Result<Vec<KStructure>, HarnessError> {
    let mut out = vec![];
    let mut seen = Dedup::new();
    for k0 in k0s(params.lattice(), n, b)? {
        let base = from_k0(params.clone(), &k0).map_err(|e| HarnessError::Invalid(e.to_string()))?;
        // Elements of each type, in type order; every type is permuted
        // independently.
        let mut groups: Vec<Vec<usize>> =
            params.type_order.iter().map(|&t| (0..base.len()).filter(|&x| base.sort(x) == t).collect()).collect();
        loop {
            b.spend(1)?;
            let order: Vec<usize> = groups.iter().flatten().copied().collect();
            let (p, labels, mut s) = base.clone().into_parts();
            set_order(&mut s, &order);
            if let Ok(k) = KStructure::new(p, labels, s) {
                if seen.fresh(k.structure()) {
                    out.push(k);
                }
            }
            if !next_group_permutation(&mut groups) {
                break;
            }
        }
    }
    Ok(out)
}

/// Steps the product of per-group permutations; false after the last one
/// (every group is then back in sorted order).
fn next_group_permutation(groups: &mut [Vec<usize>]) -> bool {
    for g in groups.iter_mut().rev() {
        if next_permutation(g) {
            return true;
        }
        g.sort_unstable();
    }
    false
}

/// A random space on `n` points: each new point copies the distances of an
/// existing point above a random level, sometimes meeting two such
/// profiles.
pub fn random_space<R: Rng>(l: &Arc<Lattice>, n: usize, rng: &mut R) -> UltrametricSpace {
    let mut sp = if n == 0 { UltrametricSpace::empty(l.clone()) } else { UltrametricSpace::single_point(l.clone()) };
    let levels: Vec<Elem> = l.elements().filter(|&e| e != l.bottom()).collect();
    if levels.is_empty() {
        return sp;
    }
    while sp.len() < n {
        let profile = |rng: &mut R, sp: &UltrametricSpace| -> Vec<Elem> {
            let p = rng.gen_range(0..sp.len());
            let e = *levels.choose(rng).unwrap();
            sp.points().map(|q| l.join(e, sp.dist(p, q))).collect()
        };
        let a = profile(rng, &sp);
        let label = format!("p{}", sp.len());
        if rng.gen_bool(0.5) {
            let b = profile(rng, &sp);
            let m: Vec<Elem> = a.iter().zip(&b).map(|(&x, &y)| l.meet(x, y)).collect();
            if m.iter().all(|&v| v != l.bottom()) {
                if let Ok(next) = sp.with_point(label.clone(), &m) {
                    sp = next;
                    continue;
                }
            }
        }
        sp = sp.with_point(label, &a).expect("join profile is ultrametric");
    }
    sp
}

/// A random structure of classes: an upward-closed set of classes of a
/// random space with at most `max_points` points.
pub fn random_k0<R: Rng>(l: &Arc<Lattice>, max_points: usize, rng: &mut R) -> K0Structure {
    let n = rng.gen_range(1..=max_points.max(1));
    let eq = a_eq(&random_space(l, n, rng));
    let mut keep = vec![false; eq.len()];
    for x in 0..eq.len() {
        if rng.gen_bool(0.4) {
            for g in l.elements().filter(|&g| l.leq(eq.sort(x), g)) {
                keep[eq.up(x, g).expect("closed")] = true;
            }
        }
    }
    if !keep.iter().any(|&k| k) && !eq.is_empty() {
        keep[0] = true;
        for g in l.elements().filter(|&g| l.leq(eq.sort(0), g)) {
            keep[eq.up(0, g).expect("closed")] = true;
        }
    }
    let elems: Vec<usize> = (0..eq.len()).filter(|&x| keep[x]).collect();
    eq.substructure(&elems).expect("upward-closed subsets are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn count(f: Family, l: Lattice, n: usize) -> usize {
        enumerate_structures(f, &Arc::new(l), n, 1 << 22).unwrap().len()
    }

    #[test]
    fn small_counts() {
        assert_eq!(count(Family::Space, Lattice::chain(2), 2), 1);
        assert_eq!(count(Family::Space, Lattice::chain(3), 2), 2);
        assert_eq!(count(Family::OrderedSpace, Lattice::chain(2), 2), 1);
        // Three points over CH3: all at 1, all at e, or one pair at e.
        assert_eq!(count(Family::Space, Lattice::chain(3), 3), 3);
        assert_eq!(count(Family::K0, Lattice::chain(2), 1), 1);
        // Two bottoms under one top, a bottom under one of two tops, or
        // three tops.
        assert_eq!(count(Family::K0, Lattice::chain(2), 3), 3);
    }

    #[test]
    fn budget_is_enforced() {
        let l = Arc::new(Lattice::boolean_square());
        assert_eq!(enumerate_structures(Family::Space, &l, 4, 10).unwrap_err(), HarnessError::BudgetExceeded(10));
    }

    #[test]
    fn random_k0s_validate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let l = Arc::new(Lattice::boolean_square());
        for _ in 0..50 {
            let k = random_k0(&l, 4, &mut rng);
            assert!(!k.is_empty());
        }
    }
}
