//! From ordered spaces to lifted structures and back.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::eqlift::{a_eq_map, a_k, K0Error};
use crate::kstruct::{cl, from_k0, in_k_prime, retract, set_order, KError, KStructure, LiftParams};
use crate::space::Point;
use crate::sqo::{OrderedSpace, SqoError, SubquotientOrder, TopOrders};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransferError {
    #[error("parameters do not match the ordered space's language")]
    ParamMismatch,
    #[error("structure is not a closed retract")]
    NotInKPrime,
    #[error("structure is not isomorphic to the lift")]
    NotALift,
    #[error("copy {0:?} is not read back as a copy of the colored structure")]
    NotACopy(Vec<usize>),
    #[error(transparent)]
    K(#[from] KError),
    #[error(transparent)]
    K0(#[from] K0Error),
    #[error(transparent)]
    Sqo(#[from] SqoError),
}

/// Classes of the space with copies for each carried order, every sort
/// ordered by its definable order and sorts by the type order.
pub fn l_k(x: &OrderedSpace, params: &Arc<LiftParams>) -> Result<KStructure, TransferError> {
    if params.language != x.language {
        return Err(TransferError::ParamMismatch);
    }
    let l = params.lattice().clone();
    let (k0, elem) = a_eq_map(&x.space);
    let base = from_k0(params.clone(), &k0)?;
    let mut tops = TopOrders::new(x, params.choice.clone())?;
    // Position of each class under the order carried by each type.
    let mut key: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for &(e, i) in &params.type_order {
        let o = if e == l.top() {
            SubquotientOrder::trivial(&x.space, e)
        } else if l.is_meet_irreducible(e) {
            tops.phi(params.slot_of[e][i - 1])
        } else {
            tops.omega(e)
        };
        let mut pos = vec![usize::MAX; k0.len()];
        for (r, &p) in crate::sqo::sequence(&o).iter().enumerate() {
            let c = elem[e][p];
            pos[c] = pos[c].min(r);
        }
        key.insert((e, i), pos);
    }
    let n = base.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&y| {
        let t = base.sort(y);
        (params.type_rank(t), key[&t][base.metric(y)])
    });
    let (p, labels, mut s) = base.into_parts();
    set_order(&mut s, &order);
    Ok(KStructure::new(p, labels, s)?)
}

/// `Φ_<` of the closure of `l_k(x)`.
pub fn lift(x: &OrderedSpace, params: &Arc<LiftParams>) -> Result<KStructure, TransferError> {
    let pre = l_k(x, params)?;
    Ok(retract(&cl(&pre)?)?)
}

/// An ordered space realizing the metric part, with each language order
/// read off the copy carrying it. Classes with no element in the structure
/// are singletons and are placed after the represented classes of their
/// top class, by point index.
pub fn represent(k: &KStructure) -> Result<OrderedSpace, TransferError> {
    if !in_k_prime(k) {
        return Err(TransferError::NotInKPrime);
    }
    let params = k.params();
    let (k0, elems) = k.metric_part();
    let space = a_k(&k0)?;
    let language = params.language.clone();
    let mut orders = vec![];
    for (slot, s) in language.slots.iter().enumerate() {
        let (e, t) = (s.bottom, s.top);
        let Some(i) = params.slot_of[e].iter().position(|&q| q == slot).map(|i| i + 1) else {
            orders.push(SubquotientOrder::trivial(&space, e));
            continue;
        };
        // Copy-i element of the class of each point, if present.
        let copy = |p: Point| -> Option<usize> {
            let c = k0.up(p, e)?;
            let one = elems[c];
            (0..k.len()).find(|&y| k.sort(y) == (e, i) && k.metric(y) == one)
        };
        let reps = crate::sqo::representatives(&space, e);
        let treps = crate::sqo::representatives(&space, t);
        let mut key = vec![0usize; space.len()];
        for tr in space.points().filter(|&p| treps[p] == p) {
            let mut classes: Vec<Point> = space.points().filter(|&p| treps[p] == tr && reps[p] == p).collect();
            classes.sort_by(|&a, &b| match (copy(a), copy(b)) {
                (Some(x), Some(y)) => k.order_cmp(x, y),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => a.cmp(&b),
            });
            for (r, &c) in classes.iter().enumerate() {
                for p in space.points().filter(|&p| reps[p] == c) {
                    key[p] = r;
                }
            }
        }
        orders.push(SubquotientOrder::from_keys(&space, e, t, &key)?);
    }
    Ok(OrderedSpace::new(language, space, orders)?)
}

/// [`represent`] restricted to the points of bottom-sort elements, i.e. to
/// the original points of a lifted space.
pub fn represent_points(k: &KStructure) -> Result<OrderedSpace, TransferError> {
    let rep = represent(k)?;
    let (k0, _) = k.metric_part();
    let bottom = k.lattice().bottom();
    let pts: Vec<Point> = (0..k0.len()).filter(|&x| k0.sort(x) == bottom).collect();
    Ok(rep.subspace(&pts))
}

/// [`represent`] restricted to the points of `x` inside `k`, found via
/// [`kernel`]. Unlike [`represent_points`] this leaves out points the
/// closure added as witnesses.
pub fn represent_kernel(k: &KStructure, x: &OrderedSpace) -> Result<OrderedSpace, TransferError> {
    let rep = represent(k)?;
    let ker = kernel(k, x)?;
    let (k0, elems) = k.metric_part();
    let bottom = k.lattice().bottom();
    let pts: Vec<Point> =
        (0..k0.len()).filter(|&p| k0.sort(p) == bottom && ker.binary_search(&elems[p]).is_ok()).collect();
    Ok(rep.subspace(&pts))
}

/// The elements of `s` corresponding to `l_k(x)` under the unique
/// isomorphism `lift(x) -> s`, sorted.
pub fn kernel(s: &KStructure, x: &OrderedSpace) -> Result<Vec<usize>, TransferError> {
    let lifted = lift(x, s.params())?;
    let pre = l_k(x, s.params())?;
    let map = rigid_iso(&lifted, s).ok_or(TransferError::NotALift)?;
    // `lift` keeps the elements of `l_k` as its first indices.
    let mut out: Vec<usize> = (0..pre.len()).map(|i| map[i]).collect();
    out.sort_unstable();
    Ok(out)
}

/// The only candidate isomorphism between linearly ordered structures
/// matches elements by rank.
pub fn rigid_iso(a: &KStructure, b: &KStructure) -> Option<Vec<usize>> {
    if a.len() != b.len() || a.structure().fact_count() != b.structure().fact_count() {
        return None;
    }
    let oa = a.order();
    let ob = b.order();
    let mut map = vec![0; a.len()];
    for (r, &x) in oa.iter().enumerate() {
        map[x] = ob[r];
    }
    a.structure().is_embedding(b.structure(), &map).then_some(map)
}

/// Colors each copy of `lift(a)` inside `c` by the color `chi` gives to
/// the point set its kernel reads back to in `represent(c)`. Returns the
/// copies (sorted element sets) with their colors.
pub fn transfer_coloring(
    c: &KStructure,
    a: &OrderedSpace,
    chi: &dyn Fn(&[Point]) -> usize,
) -> Result<Vec<(Vec<usize>, usize)>, TransferError> {
    let params = c.params();
    let lifted = lift(a, params)?;
    let pre = l_k(a, params)?;
    let rep = represent(c)?;
    let (_, metric) = c.metric_part();
    let mut point_of = vec![usize::MAX; c.len()];
    for (p, &x) in metric.iter().enumerate() {
        point_of[x] = p;
    }
    let bottom = params.lattice().bottom();
    let copies = lifted.structure().embeddings(c.structure(), usize::MAX);
    let mut seen = BTreeMap::new();
    for m in copies {
        let mut image = m.clone();
        image.sort_unstable();
        if seen.contains_key(&image) {
            continue;
        }
        let read: Vec<Point> = (0..pre.len()).filter(|&i| pre.sort(i) == (bottom, 1)).map(|i| point_of[m[i]]).collect();
        let mut pts = read.clone();
        pts.sort_unstable();
        if !a.to_structure().is_embedding(&rep.to_structure(), &ordered_points(&pre, &read, a)) {
            return Err(TransferError::NotACopy(image));
        }
        seen.insert(image, chi(&pts));
    }
    Ok(seen.into_iter().collect())
}

/// Points of `a` in index order mapped to the read-back points.
fn ordered_points(pre: &KStructure, read: &[Point], a: &OrderedSpace) -> Vec<Point> {
    // Bottom elements of `l_k(a)` are the points of `a`, labelled alike.
    let bottom = pre.lattice().bottom();
    let bottoms: Vec<usize> = (0..pre.len()).filter(|&i| pre.sort(i) == (bottom, 1)).collect();
    a.space
        .points()
        .map(|p| {
            let j = bottoms.iter().position(|&i| pre.label(i) == a.space.label(p)).expect("labels kept");
            read[j]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::space::UltrametricSpace;
    use crate::sqo::LanguageDescriptor;

    fn ch2_ordered(n: usize) -> OrderedSpace {
        let l = Arc::new(Lattice::chain(2));
        let d = (0..n).map(|i| (0..n).map(|j| usize::from(i != j)).collect()).collect();
        let sp = UltrametricSpace::from_matrix(l.clone(), d).unwrap();
        let lang = LanguageDescriptor::min_language(l).unwrap();
        let key: Vec<usize> = (0..n).collect();
        let o = SubquotientOrder::from_keys(&sp, 0, 1, &key).unwrap();
        OrderedSpace::new(lang, sp, vec![o]).unwrap()
    }

    #[test]
    fn ch2_lift_is_l_k() {
        let x = ch2_ordered(2);
        let params = Arc::new(LiftParams::new(x.language.clone()).unwrap());
        let pre = l_k(&x, &params).unwrap();
        let lifted = lift(&x, &params).unwrap();
        assert_eq!(pre, lifted);
        assert_eq!(pre.order().iter().map(|&i| pre.label(i)).collect::<Vec<_>>(), vec!["p0", "p1", "p0/1"]);
        assert!(in_k_prime(&lifted));
    }

    #[test]
    fn round_trip_and_kernel() {
        let x = ch2_ordered(3);
        let params = Arc::new(LiftParams::new(x.language.clone()).unwrap());
        let lifted = lift(&x, &params).unwrap();
        assert_eq!(represent(&lifted).unwrap().len(), 4);
        let back = represent_points(&lifted).unwrap();
        assert!(back.is_isomorphic(&x));
        assert_eq!(kernel(&lifted, &x).unwrap(), (0..lifted.len()).collect::<Vec<_>>());
    }

    #[test]
    fn constant_coloring_transfers() {
        let x = ch2_ordered(3);
        let a = ch2_ordered(1);
        let params = Arc::new(LiftParams::new(x.language.clone()).unwrap());
        let c = lift(&x, &params).unwrap();
        let out = transfer_coloring(&c, &a, &|_| 7).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|(_, col)| *col == 7));
    }
}
