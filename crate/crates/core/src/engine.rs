//! Strong amalgamation of closed lifted structures and completion of
//! unions of copies.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use thiserror::Error;

use crate::eqlift::K0Structure;
use crate::kstruct::{cl, diagnose, set_order, Constraint, Diagnostic, KError, KStructure, LiftParams, Mode};
use crate::structure::{Fact, Structure, Symbol};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("amalgamation factors must be closed")]
    FactorsNotClosed,
    #[error("map is not an embedding")]
    NotAnEmbedding,
    #[error("structures use different parameters")]
    ParamMismatch,
    #[error("constraint violated: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    ConstraintViolated(Vec<Diagnostic>),
    #[error("order has a cycle: {0}")]
    OrderCycle(String),
    #[error("the listed copies do not cover the structure")]
    NotACover,
    #[error(transparent)]
    K(#[from] KError),
}

#[derive(Clone, Debug)]
pub struct KAmalgam {
    pub structure: KStructure,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Free amalgam, `D^exists` where forced, a linear order respecting the
/// type order, then closure.
pub fn amalgamate_k(
    base: &KStructure,
    k1: &KStructure,
    f1: &[usize],
    k2: &KStructure,
    f2: &[usize],
) -> Result<KAmalgam, EngineError> {
    let params = base.params().clone();
    if *k1.params() != params || *k2.params() != params {
        return Err(EngineError::ParamMismatch);
    }
    if !base.is_closed() || !k1.is_closed() || !k2.is_closed() {
        return Err(EngineError::FactorsNotClosed);
    }
    if !base.structure().is_embedding(k1.structure(), f1) || !base.structure().is_embedding(k2.structure(), f2) {
        return Err(EngineError::NotAnEmbedding);
    }
    let (mut s, left, right) = crate::eqlift::free_amalgam(k1.structure(), f1, k2.structure(), f2);
    let mut labels = k1.labels().to_vec();
    for y in 0..k2.len() {
        if !f2.contains(&y) {
            let mut lab = k2.label(y).to_string();
            while labels.contains(&lab) {
                lab.push('\'');
            }
            labels.push(lab);
        }
    }
    add_dex(&params, &mut s);
    let order = linear_extension(&params, &s).map_err(EngineError::OrderCycle)?;
    set_order(&mut s, &order);
    let k = KStructure::new(params, labels, s)?;
    Ok(KAmalgam { structure: cl(&k)?, left, right })
}

/// Adds `D^exists` between every two metric elements sharing a class at
/// the join of their levels.
fn add_dex(params: &LiftParams, s: &mut Structure) {
    let l = params.lattice();
    let n = s.len();
    let mut sort = vec![None; n];
    let mut up = vec![vec![None; l.len()]; n];
    for f in s.facts() {
        match f.sym {
            Symbol::P(e, 1) => {
                sort[f.args()[0]] = Some(e);
                up[f.args()[0]][e] = Some(f.args()[0]);
            }
            Symbol::U(_, g) => up[f.args()[0]][g] = Some(f.args()[1]),
            _ => {}
        }
    }
    for x in 0..n {
        for y in 0..n {
            if let (Some(e), Some(g)) = (sort[x], sort[y]) {
                let j = l.join(e, g);
                if up[x][j].is_some() && up[x][j] == up[y][j] {
                    s.insert(Fact::binary(Symbol::DEx, x, y));
                }
            }
        }
    }
}

/// Stable topological sort of `Less`: among available elements the least
/// type, then the least index. Errors with a description on a cycle.
pub fn linear_extension(params: &LiftParams, s: &Structure) -> Result<Vec<usize>, String> {
    let n = s.len();
    let key = |x: usize| -> (usize, usize) {
        let t = s.unary_of(x).find_map(|sym| match sym {
            Symbol::P(e, i) => Some((e, i)),
            _ => None,
        });
        (t.map_or(usize::MAX, |t| params.type_rank(t)), x)
    };
    let mut indeg = vec![0usize; n];
    let mut succ = vec![vec![]; n];
    for f in s.facts().filter(|f| f.sym == Symbol::Less) {
        let (x, y) = (f.args()[0], f.args()[1]);
        if x == y {
            return Err(format!("element {x} is below itself"));
        }
        succ[x].push(y);
        indeg[y] += 1;
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).filter(|&x| indeg[x] == 0).map(|x| Reverse(key(x))).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(Reverse((_, x))) = heap.pop() {
        out.push(x);
        for &y in &succ[x] {
            indeg[y] -= 1;
            if indeg[y] == 0 {
                heap.push(Reverse(key(y)));
            }
        }
    }
    if out.len() < n {
        let stuck = (0..n).find(|&x| indeg[x] > 0).unwrap();
        return Err(format!("element {stuck} lies on a cycle"));
    }
    Ok(out)
}

/// Completes a semi-closed union of copies of `b` to a lifted structure in
/// which every listed copy is embedded unchanged, then closes it.
pub fn complete(
    params: &Arc<LiftParams>,
    c: &Structure,
    labels: &[String],
    b: &KStructure,
    cover: &[Vec<usize>],
) -> Result<KStructure, EngineError> {
    if **b.params() != **params {
        return Err(EngineError::ParamMismatch);
    }
    if !b.is_closed() {
        return Err(EngineError::FactorsNotClosed);
    }
    let diags = diagnose(params, c, labels, Mode::Partial);
    if let Some(d) = diags.iter().find(|d| d.constraint == Constraint::OrderAcyclic) {
        return Err(EngineError::OrderCycle(d.detail.clone()));
    }
    if !diags.is_empty() {
        return Err(EngineError::ConstraintViolated(diags));
    }
    if !crate::kstruct::ClosureDescription::u_k(params).is_semi_closed(c) {
        return Err(EngineError::ConstraintViolated(vec![Diagnostic {
            constraint: Constraint::DUnique,
            detail: "structure is not semi-closed".into(),
        }]));
    }
    let mut covered = vec![false; c.len()];
    for m in cover {
        if !b.structure().is_embedding(c, m) {
            return Err(EngineError::NotAnEmbedding);
        }
        for &x in m {
            covered[x] = true;
        }
    }
    if covered.iter().any(|&v| !v) {
        return Err(EngineError::NotACover);
    }
    let mut s = c.clone();
    add_dex(params, &mut s);
    let order = linear_extension(params, &s).map_err(EngineError::OrderCycle)?;
    set_order(&mut s, &order);
    let done = KStructure::new(params.clone(), labels.to_vec(), s)?;
    let closed = cl(&done)?;
    for m in cover {
        if !b.structure().is_embedding(closed.structure(), m) {
            return Err(EngineError::NotAnEmbedding);
        }
    }
    Ok(closed)
}

pub fn check_irreducible(s: &Structure) -> bool {
    s.is_irreducible()
}

pub fn check_hom_embedding(a: &Structure, b: &Structure, map: &[usize]) -> bool {
    a.is_hom_embedding(b, map)
}

/// Glues `copies` copies of `b` along the substructure on `shared` (which
/// must be closed): every copy shares `shared` with the first. Relations
/// stay inside copies, so the order is only partial. Returns the union,
/// its labels, and the copy maps.
pub fn star_union(b: &KStructure, shared: &[usize], copies: usize) -> (Structure, Vec<String>, Vec<Vec<usize>>) {
    let mut s = b.structure().clone();
    let mut labels = b.labels().to_vec();
    let mut maps = vec![(0..b.len()).collect::<Vec<_>>()];
    for c in 1..copies {
        let mut m = vec![usize::MAX; b.len()];
        for x in 0..b.len() {
            if shared.contains(&x) {
                m[x] = x;
            } else {
                m[x] = s.add_element();
                labels.push(format!("{}~{c}", b.label(x)));
            }
        }
        for f in b.structure().facts() {
            s.insert(f.map(|x| m[x]));
        }
        maps.push(m);
    }
    (s, labels, maps)
}

/// The metric part of a structure given only by facts, if valid.
pub fn metric_of(params: &LiftParams, s: &Structure) -> Option<K0Structure> {
    let metric: Vec<usize> =
        (0..s.len()).filter(|&x| s.unary_of(x).any(|sym| matches!(sym, Symbol::P(_, 1)))).collect();
    let sub = s.substructure(&metric);
    let labels = metric.iter().map(|x| x.to_string()).collect();
    K0Structure::from_structure(params.lattice().clone(), &sub, labels).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqlift::a_eq;
    use crate::kstruct::from_k0;
    use crate::lattice::Lattice;
    use crate::space::UltrametricSpace;

    fn ch2(n: usize) -> (Arc<LiftParams>, KStructure) {
        let l = Arc::new(Lattice::chain(2));
        let d = (0..n).map(|i| (0..n).map(|j| usize::from(i != j)).collect()).collect();
        let sp = UltrametricSpace::from_matrix(l.clone(), d).unwrap();
        let p = Arc::new(LiftParams::min(l).unwrap());
        let k = from_k0(p.clone(), &a_eq(&sp)).unwrap();
        (p, k)
    }

    #[test]
    fn amalgam_over_self_is_identity() {
        let (_, k) = ch2(2);
        let id: Vec<usize> = (0..k.len()).collect();
        let a = amalgamate_k(&k, &k, &id, &k, &id).unwrap();
        assert_eq!(a.structure.len(), k.len());
    }

    #[test]
    fn completion_of_glued_copies() {
        let (p, b) = ch2(2);
        let top = (0..b.len()).find(|&x| b.sort(x).0 == 1).unwrap();
        let (c, labels, maps) = star_union(&b, &[top], 2);
        assert!(!check_irreducible(&c));
        let done = complete(&p, &c, &labels, &b, &maps).unwrap();
        assert_eq!(done.len(), 5);
        let mut bad = c.clone();
        bad.insert(Fact::binary(Symbol::Less, maps[0][1], maps[1][0]));
        bad.insert(Fact::binary(Symbol::Less, maps[1][0], maps[0][0]));
        assert!(matches!(complete(&p, &bad, &labels, &b, &maps), Err(EngineError::OrderCycle(_))));
    }
}
