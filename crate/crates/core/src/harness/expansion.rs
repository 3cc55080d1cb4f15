//! Expansion-property checks, the order gadgets, and the grid fixtures
//! for the forbidden square.

use std::sync::Arc;

use super::enumerate::spaces;
use super::{Budget, HarnessError};
use crate::eqlift::K0Structure;
use crate::kstruct::{cl, from_k0, KStructure, LiftParams};
use crate::lattice::{Elem, Lattice};
use crate::space::{Point, UltrametricSpace};
use crate::sqo::{all_sqos, compose, induce_meet, OrderedSpace, SubquotientOrder};

/// Every expansion of `base` in the language of `a_star`.
pub fn expansions(a_star: &OrderedSpace, base: &UltrametricSpace) -> Vec<OrderedSpace> {
    let lang = &a_star.language;
    let choices: Vec<Vec<SubquotientOrder>> = lang.slots.iter().map(|s| all_sqos(base, s.bottom, s.top)).collect();
    let mut out = vec![];
    let mut idx = vec![0usize; choices.len()];
    if choices.iter().any(Vec::is_empty) {
        return out;
    }
    'outer: loop {
        let orders = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
        out.push(OrderedSpace::new(lang.clone(), base.clone(), orders).expect("enumerated orders validate"));
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        return out;
    }
}

/// `a_star` embeds into every expansion of `base`.
pub fn expansion_check(a_star: &OrderedSpace, base: &UltrametricSpace) -> bool {
    let a = a_star.to_structure();
    expansions(a_star, base).iter().all(|x| !a.embeddings(&x.to_structure(), 1).is_empty())
}

/// The first space with at most `max_points` points, in enumeration order,
/// certifying the expansion property for `a_star`. `None` means none was
/// found within the bound, which decides nothing about larger spaces.
pub fn expansion_search(
    a_star: &OrderedSpace,
    max_points: usize,
    budget: u64,
) -> Result<Option<UltrametricSpace>, HarnessError> {
    let mut b = Budget::new(budget);
    let l = a_star.lattice().clone();
    for n in a_star.len()..=max_points {
        for sp in spaces(&l, n, &mut b)? {
            if expansion_check(a_star, &sp) {
                return Ok(Some(sp));
            }
        }
    }
    Ok(None)
}

/// Two `E`-classes under one class of the cover of `E`, the first below the
/// second, closed.
pub fn gadget_pi(params: &Arc<LiftParams>, e: Elem) -> Result<KStructure, HarnessError> {
    let l = params.lattice().clone();
    if e == l.top() || !l.is_meet_irreducible(e) {
        return Err(HarnessError::NotMeetIrreducible(l.label(e).into()));
    }
    // x1, x2 of sort E, then one class for every level above E.
    let above: Vec<Elem> = l.elements().filter(|&f| l.lt(e, f)).collect();
    let mut labels = vec!["x1".to_string(), "x2".to_string()];
    let mut sort = vec![e, e];
    for &f in &above {
        labels.push(format!("x/{}", l.label(f)));
        sort.push(f);
    }
    let at = |f: Elem| 2 + above.iter().position(|&g| g == f).unwrap();
    let mut edges = vec![];
    for x in 0..2 {
        for &f in &above {
            edges.push((x, f, at(f)));
        }
    }
    for &f in &above {
        for &g in above.iter().filter(|&&g| l.lt(f, g)) {
            edges.push((at(f), g, at(g)));
        }
    }
    let k0 = K0Structure::new(l, labels, sort, &edges).map_err(|err| HarnessError::Invalid(err.to_string()))?;
    let seed = from_k0(params.clone(), &k0).map_err(|err| HarnessError::Invalid(err.to_string()))?;
    cl(&seed).map_err(|err| HarnessError::Invalid(err.to_string()))
}

/// The orders in `slots` reversed classwise.
pub fn order_reversal(x: &OrderedSpace, slots: &[usize]) -> OrderedSpace {
    x.reversed(slots)
}

/// A grid over the Boolean square (rows `a`-related, columns `b`-related)
/// with the lexicographic point order: rows by `row_key`, then within a row
/// columns by `col_key`, built as a composition.
pub fn lex_grid(row_key: &[usize], col_key: &[usize]) -> (UltrametricSpace, SubquotientOrder) {
    let l = Arc::new(Lattice::boolean_square());
    let (a, b) = (l.elem("a").unwrap(), l.elem("b").unwrap());
    let (rows, cols) = (row_key.len(), col_key.len());
    let sp = UltrametricSpace::grid(l.clone(), rows, cols, a, b).expect("grid");
    let rk: Vec<usize> = sp.points().map(|p| row_key[p / cols]).collect();
    let ck: Vec<usize> = sp.points().map(|p| col_key[p % cols]).collect();
    let outer = SubquotientOrder::from_keys(&sp, a, l.top(), &rk).expect("row order");
    let by_col = SubquotientOrder::from_keys(&sp, b, l.top(), &ck).expect("column order");
    let inner = induce_meet(&sp, &by_col, a).expect("induced order");
    let lex = compose(&sp, &outer, &inner).expect("composable");
    (sp, lex)
}

/// Whether some `x1, x2, y1, y2` form the forbidden square: `x1 x2` and
/// `y1 y2` in two distinct rows, `x1 y1` and `x2 y2` in two distinct
/// columns, with `x1 < x2` but `y2 < y1`.
pub fn forbidden_square_embeds(sp: &UltrametricSpace, order: &SubquotientOrder) -> bool {
    let l = sp.lattice();
    let (a, b) = (l.elem("a").unwrap(), l.elem("b").unwrap());
    let row = |p: Point, q: Point| l.leq(sp.dist(p, q), a);
    let col = |p: Point, q: Point| l.leq(sp.dist(p, q), b);
    let pts: Vec<Point> = sp.points().collect();
    for &x1 in &pts {
        for &x2 in &pts {
            for &y1 in &pts {
                for &y2 in &pts {
                    let distinct =
                        [x1, x2, y1, y2].iter().enumerate().all(|(i, p)| [x1, x2, y1, y2][..i].iter().all(|q| q != p));
                    if distinct
                        && row(x1, x2)
                        && row(y1, y2)
                        && !row(x1, y1)
                        && col(x1, y1)
                        && col(x2, y2)
                        && !col(x1, x2)
                        && order.lt(x1, x2)
                        && order.lt(y2, y1)
                    {
                        return true;
                    }
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sqo::LanguageDescriptor;

    fn ordered_pair(l: Arc<Lattice>, d: Elem) -> OrderedSpace {
        let sp = UltrametricSpace::from_matrix(l.clone(), vec![vec![0, d], vec![d, 0]]).unwrap();
        let lang = LanguageDescriptor::min_language(l).unwrap();
        let orders = lang
            .slots
            .iter()
            .map(|s| {
                let mut all = all_sqos(&sp, s.bottom, s.top);
                all.remove(0)
            })
            .collect();
        OrderedSpace::new(lang, sp, orders).unwrap()
    }

    #[test]
    fn ch2_pair_expansion() {
        let l = Arc::new(Lattice::chain(2));
        let a = ordered_pair(l.clone(), 1);
        let two = UltrametricSpace::from_matrix(l.clone(), vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(expansions(&a, &two).len(), 2);
        assert!(expansion_check(&a, &two));
        assert!(!expansion_check(&a, &UltrametricSpace::single_point(l)));
    }

    #[test]
    fn gadgets() {
        let l = Arc::new(Lattice::chain(2));
        let p = Arc::new(LiftParams::min(l).unwrap());
        let g = gadget_pi(&p, 0).unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.is_closed());
        let b2 = Arc::new(LiftParams::min(Arc::new(Lattice::boolean_square())).unwrap());
        assert!(matches!(gadget_pi(&b2, 0), Err(HarnessError::NotMeetIrreducible(_))));
    }

    #[test]
    fn lex_grid_avoids_square() {
        let (sp, lex) = lex_grid(&[1, 0], &[0, 1]);
        assert!(!forbidden_square_embeds(&sp, &lex));
        assert!(!forbidden_square_embeds(&sp, &lex.reversed()));
        // Columns ordered one way in the first row and the other way in the
        // second.
        let twisted = SubquotientOrder::from_keys(&sp, 0, sp.lattice().top(), &[0, 1, 3, 2]).unwrap();
        assert!(forbidden_square_embeds(&sp, &twisted));
    }
}
