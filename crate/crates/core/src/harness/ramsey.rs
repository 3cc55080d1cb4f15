//! Exhaustive colouring scans.

use std::sync::Arc;

use super::{enumerate_structures, Family, HarnessError, Item};
use crate::lattice::Lattice;
use crate::structure::Structure;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RamseyVerdict {
    Holds,
    /// Each copy of `A` (as a sorted element set of `C`) with its colour.
    Counterexample(Vec<(Vec<usize>, usize)>),
}

impl RamseyVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, RamseyVerdict::Holds)
    }
}

/// Whether every `r`-colouring of the copies of `a` in `c` leaves some copy
/// of `b` monochromatic. By symmetry the first copy always gets colour 0,
/// so `r^(m-1)` colourings are scanned for `m` copies of `a`; more than
/// `budget` is refused, as is `m > 24` for two colours.
pub fn ramsey_check(
    a: &Structure,
    b: &Structure,
    c: &Structure,
    r: usize,
    budget: u64,
) -> Result<RamseyVerdict, HarnessError> {
    if r == 0 {
        return Err(HarnessError::Invalid("at least one colour is needed".into()));
    }
    let a_copies = a.copies_in(c);
    let b_copies = b.copies_in(c);
    let m = a_copies.len();
    // A-copies inside each B-copy, and the reverse incidence.
    let inside: Vec<Vec<usize>> = b_copies
        .iter()
        .map(|bc| (0..m).filter(|&i| a_copies[i].iter().all(|x| bc.binary_search(x).is_ok())).collect())
        .collect();
    let counterexample =
        |col: &[usize]| RamseyVerdict::Counterexample(a_copies.iter().cloned().zip(col.iter().copied()).collect());
    if b_copies.is_empty() {
        return Ok(counterexample(&vec![0; m]));
    }
    if m == 0 || r == 1 {
        return Ok(RamseyVerdict::Holds);
    }
    if r == 2 && m > 24 {
        return Err(HarnessError::BudgetExceeded(budget));
    }
    let total = (r as u128).checked_pow(m as u32 - 1).unwrap_or(u128::MAX);
    if total > budget as u128 {
        return Err(HarnessError::BudgetExceeded(budget));
    }
    let found = if r == 2 { scan_gray(m, &inside) } else { scan_general(m, r, &inside) };
    Ok(found.map_or(RamseyVerdict::Holds, |col| counterexample(&col)))
}

/// Two colours in Gray-code order, keeping per-B-copy counts of colour 1.
fn scan_gray(m: usize, inside: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut touching = vec![vec![]; m];
    for (j, ins) in inside.iter().enumerate() {
        for &i in ins {
            touching[i].push(j);
        }
    }
    let mut col = vec![0usize; m];
    let mut ones = vec![0usize; inside.len()];
    let mono = |j: usize, ones: &[usize]| ones[j] == 0 || ones[j] == inside[j].len();
    let mut n_mono = inside.len();
    for g in 1u64..(1u64 << (m - 1)) {
        let i = g.trailing_zeros() as usize + 1;
        let up = col[i] == 0;
        col[i] = 1 - col[i];
        for &j in &touching[i] {
            let before = mono(j, &ones);
            if up {
                ones[j] += 1;
            } else {
                ones[j] -= 1;
            }
            match (before, mono(j, &ones)) {
                (true, false) => n_mono -= 1,
                (false, true) => n_mono += 1,
                _ => {}
            }
        }
        if n_mono == 0 {
            return Some(col);
        }
    }
    None
}

/// Any number of colours: restricted-growth colourings (colour `k` is used
/// only after `k - 1`), which covers every colouring up to renaming.
fn scan_general(m: usize, r: usize, inside: &[Vec<usize>]) -> Option<Vec<usize>> {
    fn rec(i: usize, used: usize, r: usize, col: &mut Vec<usize>, inside: &[Vec<usize>]) -> bool {
        if i == col.len() {
            return !inside.iter().any(|ins| ins.iter().all(|&a| col[a] == col[ins[0]]));
        }
        for k in 0..r.min(used + 1) {
            col[i] = k;
            if rec(i + 1, used.max(k + 1), r, col, inside) {
                return true;
            }
        }
        false
    }
    let mut col = vec![0; m];
    rec(1, 1, r, &mut col, inside).then_some(col)
}

/// The smallest structure of the family, up to `bound` elements, for which
/// [`ramsey_check`] holds; the first in enumeration order among equals.
pub fn ramsey_search(
    family: Family,
    l: &Arc<Lattice>,
    a: &Item,
    b: &Item,
    r: usize,
    bound: usize,
    budget: u64,
) -> Result<Option<Item>, HarnessError> {
    let (sa, sb) = (a.to_structure(), b.to_structure());
    for n in b.len()..=bound {
        for c in enumerate_structures(family, l, n, budget)? {
            if ramsey_check(&sa, &sb, &c.to_structure(), r, budget)?.holds() {
                return Ok(Some(c));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A strict linear order on `n` elements.
    fn chain(n: usize) -> Structure {
        let mut s = Structure::new(n);
        for x in 0..n {
            for y in x + 1..n {
                s.insert(crate::structure::Fact::binary(crate::structure::Symbol::Less, x, y));
            }
        }
        s
    }

    #[test]
    fn pigeonhole() {
        for r in 2..=3 {
            for k in 2..=3 {
                let at = r * (k - 1) + 1;
                assert!(ramsey_check(&chain(1), &chain(k), &chain(at), r, 1 << 20).unwrap().holds());
                assert!(!ramsey_check(&chain(1), &chain(k), &chain(at - 1), r, 1 << 20).unwrap().holds());
            }
        }
    }

    #[test]
    fn r33() {
        assert!(ramsey_check(&chain(2), &chain(3), &chain(6), 2, 1 << 20).unwrap().holds());
        let RamseyVerdict::Counterexample(col) = ramsey_check(&chain(2), &chain(3), &chain(5), 2, 1 << 20).unwrap()
        else {
            panic!("five points admit a good colouring");
        };
        assert_eq!(col.len(), 10);
    }

    #[test]
    fn guard() {
        assert!(matches!(
            ramsey_check(&chain(2), &chain(3), &chain(8), 2, 1 << 30),
            Err(HarnessError::BudgetExceeded(_))
        ));
    }
}
