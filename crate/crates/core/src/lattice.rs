//! Finite lattices given by an explicit order table.
//!
//! Elements are addressed by dense indices (`Elem`); labels are only used for
//! input and output. Meet and join tables are computed once at validation so
//! every query afterwards is a table lookup.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Index of a lattice element.
pub type Elem = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice has no elements")]
    Empty,
    #[error("duplicate element label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown element label `{0}`")]
    UnknownLabel(String),
    #[error("order table is not a partial order: {0}")]
    NotAPartialOrder(String),
    #[error("no greatest lower bound for `{0}` and `{1}`")]
    MeetMissing(String, String),
    #[error("no least upper bound for `{0}` and `{1}`")]
    JoinMissing(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    labels: Vec<String>,
    leq: Vec<Vec<bool>>,
    meet: Vec<Vec<Elem>>,
    join: Vec<Vec<Elem>>,
    bottom: Elem,
    top: Elem,
}

impl Lattice {
    /// Validates an order given as a list of `x <= y` pairs. Reflexive pairs
    /// may be omitted; the relation must otherwise already be transitive.
    pub fn from_leq<S: AsRef<str>>(elements: &[S], leq: &[(S, S)]) -> Result<Self, LatticeError> {
        let (labels, index) = label_index(elements)?;
        let n = labels.len();
        let mut table = vec![vec![false; n]; n];
        for (i, row) in table.iter_mut().enumerate() {
            row[i] = true;
        }
        for (x, y) in leq {
            let a = lookup(&index, x.as_ref())?;
            let b = lookup(&index, y.as_ref())?;
            table[a][b] = true;
        }
        Self::from_table(labels, table)
    }

    /// Builds a lattice from its covering pairs (the Hasse diagram); the order
    /// is the reflexive-transitive closure of the given pairs.
    pub fn from_covers<S: AsRef<str>>(elements: &[S], covers: &[(S, S)]) -> Result<Self, LatticeError> {
        let (labels, index) = label_index(elements)?;
        let n = labels.len();
        let mut table = vec![vec![false; n]; n];
        for (i, row) in table.iter_mut().enumerate() {
            row[i] = true;
        }
        for (x, y) in covers {
            let a = lookup(&index, x.as_ref())?;
            let b = lookup(&index, y.as_ref())?;
            table[a][b] = true;
        }
        // Warshall
        for k in 0..n {
            for i in 0..n {
                if table[i][k] {
                    for j in 0..n {
                        if table[k][j] {
                            table[i][j] = true;
                        }
                    }
                }
            }
        }
        Self::from_table(labels, table)
    }

    pub fn from_table(labels: Vec<String>, leq: Vec<Vec<bool>>) -> Result<Self, LatticeError> {
        let n = labels.len();
        if n == 0 {
            return Err(LatticeError::Empty);
        }
        if leq.len() != n || leq.iter().any(|row| row.len() != n) {
            return Err(LatticeError::NotAPartialOrder("table is not square".into()));
        }
        for i in 0..n {
            if !leq[i][i] {
                return Err(LatticeError::NotAPartialOrder(format!("`{}` is not <= itself", labels[i])));
            }
            for j in 0..n {
                if i != j && leq[i][j] && leq[j][i] {
                    return Err(LatticeError::NotAPartialOrder(format!(
                        "`{}` and `{}` are mutually below each other",
                        labels[i], labels[j]
                    )));
                }
                for k in 0..n {
                    if leq[i][j] && leq[j][k] && !leq[i][k] {
                        return Err(LatticeError::NotAPartialOrder(format!(
                            "not transitive at `{}` <= `{}` <= `{}`",
                            labels[i], labels[j], labels[k]
                        )));
                    }
                }
            }
        }
        let mut meet = vec![vec![0; n]; n];
        let mut join = vec![vec![0; n]; n];
        for a in 0..n {
            for b in a..n {
                let m = greatest(&leq, (0..n).filter(|&c| leq[c][a] && leq[c][b]))
                    .ok_or_else(|| LatticeError::MeetMissing(labels[a].clone(), labels[b].clone()))?;
                let j = least(&leq, (0..n).filter(|&c| leq[a][c] && leq[b][c]))
                    .ok_or_else(|| LatticeError::JoinMissing(labels[a].clone(), labels[b].clone()))?;
                meet[a][b] = m;
                meet[b][a] = m;
                join[a][b] = j;
                join[b][a] = j;
            }
        }
        let bottom = (0..n).find(|&x| (0..n).all(|y| leq[x][y])).expect("pairwise meets imply a bottom");
        let top = (0..n).find(|&x| (0..n).all(|y| leq[y][x])).expect("pairwise joins imply a top");
        Ok(Lattice { labels, leq, meet, join, bottom, top })
    }

    /// The chain `0 < e1 < ... < 1` on `n` elements. `chain(3)` labels its
    /// middle element `e`.
    pub fn chain(n: usize) -> Self {
        assert!(n >= 1, "a chain needs at least one element");
        let labels: Vec<String> = match n {
            1 => vec!["0".into()],
            2 => vec!["0".into(), "1".into()],
            3 => vec!["0".into(), "e".into(), "1".into()],
            _ => std::iter::once("0".to_string())
                .chain((1..n - 1).map(|i| format!("e{i}")))
                .chain(std::iter::once("1".to_string()))
                .collect(),
        };
        let leq = (0..n).map(|i| (0..n).map(|j| i <= j).collect()).collect();
        Self::from_table(labels, leq).expect("chains are lattices")
    }

    /// The Boolean square `{0, a, b, 1}`.
    pub fn boolean_square() -> Self {
        Self::from_covers(&["0", "a", "b", "1"], &[("0", "a"), ("0", "b"), ("a", "1"), ("b", "1")])
            .expect("B2 is a lattice")
    }

    /// The Boolean lattice of subsets of a `k`-element set, labelled by the
    /// members of each subset (`0` for the empty set, `1` for the full set).
    pub fn boolean(k: usize) -> Self {
        let n = 1usize << k;
        let name = |s: usize| -> String {
            if s == 0 {
                "0".into()
            } else if s == n - 1 {
                "1".into()
            } else {
                (0..k).filter(|i| s & (1 << i) != 0).map(|i| (b'a' + i as u8) as char).collect()
            }
        };
        let labels = (0..n).map(name).collect();
        let leq = (0..n).map(|i| (0..n).map(|j| i & j == i).collect()).collect();
        Self::from_table(labels, leq).expect("Boolean lattices are lattices")
    }

    /// The diamond M3: three pairwise incomparable atoms.
    pub fn m3() -> Self {
        Self::from_covers(
            &["0", "a", "b", "c", "1"],
            &[("0", "a"), ("0", "b"), ("0", "c"), ("a", "1"), ("b", "1"), ("c", "1")],
        )
        .expect("M3 is a lattice")
    }

    /// The pentagon N5: `0 < a < b < 1` and `0 < c < 1`.
    pub fn n5() -> Self {
        Self::from_covers(&["0", "a", "b", "c", "1"], &[("0", "a"), ("a", "b"), ("b", "1"), ("0", "c"), ("c", "1")])
            .expect("N5 is a lattice")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.labels.len()
    }

    pub fn label(&self, x: Elem) -> &str {
        &self.labels[x]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn elem(&self, label: &str) -> Option<Elem> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn bottom(&self) -> Elem {
        self.bottom
    }

    pub fn top(&self) -> Elem {
        self.top
    }

    pub fn leq(&self, x: Elem, y: Elem) -> bool {
        self.leq[x][y]
    }

    pub fn lt(&self, x: Elem, y: Elem) -> bool {
        x != y && self.leq[x][y]
    }

    pub fn meet(&self, x: Elem, y: Elem) -> Elem {
        self.meet[x][y]
    }

    pub fn join(&self, x: Elem, y: Elem) -> Elem {
        self.join[x][y]
    }

    /// Meet of a family; the empty meet is the top element.
    pub fn meet_all<I: IntoIterator<Item = Elem>>(&self, it: I) -> Elem {
        it.into_iter().fold(self.top, |acc, x| self.meet(acc, x))
    }

    /// Join of a family; the empty join is the bottom element.
    pub fn join_all<I: IntoIterator<Item = Elem>>(&self, it: I) -> Elem {
        it.into_iter().fold(self.bottom, |acc, x| self.join(acc, x))
    }

    pub fn is_distributive(&self) -> bool {
        let n = self.len();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if self.meet(a, self.join(b, c)) != self.join(self.meet(a, b), self.meet(a, c)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Elements strictly above `x` with nothing strictly between.
    pub fn covers(&self, x: Elem) -> Vec<Elem> {
        let above: Vec<Elem> = self.elements().filter(|&y| self.lt(x, y)).collect();
        above.iter().copied().filter(|&y| !above.iter().any(|&z| self.lt(z, y))).collect()
    }

    /// Elements other than the top that are not the meet of two strictly
    /// larger elements.
    pub fn meet_irreducibles(&self) -> Vec<Elem> {
        self.elements().filter(|&x| self.is_meet_irreducible(x)).collect()
    }

    pub fn is_meet_irreducible(&self, x: Elem) -> bool {
        if x == self.top {
            return false;
        }
        for a in self.elements() {
            for b in self.elements() {
                if self.lt(x, a) && self.lt(x, b) && self.meet(a, b) == x {
                    return false;
                }
            }
        }
        true
    }

    /// Graphviz rendering of the Hasse diagram, drawn bottom-up.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph lattice {\n  rankdir=BT;\n  node [shape=circle];\n");
        for x in self.elements() {
            let _ = writeln!(out, "  n{} [label=\"{}\"];", x, escape(self.label(x)));
        }
        for x in self.elements() {
            for y in self.covers(x) {
                let _ = writeln!(out, "  n{x} -> n{y} [arrowhead=none];");
            }
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn label_index<S: AsRef<str>>(elements: &[S]) -> Result<(Vec<String>, HashMap<String, Elem>), LatticeError> {
    let mut index = HashMap::new();
    let mut labels = Vec::with_capacity(elements.len());
    for (i, e) in elements.iter().enumerate() {
        let l = e.as_ref().to_string();
        if index.insert(l.clone(), i).is_some() {
            return Err(LatticeError::DuplicateLabel(l));
        }
        labels.push(l);
    }
    Ok((labels, index))
}

fn lookup(index: &HashMap<String, Elem>, label: &str) -> Result<Elem, LatticeError> {
    index.get(label).copied().ok_or_else(|| LatticeError::UnknownLabel(label.to_string()))
}

fn greatest(leq: &[Vec<bool>], candidates: impl Iterator<Item = Elem>) -> Option<Elem> {
    let c: Vec<Elem> = candidates.collect();
    c.iter().copied().find(|&m| c.iter().all(|&x| leq[x][m]))
}

fn least(leq: &[Vec<bool>], candidates: impl Iterator<Item = Elem>) -> Option<Elem> {
    let c: Vec<Elem> = candidates.collect();
    c.iter().copied().find(|&m| c.iter().all(|&x| leq[m][x]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_element_chain() {
        let l = Lattice::chain(2);
        assert_eq!(l.label(l.bottom()), "0");
        assert_eq!(l.label(l.top()), "1");
        assert!(l.is_distributive());
        assert_eq!(l.meet_irreducibles(), vec![l.bottom()]);
    }

    #[test]
    fn boolean_square_meets_and_joins() {
        let l = Lattice::boolean_square();
        let (a, b) = (l.elem("a").unwrap(), l.elem("b").unwrap());
        assert_eq!(l.meet(a, b), l.bottom());
        assert_eq!(l.join(a, b), l.top());
        assert_eq!(l.covers(l.bottom()), vec![a, b]);
        assert!(l.covers(l.top()).is_empty());
        assert_eq!(l.meet_irreducibles(), vec![a, b]);
    }

    #[test]
    fn chain_of_three() {
        let l = Lattice::chain(3);
        let e = l.elem("e").unwrap();
        assert_eq!(l.join(e, e), e);
        assert_eq!(l.covers(e), vec![l.top()]);
        assert_eq!(l.meet_irreducibles(), vec![l.bottom(), e]);
        for x in l.elements() {
            assert_eq!(l.meet(x, l.top()), x);
        }
    }

    #[test]
    fn antichain_is_rejected() {
        let err = Lattice::from_leq::<&str>(&["x", "y", "z"], &[]).unwrap_err();
        assert!(matches!(err, LatticeError::MeetMissing(_, _)));
    }

    #[test]
    fn non_transitive_table_is_rejected() {
        let err = Lattice::from_leq(&["0", "a", "1"], &[("0", "a"), ("a", "1")]).unwrap_err();
        assert!(matches!(err, LatticeError::NotAPartialOrder(_)));
    }

    #[test]
    fn cycle_is_rejected() {
        let err = Lattice::from_leq(&["x", "y"], &[("x", "y"), ("y", "x")]).unwrap_err();
        assert!(matches!(err, LatticeError::NotAPartialOrder(_)));
    }

    #[test]
    fn m3_and_n5_are_not_distributive() {
        assert!(!Lattice::m3().is_distributive());
        assert!(!Lattice::n5().is_distributive());
        assert!(Lattice::boolean(3).is_distributive());
    }

    #[test]
    fn meet_irreducibles_have_a_unique_cover() {
        for l in [Lattice::chain(4), Lattice::boolean(3), Lattice::m3(), Lattice::n5()] {
            for x in l.elements() {
                let unique_cover = l.covers(x).len() == 1;
                assert_eq!(l.is_meet_irreducible(x), unique_cover, "{}", l.label(x));
            }
        }
    }

    #[test]
    fn dot_lists_every_cover() {
        let dot = Lattice::boolean_square().to_dot();
        assert_eq!(dot.matches("->").count(), 4);
    }
}
