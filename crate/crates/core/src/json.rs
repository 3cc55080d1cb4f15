//! JSON encodings. Elements are always referred to by label.
//!
//! - lattice: `{"elements": [..], "leq": [[x, y], ..]}` or a name such as
//!   `"ch3"`, `"b2"`, `"m3"`, `"n5"`
//! - space: `{"lattice": .., "points": [..], "d": {"x,y": "a", ..}}`
//! - order: `{"bottom": "a", "top": "1", "pairs": [[x, y], ..]}` on points
//! - ordered space: `{"space": .., "orders": [order, ..]}`
//! - structure of classes: `{"lattice": .., "sorts": {"x": "(E,1)", ..}, "U": [[E, F, x, y], ..]}`
//! - lifted structure: `{"lattice": .., "slots": [["E", "F"], ..], "sorts":
//!   {"x": ["E", i], ..}, "U", "B", "Dex": [[x, y], ..], "D": [[x, y, z], ..],
//!   "order": [x, ..]}`; a partial order may be given as `"less": [[x, y], ..]`
//!   instead of `"order"`.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::eqlift::K0Structure;
use crate::kstruct::{KStructure, LiftParams, SortType};
use crate::lattice::{Elem, Lattice};
use crate::space::{Point, UltrametricSpace};
use crate::sqo::{LanguageDescriptor, OrderedSpace, SubquotientOrder};
use crate::structure::{Fact, Structure, Symbol};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed input: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unknown {0} `{1}`")]
    Unknown(&'static str, String),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(e: impl std::fmt::Display) -> JsonError {
    JsonError::Invalid(e.to_string())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeTable {
    pub elements: Vec<String>,
    pub leq: Vec<(String, String)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeJson {
    Name(String),
    Table(LatticeTable),
}

pub fn named_lattice(name: &str) -> Option<Lattice> {
    let lower = name.to_ascii_lowercase();
    match lower.as_str() {
        "b2" => Some(Lattice::boolean_square()),
        "m3" => Some(Lattice::m3()),
        "n5" => Some(Lattice::n5()),
        _ => {
            if let Some(k) = lower.strip_prefix("ch") {
                k.parse().ok().filter(|&k| k >= 1).map(Lattice::chain)
            } else if let Some(k) = lower.strip_prefix('b') {
                k.parse().ok().filter(|&k| k <= 4).map(Lattice::boolean)
            } else {
                None
            }
        }
    }
}

impl LatticeJson {
    pub fn decode(&self) -> Result<Lattice, JsonError> {
        match self {
            LatticeJson::Name(n) => named_lattice(n).ok_or_else(|| JsonError::Unknown("lattice", n.clone())),
            LatticeJson::Table(t) => Lattice::from_leq(&t.elements, &t.leq).map_err(invalid),
        }
    }

    /// Uses a library name when `l` is exactly that lattice.
    pub fn encode(l: &Lattice) -> Self {
        let names = [format!("ch{}", l.len()), "b2".into(), "m3".into(), "n5".into(), "b3".into(), "b4".into()];
        if let Some(n) = names.into_iter().find(|n| named_lattice(n).as_ref() == Some(l)) {
            return LatticeJson::Name(n);
        }
        let mut leq = vec![];
        for x in l.elements() {
            for y in l.elements() {
                if l.leq(x, y) {
                    leq.push((l.label(x).to_string(), l.label(y).to_string()));
                }
            }
        }
        LatticeJson::Table(LatticeTable { elements: l.labels().to_vec(), leq })
    }
}

fn elem(l: &Lattice, s: &str) -> Result<Elem, JsonError> {
    l.elem(s).ok_or_else(|| JsonError::Unknown("lattice element", s.into()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceJson {
    pub lattice: LatticeJson,
    pub points: Vec<String>,
    /// `"x,y"` -> level, for each unordered pair of distinct points.
    pub d: Map<String, Value>,
}

impl SpaceJson {
    pub fn decode(&self) -> Result<UltrametricSpace, JsonError> {
        self.decode_in(&Arc::new(self.lattice.decode()?))
    }

    /// Decodes over an already decoded lattice, so several inputs share it.
    pub fn decode_in(&self, l: &Arc<Lattice>) -> Result<UltrametricSpace, JsonError> {
        let n = self.points.len();
        let idx: HashMap<&str, usize> = self.points.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let mut d = vec![vec![None; n]; n];
        for (k, v) in &self.d {
            let (x, y) = k.split_once(',').ok_or_else(|| invalid(format!("distance key `{k}` is not `x,y`")))?;
            let (x, y) = (x.trim(), y.trim());
            let px = *idx.get(x).ok_or_else(|| JsonError::Unknown("point", x.into()))?;
            let py = *idx.get(y).ok_or_else(|| JsonError::Unknown("point", y.into()))?;
            let lv = v.as_str().ok_or_else(|| invalid(format!("distance of `{k}` must be a string")))?;
            let e = elem(l, lv)?;
            for (a, b) in [(px, py), (py, px)] {
                if d[a][b].is_some_and(|old| old != e) {
                    return Err(invalid(format!("conflicting distances for `{k}`")));
                }
                d[a][b] = Some(e);
            }
        }
        let mut m = vec![vec![l.bottom(); n]; n];
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    m[x][y] = d[x][y]
                        .ok_or_else(|| invalid(format!("missing distance `{},{}`", self.points[x], self.points[y])))?;
                }
            }
        }
        UltrametricSpace::new(l.clone(), self.points.clone(), m).map_err(invalid)
    }

    pub fn encode(s: &UltrametricSpace) -> Self {
        let mut d = Map::new();
        for x in s.points() {
            for y in s.points().filter(|&y| y > x) {
                d.insert(
                    format!("{},{}", s.label(x), s.label(y)),
                    Value::String(s.lattice().label(s.dist(x, y)).into()),
                );
            }
        }
        SpaceJson { lattice: LatticeJson::encode(s.lattice()), points: s.labels().to_vec(), d }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderJson {
    pub bottom: String,
    pub top: String,
    pub pairs: Vec<(String, String)>,
}

impl OrderJson {
    pub fn decode(&self, s: &UltrametricSpace) -> Result<SubquotientOrder, JsonError> {
        let l = s.lattice();
        let pt = |p: &str| s.point(p).ok_or_else(|| JsonError::Unknown("point", p.into()));
        let pairs =
            self.pairs.iter().map(|(x, y)| Ok((pt(x)?, pt(y)?))).collect::<Result<Vec<(Point, Point)>, JsonError>>()?;
        let (e, f) = (elem(l, &self.bottom)?, elem(l, &self.top)?);
        // Pairs may list covers only: extend to classes, then close.
        let n = s.len();
        let mut lt = vec![vec![false; n]; n];
        for &(x, y) in &pairs {
            for a in s.points().filter(|&a| s.within(a, x, e)) {
                for b in s.points().filter(|&b| s.within(b, y, e)) {
                    lt[a][b] = true;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                if lt[i][k] {
                    for j in 0..n {
                        if lt[k][j] {
                            lt[i][j] = true;
                        }
                    }
                }
            }
        }
        SubquotientOrder::new(s, e, f, lt).map_err(invalid)
    }

    /// Cover pairs between class representatives.
    pub fn encode(o: &SubquotientOrder, s: &UltrametricSpace) -> Self {
        let l = s.lattice();
        OrderJson {
            bottom: l.label(o.bottom()).into(),
            top: l.label(o.top()).into(),
            pairs: o.hasse_pairs(s).into_iter().map(|(x, y)| (s.label(x).into(), s.label(y).into())).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderedJson {
    pub space: SpaceJson,
    pub orders: Vec<OrderJson>,
}

impl OrderedJson {
    pub fn decode(&self) -> Result<OrderedSpace, JsonError> {
        let s = self.space.decode()?;
        let orders = self.orders.iter().map(|o| o.decode(&s)).collect::<Result<Vec<_>, _>>()?;
        let pairs: Vec<(Elem, Elem)> = orders.iter().map(|o| (o.bottom(), o.top())).collect();
        let lang = LanguageDescriptor::new(s.lattice().clone(), &pairs).map_err(invalid)?;
        OrderedSpace::new(lang, s, orders).map_err(invalid)
    }

    pub fn encode(x: &OrderedSpace) -> Self {
        OrderedJson {
            space: SpaceJson::encode(&x.space),
            orders: x.orders.iter().map(|o| OrderJson::encode(o, &x.space)).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct K0Json {
    pub lattice: LatticeJson,
    /// `"x": "(E,1)"`; a bare `"E"` is accepted too.
    pub sorts: Map<String, Value>,
    /// `[E, E', x, y]`; `[x, y]` is accepted too.
    #[serde(rename = "U", default)]
    pub u: Vec<Vec<String>>,
}

/// `E` from `"(E,1)"` or `"E"`.
fn sort_name(v: &str) -> &str {
    let t = v.trim();
    match t.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        Some(inner) => inner.rsplit_once(',').map_or(inner, |(e, _)| e).trim(),
        None => t,
    }
}

impl K0Json {
    pub fn decode(&self) -> Result<K0Structure, JsonError> {
        let l = Arc::new(self.lattice.decode()?);
        let mut labels = vec![];
        let mut sort = vec![];
        for (x, v) in &self.sorts {
            labels.push(x.clone());
            let v = v.as_str().ok_or_else(|| invalid(format!("sort of `{x}` must be a string")))?;
            sort.push(elem(&l, sort_name(v))?);
        }
        let at = |x: &str| labels.iter().position(|y| y == x).ok_or_else(|| JsonError::Unknown("element", x.into()));
        let edges = self
            .u
            .iter()
            .map(|e| {
                let (x, y) = match e.as_slice() {
                    [x, y] | [_, _, x, y] => (x, y),
                    _ => return Err(invalid("U entries are [E, F, x, y]")),
                };
                let (a, b) = (at(x)?, at(y)?);
                Ok((a, sort[b], b))
            })
            .collect::<Result<Vec<_>, JsonError>>()?;
        K0Structure::new(l, labels, sort, &edges).map_err(invalid)
    }

    pub fn encode(k: &K0Structure) -> Self {
        let l = k.lattice();
        let sorts = (0..k.len())
            .map(|x| (k.label(x).to_string(), Value::String(format!("({},1)", l.label(k.sort(x))))))
            .collect();
        let u = k
            .edges()
            .into_iter()
            .map(|(x, f, y)| {
                vec![l.label(k.sort(x)).into(), l.label(f).into(), k.label(x).to_string(), k.label(y).to_string()]
            })
            .collect();
        K0Json { lattice: LatticeJson::encode(l), sorts, u }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KJson {
    pub lattice: LatticeJson,
    /// Language slots; the minimal language when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_order: Option<Vec<(String, usize)>>,
    pub sorts: Map<String, Value>,
    #[serde(rename = "U", default)]
    pub u: Vec<(String, String)>,
    #[serde(rename = "B", default)]
    pub b: Vec<(String, String)>,
    #[serde(rename = "Dex", default)]
    pub dex: Vec<(String, String)>,
    #[serde(rename = "D", default)]
    pub d: Vec<(String, String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub less: Option<Vec<(String, String)>>,
}

/// Undecoded lifted structure: parameters, labels and raw facts.
#[derive(Clone, Debug)]
pub struct RawK {
    pub params: Arc<LiftParams>,
    pub labels: Vec<String>,
    pub structure: Structure,
}

impl RawK {
    pub fn find(&self, x: &str) -> Option<usize> {
        self.labels.iter().position(|y| y == x)
    }
}

impl KJson {
    pub fn params(&self) -> Result<Arc<LiftParams>, JsonError> {
        let l = Arc::new(self.lattice.decode()?);
        let lang = match &self.slots {
            None => LanguageDescriptor::min_language(l.clone()).map_err(invalid)?,
            Some(s) => {
                let pairs =
                    s.iter().map(|(a, b)| Ok((elem(&l, a)?, elem(&l, b)?))).collect::<Result<Vec<_>, JsonError>>()?;
                LanguageDescriptor::new(l.clone(), &pairs).map_err(invalid)?
            }
        };
        let mut p = LiftParams::new(lang).map_err(invalid)?;
        if let Some(t) = &self.type_order {
            let order = t.iter().map(|(e, i)| Ok((elem(&l, e)?, *i))).collect::<Result<Vec<SortType>, JsonError>>()?;
            p = p.with_type_order(order).map_err(invalid)?;
        }
        Ok(Arc::new(p))
    }

    /// Facts only, without validation.
    pub fn raw(&self) -> Result<RawK, JsonError> {
        self.raw_with(self.params()?)
    }

    pub fn raw_with(&self, params: Arc<LiftParams>) -> Result<RawK, JsonError> {
        let l = params.lattice().clone();
        let mut labels = vec![];
        let mut sort: Vec<SortType> = vec![];
        for (x, v) in &self.sorts {
            labels.push(x.clone());
            let (e, i): (String, usize) = serde_json::from_value(v.clone())
                .map_err(|_| invalid(format!("sort of `{x}` must be [element, copy]")))?;
            sort.push((elem(&l, &e)?, i));
        }
        let at = |x: &str| labels.iter().position(|y| y == x).ok_or_else(|| JsonError::Unknown("element", x.into()));
        let mut s = Structure::new(labels.len());
        for (x, &(e, i)) in sort.iter().enumerate() {
            s.insert(Fact::unary(Symbol::P(e, i), x));
        }
        for (x, y) in &self.u {
            let (a, b) = (at(x)?, at(y)?);
            s.insert(Fact::binary(Symbol::U(sort[a].0, sort[b].0), a, b));
        }
        for (x, y) in &self.b {
            let (a, b) = (at(x)?, at(y)?);
            s.insert(Fact::binary(Symbol::B(sort[a].0, sort[a].1, sort[b].1), a, b));
        }
        for (x, y) in &self.dex {
            s.insert(Fact::binary(Symbol::DEx, at(x)?, at(y)?));
        }
        for (x, y, z) in &self.d {
            let (a, b, c) = (at(x)?, at(y)?, at(z)?);
            s.insert(Fact::new(Symbol::D(sort[a].0, sort[b].0), &[a, b, c]));
        }
        if let Some(order) = &self.order {
            let idx = order.iter().map(|x| at(x)).collect::<Result<Vec<_>, _>>()?;
            crate::kstruct::set_order(&mut s, &idx);
        }
        for (x, y) in self.less.iter().flatten() {
            s.insert(Fact::binary(Symbol::Less, at(x)?, at(y)?));
        }
        Ok(RawK { params, labels, structure: s })
    }

    pub fn decode(&self) -> Result<KStructure, JsonError> {
        let raw = self.raw()?;
        KStructure::new(raw.params, raw.labels, raw.structure).map_err(invalid)
    }

    pub fn decode_with(&self, params: Arc<LiftParams>) -> Result<KStructure, JsonError> {
        let raw = self.raw_with(params)?;
        KStructure::new(raw.params, raw.labels, raw.structure).map_err(invalid)
    }

    pub fn encode(k: &KStructure) -> Self {
        let p = k.params();
        let l = k.lattice();
        let lab = |x: usize| k.label(x).to_string();
        let sorts = (0..k.len())
            .map(|x| {
                let (e, i) = k.sort(x);
                (lab(x), serde_json::json!([l.label(e), i]))
            })
            .collect();
        let (mut u, mut b, mut dex, mut d) = (vec![], vec![], vec![], vec![]);
        for f in k.structure().facts() {
            let a = f.args();
            match f.sym {
                Symbol::U(..) => u.push((lab(a[0]), lab(a[1]))),
                Symbol::B(..) => b.push((lab(a[0]), lab(a[1]))),
                Symbol::DEx => dex.push((lab(a[0]), lab(a[1]))),
                Symbol::D(..) => d.push((lab(a[0]), lab(a[1]), lab(a[2]))),
                _ => {}
            }
        }
        let slots =
            p.language.slots.iter().map(|s| (l.label(s.bottom).to_string(), l.label(s.top).to_string())).collect();
        let default_order = LiftParams::new(p.language.clone()).map(|q| q.type_order).unwrap_or_default();
        let type_order = (p.type_order != default_order)
            .then(|| p.type_order.iter().map(|&(e, i)| (l.label(e).to_string(), i)).collect());
        KJson {
            lattice: LatticeJson::encode(l),
            slots: Some(slots),
            type_order,
            sorts,
            u,
            b,
            dex,
            d,
            order: Some(k.order().into_iter().map(lab).collect()),
            less: None,
        }
    }
}

/// A map between labelled structures given as `{"source": "target"}`.
pub fn decode_map(
    m: &Map<String, Value>,
    source: &dyn Fn(&str) -> Option<usize>,
    source_len: usize,
    target: &dyn Fn(&str) -> Option<usize>,
) -> Result<Vec<usize>, JsonError> {
    let mut out = vec![usize::MAX; source_len];
    for (k, v) in m {
        let x = source(k).ok_or_else(|| JsonError::Unknown("element", k.clone()))?;
        let t = v.as_str().ok_or_else(|| invalid("map values must be labels"))?;
        out[x] = target(t).ok_or_else(|| JsonError::Unknown("element", t.into()))?;
    }
    if out.contains(&usize::MAX) {
        return Err(invalid("map must be defined on every element"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_round_trip() {
        let l = Arc::new(Lattice::boolean_square());
        let (a, b) = (l.elem("a").unwrap(), l.elem("b").unwrap());
        let g = UltrametricSpace::grid(l, 2, 2, a, b).unwrap();
        let j = serde_json::to_string(&SpaceJson::encode(&g)).unwrap();
        let back: SpaceJson = serde_json::from_str(&j).unwrap();
        assert_eq!(back.decode().unwrap(), g);
    }

    #[test]
    fn ordered_round_trip() {
        let l = Arc::new(Lattice::chain(3));
        let sp = UltrametricSpace::from_matrix(l.clone(), vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 2, 0]]).unwrap();
        let lang = LanguageDescriptor::min_language(l).unwrap();
        let orders = vec![
            SubquotientOrder::from_keys(&sp, 0, 1, &[1, 0, 0]).unwrap(),
            SubquotientOrder::from_keys(&sp, 1, 2, &[0, 0, 1]).unwrap(),
        ];
        let x = OrderedSpace::new(lang, sp, orders).unwrap();
        let j = serde_json::to_string(&OrderedJson::encode(&x)).unwrap();
        let back: OrderedJson = serde_json::from_str(&j).unwrap();
        assert_eq!(back.decode().unwrap(), x);
    }

    #[test]
    fn named_lattices() {
        assert_eq!(named_lattice("CH3").unwrap(), Lattice::chain(3));
        assert!(named_lattice("x9").is_none());
        let j: SpaceJson = serde_json::from_str(r#"{"lattice":"ch2","points":["p","q"],"d":{"p,q":"1"}}"#).unwrap();
        assert_eq!(j.decode().unwrap().len(), 2);
    }

    #[test]
    fn k_round_trip() {
        let l = Arc::new(Lattice::chain(3));
        let sp = UltrametricSpace::from_matrix(l.clone(), vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 2, 0]]).unwrap();
        let p = Arc::new(LiftParams::min(l).unwrap());
        let k = crate::kstruct::cl(&crate::kstruct::from_k0(p, &crate::eqlift::a_eq(&sp)).unwrap()).unwrap();
        let j = serde_json::to_value(KJson::encode(&k)).unwrap();
        let back: KJson = serde_json::from_value(j).unwrap();
        assert_eq!(back.decode().unwrap(), k);
        let k0 = crate::eqlift::a_eq(&sp);
        let j: K0Json = serde_json::from_value(serde_json::to_value(K0Json::encode(&k0)).unwrap()).unwrap();
        assert_eq!(j.decode().unwrap(), k0);
    }
}
