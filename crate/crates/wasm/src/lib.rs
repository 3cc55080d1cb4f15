//! Browser bindings for the demo page in `www/`.

use std::sync::Arc;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use lambda_ultra::harness::{enumerate_structures, ramsey_check, Family, RamseyVerdict};
use lambda_ultra::json::{named_lattice, LatticeJson, SpaceJson};
use lambda_ultra::lattice::{Elem, Lattice};
use lambda_ultra::space::UltrametricSpace;

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn lattice_from(input: &str) -> Result<Lattice, JsValue> {
    if let Some(l) = named_lattice(input.trim()) {
        return Ok(l);
    }
    if !input.trim_start().starts_with('{') {
        return Err(err(format!("unknown lattice `{}`", input.trim())));
    }
    let j: LatticeJson = serde_json::from_str(input).map_err(err)?;
    j.decode().map_err(err)
}

/// Hasse diagram data: elements with their height, cover pairs, and
/// whether the lattice is distributive.
#[wasm_bindgen]
pub fn hasse(input: &str) -> Result<String, JsValue> {
    let l = lattice_from(input)?;
    Ok(hasse_json(&l).to_string())
}

fn hasse_json(l: &Lattice) -> Value {
    // Rank = length of the longest chain up from the bottom.
    let mut by_below: Vec<Elem> = l.elements().collect();
    by_below.sort_by_key(|&e| l.elements().filter(|&f| l.lt(f, e)).count());
    let mut rank = vec![0usize; l.len()];
    for &e in &by_below {
        for c in l.covers(e) {
            rank[c] = rank[c].max(rank[e] + 1);
        }
    }
    let elements: Vec<Value> = l.elements().map(|e| json!({ "label": l.label(e), "rank": rank[e] })).collect();
    let covers: Vec<Value> = l
        .elements()
        .flat_map(|e| l.covers(e).into_iter().map(move |c| (e, c)))
        .map(|(e, c)| json!([l.label(e), l.label(c)]))
        .collect();
    let mi: Vec<&str> = l.meet_irreducibles().into_iter().map(|e| l.label(e)).collect();
    json!({ "elements": elements, "covers": covers, "distributive": l.is_distributive(), "meet_irreducibles": mi })
}

/// The classes of every level of a space given as JSON.
#[wasm_bindgen]
pub fn space_classes(input: &str) -> Result<String, JsValue> {
    let j: SpaceJson = serde_json::from_str(input).map_err(err)?;
    let s = j.decode().map_err(err)?;
    Ok(classes_json(&s).to_string())
}

fn classes_json(s: &UltrametricSpace) -> Value {
    let l = s.lattice();
    let levels: Vec<Value> = l
        .elements()
        .map(|e| {
            let classes: Vec<Vec<&str>> =
                s.classes(e).classes().into_iter().map(|c| c.into_iter().map(|p| s.label(p)).collect()).collect();
            json!({ "level": l.label(e), "classes": classes })
        })
        .collect();
    json!({ "points": s.len(), "levels": levels })
}

/// A 2 x 3 grid over the Boolean square, as a starting example.
#[wasm_bindgen]
pub fn grid_example() -> String {
    let l = Arc::new(Lattice::boolean_square());
    let (a, b) = (l.elem("a").unwrap(), l.elem("b").unwrap());
    let g = UltrametricSpace::grid(l, 2, 3, a, b).expect("grid");
    serde_json::to_string_pretty(&SpaceJson::encode(&g)).expect("serializable")
}

/// Ramsey check for linearly ordered sets (ordered spaces over the
/// two-element chain): colour the `a`-subsets of a `c`-chain with `r`
/// colours and look for a monochromatic `b`-subset.
#[wasm_bindgen]
pub fn ramsey(a: usize, b: usize, c: usize, r: usize) -> Result<String, JsValue> {
    let l = Arc::new(Lattice::chain(2));
    let budget = 1 << 22;
    let pick = |n: usize| -> Result<_, JsValue> {
        enumerate_structures(Family::OrderedSpace, &l, n, budget)
            .map_err(err)?
            .into_iter()
            .next()
            .ok_or_else(|| err(format!("no structure of size {n}")))
    };
    let (sa, sb, sc) = (pick(a)?.to_structure(), pick(b)?.to_structure(), pick(c)?.to_structure());
    let v = match ramsey_check(&sa, &sb, &sc, r, budget).map_err(err)? {
        RamseyVerdict::Holds => json!({ "holds": true }),
        RamseyVerdict::Counterexample(col) => json!({
            "holds": false,
            "coloring": col.iter().map(|(copy, k)| json!({ "copy": copy, "color": k })).collect::<Vec<_>>(),
        }),
    };
    Ok(v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b2_hasse() {
        let v = hasse_json(&Lattice::boolean_square());
        assert_eq!(v["covers"].as_array().unwrap().len(), 4);
        assert_eq!(v["distributive"], true);
    }

    #[test]
    fn grid_classes() {
        let j: SpaceJson = serde_json::from_str(&grid_example()).unwrap();
        let v = classes_json(&j.decode().unwrap());
        let a = v["levels"].as_array().unwrap().iter().find(|x| x["level"] == "a").unwrap();
        assert_eq!(a["classes"].as_array().unwrap().len(), 2);
    }
}
