//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! report. Time limits are checked in release and debug builds alike.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lambda_ultra::engine::{amalgamate_k, complete, star_union, EngineError};
use lambda_ultra::eqlift::{a_eq, amalgamate_k0, cl0, cl0_oracle, K0Structure};
use lambda_ultra::harness::{
    enumerate_structures, expansion_check, expansion_search, forbidden_square_embeds, lex_grid, ramsey_check,
    random_k0, Family, Item,
};
use lambda_ultra::kstruct::{cl, from_k0, in_k_prime, retract, ClosureDescription, KStructure, LiftParams};
use lambda_ultra::lattice::Lattice;
use lambda_ultra::space::UltrametricSpace;
use lambda_ultra::sqo::{LanguageDescriptor, OrderedSpace, SubquotientOrder};
use lambda_ultra::structure::{Fact, Symbol};
use lambda_ultra::transfer::{lift, represent_kernel, represent_points};

const BUDGET: u64 = 1 << 26;

struct Verdict {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Verdict {
    Verdict { ok: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Verdict {
    Verdict { ok: false, detail: detail.into() }
}

fn lat(name: &str) -> Arc<Lattice> {
    Arc::new(match name {
        "ch2" => Lattice::chain(2),
        "ch3" => Lattice::chain(3),
        "b2" => Lattice::boolean_square(),
        _ => unreachable!(),
    })
}

fn spaces(l: &Arc<Lattice>, n: usize) -> Vec<UltrametricSpace> {
    enumerate_structures(Family::Space, l, n, BUDGET)
        .unwrap()
        .into_iter()
        .map(|i| match i {
            Item::Space(s) => s,
            _ => unreachable!(),
        })
        .collect()
}

fn k0s(l: &Arc<Lattice>, n: usize) -> Vec<K0Structure> {
    enumerate_structures(Family::K0, l, n, BUDGET)
        .unwrap()
        .into_iter()
        .map(|i| match i {
            Item::K0(k) => k,
            _ => unreachable!(),
        })
        .collect()
}

fn ordered(l: &Arc<Lattice>, n: usize) -> Vec<OrderedSpace> {
    enumerate_structures(Family::OrderedSpace, l, n, BUDGET)
        .unwrap()
        .into_iter()
        .map(|i| match i {
            Item::Ordered(x) => x,
            _ => unreachable!(),
        })
        .collect()
}

fn within(v: Verdict, start: Instant, limit: Duration) -> Verdict {
    let t = start.elapsed();
    if v.ok && t > limit {
        return fail(format!("{} (took {t:.2?}, limit {limit:?})", v.detail));
    }
    Verdict { ok: v.ok, detail: format!("{} [{t:.2?}]", v.detail) }
}

// Distributivity by checking every triple, independent of the library.
fn distributive_oracle(l: &Lattice) -> bool {
    let els: Vec<_> = l.elements().collect();
    els.iter().all(|&x| {
        els.iter().all(|&y| els.iter().all(|&z| l.meet(x, l.join(y, z)) == l.join(l.meet(x, y), l.meet(x, z))))
    })
}

fn c1_lattices() -> Verdict {
    let start = Instant::now();
    let mut cases: Vec<(String, Lattice, bool)> =
        (1..=5).map(|n| (format!("CH{n}"), Lattice::chain(n), true)).collect();
    cases.push(("B2".into(), Lattice::boolean_square(), true));
    cases.push(("M3".into(), Lattice::m3(), false));
    cases.push(("N5".into(), Lattice::n5(), false));
    for (name, l, want) in &cases {
        let got = l.is_distributive();
        if got != *want || got != distributive_oracle(l) {
            return fail(format!("{name}: is_distributive = {got}, expected {want}"));
        }
    }
    within(pass(format!("{} lattices agree with the triple oracle", cases.len())), start, Duration::from_secs(1))
}

fn c2_equivalence_round_trip() -> Verdict {
    let start = Instant::now();
    let mut count = 0;
    for name in ["ch3", "b2"] {
        let l = lat(name);
        for n in 1..=4 {
            for s in spaces(&l, n) {
                let sys = s.to_equivalence_system();
                let back = match UltrametricSpace::from_equivalence_system(&sys) {
                    Ok(b) => b,
                    Err(e) => return fail(format!("{name}, {n} points: {e}")),
                };
                if back != s || back.to_equivalence_system() != sys {
                    return fail(format!("{name}, {n} points: round trip changed {:?}", s.matrix()));
                }
                count += 1;
            }
        }
    }
    within(pass(format!("{count} spaces round-trip exactly")), start, Duration::from_secs(10))
}

fn triangle_violations(k: &K0Structure) -> usize {
    let l = k.lattice();
    let n = k.len();
    let mut bad = 0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if let (Ok(a), Ok(b), Ok(c)) = (k.delta(x, z), k.delta(x, y), k.delta(y, z)) {
                    if !l.leq(a, l.join(b, c)) {
                        bad += 1;
                    }
                }
            }
        }
    }
    bad
}

fn c3_triangle() -> Verdict {
    let start = Instant::now();
    let mut checked = 0;
    let mut bad = 0;
    for name in ["ch2", "ch3", "b2"] {
        let l = lat(name);
        for n in 1..=4 {
            for s in spaces(&l, n) {
                bad += triangle_violations(&a_eq(&s));
                checked += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let pool = [lat("ch2"), lat("ch3"), lat("b2")];
    for i in 0..1000 {
        bad += triangle_violations(&random_k0(&pool[i % 3], 5, &mut rng));
        checked += 1;
    }
    let v = if bad == 0 {
        pass(format!("{checked} structures, no violations"))
    } else {
        fail(format!("{bad} violations in {checked} structures"))
    };
    within(v, start, Duration::from_secs(30))
}

fn c4_cl0() -> Verdict {
    let start = Instant::now();
    let mut count = 0;
    for name in ["ch3", "b2"] {
        let l = lat(name);
        let uu = ClosureDescription::u_u(&l);
        for n in 1..=5 {
            for k in k0s(&l, n) {
                let tag = format!("{name}, {n} elements, {:?}", k.labels());
                let out = match cl0(&k) {
                    Ok(o) => o,
                    Err(e) => return fail(format!("{tag}: {e}")),
                };
                let id: Vec<usize> = (0..k.len()).collect();
                if !out.is_downward_closed() {
                    return fail(format!("{tag}: output not downward closed"));
                }
                if !uu.is_closed(&out.to_structure()) {
                    return fail(format!("{tag}: output not closed for upward links"));
                }
                if !k.is_embedding(&out, &id) {
                    return fail(format!("{tag}: input not contained in output"));
                }
                match cl0(&out) {
                    Ok(again) if again == out => {}
                    _ => return fail(format!("{tag}: not idempotent")),
                }
                // The oracle realizes a space, so it runs per component
                // (elements sharing a top class).
                let top = l.top();
                for root in (0..k.len()).filter(|&x| k.sort(x) == top) {
                    let part = |s: &K0Structure| -> Vec<usize> {
                        (0..s.len()).filter(|&x| s.up(x, top) == Some(root)).collect()
                    };
                    let comp = k.substructure(&part(&k)).unwrap();
                    let closed = out.substructure(&part(&out)).unwrap();
                    match cl0_oracle(&comp) {
                        Ok(o) if o.is_isomorphic(&closed) => {}
                        Ok(o) => return fail(format!("{tag}: oracle has {} elements, cl0 {}", o.len(), closed.len())),
                        Err(e) => return fail(format!("{tag}: oracle failed: {e}")),
                    }
                }
                count += 1;
            }
        }
    }
    within(pass(format!("{count} structures")), start, Duration::from_secs(60))
}

/// Image intersection equals the base image.
fn strong(left: &[usize], right: &[usize], f1: &[usize], f2: &[usize]) -> bool {
    let base: Vec<usize> = f1.iter().map(|&x| left[x]).collect();
    if f2.iter().map(|&y| right[y]).collect::<Vec<_>>() != base {
        return false;
    }
    let mut common: Vec<usize> = left.iter().filter(|x| right.contains(x)).copied().collect();
    let mut b = base.clone();
    common.sort_unstable();
    b.sort_unstable();
    common == b
}

fn c5_amalgamation() -> Verdict {
    let start = Instant::now();
    let (mut n0, mut nk) = (0, 0);
    for name in ["ch2", "ch3"] {
        let l = lat(name);
        let params = Arc::new(LiftParams::min(l.clone()).unwrap());
        let closed: Vec<K0Structure> =
            (1..=3).flat_map(|n| k0s(&l, n)).filter(K0Structure::is_downward_closed).collect();
        let mut bases: Vec<K0Structure> = vec![K0Structure::empty(l.clone())];
        bases.extend(closed.iter().filter(|k| k.len() <= 2).cloned());
        let lifted = |k: &K0Structure| cl(&from_k0(params.clone(), k).unwrap()).unwrap();
        for base in &bases {
            let bk = lifted(base);
            let into: Vec<(&K0Structure, Vec<usize>)> = closed
                .iter()
                .flat_map(|k| {
                    base.to_structure().embeddings(&k.to_structure(), usize::MAX).into_iter().map(move |m| (k, m))
                })
                .collect();
            for (k1, f1) in &into {
                for (k2, f2) in &into {
                    let a = match amalgamate_k0(base, k1, f1, k2, f2) {
                        Ok(a) => a,
                        Err(e) => return fail(format!("{name}: amalgamate_k0: {e}")),
                    };
                    let out = &a.structure;
                    if !out.is_downward_closed()
                        || !k1.is_embedding(out, &a.left)
                        || !k2.is_embedding(out, &a.right)
                        || !strong(&a.left, &a.right, f1, f2)
                    {
                        return fail(format!("{name}: bad amalgam of {:?} and {:?}", k1.labels(), k2.labels()));
                    }
                    n0 += 1;
                }
            }
            // The same problems one level up, with maps between the lifts.
            let lifts: Vec<KStructure> = closed.iter().map(lifted).collect();
            let into: Vec<(&KStructure, Vec<usize>)> = lifts
                .iter()
                .flat_map(|k| bk.structure().embeddings(k.structure(), usize::MAX).into_iter().map(move |m| (k, m)))
                .collect();
            for (k1, f1) in &into {
                for (k2, f2) in &into {
                    let a = match amalgamate_k(&bk, k1, f1, k2, f2) {
                        Ok(a) => a,
                        Err(e) => return fail(format!("{name}: amalgamate_k: {e}")),
                    };
                    let out = &a.structure;
                    if !out.is_closed()
                        || !k1.structure().is_embedding(out.structure(), &a.left)
                        || !k2.structure().is_embedding(out.structure(), &a.right)
                        || !strong(&a.left, &a.right, f1, f2)
                    {
                        return fail(format!("{name}: bad lifted amalgam of {:?} and {:?}", k1.labels(), k2.labels()));
                    }
                    nk += 1;
                }
            }
        }
    }
    within(pass(format!("{n0} problems for classes, {nk} lifted")), start, Duration::from_secs(60))
}

fn c6_retraction() -> Verdict {
    let start = Instant::now();
    let (mut fixtures, mut lifts) = (0, 0);
    for name in ["ch2", "ch3", "b2"] {
        let l = lat(name);
        let params = Arc::new(LiftParams::min(l.clone()).unwrap());
        for n in 1..=4 {
            for k0 in k0s(&l, n).into_iter().filter(K0Structure::is_downward_closed) {
                let k = cl(&from_k0(params.clone(), &k0).unwrap()).unwrap();
                let once = match retract(&k) {
                    Ok(r) => r,
                    Err(e) => return fail(format!("{name}: retract failed: {e}")),
                };
                match retract(&once) {
                    Ok(twice) if twice.structure() == once.structure() => {}
                    _ => return fail(format!("{name}: retract not idempotent on {:?}", k.labels())),
                }
                fixtures += 1;
            }
        }
        for n in 1..=3 {
            for x in ordered(&l, n) {
                let p = Arc::new(LiftParams::new(x.language.clone()).unwrap());
                let k = match lift(&x, &p) {
                    Ok(k) => k,
                    Err(e) => return fail(format!("{name}: lift failed: {e}")),
                };
                match retract(&k) {
                    Ok(r) if r.structure() == k.structure() => {}
                    _ => return fail(format!("{name}: retract moves a lift of {n} points")),
                }
                if !in_k_prime(&k) {
                    return fail(format!("{name}: lift of {n} points not in K'"));
                }
                lifts += 1;
            }
        }
    }
    within(pass(format!("{fixtures} closed fixtures, {lifts} lifts")), start, Duration::from_secs(60))
}

fn c7_representation() -> Verdict {
    let start = Instant::now();
    let (mut exact, mut widened) = (0, 0);
    for name in ["ch2", "ch3", "b2"] {
        let l = lat(name);
        for n in 1..=3 {
            for x in ordered(&l, n).into_iter().filter(|x| x.language.is_well_equipped()) {
                let p = Arc::new(LiftParams::new(x.language.clone()).unwrap());
                let k = match lift(&x, &p) {
                    Ok(k) => k,
                    Err(e) => return fail(format!("{name}: {e}")),
                };
                // Closure may add witness points (B2); the points of `x`
                // inside the representation must still be `x` exactly.
                match (represent_points(&k), represent_kernel(&k, &x)) {
                    (Ok(all), Ok(own)) if own.is_isomorphic(&x) => {
                        if all.is_isomorphic(&x) {
                            exact += 1;
                        } else {
                            widened += 1;
                        }
                    }
                    (Ok(_), Ok(_)) => return fail(format!("{name}: representation of a {n}-point space differs")),
                    (Err(e), _) | (_, Err(e)) => return fail(format!("{name}: {e}")),
                }
            }
        }
    }
    let detail =
        format!("{} ordered spaces; {widened} with closure witnesses compared on their own points", exact + widened);
    within(pass(detail), start, Duration::from_secs(30))
}

fn c8_ramsey() -> Verdict {
    let start = Instant::now();
    let l = lat("ch2");
    let lang = LanguageDescriptor::min_language(l.clone()).unwrap();
    // The CH2 space on n points carries one linear order.
    let chain = |n: usize| {
        let d = (0..n).map(|i| (0..n).map(|j| usize::from(i != j)).collect()).collect();
        let sp = UltrametricSpace::from_matrix(l.clone(), d).unwrap();
        let o = SubquotientOrder::from_keys(&sp, 0, 1, &(0..n).collect::<Vec<_>>()).unwrap();
        OrderedSpace::new(lang.clone(), sp, vec![o]).unwrap().to_structure()
    };
    let holds = |a: usize, b: usize, c: usize, r: usize| {
        ramsey_check(&chain(a), &chain(b), &chain(c), r, BUDGET).map(|v| v.holds())
    };
    match (holds(2, 3, 6, 2), holds(2, 3, 5, 2)) {
        (Ok(true), Ok(false)) => {}
        other => return fail(format!("R(3,3): size 6 / size 5 gave {other:?}")),
    }
    let r33 = start.elapsed();
    if r33 > Duration::from_secs(5) {
        return fail(format!("R(3,3) scan took {r33:.2?}"));
    }
    for k in 2..=3 {
        for r in 2..=3 {
            let m = r * (k - 1) + 1;
            match (holds(1, k, m, r), holds(1, k, m - 1, r)) {
                (Ok(true), Ok(false)) => {}
                other => return fail(format!("pigeonhole k={k} r={r}: {other:?}")),
            }
        }
    }
    within(pass("R(3,3) = 6; pigeonhole table exact for k, r in {2, 3}"), start, Duration::from_secs(10))
}

fn c9_completion() -> Verdict {
    let start = Instant::now();
    let mut done = 0;
    let mut cycles = 0;
    'outer: for name in ["ch2", "ch3", "b2"] {
        let l = lat(name);
        let params = Arc::new(LiftParams::min(l.clone()).unwrap());
        for n in 1..=3 {
            for k0 in k0s(&l, n).into_iter().filter(K0Structure::is_downward_closed) {
                let b = cl(&from_k0(params.clone(), &k0).unwrap()).unwrap();
                // Closed proper subsets generated by single elements.
                let mut shared_sets: Vec<Vec<usize>> = (0..b.len()).map(|x| b.closure_of(&[x])).collect();
                shared_sets.push(vec![]);
                shared_sets.sort();
                shared_sets.dedup();
                for shared in shared_sets.into_iter().filter(|s| s.len() < b.len()) {
                    for copies in 2..=3 {
                        let (c, labels, maps) = star_union(&b, &shared, copies);
                        let out = match complete(&params, &c, &labels, &b, &maps) {
                            Ok(o) => o,
                            Err(e) => return fail(format!("{name}: completion failed: {e}")),
                        };
                        if !maps.iter().all(|m| b.structure().is_embedding(out.structure(), m)) {
                            return fail(format!("{name}: a copy changed"));
                        }
                        done += 1;
                        let u = (0..b.len()).find(|x| !shared.contains(x)).unwrap();
                        let (x, y) = (maps[0][u], maps[1][u]);
                        let mut bad = c.clone();
                        bad.insert(Fact::binary(Symbol::Less, x, y));
                        bad.insert(Fact::binary(Symbol::Less, y, x));
                        match complete(&params, &bad, &labels, &b, &maps) {
                            Err(EngineError::OrderCycle(_)) => cycles += 1,
                            other => return fail(format!("{name}: injected cycle gave {:?}", other.map(|k| k.len()))),
                        }
                        if done == 50 {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    let v = if done == 50 {
        pass(format!("{done} unions completed, {cycles} cycles rejected"))
    } else {
        fail(format!("only {done} fixtures constructed"))
    };
    within(v, start, Duration::from_secs(30))
}

fn two_points(l: &Arc<Lattice>, e: usize) -> UltrametricSpace {
    UltrametricSpace::from_matrix(l.clone(), vec![vec![l.bottom(), e], vec![e, l.bottom()]]).unwrap()
}

fn c10_expansion() -> Verdict {
    let start = Instant::now();
    let ch2 = lat("ch2");
    let base = two_points(&ch2, 1);
    let a2 = ordered(&ch2, 2);
    if a2.is_empty() || !a2.iter().all(|a| expansion_check(a, &base)) {
        return fail("CH2: 2-point space does not certify");
    }
    let ch3 = lat("ch3");
    let lang = LanguageDescriptor::min_language(ch3.clone()).unwrap();
    for e in [1, 2] {
        let sp = two_points(&ch3, e);
        let Some(a) = lifted_pair(&lang, &sp) else {
            return fail(format!("CH3: no ordered pair at distance {e}"));
        };
        match expansion_search(&a, 4, BUDGET) {
            Ok(Some(w)) if w.len() <= 4 => {}
            other => return fail(format!("CH3 at distance {e}: search gave {:?}", other.map(|o| o.map(|w| w.len())))),
        }
    }
    let mut grids = 0;
    for (r, c) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        for rk in permutations(r) {
            for ck in permutations(c) {
                let (sp, o) = lex_grid(&rk, &ck);
                if forbidden_square_embeds(&sp, &o) {
                    return fail(format!("square embeds in grid {rk:?} x {ck:?}"));
                }
                grids += 1;
            }
        }
    }
    within(pass(format!("witnesses found; {grids} grids avoid the square")), start, Duration::from_secs(30))
}

/// Any expansion of `sp`.
fn lifted_pair(lang: &LanguageDescriptor, sp: &UltrametricSpace) -> Option<OrderedSpace> {
    let orders: Vec<SubquotientOrder> = lang
        .slots
        .iter()
        .map(|s| lambda_ultra::sqo::all_sqos(sp, s.bottom, s.top).into_iter().next())
        .collect::<Option<_>>()?;
    OrderedSpace::new(lang.clone(), sp.clone(), orders).ok()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("lattice distributivity", c1_lattices),
        ("equivalence-system round trip", c2_equivalence_round_trip),
        ("class distance triangle", c3_triangle),
        ("closure contract", c4_cl0),
        ("strong amalgamation", c5_amalgamation),
        ("retraction", c6_retraction),
        ("representation round trip", c7_representation),
        ("desk-scale Ramsey", c8_ramsey),
        ("completion", c9_completion),
        ("expansion property", c10_expansion),
    ];
    let mut failed = vec![];
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        println!("{} {:>2} {name}: {}", if v.ok { "PASS" } else { "FAIL" }, i + 1, v.detail);
        if !v.ok {
            failed.push(i + 1);
        }
    }
    let total = start.elapsed();
    println!("total {total:.2?}");
    assert!(total < Duration::from_secs(120), "acceptance run took {total:.2?}");
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
