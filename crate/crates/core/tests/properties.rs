use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lambda_ultra::eqlift::{cl0, K0Structure};
use lambda_ultra::harness::{
    enumerate_structures, expansion_check, order_reversal, random_k0, random_space, Family, Item,
};
use lambda_ultra::kstruct::{cl, from_k0, psi_less, ClosureDescription, LiftParams};
use lambda_ultra::lattice::{Elem, Lattice};
use lambda_ultra::space::{amalgamate_spaces, UltrametricSpace};
use lambda_ultra::sqo::{
    all_sqos, compose, delinearize, linearize, restrict, Choice, LanguageDescriptor, OrderedSpace,
};
use lambda_ultra::transfer::lift;

fn lattice(i: usize) -> Arc<Lattice> {
    Arc::new(match i % 3 {
        0 => Lattice::chain(2),
        1 => Lattice::chain(3),
        _ => Lattice::boolean_square(),
    })
}

fn fixtures() -> Vec<Lattice> {
    let mut v: Vec<Lattice> = (1..=6).map(Lattice::chain).collect();
    v.extend([Lattice::boolean_square(), Lattice::boolean(3), Lattice::m3(), Lattice::n5()]);
    v
}

/// Looks for a diamond or pentagon sublattice directly.
fn has_m3_or_n5(l: &Lattice) -> bool {
    let els: Vec<Elem> = l.elements().collect();
    let incomparable = |x, y| !l.leq(x, y) && !l.leq(y, x);
    for &a in &els {
        for &b in &els {
            for &c in &els {
                if a == b || b == c || a == c {
                    continue;
                }
                let diamond = incomparable(a, b)
                    && incomparable(b, c)
                    && incomparable(a, c)
                    && l.meet(a, b) == l.meet(b, c)
                    && l.meet(a, b) == l.meet(a, c)
                    && l.join(a, b) == l.join(b, c)
                    && l.join(a, b) == l.join(a, c);
                let pentagon = l.lt(a, c)
                    && incomparable(a, b)
                    && incomparable(c, b)
                    && l.meet(a, b) == l.meet(c, b)
                    && l.join(a, b) == l.join(c, b);
                if diamond || pentagon {
                    return true;
                }
            }
        }
    }
    false
}

#[test]
fn lattice_laws_on_fixtures() {
    for l in fixtures() {
        let els: Vec<Elem> = l.elements().collect();
        for &x in &els {
            for &y in &els {
                let (m, j) = (l.meet(x, y), l.join(x, y));
                assert!(l.leq(m, x) && l.leq(m, y) && l.leq(x, j) && l.leq(y, j));
                for &z in &els {
                    if l.leq(z, x) && l.leq(z, y) {
                        assert!(l.leq(z, m));
                    }
                    if l.leq(x, z) && l.leq(y, z) {
                        assert!(l.leq(j, z));
                    }
                }
            }
            assert_eq!(l.is_meet_irreducible(x), l.covers(x).len() == 1);
        }
        if l.len() <= 6 {
            assert_eq!(l.is_distributive(), !has_m3_or_n5(&l), "{:?}", l.labels());
        }
    }
}

/// Levels `e <= f <= g`, chosen at random.
fn chain_of_levels(l: &Lattice, rng: &mut ChaCha8Rng) -> (Elem, Elem, Elem) {
    let els: Vec<Elem> = l.elements().collect();
    let e = els[rng.gen_range(0..els.len())];
    let above: Vec<Elem> = els.iter().copied().filter(|&f| l.leq(e, f)).collect();
    let f = above[rng.gen_range(0..above.len())];
    let above: Vec<Elem> = els.iter().copied().filter(|&g| l.leq(f, g)).collect();
    let g = above[rng.gen_range(0..above.len())];
    (e, f, g)
}

fn random_ordered(lang: &LanguageDescriptor, sp: &UltrametricSpace, rng: &mut ChaCha8Rng) -> OrderedSpace {
    let orders = lang
        .slots
        .iter()
        .map(|s| {
            let mut all = all_sqos(sp, s.bottom, s.top);
            let i = rng.gen_range(0..all.len());
            all.swap_remove(i)
        })
        .collect();
    OrderedSpace::new(lang.clone(), sp.clone(), orders).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn equivalence_system_round_trip(seed: u64, li in 0usize..3, n in 1usize..7) {
        let l = lattice(li);
        let sp = random_space(&l, n, &mut ChaCha8Rng::seed_from_u64(seed));
        let sys = sp.to_equivalence_system();
        let back = UltrametricSpace::from_equivalence_system(&sys).unwrap();
        prop_assert_eq!(&back, &sp);
        prop_assert_eq!(back.to_equivalence_system(), sys);
    }

    #[test]
    fn classes_at_a_meet_refine_both(seed: u64, li in 0usize..3, n in 1usize..7) {
        let l = lattice(li);
        let sp = random_space(&l, n, &mut ChaCha8Rng::seed_from_u64(seed));
        for a in l.elements() {
            for b in l.elements() {
                prop_assert_eq!(sp.classes(l.meet(a, b)), sp.classes(a).meet(&sp.classes(b)));
            }
        }
    }

    #[test]
    fn space_amalgams_are_strong(seed: u64, li in 0usize..3, n in 2usize..7, k in 0usize..3) {
        let l = lattice(li);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = random_space(&l, n, &mut rng);
        let k = k.min(n - 1);
        let base: Vec<usize> = (0..k).collect();
        let (mut p1, mut p2) = (base.clone(), base.clone());
        for x in k..n {
            if rng.gen_bool(0.5) { p1.push(x) } else { p2.push(x) }
        }
        let (a1, a2) = (sp.subspace(&p1), sp.subspace(&p2));
        let am = amalgamate_spaces(&sp.subspace(&base), &a1, &base, &a2, &base).unwrap();
        prop_assert!(a1.is_embedding(&am.space, &am.left));
        prop_assert!(a2.is_embedding(&am.space, &am.right));
        let shared = am.left.iter().filter(|x| am.right.contains(x)).count();
        prop_assert_eq!(shared, k);
        prop_assert_eq!(&am.left[..k], &am.right[..k]);
    }

    #[test]
    fn restrict_undoes_compose(seed: u64, li in 0usize..3, n in 1usize..5) {
        let l = lattice(li);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = random_space(&l, n, &mut rng);
        let (e, f, g) = chain_of_levels(&l, &mut rng);
        let inners = all_sqos(&sp, e, f);
        let outers = all_sqos(&sp, f, g);
        let inner = &inners[rng.gen_range(0..inners.len())];
        let outer = &outers[rng.gen_range(0..outers.len())];
        let c = compose(&sp, outer, inner).unwrap();
        prop_assert!(c.validate(&sp).is_ok());
        prop_assert_eq!(&restrict(&sp, &c, f).unwrap(), inner);
        for x in sp.points() {
            for y in sp.points() {
                if c.lt(x, y) {
                    prop_assert!(sp.within(x, y, g));
                }
            }
        }
    }

    #[test]
    fn linear_orders_determine_the_space(seed: u64, li in 0usize..3, n in 1usize..5) {
        let l = lattice(li);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = random_space(&l, n, &mut rng);
        let lang = LanguageDescriptor::min_language(l.clone()).unwrap();
        let x = random_ordered(&lang, &sp, &mut rng);
        let lin = linearize(&x, Choice::canonical(&l)).unwrap();
        let (slots, rels) = delinearize(&lang, sp.len(), &lin);
        for (k, o) in x.orders.iter().enumerate() {
            prop_assert_eq!(&slots[k], &o.relation().to_vec());
        }
        for e in l.elements() {
            for a in sp.points() {
                for b in sp.points() {
                    prop_assert_eq!(rels[e][a][b], sp.within(a, b, e));
                }
            }
        }
    }

    #[test]
    fn random_structures_satisfy_the_triangle(seed: u64, li in 0usize..3) {
        let l = lattice(li);
        let k = random_k0(&l, 5, &mut ChaCha8Rng::seed_from_u64(seed));
        for x in 0..k.len() {
            for y in 0..k.len() {
                for z in 0..k.len() {
                    if let (Ok(a), Ok(b), Ok(c)) = (k.delta(x, z), k.delta(x, y), k.delta(y, z)) {
                        prop_assert!(l.leq(a, l.join(b, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn downward_closure_contract(seed: u64, li in 0usize..3) {
        let l = lattice(li);
        let k = random_k0(&l, 4, &mut ChaCha8Rng::seed_from_u64(seed));
        let out = cl0(&k).unwrap();
        let id: Vec<usize> = (0..k.len()).collect();
        prop_assert!(out.is_downward_closed());
        prop_assert!(k.is_embedding(&out, &id));
        prop_assert_eq!(cl0(&out).unwrap(), out);
    }

    #[test]
    fn lifted_closure_contract(seed: u64, li in 0usize..3) {
        let l = lattice(li);
        let k0 = random_k0(&l, 3, &mut ChaCha8Rng::seed_from_u64(seed));
        let params = Arc::new(LiftParams::min(l.clone()).unwrap());
        let s = from_k0(params.clone(), &k0).unwrap();
        let closed = cl(&s).unwrap();
        let uk = ClosureDescription::u_k(&params);
        prop_assert!(uk.is_closed(closed.structure()));
        prop_assert!(uk.is_semi_closed(closed.structure()));
        let expect = cl0(&s.metric_part().0).unwrap();
        prop_assert!(closed.metric_part().0.is_isomorphic(&expect));
        // ψ is a strict linear order on every sort.
        for &t in &params.type_order {
            let sort: Vec<usize> = (0..closed.len()).filter(|&x| closed.sort(x) == t).collect();
            let lt = |x, y| psi_less(&closed, t.0, t.1, x, y).unwrap();
            for &x in &sort {
                prop_assert!(!lt(x, x));
                for &y in &sort {
                    if x != y {
                        prop_assert!(lt(x, y) != lt(y, x));
                    }
                    for &z in &sort {
                        if lt(x, y) && lt(y, z) {
                            prop_assert!(lt(x, z));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn order_reversal_is_an_involution(seed: u64, li in 0usize..3, n in 1usize..5) {
        let l = lattice(li);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = random_space(&l, n, &mut rng);
        let lang = LanguageDescriptor::min_language(l.clone()).unwrap();
        let x = random_ordered(&lang, &sp, &mut rng);
        let slots: Vec<usize> = (0..lang.slots.len()).filter(|_| rng.gen_bool(0.5)).collect();
        let r = order_reversal(&x, &slots);
        prop_assert!(r.language.is_well_equipped());
        for o in &r.orders {
            prop_assert!(o.validate(&sp).is_ok());
        }
        prop_assert_eq!(order_reversal(&r, &slots), x);
    }

    #[test]
    fn expansion_check_is_monotone(seed: u64, n in 2usize..5) {
        let l = lattice(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let big = random_space(&l, n, &mut rng);
        let lang = LanguageDescriptor::min_language(l.clone()).unwrap();
        let pair = big.subspace(&[0, 1]);
        let a = random_ordered(&lang, &pair, &mut rng);
        let mid = big.subspace(&(0..n - 1).collect::<Vec<_>>());
        if expansion_check(&a, &mid) {
            prop_assert!(expansion_check(&a, &big));
        }
    }
}

/// An embedding between small ordered spaces extends to their lifts.
#[test]
fn lifting_preserves_embeddings() {
    for li in 0..2 {
        let l = lattice(li);
        let corpus: Vec<Vec<OrderedSpace>> = (1..=3)
            .map(|n| {
                enumerate_structures(Family::OrderedSpace, &l, n, 1 << 24)
                    .unwrap()
                    .into_iter()
                    .map(|i| match i {
                        Item::Ordered(x) => x,
                        _ => unreachable!(),
                    })
                    .collect()
            })
            .collect();
        let params = Arc::new(LiftParams::min(l.clone()).unwrap());
        for small in &corpus[..2] {
            for x in small {
                for y in corpus.iter().flatten().filter(|y| y.len() == x.len() + 1) {
                    if x.to_structure().embeddings(&y.to_structure(), 1).is_empty() {
                        continue;
                    }
                    let (lx, ly) = (lift(x, &params).unwrap(), lift(y, &params).unwrap());
                    assert!(
                        !lx.structure().embeddings(ly.structure(), 1).is_empty(),
                        "lift of {:?} does not embed",
                        x.space.matrix()
                    );
                }
            }
        }
    }
}

#[test]
fn empty_structure_is_closed() {
    let l = lattice(2);
    let k = K0Structure::empty(l);
    assert_eq!(cl0(&k).unwrap(), k);
}
