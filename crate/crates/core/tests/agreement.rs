//! Networks against the direct editors on random trees.

use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treegen_core::delete::{build_td, delete_reference_padded};
use treegen_core::insert::{
    apply_insert_reference, build_ti, insert_ops, insert_reference_symbols,
};
use treegen_core::locate::{
    build_inward_locator, build_outward_locator, outward_predicate, Constants,
};
use treegen_core::relu::Coef;
use treegen_core::subst::{build_ts, subst_reference};
use treegen_core::tree::random_tree;
use treegen_core::unified::{build_te, te_reference};
use treegen_core::LabeledTree;

fn tree(seed: u64, n: usize, m: u32) -> (LabeledTree, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_tree(&mut rng, n, m);
    (t, rng)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn inward_locator_finds_each_vertex(seed: u64, n in 1usize..=8, d in 1usize..=3) {
        let (t, mut rng) = tree(seed, n, 4);
        let e = t.euler();
        let net = build_inward_locator(&e, d).unwrap();
        for _ in 0..8 {
            let x: Vec<i64> = (0..d).map(|_| rng.gen_range(0..=n as i64)).collect();
            let out = net.eval_ints(&x).unwrap();
            for (j, &xj) in x.iter().enumerate() {
                let row = &out[j * 2 * n..(j + 1) * 2 * n];
                let hits: Vec<(usize, i64)> = row.iter().enumerate().filter(|(_, &v)| v != 0).map(|(i, &v)| (i, v)).collect();
                if xj == 0 {
                    prop_assert!(hits.is_empty());
                } else {
                    let v = xj as usize;
                    let pos = e.symbols().iter().enumerate().filter(|(_, &s)| s <= 4).nth(v - 1).unwrap().0;
                    prop_assert_eq!(hits, vec![(pos, t.label(v) as i64)]);
                }
            }
        }
    }

    #[test]
    fn outward_locator_matches_predicate(seed: u64, n in 1usize..=7, d in 1usize..=2) {
        let (t, mut rng) = tree(seed, n, 3);
        let e = t.euler();
        let net = build_outward_locator(&e, d).unwrap();
        let len = 2 * n;
        for _ in 0..6 {
            let x: Vec<i64> = (0..d).map(|_| rng.gen_range(0..=n as i64)).collect();
            let out = net.eval_ints(&x).unwrap();
            for (j, &xj) in x.iter().enumerate() {
                let expect = if xj == 0 {
                    0
                } else {
                    let l = e.symbols().iter().enumerate().filter(|(_, &s)| s <= 3).nth(xj as usize - 1).unwrap().0 + 1;
                    (1..=len).find(|&i| outward_predicate(&e, l, i).unwrap().0).unwrap() as i64
                };
                prop_assert_eq!(out[j], expect);
            }
        }
    }

    #[test]
    fn substitution_matches_reference(seed: u64, n in 1usize..=8, d in 1usize..=3) {
        let m = 4;
        let (t, mut rng) = tree(seed, n, m);
        let net = build_ts(&t.euler(), d).unwrap();
        for _ in 0..8 {
            let mut x: Vec<i64> = (0..d).map(|_| rng.gen_range(0..=n as i64)).collect();
            x.extend((0..d).map(|_| rng.gen_range(1..=m as i64)));
            let out = net.eval_ints(&x).unwrap();
            let expect = subst_reference(&t, &x, d).unwrap().euler().into_symbols();
            prop_assert_eq!(out.iter().map(|&v| v as u64).collect::<Vec<_>>(), expect);
        }
    }

    #[test]
    fn deletion_matches_reference(seed: u64, n in 1usize..=8, d in 1usize..=3) {
        let m = 4;
        let (t, mut rng) = tree(seed, n, m);
        let net = build_td(&t.euler(), d).unwrap();
        let big_b = Constants::new(n, m, d).big_b;
        for _ in 0..8 {
            let x: Vec<i64> = (0..d).map(|_| rng.gen_range(0..=n as i64)).collect();
            let out = net.eval_ints(&x).unwrap();
            let expect = delete_reference_padded(&t, &x, big_b).unwrap();
            prop_assert_eq!(out.iter().map(|&v| v as u64).collect::<Vec<_>>(), expect);
        }
    }

    #[test]
    fn insertion_matches_reference(seed: u64, n in 1usize..=7, d in 1usize..=2) {
        let m = 3;
        let (t, mut rng) = tree(seed, n, m);
        let e = t.euler();
        let net = build_ti(&e, d).unwrap();
        for _ in 0..8 {
            let mut x: Vec<i64> = (0..3 * d).map(|_| rng.gen_range(0..=n as i64)).collect();
            x.extend((0..d).map(|_| rng.gen_range(1..=m as i64)));
            let out: Vec<u64> = net.eval_ints(&x).unwrap().iter().map(|&v| v as u64).collect();
            let ops = insert_ops(&x, d);
            prop_assert_eq!(&out, &insert_reference_symbols(e.symbols(), m, &ops), "x = {:?}", x);
            let u = apply_insert_reference(&t, &ops).unwrap();
            prop_assert_eq!(u.len(), t.len() + d);
        }
    }

    #[test]
    fn unified_matches_reference(seed: u64, n in 1usize..=5, d in 1usize..=2) {
        let m = 3;
        let (t, mut rng) = tree(seed, n, m);
        let e = t.euler();
        let delta = Coef::frac(1, 100);
        let net = build_te(&e, d).unwrap();
        for _ in 0..8 {
            // zeros are frequent so that fewer than d deletions and substitutions also occur
            let k: Vec<i128> = (0..7 * d).map(|_| if rng.gen_bool(0.4) { 0 } else { rng.gen_range(0..100) }).collect();
            let xc: Vec<Coef> = k.iter().map(|&v| Coef::frac(v, 100)).collect();
            let xr: Vec<BigRational> = xc.iter().map(|c| c.to_big()).collect();
            let out: Vec<u64> = net.eval(&xr).unwrap().iter().map(|v| u64::try_from(v.to_integer()).unwrap()).collect();
            prop_assert_eq!(&out, &te_reference(&t, &xc, d, delta).unwrap(), "k = {:?}", k);
        }
    }
}
