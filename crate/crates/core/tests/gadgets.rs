use num_rational::BigRational;
use treegen_core::relu::{rat, rats, Coef, Expr, NetBuilder, ReluNetwork};

fn two_input(lo: i64, hi: i64) -> NetBuilder {
    NetBuilder::new(
        vec![(Coef::from(lo), Coef::from(hi)); 2],
        Coef::from(1_000_000i64),
    )
}

fn one(net: &ReluNetwork, x: &[i64]) -> BigRational {
    net.eval(&rats(x)).unwrap().remove(0)
}

#[test]
fn delta_matches_equality_on_square() {
    let mut b = two_input(-50, 50);
    let [x, y] = [b.input(0), b.input(1)];
    let d = b.delta(&x, &y);
    let net = b.finish(&[d]).unwrap();
    for a in -50..=50 {
        for c in -50..=50 {
            assert_eq!(one(&net, &[a, c]), rat((a == c) as i64), "{a} {c}");
        }
    }
}

#[test]
fn heaviside_and_step() {
    let mut b = two_input(-50, 50);
    let x = b.input(0);
    let h = b.heaviside(&x);
    let s = b.step(&x);
    let net = b.finish(&[h, s]).unwrap();
    for a in -50..=50 {
        let out = net.eval(&rats(&[a, 0])).unwrap();
        assert_eq!(out[0], rat((a >= 1) as i64));
        assert_eq!(out[1], rat((a >= 0) as i64));
    }
}

#[test]
fn max_of_pairs() {
    let mut b = two_input(-20, 20);
    let [x, y] = [b.input(0), b.input(1)];
    let m = b.max(&x, &y);
    let net = b.finish(&[m]).unwrap();
    for a in -20..=20 {
        for c in -20..=20 {
            assert_eq!(one(&net, &[a, c]), rat(a.max(c)));
        }
    }
}

#[test]
fn interval_on_hundredth_grid() {
    // inputs are multiples of 1/100; thresholds (i-1)/5, i/5
    let mut b = NetBuilder::new(vec![(Coef::ZERO, Coef::ONE)], Coef::from(1000i64));
    b.set_input_scale(100);
    let x = b.input(0);
    let g = Coef::frac(1, 100);
    let closed = b.interval(&x, Coef::frac(1, 5), Coef::frac(2, 5), g);
    let half = b.interval_open_left(&x, Coef::frac(1, 5), Coef::frac(2, 5), g);
    let net = b.finish(&[closed, half]).unwrap();
    for k in 0..100i64 {
        let v = BigRational::new(k.into(), 100.into());
        let out = net.eval(&[v]).unwrap();
        assert_eq!(out[0], rat((20..=40).contains(&k) as i64), "{k}");
        assert_eq!(out[1], rat((21..=40).contains(&k) as i64), "{k}");
    }
}

#[test]
fn gate_equals_product() {
    let mut b = NetBuilder::new(
        vec![(Coef::ZERO, Coef::from(64i64)), (Coef::ZERO, Coef::ONE)],
        Coef::from(1024i64),
    );
    let [t, q] = [b.input(0), b.input(1)];
    let g = b.gate(&t, &q, "t");
    let net = b.finish(&[g]).unwrap();
    for tv in 0..=64 {
        for qv in 0..=1 {
            assert_eq!(one(&net, &[tv, qv]), rat(tv * qv));
        }
    }
}

#[test]
fn gate_audit_rejects_large_bound() {
    let mut b = NetBuilder::new(
        vec![(Coef::ZERO, Coef::from(600i64)), (Coef::ZERO, Coef::ONE)],
        Coef::from(1024i64),
    );
    let [t, q] = [b.input(0), b.input(1)];
    let g = b.gate(&t, &q, "t");
    assert!(b.finish(&[g]).is_err());
}

#[test]
fn and_or_truth_tables() {
    let mut b = two_input(0, 1);
    let [u, v] = [b.input(0), b.input(1)];
    let a = b.and(&u, &v);
    let o = b.or(&u, &v);
    let n = b.not(&u);
    let net = b.finish(&[a, o, n]).unwrap();
    for x in 0..=1 {
        for y in 0..=1 {
            assert_eq!(
                net.eval(&rats(&[x, y])).unwrap(),
                rats(&[x & y, x | y, 1 - x])
            );
        }
    }
}

#[test]
fn identity_and_stats() {
    let id = ReluNetwork::identity(3);
    assert_eq!(id.eval(&rats(&[1, 2, 3])).unwrap(), rats(&[1, 2, 3]));
    let composed = ReluNetwork::compose(&id, &id).unwrap();
    assert_eq!(
        composed.eval(&rats(&[-1, 2, 3])).unwrap(),
        rats(&[-1, 2, 3])
    );
    let deep = ReluNetwork::passthrough(2, 3);
    assert_eq!(deep.stats().depth, 3);
    assert_eq!(deep.eval(&rats(&[-7, 4])).unwrap(), rats(&[-7, 4]));

    let mut b = NetBuilder::new(vec![(Coef::ZERO, Coef::from(9i64)); 4], Coef::from(1000i64));
    let xs = b.inputs();
    let units: Vec<Expr> = xs.iter().map(|x| b.relu(&x.plus_const(-1))).collect();
    let net = b.finish(&units).unwrap();
    let s = net.stats();
    assert_eq!((s.depth, s.total, s.widths.clone()), (1, 4, vec![4]));
}

#[test]
fn parallel_and_compose_preserve_semantics() {
    let delta_net = || {
        let mut b = two_input(-10, 10);
        let [x, y] = [b.input(0), b.input(1)];
        let d = b.delta(&x, &y);
        b.finish(&[d]).unwrap()
    };
    let f = delta_net();
    let g = ReluNetwork::passthrough(2, 4);
    let p = ReluNetwork::parallel(&f, &g).unwrap();
    assert_eq!(p.eval(&rats(&[3, 3, -2, 5])).unwrap(), rats(&[1, -2, 5]));
    assert_eq!(p.eval(&rats(&[3, 4, 0, 0])).unwrap(), rats(&[0, 0, 0]));
    let c = ReluNetwork::compose(&f, &ReluNetwork::passthrough(2, 2)).unwrap();
    for a in -5..=5 {
        assert_eq!(one(&c, &[a, 2]), one(&f, &[a, 2]));
    }
}

#[test]
fn json_round_trip() {
    let mut b = NetBuilder::new(vec![(Coef::ZERO, Coef::ONE)], Coef::from(1000i64));
    b.set_input_scale(100);
    let x = b.input(0);
    let h = b.interval(&x, Coef::frac(1, 3), Coef::frac(1, 2), Coef::frac(1, 100));
    b.trace_vec("h", std::slice::from_ref(&h));
    let net = b.finish(&[h]).unwrap();
    let back = ReluNetwork::from_json(net.to_json()).unwrap();
    assert_eq!(back, net);
    let v = BigRational::new(40.into(), 100.into());
    assert_eq!(
        back.eval(std::slice::from_ref(&v)).unwrap(),
        net.eval_reference(&[v]).unwrap()
    );
}

#[test]
fn fast_path_agrees_with_reference() {
    let mut b = two_input(-30, 30);
    let [x, y] = [b.input(0), b.input(1)];
    let d = b.delta(&x, &y);
    let h = b.step(&(&x - &y));
    let m = b.max(&x, &y);
    let s = (&m * Coef::frac(1, 2)).plus_const(Coef::frac(1, 3));
    let net = b.finish(&[d, h, s]).unwrap();
    for a in -30..=30 {
        for c in [-30, -1, 0, 7, 30] {
            let x = rats(&[a, c]);
            assert_eq!(net.eval(&x).unwrap(), net.eval_reference(&x).unwrap());
        }
    }
}
