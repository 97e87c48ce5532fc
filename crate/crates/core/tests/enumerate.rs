//! Sweeps on small trees against the edit balls.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treegen_core::enumerate::{
    compare_with_oracle, stats_table, sweep, Strategy, SweepError, SweepPlan,
};
use treegen_core::generative::{default_delta, Generator, Kind};
use treegen_core::oracle::{edit_ball, BallMode, BallSpec, OpSet, Semantics};
use treegen_core::tree::random_tree;
use treegen_core::LabeledTree;

fn sample_tree() -> LabeledTree {
    LabeledTree::new(
        vec![0, 3, 2, 2, 4, 4],
        vec![None, Some(0), Some(1), Some(1), Some(3), Some(1)],
        5,
    )
    .unwrap()
}

fn full() -> SweepPlan {
    SweepPlan {
        strategy: Strategy::Full,
        ..SweepPlan::default()
    }
}

#[test]
fn deletion_sweep_matches_ball() {
    let t = sample_tree();
    let g = Generator::build(Kind::Td, &t, 1, default_delta()).unwrap();
    let r = sweep(&g, &full()).unwrap();
    assert_eq!(r.sweep_size, 6);
    assert_eq!(r.count, 6);
    assert_eq!(r.distances.get(&1), Some(&5));
    let ball = edit_ball(
        &t,
        &BallSpec::new(
            1,
            vec![1, 2, 3, 4, 5],
            BallMode::AtMost,
            OpSet::DEL,
            Semantics::Staged,
        ),
    )
    .unwrap();
    let (missing, extra) = compare_with_oracle(&r, &ball);
    assert!(missing.is_empty() && extra.is_empty());
}

#[test]
fn substitution_sweep_matches_ball() {
    let t = sample_tree();
    let g = Generator::build(Kind::Ts, &t, 1, default_delta()).unwrap();
    let r = sweep(&g, &full()).unwrap();
    assert_eq!(r.count, 21);
    let ball = edit_ball(
        &t,
        &BallSpec::new(
            1,
            (1..=5).collect(),
            BallMode::AtMost,
            OpSet::SUB,
            Semantics::Staged,
        ),
    )
    .unwrap();
    assert_eq!(compare_with_oracle(&r, &ball), Default::default());
    let comp = sweep(&g, &SweepPlan::default()).unwrap();
    assert_eq!(comp.outputs, r.outputs);
}

#[test]
fn truncated_sweep_reports_missing() {
    let t = sample_tree();
    let g = Generator::build(Kind::Td, &t, 1, default_delta()).unwrap();
    let mut r = sweep(&g, &full()).unwrap();
    r.outputs.pop();
    let ball = edit_ball(
        &t,
        &BallSpec::new(1, vec![1], BallMode::AtMost, OpSet::DEL, Semantics::Staged),
    )
    .unwrap();
    let (missing, extra) = compare_with_oracle(&r, &ball);
    assert_eq!((missing.len(), extra.len()), (1, 0));
}

#[test]
fn insertion_sweeps_match_staged_balls() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..6 {
        let n = rand::Rng::gen_range(&mut rng, 1..=4);
        let t = random_tree(&mut rng, n, 2);
        for d in 1..=2 {
            let g = Generator::build(Kind::Ti, &t, d, default_delta()).unwrap();
            let r = sweep(&g, &SweepPlan::default()).unwrap();
            assert_eq!(r.invalid, 0);
            let ball = edit_ball(
                &t,
                &BallSpec::new(
                    d,
                    vec![1, 2],
                    BallMode::Exactly,
                    OpSet::INS,
                    Semantics::Staged,
                ),
            )
            .unwrap();
            let (missing, extra) = compare_with_oracle(&r, &ball);
            assert!(
                missing.is_empty() && extra.is_empty(),
                "tree {} d {d}: missing {missing:?} extra {extra:?}",
                t.euler()
            );
            assert_eq!(r.distances.keys().copied().collect::<Vec<_>>(), vec![d]);
        }
    }
}

#[test]
fn reports_are_deterministic() {
    let t = random_tree(&mut ChaCha8Rng::seed_from_u64(5), 4, 2);
    let g = Generator::build(Kind::Te, &t, 1, default_delta()).unwrap();
    let plan = SweepPlan {
        labels: Some(vec![1]),
        ..SweepPlan::default()
    };
    let mut a = sweep(&g, &plan).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let mut b = pool.install(|| sweep(&g, &plan)).unwrap();
    a.wall_time_ms = None;
    b.wall_time_ms = None;
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.invalid, 0);
}

#[test]
fn oversized_sweep_is_refused() {
    let t = random_tree(&mut ChaCha8Rng::seed_from_u64(3), 5, 3);
    let g = Generator::build(Kind::Te, &t, 2, default_delta()).unwrap();
    let plan = SweepPlan {
        strategy: Strategy::Full,
        max_evaluations: 1_000_000,
        ..SweepPlan::default()
    };
    assert!(matches!(sweep(&g, &plan), Err(SweepError::TooLarge { .. })));
}

#[test]
fn stats_table_shape() {
    let mut rows = Vec::new();
    for seed in 0..2 {
        let t = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 5 + seed as usize, 3);
        let g = Generator::build(Kind::Ti, &t, 2, default_delta()).unwrap();
        let st = g.net.stats();
        assert_eq!(st.widths.len(), st.depth);
        assert_eq!(st.widths.iter().sum::<usize>(), st.total);
        rows.push((format!("t{seed}"), Kind::Ti, 2, st));
    }
    let table = stats_table(&rows);
    assert!(
        table.ends_with("constant depth per kind and d: yes\n"),
        "{table}"
    );
}
