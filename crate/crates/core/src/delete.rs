//! Deletion network: remove the vertices named by `x_1..x_d` from a padded Euler string.

use crate::locate::{self, Constants, OutwardCore, OutwardSel};
use crate::relu::{BuildError, Coef, Expr, NetBuilder, ReluNetwork};
use crate::subst::dedupe;
use crate::tree::{EulerString, LabeledTree};

pub use crate::edit::{apply_delete_reference, EditError};
pub use crate::tree::strip_sentinels;

/// Wires of one deletion stage. `y` has `len - 2d` entries over `Σ ∪ {B}`.
#[derive(Debug, Clone)]
pub struct TdWires {
    pub x1: Vec<Expr>,
    pub q: Vec<Expr>,
    pub r1: Vec<Expr>,
    pub core: OutwardCore,
    pub sel: OutwardSel,
    pub y: Vec<Expr>,
}

/// Deletion over the padded string `t` (length `2n + 2d`, sentinels `big_b` at the tail).
pub fn td_stage(
    b: &mut NetBuilder,
    t: &[Expr],
    m: u32,
    two_n: i64,
    big_b: i64,
    d: usize,
    pos: &[Expr],
) -> TdWires {
    let len = t.len();
    let out_len = len - 2 * d;
    let x1 = dedupe(b, pos);
    let (p, p1, p2) = locate::inward_ranks(b, t, m, two_n);
    let qji: Vec<Vec<Expr>> = x1
        .iter()
        .map(|xj| p2.iter().map(|pi| b.delta(pi, xj)).collect())
        .collect();
    // distinct positions hit distinct entries, so the sum stays binary
    let q: Vec<Expr> = (0..len)
        .map(|i| Expr::sum(qji.iter().map(|row| &row[i])).tightened(Coef::ZERO, Coef::ONE))
        .collect();
    let r1: Vec<Expr> = t
        .iter()
        .zip(&q)
        .map(|(ti, qi)| b.gate(ti, qi, "r'"))
        .collect();
    let core = locate::outward_core(b, t, &p, m);
    let sel = locate::outward_select(b, t, &core, &r1, m);

    let big_p: Vec<Expr> = r1.iter().zip(&sel.z1).map(|(a, c)| a + c).collect();
    let keep: Vec<Expr> = big_p.iter().map(|pi| b.delta_c(pi, 0)).collect();
    let mut rank = Vec::with_capacity(len);
    let mut prefix = Expr::zero();
    for k in &keep {
        prefix = prefix + k;
        let dropped = b.delta_c(k, 0);
        rank.push(b.mask(&prefix.scale(big_b), &dropped, "R"));
    }
    let mut win = vec![vec![Expr::zero(); out_len]; 2 * d + 1];
    for i in 0..out_len {
        let lo = Coef::from(big_b * (i as i64 + 1));
        for (j, row) in win.iter_mut().enumerate() {
            let at = i + j;
            if at >= len {
                break;
            }
            let hit = b.interval(&rank[at], lo, lo + Coef::ONE, Coef::ONE);
            row[i] = b.gate(&t[at], &hit, "R'");
        }
    }
    let y: Vec<Expr> = (0..out_len)
        .map(|i| Expr::sum(win.iter().map(|row| &row[i])).tightened(Coef::ZERO, Coef::from(big_b)))
        .collect();

    b.trace_vec("x'", &x1);
    b.trace_vec("p", &p);
    b.trace_vec("p'", &p1);
    b.trace_vec("p''", &p2);
    b.trace_mat("q", &qji);
    b.trace_vec("q'", &q);
    b.trace_vec("r'", &r1);
    locate::trace_core(b, &core);
    b.trace_mat("w'", &sel.w1);
    b.trace_vec("z'", &sel.z1);
    b.trace_vec("P", &big_p);
    b.trace_vec("Q", &keep);
    b.trace_vec("R", &rank);
    b.trace_mat("R'", &win);
    b.trace_vec("y", &y);
    TdWires {
        x1,
        q,
        r1,
        core,
        sel,
        y,
    }
}

/// `E(T)` followed by `2d` copies of `big_b`.
pub fn padded(e: &EulerString, d: usize, big_b: i64) -> Vec<u64> {
    let mut s = e.symbols().to_vec();
    s.extend(std::iter::repeat_n(big_b as u64, 2 * d));
    s
}

/// Deletion network on `d` inputs in `[0, n]` with `2n` outputs.
pub fn build_td(e: &EulerString, d: usize) -> Result<ReluNetwork, BuildError> {
    if d == 0 {
        return Err(BuildError::ZeroBudget);
    }
    let (n, m) = (e.edges(), e.alphabet());
    let k = Constants::new(n, m, d);
    let mut b = NetBuilder::new(locate::position_inputs(n, d), Coef::from(k.big_c));
    let x = b.inputs();
    let t = locate::symbol_exprs(&padded(e, d, k.big_b));
    let w = td_stage(&mut b, &t, m, 2 * n as i64, k.big_b, d, &x);
    b.finish(&w.y)
}

/// Distinct nonzero positions of `x`, in first-occurrence order.
pub fn delete_ops(x: &[i64]) -> Vec<usize> {
    let mut ops: Vec<usize> = Vec::new();
    for &p in x {
        if p != 0 && !ops.contains(&(p as usize)) {
            ops.push(p as usize);
        }
    }
    ops
}

/// Reference result of the deletion network on `x`.
pub fn delete_reference(tree: &LabeledTree, x: &[i64]) -> Result<LabeledTree, EditError> {
    apply_delete_reference(tree, &delete_ops(x))
}

/// Reference output string: the reduced Euler string followed by sentinels up to length `2n`.
pub fn delete_reference_padded(
    tree: &LabeledTree,
    x: &[i64],
    big_b: i64,
) -> Result<Vec<u64>, EditError> {
    let mut s = delete_reference(tree, x)?.euler().into_symbols();
    s.resize(2 * tree.edges(), big_b as u64);
    Ok(s)
}
