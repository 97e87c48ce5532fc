//! Substitution network: relabel the vertices named by `x_1..x_d` with `x_{d+1}..x_{2d}`.

use crate::locate::{self, Constants, Inward, OutwardCore, OutwardSel};
use crate::relu::{BuildError, Coef, Expr, NetBuilder, ReluNetwork};
use crate::tree::{EulerString, LabeledTree};

pub use crate::edit::{apply_subst_reference, EditError};

/// `x'_j`: nonzero repetitions of earlier entries become zero.
pub fn dedupe(b: &mut NetBuilder, x: &[Expr]) -> Vec<Expr> {
    let mut out = Vec::with_capacity(x.len());
    for (j, xj) in x.iter().enumerate() {
        let seen: Vec<Expr> = x[..j].iter().map(|xk| b.delta(xj, xk)).collect();
        let seen = Expr::sum(seen.iter());
        out.push(b.mask(xj, &seen, "x'"));
    }
    out
}

/// Wires of one substitution stage.
#[derive(Debug, Clone)]
pub struct TsWires {
    pub x1: Vec<Expr>,
    pub inward: Inward,
    pub core: OutwardCore,
    pub sel: Vec<OutwardSel>,
    pub u: Vec<Expr>,
}

/// Substitution over the string `t`; `vals` are the new labels.
pub fn ts_stage(
    b: &mut NetBuilder,
    t: &[Expr],
    m: u32,
    two_n: i64,
    pos: &[Expr],
    vals: &[Expr],
) -> TsWires {
    let len = t.len();
    let x1 = dedupe(b, pos);
    let inw = locate::inward(b, t, m, two_n, &x1);
    let core = locate::outward_core(b, t, &inw.p, m);
    let sel: Vec<OutwardSel> = inw
        .r1
        .iter()
        .map(|row| locate::outward_select(b, t, &core, row, m))
        .collect();

    let big_p: Vec<Vec<Expr>> = inw
        .r1
        .iter()
        .zip(&sel)
        .map(|(r, s)| r.iter().zip(&s.z1).map(|(a, c)| a + c).collect())
        .collect();
    let p1: Vec<Expr> = (0..len)
        .map(|i| &t[i] - &Expr::sum(big_p.iter().map(|row| &row[i])))
        .collect();
    let mut q = vec![Vec::with_capacity(len); pos.len()];
    let mut q1 = vec![Vec::with_capacity(len); pos.len()];
    for (j, val) in vals.iter().enumerate() {
        let out_val = val.plus_const(m as i64);
        for i in 0..len {
            let unsel = b.delta_c(&inw.r1[j][i], 0);
            q[j].push(b.mask(val, &unsel, "Q"));
            let unsel = b.delta_c(&sel[j].z1[i], 0);
            q1[j].push(b.mask(&out_val, &unsel, "Q'"));
        }
    }
    let r: Vec<Expr> = (0..len)
        .map(|i| {
            Expr::sum(
                q.iter()
                    .map(|row| &row[i])
                    .chain(q1.iter().map(|row| &row[i])),
            )
        })
        .collect();
    // each symbol is either kept or replaced by one label
    let hi = t
        .iter()
        .map(|e| e.range().1)
        .fold(Coef::from(2 * m as i64), Coef::max);
    let u: Vec<Expr> = p1
        .iter()
        .zip(&r)
        .map(|(a, c)| (a + c).tightened(Coef::ZERO, hi))
        .collect();

    b.trace_vec("x'", &x1);
    locate::trace_inward(b, &inw);
    locate::trace_core(b, &core);
    b.trace_cube("w'", &sel.iter().map(|s| s.w1.clone()).collect::<Vec<_>>());
    b.trace_vec("z", &sel.iter().map(|s| s.z.clone()).collect::<Vec<_>>());
    b.trace_mat("z'", &sel.iter().map(|s| s.z1.clone()).collect::<Vec<_>>());
    b.trace_mat("P", &big_p);
    b.trace_vec("P'", &p1);
    b.trace_mat("Q", &q);
    b.trace_mat("Q'", &q1);
    b.trace_vec("R", &r);
    b.trace_vec("u", &u);
    TsWires {
        x1,
        inward: inw,
        core,
        sel,
        u,
    }
}

/// Declared input ranges: `d` positions in `[0, n]`, then `d` labels in `[1, m]`.
pub fn ts_input_ranges(n: usize, m: u32, d: usize) -> Vec<(Coef, Coef)> {
    let mut r = locate::position_inputs(n, d);
    r.extend(std::iter::repeat_n((Coef::ONE, Coef::from(m)), d));
    r
}

/// Substitution network on `2d` inputs with `2n` outputs.
pub fn build_ts(e: &EulerString, d: usize) -> Result<ReluNetwork, BuildError> {
    if d == 0 {
        return Err(BuildError::ZeroBudget);
    }
    let (n, m) = (e.edges(), e.alphabet());
    let k = Constants::new(n, m, d);
    let mut b = NetBuilder::new(ts_input_ranges(n, m, d), Coef::from(k.big_c));
    let x = b.inputs();
    let t = locate::symbol_exprs(e.symbols());
    let w = ts_stage(&mut b, &t, m, 2 * n as i64, &x[..d], &x[d..]);
    b.finish(&w.u)
}

/// Operations the network performs for input `x`: first occurrence of each nonzero position.
pub fn subst_ops(x: &[i64], d: usize) -> Vec<(usize, u32)> {
    let mut seen = Vec::new();
    let mut ops = Vec::new();
    for j in 0..d {
        let p = x[j];
        if p != 0 && !seen.contains(&p) {
            seen.push(p);
            ops.push((p as usize, x[j + d] as u32));
        }
    }
    ops
}

/// Reference result of the substitution network on `x`.
pub fn subst_reference(tree: &LabeledTree, x: &[i64], d: usize) -> Result<LabeledTree, EditError> {
    apply_subst_reference(tree, &subst_ops(x, d))
}
