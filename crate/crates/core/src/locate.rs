//! Locating inward and outward edges of chosen vertices inside an Euler string.
//!
//! The network fragments work over a string of [`Expr`]s so the same code serves
//! a fixed `E(T)` (where most wires fold to constants) and an intermediate string
//! produced by an earlier stage.

use crate::relu::{BuildError, Coef, Expr, NetBuilder, ReluNetwork};
use crate::tree::EulerString;

/// Sentinel and masking constants for a tree with `n` edges, alphabet `m` and budget `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Constants {
    pub big_b: i64,
    pub big_c: i64,
}

impl Constants {
    pub fn new(n: usize, m: u32, d: usize) -> Constants {
        let width = (2 * m as i64).max(2 * n as i64 + 2 * d as i64);
        let big_b = 8 * (width + 1);
        let big_c = 8 * big_b * (2 * n as i64 + 2 * d as i64 + 1);
        Constants { big_b, big_c }
    }
}

/// Wires of the inward locator. `q` and `r1` are indexed `[j][i]` with `i` zero-based.
#[derive(Debug, Clone)]
pub struct Inward {
    pub p: Vec<Expr>,
    pub p1: Vec<Expr>,
    pub p2: Vec<Expr>,
    pub q: Vec<Vec<Expr>>,
    pub r1: Vec<Vec<Expr>>,
}

/// `p`, `p'`, `p''`: inward flags, inward ranks, and ranks with zero replaced by `two_n`.
pub fn inward_ranks(
    b: &mut NetBuilder,
    t: &[Expr],
    m: u32,
    two_n: i64,
) -> (Vec<Expr>, Vec<Expr>, Vec<Expr>) {
    let one = Coef::ONE;
    let p: Vec<Expr> = t.iter().map(|ti| b.le(ti, Coef::from(m), one)).collect();
    let mut p1 = Vec::with_capacity(t.len());
    let mut prefix = Expr::zero();
    for pi in &p {
        prefix = prefix + pi;
        let not_inward = b.delta_c(pi, 0);
        p1.push(b.mask(&prefix, &not_inward, "p'"));
    }
    let mut p2 = Vec::with_capacity(t.len());
    for pi in &p1 {
        let zero = b.delta_c(pi, 0);
        let fill = b.gate(&Expr::constant(two_n), &zero, "p''");
        p2.push(pi + &fill);
    }
    (p, p1, p2)
}

/// Inward-locator wires for positions `x` (not deduplicated here).
pub fn inward(b: &mut NetBuilder, t: &[Expr], m: u32, two_n: i64, x: &[Expr]) -> Inward {
    let (p, p1, p2) = inward_ranks(b, t, m, two_n);
    let mut q = Vec::with_capacity(x.len());
    let mut r1 = Vec::with_capacity(x.len());
    for xj in x {
        let row: Vec<Expr> = p2.iter().map(|pi| b.delta(pi, xj)).collect();
        let labels: Vec<Expr> = row
            .iter()
            .zip(t)
            .map(|(qi, ti)| b.gate(ti, qi, "r'"))
            .collect();
        q.push(row);
        r1.push(labels);
    }
    Inward { p, p1, p2, q, r1 }
}

/// Input-independent wires of the outward locator, indexed `[ℓ][i]` zero-based.
#[derive(Debug, Clone)]
pub struct OutwardCore {
    pub r: Vec<Expr>,
    pub s: Vec<Expr>,
    pub v: Vec<Vec<Expr>>,
    pub v1: Vec<Vec<Expr>>,
    pub w: Vec<Vec<Expr>>,
}

pub fn outward_core(b: &mut NetBuilder, t: &[Expr], p: &[Expr], m: u32) -> OutwardCore {
    let len = t.len();
    let c = b.big_c();
    let r: Vec<Expr> = t
        .iter()
        .zip(p)
        .map(|(ti, pi)| b.gate(ti, pi, "r"))
        .collect();
    let s: Vec<Expr> = t.iter().zip(&r).map(|(ti, ri)| ti - ri).collect();
    // running counts of outward and inward symbols; sentinels count as outward
    let hs: Vec<Expr> = s.iter().map(|si| b.step(&si.plus_const(-1))).collect();
    let hr: Vec<Expr> = r.iter().map(|ri| b.step(&ri.plus_const(-1))).collect();
    let prefix = |h: &[Expr]| {
        let mut acc = vec![Expr::zero()];
        for e in h {
            let next = acc.last().expect("seeded") + e;
            acc.push(next);
        }
        acc
    };
    let (ps, pr) = (prefix(&hs), prefix(&hr));
    let mut v = vec![vec![Expr::zero(); len]; len];
    for l in 0..len {
        let target = r[l].plus_const(m as i64);
        for i in l + 1..len {
            let eq = b.delta(&s[i], &target);
            // positions strictly between ℓ and i
            let outs = &ps[i] - &ps[l + 1];
            let ins = &pr[i] - &pr[l + 1];
            let e = eq - &(outs - ins).scale(c);
            v[l][i] = b.relu(&e);
        }
    }
    let mut v1 = vec![vec![Expr::zero(); len]; len];
    for l in 0..len {
        for i in l + 1..len {
            v1[l][i] = b.delta_c(&v[l][i], 1);
        }
    }
    let mut w = vec![vec![Expr::zero(); len]; len];
    for i in 0..len {
        for l in 0..i {
            let later = Expr::sum((l + 1..i).map(|k| &v1[k][i]));
            w[l][i] = b.relu(&(&v1[l][i] - &later));
        }
    }
    OutwardCore { r, s, v, v1, w }
}

/// Outward edges of the inward labels `r1` (one row, indexed by ℓ).
#[derive(Debug, Clone)]
pub struct OutwardSel {
    pub w1: Vec<Vec<Expr>>,
    pub z: Expr,
    pub z1: Vec<Expr>,
}

pub fn outward_select(
    b: &mut NetBuilder,
    t: &[Expr],
    core: &OutwardCore,
    r1: &[Expr],
    m: u32,
) -> OutwardSel {
    let len = t.len();
    let col_sums: Vec<Expr> = (0..len)
        .map(|i| Expr::sum((0..len).map(|k| &core.w[k][i])))
        .collect();
    let mut w1 = vec![vec![Expr::zero(); len]; len];
    for l in 0..len {
        let target = r1[l].plus_const(m as i64);
        for i in l + 1..len {
            let eq = b.delta(&core.s[i], &target);
            let others = &col_sums[i] - &core.w[l][i];
            w1[l][i] = b.relu(&(eq - others));
        }
    }
    let hit: Vec<Expr> = (0..len)
        .map(|i| Expr::sum((0..len).map(|l| &w1[l][i])))
        .collect();
    let z = Expr::sum(
        hit.iter()
            .enumerate()
            .map(|(i, h)| h.scale(i as i64 + 1))
            .collect::<Vec<_>>()
            .iter(),
    );
    let z1: Vec<Expr> = t
        .iter()
        .zip(&hit)
        .map(|(ti, h)| b.gate(ti, h, "z'"))
        .collect();
    OutwardSel { w1, z, z1 }
}

pub(crate) fn trace_inward(b: &mut NetBuilder, w: &Inward) {
    b.trace_vec("p", &w.p);
    b.trace_vec("p'", &w.p1);
    b.trace_vec("p''", &w.p2);
    b.trace_mat("q", &w.q);
    b.trace_mat("r'", &w.r1);
}

pub(crate) fn trace_core(b: &mut NetBuilder, c: &OutwardCore) {
    b.trace_vec("r", &c.r);
    b.trace_vec("s", &c.s);
    b.trace_mat("v", &c.v);
    b.trace_mat("v'", &c.v1);
    b.trace_mat("w", &c.w);
}

pub(crate) fn symbol_exprs(symbols: &[u64]) -> Vec<Expr> {
    symbols
        .iter()
        .map(|&s| Expr::constant(Coef::from(s)))
        .collect()
}

pub(crate) fn position_inputs(n: usize, d: usize) -> Vec<(Coef, Coef)> {
    vec![(Coef::ZERO, Coef::from(n)); d]
}

/// Network from `x ∈ [0, n]^d` to the rows of `r'` (flattened `[j][i]`).
pub fn build_inward_locator(e: &EulerString, d: usize) -> Result<ReluNetwork, BuildError> {
    if d == 0 {
        return Err(BuildError::ZeroBudget);
    }
    let n = e.edges();
    let k = Constants::new(n, e.alphabet(), d);
    let mut b = NetBuilder::new(position_inputs(n, d), Coef::from(k.big_c));
    let t = symbol_exprs(e.symbols());
    let x = b.inputs();
    let w = inward(&mut b, &t, e.alphabet(), 2 * n as i64, &x);
    trace_inward(&mut b, &w);
    let out: Vec<Expr> = w.r1.iter().flatten().cloned().collect();
    b.finish(&out)
}

/// Network from `x ∈ [0, n]^d` to `z` followed by the rows of `z'` (flattened `[j][i]`).
pub fn build_outward_locator(e: &EulerString, d: usize) -> Result<ReluNetwork, BuildError> {
    if d == 0 {
        return Err(BuildError::ZeroBudget);
    }
    let n = e.edges();
    let m = e.alphabet();
    let k = Constants::new(n, m, d);
    let mut b = NetBuilder::new(position_inputs(n, d), Coef::from(k.big_c));
    let t = symbol_exprs(e.symbols());
    let x = b.inputs();
    let inw = inward(&mut b, &t, m, 2 * n as i64, &x);
    let core = outward_core(&mut b, &t, &inw.p, m);
    let sel: Vec<OutwardSel> = inw
        .r1
        .iter()
        .map(|row| outward_select(&mut b, &t, &core, row, m))
        .collect();
    trace_inward(&mut b, &inw);
    trace_core(&mut b, &core);
    let w1: Vec<Vec<Vec<Expr>>> = sel.iter().map(|s| s.w1.clone()).collect();
    b.trace_cube("w'", &w1);
    let z: Vec<Expr> = sel.iter().map(|s| s.z.clone()).collect();
    b.trace_vec("z", &z);
    let z1: Vec<Vec<Expr>> = sel.iter().map(|s| s.z1.clone()).collect();
    b.trace_mat("z'", &z1);
    let mut out = z;
    out.extend(z1.into_iter().flatten());
    b.finish(&out)
}

/// Counts and conditions of the outward-edge characterisation for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct OutwardCheckTrace {
    pub in_count: usize,
    pub out_count: usize,
    pub before: bool,
    pub label_match: bool,
    pub balanced: bool,
    pub largest: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("position out of range: {0}")]
pub struct PositionOutOfRange(pub usize);

/// Is `t_i` the outward edge of `t_ℓ`? Positions are 1-based.
pub fn outward_predicate(
    e: &EulerString,
    l: usize,
    i: usize,
) -> Result<(bool, OutwardCheckTrace), PositionOutOfRange> {
    let t = e.symbols();
    let m = e.alphabet() as u64;
    for p in [l, i] {
        if p == 0 || p > t.len() {
            return Err(PositionOutOfRange(p));
        }
    }
    let basic = |l: usize| -> (bool, bool, bool, usize, usize) {
        let before = l < i;
        let (mut ins, mut outs) = (0, 0);
        if before {
            for &s in &t[l..i - 1] {
                if s <= m {
                    ins += 1;
                } else {
                    outs += 1;
                }
            }
        }
        let label_match = t[l - 1] <= m && t[i - 1] == t[l - 1] + m;
        (before, label_match, ins == outs, ins, outs)
    };
    let (before, label_match, balanced, in_count, out_count) = basic(l);
    let holds = |l: usize| {
        let (a, b, c, _, _) = basic(l);
        a && b && c
    };
    let largest = holds(l) && (l + 1..i).all(|k| !holds(k));
    let trace = OutwardCheckTrace {
        in_count,
        out_count,
        before,
        label_match,
        balanced,
        largest,
    };
    Ok((before && label_match && balanced && largest, trace))
}
