//! Insertion network: add `d` new children, each adopting a run of its parent's children.
//!
//! Positions are 1-based in the comments; vectors indexed by `ℓ` keep slot 0 for the root.

use crate::locate::{self, Constants};
use crate::relu::{BuildError, Coef, Expr, NetBuilder, ReluNetwork};
use crate::tree::{decode_euler, EulerError, EulerString, LabeledTree};

/// One insertion: parent DFS index, child bounds and the new label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct InsertOp {
    pub parent: i64,
    pub lower: i64,
    pub upper: i64,
    pub label: i64,
}

/// Splits a flat `x¹‖x²‖x³‖x⁴` input into operations.
pub fn insert_ops(x: &[i64], d: usize) -> Vec<InsertOp> {
    (0..d)
        .map(|j| InsertOp {
            parent: x[j],
            lower: x[j + d],
            upper: x[j + 2 * d],
            label: x[j + 3 * d],
        })
        .collect()
}

/// Key of the parent (its inward position, 0 for the root), its child count and raw bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundQuery {
    pub parent: usize,
    pub count: i64,
    pub lower: i64,
    pub upper: i64,
}

/// Refined `(lower, upper)` for every operation, following `Q¹..Q³` and `P¹..P⁶` in order.
pub fn refine_bounds(ops: &[BoundQuery]) -> Vec<(i64, i64)> {
    let d = ops.len();
    let h = |x: i64| x >= 0;
    let same = |j: usize, k: usize| ops[j].parent == ops[k].parent;
    let q1: Vec<i64> = ops
        .iter()
        .map(|o| if h(o.count - o.lower) { o.lower } else { 0 })
        .collect();
    let p1: Vec<i64> = ops
        .iter()
        .map(|o| if h(o.count - o.upper) { o.upper } else { 0 })
        .collect();
    let p2: Vec<i64> = (0..d)
        .map(|j| if h(q1[j] - p1[j] - 1) { 0 } else { p1[j] })
        .collect();
    let p3: Vec<i64> = (0..d)
        .map(|j| {
            if (j + 1..d).any(|k| same(j, k) && h(p2[j] - q1[k] - 1)) {
                0
            } else {
                p2[j]
            }
        })
        .collect();
    let p4: Vec<i64> = (0..d)
        .map(|j| {
            if (0..j).any(|k| same(j, k) && q1[j] == p3[k]) {
                0
            } else {
                p3[j]
            }
        })
        .collect();
    let q2: Vec<i64> = (0..d)
        .map(|j| {
            if (j + 1..d).any(|k| same(j, k) && h(q1[j] - q1[k] - 1)) {
                0
            } else {
                q1[j]
            }
        })
        .collect();
    let p5: Vec<i64> = (0..d)
        .map(|j| {
            if (0..d).any(|k| k != j && same(j, k) && q2[j] == q2[k] && h(p4[j] - q2[j] - 1)) {
                0
            } else {
                p4[j]
            }
        })
        .collect();
    let p6: Vec<i64> = (0..d).map(|j| if q2[j] == 0 { 0 } else { p5[j] }).collect();
    let q3: Vec<i64> = (0..d)
        .map(|j| {
            if p6[j] == 0 && q2[j] >= 1 {
                q2[j] + 1
            } else {
                q2[j]
            }
        })
        .collect();
    q3.into_iter().zip(p6).collect()
}

/// Structure of the real prefix of a (possibly sentinel-padded) string.
struct Shape {
    /// Inward position of each vertex by DFS index; index 0 is the root at position 0.
    inward: Vec<usize>,
    /// Children of each inward position (0 = root) as `(inward, outward)` positions.
    children: Vec<Vec<(usize, usize)>>,
}

fn shape(symbols: &[u64], m: u64) -> Shape {
    let real = symbols.iter().take_while(|&&s| s <= 2 * m).count();
    let mut inward = vec![0];
    let mut children = vec![Vec::new(); real + 1];
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    for (i, &s) in symbols[..real].iter().enumerate() {
        let pos = i + 1;
        if s <= m {
            inward.push(pos);
            let parent = stack.last().map_or(0, |p| p.0);
            stack.push((pos, parent));
        } else if let Some((open, parent)) = stack.pop() {
            if open != 0 {
                children[parent].push((open, pos));
            } else {
                stack.push((0, 0));
            }
        }
    }
    Shape { inward, children }
}

/// Positions before which each operation's inward and outward symbols go: `(L, L'')`.
pub fn insertion_points(symbols: &[u64], m: u32, ops: &[InsertOp]) -> Vec<(usize, usize)> {
    let sh = shape(symbols, m as u64);
    let q: Vec<usize> = ops
        .iter()
        .map(|o| {
            if o.parent >= 1 && (o.parent as usize) < sh.inward.len() {
                sh.inward[o.parent as usize]
            } else {
                0
            }
        })
        .collect();
    let queries: Vec<BoundQuery> = ops
        .iter()
        .zip(&q)
        .map(|(o, &qj)| BoundQuery {
            parent: qj,
            count: sh.children[qj].len() as i64,
            lower: o.lower,
            upper: o.upper,
        })
        .collect();
    let refined = refine_bounds(&queries);
    q.iter()
        .zip(refined)
        .map(|(&qj, (lo, up))| {
            let kids = &sh.children[qj];
            let (lo, up) = (lo as usize, up as usize);
            let l = if lo == 0 {
                qj + 1
            } else if lo <= kids.len() {
                kids[lo - 1].0
            } else {
                kids.last().map_or(qj + 1, |c| c.1 + 1)
            };
            let l1 = if up == 0 { qj } else { kids[up - 1].1 };
            let l2 = if l >= l1 { l } else { l1 + 1 };
            (l, l2)
        })
        .collect()
}

/// Splices the new symbols into `symbols` (which may carry a sentinel tail).
///
/// Symbols sharing a position are ordered by the stable rank of `L`, inward before outward.
pub fn insert_reference_symbols(symbols: &[u64], m: u32, ops: &[InsertOp]) -> Vec<u64> {
    let points = insertion_points(symbols, m, ops);
    let mut order: Vec<usize> = (0..ops.len()).collect();
    order.sort_by_key(|&j| points[j].0);
    let mut rank = vec![0; ops.len()];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r;
    }
    let mut out = Vec::with_capacity(symbols.len() + 2 * ops.len());
    for p in 1..=symbols.len() + 1 {
        let mut here: Vec<(usize, u8, u64)> = Vec::new();
        for (j, &(l, l2)) in points.iter().enumerate() {
            let label = ops[j].label as u64;
            if l == p {
                here.push((rank[j], 0, label));
            }
            if l2 == p {
                here.push((rank[j], 1, label + m as u64));
            }
        }
        here.sort();
        out.extend(here.into_iter().map(|h| h.2));
        if p <= symbols.len() {
            out.push(symbols[p - 1]);
        }
    }
    out
}

/// Reference insertion on a tree; parents outside the tree attach to the root.
pub fn apply_insert_reference(
    tree: &LabeledTree,
    ops: &[InsertOp],
) -> Result<LabeledTree, EulerError> {
    let m = tree.alphabet();
    decode_euler(&insert_reference_symbols(tree.euler().symbols(), m, ops), m)
}

/// Output of one insertion stage, plus the handful of wires other code inspects.
#[derive(Debug, Clone)]
pub struct TiWires {
    pub q: Vec<Expr>,
    pub count: Vec<Expr>,
    pub l: Vec<Expr>,
    pub l2: Vec<Expr>,
    pub u: Vec<Expr>,
}

fn stable_rank(b: &mut NetBuilder, v: &[Expr]) -> Vec<Expr> {
    let len = v.len();
    (0..len)
        .map(|j| {
            let below: Vec<Expr> = (0..len).map(|k| b.step(&(&v[j] - &v[k]))).collect();
            let ties: Vec<Expr> = (j..len).map(|k| b.delta(&v[k], &v[j])).collect();
            let e = Expr::sum(below.iter()) - Expr::sum(ties.iter());
            b.relu(&e).tightened(Coef::ZERO, Coef::from(len as i64 - 1))
        })
        .collect()
}

/// `out_i = Σ_k v_k · [rank_k = i]`: the values of `v` listed in rank order.
fn by_rank(b: &mut NetBuilder, v: &[Expr], onehot: &[Vec<Expr>], what: &str) -> Vec<Expr> {
    let lo = v
        .iter()
        .map(|e| e.range().0)
        .fold(Coef::from(i64::MAX), Coef::min);
    let hi = v.iter().map(|e| e.range().1).fold(Coef::ZERO, Coef::max);
    (0..v.len())
        .map(|i| {
            let parts: Vec<Expr> = (0..v.len())
                .map(|k| b.gate(&v[k], &onehot[k][i], what))
                .collect();
            Expr::sum(parts.iter()).tightened(lo, hi)
        })
        .collect()
}

fn onehot(b: &mut NetBuilder, rank: &[Expr]) -> Vec<Vec<Expr>> {
    rank.iter()
        .map(|r| (0..rank.len()).map(|i| b.delta_c(r, i as i64)).collect())
        .collect()
}

/// Insertion over `t` (length `len`, sentinels allowed at the tail) with `len + 2d` outputs.
#[allow(clippy::too_many_arguments)]
pub fn ti_stage(
    b: &mut NetBuilder,
    t: &[Expr],
    m: u32,
    two_n: i64,
    x1: &[Expr],
    x2: &[Expr],
    x3: &[Expr],
    x4: &[Expr],
) -> TiWires {
    let len = t.len();
    let half = len / 2;
    let d = x1.len();
    let one = Coef::ONE;
    let lenc = Coef::from(len);

    // Step 1: inward position of each parent, outward position of each inward edge
    let (p, _, p2) = locate::inward_ranks(b, t, m, two_n);
    let qji: Vec<Vec<Expr>> = x1
        .iter()
        .map(|xj| p2.iter().map(|pi| b.delta(pi, xj)).collect())
        .collect();
    let q: Vec<Expr> = qji
        .iter()
        .map(|row| {
            Expr::sum(
                row.iter()
                    .enumerate()
                    .map(|(i, e)| e.scale(i as i64 + 1))
                    .collect::<Vec<_>>()
                    .iter(),
            )
            .tightened(Coef::ZERO, lenc)
        })
        .collect();
    let core = locate::outward_core(b, t, &p, m);
    let mut bpos = Vec::with_capacity(len + 1);
    let real: Vec<Expr> = t
        .iter()
        .map(|ti| b.le(ti, Coef::from(2 * m), one))
        .collect();
    bpos.push(
        Expr::sum(real.iter())
            .plus_const(1)
            .tightened(one, lenc + one),
    );
    for l in 0..len {
        let e = Expr::sum(
            core.w[l]
                .iter()
                .enumerate()
                .map(|(i, w)| w.scale(i as i64 + 1))
                .collect::<Vec<_>>()
                .iter(),
        );
        bpos.push(e.tightened(Coef::ZERO, lenc));
    }

    // Step 2: adjacency and child counts
    // inside[k][i]: position i+1 lies strictly inside the span of the inward edge at k
    let mut inside = vec![vec![Expr::zero(); len]; len + 1];
    for (k, row) in inside.iter_mut().enumerate() {
        for i in k..len {
            row[i] = b.step(&bpos[k].plus_const(-(i as i64 + 2)));
        }
    }
    let mut adj = vec![vec![Expr::zero(); len]; len + 1];
    for l in 0..=len {
        for i in l..len {
            let nested = Expr::sum((l + 1..=i).map(|k| &inside[k][i]));
            adj[l][i] = b
                .relu(&(&inside[l][i] - &nested))
                .tightened(Coef::ZERO, one);
        }
    }
    let a: Vec<Expr> = adj
        .iter()
        .map(|row| {
            Expr::sum(row.iter())
                .scale(Coef::frac(1, 2))
                .tightened(Coef::ZERO, Coef::from(half))
        })
        .collect();
    let da: Vec<Vec<Expr>> = (1..=half)
        .map(|k| a.iter().map(|al| b.delta_c(al, k as i64)).collect())
        .collect();
    let dq: Vec<Vec<Expr>> = q
        .iter()
        .map(|qj| (0..=len).map(|l| b.delta_c(qj, l as i64)).collect())
        .collect();
    let mut count = Vec::with_capacity(d);
    for dqj in &dq {
        let mut parts = Vec::new();
        for (k, dak) in da.iter().enumerate() {
            for l in 0..=len {
                parts.push(b.and(&dak[l], &dqj[l]).scale(k as i64 + 1));
            }
        }
        count.push(Expr::sum(parts.iter()).tightened(Coef::ZERO, Coef::from(half)));
    }

    // Step 3: bound refinement
    let halfc = Coef::from(half);
    let mut q1 = Vec::with_capacity(d);
    let mut p1 = Vec::with_capacity(d);
    for j in 0..d {
        let ok = b.step(&(&count[j] - &x2[j]));
        q1.push(b.gate(&x2[j], &ok, "Q^1").tightened(Coef::ZERO, halfc));
        let ok = b.step(&(&count[j] - &x3[j]));
        p1.push(b.gate(&x3[j], &ok, "P^1").tightened(Coef::ZERO, halfc));
    }
    let mut same = vec![vec![Expr::zero(); d]; d];
    for j in 0..d {
        for k in j + 1..d {
            let e = b.delta(&q[j], &q[k]);
            same[j][k] = e.clone();
            same[k][j] = e;
        }
    }
    let p2r: Vec<Expr> = (0..d)
        .map(|j| {
            let bad = b.step(&(&q1[j] - &p1[j]).plus_const(-1));
            b.mask(&p1[j], &bad, "P^2")
        })
        .collect();
    let p3r: Vec<Expr> = (0..d)
        .map(|j| {
            let hits: Vec<Expr> = (j + 1..d)
                .map(|k| {
                    let over = b.step(&(&p2r[j] - &q1[k]).plus_const(-1));
                    b.and(&same[j][k], &over)
                })
                .collect();
            b.mask(&p2r[j], &Expr::sum(hits.iter()), "P^3")
        })
        .collect();
    let p4r: Vec<Expr> = (0..d)
        .map(|j| {
            let hits: Vec<Expr> = (0..j)
                .map(|k| {
                    let eq = b.delta(&q1[j], &p3r[k]);
                    b.and(&same[j][k], &eq)
                })
                .collect();
            b.mask(&p3r[j], &Expr::sum(hits.iter()), "P^4")
        })
        .collect();
    let q2: Vec<Expr> = (0..d)
        .map(|j| {
            let hits: Vec<Expr> = (j + 1..d)
                .map(|k| {
                    let over = b.step(&(&q1[j] - &q1[k]).plus_const(-1));
                    b.and(&same[j][k], &over)
                })
                .collect();
            b.mask(&q1[j], &Expr::sum(hits.iter()), "Q^2")
        })
        .collect();
    let p5r: Vec<Expr> = (0..d)
        .map(|j| {
            let above = b.step(&(&p4r[j] - &q2[j]).plus_const(-1));
            let hits: Vec<Expr> = (0..d)
                .filter(|&k| k != j)
                .map(|k| {
                    let eq = b.delta(&q2[j], &q2[k]);
                    b.and_all(&[&same[j][k], &eq, &above])
                })
                .collect();
            b.mask(&p4r[j], &Expr::sum(hits.iter()), "P^5")
        })
        .collect();
    let p6r: Vec<Expr> = (0..d)
        .map(|j| {
            let zero = b.delta_c(&q2[j], 0);
            b.mask(&p5r[j], &zero, "P^6")
        })
        .collect();
    let mut q3 = Vec::with_capacity(d);
    let mut cflag = Vec::with_capacity(d);
    for j in 0..d {
        let leaf = b.delta_c(&p6r[j], 0);
        let pos = b.step(&q2[j].plus_const(-1));
        let c = b.and(&leaf, &pos);
        let bumped = b.gate(&q2[j].plus_const(1), &c, "Q^3");
        let kept = b.mask(&q2[j], &c, "Q^3");
        q3.push((bumped + kept).tightened(Coef::ZERO, halfc + one));
        cflag.push(c);
    }

    // Step 4: positions of the k-th child's inward (G) and outward (G') edges
    let halfg = Coef::frac(1, 2);
    let mut f = vec![vec![Expr::zero(); len]; len + 1];
    for l in 0..=len {
        let mut acc = Expr::zero();
        for i in 0..len {
            acc = acc + &adj[l][i].scale(halfg);
            let off = b.delta_c(&adj[l][i], 0);
            f[l][i] = b.mask(&acc, &off, "F").tightened(Coef::ZERO, halfc);
        }
    }
    let weighted = |b: &mut NetBuilder, row: &[Expr], k: i64, shift: Coef| -> Expr {
        let parts: Vec<Expr> = row
            .iter()
            .enumerate()
            .map(|(i, fi)| {
                b.delta_g(&fi.plus_const(shift), &Expr::constant(k), halfg)
                    .scale(i as i64 + 1)
            })
            .collect();
        Expr::sum(parts.iter()).tightened(Coef::ZERO, lenc)
    };
    // g[k][ℓ] for k in 1..=half+1 (slot 0 unused); g1[k][ℓ] for k in 0..=half with g1[0][ℓ] = ℓ
    let mut g = vec![vec![Expr::zero(); len + 1]; half + 2];
    let mut g1 = vec![vec![Expr::zero(); len + 1]; half + 1];
    for l in 0..=len {
        g1[0][l] = Expr::constant(l as i64);
        for k in 1..=half + 1 {
            g[k][l] = weighted(b, &f[l], k as i64, halfg);
        }
        for k in 1..=half {
            g1[k][l] = weighted(b, &f[l], k as i64, Coef::ZERO);
        }
    }
    let mut g2 = vec![vec![Expr::zero(); len + 1]; half + 2];
    for k in 1..=half + 1 {
        for l in 0..=len {
            let none = b.delta_c(&g[k][l], 0);
            let after = b.gate(&g1[k - 1][l].plus_const(1), &none, "G''");
            g2[k][l] = (&g[k][l] + &after).tightened(Coef::ZERO, lenc + one);
        }
    }
    // J^k_{ℓj} and J'^k_{ℓj}, indexed [k][ℓ][j]
    let jj: Vec<Vec<Vec<Expr>>> = (0..=half + 1)
        .map(|k| {
            (0..=len)
                .map(|l| {
                    (0..d)
                        .map(|j| {
                            if k == 0 {
                                q[j].plus_const(1)
                            } else {
                                g2[k][l].clone()
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let jj1: Vec<Vec<Vec<Expr>>> = (0..=half)
        .map(|k| {
            (0..=len)
                .map(|l| {
                    (0..d)
                        .map(|j| {
                            if k == 0 {
                                q[j].clone()
                            } else {
                                g1[k][l].clone()
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    // Step 5: insertion points of the new inward (L) and outward (L'') edges
    let mut l_in = Vec::with_capacity(d);
    let mut l_out = Vec::with_capacity(d);
    let mut l2 = Vec::with_capacity(d);
    for j in 0..d {
        let mut parts = Vec::new();
        for (k, jk) in jj.iter().enumerate() {
            let dk = b.delta_c(&q3[j], k as i64);
            for l in 0..=len {
                let sel = b.and(&dq[j][l], &dk);
                parts.push(b.gate(&jk[l][j], &sel, "L"));
            }
        }
        let lj = Expr::sum(parts.iter()).tightened(one, lenc + one);
        let mut parts = Vec::new();
        for (k, jk) in jj1.iter().enumerate() {
            let dk = b.delta_c(&p6r[j], k as i64);
            for l in 0..=len {
                let sel = b.and(&dq[j][l], &dk);
                parts.push(b.gate(&jk[l][j], &sel, "L'"));
            }
        }
        let lj1 = Expr::sum(parts.iter()).tightened(Coef::ZERO, lenc);
        let h = b.step(&(&lj - &lj1));
        let kept = b.gate(&lj, &h, "L''");
        let moved = b.mask(&lj1.plus_const(1), &h, "L''");
        l2.push((kept + moved).tightened(one, lenc + one));
        l_in.push(lj);
        l_out.push(lj1);
    }

    // Step 6: sort the operations by L
    let rank = stable_rank(b, &l_in);
    let oh = onehot(b, &rank);
    let r1 = by_rank(b, &l_in, &oh, "R'");
    let r2 = by_rank(b, &l2, &oh, "R''");
    let x41 = by_rank(b, x4, &oh, "x'^4");

    // Step 7: shifted copies of the original symbols
    let mut inc = Vec::with_capacity(len + 1);
    for i in 1..=len + 1 {
        let hits: Vec<Expr> = (0..d)
            .flat_map(|j| [b.delta_c(&r1[j], i as i64), b.delta_c(&r2[j], i as i64)])
            .collect();
        inc.push(Expr::sum(hits.iter()).tightened(Coef::ZERO, Coef::from(2 * d)));
    }
    let mut moved = Vec::with_capacity(len);
    let mut acc = Expr::zero();
    for i in 0..len {
        acc = acc + &inc[i];
        moved.push(
            acc.plus_const(i as i64 + 1)
                .tightened(Coef::from(i as i64 + 1), Coef::from((i + 1 + 2 * d) as i64)),
        );
    }
    let out_len = len + 2 * d;
    let mut nk = vec![vec![Expr::zero(); len]; 2 * d + 1];
    for (k, row) in nk.iter_mut().enumerate() {
        for i in 0..len {
            let at = b.delta_c(&moved[i], (i + k + 1) as i64);
            row[i] = b.gate(&t[i], &at, "N");
        }
    }
    let n1: Vec<Expr> = (0..out_len)
        .map(|h| {
            Expr::sum(
                (0..=2 * d)
                    .filter(|&k| k <= h && h - k < len)
                    .map(|k| &nk[k][h - k]),
            )
        })
        .collect();

    // Step 8: final positions of the new symbols
    let mut s = Vec::with_capacity(d);
    let mut s1 = Vec::with_capacity(d);
    let outc = Coef::from(out_len);
    for j in 0..d {
        let mut e = r1[j].plus_const(2 * j as i64);
        for k in 0..j {
            e = e - &b.step(&(&r2[k] - &r1[j])) + &b.delta(&r2[k], &r1[j]);
        }
        s.push(e.tightened(one, outc));
        let mut e = r2[j].plus_const(2 * d as i64);
        for k in j + 1..d {
            e = e - &b.step(&(&r1[k] - &r2[j]));
        }
        for k in 0..d {
            e = e - &b.step(&(&r2[k] - &r2[j]));
        }
        for k in 0..j {
            e = e + &b.delta(&r2[k], &r2[j]);
        }
        s1.push(e.tightened(one, outc));
    }

    // Step 9: sort the new symbols by position
    let v: Vec<Expr> = s.iter().chain(&s1).cloned().collect();
    let v1: Vec<Expr> = x41
        .iter()
        .cloned()
        .chain(x41.iter().map(|e| e.plus_const(m as i64)))
        .collect();
    let w = stable_rank(b, &v);
    let ohw = onehot(b, &w);
    let w1 = by_rank(b, &v, &ohw, "W'");
    let w2 = by_rank(b, &v1, &ohw, "W''");

    // Step 10: place them
    let mut z = vec![vec![Expr::zero(); len + 1]; 2 * d];
    for (k, row) in z.iter_mut().enumerate() {
        for (i, cell) in row.iter_mut().enumerate() {
            let at = b.delta_c(&w1[k], (i + k + 1) as i64);
            *cell = b.gate(&w2[k], &at, "Z");
        }
    }
    let z1: Vec<Expr> = (0..out_len)
        .map(|h| {
            Expr::sum(
                (0..2 * d)
                    .filter(|&k| k <= h && h - k <= len)
                    .map(|k| &z[k][h - k]),
            )
        })
        .collect();
    let hi = t
        .iter()
        .chain(&v1)
        .map(|e| e.range().1)
        .fold(Coef::from(2 * m as i64), Coef::max);
    let u: Vec<Expr> = n1
        .iter()
        .zip(&z1)
        .map(|(a, c)| (a + c).tightened(Coef::ZERO, hi))
        .collect();

    b.trace_mat("q", &qji);
    b.trace_vec("q_j", &q);
    b.trace_vec("b", &bpos);
    b.trace_mat("A", &adj);
    b.trace_vec("a", &a);
    b.trace_vec("D", &count);
    b.trace_vec("Q^1", &q1);
    b.trace_vec("P^1", &p1);
    b.trace_vec("P^2", &p2r);
    b.trace_vec("P^3", &p3r);
    b.trace_vec("P^4", &p4r);
    b.trace_vec("Q^2", &q2);
    b.trace_vec("P^5", &p5r);
    b.trace_vec("P^6", &p6r);
    b.trace_vec("Q^3", &q3);
    b.trace_mat("F", &f);
    b.trace_mat("G", &g[1..]);
    b.trace_mat("G'", &g1);
    b.trace_mat("G''", &g2[1..]);
    b.trace_cube("J", &jj);
    b.trace_cube("J'", &jj1);
    b.trace_vec("L", &l_in);
    b.trace_vec("L'", &l_out);
    b.trace_vec("L''", &l2);
    b.trace_vec("R", &rank);
    b.trace_vec("R'", &r1);
    b.trace_vec("R''", &r2);
    b.trace_vec("x'^4", &x41);
    b.trace_vec("M", &inc);
    b.trace_vec("M'", &moved);
    b.trace_mat("N", &nk);
    b.trace_vec("N'", &n1);
    b.trace_vec("S", &s);
    b.trace_vec("S'", &s1);
    b.trace_vec("V", &v);
    b.trace_vec("V'", &v1);
    b.trace_vec("W", &w);
    b.trace_vec("W'", &w1);
    b.trace_vec("W''", &w2);
    b.trace_mat("Z", &z);
    b.trace_vec("Z'", &z1);
    b.trace_vec("u", &u);
    TiWires {
        q,
        count,
        l: l_in,
        l2,
        u,
    }
}

/// Declared input ranges: parents and bounds in `[0, n]`, labels in `[1, m]`.
pub fn ti_input_ranges(n: usize, m: u32, d: usize) -> Vec<(Coef, Coef)> {
    let mut r = locate::position_inputs(n, 3 * d);
    r.extend(std::iter::repeat_n((Coef::ONE, Coef::from(m)), d));
    r
}

/// Insertion network on `4d` inputs with `2n + 2d` outputs.
pub fn build_ti(e: &EulerString, d: usize) -> Result<ReluNetwork, BuildError> {
    if d == 0 {
        return Err(BuildError::ZeroBudget);
    }
    let (n, m) = (e.edges(), e.alphabet());
    let k = Constants::new(n, m, d);
    let mut b = NetBuilder::new(ti_input_ranges(n, m, d), Coef::from(k.big_c));
    let x = b.inputs();
    let t = locate::symbol_exprs(e.symbols());
    let w = ti_stage(
        &mut b,
        &t,
        m,
        2 * n as i64,
        &x[..d],
        &x[d..2 * d],
        &x[2 * d..3 * d],
        &x[3 * d..],
    );
    b.finish(&w.u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(count: i64, lower: i64, upper: i64) -> (i64, i64) {
        refine_bounds(&[BoundQuery {
            parent: 0,
            count,
            lower,
            upper,
        }])[0]
    }

    #[test]
    fn single_refinements() {
        assert_eq!(one(1, 4, 2), (0, 0));
        assert_eq!(one(1, 1, 5), (2, 0));
        assert_eq!(one(3, 2, 3), (2, 3));
        assert_eq!(one(0, 0, 0), (0, 0));
    }

    #[test]
    fn example_points() {
        let e = [3, 2, 7, 2, 4, 9, 7, 4, 9, 8];
        let ops = insert_ops(&[1, 0, 3, 0, 2, 4, 1, 1, 3, 2, 5, 1, 4, 1, 3, 5], 4);
        let pts = insertion_points(&e, 5, &ops);
        assert_eq!(pts, vec![(4, 10), (1, 1), (7, 7), (1, 11)]);
        let u = insert_reference_symbols(&e, 5, &ops);
        assert_eq!(
            u,
            vec![1, 6, 5, 3, 2, 7, 4, 2, 4, 9, 3, 8, 7, 4, 9, 9, 8, 10]
        );
    }
}
