//! Unified network: real inputs on a `Δ` grid select up to `d` deletions, substitutions and
//! insertions, applied in that order.
//!
//! Input slots (zero-based, `d` each): deletion positions, substitution positions, substitution
//! values, insertion parents, lower bounds, upper bounds, insertion labels.

use thiserror::Error;

use crate::delete::{self, apply_delete_reference, td_stage};
use crate::edit::{apply_subst_reference, EditError};
use crate::insert::{insert_ops, insert_reference_symbols, ti_stage};
use crate::locate::{self, Constants};
use crate::relu::{rational_gcd, BuildError, Coef, Expr, NetBuilder, ReluNetwork};
use crate::subst::{subst_ops, ts_stage};
use crate::tree::{EulerString, LabeledTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InputError {
    #[error("expected {expected} inputs, found {found}")]
    Width { expected: usize, found: usize },
    #[error("input {index} = {value} is not a multiple of {delta} in [0, 1)")]
    NotOnGrid {
        index: usize,
        value: String,
        delta: String,
    },
    #[error(transparent)]
    Edit(#[from] EditError),
}

/// Slot kinds of the `7d` inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Position,
    Value,
}

/// Grid and interval layout for discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscretizationConfig {
    pub n: usize,
    pub m: u32,
    pub delta: Coef,
}

impl DiscretizationConfig {
    /// Checks that every position and value class contains a grid point below 1.
    pub fn new(n: usize, m: u32, delta: Coef) -> Result<DiscretizationConfig, BuildError> {
        let widest = Coef::from(n.max(m as usize).max(1));
        if delta <= Coef::ZERO || delta * widest >= Coef::ONE {
            return Err(BuildError::CoarseGrid(delta.to_string(), n, m));
        }
        Ok(DiscretizationConfig { n, m, delta })
    }

    /// Common grid of the inputs and all interval endpoints.
    pub fn grid(&self) -> Coef {
        let g = rational_gcd(self.delta, Coef::frac(1, self.n.max(1) as i128));
        rational_gcd(g, Coef::frac(1, self.m as i128))
    }

    /// Multiplier that turns every on-grid input into an integer.
    pub fn input_scale(&self) -> i64 {
        self.delta.denom() as i64
    }

    /// Checks `x` is `kΔ` with `0 ≤ x < 1` and returns `k`.
    pub fn grid_index(&self, x: Coef) -> Option<i64> {
        let k = x / self.delta;
        (k.is_integer() && !x.is_negative() && x < Coef::ONE).then(|| k.numer() as i64)
    }

    /// Smallest grid point in the class of `v` (a position in `0..=n` or a label in `1..=m`).
    pub fn representative(&self, kind: SlotKind, v: i64) -> Coef {
        let (floor, parts) = match kind {
            SlotKind::Position if v == 0 => return Coef::ZERO,
            SlotKind::Value if v <= 1 => return Coef::ZERO,
            SlotKind::Position => (v - 1, self.n),
            SlotKind::Value => (v - 1, self.m as usize),
        };
        let edge = Coef::frac(floor as i128, parts as i128) / self.delta;
        let k = edge.numer().div_euclid(edge.denom()) + 1;
        self.delta * Coef::int(k)
    }
}

/// Kind of each of the `7d` slots.
pub fn slot_kinds(d: usize) -> Vec<SlotKind> {
    (0..7 * d)
        .map(|j| {
            if (2 * d..3 * d).contains(&j) || j >= 6 * d {
                SlotKind::Value
            } else {
                SlotKind::Position
            }
        })
        .collect()
}

/// Integer class of an on-grid input: `((i−1)/n, i/n] → i` for positions, `[0, 1/m] → 1` and
/// `((ℓ−1)/m, ℓ/m] → ℓ` for values.
pub fn discretize(x: Coef, kind: SlotKind, cfg: &DiscretizationConfig) -> Result<i64, InputError> {
    if cfg.grid_index(x).is_none() {
        return Err(InputError::NotOnGrid {
            index: 0,
            value: x.to_string(),
            delta: cfg.delta.to_string(),
        });
    }
    let ceil = |parts: usize| {
        let y = x * Coef::from(parts);
        y.numer().div_euclid(y.denom()) as i64 + i64::from(!y.is_integer())
    };
    Ok(match kind {
        SlotKind::Position => ceil(cfg.n),
        SlotKind::Value => ceil(cfg.m as usize).max(1),
    })
}

/// Discretizes all `7d` inputs.
pub fn discretize_all(
    x: &[Coef],
    d: usize,
    cfg: &DiscretizationConfig,
) -> Result<Vec<i64>, InputError> {
    if x.len() != 7 * d {
        return Err(InputError::Width {
            expected: 7 * d,
            found: x.len(),
        });
    }
    x.iter()
        .zip(slot_kinds(d))
        .enumerate()
        .map(|(index, (&v, kind))| {
            discretize(v, kind, cfg).map_err(|e| match e {
                InputError::NotOnGrid { value, delta, .. } => InputError::NotOnGrid {
                    index,
                    value,
                    delta,
                },
                other => other,
            })
        })
        .collect()
}

/// Integer form of the filter: over-budget operations are masked to `big_b` together with
/// their companions. Value slots of substitutions pass through.
pub fn budget_filter(p: &[i64], d: usize, big_b: i64) -> Vec<i64> {
    let mut weight = vec![0i64; 7 * d];
    for seg in [0, d] {
        for j in seg..seg + d {
            let fresh = p[j] != 0 && !p[seg..j].contains(&p[j]);
            weight[j] = i64::from(fresh);
        }
    }
    for h in 0..d {
        weight[3 * d + h] = (d - h) as i64;
    }
    let mut masked = vec![false; 7 * d];
    let mut run = 0;
    for j in 0..2 * d {
        run += weight[j];
        masked[j] = run > d as i64;
    }
    for j in 3 * d..4 * d {
        masked[j] = run + weight[j] > d as i64;
    }
    let mut out = p.to_vec();
    for j in (0..2 * d).chain(3 * d..4 * d) {
        if masked[j] {
            out[j] = big_b;
        }
    }
    for j in 4 * d..7 * d {
        if masked[3 * d + (j - 4 * d) % d] {
            out[j] = big_b;
        }
    }
    out
}

/// Unified network with the default grid `Δ = 1/100`.
pub fn build_te(e: &EulerString, d: usize) -> Result<ReluNetwork, BuildError> {
    build_te_with(e, d, Coef::frac(1, 100))
}

/// Unified network on `7d` inputs in `[0, 1)` with `2n + 2d` outputs over `Σ ∪ {B}`.
pub fn build_te_with(e: &EulerString, d: usize, delta: Coef) -> Result<ReluNetwork, BuildError> {
    if d == 0 {
        return Err(BuildError::ZeroBudget);
    }
    let (n, m) = (e.edges(), e.alphabet());
    let cfg = DiscretizationConfig::new(n, m, delta)?;
    let k = Constants::new(n, m, d);
    let big_b = k.big_b;
    let bb = Coef::from(big_b);
    let g = cfg.grid();
    let one = Coef::ONE;
    let mut b = NetBuilder::new(vec![(Coef::ZERO, one - delta); 7 * d], Coef::from(k.big_c));
    b.set_input_scale(cfg.input_scale());
    let x = b.inputs();
    let kinds = slot_kinds(d);

    // Step 1: integer classes
    let mut pos_cls = vec![vec![Expr::zero(); n + 1]; 7 * d];
    let mut val_cls = vec![vec![Expr::zero(); m as usize]; 7 * d];
    let mut p1 = vec![Expr::zero(); 7 * d];
    let mut q1 = vec![Expr::zero(); 7 * d];
    for j in 0..7 * d {
        match kinds[j] {
            SlotKind::Position => {
                let cls: Vec<Expr> = (0..=n)
                    .map(|i| {
                        let (lo, hi) = (
                            Coef::frac(i as i128 - 1, n as i128),
                            Coef::frac(i as i128, n as i128),
                        );
                        b.interval_open_left(&x[j], lo, hi, g)
                            .tightened(Coef::ZERO, one)
                    })
                    .collect();
                p1[j] = Expr::sum(
                    cls.iter()
                        .enumerate()
                        .map(|(i, c)| c.scale(i as i64))
                        .collect::<Vec<_>>()
                        .iter(),
                )
                .tightened(Coef::ZERO, Coef::from(n));
                pos_cls[j] = cls;
            }
            SlotKind::Value => {
                let cls: Vec<Expr> = (1..=m as i64)
                    .map(|l| {
                        let (lo, hi) = (
                            Coef::frac(l as i128 - 1, m as i128),
                            Coef::frac(l as i128, m as i128),
                        );
                        if l == 1 {
                            b.interval(&x[j], lo, hi, g)
                        } else {
                            b.interval_open_left(&x[j], lo, hi, g)
                                .tightened(Coef::ZERO, one)
                        }
                    })
                    .collect();
                q1[j] = Expr::sum(
                    cls.iter()
                        .enumerate()
                        .map(|(i, c)| c.scale(i as i64 + 1))
                        .collect::<Vec<_>>()
                        .iter(),
                )
                .tightened(one, Coef::from(m));
                val_cls[j] = cls;
            }
        }
    }

    // Step 2: running operation count
    let mut r = vec![Expr::zero(); 7 * d];
    for seg in [0, d] {
        for j in seg..seg + d {
            let mut hits = vec![b.delta_c(&p1[j], 0)];
            hits.extend((seg..j).map(|k| b.delta(&p1[j], &p1[k])));
            r[j] = b
                .relu(&(Expr::constant(1) - Expr::sum(hits.iter())))
                .tightened(Coef::ZERO, one);
        }
    }
    for h in 0..d {
        let j = 3 * d + h;
        let used: Vec<Expr> = (3 * d..=j).map(|k| b.step(&p1[k])).collect();
        r[j] = (Expr::constant(d as i64 + 1) - Expr::sum(used.iter()))
            .tightened(Coef::ZERO, Coef::from(d));
    }
    let over = Coef::from(d as i64 + 1);
    let mut r1 = vec![Expr::zero(); 7 * d];
    let mut run = Expr::zero();
    for j in 0..2 * d {
        run = run + &r[j];
        r1[j] = b.ge(&run, over, one);
    }
    for j in 3 * d..4 * d {
        r1[j] = b.ge(&(&run + &r[j]), over, one);
    }

    // Step 3: mask over-budget slots
    let mut s = vec![Expr::zero(); 7 * d];
    for j in (0..2 * d).chain(3 * d..4 * d) {
        let v = b.gate(&Expr::constant(bb), &r1[j], "S") + b.mask(&p1[j], &r1[j], "S");
        s[j] = v.tightened(Coef::ZERO, bb);
    }
    let mut s1 = vec![Expr::zero(); 7 * d];
    for j in 4 * d..7 * d {
        let c = 3 * d + (j - 4 * d) % d;
        let dropped = b.delta_c(&s[c], big_b);
        let val = if kinds[j] == SlotKind::Value {
            &q1[j]
        } else {
            &p1[j]
        };
        let v = b.gate(&Expr::constant(bb), &dropped, "S'") + b.mask(val, &dropped, "S'");
        s1[j] = v.tightened(Coef::ZERO, bb);
    }
    let xp: Vec<Expr> = (0..7 * d)
        .map(|j| match j {
            _ if j < 2 * d => s[j].clone(),
            _ if j < 3 * d => q1[j].clone(),
            _ if j < 4 * d => s[j].clone(),
            _ => s1[j].clone(),
        })
        .collect();
    b.trace_mat("P", &pos_cls);
    b.trace_mat("Q", &val_cls);
    b.trace_vec("P'", &p1);
    b.trace_vec("Q'", &q1);
    b.trace_vec("R", &r);
    b.trace_vec("R'", &r1);
    b.trace_vec("S", &s);
    b.trace_vec("S'", &s1);
    b.trace_vec("x'", &xp);

    // Step 4: delete, substitute, insert
    let two_n = 2 * n as i64;
    let t = locate::symbol_exprs(&delete::padded(e, d, big_b));
    b.set_prefix("td.");
    let td = td_stage(&mut b, &t, m, two_n, big_b, d, &xp[..d]);
    b.set_prefix("ts.");
    let ts = ts_stage(&mut b, &td.y, m, two_n, &xp[d..2 * d], &xp[2 * d..3 * d]);
    b.set_prefix("ti.");
    let ti = ti_stage(
        &mut b,
        &ts.u,
        m,
        two_n,
        &xp[3 * d..4 * d],
        &xp[4 * d..5 * d],
        &xp[5 * d..6 * d],
        &xp[6 * d..],
    );
    b.set_prefix("");
    let y: Vec<Expr> =
        ti.u.iter()
            .map(|u| {
                let excess = b.relu(&u.plus_const(-big_b));
                (u - &excess).tightened(Coef::ZERO, bb)
            })
            .collect();
    b.trace_vec("y", &y);
    b.finish(&y)
}

/// Reference pipeline on filtered integers `x'`: the `2n + 2d` output symbols.
pub fn te_reference_filtered(
    tree: &LabeledTree,
    xp: &[i64],
    d: usize,
    big_b: i64,
) -> Result<Vec<u64>, EditError> {
    let n = tree.edges();
    let m = tree.alphabet();
    let dels: Vec<usize> = delete::delete_ops(&xp[..d])
        .into_iter()
        .filter(|&v| v <= n)
        .collect();
    let t1 = apply_delete_reference(tree, &dels)?;
    let n1 = t1.edges();
    let subs: Vec<(usize, u32)> = subst_ops(&xp[d..3 * d], d)
        .into_iter()
        .filter(|&(v, _)| v <= n1)
        .collect();
    let t2 = apply_subst_reference(&t1, &subs)?;
    let mut symbols = t2.euler().into_symbols();
    symbols.resize(2 * n, big_b as u64);
    let out = insert_reference_symbols(&symbols, m, &insert_ops(&xp[3 * d..], d));
    Ok(out.into_iter().map(|s| s.min(big_b as u64)).collect())
}

/// Reference result of the unified network on raw inputs.
pub fn te_reference(
    tree: &LabeledTree,
    x: &[Coef],
    d: usize,
    delta: Coef,
) -> Result<Vec<u64>, InputError> {
    let (n, m) = (tree.edges(), tree.alphabet());
    let cfg = DiscretizationConfig::new(n, m, delta).map_err(|_| InputError::NotOnGrid {
        index: 0,
        value: delta.to_string(),
        delta: delta.to_string(),
    })?;
    let big_b = Constants::new(n, m, d).big_b;
    let xp = budget_filter(&discretize_all(x, d, &cfg)?, d, big_b);
    Ok(te_reference_filtered(tree, &xp, d, big_b)?)
}

/// Grid inputs that discretize to the integer vector `p` (positions and labels per slot).
pub fn grid_inputs(p: &[i64], d: usize, cfg: &DiscretizationConfig) -> Vec<Coef> {
    p.iter()
        .zip(slot_kinds(d))
        .map(|(&v, kind)| cfg.representative(kind, v))
        .collect()
}
