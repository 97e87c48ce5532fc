//! Symbolic network construction. Values are [`Expr`]s; every nonlinearity becomes a
//! ReLU unit, and [`NetBuilder::finish`] lays the units out in layers.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;

use super::coef::Coef;
use super::expr::{Expr, Src};
use super::network::{Layer, Readout, ReluNetwork, Wire, WireTrace};
use super::BuildError;

#[derive(Debug, Clone)]
struct Unit {
    expr: Expr,
    depth: u32,
    lo: Coef,
    hi: Coef,
}

#[derive(Debug, Clone)]
struct TraceEntry {
    name: String,
    shape: Vec<usize>,
    values: Vec<Expr>,
}

pub struct NetBuilder {
    inputs: Vec<(Coef, Coef)>,
    units: Vec<Unit>,
    memo: HashMap<(Vec<(Src, Coef)>, Coef), u32>,
    big_c: Coef,
    trace: Vec<TraceEntry>,
    names: HashSet<String>,
    prefix: String,
    contracts: Vec<Expr>,
    audit: Vec<String>,
    input_scale: i64,
}

impl NetBuilder {
    /// `inputs` are the declared per-coordinate ranges; `big_c` is the masking constant.
    pub fn new(inputs: Vec<(Coef, Coef)>, big_c: Coef) -> NetBuilder {
        NetBuilder {
            inputs,
            units: Vec::new(),
            memo: HashMap::new(),
            big_c,
            trace: Vec::new(),
            names: HashSet::new(),
            prefix: String::new(),
            contracts: Vec::new(),
            audit: Vec::new(),
            input_scale: 1,
        }
    }

    pub fn big_c(&self) -> Coef {
        self.big_c
    }

    /// Inputs are expected to be integer multiples of `1/scale`; the fast evaluator uses it.
    pub fn set_input_scale(&mut self, scale: i64) {
        self.input_scale = scale.max(1);
    }

    pub fn input(&self, i: usize) -> Expr {
        let (lo, hi) = self.inputs[i];
        Expr::src(Src::Input(i as u32), lo, hi)
    }

    pub fn inputs(&self) -> Vec<Expr> {
        (0..self.inputs.len()).map(|i| self.input(i)).collect()
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    fn depth_of(&self, e: &Expr) -> u32 {
        e.terms
            .iter()
            .map(|(s, _)| match *s {
                Src::Input(_) => 0,
                Src::Unit(u) => self.units[u as usize].depth,
            })
            .max()
            .unwrap_or(0)
    }

    /// `max(e, 0)`.
    pub fn relu(&mut self, e: &Expr) -> Expr {
        if let Some(c) = e.as_const() {
            return Expr::constant(c.relu());
        }
        if e.as_unit().is_some() {
            return e.clone();
        }
        let key = (e.terms.clone(), e.constant);
        if let Some(&u) = self.memo.get(&key) {
            let unit = &self.units[u as usize];
            return Expr::src(Src::Unit(u), unit.lo, unit.hi);
        }
        let depth = self.depth_of(e) + 1;
        let (lo, hi) = (e.lo.relu(), e.hi.relu());
        let u = self.units.len() as u32;
        self.units.push(Unit {
            expr: e.clone(),
            depth,
            lo,
            hi,
        });
        self.memo.insert(key, u);
        Expr::src(Src::Unit(u), lo, hi)
    }

    /// ReLU unit whose range is known to lie within `[lo, hi]`.
    fn relu_bounded(&mut self, e: &Expr, lo: Coef, hi: Coef) -> Expr {
        let r = self.relu(e).tightened(lo, hi);
        if let Some(u) = r.as_unit() {
            let unit = &mut self.units[u as usize];
            unit.lo = unit.lo.max(lo);
            unit.hi = unit.hi.min(hi);
        }
        r
    }

    /// `max(a, b) = a + ReLU(b − a)`.
    pub fn max(&mut self, a: &Expr, b: &Expr) -> Expr {
        let r = self.relu(&(b - a));
        let (lo, hi) = (a.lo.max(b.lo), a.hi.max(b.hi));
        (a + &r).tightened(lo, hi)
    }

    /// `max(0, 1 − |x/g|)`: one exactly when `x = 0` for `x` on the grid `g·Z`.
    pub fn tent(&mut self, x: &Expr, g: Coef) -> Expr {
        let y = x.scale(Coef::ONE / g);
        if let Some(c) = y.as_const() {
            let abs = if c.is_negative() { -c } else { c };
            return Expr::constant((Coef::ONE - abs).relu());
        }
        self.contracts.push(y.clone());
        let pos = self.relu(&y);
        let neg = self.relu(&-&y);
        let inner = Expr::constant(1) - pos - neg;
        self.relu_bounded(&inner, Coef::ZERO, Coef::ONE)
    }

    /// `δ(a, b) = ReLU(1 − ReLU(a−b) − ReLU(b−a))` on integers.
    pub fn delta(&mut self, a: &Expr, b: &Expr) -> Expr {
        self.tent(&(a - b), Coef::ONE)
    }

    /// `δ` for values on the grid `g·Z`.
    pub fn delta_g(&mut self, a: &Expr, b: &Expr, g: Coef) -> Expr {
        self.tent(&(a - b), g)
    }

    /// `δ(a, c)` against a constant.
    pub fn delta_c(&mut self, a: &Expr, c: impl Into<Coef>) -> Expr {
        let c = Expr::constant(c.into());
        self.delta(a, &c)
    }

    /// `[x ≥ 1] = ReLU(x) − ReLU(x − 1)` on integers.
    pub fn heaviside(&mut self, x: &Expr) -> Expr {
        if let Some(c) = x.as_const() {
            return Expr::constant(if c >= 1 { 1 } else { 0 });
        }
        self.contracts.push(x.clone());
        let a = self.relu(x);
        let b = self.relu(&x.plus_const(-1));
        (a - b).tightened(Coef::ZERO, Coef::ONE)
    }

    /// `[x ≥ 0]` on integers (the step used inside the edit equations).
    pub fn step(&mut self, x: &Expr) -> Expr {
        self.heaviside(&x.plus_const(1))
    }

    /// `[x ≥ θ]` for `x − θ` on the grid `g·Z`.
    pub fn ge(&mut self, x: &Expr, theta: Coef, g: Coef) -> Expr {
        let y = x.plus_const(-theta).scale(Coef::ONE / g);
        self.step(&y)
    }

    /// `[x ≤ θ]` for `x − θ` on the grid `g·Z`.
    pub fn le(&mut self, x: &Expr, theta: Coef, g: Coef) -> Expr {
        let y = (-x).plus_const(theta).scale(Coef::ONE / g);
        self.step(&y)
    }

    /// `[a ≤ x ≤ b]` for values on the grid `g·Z`.
    pub fn interval(&mut self, x: &Expr, a: Coef, b: Coef, g: Coef) -> Expr {
        let lower = self.ge(x, a, g);
        let upper = self.le(x, b, g);
        self.and(&lower, &upper)
    }

    /// `[a < x ≤ b]`: the closed interval minus the boundary tent.
    pub fn interval_open_left(&mut self, x: &Expr, a: Coef, b: Coef, g: Coef) -> Expr {
        let closed = self.interval(x, a, b, g);
        let edge = self.delta_g(x, &Expr::constant(a), g);
        closed - edge
    }

    /// Binary AND `ReLU(u + v − 1)`.
    pub fn and(&mut self, u: &Expr, v: &Expr) -> Expr {
        match (u.as_const(), v.as_const()) {
            (Some(a), Some(b)) => Expr::constant(if a == 1 && b == 1 { 1 } else { 0 }),
            (Some(a), None) => {
                if a == 1 {
                    v.clone()
                } else {
                    Expr::zero()
                }
            }
            (None, Some(b)) => {
                if b == 1 {
                    u.clone()
                } else {
                    Expr::zero()
                }
            }
            (None, None) => {
                let s = (u + v).plus_const(-1);
                self.relu_bounded(&s, Coef::ZERO, Coef::ONE)
            }
        }
    }

    /// AND of several binary wires, `ReLU(Σu − (k−1))`.
    pub fn and_all(&mut self, items: &[&Expr]) -> Expr {
        let mut live: Vec<&Expr> = Vec::new();
        for e in items {
            match e.as_const() {
                Some(c) if c == 1 => {}
                Some(_) => return Expr::zero(),
                None => live.push(e),
            }
        }
        match live.len() {
            0 => Expr::constant(1),
            1 => live[0].clone(),
            k => {
                let s = Expr::sum(live.iter().copied()).plus_const(-(k as i128 - 1));
                self.relu_bounded(&s, Coef::ZERO, Coef::ONE)
            }
        }
    }

    /// `min(1, u + v)` on binary wires.
    pub fn or(&mut self, u: &Expr, v: &Expr) -> Expr {
        let s = u + v;
        let over = self.relu(&s.plus_const(-1));
        (s - over).tightened(Coef::ZERO, Coef::ONE)
    }

    /// `1 − u` on a binary wire.
    pub fn not(&self, u: &Expr) -> Expr {
        (Expr::constant(1) - u).tightened(Coef::ZERO, Coef::ONE)
    }

    /// `v · q` for binary `q` and `0 ≤ v < C/2`, as `ReLU(v − C(1 − q))`.
    pub fn gate(&mut self, v: &Expr, q: &Expr, what: &str) -> Expr {
        if let Some(c) = q.as_const() {
            return if c.is_zero() { Expr::zero() } else { v.clone() };
        }
        if let Some(c) = v.as_const() {
            return q.scale(c).tightened(Coef::ZERO.min(c), Coef::ZERO.max(c));
        }
        self.audit_bound(v, what);
        if v.lo.is_negative() {
            self.audit.push(format!(
                "{}{what}: gated value may be negative ({})",
                self.prefix, v.lo
            ));
        }
        let e = v - &(Expr::constant(1) - q).scale(self.big_c);
        self.relu_bounded(&e, Coef::ZERO, v.hi.relu())
    }

    /// `ReLU(v − C·s)` for a nonnegative integer `s`: `v⁺` when `s = 0`, zero otherwise.
    pub fn mask(&mut self, v: &Expr, s: &Expr, what: &str) -> Expr {
        if let Some(c) = s.as_const() {
            if c.is_zero() {
                return self.relu(v);
            }
        }
        self.audit_bound(v, what);
        let e = v - &s.scale(self.big_c);
        self.relu_bounded(&e, Coef::ZERO, v.hi.relu())
    }

    fn audit_bound(&mut self, v: &Expr, what: &str) {
        if v.hi * Coef::int(2) >= self.big_c {
            self.audit.push(format!(
                "{}{what}: bound {} reaches C/2 = {}",
                self.prefix,
                v.hi,
                self.big_c / Coef::int(2)
            ));
        }
    }

    /// Records a failed build-time check.
    pub fn audit_failure(&mut self, message: String) {
        self.audit.push(message);
    }

    /// Prefix applied to subsequently traced names (stage markers such as `"td."`).
    pub fn set_prefix(&mut self, prefix: &str) {
        self.prefix = prefix.to_string();
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    /// Names a wire. `values` are listed row-major for `shape`.
    pub fn trace(&mut self, name: &str, shape: &[usize], values: Vec<Expr>) {
        let full = format!("{}{}", self.prefix, name);
        debug_assert_eq!(shape.iter().product::<usize>(), values.len(), "{full}");
        if !self.names.insert(full.clone()) {
            self.audit.push(format!("wire {full} traced twice"));
            return;
        }
        self.trace.push(TraceEntry {
            name: full,
            shape: shape.to_vec(),
            values,
        });
    }

    pub fn trace_vec(&mut self, name: &str, values: &[Expr]) {
        self.trace(name, &[values.len()], values.to_vec());
    }

    pub fn trace_mat(&mut self, name: &str, rows: &[Vec<Expr>]) {
        let cols = rows.first().map_or(0, Vec::len);
        let flat: Vec<Expr> = rows.iter().flat_map(|r| r.iter().cloned()).collect();
        self.trace(name, &[rows.len(), cols], flat);
    }

    pub fn trace_cube(&mut self, name: &str, cube: &[Vec<Vec<Expr>>]) {
        let b = cube.first().map_or(0, Vec::len);
        let c = cube.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let flat: Vec<Expr> = cube
            .iter()
            .flat_map(|m| m.iter().flat_map(|r| r.iter().cloned()))
            .collect();
        self.trace(name, &[cube.len(), b, c], flat);
    }

    /// Lays units out by depth, inserting identity carriers for skipped layers, and
    /// finishes with an affine output layer.
    pub fn finish(self, outputs: &[Expr]) -> Result<ReluNetwork, BuildError> {
        if !self.audit.is_empty() {
            return Err(BuildError::Audit(self.audit));
        }
        let n_units = self.units.len();
        let n_inputs = self.inputs.len();

        // keep units reachable from outputs, traced wires and integrality checks
        let mut needed = vec![false; n_units];
        let mut stack: Vec<u32> = Vec::new();
        let roots = outputs
            .iter()
            .chain(self.trace.iter().flat_map(|t| t.values.iter()));
        for e in roots {
            for (s, _) in &e.terms {
                if let Src::Unit(u) = *s {
                    stack.push(u);
                }
            }
        }
        while let Some(u) = stack.pop() {
            if needed[u as usize] {
                continue;
            }
            needed[u as usize] = true;
            for (s, _) in &self.units[u as usize].expr.terms {
                if let Src::Unit(v) = *s {
                    if !needed[v as usize] {
                        stack.push(v);
                    }
                }
            }
        }
        let depth_total = (0..n_units)
            .filter(|&u| needed[u])
            .map(|u| self.units[u].depth)
            .max()
            .unwrap_or(0);

        // last layer at which each source must still be readable
        let mut last_use_unit = vec![0u32; n_units];
        let mut last_use_input = vec![0u32; n_inputs];
        let bump = |s: Src, at: u32, lu: &mut Vec<u32>, li: &mut Vec<u32>| match s {
            Src::Unit(u) => lu[u as usize] = lu[u as usize].max(at),
            Src::Input(i) => li[i as usize] = li[i as usize].max(at),
        };
        for u in 0..n_units {
            if needed[u] {
                let d = self.units[u].depth;
                for (s, _) in &self.units[u].expr.terms {
                    bump(*s, d, &mut last_use_unit, &mut last_use_input);
                }
            }
        }
        for e in outputs {
            for (s, _) in &e.terms {
                bump(*s, depth_total + 1, &mut last_use_unit, &mut last_use_input);
            }
        }

        // slots of each layer; repr[k] maps a source to its columns at layer k
        #[derive(Clone)]
        enum Slot {
            Home(u32),
            CarryUnit(u32),
            CarryPos(u32),
            CarryNeg(u32),
        }
        let mut by_depth: Vec<Vec<u32>> = vec![Vec::new(); depth_total as usize + 1];
        for u in 0..n_units {
            if needed[u] {
                by_depth[self.units[u].depth as usize].push(u as u32);
            }
        }
        // columns where each source can be read in the most recently built layer
        let mut unit_col: Vec<Option<u32>> = vec![None; n_units];
        let mut input_cols: Vec<Vec<(u32, i32)>> =
            (0..n_inputs).map(|i| vec![(i as u32, 1)]).collect();
        let mut layers: Vec<Layer> = Vec::with_capacity(depth_total as usize + 1);
        let mut home_pos: Vec<(u32, u32)> = vec![(0, 0); n_units];
        let one = || BigRational::from_integer(BigInt::from(1));
        let zero = || BigRational::from_integer(BigInt::from(0));

        for k in 1..=depth_total {
            let mut slots: Vec<Slot> = by_depth[k as usize]
                .iter()
                .map(|&u| Slot::Home(u))
                .collect();
            for u in 0..n_units {
                if needed[u] && self.units[u].depth < k && last_use_unit[u] > k {
                    slots.push(Slot::CarryUnit(u as u32));
                }
            }
            for i in 0..n_inputs {
                if last_use_input[i] > k {
                    slots.push(Slot::CarryPos(i as u32));
                    if self.inputs[i].0.is_negative() {
                        slots.push(Slot::CarryNeg(i as u32));
                    }
                }
            }
            let cols_of = |s: Src| -> Vec<(u32, i32)> {
                match s {
                    Src::Input(i) => input_cols[i as usize].clone(),
                    Src::Unit(u) => vec![(
                        unit_col[u as usize].expect("source carried to previous layer"),
                        1,
                    )],
                }
            };
            let mut weights = Vec::with_capacity(slots.len());
            let mut bias = Vec::with_capacity(slots.len());
            for slot in &slots {
                let mut row: Vec<(u32, BigRational)> = Vec::new();
                match *slot {
                    Slot::Home(u) => {
                        let e = &self.units[u as usize].expr;
                        for (s, c) in &e.terms {
                            for (col, sign) in cols_of(*s) {
                                row.push((col, (*c * Coef::int(sign as i128)).to_big()));
                            }
                        }
                        bias.push(e.constant.to_big());
                    }
                    Slot::CarryUnit(u) => {
                        for (col, _) in cols_of(Src::Unit(u)) {
                            row.push((col, one()));
                        }
                        bias.push(zero());
                    }
                    Slot::CarryPos(i) | Slot::CarryNeg(i) => {
                        let sign = if matches!(slot, Slot::CarryPos(_)) {
                            1
                        } else {
                            -1
                        };
                        for (col, s) in cols_of(Src::Input(i)) {
                            row.push((col, BigRational::from_integer(BigInt::from(s * sign))));
                        }
                        bias.push(zero());
                    }
                }
                row.sort_by_key(|(c, _)| *c);
                weights.push(row);
            }
            let input_width = layers.last().map_or(n_inputs, |l: &Layer| l.bias.len());
            layers.push(Layer {
                weights,
                bias,
                relu: true,
                input_width,
            });

            unit_col.iter_mut().for_each(|c| *c = None);
            input_cols.iter_mut().for_each(Vec::clear);
            for (col, slot) in slots.iter().enumerate() {
                let col = col as u32;
                match *slot {
                    Slot::Home(u) => {
                        unit_col[u as usize] = Some(col);
                        home_pos[u as usize] = (k, col);
                    }
                    Slot::CarryUnit(u) => unit_col[u as usize] = Some(col),
                    Slot::CarryPos(i) => input_cols[i as usize].push((col, 1)),
                    Slot::CarryNeg(i) => input_cols[i as usize].push((col, -1)),
                }
            }
        }

        // affine output layer
        let mut weights = Vec::with_capacity(outputs.len());
        let mut bias = Vec::with_capacity(outputs.len());
        for e in outputs {
            let mut row: Vec<(u32, BigRational)> = Vec::new();
            for (s, c) in &e.terms {
                let cols = match *s {
                    Src::Input(i) => input_cols[i as usize].clone(),
                    Src::Unit(u) => {
                        vec![(unit_col[u as usize].expect("output source available"), 1)]
                    }
                };
                for (col, sign) in cols {
                    row.push((col, (*c * Coef::int(sign as i128)).to_big()));
                }
            }
            row.sort_by_key(|(c, _)| *c);
            weights.push(row);
            bias.push(e.constant.to_big());
        }
        let input_width = layers.last().map_or(n_inputs, |l| l.bias.len());
        layers.push(Layer {
            weights,
            bias,
            relu: false,
            input_width,
        });

        let readout = |e: &Expr| -> Option<Readout> {
            let mut terms = Vec::with_capacity(e.terms.len());
            for (s, c) in &e.terms {
                match *s {
                    Src::Input(i) => terms.push((0u32, i, c.to_big())),
                    Src::Unit(u) => {
                        if !needed[u as usize] {
                            return None;
                        }
                        let (layer, col) = home_pos[u as usize];
                        terms.push((layer, col, c.to_big()));
                    }
                }
            }
            Some(Readout {
                terms,
                constant: e.constant.to_big(),
            })
        };
        let wires = self
            .trace
            .iter()
            .map(|t| Wire {
                name: t.name.clone(),
                shape: t.shape.clone(),
                entries: t
                    .values
                    .iter()
                    .map(|e| readout(e).expect("traced units are kept"))
                    .collect(),
            })
            .collect();
        let contracts = self.contracts.iter().filter_map(readout).collect();
        Ok(ReluNetwork::from_parts(
            n_inputs,
            layers,
            WireTrace::new(wires),
            contracts,
            self.input_scale,
        ))
    }
}
