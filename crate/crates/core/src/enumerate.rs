//! Sweeps over network inputs: distinct outputs, oracle distances and reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generative::{GenError, Generator, Kind};
use crate::oracle::ted;
use crate::relu::{Coef, NetStats, Scratch};
use crate::tree::{decode_euler, join_symbols};
use crate::unified::{slot_kinds, DiscretizationConfig, SlotKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Blocks of operation counts with unused slots zeroed; one input per integer class.
    Compositional,
    /// The full product of integer classes.
    Full,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Strategy, String> {
        match s {
            "compositional" => Ok(Strategy::Compositional),
            "full" => Ok(Strategy::Full),
            _ => Err(format!(
                "unknown strategy {s:?} (expected compositional or full)"
            )),
        }
    }
}

/// What to sweep. `labels` pins the inserted labels and, unless `sub_labels` is given, the
/// substituted ones; `None` means `1..=m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPlan {
    pub labels: Option<Vec<u32>>,
    pub sub_labels: Option<Vec<u32>>,
    pub strategy: Strategy,
    pub max_evaluations: u64,
}

impl Default for SweepPlan {
    fn default() -> SweepPlan {
        SweepPlan {
            labels: None,
            sub_labels: None,
            strategy: Strategy::Compositional,
            max_evaluations: 50_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(
        "sweep needs {needed} evaluations, above the cap of {cap}; try the compositional strategy"
    )]
    TooLarge { needed: u64, cap: u64 },
    #[error("label {0} outside the alphabet")]
    BadLabel(u32),
    #[error(transparent)]
    Gen(#[from] GenError),
}

/// Product of per-slot value lists, in the network's scaled input units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub slots: Vec<Vec<i64>>,
}

impl Block {
    pub fn len(&self) -> u64 {
        self.slots.iter().map(|s| s.len() as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Input number `i` in mixed radix, last slot fastest.
    pub fn get(&self, mut i: u64, out: &mut Vec<i64>) {
        out.clear();
        out.resize(self.slots.len(), 0);
        for (j, vals) in self.slots.iter().enumerate().rev() {
            let r = vals.len() as u64;
            out[j] = vals[(i % r) as usize];
            i /= r;
        }
    }
}

/// Union of blocks covering the swept inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub blocks: Vec<Block>,
}

impl Domain {
    pub fn len(&self) -> u64 {
        self.blocks.iter().map(Block::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, mut i: u64, out: &mut Vec<i64>) {
        for b in &self.blocks {
            if i < b.len() {
                return b.get(i, out);
            }
            i -= b.len();
        }
        panic!("input index out of range");
    }
}

fn labels_of(g: &Generator, plan: &SweepPlan) -> Result<Vec<u32>, SweepError> {
    checked(g, plan.labels.clone())
}

fn sub_labels_of(g: &Generator, plan: &SweepPlan) -> Result<Vec<u32>, SweepError> {
    checked(g, plan.sub_labels.clone().or_else(|| plan.labels.clone()))
}

fn checked(g: &Generator, labels: Option<Vec<u32>>) -> Result<Vec<u32>, SweepError> {
    let labels = labels.unwrap_or_else(|| (1..=g.m()).collect());
    if labels.is_empty() {
        return Err(SweepError::BadLabel(0));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > g.m()) {
        return Err(SweepError::BadLabel(bad));
    }
    Ok(labels)
}

/// Inputs swept for `g` under `plan`.
pub fn domain(g: &Generator, plan: &SweepPlan) -> Result<Domain, SweepError> {
    let labels = labels_of(g, plan)?;
    let (n, d) = (g.n() as i64, g.d);
    let all: Vec<i64> = (0..=n).collect();
    let some: Vec<i64> = (1..=n).collect();
    let lab: Vec<i64> = labels.iter().map(|&l| l as i64).collect();
    let sub: Vec<i64> = sub_labels_of(g, plan)?.iter().map(|&l| l as i64).collect();
    let zero = vec![0];
    let blocks = match (g.kind, plan.strategy) {
        (Kind::Td, Strategy::Full) => vec![Block {
            slots: vec![all; d],
        }],
        (Kind::Ts, Strategy::Full) => vec![Block {
            slots: [vec![all; d], vec![sub; d]].concat(),
        }],
        (Kind::Ti, _) => vec![Block {
            slots: [vec![all; 3 * d], vec![lab; d]].concat(),
        }],
        (Kind::Td, Strategy::Compositional) => (0..=d)
            .map(|a| Block {
                slots: [vec![some.clone(); a], vec![zero.clone(); d - a]].concat(),
            })
            .collect(),
        (Kind::Ts, Strategy::Compositional) => (0..=d)
            .map(|b| {
                let pos = [vec![some.clone(); b], vec![zero.clone(); d - b]].concat();
                let val = [vec![sub.clone(); b], vec![vec![sub[0]]; d - b]].concat();
                Block {
                    slots: [pos, val].concat(),
                }
            })
            .collect(),
        (Kind::Te, Strategy::Full) => {
            let slots = (0..7 * d)
                .map(|j| match j {
                    _ if (2 * d..3 * d).contains(&j) => sub.clone(),
                    _ if j >= 6 * d => lab.clone(),
                    _ => all.clone(),
                })
                .collect();
            vec![te_scaled(g, Block { slots })]
        }
        (Kind::Te, Strategy::Compositional) => {
            let mut blocks = Vec::new();
            for a in 0..=d {
                for b in 0..=d - a {
                    let mut slots = vec![vec![0]; 7 * d];
                    for j in 0..a {
                        slots[j] = some.clone();
                    }
                    for j in 0..b {
                        slots[d + j] = some.clone();
                        slots[2 * d + j] = sub.clone();
                    }
                    for j in b..d {
                        slots[2 * d + j] = vec![sub[0]];
                    }
                    for h in 0..d {
                        let active = h >= a + b;
                        for seg in 3..6 {
                            slots[seg * d + h] = if active { all.clone() } else { vec![0] };
                        }
                        slots[6 * d + h] = if active { lab.clone() } else { vec![lab[0]] };
                    }
                    blocks.push(te_scaled(g, Block { slots }));
                }
            }
            blocks
        }
    };
    Ok(Domain { blocks })
}

/// Maps integer classes to scaled grid representatives.
fn te_scaled(g: &Generator, b: Block) -> Block {
    let cfg = DiscretizationConfig {
        n: g.n(),
        m: g.m(),
        delta: g.delta,
    };
    let scale = Coef::from(g.net.input_scale());
    let kinds = slot_kinds(g.d);
    let slots = b
        .slots
        .iter()
        .zip(kinds)
        .map(|(vals, kind)| {
            vals.iter()
                .map(|&v| {
                    let x = cfg.representative(kind, v) * scale;
                    debug_assert!(x.is_integer());
                    x.numer() as i64
                })
                .collect()
        })
        .collect();
    Block { slots }
}

/// A uniformly random on-grid unified input whose value slots fall in the classes of the
/// plan's labels.
pub fn sample_te_input<R: Rng + ?Sized>(
    g: &Generator,
    plan: &SweepPlan,
    rng: &mut R,
) -> Result<Vec<Coef>, SweepError> {
    let cfg = DiscretizationConfig {
        n: g.n(),
        m: g.m(),
        delta: g.delta,
    };
    let steps = (Coef::ONE / g.delta).numer() as i64;
    let (ins, sub) = (labels_of(g, plan)?, sub_labels_of(g, plan)?);
    let d = g.d;
    Ok(slot_kinds(d)
        .into_iter()
        .enumerate()
        .map(|(j, kind)| match kind {
            SlotKind::Position => g.delta * Coef::from(rng.gen_range(0..steps)),
            SlotKind::Value => {
                let labels = if j < 3 * d { &sub } else { &ins };
                let l = labels[rng.gen_range(0..labels.len())] as i64;
                let lo = cfg.representative(SlotKind::Value, l);
                let hi = if l == g.m() as i64 {
                    Coef::ONE - g.delta
                } else {
                    cfg.representative(SlotKind::Value, l + 1) - g.delta
                };
                let k = ((hi - lo) / g.delta).numer() as i64;
                lo + g.delta * Coef::from(rng.gen_range(0..=k))
            }
        })
        .collect())
}

/// Layer statistics in report form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportStats {
    pub depth: usize,
    pub widths: Vec<usize>,
    pub total: usize,
    pub min: usize,
    pub avg: f64,
    pub max: usize,
}

impl From<NetStats> for ReportStats {
    fn from(s: NetStats) -> ReportStats {
        ReportStats {
            depth: s.depth,
            widths: s.widths,
            total: s.total,
            min: s.min,
            avg: s.avg,
            max: s.max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationReport {
    /// Euler string of the input tree.
    pub tree: String,
    pub m: u32,
    pub kind: Kind,
    pub d: usize,
    pub strategy: Strategy,
    pub labels: Vec<u32>,
    pub sub_labels: Vec<u32>,
    pub count: usize,
    /// Oracle distance to the input tree, by number of outputs.
    pub distances: BTreeMap<usize, usize>,
    pub invalid: usize,
    pub invalid_outputs: Vec<String>,
    pub stats: ReportStats,
    pub sweep_size: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
    /// Distinct valid outputs, sentinels removed, in lexicographic order of the symbols.
    pub outputs: Vec<String>,
}

impl EnumerationReport {
    /// Outputs as symbol vectors.
    pub fn output_set(&self) -> BTreeSet<Vec<u64>> {
        self.outputs
            .iter()
            .map(|s| crate::tree::parse_symbols(s, None).expect("report outputs are numeric"))
            .collect()
    }

    /// Aligned human-readable summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tree      {}", self.tree);
        let _ = writeln!(
            s,
            "kind      {}   d = {}   strategy = {:?}",
            self.kind, self.d, self.strategy
        );
        let _ = writeln!(s, "inputs    {}", self.sweep_size);
        let _ = writeln!(s, "outputs   {}   invalid = {}", self.count, self.invalid);
        for (k, c) in &self.distances {
            let _ = writeln!(s, "  ted {k:<3} {c}");
        }
        let st = &self.stats;
        let _ = writeln!(
            s,
            "network   #L = {}  #TN = {}  MinN = {}  AvgN = {:.1}  MaxN = {}",
            st.depth, st.total, st.min, st.avg, st.max
        );
        if let Some(ms) = self.wall_time_ms {
            let _ = writeln!(s, "time      {ms} ms");
        }
        s
    }
}

/// Distinct outputs of the swept inputs, plus the invalid ones.
#[derive(Debug, Default, Clone)]
struct Found {
    valid: BTreeSet<Vec<u64>>,
    invalid: BTreeSet<Vec<u64>>,
}

impl Found {
    fn merge(mut self, other: Found) -> Found {
        self.valid.extend(other.valid);
        self.invalid.extend(other.invalid);
        self
    }
}

const CHUNK: u64 = 2048;

/// Evaluates every input of the plan. Runs on the current rayon pool; the result does not
/// depend on the number of threads.
pub fn sweep(g: &Generator, plan: &SweepPlan) -> Result<EnumerationReport, SweepError> {
    let start = Instant::now();
    let dom = domain(g, plan)?;
    let size = dom.len();
    if size > plan.max_evaluations {
        return Err(SweepError::TooLarge {
            needed: size,
            cap: plan.max_evaluations,
        });
    }
    let chunks = size.div_ceil(CHUNK);
    let found = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Found, GenError> {
            let mut f = Found::default();
            let mut x = Vec::new();
            let mut scratch = Scratch::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(size) {
                dom.get(i, &mut x);
                let y = g.eval_scaled(&x, &mut scratch)?;
                match g.decode(&y) {
                    Ok(s) => f.valid.insert(s),
                    Err(_) => f.invalid.insert(y),
                };
            }
            Ok(f)
        })
        .try_reduce(Found::default, |a, b| Ok(a.merge(b)))?;

    let m = g.m();
    let dists: Vec<usize> = found
        .valid
        .par_iter()
        .map(|s| ted(&g.tree, &decode_euler(s, m).expect("validated")))
        .collect();
    let mut distances = BTreeMap::new();
    for k in dists {
        *distances.entry(k).or_insert(0) += 1;
    }
    Ok(EnumerationReport {
        tree: g.tree.euler().to_string(),
        m,
        kind: g.kind,
        d: g.d,
        strategy: plan.strategy,
        labels: labels_of(g, plan)?,
        sub_labels: sub_labels_of(g, plan)?,
        count: found.valid.len(),
        distances,
        invalid: found.invalid.len(),
        invalid_outputs: found.invalid.iter().map(|y| g.format(y)).collect(),
        stats: g.net.stats().into(),
        sweep_size: size,
        wall_time_ms: Some(start.elapsed().as_millis() as u64),
        outputs: found.valid.iter().map(|s| join_symbols(s, None)).collect(),
    })
}

/// Set differences between sweep outputs and a ball: `(missing, extra)`.
pub fn compare_with_oracle(
    report: &EnumerationReport,
    ball: &BTreeSet<Vec<u64>>,
) -> (BTreeSet<Vec<u64>>, BTreeSet<Vec<u64>>) {
    let got = report.output_set();
    (
        ball.difference(&got).cloned().collect(),
        got.difference(ball).cloned().collect(),
    )
}

/// One row per network: depth, totals and the hidden width sequence. The last line says
/// whether networks of the same kind and budget share a depth.
pub fn stats_table(rows: &[(String, Kind, usize, NetStats)]) -> String {
    let mut s = String::new();
    let name_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(4).max(4);
    let _ = writeln!(
        s,
        "{:<name_w$}  kind  d  {:>4}  {:>8}  {:>6}  {:>9}  {:>6}  widths",
        "name", "#L", "#TN", "MinN", "AvgN", "MaxN"
    );
    for (name, kind, d, st) in rows {
        let widths: Vec<String> = st.widths.iter().map(|w| w.to_string()).collect();
        let _ = writeln!(
            s,
            "{name:<name_w$}  {kind:<4}  {d}  {:>4}  {:>8}  {:>6}  {:>9.1}  {:>6}  {}",
            st.depth,
            st.total,
            st.min,
            st.avg,
            st.max,
            widths.join(" ")
        );
    }
    let _ = writeln!(
        s,
        "constant depth per kind and d: {}",
        if same_depth(rows) { "yes" } else { "no" }
    );
    s
}

/// Whether every group of rows with equal kind and budget has one depth.
pub fn same_depth(rows: &[(String, Kind, usize, NetStats)]) -> bool {
    let mut depth: BTreeMap<(Kind, usize), usize> = BTreeMap::new();
    rows.iter()
        .all(|(_, k, d, st)| *depth.entry((*k, *d)).or_insert(st.depth) == st.depth)
}
