//! The four generative networks behind one handle: construction, input checks, evaluation,
//! reference results and serialization.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delete::{build_td, delete_reference_padded};
use crate::edit::EditError;
use crate::insert::{build_ti, insert_ops, insert_reference_symbols};
use crate::locate::Constants;
use crate::relu::{BuildError, Coef, EvalError, NetStats, ReluNetwork, Scratch};
use crate::subst::{build_ts, subst_reference};
use crate::tree::{join_symbols, strip_sentinels, validate_euler, EulerError, LabeledTree};
use crate::unified::{build_te_with, te_reference, InputError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Ts,
    Td,
    Ti,
    Te,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Ts, Kind::Td, Kind::Ti, Kind::Te];
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Kind::Ts => "ts",
            Kind::Td => "td",
            Kind::Ti => "ti",
            Kind::Te => "te",
        })
    }
}

impl FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Kind, String> {
        match s.to_ascii_lowercase().as_str() {
            "ts" => Ok(Kind::Ts),
            "td" => Ok(Kind::Td),
            "ti" => Ok(Kind::Ti),
            "te" => Ok(Kind::Te),
            _ => Err(format!("unknown kind {s:?} (expected ts, td, ti or te)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("expected {expected} inputs, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("input {index} = {value} outside {domain}")]
    Domain {
        index: usize,
        value: String,
        domain: String,
    },
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error(transparent)]
    Euler(#[from] EulerError),
    #[error("output {0} is not a symbol")]
    BadOutput(usize),
    #[error("malformed network file: {0}")]
    Format(String),
}

/// A built network together with the tree, budget and constants it was built for.
#[derive(Debug, Clone)]
pub struct Generator {
    pub kind: Kind,
    pub tree: LabeledTree,
    pub d: usize,
    pub delta: Coef,
    pub constants: Constants,
    pub net: ReluNetwork,
}

#[derive(Serialize, Deserialize)]
struct GeneratorFile {
    kind: Kind,
    d: usize,
    tree: LabeledTree,
    delta: String,
    big_b: i64,
    big_c: i64,
    stats: NetStats,
    network: serde_json::Value,
}

/// Default grid of the unified network.
pub fn default_delta() -> Coef {
    Coef::frac(1, 100)
}

impl Generator {
    /// Builds the network of `kind` for `tree`; `delta` only matters for [`Kind::Te`].
    pub fn build(
        kind: Kind,
        tree: &LabeledTree,
        d: usize,
        delta: Coef,
    ) -> Result<Generator, GenError> {
        let e = tree.euler();
        let net = match kind {
            Kind::Ts => build_ts(&e, d)?,
            Kind::Td => build_td(&e, d)?,
            Kind::Ti => build_ti(&e, d)?,
            Kind::Te => build_te_with(&e, d, delta)?,
        };
        let constants = Constants::new(tree.edges(), tree.alphabet(), d);
        Ok(Generator {
            kind,
            tree: tree.clone(),
            d,
            delta,
            constants,
            net,
        })
    }

    pub fn n(&self) -> usize {
        self.tree.edges()
    }

    pub fn m(&self) -> u32 {
        self.tree.alphabet()
    }

    pub fn big_b(&self) -> u64 {
        self.constants.big_b as u64
    }

    pub fn input_width(&self) -> usize {
        self.d
            * match self.kind {
                Kind::Ts => 2,
                Kind::Td => 1,
                Kind::Ti => 4,
                Kind::Te => 7,
            }
    }

    pub fn output_width(&self) -> usize {
        2 * self.n()
            + if matches!(self.kind, Kind::Ti | Kind::Te) {
                2 * self.d
            } else {
                0
            }
    }

    /// Whether outputs may carry the sentinel `B`.
    pub fn uses_sentinel(&self) -> bool {
        matches!(self.kind, Kind::Td | Kind::Te)
    }

    /// Inclusive integer range of input `j` for the integer kinds.
    pub fn int_domain(&self, j: usize) -> (i64, i64) {
        let (n, m, d) = (self.n() as i64, self.m() as i64, self.d);
        let label = match self.kind {
            Kind::Ts => j >= d,
            Kind::Ti => j >= 3 * d,
            _ => false,
        };
        if label {
            (1, m)
        } else {
            (0, n)
        }
    }

    /// Checks arity and domain. Returns the inputs scaled by the network's input scale.
    pub fn check_input(&self, x: &[BigRational]) -> Result<Vec<i64>, GenError> {
        if x.len() != self.input_width() {
            return Err(GenError::Arity {
                expected: self.input_width(),
                found: x.len(),
            });
        }
        if self.kind == Kind::Te {
            let delta = self.delta.to_big();
            return x
                .iter()
                .enumerate()
                .map(|(index, v)| {
                    let k = v / &delta;
                    let on_grid = k.is_integer()
                        && !v.is_negative()
                        && *v < BigRational::from_integer(BigInt::from(1));
                    let scaled =
                        (v * BigRational::from_integer(BigInt::from(self.net.input_scale())))
                            .to_integer()
                            .to_i64();
                    match (on_grid, scaled) {
                        (true, Some(s)) => Ok(s),
                        _ => Err(GenError::Input(InputError::NotOnGrid {
                            index,
                            value: v.to_string(),
                            delta: self.delta.to_string(),
                        })),
                    }
                })
                .collect();
        }
        x.iter()
            .enumerate()
            .map(|(index, v)| {
                let (lo, hi) = self.int_domain(index);
                match v.is_integer().then(|| v.to_integer().to_i64()).flatten() {
                    Some(k) if (lo..=hi).contains(&k) => Ok(k),
                    _ => Err(GenError::Domain {
                        index,
                        value: v.to_string(),
                        domain: format!("integers {lo}..={hi}"),
                    }),
                }
            })
            .collect()
    }

    /// Checked exact evaluation.
    pub fn eval(&self, x: &[BigRational]) -> Result<Vec<u64>, GenError> {
        self.check_input(x)?;
        let out = self.net.eval(x)?;
        out.iter()
            .enumerate()
            .map(|(i, v)| {
                if v.is_integer() {
                    v.to_integer().to_u64().ok_or(GenError::BadOutput(i))
                } else {
                    Err(GenError::BadOutput(i))
                }
            })
            .collect()
    }

    /// Evaluation on inputs already multiplied by the input scale, as produced by
    /// [`Generator::check_input`]. Falls back to exact rationals when the fast path overflows.
    pub fn eval_scaled(&self, x: &[i64], scratch: &mut Scratch) -> Result<Vec<u64>, GenError> {
        if let Some(plan) = self.net.fast_plan() {
            if let Some(out) = plan.eval_scaled(x, scratch) {
                let scales = plan.output_scales();
                if out.iter().zip(scales).all(|(v, s)| v % s == 0 && *v >= 0) {
                    return Ok(out
                        .iter()
                        .zip(scales)
                        .map(|(v, s)| (v / s) as u64)
                        .collect());
                }
            }
        }
        let scale = BigInt::from(self.net.input_scale());
        let x: Vec<BigRational> = x
            .iter()
            .map(|&v| BigRational::new(BigInt::from(v), scale.clone()))
            .collect();
        self.eval(&x)
    }

    /// What the network must output for `x`, computed by the direct editors.
    pub fn reference(&self, x: &[BigRational]) -> Result<Vec<u64>, GenError> {
        let xi = self.check_input(x)?;
        let (d, b) = (self.d, self.constants.big_b);
        Ok(match self.kind {
            Kind::Ts => subst_reference(&self.tree, &xi, d)?.euler().into_symbols(),
            Kind::Td => delete_reference_padded(&self.tree, &xi, b)?,
            Kind::Ti => {
                insert_reference_symbols(self.tree.euler().symbols(), self.m(), &insert_ops(&xi, d))
            }
            Kind::Te => {
                let xc: Vec<Coef> = x
                    .iter()
                    .map(|v| Coef::from_big(v).expect("grid inputs are small"))
                    .collect();
                te_reference(&self.tree, &xc, d, self.delta)?
            }
        })
    }

    /// Output with sentinels removed; for sentinel-free kinds the output itself.
    pub fn strip(&self, y: &[u64]) -> Result<Vec<u64>, GenError> {
        if !self.uses_sentinel() {
            return Ok(y.to_vec());
        }
        strip_sentinels(y, self.big_b()).map_err(|p| {
            GenError::Euler(EulerError::BadSymbol {
                position: p,
                symbol: self.big_b(),
            })
        })
    }

    /// Strips and validates an output as an Euler string.
    pub fn decode(&self, y: &[u64]) -> Result<Vec<u64>, GenError> {
        let s = self.strip(y)?;
        validate_euler(&s, self.m())?;
        Ok(s)
    }

    /// Symbols joined by commas, the sentinel printed as `B`.
    pub fn format(&self, y: &[u64]) -> String {
        join_symbols(y, self.uses_sentinel().then(|| self.big_b()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = GeneratorFile {
            kind: self.kind,
            d: self.d,
            tree: self.tree.clone(),
            delta: self.delta.to_string(),
            big_b: self.constants.big_b,
            big_c: self.constants.big_c,
            stats: self.net.stats(),
            network: self.net.to_json(),
        };
        serde_json::to_value(file).expect("generator serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Generator, GenError> {
        let file: GeneratorFile =
            serde_json::from_value(value).map_err(|e| GenError::Format(e.to_string()))?;
        let delta = crate::relu::parse_rational(&file.delta)
            .map_err(|e| GenError::Format(e.to_string()))?;
        let delta =
            Coef::from_big(&delta).ok_or_else(|| GenError::Format("delta out of range".into()))?;
        let constants = Constants::new(file.tree.edges(), file.tree.alphabet(), file.d);
        if (constants.big_b, constants.big_c) != (file.big_b, file.big_c) {
            return Err(GenError::Format("constants do not match the tree".into()));
        }
        let net = ReluNetwork::from_json(file.network)?;
        let g = Generator {
            kind: file.kind,
            tree: file.tree,
            d: file.d,
            delta,
            constants,
            net,
        };
        if g.net.input_width() != g.input_width() || g.net.output_width() != g.output_width() {
            return Err(GenError::Format(
                "network shape does not match its kind".into(),
            ));
        }
        Ok(g)
    }
}
