//! Exact layered ReLU networks: symbolic construction, layout, evaluation and serialization.

mod builder;
mod coef;
mod expr;
mod fast;
mod json;
mod network;

pub use builder::NetBuilder;
pub use coef::{rational_gcd, Coef};
pub use expr::{Expr, Src};
pub use fast::{FastPlan, Scratch};
pub use json::{parse_number, parse_rational, rational_to_string};
pub use network::{Layer, NetStats, Readout, ReluNetwork, Wire, WireTrace};

use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("magnitude audit failed: {}", .0.join("; "))]
    Audit(Vec<String>),
    #[error("d must be at least 1")]
    ZeroBudget,
    #[error("grid step {0} is too coarse for n = {1}, m = {2}")]
    CoarseGrid(String, usize, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("integer contract {check} violated: value {value}")]
    NonIntegerWire { check: usize, value: String },
    #[error("output {0} is not an i64 integer")]
    NonIntegerOutput(usize),
    #[error("wire {0} defined in both networks")]
    DuplicateWire(String),
    #[error("malformed network: {0}")]
    Format(String),
}

/// Integer as an exact rational.
pub fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Integer vector as exact rationals.
pub fn rats(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&x| rat(x)).collect()
}
