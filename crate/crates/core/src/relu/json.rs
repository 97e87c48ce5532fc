//! JSON form of a network. Rationals are written as `"num/den"` (or `"num"`).

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::network::{Layer, Readout, ReluNetwork, Wire, WireTrace};
use super::EvalError;

#[derive(Serialize, Deserialize)]
struct RawLayer {
    relu: bool,
    input_width: usize,
    bias: Vec<String>,
    rows: Vec<Vec<(u32, String)>>,
}

#[derive(Serialize, Deserialize)]
struct RawReadout {
    terms: Vec<(u32, u32, String)>,
    constant: String,
}

#[derive(Serialize, Deserialize)]
struct RawWire {
    name: String,
    shape: Vec<usize>,
    entries: Vec<RawReadout>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    input_width: usize,
    input_scale: i64,
    layers: Vec<RawLayer>,
    trace: Vec<RawWire>,
    contracts: Vec<RawReadout>,
}

pub fn rational_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational, EvalError> {
    let bad = || EvalError::Format(format!("bad rational {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d == BigInt::from(0) {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Integers, fractions `p/q` and terminating decimals such as `-0.375`.
pub fn parse_number(s: &str) -> Result<BigRational, String> {
    let t = s.trim();
    let Some((whole, frac)) = t.split_once('.') else {
        return parse_rational(t).map_err(|_| format!("not a number: {s:?}"));
    };
    let digits = |d: &str| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit());
    let (neg, whole) = match whole.strip_prefix('-') {
        Some(w) => (true, w),
        None => (false, whole),
    };
    if !(digits(whole) || whole.is_empty()) || !digits(frac) {
        return Err(format!("not a number: {s:?}"));
    }
    let numer: BigInt = format!("{whole}{frac}")
        .parse()
        .map_err(|_| format!("not a number: {s:?}"))?;
    let r = BigRational::new(numer, num_traits::pow(BigInt::from(10), frac.len()));
    Ok(if neg { -r } else { r })
}

fn raw_readout(r: &Readout) -> RawReadout {
    RawReadout {
        terms: r
            .terms
            .iter()
            .map(|(l, i, w)| (*l, *i, rational_to_string(w)))
            .collect(),
        constant: rational_to_string(&r.constant),
    }
}

fn cook_readout(r: &RawReadout) -> Result<Readout, EvalError> {
    Ok(Readout {
        terms: r
            .terms
            .iter()
            .map(|(l, i, w)| Ok((*l, *i, parse_rational(w)?)))
            .collect::<Result<_, EvalError>>()?,
        constant: parse_rational(&r.constant)?,
    })
}

impl ReluNetwork {
    pub fn to_json(&self) -> serde_json::Value {
        let raw = RawNetwork {
            input_width: self.input_width(),
            input_scale: self.input_scale(),
            layers: self
                .layers()
                .iter()
                .map(|l| RawLayer {
                    relu: l.relu,
                    input_width: l.input_width,
                    bias: l.bias.iter().map(rational_to_string).collect(),
                    rows: l
                        .weights
                        .iter()
                        .map(|row| {
                            row.iter()
                                .map(|(c, w)| (*c, rational_to_string(w)))
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
            trace: self
                .trace()
                .wires()
                .iter()
                .map(|w| RawWire {
                    name: w.name.clone(),
                    shape: w.shape.clone(),
                    entries: w.entries.iter().map(raw_readout).collect(),
                })
                .collect(),
            contracts: self.contracts().iter().map(raw_readout).collect(),
        };
        serde_json::to_value(raw).expect("network serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<ReluNetwork, EvalError> {
        let raw: RawNetwork =
            serde_json::from_value(value).map_err(|e| EvalError::Format(e.to_string()))?;
        let mut layers = Vec::with_capacity(raw.layers.len());
        for l in &raw.layers {
            layers.push(Layer {
                weights: l
                    .rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|(c, w)| Ok((*c, parse_rational(w)?)))
                            .collect::<Result<Vec<_>, EvalError>>()
                    })
                    .collect::<Result<_, _>>()?,
                bias: l
                    .bias
                    .iter()
                    .map(|b| parse_rational(b))
                    .collect::<Result<_, _>>()?,
                relu: l.relu,
                input_width: l.input_width,
            });
        }
        let checked = ReluNetwork::new(raw.input_width, layers)?;
        let (width, layers, _, _, _) = checked.into_parts();
        let wires = raw
            .trace
            .iter()
            .map(|w| {
                Ok(Wire {
                    name: w.name.clone(),
                    shape: w.shape.clone(),
                    entries: w
                        .entries
                        .iter()
                        .map(cook_readout)
                        .collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        let contracts = raw
            .contracts
            .iter()
            .map(cook_readout)
            .collect::<Result<_, _>>()?;
        Ok(ReluNetwork::from_parts(
            width,
            layers,
            WireTrace::new(wires),
            contracts,
            raw.input_scale.max(1),
        ))
    }
}
