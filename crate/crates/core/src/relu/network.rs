use std::collections::HashMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::fast::{FastPlan, Scratch};
use super::EvalError;

/// One affine map, optionally followed by ReLU. Rows are sparse `(column, weight)` lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<Vec<(u32, BigRational)>>,
    pub bias: Vec<BigRational>,
    pub relu: bool,
    pub input_width: usize,
}

impl Layer {
    pub fn width(&self) -> usize {
        self.bias.len()
    }

    pub fn apply(&self, x: &[BigRational]) -> Vec<BigRational> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                let mut acc = b.clone();
                for (c, w) in row {
                    let v = &x[*c as usize];
                    if !v.is_zero() {
                        acc += w * v;
                    }
                }
                if self.relu && acc.is_negative() {
                    BigRational::zero()
                } else {
                    acc
                }
            })
            .collect()
    }

    fn identity(width: usize, relu: bool) -> Layer {
        Layer {
            weights: (0..width)
                .map(|i| vec![(i as u32, BigRational::one())])
                .collect(),
            bias: vec![BigRational::zero(); width],
            relu,
            input_width: width,
        }
    }
}

/// Affine readout `Σ w · activation[layer][index] + constant`; layer 0 is the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub terms: Vec<(u32, u32, BigRational)>,
    pub constant: BigRational,
}

impl Readout {
    pub fn read(&self, acts: &[Vec<BigRational>]) -> BigRational {
        let mut acc = self.constant.clone();
        for (layer, idx, w) in &self.terms {
            acc += w * &acts[*layer as usize][*idx as usize];
        }
        acc
    }

    fn shifted(&self, by: u32) -> Readout {
        Readout {
            terms: self
                .terms
                .iter()
                .map(|(l, i, w)| (l + by, *i, w.clone()))
                .collect(),
            constant: self.constant.clone(),
        }
    }
}

/// A named intermediate quantity, stored row-major for `shape`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wire {
    pub name: String,
    pub shape: Vec<usize>,
    pub entries: Vec<Readout>,
}

/// Names of the intermediate variables and where to read them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WireTrace {
    wires: Vec<Wire>,
    index: HashMap<String, usize>,
}

impl WireTrace {
    pub fn new(wires: Vec<Wire>) -> WireTrace {
        let index = wires
            .iter()
            .enumerate()
            .map(|(i, w)| (w.name.clone(), i))
            .collect();
        WireTrace { wires, index }
    }

    pub fn get(&self, name: &str) -> Option<&Wire> {
        self.index.get(name).map(|&i| &self.wires[i])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.wires.iter().map(|w| w.name.as_str())
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn len(&self) -> usize {
        self.wires.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wires.is_empty()
    }
}

/// Depth and width summary; `widths` lists hidden layers only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetStats {
    pub depth: usize,
    pub widths: Vec<usize>,
    pub total: usize,
    pub min: usize,
    pub max: usize,
    pub avg: f64,
}

/// Layered exact ReLU network. All layers but the last apply ReLU in networks
/// produced by the builder; the last is the affine output map.
#[derive(Debug)]
pub struct ReluNetwork {
    input_width: usize,
    layers: Vec<Layer>,
    trace: WireTrace,
    contracts: Vec<Readout>,
    input_scale: i64,
    fast: OnceLock<Option<FastPlan>>,
}

impl Clone for ReluNetwork {
    fn clone(&self) -> Self {
        ReluNetwork::from_parts(
            self.input_width,
            self.layers.clone(),
            self.trace.clone(),
            self.contracts.clone(),
            self.input_scale,
        )
    }
}

impl PartialEq for ReluNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.input_width == other.input_width
            && self.layers == other.layers
            && self.trace == other.trace
            && self.input_scale == other.input_scale
    }
}

impl ReluNetwork {
    pub fn from_parts(
        input_width: usize,
        layers: Vec<Layer>,
        trace: WireTrace,
        contracts: Vec<Readout>,
        input_scale: i64,
    ) -> ReluNetwork {
        ReluNetwork {
            input_width,
            layers,
            trace,
            contracts,
            input_scale,
            fast: OnceLock::new(),
        }
    }

    /// Validates layer shapes.
    pub fn new(input_width: usize, layers: Vec<Layer>) -> Result<ReluNetwork, EvalError> {
        let mut width = input_width;
        for layer in &layers {
            if layer.input_width != width || layer.weights.len() != layer.bias.len() {
                return Err(EvalError::WidthMismatch {
                    expected: width,
                    found: layer.input_width,
                });
            }
            if layer
                .weights
                .iter()
                .flatten()
                .any(|(c, _)| *c as usize >= width)
            {
                return Err(EvalError::WidthMismatch {
                    expected: width,
                    found: layer.input_width,
                });
            }
            width = layer.width();
        }
        Ok(ReluNetwork::from_parts(
            input_width,
            layers,
            WireTrace::default(),
            Vec::new(),
            1,
        ))
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(self.input_width, Layer::width)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn trace(&self) -> &WireTrace {
        &self.trace
    }

    pub fn contracts(&self) -> &[Readout] {
        &self.contracts
    }

    pub fn input_scale(&self) -> i64 {
        self.input_scale
    }

    pub(crate) fn into_parts(self) -> (usize, Vec<Layer>, WireTrace, Vec<Readout>, i64) {
        (
            self.input_width,
            self.layers,
            self.trace,
            self.contracts,
            self.input_scale,
        )
    }

    /// Hidden layers are all layers except the final one.
    pub fn hidden_widths(&self) -> Vec<usize> {
        let n = self.layers.len().saturating_sub(1);
        self.layers[..n].iter().map(Layer::width).collect()
    }

    pub fn stats(&self) -> NetStats {
        let widths = self.hidden_widths();
        let total: usize = widths.iter().sum();
        NetStats {
            depth: widths.len(),
            min: widths.iter().copied().min().unwrap_or(0),
            max: widths.iter().copied().max().unwrap_or(0),
            avg: if widths.is_empty() {
                0.0
            } else {
                total as f64 / widths.len() as f64
            },
            total,
            widths,
        }
    }

    fn check_width(&self, x: &[BigRational]) -> Result<(), EvalError> {
        if x.len() != self.input_width {
            return Err(EvalError::WidthMismatch {
                expected: self.input_width,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Exact forward pass; uses the scaled-integer plan when the input allows it.
    pub fn eval(&self, x: &[BigRational]) -> Result<Vec<BigRational>, EvalError> {
        self.check_width(x)?;
        if let Some(plan) = self.fast_plan() {
            if let Some(out) = plan.eval_rational(x, &mut Scratch::default()) {
                return Ok(out);
            }
        }
        self.eval_reference(x)
    }

    /// Forward pass on integer inputs for networks with integer outputs.
    pub fn eval_ints(&self, x: &[i64]) -> Result<Vec<i64>, EvalError> {
        if x.len() != self.input_width {
            return Err(EvalError::WidthMismatch {
                expected: self.input_width,
                found: x.len(),
            });
        }
        if let Some(plan) = self.fast_plan() {
            if let Some(out) = plan.eval_int(x, &mut Scratch::default()) {
                return Ok(out);
            }
        }
        let out = self.eval_reference(&super::rats(x))?;
        out.iter()
            .enumerate()
            .map(|(i, v)| {
                if !v.is_integer() {
                    return Err(EvalError::NonIntegerOutput(i));
                }
                i64::try_from(v.to_integer()).map_err(|_| EvalError::NonIntegerOutput(i))
            })
            .collect()
    }

    /// Exact forward pass in arbitrary-precision rationals only.
    pub fn eval_reference(&self, x: &[BigRational]) -> Result<Vec<BigRational>, EvalError> {
        self.check_width(x)?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer.apply(&cur);
        }
        Ok(cur)
    }

    /// Activations of every layer, the input first.
    pub fn activations(&self, x: &[BigRational]) -> Result<Vec<Vec<BigRational>>, EvalError> {
        self.check_width(x)?;
        let mut acts = vec![x.to_vec()];
        for layer in &self.layers {
            let next = layer.apply(acts.last().expect("input present"));
            acts.push(next);
        }
        Ok(acts)
    }

    /// Values of a named wire under the given activations.
    pub fn read_wire(&self, acts: &[Vec<BigRational>], name: &str) -> Option<Vec<BigRational>> {
        self.trace
            .get(name)
            .map(|w| w.entries.iter().map(|r| r.read(acts)).collect())
    }

    /// Forward pass that also asserts every integer-contract wire is integral.
    pub fn eval_checked(&self, x: &[BigRational]) -> Result<Vec<BigRational>, EvalError> {
        let acts = self.activations(x)?;
        for (i, c) in self.contracts.iter().enumerate() {
            let v = c.read(&acts);
            if !v.is_integer() {
                return Err(EvalError::NonIntegerWire {
                    check: i,
                    value: v.to_string(),
                });
            }
        }
        Ok(acts.last().cloned().unwrap_or_default())
    }

    /// The scaled-integer plan, compiled on first use; `None` when scales overflow.
    pub fn fast_plan(&self) -> Option<&FastPlan> {
        self.fast.get_or_init(|| FastPlan::compile(self)).as_ref()
    }

    /// `x ↦ x` with no hidden layer.
    pub fn identity(width: usize) -> ReluNetwork {
        ReluNetwork::from_parts(
            width,
            vec![Layer::identity(width, false)],
            WireTrace::default(),
            Vec::new(),
            1,
        )
    }

    /// `x ↦ x` through `depth` hidden layers of positive/negative part pairs.
    pub fn passthrough(width: usize, depth: usize) -> ReluNetwork {
        let mut net = ReluNetwork::identity(width);
        for _ in 0..depth {
            net = net.deepened();
        }
        net
    }

    /// Same function with one more hidden layer.
    fn deepened(&self) -> ReluNetwork {
        let mut layers = self.layers.clone();
        let last = layers.pop().expect("output layer");
        if layers.is_empty() {
            // split each input into ReLU(x), ReLU(−x)
            let w = self.input_width;
            let split = Layer {
                weights: (0..2 * w)
                    .map(|r| {
                        vec![(
                            (r / 2) as u32,
                            if r % 2 == 0 {
                                BigRational::one()
                            } else {
                                -BigRational::one()
                            },
                        )]
                    })
                    .collect(),
                bias: vec![BigRational::zero(); 2 * w],
                relu: true,
                input_width: w,
            };
            let out = Layer {
                weights: last
                    .weights
                    .iter()
                    .map(|row| {
                        row.iter()
                            .flat_map(|(c, v)| [(2 * c, v.clone()), (2 * c + 1, -v.clone())])
                            .collect()
                    })
                    .collect(),
                bias: last.bias.clone(),
                relu: false,
                input_width: 2 * w,
            };
            layers.push(split);
            layers.push(out);
        } else {
            // hidden activations are nonnegative, so a ReLU identity layer is exact
            let w = layers.last().map_or(0, Layer::width);
            layers.push(Layer::identity(w, true));
            layers.push(last);
        }
        ReluNetwork::from_parts(
            self.input_width,
            layers,
            self.trace.clone(),
            self.contracts.clone(),
            self.input_scale,
        )
    }

    /// `x ↦ f(g(x))`: g's affine output map is folded into f's first layer.
    pub fn compose(f: &ReluNetwork, g: &ReluNetwork) -> Result<ReluNetwork, EvalError> {
        if g.output_width() != f.input_width {
            return Err(EvalError::WidthMismatch {
                expected: f.input_width,
                found: g.output_width(),
            });
        }
        let g_hidden = g.layers.len() - 1;
        let g_out = &g.layers[g_hidden];
        let mut layers: Vec<Layer> = g.layers[..g_hidden].to_vec();
        let f_first = &f.layers[0];
        // W_f (W_g a + b_g) + b_f
        let mut weights = Vec::with_capacity(f_first.width());
        let mut bias = Vec::with_capacity(f_first.width());
        for (row, b) in f_first.weights.iter().zip(&f_first.bias) {
            let mut acc: HashMap<u32, BigRational> = HashMap::new();
            let mut b_acc = b.clone();
            for (k, w) in row {
                for (c, v) in &g_out.weights[*k as usize] {
                    *acc.entry(*c).or_insert_with(BigRational::zero) += w * v;
                }
                b_acc += w * &g_out.bias[*k as usize];
            }
            let mut merged: Vec<(u32, BigRational)> =
                acc.into_iter().filter(|(_, v)| !v.is_zero()).collect();
            merged.sort_by_key(|(c, _)| *c);
            weights.push(merged);
            bias.push(b_acc);
        }
        layers.push(Layer {
            weights,
            bias,
            relu: f_first.relu,
            input_width: g_out.input_width,
        });
        layers.extend(f.layers[1..].iter().cloned());

        // f's wires that read its input are rewritten through g's output map
        let g_hidden_u = g_hidden as u32;
        let rewrite = |r: &Readout| -> Readout {
            let mut terms = Vec::new();
            let mut constant = r.constant.clone();
            for (l, i, w) in &r.terms {
                if *l == 0 {
                    for (c, v) in &g_out.weights[*i as usize] {
                        terms.push((g_hidden_u, *c, w * v));
                    }
                    constant += w * &g_out.bias[*i as usize];
                } else {
                    terms.push((l + g_hidden_u, *i, w.clone()));
                }
            }
            Readout { terms, constant }
        };
        let mut wires: Vec<Wire> = g.trace.wires.clone();
        for w in &f.trace.wires {
            if g.trace.get(&w.name).is_some() {
                return Err(EvalError::DuplicateWire(w.name.clone()));
            }
            wires.push(Wire {
                name: w.name.clone(),
                shape: w.shape.clone(),
                entries: w.entries.iter().map(rewrite).collect(),
            });
        }
        let mut contracts = g.contracts.clone();
        contracts.extend(f.contracts.iter().map(rewrite));
        Ok(ReluNetwork::from_parts(
            g.input_width,
            layers,
            WireTrace::new(wires),
            contracts,
            g.input_scale,
        ))
    }

    /// `(x, y) ↦ (f(x), g(y))`; the shallower network is padded with identity layers.
    pub fn parallel(f: &ReluNetwork, g: &ReluNetwork) -> Result<ReluNetwork, EvalError> {
        let mut a = f.clone();
        let mut b = g.clone();
        while a.layers.len() < b.layers.len() {
            a = a.deepened();
        }
        while b.layers.len() < a.layers.len() {
            b = b.deepened();
        }
        let mut layers = Vec::with_capacity(a.layers.len());
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            let off = la.input_width as u32;
            let mut weights = la.weights.clone();
            weights.extend(
                lb.weights
                    .iter()
                    .map(|row| row.iter().map(|(c, w)| (c + off, w.clone())).collect()),
            );
            let mut bias = la.bias.clone();
            bias.extend(lb.bias.iter().cloned());
            if la.relu != lb.relu {
                return Err(EvalError::WidthMismatch {
                    expected: la.width(),
                    found: lb.width(),
                });
            }
            layers.push(Layer {
                weights,
                bias,
                relu: la.relu,
                input_width: la.input_width + lb.input_width,
            });
        }
        // b's readouts shift by a's width in each layer
        let widths_a: Vec<u32> = std::iter::once(a.input_width as u32)
            .chain(a.layers.iter().map(|l| l.width() as u32))
            .collect();
        let shift = |r: &Readout| Readout {
            terms: r
                .terms
                .iter()
                .map(|(l, i, w)| (*l, i + widths_a[*l as usize], w.clone()))
                .collect(),
            constant: r.constant.clone(),
        };
        let mut wires = a.trace.wires.clone();
        for w in &b.trace.wires {
            if a.trace.get(&w.name).is_some() {
                return Err(EvalError::DuplicateWire(w.name.clone()));
            }
            wires.push(Wire {
                name: w.name.clone(),
                shape: w.shape.clone(),
                entries: w.entries.iter().map(shift).collect(),
            });
        }
        let mut contracts = a.contracts.clone();
        contracts.extend(b.contracts.iter().map(shift));
        let scale = lcm_i64(a.input_scale, b.input_scale);
        Ok(ReluNetwork::from_parts(
            a.input_width + b.input_width,
            layers,
            WireTrace::new(wires),
            contracts,
            scale,
        ))
    }

    /// Wires shifted by `by` layers; used when embedding a network after others.
    pub fn shifted_trace(&self, by: u32) -> Vec<Wire> {
        self.trace
            .wires
            .iter()
            .map(|w| Wire {
                name: w.name.clone(),
                shape: w.shape.clone(),
                entries: w.entries.iter().map(|r| r.shifted(by)).collect(),
            })
            .collect()
    }
}

fn lcm_i64(a: i64, b: i64) -> i64 {
    use num_integer::Integer;
    a.lcm(&b)
}

#[allow(dead_code)]
pub(crate) fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}
