//! Scaled-integer evaluation. Each column `c` gets a scale `s_c` such that
//! `s_c · value` is an integer whenever the inputs are multiples of `1/input_scale`;
//! the forward pass then runs in checked `i64` arithmetic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::network::ReluNetwork;

const MAX_SCALE: i64 = 1 << 24;

#[derive(Debug, Clone)]
struct FastLayer {
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
    weights: Vec<i64>,
    bias: Vec<i64>,
    relu: bool,
}

/// Compiled integer plan of a [`ReluNetwork`].
#[derive(Debug, Clone)]
pub struct FastPlan {
    input_scale: i64,
    layers: Vec<FastLayer>,
    out_scales: Vec<i64>,
}

/// Reusable buffers for [`FastPlan::eval_scaled`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    a: Vec<i64>,
    b: Vec<i64>,
}

fn to_i64(v: &BigInt) -> Option<i64> {
    v.to_i64()
}

impl FastPlan {
    pub fn compile(net: &ReluNetwork) -> Option<FastPlan> {
        let input_scale = net.input_scale();
        let mut scales: Vec<i64> = vec![input_scale; net.input_width()];
        let mut layers = Vec::with_capacity(net.layers().len());
        for layer in net.layers() {
            let mut row_ptr = Vec::with_capacity(layer.width() + 1);
            let mut cols = Vec::new();
            let mut weights = Vec::new();
            let mut bias = Vec::with_capacity(layer.width());
            let mut next_scales = Vec::with_capacity(layer.width());
            row_ptr.push(0u32);
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                // value = Σ (w_c / s_c) X_c + b, so s_u clears every denominator
                let mut s_u = to_i64(b.denom())?;
                let per_col: Vec<BigRational> = row
                    .iter()
                    .map(|(c, w)| w / BigRational::from_integer(BigInt::from(scales[*c as usize])))
                    .collect();
                for r in &per_col {
                    s_u = s_u.lcm(&to_i64(r.denom())?);
                    if s_u > MAX_SCALE {
                        return None;
                    }
                }
                let s_big = BigRational::from_integer(BigInt::from(s_u));
                for ((c, _), r) in row.iter().zip(&per_col) {
                    let w = r * &s_big;
                    debug_assert!(w.is_integer());
                    cols.push(*c);
                    weights.push(to_i64(&w.to_integer())?);
                }
                bias.push(to_i64(&(b * &s_big).to_integer())?);
                next_scales.push(s_u);
                row_ptr.push(cols.len() as u32);
            }
            layers.push(FastLayer {
                row_ptr,
                cols,
                weights,
                bias,
                relu: layer.relu,
            });
            scales = next_scales;
        }
        Some(FastPlan {
            input_scale,
            layers,
            out_scales: scales,
        })
    }

    pub fn input_scale(&self) -> i64 {
        self.input_scale
    }

    /// Scale of each output coordinate.
    pub fn output_scales(&self) -> &[i64] {
        &self.out_scales
    }

    /// Forward pass on `input_scale · x`. Returns scaled outputs, or `None` on overflow.
    pub fn eval_scaled<'s>(&self, x: &[i64], scratch: &'s mut Scratch) -> Option<&'s [i64]> {
        let Scratch { a, b } = scratch;
        a.clear();
        a.extend_from_slice(x);
        for layer in &self.layers {
            b.clear();
            for (r, &bias) in layer.bias.iter().enumerate() {
                let (lo, hi) = (layer.row_ptr[r] as usize, layer.row_ptr[r + 1] as usize);
                let mut acc = bias;
                for k in lo..hi {
                    let v = a[layer.cols[k] as usize];
                    if v != 0 {
                        acc = acc.checked_add(layer.weights[k].checked_mul(v)?)?;
                    }
                }
                b.push(if layer.relu { acc.max(0) } else { acc });
            }
            std::mem::swap(a, b);
        }
        Some(a.as_slice())
    }

    /// Forward pass on integer inputs with integer outputs; `None` if either fails.
    pub fn eval_int(&self, x: &[i64], scratch: &mut Scratch) -> Option<Vec<i64>> {
        let scaled: Vec<i64> = if self.input_scale == 1 {
            x.to_vec()
        } else {
            x.iter()
                .map(|v| v.checked_mul(self.input_scale))
                .collect::<Option<_>>()?
        };
        let out = self.eval_scaled(&scaled, scratch)?;
        out.iter()
            .zip(&self.out_scales)
            .map(|(v, s)| if v % s == 0 { Some(v / s) } else { None })
            .collect()
    }

    /// Forward pass on rationals; `None` if an input is off the input grid or a value overflows.
    pub fn eval_rational(
        &self,
        x: &[BigRational],
        scratch: &mut Scratch,
    ) -> Option<Vec<BigRational>> {
        let s = BigRational::from_integer(BigInt::from(self.input_scale));
        let mut scaled = Vec::with_capacity(x.len());
        for v in x {
            let y = v * &s;
            if !y.is_integer() {
                return None;
            }
            scaled.push(to_i64(&y.to_integer())?);
        }
        let out = self.eval_scaled(&scaled, scratch)?;
        Some(
            out.iter()
                .zip(&self.out_scales)
                .map(|(v, s)| {
                    if *s == 1 {
                        BigRational::from_integer(BigInt::from(*v))
                    } else {
                        BigRational::new(BigInt::from(*v), BigInt::from(*s))
                    }
                })
                .collect(),
        )
    }
}

#[allow(dead_code)]
fn is_unit(r: &BigRational) -> bool {
    r.is_one() || r.is_zero()
}
