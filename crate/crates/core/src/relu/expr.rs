//! Affine expressions over network inputs and ReLU units.

use std::ops::{Add, Mul, Neg, Sub};

use super::coef::Coef;

/// A value feeding an affine map: an input coordinate or the output of a ReLU unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Src {
    Input(u32),
    Unit(u32),
}

/// `Σ coef · src + constant`, terms sorted by source without duplicates or zeros.
///
/// Every expression carries a sound range `[lo, hi]` over the declared input domain,
/// obtained by interval arithmetic and tightened where a gadget knows better.
#[derive(Debug, Clone, Default)]
pub struct Expr {
    pub(crate) terms: Vec<(Src, Coef)>,
    pub(crate) constant: Coef,
    pub(crate) lo: Coef,
    pub(crate) hi: Coef,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        self.terms == other.terms && self.constant == other.constant
    }
}

impl Eq for Expr {}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.terms.hash(state);
        self.constant.hash(state);
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::default()
    }

    pub fn constant(c: impl Into<Coef>) -> Expr {
        let c = c.into();
        Expr {
            terms: Vec::new(),
            constant: c,
            lo: c,
            hi: c,
        }
    }

    pub(crate) fn src(s: Src, lo: Coef, hi: Coef) -> Expr {
        Expr {
            terms: vec![(s, Coef::ONE)],
            constant: Coef::ZERO,
            lo,
            hi,
        }
    }

    pub fn terms(&self) -> &[(Src, Coef)] {
        &self.terms
    }

    pub fn constant_term(&self) -> Coef {
        self.constant
    }

    /// Sound range over the declared input domain.
    pub fn range(&self) -> (Coef, Coef) {
        (self.lo, self.hi)
    }

    pub fn as_const(&self) -> Option<Coef> {
        self.terms.is_empty().then_some(self.constant)
    }

    pub fn is_const(&self) -> bool {
        self.terms.is_empty()
    }

    /// Single unit with coefficient one and no offset.
    pub(crate) fn as_unit(&self) -> Option<u32> {
        match self.terms.as_slice() {
            [(Src::Unit(u), c)] if *c == Coef::ONE && self.constant.is_zero() => Some(*u),
            _ => None,
        }
    }

    /// Intersects the range with a bound known from construction.
    pub(crate) fn tightened(mut self, lo: Coef, hi: Coef) -> Expr {
        self.lo = self.lo.max(lo);
        self.hi = self.hi.min(hi);
        self
    }

    pub fn scale(&self, k: impl Into<Coef>) -> Expr {
        let k = k.into();
        if k.is_zero() {
            return Expr::zero();
        }
        let (lo, hi) = if k.is_negative() {
            (self.hi * k, self.lo * k)
        } else {
            (self.lo * k, self.hi * k)
        };
        Expr {
            terms: self.terms.iter().map(|&(s, c)| (s, c * k)).collect(),
            constant: self.constant * k,
            lo,
            hi,
        }
    }

    pub fn plus_const(&self, k: impl Into<Coef>) -> Expr {
        let k = k.into();
        Expr {
            terms: self.terms.clone(),
            constant: self.constant + k,
            lo: self.lo + k,
            hi: self.hi + k,
        }
    }

    /// `self + k·other`, merging sorted term lists.
    pub fn add_scaled(&self, other: &Expr, k: Coef) -> Expr {
        if k.is_zero() {
            return self.clone();
        }
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (a, b) = (self.terms[i], other.terms[j]);
            if a.0 < b.0 {
                terms.push(a);
                i += 1;
            } else if b.0 < a.0 {
                terms.push((b.0, b.1 * k));
                j += 1;
            } else {
                let c = a.1 + b.1 * k;
                if !c.is_zero() {
                    terms.push((a.0, c));
                }
                i += 1;
                j += 1;
            }
        }
        terms.extend_from_slice(&self.terms[i..]);
        terms.extend(other.terms[j..].iter().map(|&(s, c)| (s, c * k)));
        let (b_lo, b_hi) = if k.is_negative() {
            (other.hi * k, other.lo * k)
        } else {
            (other.lo * k, other.hi * k)
        };
        let constant = self.constant + other.constant * k;
        if terms.is_empty() {
            return Expr::constant(constant);
        }
        Expr {
            terms,
            constant,
            lo: self.lo + b_lo,
            hi: self.hi + b_hi,
        }
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a Expr>>(items: I) -> Expr {
        let mut layer: Vec<Expr> = Vec::new();
        let mut refs: Vec<&Expr> = items.into_iter().collect();
        if refs.len() <= 1 {
            return refs.pop().cloned().unwrap_or_default();
        }
        // pairwise merging keeps long sums near n log n
        for pair in refs.chunks(2) {
            layer.push(if pair.len() == 2 {
                pair[0] + pair[1]
            } else {
                pair[0].clone()
            });
        }
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            let mut it = layer.into_iter();
            while let Some(a) = it.next() {
                next.push(match it.next() {
                    Some(b) => a + &b,
                    None => a,
                });
            }
            layer = next;
        }
        layer.pop().unwrap_or_default()
    }
}

impl From<Coef> for Expr {
    fn from(c: Coef) -> Expr {
        Expr::constant(c)
    }
}

impl From<i128> for Expr {
    fn from(c: i128) -> Expr {
        Expr::constant(c)
    }
}

impl Add<&Expr> for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        self.add_scaled(rhs, Coef::ONE)
    }
}

impl Sub<&Expr> for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self.add_scaled(rhs, -Coef::ONE)
    }
}

impl Add<Expr> for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        self.add_scaled(&rhs, Coef::ONE)
    }
}

impl Sub<Expr> for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self.add_scaled(&rhs, -Coef::ONE)
    }
}

impl Add<&Expr> for Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        self.add_scaled(rhs, Coef::ONE)
    }
}

impl Sub<&Expr> for Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self.add_scaled(rhs, -Coef::ONE)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-Coef::ONE)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-Coef::ONE)
    }
}

impl<K: Into<Coef>> Mul<K> for &Expr {
    type Output = Expr;
    fn mul(self, k: K) -> Expr {
        self.scale(k)
    }
}

impl<K: Into<Coef>> Mul<K> for Expr {
    type Output = Expr;
    fn mul(self, k: K) -> Expr {
        self.scale(k)
    }
}
