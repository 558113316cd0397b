//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] stores the Taylor coefficients `∂^β f(p) / β!` of a real function
//! at a base point for every multi-index `β` with `|β| ≤ order`. Coefficients
//! live in a fixed 35-slot array in graded order (all degree-0 terms, then
//! degree 1, ...), so an order-`k` jet reads only a prefix of the slots and
//! lowering the order is a pure truncation.
//!
//! Supported shapes are those whose coefficient count fits the array: order 3
//! in four variables, order 4 in three, order 6 in one or two. Operations on
//! jets of different orders truncate to the smaller order.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

pub const MAX_VARS: usize = 4;
pub const MAX_ORDER: usize = 6;
pub const MAX_COEFFS: usize = 35;

/// Constant terms with magnitude below this are treated as zero divisors.
pub const SINGULAR_EPS: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },
    #[error("unsupported jet shape: order {order} in {nvars} variables")]
    Unsupported { order: usize, nvars: usize },
    #[error("jet shape mismatch: {left} vs {right} variables")]
    ShapeMismatch { left: usize, right: usize },
    #[error("singular point: {0}")]
    Singular(String),
}

/// Multi-index bookkeeping for one variable count.
struct Layout {
    multi: Vec<[u8; MAX_VARS]>,
    /// `count[k]` = number of multi-indices of degree ≤ k.
    count: Vec<usize>,
    /// Product triples `(a, b, c)` with `multi[a] + multi[b] = multi[c]`, sorted by `c`.
    mul: Vec<(u8, u8, u8)>,
    /// `mul_prefix[k]` = number of triples whose output has degree ≤ k.
    mul_prefix: Vec<usize>,
    /// `shift[idx][i]` = index of `multi[idx] + e_i`, if it exists in the layout.
    shift: Vec<[Option<u8>; MAX_VARS]>,
    /// `β!` for every slot.
    factorial: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of coefficients of an order-`order` jet in `nvars` variables.
pub fn coeff_count(nvars: usize, order: usize) -> usize {
    binomial(nvars + order, order)
}

/// Highest order supported for `nvars` variables.
pub fn max_order_for(nvars: usize) -> usize {
    (0..=MAX_ORDER)
        .rev()
        .find(|&k| coeff_count(nvars, k) <= MAX_COEFFS)
        .unwrap_or(0)
}

impl Layout {
    fn build(nvars: usize) -> Layout {
        let max_order = max_order_for(nvars);
        let mut multi = Vec::new();
        let mut count = Vec::new();
        for deg in 0..=max_order {
            push_degree(nvars, deg, &mut multi);
            count.push(multi.len());
        }
        let lookup = |m: &[u8; MAX_VARS]| multi.iter().position(|x| x == m);
        let mut mul = Vec::new();
        for (c, mc) in multi.iter().enumerate() {
            for (a, ma) in multi.iter().enumerate() {
                if (0..MAX_VARS).all(|i| ma[i] <= mc[i]) {
                    let mut mb = *mc;
                    for i in 0..MAX_VARS {
                        mb[i] -= ma[i];
                    }
                    let b = lookup(&mb).expect("sub-multi-index present");
                    mul.push((a as u8, b as u8, c as u8));
                }
            }
        }
        let mul_prefix = count
            .iter()
            .map(|&n| mul.iter().filter(|t| (t.2 as usize) < n).count())
            .collect();
        let shift = multi
            .iter()
            .map(|m| {
                let mut s = [None; MAX_VARS];
                for (i, slot) in s.iter_mut().enumerate().take(nvars) {
                    let mut up = *m;
                    up[i] += 1;
                    *slot = lookup(&up).map(|v| v as u8);
                }
                s
            })
            .collect();
        let factorial = multi
            .iter()
            .map(|m| {
                m.iter()
                    .map(|&v| (1..=v as u32).map(f64::from).product::<f64>())
                    .product()
            })
            .collect();
        Layout {
            multi,
            count,
            mul,
            mul_prefix,
            shift,
            factorial,
        }
    }
}

/// Appends all multi-indices of exact degree `deg` in lexicographically
/// descending order (x₀ first).
fn push_degree(nvars: usize, deg: usize, out: &mut Vec<[u8; MAX_VARS]>) {
    fn rec(var: usize, nvars: usize, left: usize, cur: &mut [u8; MAX_VARS], out: &mut Vec<[u8; MAX_VARS]>) {
        if var + 1 == nvars {
            cur[var] = left as u8;
            out.push(*cur);
            cur[var] = 0;
            return;
        }
        for k in (0..=left).rev() {
            cur[var] = k as u8;
            rec(var + 1, nvars, left - k, cur, out);
        }
        cur[var] = 0;
    }
    let mut cur = [0u8; MAX_VARS];
    rec(0, nvars, deg, &mut cur, out);
}

fn layout(nvars: usize) -> &'static Layout {
    static LAYOUTS: [OnceLock<Layout>; MAX_VARS] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    LAYOUTS[nvars - 1].get_or_init(|| Layout::build(nvars))
}

/// Truncated Taylor expansion of a scalar at a point.
#[derive(Clone, Copy)]
pub struct Jet {
    nvars: u8,
    order: u8,
    coeffs: [f64; MAX_COEFFS],
}

impl Jet {
    fn check_shape(order: usize, nvars: usize) -> Result<(), JetError> {
        if nvars == 0 || nvars > MAX_VARS || order > max_order_for(nvars) {
            return Err(JetError::Unsupported { order, nvars });
        }
        Ok(())
    }

    /// Constant jet.
    ///
    /// Panics on an unsupported shape; use [`Jet::try_constant`] for input
    /// that has not been validated.
    pub fn constant(value: f64, order: usize, nvars: usize) -> Jet {
        Self::try_constant(value, order, nvars).expect("supported jet shape")
    }

    pub fn try_constant(value: f64, order: usize, nvars: usize) -> Result<Jet, JetError> {
        Self::check_shape(order, nvars)?;
        let mut coeffs = [0.0; MAX_COEFFS];
        coeffs[0] = value;
        Ok(Jet {
            nvars: nvars as u8,
            order: order as u8,
            coeffs,
        })
    }

    pub fn zero(order: usize, nvars: usize) -> Jet {
        Self::constant(0.0, order, nvars)
    }

    /// Jet of the coordinate function `x_i` at a point whose `i`-th coordinate is `value`.
    pub fn variable(index: usize, value: f64, order: usize, nvars: usize) -> Result<Jet, JetError> {
        if index >= nvars {
            return Err(JetError::IndexOutOfRange { index, nvars });
        }
        let mut jet = Self::try_constant(value, order, nvars)?;
        if order >= 1 {
            // Degree-one slots follow the constant in variable order.
            jet.coeffs[1 + index] = 1.0;
        }
        Ok(jet)
    }

    /// Builds a jet from coefficients given in the crate's graded slot order.
    pub fn from_coeffs(coeffs: &[f64], order: usize, nvars: usize) -> Result<Jet, JetError> {
        let mut jet = Self::try_constant(0.0, order, nvars)?;
        let n = jet.len();
        if coeffs.len() != n {
            return Err(JetError::Unsupported { order, nvars });
        }
        jet.coeffs[..n].copy_from_slice(coeffs);
        Ok(jet)
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn len(&self) -> usize {
        layout(self.nvars()).count[self.order()]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Constant term, the value at the base point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..self.len()]
    }

    /// Multi-indices of the coefficient slots, in slot order.
    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        layout(self.nvars()).multi[..self.len()]
            .iter()
            .map(|m| m[..self.nvars()].iter().map(|&v| v as usize).collect())
            .collect()
    }

    fn slot(&self, multi: &[usize]) -> Option<usize> {
        if multi.len() != self.nvars() || multi.iter().sum::<usize>() > self.order() {
            return None;
        }
        let mut key = [0u8; MAX_VARS];
        for (k, &m) in key.iter_mut().zip(multi) {
            *k = m as u8;
        }
        layout(self.nvars()).multi[..self.len()].iter().position(|m| *m == key)
    }

    /// Taylor coefficient `∂^β f / β!`; zero beyond the order.
    pub fn coeff(&self, multi: &[usize]) -> f64 {
        self.slot(multi).map_or(0.0, |s| self.coeffs[s])
    }

    /// Raw partial derivative `∂^β f` at the base point.
    pub fn derivative(&self, multi: &[usize]) -> f64 {
        self.slot(multi)
            .map_or(0.0, |s| self.coeffs[s] * layout(self.nvars()).factorial[s])
    }

    /// First partial derivatives at the base point.
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.nvars())
            .map(|i| if self.order() >= 1 { self.coeffs[1 + i] } else { 0.0 })
            .collect()
    }

    /// The jet of `∂f/∂x_i`, one order lower.
    ///
    /// Panics on an order-0 jet: the derivative is not represented.
    pub fn partial(&self, i: usize) -> Jet {
        assert!(self.order >= 1, "partial derivative of an order-0 jet");
        assert!(i < self.nvars(), "variable index out of range");
        let lay = layout(self.nvars());
        let order = self.order() - 1;
        let n = lay.count[order];
        let mut coeffs = [0.0; MAX_COEFFS];
        for (idx, c) in coeffs.iter_mut().enumerate().take(n) {
            let up = lay.shift[idx][i].expect("shifted slot within layout") as usize;
            *c = (lay.multi[idx][i] as f64 + 1.0) * self.coeffs[up];
        }
        Jet {
            nvars: self.nvars,
            order: order as u8,
            coeffs,
        }
    }

    /// Drops all coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return *self;
        }
        let n = layout(self.nvars()).count[order];
        let mut coeffs = [0.0; MAX_COEFFS];
        coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        Jet {
            nvars: self.nvars,
            order: order as u8,
            coeffs,
        }
    }

    /// Copy with the unused storage slots overwritten. Arithmetic must not
    /// observe these slots; tests use this to check truncation closure.
    #[doc(hidden)]
    pub fn with_padding(&self, mut fill: impl FnMut() -> f64) -> Jet {
        let mut out = *self;
        for c in out.coeffs[self.len()..].iter_mut() {
            *c = fill();
        }
        out
    }

    fn joint(&self, other: &Jet) -> (usize, usize) {
        assert_eq!(self.nvars, other.nvars, "jet variable count mismatch");
        (self.nvars(), self.order().min(other.order()))
    }

    fn map_coeffs(&self, f: impl Fn(f64) -> f64) -> Jet {
        let n = self.len();
        let mut out = *self;
        for c in out.coeffs[..n].iter_mut() {
            *c = f(*c);
        }
        for c in out.coeffs[n..].iter_mut() {
            *c = 0.0;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        self.map_coeffs(|c| c * s)
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let (nvars, order) = self.joint(other);
        let n = layout(nvars).count[order];
        let mut coeffs = [0.0; MAX_COEFFS];
        for (i, c) in coeffs.iter_mut().enumerate().take(n) {
            *c = f(self.coeffs[i], other.coeffs[i]);
        }
        Jet {
            nvars: nvars as u8,
            order: order as u8,
            coeffs,
        }
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        let (nvars, order) = self.joint(other);
        let lay = layout(nvars);
        let mut coeffs = [0.0; MAX_COEFFS];
        for &(a, b, c) in &lay.mul[..lay.mul_prefix[order]] {
            coeffs[c as usize] += self.coeffs[a as usize] * other.coeffs[b as usize];
        }
        Jet {
            nvars: nvars as u8,
            order: order as u8,
            coeffs,
        }
    }

    /// `f(a)` for a univariate `f` given by its derivatives `f^(k)(a₀)`, k = 0..=order.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        debug_assert!(derivs.len() > order);
        let mut h = *self;
        h.coeffs[0] = 0.0;
        // Horner in the nilpotent part h = a - a₀.
        let mut fact = (1..=order).map(|k| k as f64).product::<f64>();
        let mut acc = Jet::constant(derivs[order] / fact, order, self.nvars());
        for k in (0..order).rev() {
            fact /= (k + 1) as f64;
            acc = acc.mul_jet(&h);
            acc.coeffs[0] += derivs[k] / fact;
        }
        acc
    }

    fn singular(what: &str, value: f64) -> JetError {
        JetError::Singular(format!("{what} at constant term {value:e}"))
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if a.abs() < SINGULAR_EPS || !a.is_finite() {
            return Err(Self::singular("division by a vanishing jet", a));
        }
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut cur = 1.0 / a;
        for k in 0..=self.order() {
            d.push(cur);
            cur *= -((k + 1) as f64) / a;
        }
        Ok(self.compose(&d))
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(*self * other.recip()?)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Self::singular("log of a nonpositive value", a));
        }
        let mut d = vec![a.ln()];
        let mut cur = 1.0 / a;
        for k in 1..=self.order() {
            d.push(cur);
            cur *= -(k as f64) / a;
        }
        Ok(self.compose(&d))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 4]).collect::<Vec<_>>())
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&(0..=self.order()).map(|k| if k % 2 == 0 { s } else { c }).collect::<Vec<_>>())
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&(0..=self.order()).map(|k| if k % 2 == 0 { c } else { s }).collect::<Vec<_>>())
    }

    /// `a^r` for real `r`, composing the binomial series; requires a positive base.
    pub fn powf(&self, r: f64) -> Result<Jet, JetError> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Self::singular("real power of a nonpositive value", a));
        }
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut coef = 1.0;
        for k in 0..=self.order() {
            d.push(coef * a.powf(r - k as f64));
            coef *= r - k as f64;
        }
        Ok(self.compose(&d))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Self::singular("sqrt of a nonpositive value", a));
        }
        self.powf(0.5)
    }

    /// Integer power by repeated squaring; negative exponents go through the reciprocal.
    pub fn powi(&self, n: i32) -> Result<Jet, JetError> {
        let base = if n < 0 { self.recip()? } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = Jet::constant(1.0, self.order(), self.nvars());
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_jet(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_jet(&sq);
            }
        }
        Ok(acc)
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Jet) -> bool {
        self.nvars == other.nvars && self.order == other.order && self.coeffs() == other.coeffs()
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs())
            .finish()
    }
}

/// Binary operation selector for [`jet_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked binary arithmetic; reports shape mismatches and singular divisors
/// instead of panicking.
pub fn jet_arith(a: &Jet, b: &Jet, op: JetOp) -> Result<Jet, JetError> {
    if a.nvars != b.nvars {
        return Err(JetError::ShapeMismatch {
            left: a.nvars(),
            right: b.nvars(),
        });
    }
    Ok(match op {
        JetOp::Add => *a + *b,
        JetOp::Sub => *a - *b,
        JetOp::Mul => *a * *b,
        JetOp::Div => a.try_div(b)?,
    })
}

/// Elementary function selector for [`jet_elem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetFn {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
    PowInt(i32),
}

pub fn jet_elem(a: &Jet, f: JetFn) -> Result<Jet, JetError> {
    match f {
        JetFn::Exp => Ok(a.exp()),
        JetFn::Log => a.ln(),
        JetFn::Sin => Ok(a.sin()),
        JetFn::Cos => Ok(a.cos()),
        JetFn::Sinh => Ok(a.sinh()),
        JetFn::Cosh => Ok(a.cosh()),
        JetFn::Sqrt => a.sqrt(),
        JetFn::PowInt(n) => a.powi(n),
    }
}

/// Alias for [`Jet::variable`].
pub fn lift_variable(index: usize, value: f64, order: usize, nvars: usize) -> Result<Jet, JetError> {
    Jet::variable(index, value, order, nvars)
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_jet(&rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map_coeffs(|c| -c)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl std::iter::Sum for Jet {
    /// Panics on an empty iterator: the shape of the zero jet is unknown.
    fn sum<I: Iterator<Item = Jet>>(mut iter: I) -> Jet {
        let first = iter.next().expect("sum of an empty jet iterator");
        iter.fold(first, |acc, j| acc + j)
    }
}
