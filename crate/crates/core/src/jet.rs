//! Truncated Taylor series ("jets") for forward-mode differentiation.
//!
//! A [`Jet`] stores the normalized Taylor coefficients `c[k] = f^(k)(x0) / k!`
//! of a quantity up to a fixed order. Evaluating a smooth function on the jet
//! of the identity map at `x0` yields every derivative of that function at
//! `x0` to working precision, which is how force models obtain `g'`, `g''`
//! and the potential derivatives at the origin without finite differences.
//!
//! The [`Real`] trait abstracts over `f64` and `Jet` so that closed-form force
//! laws and the expression evaluator are written once.

use core::ops::{Add, Div, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;

/// Highest supported order (coefficients `0..=MAX_ORDER`).
pub const MAX_ORDER: usize = 7;
const CAP: usize = MAX_ORDER + 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; CAP],
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; CAP];
        c[0] = value;
        Jet { order, c }
    }

    /// The identity map `x ↦ x` expanded at `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut j = Jet::constant(x0, order);
        if order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        assert!(!coeffs.is_empty() && coeffs.len() <= CAP);
        let mut c = [0.0; CAP];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Jet {
            order: coeffs.len() - 1,
            c,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Normalized coefficient `f^(k)/k!`.
    pub fn coeff(&self, k: usize) -> f64 {
        if k <= self.order {
            self.c[k]
        } else {
            0.0
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..=self.order]
    }

    /// The k-th derivative `f^(k)(x0)`.
    pub fn derivative(&self, k: usize) -> f64 {
        self.coeff(k) * factorial(k)
    }

    /// Jet of `f'` (one order lower).
    pub fn differentiate(&self) -> Jet {
        let order = self.order.saturating_sub(1);
        let mut c = [0.0; CAP];
        for k in 0..self.order {
            c[k] = (k + 1) as f64 * self.c[k + 1];
        }
        Jet { order, c }
    }

    /// Same series truncated (or zero-extended) to `order`.
    pub fn with_order(&self, order: usize) -> Jet {
        assert!(order <= MAX_ORDER);
        let mut c = self.c;
        for v in c.iter_mut().skip(order + 1) {
            *v = 0.0;
        }
        Jet { order, c }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|v| v.is_finite())
    }

    /// True when every non-constant coefficient vanishes.
    pub fn is_constant(&self) -> bool {
        self.c[1..=self.order].iter().all(|&v| v == 0.0)
    }

    fn unary(&self) -> (usize, [f64; CAP]) {
        (self.order, [0.0; CAP])
    }

    fn binary_order(&self, other: &Jet) -> usize {
        self.order.max(other.order)
    }

    /// `self^p` for a constant exponent, via the power recurrence.
    pub fn powf_const(&self, p: f64) -> Jet {
        let (n, mut y) = self.unary();
        let a = &self.c;
        y[0] = a[0].powf(p);
        if a[0] == 0.0 {
            // only the constant term is meaningful for an expansion at 0
            for v in y.iter_mut().skip(1).take(n) {
                *v = f64::NAN;
            }
            if p.fract() == 0.0 && p >= 0.0 {
                return self.powi(p as i32);
            }
            return Jet { order: n, c: y };
        }
        for k in 1..=n {
            let mut s = 0.0;
            for j in 1..=k {
                s += ((p + 1.0) * j as f64 - k as f64) * a[j] * y[k - j];
            }
            y[k] = s / (k as f64 * a[0]);
        }
        Jet { order: n, c: y }
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return Jet::constant(1.0, self.order) / self.powi(-n);
        }
        let mut acc = Jet::constant(1.0, self.order);
        let mut base = *self;
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn sqrt(&self) -> Jet {
        let (n, mut y) = self.unary();
        let a = &self.c;
        y[0] = Float::sqrt(a[0]);
        for k in 1..=n {
            let mut s = a[k];
            for j in 1..k {
                s -= y[j] * y[k - j];
            }
            y[k] = s / (2.0 * y[0]);
        }
        Jet { order: n, c: y }
    }

    pub fn exp(&self) -> Jet {
        let (n, mut y) = self.unary();
        let a = &self.c;
        y[0] = Float::exp(a[0]);
        for k in 1..=n {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * a[j] * y[k - j];
            }
            y[k] = s / k as f64;
        }
        Jet { order: n, c: y }
    }

    pub fn ln(&self) -> Jet {
        let (n, mut y) = self.unary();
        let a = &self.c;
        y[0] = Float::ln(a[0]);
        for k in 1..=n {
            let mut s = 0.0;
            for j in 1..k {
                s += j as f64 * y[j] * a[k - j];
            }
            y[k] = (a[k] - s / k as f64) / a[0];
        }
        Jet { order: n, c: y }
    }

    pub fn sin_cos(&self) -> (Jet, Jet) {
        let n = self.order;
        let a = &self.c;
        let mut s = [0.0; CAP];
        let mut c = [0.0; CAP];
        s[0] = Float::sin(a[0]);
        c[0] = Float::cos(a[0]);
        for k in 1..=n {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                ss += j as f64 * a[j] * c[k - j];
                cc += j as f64 * a[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = -cc / k as f64;
        }
        (Jet { order: n, c: s }, Jet { order: n, c })
    }

    /// Substitute `inner` into this series: `self` holds coefficients in
    /// powers of `x − x0` with `x0 = inner.value()`; the result carries the
    /// order of `inner`.
    pub fn compose(&self, inner: Jet) -> Jet {
        let dx = inner - inner.value();
        let mut acc = Jet::constant(self.coeff(self.order), inner.order);
        for k in (0..self.order).rev() {
            acc = acc * dx + self.c[k];
        }
        acc
    }

    /// Evaluate the truncated series at offset `dx` from the expansion point.
    pub fn eval_at(&self, dx: f64) -> f64 {
        self.coeffs().iter().rev().fold(0.0, |acc, &c| acc * dx + c)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut c = [0.0; CAP];
        for (k, v) in c.iter_mut().enumerate().take(order + 1) {
            *v = self.c[k] + rhs.c[k];
        }
        Jet { order, c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut c = [0.0; CAP];
        for (k, v) in c.iter_mut().enumerate().take(order + 1) {
            *v = self.c[k] - rhs.c[k];
        }
        Jet { order, c }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut c = [0.0; CAP];
        for k in 0..=order {
            let mut s = 0.0;
            for j in 0..=k {
                s += self.c[j] * rhs.c[k - j];
            }
            c[k] = s;
        }
        Jet { order, c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let order = self.binary_order(&rhs);
        let mut q = [0.0; CAP];
        for k in 0..=order {
            let mut s = self.c[k];
            for j in 1..=k {
                s -= rhs.c[j] * q[k - j];
            }
            q[k] = s / rhs.c[0];
        }
        Jet { order, c: q }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut c = self.c;
        for v in c.iter_mut() {
            *v = -*v;
        }
        Jet { order: self.order, c }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for v in self.c.iter_mut() {
            *v *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(mut self, rhs: f64) -> Jet {
        for v in self.c.iter_mut() {
            *v /= rhs;
        }
        self
    }
}

/// Scalar arithmetic shared by `f64` and [`Jet`].
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant carrying the same shape (jet order) as `self`.
    fn lift(&self, c: f64) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn pow(self, exponent: Self) -> Self;

    fn recip(self) -> Self {
        self.lift(1.0) / self
    }
}

impl Real for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn sqrt(self) -> Self {
        Float::sqrt(self)
    }
    fn exp(self) -> Self {
        Float::exp(self)
    }
    fn ln(self) -> Self {
        Float::ln(self)
    }
    fn sin(self) -> Self {
        Float::sin(self)
    }
    fn cos(self) -> Self {
        Float::cos(self)
    }
    fn powi(self, n: i32) -> Self {
        Float::powi(self, n)
    }
    fn pow(self, exponent: Self) -> Self {
        Float::powf(self, exponent)
    }
}

impl Real for Jet {
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn lift(&self, c: f64) -> Self {
        Jet::constant(c, self.order)
    }
    fn sqrt(self) -> Self {
        Jet::sqrt(&self)
    }
    fn exp(self) -> Self {
        Jet::exp(&self)
    }
    fn ln(self) -> Self {
        Jet::ln(&self)
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn powi(self, n: i32) -> Self {
        Jet::powi(&self, n)
    }
    fn pow(self, exponent: Self) -> Self {
        if exponent.is_constant() {
            let p = exponent.value();
            if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                return Jet::powi(&self, p as i32);
            }
            return self.powf_const(p);
        }
        (exponent * Jet::ln(&self)).exp()
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, abs: f64, rel: f64) {
        assert!((a - b).abs() <= abs.max(rel * a.abs().max(b.abs())), "{a} vs {b}");
    }

    #[test]
    fn derivatives_of_composite() {
        // f(x) = sin(x) * exp(x) at 0.3, derivatives by hand via Leibniz
        let x = Jet::variable(0.3, 3);
        let f = Real::sin(x) * Real::exp(x);
        let (s, c, e) = (0.3f64.sin(), 0.3f64.cos(), 0.3f64.exp());
        close(f.derivative(0), s * e, 1e-15, f64::EPSILON);
        close(f.derivative(1), (s + c) * e, 1e-15, f64::EPSILON);
        close(f.derivative(2), 2.0 * c * e, 1e-14, f64::EPSILON);
        close(f.derivative(3), 2.0 * (c - s) * e, 1e-14, f64::EPSILON);
    }

    #[test]
    fn sqrt_and_pow_agree() {
        let x = Jet::variable(1.7, 6);
        let a = Jet::sqrt(&(x * 4.0 + 1.0));
        let b = (x * 4.0 + 1.0).powf_const(0.5);
        for k in 0..=6 {
            close(a.coeff(k), b.coeff(k), f64::EPSILON, 1e-13);
        }
    }

    #[test]
    fn ln_inverts_exp() {
        let x = Jet::variable(-0.4, 7);
        let y = Jet::ln(&Jet::exp(&(x * x + x)));
        let z = x * x + x;
        for k in 0..=7 {
            assert!((y.coeff(k) - z.coeff(k)).abs() < 1e-14);
        }
    }

    #[test]
    fn division_by_series() {
        // 1/(1+x) at 0 is the geometric series with alternating signs
        let x = Jet::variable(0.0, 7);
        let q = Jet::constant(1.0, 7) / (x + 1.0);
        for k in 0..=7 {
            let expect = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(q.coeff(k), expect);
        }
    }

    #[test]
    fn composition_matches_direct_evaluation() {
        // exp(sin(x)) at x0 = 0.4 two ways
        let x = Jet::variable(0.4, 5);
        let direct = Real::exp(Real::sin(x));
        let outer = Real::exp(Jet::variable(0.4f64.sin(), 5));
        let composed = outer.compose(Real::sin(x));
        for k in 0..=5 {
            assert!((direct.coeff(k) - composed.coeff(k)).abs() < 1e-14);
        }
    }

    #[test]
    fn differentiate_shifts() {
        let p = Jet::from_coeffs(&[1.0, 2.0, 3.0, 4.0]);
        let d = p.differentiate();
        assert_eq!(d.coeffs(), &[2.0, 6.0, 12.0]);
    }

    #[test]
    fn integer_powers_of_negative_base() {
        let x = Jet::variable(-2.0, 2);
        let y = Real::pow(x, Jet::constant(3.0, 2));
        assert_eq!(y.value(), -8.0);
        assert_eq!(y.derivative(1), 12.0);
        assert_eq!(y.derivative(2), -12.0);
    }
}
