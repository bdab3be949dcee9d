//! Force models `g` with their potentials `V(x) = ∫₀ˣ g`, derivative stacks
//! and admissible domains.
//!
//! A [`ForceModel`] is immutable and cheap to clone; the underlying
//! [`ForceLaw`] is shared behind an `Arc`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::numeric::diff::ridders;

pub mod catalog;
mod center;
mod expression;

pub use center::CenterBound;
pub use expression::{model_from_expression, ExpressionLaw};

/// Highest potential derivative kept at the origin.
pub const TAYLOR_ORDER: usize = 6;

/// Points per side used by the validation grid.
const VALIDATION_POINTS: usize = 100;

/// An open interval `(lo, hi)` containing 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if !(lo.is_finite() && hi.is_finite()) || !(lo < 0.0 && 0.0 < hi) {
            return Err(Error::InvalidParameter(format!(
                "domain ({lo}, {hi}) must be a finite open interval around 0"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }
}

/// How derivatives of `g` are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMode {
    /// Hand-written closed forms.
    Analytic,
    /// Forward-mode Taylor arithmetic through the model's evaluation path.
    Automatic,
}

/// A smooth scalar function evaluable on floats and on jets.
pub trait SmoothFn: Send + Sync + fmt::Debug {
    fn eval(&self, x: f64) -> f64;
    fn eval_jet(&self, x: Jet) -> Jet;
}

impl SmoothFn for crate::expr::Expr {
    fn eval(&self, x: f64) -> f64 {
        self.eval_f64(x)
    }
    fn eval_jet(&self, x: Jet) -> Jet {
        crate::expr::Expr::eval_jet(self, x)
    }
}

/// The force law `g`, its derivatives and its potential.
pub trait ForceLaw: Send + Sync + fmt::Debug {
    fn force(&self, x: f64) -> f64;

    fn force_jet(&self, x: Jet) -> Jet;

    fn force_prime(&self, x: f64) -> f64 {
        self.force_jet(Jet::variable(x, 1)).derivative(1)
    }

    fn force_second(&self, x: f64) -> f64 {
        self.force_jet(Jet::variable(x, 2)).derivative(2)
    }

    /// `V(x) = ∫₀ˣ g(s) ds`.
    fn potential(&self, x: f64) -> f64;
}

#[derive(Clone)]
pub struct ForceModel {
    name: String,
    domain: Interval,
    law: Arc<dyn ForceLaw>,
    mode: DerivativeMode,
    taylor: [f64; TAYLOR_ORDER + 1],
    params: Vec<(String, f64)>,
    edges: [f64; 2],
}

impl fmt::Debug for ForceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForceModel")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("mode", &self.mode)
            .field("params", &self.params)
            .finish()
    }
}

impl ForceModel {
    /// Wrap a law and validate the model invariants on `domain`.
    pub fn new(
        name: impl Into<String>,
        domain: Interval,
        law: Arc<dyn ForceLaw>,
        mode: DerivativeMode,
        params: Vec<(String, f64)>,
    ) -> Result<ForceModel> {
        let model = Self::new_unchecked(name, domain, law, mode, params)?;
        model.validate()?;
        Ok(model)
    }

    pub(crate) fn new_unchecked(
        name: impl Into<String>,
        domain: Interval,
        law: Arc<dyn ForceLaw>,
        mode: DerivativeMode,
        params: Vec<(String, f64)>,
    ) -> Result<ForceModel> {
        let jet = law.force_jet(Jet::variable(0.0, TAYLOR_ORDER - 1));
        let mut taylor = [0.0; TAYLOR_ORDER + 1];
        for k in 1..=TAYLOR_ORDER {
            taylor[k] = jet.derivative(k - 1);
        }
        if !taylor.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                what: "derivative stack",
                x: 0.0,
            });
        }
        let edges = edge_points(law.as_ref(), domain);
        Ok(ForceModel {
            name: name.into(),
            domain,
            law,
            mode,
            taylor,
            params,
            edges,
        })
    }

    /// The same law restricted (or extended) to another domain.
    pub fn with_domain(&self, domain: Interval) -> Result<ForceModel> {
        let mut m = self.clone();
        m.domain = domain;
        m.edges = edge_points(m.law.as_ref(), domain);
        m.validate()?;
        Ok(m)
    }

    /// Same model under another name and parameter list.
    pub fn renamed(mut self, name: impl Into<String>, params: Vec<(String, f64)>) -> ForceModel {
        self.name = name.into();
        self.params = params;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn law(&self) -> &Arc<dyn ForceLaw> {
        &self.law
    }

    pub fn g(&self, x: f64) -> f64 {
        self.law.force(x)
    }

    pub fn dg(&self, x: f64) -> f64 {
        self.law.force_prime(x)
    }

    pub fn d2g(&self, x: f64) -> f64 {
        self.law.force_second(x)
    }

    pub fn g_jet(&self, x: Jet) -> Jet {
        self.law.force_jet(x)
    }

    pub fn potential(&self, x: f64) -> f64 {
        self.law.potential(x)
    }

    /// `V^(k)(0)` for `k = 0..=6` (entries 0 and 1 vanish).
    pub fn taylor_v0(&self) -> &[f64; TAYLOR_ORDER + 1] {
        &self.taylor
    }

    /// `V''(0) = g'(0)`.
    pub fn stiffness(&self) -> f64 {
        self.taylor[2]
    }

    /// Points closest to the domain ends (relative gap down to 1e−15) where
    /// `V` is still finite; the numerical extent of the domain.
    pub fn edges(&self) -> [f64; 2] {
        self.edges
    }

    pub fn center_bound(&self) -> Result<CenterBound> {
        CenterBound::compute(self)
    }

    /// Check the model invariants on a validation grid.
    pub fn validate(&self) -> Result<()> {
        let g0 = self.g(0.0);
        let tol0 = match self.mode {
            DerivativeMode::Analytic => 0.0,
            DerivativeMode::Automatic => 1e-12,
        };
        if !(g0.abs() <= tol0) {
            return Err(Error::Validation(format!("g(0) = {g0:e} must vanish")));
        }
        let k = self.stiffness();
        if !(k > 0.0) {
            return Err(Error::Validation(format!(
                "g'(0) = {k:e} violates g'(0) > 0"
            )));
        }
        let d = self.domain;
        for side in [-1.0, 1.0] {
            let end = if side < 0.0 { d.lo } else { d.hi };
            let mut prev_v = 0.0;
            for i in 1..=VALIDATION_POINTS {
                let x = end * (i as f64 - 0.5) / VALIDATION_POINTS as f64;
                let (gx, vx) = (self.g(x), self.potential(x));
                if !gx.is_finite() {
                    return Err(Error::NonFinite { what: "g", x });
                }
                if !vx.is_finite() {
                    return Err(Error::NonFinite { what: "V", x });
                }
                if !(gx * side > 0.0) {
                    return Err(Error::Validation(format!(
                        "g({x}) = {gx:e}: g must vanish only at 0 and have the sign of x on the domain"
                    )));
                }
                if !(vx > prev_v) {
                    return Err(Error::Validation(format!(
                        "V is not strictly monotone on the {} side near x = {x}",
                        if side < 0.0 { "negative" } else { "positive" }
                    )));
                }
                prev_v = vx;
                let room = (x - d.lo).min(d.hi - x);
                let h = (1e-3 * d.width()).min(0.5 * room);
                let dv = ridders(|s| self.potential(s), x, h).value;
                if (dv - gx).abs() > 1e-6 * gx.abs().max(1.0) {
                    return Err(Error::Validation(format!(
                        "dV/dx = {dv:e} disagrees with g = {gx:e} at x = {x}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validation grid used by invariant sweeps: `n` points spread over the
    /// domain, excluding the origin.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let d = self.domain;
        let mut xs = vec![0.0; n];
        for (i, x) in xs.iter_mut().enumerate() {
            let t = (i as f64 + 0.5) / n as f64;
            *x = d.lo + t * d.width();
            if *x == 0.0 {
                *x = 0.5 * d.width() / n as f64;
            }
        }
        xs
    }
}

fn edge_points(law: &dyn ForceLaw, domain: Interval) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (o, end) in out.iter_mut().zip([domain.lo, domain.hi]) {
        for k in 1..=15 {
            let x = end * (1.0 - 10f64.powi(-k));
            if !law.potential(x).is_finite() {
                break;
            }
            *o = x;
        }
    }
    out
}

/// Walk outward from 0 inside `natural` and stop before `g` loses the sign of
/// `x`. Used to pick default domains for parametric families.
pub(crate) fn discover_domain(law: &dyn ForceLaw, natural: Interval) -> Result<Interval> {
    const STEPS: usize = 4000;
    let mut ends = [natural.lo, natural.hi];
    for (k, end) in ends.iter_mut().enumerate() {
        let side = if k == 0 { -1.0 } else { 1.0 };
        let full = *end;
        for i in 1..=STEPS {
            let x = full * i as f64 / STEPS as f64;
            let gx = law.force(x);
            let vx = law.potential(x);
            if !(gx * side > 0.0) || !vx.is_finite() {
                *end = full * (i - 1) as f64 / STEPS as f64;
                break;
            }
        }
    }
    if ends[0] >= 0.0 || ends[1] <= 0.0 {
        return Err(Error::Validation(
            "no neighbourhood of 0 where g has the sign of x".into(),
        ));
    }
    Interval::new(ends[0], ends[1])
}
