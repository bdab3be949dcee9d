//! Isochronous models built from an involution, from an even function whose
//! rotated graph is an involution, or from a prescribed even period
//! polynomial.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::{FRAC_1_SQRT_2, PI};


use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::model::{DerivativeMode, ForceLaw, ForceModel, Interval, SmoothFn};
use crate::numeric::roots::newton_bracketed;

/// Samples used to tabulate the rotated graph in [`design_from_even`].
pub const EVEN_TABLE_SIZE: usize = 512;

const PROBE_POINTS: usize = 100;

/// What to build.
#[derive(Clone, Debug)]
pub enum DesignSpec {
    /// `h` is the involution; `domain` the interval of the resulting model.
    FromInvolution {
        omega: f64,
        h: Arc<dyn SmoothFn>,
        domain: Interval,
    },
    /// `f` is even with `f(0) = 0`, sampled on `[-t_range, t_range]`.
    FromEven {
        omega: f64,
        f: Arc<dyn SmoothFn>,
        t_range: f64,
    },
    /// `T(y) = (2π/ω) Σ t_k y^(2k)` with `t_0 = 1`, used for `|y| ≤ y_range`.
    FromPeriodPolynomial {
        omega: f64,
        coeffs: Vec<f64>,
        y_range: f64,
    },
}

pub fn design(spec: &DesignSpec) -> Result<ForceModel> {
    match spec {
        DesignSpec::FromInvolution { omega, h, domain } => {
            design_from_involution(h.clone(), *omega, *domain)
        }
        DesignSpec::FromEven { omega, f, t_range } => design_from_even(f.clone(), *t_range, *omega),
        DesignSpec::FromPeriodPolynomial {
            omega,
            coeffs,
            y_range,
        } => design_from_period(coeffs, *omega, *y_range),
    }
}

/// Find the jet `T` with `f(T) = target`, given the base point `t_star` where
/// `f(t_star) = target.value()` and the slope `f'(t_star)`. Each chord step
/// fixes one more Taylor coefficient.
fn solve_jet<F: Fn(Jet) -> Jet>(f: F, target: Jet, t_star: f64, slope: f64) -> Jet {
    let n = target.order();
    let mut t = Jet::constant(t_star, n);
    for _ in 0..=n {
        let r = f(t) - target;
        t = t - r / slope;
    }
    t
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("omega = {omega} must be positive")))
    }
}

/// `V = (ω²/8)(x − h(x))²`, `g = (ω²/4)(x − h)(1 − h')`.
#[derive(Debug)]
pub struct InvolutionLaw {
    h: Arc<dyn SmoothFn>,
    omega: f64,
}

impl InvolutionLaw {
    pub fn h(&self) -> &Arc<dyn SmoothFn> {
        &self.h
    }
}

impl ForceLaw for InvolutionLaw {
    fn force(&self, x: f64) -> f64 {
        self.force_jet(Jet::constant(x, 0)).value()
    }

    fn force_jet(&self, x: Jet) -> Jet {
        let n = x.order();
        let var = Jet::variable(x.value(), n + 1);
        let h = self.h.eval_jet(var);
        let dh = h.differentiate();
        let d = (var - h).with_order(n);
        let g = d * (Jet::constant(1.0, n) - dh) * (0.25 * self.omega * self.omega);
        g.compose(x)
    }

    fn potential(&self, x: f64) -> f64 {
        let d = x - self.h.eval(x);
        0.125 * self.omega * self.omega * d * d
    }
}

pub fn design_from_involution(
    h: Arc<dyn SmoothFn>,
    omega: f64,
    domain: Interval,
) -> Result<ForceModel> {
    check_omega(omega)?;
    let h0 = h.eval_jet(Jet::variable(0.0, 1));
    if !(h0.value().abs() <= 1e-12) {
        return Err(Error::Validation(format!("h(0) = {:e} must vanish", h0.value())));
    }
    if !((h0.coeff(1) + 1.0).abs() <= 1e-8) {
        return Err(Error::Validation(format!(
            "h'(0) = {} must equal -1",
            h0.coeff(1)
        )));
    }
    let mut worst: f64 = 0.0;
    for i in 0..PROBE_POINTS {
        let x = domain.lo + domain.width() * (i as f64 + 0.5) / PROBE_POINTS as f64;
        if x == 0.0 {
            continue;
        }
        let hx = h.eval(x);
        if !hx.is_finite() {
            return Err(Error::NonFinite { what: "h", x });
        }
        if hx.signum() == x.signum() {
            return Err(Error::Validation(format!(
                "h({x}) = {hx} does not flip the sign of x"
            )));
        }
        if domain.contains(hx) {
            worst = worst.max((h.eval(hx) - x).abs());
        }
    }
    if !(worst <= 1e-8) {
        return Err(Error::Validation(format!(
            "h is not an involution: max |h(h(x)) - x| = {worst:e}"
        )));
    }
    ForceModel::new(
        "design_involution",
        domain,
        Arc::new(InvolutionLaw { h, omega }),
        DerivativeMode::Automatic,
        vec![("omega".to_string(), omega)],
    )
}

/// The graph of an even `f` rotated by π/4 clockwise, read as `y = h(x)`:
/// `X(t) = (t + f(t))/√2`, `Y(t) = (f(t) − t)/√2`.
#[derive(Debug)]
pub struct RotatedGraph {
    f: Arc<dyn SmoothFn>,
    /// `(t, X(t))`, strictly increasing in both.
    table: Vec<(f64, f64)>,
}

impl RotatedGraph {
    fn x_of<R: crate::jet::Real>(&self, t: R, ft: R) -> R {
        (t + ft) * FRAC_1_SQRT_2
    }

    fn x_jet(&self, t: Jet) -> Jet {
        self.x_of(t, self.f.eval_jet(t))
    }

    fn x_slope(&self, t: f64) -> f64 {
        self.x_jet(Jet::variable(t, 1)).coeff(1)
    }

    /// Parameter `t` with `X(t) = x`.
    fn parameter(&self, x: f64) -> f64 {
        let i = self.table.partition_point(|&(_, xi)| xi < x);
        if i == 0 {
            return self.table[0].0;
        }
        if i == self.table.len() {
            return self.table[i - 1].0;
        }
        let (lo, hi) = (self.table[i - 1].0, self.table[i].0);
        newton_bracketed(
            |t| {
                let j = self.x_jet(Jet::variable(t, 1));
                (j.value() - x, j.coeff(1))
            },
            lo,
            hi,
            0.0,
        )
        .unwrap_or(0.5 * (lo + hi))
    }
}

impl SmoothFn for RotatedGraph {
    fn eval(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let t = self.parameter(x);
        (self.f.eval(t) - t) * FRAC_1_SQRT_2
    }

    fn eval_jet(&self, x: Jet) -> Jet {
        let t_star = self.parameter(x.value());
        let t = solve_jet(|t| self.x_jet(t), x, t_star, self.x_slope(t_star));
        (self.f.eval_jet(t) - t) * FRAC_1_SQRT_2
    }
}

pub fn design_from_even(f: Arc<dyn SmoothFn>, t_range: f64, omega: f64) -> Result<ForceModel> {
    check_omega(omega)?;
    if !(t_range.is_finite() && t_range > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_range = {t_range} must be positive"
        )));
    }
    let f0 = f.eval(0.0);
    if !(f0.abs() <= 1e-12) {
        return Err(Error::Validation(format!("f(0) = {f0:e} must vanish")));
    }
    let mut table = Vec::with_capacity(EVEN_TABLE_SIZE);
    for i in 0..EVEN_TABLE_SIZE {
        let t = -t_range + 2.0 * t_range * i as f64 / (EVEN_TABLE_SIZE - 1) as f64;
        let (a, b) = (f.eval(t), f.eval(-t));
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite { what: "f", x: t });
        }
        if (a - b).abs() > 1e-10 * a.abs().max(1.0) {
            return Err(Error::Validation(format!("f is not even at t = {t}")));
        }
        let x = (t + a) * FRAC_1_SQRT_2;
        if let Some(&(_, prev)) = table.last() {
            if !(x > prev) {
                return Err(Error::Validation(format!(
                    "rotated graph is not a graph: X(t) stops increasing near t = {t}; shrink the interval"
                )));
            }
        }
        table.push((t, x));
    }
    let domain = Interval::new(table[0].1, table[EVEN_TABLE_SIZE - 1].1)?;
    let h = RotatedGraph { f, table };
    let model = design_from_involution(Arc::new(h), omega, domain)?;
    Ok(rename(model, "design_even", &[("omega", omega), ("t_range", t_range)]))
}

fn rename(model: ForceModel, name: &str, params: &[(&str, f64)]) -> ForceModel {
    model.renamed(
        name,
        params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    )
}

/// `(2k)!!/(2k+1)!!`, the moment `∫₀^y z^(2k+1)/√(y²−z²) dz / y^(2k+1)`.
pub fn abel_moment(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * (2 * j) as f64 / (2 * j + 1) as f64)
}

/// Coefficients `p_k` of the odd polynomial `u⁻¹(y) = Σ p_k y^(2k+1)`.
pub fn inverse_u_coefficients(coeffs: &[f64], omega: f64) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, t)| t * abel_moment(k) / omega)
        .collect()
}

/// `T(y) = (2π/ω) Σ t_k y^(2k)`.
pub fn target_period(coeffs: &[f64], omega: f64, y: f64) -> f64 {
    let y2 = y * y;
    2.0 * PI / omega * coeffs.iter().rev().fold(0.0, |acc, t| acc * y2 + t)
}

/// `x = P(y)` with `P` odd; `u = P⁻¹`.
#[derive(Clone, Debug)]
pub struct PeriodLaw {
    p: Vec<f64>,
    y_range: f64,
}

impl PeriodLaw {
    pub fn coefficients(&self) -> &[f64] {
        &self.p
    }

    fn poly<R: crate::jet::Real>(&self, y: R) -> R {
        let y2 = y * y;
        let mut acc = y.lift(0.0);
        for c in self.p.iter().rev() {
            acc = acc * y2 + *c;
        }
        acc * y
    }

    fn slope(&self, y: f64) -> f64 {
        let y2 = y * y;
        self.p
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, c)| acc * y2 + (2 * k + 1) as f64 * c)
    }

    /// `u(x) = P⁻¹(x)`.
    pub fn u(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let r = self.y_range;
        newton_bracketed(|y| (self.poly(y) - x, self.slope(y)), -r, r, 0.0).unwrap_or(f64::NAN)
    }
}

impl ForceLaw for PeriodLaw {
    fn force(&self, x: f64) -> f64 {
        let u = self.u(x);
        u / self.slope(u)
    }

    fn force_jet(&self, x: Jet) -> Jet {
        let y_star = self.u(x.value());
        let y = solve_jet(|y| self.poly(y), x, y_star, self.slope(y_star));
        let dp = self.p.iter().enumerate().rev().fold(Jet::constant(0.0, y.order()), |acc, (k, c)| {
            acc * (y * y) + (2 * k + 1) as f64 * c
        });
        y / dp
    }

    fn potential(&self, x: f64) -> f64 {
        let u = self.u(x);
        0.5 * u * u
    }
}

pub fn design_from_period(coeffs: &[f64], omega: f64, y_range: f64) -> Result<ForceModel> {
    check_omega(omega)?;
    if coeffs.first() != Some(&1.0) {
        return Err(Error::InvalidParameter(
            "period coefficients must start with t0 = 1".into(),
        ));
    }
    if !(y_range.is_finite() && y_range > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "y_range = {y_range} must be positive"
        )));
    }
    let law = PeriodLaw {
        p: inverse_u_coefficients(coeffs, omega),
        y_range,
    };
    const CHECKS: usize = 1000;
    for i in 0..=CHECKS {
        let y = y_range * i as f64 / CHECKS as f64;
        if !(law.slope(y) > 0.0) || !(target_period(coeffs, omega, y) > 0.0) {
            return Err(Error::Validation(format!(
                "prescribed period is infeasible: u^-1 is not increasing at y = {y}"
            )));
        }
    }
    let hi = law.poly(y_range);
    // keep a margin so the inverse stays strictly inside its bracket
    let domain = Interval::new(-hi * (1.0 - 1e-9), hi * (1.0 - 1e-9))?;
    let mut params = vec![("omega".to_string(), omega), ("y_range".to_string(), y_range)];
    for (k, t) in coeffs.iter().enumerate() {
        params.push((format!("t{k}"), *t));
    }
    ForceModel::new(
        "design_period",
        domain,
        Arc::new(law),
        DerivativeMode::Automatic,
        params,
    )
}
