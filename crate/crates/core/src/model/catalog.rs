//! Built-in force laws and parametric families.
//!
//! Every closed form here is written to avoid cancellation near `x = 0`.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::{discover_domain, DerivativeMode, ForceLaw, ForceModel, Interval};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Offset kept from singular or separatrix endpoints.
pub const EDGE_OFFSET: f64 = 1e-3;

/// Half-width cap for families whose natural domain is unbounded.
pub const DOMAIN_CAP: f64 = 5.0;

/// A law with a generic closed form for `g`; `dg`/`d2g` default to jets.
trait ClosedForm: Send + Sync + core::fmt::Debug {
    fn g<R: crate::jet::Real>(&self, x: R) -> R;
    fn v(&self, x: f64) -> f64;
    fn dg(&self, x: f64) -> f64 {
        self.g(Jet::variable(x, 1)).derivative(1)
    }
    fn d2g(&self, x: f64) -> f64 {
        self.g(Jet::variable(x, 2)).derivative(2)
    }
}

macro_rules! closed_form_law {
    ($($t:ty),*) => {$(
        impl ForceLaw for $t {
            fn force(&self, x: f64) -> f64 {
                ClosedForm::g(self, x)
            }
            fn force_jet(&self, x: Jet) -> Jet {
                ClosedForm::g(self, x)
            }
            fn force_prime(&self, x: f64) -> f64 {
                ClosedForm::dg(self, x)
            }
            fn force_second(&self, x: f64) -> f64 {
                ClosedForm::d2g(self, x)
            }
            fn potential(&self, x: f64) -> f64 {
                ClosedForm::v(self, x)
            }
        }
    )*};
}

/// `g(x) = ω²x`.
#[derive(Clone, Copy, Debug)]
pub struct Harmonic {
    pub omega: f64,
}

impl ClosedForm for Harmonic {
    fn g<R: crate::jet::Real>(&self, x: R) -> R {
        x * x.lift(self.omega * self.omega)
    }
    fn v(&self, x: f64) -> f64 {
        0.5 * self.omega * self.omega * x * x
    }
    fn dg(&self, _: f64) -> f64 {
        self.omega * self.omega
    }
    fn d2g(&self, _: f64) -> f64 {
        0.0
    }
}

/// `g(x) = sin x`.
#[derive(Clone, Copy, Debug)]
pub struct Pendulum;

impl ClosedForm for Pendulum {
    fn g<R: crate::jet::Real>(&self, x: R) -> R {
        x.sin()
    }
    fn v(&self, x: f64) -> f64 {
        let s = (0.5 * x).sin();
        2.0 * s * s
    }
    fn dg(&self, x: f64) -> f64 {
        x.cos()
    }
    fn d2g(&self, x: f64) -> f64 {
        -x.sin()
    }
}

/// `g(x) = αx + βx² + γx³`.
#[derive(Clone, Copy, Debug)]
pub struct Cubic {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ClosedForm for Cubic {
    fn g<R: crate::jet::Real>(&self, x: R) -> R {
        x * (x.lift(self.alpha) + x * (x.lift(self.beta) + x * self.gamma))
    }
    fn v(&self, x: f64) -> f64 {
        x * x * (0.5 * self.alpha + x * (self.beta / 3.0 + 0.25 * self.gamma * x))
    }
    fn dg(&self, x: f64) -> f64 {
        self.alpha + x * (2.0 * self.beta + 3.0 * self.gamma * x)
    }
    fn d2g(&self, x: f64) -> f64 {
        2.0 * self.beta + 6.0 * self.gamma * x
    }
}

/// `g(x) = (ω²/λ)(1 − 1/√(1+2λx))`.
#[derive(Clone, Copy, Debug)]
pub struct SqrtIsochrone {
    pub omega: f64,
    pub lambda: f64,
}

impl ClosedForm for SqrtIsochrone {
    fn g<R: crate::jet::Real>(&self, x: R) -> R {
        let w2 = self.omega * self.omega;
        let s = (x * (2.0 * self.lambda) + x.lift(1.0)).sqrt();
        x * x.lift(2.0 * w2) / (s * (s + x.lift(1.0)))
    }
    fn v(&self, x: f64) -> f64 {
        let s = (1.0 + 2.0 * self.lambda * x).sqrt();
        let r = x / (s + 1.0);
        2.0 * self.omega * self.omega * r * r
    }
    fn dg(&self, x: f64) -> f64 {
        let s = (1.0 + 2.0 * self.lambda * x).sqrt();
        self.omega * self.omega / (s * s * s)
    }
    fn d2g(&self, x: f64) -> f64 {
        let s = (1.0 + 2.0 * self.lambda * x).sqrt();
        -3.0 * self.lambda * self.omega * self.omega / s.powi(5)
    }
}

/// `g(x) = (ω²/4)(λ + x − λ⁴/(λ+x)³)`.
#[derive(Clone, Copy, Debug)]
pub struct QuarticIsochrone {
    pub omega: f64,
    pub lambda: f64,
}

impl ClosedForm for QuarticIsochrone {
    fn g<R: crate::jet::Real>(&self, x: R) -> R {
        let l = self.lambda;
        let w = x + x.lift(l);
        let num = x * (x + x.lift(2.0 * l)) * (x * (x + x.lift(2.0 * l)) + x.lift(2.0 * l * l));
        num * x.lift(0.25 * self.omega * self.omega) / w.powi(3)
    }
    fn v(&self, x: f64) -> f64 {
        let l = self.lambda;
        let r = x * (2.0 * l + x) / (l + x);
        0.125 * self.omega * self.omega * r * r
    }
    fn dg(&self, x: f64) -> f64 {
        let q = self.lambda / (self.lambda + x);
        0.25 * self.omega * self.omega * (1.0 + 3.0 * q.powi(4))
    }
    fn d2g(&self, x: f64) -> f64 {
        let l = self.lambda;
        -3.0 * self.omega * self.omega * l.powi(4) / (l + x).powi(5)
    }
}

/// The generic superintegrable family with parameters `(ω, b₁, c₁)`.
#[derive(Clone, Copy, Debug)]
pub struct GenericSuper {
    pub omega: f64,
    pub b1: f64,
    pub c1: f64,
}

impl GenericSuper {
    fn k(&self) -> f64 {
        let d = self.b1 * self.b1 - 4.0 * self.c1;
        2.0 * self.c1 * self.omega * self.omega / (d * d)
    }

    /// `1 + x(b₁+x)/c₁`, the radicand.
    pub fn radicand(&self, x: f64) -> f64 {
        1.0 + x * (self.b1 + x) / self.c1
    }
}

impl ClosedForm for GenericSuper {
    fn g<R: crate::jet::Real>(&self, x: R) -> R {
        let (b1, c1) = (self.b1, self.c1);
        let one = x.lift(1.0);
        let s = (one + x * (x + x.lift(b1)) / c1).sqrt();
        let m = x * 2.0 + x.lift(b1);
        let inner = (x.lift(b1 * b1 - 4.0 * c1) - m * m * 2.0) * (x + x.lift(b1)) * b1
            / (s * (s + one) * c1);
        let bracket = x.lift(8.0 * c1 - 6.0 * b1 * b1) - x * (8.0 * b1) - inner;
        x * bracket * self.k()
    }
    fn v(&self, x: f64) -> f64 {
        let (b1, c1) = (self.b1, self.c1);
        let s = self.radicand(x).sqrt();
        let m = b1 + 2.0 * x;
        let t = (b1 + x) / (1.0 + s);
        self.k() * x * x * (4.0 * c1 - 2.0 * b1 * b1 - 2.0 * b1 * x + b1 * m * t * t / c1)
    }
}

closed_form_law!(
    Harmonic,
    Pendulum,
    Cubic,
    SqrtIsochrone,
    QuarticIsochrone,
    GenericSuper
);

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be positive")))
    }
}

fn nonzero(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v != 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be finite and nonzero")))
    }
}

fn params(list: &[(&str, f64)]) -> Vec<(alloc::string::String, f64)> {
    list.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn build(
    name: &str,
    law: Arc<dyn ForceLaw>,
    domain: Option<Interval>,
    natural: Interval,
    p: &[(&str, f64)],
) -> Result<ForceModel> {
    let domain = match domain {
        Some(d) => d,
        None => discover_domain(law.as_ref(), natural)?,
    };
    ForceModel::new(name, domain, law, DerivativeMode::Analytic, params(p))
}

fn cap() -> Interval {
    Interval {
        lo: -DOMAIN_CAP,
        hi: DOMAIN_CAP,
    }
}

pub fn harmonic(omega: f64, domain: Option<Interval>) -> Result<ForceModel> {
    positive("omega", omega)?;
    build(
        "harmonic",
        Arc::new(Harmonic { omega }),
        domain,
        cap(),
        &[("omega", omega)],
    )
}

pub fn pendulum(domain: Option<Interval>) -> Result<ForceModel> {
    let natural = Interval {
        lo: -PI + EDGE_OFFSET,
        hi: PI - EDGE_OFFSET,
    };
    let domain = Some(domain.unwrap_or(natural));
    build("pendulum", Arc::new(Pendulum), domain, natural, &[])
}

pub fn cubic(alpha: f64, beta: f64, gamma: f64, domain: Option<Interval>) -> Result<ForceModel> {
    positive("alpha", alpha)?;
    if !(beta.is_finite() && gamma.is_finite()) {
        return Err(Error::InvalidParameter("beta and gamma must be finite".into()));
    }
    build(
        "cubic",
        Arc::new(Cubic { alpha, beta, gamma }),
        domain,
        cap(),
        &[("alpha", alpha), ("beta", beta), ("gamma", gamma)],
    )
}

/// Default domain: from the singularity (plus an offset) to the point whose
/// conjugate is that same singularity, so the energy range is symmetric.
pub fn sqrt_isochrone(omega: f64, lambda: f64, domain: Option<Interval>) -> Result<ForceModel> {
    positive("omega", omega)?;
    nonzero("lambda", lambda)?;
    let a = 1.0 / (2.0 * lambda.abs());
    let natural = if lambda > 0.0 {
        Interval {
            lo: -a + EDGE_OFFSET,
            hi: 3.0 * a,
        }
    } else {
        Interval {
            lo: -3.0 * a,
            hi: a - EDGE_OFFSET,
        }
    };
    build(
        "sqrt_iso",
        Arc::new(SqrtIsochrone { omega, lambda }),
        Some(domain.unwrap_or(natural)),
        natural,
        &[("omega", omega), ("lambda", lambda)],
    )
}

/// Default domain: the side of the pole at `−λ` containing 0, capped.
pub fn quartic_isochrone(omega: f64, lambda: f64, domain: Option<Interval>) -> Result<ForceModel> {
    positive("omega", omega)?;
    nonzero("lambda", lambda)?;
    let far = DOMAIN_CAP.max(4.0 * lambda.abs());
    let natural = if lambda > 0.0 {
        Interval {
            lo: -lambda + EDGE_OFFSET * lambda,
            hi: far,
        }
    } else {
        Interval {
            lo: -far,
            hi: -lambda + EDGE_OFFSET * lambda,
        }
    };
    build(
        "quartic_iso",
        Arc::new(QuarticIsochrone { omega, lambda }),
        domain,
        natural,
        &[("omega", omega), ("lambda", lambda)],
    )
}

/// Default domain: the component of `{1 + x(b₁+x)/c₁ > 0}` containing 0,
/// capped and shrunk to where `g` keeps the sign of `x`.
pub fn generic_superintegrable(
    omega: f64,
    b1: f64,
    c1: f64,
    domain: Option<Interval>,
) -> Result<ForceModel> {
    positive("omega", omega)?;
    nonzero("b1", b1)?;
    if !(c1.is_finite() && c1 != 0.0) {
        return Err(Error::InvalidParameter(
            "c1 = 0 admits no solutions of the integrability condition".into(),
        ));
    }
    let disc = b1 * b1 - 4.0 * c1;
    if disc == 0.0 {
        return Err(Error::InvalidParameter(
            "b1^2 - 4 c1 = 0 is the quartic family, not the generic one".into(),
        ));
    }
    let mut natural = cap();
    if disc > 0.0 {
        let r = disc.sqrt();
        let (r1, r2) = (0.5 * (-b1 - r), 0.5 * (-b1 + r));
        for root in [r1, r2] {
            let edge = root - EDGE_OFFSET * root.signum() * root.abs().max(1e-3);
            if root > 0.0 {
                natural.hi = natural.hi.min(edge);
            } else {
                natural.lo = natural.lo.max(edge);
            }
        }
    }
    build(
        "generic_super",
        Arc::new(GenericSuper { omega, b1, c1 }),
        domain,
        natural,
        &[("omega", omega), ("b1", b1), ("c1", c1)],
    )
}

/// The built-in catalog with canonical parameters.
pub fn builtin_catalog() -> Vec<ForceModel> {
    let list = vec![
        harmonic(1.0, None),
        pendulum(None),
        cubic(1.0, 0.3, 0.2, None),
        sqrt_isochrone(1.0, 2.0, None),
        quartic_isochrone(1.0, 1.0, None),
        generic_superintegrable(1.0, 1.0, 1.0, None),
    ];
    list.into_iter()
        .map(|m| m.expect("catalog models are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::diff::ridders;

    fn raw_sqrt(x: f64) -> f64 {
        0.5 * (1.0 - 1.0 / (1.0 + 4.0 * x).sqrt())
    }

    #[test]
    fn sqrt_family_matches_raw_form() {
        let m = sqrt_isochrone(1.0, 2.0, None).unwrap();
        for x in [-0.2, -0.05, 0.1, 0.7] {
            assert!((m.g(x) - raw_sqrt(x)).abs() < 1e-15);
        }
        // extended-domain closed form V = (1/8)(√(1+4x) − 1)²
        let v2 = 0.125 * ((9.0f64).sqrt() - 1.0).powi(2);
        assert!((SqrtIsochrone { omega: 1.0, lambda: 2.0 }.v(2.0) - v2).abs() < 1e-15);
        assert_eq!(m.domain().lo, -0.25 + EDGE_OFFSET);
        assert_eq!(m.domain().hi, 0.75);
    }

    #[test]
    fn quartic_family_matches_raw_form() {
        let m = quartic_isochrone(1.0, 1.0, None).unwrap();
        for x in [-0.5, 0.2, 1.0, 3.0] {
            let raw = 0.25 * (1.0 + x - 1.0 / (1.0 + x).powi(3));
            assert!((m.g(x) - raw).abs() < 1e-14, "{x}");
        }
    }

    #[test]
    fn stiffness_is_omega_squared() {
        assert_eq!(harmonic(1.5, None).unwrap().dg(0.0), 2.25);
        assert_eq!(sqrt_isochrone(1.5, 0.7, None).unwrap().dg(0.0), 2.25);
        assert_eq!(quartic_isochrone(1.5, -0.7, None).unwrap().dg(0.0), 2.25);
        let gm = generic_superintegrable(1.5, 1.0, 1.0, None).unwrap();
        assert!((gm.stiffness() - 2.25).abs() < 1e-12);
        let fd = ridders(|x| gm.g(x), 0.0, 1e-2).value;
        assert!((fd - 2.25).abs() < 1e-10);
    }

    #[test]
    fn closed_derivatives_match_jets() {
        for m in builtin_catalog() {
            for x in m.grid(7) {
                let j = m.g_jet(Jet::variable(x, 2));
                assert!((m.dg(x) - j.derivative(1)).abs() < 1e-12 * (1.0 + j.derivative(1).abs()));
                assert!((m.d2g(x) - j.derivative(2)).abs() < 1e-10 * (1.0 + j.derivative(2).abs()));
            }
        }
    }

    #[test]
    fn potential_derivative_matches_force() {
        for m in builtin_catalog() {
            let d = m.domain();
            for x in m.grid(100) {
                let h = (1e-3 * d.width()).min(0.5 * (x - d.lo).min(d.hi - x));
                let dv = ridders(|s| m.potential(s), x, h).value;
                assert!((dv - m.g(x)).abs() < 1e-6, "{} at {x}", m.name());
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sqrt_isochrone(1.0, 0.0, None).is_err());
        assert!(quartic_isochrone(-1.0, 1.0, None).is_err());
        assert!(generic_superintegrable(1.0, 1.0, 0.0, None).is_err());
        assert!(generic_superintegrable(1.0, 2.0, 1.0, None).is_err());
        assert!(cubic(0.0, 1.0, 0.0, None).is_err());
    }

    #[test]
    fn generic_domain_respects_radicand() {
        for (b1, c1) in [(1.0, 1.0), (3.0, 1.0), (1.0, -0.5), (-2.0, 0.5)] {
            let m = generic_superintegrable(1.0, b1, c1, None).unwrap();
            let law = GenericSuper { omega: 1.0, b1, c1 };
            for x in m.grid(50) {
                assert!(law.radicand(x) > 0.0);
            }
        }
    }
}
