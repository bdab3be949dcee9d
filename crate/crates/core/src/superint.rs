//! Third integrals quadratic in the momenta,
//! `W = A p₁² + B p₁p₂ + C p₂² + U`, for the three force families that
//! admit them.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{evaluate_integrals, integrate_h_strided, reference_flow, PhasePoint4};
use crate::error::{Error, Result};
use crate::isochrony::u_inverse;
use crate::model::catalog::{generic_superintegrable, harmonic, quartic_isochrone, sqrt_isochrone};
use crate::model::ForceModel;
use crate::numeric::diff::{central_richardson, hessian4};
use crate::period::period;

/// Guard on the generic-family radicand `1 + q₁(b₁+q₁)/c₁`.
pub const RADICAND_GUARD: f64 = 1e-12;

/// Coefficients of the general solution of the momentum conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AnsatzParams {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub d: f64,
}

/// `(A, B, C)` at `(q₁, q₂)`.
pub fn ansatz_coefficients(p: &AnsatzParams, q1: f64, q2: f64) -> (f64, f64, f64) {
    let a = p.a * q1 * q1 + p.b1 * q1 + p.c1;
    let b = -2.0 * p.a * q1 * q2 - p.b1 * q2 - p.b2 * q1 + p.c3;
    let c = p.a * q2 * q2 + p.b2 * q2 + p.c2;
    (a, b, c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdeResiduals {
    /// `∂₂A, ∂₁C, ∂₁A + ∂₂B, ∂₁B + ∂₂C`, by finite differences.
    pub coeff: [f64; 4],
    /// `3(b₂+2a q₂)g − 3(b₁+2a q₁)q₂ g′ − 2(c₁+q₁(b₁+a q₁))q₂ g″`.
    pub potential_compat: f64,
}

pub fn pde_residuals(model: &ForceModel, p: &AnsatzParams, q1: f64, q2: f64) -> Result<PdeResiduals> {
    let d = model.domain();
    if !d.contains(q1) {
        return Err(Error::OutOfRange {
            what: "q1",
            value: q1,
            lo: d.lo,
            hi: d.hi,
        });
    }
    let h = 1e-3;
    let d1 = |k: usize| central_richardson(|s| component(p, s, q2, k), q1, h);
    let d2 = |k: usize| central_richardson(|s| component(p, q1, s, k), q2, h);
    let coeff = [d2(0), d1(2), d1(0) + d2(1), d1(1) + d2(2)];
    let (g, g1, g2) = (model.g(q1), model.dg(q1), model.d2g(q1));
    let potential_compat = 3.0 * (p.b2 + 2.0 * p.a * q2) * g
        - 3.0 * (p.b1 + 2.0 * p.a * q1) * q2 * g1
        - 2.0 * (p.c1 + q1 * (p.b1 + p.a * q1)) * q2 * g2;
    Ok(PdeResiduals {
        coeff,
        potential_compat,
    })
}

fn component(p: &AnsatzParams, q1: f64, q2: f64, k: usize) -> f64 {
    let (a, b, c) = ansatz_coefficients(p, q1, q2);
    [a, b, c][k]
}

/// A force family admitting a quadratic third integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Sqrt { omega: f64, lambda: f64 },
    Quartic { omega: f64, lambda: f64 },
    Generic { omega: f64, b1: f64, c1: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Sqrt { .. } => "sqrt",
            Family::Quartic { .. } => "quartic",
            Family::Generic { .. } => "generic",
        }
    }

    /// Ansatz coefficients of the normalized third integral.
    pub fn ansatz(&self) -> AnsatzParams {
        match *self {
            Family::Sqrt { lambda, .. } => AnsatzParams {
                b1: 2.0 * lambda,
                c1: 1.0,
                c2: 1.0,
                ..Default::default()
            },
            Family::Quartic { lambda, .. } => AnsatzParams {
                a: 1.0,
                b1: 2.0 * lambda,
                c1: lambda * lambda,
                c2: 1.0,
                ..Default::default()
            },
            Family::Generic { b1, c1, .. } => AnsatzParams {
                a: 1.0,
                b1,
                c1,
                c2: c1,
                ..Default::default()
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        match *self {
            Family::Sqrt { omega, lambda } | Family::Quartic { omega, lambda } => {
                if !(omega > 0.0 && omega.is_finite()) {
                    return bad("omega must be positive");
                }
                if !(lambda != 0.0 && lambda.is_finite()) {
                    return bad("lambda must be nonzero");
                }
            }
            Family::Generic { omega, b1, c1 } => {
                if !(omega > 0.0 && omega.is_finite()) {
                    return bad("omega must be positive");
                }
                if !(b1 != 0.0 && b1.is_finite()) {
                    return bad("b1 = 0 gives only the harmonic force");
                }
                if !(c1 != 0.0 && c1.is_finite()) {
                    return bad("c1 = 0 admits no solutions");
                }
                if b1 * b1 - 4.0 * c1 == 0.0 {
                    return bad("b1^2 = 4 c1 is the quartic family");
                }
            }
        }
        Ok(())
    }
}

/// The force law of a family on its default domain.
pub fn family_force(family: Family) -> Result<ForceModel> {
    family.validate()?;
    match family {
        Family::Sqrt { omega, lambda } => sqrt_isochrone(omega, lambda, None),
        Family::Quartic { omega, lambda } => quartic_isochrone(omega, lambda, None),
        Family::Generic { omega, b1, c1 } => generic_superintegrable(omega, b1, c1, None),
    }
}

/// Result of the `a = 1`, `c₁ = b₁²/4` branch.
#[derive(Clone, Debug)]
pub struct DegenerateFamily {
    pub model: ForceModel,
    /// `b₁ = 0`: the force is linear and the integral adds nothing new.
    pub trivial: bool,
}

pub fn degenerate_family(omega: f64, b1: f64) -> Result<DegenerateFamily> {
    if b1 == 0.0 {
        return Ok(DegenerateFamily {
            model: harmonic(omega, None)?,
            trivial: true,
        });
    }
    Ok(DegenerateFamily {
        model: quartic_isochrone(omega, 0.5 * b1, None)?,
        trivial: false,
    })
}

/// A closed-form third integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThirdIntegral {
    /// Sqrt family with free `(c₁, c₂, c₃, d)`.
    Sqrt {
        omega: f64,
        lambda: f64,
        c1: f64,
        c2: f64,
        c3: f64,
        d: f64,
    },
    /// Quartic family, shifted to vanish at the origin.
    Quartic { omega: f64, lambda: f64 },
    /// Generic family, divided by `c₁`.
    Generic { omega: f64, b1: f64, c1: f64 },
}

/// The normalized integral of a family (`c₁ = c₂ = 1` for the sqrt family).
pub fn third_integral(family: Family) -> Result<ThirdIntegral> {
    family.validate()?;
    Ok(match family {
        Family::Sqrt { omega, lambda } => ThirdIntegral::Sqrt {
            omega,
            lambda,
            c1: 1.0,
            c2: 1.0,
            c3: 0.0,
            d: 0.0,
        },
        Family::Quartic { omega, lambda } => ThirdIntegral::Quartic { omega, lambda },
        Family::Generic { omega, b1, c1 } => ThirdIntegral::Generic { omega, b1, c1 },
    })
}

fn outside(q1: f64, why: &str) -> Error {
    Error::InvalidParameter(format!("q1 = {q1} is outside the family domain: {why}"))
}

impl ThirdIntegral {
    pub fn family(&self) -> Family {
        match *self {
            ThirdIntegral::Sqrt { omega, lambda, .. } => Family::Sqrt { omega, lambda },
            ThirdIntegral::Quartic { omega, lambda } => Family::Quartic { omega, lambda },
            ThirdIntegral::Generic { omega, b1, c1 } => Family::Generic { omega, b1, c1 },
        }
    }

    pub fn evaluate(&self, pt: PhasePoint4) -> Result<f64> {
        let PhasePoint4 { q1, q2, p1, p2 } = pt;
        match *self {
            ThirdIntegral::Sqrt {
                omega,
                lambda,
                c1,
                c2,
                c3,
                d,
            } => {
                let r = 1.0 + 2.0 * lambda * q1;
                if !(r > 0.0) {
                    return Err(outside(q1, "1 + 2 lambda q1 must be positive"));
                }
                let s = r.sqrt();
                let w2 = omega * omega;
                // g and (s − 1)/λ in cancellation-free form
                let g = 2.0 * w2 * q1 / (s * (s + 1.0));
                let e = 2.0 * q1 / (s + 1.0);
                let shear = c3 - 2.0 * lambda * c1 * q2;
                Ok(c1 * p1 * p1 * r + p1 * p2 * shear + c2 * p2 * p2 + c2 * w2 * e * e
                    + c1 * w2 * q2 * q2
                    + q2 * shear * g
                    + d)
            }
            ThirdIntegral::Quartic { omega, lambda } => {
                let l = lambda + q1;
                if !(l / lambda > 0.0) {
                    return Err(outside(q1, "lambda + q1 must keep the sign of lambda"));
                }
                let w2 = omega * omega;
                let l4 = lambda.powi(4);
                Ok(p1 * p1 * l * l - 2.0 * p1 * p2 * l * q2
                    + p2 * p2 * (1.0 + q2 * q2)
                    + 0.25 * w2 * (l * l + l4 * (1.0 + 4.0 * q2 * q2) / (l * l))
                    - 0.5 * lambda * lambda * w2)
            }
            ThirdIntegral::Generic { omega, b1, c1 } => {
                let rad = 1.0 + q1 * (b1 + q1) / c1;
                if !(rad >= RADICAND_GUARD) {
                    return Err(outside(q1, "the radicand 1 + q1(b1+q1)/c1 is not positive"));
                }
                let s = rad.sqrt();
                let dsc = b1 * b1 - 4.0 * c1;
                let k = omega * omega / (dsc * dsc);
                let kinetic =
                    p1 * p1 + p2 * p2 + (p1 * q1 - p2 * q2) * (p1 * (b1 + q1) - p2 * q2) / c1;
                let poly = 8.0 * b1 * b1 * c1 * c1
                    + 4.0 * c1 * (b1 * b1 + 4.0 * c1) * (b1 + q1) * q1
                    + (16.0 * c1 * c1 - b1.powi(4)) * q2 * q2;
                let rational = (b1 + 2.0 * q1)
                    * (-4.0 * c1 * (c1 + (b1 + q1) * q1) + dsc * q2 * q2)
                    / s;
                Ok(kinetic + k * poly + 2.0 * b1 * k * rational)
            }
        }
    }

    /// Hessian at the origin by second differences with step `1e−4`.
    pub fn hessian_at_origin(&self) -> Result<[[f64; 4]; 4]> {
        let mut failure = None;
        let h = hessian4(
            |x| match self.evaluate(PhasePoint4::from_array(*x)) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            &[0.0; 4],
            1e-4,
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(h),
        }
    }

    /// The diagonal the Hessian at the origin should have.
    pub fn expected_hessian_diagonal(&self) -> [f64; 4] {
        match *self {
            ThirdIntegral::Sqrt {
                omega, c1, c2, ..
            } => {
                let w2 = omega * omega;
                [2.0 * c2 * w2, 2.0 * c1 * w2, 2.0 * c1, 2.0 * c2]
            }
            ThirdIntegral::Quartic { omega, lambda } => {
                let (w2, l2) = (omega * omega, lambda * lambda);
                [2.0 * w2, 2.0 * l2 * w2, 2.0 * l2, 2.0]
            }
            ThirdIntegral::Generic { omega, .. } => {
                let w2 = omega * omega;
                [2.0 * w2, 2.0 * w2, 2.0, 2.0]
            }
        }
    }
}

/// How a conservation audit integrates the `H`-flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AuditMethod {
    /// Adaptive 5(4) pair at the given tolerance, `samples` per period.
    Reference { tol: f64, samples: usize },
    /// Splitting scheme with `steps` per period.
    Splitting { steps: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Audit {
    pub w0: f64,
    pub max_drift: f64,
    /// `(t, W, W − W₀)` along the trajectory.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Track `W` along the `H`-flow from `pt` for `periods` planar periods.
pub fn conservation_audit(
    model: &ForceModel,
    w: &ThirdIntegral,
    pt: PhasePoint4,
    periods: usize,
    method: AuditMethod,
) -> Result<Audit> {
    let (_, k) = evaluate_integrals(model, pt)?;
    let x0 = u_inverse(model, (2.0 * k).sqrt())?;
    let tau = period(model, x0)?.t;
    let t_end = periods as f64 * tau;
    let (times, states) = match method {
        AuditMethod::Reference { tol, samples } => {
            let n = periods * samples.max(1);
            let times: Vec<f64> = (1..=n).map(|i| t_end * i as f64 / n as f64).collect();
            let states = reference_flow(model, pt, &times, tol)?;
            (times, states)
        }
        AuditMethod::Splitting { steps } => {
            let rec = integrate_h_strided(model, pt, t_end, tau / steps.max(1) as f64, 1)?;
            (rec.times, rec.states)
        }
    };
    let w0 = w.evaluate(pt)?;
    let mut samples = Vec::with_capacity(times.len());
    let mut max_drift = 0.0f64;
    for (t, s) in times.into_iter().zip(states) {
        let v = w.evaluate(s)?;
        max_drift = max_drift.max((v - w0).abs());
        samples.push((t, v, v - w0));
    }
    Ok(Audit {
        w0,
        max_drift,
        samples,
    })
}

/// Smallest `W(pt)/|pt|²` over `n` seeded points of the ball of `radius`.
pub fn positivity_probe(w: &ThirdIntegral, radius: f64, n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut kept = 0;
    while kept < n {
        let x: [f64; 4] = core::array::from_fn(|_| rng.random_range(-radius..radius));
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 == 0.0 || r2 > radius * radius {
            continue;
        }
        kept += 1;
        worst = worst.min(w.evaluate(PhasePoint4::from_array(x))? / r2);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{poisson_bracket, sample_points, SamplingBox};
    use crate::model::catalog::pendulum;

    fn sqrt_w(c1: f64, c2: f64, c3: f64, d: f64) -> ThirdIntegral {
        ThirdIntegral::Sqrt {
            omega: 1.3,
            lambda: 0.7,
            c1,
            c2,
            c3,
            d,
        }
    }

    #[test]
    fn coefficients_examples() {
        let k = AnsatzParams {
            c2: 0.5,
            ..Default::default()
        };
        assert_eq!(ansatz_coefficients(&k, 0.3, -0.2), (0.0, 0.0, 0.5));
        let h = AnsatzParams {
            c3: 1.0,
            ..Default::default()
        };
        assert_eq!(ansatz_coefficients(&h, 0.3, -0.2), (0.0, 1.0, 0.0));
        let p = AnsatzParams {
            a: 1.0,
            b1: 2.0,
            c1: 3.0,
            ..Default::default()
        };
        assert_eq!(ansatz_coefficients(&p, 1.0, 1.0).0, 6.0);
    }

    #[test]
    fn sqrt_integral_reduces_to_h_and_k() {
        let m = sqrt_isochrone(1.3, 0.7, None).unwrap();
        for pt in sample_points(&m, 100, 3, SamplingBox::default()).unwrap() {
            let (h, k) = evaluate_integrals(&m, pt).unwrap();
            assert!((sqrt_w(0.0, 0.5, 0.0, 0.0).evaluate(pt).unwrap() - k).abs() < 1e-12);
            assert!((sqrt_w(0.0, 0.0, 1.0, 0.0).evaluate(pt).unwrap() - h).abs() < 1e-12);
        }
    }

    #[test]
    fn residuals() {
        let s = family_force(Family::Sqrt {
            omega: 1.0,
            lambda: 2.0,
        })
        .unwrap();
        let p = Family::Sqrt {
            omega: 1.0,
            lambda: 2.0,
        }
        .ansatz();
        for i in 0..20 {
            let q1 = -0.2 + 0.045 * i as f64;
            let r = pde_residuals(&s, &p, q1, 1.0 - 0.1 * i as f64).unwrap();
            assert!(r.potential_compat.abs() < 1e-9);
            assert!(r.coeff.iter().all(|c| c.abs() < 1e-9));
        }
        let b2 = AnsatzParams {
            b2: 1.0,
            ..p
        };
        let r = pde_residuals(&s, &b2, 0.3, 0.0).unwrap();
        assert!((r.potential_compat - 3.0 * s.g(0.3)).abs() < 1e-12);
        let pend = pendulum(None).unwrap();
        let q = AnsatzParams {
            a: 1.0,
            b1: 1.0,
            c1: 1.0,
            ..Default::default()
        };
        assert!(pde_residuals(&pend, &q, 1.0, 1.0).unwrap().potential_compat.abs() > 1e-3);
    }

    #[test]
    fn hessians_at_origin() {
        for f in [
            Family::Sqrt {
                omega: 1.0,
                lambda: 2.0,
            },
            Family::Quartic {
                omega: 1.2,
                lambda: 0.8,
            },
            Family::Generic {
                omega: 0.9,
                b1: 1.0,
                c1: 1.0,
            },
            Family::Generic {
                omega: 1.0,
                b1: 3.0,
                c1: 1.0,
            },
        ] {
            let w = third_integral(f).unwrap();
            assert!(w.evaluate(PhasePoint4::default()).unwrap().abs() < 1e-12);
            let h = w.hessian_at_origin().unwrap();
            let e = w.expected_hessian_diagonal();
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i == j { e[i] } else { 0.0 };
                    assert!((h[i][j] - want).abs() < 1e-4, "{f:?} {i}{j} {}", h[i][j]);
                }
            }
            assert!(positivity_probe(&w, 0.1, 1000, 5).unwrap() > 0.0);
        }
    }

    #[test]
    fn integrals_commute_with_h() {
        for f in [
            Family::Sqrt {
                omega: 1.0,
                lambda: 2.0,
            },
            Family::Quartic {
                omega: 1.0,
                lambda: 1.0,
            },
            Family::Generic {
                omega: 1.0,
                b1: 1.0,
                c1: 1.0,
            },
        ] {
            let m = family_force(f).unwrap();
            let w = third_integral(f).unwrap();
            for pt in sample_points(&m, 30, 11, SamplingBox::default()).unwrap() {
                let b = poisson_bracket(
                    |x| evaluate_integrals(&m, x).map(|v| v.0).unwrap_or(f64::NAN),
                    |x| w.evaluate(x).unwrap_or(f64::NAN),
                    pt,
                )
                .unwrap();
                assert!(b.abs() < 1e-6, "{f:?} {pt:?} {b}");
            }
        }
    }

    #[test]
    fn audit_sqrt() {
        let f = Family::Sqrt {
            omega: 1.0,
            lambda: 2.0,
        };
        let m = family_force(f).unwrap();
        let w = third_integral(f).unwrap();
        let pt = PhasePoint4::new(0.2, 1.0, 0.1, 0.0);
        let a = conservation_audit(&m, &w, pt, 10, AuditMethod::Reference { tol: 1e-12, samples: 50 }).unwrap();
        assert!(a.max_drift <= 1e-6 * a.w0.abs().max(1.0), "{}", a.max_drift);
    }

    #[test]
    fn degenerate_branch() {
        let t = degenerate_family(1.0, 0.0).unwrap();
        assert!(t.trivial && t.model.name() == "harmonic");
        let q = degenerate_family(1.0, 2.0).unwrap();
        assert!(!q.trivial && q.model.name() == "quartic_iso");
        assert!(family_force(Family::Generic {
            omega: 1.0,
            b1: 2.0,
            c1: 1.0
        })
        .is_err());
    }
}
