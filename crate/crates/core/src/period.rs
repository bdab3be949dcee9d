//! The planar period function `T(x₀)`, its derivative and amplitude scans.
//!
//! The period is evaluated as
//! `T(y₀) = 2∫₀^{π/2} [(u⁻¹)'(y₀ sin s) + (u⁻¹)'(−y₀ sin s)] ds`
//! with `y₀ = u(x₀)` and `(u⁻¹)'(r) = r / g(u⁻¹(r))`. The integrand is smooth,
//! so a Gauss–Kronrod rule needs no endpoint treatment.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::isochrony::{u_inverse, u_map};
use crate::model::{CenterBound, ForceModel};
use crate::numeric::diff::ridders;
use crate::numeric::quad::GaussKronrod;
use crate::numeric::roots::brent;

/// Relative significance threshold for `T'` sign changes in scans:
/// `|T'(x₀)|·x₀ > SIGNIFICANCE·T(x₀)`.
pub const SIGNIFICANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodSample {
    pub x0: f64,
    pub y0: f64,
    pub t: f64,
    pub t_prime: Option<f64>,
    /// Absolute quadrature error estimate of `t`.
    pub error: f64,
}

/// Small-amplitude limit `2π/√V''(0)`.
pub fn limit_period(model: &ForceModel) -> f64 {
    2.0 * PI / model.stiffness().sqrt()
}

/// `(u⁻¹)'(r)`.
pub fn inverse_u_slope(model: &ForceModel, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(1.0 / model.stiffness().sqrt());
    }
    let x = u_inverse(model, r)?;
    let g = model.g(x);
    if !(g != 0.0 && g.is_finite()) {
        return Err(Error::Quadrature(format!(
            "u' vanishes or is undefined at x = {x}; the model is not a single well there"
        )));
    }
    Ok(r / g)
}

fn quadrature() -> GaussKronrod {
    GaussKronrod::with_tolerance(1e-10, 0.0)
}

/// `T(y₀)` for `y₀ > 0` in the image of `u`.
pub fn period_of_energy_level(model: &ForceModel, y0: f64) -> Result<(f64, f64)> {
    let q = quadrature().try_integrate(
        |s| {
            let r = y0 * s.sin();
            Ok(inverse_u_slope(model, r)? + inverse_u_slope(model, -r)?)
        },
        0.0,
        FRAC_PI_2,
    )?;
    Ok((2.0 * q.value, 2.0 * q.error))
}

fn check_amplitude(model: &ForceModel, bound: &CenterBound, x0: f64) -> Result<()> {
    if !bound.admits(model, x0) {
        return Err(Error::OutOfRange {
            what: "amplitude",
            value: x0,
            lo: bound.x_max_neg,
            hi: bound.x_max_pos,
        });
    }
    Ok(())
}

fn period_unchecked(model: &ForceModel, x0: f64) -> Result<PeriodSample> {
    let y0 = u_map(model, x0)?.abs();
    let (t, error) = period_of_energy_level(model, y0)?;
    Ok(PeriodSample {
        x0,
        y0,
        t,
        t_prime: None,
        error,
    })
}

/// Period of the planar orbit through `(x0, 0)`.
pub fn period(model: &ForceModel, x0: f64) -> Result<PeriodSample> {
    let bound = model.center_bound()?;
    check_amplitude(model, &bound, x0)?;
    period_unchecked(model, x0)
}

/// `T'(x₀)` for `x₀ > 0`, by Ridders extrapolation of central differences.
pub fn period_derivative(model: &ForceModel, x0: f64) -> Result<f64> {
    let bound = model.center_bound()?;
    check_amplitude(model, &bound, x0)?;
    derivative_with_bound(model, &bound, x0)
}

fn derivative_with_bound(model: &ForceModel, bound: &CenterBound, x0: f64) -> Result<f64> {
    if !(x0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "T' is taken at positive amplitudes only, got {x0}"
        )));
    }
    let room = x0.min(bound.x_max_pos - x0);
    let h = (0.1 * x0).min(0.5 * room);
    if !(h > 1e-6 * x0) {
        return Err(Error::IllConditioned(format!(
            "difference step underflow at x0 = {x0}: too close to the domain edge"
        )));
    }
    let mut failure = None;
    let d = ridders(
        |x| match period_unchecked(model, x) {
            Ok(s) => s.t,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        x0,
        h,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !d.value.is_finite() {
        return Err(Error::IllConditioned(format!("T' is not finite at x0 = {x0}")));
    }
    Ok(d.value)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodScan {
    pub model: alloc::string::String,
    pub samples: Vec<PeriodSample>,
    pub critical_amplitudes: Vec<f64>,
    pub limit: f64,
}

impl PeriodScan {
    pub fn t_min(&self) -> f64 {
        self.samples.iter().map(|s| s.t).fold(f64::INFINITY, f64::min)
    }

    pub fn t_max(&self) -> f64 {
        self.samples.iter().map(|s| s.t).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(T_max − T_min)` relative to the small-amplitude limit.
    pub fn spread_rel(&self) -> f64 {
        (self.t_max() - self.t_min()) / self.limit
    }
}

/// Geometric amplitudes from `x_lo` to `x_hi` inclusive.
pub fn geometric_amplitudes(x_lo: f64, x_hi: f64, n: usize) -> Vec<f64> {
    let ratio = x_hi / x_lo;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                x_hi
            } else {
                x_lo * ratio.powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

pub fn period_scan(model: &ForceModel, x_lo: f64, x_hi: f64, n: usize) -> Result<PeriodScan> {
    if !(0.0 < x_lo && x_lo < x_hi) {
        return Err(Error::InvalidParameter(format!(
            "scan range must satisfy 0 < x_lo < x_hi, got ({x_lo}, {x_hi})"
        )));
    }
    if n < 8 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 8")));
    }
    let bound = model.center_bound()?;
    check_amplitude(model, &bound, x_lo)?;
    check_amplitude(model, &bound, x_hi)?;
    let mut samples = Vec::with_capacity(n);
    for x0 in geometric_amplitudes(x_lo, x_hi, n) {
        let mut s = period_unchecked(model, x0)?;
        s.t_prime = Some(derivative_with_bound(model, &bound, x0)?);
        samples.push(s);
    }
    let significant = |s: &PeriodSample| {
        let d = s.t_prime.unwrap_or(0.0);
        (d.abs() * s.x0 > SIGNIFICANCE * s.t).then_some(d.signum())
    };
    let mut critical_amplitudes = Vec::new();
    for w in samples.windows(2) {
        if let (Some(a), Some(b)) = (significant(&w[0]), significant(&w[1])) {
            if a != b {
                let root = brent(
                    |x| derivative_with_bound(model, &bound, x).unwrap_or(f64::NAN),
                    w[0].x0,
                    w[1].x0,
                    1e-7 * w[1].x0,
                )?;
                critical_amplitudes.push(root);
            }
        }
    }
    Ok(PeriodScan {
        model: model.name().into(),
        samples,
        critical_amplitudes,
        limit: limit_period(model),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isochrony::design::design_from_period;
    use crate::isochrony::involution;
    use crate::model::catalog::{cubic, harmonic, pendulum, quartic_isochrone, sqrt_isochrone};

    /// Complete elliptic integral of the first kind via the AGM.
    fn ellip_k(k: f64) -> f64 {
        let (mut a, mut b) = (1.0f64, (1.0 - k * k).sqrt());
        for _ in 0..40 {
            let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
            a = an;
            b = bn;
        }
        PI / (2.0 * a)
    }

    /// Period from the turning-point form `2∫_{h}^{x0} dx / √(2(V(x0) − V(x)))`
    /// with `x = c + d sin θ` to remove the endpoint singularities.
    fn raw_period(model: &ForceModel, x0: f64) -> f64 {
        let h = involution(model, x0).unwrap().h_x;
        let (c, d) = (0.5 * (x0 + h), 0.5 * (x0 - h));
        let v0 = model.potential(x0);
        let q = GaussKronrod {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            initial_levels: 4,
            max_panels: 1024,
        };
        q.integrate(
            |th| {
                let dv = v0 - model.potential(c + d * th.sin());
                if dv <= 0.0 {
                    return 0.0;
                }
                d * th.cos() / (2.0 * dv).sqrt()
            },
            -FRAC_PI_2,
            FRAC_PI_2,
        )
        .unwrap()
        .value
            * 2.0
    }

    #[test]
    fn harmonic_period() {
        let m = harmonic(2.0, None).unwrap();
        for x0 in [0.1, 1.0, 3.0] {
            assert!((period(&m, x0).unwrap().t - PI).abs() < 1e-12);
        }
        assert!(period_derivative(&m, 1.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn pendulum_matches_elliptic_oracle() {
        let m = pendulum(None).unwrap();
        let oracle = |x: f64| 4.0 * ellip_k((0.5 * x).sin());
        let s = period(&m, 1.0).unwrap();
        assert!((s.t - oracle(1.0)).abs() < 1e-6 * oracle(1.0));
        // 4K(sin ½) to 15 digits from an independent arbitrary-precision run
        assert!((s.t - 6.69997566437045).abs() < 1e-10);
        assert!((raw_period(&m, 1.0) - s.t).abs() < 1e-7 * s.t);
        let fd = (oracle(1.0 + 1e-4) - oracle(1.0 - 1e-4)) / 2e-4;
        let d = period_derivative(&m, 1.0).unwrap();
        assert!(d > 0.0 && (d - fd).abs() < 1e-6, "{d} vs {fd}");
    }

    #[test]
    fn smooth_and_raw_forms_agree() {
        let models = [
            pendulum(None).unwrap(),
            cubic(1.0, 0.3, 0.2, None).unwrap(),
            quartic_isochrone(1.0, 1.0, None).unwrap(),
        ];
        for m in &models {
            for x0 in [0.2, 0.6] {
                let t = period(m, x0).unwrap().t;
                assert!((raw_period(m, x0) - t).abs() < 1e-7 * t, "{}", m.name());
            }
        }
    }

    #[test]
    fn isochronous_scans() {
        let m = sqrt_isochrone(1.0, 2.0, None).unwrap();
        for x0 in [0.1, 0.3, 0.6] {
            assert!((period(&m, x0).unwrap().t - 2.0 * PI).abs() < 1e-9);
        }
        let scan = period_scan(&m, 0.01, 0.6, 12).unwrap();
        assert!(scan.spread_rel() < 1e-7);
        assert!(scan.critical_amplitudes.is_empty());
    }

    #[test]
    fn pendulum_scan_is_increasing() {
        let m = pendulum(None).unwrap();
        let scan = period_scan(&m, 0.1, 2.5, 10).unwrap();
        assert!(scan.critical_amplitudes.is_empty());
        for w in scan.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
        let first = &scan.samples[0];
        assert!((first.t - scan.limit).abs() < 1e-2 * scan.limit);
    }

    #[test]
    fn designed_period_has_one_critical_amplitude() {
        let m = design_from_period(&[1.0, -1.0, 1.0], 1.0, 0.9).unwrap();
        let y: f64 = core::f64::consts::FRAC_1_SQRT_2;
        let x_star = y - 2.0 / 3.0 * y.powi(3) + 8.0 / 15.0 * y.powi(5);
        let scan = period_scan(&m, 0.05, 0.6, 12).unwrap();
        assert_eq!(scan.critical_amplitudes.len(), 1);
        assert!((scan.critical_amplitudes[0] - x_star).abs() < 1e-3);
        assert!(period_derivative(&m, x_star).unwrap().abs() < 1e-4);
    }

    #[test]
    fn rejects_inadmissible_amplitudes() {
        let m = pendulum(None).unwrap();
        assert!(period(&m, 3.2).is_err());
        assert!(period(&m, 0.0).is_err());
    }
}
