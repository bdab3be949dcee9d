//! The variational (Hill) equation `ÿ = −g′(X(t))y` along the planar orbit
//! through `(x₀, 0)`, its monodromy data and the stability classification
//! of the equilibrium.
//!
//! `φ` and `ψ` are the fundamental solutions with `φ(0)=1, φ̇(0)=0` and
//! `ψ(0)=0, ψ̇(0)=1`. Over one period `φ(τ)=1, ψ(τ)=0, ψ̇(τ)=1`, and
//! `φ̇(τ) = g(x₀)·T′(x₀)` decides whether the bundle is periodic.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::{reference_flow, PhasePoint4};
use crate::error::{Error, Result};
use crate::isochrony::{isochrony_report, Verdict};
use crate::model::ForceModel;
use crate::numeric::ode::{Control, DormandPrince};
use crate::period::period;

/// Starting tolerance of the 6D integration; tightened tenfold per retry.
const BASE_TOL: f64 = 1e-11;
const MAX_RETRIES: usize = 6;
const TOL_FLOOR: f64 = 1e-14;
pub const WRONSKIAN_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bundle {
    PeriodicBundle,
    UnboundedBundle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonodromyResult {
    pub x0: f64,
    pub tau: f64,
    pub phi_tau: f64,
    pub phidot_tau: f64,
    pub psi_tau: f64,
    pub psidot_tau: f64,
    pub wronskian_residual: f64,
    /// Band for `|φ̇(τ)|`: `1e−6·max(1, |g(x₀)|·τ)`.
    pub tolerance: f64,
    pub verdict: Bundle,
}

/// `(X, Ẋ, φ, φ̇, ψ, ψ̇)` at sorted nonnegative `times`, plus the largest
/// Wronskian defect seen.
struct Solution {
    states: Vec<[f64; 6]>,
    wronskian: f64,
}

fn integrate6(model: &ForceModel, x0: f64, times: &[f64], tol: f64) -> Result<Solution> {
    let mut states = Vec::with_capacity(times.len());
    let mut w = 0.0f64;
    let y0 = [x0, 0.0, 1.0, 0.0, 0.0, 1.0];
    let defect = |y: &[f64; 6]| (y[5] * y[2] - y[3] * y[4] - 1.0).abs();
    for &t in times.iter().take_while(|t| **t == 0.0) {
        let _ = t;
        states.push(y0);
    }
    let Some(&t_end) = times.last() else {
        return Ok(Solution { states, wronskian: 0.0 });
    };
    DormandPrince::with_tolerance(tol, tol).integrate(
        |_, y: &[f64; 6]| {
            let k = model.dg(y[0]);
            [y[1], -model.g(y[0]), y[3], -k * y[2], y[5], -k * y[4]]
        },
        0.0,
        y0,
        t_end,
        times,
        |_, y, is_stop| {
            w = w.max(defect(y));
            if is_stop {
                states.push(*y);
            }
            Control::Continue
        },
    )?;
    Ok(Solution { states, wronskian: w })
}

/// `integrate6` with tolerance tightening until the Wronskian defect is
/// within bounds.
fn integrate6_checked(model: &ForceModel, x0: f64, times: &[f64]) -> Result<Solution> {
    let mut tol = BASE_TOL;
    let mut last = f64::NAN;
    for _ in 0..=MAX_RETRIES {
        let s = integrate6(model, x0, times, tol)?;
        if s.wronskian <= WRONSKIAN_TOL {
            return Ok(s);
        }
        last = s.wronskian;
        tol = (0.1 * tol).max(TOL_FLOOR);
    }
    Err(Error::Integration {
        t: times.last().copied().unwrap_or(0.0),
        reason: format!("Wronskian defect {last:e} exceeds {WRONSKIAN_TOL:e} after {MAX_RETRIES} retries"),
    })
}

/// The planar state on the orbit through `(x₀, 0)` at time `t`.
///
/// Integration is repeated with tighter tolerance until the energy
/// `Ẋ²/2 + V(X)` agrees with `V(x₀)` to 1e−10 relative.
pub fn reference_orbit(model: &ForceModel, x0: f64, t: f64) -> Result<(f64, f64)> {
    let bound = model.center_bound()?;
    if !bound.admits(model, x0) {
        return Err(Error::OutOfRange {
            what: "amplitude",
            value: x0,
            lo: bound.x_max_neg,
            hi: bound.x_max_pos,
        });
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time {t} is not finite")));
    }
    let g0 = model.potential(x0);
    let mut worst = 0.0;
    for tol in [1e-12, 1e-13, 1e-14] {
        let (x, v) = crate::dynamics::planar_flow(model, x0, 0.0, t, tol)?;
        let drift = ((0.5 * v * v + model.potential(x)) - g0).abs() / g0;
        if drift <= 1e-10 {
            return Ok((x, v));
        }
        worst = drift;
    }
    Err(Error::Integration {
        t,
        reason: format!("energy drift {worst:e} above 1e-10 relative"),
    })
}

fn verdict_tolerance(model: &ForceModel, x0: f64, tau: f64) -> f64 {
    1e-6 * (model.g(x0).abs() * tau).max(1.0)
}

/// Monodromy data of the Hill equation at amplitude `x₀`.
pub fn monodromy(model: &ForceModel, x0: f64) -> Result<MonodromyResult> {
    let tau = period(model, x0)?.t;
    let sol = integrate6_checked(model, x0, &[tau])?;
    let y = sol.states[0];
    let tolerance = verdict_tolerance(model, x0, tau);
    Ok(MonodromyResult {
        x0,
        tau,
        phi_tau: y[2],
        phidot_tau: y[3],
        psi_tau: y[4],
        psidot_tau: y[5],
        wronskian_residual: sol.wronskian,
        tolerance,
        verdict: if y[3].abs() <= tolerance {
            Bundle::PeriodicBundle
        } else {
            Bundle::UnboundedBundle
        },
    })
}

/// `(φ, φ̇, ψ, ψ̇)` and the reference orbit `(X, Ẋ)` at sorted times `≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalSample {
    pub t: f64,
    pub x: f64,
    pub xdot: f64,
    pub phi: f64,
    pub phidot: f64,
    pub psi: f64,
    pub psidot: f64,
}

pub fn fundamental_solutions(model: &ForceModel, x0: f64, times: &[f64]) -> Result<Vec<FundamentalSample>> {
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::InvalidParameter(
            "sample times must be nonnegative and strictly increasing".into(),
        ));
    }
    let sol = integrate6_checked(model, x0, times)?;
    Ok(times
        .iter()
        .zip(sol.states)
        .map(|(&t, y)| FundamentalSample {
            t,
            x: y[0],
            xdot: y[1],
            phi: y[2],
            phidot: y[3],
            psi: y[4],
            psidot: y[5],
        })
        .collect())
}

/// `φ̇(nτ)` for `n = 1..=n_max`.
pub fn monodromy_growth(model: &ForceModel, x0: f64, n_max: usize) -> Result<Vec<(usize, f64)>> {
    if n_max < 2 {
        return Err(Error::InvalidParameter(format!("n_max must be at least 2, got {n_max}")));
    }
    let tau = period(model, x0)?.t;
    let times: Vec<f64> = (1..=n_max).map(|n| n as f64 * tau).collect();
    let sol = integrate6_checked(model, x0, &times)?;
    Ok(sol.states.iter().enumerate().map(|(i, y)| (i + 1, y[3])).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    StableIsochronous,
    WeaklyUnstable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub classification: Classification,
    pub witness_amplitudes: Vec<f64>,
    /// The linearization at the origin has eigenvalues `±i·eigen_imag`.
    pub eigen_imag: f64,
    pub multiplicity: usize,
    pub ladder: Vec<MonodromyResult>,
    pub isochrony: Verdict,
    /// Set when the bundle evidence and the isochrony test disagree.
    pub diagnostic: Option<String>,
}

/// Eigenvalues of the linearized `H`-flow at the origin.
///
/// The Jacobian `A` satisfies `A² = −g′(0)·I`, so every eigenvalue is
/// `±i√g′(0)`; realness of `A` forces equal multiplicities.
pub fn linearization_eigenvalues(model: &ForceModel) -> Result<(f64, usize)> {
    let k = model.stiffness();
    let c = model.d2g(0.0) * 0.0;
    // rows of ∂X_H/∂(q1, q2, p1, p2) at the origin
    let a = [
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
        [-c, -k, 0.0, 0.0],
        [-k, 0.0, 0.0, 0.0],
    ];
    let mut a2 = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            a2[i][j] = (0..4).map(|m| a[i][m] * a[m][j]).sum();
        }
    }
    let lambda2 = a2[0][0];
    for (i, row) in a2.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let expect = if i == j { lambda2 } else { 0.0 };
            if (v - expect).abs() > 1e-14 * k {
                return Err(Error::IllConditioned("linearization is not a scalar square".into()));
            }
        }
    }
    if !(lambda2 < 0.0) {
        return Err(Error::Validation("origin is not a linear center".into()));
    }
    Ok(((-lambda2).sqrt(), 2))
}

/// Geometric ladder `x_k = x_hi·2^(−k)`, `x_hi = x_max⁺/2`.
pub fn amplitude_ladder(model: &ForceModel, n: usize) -> Result<Vec<f64>> {
    let bound = model.center_bound()?;
    let top = 0.5 * bound.x_max_pos;
    Ok((0..n).map(|k| top * 0.5f64.powi(k as i32)).collect())
}

pub fn classify_equilibrium(model: &ForceModel, n_amplitudes: usize) -> Result<StabilityVerdict> {
    if n_amplitudes == 0 {
        return Err(Error::InvalidParameter("need at least one amplitude".into()));
    }
    let (eigen_imag, multiplicity) = linearization_eigenvalues(model)?;
    let ladder = amplitude_ladder(model, n_amplitudes)?
        .into_iter()
        .map(|x| monodromy(model, x))
        .collect::<Result<Vec<_>>>()?;
    let witness_amplitudes: Vec<f64> = ladder
        .iter()
        .filter(|m| m.verdict == Bundle::UnboundedBundle)
        .map(|m| m.x0)
        .collect();
    let isochrony = isochrony_report(model, 64)?.verdict;
    let classification = if witness_amplitudes.is_empty() {
        Classification::StableIsochronous
    } else {
        Classification::WeaklyUnstable
    };
    let diagnostic = match (classification, isochrony) {
        (Classification::StableIsochronous, Verdict::Isochronous)
        | (Classification::WeaklyUnstable, Verdict::NotIsochronous) => None,
        (c, v) => Some(format!(
            "inconclusive: bundle evidence gives {c:?} but the isochrony test gives {v:?}"
        )),
    };
    Ok(StabilityVerdict {
        classification,
        witness_amplitudes,
        eigen_imag,
        multiplicity,
        ladder,
        isochrony,
        diagnostic,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticProbe {
    /// Minimum 4D distance to the origin over `±horizon` periods.
    pub min_distance: f64,
    /// Minimum of `√(x² + ẋ²)` over one planar period on the same phase grid.
    pub planar_min: f64,
    pub forward_min: f64,
    pub backward_min: f64,
}

const PROBE_SAMPLES: usize = 1000;

/// Distance to the origin along the trajectory from `(x₀, 1, 0, 0)`.
pub fn asymptotic_motion_probe(model: &ForceModel, x0: f64, horizon: usize) -> Result<AsymptoticProbe> {
    asymptotic_motion_probe_from(model, PhasePoint4::new(x0, 1.0, 0.0, 0.0), horizon)
}

/// As [`asymptotic_motion_probe`] from an arbitrary start with `p₂ = 0`,
/// `q₁ > 0`.
pub fn asymptotic_motion_probe_from(model: &ForceModel, start: PhasePoint4, horizon: usize) -> Result<AsymptoticProbe> {
    if !(start.q1 > 0.0) || start.p2 != 0.0 {
        return Err(Error::InvalidParameter(
            "start must lie on the positive turning point (q1 > 0, p2 = 0)".into(),
        ));
    }
    let tau = period(model, start.q1)?.t;
    let dt = tau / PROBE_SAMPLES as f64;
    let n = horizon * PROBE_SAMPLES;
    let fwd: Vec<f64> = (1..=n).map(|k| k as f64 * dt).collect();
    let bwd: Vec<f64> = fwd.iter().map(|t| -t).collect();
    let min_norm = |pts: &[PhasePoint4]| pts.iter().fold(start.norm(), |m, p| m.min(p.norm()));
    let forward_min = min_norm(&reference_flow(model, start, &fwd, 1e-12)?);
    let backward_min = min_norm(&reference_flow(model, start, &bwd, 1e-12)?);
    let planar = reference_flow(
        model,
        PhasePoint4::new(start.q1, 0.0, 0.0, 0.0),
        &fwd[..PROBE_SAMPLES],
        1e-12,
    )?;
    let planar_min = planar
        .iter()
        .fold(start.q1.abs(), |m, p| m.min(p.q1.hypot(p.p2)));
    Ok(AsymptoticProbe {
        min_distance: forward_min.min(backward_min),
        planar_min,
        forward_min,
        backward_min,
    })
}
