//! The 4D system with `H = p₁p₂ + g(q₁)q₂` and `K = p₂²/2 + V(q₁)`.
//!
//! `(q₁, p₂)` is the planar oscillator `ẍ = −g(x)`; `q₂` obeys the
//! variational equation `ÿ = −g′(x)y`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hill;
use crate::isochrony::u_inverse;
use crate::model::{CenterBound, ForceModel};
use crate::numeric::diff::gradient4;
use crate::numeric::ode::{Control, DormandPrince};
use crate::period::period;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhasePoint4 {
    pub q1: f64,
    pub q2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl PhasePoint4 {
    pub const fn new(q1: f64, q2: f64, p1: f64, p2: f64) -> Self {
        PhasePoint4 { q1, q2, p1, p2 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q1, self.q2, self.p1, self.p2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        PhasePoint4::new(a[0], a[1], a[2], a[3])
    }

    pub fn norm(self) -> f64 {
        let [a, b, c, d] = self.to_array();
        (a * a + b * b + c * c + d * d).sqrt()
    }

    /// Whether `(q₁, p₂)` lies in the center region.
    pub fn in_m(self, model: &ForceModel, bound: &CenterBound) -> bool {
        model.domain().contains(self.q1)
            && self.q1 > bound.x_max_neg
            && self.q1 < bound.x_max_pos
            && 0.5 * self.p2 * self.p2 + model.potential(self.q1) < bound.e_max
    }

    /// `M` minus the points projecting to the planar equilibrium.
    pub fn in_n(self, model: &ForceModel, bound: &CenterBound) -> bool {
        self.in_m(model, bound) && (self.q1, self.p2) != (0.0, 0.0)
    }
}

fn check_q1(model: &ForceModel, q1: f64) -> Result<()> {
    let d = model.domain();
    if !d.contains(q1) {
        return Err(Error::OutOfRange {
            what: "q1",
            value: q1,
            lo: d.lo,
            hi: d.hi,
        });
    }
    Ok(())
}

/// `(H, K)` at a phase point.
pub fn evaluate_integrals(model: &ForceModel, pt: PhasePoint4) -> Result<(f64, f64)> {
    check_q1(model, pt.q1)?;
    Ok(integrals_raw(model, pt))
}

fn integrals_raw(model: &ForceModel, pt: PhasePoint4) -> (f64, f64) {
    let h = pt.p1 * pt.p2 + model.g(pt.q1) * pt.q2;
    let k = 0.5 * pt.p2 * pt.p2 + model.potential(pt.q1);
    (h, k)
}

/// Hamiltonian vector fields `(X_H, X_K)` in `(q₁, q₂, p₁, p₂)` order.
pub fn vector_fields(model: &ForceModel, pt: PhasePoint4) -> Result<([f64; 4], [f64; 4])> {
    check_q1(model, pt.q1)?;
    let g = model.g(pt.q1);
    let xh = [pt.p2, pt.p1, -model.dg(pt.q1) * pt.q2, -g];
    let xk = [0.0, pt.p2, -g, 0.0];
    Ok((xh, xk))
}

fn field_h(model: &ForceModel, y: &[f64; 4]) -> [f64; 4] {
    [y[3], y[2], -model.dg(y[0]) * y[1], -model.g(y[0])]
}

/// Time-`t` map of the `K`-flow; exact for every `t` since the flow is affine.
pub fn flow_k_exact(model: &ForceModel, pt: PhasePoint4, t: f64) -> Result<PhasePoint4> {
    check_q1(model, pt.q1)?;
    Ok(PhasePoint4 {
        q1: pt.q1,
        q2: pt.q2 + pt.p2 * t,
        p1: pt.p1 - model.g(pt.q1) * t,
        p2: pt.p2,
    })
}

/// Symmetric composition `B(dt/2)∘A(dt)∘B(dt/2)` with
/// `H_A = p₁p₂` (drift) and `H_B = g(q₁)q₂` (kick).
pub fn strang_step(model: &ForceModel, pt: PhasePoint4, dt: f64) -> PhasePoint4 {
    let kick = |p: PhasePoint4, s: f64| PhasePoint4 {
        p1: p.p1 - model.dg(p.q1) * p.q2 * s,
        p2: p.p2 - model.g(p.q1) * s,
        ..p
    };
    let half = kick(pt, 0.5 * dt);
    let drift = PhasePoint4 {
        q1: half.q1 + half.p2 * dt,
        q2: half.q2 + half.p1 * dt,
        ..half
    };
    kick(drift, 0.5 * dt)
}

/// Output of a fixed-step `H`-flow integration.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint4>,
    /// Largest `|H − H(0)|` over every step.
    pub h_drift: f64,
    pub k_drift: f64,
    /// `|H − H(0)|` at the final time only.
    pub h_end_error: f64,
    pub k_end_error: f64,
    pub integrator: &'static str,
}

impl TrajectoryRecord {
    pub fn max_abs_q2(&self) -> f64 {
        self.states.iter().fold(0.0, |m, s| m.max(s.q2.abs()))
    }
}

/// Integrate the `H`-flow with the splitting scheme. The step is shrunk so
/// that `t_end` is hit exactly; `t_end < 0` integrates backward. Every
/// `stride`-th state is recorded (the last one always is).
pub fn integrate_h_strided(
    model: &ForceModel,
    pt: PhasePoint4,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<TrajectoryRecord> {
    if !(dt > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and finite t_end, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let bound = model.center_bound()?;
    if !pt.in_m(model, &bound) {
        return Err(Error::LeftCenter { t: 0.0 });
    }
    let steps = ((t_end.abs() / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let stride = stride.max(1);
    let (h0, k0) = integrals_raw(model, pt);
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(steps / stride + 2),
        states: Vec::with_capacity(steps / stride + 2),
        h_drift: 0.0,
        k_drift: 0.0,
        h_end_error: 0.0,
        k_end_error: 0.0,
        integrator: "strang(p1p2 | g(q1)q2)",
    };
    rec.times.push(0.0);
    rec.states.push(pt);
    let mut s = pt;
    for i in 1..=steps {
        s = strang_step(model, s, h);
        let t = i as f64 * h;
        if !s.in_m(model, &bound) {
            return Err(Error::LeftCenter { t });
        }
        let (hv, kv) = integrals_raw(model, s);
        rec.h_drift = rec.h_drift.max((hv - h0).abs());
        rec.k_drift = rec.k_drift.max((kv - k0).abs());
        if i == steps {
            rec.h_end_error = (hv - h0).abs();
            rec.k_end_error = (kv - k0).abs();
        }
        if i % stride == 0 || i == steps {
            rec.times.push(t);
            rec.states.push(s);
        }
    }
    Ok(rec)
}

pub fn integrate_h(model: &ForceModel, pt: PhasePoint4, t_end: f64, dt: f64) -> Result<TrajectoryRecord> {
    integrate_h_strided(model, pt, t_end, dt, 1)
}

/// Adaptive 5(4) integration of the `H`-flow, observing every state at the
/// requested times (sorted by `|t|`, all of one sign).
pub fn reference_flow(
    model: &ForceModel,
    pt: PhasePoint4,
    times: &[f64],
    tol: f64,
) -> Result<Vec<PhasePoint4>> {
    let Some(&last) = times.last() else {
        return Ok(Vec::new());
    };
    let sign = if last < 0.0 { -1.0 } else { 1.0 };
    let stops: Vec<f64> = times.iter().map(|t| t * sign).collect();
    let mut out = Vec::with_capacity(times.len());
    for &t in &stops {
        if t == 0.0 {
            out.push(pt);
        }
    }
    let dp = DormandPrince::with_tolerance(tol, tol);
    dp.integrate(
        |_, y: &[f64; 4]| {
            let f = field_h(model, y);
            [sign * f[0], sign * f[1], sign * f[2], sign * f[3]]
        },
        0.0,
        pt.to_array(),
        last * sign,
        &stops,
        |_, y, is_stop| {
            if is_stop {
                out.push(PhasePoint4::from_array(*y));
            }
            Control::Continue
        },
    )?;
    Ok(out)
}

/// The planar state `(x, ẋ)` at time `t` (of either sign) from `(x₀, v₀)`.
pub fn planar_flow(model: &ForceModel, x0: f64, v0: f64, t: f64, tol: f64) -> Result<(f64, f64)> {
    let (y, _) = planar_dp(tol).integrate(
        |_, y: &[f64; 2]| {
            let s = t.signum();
            [s * y[1], -s * model.g(y[0])]
        },
        0.0,
        [x0, v0],
        t.abs(),
        &[],
        |_, _, _| Control::Continue,
    )?;
    Ok((y[0], y[1]))
}

fn planar_dp(tol: f64) -> DormandPrince {
    DormandPrince::with_tolerance(tol, tol)
}

/// `∇H` and `∇K` in `(q₁, q₂, p₁, p₂)` order.
pub fn integral_gradients(model: &ForceModel, pt: PhasePoint4) -> ([f64; 4], [f64; 4]) {
    let g = model.g(pt.q1);
    (
        [model.dg(pt.q1) * pt.q2, g, pt.p2, pt.p1],
        [g, 0.0, 0.0, pt.p2],
    )
}

fn bracket_from_gradients(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[2] + a[1] * b[3] - a[2] * b[0] - a[3] * b[1]
}

/// `{H, K}` from the analytic gradients.
pub fn bracket_hk(model: &ForceModel, pt: PhasePoint4) -> Result<f64> {
    check_q1(model, pt.q1)?;
    let (dh, dk) = integral_gradients(model, pt);
    Ok(bracket_from_gradients(&dh, &dk))
}

/// `{f, g} = Σ ∂f/∂qᵢ ∂g/∂pᵢ − ∂f/∂pᵢ ∂g/∂qᵢ` by extrapolated central
/// differences with initial step `1e−6·max(1, |coordinate|)`.
pub fn poisson_bracket<F, G>(mut f: F, mut g: G, pt: PhasePoint4) -> Result<f64>
where
    F: FnMut(PhasePoint4) -> f64,
    G: FnMut(PhasePoint4) -> f64,
{
    let x = pt.to_array();
    let df = gradient4(|p| f(PhasePoint4::from_array(*p)), &x, 1e-6);
    let dg = gradient4(|p| g(PhasePoint4::from_array(*p)), &x, 1e-6);
    let b = bracket_from_gradients(&df, &dg);
    if !b.is_finite() {
        return Err(Error::NonFinite {
            what: "Poisson bracket",
            x: pt.q1,
        });
    }
    Ok(b)
}

/// Singular values `(σ_max, σ_min)` of the 2×4 matrix with rows `a`, `b`.
pub fn singular_values_2x4(a: &[f64; 4], b: &[f64; 4]) -> (f64, f64) {
    let dot = |u: &[f64; 4], v: &[f64; 4]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let (aa, bb, ab) = (dot(a, a), dot(b, b), dot(a, b));
    let tr = aa + bb;
    // Gram determinant via Lagrange's identity avoids cancellation
    let mut det = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let m = a[i] * b[j] - a[j] * b[i];
            det += m * m;
        }
    }
    let disc = ((aa - bb) * (aa - bb) + 4.0 * ab * ab).sqrt();
    let l_max = 0.5 * (tr + disc);
    let l_min = if l_max > 0.0 { det / l_max } else { 0.0 };
    (l_max.sqrt(), l_min.sqrt())
}

/// Smallest singular value of the stacked gradients `(∇H; ∇K)`.
pub fn independence_min_sv(model: &ForceModel, pt: PhasePoint4) -> Result<f64> {
    check_q1(model, pt.q1)?;
    let (dh, dk) = integral_gradients(model, pt);
    Ok(singular_values_2x4(&dh, &dk).1)
}

/// Numerical rank of `(∇H; ∇K)` with relative threshold `rel_tol`.
pub fn gradient_rank(model: &ForceModel, pt: PhasePoint4, rel_tol: f64) -> Result<usize> {
    check_q1(model, pt.q1)?;
    let (dh, dk) = integral_gradients(model, pt);
    let (s1, s2) = singular_values_2x4(&dh, &dk);
    Ok(if s1 == 0.0 {
        0
    } else if s2 <= rel_tol * s1 {
        1
    } else {
        2
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSetDiagnostics {
    pub h_value: f64,
    pub k_value: f64,
    /// Positive amplitude with `V(x0) = K`.
    pub x0: f64,
    pub omega: f64,
    /// `φ̇(τ)`: zero exactly when the bundle over the orbit is periodic.
    pub drift_indicator: f64,
    pub drift_tolerance: f64,
    pub independence_min_sv: f64,
}

pub fn level_set_diagnostics(model: &ForceModel, pt: PhasePoint4) -> Result<LevelSetDiagnostics> {
    let bound = model.center_bound()?;
    if !pt.in_n(model, &bound) {
        return Err(Error::InvalidParameter(format!(
            "({}, {}, {}, {}) is not in N: the planar part must be a nontrivial orbit of the center",
            pt.q1, pt.q2, pt.p1, pt.p2
        )));
    }
    let (h, k) = integrals_raw(model, pt);
    let x0 = u_inverse(model, (2.0 * k).sqrt())?;
    let t = period(model, x0)?.t;
    let mono = hill::monodromy(model, x0)?;
    Ok(LevelSetDiagnostics {
        h_value: h,
        k_value: k,
        x0,
        omega: 2.0 * PI / t,
        drift_indicator: mono.phidot_tau,
        drift_tolerance: mono.tolerance,
        independence_min_sv: independence_min_sv(model, pt)?,
    })
}

/// Box for random phase points: `q₂, p₁ ∈ [−r, r]`, `(q₁, p₂)` drawn from
/// the bounding box of the center region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingBox {
    pub q2_p1_radius: f64,
    /// Fraction of the center region used for `(q₁, p₂)`.
    pub center_fraction: f64,
}

impl Default for SamplingBox {
    fn default() -> Self {
        SamplingBox {
            q2_p1_radius: 2.0,
            center_fraction: 0.9,
        }
    }
}

/// `n` uniform points of `N` inside the box, reproducible from `seed`.
pub fn sample_points(model: &ForceModel, n: usize, seed: u64, bx: SamplingBox) -> Result<Vec<PhasePoint4>> {
    let bound = model.center_bound()?;
    let f = bx.center_fraction;
    let (lo, hi) = (f * bound.x_max_neg, f * bound.x_max_pos);
    let pmax = f * (2.0 * bound.e_max).sqrt();
    let r = bx.q2_p1_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n {
        tries += 1;
        if tries > 1000 * (n + 1) {
            return Err(Error::IllConditioned(
                "rejection sampling of N does not converge".into(),
            ));
        }
        let pt = PhasePoint4 {
            q1: rng.random_range(lo..hi),
            q2: rng.random_range(-r..r),
            p1: rng.random_range(-r..r),
            p2: rng.random_range(-pmax..pmax),
        };
        if pt.in_n(model, &bound) && 0.5 * pt.p2 * pt.p2 + model.potential(pt.q1) < f * f * bound.e_max {
            out.push(pt);
        }
    }
    Ok(out)
}

/// `max |q₂|` over `[0, nτ]` for each `n` in `periods`, with the splitting
/// integrator at `steps_per_period`.
pub fn q2_envelope(
    model: &ForceModel,
    pt: PhasePoint4,
    periods: &[usize],
    steps_per_period: usize,
) -> Result<Vec<(usize, f64)>> {
    let bound = model.center_bound()?;
    if !pt.in_n(model, &bound) {
        return Err(Error::InvalidParameter("start point is not in N".into()));
    }
    let k = 0.5 * pt.p2 * pt.p2 + model.potential(pt.q1);
    let x0 = u_inverse(model, (2.0 * k).sqrt())?;
    let tau = period(model, x0)?.t;
    let n_max = periods.iter().copied().max().unwrap_or(0);
    let dt = tau / steps_per_period as f64;
    let mut s = pt;
    let mut m = pt.q2.abs();
    let mut out = Vec::new();
    for n in 1..=n_max {
        for _ in 0..steps_per_period {
            s = strang_step(model, s, dt);
            m = m.max(s.q2.abs());
        }
        if periods.contains(&n) {
            out.push((n, m));
        }
    }
    Ok(out)
}

/// Least-squares line `y = a + b·x` and the largest relative residual
/// `|y − fit| / |fit|`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let err = points
        .iter()
        .map(|(x, y)| {
            let fit = a + b * x;
            (y - fit).abs() / fit.abs()
        })
        .fold(0.0, f64::max);
    (a, b, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{harmonic, pendulum, sqrt_isochrone};

    #[test]
    fn integrals_examples() {
        let h = harmonic(1.0, None).unwrap();
        assert_eq!(evaluate_integrals(&h, PhasePoint4::new(0.0, 5.0, 0.0, 0.0)).unwrap(), (0.0, 0.0));
        let (hv, kv) = evaluate_integrals(&h, PhasePoint4::new(1.0, 2.0, 3.0, 4.0)).unwrap();
        assert!((hv - 14.0).abs() < 1e-14 && (kv - 8.5).abs() < 1e-14);
        let s = sqrt_isochrone(1.0, 2.0, None).unwrap();
        let (_, k) = evaluate_integrals(&s, PhasePoint4::new(0.7, 0.0, 0.0, 1.0)).unwrap();
        let v = 0.125 * ((1.0f64 + 2.8).sqrt() - 1.0).powi(2);
        assert!((k - 0.5 - v).abs() < 1e-14);
    }

    #[test]
    fn field_examples() {
        let p = pendulum(None).unwrap();
        let (xh, xk) = vector_fields(&p, PhasePoint4::new(PI / 2.0, 1.0, 0.0, 0.0)).unwrap();
        assert!(xh[2].abs() < 1e-15 && (xh[3] + 1.0).abs() < 1e-15);
        assert_eq!((xk[0], xk[3]), (0.0, 0.0));
        let (xh, _) = vector_fields(&p, PhasePoint4::new(0.0, 3.0, 0.0, 0.0)).unwrap();
        assert_eq!(xh, [0.0, 0.0, -3.0, 0.0]);
    }

    #[test]
    fn k_flow_is_affine_group() {
        let p = pendulum(None).unwrap();
        let pt = PhasePoint4::new(0.7, -0.3, 1.1, 0.4);
        let a = flow_k_exact(&p, flow_k_exact(&p, pt, 1.5).unwrap(), -0.25).unwrap();
        let b = flow_k_exact(&p, pt, 1.25).unwrap();
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            assert!((x - y).abs() < 1e-14);
        }
        let e = flow_k_exact(&p, PhasePoint4::new(0.5, 0.0, 0.0, 0.0), 7.0).unwrap();
        assert_eq!(e.p1, -7.0 * 0.5f64.sin());
    }

    #[test]
    fn strang_step_is_reversible() {
        let p = pendulum(None).unwrap();
        let pt = PhasePoint4::new(0.8, 0.3, -0.2, 0.5);
        let back = strang_step(&p, strang_step(&p, pt, 0.01), -0.01);
        for (x, y) in back.to_array().iter().zip(pt.to_array()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn harmonic_returns_after_one_period() {
        let h = harmonic(1.0, None).unwrap();
        let rec = integrate_h(&h, PhasePoint4::new(1.0, 0.0, 0.0, 0.0), 2.0 * PI, 2.0 * PI / 2000.0).unwrap();
        let end = rec.states.last().unwrap();
        assert!((end.q1 - 1.0).abs() < 1e-5 && end.p2.abs() < 1e-5);
    }

    #[test]
    fn splitting_agrees_with_reference() {
        let s = sqrt_isochrone(1.0, 2.0, None).unwrap();
        let pt = PhasePoint4::new(0.3, 1.0, 0.0, 0.0);
        let rec = integrate_h_strided(&s, pt, 10.0 * 2.0 * PI, 2.0 * PI / 4000.0, 4000).unwrap();
        assert!(rec.h_drift < 1e-6 && rec.k_drift < 1e-6, "{} {}", rec.h_drift, rec.k_drift);
        let refs = reference_flow(&s, pt, &rec.times, 1e-12).unwrap();
        for (a, b) in rec.states.iter().zip(&refs) {
            assert!((a.q1 - b.q1).abs() < 1e-5, "{a:?} {b:?}");
            assert!((a.q2 - b.q2).abs() < 1e-5);
        }
    }

    #[test]
    fn hk_bracket_vanishes() {
        let p = pendulum(None).unwrap();
        for pt in sample_points(&p, 50, 7, SamplingBox::default()).unwrap() {
            assert!(bracket_hk(&p, pt).unwrap().abs() < 1e-10);
            let fd = poisson_bracket(
                |x| integrals_raw(&p, x).0,
                |x| integrals_raw(&p, x).1,
                pt,
            )
            .unwrap();
            assert!(fd.abs() < 1e-7);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = pendulum(None).unwrap();
        let a = sample_points(&p, 10, 42, SamplingBox::default()).unwrap();
        let b = sample_points(&p, 10, 42, SamplingBox::default()).unwrap();
        assert_eq!(a, b);
        let c = sample_points(&p, 10, 43, SamplingBox::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rank_drops_on_the_planar_origin() {
        let p = pendulum(None).unwrap();
        assert!(gradient_rank(&p, PhasePoint4::new(0.0, 0.4, -1.0, 0.0), 1e-12).unwrap() <= 1);
        assert_eq!(gradient_rank(&p, PhasePoint4::new(0.3, 0.4, -1.0, 0.2), 1e-12).unwrap(), 2);
    }

    #[test]
    fn not_in_n_is_rejected() {
        let p = pendulum(None).unwrap();
        assert!(level_set_diagnostics(&p, PhasePoint4::new(0.0, 1.0, 2.0, 0.0)).is_err());
    }

    #[test]
    fn line_fit() {
        let (a, b, e) = linear_fit(&[(1.0, 3.0), (2.0, 5.0), (4.0, 9.0)]);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && e < 1e-12);
    }
}
