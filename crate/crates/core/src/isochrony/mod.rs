//! The map `u(x) = sgn(x)√(2V(x))`, the involution `h = u⁻¹(−u)` and the
//! isochronicity tests built on them.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::{CenterBound, ForceModel};
use crate::numeric::lsq::{chebyshev_fit, chebyshev_nodes};
use crate::numeric::roots::newton_bracketed;

pub mod design;

/// `u(x) = sgn(x)·√(2V(x))`.
pub fn u_map(model: &ForceModel, x: f64) -> Result<f64> {
    if !model.domain().contains(x) {
        return Err(out_of_domain(model, x));
    }
    Ok(u_raw(model, x))
}

fn u_raw(model: &ForceModel, x: f64) -> f64 {
    let v = model.potential(x).max(0.0);
    (2.0 * v).sqrt().copysign(x)
}

fn out_of_domain(model: &ForceModel, x: f64) -> Error {
    let d = model.domain();
    Error::OutOfRange {
        what: "x",
        value: x,
        lo: d.lo,
        hi: d.hi,
    }
}

/// `u'(x) = g(x)/u(x)`, with the limit `√V''(0)` at the origin.
pub fn u_prime(model: &ForceModel, x: f64) -> f64 {
    if x == 0.0 {
        return model.stiffness().sqrt();
    }
    let u = u_raw(model, x);
    if u == 0.0 {
        return model.stiffness().sqrt();
    }
    model.g(x) / u
}

/// The image `u(J)` as far as it is numerically reachable.
pub fn u_image(model: &ForceModel) -> (f64, f64) {
    let [lo, hi] = model.edges();
    (u_raw(model, lo), u_raw(model, hi))
}

/// Solve `u(x) = y` by safeguarded Newton iteration on the monotone `u`.
pub fn u_inverse(model: &ForceModel, y: f64) -> Result<f64> {
    if y == 0.0 {
        return Ok(0.0);
    }
    let (ylo, yhi) = u_image(model);
    let [xlo, xhi] = model.edges();
    let end = if y > 0.0 { xhi } else { xlo };
    if !(y > ylo && y < yhi) {
        let u_end = if y > 0.0 { yhi } else { ylo };
        if y == u_end {
            return Ok(end);
        }
        return Err(Error::OutOfRange {
            what: "y",
            value: y,
            lo: ylo,
            hi: yhi,
        });
    }
    let (a, b) = if y > 0.0 { (0.0, end) } else { (end, 0.0) };
    newton_bracketed(
        |x| (u_raw(model, x) - y, u_prime(model, x)),
        a,
        b,
        0.0,
    )
}

/// One evaluation of the involution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvolutionProbe {
    pub x: f64,
    pub h_x: f64,
    /// `|V(h(x)) − V(x)|`.
    pub residual_v: f64,
    /// Interval searched for `h(x)`.
    pub bracket: (f64, f64),
}

/// Quadratic coefficient of `h` at 0 from the derivative stack.
fn h_quadratic(model: &ForceModel) -> f64 {
    let t = model.taylor_v0();
    -t[3] / (3.0 * t[2])
}

/// `h(x) = u⁻¹(−u(x))`.
pub fn involution(model: &ForceModel, x: f64) -> Result<InvolutionProbe> {
    if !model.domain().contains(x) {
        return Err(out_of_domain(model, x));
    }
    let [lo, hi] = model.edges();
    let bracket = if x > 0.0 { (lo, 0.0) } else { (0.0, hi) };
    if x == 0.0 {
        return Ok(InvolutionProbe {
            x,
            h_x: 0.0,
            residual_v: 0.0,
            bracket: (0.0, 0.0),
        });
    }
    let h_x = if x.abs() < 1e-6 * model.domain().width() {
        -x + h_quadratic(model) * x * x
    } else {
        let y = -u_raw(model, x);
        let (ylo, yhi) = u_image(model);
        if y <= ylo || y >= yhi {
            return Err(Error::ConjugateEscapes {
                x,
                side: if y < 0.0 { "negative" } else { "positive" },
            });
        }
        u_inverse(model, y)?
    };
    Ok(InvolutionProbe {
        x,
        h_x,
        residual_v: (model.potential(h_x) - model.potential(x)).abs(),
        bracket,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Isochronous,
    NotIsochronous,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsochronyReport {
    /// `sup |V(x) − (V''(0)/8)(x − h(x))²|` over the grid.
    pub residual_sup: f64,
    /// `V⁽⁴⁾(0) − 5V⁽³⁾(0)²/(3V''(0))`.
    pub nc4_residual: Option<f64>,
    /// `V⁽⁶⁾(0) − 7V⁽³⁾V⁽⁵⁾/V'' + 140V⁽³⁾⁴/(9V''³)` at 0.
    pub nc6_residual: Option<f64>,
    pub residual_tol: f64,
    pub nc_tol: f64,
    pub grid_n: usize,
    pub verdict: Verdict,
}

/// The two necessary conditions from the derivative stack at 0.
pub fn necessary_conditions(model: &ForceModel) -> (Option<f64>, Option<f64>) {
    let t = model.taylor_v0();
    let (v2, v3, v4, v5, v6) = (t[2], t[3], t[4], t[5], t[6]);
    let nc4 = v4 - 5.0 * v3 * v3 / (3.0 * v2);
    let nc6 = v6 - 7.0 * v3 * v5 / v2 + 140.0 * v3.powi(4) / (9.0 * v2.powi(3));
    let keep = |v: f64| if v.is_finite() { Some(v) } else { None };
    (keep(nc4), keep(nc6))
}

/// Grid of `n` nonzero points spread over the symmetric-energy range.
pub fn energy_grid(bound: &CenterBound, n: usize) -> Vec<f64> {
    let (lo, hi) = (0.98 * bound.x_max_neg, 0.98 * bound.x_max_pos);
    (0..n)
        .map(|i| {
            let x = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
            if x == 0.0 {
                0.25 * (hi - lo) / n as f64
            } else {
                x
            }
        })
        .collect()
}

pub fn isochrony_report(model: &ForceModel, grid_n: usize) -> Result<IsochronyReport> {
    if grid_n < 16 {
        return Err(Error::InvalidParameter(format!(
            "grid_n = {grid_n} must be at least 16"
        )));
    }
    let bound = model.center_bound()?;
    let k = model.stiffness();
    let mut residual_sup: f64 = 0.0;
    for x in energy_grid(&bound, grid_n) {
        let h = involution(model, x)?.h_x;
        let r = (model.potential(x) - 0.125 * k * (x - h) * (x - h)).abs();
        residual_sup = residual_sup.max(r);
    }
    let residual_tol = 1e-7 * k * bound.diameter().powi(2);
    let nc_tol = 1e-5 * k;
    let (nc4, nc6) = necessary_conditions(model);
    let nc_fails = [nc4, nc6].iter().any(|v| matches!(v, Some(r) if r.abs() > nc_tol));
    let nc_ok = [nc4, nc6].iter().all(|v| matches!(v, Some(r) if r.abs() <= nc_tol));
    let verdict = if nc_fails || residual_sup > residual_tol {
        Verdict::NotIsochronous
    } else if nc_ok {
        Verdict::Isochronous
    } else {
        Verdict::Inconclusive
    };
    Ok(IsochronyReport {
        residual_sup,
        nc4_residual: nc4,
        nc6_residual: nc6,
        residual_tol,
        nc_tol,
        grid_n,
        verdict,
    })
}

/// Probes of `h` at Chebyshev nodes of `[-r, r]`.
pub fn taylor_probes(model: &ForceModel, n: usize, r: f64) -> Result<Vec<InvolutionProbe>> {
    chebyshev_nodes(n, r)
        .into_iter()
        .map(|x| involution(model, x))
        .collect()
}

/// Default probe radius for [`h_taylor_fit`]: a small fraction of the
/// shorter amplitude limit.
pub fn taylor_radius(bound: &CenterBound) -> f64 {
    0.08 * bound.x_max_pos.min(-bound.x_max_neg)
}

/// Result of fitting `h(x) = −x + a x² + c₃x³ + b x⁴ + c₅x⁵ + …`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HTaylorFit {
    pub a: f64,
    pub b: f64,
    pub c3: f64,
    pub c5: f64,
    /// `(c₃ + a², c₅ − (2a⁴ − 3ab))`.
    pub odd_residuals: (f64, f64),
    pub rms: f64,
}

const FIT_DEGREE: usize = 16;

/// Least-squares polynomial fit of `h(x) + x` through the probes.
pub fn h_taylor_fit(probes: &[InvolutionProbe]) -> Result<HTaylorFit> {
    if probes.len() < 8 {
        return Err(Error::InvalidParameter(format!(
            "{} probes given, at least 8 needed",
            probes.len()
        )));
    }
    let r = probes.iter().fold(0.0f64, |m, p| m.max(p.x.abs()));
    if !(r > 1e-8 && r < 1e3) {
        return Err(Error::IllConditioned(format!(
            "probe span {r:e} is outside the usable range"
        )));
    }
    let xs: Vec<f64> = probes.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = probes.iter().map(|p| p.h_x + p.x).collect();
    let degree = FIT_DEGREE.min(probes.len() - 2).max(5);
    let (c, rms) = chebyshev_fit(&xs, &ys, degree, r)?;
    let (a, c3, b, c5) = (c[2], c[3], c[4], c[5]);
    Ok(HTaylorFit {
        a,
        b,
        c3,
        c5,
        odd_residuals: (c3 + a * a, c5 - (2.0 * a.powi(4) - 3.0 * a * b)),
        rms,
    })
}
