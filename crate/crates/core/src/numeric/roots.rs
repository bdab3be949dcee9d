//! Bracketed scalar root finding.

use alloc::format;


use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Brent's method: bisection safeguarding secant and inverse-quadratic steps.
///
/// `f(lo)` and `f(hi)` must differ in sign (a zero endpoint is returned as is).
/// Iterates until the bracket is narrower than `xtol + 4ε|x|`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) {
        return Err(Error::RootFinding(format!(
            "non-finite endpoint values on [{lo}, {hi}]"
        )));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{lo}, {hi}]: f = ({fa:e}, {fb:e})"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::RootFinding(format!("non-finite value at x = {b}")));
        }
    }
    Err(Error::RootFinding(format!(
        "no convergence after {MAX_ITER} iterations on [{lo}, {hi}]"
    )))
}

/// Newton's method kept inside a shrinking bracket; falls back to bisection
/// whenever the Newton step leaves the bracket or stalls.
///
/// `fdf` returns `(f(x), f'(x))`. The function must change sign on `[lo, hi]`.
pub fn newton_bracketed<F>(mut fdf: F, lo: f64, hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut a, mut b) = (lo, hi);
    let (fa, _) = fdf(a);
    let (fb, _) = fdf(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !(fa.is_finite() && fb.is_finite()) {
        return Err(Error::RootFinding(format!(
            "no sign change on [{lo}, {hi}]: f = ({fa:e}, {fb:e})"
        )));
    }
    let rising = fb > 0.0;
    let mut x = 0.5 * (a + b);
    let mut last_step = b - a;
    for _ in 0..MAX_ITER {
        let (fx, dfx) = fdf(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if !fx.is_finite() {
            return Err(Error::RootFinding(format!("non-finite value at x = {x}")));
        }
        if (fx > 0.0) == rising {
            b = x;
        } else {
            a = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx.is_finite() && dfx != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        let tol = xtol + 4.0 * f64::EPSILON * next.abs();
        if step <= tol || (b - a) <= tol {
            return Ok(next);
        }
        // bisect when Newton is not at least halving the step
        x = if step > 0.5 * last_step.abs() && next == newton {
            let mid = 0.5 * (a + b);
            last_step = (mid - x).abs();
            mid
        } else {
            last_step = step;
            next
        };
    }
    Err(Error::RootFinding(format!(
        "no convergence after {MAX_ITER} iterations on [{lo}, {hi}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_roots() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        let r = brent(|x| x.cos() - x, 0.0, 1.0, 1e-14).unwrap();
        assert!((r.cos() - r).abs() < 1e-14);
        // flat near the root
        let r = brent(|x| (x - 1.0).powi(3), 0.0, 3.0, 1e-12).unwrap();
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn brent_rejects_missing_bracket() {
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 0.0),
            Err(Error::RootFinding(_))
        ));
    }

    #[test]
    fn newton_converges_and_stays_bracketed() {
        let r = newton_bracketed(|x| (x.exp() - 3.0, x.exp()), -5.0, 5.0, 0.0).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-15);
        // derivative vanishes at the left end: bisection fallback
        let r = newton_bracketed(|x| (x * x * x - 0.001, 3.0 * x * x), 0.0, 1.0, 0.0).unwrap();
        assert!((r - 0.1).abs() < 1e-15);
        // decreasing function
        let r = newton_bracketed(|x| (1.0 - x, -1.0), 0.0, 4.0, 0.0).unwrap();
        assert_eq!(r, 1.0);
    }
}
