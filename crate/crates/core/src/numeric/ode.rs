//! Explicit adaptive Dormand–Prince 5(4) integration for small fixed-size
//! systems.
//!
//! Steps are clamped so that every requested stop time is hit exactly; the
//! observer sees the state at each accepted step (and at each stop).

use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// What the observer wants after seeing a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for DormandPrince {
    fn default() -> Self {
        DormandPrince {
            rtol: 1e-11,
            atol: 1e-11,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        *o += h * s;
    }
    out
}

impl DormandPrince {
    pub fn with_tolerance(rtol: f64, atol: f64) -> Self {
        DormandPrince {
            rtol,
            atol,
            ..Self::default()
        }
    }

    /// Integrate `y' = f(t, y)` from `t0` to `t_end > t0`.
    ///
    /// `stops` must be sorted ascending inside `(t0, t_end]`; the observer is
    /// called with `is_stop = true` exactly at each of them.
    pub fn integrate<const N: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        stops: &[f64],
        mut observer: O,
    ) -> Result<([f64; N], OdeStats)>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(f64, &[f64; N], bool) -> Control,
    {
        let mut stats = OdeStats {
            accepted: 0,
            rejected: 0,
        };
        if t_end <= t0 {
            return Ok((y0, stats));
        }
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = self.initial_step(&mut f, t, &y, &k1).min(self.h_max);
        let mut stop_idx = 0;
        while stop_idx < stops.len() && stops[stop_idx] <= t0 {
            stop_idx += 1;
        }
        let mut fac_old: f64 = 1e-4;
        while t < t_end {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: format!("step budget {} exhausted", self.max_steps),
                });
            }
            let target = if stop_idx < stops.len() {
                stops[stop_idx].min(t_end)
            } else {
                t_end
            };
            let h_free = h;
            let mut hit = false;
            if t + h >= target || (target - t - h) < 1e-12 * (target - t0) {
                h = target - t;
                hit = true;
            }
            let k2 = f(t + C2 * h, &axpy(&y, &[(A21, &k1)], h));
            let k3 = f(t + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
            let k4 = f(
                t + C4 * h,
                &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h),
            );
            let k5 = f(
                t + C5 * h,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
            );
            let k6 = f(
                t + h,
                &axpy(
                    &y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    h,
                ),
            );
            let y_new = axpy(
                &y,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
                h,
            );
            let k7 = f(t + h, &y_new);
            let mut err = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                h *= 0.2;
                stats.rejected += 1;
                if h < 1e-14 * (t_end - t0).max(1.0) {
                    return Err(Error::Integration {
                        t,
                        reason: "non-finite state".into(),
                    });
                }
                continue;
            }
            if err <= 1.0 {
                // PI step-size control (Hairer–Wanner)
                let fac = (err.max(1e-10).powf(0.17) / fac_old.powf(0.04)).recip() * 0.9;
                fac_old = err.max(1e-4);
                t = if hit { target } else { t + h };
                y = y_new;
                k1 = k7;
                stats.accepted += 1;
                let at_stop = hit && stop_idx < stops.len() && target == stops[stop_idx].min(t_end);
                if at_stop {
                    stop_idx += 1;
                }
                if observer(t, &y, at_stop) == Control::Stop {
                    return Ok((y, stats));
                }
                h = (h * fac.clamp(0.2, 10.0)).min(self.h_max);
                if hit {
                    h = h.max(h_free);
                }
            } else {
                stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).max(0.2);
                if h < 1e-14 * (t_end - t0).max(1.0) {
                    return Err(Error::Integration {
                        t,
                        reason: "step size underflow".into(),
                    });
                }
            }
        }
        Ok((y, stats))
    }

    fn initial_step<const N: usize, F>(&self, f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N]) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y[i].abs();
            d0 += (y[i] / sc).powi(2);
            d1 += (k1[i] / sc).powi(2);
        }
        let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1 = axpy(y, &[(1.0, k1)], h0);
        let k2 = f(t + h0, &y1);
        let mut d2 = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y[i].abs();
            d2 += ((k2[i] - k1[i]) / sc).powi(2);
        }
        let d2 = (d2 / N as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }
}
