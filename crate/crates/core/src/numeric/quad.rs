//! Gauss–Kronrod quadrature.
//!
//! The 30-point Gauss rule nested in the 61-point Kronrod extension is the
//! basic panel rule. [`GaussKronrod`] bisects the worst panel until the
//! summed |K61 − G30| estimate meets the requested tolerance.

use alloc::vec::Vec;


use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1], descending. Odd indices are the Gauss nodes.
const XGK: [f64; 31] = [
    0.9994844100504906375713,
    0.9968934840746495402716,
    0.9916309968704045948586,
    0.98366812327974720997,
    0.9731163225011262683747,
    0.9600218649683075122169,
    0.9443744447485599794158,
    0.9262000474292743258793,
    0.9055733076999077985465,
    0.8825605357920526815431,
    0.8572052335460610989587,
    0.8295657623827683974429,
    0.7997278358218390830137,
    0.767777432104826194918,
    0.7337900624532268047262,
    0.6978504947933157969323,
    0.6600610641266269613701,
    0.6205261829892428611405,
    0.579345235826361691756,
    0.5366241481420198992642,
    0.4924804678617785749937,
    0.4470337695380891767806,
    0.4004012548303943925355,
    0.352704725530878113471,
    0.3040732022736250773727,
    0.2546369261678898464398,
    0.204525116682309891439,
    0.1538699136085835469638,
    0.1028069379667370301471,
    0.05147184255531769583303,
    0.0,
];

const WGK: [f64; 31] = [
    0.001389013698677007624552,
    0.003890461127099884051267,
    0.00663070391593129217332,
    0.009273279659517763428441,
    0.01182301525349634174223,
    0.01436972950704580481245,
    0.01692088918905327262757,
    0.01941414119394238117341,
    0.02182803582160919229717,
    0.02419116207808060136569,
    0.0265099548823331016106,
    0.02875404876504129284398,
    0.03090725756238776247288,
    0.03298144705748372603181,
    0.0349793380280600241375,
    0.03688236465182122922391,
    0.03867894562472759295035,
    0.040374538951535959112,
    0.04196981021516424614715,
    0.04345253970135606931683,
    0.04481480013316266319236,
    0.04605923827100698811627,
    0.04718554656929915394526,
    0.04818586175708712914078,
    0.04905543455502977888753,
    0.04979568342707420635781,
    0.05040592140278234684089,
    0.0508817958987496064923,
    0.05122154784925877217066,
    0.05142612853745902593386,
    0.05149472942945156755834,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 15] = [
    0.007968192496166605615466,
    0.0184664683110909591423,
    0.02878470788332336934972,
    0.0387991925696270495968,
    0.04840267283059405290294,
    0.05749315621761906648172,
    0.06597422988218049512813,
    0.07375597473770520626824,
    0.08075589522942021535469,
    0.08689978720108297980239,
    0.09212252223778612871763,
    0.09636873717464425963947,
    0.09959342058679526706278,
    0.1017623897484055045964,
    0.1028526528935588403413,
];

/// Result of a quadrature with its absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// One 61-point Kronrod panel with its embedded 30-point Gauss estimate.
fn kronrod_panel<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = WGK[30] * fc;
    let mut gauss = 0.0;
    for j in 0..30 {
        let dx = half * XGK[j];
        let pair = f(center - dx)? + f(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let (k, g) = (kronrod * half, gauss * half);
    if !k.is_finite() {
        return Err(Error::Quadrature(alloc::format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok((k, (k - g).abs()))
}

/// Fixed 30-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss30<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    for j in 0..15 {
        let dx = half * XGK[2 * j + 1];
        s += WG[j] * (f(center - dx) + f(center + dx));
    }
    s * half
}

/// Adaptive Gauss–Kronrod integrator.
#[derive(Clone, Copy, Debug)]
pub struct GaussKronrod {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// The interval is pre-split into `2^initial_levels` panels.
    pub initial_levels: u32,
    pub max_panels: usize,
}

impl Default for GaussKronrod {
    fn default() -> Self {
        GaussKronrod {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            initial_levels: 2,
            max_panels: 256,
        }
    }
}

impl GaussKronrod {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        GaussKronrod {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<Quadrature> {
        self.try_integrate(|x| Ok(f(x)), a, b)
    }

    /// Integrate a fallible integrand; the first integrand error aborts.
    pub fn try_integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<Quadrature>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let n0 = 1usize << self.initial_levels;
        let width = (b - a) / n0 as f64;
        let mut panels: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(n0 * 2);
        for i in 0..n0 {
            let lo = a + width * i as f64;
            let hi = if i + 1 == n0 { b } else { lo + width };
            let (v, e) = kronrod_panel(&mut f, lo, hi)?;
            panels.push((lo, hi, v, e));
        }
        loop {
            let value: f64 = panels.iter().map(|p| p.2).sum();
            let error: f64 = panels.iter().map(|p| p.3).sum();
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= target {
                return Ok(Quadrature {
                    value,
                    error,
                    panels: panels.len(),
                });
            }
            if panels.len() >= self.max_panels {
                return Err(Error::Quadrature(alloc::format!(
                    "error estimate {error:e} above tolerance {target:e} after {} panels",
                    panels.len()
                )));
            }
            let worst = panels
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(core::cmp::Ordering::Equal))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let (lo, hi, _, _) = panels.swap_remove(worst);
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                return Err(Error::Quadrature("panel width underflow".into()));
            }
            let (v1, e1) = kronrod_panel(&mut f, lo, mid)?;
            let (v2, e2) = kronrod_panel(&mut f, mid, hi)?;
            panels.push((lo, mid, v1, e1));
            panels.push((mid, hi, v2, e2));
        }
    }
}
