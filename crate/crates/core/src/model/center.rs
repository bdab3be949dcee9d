#[allow(unused_imports)]
use num_traits::Float;

use super::ForceModel;
use crate::error::{Error, Result};
use crate::numeric::roots::brent;

/// Relative approach steps `1 − 10^-k` toward each endpoint.
const APPROACH_STEPS: i32 = 15;

/// Energy bound of the center region and the matching amplitude limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenterBound {
    pub e_max: f64,
    pub x_max_pos: f64,
    pub x_max_neg: f64,
}

/// `(sup V, x where it is attained)` approaching `end` from 0.
fn approach(model: &ForceModel, end: f64) -> Result<(f64, f64)> {
    let mut best = (0.0, 0.0);
    for k in 1..=APPROACH_STEPS {
        let x = end * (1.0 - 10f64.powi(-k));
        let v = model.potential(x);
        if !v.is_finite() {
            break;
        }
        if v < best.0 {
            return Err(Error::Validation(alloc::format!(
                "V decreases toward the domain edge near x = {x}"
            )));
        }
        best = (v, x);
    }
    if best.0 <= 0.0 {
        return Err(Error::Validation("V does not grow away from 0".into()));
    }
    Ok(best)
}

impl CenterBound {
    pub fn compute(model: &ForceModel) -> Result<CenterBound> {
        let d = model.domain();
        let (v_neg, x_neg) = approach(model, d.lo)?;
        let (v_pos, x_pos) = approach(model, d.hi)?;
        let e_max = v_neg.min(v_pos);
        let solve = |end: f64| {
            brent(|x| model.potential(x) - e_max, 0.0, end, 1e-15 * end.abs().max(1.0))
        };
        let (x_max_neg, x_max_pos) = if v_neg <= v_pos {
            (x_neg, if v_pos == e_max { x_pos } else { solve(x_pos)? })
        } else {
            (solve(x_neg)?, x_pos)
        };
        Ok(CenterBound {
            e_max,
            x_max_pos,
            x_max_neg,
        })
    }

    /// `0 < V(x0) < e_max`.
    pub fn admits(&self, model: &ForceModel, x0: f64) -> bool {
        let v = model.potential(x0);
        x0 != 0.0 && v > 0.0 && v < self.e_max && x0 > self.x_max_neg && x0 < self.x_max_pos
    }

    /// Width of the symmetric-energy amplitude range.
    pub fn diameter(&self) -> f64 {
        self.x_max_pos - self.x_max_neg
    }
}
