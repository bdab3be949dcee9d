use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;


use super::{DerivativeMode, ForceLaw, ForceModel, Interval};
use crate::error::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

use crate::expr::Expr;
use crate::jet::Jet;
use crate::numeric::quad::{gauss30, GaussKronrod};

/// Cells per side of the cached potential table.
const CELLS: usize = 64;

/// Points per side of the finiteness probe grid.
const PROBES: usize = 200;

/// A force law parsed from text. Derivatives come from Taylor arithmetic over
/// the syntax tree; `V` is read from a cumulative quadrature table built once
/// at construction and completed by a 30-point Gauss rule on the last cell.
#[derive(Debug)]
pub struct ExpressionLaw {
    expr: Expr,
    /// `(node, V(node))` from 0 toward `lo`.
    neg: Vec<(f64, f64)>,
    /// `(node, V(node))` from 0 toward `hi`.
    pos: Vec<(f64, f64)>,
}

impl ExpressionLaw {
    pub fn new(expr: Expr, domain: Interval) -> Result<ExpressionLaw> {
        let quad = GaussKronrod::with_tolerance(1e-14, 1e-14);
        let mut sides = [vec![(0.0, 0.0)], vec![(0.0, 0.0)]];
        for (side, end) in sides.iter_mut().zip([domain.lo, domain.hi]) {
            // stop one cell short of the edge, which may be singular
            for k in 1..CELLS {
                let x = end * k as f64 / CELLS as f64;
                let (x_prev, v_prev) = *side.last().expect("seeded");
                let cell = quad.integrate(|s| expr.eval_f64(s), x_prev, x)?;
                side.push((x, v_prev + cell.value));
            }
        }
        let [neg, pos] = sides;
        Ok(ExpressionLaw { expr, neg, pos })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl ForceLaw for ExpressionLaw {
    fn force(&self, x: f64) -> f64 {
        self.expr.eval_f64(x)
    }

    fn force_jet(&self, x: Jet) -> Jet {
        self.expr.eval_jet(x)
    }

    fn potential(&self, x: f64) -> f64 {
        let table = if x < 0.0 { &self.neg } else { &self.pos };
        let step = table[1].0;
        let k = ((x / step).floor() as usize).min(table.len() - 1);
        let (node, v) = table[k];
        v + gauss30(|s| self.expr.eval_f64(s), node, x)
    }
}

/// Parse `source` and build a validated model on `domain`.
pub fn model_from_expression(source: &str, domain: Interval) -> Result<ForceModel> {
    let expr = Expr::parse(source)?;
    for i in 0..=2 * PROBES {
        let t = i as f64 / (2 * PROBES) as f64;
        let x = domain.lo + t * domain.width();
        let x = x.clamp(
            domain.lo + 1e-9 * domain.width(),
            domain.hi - 1e-9 * domain.width(),
        );
        if !expr.eval_f64(x).is_finite() {
            return Err(Error::NonFinite { what: "g", x });
        }
    }
    let g0 = expr.eval_f64(0.0);
    if !(g0.abs() <= 1e-12) {
        return Err(Error::Validation(format!("g(0) = {g0:e} must vanish")));
    }
    let law = ExpressionLaw::new(expr, domain)?;
    ForceModel::new(
        source.to_string(),
        domain,
        Arc::new(law),
        DerivativeMode::Automatic,
        Vec::new(),
    )
}
