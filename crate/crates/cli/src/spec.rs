//! JSON specs for models, designs and superintegrable families.

use std::collections::BTreeMap;
use std::sync::Arc;

use isochron_core::expr::Expr;
use isochron_core::isochrony::design::{design, DesignSpec};
use isochron_core::model::catalog::{
    cubic, generic_superintegrable, harmonic, pendulum, quartic_isochrone, sqrt_isochrone,
};
use isochron_core::model::{model_from_expression, ForceModel, Interval, SmoothFn};
use isochron_core::superint::Family;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `{"family": ..., "params": {...}, "domain": [lo, hi]}`.
///
/// `expression` models carry their source in `expression`; designed models
/// carry the recipe in `design` and are rebuilt from it on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignJson>,
    /// Provenance stamped by the tool; ignored on load.
    #[serde(default, skip_serializing)]
    pub config: Option<serde_json::Value>,
    /// Self-checks reported by `design`; ignored on load.
    #[serde(default, skip_serializing)]
    pub checks: Option<serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignJson {
    FromInvolution { omega: f64, h: String, domain: [f64; 2] },
    FromEven { omega: f64, f: String, t_range: f64 },
    FromPeriodPolynomial { omega: f64, coeffs: Vec<f64>, y_range: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyJson {
    Sqrt { omega: f64, lambda: f64 },
    Quartic { omega: f64, lambda: f64 },
    Generic { omega: f64, b1: f64, c1: f64 },
}

impl From<FamilyJson> for Family {
    fn from(f: FamilyJson) -> Family {
        match f {
            FamilyJson::Sqrt { omega, lambda } => Family::Sqrt { omega, lambda },
            FamilyJson::Quartic { omega, lambda } => Family::Quartic { omega, lambda },
            FamilyJson::Generic { omega, b1, c1 } => Family::Generic { omega, b1, c1 },
        }
    }
}

/// Inline JSON if the argument starts with `{`, otherwise a file path.
pub fn read_json<T: for<'de> Deserialize<'de>>(arg: &str, what: &str) -> Result<T, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::Input(format!("cannot read {what} {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!("{what} JSON at line {}, column {}: {e}", e.line(), e.column()))
    })
}

fn interval(d: [f64; 2]) -> Result<Interval, CliError> {
    Interval::new(d[0], d[1]).map_err(CliError::input)
}

fn parse_expr(source: &str) -> Result<Arc<dyn SmoothFn>, CliError> {
    Ok(Arc::new(Expr::parse(source).map_err(CliError::input)?))
}

impl DesignJson {
    pub fn to_core(&self) -> Result<DesignSpec, CliError> {
        Ok(match self {
            DesignJson::FromInvolution { omega, h, domain } => DesignSpec::FromInvolution {
                omega: *omega,
                h: parse_expr(h)?,
                domain: interval(*domain)?,
            },
            DesignJson::FromEven { omega, f, t_range } => DesignSpec::FromEven {
                omega: *omega,
                f: parse_expr(f)?,
                t_range: *t_range,
            },
            DesignJson::FromPeriodPolynomial {
                omega,
                coeffs,
                y_range,
            } => DesignSpec::FromPeriodPolynomial {
                omega: *omega,
                coeffs: coeffs.clone(),
                y_range: *y_range,
            },
        })
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<ForceModel, CliError> {
        let domain = self.domain.map(interval).transpose()?;
        let known: &[&str] = match self.family.as_str() {
            "harmonic" => &["omega"],
            "pendulum" | "expression" | "designed" => &[],
            "cubic" => &["alpha", "beta", "gamma"],
            "sqrt_iso" | "quartic_iso" => &["omega", "lambda"],
            "generic_super" => &["omega", "b1", "c1"],
            other => return Err(CliError::Input(format!("unknown model family \"{other}\""))),
        };
        if let Some(k) = self.params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(CliError::Input(format!("family {} has no parameter \"{k}\"", self.family)));
        }
        let p = |name: &str, default: f64| self.params.get(name).copied().unwrap_or(default);
        let model = match self.family.as_str() {
            "harmonic" => harmonic(p("omega", 1.0), domain),
            "pendulum" => pendulum(domain),
            "cubic" => cubic(p("alpha", 1.0), p("beta", 0.3), p("gamma", 0.2), domain),
            "sqrt_iso" => sqrt_isochrone(p("omega", 1.0), p("lambda", 2.0), domain),
            "quartic_iso" => quartic_isochrone(p("omega", 1.0), p("lambda", 1.0), domain),
            "generic_super" => generic_superintegrable(p("omega", 1.0), p("b1", 1.0), p("c1", 1.0), domain),
            "expression" => {
                let src = self
                    .expression
                    .as_deref()
                    .ok_or_else(|| CliError::Input("expression model needs an \"expression\" field".into()))?;
                let d = domain.ok_or_else(|| CliError::Input("expression model needs a \"domain\"".into()))?;
                model_from_expression(src, d)
            }
            _ => {
                let d = self
                    .design
                    .as_ref()
                    .ok_or_else(|| CliError::Input("designed model needs a \"design\" field".into()))?;
                let m = design(&d.to_core()?).map_err(|e| CliError::from_core("design", e))?;
                match domain {
                    Some(j) => m.with_domain(j),
                    None => Ok(m),
                }
            }
        };
        model.map_err(|e| CliError::from_core("model construction", e))
    }

    /// Spec describing a catalog model as built.
    pub fn of_catalog(m: &ForceModel) -> ModelSpec {
        let d = m.domain();
        ModelSpec {
            family: m.name().to_string(),
            params: m.params().iter().cloned().collect(),
            domain: Some([d.lo, d.hi]),
            expression: None,
            design: None,
            config: None,
            checks: None,
        }
    }

    pub fn designed(d: DesignJson) -> ModelSpec {
        ModelSpec {
            family: "designed".into(),
            params: BTreeMap::new(),
            domain: None,
            expression: None,
            design: Some(d),
            config: None,
            checks: None,
        }
    }
}
