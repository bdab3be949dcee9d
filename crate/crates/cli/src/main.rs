//! `isochron`: command-line front end for isochron-core.
//!
//! Exit status: 0 success, 1 input or parse error, 2 numerical failure.

mod commands;
mod emit;
mod error;
mod spec;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "isochron", version, about = "Isochronous centers, Hill monodromy and weak instability")]
pub struct Cli {
    /// Model spec: a JSON file path or an inline JSON object.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Directory for artifacts; without it the primary artifact goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance overrides `name=value,...` (reference, bracket, drift).
    #[arg(long, global = true, value_parser = parse_tol)]
    pub tol: Option<Tolerances>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// List the built-in models as reusable specs.
    Catalog,
    /// Check the model invariants and report the center bound.
    Validate,
    /// Decide isochrony from the involution residual and the derivative conditions.
    Isochrony {
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Period and its derivative over geometric amplitudes.
    PeriodScan(ScanArgs),
    /// Lyapunov stability versus weak instability of the equilibrium.
    Classify {
        #[arg(long, default_value_t = 8)]
        n: usize,
    },
    /// Monodromy data on the amplitude ladder, or at a single amplitude.
    Monodromy {
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long, default_value_t = 8)]
        n: usize,
    },
    /// Trajectory of the H-flow by the splitting scheme.
    Simulate(SimulateArgs),
    /// {H, K} and gradient independence at seeded random points.
    Bracket {
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Conservation audits and Hessians of an explicit third integral.
    Superint(SuperintArgs),
    /// Build an isochronous model; prints a model spec.
    #[command(subcommand)]
    Design(DesignCommand),
}

#[derive(Args, Debug, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub x_lo: Option<f64>,
    #[arg(long)]
    pub x_hi: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    /// Start at (x0, 1, 0, 0).
    #[arg(long, conflicts_with = "state")]
    pub x0: Option<f64>,
    /// Start at `q1,q2,p1,p2`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub state: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10.0)]
    pub periods: f64,
    /// Step; defaults to a thousandth of the planar period.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Record every `stride`-th step.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    /// Add the start point and its conjugate as `# annotation` lines.
    #[arg(long)]
    pub annotate: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct SuperintArgs {
    /// Family spec: a JSON file path or an inline JSON object.
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value_t = 10)]
    pub periods: usize,
    /// Number of seeded random start points.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignCommand {
    /// From an involution h given as an expression in x.
    FromH {
        #[arg(long)]
        h: String,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        domain: Vec<f64>,
    },
    /// From an even function f(t) with f(0) = 0.
    FromEven {
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long)]
        t_range: f64,
    },
    /// From a polynomial period function in the energy variable.
    FromPeriod {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coeffs: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 0.9)]
        y_range: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    /// Adaptive integrator tolerance for reference trajectories.
    pub reference: f64,
    /// Pass threshold for |{H, K}|.
    pub bracket: f64,
    /// Pass threshold for relative drift of the third integral.
    pub drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            reference: 1e-12,
            bracket: 1e-10,
            drift: 1e-6,
        }
    }
}

fn parse_tol(s: &str) -> Result<Tolerances, String> {
    let mut t = Tolerances::default();
    let mut seen = BTreeMap::new();
    for item in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format!("expected name=value, got \"{item}\""))?;
        let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("{k} = {v} must be positive"));
        }
        match k.trim() {
            "reference" => t.reference = v,
            "bracket" => t.bracket = v,
            "drift" => t.drift = v,
            other => return Err(format!("unknown tolerance \"{other}\" (known: reference, bracket, drift)")),
        }
        if seen.insert(k.trim().to_string(), v).is_some() {
            return Err(format!("tolerance {k} given twice"));
        }
    }
    Ok(t)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isochron: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
