use isochron_core::dynamics::{
    bracket_hk, evaluate_integrals, independence_min_sv, integrate_h_strided, level_set_diagnostics,
    sample_points, PhasePoint4, SamplingBox,
};
use isochron_core::hill::{classify_equilibrium, monodromy, Bundle, MonodromyResult};
use isochron_core::isochrony::design::target_period;
use isochron_core::isochrony::{involution, isochrony_report, necessary_conditions, u_inverse};
use isochron_core::model::catalog::builtin_catalog;
use isochron_core::model::ForceModel;
use isochron_core::period::{limit_period, period, period_scan};
use isochron_core::superint::{
    conservation_audit, family_force, pde_residuals, third_integral, AuditMethod, Family,
};
use serde_json::{json, Value};

use crate::emit::{real, Sink, Table};
use crate::error::CliError;
use crate::spec::{read_json, DesignJson, FamilyJson, ModelSpec};
use crate::{Cli, Command, DesignCommand, ScanArgs, SimulateArgs, SuperintArgs, Tolerances};

/// Reference-flow samples per period in third-integral audits.
const AUDIT_SAMPLES: usize = 100;

struct Ctx {
    sink: Sink,
    seed: u64,
    tol: Tolerances,
    spec: Option<ModelSpec>,
}

impl Ctx {
    fn model(&self) -> Result<ForceModel, CliError> {
        self.spec
            .as_ref()
            .ok_or_else(|| CliError::Input("this command needs --model".into()))?
            .build()
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let spec: Option<ModelSpec> = cli.model.as_deref().map(|m| read_json(m, "model")).transpose()?;
    let tol = cli.tol.unwrap_or_default();
    let config = json!({
        "command": cli.command,
        "model": spec,
        "seed": cli.seed,
        "tol": tol,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let ctx = Ctx {
        sink: Sink {
            out_dir: cli.out,
            config,
        },
        seed: cli.seed,
        tol,
        spec,
    };
    match &cli.command {
        Command::Catalog => catalog(&ctx),
        Command::Validate => validate(&ctx),
        Command::Isochrony { n } => isochrony(&ctx, *n),
        Command::PeriodScan(a) => scan(&ctx, a),
        Command::Classify { n } => classify(&ctx, *n),
        Command::Monodromy { x0, n } => monodromy_cmd(&ctx, *x0, *n),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Bracket { n } => bracket(&ctx, *n),
        Command::Superint(a) => superint(&ctx, a),
        Command::Design(d) => design_cmd(&ctx, d),
    }
}

fn core<T>(op: &str, r: isochron_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from_core(op.to_string(), e))
}

fn catalog(ctx: &Ctx) -> Result<(), CliError> {
    let mut models = Vec::new();
    for m in builtin_catalog() {
        let b = core("center_bound", m.center_bound())?;
        models.push(json!({
            "spec": ModelSpec::of_catalog(&m),
            "stiffness": m.stiffness(),
            "e_max": b.e_max,
        }));
    }
    ctx.sink.json("catalog.json", json!({ "models": models }), true)
}

fn validate(ctx: &Ctx) -> Result<(), CliError> {
    let m = ctx.model()?;
    core("validate", m.validate())?;
    let b = core("center_bound", m.center_bound())?;
    let (nc4, nc6) = necessary_conditions(&m);
    let d = m.domain();
    ctx.sink.json(
        "validate.json",
        json!({
            "name": m.name(),
            "valid": true,
            "domain": [d.lo, d.hi],
            "derivative_mode": format!("{:?}", m.derivative_mode()),
            "stiffness": m.stiffness(),
            "e_max": b.e_max,
            "x_max_neg": b.x_max_neg,
            "x_max_pos": b.x_max_pos,
            "nc4_residual": nc4,
            "nc6_residual": nc6,
        }),
        true,
    )
}

fn isochrony(ctx: &Ctx, n: usize) -> Result<(), CliError> {
    let m = ctx.model()?;
    let r = core("isochrony report", isochrony_report(&m, n))?;
    let b = core("center_bound", m.center_bound())?;
    let mut probes = Table::new(vec!["x", "h_x", "residual_V"]);
    for i in 0..n {
        // symmetric grid that skips 0
        let s = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
        let x = if s < 0.0 { -s * 0.98 * b.x_max_neg } else { s * 0.98 * b.x_max_pos };
        match involution(&m, x) {
            Ok(p) => probes.push_reals(&[p.x, p.h_x, p.residual_v]),
            Err(e) if !e.is_numerical() => continue,
            Err(e) => return Err(CliError::from_core("involution", e)),
        }
    }
    ctx.sink.json(
        "isochrony.json",
        json!({
            "model": m.name(),
            "verdict": format!("{:?}", r.verdict),
            "residual_sup": r.residual_sup,
            "residual_tol": r.residual_tol,
            "nc4_residual": r.nc4_residual,
            "nc6_residual": r.nc6_residual,
            "nc_tol": r.nc_tol,
            "grid_n": r.grid_n,
        }),
        true,
    )?;
    ctx.sink.csv("involution.csv", &probes, false)
}

fn scan(ctx: &Ctx, a: &ScanArgs) -> Result<(), CliError> {
    let m = ctx.model()?;
    let b = core("center_bound", m.center_bound())?;
    let lo = a.x_lo.unwrap_or(0.01 * b.x_max_pos);
    let hi = a.x_hi.unwrap_or(0.9 * b.x_max_pos);
    let s = core("period scan", period_scan(&m, lo, hi, a.n))?;
    let mut t = Table::new(vec!["x0", "y0", "T", "T_prime", "err_estimate"]);
    for p in &s.samples {
        t.push_reals(&[p.x0, p.y0, p.t, p.t_prime.unwrap_or(f64::NAN), p.error]);
    }
    ctx.sink.json(
        "period_scan.json",
        json!({
            "model": s.model,
            "n": s.samples.len(),
            "T_min": s.t_min(),
            "T_max": s.t_max(),
            "spread_rel": s.spread_rel(),
            "critical_amplitudes": s.critical_amplitudes,
        }),
        true,
    )?;
    ctx.sink.csv("period_scan.csv", &t, false)
}

fn bundle(b: Bundle) -> &'static str {
    match b {
        Bundle::PeriodicBundle => "PeriodicBundle",
        Bundle::UnboundedBundle => "UnboundedBundle",
    }
}

fn ladder_table(rungs: &[MonodromyResult]) -> Table {
    let mut t = Table::new(vec!["x0", "tau", "phidot_tau", "verdict"]);
    for r in rungs {
        t.rows.push(vec![real(r.x0), real(r.tau), real(r.phidot_tau), bundle(r.verdict).into()]);
    }
    t
}

fn classify(ctx: &Ctx, n: usize) -> Result<(), CliError> {
    let m = ctx.model()?;
    let v = core("classification (Wronskian tolerance 1e-8)", classify_equilibrium(&m, n))?;
    ctx.sink.json(
        "classify.json",
        json!({
            "model": m.name(),
            "classification": format!("{:?}", v.classification),
            "witnesses": v.witness_amplitudes,
            "eigen_imag": v.eigen_imag,
            "multiplicity": v.multiplicity,
            "isochrony": format!("{:?}", v.isochrony),
            "diagnostic": v.diagnostic,
        }),
        true,
    )?;
    ctx.sink.csv("monodromy.csv", &ladder_table(&v.ladder), false)
}

fn monodromy_cmd(ctx: &Ctx, x0: Option<f64>, n: usize) -> Result<(), CliError> {
    let m = ctx.model()?;
    let rungs = match x0 {
        Some(x) => vec![core("monodromy (Wronskian tolerance 1e-8)", monodromy(&m, x))?],
        None => core("classification (Wronskian tolerance 1e-8)", classify_equilibrium(&m, n))?.ladder,
    };
    ctx.sink.csv("monodromy.csv", &ladder_table(&rungs), true)
}

/// Planar period of the orbit through `pt`'s `(q1, p2)`.
fn planar_period(m: &ForceModel, pt: PhasePoint4) -> Result<(f64, f64), CliError> {
    let (_, k) = core("integrals", evaluate_integrals(m, pt))?;
    if k == 0.0 {
        return Ok((0.0, limit_period(m)));
    }
    let x0 = core("amplitude inversion", u_inverse(m, (2.0 * k).sqrt()))?;
    Ok((x0, core("period", period(m, x0))?.t))
}

fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<(), CliError> {
    let m = ctx.model()?;
    let pt = match (&a.state, a.x0) {
        (Some(s), _) if s.len() == 4 => PhasePoint4::new(s[0], s[1], s[2], s[3]),
        (Some(s), _) => return Err(CliError::Input(format!("--state needs 4 values, got {}", s.len()))),
        (None, x0) => {
            let b = core("center_bound", m.center_bound())?;
            PhasePoint4::new(x0.unwrap_or(0.5 * b.x_max_pos), 1.0, 0.0, 0.0)
        }
    };
    if !(a.periods > 0.0 && a.periods.is_finite()) {
        return Err(CliError::Input(format!("--periods {} must be positive", a.periods)));
    }
    let (amp, tau) = planar_period(&m, pt)?;
    let dt = a.dt.unwrap_or(tau / 1000.0);
    let rec = core(
        &format!("splitting integration (dt = {dt})"),
        integrate_h_strided(&m, pt, a.periods * tau, dt, a.stride),
    )?;
    let mut t = Table::new(vec!["t", "q1", "q2", "p1", "p2", "H", "K"]);
    for (time, s) in rec.times.iter().zip(&rec.states) {
        let (h, k) = core("integrals", evaluate_integrals(&m, *s))?;
        t.push_reals(&[*time, s.q1, s.q2, s.p1, s.p2, h, k]);
    }
    if a.annotate {
        let x0 = pt.q1;
        let p = core("involution", involution(&m, x0))?;
        t.notes.push(format!("annotation initial q1={} q2={}", real(x0), real(pt.q2)));
        t.notes.push(format!(
            "annotation conjugate q1={} q2={}",
            real(p.h_x),
            real(m.g(x0) / m.g(p.h_x))
        ));
    }
    let diagnostics = level_set_diagnostics(&m, pt).ok().map(|d| {
        json!({
            "H": d.h_value,
            "K": d.k_value,
            "x0": d.x0,
            "omega": d.omega,
            "drift_indicator": d.drift_indicator,
            "min_singular_value": d.independence_min_sv,
            "seed": ctx.seed,
        })
    });
    ctx.sink.csv("trajectory.csv", &t, true)?;
    ctx.sink.json(
        "simulate.json",
        json!({
            "model": m.name(),
            "start": pt.to_array(),
            "amplitude": amp,
            "tau": tau,
            "dt": dt,
            "h_drift": rec.h_drift,
            "k_drift": rec.k_drift,
            "h_end_error": rec.h_end_error,
            "k_end_error": rec.k_end_error,
            "integrator": rec.integrator,
            "diagnostics": diagnostics,
        }),
        false,
    )
}

fn bracket(ctx: &Ctx, n: usize) -> Result<(), CliError> {
    let m = ctx.model()?;
    let pts = core("sampling", sample_points(&m, n, ctx.seed, SamplingBox::default()))?;
    let mut t = Table::new(vec!["q1", "q2", "p1", "p2", "bracket", "min_singular_value"]);
    let (mut worst, mut min_sv) = (0.0f64, f64::INFINITY);
    for p in &pts {
        let b = core("bracket", bracket_hk(&m, *p))?;
        let sv = core("independence", independence_min_sv(&m, *p))?;
        worst = worst.max(b.abs());
        min_sv = min_sv.min(sv);
        t.push_reals(&[p.q1, p.q2, p.p1, p.p2, b, sv]);
    }
    ctx.sink.json(
        "bracket.json",
        json!({
            "model": m.name(),
            "n": pts.len(),
            "seed": ctx.seed,
            "max_abs_bracket": worst,
            "min_singular_value": min_sv,
            "pass": worst <= ctx.tol.bracket && min_sv > 0.0,
        }),
        true,
    )?;
    ctx.sink.csv("bracket.csv", &t, false)
}

fn superint(ctx: &Ctx, a: &SuperintArgs) -> Result<(), CliError> {
    let fam: Family = read_json::<FamilyJson>(&a.family, "family")?.into();
    let m = core("family model", family_force(fam))?;
    let w = core("third integral", third_integral(fam))?;
    let bx = SamplingBox {
        q2_p1_radius: 1.0,
        center_fraction: 0.6,
    };
    let pts = core("sampling", sample_points(&m, a.n, ctx.seed, bx))?;
    let method = AuditMethod::Reference {
        tol: ctx.tol.reference,
        samples: AUDIT_SAMPLES,
    };
    let mut audits = Vec::new();
    let mut all_pass = true;
    for (i, p) in pts.iter().enumerate() {
        let op = format!("conservation audit (tolerance {})", ctx.tol.reference);
        let au = core(&op, conservation_audit(&m, &w, *p, a.periods, method))?;
        let rel = au.max_drift / au.w0.abs().max(1.0);
        all_pass &= rel <= ctx.tol.drift;
        audits.push(json!({
            "start": p.to_array(),
            "W0": au.w0,
            "max_drift": au.max_drift,
            "relative_drift": rel,
        }));
        let mut t = Table::new(vec!["t", "W", "drift"]);
        for (time, v, d) in &au.samples {
            t.push_reals(&[*time, *v, *d]);
        }
        ctx.sink.csv(&format!("audit_{i}.csv"), &t, false)?;
    }
    let hess = core("Hessian at the origin", w.hessian_at_origin())?;
    let expect = w.expected_hessian_diagonal();
    let mut hess_err = 0.0f64;
    for (i, row) in hess.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let e = if i == j { expect[i] } else { 0.0 };
            hess_err = hess_err.max((v - e).abs());
        }
    }
    let b = core("center_bound", m.center_bound())?;
    let mut compat = 0.0f64;
    for k in 0..9 {
        let q1 = 0.5 * (b.x_max_neg + (b.x_max_pos - b.x_max_neg) * (k as f64 + 0.5) / 9.0);
        let r = core("PDE residuals", pde_residuals(&m, &fam.ansatz(), q1, 0.7))?;
        compat = compat.max(r.potential_compat.abs());
    }
    ctx.sink.json(
        "superint.json",
        json!({
            "family": fam.name(),
            "model": m.name(),
            "periods": a.periods,
            "seed": ctx.seed,
            "audits": audits,
            "audits_pass": all_pass,
            "hessian_diagonal": [hess[0][0], hess[1][1], hess[2][2], hess[3][3]],
            "expected_diagonal": expect,
            "hessian_max_error": hess_err,
            "compatibility_residual": compat,
        }),
        true,
    )
}

fn design_cmd(ctx: &Ctx, d: &DesignCommand) -> Result<(), CliError> {
    let recipe = match d {
        DesignCommand::FromH { domain, .. } if domain.len() != 2 => {
            return Err(CliError::Input(format!("--domain needs lo,hi, got {} values", domain.len())))
        }
        DesignCommand::FromH { h, omega, domain } => DesignJson::FromInvolution {
            omega: *omega,
            h: h.clone(),
            domain: [domain[0], domain[1]],
        },
        DesignCommand::FromEven { f, omega, t_range } => DesignJson::FromEven {
            omega: *omega,
            f: f.clone(),
            t_range: *t_range,
        },
        DesignCommand::FromPeriod {
            coeffs,
            omega,
            y_range,
        } => DesignJson::FromPeriodPolynomial {
            omega: *omega,
            coeffs: coeffs.clone(),
            y_range: *y_range,
        },
    };
    let spec = ModelSpec::designed(recipe.clone());
    let m = spec.build()?;
    core("validate", m.validate())?;
    let checks = match &recipe {
        DesignJson::FromPeriodPolynomial { omega, coeffs, y_range } => {
            // realized period at a few energies against the target
            let mut worst = 0.0f64;
            for f in [0.25, 0.5, 0.75] {
                let y = f * y_range;
                let x = core("amplitude inversion", u_inverse(&m, y))?;
                let got = core("period", period(&m, x))?.t;
                worst = worst.max((got / target_period(coeffs, *omega, y) - 1.0).abs());
            }
            json!({ "period_rel_error": worst })
        }
        _ => {
            let r = core("isochrony report", isochrony_report(&m, 64))?;
            let probe = 0.5 * core("center_bound", m.center_bound())?.x_max_pos;
            let ratio = core("period", period(&m, probe))?.t / limit_period(&m);
            json!({ "isochrony": format!("{:?}", r.verdict), "period_ratio_at_half_amplitude": ratio })
        }
    };
    let mut body = serde_json::to_value(&spec).expect("specs serialize");
    if let Value::Object(map) = &mut body {
        map.insert("checks".into(), checks);
    }
    ctx.sink.json("model.json", body, true)
}
