//! Subcommand implementations. Each returns a process exit code.

use lovelock_mass::graphcase::{
    egb_graph_penrose, penrose_report, BoundaryFunctionals, Ellipsoid, GraphFunction, Hypersurface, RadialGraph,
};
use lovelock_mass::mass::{flux_series, mass, Integrand, MassConfig, MassEstimate, RadiusSchedule};
use lovelock_mass::metrics::{
    egb_blackhole, euclidean, graph_metric, schwarzschild_family, Chart, SharedMetric,
};
use lovelock_mass::quadrature::{sphere_rule, RadialRule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::config::{parse_radii, HorizonSpec, RunConfig};
use crate::suites::{run_suite, SuiteReport, SUITES};
use crate::{exit, Cli, CliError, Command, Common};

/// Largest dimension the product quadrature is run in.
pub const MAX_DIM: usize = 8;

/// Slack below `−PENROSE_TOL` counts as a violated bound.
pub const PENROSE_TOL: f64 = 1e-6;

/// A double with 17 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::from_str(&format!("{x:.16e}")).expect("formatted double is valid JSON")
    } else {
        Value::Null
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Runs one parsed command line, writing reports to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Mass(c) => merged(&c).and_then(|cfg| cmd_mass(&cfg, stdout)),
        Command::Flux(c) => merged(&c).and_then(|cfg| cmd_flux(&cfg, stdout)),
        Command::Verify { suite, common } => merged(&common).and_then(|mut cfg| {
            if suite.is_some() {
                cfg.suite = suite;
            }
            cmd_verify(&cfg, stdout)
        }),
        Command::Penrose { horizon, common } => merged(&common).and_then(|mut cfg| {
            if let Some(path) = horizon {
                cfg.horizon = Some(load_horizon(&path)?);
            }
            cmd_penrose(&cfg, stdout)
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit::ERROR
        }
    }
}

fn load_horizon(path: &Path) -> Result<HorizonSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("--horizon {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("--horizon {}: {e}", path.display())))
}

/// The config file, if any, with flags written over it.
pub fn merged(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let p = &mut cfg.metric.params;
    if c.metric.is_some() {
        cfg.metric.family = c.metric.clone();
    }
    if c.n.is_some() {
        p.n = c.n;
    }
    if c.m.is_some() {
        p.m = c.m;
    }
    if c.alpha.is_some() {
        p.alpha = c.alpha;
    }
    if c.chart.is_some() {
        p.chart = c.chart.clone();
    }
    if c.k.is_some() {
        cfg.mass.k = c.k;
    }
    if c.as_.is_some() {
        cfg.mass.as_ = c.as_.clone();
    }
    if let Some(r) = &c.radii {
        cfg.mass.radii = Some(parse_radii(r)?);
        cfg.mass.r0 = None;
        cfg.mass.ratio = None;
        cfg.mass.count = None;
    }
    if c.r0.is_some() || c.ratio.is_some() || c.count.is_some() {
        cfg.mass.radii = None;
        cfg.mass.r0 = c.r0.or(cfg.mass.r0);
        cfg.mass.ratio = c.ratio.or(cfg.mass.ratio);
        cfg.mass.count = c.count.or(cfg.mass.count);
    }
    if c.quad_level.is_some() {
        cfg.quad_level = c.quad_level;
    }
    if c.seed.is_some() {
        cfg.seed = c.seed;
    }
    if c.out.is_some() {
        cfg.output.json_path = c.out.clone();
    }
    if c.csv.is_some() {
        cfg.output.csv_path = c.csv.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// A metric built from the config, with its graph function when it has one.
pub struct Subject {
    pub metric: SharedMetric,
    pub graph: Option<Arc<dyn GraphFunction>>,
    pub family: String,
}

fn required_n(cfg: &RunConfig) -> Result<usize, CliError> {
    let n = cfg
        .metric
        .params
        .n
        .ok_or_else(|| CliError::Config("metric.params.n: dimension is required (--n)".into()))?;
    if n > MAX_DIM {
        return Err(CliError::Config(format!("--n: dimension {n} exceeds {MAX_DIM}")));
    }
    if n < 3 {
        return Err(CliError::Config(format!("--n: dimension must be at least 3, got {n}")));
    }
    Ok(n)
}

/// Order `k` of the mass; also the default `k` of the Schwarzschild family.
fn mass_order(cfg: &RunConfig) -> usize {
    cfg.mass.k.or(cfg.metric.params.k).unwrap_or(2)
}

pub fn build_subject(cfg: &RunConfig) -> Result<Subject, CliError> {
    let family = cfg
        .metric
        .family
        .clone()
        .ok_or_else(|| CliError::Config("metric.family: required (--metric)".into()))?;
    let p = &cfg.metric.params;
    let n = required_n(cfg)?;
    let m = p.m.unwrap_or(1.0);
    let graph = |f: Arc<dyn GraphFunction>| Subject {
        metric: Arc::new(graph_metric(f.clone())),
        graph: Some(f),
        family: family.clone(),
    };
    let plain = |metric: SharedMetric| Subject { metric, graph: None, family: family.clone() };
    Ok(match family.as_str() {
        "euclidean" => plain(Arc::new(euclidean(n))),
        "schwarzschild" => {
            let k = p.k.unwrap_or_else(|| mass_order(cfg));
            let chart = match p.chart.as_deref().unwrap_or("conformal") {
                "conformal" => Chart::Conformal,
                "rho" => Chart::Rho,
                other => {
                    return Err(CliError::Config(format!("metric.params.chart: expected rho or conformal, got {other:?}")))
                }
            };
            plain(Arc::new(schwarzschild_family(k, n, m, chart)?))
        }
        "egb" => plain(Arc::new(egb_blackhole(n, alpha(cfg)?, m)?)),
        "schwarzschild-graph" => graph(Arc::new(RadialGraph::schwarzschild(n, m)?)),
        "egb-graph" => graph(Arc::new(RadialGraph::egb(n, alpha(cfg)?, m)?)),
        "random-graph" => {
            let seed = p.seed.or(cfg.seed).unwrap_or(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            graph(Arc::new(crate::suites::random_graph(n, &mut rng)))
        }
        other => {
            return Err(CliError::Config(format!(
                "metric.family: unknown family {other:?}; expected euclidean, schwarzschild, egb, \
                 schwarzschild-graph, egb-graph or random-graph"
            )))
        }
    })
}

fn alpha(cfg: &RunConfig) -> Result<f64, CliError> {
    cfg.metric
        .params
        .alpha
        .ok_or_else(|| CliError::Config("metric.params.alpha: required for this family (--alpha)".into()))
}

pub fn integrand(cfg: &RunConfig) -> Result<Integrand, CliError> {
    let k = mass_order(cfg);
    Ok(match cfg.mass.as_.as_deref() {
        None => match k {
            1 => Integrand::Adm,
            2 => Integrand::Gbc,
            k => Integrand::Lovelock(k),
        },
        Some("gbc") => Integrand::Gbc,
        Some("adm") => Integrand::Adm,
        Some("mk") => Integrand::Lovelock(k),
        Some("egb") => Integrand::Egb(alpha(cfg)?),
        Some(other) => {
            return Err(CliError::Config(format!("--as: expected gbc, adm, mk or egb, got {other:?}")))
        }
    })
}

fn schedule(cfg: &RunConfig, default: RadiusSchedule) -> RadiusSchedule {
    let s = &cfg.mass;
    if let Some(r) = &s.radii {
        RadiusSchedule::Explicit(r.clone())
    } else if s.r0.is_some() || s.ratio.is_some() || s.count.is_some() {
        RadiusSchedule::Geometric { r0: s.r0.unwrap_or(20.0), ratio: s.ratio.unwrap_or(2.0), count: s.count.unwrap_or(4) }
    } else {
        default
    }
}

fn level(cfg: &RunConfig) -> usize {
    cfg.quad_level.unwrap_or(6)
}

fn emit(cfg: &RunConfig, report: &Value, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    if let Some(path) = &cfg.output.json_path {
        std::fs::write(path, &text).map_err(|e| CliError::Io(format!("--out {}: {e}", path.display())))?;
    }
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

pub fn estimate_json(e: &MassEstimate) -> Value {
    let samples: Vec<Value> =
        e.samples.radii.iter().zip(&e.samples.flux).map(|(r, f)| json!({"r": num(*r), "flux": num(*f)})).collect();
    json!({
        "value": num(e.value),
        "fit_exponent": num(e.fit_exponent),
        "free_fit_value": num(e.free_fit_value),
        "series_exponent": num(e.series_exponent),
        "residual": num(e.residual),
        "warning": e.warning,
        "samples": samples,
    })
}

pub fn cmd_mass(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let subject = build_subject(cfg)?;
    let integrand = integrand(cfg)?;
    let mcfg = MassConfig { schedule: schedule(cfg, RadiusSchedule::default()), quad_level: level(cfg), decay_hint: None };
    let est = mass(subject.metric.as_ref(), integrand, &mcfg)?;
    let mut report = estimate_json(&est);
    report["command"] = json!("mass");
    report["metric"] = json!(subject.metric.label());
    report["integrand"] = json!(integrand.id());
    report["n"] = json!(subject.metric.dim());
    report["quad_level"] = json!(mcfg.quad_level);
    emit(cfg, &report, stdout)?;
    eprintln!("mass {} = {} (fit exponent {}, residual {:.3e})", integrand.id(), fmt17(est.value), est.fit_exponent, est.residual);
    Ok(match &est.warning {
        Some(w) => {
            eprintln!("warning: {w}");
            exit::FIT_WARNING
        }
        None => exit::OK,
    })
}

pub fn cmd_flux(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let subject = build_subject(cfg)?;
    let integrand = integrand(cfg)?;
    let sched = schedule(cfg, RadiusSchedule::Geometric { r0: 20.0, ratio: 2.0, count: 4 });
    let radii = lovelock_mass::mass::radii_for(subject.metric.as_ref(), &sched)?;
    let rule = sphere_rule(subject.metric.dim(), level(cfg))?;
    let series = flux_series(subject.metric.as_ref(), integrand, &radii, &rule)?;
    let mut text = format!("# integrand={} n={} k={}\nr,flux\n", integrand.id(), subject.metric.dim(), mass_order(cfg));
    for (r, f) in series.radii.iter().zip(&series.flux) {
        text += &format!("{},{}\n", fmt17(*r), fmt17(*f));
    }
    match &cfg.output.csv_path {
        Some(path) => std::fs::write(path, &text).map_err(|e| CliError::Io(format!("--csv {}: {e}", path.display())))?,
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))?,
    }
    Ok(exit::OK)
}

pub fn suite_json(r: &SuiteReport) -> Value {
    let checks: Vec<Value> = r
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "residual": num(c.residual),
                "tolerance": num(c.tolerance),
                "points": c.points,
                "pass": c.pass,
            })
        })
        .collect();
    json!({"command": "verify", "suite": r.suite, "n": r.n, "seed": r.seed, "checks": checks, "pass": r.pass})
}

pub fn cmd_verify(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let suite = cfg
        .suite
        .clone()
        .ok_or_else(|| CliError::Config(format!("--suite: required; known suites: {}", SUITES.join(", "))))?;
    let n = cfg.metric.params.n.unwrap_or(5);
    let report = run_suite(&suite, n, cfg.seed.unwrap_or(0))?;
    emit(cfg, &suite_json(&report), stdout)?;
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: residual {:.3e} > {:.1e}", c.name, c.residual, c.tolerance);
    }
    Ok(if report.pass { exit::OK } else { exit::ERROR })
}

fn build_horizon(spec: &HorizonSpec, n: usize) -> Result<Ellipsoid, CliError> {
    let (e, center) = match spec {
        HorizonSpec::Sphere { rho, center } => (Ellipsoid::sphere(n, *rho)?, center),
        HorizonSpec::Ellipsoid { axes, center } => {
            if axes.len() != n {
                return Err(CliError::Config(format!("horizon.axes: expected {n} axes, got {}", axes.len())));
            }
            (Ellipsoid::new(axes.clone())?, center)
        }
    };
    Ok(match center {
        Some(c) => e.centered(c.clone())?,
        None => e,
    })
}

fn functionals_json(c: &BoundaryFunctionals) -> Value {
    json!({
        "area": num(c.area),
        "int_h1": num(c.int_h1),
        "int_h2": num(c.int_h2),
        "int_h3": num(c.int_h3),
        "int_r": num(c.int_r),
        "boundary": num(c.boundary),
        "r_bound": num(c.r_bound),
        "h_bound": num(c.h_bound),
        "area_bound": num(c.area_bound),
        "convex": c.convex,
    })
}

fn nums(v: &[f64]) -> Vec<Value> {
    v.iter().map(|x| num(*x)).collect()
}

pub fn cmd_penrose(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let subject = match cfg.metric.family {
        Some(_) => Some(build_subject(cfg)?),
        None => None,
    };
    if let Some(s) = &subject {
        if s.graph.is_none() {
            return Err(CliError::Config(format!(
                "metric.family: penrose needs a graph family, got {:?}",
                s.family
            )));
        }
    }
    let graph = subject.as_ref().and_then(|s| s.graph.clone());
    let n = match (&graph, &cfg.horizon) {
        (Some(f), _) => f.dim(),
        (None, Some(HorizonSpec::Ellipsoid { axes, .. })) => axes.len(),
        (None, _) => required_n(cfg)?,
    };
    let horizon = match (&cfg.horizon, &graph) {
        (Some(h), _) => build_horizon(h, n)?,
        (None, Some(f)) if f.inner_radius() > 0.0 => Ellipsoid::sphere(n, f.inner_radius())?,
        _ => return Err(CliError::Config("horizon: required (--horizon FILE or config horizon)".into())),
    };
    let rule = sphere_rule(n, level(cfg))?;
    let radial = RadialRule::default();
    let comps: [&dyn Hypersurface; 1] = [&horizon];
    let f = graph.as_deref();
    let egb = subject.as_ref().is_some_and(|s| s.family == "egb-graph");
    let (report, violated) = if egb {
        let r = egb_graph_penrose(f, &comps, alpha(cfg)?, &rule, &radial)?;
        let v = r.slack < -PENROSE_TOL;
        (
            json!({
                "command": "penrose",
                "kind": "egb",
                "bulk": num(r.bulk),
                "bulk_included": r.bulk_included,
                "boundary": num(r.boundary),
                "mass": num(r.mass),
                "bound": num(r.bound),
                "slack": num(r.slack),
                "per_component": r.per_component.iter().map(functionals_json).collect::<Vec<_>>(),
            }),
            v,
        )
    } else {
        let r = penrose_report(f, &comps, &rule, &radial)?;
        let v = r.violated(PENROSE_TOL);
        (
            json!({
                "command": "penrose",
                "kind": "gbc",
                "bulk": num(r.bulk),
                "bulk_included": r.bulk_included,
                "boundary": num(r.boundary),
                "mass": num(r.mass),
                "bounds": nums(&r.bounds),
                "slack": nums(&r.slack),
                "af_chain": nums(&r.af_chain),
                "af_slack": nums(&r.af_slack),
                "convex": r.convex,
                "per_component": r.per_component.iter().map(functionals_json).collect::<Vec<_>>(),
            }),
            v,
        )
    };
    let mut report = report;
    report["horizon"] = json!(horizon.label());
    report["quad_level"] = json!(level(cfg));
    emit(cfg, &report, stdout)?;
    Ok(if violated {
        eprintln!("bound violated beyond tolerance {PENROSE_TOL:e}");
        exit::BOUND_VIOLATION
    } else {
        exit::OK
    })
}
