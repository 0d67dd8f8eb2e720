//! Scenario runner for `zermelo-core`: loads scenario configurations, runs
//! the verification suites and writes JSON/CSV reports.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod suites;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use zermelo_core::correspondence::transport_geodesic;
use zermelo_core::geodesics::{integrate_geodesic, integrate_jacobi, GeodesicOptions};

pub use config::{Scenario, ScenarioConfig, Suite};
pub use error::CliError;
pub use report::{Report, SuiteBlock, Table};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the configured suite selection.
    pub suites: Option<Vec<Suite>>,
    pub seed: Option<u64>,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    /// Replace the wind by `V ≡ 0`.
    pub zero_wind: bool,
}

pub struct RunOutput {
    pub report: Report,
    pub tables: Vec<Table>,
}

impl RunOutput {
    pub fn pass(&self) -> bool {
        self.report.pass
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            1
        }
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| CliError::Io(e.to_string()))
}

pub fn prepare(mut config: ScenarioConfig, opts: &RunOptions) -> Result<Scenario, CliError> {
    if opts.zero_wind {
        config = config.with_zero_wind();
    }
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(s) = &opts.suites {
        config.suites = Some(s.clone());
    }
    Scenario::build(config)
}

/// Runs the selected suites concurrently and assembles the report in suite
/// order.
pub fn run(config: ScenarioConfig, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let pool = pool(opts.jobs)?;
    pool.install(|| {
        let scenario = prepare(config, opts)?;
        let cfg = &scenario.config;
        let selected = cfg.suites();
        let outputs: Vec<_> = selected.par_iter().map(|&s| suites::run_suite(&scenario, s, cfg.seed)).collect();
        let mut blocks = Vec::with_capacity(outputs.len());
        let mut tables = Vec::new();
        for o in outputs {
            blocks.push(o.block);
            tables.extend(o.tables);
        }
        let nav = &scenario.nav;
        let step_policy: BTreeMap<String, f64> =
            nav.base().policy().entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let report = Report {
            scenario: cfg.name.clone(),
            description: cfg.description.clone(),
            base_metric: cfg.metric.label(),
            wind: cfg.wind.label(),
            dilation: report::Dilation {
                measured: nav.c(),
                fit_residual: nav.estimate().max_residual,
                declared: cfg.wind.dilation(),
            },
            pass: !blocks.is_empty() && blocks.iter().all(|b| b.pass),
            suites: blocks,
            environment: report::Environment {
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: cfg.seed,
                zero_wind: opts.zero_wind,
                step_policy,
            },
        };
        Ok(RunOutput { report, tables })
    })
}

/// Writes `report.json` and/or one CSV per table into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path, json: bool, csv: bool) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    if json {
        report::write_json(&out.report, dir)?;
    }
    if csv {
        for t in &out.tables {
            report::write_csv(t, dir)?;
        }
    }
    Ok(())
}

/// One line per suite for terminal output.
pub fn summary(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} (measured c = {:.9})", report.scenario, report.dilation.measured);
    for b in &report.suites {
        let verdict = if b.pass { "PASS" } else { "FAIL" };
        let _ = write!(s, "  {verdict} {:<14} n={:<4} max_residual={:.3e} tol={:.0e}", b.suite, b.n_samples, b.max_residual, b.tolerance);
        if let Some(e) = &b.error {
            let _ = write!(s, "  error: {e}");
        }
        for c in b.checks.iter().filter(|c| !c.pass) {
            let _ = write!(s, "  [{} {:.3e} > {:.0e}", c.name, c.max_residual, c.tolerance);
            if let Some(f) = &c.first_failure {
                let _ = write!(s, "; {f}");
            }
            s.push(']');
        }
        s.push('\n');
    }
    s
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x}"))
}

/// Table of the built-in scenarios with their expected outcomes.
pub fn list_scenarios() -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<18} {:<22} {:<24} {:>6} {:>8} {:>8}  notes", "name", "base metric", "wind", "c", "K̃", "S̃");
    for name in config::builtin_names() {
        let cfg = ScenarioConfig::builtin(name).expect("built-in");
        let e = &cfg.expected;
        let note = match (e.c, e.k_tilde, e.s_tilde) {
            (Some(c), Some(k), Some(st)) => format!(
                "K̃ = K − c² with K = {}; S̃ = S + (n+1)c with S = {}",
                k + c * c,
                st - (cfg.dim() as f64 + 1.0) * c
            ),
            _ => String::new(),
        };
        let _ = writeln!(
            s,
            "{:<18} {:<22} {:<24} {:>6} {:>8} {:>8}  {}",
            name,
            cfg.metric.label(),
            cfg.wind.label(),
            fmt_opt(e.c),
            fmt_opt(e.k_tilde),
            fmt_opt(e.s_tilde),
            note
        );
    }
    s
}

/// Which curve `export_curve` integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    /// Geodesic of the base metric.
    Base,
    /// Geodesic of the navigated metric, integrated directly.
    Navigated,
    /// Base geodesic transported to the navigated metric.
    Transported,
}

#[derive(Clone, Debug)]
pub struct CurveRequest {
    pub kind: CurveKind,
    pub x0: Vec<f64>,
    /// Initial direction; rescaled to unit speed.
    pub y0: Vec<f64>,
    pub span: (f64, f64),
    /// Sample intervals across the span.
    pub samples: usize,
    /// Jacobi initial data `(J(0), D_γ̇ J(0))`, not available for
    /// transported curves.
    pub jacobi: Option<(Vec<f64>, Vec<f64>)>,
}

/// Integrates the requested curve and returns its samples as a table with
/// columns `t, x0.., v0.., speed[, j0.., jdot0..]`.
pub fn export_curve(scenario: &Scenario, req: &CurveRequest) -> Result<Table, CliError> {
    let n = scenario.nav.dim();
    let bad = |m: String| CliError::Config(m);
    if req.x0.len() != n || req.y0.len() != n {
        return Err(bad(format!("x0 and y0 need {n} components")));
    }
    if let Some((j, d)) = &req.jacobi {
        if j.len() != n || d.len() != n {
            return Err(bad(format!("j0 and dj0 need {n} components")));
        }
    }
    if !(req.span.0 <= 0.0 && 0.0 <= req.span.1 && req.span.0 < req.span.1) {
        return Err(bad("the span must contain 0".into()));
    }
    let geometry = |e: zermelo_core::GeometryError| CliError::Scenario(e.to_string());
    let nav = &scenario.nav;
    let metric = match req.kind {
        CurveKind::Navigated => nav.navigated(),
        _ => nav.base(),
    };
    let y0 = metric.normalize(&req.x0, &req.y0).map_err(geometry)?;
    let opts = GeodesicOptions { speed_tolerance: None, ..GeodesicOptions::default() }.with_samples(req.samples.max(2));
    let mut header = vec!["t".to_string()];
    header.extend(report::columns("x", n));
    header.extend(report::columns("v", n));
    header.push("speed".into());
    if req.jacobi.is_some() {
        header.extend(report::columns("j", n));
        header.extend(report::columns("jdot", n));
    }
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new("curve", &refs);
    let push = |table: &mut Table, t: f64, x: &[f64], v: &[f64], speed: f64, extra: Option<(&[f64], &[f64])>| {
        let mut row = vec![report::num(t)];
        row.extend(report::nums(x));
        row.extend(report::nums(v));
        row.push(report::num(speed));
        if let Some((j, d)) = extra {
            row.extend(report::nums(j));
            row.extend(report::nums(d));
        }
        table.push(row);
    };
    match (req.kind, &req.jacobi) {
        (CurveKind::Transported, Some(_)) => {
            return Err(bad("Jacobi export is available for base and navigated curves only".into()));
        }
        (CurveKind::Transported, None) => {
            let reach = nav.warp().s(req.span.1) + 0.05;
            let start = nav.warp().s(req.span.0) - 0.05;
            let g = integrate_geodesic(nav.base(), &req.x0, &y0, (start, reach), &GeodesicOptions::default())
                .map_err(geometry)?;
            let gt = transport_geodesic(nav, &g, req.span, req.samples.max(2)).map_err(geometry)?;
            for k in 0..gt.len() {
                push(&mut table, gt.times[k], &gt.positions[k], &gt.velocities[k], gt.speeds[k], None);
            }
        }
        (_, None) => {
            let g = integrate_geodesic(metric, &req.x0, &y0, req.span, &opts).map_err(geometry)?;
            for k in 0..g.len() {
                push(&mut table, g.times[k], &g.positions[k], &g.velocities[k], g.speeds[k], None);
            }
        }
        (_, Some((j0, dj0))) => {
            let j = integrate_jacobi(metric, &req.x0, &y0, j0, dj0, req.span, &opts.with_tolerance(1e-12))
                .map_err(geometry)?;
            let g = &j.geodesic;
            for k in 0..g.len() {
                push(&mut table, g.times[k], &g.positions[k], &g.velocities[k], g.speeds[k], Some((&j.field[k], &j.rate[k])));
            }
        }
    }
    Ok(table)
}

/// Writes a table as CSV to any writer.
pub fn write_table<W: std::io::Write>(table: &Table, out: W) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header).map_err(io)?;
    for r in &table.rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

/// Writes a table to `path`, or to stdout when `path` is `None`.
pub fn write_table_to(table: &Table, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            write_table(table, f)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_table(table, &mut lock)?;
            lock.flush().map_err(|e| CliError::Io(e.to_string()))
        }
    }
}
