//! Mode dispatch, output files and exit codes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use super::config::{build_problem, config_hash, serialize_config, ConfigError, Mode, Perturbation, RunConfig};
use crate::experiments::{
    coefficient_sweep, crisp_oracle_compare, initial_value_sweep, moment_bound_study,
    scaled_g2_variants, shifted_initial_variants, shifted_k2_variants, DependenceReport,
    ExperimentError, PerturbationSweep,
};
use crate::integrals::FuzzyPath;
use crate::paths::SeedSpec;
use crate::properties::{run_property_suite, PropertyOptions};
use crate::solver::ensemble::{map_paths, MIN_CZ_PATHS};
use crate::solver::{
    cz_rows, solve_path_with_retry, HukuharaFailure, SolveError, SolveOptions, SolveReport, Solver,
};
use crate::stats::mean_se;

pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const IO: i32 = 4;
    pub const HUKUHARA: i32 = 10;
    pub const NON_CONVERGENCE: i32 = 11;
    pub const BOUND_VIOLATION: i32 = 12;
    pub const PROPERTY_FAILURE: i32 = 13;
}

pub const DEFAULT_OUT_DIR: &str = "fsvie-out";
pub const DEFAULT_ITO_PATHS: usize = 100_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => exit::CONFIG,
            RunError::Io { .. } => exit::IO,
            RunError::Solve(e) | RunError::Experiment(ExperimentError::Solve(e)) => match e {
                SolveError::Hukuhara(_) => exit::HUKUHARA,
                SolveError::Config(_) => exit::CONFIG,
                _ => exit::INTERNAL,
            },
            RunError::Experiment(_) => exit::CONFIG,
        }
    }
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out: Option<PathBuf>,
    pub keep_iterates: bool,
    pub strict_bounds: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: String,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Configuration with the overrides applied.
pub fn effective_config(config: &RunConfig, ov: &Overrides) -> RunConfig {
    let mut c = config.clone();
    if let Some(m) = ov.mode {
        c.mode = m;
    }
    if let Some(s) = ov.seed {
        c.noise.seed = s;
    }
    if let Some(p) = ov.paths {
        c.noise.paths = p;
    }
    if ov.keep_iterates {
        c.solver.keep_iterates = true;
    }
    if let Some(o) = &ov.out {
        c.output_dir = Some(o.to_string_lossy().into_owned());
    }
    c
}

/// Shortest decimal that reads back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

struct Out {
    dir: PathBuf,
    files: Vec<PathBuf>,
    diagnostics: Vec<String>,
}

impl Out {
    fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            diagnostics: Vec::new(),
        })
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let io_err = |e: csv::Error, path: &Path| RunError::Io {
            path: path.to_path_buf(),
            source: io::Error::other(e.to_string()),
        };
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(e, &path))?;
        w.write_record(header).map_err(|e| io_err(e, &path))?;
        for r in rows {
            w.write_record(r).map_err(|e| io_err(e, &path))?;
        }
        w.flush().map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    fn diag(&mut self, line: impl Into<String>) {
        self.diagnostics.push(line.into());
    }
}

#[derive(Serialize)]
struct ResultRecord<'a> {
    schema_version: i64,
    tool_version: &'a str,
    mode: &'a str,
    config_hash: &'a str,
    seed: u64,
    paths: usize,
    timestamp: String,
    config: &'a str,
    exit_code: i32,
    payload: serde_json::Value,
}

struct ModeResult {
    exit_code: i32,
    summary: String,
    payload: serde_json::Value,
}

/// Runs the configured mode, writing `results.json`, the mode's CSV
/// tables and `diagnostics.log` into the output directory.
pub fn run(config: &RunConfig, ov: &Overrides) -> Result<RunOutcome, RunError> {
    let cfg = effective_config(config, ov);
    if cfg.noise.seed > i64::MAX as u64 {
        return Err(ConfigError {
            issues: vec![super::config::ConfigIssue {
                path: "noise.seed".into(),
                message: "must fit in a signed 64-bit integer".into(),
            }],
        }
        .into());
    }
    let hash = config_hash(&cfg);
    let dir = PathBuf::from(cfg.output_dir.clone().unwrap_or_else(|| DEFAULT_OUT_DIR.into()));
    let mut out = Out::create(&dir)?;
    out.diag(format!("mode {}", cfg.mode));
    out.diag(format!("config_hash {hash}"));
    out.diag(format!("seed {} paths {}", cfg.noise.seed, cfg.noise.paths));
    let result = match cfg.mode {
        Mode::Solve => run_solve(&cfg, ov, &mut out),
        Mode::SweepInitial | Mode::SweepCoefficients => run_sweep(&cfg, ov, &mut out),
        Mode::VerifyProperties => run_properties(&cfg, ov, &mut out),
        Mode::OracleCompare => run_oracle(&cfg, &mut out),
        Mode::MomentStudy => run_moments(&cfg, ov, &mut out),
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            out.diag(format!("error (exit {}): {e}", e.exit_code()));
            let log = out.diagnostics.join("\n") + "\n";
            out.text("diagnostics.log", &log)?;
            return Err(e);
        }
    };
    out.diag(format!("exit {}", result.exit_code));
    let canonical = serialize_config(&cfg);
    let record = ResultRecord {
        schema_version: super::config::SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        mode: cfg.mode.name(),
        config_hash: &hash,
        seed: cfg.noise.seed,
        paths: cfg.noise.paths,
        timestamp: chrono::Utc::now().to_rfc3339(),
        config: &canonical,
        exit_code: result.exit_code,
        payload: result.payload,
    };
    let body = serde_json::to_string_pretty(&record).expect("records serialise") + "\n";
    out.text("results.json", &body)?;
    let log = out.diagnostics.join("\n") + "\n";
    out.text("diagnostics.log", &log)?;
    let mut summary = format!("fsvie {} | config {} | seed {}\n", cfg.mode, &hash[..12], cfg.noise.seed);
    summary.push_str(&result.summary);
    let _ = write!(summary, "exit {} | outputs in {}", result.exit_code, dir.display());
    Ok(RunOutcome {
        exit_code: result.exit_code,
        summary,
        out_dir: dir,
        files: out.files,
    })
}

fn path_rows(u: &FuzzyPath, prefix: &[String]) -> Vec<Vec<String>> {
    let grid = u.grid();
    let levels = u.alpha().levels();
    let mut rows = Vec::new();
    for (i, v) in u.values().iter().enumerate() {
        for (k, c) in v.cuts().iter().enumerate() {
            let mut r = prefix.to_vec();
            r.extend([num(grid.time(i)), k.to_string(), num(levels[k]), num(c.lo), num(c.hi)]);
            rows.push(r);
        }
    }
    rows
}

struct PathOutcome {
    succ_diff: Vec<f64>,
    converged: bool,
    dt: f64,
    retries: Vec<HukuharaFailure>,
    full: Option<SolveReport>,
}

fn fmt_list(xs: &[f64], limit: usize) -> String {
    let shown: Vec<String> = xs.iter().take(limit).map(|x| format!("{x:.3e}")).collect();
    let more = if xs.len() > limit { ", ..." } else { "" };
    let body = shown.join(", ");
    if xs.iter().all(|&x| x == 0.0) {
        format!("[{}]", xs.iter().map(|_| "0").collect::<Vec<_>>().join(", "))
    } else {
        format!("[{body}{more}]")
    }
}

fn run_solve(cfg: &RunConfig, ov: &Overrides, out: &mut Out) -> Result<ModeResult, RunError> {
    let spec = build_problem(cfg)?;
    let stop = cfg.stopping_rule();
    let retries = cfg.solver.retry_finer_dt;
    let keep = cfg.solver.keep_iterates;
    let solver = Solver::new(&spec);
    let results = map_paths(cfg.noise.paths, |p| -> Result<PathOutcome, SolveError> {
        let seed = SeedSpec::new(cfg.noise.seed, p as u64);
        let b = spec.sample_brownian(seed)?;
        let opts = SolveOptions {
            keep_iterates: keep && p == 0,
        };
        let r = if retries > 0 {
            solve_path_with_retry(&spec, &b, &stop, seed, retries, opts)?
        } else {
            solver.solve(&b, &stop, None, opts, |_, _| {})?
        };
        Ok(PathOutcome {
            succ_diff: r.succ_diff.clone(),
            converged: r.converged,
            dt: r.solution.grid().dt,
            retries: r.hukuhara_failures.clone(),
            full: (p == 0).then_some(r),
        })
    });

    let mut ok: Vec<(usize, PathOutcome)> = Vec::new();
    let mut failed: Vec<(usize, HukuharaFailure)> = Vec::new();
    for (p, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => ok.push((p, o)),
            Err(SolveError::Hukuhara(f)) => failed.push((p, f)),
            Err(e) => return Err(e.into()),
        }
    }
    for (p, f) in &failed {
        out.diag(format!(
            "hukuhara failure path {p} iteration {} node {} t {} level {} kind {:?} deficit {}",
            f.iteration,
            f.node,
            num(f.time),
            f.level,
            f.kind,
            num(f.deficit)
        ));
    }
    for (p, o) in &ok {
        for f in &o.retries {
            out.diag(format!(
                "path {p} retried after failure at node {} t {} level {} deficit {}; finished with dt {}",
                f.node,
                num(f.time),
                f.level,
                num(f.deficit),
                num(o.dt)
            ));
        }
        if !o.converged {
            out.diag(format!("path {p} did not converge in {} iterations", o.succ_diff.len()));
        }
    }

    let mut rows = Vec::new();
    for (p, o) in &ok {
        for (n, d) in o.succ_diff.iter().enumerate() {
            rows.push(vec![p.to_string(), (n + 1).to_string(), num(*d)]);
        }
    }
    out.csv("succ_diff.csv", &["path", "n", "succ_diff"], &rows)?;

    let n_max = ok.iter().map(|(_, o)| o.succ_diff.len()).max().unwrap_or(0);
    let mut means = Vec::with_capacity(n_max);
    let mut ses = Vec::with_capacity(n_max);
    for n in 0..n_max {
        let xs: Vec<f64> = ok.iter().map(|(_, o)| o.succ_diff.get(n).map_or(0.0, |d| d * d)).collect();
        let r = mean_se(&xs);
        means.push(r.mean);
        ses.push(r.se);
    }
    let bound = solver.bound().cloned();
    if bound.is_none() {
        out.diag("bound constants unavailable: no lipschitz constant could be resolved");
    }
    let checked = bound.as_ref().filter(|_| ok.len() >= MIN_CZ_PATHS).map(|b| cz_rows(&means, &ses, b));
    let mut conv = Vec::new();
    for n in 0..n_max {
        let key = (n + 1).to_string();
        conv.push(vec![key.clone(), "mean_sup_d2".into(), num(means[n])]);
        conv.push(vec![key.clone(), "se_sup_d2".into(), num(ses[n])]);
        if let Some(b) = &bound {
            conv.push(vec![key.clone(), "cz_bound".into(), num(b.cz_bound(n + 1, b.horizon))]);
        }
        if let Some(rows) = &checked {
            conv.push(vec![key, "cz_pass".into(), u8::from(rows[n].pass).to_string()]);
        }
    }
    out.csv("convergence.csv", &["n", "statistic", "value"], &conv)?;

    let first = ok.iter().find(|(p, _)| *p == 0).and_then(|(_, o)| o.full.as_ref());
    if let Some(r) = first {
        out.csv(
            "solution.csv",
            &["t", "level", "alpha", "lo", "hi"],
            &path_rows(&r.solution, &[]),
        )?;
        if let Some(kept) = &r.iterates_kept {
            let mut rows = Vec::new();
            for (n, u) in kept.iter().enumerate() {
                rows.extend(path_rows(u, &[(n + 1).to_string()]));
            }
            out.csv("iterates.csv", &["n", "t", "level", "alpha", "lo", "hi"], &rows)?;
        }
    }

    let violated: Vec<usize> = checked
        .iter()
        .flatten()
        .filter(|r| !r.pass)
        .map(|r| r.n)
        .collect();
    for n in &violated {
        out.diag(format!("successive-difference bound violated at n = {n}"));
    }
    let converged = ok.iter().filter(|(_, o)| o.converged).count();
    let exit_code = if !failed.is_empty() {
        exit::HUKUHARA
    } else if converged < ok.len() {
        exit::NON_CONVERGENCE
    } else if ov.strict_bounds && !violated.is_empty() {
        exit::BOUND_VIOLATION
    } else {
        exit::OK
    };

    let mut summary = format!(
        "paths {} | completed {} | converged {} | hukuhara failures {}\n",
        cfg.noise.paths,
        ok.len(),
        converged,
        failed.len()
    );
    if let Some(r) = first {
        let _ = writeln!(summary, "path 0: succ_diff={} ({} iterations)", fmt_list(&r.succ_diff, 8), r.n_iters);
    }
    if let Some((p, f)) = failed.first() {
        let _ = writeln!(summary, "first failure: path {p}, {f}");
    }
    if let Some(b) = &bound {
        let _ = writeln!(summary, "C = {} ({:?}), xi = {}, zeta = {}", num(b.c), b.c_source, num(b.xi), num(b.zeta));
    }
    match &checked {
        Some(_) => {
            let _ = writeln!(summary, "bound check: {} of {} iterations violate", violated.len(), n_max);
        }
        None => {
            let why = if bound.is_some() {
                format!("needs {MIN_CZ_PATHS} completed paths")
            } else {
                "no constant C".to_string()
            };
            let _ = writeln!(summary, "bound check skipped ({why})");
        }
    }
    let payload = json!({
        "completed": ok.len(),
        "converged": converged,
        "hukuhara_failures": failed.iter().map(|(p, f)| json!({"path": p, "failure": f})).collect::<Vec<_>>(),
        "path0_succ_diff": first.map(|r| r.succ_diff.clone()),
        "mean_sup_d2": means,
        "se_sup_d2": ses,
        "bound": bound,
        "cz_check": checked,
    });
    Ok(ModeResult {
        exit_code,
        summary,
        payload,
    })
}

fn dependence_tables(report: &DependenceReport, out: &mut Out) -> Result<(), RunError> {
    let mut rows = Vec::new();
    let mut times = Vec::new();
    for v in &report.variants {
        let mut stat = |k: &str, x: f64| rows.push(vec![v.label.clone(), k.to_string(), num(x)]);
        stat("input_distance", v.input_distance);
        stat("output_mean", v.output.mean);
        stat("output_se", v.output.se);
        stat("output_main_mean", v.output_main.mean);
        stat("output_main_se", v.output_main.se);
        stat("output_pre_mean", v.output_pre.mean);
        stat("output_pre_se", v.output_pre.se);
        stat("ratio", v.ratio);
        stat("ratio_se", v.ratio_se);
        if let Some(b) = v.bound {
            stat("bound", b);
        }
        stat("failed_paths", v.failed_paths as f64);
        for p in &v.per_time {
            times.push(vec![v.label.clone(), num(p.t), num(p.mean), num(p.se)]);
        }
    }
    out.csv("dependence.csv", &["variant", "statistic", "value"], &rows)?;
    out.csv("dependence_time.csv", &["variant", "t", "mean", "se"], &times)
}

fn run_sweep(cfg: &RunConfig, ov: &Overrides, out: &mut Out) -> Result<ModeResult, RunError> {
    let base = build_problem(cfg)?;
    let mut sweep = PerturbationSweep::new(base.clone(), cfg.noise.paths, cfg.noise.seed);
    sweep.stop = cfg.stopping_rule();
    sweep.probe_times = cfg.sweep.probe_times.clone();
    let report = if cfg.mode == Mode::SweepInitial {
        sweep.variants = shifted_initial_variants(&base, &cfg.sweep.shifts);
        initial_value_sweep(&sweep)?
    } else {
        sweep.variants = match cfg.sweep.perturbation {
            Perturbation::ScaleG2 => scaled_g2_variants(&base, &cfg.sweep.ns),
            Perturbation::ShiftK2 => shifted_k2_variants(&base, &cfg.sweep.ns),
        };
        coefficient_sweep(&sweep)?
    };
    dependence_tables(&report, out)?;
    let mut summary = String::new();
    let mut failed = false;
    let mut violated = false;
    for v in &report.variants {
        let probes: Vec<String> = v.probes.iter().map(|p| format!("t={}: {:.3e}", p.t, p.mean)).collect();
        let _ = writeln!(
            summary,
            "{:<10} input {:.3e} | E sup d2 {:.3e} +- {:.1e} | ratio {:.3e}{} | {}",
            v.label,
            v.input_distance,
            v.output.mean,
            v.output.se,
            v.ratio,
            v.bound.map(|b| format!(" (cap {b:.3e})")).unwrap_or_default(),
            probes.join(", ")
        );
        if v.failed_paths > 0 {
            failed = true;
            out.diag(format!("variant {} dropped {} paths after Hukuhara failures", v.label, v.failed_paths));
        }
        if v.pass == Some(false) {
            violated = true;
            out.diag(format!("variant {} exceeds the initial-value cap", v.label));
        }
    }
    let exit_code = if failed {
        exit::HUKUHARA
    } else if ov.strict_bounds && violated {
        exit::BOUND_VIOLATION
    } else {
        exit::OK
    };
    Ok(ModeResult {
        exit_code,
        summary,
        payload: serde_json::to_value(&report).expect("report serialises"),
    })
}

fn run_properties(cfg: &RunConfig, ov: &Overrides, out: &mut Out) -> Result<ModeResult, RunError> {
    let opts = PropertyOptions {
        ito_paths: ov.paths.unwrap_or(DEFAULT_ITO_PATHS),
        seed: cfg.noise.seed,
        ..PropertyOptions::default()
    };
    let s = run_property_suite(&opts);
    let rows: Vec<Vec<String>> = s
        .rows
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.cases.to_string(),
                r.violations.to_string(),
                num(r.worst),
                u8::from(r.pass).to_string(),
            ]
        })
        .collect();
    out.csv("properties.csv", &["property", "cases", "violations", "worst", "pass"], &rows)?;
    let mut summary = String::new();
    for r in &s.rows {
        let _ = writeln!(summary, "{:<28} {:>7} cases  {}", r.name, r.cases, if r.pass { "pass" } else { "FAIL" });
        if !r.pass {
            out.diag(format!("property {} failed in {} of {} cases", r.name, r.violations, r.cases));
        }
    }
    Ok(ModeResult {
        exit_code: if s.all_pass() { exit::OK } else { exit::PROPERTY_FAILURE },
        summary,
        payload: serde_json::to_value(&s).expect("summary serialises"),
    })
}

fn run_oracle(cfg: &RunConfig, out: &mut Out) -> Result<ModeResult, RunError> {
    let spec = build_problem(cfg)?;
    let r = crisp_oracle_compare(&spec, cfg.noise.paths, cfg.noise.seed, &cfg.stopping_rule())?;
    let rows = vec![
        vec!["max_abs_diff".into(), num(r.max_abs_diff)],
        vec!["mean_terminal".into(), num(r.mean_terminal)],
        vec!["oracle_mean_terminal".into(), num(r.oracle_mean_terminal)],
        vec!["second_moment_terminal".into(), num(r.second_moment_terminal)],
        vec!["oracle_second_moment_terminal".into(), num(r.oracle_second_moment_terminal)],
        vec!["max_iters".into(), r.max_iters.to_string()],
    ];
    out.csv("oracle.csv", &["statistic", "value"], &rows)?;
    let summary = format!(
        "paths {} | max |U - x| {:.3e} | E U(T) {:.6} vs {:.6} | E U(T)^2 {:.6} vs {:.6}\n",
        r.paths, r.max_abs_diff, r.mean_terminal, r.oracle_mean_terminal, r.second_moment_terminal, r.oracle_second_moment_terminal
    );
    let exit_code = if r.all_converged { exit::OK } else { exit::NON_CONVERGENCE };
    Ok(ModeResult {
        exit_code,
        summary,
        payload: serde_json::to_value(&r).expect("report serialises"),
    })
}

fn run_moments(cfg: &RunConfig, ov: &Overrides, out: &mut Out) -> Result<ModeResult, RunError> {
    let spec = build_problem(cfg)?;
    let t = moment_bound_study(&spec, cfg.moment_n_max, cfg.noise.paths, cfg.noise.seed)?;
    let rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), num(r.sup_moment), num(r.envelope), u8::from(r.within).to_string()])
        .collect();
    out.csv("moments.csv", &["n", "sup_moment", "envelope", "within"], &rows)?;
    let outside = t.rows.iter().filter(|r| !r.within).count();
    if t.sampled_growth > t.c {
        out.diag(format!(
            "sampled growth quotient {} exceeds the constant C = {}",
            num(t.sampled_growth),
            num(t.c)
        ));
    }
    if t.failed_paths > 0 {
        out.diag(format!("{} paths dropped after Hukuhara failures", t.failed_paths));
    }
    let summary = format!(
        "n = 0..{} | max sup_t E|U^n|^2 = {:.4e} | envelope {:.4e} | {} rows outside\n",
        cfg.moment_n_max, t.uniform_cap, t.envelope.value, outside
    );
    let exit_code = if t.failed_paths > 0 {
        exit::HUKUHARA
    } else if ov.strict_bounds && outside > 0 {
        exit::BOUND_VIOLATION
    } else {
        exit::OK
    };
    Ok(ModeResult {
        exit_code,
        summary,
        payload: serde_json::to_value(&t).expect("table serialises"),
    })
}
