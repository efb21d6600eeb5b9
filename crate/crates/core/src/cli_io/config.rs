//! Versioned TOML run configuration.
//!
//! Parsing walks the document by hand so that every problem is reported
//! with its key path, and unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::coeffs::{
    ConstantDiffusion, ConstantDrift, ConstantKernel, CrispMidDrift, ExpKernel, InitialMap,
    LinearDrift, LinearMidDiffusion, PolyKernel, RampInitial, TriangularInitial, ZeroDiffusion,
    ZeroDrift, ZeroKernel,
};
use crate::fuzzy::AlphaGrid;
use crate::integrals::{Diffusion, Drift, Kernel};
use crate::paths::make_grid;
use crate::solver::{ProblemSpec, StoppingRule};

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Solve,
    SweepInitial,
    SweepCoefficients,
    VerifyProperties,
    OracleCompare,
    MomentStudy,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Solve,
        Mode::SweepInitial,
        Mode::SweepCoefficients,
        Mode::VerifyProperties,
        Mode::OracleCompare,
        Mode::MomentStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::SweepInitial => "sweep-initial",
            Mode::SweepCoefficients => "sweep-coefficients",
            Mode::VerifyProperties => "verify-properties",
            Mode::OracleCompare => "oracle-compare",
            Mode::MomentStudy => "moment-study",
        }
    }

    pub fn from_name(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration problem(s)", self.issues.len())?;
        for i in &self.issues {
            write!(f, "\n  {}: {}", i.path, i.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// A registry family and its parameters; `None` marks a required one.
struct Family {
    name: &'static str,
    params: &'static [(&'static str, Option<f64>)],
}

const KERNELS: &[Family] = &[
    Family { name: "zero", params: &[] },
    Family { name: "constant", params: &[("value", None)] },
    Family { name: "exp-kernel", params: &[("scale", None), ("rate", None)] },
    Family { name: "poly-kernel", params: &[("c0", None), ("c1", Some(0.0)), ("c2", Some(0.0))] },
];

const DRIFTS: &[Family] = &[
    Family { name: "zero", params: &[] },
    Family { name: "constant", params: &[("center", None), ("left", Some(0.0)), ("right", Some(0.0))] },
    Family { name: "linear-in-first-arg", params: &[("a", None), ("shift", Some(0.0))] },
    Family { name: "linear-in-delayed-arg", params: &[("b", None), ("shift", Some(0.0))] },
    Family { name: "linear", params: &[("a", Some(0.0)), ("b", Some(0.0)), ("shift", Some(0.0))] },
    Family { name: "scaled-shift", params: &[("scale", None), ("shift", None)] },
    Family { name: "crisp-mid", params: &[("a", Some(0.0)), ("b", Some(0.0)), ("c", Some(0.0))] },
];

const DIFFUSIONS: &[Family] = &[
    Family { name: "zero", params: &[] },
    Family { name: "constant", params: &[("value", None)] },
    Family { name: "linear-mid", params: &[("a", Some(0.0)), ("b", Some(0.0)), ("c", Some(0.0))] },
];

const INITIALS: &[Family] = &[
    Family { name: "crisp", params: &[("value", None)] },
    Family { name: "triangular", params: &[("center", None), ("left", Some(0.0)), ("right", Some(0.0))] },
    Family {
        name: "triangular-ramp",
        params: &[("center", None), ("slope", None), ("left", Some(0.0)), ("right", Some(0.0))],
    },
];

/// Registry name plus the full parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub kind: String,
    pub params: BTreeMap<String, f64>,
}

impl Choice {
    pub fn zero() -> Self {
        Self {
            kind: "zero".into(),
            params: BTreeMap::new(),
        }
    }

    pub fn new(kind: &str, params: &[(&str, f64)]) -> Self {
        Self {
            kind: kind.into(),
            params: params.iter().map(|(k, v)| ((*k).to_string(), *v)).collect(),
        }
    }

    fn p(&self, key: &str) -> f64 {
        self.params[key]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    ScaleG2,
    ShiftK2,
}

impl Perturbation {
    pub fn name(self) -> &'static str {
        match self {
            Perturbation::ScaleG2 => "scale-g2",
            Perturbation::ShiftK2 => "shift-k2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub tau: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Number of steps `m` of the uniform α-grid.
    pub alpha_levels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub rho: f64,
    pub seed: u64,
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub min_iters: usize,
    pub lipschitz_c: Option<f64>,
    pub estimate_c: bool,
    pub keep_iterates: bool,
    /// Halvings of `dt` attempted after a Hukuhara failure.
    pub retry_finer_dt: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub shifts: Vec<f64>,
    pub perturbation: Perturbation,
    pub ns: Vec<u32>,
    pub probe_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub grid: GridConfig,
    pub noise: NoiseConfig,
    pub solver: SolverConfig,
    pub initial: Choice,
    pub g1: Choice,
    pub g2: Choice,
    pub h1: Choice,
    pub h2: Choice,
    pub k1: Choice,
    pub k2: Choice,
    pub l1: Choice,
    pub l2: Choice,
    pub sweep: SweepConfig,
    pub moment_n_max: usize,
    pub output_dir: Option<String>,
}

struct Walker {
    issues: Vec<ConfigIssue>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

impl Walker {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn table(&mut self, t: &mut Table, path: &str, key: &str, required: bool) -> Option<Table> {
        match t.remove(key) {
            Some(Value::Table(inner)) => Some(inner),
            Some(other) => {
                self.issue(join(path, key), format!("expected a table, found {}", type_name(&other)));
                None
            }
            None => {
                if required {
                    self.issue(join(path, key), "missing required table");
                }
                None
            }
        }
    }

    fn float(&mut self, t: &mut Table, path: &str, key: &str, default: Option<f64>) -> f64 {
        match t.remove(key) {
            Some(Value::Float(x)) if x.is_finite() => x,
            Some(Value::Integer(i)) => i as f64,
            Some(Value::Float(x)) => {
                self.issue(join(path, key), format!("must be finite, got {x}"));
                f64::NAN
            }
            Some(other) => {
                self.issue(join(path, key), format!("expected a number, found {}", type_name(&other)));
                f64::NAN
            }
            None => default.unwrap_or_else(|| {
                self.issue(join(path, key), "missing required key");
                f64::NAN
            }),
        }
    }

    fn opt_float(&mut self, t: &mut Table, path: &str, key: &str) -> Option<f64> {
        t.contains_key(key).then(|| self.float(t, path, key, None))
    }

    fn uint(&mut self, t: &mut Table, path: &str, key: &str, default: u64) -> u64 {
        match t.remove(key) {
            Some(Value::Integer(i)) if i >= 0 => i as u64,
            Some(other) => {
                self.issue(join(path, key), format!("expected a nonnegative integer, found {other}"));
                default
            }
            None => default,
        }
    }

    fn boolean(&mut self, t: &mut Table, path: &str, key: &str, default: bool) -> bool {
        match t.remove(key) {
            Some(Value::Boolean(b)) => b,
            Some(other) => {
                self.issue(join(path, key), format!("expected a boolean, found {}", type_name(&other)));
                default
            }
            None => default,
        }
    }

    fn string(&mut self, t: &mut Table, path: &str, key: &str) -> Option<String> {
        match t.remove(key) {
            Some(Value::String(s)) => Some(s),
            Some(other) => {
                self.issue(join(path, key), format!("expected a string, found {}", type_name(&other)));
                None
            }
            None => None,
        }
    }

    fn float_list(&mut self, t: &mut Table, path: &str, key: &str, default: Vec<f64>) -> Vec<f64> {
        match t.remove(key) {
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, v) in items.into_iter().enumerate() {
                    match v {
                        Value::Float(x) if x.is_finite() => out.push(x),
                        Value::Integer(n) => out.push(n as f64),
                        other => self.issue(format!("{}[{i}]", join(path, key)), format!("expected a finite number, found {other}")),
                    }
                }
                out
            }
            Some(other) => {
                self.issue(join(path, key), format!("expected an array, found {}", type_name(&other)));
                default
            }
            None => default,
        }
    }

    fn uint_list(&mut self, t: &mut Table, path: &str, key: &str, default: Vec<u32>) -> Vec<u32> {
        match t.remove(key) {
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, v) in items.into_iter().enumerate() {
                    match v {
                        Value::Integer(n) if n >= 1 && n <= i64::from(u32::MAX) => out.push(n as u32),
                        other => self.issue(format!("{}[{i}]", join(path, key)), format!("expected a positive integer, found {other}")),
                    }
                }
                out
            }
            Some(other) => {
                self.issue(join(path, key), format!("expected an array, found {}", type_name(&other)));
                default
            }
            None => default,
        }
    }

    fn finish(&mut self, t: Table, path: &str) {
        for key in t.keys() {
            self.issue(join(path, key), "unknown key");
        }
    }

    fn choice(&mut self, t: Option<Table>, path: &str, registry: &[Family], what: &str, default: Option<Choice>) -> Choice {
        let Some(mut t) = t else {
            return default.unwrap_or_else(|| {
                self.issue(path, "missing required table");
                Choice::zero()
            });
        };
        let available = registry.iter().map(|f| f.name).collect::<Vec<_>>().join(", ");
        let Some(kind) = self.string(&mut t, path, "kind") else {
            self.issue(join(path, "kind"), format!("missing {what} name; available: {available}"));
            return Choice::zero();
        };
        let Some(family) = registry.iter().find(|f| f.name == kind) else {
            self.issue(join(path, "kind"), format!("unknown {what} '{kind}'; available: {available}"));
            return Choice::zero();
        };
        let mut params = BTreeMap::new();
        for (name, default) in family.params {
            let v = self.float(&mut t, path, name, *default);
            params.insert((*name).to_string(), v);
        }
        self.finish(t, path);
        Choice { kind, params }
    }
}

/// Parses and validates a configuration document, collecting every
/// problem found.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
        issues: vec![ConfigIssue {
            path: "<document>".into(),
            message: e.message().to_string(),
        }],
    })?;
    let mut w = Walker { issues: Vec::new() };

    match root.remove("schema_version") {
        Some(Value::Integer(SCHEMA_VERSION)) => {}
        Some(other) => w.issue("schema_version", format!("unsupported schema version {other}, expected {SCHEMA_VERSION}")),
        None => w.issue("schema_version", "missing required key"),
    }
    let mode = match w.string(&mut root, "", "mode") {
        None => Mode::Solve,
        Some(s) => Mode::from_name(&s).unwrap_or_else(|| {
            let names: Vec<_> = Mode::ALL.iter().map(|m| m.name()).collect();
            w.issue("mode", format!("unknown mode '{s}'; available: {}", names.join(", ")));
            Mode::Solve
        }),
    };

    let mut gt = w.table(&mut root, "", "grid", true).unwrap_or_default();
    let grid = GridConfig {
        tau: w.float(&mut gt, "grid", "tau", None),
        horizon: w.float(&mut gt, "grid", "horizon", None),
        dt: w.float(&mut gt, "grid", "dt", None),
        alpha_levels: w.uint(&mut gt, "grid", "alpha_levels", 10) as usize,
    };
    w.finish(gt, "grid");

    let mut nt = w.table(&mut root, "", "noise", false).unwrap_or_default();
    let noise = NoiseConfig {
        rho: w.float(&mut nt, "noise", "rho", Some(0.0)),
        seed: w.uint(&mut nt, "noise", "seed", 0),
        paths: w.uint(&mut nt, "noise", "paths", 1) as usize,
    };
    w.finish(nt, "noise");

    let mut st = w.table(&mut root, "", "solver", false).unwrap_or_default();
    let defaults = StoppingRule::default();
    let solver = SolverConfig {
        tol: w.float(&mut st, "solver", "tol", Some(defaults.tol)),
        max_iters: w.uint(&mut st, "solver", "max_iters", defaults.max_iters as u64) as usize,
        min_iters: w.uint(&mut st, "solver", "min_iters", defaults.min_iters as u64) as usize,
        lipschitz_c: w.opt_float(&mut st, "solver", "lipschitz_c"),
        estimate_c: w.boolean(&mut st, "solver", "estimate_c", true),
        keep_iterates: w.boolean(&mut st, "solver", "keep_iterates", false),
        retry_finer_dt: w.uint(&mut st, "solver", "retry_finer_dt", 0).min(u64::from(u32::MAX)) as u32,
    };
    w.finish(st, "solver");

    let it = w.table(&mut root, "", "initial", true);
    let initial = w.choice(it, "initial", INITIALS, "initial map", None);

    let mut kt = w.table(&mut root, "", "kernels", false).unwrap_or_default();
    let mut kernel = |w: &mut Walker, key: &str| {
        let t = w.table(&mut kt, "kernels", key, false);
        w.choice(t, &join("kernels", key), KERNELS, "kernel", Some(Choice::zero()))
    };
    let (g1, g2, h1, h2) = (kernel(&mut w, "g1"), kernel(&mut w, "g2"), kernel(&mut w, "h1"), kernel(&mut w, "h2"));
    w.finish(kt, "kernels");

    let mut dt_ = w.table(&mut root, "", "drift", false).unwrap_or_default();
    let mut drift = |w: &mut Walker, key: &str| {
        let t = w.table(&mut dt_, "drift", key, false);
        w.choice(t, &join("drift", key), DRIFTS, "drift", Some(Choice::zero()))
    };
    let (k1, k2) = (drift(&mut w, "k1"), drift(&mut w, "k2"));
    w.finish(dt_, "drift");

    let mut ft = w.table(&mut root, "", "diffusion", false).unwrap_or_default();
    let mut diffusion = |w: &mut Walker, key: &str| {
        let t = w.table(&mut ft, "diffusion", key, false);
        w.choice(t, &join("diffusion", key), DIFFUSIONS, "diffusion", Some(Choice::zero()))
    };
    let (l1, l2) = (diffusion(&mut w, "l1"), diffusion(&mut w, "l2"));
    w.finish(ft, "diffusion");

    let mut swt = w.table(&mut root, "", "sweep", false).unwrap_or_default();
    let shifts = w.float_list(&mut swt, "sweep", "shifts", vec![0.1, 0.01, 0.001]);
    let perturbation = match w.string(&mut swt, "sweep", "perturbation").as_deref() {
        None | Some("scale-g2") => Perturbation::ScaleG2,
        Some("shift-k2") => Perturbation::ShiftK2,
        Some(other) => {
            w.issue("sweep.perturbation", format!("unknown perturbation '{other}'; available: scale-g2, shift-k2"));
            Perturbation::ScaleG2
        }
    };
    let ns = w.uint_list(&mut swt, "sweep", "ns", vec![1, 2, 4, 8, 16]);
    let probe_times = w.float_list(&mut swt, "sweep", "probe_times", vec![0.5 * grid.horizon, grid.horizon]);
    w.finish(swt, "sweep");
    let sweep = SweepConfig {
        shifts,
        perturbation,
        ns,
        probe_times,
    };

    let mut sdt = w.table(&mut root, "", "study", false).unwrap_or_default();
    let moment_n_max = w.uint(&mut sdt, "study", "n_max", 16) as usize;
    w.finish(sdt, "study");

    let mut ot = w.table(&mut root, "", "output", false).unwrap_or_default();
    let output_dir = w.string(&mut ot, "output", "dir");
    w.finish(ot, "output");
    w.finish(root, "");

    let cfg = RunConfig {
        mode,
        grid,
        noise,
        solver,
        initial,
        g1,
        g2,
        h1,
        h2,
        k1,
        k2,
        l1,
        l2,
        sweep,
        moment_n_max,
        output_dir,
    };
    validate(&cfg, &mut w);
    if w.issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { issues: w.issues })
    }
}

fn commensurate(x: f64, dt: f64) -> bool {
    let r = x / dt;
    (r - r.round()).abs() <= 1e-9 * r.abs().max(1.0)
}

fn validate(c: &RunConfig, w: &mut Walker) {
    let g = &c.grid;
    let finite = [g.tau, g.horizon, g.dt].iter().all(|x| x.is_finite());
    if finite {
        if g.dt <= 0.0 {
            w.issue("grid.dt", format!("must be positive, got {}", g.dt));
        } else {
            if g.tau < 0.0 {
                w.issue("grid.tau", format!("must be nonnegative, got {}", g.tau));
            } else if !commensurate(g.tau, g.dt) {
                w.issue("grid.tau, grid.dt", format!("tau = {} is not a multiple of dt = {}", g.tau, g.dt));
            }
            if g.horizon <= 0.0 {
                w.issue("grid.horizon", format!("must be positive, got {}", g.horizon));
            } else if !commensurate(g.horizon, g.dt) {
                w.issue("grid.horizon, grid.dt", format!("horizon = {} is not a multiple of dt = {}", g.horizon, g.dt));
            }
        }
        for (i, &t) in c.sweep.probe_times.iter().enumerate() {
            if g.dt > 0.0 && (t < 0.0 || t > g.horizon * (1.0 + 1e-12) || !commensurate(t, g.dt)) {
                w.issue(format!("sweep.probe_times[{i}]"), format!("{t} is not a main grid time"));
            }
        }
    }
    if g.alpha_levels == 0 {
        w.issue("grid.alpha_levels", "must be at least 1");
    }
    if !(c.noise.rho.abs() <= 1.0) {
        w.issue("noise.rho", format!("|rho| must be at most 1, got {}", c.noise.rho));
    }
    if c.noise.seed > i64::MAX as u64 {
        w.issue("noise.seed", "must fit in a signed 64-bit integer");
    }
    if c.noise.paths == 0 {
        w.issue("noise.paths", "must be at least 1");
    }
    let s = &c.solver;
    if !(s.tol >= 0.0) {
        w.issue("solver.tol", format!("must be nonnegative, got {}", s.tol));
    }
    if s.max_iters == 0 {
        w.issue("solver.max_iters", "must be at least 1");
    }
    if s.min_iters > s.max_iters {
        w.issue("solver.min_iters", "must not exceed solver.max_iters");
    }
    if let Some(cv) = s.lipschitz_c {
        if !(cv >= 0.0) {
            w.issue("solver.lipschitz_c", format!("must be nonnegative, got {cv}"));
        }
    }
    for (path, ch) in [("initial", &c.initial), ("drift.k1", &c.k1), ("drift.k2", &c.k2)] {
        for spread in ["left", "right"] {
            if let Some(&v) = ch.params.get(spread) {
                if v < 0.0 {
                    w.issue(format!("{path}.{spread}"), format!("spread must be nonnegative, got {v}"));
                }
            }
        }
    }
    if c.sweep.shifts.is_empty() {
        w.issue("sweep.shifts", "must not be empty");
    }
    if c.sweep.ns.is_empty() {
        w.issue("sweep.ns", "must not be empty");
    }
    if c.moment_n_max == 0 {
        w.issue("study.n_max", "must be at least 1");
    }
}

fn choice_table(c: &Choice) -> Table {
    let mut t = Table::new();
    t.insert("kind".into(), Value::String(c.kind.clone()));
    for (k, v) in &c.params {
        t.insert(k.clone(), Value::Float(*v));
    }
    t
}

fn section(pairs: Vec<(&str, Value)>) -> Value {
    Value::Table(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::Float(x)).collect())
}

/// Canonical document: every key written, defaults included.
pub fn serialize_config(c: &RunConfig) -> String {
    let mut root = Table::new();
    root.insert("schema_version".into(), Value::Integer(SCHEMA_VERSION));
    root.insert("mode".into(), Value::String(c.mode.name().into()));
    root.insert(
        "grid".into(),
        section(vec![
            ("tau", Value::Float(c.grid.tau)),
            ("horizon", Value::Float(c.grid.horizon)),
            ("dt", Value::Float(c.grid.dt)),
            ("alpha_levels", Value::Integer(c.grid.alpha_levels as i64)),
        ]),
    );
    root.insert(
        "noise".into(),
        section(vec![
            ("rho", Value::Float(c.noise.rho)),
            ("seed", Value::Integer(c.noise.seed as i64)),
            ("paths", Value::Integer(c.noise.paths as i64)),
        ]),
    );
    let mut solver = vec![
        ("tol", Value::Float(c.solver.tol)),
        ("max_iters", Value::Integer(c.solver.max_iters as i64)),
        ("min_iters", Value::Integer(c.solver.min_iters as i64)),
        ("estimate_c", Value::Boolean(c.solver.estimate_c)),
        ("keep_iterates", Value::Boolean(c.solver.keep_iterates)),
        ("retry_finer_dt", Value::Integer(i64::from(c.solver.retry_finer_dt))),
    ];
    if let Some(cv) = c.solver.lipschitz_c {
        solver.push(("lipschitz_c", Value::Float(cv)));
    }
    root.insert("solver".into(), section(solver));
    root.insert("initial".into(), Value::Table(choice_table(&c.initial)));
    root.insert(
        "kernels".into(),
        section(vec![
            ("g1", Value::Table(choice_table(&c.g1))),
            ("g2", Value::Table(choice_table(&c.g2))),
            ("h1", Value::Table(choice_table(&c.h1))),
            ("h2", Value::Table(choice_table(&c.h2))),
        ]),
    );
    root.insert(
        "drift".into(),
        section(vec![
            ("k1", Value::Table(choice_table(&c.k1))),
            ("k2", Value::Table(choice_table(&c.k2))),
        ]),
    );
    root.insert(
        "diffusion".into(),
        section(vec![
            ("l1", Value::Table(choice_table(&c.l1))),
            ("l2", Value::Table(choice_table(&c.l2))),
        ]),
    );
    root.insert(
        "sweep".into(),
        section(vec![
            ("shifts", floats(&c.sweep.shifts)),
            ("perturbation", Value::String(c.sweep.perturbation.name().into())),
            ("ns", Value::Array(c.sweep.ns.iter().map(|&n| Value::Integer(i64::from(n))).collect())),
            ("probe_times", floats(&c.sweep.probe_times)),
        ]),
    );
    root.insert(
        "study".into(),
        section(vec![("n_max", Value::Integer(c.moment_n_max as i64))]),
    );
    let mut output = Table::new();
    if let Some(d) = &c.output_dir {
        output.insert("dir".into(), Value::String(d.clone()));
    }
    root.insert("output".into(), Value::Table(output));
    toml::to_string(&root).expect("a table of plain values always serialises")
}

/// Hex SHA-256 of the canonical document, output location left out.
pub fn config_hash(c: &RunConfig) -> String {
    let mut c = c.clone();
    c.output_dir = None;
    hex::encode(Sha256::digest(serialize_config(&c).as_bytes()))
}

fn kernel_of(c: &Choice) -> Arc<dyn Kernel> {
    match c.kind.as_str() {
        "constant" => Arc::new(ConstantKernel(c.p("value"))),
        "exp-kernel" => Arc::new(ExpKernel {
            scale: c.p("scale"),
            rate: c.p("rate"),
        }),
        "poly-kernel" => Arc::new(PolyKernel {
            c0: c.p("c0"),
            c1: c.p("c1"),
            c2: c.p("c2"),
        }),
        _ => Arc::new(ZeroKernel),
    }
}

fn drift_of(c: &Choice) -> Arc<dyn Drift> {
    let linear = |a: f64, b: f64, shift: f64| -> Arc<dyn Drift> { Arc::new(LinearDrift { a, b, shift }) };
    match c.kind.as_str() {
        "constant" => Arc::new(ConstantDrift {
            center: c.p("center"),
            left: c.p("left"),
            right: c.p("right"),
        }),
        "linear-in-first-arg" => linear(c.p("a"), 0.0, c.p("shift")),
        "linear-in-delayed-arg" => linear(0.0, c.p("b"), c.p("shift")),
        "linear" => linear(c.p("a"), c.p("b"), c.p("shift")),
        "scaled-shift" => linear(c.p("scale"), 0.0, c.p("shift")),
        "crisp-mid" => Arc::new(CrispMidDrift {
            a: c.p("a"),
            b: c.p("b"),
            c: c.p("c"),
        }),
        _ => Arc::new(ZeroDrift),
    }
}

fn diffusion_of(c: &Choice) -> Arc<dyn Diffusion> {
    match c.kind.as_str() {
        "constant" => Arc::new(ConstantDiffusion(c.p("value"))),
        "linear-mid" => Arc::new(LinearMidDiffusion {
            a: c.p("a"),
            b: c.p("b"),
            c: c.p("c"),
        }),
        _ => Arc::new(ZeroDiffusion),
    }
}

fn initial_of(c: &Choice) -> Arc<dyn InitialMap> {
    match c.kind.as_str() {
        "crisp" => Arc::new(TriangularInitial::crisp(c.p("value"))),
        "triangular-ramp" => Arc::new(RampInitial {
            center: c.p("center"),
            slope: c.p("slope"),
            left: c.p("left"),
            right: c.p("right"),
        }),
        _ => Arc::new(TriangularInitial {
            center: c.p("center"),
            left: c.p("left"),
            right: c.p("right"),
        }),
    }
}

/// Problem instance described by a validated configuration.
pub fn build_problem(c: &RunConfig) -> Result<ProblemSpec, ConfigError> {
    let wrap = |path: &str, message: String| ConfigError {
        issues: vec![ConfigIssue {
            path: path.into(),
            message,
        }],
    };
    let grid = make_grid(c.grid.tau, c.grid.horizon, c.grid.dt).map_err(|e| wrap("grid", e.to_string()))?;
    let alpha = AlphaGrid::uniform(c.grid.alpha_levels).map_err(|e| wrap("grid.alpha_levels", e.to_string()))?;
    let mut spec = ProblemSpec::new(grid, alpha, initial_of(&c.initial));
    spec.g1 = kernel_of(&c.g1);
    spec.g2 = kernel_of(&c.g2);
    spec.h1 = kernel_of(&c.h1);
    spec.h2 = kernel_of(&c.h2);
    spec.k1 = drift_of(&c.k1);
    spec.k2 = drift_of(&c.k2);
    spec.l1 = diffusion_of(&c.l1);
    spec.l2 = diffusion_of(&c.l2);
    spec.rho = c.noise.rho;
    spec.lipschitz_c = c.solver.lipschitz_c;
    spec.estimate_c = c.solver.estimate_c;
    Ok(spec)
}

impl RunConfig {
    pub fn stopping_rule(&self) -> StoppingRule {
        StoppingRule {
            tol: self.solver.tol,
            max_iters: self.solver.max_iters,
            min_iters: self.solver.min_iters,
        }
    }
}
