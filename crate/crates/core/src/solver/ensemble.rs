//! Many independent paths of the same problem, solved in parallel and
//! reduced in path order.

use rayon::prelude::*;
use serde::Serialize;

use crate::paths::SeedSpec;
use crate::stats::mean_se;

use super::{
    BoundConstants, HukuharaFailure, SolveError, SolveOptions, Solver, StoppingRule,
};
use super::ProblemSpec;

/// Paths required by [`check_cz_bound`].
pub const MIN_CZ_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub paths: usize,
    pub seed: u64,
    pub stop: StoppingRule,
    /// Record `E‖Uⁿ(t)‖²` per iteration and node.
    pub track_moments: bool,
}

impl EnsembleOptions {
    pub fn new(paths: usize, seed: u64) -> Self {
        Self {
            paths,
            seed,
            stop: StoppingRule::default(),
            track_moments: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PathSummary {
    succ_diff: Vec<f64>,
    converged: bool,
    moments: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEnsembleReport {
    pub paths: usize,
    pub seed: u64,
    /// Paths that finished without a Hukuhara failure.
    pub completed: usize,
    pub converged: usize,
    pub n_iters: Vec<usize>,
    /// Largest iteration count over completed paths.
    pub n_max: usize,
    /// `E sup_t d∞²(Uⁿ, Uⁿ⁻¹)` for `n = 1..=n_max`; a path that stopped
    /// earlier contributes zero for later `n`.
    pub sup_d2_mean: Vec<f64>,
    pub sup_d2_se: Vec<f64>,
    /// `E‖Uⁿ(t_i)‖²` indexed `[n][i]` for `n = 0..=n_max`; a stopped path
    /// contributes its last iterate.
    pub moment_mean: Option<Vec<Vec<f64>>>,
    pub failures: Vec<(usize, HukuharaFailure)>,
    pub bound: Option<BoundConstants>,
}

impl PathEnsembleReport {
    /// `sup_t E‖Uⁿ(t)‖²` for each `n`.
    pub fn sup_moments(&self) -> Option<Vec<f64>> {
        self.moment_mean
            .as_ref()
            .map(|m| m.iter().map(|row| row.iter().copied().fold(0.0, f64::max)).collect())
    }
}

/// Runs `f(p)` for `p = 0..paths` in parallel, results in path order.
pub(crate) fn map_paths<T, F>(paths: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..paths).into_par_iter().map(f).collect()
}

/// Path `p` uses the Brownian pair of `SeedSpec::new(seed, p)`.
pub fn run_ensemble(
    spec: &ProblemSpec,
    opts: &EnsembleOptions,
) -> Result<PathEnsembleReport, SolveError> {
    let solver = Solver::new(spec);
    let n_nodes = spec.grid.n_nodes();
    let results = map_paths(opts.paths, |p| -> Result<PathSummary, SolveError> {
        let b = spec.sample_brownian(SeedSpec::new(opts.seed, p as u64))?;
        let mut moments = opts.track_moments.then(Vec::new);
        let report = solver.solve(&b, &opts.stop, None, SolveOptions::default(), |_, u| {
            if let Some(m) = moments.as_mut() {
                m.push(u.values().iter().map(|v| v.norm_f().powi(2)).collect());
            }
        })?;
        Ok(PathSummary {
            succ_diff: report.succ_diff,
            converged: report.converged,
            moments,
        })
    });

    let mut completed = Vec::new();
    let mut failures = Vec::new();
    for (p, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => completed.push(s),
            Err(SolveError::Hukuhara(f)) => failures.push((p, f)),
            Err(e) => return Err(e),
        }
    }
    let n_max = completed.iter().map(|s| s.succ_diff.len()).max().unwrap_or(0);
    let mut sup_d2_mean = Vec::with_capacity(n_max);
    let mut sup_d2_se = Vec::with_capacity(n_max);
    for n in 0..n_max {
        let xs: Vec<f64> = completed
            .iter()
            .map(|s| s.succ_diff.get(n).map_or(0.0, |d| d * d))
            .collect();
        let r = mean_se(&xs);
        sup_d2_mean.push(r.mean);
        sup_d2_se.push(r.se);
    }
    let moment_mean = opts.track_moments.then(|| {
        let mut acc = vec![vec![0.0; n_nodes]; n_max + 1];
        for s in &completed {
            let m = s.moments.as_ref().expect("moments tracked");
            for (n, row) in acc.iter_mut().enumerate() {
                let src = &m[n.min(m.len() - 1)];
                for (a, x) in row.iter_mut().zip(src) {
                    *a += x;
                }
            }
        }
        let k = completed.len().max(1) as f64;
        for row in &mut acc {
            for a in row.iter_mut() {
                *a /= k;
            }
        }
        acc
    });
    Ok(PathEnsembleReport {
        paths: opts.paths,
        seed: opts.seed,
        completed: completed.len(),
        converged: completed.iter().filter(|s| s.converged).count(),
        n_iters: completed.iter().map(|s| s.succ_diff.len()).collect(),
        n_max,
        sup_d2_mean,
        sup_d2_se,
        moment_mean,
        failures,
        bound: solver.bound().cloned(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CzRow {
    pub n: usize,
    pub estimate: f64,
    pub se: f64,
    pub bound: f64,
    /// `bound + 3·se - estimate`.
    pub margin: f64,
    pub pass: bool,
}

/// Compares each `E sup d∞²(Uⁿ, Uⁿ⁻¹)` with `(ξ/2ζ)(2ζT̃)ⁿ/n!`, passing
/// when the estimate is at most the bound plus three standard errors.
pub fn check_cz_bound(
    report: &PathEnsembleReport,
    bound: &BoundConstants,
) -> Result<Vec<CzRow>, SolveError> {
    if report.completed < MIN_CZ_PATHS {
        return Err(SolveError::Config(format!(
            "bound check needs at least {MIN_CZ_PATHS} completed paths, got {}",
            report.completed
        )));
    }
    Ok(cz_rows(&report.sup_d2_mean, &report.sup_d2_se, bound))
}

/// Bound comparison for given per-`n` means and standard errors, `n`
/// starting at 1.
pub fn cz_rows(means: &[f64], ses: &[f64], bound: &BoundConstants) -> Vec<CzRow> {
    means
        .iter()
        .zip(ses)
        .enumerate()
        .map(|(i, (&estimate, &se))| {
            let n = i + 1;
            let b = bound.cz_bound(n, bound.horizon);
            let margin = b + 3.0 * se - estimate;
            CzRow {
                n,
                estimate,
                se,
                bound: b,
                margin,
                pass: margin >= 0.0,
            }
        })
        .collect()
}
