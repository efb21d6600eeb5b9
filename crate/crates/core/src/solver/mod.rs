//! Pathwise Picard iteration for the symmetric equation in its
//! Hukuhara form
//!
//! ```text
//! U(t) = [Φ(t) ⊕ ∫g₂K₂ds] ⊖ ∫g₁K₁ds ⊕ ⟨∫h₂L₂dB₂ - ∫h₁L₁dB₁⟩,  t ∈ [0, T̃]
//! U(t) = Φ(t),                                              t ∈ [-τ, 0]
//! ```
//!
//! Each path freezes one Brownian pair and iterates `U⁰ = Φ`,
//! `Uⁿ = P(Uⁿ⁻¹)` until the sup-node `d∞` between consecutive iterates drops
//! below a tolerance. A missing Hukuhara difference aborts the path and is
//! reported with the failing node and level.

pub mod bounds;
pub mod ensemble;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::coeffs::{InitialMap, ZeroDiffusion, ZeroDrift, ZeroKernel};
use crate::fuzzy::{AlphaGrid, FuzzyError, FuzzyNumber, HukuharaFailureKind};
use crate::integrals::{
    aumann_from_table, diffusion_values, drift_values, ito_from_table, Diffusion, Drift,
    FuzzyPath, IntegralError, Kernel, KernelTable,
};
use crate::paths::{make_grid, BrownianPair, PathError, SeedSpec, TimeGrid};

pub use bounds::{bound_constants, BoundConstants, CSource};
pub use ensemble::{check_cz_bound, cz_rows, run_ensemble, CzRow, EnsembleOptions, PathEnsembleReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("Hukuhara difference missing: {0}")]
    Hukuhara(HukuharaFailure),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("Brownian pair does not match the problem grid")]
    GridMismatch,
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Integral(#[from] IntegralError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

/// Where a Picard iterate could not be formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HukuharaFailure {
    /// Index `n` of the iterate `Uⁿ` being built.
    pub iteration: usize,
    /// Global grid node.
    pub node: usize,
    pub time: f64,
    pub level: usize,
    pub deficit: f64,
    pub kind: HukuharaFailureKind,
}

impl std::fmt::Display for HukuharaFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "iteration {} node {} (t = {}) level {}: {:?} deficit {:e}",
            self.iteration, self.node, self.time, self.level, self.kind, self.deficit
        )
    }
}

/// Data of one equation instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: TimeGrid,
    pub alpha: AlphaGrid,
    pub phi: Arc<dyn InitialMap>,
    pub g1: Arc<dyn Kernel>,
    pub g2: Arc<dyn Kernel>,
    pub h1: Arc<dyn Kernel>,
    pub h2: Arc<dyn Kernel>,
    pub k1: Arc<dyn Drift>,
    pub k2: Arc<dyn Drift>,
    pub l1: Arc<dyn Diffusion>,
    pub l2: Arc<dyn Diffusion>,
    pub rho: f64,
    /// Constant of the Lipschitz and growth hypotheses, if known.
    pub lipschitz_c: Option<f64>,
    /// Allow sampling `C` when neither an explicit value nor closed-form
    /// constants are available.
    pub estimate_c: bool,
}

impl ProblemSpec {
    /// All kernels and coefficients zero, `ρ = 0`.
    pub fn new(grid: TimeGrid, alpha: AlphaGrid, phi: Arc<dyn InitialMap>) -> Self {
        Self {
            grid,
            alpha,
            phi,
            g1: Arc::new(ZeroKernel),
            g2: Arc::new(ZeroKernel),
            h1: Arc::new(ZeroKernel),
            h2: Arc::new(ZeroKernel),
            k1: Arc::new(ZeroDrift),
            k2: Arc::new(ZeroDrift),
            l1: Arc::new(ZeroDiffusion),
            l2: Arc::new(ZeroDiffusion),
            rho: 0.0,
            lipschitz_c: None,
            estimate_c: true,
        }
    }

    /// `Φ` sampled on every node of `[-τ, T̃]`.
    pub fn initial_path(&self) -> FuzzyPath {
        let values = (0..self.grid.n_nodes())
            .map(|i| self.phi.at(self.grid.time(i), &self.alpha))
            .collect();
        FuzzyPath::new_unchecked(self.grid, self.alpha.clone(), values)
    }

    /// Same problem on a grid with step `dt`.
    pub fn with_dt(&self, dt: f64) -> Result<Self, SolveError> {
        let grid = make_grid(self.grid.tau(), self.grid.horizon(), dt)?;
        Ok(Self {
            grid,
            ..self.clone()
        })
    }

    pub fn sample_brownian(&self, seed: SeedSpec) -> Result<BrownianPair, SolveError> {
        Ok(crate::paths::sample_brownian_pair(&self.grid, self.rho, seed)?)
    }
}

/// Stop once `succ_diff < tol` after at least `min_iters` iterations, or
/// after `max_iters`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct StoppingRule {
    pub tol: f64,
    pub max_iters: usize,
    pub min_iters: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 50,
            min_iters: 1,
        }
    }
}

impl StoppingRule {
    /// Exactly `n` iterations.
    pub fn fixed(n: usize) -> Self {
        Self {
            tol: 0.0,
            max_iters: n,
            min_iters: n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Last iterate.
    pub solution: FuzzyPath,
    /// `U¹, U², …` when retention was requested.
    pub iterates_kept: Option<Vec<FuzzyPath>>,
    /// `succ_diff[n-1] = sup_t d∞(Uⁿ(t), Uⁿ⁻¹(t))`.
    pub succ_diff: Vec<f64>,
    pub n_iters: usize,
    pub converged: bool,
    /// Failures of earlier attempts on coarser grids.
    pub hukuhara_failures: Vec<HukuharaFailure>,
    pub bound: Option<BoundConstants>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    pub keep_iterates: bool,
}

/// Problem data with kernel tables cached for repeated solves.
#[derive(Debug, Clone)]
pub struct Solver {
    spec: ProblemSpec,
    phi_path: FuzzyPath,
    g1: KernelTable,
    g2: KernelTable,
    h1: KernelTable,
    h2: KernelTable,
    bound: Option<BoundConstants>,
}

impl Solver {
    pub fn new(spec: &ProblemSpec) -> Self {
        let grid = spec.grid;
        Self {
            phi_path: spec.initial_path(),
            g1: KernelTable::new(spec.g1.as_ref(), &grid),
            g2: KernelTable::new(spec.g2.as_ref(), &grid),
            h1: KernelTable::new(spec.h1.as_ref(), &grid),
            h2: KernelTable::new(spec.h2.as_ref(), &grid),
            bound: bound_constants(spec).ok(),
            spec: spec.clone(),
        }
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn initial_path(&self) -> &FuzzyPath {
        &self.phi_path
    }

    pub fn bound(&self) -> Option<&BoundConstants> {
        self.bound.as_ref()
    }

    /// One application of the Picard map. The returned failure carries
    /// `iteration = 0`; [`Solver::solve`] fills in the real index.
    pub fn picard_step(
        &self,
        prev: &FuzzyPath,
        b: &BrownianPair,
    ) -> Result<FuzzyPath, SolveError> {
        let grid = self.spec.grid;
        if b.grid != grid || prev.grid() != &grid {
            return Err(SolveError::GridMismatch);
        }
        let alpha = &self.spec.alpha;
        let k2 = (!self.g2.is_zero()).then(|| drift_values(self.spec.k2.as_ref(), prev));
        let k1 = (!self.g1.is_zero()).then(|| drift_values(self.spec.k1.as_ref(), prev));
        let l2 = (!self.h2.is_zero()).then(|| diffusion_values(self.spec.l2.as_ref(), prev));
        let l1 = (!self.h1.is_zero()).then(|| diffusion_values(self.spec.l1.as_ref(), prev));

        let mut values = Vec::with_capacity(grid.n_nodes());
        values.extend_from_slice(&self.phi_path.values()[..=grid.n_pre]);
        for j in 1..=grid.n_main {
            let node = grid.main_index(j);
            let phi = self.phi_path.at(node);
            let lifted = match &k2 {
                Some(vals) => phi.add(&aumann_from_table(j, &self.g2, vals, alpha, grid.dt))?,
                None => phi.clone(),
            };
            let reduced = match &k1 {
                Some(vals) => {
                    let sub = aumann_from_table(j, &self.g1, vals, alpha, grid.dt);
                    match lifted.hukuhara_sub(&sub) {
                        Ok(w) => w,
                        Err(FuzzyError::HukuharaNotExists(e)) => {
                            return Err(SolveError::Hukuhara(HukuharaFailure {
                                iteration: 0,
                                node,
                                time: grid.time(node),
                                level: e.level,
                                deficit: e.deficit,
                                kind: e.kind,
                            }))
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                None => lifted,
            };
            let ito2 = l2
                .as_ref()
                .map_or(0.0, |vals| ito_from_table(j, &self.h2, vals, &b.b2));
            let ito1 = l1
                .as_ref()
                .map_or(0.0, |vals| ito_from_table(j, &self.h1, vals, &b.b1));
            values.push(reduced.shift(ito2 - ito1));
        }
        Ok(FuzzyPath::new_unchecked(grid, alpha.clone(), values))
    }

    /// Picard iteration from `init` (default `U⁰ = Φ`); `observer` sees
    /// every iterate including `U⁰`.
    pub fn solve(
        &self,
        b: &BrownianPair,
        stop: &StoppingRule,
        init: Option<&FuzzyPath>,
        opts: SolveOptions,
        mut observer: impl FnMut(usize, &FuzzyPath),
    ) -> Result<SolveReport, SolveError> {
        let mut current = match init {
            Some(u0) => {
                if u0.grid() != &self.spec.grid {
                    return Err(SolveError::GridMismatch);
                }
                u0.clone()
            }
            None => self.phi_path.clone(),
        };
        observer(0, &current);
        let mut succ_diff = Vec::new();
        let mut kept = opts.keep_iterates.then(Vec::new);
        let mut converged = false;
        for n in 1..=stop.max_iters {
            let next = self.picard_step(&current, b).map_err(|e| match e {
                SolveError::Hukuhara(f) => SolveError::Hukuhara(HukuharaFailure { iteration: n, ..f }),
                other => other,
            })?;
            let diff = next.sup_distance(&current);
            succ_diff.push(diff);
            observer(n, &next);
            if let Some(k) = kept.as_mut() {
                k.push(next.clone());
            }
            current = next;
            if n >= stop.min_iters && diff < stop.tol {
                converged = true;
                break;
            }
        }
        Ok(SolveReport {
            solution: current,
            iterates_kept: kept,
            n_iters: succ_diff.len(),
            succ_diff,
            converged,
            hukuhara_failures: Vec::new(),
            bound: self.bound.clone(),
        })
    }
}

/// One Picard step `P(prev)` for `spec` on the Brownian pair `b`.
pub fn picard_step(
    prev: &FuzzyPath,
    spec: &ProblemSpec,
    b: &BrownianPair,
) -> Result<FuzzyPath, SolveError> {
    Solver::new(spec).picard_step(prev, b)
}

/// Iterates from `U⁰ = Φ` until `stop` is met.
pub fn solve_path(
    spec: &ProblemSpec,
    b: &BrownianPair,
    stop: &StoppingRule,
) -> Result<SolveReport, SolveError> {
    Solver::new(spec).solve(b, stop, None, SolveOptions::default(), |_, _| {})
}

/// Like [`solve_path`], but on a Hukuhara failure halves `dt` (refining the
/// Brownian pair by bridge sampling) up to `max_refinements` times. Earlier
/// failures are logged in the final report.
pub fn solve_path_with_retry(
    spec: &ProblemSpec,
    b: &BrownianPair,
    stop: &StoppingRule,
    seed: SeedSpec,
    max_refinements: u32,
    opts: SolveOptions,
) -> Result<SolveReport, SolveError> {
    let mut spec = spec.clone();
    let mut b = b.clone();
    let mut failures = Vec::new();
    for level in 0..=max_refinements {
        match Solver::new(&spec).solve(&b, stop, None, opts, |_, _| {}) {
            Ok(mut report) => {
                report.hukuhara_failures = failures;
                return Ok(report);
            }
            Err(SolveError::Hukuhara(f)) if level < max_refinements => {
                failures.push(f);
                spec = spec.with_dt(0.5 * spec.grid.dt)?;
                b = b.refine(seed.refinement(level));
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!("the final attempt either returns a report or an error")
}

/// Copy of `path` with `shift` added to every node after `t = 0`.
pub fn shifted_after_origin(path: &FuzzyPath, shift: f64) -> FuzzyPath {
    let grid = *path.grid();
    let values: Vec<FuzzyNumber> = path
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| if i > grid.n_pre { v.shift(shift) } else { v.clone() })
        .collect();
    FuzzyPath::new_unchecked(grid, path.alpha().clone(), values)
}

#[cfg(test)]
mod tests;
