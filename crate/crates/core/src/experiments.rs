//! Monte Carlo studies of continuous dependence, the crisp reduction and
//! the uniform moment bound.
//!
//! Every study couples base and variants through common Brownian pairs:
//! path `p` of every system is driven by `SeedSpec::new(seed, p)`.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::coeffs::{crisp_value, ScaledKernel, ShiftedDrift, ShiftedInitial};
use crate::fuzzy::FuzzyNumber;
use crate::integrals::{kernel_sup_norm, FuzzyPath};
use crate::paths::SeedSpec;
use crate::solver::bounds::{sample_drift_constant, MomentEnvelope};
use crate::solver::ensemble::map_paths;
use crate::solver::{
    bound_constants, run_ensemble, EnsembleOptions, ProblemSpec, SolveError, SolveOptions, Solver,
    StoppingRule,
};
use crate::stats::{mean_se, MeanSe};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// A base problem and labelled variants solved on common noise.
#[derive(Debug, Clone)]
pub struct PerturbationSweep {
    pub base: ProblemSpec,
    pub variants: Vec<(String, ProblemSpec)>,
    pub paths: usize,
    pub seed: u64,
    pub stop: StoppingRule,
    /// Times at which per-time distances are reported.
    pub probe_times: Vec<f64>,
}

impl PerturbationSweep {
    pub fn new(base: ProblemSpec, paths: usize, seed: u64) -> Self {
        let horizon = base.grid.horizon();
        Self {
            base,
            variants: Vec::new(),
            paths,
            seed,
            stop: StoppingRule::default(),
            probe_times: vec![0.5 * horizon, horizon],
        }
    }

    pub fn with_variant(mut self, label: impl Into<String>, spec: ProblemSpec) -> Self {
        self.variants.push((label.into(), spec));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbePoint {
    pub t: f64,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantResult {
    pub label: String,
    /// `sup_t d∞²(Φ, Ψ)` or the aggregate over the probe pairs.
    pub input_distance: f64,
    /// `E sup d∞²(U, V)` over `[-τ, T̃]`.
    pub output: MeanSe,
    /// Same supremum restricted to `[0, T̃]`.
    pub output_main: MeanSe,
    /// Same supremum restricted to `[-τ, 0]`.
    pub output_pre: MeanSe,
    /// `E d∞²(U(t), V(t))` at every main node.
    pub per_time: Vec<ProbePoint>,
    /// `per_time` at the sweep's probe times.
    pub probes: Vec<ProbePoint>,
    pub ratio: f64,
    pub ratio_se: f64,
    /// Theoretical cap on `ratio`, where one applies.
    pub bound: Option<f64>,
    pub pass: Option<bool>,
    /// Paths dropped because base or variant lost a Hukuhara difference.
    pub failed_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceReport {
    pub kind: String,
    pub paths: usize,
    pub seed: u64,
    pub variants: Vec<VariantResult>,
    pub note: String,
}

type NodeDistances = Vec<f64>;

/// `d∞²(U(t_i), V(t_i))` on every node for each variant, per path; `None`
/// for paths where any system failed.
fn coupled_distances(sweep: &PerturbationSweep) -> Result<Vec<Option<Vec<NodeDistances>>>, SolveError> {
    let base = Solver::new(&sweep.base);
    let variants: Vec<Solver> = sweep.variants.iter().map(|(_, s)| Solver::new(s)).collect();
    let results = map_paths(sweep.paths, |p| -> Result<Option<Vec<NodeDistances>>, SolveError> {
        let b = sweep.base.sample_brownian(SeedSpec::new(sweep.seed, p as u64))?;
        let solve = |s: &Solver| s.solve(&b, &sweep.stop, None, SolveOptions::default(), |_, _| {});
        let u = match solve(&base) {
            Ok(r) => r.solution,
            Err(SolveError::Hukuhara(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut out = Vec::with_capacity(variants.len());
        for v in &variants {
            match solve(v) {
                Ok(r) => out.push(node_distances(&u, &r.solution)),
                Err(SolveError::Hukuhara(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(Some(out))
    });
    results.into_iter().collect()
}

fn node_distances(u: &FuzzyPath, v: &FuzzyPath) -> NodeDistances {
    u.values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a.d_inf_unchecked(b).powi(2))
        .collect()
}

fn sup(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

fn summarise(
    sweep: &PerturbationSweep,
    per_path: &[Option<Vec<NodeDistances>>],
    index: usize,
    label: &str,
    input_distance: f64,
    bound: Option<f64>,
) -> VariantResult {
    let grid = sweep.base.grid;
    let ok: Vec<&NodeDistances> = per_path.iter().flatten().map(|d| &d[index]).collect();
    let failed_paths = per_path.len() - ok.len();
    let stat = |f: &dyn Fn(&NodeDistances) -> f64| mean_se(&ok.iter().map(|d| f(d)).collect::<Vec<_>>());
    let output = stat(&|d| sup(d));
    let output_main = stat(&|d| sup(&d[grid.n_pre..]));
    let output_pre = stat(&|d| sup(&d[..=grid.n_pre]));
    let per_time: Vec<ProbePoint> = (0..=grid.n_main)
        .map(|j| {
            let r = stat(&|d| d[grid.main_index(j)]);
            ProbePoint {
                t: grid.main_time(j),
                mean: r.mean,
                se: r.se,
            }
        })
        .collect();
    let probes = sweep
        .probe_times
        .iter()
        .filter_map(|&t| grid.main_node_at(t).map(|j| per_time[j]))
        .collect();
    let (ratio, ratio_se) = if input_distance > 0.0 {
        (output.mean / input_distance, output.se / input_distance)
    } else if output.mean == 0.0 {
        (0.0, 0.0)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let pass = bound.map(|b| ratio <= b + 3.0 * ratio_se);
    VariantResult {
        label: label.to_string(),
        input_distance,
        output,
        output_main,
        output_pre,
        per_time,
        probes,
        ratio,
        ratio_se,
        bound,
        pass,
        failed_paths,
    }
}

fn check_shared(sweep: &PerturbationSweep, label: &str, v: &ProblemSpec) -> Result<(), ExperimentError> {
    let b = &sweep.base;
    if v.grid != b.grid || !v.alpha.same_as(&b.alpha) || v.rho != b.rho {
        return Err(ExperimentError::InvalidSweep(format!(
            "variant '{label}' changes the grid, the alpha levels or rho"
        )));
    }
    Ok(())
}

/// Dependence on the initial value: `E sup d∞²(U, V)` against
/// `sup d∞²(Φ, Ψ)`, capped by `5·exp(2γT̃)`.
pub fn initial_value_sweep(sweep: &PerturbationSweep) -> Result<DependenceReport, ExperimentError> {
    let b = &sweep.base;
    for (label, v) in &sweep.variants {
        check_shared(sweep, label, v)?;
        let same = Arc::ptr_eq(&v.g1, &b.g1)
            && Arc::ptr_eq(&v.g2, &b.g2)
            && Arc::ptr_eq(&v.h1, &b.h1)
            && Arc::ptr_eq(&v.h2, &b.h2)
            && Arc::ptr_eq(&v.k1, &b.k1)
            && Arc::ptr_eq(&v.k2, &b.k2)
            && Arc::ptr_eq(&v.l1, &b.l1)
            && Arc::ptr_eq(&v.l2, &b.l2)
            && v.lipschitz_c == b.lipschitz_c;
        if !same {
            return Err(ExperimentError::InvalidSweep(format!(
                "variant '{label}' alters more than the initial value"
            )));
        }
    }
    let cap = bound_constants(b).ok().map(|bc| bc.initial_value_bound());
    let per_path = coupled_distances(sweep)?;
    let phi = b.initial_path();
    let variants = sweep
        .variants
        .iter()
        .enumerate()
        .map(|(i, (label, v))| {
            let input = sup(&node_distances(&phi, &v.initial_path()));
            summarise(sweep, &per_path, i, label, input, cap)
        })
        .collect();
    Ok(DependenceReport {
        kind: "initial-value".into(),
        paths: sweep.paths,
        seed: sweep.seed,
        variants,
        note: "input distance is sup over grid nodes of d_inf^2(Phi, Psi); output is reported over [-tau, T], [0, T] and [-tau, 0]".into(),
    })
}

/// Probe pairs `(U(s), U(s - τ))` from the base solution on path 0, at
/// eight evenly spaced main nodes.
fn probe_pairs(sweep: &PerturbationSweep) -> Result<Vec<(FuzzyNumber, FuzzyNumber)>, SolveError> {
    let base = &sweep.base;
    let b = base.sample_brownian(SeedSpec::new(sweep.seed, 0))?;
    let u = Solver::new(base)
        .solve(&b, &sweep.stop, None, SolveOptions::default(), |_, _| {})?
        .solution;
    let grid = base.grid;
    let count = grid.n_main.min(8);
    Ok((0..count)
        .map(|i| {
            let j = i * grid.n_main / count;
            let node = grid.main_index(j);
            (u.at(node).clone(), u.at(node - grid.tau_steps()).clone())
        })
        .collect())
}

/// Left-sum quadrature over `s` of the perturbation aggregate for one
/// probe pair, maximised over the main nodes `t`.
fn perturbation_aggregate(base: &ProblemSpec, v: &ProblemSpec, u: &FuzzyNumber, w: &FuzzyNumber) -> f64 {
    let grid = base.grid;
    let kb = [base.k1.eval(u, w), base.k2.eval(u, w)];
    let kv = [v.k1.eval(u, w), v.k2.eval(u, w)];
    let lb = [base.l1.eval(u, w), base.l2.eval(u, w)];
    let lv = [v.l1.eval(u, w), v.l2.eval(u, w)];
    let gb = [&base.g1, &base.g2];
    let gv = [&v.g1, &v.g2];
    let hb = [&base.h1, &base.h2];
    let hv = [&v.h1, &v.h2];
    let mut worst = 0.0f64;
    for j in 0..=grid.n_main {
        let t = grid.main_time(j);
        let mut total = 0.0;
        for k in 0..grid.n_main {
            let s = grid.main_time(k);
            for i in 0..2 {
                let a = kv[i].scaled(gv[i].eval(t, s));
                let b = kb[i].scaled(gb[i].eval(t, s));
                total += a.d_inf_unchecked(&b).powi(2) * grid.dt;
                let d = hv[i].eval(t, s) * lv[i] - hb[i].eval(t, s) * lb[i];
                total += d * d * grid.dt;
            }
        }
        worst = worst.max(total);
    }
    worst
}

/// Dependence on kernels and coefficients: `E d∞²(U(t), Vⁿ(t))` per time,
/// with the perturbation aggregate evaluated on probe pairs from the base
/// solution.
pub fn coefficient_sweep(sweep: &PerturbationSweep) -> Result<DependenceReport, ExperimentError> {
    let b = &sweep.base;
    let horizon = b.grid.horizon();
    for (label, v) in &sweep.variants {
        check_shared(sweep, label, v)?;
        if !Arc::ptr_eq(&v.phi, &b.phi) {
            return Err(ExperimentError::InvalidSweep(format!(
                "variant '{label}' changes the initial value"
            )));
        }
        for (name, k) in [("g1", &v.g1), ("g2", &v.g2), ("h1", &v.h1), ("h2", &v.h2)] {
            if !kernel_sup_norm(k.as_ref(), horizon).is_finite() {
                return Err(ExperimentError::InvalidSweep(format!(
                    "variant '{label}' has an unbounded kernel {name}"
                )));
            }
        }
    }
    let probes = probe_pairs(sweep)?;
    let per_path = coupled_distances(sweep)?;
    let variants = sweep
        .variants
        .iter()
        .enumerate()
        .map(|(i, (label, v))| {
            let input = probes
                .iter()
                .map(|(u, w)| perturbation_aggregate(b, v, u, w))
                .fold(0.0, f64::max);
            summarise(sweep, &per_path, i, label, input, None)
        })
        .collect();
    Ok(DependenceReport {
        kind: "coefficients".into(),
        paths: sweep.paths,
        seed: sweep.seed,
        variants,
        note: format!(
            "input distance is the largest perturbation aggregate over {} probe pairs (U(s), U(s - tau)) taken from the base solution of path 0",
            probes.len()
        ),
    })
}

/// `Ψ = Φ ⊕ ⟨ε⟩` for each `ε`.
pub fn shifted_initial_variants(base: &ProblemSpec, eps: &[f64]) -> Vec<(String, ProblemSpec)> {
    eps.iter()
        .map(|&e| {
            let mut v = base.clone();
            v.phi = Arc::new(ShiftedInitial {
                inner: base.phi.clone(),
                shift: e,
            });
            (format!("shift={e}"), v)
        })
        .collect()
}

/// `g₂ⁿ = g₂·(1 + 1/n)` for each `n`.
pub fn scaled_g2_variants(base: &ProblemSpec, ns: &[u32]) -> Vec<(String, ProblemSpec)> {
    ns.iter()
        .map(|&n| {
            let mut v = base.clone();
            v.g2 = Arc::new(ScaledKernel {
                inner: base.g2.clone(),
                factor: 1.0 + 1.0 / f64::from(n),
            });
            (format!("n={n}"), v)
        })
        .collect()
}

/// `K₂ⁿ = K₂ ⊕ ⟨1/n⟩` for each `n`.
pub fn shifted_k2_variants(base: &ProblemSpec, ns: &[u32]) -> Vec<(String, ProblemSpec)> {
    ns.iter()
        .map(|&n| {
            let mut v = base.clone();
            v.k2 = Arc::new(ShiftedDrift {
                inner: base.k2.clone(),
                shift: 1.0 / f64::from(n),
            });
            (format!("n={n}"), v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub paths: usize,
    /// Largest `|U(t) - x(t)|` over nodes and paths.
    pub max_abs_diff: f64,
    pub mean_terminal: f64,
    pub oracle_mean_terminal: f64,
    pub second_moment_terminal: f64,
    pub oracle_second_moment_terminal: f64,
    pub max_iters: usize,
    pub all_converged: bool,
}

/// Scalar forward recursion for the one-sided crisp equation
/// `x(t) = φ(t) + ∫g₂K₂ds + ∫h₂L₂dB₂`, summed in the solver's order.
pub fn scalar_reference(spec: &ProblemSpec, b2: &[f64]) -> Result<Vec<f64>, ExperimentError> {
    let grid = spec.grid;
    let alpha = &spec.alpha;
    let crisp = |u: &FuzzyNumber, what: &str| {
        crisp_value(u).ok_or_else(|| ExperimentError::InvalidArgument(format!("{what} is not crisp")))
    };
    let phi: Vec<f64> = (0..grid.n_nodes())
        .map(|i| crisp(&spec.phi.at(grid.time(i), alpha), "initial value"))
        .collect::<Result<_, _>>()?;
    let mut x = phi.clone();
    let mut k = Vec::with_capacity(grid.n_main);
    let mut l = Vec::with_capacity(grid.n_main);
    for j in 0..=grid.n_main {
        let node = grid.main_index(j);
        if j > 0 {
            let t = grid.main_time(j);
            let mut drift = 0.0;
            let mut ito = 0.0;
            for q in 0..j {
                let s = grid.main_time(q);
                drift += spec.g2.eval(t, s) * grid.dt * k[q];
                ito += spec.h2.eval(t, s) * l[q] * (b2[q + 1] - b2[q]);
            }
            x[node] = (phi[node] + drift) + (ito - 0.0);
        }
        let cur = FuzzyNumber::embed(x[node], alpha).map_err(SolveError::from)?;
        let del = FuzzyNumber::embed(x[node - grid.tau_steps()], alpha).map_err(SolveError::from)?;
        k.push(crisp(&spec.k2.eval(&cur, &del), "drift value")?);
        l.push(spec.l2.eval(&cur, &del));
    }
    Ok(x)
}

/// Solver against [`scalar_reference`] on the same Brownian pairs.
pub fn crisp_oracle_compare(
    spec: &ProblemSpec,
    paths: usize,
    seed: u64,
    stop: &StoppingRule,
) -> Result<OracleReport, ExperimentError> {
    let horizon = spec.grid.horizon();
    if kernel_sup_norm(spec.g1.as_ref(), horizon) != 0.0 || kernel_sup_norm(spec.h1.as_ref(), horizon) != 0.0 {
        return Err(ExperimentError::InvalidArgument(
            "the crisp reduction needs g1 = 0 and h1 = 0".into(),
        ));
    }
    if !spec.initial_path().is_crisp() {
        return Err(ExperimentError::InvalidArgument("initial value is not crisp".into()));
    }
    let solver = Solver::new(spec);
    let grid = spec.grid;
    let rows = map_paths(paths, |p| -> Result<(f64, f64, f64, usize, bool), ExperimentError> {
        let b = spec.sample_brownian(SeedSpec::new(seed, p as u64))?;
        let r = solver.solve(&b, stop, None, SolveOptions::default(), |_, _| {})?;
        if !r.solution.is_crisp() {
            return Err(ExperimentError::InvalidArgument("drift is not crisp-valued".into()));
        }
        let x = scalar_reference(spec, &b.b2)?;
        let diff = r
            .solution
            .values()
            .iter()
            .zip(&x)
            .map(|(u, x)| (u.core().lo - x).abs())
            .fold(0.0, f64::max);
        let last = grid.n_nodes() - 1;
        Ok((diff, r.solution.at(last).core().lo, x[last], r.n_iters, r.converged))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&(f64, f64, f64, usize, bool)) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Ok(OracleReport {
        paths,
        max_abs_diff: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        mean_terminal: mean(&|r| r.1),
        oracle_mean_terminal: mean(&|r| r.2),
        second_moment_terminal: mean(&|r| r.1 * r.1),
        oracle_second_moment_terminal: mean(&|r| r.2 * r.2),
        max_iters: rows.iter().map(|r| r.3).max().unwrap_or(0),
        all_converged: rows.iter().all(|r| r.4),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub n: usize,
    /// `sup_t E‖Uⁿ(t)‖²`.
    pub sup_moment: f64,
    pub envelope: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    pub rows: Vec<MomentRow>,
    pub envelope: MomentEnvelope,
    /// Largest `sup_t E‖Uⁿ(t)‖²` over all `n`.
    pub uniform_cap: f64,
    /// Sampled growth quotient of the drifts against the `C` in use.
    pub sampled_growth: f64,
    pub c: f64,
    pub failed_paths: usize,
}

/// `sup_t E‖Uⁿ(t)‖²` for `n = 0..=n_max` against the envelope
/// `M₅·exp(M₄T̃)`.
pub fn moment_bound_study(
    spec: &ProblemSpec,
    n_max: usize,
    paths: usize,
    seed: u64,
) -> Result<MomentTable, ExperimentError> {
    let bc = bound_constants(spec)?;
    let envelope = bc.moment_envelope();
    let mut opts = EnsembleOptions::new(paths, seed);
    opts.stop = StoppingRule::fixed(n_max);
    opts.track_moments = true;
    let report = run_ensemble(spec, &opts)?;
    let sup_moments = report.sup_moments().unwrap_or_default();
    let rows: Vec<MomentRow> = sup_moments
        .iter()
        .enumerate()
        .map(|(n, &m)| MomentRow {
            n,
            sup_moment: m,
            envelope: envelope.value,
            within: m <= envelope.value,
        })
        .collect();
    let sampled_growth = [spec.k1.as_ref(), spec.k2.as_ref()]
        .into_iter()
        .map(|k| sample_drift_constant(k, &spec.alpha))
        .fold(0.0, f64::max);
    Ok(MomentTable {
        uniform_cap: sup(&sup_moments),
        rows,
        envelope,
        sampled_growth,
        c: bc.c,
        failed_paths: report.failures.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{ConstantDiffusion, ConstantKernel, LinearDrift, TriangularInitial};
    use crate::fuzzy::AlphaGrid;
    use crate::paths::make_grid;

    fn base() -> ProblemSpec {
        let mut spec = ProblemSpec::new(
            make_grid(0.25, 1.0, 1.0 / 32.0).unwrap(),
            AlphaGrid::uniform(4).unwrap(),
            Arc::new(TriangularInitial {
                center: 1.0,
                left: 0.5,
                right: 0.5,
            }),
        );
        spec.g2 = Arc::new(ConstantKernel(1.0));
        spec.k2 = Arc::new(LinearDrift {
            a: 0.5,
            b: 0.3,
            shift: 0.0,
        });
        spec.h2 = Arc::new(ConstantKernel(1.0));
        spec.l2 = Arc::new(ConstantDiffusion(0.3));
        spec.rho = 0.3;
        spec.lipschitz_c = Some(0.34);
        spec
    }

    #[test]
    fn identical_initial_value_gives_zero_distance() {
        let b = base();
        let sweep = PerturbationSweep::new(b.clone(), 6, 1).with_variant("same", b.clone());
        let r = initial_value_sweep(&sweep).unwrap();
        assert_eq!(r.variants[0].output.mean, 0.0);
        assert_eq!(r.variants[0].ratio, 0.0);
    }

    #[test]
    fn shifted_initial_value_is_within_cap() {
        let b = base();
        let mut sweep = PerturbationSweep::new(b.clone(), 6, 2);
        sweep.variants = shifted_initial_variants(&b, &[0.1, 0.05]);
        let r = initial_value_sweep(&sweep).unwrap();
        for v in &r.variants {
            assert_eq!(v.pass, Some(true));
            assert!(v.output.mean > 0.0);
            assert!((v.output_pre.mean - v.input_distance).abs() < 1e-15);
        }
        assert!(r.variants[1].output.mean < r.variants[0].output.mean);
    }

    #[test]
    fn sweeps_reject_foreign_changes() {
        let b = base();
        let bad = scaled_g2_variants(&b, &[1]);
        let mut sweep = PerturbationSweep::new(b.clone(), 2, 0);
        sweep.variants = bad;
        assert!(matches!(initial_value_sweep(&sweep), Err(ExperimentError::InvalidSweep(_))));
        sweep.variants = shifted_initial_variants(&b, &[0.1]);
        assert!(matches!(coefficient_sweep(&sweep), Err(ExperimentError::InvalidSweep(_))));
        let mut moved = b.clone();
        moved.rho = 0.5;
        sweep.variants = vec![("rho".into(), moved)];
        assert!(matches!(coefficient_sweep(&sweep), Err(ExperimentError::InvalidSweep(_))));
    }

    #[test]
    fn identical_coefficients_give_zero_aggregate() {
        let b = base();
        let sweep = PerturbationSweep::new(b.clone(), 4, 3).with_variant("same", b.clone());
        let r = coefficient_sweep(&sweep).unwrap();
        assert_eq!(r.variants[0].input_distance, 0.0);
        assert_eq!(r.variants[0].output.mean, 0.0);
    }

    #[test]
    fn aggregate_shrinks_quadratically() {
        let b = base();
        let mut sweep = PerturbationSweep::new(b.clone(), 4, 3);
        sweep.variants = scaled_g2_variants(&b, &[1, 2, 4]);
        let r = coefficient_sweep(&sweep).unwrap();
        let a: Vec<f64> = r.variants.iter().map(|v| v.input_distance).collect();
        // g₂ scaled by 1/n enters squared
        assert!((a[0] / a[1] - 4.0).abs() < 1e-9, "{a:?}");
        assert!((a[1] / a[2] - 4.0).abs() < 1e-9, "{a:?}");
        assert_eq!(r.variants[0].probes.len(), 2);
    }

    #[test]
    fn telescoping_noise_case_matches_brownian_path() {
        let mut spec = ProblemSpec::new(
            make_grid(0.0, 1.0, 1.0 / 16.0).unwrap(),
            AlphaGrid::uniform(2).unwrap(),
            Arc::new(TriangularInitial::crisp(0.5)),
        );
        spec.h2 = Arc::new(ConstantKernel(1.0));
        spec.l2 = Arc::new(ConstantDiffusion(1.0));
        let b = spec.sample_brownian(SeedSpec::new(9, 0)).unwrap();
        let x = scalar_reference(&spec, &b.b2).unwrap();
        for (j, v) in x.iter().enumerate() {
            assert!((v - (0.5 + b.b2[j])).abs() < 1e-12);
        }
        let r = crisp_oracle_compare(&spec, 3, 9, &StoppingRule::default()).unwrap();
        assert!(r.max_abs_diff < 1e-12);
    }

    #[test]
    fn oracle_rejects_fuzzy_specs() {
        let b = base();
        assert!(matches!(
            crisp_oracle_compare(&b, 1, 0, &StoppingRule::default()),
            Err(ExperimentError::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_coefficients_keep_initial_moment() {
        let spec = ProblemSpec::new(
            make_grid(0.25, 1.0, 0.125).unwrap(),
            AlphaGrid::default(),
            Arc::new(TriangularInitial {
                center: -1.0,
                left: 1.0,
                right: 0.5,
            }),
        );
        let t = moment_bound_study(&spec, 3, 4, 0).unwrap();
        assert_eq!(t.rows.len(), 4);
        for row in &t.rows {
            assert_eq!(row.sup_moment, 4.0);
            assert!(row.within);
        }
    }
}
