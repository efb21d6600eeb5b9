use std::sync::Arc;

use super::*;
use crate::coeffs::{
    ConstantDiffusion, ConstantDrift, ConstantKernel, LinearDrift, LinearMidDiffusion,
    TriangularInitial,
};
use crate::integrals::FnDrift;

fn grid(tau: f64, horizon: f64, dt: f64) -> TimeGrid {
    make_grid(tau, horizon, dt).unwrap()
}

fn crisp_linear(dt: f64) -> ProblemSpec {
    let mut spec = ProblemSpec::new(
        grid(0.5, 1.0, dt),
        AlphaGrid::default(),
        Arc::new(TriangularInitial::crisp(1.0)),
    );
    spec.g2 = Arc::new(ConstantKernel(1.0));
    spec.k2 = Arc::new(LinearDrift {
        a: 1.0,
        b: 0.0,
        shift: 0.0,
    });
    spec.lipschitz_c = Some(1.0);
    spec
}

fn engineered_failure() -> ProblemSpec {
    let mut spec = ProblemSpec::new(
        grid(0.25, 1.0, 0.125),
        AlphaGrid::default(),
        Arc::new(TriangularInitial::crisp(0.0)),
    );
    spec.g1 = Arc::new(ConstantKernel(1.0));
    spec.k1 = Arc::new(ConstantDrift {
        center: 0.0,
        left: 1.0,
        right: 1.0,
    });
    spec
}

fn fuzzy_spec() -> ProblemSpec {
    let mut spec = ProblemSpec::new(
        grid(0.25, 1.0, 1.0 / 64.0),
        AlphaGrid::default(),
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
    spec.g1 = Arc::new(ConstantKernel(0.5));
    spec.k1 = Arc::new(LinearDrift {
        a: 0.4,
        b: 0.0,
        shift: 0.0,
    });
    spec.h2 = Arc::new(ConstantKernel(1.0));
    spec.l2 = Arc::new(LinearMidDiffusion {
        a: 0.2,
        b: 0.0,
        c: 0.1,
    });
    spec.h1 = Arc::new(ConstantKernel(0.5));
    spec.l1 = Arc::new(ConstantDiffusion(0.2));
    spec.rho = 0.3;
    spec
}

#[test]
fn zero_coefficients_converge_in_one_iteration() {
    let spec = ProblemSpec::new(
        grid(0.5, 1.0, 0.25),
        AlphaGrid::default(),
        Arc::new(TriangularInitial {
            center: 2.0,
            left: 1.0,
            right: 0.5,
        }),
    );
    let b = spec.sample_brownian(SeedSpec::new(1, 0)).unwrap();
    let r = solve_path(&spec, &b, &StoppingRule::default()).unwrap();
    assert_eq!(r.succ_diff, vec![0.0]);
    assert_eq!(r.n_iters, 1);
    assert!(r.converged);
    assert_eq!(r.solution, spec.initial_path());
}

#[test]
fn symmetric_terms_cancel() {
    let mut spec = fuzzy_spec();
    spec.g1 = spec.g2.clone();
    spec.k1 = spec.k2.clone();
    spec.h1 = spec.h2.clone();
    spec.l1 = spec.l2.clone();
    spec.rho = 1.0;
    let b = spec.sample_brownian(SeedSpec::new(2, 0)).unwrap();
    let phi = spec.initial_path();
    let out = picard_step(&phi, &spec, &b).unwrap();
    assert!(out.sup_distance(&phi) < 1e-12);
}

#[test]
fn crisp_linear_tracks_the_discrete_fixed_point() {
    let dt = 1.0 / 64.0;
    let spec = crisp_linear(dt);
    let b = spec.sample_brownian(SeedSpec::new(0, 0)).unwrap();
    let solver = Solver::new(&spec);
    let mut worst = Vec::new();
    solver
        .solve(&b, &StoppingRule::fixed(12), None, SolveOptions::default(), |n, u| {
            let mut w = 0.0f64;
            for j in 0..=spec.grid.n_main {
                let t = spec.grid.main_time(j);
                let exact = (1.0 + dt).powi(j as i32);
                let err = (u.at_main(j).core().lo - exact).abs();
                let cap = t.powi(n as i32) / (1..=n).map(|i| i as f64).product::<f64>() * t.exp();
                w = w.max(err - cap);
            }
            worst.push(w);
        })
        .unwrap();
    assert!(worst.iter().all(|&w| w <= 1e-12), "{worst:?}");
}

#[test]
fn crisp_linear_converges_to_the_exponential() {
    let spec = crisp_linear(1.0 / 256.0);
    let b = spec.sample_brownian(SeedSpec::new(0, 0)).unwrap();
    let r = solve_path(&spec, &b, &StoppingRule::default()).unwrap();
    assert!(r.converged);
    let last = spec.grid.n_main;
    let err = (r.solution.at_main(last).core().lo - 1f64.exp()).abs();
    // left sums undershoot by about t·eᵗ·dt/2
    assert!(err < 1f64.exp() / 256.0, "{err}");
    assert!(r.solution.is_crisp());
}

#[test]
fn engineered_failure_is_reported_at_first_main_node() {
    let spec = engineered_failure();
    let b = spec.sample_brownian(SeedSpec::new(3, 0)).unwrap();
    match solve_path(&spec, &b, &StoppingRule::default()) {
        Err(SolveError::Hukuhara(f)) => {
            assert_eq!(f.iteration, 1);
            assert_eq!(f.node, spec.grid.n_pre + 1);
            assert_eq!(f.time, spec.grid.dt);
            assert_eq!(f.level, 0);
            assert!(f.deficit > 0.0);
        }
        other => panic!("expected a Hukuhara failure, got {other:?}"),
    }
}

#[test]
fn retry_logs_each_refinement() {
    let spec = engineered_failure();
    let seed = SeedSpec::new(3, 0);
    let b = spec.sample_brownian(seed).unwrap();
    let err = solve_path_with_retry(&spec, &b, &StoppingRule::default(), seed, 2, SolveOptions::default()).unwrap_err();
    match err {
        SolveError::Hukuhara(f) => assert_eq!(f.time, spec.grid.dt / 4.0),
        other => panic!("{other:?}"),
    }
    let ok = fuzzy_spec();
    let b = ok.sample_brownian(seed).unwrap();
    let r = solve_path_with_retry(&ok, &b, &StoppingRule::default(), seed, 2, SolveOptions::default()).unwrap();
    assert!(r.hukuhara_failures.is_empty());
    assert!(r.converged);
}

#[test]
fn pre_segment_is_pinned_in_every_iterate() {
    let spec = fuzzy_spec();
    let b = spec.sample_brownian(SeedSpec::new(4, 0)).unwrap();
    let solver = Solver::new(&spec);
    let phi = spec.initial_path();
    let r = solver
        .solve(
            &b,
            &StoppingRule::default(),
            None,
            SolveOptions {
                keep_iterates: true,
            },
            |_, _| {},
        )
        .unwrap();
    assert!(r.converged);
    let kept = r.iterates_kept.unwrap();
    assert_eq!(kept.len(), r.n_iters);
    for u in &kept {
        assert_eq!(&u.values()[..=spec.grid.n_pre], &phi.values()[..=spec.grid.n_pre]);
        for v in u.values() {
            v.validate().unwrap();
        }
    }
}

#[test]
fn fixed_point_is_stable_at_tolerance() {
    let spec = fuzzy_spec();
    let b = spec.sample_brownian(SeedSpec::new(5, 0)).unwrap();
    let stop = StoppingRule::default();
    let r = solve_path(&spec, &b, &stop).unwrap();
    let again = picard_step(&r.solution, &spec, &b).unwrap();
    assert!(again.sup_distance(&r.solution) < stop.tol);
}

#[test]
fn different_starts_reach_the_same_solution() {
    let spec = fuzzy_spec();
    let b = spec.sample_brownian(SeedSpec::new(6, 0)).unwrap();
    let stop = StoppingRule::default();
    let solver = Solver::new(&spec);
    let a = solver.solve(&b, &stop, None, SolveOptions::default(), |_, _| {}).unwrap();
    let start = shifted_after_origin(&spec.initial_path(), 1.0);
    let c = solver
        .solve(&b, &stop, Some(&start), SolveOptions::default(), |_, _| {})
        .unwrap();
    assert!(a.converged && c.converged);
    assert!(a.solution.sup_distance(&c.solution) < 10.0 * stop.tol);
}

#[test]
fn crisp_inputs_keep_iterates_crisp() {
    let mut spec = crisp_linear(1.0 / 32.0);
    spec.h2 = Arc::new(ConstantKernel(1.0));
    spec.l2 = Arc::new(LinearMidDiffusion {
        a: 0.3,
        b: 0.1,
        c: 0.2,
    });
    let b = spec.sample_brownian(SeedSpec::new(7, 0)).unwrap();
    Solver::new(&spec)
        .solve(&b, &StoppingRule::fixed(5), None, SolveOptions::default(), |_, u| {
            assert!(u.is_crisp());
        })
        .unwrap();
}

#[test]
fn grid_mismatch_is_rejected() {
    let spec = fuzzy_spec();
    let other = spec.with_dt(1.0 / 32.0).unwrap();
    let b = other.sample_brownian(SeedSpec::new(0, 0)).unwrap();
    assert_eq!(
        picard_step(&spec.initial_path(), &spec, &b).unwrap_err(),
        SolveError::GridMismatch
    );
}

#[test]
fn bound_constants_examples() {
    let mut spec = ProblemSpec::new(
        grid(0.0, 1.0, 0.25),
        AlphaGrid::default(),
        Arc::new(TriangularInitial::crisp(0.0)),
    );
    spec.lipschitz_c = Some(1.0);
    let zero = bound_constants(&spec).unwrap();
    assert_eq!(zero.zeta, 0.0);
    assert_eq!(zero.cz_bound(3, 1.0), 0.0);

    for k in [&mut spec.g1, &mut spec.g2, &mut spec.h1, &mut spec.h2] {
        *k = Arc::new(ConstantKernel(1.0));
    }
    let bc = bound_constants(&spec).unwrap();
    assert_eq!(bc.zeta, 40.0);
    assert_eq!(bc.xi, 40.0);
    assert_eq!(bc.c_source, CSource::Explicit);
    // (ξ/2ζ)(2ζt)ⁿ/n! at n = 2, t = 1: 0.5·80²/2
    assert!((bc.cz_bound(2, 1.0) - 1600.0).abs() < 1e-9);
    assert_eq!(bc.with_zeta(20.0).cz_bound(1, 1.0), bc.cz_bound(1, 1.0));
    assert_eq!(bc.gamma(), 50.0);
}

#[test]
fn lipschitz_resolution_order() {
    let mut spec = fuzzy_spec();
    let (c, src) = bounds::resolve_lipschitz(&spec).unwrap();
    assert_eq!(src, CSource::Analytic);
    // largest closed-form constant is K₂'s 0.5² + 0.3²
    assert!((c - 0.34).abs() < 1e-15);

    spec.k2 = Arc::new(FnDrift(|u: &FuzzyNumber, _v: &FuzzyNumber| u.scaled(0.5)));
    let (c, src) = bounds::resolve_lipschitz(&spec).unwrap();
    assert_eq!(src, CSource::Sampled);
    // 1.5 × a sampled quotient of at most 0.25, never below K₁'s 0.16
    assert!((0.16..=0.375).contains(&c), "{c}");

    spec.estimate_c = false;
    assert!(matches!(
        bounds::resolve_lipschitz(&spec),
        Err(SolveError::Config(_))
    ));
    spec.lipschitz_c = Some(2.0);
    assert_eq!(bounds::resolve_lipschitz(&spec).unwrap(), (2.0, CSource::Explicit));
}

#[test]
fn ensemble_is_reproducible_and_ordered() {
    let spec = fuzzy_spec();
    let mut opts = EnsembleOptions::new(8, 11);
    opts.track_moments = true;
    let a = run_ensemble(&spec, &opts).unwrap();
    let b = run_ensemble(&spec, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.completed, 8);
    assert_eq!(a.sup_d2_mean.len(), a.n_max);
    let m = a.moment_mean.as_ref().unwrap();
    assert_eq!(m.len(), a.n_max + 1);
    let phi_sup = a.bound.as_ref().unwrap().phi_sup_sq;
    assert!((a.sup_moments().unwrap()[0] - phi_sup).abs() < 1e-12);
}

#[test]
fn cz_check_needs_enough_paths() {
    let spec = fuzzy_spec();
    let r = run_ensemble(&spec, &EnsembleOptions::new(4, 1)).unwrap();
    let bc = r.bound.clone().unwrap();
    assert!(matches!(check_cz_bound(&r, &bc), Err(SolveError::Config(_))));
}
