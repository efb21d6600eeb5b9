//! Randomised property suite behind the `verify-properties` mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coeffs::{ConstantDiffusion, ConstantKernel, LinearDrift, TriangularInitial};
use crate::fuzzy::{hausdorff, AlphaGrid, FuzzyNumber, Interval};
use crate::integrals::{aumann_integral, ito_integral, FuzzyPath};
use crate::paths::{make_grid, sample_brownian_pair, SeedSpec};
use crate::coeffs::InitialMap;
use crate::stats::mean_se;

pub const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyOptions {
    /// Tuples per algebraic property.
    pub cases: usize,
    /// Random interval pairs for the Hausdorff check.
    pub hausdorff_pairs: usize,
    /// Random path pairs for the integral inequalities.
    pub path_pairs: usize,
    /// Brownian paths for the isometry check.
    pub ito_paths: usize,
    pub seed: u64,
}

impl Default for PropertyOptions {
    fn default() -> Self {
        Self {
            cases: 10_000,
            hausdorff_pairs: 1_000,
            path_pairs: 1_000,
            ito_paths: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyRow {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    /// Largest excess over the allowed slack (negative when all pass).
    pub worst: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertySummary {
    pub rows: Vec<PropertyRow>,
}

impl PropertySummary {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            violations: 0,
            worst: f64::NEG_INFINITY,
        }
    }

    /// Records `lhs ≤ rhs + slack`.
    fn le(&mut self, lhs: f64, rhs: f64, slack: f64) {
        let excess = lhs - rhs - slack;
        self.cases += 1;
        self.worst = self.worst.max(excess);
        if excess > 0.0 || excess.is_nan() {
            self.violations += 1;
        }
    }

    fn eq(&mut self, a: f64, b: f64, tol: f64) {
        self.le((a - b).abs(), 0.0, tol);
    }

    fn row(self) -> PropertyRow {
        PropertyRow {
            name: self.name.to_string(),
            cases: self.cases,
            violations: self.violations,
            worst: self.worst,
            pass: self.violations == 0 && self.cases > 0,
        }
    }
}

/// Random valid fuzzy number: a core interval widened by random
/// nonnegative steps towards the support.
pub fn random_fuzzy(rng: &mut impl Rng, alpha: &AlphaGrid) -> FuzzyNumber {
    let m = alpha.len();
    let c = rng.random_range(-5.0..5.0);
    let mut cuts = vec![Interval { lo: 0.0, hi: 0.0 }; m];
    cuts[m - 1] = Interval {
        lo: c - rng.random_range(0.0..1.0),
        hi: c + rng.random_range(0.0..1.0),
    };
    for k in (0..m - 1).rev() {
        cuts[k] = Interval {
            lo: cuts[k + 1].lo - rng.random_range(0.0..0.5),
            hi: cuts[k + 1].hi + rng.random_range(0.0..0.5),
        };
    }
    FuzzyNumber::from_cuts(alpha.clone(), cuts).expect("construction is nested")
}

fn max_cut_gap(a: &FuzzyNumber, b: &FuzzyNumber) -> f64 {
    a.cuts()
        .iter()
        .zip(b.cuts())
        .map(|(x, y)| (x.lo - y.lo).abs().max((x.hi - y.hi).abs()))
        .fold(0.0, f64::max)
}

fn d(a: &FuzzyNumber, b: &FuzzyNumber) -> f64 {
    a.d_inf(b).expect("shared grid")
}

fn sub(a: &FuzzyNumber, b: &FuzzyNumber) -> FuzzyNumber {
    a.hukuhara_sub(b).expect("constructed to exist")
}

fn add(a: &FuzzyNumber, b: &FuzzyNumber) -> FuzzyNumber {
    a.add(b).expect("shared grid")
}

fn algebra(opts: &PropertyOptions, rows: &mut Vec<PropertyRow>) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let g = AlphaGrid::default();
    let zero = FuzzyNumber::zero(&g);
    let mut metric = Tally::new("metric-axioms");
    let mut p1 = Tally::new("P1");
    let mut p2 = Tally::new("P2");
    let mut p3 = Tally::new("P3");
    let mut p4 = Tally::new("P4");
    let mut p5 = Tally::new("P5");
    let mut p6 = Tally::new("P6");
    let mut p7 = Tally::new("P7");
    let mut p8 = Tally::new("P8");
    let mut trip = Tally::new("hukuhara-round-trip");
    let mut valid = Tally::new("closure-validity");
    for _ in 0..opts.cases {
        let [u, v, w, z] = std::array::from_fn(|_| random_fuzzy(&mut rng, &g));
        let r1 = rng.random_range(-10.0..10.0);
        let r2 = rng.random_range(-10.0..10.0);
        let beta = rng.random_range(-4.0..4.0);
        let e = |r: f64| FuzzyNumber::embed(r, &g).expect("finite");

        let duv = d(&u, &v);
        metric.le(-duv, 0.0, 0.0);
        metric.eq(duv, d(&v, &u), 0.0);
        metric.eq(d(&u, &u), 0.0, 0.0);
        metric.le(duv, d(&u, &w) + d(&w, &v), TOL);

        p1.le(max_cut_gap(&sub(&add(&u, &e(r1)), &e(r2)), &add(&u, &e(r1 - r2))), 0.0, TOL);

        // a = v ⊕ w has a ⊖ v; shifting keeps it
        let a = add(&v, &w);
        let lhs = add(&a, &e(r1)).hukuhara_sub(&v);
        let rhs = add(&sub(&a, &v), &e(r1));
        match lhs {
            Ok(l) => p2.le(max_cut_gap(&l, &rhs), 0.0, TOL),
            Err(_) => p2.le(1.0, 0.0, 0.0),
        }
        // ⊖ fails for u ⊖ (u ⊕ widened) in both forms
        let wide = add(&u, &FuzzyNumber::triangular(&g, 0.0, 1.0, 1.0).expect("valid"));
        let plain = u.hukuhara_sub(&wide).is_ok();
        let shifted = add(&u, &e(r1)).hukuhara_sub(&wide).is_ok();
        p2.le(f64::from(u8::from(plain != shifted)), 0.0, 0.0);

        p3.eq(d(&add(&u, &w), &add(&v, &w)), duv, TOL);
        p4.le(d(&add(&u, &v), &add(&w, &z)), d(&u, &w) + d(&v, &z), TOL);
        let bu = u.scalar_mul(beta).expect("finite");
        let bv = v.scalar_mul(beta).expect("finite");
        p5.eq(d(&bu, &bv), beta.abs() * duv, TOL);

        // x = v ⊕ a makes x ⊖ v = a exist
        let x = add(&v, &w);
        p6.eq(d(&sub(&x, &v), &zero), d(&x, &v), TOL);
        let y = add(&add(&v, &w), &z);
        p7.eq(d(&sub(&y, &v), &sub(&y, &w)), d(&v, &w), TOL);
        let q = add(&w, &u);
        p8.le(d(&sub(&x, &v), &sub(&q, &w)), d(&x, &q) + d(&v, &w), TOL);

        let s = sub(&x, &v);
        trip.le(max_cut_gap(&add(&v, &s), &x), 0.0, 0.0);

        valid.le(f64::from(u8::from(add(&u, &v).validate().is_err())), 0.0, 0.0);
        valid.le(f64::from(u8::from(bu.validate().is_err())), 0.0, 0.0);
    }
    rows.extend([metric, p1, p2, p3, p4, p5, p6, p7, p8, trip, valid].map(Tally::row));
}

/// Directed sup-inf distances between dense samples of both intervals.
fn sampled_hausdorff(a: Interval, b: Interval, n: usize) -> f64 {
    let pts = |c: Interval| -> Vec<f64> {
        (0..n).map(|i| c.lo + (c.hi - c.lo) * i as f64 / (n - 1) as f64).collect()
    };
    let (pa, pb) = (pts(a), pts(b));
    let directed = |from: &[f64], to: Interval| {
        from.iter()
            .map(|&x| {
                if x < to.lo {
                    to.lo - x
                } else if x > to.hi {
                    x - to.hi
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    };
    directed(&pa, b).max(directed(&pb, a))
}

fn hausdorff_check(opts: &PropertyOptions, rows: &mut Vec<PropertyRow>) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x4a05);
    let mut t = Tally::new("hausdorff-closed-form");
    for _ in 0..opts.hausdorff_pairs {
        let mut iv = || {
            let x: f64 = rng.random_range(-10.0..10.0);
            let y: f64 = rng.random_range(-10.0..10.0);
            Interval::new(x.min(y), x.max(y)).expect("ordered")
        };
        let (a, b) = (iv(), iv());
        t.eq(hausdorff(a, b), sampled_hausdorff(a, b, 10_000), 1e-9);
    }
    rows.push(t.row());
}

fn integral_inequalities(opts: &PropertyOptions, rows: &mut Vec<PropertyRow>) {
    let dt = 1.0 / 64.0;
    let grid = make_grid(0.0, 1.0, dt).expect("commensurate");
    let g = AlphaGrid::default();
    let kernel = ConstantKernel(1.0);
    let identity = LinearDrift {
        a: 1.0,
        b: 0.0,
        shift: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x1d7e);
    let mut pathwise = Tally::new("aumann-pathwise-bound");
    let mut sup_lhs = Vec::with_capacity(opts.path_pairs);
    let mut sup_rhs = Vec::with_capacity(opts.path_pairs);
    for case in 0..opts.path_pairs {
        let crisp = case % 2 == 0;
        let mut draw = || {
            let u = random_fuzzy(&mut rng, &g);
            if crisp {
                FuzzyNumber::embed(u.core().lo, &g).expect("finite")
            } else {
                u
            }
        };
        let xs: Vec<FuzzyNumber> = (0..grid.n_nodes()).map(|_| draw()).collect();
        let ys: Vec<FuzzyNumber> = (0..grid.n_nodes()).map(|_| draw()).collect();
        let x = FuzzyPath::new(grid, xs).expect("valid path");
        let y = FuzzyPath::new(grid, ys).expect("valid path");
        let mut acc = 0.0;
        let mut worst_lhs = 0.0f64;
        for j in 0..=grid.n_main {
            let t = grid.main_time(j);
            let ix = aumann_integral(j, &kernel, &identity, &x, 0).expect("in range");
            let iy = aumann_integral(j, &kernel, &identity, &y, 0).expect("in range");
            let lhs = d(&ix, &iy).powi(2);
            // slack 2·dt·L with L = 1 for the identity drift
            pathwise.le(lhs, t * acc, 2.0 * dt);
            worst_lhs = worst_lhs.max(lhs);
            if j < grid.n_main {
                acc += d(x.at_main(j), y.at_main(j)).powi(2) * dt;
            }
        }
        sup_lhs.push(worst_lhs);
        sup_rhs.push(grid.horizon() * acc);
    }
    rows.push(pathwise.row());
    let mut expect = Tally::new("aumann-expected-sup-bound");
    expect.le(mean_se(&sup_lhs).mean, mean_se(&sup_rhs).mean, 2.0 * dt);
    rows.push(expect.row());
}

fn ito_isometry(opts: &PropertyOptions, rows: &mut Vec<PropertyRow>) {
    let grid = make_grid(0.0, 1.0, 1.0 / 256.0).expect("commensurate");
    let g = AlphaGrid::uniform(1).expect("valid");
    let phi = TriangularInitial::crisp(0.0);
    let path = FuzzyPath::from_fn(grid, |t| phi.at(t, &g)).expect("valid path");
    let kernel = ConstantKernel(1.0);
    let unit = ConstantDiffusion(1.0);
    let times = [0.25, 0.5, 1.0];
    let mut squares = vec![Vec::with_capacity(opts.ito_paths); times.len()];
    for p in 0..opts.ito_paths {
        let b = sample_brownian_pair(&grid, 0.0, SeedSpec::new(opts.seed, p as u64))
            .expect("valid rho");
        for (i, &t) in times.iter().enumerate() {
            let j = grid.main_node_at(t).expect("grid time");
            let v = ito_integral(j, &kernel, &unit, &path, 0, &b.b1).expect("in range");
            squares[i].push(v * v);
        }
    }
    let mut t = Tally::new("ito-isometry");
    for (i, &time) in times.iter().enumerate() {
        let r = mean_se(&squares[i]);
        t.le((r.mean - time).abs(), 3.0 * r.se, 0.0);
    }
    rows.push(t.row());
}

pub fn run_property_suite(opts: &PropertyOptions) -> PropertySummary {
    let mut rows = Vec::new();
    algebra(opts, &mut rows);
    hausdorff_check(opts, &mut rows);
    integral_inequalities(opts, &mut rows);
    ito_isometry(opts, &mut rows);
    PropertySummary { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let opts = PropertyOptions {
            cases: 300,
            hausdorff_pairs: 20,
            path_pairs: 10,
            ito_paths: 2_000,
            seed: 4,
        };
        let s = run_property_suite(&opts);
        for r in &s.rows {
            assert!(r.pass, "{r:?}");
        }
        assert_eq!(s.rows.len(), 15);
    }

    #[test]
    fn sampled_hausdorff_matches_examples() {
        let a = Interval::new(0.0, 1.0).unwrap();
        let b = Interval::new(2.0, 5.0).unwrap();
        assert!((sampled_hausdorff(a, b, 10_001) - 4.0).abs() < 1e-12);
        assert_eq!(sampled_hausdorff(a, a, 100), 0.0);
    }
}
