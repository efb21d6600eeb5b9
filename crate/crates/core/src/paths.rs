//! Time grids over `[-τ, T̃]` and seeded, correlated Brownian pairs.
//!
//! Randomness comes from ChaCha8 keyed by a 64-bit seed, with the
//! `stream_id` selecting an independent ChaCha stream. The same
//! [`SeedSpec`] always yields a bit-identical path.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const COMMENSURABILITY_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Uniform grid on `[-τ, T̃]` with `τ = n_pre·dt` and `T̃ = n_main·dt`.
///
/// Node `i` sits at time `(i - n_pre)·dt`; node `n_pre` is `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_pre: usize,
    pub n_main: usize,
}

fn integral_steps(len: f64, dt: f64, what: &str) -> Result<usize, PathError> {
    let ratio = len / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > COMMENSURABILITY_RTOL * steps.max(1.0) {
        return Err(PathError::InvalidGrid(format!(
            "{what} = {len} is not a whole multiple of dt = {dt} (ratio {ratio})"
        )));
    }
    Ok(steps as usize)
}

/// Builds the grid for retardation `tau`, horizon `horizon` and step `dt`.
///
/// Both `tau` and `horizon` must be whole multiples of `dt`; nothing is
/// rounded silently.
pub fn make_grid(tau: f64, horizon: f64, dt: f64) -> Result<TimeGrid, PathError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(PathError::InvalidGrid(format!("dt must be positive, got {dt}")));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(PathError::InvalidGrid(format!(
            "retardation must be nonnegative, got {tau}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(PathError::InvalidGrid(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let n_pre = integral_steps(tau, dt, "tau")?;
    let n_main = integral_steps(horizon, dt, "horizon")?;
    if n_main == 0 {
        return Err(PathError::InvalidGrid("horizon shorter than one step".into()));
    }
    Ok(TimeGrid { dt, n_pre, n_main })
}

impl TimeGrid {
    pub fn tau(&self) -> f64 {
        self.n_pre as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.n_main as f64 * self.dt
    }

    /// `t0 = -τ`.
    pub fn t_start(&self) -> f64 {
        -self.tau()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_pre + self.n_main + 1
    }

    /// Time of global node `i`.
    pub fn time(&self, i: usize) -> f64 {
        (i as f64 - self.n_pre as f64) * self.dt
    }

    /// Time of main-segment node `j`, i.e. `j·dt`.
    pub fn main_time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    /// Global index of main-segment node `j`.
    pub fn main_index(&self, j: usize) -> usize {
        self.n_pre + j
    }

    /// Delay measured in grid steps.
    pub fn tau_steps(&self) -> usize {
        self.n_pre
    }

    /// Main-segment node closest to time `t`, if `t ∈ [0, T̃]`.
    pub fn main_node_at(&self, t: f64) -> Option<usize> {
        if !(0.0..=self.horizon() + 0.5 * self.dt).contains(&t) {
            return None;
        }
        let j = (t / self.dt).round() as usize;
        (j <= self.n_main).then_some(j)
    }

    /// Same interval with half the step.
    pub fn refined(&self) -> TimeGrid {
        TimeGrid {
            dt: 0.5 * self.dt,
            n_pre: 2 * self.n_pre,
            n_main: 2 * self.n_main,
        }
    }
}

/// Seed plus substream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Seed for the `level`-th Brownian-bridge refinement of this stream.
    pub fn refinement(&self, level: u32) -> SeedSpec {
        SeedSpec {
            seed: self
                .seed
                .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(u64::from(level) + 1)),
            stream_id: self.stream_id,
        }
    }
}

/// Two Brownian paths on the main segment `[0, T̃]` whose increments have
/// correlation `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPair {
    pub grid: TimeGrid,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub rho: f64,
}

fn check_rho(rho: f64) -> Result<(), PathError> {
    if !(rho.is_finite() && (-1.0..=1.0).contains(&rho)) {
        return Err(PathError::InvalidArgument(format!(
            "correlation must lie in [-1, 1], got {rho}"
        )));
    }
    Ok(())
}

/// Samples `(B₁, B₂)` on the main segment of `grid`.
///
/// Per step, `ΔB₁ = √dt·ξ` and `ΔB₂ = √dt·(ρξ + √(1-ρ²)η)` with `ξ, η`
/// drawn in that order from the seeded stream.
pub fn sample_brownian_pair(
    grid: &TimeGrid,
    rho: f64,
    seed: SeedSpec,
) -> Result<BrownianPair, PathError> {
    check_rho(rho)?;
    let mut rng = seed.rng();
    let sqrt_dt = grid.dt.sqrt();
    let rho_perp = (1.0 - rho * rho).sqrt();
    let n = grid.n_main;
    let mut b1 = Vec::with_capacity(n + 1);
    let mut b2 = Vec::with_capacity(n + 1);
    b1.push(0.0);
    b2.push(0.0);
    for k in 0..n {
        let xi: f64 = rng.sample(StandardNormal);
        let eta: f64 = rng.sample(StandardNormal);
        b1.push(b1[k] + sqrt_dt * xi);
        b2.push(b2[k] + sqrt_dt * (rho * xi + rho_perp * eta));
    }
    Ok(BrownianPair { grid: *grid, b1, b2, rho })
}

impl BrownianPair {
    /// Increment `B₁(s_{k+1}) - B₁(s_k)`.
    pub fn db1(&self, k: usize) -> f64 {
        self.b1[k + 1] - self.b1[k]
    }

    pub fn db2(&self, k: usize) -> f64 {
        self.b2[k + 1] - self.b2[k]
    }

    /// Brownian-bridge refinement onto the grid with half the step.
    ///
    /// Existing nodes keep their values; each new midpoint is the average of
    /// its neighbours plus an independent `N(0, dt/4)` perturbation, with the
    /// pair's correlation carried into the perturbations.
    pub fn refine(&self, seed: SeedSpec) -> BrownianPair {
        let mut rng = seed.rng();
        let grid = self.grid.refined();
        let half_sd = (0.25 * self.grid.dt).sqrt();
        let rho_perp = (1.0 - self.rho * self.rho).sqrt();
        let n = self.grid.n_main;
        let mut b1 = Vec::with_capacity(2 * n + 1);
        let mut b2 = Vec::with_capacity(2 * n + 1);
        for k in 0..n {
            let xi: f64 = rng.sample(StandardNormal);
            let eta: f64 = rng.sample(StandardNormal);
            b1.push(self.b1[k]);
            b2.push(self.b2[k]);
            b1.push(0.5 * (self.b1[k] + self.b1[k + 1]) + half_sd * xi);
            b2.push(
                0.5 * (self.b2[k] + self.b2[k + 1]) + half_sd * (self.rho * xi + rho_perp * eta),
            );
        }
        b1.push(self.b1[n]);
        b2.push(self.b2[n]);
        BrownianPair {
            grid,
            b1,
            b2,
            rho: self.rho,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn grid_examples() {
        let g = make_grid(0.5, 1.0, 0.25).unwrap();
        assert_eq!((g.n_pre, g.n_main), (2, 4));
        assert_eq!(g.n_nodes(), 7);
        assert_eq!(g.time(0), -0.5);
        assert_eq!(g.time(2), 0.0);
        assert_eq!(g.time(6), 1.0);

        let g0 = make_grid(0.0, 1.0, 0.5).unwrap();
        assert_eq!(g0.n_pre, 0);

        assert!(matches!(make_grid(0.3, 1.0, 0.25), Err(PathError::InvalidGrid(_))));
        assert!(make_grid(0.25, 1.1, 0.25).is_err());
        assert!(make_grid(0.25, 1.0, 0.0).is_err());
        assert!(make_grid(-0.25, 1.0, 0.25).is_err());
    }

    #[test]
    fn grid_accepts_float_noise_in_ratio() {
        let g = make_grid(0.3, 0.9, 0.1).unwrap();
        assert_eq!((g.n_pre, g.n_main), (3, 9));
    }

    #[test]
    fn grid_lookup_and_refinement() {
        let g = make_grid(0.25, 1.0, 1.0 / 256.0).unwrap();
        assert_eq!(g.main_node_at(0.5), Some(128));
        assert_eq!(g.main_node_at(1.0), Some(256));
        assert_eq!(g.main_node_at(1.5), None);
        let r = g.refined();
        assert_eq!(r.tau(), g.tau());
        assert_eq!(r.horizon(), g.horizon());
    }

    #[test]
    fn same_seed_same_path() {
        let g = make_grid(0.25, 1.0, 0.01).unwrap();
        let a = sample_brownian_pair(&g, 0.3, SeedSpec::new(7, 3)).unwrap();
        let b = sample_brownian_pair(&g, 0.3, SeedSpec::new(7, 3)).unwrap();
        assert_eq!(a, b);
        let c = sample_brownian_pair(&g, 0.3, SeedSpec::new(7, 4)).unwrap();
        assert_ne!(a.b1, c.b1);
        assert_eq!(a.b1[0], 0.0);
        assert_eq!(a.b2[0], 0.0);
        assert_eq!(a.b1.len(), g.n_main + 1);
    }

    #[test]
    fn perfect_correlation_gives_identical_paths() {
        let g = make_grid(0.0, 1.0, 0.01).unwrap();
        let p = sample_brownian_pair(&g, 1.0, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(p.b1, p.b2);
    }

    #[test]
    fn rho_out_of_range() {
        let g = make_grid(0.0, 1.0, 0.5).unwrap();
        assert!(sample_brownian_pair(&g, 1.5, SeedSpec::new(0, 0)).is_err());
        assert!(sample_brownian_pair(&g, f64::NAN, SeedSpec::new(0, 0)).is_err());
    }

    #[test]
    fn terminal_moments_over_many_paths() {
        // 10^5 paths on dt = 0.01, T̃ = 1
        let g = make_grid(0.0, 1.0, 0.01).unwrap();
        let n = 100_000;
        let mut t1 = Vec::with_capacity(n);
        let mut t2 = Vec::with_capacity(n);
        for p in 0..n {
            let bp = sample_brownian_pair(&g, 0.0, SeedSpec::new(2024, p as u64)).unwrap();
            t1.push(bp.b1[g.n_main]);
            t2.push(bp.b2[g.n_main]);
        }
        let (m1, v1) = mean_var(&t1);
        let (m2, v2) = mean_var(&t2);
        let cov = t1.iter().zip(&t2).map(|(a, b)| (a - m1) * (b - m2)).sum::<f64>() / (n as f64 - 1.0);
        let corr = cov / (v1 * v2).sqrt();
        let clt = 3.0 / (n as f64).sqrt();
        assert!(corr.abs() < clt, "corr {corr}");
        assert!((v1 - 1.0).abs() < 0.02, "var {v1}");
        assert!((v2 - 1.0).abs() < 0.02, "var {v2}");
    }

    #[test]
    fn correlated_increments_and_scaling() {
        let g = make_grid(0.0, 1.0, 1.0 / 64.0).unwrap();
        let n = 20_000;
        let k = 16;
        let rho = -0.6;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for p in 0..n {
            let bp = sample_brownian_pair(&g, rho, SeedSpec::new(99, p as u64)).unwrap();
            x.push(bp.b1[k]);
            y.push(bp.b2[k]);
        }
        let (mx, vx) = mean_var(&x);
        let (my, vy) = mean_var(&y);
        let expected = k as f64 * g.dt;
        // Var of sample variance for Gaussians is 2σ⁴/(n-1)
        let sd_v = (2.0 / (n as f64 - 1.0)).sqrt() * expected;
        assert!((vx - expected).abs() < 5.0 * sd_v);
        assert!((vy - expected).abs() < 5.0 * sd_v);
        let corr = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
            / (n as f64 - 1.0)
            / (vx * vy).sqrt();
        let sd_r = (1.0 - rho * rho) / (n as f64).sqrt();
        assert!((corr - rho).abs() < 5.0 * sd_r, "corr {corr}");
    }

    #[test]
    fn substreams_are_uncorrelated() {
        let g = make_grid(0.0, 1.0, 0.05).unwrap();
        let n = 20_000;
        let a: Vec<f64> = (0..n)
            .map(|p| sample_brownian_pair(&g, 0.0, SeedSpec::new(5, 2 * p)).unwrap().b1[g.n_main])
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|p| sample_brownian_pair(&g, 0.0, SeedSpec::new(5, 2 * p + 1)).unwrap().b1[g.n_main])
            .collect();
        let (ma, va) = mean_var(&a);
        let (mb, vb) = mean_var(&b);
        let corr = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>()
            / (n as f64 - 1.0)
            / (va * vb).sqrt();
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn refinement_keeps_coarse_nodes() {
        let g = make_grid(0.25, 1.0, 0.125).unwrap();
        let bp = sample_brownian_pair(&g, 0.4, SeedSpec::new(3, 1)).unwrap();
        let fine = bp.refine(SeedSpec::new(3, 1).refinement(0));
        assert_eq!(fine.grid.n_main, 2 * g.n_main);
        for k in 0..=g.n_main {
            assert_eq!(fine.b1[2 * k], bp.b1[k]);
            assert_eq!(fine.b2[2 * k], bp.b2[k]);
        }
    }
}
