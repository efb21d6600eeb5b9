//! Fuzzy paths on a [`TimeGrid`] and left-endpoint discretisations of the
//! two integrals in the equation: the levelwise (Aumann) drift integral and
//! the crisp Itô integral.
//!
//! Both sums freeze the outer time `t` in the kernel and recompute the whole
//! sum for every `t`, since a Volterra kernel prevents incremental updates.

use std::fmt;

use thiserror::Error;

use crate::fuzzy::{AlphaGrid, FuzzyError, FuzzyNumber};
use crate::paths::TimeGrid;

/// Samples per axis when estimating a kernel sup norm without a hint.
pub const SUP_NORM_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegralError {
    #[error("node index out of range: {0}")]
    Index(String),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

/// Continuous kernel `(t, s) ↦ g(t, s)` on `[0, T]²`.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn eval(&self, t: f64, s: f64) -> f64;

    /// Exact `sup |g|` over `[0, T]²` when known in closed form.
    fn sup_norm_hint(&self, _horizon: f64) -> Option<f64> {
        None
    }
}

/// Fuzzy drift coefficient `K(u, v)`, `v` being the delayed value.
pub trait Drift: Send + Sync + fmt::Debug {
    fn eval(&self, current: &FuzzyNumber, delayed: &FuzzyNumber) -> FuzzyNumber;

    /// Constant `C` in `d∞²(K(u₁,v₁), K(u₂,v₂)) ≤ C(d∞²(u₁,u₂) + d∞²(v₁,v₂))`.
    fn lipschitz_sq(&self) -> Option<f64> {
        None
    }

    /// Constant `C` in `‖K(u,v)‖² ≤ C(1 + ‖u‖² + ‖v‖²)`.
    fn growth_sq(&self) -> Option<f64> {
        None
    }
}

/// Crisp diffusion coefficient `L(u, v)`.
pub trait Diffusion: Send + Sync + fmt::Debug {
    fn eval(&self, current: &FuzzyNumber, delayed: &FuzzyNumber) -> f64;

    fn lipschitz_sq(&self) -> Option<f64> {
        None
    }

    fn growth_sq(&self) -> Option<f64> {
        None
    }
}

/// Kernel backed by a closure.
pub struct FnKernel<F> {
    f: F,
    sup_norm: Option<f64>,
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> FnKernel<F> {
    pub fn new(f: F) -> Self {
        Self { f, sup_norm: None }
    }

    pub fn with_sup_norm(f: F, sup_norm: f64) -> Self {
        Self {
            f,
            sup_norm: Some(sup_norm),
        }
    }
}

impl<F> fmt::Debug for FnKernel<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnKernel").field("sup_norm", &self.sup_norm).finish()
    }
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> Kernel for FnKernel<F> {
    fn eval(&self, t: f64, s: f64) -> f64 {
        (self.f)(t, s)
    }

    fn sup_norm_hint(&self, _horizon: f64) -> Option<f64> {
        self.sup_norm
    }
}

/// Drift backed by a closure.
pub struct FnDrift<F>(pub F);

impl<F> fmt::Debug for FnDrift<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnDrift")
    }
}

impl<F> Drift for FnDrift<F>
where
    F: Fn(&FuzzyNumber, &FuzzyNumber) -> FuzzyNumber + Send + Sync,
{
    fn eval(&self, current: &FuzzyNumber, delayed: &FuzzyNumber) -> FuzzyNumber {
        (self.0)(current, delayed)
    }
}

/// Diffusion backed by a closure.
pub struct FnDiffusion<F>(pub F);

impl<F> fmt::Debug for FnDiffusion<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnDiffusion")
    }
}

impl<F> Diffusion for FnDiffusion<F>
where
    F: Fn(&FuzzyNumber, &FuzzyNumber) -> f64 + Send + Sync,
{
    fn eval(&self, current: &FuzzyNumber, delayed: &FuzzyNumber) -> f64 {
        (self.0)(current, delayed)
    }
}

/// `‖g‖_∞` over `[0, T]²`: the kernel's hint if it has one, otherwise the
/// largest magnitude on a 200×200 sample grid.
pub fn kernel_sup_norm(kernel: &dyn Kernel, horizon: f64) -> f64 {
    if let Some(hint) = kernel.sup_norm_hint(horizon) {
        return hint;
    }
    let n = SUP_NORM_SAMPLES;
    let mut best = 0.0f64;
    for i in 0..n {
        let t = horizon * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let s = horizon * j as f64 / (n - 1) as f64;
            best = best.max(kernel.eval(t, s).abs());
        }
    }
    best
}

/// One trajectory of a fuzzy process, one value per node of `[-τ, T̃]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyPath {
    grid: TimeGrid,
    alpha: AlphaGrid,
    values: Vec<FuzzyNumber>,
}

impl FuzzyPath {
    pub fn new(grid: TimeGrid, values: Vec<FuzzyNumber>) -> Result<Self, IntegralError> {
        if values.len() != grid.n_nodes() {
            return Err(IntegralError::Index(format!(
                "path needs {} values, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        let alpha = values[0].grid().clone();
        for v in &values {
            if !v.grid().same_as(&alpha) {
                return Err(FuzzyError::GridMismatch {
                    left: alpha.len(),
                    right: v.grid().len(),
                }
                .into());
            }
            v.validate().map_err(FuzzyError::from)?;
        }
        Ok(Self {
            grid,
            alpha,
            values,
        })
    }

    pub(crate) fn new_unchecked(grid: TimeGrid, alpha: AlphaGrid, values: Vec<FuzzyNumber>) -> Self {
        debug_assert_eq!(values.len(), grid.n_nodes());
        Self {
            grid,
            alpha,
            values,
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(
        grid: TimeGrid,
        mut f: impl FnMut(f64) -> FuzzyNumber,
    ) -> Result<Self, IntegralError> {
        let values = (0..grid.n_nodes()).map(|i| f(grid.time(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn alpha(&self) -> &AlphaGrid {
        &self.alpha
    }

    pub fn values(&self) -> &[FuzzyNumber] {
        &self.values
    }

    /// Value at global node `i`.
    pub fn at(&self, i: usize) -> &FuzzyNumber {
        &self.values[i]
    }

    /// Value at main-segment node `j` (time `j·dt`).
    pub fn at_main(&self, j: usize) -> &FuzzyNumber {
        &self.values[self.grid.n_pre + j]
    }

    /// Sup over all nodes of `d∞` against `other`.
    pub fn sup_distance(&self, other: &FuzzyPath) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.d_inf_unchecked(b))
            .fold(0.0, f64::max)
    }

    /// Sup of `d∞` over the global node range `range`.
    pub fn sup_distance_on(&self, other: &FuzzyPath, range: std::ops::Range<usize>) -> f64 {
        self.values[range.clone()]
            .iter()
            .zip(&other.values[range])
            .map(|(a, b)| a.d_inf_unchecked(b))
            .fold(0.0, f64::max)
    }

    /// Every node is crisp.
    pub fn is_crisp(&self) -> bool {
        self.values.iter().all(FuzzyNumber::is_crisp)
    }
}

fn delayed_index(grid: &TimeGrid, k: usize, tau_steps: usize) -> Result<usize, IntegralError> {
    (grid.n_pre + k).checked_sub(tau_steps).ok_or_else(|| {
        IntegralError::Index(format!(
            "delayed node for s-index {k} lies before the start of the path (tau_steps {tau_steps})"
        ))
    })
}

fn check_t_index(grid: &TimeGrid, t_index: usize) -> Result<(), IntegralError> {
    if t_index > grid.n_main {
        return Err(IntegralError::Index(format!(
            "t-index {t_index} exceeds the {} main steps",
            grid.n_main
        )));
    }
    Ok(())
}

/// Left-endpoint sum for `∫₀ᵗ g(t,s) K(x(s), x(s-τ)) ds` at main node
/// `t_index`, accumulated levelwise with `⊕`.
pub fn aumann_integral(
    t_index: usize,
    kernel: &dyn Kernel,
    drift: &dyn Drift,
    path: &FuzzyPath,
    tau_steps: usize,
) -> Result<FuzzyNumber, IntegralError> {
    let grid = path.grid();
    check_t_index(grid, t_index)?;
    let t = grid.main_time(t_index);
    let mut acc = FuzzyNumber::zero(path.alpha());
    for k in 0..t_index {
        let cur = grid.main_index(k);
        let del = delayed_index(grid, k, tau_steps)?;
        let weight = kernel.eval(t, grid.main_time(k)) * grid.dt;
        let value = drift.eval(path.at(cur), path.at(del));
        acc.add_scaled_assign(weight, &value);
    }
    Ok(acc)
}

/// Itô left-point sum for `∫₀ᵗ h(t,s) L(x(s), x(s-τ)) dB(s)` at main node
/// `t_index`. `brownian` holds `B` on the main nodes.
pub fn ito_integral(
    t_index: usize,
    kernel: &dyn Kernel,
    diffusion: &dyn Diffusion,
    path: &FuzzyPath,
    tau_steps: usize,
    brownian: &[f64],
) -> Result<f64, IntegralError> {
    let grid = path.grid();
    check_t_index(grid, t_index)?;
    if brownian.len() <= t_index {
        return Err(IntegralError::Index(format!(
            "Brownian path has {} nodes, need {}",
            brownian.len(),
            t_index + 1
        )));
    }
    let t = grid.main_time(t_index);
    let mut acc = 0.0;
    for k in 0..t_index {
        let cur = grid.main_index(k);
        let del = delayed_index(grid, k, tau_steps)?;
        let l = diffusion.eval(path.at(cur), path.at(del));
        acc += kernel.eval(t, grid.main_time(k)) * l * (brownian[k + 1] - brownian[k]);
    }
    Ok(acc)
}

/// Lower-triangular table of `g(t_j, s_k)` for `k < j ≤ n_main`.
#[derive(Debug, Clone)]
pub(crate) struct KernelTable {
    rows: Vec<Vec<f64>>,
    all_zero: bool,
}

impl KernelTable {
    pub(crate) fn new(kernel: &dyn Kernel, grid: &TimeGrid) -> Self {
        let rows: Vec<Vec<f64>> = (0..=grid.n_main)
            .map(|j| {
                let t = grid.main_time(j);
                (0..j).map(|k| kernel.eval(t, grid.main_time(k))).collect()
            })
            .collect();
        let all_zero = rows.iter().flatten().all(|&g| g == 0.0);
        Self { rows, all_zero }
    }

    pub(crate) fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.all_zero
    }
}

/// Drift values `K(x(s_k), x(s_k - τ))` for `k = 0..n_main`.
pub(crate) fn drift_values(drift: &dyn Drift, path: &FuzzyPath) -> Vec<FuzzyNumber> {
    let grid = path.grid();
    (0..grid.n_main)
        .map(|k| {
            let cur = grid.main_index(k);
            drift.eval(path.at(cur), path.at(cur - grid.tau_steps()))
        })
        .collect()
}

pub(crate) fn diffusion_values(diffusion: &dyn Diffusion, path: &FuzzyPath) -> Vec<f64> {
    let grid = path.grid();
    (0..grid.n_main)
        .map(|k| {
            let cur = grid.main_index(k);
            diffusion.eval(path.at(cur), path.at(cur - grid.tau_steps()))
        })
        .collect()
}

/// Same arithmetic as [`aumann_integral`], from precomputed tables.
pub(crate) fn aumann_from_table(
    j: usize,
    table: &KernelTable,
    values: &[FuzzyNumber],
    alpha: &AlphaGrid,
    dt: f64,
) -> FuzzyNumber {
    let mut acc = FuzzyNumber::zero(alpha);
    for (g, v) in table.row(j).iter().zip(values) {
        acc.add_scaled_assign(g * dt, v);
    }
    acc
}

/// Same arithmetic as [`ito_integral`], from precomputed tables.
pub(crate) fn ito_from_table(j: usize, table: &KernelTable, values: &[f64], brownian: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (k, (h, l)) in table.row(j).iter().zip(values).enumerate() {
        acc += h * l * (brownian[k + 1] - brownian[k]);
    }
    acc
}
