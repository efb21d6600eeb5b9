//! Concrete kernels, coefficients and initial maps.
//!
//! Each family reports its Lipschitz and growth constants in closed form so
//! the bound constants of a problem can be computed exactly. The config
//! registry maps names onto these types.

use std::fmt;
use std::sync::Arc;

use crate::fuzzy::{AlphaGrid, FuzzyNumber, Interval};
use crate::integrals::{Diffusion, Drift, Kernel};

/// Initial map `Φ : [-τ, T̃] → ℱ`.
pub trait InitialMap: Send + Sync + fmt::Debug {
    fn at(&self, t: f64, alpha: &AlphaGrid) -> FuzzyNumber;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroKernel;

impl Kernel for ZeroKernel {
    fn eval(&self, _t: f64, _s: f64) -> f64 {
        0.0
    }

    fn sup_norm_hint(&self, _horizon: f64) -> Option<f64> {
        Some(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantKernel(pub f64);

impl Kernel for ConstantKernel {
    fn eval(&self, _t: f64, _s: f64) -> f64 {
        self.0
    }

    fn sup_norm_hint(&self, _horizon: f64) -> Option<f64> {
        Some(self.0.abs())
    }
}

/// `scale · exp(-rate·(t - s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpKernel {
    pub scale: f64,
    pub rate: f64,
}

impl Kernel for ExpKernel {
    fn eval(&self, t: f64, s: f64) -> f64 {
        self.scale * (-self.rate * (t - s)).exp()
    }

    fn sup_norm_hint(&self, horizon: f64) -> Option<f64> {
        // t - s ranges over [-T, T]
        Some(self.scale.abs() * (self.rate.abs() * horizon).exp())
    }
}

/// `c0 + c1·(t - s) + c2·(t - s)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyKernel {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl PolyKernel {
    fn at_lag(&self, x: f64) -> f64 {
        self.c0 + self.c1 * x + self.c2 * x * x
    }
}

impl Kernel for PolyKernel {
    fn eval(&self, t: f64, s: f64) -> f64 {
        self.at_lag(t - s)
    }

    fn sup_norm_hint(&self, horizon: f64) -> Option<f64> {
        let mut best = self.at_lag(-horizon).abs().max(self.at_lag(horizon).abs());
        if self.c2 != 0.0 {
            let vertex = -self.c1 / (2.0 * self.c2);
            if vertex.abs() <= horizon {
                best = best.max(self.at_lag(vertex).abs());
            }
        }
        Some(best)
    }
}

/// `factor · g(t, s)`.
#[derive(Debug, Clone)]
pub struct ScaledKernel {
    pub inner: Arc<dyn Kernel>,
    pub factor: f64,
}

impl Kernel for ScaledKernel {
    fn eval(&self, t: f64, s: f64) -> f64 {
        self.factor * self.inner.eval(t, s)
    }

    fn sup_norm_hint(&self, horizon: f64) -> Option<f64> {
        self.inner
            .sup_norm_hint(horizon)
            .map(|n| self.factor.abs() * n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroDrift;

impl Drift for ZeroDrift {
    fn eval(&self, current: &FuzzyNumber, _delayed: &FuzzyNumber) -> FuzzyNumber {
        FuzzyNumber::zero(current.grid())
    }

    fn lipschitz_sq(&self) -> Option<f64> {
        Some(0.0)
    }

    fn growth_sq(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Constant triangular value, crisp when both spreads vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDrift {
    pub center: f64,
    pub left: f64,
    pub right: f64,
}

impl Drift for ConstantDrift {
    fn eval(&self, current: &FuzzyNumber, _delayed: &FuzzyNumber) -> FuzzyNumber {
        FuzzyNumber::triangular(current.grid(), self.center, self.left, self.right)
            .expect("constant drift parameters are validated at construction")
    }

    fn lipschitz_sq(&self) -> Option<f64> {
        Some(0.0)
    }

    fn growth_sq(&self) -> Option<f64> {
        let m = (self.center - self.left).abs().max((self.center + self.right).abs());
        Some(m * m)
    }
}

/// `a ⊙ u ⊕ b ⊙ v ⊕ ⟨shift⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDrift {
    pub a: f64,
    pub b: f64,
    pub shift: f64,
}

impl Drift for LinearDrift {
    fn eval(&self, current: &FuzzyNumber, delayed: &FuzzyNumber) -> FuzzyNumber {
        let mut out = FuzzyNumber::embed(self.shift, current.grid())
            .expect("shift is validated finite at construction");
        if self.a != 0.0 {
            out.add_scaled_assign(self.a, current);
        }
        if self.b != 0.0 {
            out.add_scaled_assign(self.b, delayed);
        }
        out
    }

    fn lipschitz_sq(&self) -> Option<f64> {
        Some(self.a * self.a + self.b * self.b)
    }

    fn growth_sq(&self) -> Option<f64> {
        Some(self.a * self.a + self.b * self.b + self.shift * self.shift)
    }
}

/// Crisp drift `⟨a·mid[u]¹ + b·mid[v]¹ + c⟩` built from the core midpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrispMidDrift {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Drift for CrispMidDrift {
    fn eval(&self, current: &FuzzyNumber, delayed: &FuzzyNumber) -> FuzzyNumber {
        let x = self.a * current.core().midpoint() + self.b * delayed.core().midpoint() + self.c;
        FuzzyNumber::embed(x, current.grid()).expect("finite inputs give a finite value")
    }

    fn lipschitz_sq(&self) -> Option<f64> {
        Some(self.a * self.a + self.b * self.b)
    }

    fn growth_sq(&self) -> Option<f64> {
        Some(self.a * self.a + self.b * self.b + self.c * self.c)
    }
}

/// `K(u, v) ⊕ ⟨shift⟩`.
#[derive(Debug, Clone)]
pub struct ShiftedDrift {
    pub inner: Arc<dyn Drift>,
    pub shift: f64,
}

impl Drift for ShiftedDrift {
    fn eval(&self, current: &FuzzyNumber, delayed: &FuzzyNumber) -> FuzzyNumber {
        self.inner.eval(current, delayed).shift(self.shift)
    }

    fn lipschitz_sq(&self) -> Option<f64> {
        self.inner.lipschitz_sq()
    }

    fn growth_sq(&self) -> Option<f64> {
        // (‖K‖ + |s|)² ≤ 2‖K‖² + 2s²
        self.inner
            .growth_sq()
            .map(|g| 2.0 * (g + self.shift * self.shift))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroDiffusion;

impl Diffusion for ZeroDiffusion {
    fn eval(&self, _current: &FuzzyNumber, _delayed: &FuzzyNumber) -> f64 {
        0.0
    }

    fn lipschitz_sq(&self) -> Option<f64> {
        Some(0.0)
    }

    fn growth_sq(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDiffusion(pub f64);

impl Diffusion for ConstantDiffusion {
    fn eval(&self, _current: &FuzzyNumber, _delayed: &FuzzyNumber) -> f64 {
        self.0
    }

    fn lipschitz_sq(&self) -> Option<f64> {
        Some(0.0)
    }

    fn growth_sq(&self) -> Option<f64> {
        Some(self.0 * self.0)
    }
}

/// `a·mid[u]¹ + b·mid[v]¹ + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMidDiffusion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Diffusion for LinearMidDiffusion {
    fn eval(&self, current: &FuzzyNumber, delayed: &FuzzyNumber) -> f64 {
        self.a * current.core().midpoint() + self.b * delayed.core().midpoint() + self.c
    }

    fn lipschitz_sq(&self) -> Option<f64> {
        Some(self.a * self.a + self.b * self.b)
    }

    fn growth_sq(&self) -> Option<f64> {
        Some(self.a * self.a + self.b * self.b + self.c * self.c)
    }
}

/// Time-independent triangular initial value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularInitial {
    pub center: f64,
    pub left: f64,
    pub right: f64,
}

impl TriangularInitial {
    pub fn crisp(value: f64) -> Self {
        Self {
            center: value,
            left: 0.0,
            right: 0.0,
        }
    }
}

impl InitialMap for TriangularInitial {
    fn at(&self, _t: f64, alpha: &AlphaGrid) -> FuzzyNumber {
        FuzzyNumber::triangular(alpha, self.center, self.left, self.right)
            .expect("initial map parameters are validated at construction")
    }
}

/// Triangular value whose peak moves linearly: `center + slope·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampInitial {
    pub center: f64,
    pub slope: f64,
    pub left: f64,
    pub right: f64,
}

impl InitialMap for RampInitial {
    fn at(&self, t: f64, alpha: &AlphaGrid) -> FuzzyNumber {
        FuzzyNumber::triangular(alpha, self.center + self.slope * t, self.left, self.right)
            .expect("initial map parameters are validated at construction")
    }
}

/// `Φ(t) ⊕ ⟨shift⟩`.
#[derive(Debug, Clone)]
pub struct ShiftedInitial {
    pub inner: Arc<dyn InitialMap>,
    pub shift: f64,
}

impl InitialMap for ShiftedInitial {
    fn at(&self, t: f64, alpha: &AlphaGrid) -> FuzzyNumber {
        self.inner.at(t, alpha).shift(self.shift)
    }
}

/// Initial map backed by a closure.
pub struct FnInitial<F>(pub F);

impl<F> fmt::Debug for FnInitial<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnInitial")
    }
}

impl<F> InitialMap for FnInitial<F>
where
    F: Fn(f64, &AlphaGrid) -> FuzzyNumber + Send + Sync,
{
    fn at(&self, t: f64, alpha: &AlphaGrid) -> FuzzyNumber {
        (self.0)(t, alpha)
    }
}

/// Crisp value of a crisp fuzzy number, `None` if it has spread.
pub fn crisp_value(u: &FuzzyNumber) -> Option<f64> {
    let Interval { lo, hi } = u.support();
    (lo == hi).then_some(lo)
}
