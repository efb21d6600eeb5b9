//! Constants of the successive-difference, initial-value and moment bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fuzzy::{AlphaGrid, FuzzyNumber};
use crate::integrals::{kernel_sup_norm, Diffusion, Drift};

use super::{ProblemSpec, SolveError};

/// Random pairs drawn per coefficient when `C` is estimated.
pub const C_SAMPLES: usize = 10_000;
/// Safety factor applied to the largest sampled quotient.
pub const C_SAFETY: f64 = 1.5;
const C_SAMPLE_SEED: u64 = 0x5eed_c0ef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CSource {
    Explicit,
    Analytic,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelNorms {
    pub g1: f64,
    pub g2: f64,
    pub h1: f64,
    pub h2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundConstants {
    pub xi: f64,
    pub zeta: f64,
    pub c: f64,
    pub c_source: CSource,
    pub norms: KernelNorms,
    /// `sup ‖Φ(t)‖²` over `[-τ, T̃]`.
    pub phi_sup_sq: f64,
    /// `sup ‖Φ(t)‖²` over `[-τ, 0]`.
    pub phi_pre_sup_sq: f64,
    pub horizon: f64,
}

/// Constants of the moment envelope `M₅·exp(M₄T̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEnvelope {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub value: f64,
}

impl BoundConstants {
    /// `‖g₂‖²T̃ + ‖g₁‖²T̃ + 4‖h₂‖² + 4‖h₁‖²`.
    fn kernel_sum(&self) -> f64 {
        let n = &self.norms;
        let t = self.horizon;
        n.g2 * n.g2 * t + n.g1 * n.g1 * t + 4.0 * n.h2 * n.h2 + 4.0 * n.h1 * n.h1
    }

    /// `(ξ/2ζ)(2ζt)ⁿ/n!`, evaluated as `ξt·Π_{i=2..n}(2ζt/i)` so that
    /// `ζ = 0` is harmless. Infinite for `n = 0`.
    pub fn cz_bound(&self, n: usize, t: f64) -> f64 {
        if n == 0 {
            return f64::INFINITY;
        }
        let r = 2.0 * self.zeta * t;
        (2..=n).fold(self.xi * t, |acc, i| acc * r / i as f64)
    }

    /// Same constants with `ζ` replaced and `ξ` kept.
    pub fn with_zeta(&self, zeta: f64) -> Self {
        Self {
            zeta,
            ..self.clone()
        }
    }

    /// `γ = 5C[‖g₂‖²T̃ + ‖g₁‖²T̃ + 4‖h₂‖² + 4‖h₁‖²]`.
    pub fn gamma(&self) -> f64 {
        5.0 * self.c * self.kernel_sum()
    }

    /// Cap `5·exp(2γT̃)` on `E sup d∞²(U,V) / sup d∞²(Φ,Ψ)`.
    pub fn initial_value_bound(&self) -> f64 {
        5.0 * (2.0 * self.gamma() * self.horizon).exp()
    }

    pub fn moment_envelope(&self) -> MomentEnvelope {
        let n = &self.norms;
        let t = self.horizon;
        let b = t * n.g2 * n.g2 + t * n.g1 * n.g1 + n.h2 * n.h2 + n.h1 * n.h1;
        let m1 = 5.0 * self.phi_sup_sq + 5.0 * self.c * t * b;
        let m2 = m1 / t;
        let m3 = m1 + m2 * t * self.phi_pre_sup_sq;
        let m4 = 2.0 * m2;
        let m5 = m3 + m4 * t * self.phi_sup_sq;
        MomentEnvelope {
            m1,
            m2,
            m3,
            m4,
            m5,
            value: m5 * (m4 * t).exp(),
        }
    }
}

/// `ξ`, `ζ` and the supporting constants of `spec`.
pub fn bound_constants(spec: &ProblemSpec) -> Result<BoundConstants, SolveError> {
    let (c, c_source) = resolve_lipschitz(spec)?;
    let t = spec.grid.horizon();
    let norms = KernelNorms {
        g1: kernel_sup_norm(spec.g1.as_ref(), t),
        g2: kernel_sup_norm(spec.g2.as_ref(), t),
        h1: kernel_sup_norm(spec.h1.as_ref(), t),
        h2: kernel_sup_norm(spec.h2.as_ref(), t),
    };
    let grid = spec.grid;
    let norm_sq = |i: usize| spec.phi.at(grid.time(i), &spec.alpha).norm_f().powi(2);
    let phi_pre_sup_sq = (0..=grid.n_pre).map(norm_sq).fold(0.0, f64::max);
    let phi_sup_sq = (grid.n_pre..grid.n_nodes())
        .map(norm_sq)
        .fold(phi_pre_sup_sq, f64::max);
    let mut bc = BoundConstants {
        xi: 0.0,
        zeta: 0.0,
        c,
        c_source,
        norms,
        phi_sup_sq,
        phi_pre_sup_sq,
        horizon: t,
    };
    bc.zeta = 4.0 * c * bc.kernel_sum();
    bc.xi = bc.zeta * (1.0 + 2.0 * phi_sup_sq);
    Ok(bc)
}

/// `C` for the Lipschitz and growth hypotheses: the explicit value, else
/// the largest closed-form constant over `K₁, K₂, L₁, L₂`, else (when
/// allowed) a sampled estimate for the coefficients without closed forms.
pub fn resolve_lipschitz(spec: &ProblemSpec) -> Result<(f64, CSource), SolveError> {
    if let Some(c) = spec.lipschitz_c {
        if !(c.is_finite() && c >= 0.0) {
            return Err(SolveError::Config(format!(
                "lipschitz constant must be finite and nonnegative, got {c}"
            )));
        }
        return Ok((c, CSource::Explicit));
    }
    let drifts = [spec.k1.as_ref(), spec.k2.as_ref()];
    let diffusions = [spec.l1.as_ref(), spec.l2.as_ref()];
    let mut c = 0.0f64;
    let mut sampled = false;
    for k in drifts {
        match (k.lipschitz_sq(), k.growth_sq()) {
            (Some(l), Some(g)) => c = c.max(l).max(g),
            _ if spec.estimate_c => {
                c = c.max(sample_drift_constant(k, &spec.alpha));
                sampled = true;
            }
            _ => return Err(missing_c()),
        }
    }
    for l in diffusions {
        match (l.lipschitz_sq(), l.growth_sq()) {
            (Some(a), Some(b)) => c = c.max(a).max(b),
            _ if spec.estimate_c => {
                c = c.max(sample_diffusion_constant(l, &spec.alpha));
                sampled = true;
            }
            _ => return Err(missing_c()),
        }
    }
    Ok((c, if sampled { CSource::Sampled } else { CSource::Analytic }))
}

fn missing_c() -> SolveError {
    SolveError::Config(
        "no lipschitz constant given, a coefficient has no closed-form constants, and estimation is disabled"
            .into(),
    )
}

fn random_fuzzy(rng: &mut ChaCha8Rng, alpha: &AlphaGrid) -> FuzzyNumber {
    let center = rng.random_range(-3.0..3.0);
    let left = rng.random_range(0.0..2.0);
    let right = rng.random_range(0.0..2.0);
    FuzzyNumber::triangular(alpha, center, left, right).expect("finite sample parameters")
}

/// `1.5 ×` the largest Lipschitz or growth quotient over random pairs.
pub fn sample_drift_constant(k: &dyn Drift, alpha: &AlphaGrid) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(C_SAMPLE_SEED);
    let mut best = 0.0f64;
    for _ in 0..C_SAMPLES {
        let [u1, v1, u2, v2] = std::array::from_fn(|_| random_fuzzy(&mut rng, alpha));
        let a = k.eval(&u1, &v1);
        let b = k.eval(&u2, &v2);
        let den = u1.d_inf_unchecked(&u2).powi(2) + v1.d_inf_unchecked(&v2).powi(2);
        if den > 0.0 {
            best = best.max(a.d_inf_unchecked(&b).powi(2) / den);
        }
        let growth = 1.0 + u1.norm_f().powi(2) + v1.norm_f().powi(2);
        best = best.max(a.norm_f().powi(2) / growth);
    }
    C_SAFETY * best
}

pub fn sample_diffusion_constant(l: &dyn Diffusion, alpha: &AlphaGrid) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(C_SAMPLE_SEED);
    let mut best = 0.0f64;
    for _ in 0..C_SAMPLES {
        let [u1, v1, u2, v2] = std::array::from_fn(|_| random_fuzzy(&mut rng, alpha));
        let a = l.eval(&u1, &v1);
        let b = l.eval(&u2, &v2);
        let den = u1.d_inf_unchecked(&u2).powi(2) + v1.d_inf_unchecked(&v2).powi(2);
        if den > 0.0 {
            best = best.max((a - b).powi(2) / den);
        }
        best = best.max(a * a / (1.0 + u1.norm_f().powi(2) + v1.norm_f().powi(2)));
    }
    C_SAFETY * best
}
