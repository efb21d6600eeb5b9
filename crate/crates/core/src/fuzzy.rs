//! Fuzzy numbers over the real line, stored as finite stacks of nested
//! alpha-cuts.
//!
//! Every level set of a fuzzy number in this crate is a compact interval, so
//! Minkowski addition, scalar multiplication, the Hukuhara difference and the
//! Hausdorff distance all reduce to endpoint arithmetic. A [`FuzzyNumber`] is
//! immutable once built; every operation returns a fresh value.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Compact nonempty interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, FuzzyError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(FuzzyError::InvalidArgument(format!(
                "interval endpoints must be finite, got [{lo}, {hi}]"
            )));
        }
        if lo > hi {
            return Err(FuzzyError::InvalidArgument(format!(
                "interval lower endpoint {lo} exceeds upper endpoint {hi}"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// The degenerate interval `[x, x]`.
    pub const fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `true` when `other` lies inside `self`.
    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Largest absolute value attained on the interval.
    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    fn scaled(self, beta: f64) -> Self {
        if beta >= 0.0 {
            Self {
                lo: beta * self.lo,
                hi: beta * self.hi,
            }
        } else {
            Self {
                lo: beta * self.hi,
                hi: beta * self.lo,
            }
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Hausdorff distance between two intervals.
///
/// For intervals the sup-inf definition collapses to the larger of the two
/// endpoint gaps.
pub fn hausdorff(a: Interval, b: Interval) -> f64 {
    (a.lo - b.lo).abs().max((a.hi - b.hi).abs())
}

/// Ordered membership levels `0 = α₀ < α₁ < … < α_m = 1`.
///
/// Cloning is cheap; the level list is shared.
#[derive(Clone, PartialEq)]
pub struct AlphaGrid {
    levels: Arc<[f64]>,
}

impl AlphaGrid {
    /// Uniform grid with `m` steps, i.e. `m + 1` levels.
    pub fn uniform(m: usize) -> Result<Self, FuzzyError> {
        if m == 0 {
            return Err(FuzzyError::InvalidArgument(
                "alpha grid needs at least one step".into(),
            ));
        }
        let levels: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
        Ok(Self {
            levels: levels.into(),
        })
    }

    pub fn from_levels(levels: Vec<f64>) -> Result<Self, FuzzyError> {
        if levels.len() < 2 {
            return Err(FuzzyError::InvalidArgument(
                "alpha grid needs at least the levels 0 and 1".into(),
            ));
        }
        if levels[0] != 0.0 || levels[levels.len() - 1] != 1.0 {
            return Err(FuzzyError::InvalidArgument(
                "alpha grid must start at 0 and end at 1".into(),
            ));
        }
        if levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FuzzyError::InvalidArgument(
                "alpha levels must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            levels: levels.into(),
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Number of levels, `m + 1`.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of steps `m`.
    pub fn steps(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn same_as(&self, other: &AlphaGrid) -> bool {
        Arc::ptr_eq(&self.levels, &other.levels) || self.levels == other.levels
    }
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self::uniform(10).expect("m = 10 is a valid grid")
    }
}

impl fmt::Debug for AlphaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlphaGrid")
            .field("steps", &self.steps())
            .finish()
    }
}

/// First structural defect found in a stack of cuts.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("expected {expected} cuts, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cut at level {level} has a non-finite endpoint")]
    NonFinite { level: usize },
    #[error("cut at level {level} is reversed: lo {lo} > hi {hi}")]
    Ordering { level: usize, lo: f64, hi: f64 },
    #[error("cut at level {level} is not contained in the cut at level {}", level - 1)]
    Nesting { level: usize },
}

/// Why a Hukuhara difference `u ⊖ v` does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HukuharaNotExists {
    /// First offending alpha level.
    pub level: usize,
    /// How much the candidate difference misses by: the width shortfall
    /// `width(v) - width(u)` for an ordering failure, the protrusion of the
    /// level out of its predecessor for a nesting failure.
    pub deficit: f64,
    pub kind: HukuharaFailureKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HukuharaFailureKind {
    Width,
    Nesting,
}

impl fmt::Display for HukuharaNotExists {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            HukuharaFailureKind::Width => write!(
                f,
                "subtrahend wider than minuend at level {} (deficit {:e})",
                self.level, self.deficit
            ),
            HukuharaFailureKind::Nesting => write!(
                f,
                "difference cuts not nested at level {} (protrusion {:e})",
                self.level, self.deficit
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("alpha grids differ ({left} vs {right} levels)")]
    GridMismatch { left: usize, right: usize },
    #[error("invalid fuzzy number: {0}")]
    Invalid(#[from] Violation),
    #[error("Hukuhara difference does not exist: {0}")]
    HukuharaNotExists(HukuharaNotExists),
}

/// Checks ordering within each cut and nestedness across levels.
pub fn validate_cuts(grid: &AlphaGrid, cuts: &[Interval]) -> Result<(), Violation> {
    if cuts.len() != grid.len() {
        return Err(Violation::LengthMismatch {
            expected: grid.len(),
            got: cuts.len(),
        });
    }
    for (level, cut) in cuts.iter().enumerate() {
        if !cut.lo.is_finite() || !cut.hi.is_finite() {
            return Err(Violation::NonFinite { level });
        }
        if cut.lo > cut.hi {
            return Err(Violation::Ordering {
                level,
                lo: cut.lo,
                hi: cut.hi,
            });
        }
        if level > 0 && !cuts[level - 1].contains(cut) {
            return Err(Violation::Nesting { level });
        }
    }
    Ok(())
}

/// Fuzzy number on the real line: `cuts[k]` is the level set at `grid[k]`.
#[derive(Clone, PartialEq)]
pub struct FuzzyNumber {
    grid: AlphaGrid,
    cuts: Vec<Interval>,
}

impl FuzzyNumber {
    pub fn from_cuts(grid: AlphaGrid, cuts: Vec<Interval>) -> Result<Self, FuzzyError> {
        validate_cuts(&grid, &cuts)?;
        Ok(Self { grid, cuts })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_cuts_unchecked(grid: AlphaGrid, cuts: Vec<Interval>) -> Self {
        debug_assert!(validate_cuts(&grid, &cuts).is_ok());
        Self { grid, cuts }
    }

    /// The crisp number `⟨r⟩`.
    pub fn embed(r: f64, grid: &AlphaGrid) -> Result<Self, FuzzyError> {
        if !r.is_finite() {
            return Err(FuzzyError::InvalidArgument(format!(
                "cannot embed non-finite value {r}"
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            cuts: vec![Interval::point(r); grid.len()],
        })
    }

    pub fn zero(grid: &AlphaGrid) -> Self {
        Self {
            grid: grid.clone(),
            cuts: vec![Interval::point(0.0); grid.len()],
        }
    }

    /// Triangular number with peak `center` and support
    /// `[center - left, center + right]`.
    pub fn triangular(
        grid: &AlphaGrid,
        center: f64,
        left: f64,
        right: f64,
    ) -> Result<Self, FuzzyError> {
        if !(left >= 0.0 && right >= 0.0) || !center.is_finite() || !left.is_finite() || !right.is_finite() {
            return Err(FuzzyError::InvalidArgument(format!(
                "triangular number needs finite center and nonnegative spreads, got ({center}, {left}, {right})"
            )));
        }
        let cuts = grid
            .levels()
            .iter()
            .map(|&a| Interval {
                lo: center - (1.0 - a) * left,
                hi: center + (1.0 - a) * right,
            })
            .collect();
        Self::from_cuts(grid.clone(), cuts)
    }

    pub fn grid(&self) -> &AlphaGrid {
        &self.grid
    }

    pub fn cuts(&self) -> &[Interval] {
        &self.cuts
    }

    pub fn cut(&self, level: usize) -> Interval {
        self.cuts[level]
    }

    /// The level-0 cut.
    pub fn support(&self) -> Interval {
        self.cuts[0]
    }

    /// The level-1 cut.
    pub fn core(&self) -> Interval {
        self.cuts[self.cuts.len() - 1]
    }

    /// All cuts degenerate and equal.
    pub fn is_crisp(&self) -> bool {
        let s = self.support();
        s.lo == s.hi
    }

    pub fn validate(&self) -> Result<(), Violation> {
        validate_cuts(&self.grid, &self.cuts)
    }

    fn check_grid(&self, other: &FuzzyNumber) -> Result<(), FuzzyError> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(FuzzyError::GridMismatch {
                left: self.grid.len(),
                right: other.grid.len(),
            })
        }
    }

    /// Levelwise Minkowski sum `u ⊕ v`.
    pub fn add(&self, other: &FuzzyNumber) -> Result<FuzzyNumber, FuzzyError> {
        self.check_grid(other)?;
        let cuts = self
            .cuts
            .iter()
            .zip(&other.cuts)
            .map(|(a, b)| Interval {
                lo: a.lo + b.lo,
                hi: a.hi + b.hi,
            })
            .collect();
        Ok(Self::from_cuts_unchecked(self.grid.clone(), cuts))
    }

    /// `u ⊕ ⟨r⟩`.
    pub fn shift(&self, r: f64) -> FuzzyNumber {
        let cuts = self
            .cuts
            .iter()
            .map(|c| Interval {
                lo: c.lo + r,
                hi: c.hi + r,
            })
            .collect();
        Self::from_cuts_unchecked(self.grid.clone(), cuts)
    }

    /// `β ⊙ u`; a negative factor reflects each cut.
    pub fn scalar_mul(&self, beta: f64) -> Result<FuzzyNumber, FuzzyError> {
        if !beta.is_finite() {
            return Err(FuzzyError::InvalidArgument(format!(
                "scalar factor must be finite, got {beta}"
            )));
        }
        Ok(self.scaled(beta))
    }

    pub(crate) fn scaled(&self, beta: f64) -> FuzzyNumber {
        let cuts = self.cuts.iter().map(|c| c.scaled(beta)).collect();
        Self::from_cuts_unchecked(self.grid.clone(), cuts)
    }

    /// In-place `self ← self ⊕ (β ⊙ other)`, bit-identical to
    /// `self.add(&other.scalar_mul(β)?)`.
    pub(crate) fn add_scaled_assign(&mut self, beta: f64, other: &FuzzyNumber) {
        debug_assert!(self.grid.same_as(&other.grid));
        for (acc, c) in self.cuts.iter_mut().zip(&other.cuts) {
            let s = c.scaled(beta);
            acc.lo += s.lo;
            acc.hi += s.hi;
        }
    }

    /// Hukuhara difference `u ⊖ v`: the unique `w` with `u = v ⊕ w`.
    pub fn hukuhara_sub(&self, other: &FuzzyNumber) -> Result<FuzzyNumber, FuzzyError> {
        self.check_grid(other)?;
        let mut cuts = Vec::with_capacity(self.cuts.len());
        for (level, (a, b)) in self.cuts.iter().zip(&other.cuts).enumerate() {
            let w = Interval {
                lo: a.lo - b.lo,
                hi: a.hi - b.hi,
            };
            if w.lo > w.hi {
                return Err(FuzzyError::HukuharaNotExists(HukuharaNotExists {
                    level,
                    deficit: w.lo - w.hi,
                    kind: HukuharaFailureKind::Width,
                }));
            }
            if let Some(prev) = cuts.last() {
                let prev: &Interval = prev;
                if !prev.contains(&w) {
                    let deficit = (prev.lo - w.lo).max(w.hi - prev.hi);
                    return Err(FuzzyError::HukuharaNotExists(HukuharaNotExists {
                        level,
                        deficit,
                        kind: HukuharaFailureKind::Nesting,
                    }));
                }
            }
            cuts.push(w);
        }
        Ok(Self::from_cuts_unchecked(self.grid.clone(), cuts))
    }

    /// `d∞(u, v)`: largest Hausdorff distance over the grid levels.
    pub fn d_inf(&self, other: &FuzzyNumber) -> Result<f64, FuzzyError> {
        self.check_grid(other)?;
        Ok(self.d_inf_unchecked(other))
    }

    pub(crate) fn d_inf_unchecked(&self, other: &FuzzyNumber) -> f64 {
        self.cuts
            .iter()
            .zip(&other.cuts)
            .map(|(a, b)| hausdorff(*a, *b))
            .fold(0.0, f64::max)
    }

    /// `‖u‖_ℱ = d∞(u, ⟨0⟩)`.
    pub fn norm_f(&self) -> f64 {
        self.cuts.iter().map(Interval::magnitude).fold(0.0, f64::max)
    }

    /// Largest cut width (the support width for a valid number).
    pub fn max_width(&self) -> f64 {
        self.cuts.iter().map(Interval::width).fold(0.0, f64::max)
    }
}

impl fmt::Debug for FuzzyNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FuzzyNumber")
            .field("support", &self.support())
            .field("core", &self.core())
            .finish()
    }
}

impl fmt::Display for FuzzyNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "supp {} core {}", self.support(), self.core())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> AlphaGrid {
        AlphaGrid::uniform(10).unwrap()
    }

    fn flat(g: &AlphaGrid, lo: f64, hi: f64) -> FuzzyNumber {
        FuzzyNumber::from_cuts(g.clone(), vec![Interval::new(lo, hi).unwrap(); g.len()]).unwrap()
    }

    fn assert_close(u: &FuzzyNumber, v: &FuzzyNumber, tol: f64) {
        for (a, b) in u.cuts().iter().zip(v.cuts()) {
            assert!((a.lo - b.lo).abs() <= tol && (a.hi - b.hi).abs() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn uniform_grid_levels() {
        let g = grid();
        assert_eq!(g.len(), 11);
        assert_eq!(g.levels()[0], 0.0);
        assert_eq!(g.levels()[10], 1.0);
        assert!(AlphaGrid::uniform(0).is_err());
        assert!(AlphaGrid::from_levels(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(AlphaGrid::from_levels(vec![0.1, 1.0]).is_err());
    }

    #[test]
    fn embed_examples() {
        let g = grid();
        let z = FuzzyNumber::embed(0.0, &g).unwrap();
        assert!(z.cuts().iter().all(|c| c.lo == 0.0 && c.hi == 0.0));
        let e = FuzzyNumber::embed(2.5, &g).unwrap();
        assert!(e.cuts().iter().all(|c| *c == Interval::point(2.5)));
        let a = FuzzyNumber::embed(2.0, &g).unwrap();
        let b = FuzzyNumber::embed(5.0, &g).unwrap();
        assert_eq!(a.d_inf(&b).unwrap(), 3.0);
        assert!(FuzzyNumber::embed(f64::NAN, &g).is_err());
        assert!(FuzzyNumber::embed(f64::INFINITY, &g).is_err());
    }

    #[test]
    fn add_examples() {
        let g = grid();
        let s = flat(&g, 1.0, 2.0).add(&flat(&g, 3.0, 5.0)).unwrap();
        assert!(s.cuts().iter().all(|c| *c == Interval { lo: 4.0, hi: 7.0 }));

        let u = FuzzyNumber::triangular(&g, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(u.add(&FuzzyNumber::zero(&g)).unwrap(), u);

        let d = u.add(&u).unwrap();
        assert_eq!(d.support(), Interval { lo: 0.0, hi: 4.0 });
        assert_eq!(d.core(), Interval { lo: 2.0, hi: 2.0 });
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = FuzzyNumber::zero(&AlphaGrid::uniform(10).unwrap());
        let b = FuzzyNumber::zero(&AlphaGrid::uniform(4).unwrap());
        assert!(matches!(a.add(&b), Err(FuzzyError::GridMismatch { .. })));
        assert!(matches!(a.d_inf(&b), Err(FuzzyError::GridMismatch { .. })));
        assert!(matches!(a.hukuhara_sub(&b), Err(FuzzyError::GridMismatch { .. })));
        // equal level lists built separately are compatible
        let c = FuzzyNumber::zero(&AlphaGrid::uniform(10).unwrap());
        assert!(a.add(&c).is_ok());
    }

    #[test]
    fn scalar_mul_examples() {
        let g = grid();
        let u = flat(&g, 1.0, 3.0);
        assert_eq!(u.scalar_mul(2.0).unwrap().support(), Interval { lo: 2.0, hi: 6.0 });
        assert_eq!(u.scalar_mul(-1.0).unwrap().support(), Interval { lo: -3.0, hi: -1.0 });
        let z = u.scalar_mul(0.0).unwrap();
        assert_eq!(z.d_inf(&FuzzyNumber::zero(&g)).unwrap(), 0.0);
        assert!(u.scalar_mul(f64::NAN).is_err());
    }

    #[test]
    fn hukuhara_examples() {
        let g = grid();
        let w = flat(&g, 1.0, 4.0).hukuhara_sub(&flat(&g, 0.0, 1.0)).unwrap();
        assert_eq!(w.support(), Interval { lo: 1.0, hi: 3.0 });

        match flat(&g, 0.0, 1.0).hukuhara_sub(&flat(&g, 0.0, 2.0)) {
            Err(FuzzyError::HukuharaNotExists(e)) => {
                assert_eq!(e.level, 0);
                assert_eq!(e.kind, HukuharaFailureKind::Width);
                assert_eq!(e.deficit, 1.0);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn hukuhara_reports_nesting_failure() {
        // widths are fine levelwise but the candidate cuts are not nested:
        // u is flat [0, 2]; v is triangular with support [0, 2]
        let g = grid();
        let u = flat(&g, 0.0, 2.0);
        let v = FuzzyNumber::triangular(&g, 1.0, 1.0, 1.0).unwrap();
        match u.hukuhara_sub(&v) {
            Err(FuzzyError::HukuharaNotExists(e)) => {
                assert_eq!(e.level, 1);
                assert_eq!(e.kind, HukuharaFailureKind::Nesting);
                assert!((e.deficit - 0.1).abs() < 1e-12);
            }
            other => panic!("expected nesting failure, got {other:?}"),
        }
    }

    #[test]
    fn hausdorff_examples() {
        let a = Interval::new(0.0, 1.0).unwrap();
        assert_eq!(hausdorff(a, a), 0.0);
        assert_eq!(hausdorff(a, Interval::new(2.0, 5.0).unwrap()), 4.0);
        assert_eq!(hausdorff(Interval::point(2.0), Interval::point(5.0)), 3.0);
    }

    #[test]
    fn norm_examples() {
        let g = grid();
        assert_eq!(FuzzyNumber::zero(&g).norm_f(), 0.0);
        assert_eq!(FuzzyNumber::embed(-3.0, &g).unwrap().norm_f(), 3.0);
        let u = FuzzyNumber::triangular(&g, 0.5, 1.5, 1.5).unwrap();
        assert_eq!(u.support(), Interval { lo: -1.0, hi: 2.0 });
        assert_eq!(u.norm_f(), 2.0);
        assert_eq!(u.norm_f(), u.d_inf(&FuzzyNumber::zero(&g)).unwrap());
    }

    #[test]
    fn validate_examples() {
        let g = AlphaGrid::uniform(1).unwrap();
        assert!(FuzzyNumber::triangular(&g, 0.0, 1.0, 1.0).unwrap().validate().is_ok());
        let nested = validate_cuts(
            &g,
            &[Interval { lo: 0.0, hi: 1.0 }, Interval { lo: -1.0, hi: 2.0 }],
        );
        assert_eq!(nested, Err(Violation::Nesting { level: 1 }));
        let reversed = validate_cuts(&g, &[Interval { lo: 3.0, hi: 2.0 }, Interval { lo: 3.0, hi: 2.0 }]);
        assert!(matches!(reversed, Err(Violation::Ordering { level: 0, .. })));
        let short = validate_cuts(&g, &[Interval::point(0.0)]);
        assert!(matches!(short, Err(Violation::LengthMismatch { .. })));
    }

    fn fuzzy_strategy() -> impl Strategy<Value = FuzzyNumber> {
        (
            -5.0..5.0f64,
            0.0..1.0f64,
            0.0..1.0f64,
            prop::collection::vec((0.0..0.5f64, 0.0..0.5f64), 10),
        )
            .prop_map(|(c, cl, cr, steps)| {
                let g = AlphaGrid::uniform(10).unwrap();
                // build from the core outward so the stack is nested
                let mut cuts = vec![Interval { lo: c - cl, hi: c + cr }; 11];
                for k in (0..10).rev() {
                    cuts[k] = Interval {
                        lo: cuts[k + 1].lo - steps[k].0,
                        hi: cuts[k + 1].hi + steps[k].1,
                    };
                }
                FuzzyNumber::from_cuts(g, cuts).unwrap()
            })
    }

    proptest! {
        #[test]
        fn metric_axioms(u in fuzzy_strategy(), v in fuzzy_strategy(), w in fuzzy_strategy()) {
            let duv = u.d_inf(&v).unwrap();
            prop_assert!(duv >= 0.0);
            prop_assert_eq!(duv, v.d_inf(&u).unwrap());
            prop_assert_eq!(u.d_inf(&u).unwrap(), 0.0);
            prop_assert!(duv <= u.d_inf(&w).unwrap() + w.d_inf(&v).unwrap() + 1e-12);
        }

        #[test]
        fn hukuhara_round_trip_is_exact(v in fuzzy_strategy(), w in fuzzy_strategy()) {
            let u = v.add(&w).unwrap();
            if let Ok(d) = u.hukuhara_sub(&v) {
                prop_assert_eq!(v.add(&d).unwrap(), u.clone());
                assert_close(&d, &w, 1e-12);
            }
        }

        #[test]
        fn crisp_shift_identity(u in fuzzy_strategy(), r1 in -10.0..10.0f64, r2 in -10.0..10.0f64) {
            let g = u.grid().clone();
            let left = u.add(&FuzzyNumber::embed(r1, &g).unwrap()).unwrap()
                .hukuhara_sub(&FuzzyNumber::embed(r2, &g).unwrap()).unwrap();
            let right = u.add(&FuzzyNumber::embed(r1 - r2, &g).unwrap()).unwrap();
            assert_close(&left, &right, 1e-12);
        }

        #[test]
        fn operations_preserve_validity(u in fuzzy_strategy(), v in fuzzy_strategy(), b in -4.0..4.0f64) {
            prop_assert!(u.add(&v).unwrap().validate().is_ok());
            prop_assert!(u.scalar_mul(b).unwrap().validate().is_ok());
        }

        #[test]
        fn scaled_accumulation_matches_composed_ops(u in fuzzy_strategy(), v in fuzzy_strategy(), b in -4.0..4.0f64) {
            let mut acc = u.clone();
            acc.add_scaled_assign(b, &v);
            prop_assert_eq!(acc, u.add(&v.scalar_mul(b).unwrap()).unwrap());
        }
    }
}
