//! Equalized-extrema systems for minimax approximations and one-sided bounds.

mod guess;
mod newton;
mod solve;
mod system;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::{ErrorMeasure, ExpSum, TargetPoly};

pub use guess::initial_guess;
pub(crate) use newton::TOLERANCE as RESIDUAL_TOL;
pub use solve::{solve, solve_eliminated, sweep};
pub use system::{jacobian, pack_unknowns, residuals, unknown_count};

/// Largest term count the solver accepts.
pub const MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Approximation,
    LowerBound,
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    /// e(0) = 0.
    Zero,
    /// e(0) = -w₀ e_max.
    Weighted,
}

/// The admissible (kind, origin) pairs. Bounds have a single origin flavor each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariantKind {
    #[serde(rename = "approx0")]
    ApproxZero,
    #[serde(rename = "approxw")]
    ApproxWeighted,
    #[serde(rename = "lower")]
    Lower,
    #[serde(rename = "upper")]
    Upper,
}

impl VariantKind {
    pub const ALL: [VariantKind; 4] = [
        VariantKind::ApproxZero,
        VariantKind::ApproxWeighted,
        VariantKind::Lower,
        VariantKind::Upper,
    ];

    pub fn from_parts(kind: Kind, origin: Origin) -> Result<Self> {
        match (kind, origin) {
            (Kind::Approximation, Origin::Zero) => Ok(Self::ApproxZero),
            (Kind::Approximation, Origin::Weighted) => Ok(Self::ApproxWeighted),
            (Kind::LowerBound, Origin::Weighted) => Ok(Self::Lower),
            (Kind::UpperBound, Origin::Zero) => Ok(Self::Upper),
            _ => Err(Error::Validation(format!(
                "{kind:?} does not admit the {origin:?} origin condition"
            ))),
        }
    }

    pub fn kind(self) -> Kind {
        match self {
            Self::ApproxZero | Self::ApproxWeighted => Kind::Approximation,
            Self::Lower => Kind::LowerBound,
            Self::Upper => Kind::UpperBound,
        }
    }

    pub fn origin(self) -> Origin {
        match self {
            Self::ApproxZero | Self::Upper => Origin::Zero,
            Self::ApproxWeighted | Self::Lower => Origin::Weighted,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ApproxZero => "approx0",
            Self::ApproxWeighted => "approxw",
            Self::Lower => "lower",
            Self::Upper => "upper",
        }
    }
}

impl std::str::FromStr for VariantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown variant '{s}'")))
    }
}

/// Number of interior error extrema for a problem.
pub fn extrema_count(measure: ErrorMeasure, kind: Kind, n: usize) -> usize {
    let k = match kind {
        Kind::UpperBound => 2 * n - 1,
        Kind::Approximation | Kind::LowerBound => 2 * n,
    };
    match measure {
        ErrorMeasure::Absolute => k,
        ErrorMeasure::Relative => k - 1,
    }
}

/// One minimax problem.
///
/// `weights` holds w₀ (origin), w₁..w_K (extrema) and, for the relative
/// measure, w_{K+1} at `x_end`. w₀ is carried but unused for zero-origin variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub target: TargetPoly,
    pub measure: ErrorMeasure,
    pub variant: VariantKind,
    pub n: usize,
    pub weights: Vec<f64>,
    pub x_end: Option<f64>,
    pub fixed_min_b: Option<f64>,
}

impl SolveSpec {
    pub fn absolute(target: TargetPoly, variant: VariantKind, n: usize) -> Result<Self> {
        Self::build(target, ErrorMeasure::Absolute, variant, n, None)
    }

    pub fn relative(target: TargetPoly, variant: VariantKind, n: usize, x_end: f64) -> Result<Self> {
        Self::build(target, ErrorMeasure::Relative, variant, n, Some(x_end))
    }

    pub fn new(
        target: TargetPoly,
        measure: ErrorMeasure,
        variant: VariantKind,
        n: usize,
        x_end: Option<f64>,
    ) -> Result<Self> {
        Self::build(target, measure, variant, n, x_end)
    }

    fn build(
        target: TargetPoly,
        measure: ErrorMeasure,
        variant: VariantKind,
        n: usize,
        x_end: Option<f64>,
    ) -> Result<Self> {
        if !(1..=MAX_N).contains(&n) {
            return Err(Error::Validation(format!("N={n} outside 1..={MAX_N}")));
        }
        let fixed_min_b = match variant {
            VariantKind::Upper => Some(0.5 * target.tail_power() as f64),
            _ => None,
        };
        let k = extrema_count(measure, variant.kind(), n);
        let len = k + 1 + usize::from(measure == ErrorMeasure::Relative);
        let spec = Self {
            target,
            measure,
            variant,
            n,
            weights: vec![1.0; len],
            x_end,
            fixed_min_b,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.weights = weights;
        self.validate()?;
        Ok(self)
    }

    /// Same problem at a different term count, with uniform weights.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::build(self.target.clone(), self.measure, self.variant, n, self.x_end)
    }

    pub fn k(&self) -> usize {
        extrema_count(self.measure, self.variant.kind(), self.n)
    }

    /// Signed error at x₁..x_K, followed by x_end for the relative measure, in units of e_max.
    pub fn ripple(&self) -> Vec<f64> {
        let sys = system::System::from_spec(self);
        let mut out: Vec<f64> = (1..=sys.k).map(|k| sys.sign(k)).collect();
        if sys.is_relative() {
            out.push(sys.end_sign());
        }
        out
    }

    /// Error at the origin in units of e_max.
    pub fn origin_error(&self) -> f64 {
        match self.variant.origin() {
            Origin::Zero => 0.0,
            Origin::Weighted => -self.weights[0],
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_N).contains(&self.n) {
            return Err(Error::Validation(format!("N={} outside 1..={MAX_N}", self.n)));
        }
        let k = self.k();
        match (self.measure, self.x_end) {
            (ErrorMeasure::Relative, Some(x)) if (0.5..=20.0).contains(&x) => {}
            (ErrorMeasure::Relative, Some(x)) => {
                return Err(Error::Validation(format!("x_end={x} outside [0.5, 20]")))
            }
            (ErrorMeasure::Relative, None) => {
                return Err(Error::Validation("relative measure needs x_end".into()))
            }
            (ErrorMeasure::Absolute, Some(_)) => {
                return Err(Error::Validation("x_end only applies to the relative measure".into()))
            }
            (ErrorMeasure::Absolute, None) => {}
        }
        let want = k + 1 + usize::from(self.measure == ErrorMeasure::Relative);
        if self.weights.len() != want {
            return Err(Error::Validation(format!(
                "expected {want} weights (w0..w{}), got {}",
                want - 1,
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(Error::Validation("weights must lie in (0, 1]".into()));
        }
        if !self.weights.contains(&1.0) {
            return Err(Error::Validation("at least one weight must equal 1".into()));
        }
        let expect_b = match self.variant {
            VariantKind::Upper => Some(0.5 * self.target.tail_power() as f64),
            _ => None,
        };
        if self.fixed_min_b != expect_b {
            return Err(Error::Validation(format!(
                "fixed_min_b must be {expect_b:?} for {}",
                self.variant.name()
            )));
        }
        if self.measure == ErrorMeasure::Relative && self.target.coeffs()[0] != 0.0 {
            return Err(Error::Validation(
                "relative measure needs a target that vanishes in the tail".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxSolution {
    pub expsum: ExpSum,
    pub e_max: f64,
    pub extrema: Vec<f64>,
    pub spec: SolveSpec,
    pub diagnostics: Diagnostics,
}
