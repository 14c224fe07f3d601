//! Gaussian Q-function, its derivatives, and a Craig-integral cross-check.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI, FRAC_PI_2, PI};

use crate::error::{check_x, Error, Result};
use crate::quadrature::GaussRule;

const FRAC_1_SQRT_2_HI: f64 = FRAC_1_SQRT_2;
const FRAC_1_SQRT_2_LO: f64 = -4.833_646_656_726_457e-17;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A tail probability, always in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!("{value} is not a probability")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Q(x) for finite x ≥ 0.
pub fn q(x: f64) -> Result<Probability> {
    check_x(x)?;
    Ok(Probability(q_unchecked(x)))
}

/// Q(x) without argument validation; used on the solver's hot path.
///
/// The scaled argument x/√2 is carried as a double-double so that its rounding
/// error does not get amplified by the steep tail. The remaining low part enters
/// through a first-order Taylor term.
pub fn q_unchecked(x: f64) -> f64 {
    let zh = x * FRAC_1_SQRT_2_HI;
    let zl = x.mul_add(FRAC_1_SQRT_2_HI, -zh) + x * FRAC_1_SQRT_2_LO;
    let base = libm::erfc(zh);
    if base == 0.0 {
        return 0.0;
    }
    0.5 * (base - zl * FRAC_2_SQRT_PI * gauss_kernel(zh * std::f64::consts::SQRT_2))
}

/// exp(-x²/2) with the square split so that its rounding stays at one ulp for large x.
fn gauss_kernel(x: f64) -> f64 {
    let hi = f64::from_bits(x.to_bits() & 0xffff_ffff_f800_0000);
    let lo = x - hi;
    (-0.5 * hi * hi).exp() * (-0.5 * lo * (x + hi)).exp()
}

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * gauss_kernel(x)
}

/// Q'(x) = -φ(x).
pub fn q_prime(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {x}")));
    }
    Ok(-phi(x))
}

/// Q''(x) = x φ(x).
pub fn q_second(x: f64) -> f64 {
    x * phi(x)
}

/// Craig's integral (1/π)∫₀^{π/2} exp(-x²/(2 sin²θ)) dθ by Gauss-Legendre panels.
///
/// The integrand switches on over a θ-width of order x, which a single rule
/// cannot resolve for small x. Panels are therefore graded dyadically towards
/// θ = 0, each carrying `nodes` points, until the integrand is negligible.
pub fn q_craig_oracle(x: f64, nodes: usize) -> Result<Probability> {
    check_x(x)?;
    if nodes < 4 {
        return Err(Error::Validation(format!("need at least 4 nodes, got {nodes}")));
    }
    if x == 0.0 {
        return Ok(Probability(0.5));
    }
    let rule = GaussRule::new(nodes);
    let half_x2 = 0.5 * x * x;
    let f = |t: f64| {
        let s = t.sin();
        (-half_x2 / (s * s)).exp()
    };
    let mut hi = FRAC_PI_2;
    let mut sum = 0.0;
    for _ in 0..200 {
        let lo = 0.5 * hi;
        sum += rule.integrate(lo, hi, f);
        // below lo the integrand is at most exp(-x²/(2 sin² lo))
        let s = lo.sin();
        if half_x2 / (s * s) - half_x2 > 80.0 {
            break;
        }
        hi = lo;
    }
    Probability::new((sum / PI).min(1.0))
}
