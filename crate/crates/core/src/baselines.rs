//! Exponential sums from quadrature of Craig's integral
//! Q(x) = (1/π)∫₀^{π/2} exp(-x²/(2 sin²θ)) dθ, used as accuracy baselines.
//!
//! A node θ with weight ω becomes the term (ω/π) exp(-x²/(2 sin²θ)).

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::ExpSum;
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Legendre,
    /// An h-point Legendre rule on each of N/h equal subintervals.
    CompositeLegendre { h: usize },
    RightRectangular,
    Trapezoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    /// Number of terms produced.
    pub n: usize,
}

impl QuadratureRule {
    pub fn new(kind: RuleKind, n: usize) -> Result<Self> {
        let rule = Self { kind, n };
        rule.validate()?;
        Ok(rule)
    }

    pub fn legendre(n: usize) -> Result<Self> {
        Self::new(RuleKind::Legendre, n)
    }

    pub fn composite_legendre(h: usize, n: usize) -> Result<Self> {
        Self::new(RuleKind::CompositeLegendre { h }, n)
    }

    pub fn right_rectangular(n: usize) -> Result<Self> {
        Self::new(RuleKind::RightRectangular, n)
    }

    pub fn trapezoidal(n: usize) -> Result<Self> {
        Self::new(RuleKind::Trapezoidal, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Contract("a rule needs at least one term".into()));
        }
        if let RuleKind::CompositeLegendre { h } = self.kind {
            if h == 0 || !self.n.is_multiple_of(h) {
                return Err(Error::Contract(format!(
                    "composite rule: N={} is not a multiple of h={h}",
                    self.n
                )));
            }
        }
        Ok(())
    }

    /// Nodes θ in (0, π/2] and their weights.
    fn nodes(&self) -> Vec<(f64, f64)> {
        let n = self.n;
        match self.kind {
            RuleKind::Legendre => legendre_on(n, 0.0, FRAC_PI_2),
            RuleKind::CompositeLegendre { h } => {
                let m = n / h;
                let width = FRAC_PI_2 / m as f64;
                (0..m)
                    .flat_map(|j| legendre_on(h, j as f64 * width, (j + 1) as f64 * width))
                    .collect()
            }
            RuleKind::RightRectangular => {
                let w = FRAC_PI_2 / n as f64;
                (1..=n).map(|i| (i as f64 * w, w)).collect()
            }
            RuleKind::Trapezoidal => {
                // the θ = 0 node carries a vanishing integrand and is left out
                let w = FRAC_PI_2 / n as f64;
                (1..=n).map(|i| (i as f64 * w, if i == n { 0.5 * w } else { w })).collect()
            }
        }
    }
}

fn legendre_on(n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let (t, w) = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    t.iter().zip(&w).map(|(t, w)| (lo + half * (t + 1.0), half * w)).collect()
}

/// The exponential sum a rule produces.
pub fn quadrature_coeffs(rule: &QuadratureRule) -> Result<ExpSum> {
    rule.validate()?;
    ExpSum::new(rule.nodes().into_iter().map(|(theta, w)| {
        let s = theta.sin();
        (w / PI, 0.5 / (s * s))
    }))
}

/// The two-term set {(1/12, 1/2), (1/4, 2/3)} from the literature.
pub fn chiani_n2() -> ExpSum {
    ExpSum::new([(1.0 / 12.0, 0.5), (0.25, 2.0 / 3.0)]).expect("fixed coefficients")
}
