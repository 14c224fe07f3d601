//! Symbol error probability of 4-QAM over Nakagami-m fading.
//!
//! Conditioned on the SNR γ, P_E(γ) = 2Q(√γ) - Q²(√γ). Averaging over the
//! gamma-distributed γ is closed-form once P_E is an exponential sum, since
//! each term averages to a value of the gamma moment generating function.

use crate::error::{Error, Result};
use crate::expsum::{ExpSum, TargetPoly};
use crate::quadrature::adaptive;
use crate::special::{q_unchecked, Probability};

/// Absolute tolerance of the numerical average.
const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiChannel {
    m: f64,
    mean_snr: f64,
}

impl NakagamiChannel {
    /// `mean_snr` is linear, not in dB.
    pub fn new(m: f64, mean_snr: f64) -> Result<Self> {
        if !(m >= 0.5 && m.is_finite()) {
            return Err(Error::Domain(format!("fading parameter m={m} must be finite and at least 0.5")));
        }
        if !(mean_snr > 0.0 && mean_snr.is_finite()) {
            return Err(Error::Domain(format!("mean SNR {mean_snr} must be positive")));
        }
        Ok(Self { m, mean_snr })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn mean_snr(&self) -> f64 {
        self.mean_snr
    }
}

/// Conditional error target 2Q - Q² as a polynomial in Q.
pub fn qam4_target() -> TargetPoly {
    TargetPoly::new(vec![0.0, 2.0, -1.0]).expect("fixed coefficients")
}

pub fn sep_4qam_conditional(snr: f64) -> Result<Probability> {
    if !(snr >= 0.0) {
        return Err(Error::Domain(format!("SNR {snr} must be non-negative")));
    }
    let q = q_unchecked(snr.sqrt());
    Probability::new(2.0 * q - q * q)
}

/// E[exp(sγ)] = (1 - s γ̄/m)^{-m}, defined for s < m/γ̄.
pub fn mgf_gamma(ch: &NakagamiChannel, s: f64) -> Result<f64> {
    let limit = ch.m / ch.mean_snr;
    if !(s < limit) {
        return Err(Error::Domain(format!("MGF argument {s} not below m/γ̄ = {limit}")));
    }
    Ok((1.0 - s / limit).powf(-ch.m))
}

/// Average of Σ aₙ exp(-bₙ γ) over the fading, Σ aₙ (1 + bₙ γ̄/m)^{-m}.
pub fn sep_average_closed(s: &ExpSum, ch: &NakagamiChannel) -> Result<Probability> {
    sep_average_closed_alpha(s, ch, 1.0)
}

/// As [`sep_average_closed`] for a conditional error P(Q(α√γ)).
pub fn sep_average_closed_alpha(s: &ExpSum, ch: &NakagamiChannel, alpha: f64) -> Result<Probability> {
    let g = ch.mean_snr / ch.m * alpha * alpha;
    let v: f64 = s.terms().map(|(a, b)| a * (1.0 + b * g).powf(-ch.m)).sum();
    Probability::new(v.clamp(0.0, 1.0))
}

/// Numerical average of the conditional 4-QAM error over the fading.
pub fn sep_average_exact(ch: &NakagamiChannel) -> Result<Probability> {
    let v = average_exact(&qam4_target(), ch, 1.0)?;
    Probability::new(v.clamp(0.0, 1.0))
}

/// E[Ω(Q(α√γ))] by adaptive quadrature.
///
/// With u = mγ/γ̄ the density is u^{m-1}e^{-u}/Γ(m), singular at 0 for m < 1.
/// The further substitution s = u^m removes the singularity:
/// the average becomes ∫ Ω(Q(α√(γ̄ s^{1/m}/m))) exp(-s^{1/m}) ds / Γ(m+1).
/// The range stops 40 standard deviations above the mean of u. At high SNR
/// the integrand lives in a sliver near the origin, so the range is first cut
/// into dyadic panels in u.
pub fn average_exact(t: &TargetPoly, ch: &NakagamiChannel, alpha: f64) -> Result<f64> {
    const PANELS: i32 = 80;
    let m = ch.m;
    let scale = ch.mean_snr / m;
    let u_max = m + 40.0 * m.sqrt();
    let f = |s: f64| {
        let u = s.powf(1.0 / m);
        t.omega(q_unchecked(alpha * (scale * u).sqrt())) * (-u).exp()
    };
    let mut total = 0.0;
    let mut hi = u_max;
    for k in 1..=PANELS {
        let lo = if k == PANELS { 0.0 } else { u_max * 0.5f64.powi(k) };
        total += adaptive(f, lo.powf(m), hi.powf(m), EXACT_TOL / PANELS as f64)
            .ok_or_else(|| Error::Numeric("fading average did not converge".into()))?;
        hi = lo;
    }
    Ok(total / libm::tgamma(m + 1.0))
}
