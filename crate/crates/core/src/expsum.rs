//! Exponential sums, polynomial targets in Q, and the error functionals between them.

use serde::{Deserialize, Serialize};

use crate::error::{check_x, Error, Result};
use crate::special::{phi, q_unchecked};

/// Σ aₙ exp(-bₙ x²) with all a, b positive and b strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ExpSum {
    /// Builds a sum from (a, b) pairs. Pairs are sorted by b; exact duplicates
    /// in b are merged by adding their weights.
    pub fn new(terms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut t: Vec<(f64, f64)> = terms.into_iter().collect();
        if t.is_empty() {
            return Err(Error::Validation("exponential sum needs at least one term".into()));
        }
        for &(a, b) in &t {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Validation(format!("weight a={a} must be positive")));
            }
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::Validation(format!("rate b={b} must be positive")));
            }
        }
        t.sort_by(|x, y| x.1.total_cmp(&y.1));
        let mut a = Vec::with_capacity(t.len());
        let mut b: Vec<f64> = Vec::with_capacity(t.len());
        for (ai, bi) in t {
            if b.last() == Some(&bi) {
                *a.last_mut().unwrap() += ai;
            } else {
                a.push(ai);
                b.push(bi);
            }
        }
        Ok(Self { a, b })
    }

    pub fn from_slices(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Validation(format!(
                "{} weights but {} rates",
                a.len(),
                b.len()
            )));
        }
        Self::new(a.iter().copied().zip(b.iter().copied()))
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.a.iter().copied().zip(self.b.iter().copied())
    }

    pub fn min_b(&self) -> f64 {
        self.b[0]
    }

    /// Value at x. Terms that underflow simply vanish.
    pub fn eval(&self, x: f64) -> f64 {
        let x2 = x * x;
        self.terms().map(|(a, b)| a * (-b * x2).exp()).sum()
    }

    pub fn eval_prime(&self, x: f64) -> f64 {
        let x2 = x * x;
        -2.0 * x * self.terms().map(|(a, b)| a * b * (-b * x2).exp()).sum::<f64>()
    }

    pub fn eval_second(&self, x: f64) -> f64 {
        let x2 = x * x;
        self.terms()
            .map(|(a, b)| a * (4.0 * b * b * x2 - 2.0 * b) * (-b * x2).exp())
            .sum()
    }
}

/// Ω(Q) = Σ c_p Q^p, a polynomial in Q(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetPoly {
    c: Vec<f64>,
}

impl TargetPoly {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.len() < 2 {
            return Err(Error::Validation("target polynomial needs degree at least 1".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite polynomial coefficient".into()));
        }
        if *c.last().unwrap() == 0.0 {
            return Err(Error::Validation("leading polynomial coefficient is zero".into()));
        }
        Ok(Self { c })
    }

    /// Q itself.
    pub fn identity() -> Self {
        Self { c: vec![0.0, 1.0] }
    }

    /// Q^p.
    pub fn power(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::Validation("power must be at least 1".into()));
        }
        let mut c = vec![0.0; p + 1];
        c[p] = 1.0;
        Ok(Self { c })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    /// Smallest p ≥ 1 with c_p ≠ 0. This power dominates the tail as Q → 0.
    pub fn tail_power(&self) -> usize {
        (1..self.c.len()).find(|&p| self.c[p] != 0.0).unwrap()
    }

    /// Ω at Q = ½, the target value at the origin.
    pub fn at_origin(&self) -> f64 {
        self.omega(0.5)
    }

    /// Ω as a polynomial in q, by Horner.
    pub fn omega(&self, q: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &c| acc * q + c)
    }

    fn omega_dq(&self, q: f64) -> (f64, f64, f64) {
        let mut v = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for &c in self.c.iter().rev() {
            d2 = d2 * q + 2.0 * d1;
            d1 = d1 * q + v;
            v = v * q + c;
        }
        (v, d1, d2)
    }

    /// Ω(Q(x)) and its first two x-derivatives.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let q = q_unchecked(x);
        let qp = -phi(x);
        let qpp = -x * qp;
        let (v, d1, d2) = self.omega_dq(q);
        (v, d1 * qp, d2 * qp * qp + d1 * qpp)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.omega(q_unchecked(x)))
    }

    pub fn eval_prime(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.eval3(x).1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMeasure {
    Absolute,
    Relative,
}

impl ErrorMeasure {
    /// Exponent λ in d/Ω^λ.
    pub fn lambda(self) -> f64 {
        match self {
            ErrorMeasure::Absolute => 0.0,
            ErrorMeasure::Relative => 1.0,
        }
    }
}

/// Smallest target magnitude accepted as a relative-error denominator.
pub const MIN_DENOMINATOR: f64 = 1e-300;

/// Error value and its x-derivative for d/Ω^λ.
pub(crate) fn error_lambda(s: &ExpSum, t: &TargetPoly, lam: f64, x: f64) -> (f64, f64) {
    let (om, omp, _) = t.eval3(x);
    let d = s.eval(x) - om;
    let dp = s.eval_prime(x) - omp;
    if lam == 0.0 {
        return (d, dp);
    }
    let scale = om.powf(-lam);
    (d * scale, (dp - lam * d * omp / om) * scale)
}

fn check_denominator(t: &TargetPoly, m: ErrorMeasure, x: f64) -> Result<()> {
    if m == ErrorMeasure::Relative {
        let om = t.omega(q_unchecked(x));
        if !(om.abs() >= MIN_DENOMINATOR) {
            return Err(Error::Domain(format!(
                "relative error undefined at x={x}: target {om:e}"
            )));
        }
    }
    Ok(())
}

/// d(x) = s(x) - Ω(x) or r(x) = d(x)/Ω(x).
pub fn error(s: &ExpSum, t: &TargetPoly, m: ErrorMeasure, x: f64) -> Result<f64> {
    check_x(x)?;
    check_denominator(t, m, x)?;
    Ok(error_lambda(s, t, m.lambda(), x).0)
}

pub fn error_prime(s: &ExpSum, t: &TargetPoly, m: ErrorMeasure, x: f64) -> Result<f64> {
    check_x(x)?;
    check_denominator(t, m, x)?;
    Ok(error_lambda(s, t, m.lambda(), x).1)
}

/// Limit of the error function as x → ∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailClass {
    /// Relative error grows without bound.
    Diverges,
    /// Relative error tends to -1.
    ConvergesToMinusOne,
    /// Absolute error tends to 0.
    ConvergesToZeroAbs,
    /// Absolute error tends to -c₀ for a target with a constant term.
    ConvergesToOffset(f64),
}

/// Classifies the error tail from the slowest exponential rate.
///
/// Far out, Ω ~ c_p Q^p for the lowest power p present, and Q^p decays like
/// exp(-p x²/2)/x^p. A rate at or below p/2 therefore outlives the target.
pub fn tail_class(s: &ExpSum, t: &TargetPoly, m: ErrorMeasure) -> TailClass {
    let c0 = t.coeffs()[0];
    match m {
        ErrorMeasure::Absolute if c0 == 0.0 => TailClass::ConvergesToZeroAbs,
        ErrorMeasure::Absolute => TailClass::ConvergesToOffset(-c0),
        ErrorMeasure::Relative => {
            let half_p = 0.5 * t.tail_power() as f64;
            if c0 == 0.0 && s.min_b() <= half_p {
                TailClass::Diverges
            } else {
                TailClass::ConvergesToMinusOne
            }
        }
    }
}

/// Most terms a product expansion may produce.
pub const MAX_PRODUCT_TERMS: usize = 10_000;

/// Expands Π sₗ^{pₗ} into a single sum, merging rates that agree to 1e-12 relative.
pub fn combine_powers(factors: &[(ExpSum, usize)]) -> Result<ExpSum> {
    if factors.is_empty() {
        return Err(Error::Validation("no factors given".into()));
    }
    let mut count: usize = 1;
    for (s, p) in factors {
        for _ in 0..*p {
            count = count
                .checked_mul(s.len())
                .filter(|&c| c <= MAX_PRODUCT_TERMS)
                .ok_or_else(|| {
                    Error::Capacity(format!(
                        "product expands beyond {MAX_PRODUCT_TERMS} terms"
                    ))
                })?;
        }
    }
    let mut acc: Vec<(f64, f64)> = vec![(1.0, 0.0)];
    for (s, p) in factors {
        for _ in 0..*p {
            let mut next = Vec::with_capacity(acc.len() * s.len());
            for &(a0, b0) in &acc {
                for (a1, b1) in s.terms() {
                    next.push((a0 * a1, b0 + b1));
                }
            }
            acc = merge_close(next);
        }
    }
    if acc.len() == 1 && acc[0].1 == 0.0 {
        return Err(Error::Validation("all powers are zero".into()));
    }
    ExpSum::new(acc)
}

fn merge_close(mut t: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    t.sort_by(|x, y| x.1.total_cmp(&y.1));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(t.len());
    for (a, b) in t {
        match out.last_mut() {
            Some(last) if (b - last.1).abs() <= 1e-12 * b.abs().max(last.1.abs()) => {
                // keep the weighted mean rate so the merged term is symmetric
                let w = last.0 + a;
                last.1 = (last.0 * last.1 + a * b) / w;
                last.0 = w;
            }
            _ => out.push((a, b)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n2() -> ExpSum {
        ExpSum::from_slices(
            &[0.3736889599671366, 0.1167651897698837],
            &[0.8179084584179674, 16.45047046852372],
        )
        .unwrap()
    }

    #[allow(clippy::excessive_precision)]
    fn n3() -> ExpSum {
        ExpSum::from_slices(
            &[3.259195350781647e-1, 1.302528627687561e-1, 4.047435009465072e-2],
            &[7.051797307608448e-1, 5.489376068647640e0, 1.335391071637174e2],
        )
        .unwrap()
    }

    fn chiani() -> ExpSum {
        ExpSum::from_slices(&[1.0 / 12.0, 0.25], &[0.5, 2.0 / 3.0]).unwrap()
    }

    #[test]
    fn construction_sorts_and_validates() {
        let s = ExpSum::new([(0.1, 3.0), (0.2, 1.0)]).unwrap();
        assert_eq!(s.b(), &[1.0, 3.0]);
        assert_eq!(s.a(), &[0.2, 0.1]);
        assert!(ExpSum::new([(0.0, 1.0)]).is_err());
        assert!(ExpSum::new([(1.0, -1.0)]).is_err());
        assert!(ExpSum::new(Vec::new()).is_err());
        let m = ExpSum::new([(0.1, 1.0), (0.2, 1.0)]).unwrap();
        assert_eq!(m.len(), 1);
        assert!((m.a()[0] - 0.3).abs() < 1e-16);
    }

    #[test]
    fn eval_examples() {
        assert!((n2().eval(0.0) - 0.4904541497370203).abs() < 1e-16);
        assert!(n2().eval(30.0) < 1e-300);
        assert!((chiani().eval(0.0) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn derivative_examples() {
        let one = ExpSum::new([(1.0, 1.0)]).unwrap();
        let e1 = (-1.0f64).exp();
        assert_eq!(n2().eval_prime(0.0), 0.0);
        assert!((one.eval_prime(1.0) + 2.0 * e1).abs() < 1e-16);
        assert_eq!(one.eval_second(0.0), -2.0);
        assert!((one.eval_second(1.0) - 2.0 * e1).abs() < 1e-16);
        let h = 1e-6;
        let s = n2();
        let fd = (s.eval(1.0 + h) - s.eval(1.0 - h)) / (2.0 * h);
        assert!(((fd - s.eval_prime(1.0)) / fd).abs() < 1e-8);
        let s = n3();
        let h = 1e-6;
        let fd = (s.eval_prime(0.5 + h) - s.eval_prime(0.5 - h)) / (2.0 * h);
        assert!(((fd - s.eval_second(0.5)) / fd).abs() < 1e-6);
    }

    #[test]
    fn target_examples() {
        let qam = TargetPoly::new(vec![0.0, 2.0, -1.0]).unwrap();
        assert_eq!(qam.eval(0.0).unwrap(), 0.75);
        assert_eq!(TargetPoly::power(3).unwrap().eval(0.0).unwrap(), 0.125);
        let id = TargetPoly::identity();
        for x in [0.0, 0.4, 2.0, 7.0] {
            assert_eq!(id.eval(x).unwrap(), q_unchecked(x));
        }
        assert_eq!(qam.tail_power(), 1);
        assert_eq!(TargetPoly::power(4).unwrap().tail_power(), 4);
        assert!(TargetPoly::new(vec![1.0, 0.0]).is_err());
        assert!(TargetPoly::new(vec![1.0]).is_err());
        assert!(TargetPoly::power(0).is_err());
    }

    #[test]
    fn target_derivatives_by_differences() {
        let t = TargetPoly::new(vec![0.1, 2.0, -1.0, 0.5]).unwrap();
        for x in [0.2, 1.0, 3.0] {
            let h = 1e-5;
            let (_, d1, d2) = t.eval3(x);
            let fd1 = (t.eval3(x + h).0 - t.eval3(x - h).0) / (2.0 * h);
            let fd2 = (t.eval3(x + h).1 - t.eval3(x - h).1) / (2.0 * h);
            assert!(((fd1 - d1) / d1).abs() < 1e-8);
            assert!(((fd2 - d2) / d2).abs() < 1e-6);
        }
    }

    #[test]
    fn error_examples() {
        let id = TargetPoly::identity();
        let abs = ErrorMeasure::Absolute;
        let d = error(&chiani(), &id, abs, 0.0).unwrap();
        assert!((d + 1.0 / 6.0).abs() < 1e-15);
        let d = error(&n2(), &id, abs, 0.0).unwrap();
        assert!((d + 9.546e-3).abs() < 2e-6);
        let half = ExpSum::new([(0.5, 0.5)]).unwrap();
        assert_eq!(error(&half, &id, abs, 0.0).unwrap(), 0.0);
        assert!(matches!(
            error(&half, &id, ErrorMeasure::Relative, 40.0),
            Err(Error::Domain(_))
        ));
        assert!(error(&half, &id, ErrorMeasure::Relative, 30.0).is_ok());
    }

    #[test]
    fn tail_classes() {
        let id = TargetPoly::identity();
        let rel = ErrorMeasure::Relative;
        let s = ExpSum::new([(0.3, 0.6), (0.1, 3.0)]).unwrap();
        assert_eq!(tail_class(&s, &id, rel), TailClass::ConvergesToMinusOne);
        let s = ExpSum::new([(0.3, 0.5), (0.1, 3.0)]).unwrap();
        assert_eq!(tail_class(&s, &id, rel), TailClass::Diverges);
        let s = ExpSum::new([(0.1, 1.4)]).unwrap();
        assert_eq!(tail_class(&s, &TargetPoly::power(3).unwrap(), rel), TailClass::Diverges);
        assert_eq!(tail_class(&s, &id, ErrorMeasure::Absolute), TailClass::ConvergesToZeroAbs);
        let off = TargetPoly::new(vec![0.25, 1.0]).unwrap();
        assert_eq!(
            tail_class(&s, &off, ErrorMeasure::Absolute),
            TailClass::ConvergesToOffset(-0.25)
        );
    }

    #[test]
    fn tail_class_agrees_with_large_x_ratio() {
        // Q³ tail against rates below and above 3/2
        let t = TargetPoly::power(3).unwrap();
        let below = ExpSum::new([(0.1, 1.4)]).unwrap();
        let above = ExpSum::new([(0.1, 2.0)]).unwrap();
        let r = |s: &ExpSum, x: f64| error(s, &t, ErrorMeasure::Relative, x).unwrap();
        assert!(r(&below, 14.0) > r(&below, 10.0) && r(&below, 14.0) > 1e3);
        assert!((r(&above, 14.0) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn combine_examples() {
        let s = n2();
        assert_eq!(combine_powers(&[(s.clone(), 1)]).unwrap(), s);
        let h = ExpSum::new([(0.5, 0.5)]).unwrap();
        let sq = combine_powers(&[(h, 2)]).unwrap();
        assert_eq!(sq.a(), &[0.25]);
        assert_eq!(sq.b(), &[1.0]);
        let sq = combine_powers(&[(s.clone(), 2)]).unwrap();
        assert_eq!(sq.len(), 3);
        let want = s.eval(1.0).powi(2);
        assert!(((sq.eval(1.0) - want) / want).abs() < 1e-12);
    }

    #[test]
    fn combine_capacity() {
        let s = ExpSum::new((1..=11).map(|i| (0.01, i as f64))).unwrap();
        // 11⁴ exceeds the cap even though merging would shrink the result
        let r = combine_powers(&[(s.clone(), 4)]);
        assert!(matches!(r, Err(Error::Capacity(_))));
        assert!(combine_powers(&[(s, 3)]).is_ok());
    }
}
