//! Independent checks on coefficient sets: error extrema, measured maxima,
//! and certification of minimax and bound properties.

use std::fmt;

use crate::error::{Error, Result};
use crate::expsum::{error_lambda, ErrorMeasure, ExpSum, TargetPoly, MIN_DENOMINATOR};
use crate::minimax::{Kind, MinimaxSolution, SolveSpec};
use crate::special::q_unchecked;

/// Points in the default scan grid.
pub const SCAN_POINTS: usize = 10_000;
/// End of the scan range for absolute-measure checks.
pub const ABS_RANGE_END: f64 = 15.0;
/// How far the tail checks look.
pub const TAIL_END: f64 = 50.0;
const BOUND_POINTS: usize = 4000;
const RIPPLE_TOL: f64 = 1e-6;
const MAX_TOL: f64 = 1e-6;

/// A local extremum of the error function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub e: f64,
    pub sign: i8,
}

/// One scan point. `r` is NaN where the target is too small to divide by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub x: f64,
    pub target: f64,
    pub approx: f64,
    pub d: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProfile {
    pub grid: Vec<ProfilePoint>,
    /// Extrema of the error in the requested measure, ordered in x.
    pub extrema: Vec<Extremum>,
    pub measured_d_max: f64,
    /// Over the range, cut back to `relative_end`.
    pub measured_r_max: f64,
    pub range: (f64, f64),
    /// Where the target drops below the smallest usable denominator.
    pub relative_end: f64,
}

/// Largest x at which |Ω(x)| is still a usable relative-error denominator.
pub fn relative_limit(t: &TargetPoly) -> f64 {
    let ok = |x: f64| t.omega(q_unchecked(x)).abs() >= MIN_DENOMINATOR;
    if ok(TAIL_END) {
        return TAIL_END;
    }
    let (mut lo, mut hi) = (0.0, TAIL_END);
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Union of a linear grid on [lo, min(hi, 1)] and a logarithmic grid up to hi.
///
/// The log grid starts two decades below 1/√b_max, where the steepest term
/// begins to bend, so ripples crowded at the origin are still resolved.
pub fn scan_grid(lo: f64, hi: f64, b_max: f64, points: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    if points < 4 {
        return vec![lo, hi];
    }
    let half = points / 2;
    let mut out = Vec::with_capacity(points + 2);
    let lin_hi = hi.min(1.0);
    if lin_hi > lo {
        out.extend((0..half).map(|i| lo + (lin_hi - lo) * i as f64 / (half - 1) as f64));
    }
    let start = lo.max(0.01 / b_max.max(1e-300).sqrt()).max(1e-12);
    if start < hi {
        let (l0, l1) = (start.ln(), hi.ln());
        out.extend((0..points - half).map(|i| (l0 + (l1 - l0) * i as f64 / (points - half - 1) as f64).exp()));
    }
    out.push(lo);
    out.push(hi);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out.retain(|&x| x >= lo && x <= hi);
    out
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !(lo >= 0.0 && lo.is_finite() && hi.is_finite() && hi >= lo) {
        return Err(Error::Contract(format!("bad range [{lo}, {hi}]")));
    }
    Ok(())
}

/// Range end, shortened for the relative measure to where the target is usable.
fn usable_end(t: &TargetPoly, m: ErrorMeasure, hi: f64) -> f64 {
    match m {
        ErrorMeasure::Absolute => hi,
        ErrorMeasure::Relative => hi.min(relative_limit(t)),
    }
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Interior roots of e′ in [lo, hi], located by sign changes on the scan
/// grid and refined by bisection on the sign of e′.
pub fn find_extrema(s: &ExpSum, t: &TargetPoly, m: ErrorMeasure, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    check_range(lo, hi)?;
    Ok(extrema_in(s, t, m.lambda(), lo, usable_end(t, m, hi), SCAN_POINTS))
}

fn extrema_in(s: &ExpSum, t: &TargetPoly, lam: f64, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
    let b_max = s.b().last().copied().unwrap_or(1.0);
    let de = |x: f64| error_lambda(s, t, lam, x).1;
    let mut out = Vec::new();
    let mut prev: Option<(f64, i8)> = None;
    for x in scan_grid(lo, hi, b_max, points) {
        let sg = sign_of(de(x));
        if sg == 0 {
            continue;
        }
        if let Some((xp, sp)) = prev {
            if sp != sg {
                let root = bisect(&de, xp, x, sp);
                out.push((root, error_lambda(s, t, lam, root).0));
            }
        }
        prev = Some((x, sg));
    }
    out
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, sign_lo: i8) -> f64 {
    while hi - lo > 1e-12 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = sign_of(f(mid));
        if s == 0 {
            return mid;
        }
        if s == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest |e| over the extrema, the endpoints, and the scan grid.
pub fn max_error(s: &ExpSum, t: &TargetPoly, m: ErrorMeasure, lo: f64, hi: f64) -> Result<f64> {
    Ok(max_error_at(s, t, m, lo, hi)?.1)
}

/// Like [`max_error`], also returning where the maximum is attained.
pub fn max_error_at(s: &ExpSum, t: &TargetPoly, m: ErrorMeasure, lo: f64, hi: f64) -> Result<(f64, f64)> {
    check_range(lo, hi)?;
    let hi = usable_end(t, m, hi);
    Ok(argmax_in(s, t, m.lambda(), lo, hi, SCAN_POINTS))
}

fn max_in(s: &ExpSum, t: &TargetPoly, lam: f64, lo: f64, hi: f64, points: usize) -> f64 {
    argmax_in(s, t, lam, lo, hi, points).1
}

fn argmax_in(s: &ExpSum, t: &TargetPoly, lam: f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let b_max = s.b().last().copied().unwrap_or(1.0);
    let e = |x: f64| (x, error_lambda(s, t, lam, x).0.abs());
    let pick = |a: (f64, f64), b: (f64, f64)| if b.1 > a.1 { b } else { a };
    let grid = scan_grid(lo, hi, b_max, points).into_iter().map(e).fold(e(lo), pick);
    extrema_in(s, t, lam, lo, hi, points)
        .into_iter()
        .map(|(x, v)| (x, v.abs()))
        .fold(pick(grid, e(hi)), pick)
}

pub fn profile_point(s: &ExpSum, t: &TargetPoly, x: f64) -> ProfilePoint {
    let target = t.omega(q_unchecked(x));
    let approx = s.eval(x);
    let d = approx - target;
    let r = if target.abs() >= MIN_DENOMINATOR { d / target } else { f64::NAN };
    ProfilePoint { x, target, approx, d, r }
}

/// Values and errors on a scan grid of `points` points over [lo, hi], with the
/// extrema of the error in measure `m`.
pub fn profile(s: &ExpSum, t: &TargetPoly, m: ErrorMeasure, lo: f64, hi: f64, points: usize) -> Result<ErrorProfile> {
    check_range(lo, hi)?;
    let rel_end = relative_limit(t);
    let b_max = s.b().last().copied().unwrap_or(1.0);
    let grid = scan_grid(lo, hi, b_max, points).into_iter().map(|x| profile_point(s, t, x)).collect();
    let extrema = extrema_in(s, t, m.lambda(), lo, usable_end(t, m, hi), SCAN_POINTS)
        .into_iter()
        .map(|(x, e)| Extremum { x, e, sign: sign_of(e) })
        .collect();
    let r_hi = hi.min(rel_end);
    Ok(ErrorProfile {
        grid,
        extrema,
        measured_d_max: max_in(s, t, 0.0, lo, hi, SCAN_POINTS),
        measured_r_max: if r_hi >= lo { max_in(s, t, 1.0, lo, r_hi, SCAN_POINTS) } else { f64::NAN },
        range: (lo, hi),
        relative_end: rel_end,
    })
}

/// One certification check. `margin` is positive when the check passes, in
/// units of the relevant tolerance's scale (usually e_max).
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub checks: Vec<Check>,
    pub extrema: Vec<(f64, f64)>,
    pub measured_max: f64,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "pass" } else { "FAIL" };
            writeln!(f, "{mark:4}  {:<15} margin {:>11.3e}  {}", c.name, c.margin, c.detail)?;
        }
        write!(f, "{}", if self.passed() { "certified" } else { "not certified" })
    }
}

/// Certifies a solved problem against its own spec and e_max.
pub fn certify(sol: &MinimaxSolution) -> Certificate {
    certify_coefficients(&sol.expsum, &sol.spec, sol.e_max)
}

/// Certifies arbitrary coefficients as the solution of `spec` with maximum error `e_max`.
pub fn certify_coefficients(s: &ExpSum, spec: &SolveSpec, e_max: f64) -> Certificate {
    let t = &spec.target;
    let lam = spec.measure.lambda();
    let hi = match spec.measure {
        ErrorMeasure::Absolute => ABS_RANGE_END,
        ErrorMeasure::Relative => spec.x_end.unwrap_or(ABS_RANGE_END).min(relative_limit(t)),
    };
    let kind = spec.variant.kind();
    let e_at = |x: f64| error_lambda(s, t, lam, x).0;
    let found = extrema_in(s, t, lam, 0.0, hi, SCAN_POINTS);
    let k = spec.k();
    let ripple = spec.ripple();
    let mut checks = Vec::new();

    let count_ok = found.len() == k;
    checks.push(Check {
        name: "extrema-count",
        passed: count_ok,
        margin: 0.0 - (found.len() as f64 - k as f64).abs(),
        detail: format!("found {} interior extrema, expected {k}", found.len()),
    });

    // observed (value, target) pairs in units of e_max, origin first
    let mut pairs = vec![(e_at(0.0), spec.origin_error())];
    pairs.extend(found.iter().zip(&ripple).map(|(p, &w)| (p.1, w)));
    if spec.measure == ErrorMeasure::Relative {
        pairs.push((e_at(hi), ripple[k]));
    }
    let dev = pairs.iter().map(|&(e, w)| (e - w * e_max).abs() / e_max).fold(0.0, f64::max);
    checks.push(Check {
        name: "equal-ripple",
        passed: count_ok && dev <= RIPPLE_TOL,
        margin: RIPPLE_TOL - dev,
        detail: format!("largest deviation from the weighted ripple {dev:.3e} of e_max"),
    });

    let worst_sign = pairs
        .iter()
        .filter(|p| p.1 != 0.0)
        .map(|&(e, w)| e * w.signum() / e_max)
        .fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "sign-pattern",
        passed: count_ok && worst_sign > 0.0,
        margin: worst_sign,
        detail: "signed extrema values against the variant's pattern".into(),
    });

    checks.push(one_sided(s, t, lam, kind, 0.0, hi, e_max, "one-sided"));

    let want = e_max * pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let measured = max_in(s, t, lam, 0.0, hi, SCAN_POINTS);
    let rel = (measured - want).abs() / want;
    checks.push(Check {
        name: "max-error",
        passed: rel <= MAX_TOL,
        margin: MAX_TOL - rel,
        detail: format!("measured {measured:.6e} against {want:.6e}"),
    });

    checks.push(tail(s, spec, e_max, found.last().map_or(0.0, |p| p.0), hi));
    Certificate { checks, extrema: found, measured_max: measured }
}

/// Bound direction on a dense grid: upper bounds must not dip below the
/// target, lower bounds must not rise above it.
#[allow(clippy::too_many_arguments)]
fn one_sided(
    s: &ExpSum,
    t: &TargetPoly,
    lam: f64,
    kind: Kind,
    lo: f64,
    hi: f64,
    e_max: f64,
    name: &'static str,
) -> Check {
    let dir = match kind {
        Kind::Approximation => {
            return Check { name, passed: true, margin: f64::INFINITY, detail: "not a bound".into() }
        }
        Kind::UpperBound => -1.0,
        Kind::LowerBound => 1.0,
    };
    let b_max = s.b().last().copied().unwrap_or(1.0);
    let mut worst = f64::INFINITY;
    let mut at = lo;
    for x in scan_grid(lo, hi, b_max, BOUND_POINTS) {
        let om = t.omega(q_unchecked(x)).abs();
        let e = error_lambda(s, t, lam, x).0;
        // tangency zeros are only pinned to the solver's residual tolerance,
        // and the sum and the subtraction each round
        let mass: f64 = s.terms().map(|(a, b)| a * (-b * x * x).exp()).sum();
        let rounding = 64.0 * f64::EPSILON * (mass + om) / if lam == 0.0 { 1.0 } else { om.max(MIN_DENOMINATOR).powf(lam) };
        let slack = (1e-9 * e_max + crate::minimax::RESIDUAL_TOL + rounding - dir * e) / e_max;
        if slack < worst {
            worst = slack;
            at = x;
        }
    }
    Check {
        name,
        passed: worst >= 0.0,
        margin: worst,
        detail: format!("on [{lo}, {hi}], tightest at x={at:.6}"),
    }
}

/// Behaviour beyond the last extremum: for the absolute measure the error
/// stays within e_max out to x = 50 and bounds keep their direction; a
/// relative upper bound keeps its direction past x_end.
fn tail(s: &ExpSum, spec: &SolveSpec, e_max: f64, last: f64, hi: f64) -> Check {
    let t = &spec.target;
    let kind = spec.variant.kind();
    match spec.measure {
        ErrorMeasure::Absolute => {
            let worst = max_in(s, t, 0.0, last, TAIL_END, BOUND_POINTS);
            let over = worst / e_max - 1.0;
            let side = one_sided(s, t, 0.0, kind, last, TAIL_END, e_max, "tail");
            let passed = over <= MAX_TOL && side.passed;
            Check {
                name: "tail",
                passed,
                margin: (MAX_TOL - over).min(side.margin),
                detail: format!("max |d| on [{last:.4}, {TAIL_END}] is {worst:.6e}"),
            }
        }
        ErrorMeasure::Relative if kind == Kind::UpperBound => {
            let side = one_sided(s, t, 0.0, kind, hi, TAIL_END, e_max, "tail");
            Check { detail: format!("absolute error sign on [{hi}, {TAIL_END}]"), ..side }
        }
        ErrorMeasure::Relative => Check {
            name: "tail",
            passed: true,
            margin: f64::INFINITY,
            detail: "no claim beyond x_end".into(),
        },
    }
}
