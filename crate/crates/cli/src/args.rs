//! Value parsers for the flag formats.

use std::ops::RangeInclusive;

use expq_core::baselines::{QuadratureRule, RuleKind};
use expq_core::minimax::MAX_N;
use expq_core::{ErrorMeasure, TargetPoly, VariantKind};

fn number(s: &str, what: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{what}: '{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what}: '{s}' is not finite"))
    }
}

fn list(s: &str, what: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| number(p, what)).collect()
}

/// A comma-separated or generated list of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Reals(pub Vec<f64>);

/// `q`, `power:p` or `poly:c0,c1,...`.
pub fn target(s: &str) -> Result<TargetPoly, String> {
    if s == "q" {
        return Ok(TargetPoly::identity());
    }
    if let Some(p) = s.strip_prefix("power:") {
        let p: usize = p.parse().map_err(|_| format!("power '{p}' is not a positive integer"))?;
        return TargetPoly::power(p).map_err(|e| e.to_string());
    }
    if let Some(c) = s.strip_prefix("poly:") {
        return TargetPoly::new(list(c, "polynomial coefficient")?).map_err(|e| e.to_string());
    }
    Err(format!("unknown target '{s}' (expected q, power:p or poly:c0,c1,...)"))
}

pub fn measure(s: &str) -> Result<ErrorMeasure, String> {
    match s {
        "abs" => Ok(ErrorMeasure::Absolute),
        "rel" => Ok(ErrorMeasure::Relative),
        _ => Err(format!("unknown error measure '{s}' (expected abs or rel)")),
    }
}

pub fn variant(s: &str) -> Result<VariantKind, String> {
    s.parse().map_err(|_| format!("unknown variant '{s}' (expected approx0, approxw, lower or upper)"))
}

pub fn weights(s: &str) -> Result<Reals, String> {
    list(s, "weight").map(Reals)
}

pub fn xends(s: &str) -> Result<Reals, String> {
    list(s, "x_end").map(Reals)
}

pub fn fading(s: &str) -> Result<Reals, String> {
    list(s, "fading parameter").map(Reals)
}

/// `hi` for 1..=hi, or `lo:hi`.
pub fn n_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let int = |p: &str| p.trim().parse::<usize>().map_err(|_| format!("'{p}' is not a term count"));
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (int(a)?, int(b)?),
        None => (1, int(s)?),
    };
    if lo == 0 || lo > hi || hi > MAX_N {
        return Err(format!("term counts {lo}..={hi} must lie in 1..={MAX_N}, ascending"));
    }
    Ok(lo..=hi)
}

/// `lo:hi` with 0 ≤ lo ≤ hi.
pub fn range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("range '{s}' is not lo:hi"))?;
    let (lo, hi) = (number(a, "range start")?, number(b, "range end")?);
    if lo < 0.0 || hi < lo {
        return Err(format!("range {lo}:{hi} needs 0 <= lo <= hi"));
    }
    Ok((lo, hi))
}

/// `lo:hi:step` in dB; the grid includes hi when it falls on a step.
pub fn snr_grid(s: &str) -> Result<Reals, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(format!("SNR grid '{s}' is not lo:hi:step"));
    };
    let (lo, hi, step) = (number(lo, "SNR start")?, number(hi, "SNR end")?, number(step, "SNR step")?);
    if !(step > 0.0) || hi < lo {
        return Err(format!("SNR grid {lo}:{hi}:{step} needs a positive step and lo <= hi"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err("SNR grid has too many points".into());
    }
    // rounding keeps decimal steps such as 0.1 printable
    Ok(Reals((0..=count).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect()))
}

/// The rule family; the term count comes from `--n`.
#[derive(Debug, Clone, Copy)]
pub struct Rule(pub RuleKind);

impl Rule {
    pub fn with_n(self, n: usize) -> Result<QuadratureRule, expq_core::Error> {
        QuadratureRule::new(self.0, n)
    }
}

pub fn rule(s: &str) -> Result<Rule, String> {
    let kind = match s {
        "legendre" => RuleKind::Legendre,
        "rect" => RuleKind::RightRectangular,
        "trap" => RuleKind::Trapezoidal,
        _ => match s.strip_prefix("clegendre:") {
            Some(h) => RuleKind::CompositeLegendre {
                h: h.parse().ok().filter(|&h| h > 0).ok_or_else(|| format!("'{h}' is not a positive point count"))?,
            },
            None => return Err(format!("unknown rule '{s}' (expected legendre, clegendre:h, rect or trap)")),
        },
    };
    Ok(Rule(kind))
}
