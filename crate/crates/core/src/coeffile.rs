//! Coefficient files: JSON with every real written as a 17-significant-digit
//! decimal string, so that a save/load round trip is bit-exact and diffs stay readable.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::ExpSum;
use crate::minimax::{Diagnostics, MinimaxSolution, SolveSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// What a solve reached: the maximum error and the extrema locations.
#[derive(Debug, Clone, PartialEq)]
pub struct Achieved {
    pub e_max: f64,
    pub extrema: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub created_unix: u64,
}

impl Provenance {
    pub fn now() -> Self {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self { tool: format!("expq {}", env!("CARGO_PKG_VERSION")), created_unix: secs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFile {
    /// Absent for sets that did not come from a solve, such as quadrature baselines.
    pub spec: Option<SolveSpec>,
    pub expsum: ExpSum,
    pub achieved: Option<Achieved>,
    pub diagnostics: Option<Diagnostics>,
    pub provenance: Option<Provenance>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAchieved {
    e_max: String,
    extrema: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spec: Option<SolveSpec>,
    coefficients: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    achieved: Option<RawAchieved>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Diagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_real(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Validation(format!("{what}: '{s}' is not a finite number")))
}

impl CoefficientFile {
    pub fn from_solution(sol: &MinimaxSolution, provenance: Option<Provenance>) -> Self {
        Self {
            spec: Some(sol.spec.clone()),
            expsum: sol.expsum.clone(),
            achieved: Some(Achieved { e_max: sol.e_max, extrema: sol.extrema.clone() }),
            diagnostics: Some(sol.diagnostics),
            provenance,
        }
    }

    pub fn from_expsum(expsum: ExpSum, spec: Option<SolveSpec>, provenance: Option<Provenance>) -> Self {
        Self { spec, expsum, achieved: None, diagnostics: None, provenance }
    }

    /// The solution recorded in the file, when it carries all the parts of one.
    pub fn solution(&self) -> Option<MinimaxSolution> {
        let spec = self.spec.clone()?;
        let achieved = self.achieved.clone()?;
        Some(MinimaxSolution {
            expsum: self.expsum.clone(),
            e_max: achieved.e_max,
            extrema: achieved.extrema,
            spec,
            diagnostics: self.diagnostics.unwrap_or(Diagnostics { iterations: 0, residual_norm: f64::NAN }),
        })
    }

    pub fn to_json(&self) -> String {
        let raw = Raw {
            schema_version: SCHEMA_VERSION,
            spec: self.spec.clone(),
            coefficients: self.expsum.terms().map(|(a, b)| [fmt_real(a), fmt_real(b)]).collect(),
            achieved: self.achieved.as_ref().map(|a| RawAchieved {
                e_max: fmt_real(a.e_max),
                extrema: a.extrema.iter().map(|&x| fmt_real(x)).collect(),
            }),
            diagnostics: self.diagnostics,
            provenance: self.provenance.clone(),
        };
        let mut out = serde_json::to_string_pretty(&raw).expect("plain data serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                raw.schema_version
            )));
        }
        let mut terms = Vec::with_capacity(raw.coefficients.len());
        for (i, [a, b]) in raw.coefficients.iter().enumerate() {
            terms.push((parse_real(a, &format!("a{}", i + 1))?, parse_real(b, &format!("b{}", i + 1))?));
        }
        let expsum = ExpSum::new(terms)?;
        let achieved = match raw.achieved {
            Some(a) => Some(Achieved {
                e_max: parse_real(&a.e_max, "e_max")?,
                extrema: a.extrema.iter().map(|x| parse_real(x, "extremum")).collect::<Result<_>>()?,
            }),
            None => None,
        };
        let file = Self { spec: raw.spec, expsum, achieved, diagnostics: raw.diagnostics, provenance: raw.provenance };
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(spec) = &self.spec {
            spec.validate()?;
            if spec.n != self.expsum.len() {
                return Err(Error::Validation(format!(
                    "spec has N={} but the file holds {} terms",
                    spec.n,
                    self.expsum.len()
                )));
            }
        }
        if let Some(a) = &self.achieved {
            if !(a.e_max > 0.0) {
                return Err(Error::Validation(format!("e_max={} must be positive", a.e_max)));
            }
            if a.extrema.first().is_some_and(|&x| x <= 0.0) || a.extrema.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Validation("extrema must be positive and increasing".into()));
            }
            if let Some(spec) = &self.spec {
                if a.extrema.len() != spec.k() {
                    return Err(Error::Validation(format!(
                        "{} extrema listed, the problem has {}",
                        a.extrema.len(),
                        spec.k()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
