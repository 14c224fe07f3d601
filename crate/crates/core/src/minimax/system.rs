//! Residuals of the equalized-extrema system and their analytic Jacobian.
//!
//! Unknowns live in transformed coordinates that keep every quantity positive
//! and ordered: a = exp(α), b₁ = exp(β₁), bₙ = bₙ₋₁(1 + exp(βₙ)),
//! x₁ = exp(ξ₁), x_k = x_{k-1} + exp(ξ_k), e_max = exp(ε).

use nalgebra::{DMatrix, DVector};

use super::{Kind, Origin, SolveSpec};
use crate::error::{Error, Result};
use crate::expsum::{ErrorMeasure, ExpSum, TargetPoly};

/// A decoded unknown vector.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Point {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub x: Vec<f64>,
    pub e: f64,
}

/// The system for one problem. Unlike [`SolveSpec`] it allows an arbitrary
/// measure exponent λ and endpoint, which the continuation paths need.
#[derive(Debug, Clone)]
pub(crate) struct System {
    pub target: TargetPoly,
    pub kind: Kind,
    pub origin: Origin,
    pub n: usize,
    pub k: usize,
    /// 0 for absolute, 1 for relative error; in between during homotopy.
    pub lam: f64,
    pub x_end: Option<f64>,
    pub weights: Vec<f64>,
    pub fixb: Option<f64>,
    /// Drop e_max from the unknowns, tying it to the origin condition.
    pub eliminate: bool,
    om0: f64,
}

impl System {
    pub fn from_spec(spec: &SolveSpec) -> Self {
        let k = spec.k();
        Self {
            target: spec.target.clone(),
            kind: spec.variant.kind(),
            origin: spec.variant.origin(),
            n: spec.n,
            k,
            lam: spec.measure.lambda(),
            x_end: match spec.measure {
                ErrorMeasure::Relative => spec.x_end,
                ErrorMeasure::Absolute => None,
            },
            weights: spec.weights.clone(),
            fixb: spec.fixed_min_b,
            eliminate: false,
            om0: spec.target.at_origin(),
        }
    }

    pub fn om0(&self) -> f64 {
        self.om0
    }

    pub fn is_relative(&self) -> bool {
        self.x_end.is_some()
    }

    pub fn n_b(&self) -> usize {
        if self.fixb.is_some() {
            self.n - 1
        } else {
            self.n
        }
    }

    pub fn len(&self) -> usize {
        self.n + self.n_b() + self.k + usize::from(!self.eliminate)
    }

    fn rows(&self) -> usize {
        2 * self.k + usize::from(!self.eliminate) + usize::from(self.is_relative())
    }

    /// Target value of e at the k-th extremum in units of e_max (k from 1).
    pub fn sign(&self, k: usize) -> f64 {
        let w = self.weights[k];
        match self.kind {
            Kind::Approximation if k % 2 == 1 => w,
            Kind::Approximation => -w,
            Kind::LowerBound if k % 2 == 1 => 0.0,
            Kind::LowerBound => -w,
            Kind::UpperBound if k % 2 == 1 => w,
            Kind::UpperBound => 0.0,
        }
    }

    pub fn end_sign(&self) -> f64 {
        let w = self.weights[self.k + 1];
        match self.kind {
            Kind::UpperBound => w,
            _ => -w,
        }
    }

    /// Coefficient of e_max in the origin condition Σa = Ω₀ - w₀ e Ω₀^λ.
    fn origin_gain(&self) -> f64 {
        match self.origin {
            Origin::Zero => 0.0,
            Origin::Weighted => self.weights[0] * self.om0.powf(self.lam),
        }
    }

    pub fn unpack(&self, u: &[f64]) -> Point {
        let n = self.n;
        let a: Vec<f64> = u[..n].iter().map(|v| v.exp()).collect();
        let mut i = n;
        let mut b = Vec::with_capacity(n);
        let mut prev = match self.fixb {
            Some(v) => v,
            None => {
                i += 1;
                u[n].exp()
            }
        };
        b.push(prev);
        for _ in 1..n {
            prev *= 1.0 + u[i].exp();
            b.push(prev);
            i += 1;
        }
        let mut x = Vec::with_capacity(self.k);
        let mut acc = 0.0;
        for _ in 0..self.k {
            acc += u[i].exp();
            x.push(acc);
            i += 1;
        }
        let e = if self.eliminate {
            let g = self.origin_gain();
            (self.om0 - a.iter().sum::<f64>()) / g
        } else {
            u[i].exp()
        };
        Point { a, b, x, e }
    }

    /// Inverse of [`unpack`]. Requires ordered rates and extrema.
    pub fn pack(&self, p: &Point) -> Vec<f64> {
        let mut u: Vec<f64> = p.a.iter().map(|v| v.ln()).collect();
        let start = match self.fixb {
            Some(_) => 1,
            None => {
                u.push(p.b[0].ln());
                1
            }
        };
        for j in start..self.n {
            u.push((p.b[j] / p.b[j - 1] - 1.0).ln());
        }
        let mut prev = 0.0;
        for &x in &p.x {
            u.push((x - prev).ln());
            prev = x;
        }
        if !self.eliminate {
            u.push(p.e.ln());
        }
        u
    }

    /// Residuals, optionally with the Jacobian with respect to u.
    ///
    /// With `scaled`, derivative rows are multiplied by x_k, which keeps them
    /// commensurate with the value rows when extrema crowd towards the origin.
    pub fn eval(&self, u: &[f64], scaled: bool, want_jac: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let p = self.unpack(u);
        let n = self.n;
        let k = self.k;
        let rows = self.rows();
        // natural columns: a (n), b (n), x (k), e (1)
        let cols = 2 * n + k + 1;
        let mut r = DVector::zeros(rows);
        let mut jn = if want_jac { Some(DMatrix::zeros(rows, cols)) } else { None };
        let lam = self.lam;
        let ce = 2 * n + k;

        for (kk, &x) in p.x.iter().enumerate() {
            let pt = point_eval(&p, &self.target, lam, x, want_jac);
            let s = if scaled { x } else { 1.0 };
            r[kk] = s * pt.ep;
            r[k + kk] = pt.e - self.sign(kk + 1) * p.e;
            if let Some(j) = jn.as_mut() {
                for t in 0..n {
                    j[(kk, t)] = s * pt.dep_da[t];
                    j[(kk, n + t)] = s * pt.dep_db[t];
                    j[(k + kk, t)] = pt.de_da[t];
                    j[(k + kk, n + t)] = pt.de_db[t];
                }
                j[(kk, 2 * n + kk)] = if scaled { pt.ep + x * pt.epp } else { pt.epp };
                j[(k + kk, 2 * n + kk)] = pt.ep;
                j[(k + kk, ce)] = -self.sign(kk + 1);
            }
        }
        let mut row = 2 * k;
        if !self.eliminate {
            let sum_a: f64 = p.a.iter().sum();
            r[row] = self.om0 - self.origin_gain() * p.e - sum_a;
            if let Some(j) = jn.as_mut() {
                for t in 0..n {
                    j[(row, t)] = -1.0;
                }
                j[(row, ce)] = -self.origin_gain();
            }
            row += 1;
        }
        if let Some(xe) = self.x_end {
            let pt = point_eval(&p, &self.target, lam, xe, want_jac);
            r[row] = pt.e - self.end_sign() * p.e;
            if let Some(j) = jn.as_mut() {
                for t in 0..n {
                    j[(row, t)] = pt.de_da[t];
                    j[(row, n + t)] = pt.de_db[t];
                }
                j[(row, ce)] = -self.end_sign();
            }
        }
        let jac = jn.map(|j| self.transform(j, &p));
        (r, jac)
    }

    /// Chain rule from natural columns (a, b, x, e) to the transformed unknowns.
    fn transform(&self, mut jn: DMatrix<f64>, p: &Point) -> DMatrix<f64> {
        let n = self.n;
        let k = self.k;
        let rows = jn.nrows();
        let ce = 2 * n + k;
        if self.eliminate {
            let g = self.origin_gain();
            for t in 0..n {
                for i in 0..rows {
                    let v = jn[(i, ce)];
                    jn[(i, t)] -= v / g;
                }
            }
        }
        let mut j = DMatrix::zeros(rows, self.len());
        for t in 0..n {
            for i in 0..rows {
                j[(i, t)] = jn[(i, t)] * p.a[t];
            }
        }
        // suffix sums of b-columns scaled by b
        let mut col = n;
        let first = if self.fixb.is_some() { 1 } else { 0 };
        let mut suffix = vec![0.0; rows];
        let mut sums = vec![vec![0.0; rows]; n];
        for t in (0..n).rev() {
            for i in 0..rows {
                suffix[i] += jn[(i, n + t)] * p.b[t];
            }
            sums[t].copy_from_slice(&suffix);
        }
        for t in first..n {
            let factor = if t == 0 {
                1.0
            } else {
                let g = p.b[t] / p.b[t - 1] - 1.0;
                g / (1.0 + g)
            };
            for i in 0..rows {
                j[(i, col)] = sums[t][i] * factor;
            }
            col += 1;
        }
        let mut suffix = vec![0.0; rows];
        let mut xs = vec![vec![0.0; rows]; k];
        for t in (0..k).rev() {
            for i in 0..rows {
                suffix[i] += jn[(i, 2 * n + t)];
            }
            xs[t].copy_from_slice(&suffix);
        }
        let mut prev = 0.0;
        for t in 0..k {
            let step = p.x[t] - prev;
            prev = p.x[t];
            for i in 0..rows {
                j[(i, col)] = xs[t][i] * step;
            }
            col += 1;
        }
        if !self.eliminate {
            for i in 0..rows {
                j[(i, col)] = jn[(i, ce)] * p.e;
            }
        }
        j
    }

    pub fn expsum(&self, p: &Point) -> Result<ExpSum> {
        ExpSum::from_slices(&p.a, &p.b)
    }
}

/// Error value and derivatives at one abscissa, with parameter sensitivities.
struct PointEval {
    e: f64,
    ep: f64,
    epp: f64,
    de_da: Vec<f64>,
    de_db: Vec<f64>,
    dep_da: Vec<f64>,
    dep_db: Vec<f64>,
}

fn point_eval(p: &Point, target: &TargetPoly, lam: f64, x: f64, sens: bool) -> PointEval {
    let x2 = x * x;
    let n = p.a.len();
    let ex: Vec<f64> = p.b.iter().map(|b| (-b * x2).exp()).collect();
    let mut f = 0.0;
    let mut fp = 0.0;
    let mut fpp = 0.0;
    for t in 0..n {
        let ae = p.a[t] * ex[t];
        f += ae;
        fp += -2.0 * x * p.b[t] * ae;
        fpp += (4.0 * p.b[t] * p.b[t] * x2 - 2.0 * p.b[t]) * ae;
    }
    let (om, omp, ompp) = target.eval3(x);
    let d = f - om;
    let dp = fp - omp;
    let dpp = fpp - ompp;
    let (scale, g1, g2) = if lam == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (om.powf(-lam), omp / om, ompp / om)
    };
    let e = d * scale;
    let ep = (dp - lam * d * g1) * scale;
    let epp = (dpp - 2.0 * lam * dp * g1 - lam * d * g2 + lam * (lam + 1.0) * d * g1 * g1) * scale;
    let mut out = PointEval {
        e,
        ep,
        epp,
        de_da: Vec::new(),
        de_db: Vec::new(),
        dep_da: Vec::new(),
        dep_db: Vec::new(),
    };
    if sens {
        out.de_da = Vec::with_capacity(n);
        out.de_db = Vec::with_capacity(n);
        out.dep_da = Vec::with_capacity(n);
        out.dep_db = Vec::with_capacity(n);
        for t in 0..n {
            let fa = ex[t];
            let fb = -p.a[t] * x2 * ex[t];
            let fpa = -2.0 * x * p.b[t] * ex[t];
            let fpb = -2.0 * x * p.a[t] * ex[t] * (1.0 - p.b[t] * x2);
            out.de_da.push(fa * scale);
            out.de_db.push(fb * scale);
            out.dep_da.push((fpa - lam * fa * g1) * scale);
            out.dep_db.push((fpb - lam * fb * g1) * scale);
        }
    }
    out
}

fn check_len(sys: &System, u: &[f64]) -> Result<()> {
    if u.len() != sys.len() {
        return Err(Error::Contract(format!(
            "unknown vector has {} entries, system needs {}",
            u.len(),
            sys.len()
        )));
    }
    Ok(())
}

/// Number of unknowns (and equations) of a problem.
pub fn unknown_count(spec: &SolveSpec) -> usize {
    System::from_spec(spec).len()
}

/// Encodes a coefficient set, extrema and e_max as the solver's unknown vector.
pub fn pack_unknowns(spec: &SolveSpec, s: &ExpSum, extrema: &[f64], e_max: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    let sys = System::from_spec(spec);
    if s.len() != spec.n || extrema.len() != sys.k {
        return Err(Error::Contract(format!(
            "expected {} terms and {} extrema, got {} and {}",
            spec.n,
            sys.k,
            s.len(),
            extrema.len()
        )));
    }
    if let Some(fb) = sys.fixb {
        if s.min_b() != fb {
            return Err(Error::Contract(format!("smallest rate must equal {fb}")));
        }
    }
    if extrema.first().is_some_and(|&x| x <= 0.0) || extrema.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("extrema must be positive and increasing".into()));
    }
    if !(e_max > 0.0) {
        return Err(Error::Contract("e_max must be positive".into()));
    }
    Ok(sys.pack(&Point {
        a: s.a().to_vec(),
        b: s.b().to_vec(),
        x: extrema.to_vec(),
        e: e_max,
    }))
}

/// Residual vector in original units: derivative conditions, value conditions,
/// origin condition, then the endpoint condition for the relative measure.
pub fn residuals(spec: &SolveSpec, u: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    let sys = System::from_spec(spec);
    check_len(&sys, u)?;
    Ok(sys.eval(u, false, false).0.iter().copied().collect())
}

/// Jacobian of [`residuals`] with respect to the transformed unknowns.
pub fn jacobian(spec: &SolveSpec, u: &[f64]) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let sys = System::from_spec(spec);
    check_len(&sys, u)?;
    Ok(sys.eval(u, false, true).1.unwrap())
}
