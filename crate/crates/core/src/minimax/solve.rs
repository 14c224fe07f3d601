//! Solving single problems and ascending-N sweeps.
//!
//! Absolute problems at N ≥ 3 start from extrapolated smaller-N solutions and
//! fall back to a seed search. Relative problems start from the absolute
//! solution of the same N: its last extremum becomes the endpoint, the measure
//! exponent is walked from 0 to 1, and the endpoint is then moved to x_end.
//! Once two relative solutions exist, relative problems continue in N directly.
//! Non-uniform weights are reached from the uniform solution by a weight homotopy.

use super::guess::{continuation, seeds};
use super::newton::{newton, robust, Outcome, MAX_ITER};
use super::system::{Point, System};
use super::{Diagnostics, MinimaxSolution, Origin, SolveSpec};
use crate::error::{Error, Result};
use crate::expsum::ErrorMeasure;

const SEED_ITER: usize = 80;
const STAGE_ITER: usize = 40;

/// Rejects converged points that are degenerate: vanishing or oversized
/// e_max, or extrema outside the meaningful range.
fn plausible(sys: &System, u: &[f64]) -> bool {
    let p = sys.unpack(u);
    // relative errors of bounds can exceed 1, absolute ones cannot exceed Ω(0)
    let (lo, hi) = if sys.lam > 0.0 { (1e-10, 1e6) } else { (1e-10 * sys.om0(), sys.om0()) };
    if !(p.e > lo && p.e < hi) {
        return false;
    }
    if p.a.iter().chain(&p.b).chain(&p.x).any(|v| !v.is_finite()) {
        return false;
    }
    match (p.x.last(), sys.x_end) {
        (Some(&last), Some(xe)) => last < xe,
        (Some(&last), None) => last < 8.0,
        (None, _) => true,
    }
}

fn failure(best: f64) -> Error {
    Error::SolverFailure { best_residual: best }
}

/// Walks a scalar parameter of the system from `from` to `to` with adaptive steps,
/// re-solving at each stage. A stage only counts if its extrema stay inside the
/// interval. With `stretch`, the parameter is the endpoint and the extrema are
/// rescaled along with it before each stage.
#[allow(clippy::too_many_arguments)]
fn march(
    sys: &mut System,
    u: Vec<f64>,
    from: f64,
    to: f64,
    first_step: f64,
    max_step: f64,
    stretch: bool,
    work: &mut usize,
    set: impl Fn(&mut System, f64),
) -> Option<Vec<f64>> {
    let xi = sys.n + sys.n_b()..sys.n + sys.n_b() + sys.k;
    let mut u = u;
    let mut cur = from;
    let mut step = first_step;
    while cur != to {
        let next = if to > cur { (cur + step).min(to) } else { (cur - step).max(to) };
        set(sys, next);
        let mut start = u.clone();
        if stretch {
            let shift = (next / cur).ln();
            start[xi.clone()].iter_mut().for_each(|v| *v += shift);
        }
        let out = newton(sys, &start, STAGE_ITER);
        *work += out.iterations;
        if out.converged && inside(sys, &out.u) {
            u = out.u;
            cur = next;
            step = (step * 1.5).min(max_step);
        } else {
            step *= 0.5;
            set(sys, cur);
            if step < 1e-5 {
                return None;
            }
        }
    }
    Some(u)
}

fn inside(sys: &System, u: &[f64]) -> bool {
    match (sys.unpack(u).x.last(), sys.x_end) {
        (Some(&last), Some(xe)) => last < xe,
        _ => true,
    }
}

/// Solutions of one problem family at increasing N, built on demand.
struct Chain {
    template: SolveSpec,
    abs: Vec<Option<Point>>,
    rel: Vec<Option<Point>>,
    /// Newton iterations spent so far.
    work: usize,
}

impl Chain {
    fn new(spec: &SolveSpec) -> Self {
        Self { template: spec.clone(), abs: Vec::new(), rel: Vec::new(), work: 0 }
    }

    fn uniform(&self, n: usize, measure: ErrorMeasure) -> Result<System> {
        let x_end = match measure {
            ErrorMeasure::Absolute => None,
            ErrorMeasure::Relative => self.template.x_end,
        };
        let spec = SolveSpec::new(self.template.target.clone(), measure, self.template.variant, n, x_end)?;
        Ok(System::from_spec(&spec))
    }

    fn priors(list: &[Option<Point>], n: usize) -> Vec<&Point> {
        let lo = n.saturating_sub(4);
        let found: Vec<&Point> = list[lo..n - 1].iter().flatten().collect();
        if found.len() >= 2 {
            found
        } else {
            Vec::new()
        }
    }

    fn absolute(&mut self, n: usize) -> Result<Point> {
        while self.abs.len() < n {
            let m = self.abs.len() + 1;
            let mut work = 0;
            let p = self.solve_absolute(m, &mut work).ok();
            self.work += work;
            self.abs.push(p);
        }
        self.abs[n - 1].clone().ok_or_else(|| failure(f64::INFINITY))
    }

    fn solve_absolute(&self, n: usize, work: &mut usize) -> Result<Point> {
        let sys = self.uniform(n, ErrorMeasure::Absolute)?;
        let mut best = f64::INFINITY;
        let priors = Self::priors(&self.abs, n);
        if !priors.is_empty() {
            let out = robust(&sys, &continuation(&sys, &priors), &plausible);
            *work += out.iterations;
            if out.converged {
                return Ok(sys.unpack(&out.u));
            }
            best = out.residual;
        }
        for g in seeds(&sys) {
            let out = newton(&sys, &g, SEED_ITER);
            *work += out.iterations;
            if out.converged && plausible(&sys, &out.u) {
                return Ok(sys.unpack(&out.u));
            }
            best = best.min(out.residual);
        }
        Err(failure(best))
    }

    fn relative(&mut self, n: usize) -> Result<Point> {
        while self.rel.len() < n {
            let m = self.rel.len() + 1;
            let mut work = 0;
            let p = self.solve_relative(m, &mut work).ok();
            self.work += work;
            self.rel.push(p);
        }
        self.rel[n - 1].clone().ok_or_else(|| failure(f64::INFINITY))
    }

    fn solve_relative(&mut self, n: usize, work: &mut usize) -> Result<Point> {
        let sys = self.uniform(n, ErrorMeasure::Relative)?;
        let mut best = f64::INFINITY;
        let priors = Self::priors(&self.rel, n);
        if !priors.is_empty() {
            let out = robust(&sys, &continuation(&sys, &priors), &plausible);
            *work += out.iterations;
            if out.converged {
                return Ok(sys.unpack(&out.u));
            }
            best = out.residual;
        }
        let abs = self.absolute(n)?;
        match from_absolute(&sys, &abs, work) {
            Some(u) => Ok(sys.unpack(&u)),
            None => Err(failure(best)),
        }
    }

    fn uniform_point(&mut self, n: usize) -> Result<Point> {
        match self.template.measure {
            ErrorMeasure::Absolute => self.absolute(n),
            ErrorMeasure::Relative => self.relative(n),
        }
    }

    fn solve(&mut self, spec: &SolveSpec) -> Result<MinimaxSolution> {
        let before = self.work;
        let p = self.uniform_point(spec.n)?;
        let sys = System::from_spec(spec);
        let mut u = sys.pack(&p);
        if !spec.is_uniform() {
            u = reweight(&sys, u, &mut self.work).ok_or_else(|| failure(f64::INFINITY))?;
        }
        let mut sol = finish(&sys, spec, &u)?;
        sol.diagnostics.iterations += self.work - before;
        Ok(sol)
    }
}

/// Turns an absolute solution into the relative one at the same N.
fn from_absolute(target: &System, abs: &Point, work: &mut usize) -> Option<Vec<f64>> {
    let k = target.k;
    let x_end = target.x_end?;
    let mut sys = target.clone();
    sys.lam = 0.0;
    sys.x_end = Some(abs.x[k]);
    let start = Point { a: abs.a.clone(), b: abs.b.clone(), x: abs.x[..k].to_vec(), e: abs.e };
    let u = sys.pack(&start);
    let u = march(&mut sys, u, 0.0, 1.0, 0.1, 0.5, false, work, |s, v| s.lam = v)?;
    let u = march(&mut sys, u, abs.x[k], x_end, 0.2, 1.0, true, work, |s, v| s.x_end = Some(v))?;
    let out = newton(target, &u, MAX_ITER);
    *work += out.iterations;
    (out.converged && plausible(target, &out.u)).then_some(out.u)
}

/// Moves uniform weights to the target system's weights.
fn reweight(target: &System, u: Vec<f64>, work: &mut usize) -> Option<Vec<f64>> {
    let mut sys = target.clone();
    let goal = target.weights.clone();
    sys.weights = vec![1.0; goal.len()];
    march(&mut sys, u, 0.0, 1.0, 0.25, 0.5, false, work, move |s, t| {
        s.weights = goal.iter().map(|w| 1.0 + t * (w - 1.0)).collect();
    })
}

fn finish(sys: &System, spec: &SolveSpec, u: &[f64]) -> Result<MinimaxSolution> {
    let out = newton(sys, u, MAX_ITER);
    if !out.converged || !plausible(sys, &out.u) {
        return Err(failure(out.residual));
    }
    build(sys, spec, &out)
}

fn build(sys: &System, spec: &SolveSpec, out: &Outcome) -> Result<MinimaxSolution> {
    let p = sys.unpack(&out.u);
    Ok(MinimaxSolution {
        expsum: sys.expsum(&p)?,
        e_max: p.e,
        extrema: p.x,
        spec: spec.clone(),
        diagnostics: Diagnostics { iterations: out.iterations, residual_norm: out.residual },
    })
}

/// Solves one problem. Without a guess, the continuation chain from N = 1 supplies one.
pub fn solve(spec: &SolveSpec, guess: Option<&[f64]>) -> Result<MinimaxSolution> {
    spec.validate()?;
    match guess {
        Some(g) => {
            let sys = System::from_spec(spec);
            if g.len() != sys.len() {
                return Err(Error::Contract(format!(
                    "guess has {} entries, system needs {}",
                    g.len(),
                    sys.len()
                )));
            }
            let out = robust(&sys, g, &plausible);
            if !out.converged {
                return Err(failure(out.residual));
            }
            build(&sys, spec, &out)
        }
        None => Chain::new(spec).solve(spec),
    }
}

/// Re-solves a weighted-origin absolute problem with e_max eliminated through
/// the origin condition, starting from an existing solution.
pub fn solve_eliminated(spec: &SolveSpec, start: &MinimaxSolution) -> Result<MinimaxSolution> {
    spec.validate()?;
    if spec.variant.origin() != Origin::Weighted {
        return Err(Error::Validation("elimination needs the weighted origin condition".into()));
    }
    let mut sys = System::from_spec(spec);
    sys.eliminate = true;
    let p = Point {
        a: start.expsum.a().to_vec(),
        b: start.expsum.b().to_vec(),
        x: start.extrema.clone(),
        e: start.e_max,
    };
    if p.a.len() != sys.n || p.x.len() != sys.k {
        return Err(Error::Contract("starting solution has the wrong shape".into()));
    }
    let out = robust(&sys, &sys.pack(&p), &plausible);
    if !out.converged {
        return Err(failure(out.residual));
    }
    build(&sys, spec, &out)
}

fn same_family(a: &SolveSpec, b: &SolveSpec) -> bool {
    a.target == b.target && a.measure == b.measure && a.variant == b.variant && a.x_end == b.x_end
}

/// Solves specs of one family in ascending N, sharing the continuation chain.
/// A failed spec yields an error entry; the sweep carries on.
pub fn sweep(specs: &[SolveSpec]) -> Vec<Result<MinimaxSolution>> {
    let Some(first) = specs.first() else {
        return Vec::new();
    };
    let mut chain = Chain::new(first);
    let mut last_n = 0;
    specs
        .iter()
        .map(|spec| {
            spec.validate()?;
            if !same_family(first, spec) || spec.n < last_n {
                return Err(Error::Validation(
                    "sweep specs must share target, measure, variant and x_end, in ascending N".into(),
                ));
            }
            last_n = spec.n;
            chain.solve(spec)
        })
        .collect()
}
