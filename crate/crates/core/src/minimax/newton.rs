//! Damped Newton iteration, a Newton homotopy fallback, and perturbed restarts.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::system::System;

/// Residual norm (original units) at which a solution is accepted.
pub(crate) const TOLERANCE: f64 = 1e-12;
/// Residual norm the iteration aims for before stopping early.
const AIM: f64 = 1e-13;
pub(crate) const MAX_ITER: usize = 200;
const RESTARTS: usize = 5;
const RESTART_NOISE: f64 = 0.05;
const RESTART_SEED: u64 = 0x51ed_2718;

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub u: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the residual in original units.
    pub residual: f64,
}

fn max_norm(r: &DVector<f64>) -> f64 {
    if r.iter().all(|v| v.is_finite()) {
        r.amax()
    } else {
        f64::INFINITY
    }
}

/// Damped Newton on the scaled residual with a backtracking line search.
///
/// `shift` is subtracted from the residual, which turns the iteration into one
/// stage of a Newton homotopy. Stops once the unscaled residual reaches `aim`;
/// a stalled line search still counts as converged if the unscaled residual is
/// below `accept`, since that is the rounding floor.
fn iterate(sys: &System, u0: &[f64], shift: Option<&DVector<f64>>, max_iter: usize, aim: f64, accept: f64) -> Outcome {
    let residual = |u: &[f64], jac: bool| {
        let (mut r, j) = sys.eval(u, true, jac);
        if let Some(s) = shift {
            r -= s;
        }
        (r, j)
    };
    // homotopy stages are judged on the shifted, scaled residual itself
    let judge = |u: &[f64]| match shift {
        Some(_) => max_norm(&residual(u, false).0),
        None => max_norm(&sys.eval(u, false, false).0),
    };
    let mut u = u0.to_vec();
    let mut best = judge(&u);
    for it in 0..max_iter {
        if best <= aim {
            return Outcome { u, converged: true, iterations: it, residual: best };
        }
        let (r, j) = residual(&u, true);
        let nr = max_norm(&r);
        if !nr.is_finite() {
            break;
        }
        let step = match j.unwrap().lu().solve(&(-&r)) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => break,
        };
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-6 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            let (rt, _) = residual(&trial, false);
            let nt = max_norm(&rt);
            if nt < (1.0 - 1e-4 * t) * nr {
                accepted = Some(trial);
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some(next) => {
                u = next;
                best = judge(&u);
            }
            None => {
                return Outcome { converged: best <= accept, u, iterations: it, residual: best };
            }
        }
    }
    Outcome { converged: best <= accept, u, iterations: max_iter, residual: best }
}

pub(crate) fn newton(sys: &System, u0: &[f64], max_iter: usize) -> Outcome {
    iterate(sys, u0, None, max_iter, AIM, TOLERANCE)
}

/// Tracks H(u, t) = R(u) - (1 - t) R(u₀) from t = 0 to 1 with adaptive steps.
pub(crate) fn homotopy(sys: &System, u0: &[f64]) -> Outcome {
    let (r0, _) = sys.eval(u0, true, false);
    let mut fail = Outcome { u: u0.to_vec(), converged: false, iterations: 0, residual: f64::INFINITY };
    if max_norm(&r0).is_infinite() {
        return fail;
    }
    let mut u = u0.to_vec();
    let mut t: f64 = 0.0;
    let mut dt: f64 = 0.1;
    let mut iterations = 0;
    while t < 1.0 {
        let tn = (t + dt).min(1.0);
        let shift = &r0 * (1.0 - tn);
        let stage = iterate(sys, &u, Some(&shift), 30, 1e-10, 1e-10);
        iterations += stage.iterations;
        if stage.converged {
            u = stage.u;
            t = tn;
            dt = (dt * 1.5).min(0.5);
        } else {
            dt *= 0.5;
            if dt < 1e-5 {
                fail.u = u;
                fail.iterations = iterations;
                return fail;
            }
        }
    }
    let mut out = newton(sys, &u, MAX_ITER);
    out.iterations += iterations;
    out
}

/// Newton, then homotopy, then perturbed restarts of both. `accept` screens
/// converged points (e.g. for degenerate extrema placements). The reported
/// iteration count covers every attempt.
pub(crate) fn robust(sys: &System, guess: &[f64], accept: &dyn Fn(&System, &[f64]) -> bool) -> Outcome {
    let mut total = 0;
    let done = |mut out: Outcome, total: &mut usize| {
        *total += out.iterations;
        out.iterations = *total;
        out
    };
    let mut best = done(newton(sys, guess, MAX_ITER), &mut total);
    if best.converged && accept(sys, &best.u) {
        return best;
    }
    let h = done(homotopy(sys, guess), &mut total);
    if h.converged && accept(sys, &h.u) {
        return h;
    }
    if h.residual < best.residual {
        best = h;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    for _ in 0..RESTARTS {
        let g: Vec<f64> = guess
            .iter()
            .map(|v| v + rng.random_range(-RESTART_NOISE..RESTART_NOISE))
            .collect();
        for attempt in 0..2 {
            let out = if attempt == 0 { newton(sys, &g, MAX_ITER) } else { homotopy(sys, &g) };
            let out = done(out, &mut total);
            if out.converged && accept(sys, &out.u) {
                return out;
            }
            if out.residual < best.residual {
                best = out;
            }
        }
    }
    best.converged = false;
    best.iterations = total;
    best
}
