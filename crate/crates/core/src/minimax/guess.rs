//! Starting points: extrapolation from smaller-N solutions, and a seed search for small N.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::system::{Point, System};
use super::{MinimaxSolution, Origin, SolveSpec};

const SEED_SEARCH: u64 = 0x00dd_ba11;
const RANDOM_SEEDS: usize = 3000;

/// Extrapolates the next value of a sequence in log(v - floor), damping the
/// last difference by the observed ratio of differences.
fn extrapolate(vals: &[f64], floor: f64) -> f64 {
    let l: Vec<f64> = vals.iter().map(|v| (v - floor).max(1e-300).ln()).collect();
    let m = l.len();
    if m == 1 {
        return vals[0];
    }
    let d1 = l[m - 1] - l[m - 2];
    let d = if m >= 3 {
        let d0 = l[m - 2] - l[m - 3];
        let ratio = if d0 != 0.0 { d1 / d0 } else { 1.0 };
        d1 * ratio.clamp(0.3, 1.0)
    } else {
        0.7 * d1
    };
    floor + (l[m - 1] + d).exp()
}

/// Builds a sequence of length `m`: its ends are extrapolated from the priors'
/// ends and its interior follows the shape of the latest prior. With `increasing`
/// the result is forced strictly increasing.
fn resample(seqs: &[&[f64]], m: usize, floor_lo: f64, increasing: bool) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    let filled: Vec<&[f64]> = seqs.iter().copied().filter(|s| !s.is_empty()).collect();
    let lo = extrapolate(&filled.iter().map(|s| s[0]).collect::<Vec<_>>(), floor_lo);
    let hi = extrapolate(&filled.iter().map(|s| s[s.len() - 1]).collect::<Vec<_>>(), 0.0);
    if m == 1 {
        return vec![hi];
    }
    let shape: Option<Vec<f64>> = filled.iter().rev().find(|s| s.len() >= 2).map(|s| {
        let l: Vec<f64> = s.iter().map(|v| v.ln()).collect();
        let (l0, l1) = (l[0], l[l.len() - 1]);
        l.iter().map(|v| (v - l0) / (l1 - l0)).collect()
    });
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut out: Vec<f64> = (0..m)
        .map(|i| {
            let t = i as f64 / (m - 1) as f64;
            let s = match &shape {
                Some(sh) => interp(sh, t),
                None => t,
            };
            (llo + s * (lhi - llo)).exp()
        })
        .collect();
    for i in (1..m).filter(|_| increasing) {
        if out[i] <= out[i - 1] {
            out[i] = out[i - 1] * (1.0 + 1e-3);
        }
    }
    out
}

/// Piecewise-linear interpolation of samples on a uniform grid over [0, 1].
fn interp(ys: &[f64], t: f64) -> f64 {
    let pos = t * (ys.len() - 1) as f64;
    let i = (pos.floor() as usize).min(ys.len() - 2);
    let f = pos - i as f64;
    ys[i] * (1.0 - f) + ys[i + 1] * f
}

fn origin_sum(sys: &System, e: f64) -> f64 {
    match sys.origin {
        Origin::Zero => sys.om0(),
        Origin::Weighted => sys.om0() - sys.weights[0] * e * sys.om0().powf(sys.lam),
    }
}

/// Continuation guess from up to three solutions at consecutive smaller N.
pub(crate) fn continuation(sys: &System, priors: &[&Point]) -> Vec<f64> {
    let priors = &priors[priors.len().saturating_sub(3)..];
    let n = sys.n;
    let floor = 0.5 * sys.target.tail_power() as f64;
    let a_seqs: Vec<&[f64]> = priors.iter().map(|p| p.a.as_slice()).collect();
    let x_seqs: Vec<&[f64]> = priors.iter().map(|p| p.x.as_slice()).collect();
    let b = match sys.fixb {
        Some(fb) => {
            let tails: Vec<&[f64]> = priors.iter().map(|p| &p.b[1..]).collect();
            let mut b = vec![fb];
            b.extend(resample(&tails, n - 1, floor, true));
            for i in 1..n {
                if b[i] <= b[i - 1] {
                    b[i] = b[i - 1] * 1.01;
                }
            }
            b
        }
        None => {
            let seqs: Vec<&[f64]> = priors.iter().map(|p| p.b.as_slice()).collect();
            resample(&seqs, n, floor, true)
        }
    };
    let e = extrapolate(&priors.iter().map(|p| p.e).collect::<Vec<_>>(), 0.0);
    let mut a = resample(&a_seqs, n, 0.0, false);
    let want = origin_sum(sys, e);
    let have: f64 = a.iter().sum();
    a.iter_mut().for_each(|v| *v *= want / have);
    let mut x = resample(&x_seqs, sys.k, 0.0, true);
    if let (Some(xe), Some(&last)) = (sys.x_end, x.last()) {
        if last >= xe {
            let f = 0.97 * xe / last;
            x.iter_mut().for_each(|v| *v *= f);
        }
    }
    sys.pack(&Point { a, b, x, e })
}

/// Builds a seed from shape parameters: rate spread, extrema spread, rate
/// scale, error scale, and position of the last extremum.
fn seed_point(sys: &System, a_decay: f64, b_ratio: f64, x_ratio: f64, b_scale: f64, e_scale: f64, x_hi: f64) -> Point {
    let n = sys.n;
    let pt = sys.target.tail_power() as f64;
    let mut b: Vec<f64> = (0..n).map(|i| pt * b_scale * b_ratio.powi(i as i32)).collect();
    if let Some(fb) = sys.fixb {
        let f = fb / b[0];
        b.iter_mut().for_each(|v| *v *= f * 1.0001);
        b[0] = fb;
    }
    let e = sys.om0() * e_scale / 4f64.powi(n as i32 - 1);
    let mut a: Vec<f64> = (0..n).map(|i| (-a_decay * i as f64).exp()).collect();
    let want = origin_sum(sys, e);
    let have: f64 = a.iter().sum();
    a.iter_mut().for_each(|v| *v *= want / have);
    let mut hi = x_hi / pt.sqrt();
    if let Some(xe) = sys.x_end {
        hi = hi.min(0.9 * xe);
    }
    let x: Vec<f64> = (0..sys.k).map(|i| hi / x_ratio.powi((sys.k - 1 - i) as i32)).collect();
    Point { a, b, x, e }
}

/// Deterministic starting points for problems without usable priors: a
/// structured grid first, then seeded random draws over wider ranges.
pub(crate) fn seeds(sys: &System) -> impl Iterator<Item = Vec<f64>> + '_ {
    let mut grid = Vec::new();
    for b_ratio in [20.0, 6.0] {
        for x_ratio in [3.0, 2.0, 5.0] {
            for b_scale in [1.0, 0.7, 1.5, 2.5] {
                for e_scale in [0.03, 0.01, 0.1, 0.003] {
                    for x_hi in [1.5, 2.5, 1.0, 4.0] {
                        grid.push((0.9, b_ratio, x_ratio, b_scale, e_scale, x_hi));
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_SEARCH);
    let random: Vec<_> = (0..RANDOM_SEEDS)
        .map(|_| {
            // a negative decay lets the weights rise before they fall
            let a_decay = rng.random_range(-1.0..2.0);
            (
                a_decay,
                log_uniform(&mut rng, 1.5, 40.0),
                log_uniform(&mut rng, 1.3, 6.0),
                log_uniform(&mut rng, 0.4, 3.0),
                log_uniform(&mut rng, 1e-3, 0.3),
                log_uniform(&mut rng, 0.7, 4.0),
            )
        })
        .collect();
    grid.into_iter()
        .chain(random)
        .map(move |(ad, br, xr, bs, es, xh)| sys.pack(&seed_point(sys, ad, br, xr, bs, es, xh)))
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Starting point for `spec`: the first seed when no priors are given,
/// otherwise extrapolation from the last (up to three) priors.
pub fn initial_guess(spec: &SolveSpec, prior: &[MinimaxSolution]) -> Vec<f64> {
    let sys = System::from_spec(spec);
    if prior.is_empty() {
        return seeds(&sys).next().unwrap();
    }
    let points: Vec<Point> = prior
        .iter()
        .map(|s| Point {
            a: s.expsum.a().to_vec(),
            b: s.expsum.b().to_vec(),
            x: s.extrema.clone(),
            e: s.e_max,
        })
        .collect();
    let refs: Vec<&Point> = points.iter().collect();
    continuation(&sys, &refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsum::TargetPoly;
    use crate::minimax::VariantKind;

    #[test]
    fn extrapolation_damps_growth() {
        assert_eq!(extrapolate(&[2.0], 0.0), 2.0);
        let v = extrapolate(&[1.0, 2.0], 0.0);
        assert!((v - 2.0 * 2f64.powf(0.7)).abs() < 1e-12);
        // constant ratio of differences continues geometrically
        let v = extrapolate(&[1.0, 2.0, 4.0], 0.0);
        assert!((v - 8.0).abs() < 1e-12);
        let v = extrapolate(&[1.5, 2.5, 3.5], 0.5);
        assert!(v > 3.5);
    }

    #[test]
    fn resample_keeps_order_and_ends() {
        let p1 = [1.0, 10.0];
        let p2 = [1.0, 5.0, 50.0];
        let out = resample(&[&p1, &p2], 4, 0.0, true);
        assert_eq!(out.len(), 4);
        assert!(out.windows(2).all(|w| w[1] > w[0]));
        assert!((out[0] - 1.0).abs() < 1e-12);
        assert!(out[3] > 50.0);
        assert!(resample(&[&p1], 0, 0.0, true).is_empty());
    }

    #[test]
    fn guesses_have_system_dimension() {
        let t = TargetPoly::identity();
        for v in VariantKind::ALL {
            for n in 1..=4 {
                for spec in [
                    SolveSpec::absolute(t.clone(), v, n).unwrap(),
                    SolveSpec::relative(t.clone(), v, n, 5.0).unwrap(),
                ] {
                    let sys = System::from_spec(&spec);
                    let g = initial_guess(&spec, &[]);
                    assert_eq!(g.len(), sys.len());
                    assert!(g.iter().all(|v| v.is_finite()));
                    assert_eq!(seeds(&sys).count(), 384 + RANDOM_SEEDS);
                }
            }
        }
    }
}
