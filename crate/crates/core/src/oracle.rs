//! Exhaustive baselines for tests. Nothing here calls into the solvers it
//! is used to check; the code is deliberately naive.

use crate::concavify::PosteriorLaw;
use crate::error::{Error, Result};

/// Production grids times ten.
pub const ORACLE_GRID: usize = 20_001;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceDesign {
    pub law: PosteriorLaw,
    pub value: f64,
}

/// Best law with at most two atoms among all grid pairs straddling `pi`,
/// plus the point mass at `pi`. Quadratic in the grid size. Designs within
/// 1e-12 of the best value count as ties and the narrowest one wins.
pub fn brute_force_experiment<F: Fn(f64) -> f64>(pi: f64, value_fn: F, points: usize) -> Result<BruteForceDesign> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::domain(format!("prior must be interior, got {pi}")));
    }
    if points < 3 {
        return Err(Error::domain("oracle grid needs at least 3 points"));
    }
    let xs: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| value_fn(x)).collect();
    let v_pi = value_fn(pi);
    let chord = |i: usize, j: usize| {
        let w = (pi - xs[i]) / (xs[j] - xs[i]);
        (1.0 - w) * vs[i] + w * vs[j]
    };
    let mut best = v_pi;
    for_each_pair(&xs, pi, |i, j| best = best.max(chord(i, j)));
    let tol = 1e-12 * best.abs().max(1.0);
    let mut pick: Option<(usize, usize)> = None;
    if v_pi < best - tol {
        for_each_pair(&xs, pi, |i, j| {
            if chord(i, j) >= best - tol && pick.is_none_or(|(a, b)| xs[j] - xs[i] < xs[b] - xs[a]) {
                pick = Some((i, j));
            }
        });
    }
    let (law, value) = match pick {
        None => (PosteriorLaw::new(vec![pi], vec![1.0])?, v_pi),
        Some((i, j)) => {
            let w = (pi - xs[i]) / (xs[j] - xs[i]);
            (PosteriorLaw::new(vec![xs[i], xs[j]], vec![1.0 - w, w])?, chord(i, j))
        }
    };
    Ok(BruteForceDesign { law, value })
}

/// Visits every `i < j` with `xs[i] <= pi <= xs[j]`.
fn for_each_pair(xs: &[f64], pi: f64, mut f: impl FnMut(usize, usize)) {
    for i in 0..xs.len() {
        if xs[i] > pi {
            break;
        }
        for (j, &x) in xs.iter().enumerate().skip(i + 1) {
            if x >= pi {
                f(i, j);
            }
        }
    }
}

/// Dense evaluation on `points` nodes followed by one parabolic step through
/// the best node and its neighbours.
pub fn brute_force_min1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> Result<(f64, f64)> {
    if !(lo < hi) || points < 3 {
        return Err(Error::domain("need lo < hi and at least 3 points"));
    }
    let x = |i: usize| lo + (hi - lo) * i as f64 / (points - 1) as f64;
    let mut k = 0;
    let mut fk = f(lo);
    for i in 1..points {
        let fi = f(x(i));
        if fi < fk {
            k = i;
            fk = fi;
        }
    }
    let mut best = (x(k), fk);
    if k > 0 && k + 1 < points {
        let (x0, x1, x2) = (x(k - 1), x(k), x(k + 1));
        let (f0, f1, f2) = (f(x0), fk, f(x2));
        let num = (x1 - x0).powi(2) * (f1 - f2) - (x1 - x2).powi(2) * (f1 - f0);
        let den = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
        if den != 0.0 {
            let xv = x1 - 0.5 * num / den;
            if xv > x0 && xv < x2 {
                let fv = f(xv);
                if fv < best.1 {
                    best = (xv, fv);
                }
            }
        }
    }
    Ok(best)
}

/// Every sign change of `f - target` on a uniform grid over `[0, 1]`,
/// refined by bisection until the bracket is below 1e-12.
pub fn brute_force_roots<F: Fn(f64) -> f64>(f: F, target: f64, points: usize) -> Result<Vec<f64>> {
    if points < 3 {
        return Err(Error::domain("root scan needs at least 3 points"));
    }
    let g = |x: f64| f(x) - target;
    let xs: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for k in 0..points {
        if gs[k] == 0.0 {
            roots.push(xs[k]);
            continue;
        }
        if k + 1 == points || gs[k + 1] == 0.0 || gs[k].signum() == gs[k + 1].signum() {
            continue;
        }
        let (mut a, mut b) = (xs[k], xs[k + 1]);
        let neg_left = gs[k] < 0.0;
        while b - a > 1e-13 {
            let m = 0.5 * (a + b);
            let gm = g(m);
            if gm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if (gm < 0.0) == neg_left {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_value_gives_point_mass() {
        let d = brute_force_experiment(0.4, |m| -(m - 0.4).powi(2), 101).unwrap();
        assert_eq!(d.law.support(), &[0.4]);
    }

    #[test]
    fn spike_at_one_takes_chord_through_one() {
        // 5-point grid; value -1 except 1 at mu = 1.
        let f = |m: f64| if m == 1.0 { 1.0 } else { -1.0 };
        let d = brute_force_experiment(0.5, f, 5).unwrap();
        assert_eq!(d.law.support(), &[0.0, 1.0]);
        assert!((d.value - 0.0).abs() < 1e-15);
    }

    #[test]
    fn flat_value_ties_go_to_point_mass() {
        let d = brute_force_experiment(0.3, |_| -0.01, 1001).unwrap();
        assert_eq!(d.law.support(), &[0.3]);
    }

    #[test]
    fn min1d_examples() {
        let (x, _) = brute_force_min1d(|x| (x - 0.3).powi(2), 0.0, 1.0, 100_000).unwrap();
        assert!((x - 0.3).abs() < 1e-5);
        let (x, l) = brute_force_min1d(|d| (d - 1.0f64).powi(2) + d * d, -1.0, 2.0, 100_000).unwrap();
        assert!((x - 0.5).abs() < 1e-5 && (l - 0.5).abs() < 1e-9);
        let (x, _) = brute_force_min1d(|x| x, 0.0, 1.0, 10).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn roots_examples() {
        let phi = |m: f64| (1.0 - m * (1.0 - m)) * m;
        let r = brute_force_roots(phi, 0.375, 1000).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() < 1e-12);
        let r = brute_force_roots(|x| 2.0 * x, 0.3, 7).unwrap();
        assert!((r[0] - 0.15).abs() < 1e-12);
        assert!(brute_force_roots(|_| 1.0, 0.0, 11).unwrap().is_empty());
    }
}
