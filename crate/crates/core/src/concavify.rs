//! Concave envelopes on a belief grid and the optimal public experiment.

use serde::Serialize;

use crate::cost_dist::CostDistribution;
use crate::error::{Error, Result};
use crate::model::{indirect_value, Belief, ModelParams};
use crate::numeric::golden_min;

const WEIGHT_TOL: f64 = 1e-12;
const NEST_TOL: f64 = 1e-9;

/// A finite-support distribution over posteriors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorLaw {
    support: Vec<f64>,
    weights: Vec<f64>,
    mean: f64,
}

impl PosteriorLaw {
    /// Atoms are sorted; exact duplicates are merged and zero weights dropped.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::domain("posterior law needs matching, nonempty support and weights"));
        }
        if support.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::domain("posterior support must lie in [0, 1]"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= -WEIGHT_TOL)) {
            return Err(Error::domain("posterior weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::domain(format!("posterior weights sum to {total}, not 1")));
        }
        let mut atoms: Vec<(f64, f64)> = support
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (m, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == m => last.1 += w,
                _ => merged.push((m, w)),
            }
        }
        let mean = merged.iter().map(|(m, w)| m * w).sum();
        let (support, weights) = merged.into_iter().unzip();
        Ok(PosteriorLaw { support, weights, mean })
    }

    pub fn point_mass(mu: Belief) -> Self {
        PosteriorLaw {
            support: vec![mu.value()],
            weights: vec![1.0],
            mean: mu.value(),
        }
    }

    /// The law on `{lo, hi}` with mean `mean`; weight on `hi` is
    /// `(mean - lo) / (hi - lo)`.
    pub fn binary(lo: f64, hi: f64, mean: f64) -> Result<Self> {
        if !(0.0 <= lo && lo <= mean && mean <= hi && hi <= 1.0) {
            return Err(Error::domain(format!(
                "binary law needs 0 <= lo <= mean <= hi <= 1, got {lo}, {mean}, {hi}"
            )));
        }
        if hi == lo || mean == lo && mean == hi {
            return Ok(Self::point_mass(Belief::clamped(mean)));
        }
        let alpha = (mean - lo) / (hi - lo);
        PosteriorLaw::new(vec![lo, hi], vec![1.0 - alpha, alpha])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.support[0]
    }

    pub fn hi(&self) -> f64 {
        self.support[self.support.len() - 1]
    }

    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.support.iter().zip(&self.weights).map(|(&m, &w)| w * f(m)).sum()
    }
}

/// Uniform grid on `[0, 1]` including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridSpec {
    points: usize,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    points: usize,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        GridSpec::new(r.points)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points: 2001 }
    }
}

impl GridSpec {
    pub fn new(points: usize) -> Result<Self> {
        if points < 3 {
            return Err(Error::domain(format!("grid needs at least 3 points, got {points}")));
        }
        Ok(GridSpec { points })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            1.0
        } else {
            i as f64 / (self.points - 1) as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.node(i)).collect()
    }
}

/// Concave envelope sampled on the same grid as its input.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub values: Vec<f64>,
    /// Indices of the upper-hull vertices, ascending; collinear points dropped.
    pub vertices: Vec<usize>,
}

/// Upper concave envelope of `values` sampled on a uniform grid over `[0, 1]`.
pub fn concave_envelope(values: &[f64]) -> Result<Envelope> {
    let n = values.len();
    if n < 3 {
        return Err(Error::domain("envelope needs at least 3 grid values"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite value at grid index {i}")));
    }
    // Monotone chain on index coordinates; uniform spacing keeps the turn test exact.
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b - a) as f64 * (values[i] - values[a]) - (values[b] - values[a]) * (i - a) as f64;
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut env = vec![0.0; n];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        env[a] = values[a];
        for (k, e) in env.iter_mut().enumerate().take(b).skip(a + 1) {
            let t = (k - a) as f64 / (b - a) as f64;
            *e = values[a] + t * (values[b] - values[a]);
        }
    }
    env[n - 1] = values[n - 1];
    Ok(Envelope {
        values: env,
        vertices: hull,
    })
}

/// Chord value at `pi` of the segment from `(lo, f(lo))` to `(hi, f(hi))`.
fn chord_at<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, pi: f64) -> f64 {
    if hi - lo <= 0.0 {
        return f(pi);
    }
    ((hi - pi) * f(lo) + (pi - lo) * f(hi)) / (hi - lo)
}

/// Value-maximizing Bayes-plausible law with at most two atoms.
///
/// The hull segment of the sampled values that covers the prior gives the
/// grid solution; each contact point is then polished by golden section
/// within one grid cell. When several chords attain the envelope (a flat
/// stretch), the tightest one is returned, and a point mass wins exact ties.
pub fn optimal_experiment<F: Fn(f64) -> f64>(
    params: &ModelParams,
    value_fn: F,
    grid: GridSpec,
) -> Result<PosteriorLaw> {
    let pi = params.prior();
    let xs = grid.nodes();
    let vs: Vec<f64> = xs.iter().map(|&x| value_fn(x)).collect();
    let env = concave_envelope(&vs)?;
    let seg = env
        .vertices
        .windows(2)
        .find(|w| xs[w[0]] <= pi && pi <= xs[w[1]])
        .expect("hull spans [0, 1]");
    let (mut i, mut j) = (seg[0], seg[1]);

    let scale = 1.0 + vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    // Tighten to the innermost grid points lying on the same chord.
    let (a, b) = (i, j);
    for k in a + 1..b {
        let t = (xs[k] - xs[a]) / (xs[b] - xs[a]);
        let on_chord = vs[a] + t * (vs[b] - vs[a]);
        if (vs[k] - on_chord).abs() <= tol {
            if xs[k] <= pi {
                i = k;
            }
            if xs[k] >= pi && j == b {
                j = k;
            }
        }
    }

    let h = grid.step();
    let (l_lo, l_hi) = ((xs[i] - h).max(0.0), (xs[i] + h).min(pi));
    let (h_lo, h_hi) = ((xs[j] - h).max(pi), (xs[j] + h).min(1.0));
    let mut lo = xs[i].min(pi);
    let mut hi = xs[j].max(pi);
    let mut best = chord_at(&value_fn, lo, hi, pi);
    for _ in 0..4 {
        let (cand, neg) = golden_min(|l| -chord_at(&value_fn, l, hi, pi), l_lo, l_hi, 1e-13);
        if -neg > best {
            best = -neg;
            lo = cand;
        }
        let (cand, neg) = golden_min(|u| -chord_at(&value_fn, lo, u, pi), h_lo, h_hi, 1e-13);
        if -neg > best {
            best = -neg;
            hi = cand;
        }
    }

    let at_prior = value_fn(pi);
    if at_prior >= best - tol || hi - lo <= 0.0 {
        return Ok(PosteriorLaw::point_mass(Belief::clamped(pi)));
    }
    PosteriorLaw::binary(lo, hi, pi)
}

/// Optimal design for the plain indirect value.
pub fn benchmark_experiment(params: &ModelParams, dist: &CostDistribution, grid: GridSpec) -> Result<PosteriorLaw> {
    let b = params.bias();
    optimal_experiment(params, |m| indirect_value(Belief::clamped(m), dist, b), grid)
}

fn require_binary(law: &PosteriorLaw) -> Result<()> {
    if law.len() > 2 {
        return Err(Error::domain(format!(
            "spread is defined for laws with at most two atoms, got {}",
            law.len()
        )));
    }
    Ok(())
}

/// `mu_H - mu_L`, zero for a point mass.
pub fn blackwell_spread(law: &PosteriorLaw) -> Result<f64> {
    require_binary(law)?;
    Ok(law.hi() - law.lo())
}

/// Same mean (within 1e-9) and nested support interval (within 1e-9).
pub fn is_mean_preserving_contraction(inner: &PosteriorLaw, outer: &PosteriorLaw) -> Result<bool> {
    require_binary(inner)?;
    require_binary(outer)?;
    Ok((inner.mean() - outer.mean()).abs() <= NEST_TOL
        && inner.lo() >= outer.lo() - NEST_TOL
        && inner.hi() <= outer.hi() + NEST_TOL)
}

/// Central-difference slope of `value_fn` at `mu_l` minus the chord slope to `mu = 1`.
pub fn tangency_residual_with<F: Fn(f64) -> f64>(value_fn: F, mu_l: f64, h: f64) -> Result<f64> {
    if !(mu_l > 0.0 && mu_l < 1.0) {
        return Err(Error::domain(format!("tangency point must be interior, got {mu_l}")));
    }
    if !(h > 0.0) || mu_l - h < 0.0 || mu_l + h > 1.0 {
        return Err(Error::domain(format!("step {h} leaves [0, 1] around {mu_l}")));
    }
    let slope = (value_fn(mu_l + h) - value_fn(mu_l - h)) / (2.0 * h);
    let chord = (value_fn(1.0) - value_fn(mu_l)) / (1.0 - mu_l);
    Ok(slope - chord)
}

pub fn tangency_residual(mu_l: Belief, dist: &CostDistribution, b: f64, h: f64) -> Result<f64> {
    tangency_residual_with(|m| indirect_value(Belief::clamped(m), dist, b), mu_l.value(), h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pi: f64, b: f64) -> ModelParams {
        ModelParams::new(pi, b, 0.01).unwrap()
    }

    #[test]
    fn envelope_of_concave_input_is_identity() {
        let g = GridSpec::new(101).unwrap();
        let vs: Vec<f64> = g.nodes().iter().map(|m| m * (1.0 - m)).collect();
        let env = concave_envelope(&vs).unwrap();
        for (e, v) in env.values.iter().zip(&vs) {
            assert!((e - v).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_of_kink_is_chord() {
        let env = concave_envelope(&[0.0, 0.0, 0.5]).unwrap();
        assert_eq!(env.values, vec![0.0, 0.25, 0.5]);
        assert_eq!(env.vertices, vec![0, 2]);
    }

    #[test]
    fn envelope_rejects_nan() {
        assert!(concave_envelope(&[0.0, f64::NAN, 1.0]).is_err());
        assert!(concave_envelope(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn concave_value_gives_point_mass() {
        let p = params(0.37, 0.0);
        let law = optimal_experiment(&p, |m| m * (1.0 - m), GridSpec::default()).unwrap();
        assert_eq!(law.support(), &[0.37]);
    }

    #[test]
    fn convex_value_gives_full_disclosure() {
        let p = params(0.3, 0.0);
        let law = optimal_experiment(&p, |m| (m - 0.5).powi(2), GridSpec::default()).unwrap();
        assert_eq!(law.support(), &[0.0, 1.0]);
        assert!((law.weights()[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn flat_stretch_picks_tightest_chord() {
        // Linear on [0.2, 0.8], strictly concave outside: every chord inside
        // the flat part is optimal; the minimal-spread choice is a point mass.
        let f = |m: f64| {
            if m < 0.2 {
                -(m - 0.2).powi(2)
            } else if m > 0.8 {
                -(m - 0.8).powi(2)
            } else {
                0.0
            }
        };
        let law = optimal_experiment(&params(0.5, 0.0), f, GridSpec::new(101).unwrap()).unwrap();
        assert_eq!(law.len(), 1);
    }

    #[test]
    fn binary_weights_match_alpha() {
        let law = PosteriorLaw::binary(0.2, 0.9, 0.5).unwrap();
        let alpha = (0.5 - 0.2) / (0.9 - 0.2);
        assert!((law.weights()[1] - alpha).abs() < 1e-15);
        assert!((law.mean() - 0.5).abs() < 1e-15);
        assert!(PosteriorLaw::binary(0.6, 0.9, 0.5).is_err());
    }

    #[test]
    fn spread_examples() {
        let pm = PosteriorLaw::point_mass(Belief::new(0.4).unwrap());
        assert_eq!(blackwell_spread(&pm).unwrap(), 0.0);
        let full = PosteriorLaw::binary(0.0, 1.0, 0.4).unwrap();
        assert_eq!(blackwell_spread(&full).unwrap(), 1.0);
        let law = PosteriorLaw::new(vec![0.3, 0.9], vec![0.5, 0.5]).unwrap();
        assert!((blackwell_spread(&law).unwrap() - 0.6).abs() < 1e-15);
        let three = PosteriorLaw::new(vec![0.0, 0.5, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert!(blackwell_spread(&three).is_err());
    }

    #[test]
    fn contraction_examples() {
        let pm = PosteriorLaw::point_mass(Belief::new(0.5).unwrap());
        let outer = PosteriorLaw::binary(0.1, 0.9, 0.5).unwrap();
        let inner = PosteriorLaw::binary(0.2, 0.8, 0.5).unwrap();
        assert!(is_mean_preserving_contraction(&pm, &outer).unwrap());
        assert!(is_mean_preserving_contraction(&inner, &outer).unwrap());
        assert!(!is_mean_preserving_contraction(&outer, &inner).unwrap());
        let three = PosteriorLaw::new(vec![0.0, 0.5, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert!(is_mean_preserving_contraction(&three, &outer).is_err());
    }

    #[test]
    fn tangency_of_linear_tail_is_zero() {
        let f = |m: f64| if m < 0.4 { -(m - 0.4).powi(2) } else { 0.3 * m };
        let r = tangency_residual_with(f, 0.6, 1e-4).unwrap();
        assert!(r.abs() < 1e-9);
    }

    #[test]
    fn tangency_sign_near_one_matches_difference_quotients() {
        // Oracle: v(mu) = -(1 - mu + mu^2)^2 mu (1 - mu) for b = 0; the
        // forward and backward quotients bracket the derivative.
        let v = |m: f64| -(1.0 - m + m * m).powi(2) * m * (1.0 - m);
        let (mu, h) = (0.999, 1e-6);
        let chord = (v(1.0) - v(mu)) / (1.0 - mu);
        let fwd = (v(mu + h) - v(mu)) / h;
        let bwd = (v(mu) - v(mu - h)) / h;
        let sign = (0.5 * (fwd + bwd) - chord).signum();
        let unif = CostDistribution::uniform(0.0, 1.0).unwrap();
        let r = tangency_residual(Belief::new(mu).unwrap(), &unif, 0.0, h).unwrap();
        assert_eq!(r.signum(), sign);
        assert!(tangency_residual(Belief::new(0.0).unwrap(), &unif, 0.0, h).is_err());
    }
}
