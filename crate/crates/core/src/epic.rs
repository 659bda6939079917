//! Silence posteriors, the two disclosure protocols and ex-post incentive checks.

use serde::{Deserialize, Serialize};

use crate::concavify::PosteriorLaw;
use crate::cost_dist::CostDistribution;
use crate::error::{Error, Result};
use crate::model::{aggregate_action, verifying_mass, Belief, ModelParams, State};
use crate::numeric::bisect;

const SCAN_POINTS: usize = 4001;
const ROOT_FTOL: f64 = 1e-14;
const CHECK_TOL: f64 = 1e-10;

/// `(1 - lambda(mu)) mu`, the mean action in state zero.
pub fn phi(mu: Belief, dist: &CostDistribution) -> f64 {
    (1.0 - verifying_mass(mu, dist)) * mu.value()
}

/// Which root of the indifference equation to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    #[default]
    Smallest,
    Largest,
    /// Smallest root in `[1/2, 1]`.
    UpperHalf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilenceSolution {
    /// Every root found, ascending.
    pub roots: Vec<f64>,
    pub mu_s: f64,
}

/// Solve `phi(mu) = 2b` on `[0, 1]` by a 4001-point sign-change scan refined
/// with bisection. With `b = 0` the degenerate root `mu = 0` is returned.
pub fn solve_silence_posterior(b: f64, dist: &CostDistribution, branch: Branch) -> Result<SilenceSolution> {
    if !(b.is_finite() && b >= 0.0) {
        return Err(Error::domain(format!("bias must be finite and >= 0, got {b}")));
    }
    if !dist.vanishes_at_zero() {
        return Err(Error::InvalidDistribution(
            "indifference equation needs cdf(0) = 0".into(),
        ));
    }
    if b == 0.0 {
        return Ok(SilenceSolution {
            roots: vec![0.0],
            mu_s: 0.0,
        });
    }
    let target = 2.0 * b;
    let phi_one = phi(Belief::clamped(1.0), dist);
    if target > phi_one {
        return Err(Error::InfeasibleBias {
            b,
            two_b: target,
            phi_one,
        });
    }
    let g = |m: f64| phi(Belief::clamped(m), dist) - target;
    let xs: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for k in 0..SCAN_POINTS {
        if gs[k] == 0.0 {
            roots.push(xs[k]);
        } else if k + 1 < SCAN_POINTS && gs[k + 1] != 0.0 && (gs[k] < 0.0) != (gs[k + 1] < 0.0) {
            roots.push(bisect(g, xs[k], xs[k + 1], ROOT_FTOL));
        }
    }
    let mu_s = match branch {
        Branch::Smallest => roots.first().copied(),
        Branch::Largest => roots.last().copied(),
        Branch::UpperHalf => roots.iter().copied().find(|&r| r >= 0.5),
    }
    .ok_or(Error::NoRoot { target })?;
    Ok(SilenceSolution { roots, mu_s })
}

/// Root of `mu^3 - mu^2 + mu - 2b` on `[0, 1]`, the indifference equation for
/// uniform costs on `[0, 1]`.
pub fn uniform_cubic_root(b: f64) -> Result<f64> {
    if !(b.is_finite() && b >= 0.0) {
        return Err(Error::domain(format!("bias must be finite and >= 0, got {b}")));
    }
    if 2.0 * b > 1.0 {
        return Err(Error::InfeasibleBias {
            b,
            two_b: 2.0 * b,
            phi_one: 1.0,
        });
    }
    let cubic = |m: f64| ((m - 1.0) * m + 1.0) * m - 2.0 * b;
    Ok(bisect(cubic, 0.0, 1.0, 0.0))
}

fn silence_prob(delta: f64, eps: f64) -> f64 {
    1.0 - delta + eps * delta
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in [0, 1], got {p}")))
    }
}

/// Posterior after silence when evidence is disclosed with probability
/// `delta_theta` and delivered with probability `1 - epsilon`.
pub fn silence_posterior_bayes(delta0: f64, delta1: f64, params: &ModelParams) -> Result<f64> {
    check_prob("delta0", delta0)?;
    check_prob("delta1", delta1)?;
    let (pi, eps) = (params.prior(), params.friction());
    let num = silence_prob(delta1, eps) * pi;
    let den = num + silence_prob(delta0, eps) * (1.0 - pi);
    if den < 1e-300 {
        return Err(Error::DegenerateSilence { denominator: den });
    }
    Ok(num / den)
}

/// Hard evidence plus silence, with full disclosure in state one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolAParams {
    pub delta0: f64,
    pub delta1: f64,
    pub mu_s: f64,
    pub silence_prob_state0: f64,
    pub silence_prob_state1: f64,
}

impl ProtocolAParams {
    /// Atoms at 0 (evidence of state zero), `mu_s` (silence) and 1.
    pub fn induced_law(&self, params: &ModelParams) -> Result<PosteriorLaw> {
        let (pi, eps) = (params.prior(), params.friction());
        let w1 = pi * (1.0 - eps) * self.delta1;
        let ws = pi * self.silence_prob_state1 + (1.0 - pi) * self.silence_prob_state0;
        let w0 = (1.0 - pi) * (1.0 - eps) * self.delta0;
        PosteriorLaw::new(vec![0.0, self.mu_s, 1.0], vec![w0, ws, w1])
    }
}

/// Range of silence posteriors Protocol A can hit with `delta1 = 1`.
pub fn protocol_a_feasible_interval(params: &ModelParams) -> (f64, f64) {
    let (pi, eps) = (params.prior(), params.friction());
    (pi * eps / (pi * eps + 1.0 - pi), pi)
}

/// Fix `delta1 = 1` and solve the prior-weighted mean condition
/// `pi (1 - eps) + [pi eps + (1 - pi) s0] mu_s = pi` for `delta0`, where
/// `s0 = 1 - delta0 + eps delta0`.
pub fn protocol_a_solve(params: &ModelParams, target_mu_s: Belief) -> Result<ProtocolAParams> {
    let mu_s = target_mu_s.value();
    if !(mu_s > 0.0 && mu_s < 1.0) {
        return Err(Error::domain(format!("silence posterior must be interior, got {mu_s}")));
    }
    let (pi, eps) = (params.prior(), params.friction());
    let s0 = pi * eps * (1.0 - mu_s) / ((1.0 - pi) * mu_s);
    let mut delta0 = (1.0 - s0) / (1.0 - eps);
    // absorb rounding at the interval ends
    if delta0 < 0.0 && delta0 > -1e-12 {
        delta0 = 0.0;
    }
    if delta0 > 1.0 && delta0 < 1.0 + 1e-12 {
        delta0 = 1.0;
    }
    if !(0.0..=1.0).contains(&delta0) {
        let (lo, hi) = protocol_a_feasible_interval(params);
        return Err(Error::InfeasibleProtocol {
            reason: format!("silence posterior {mu_s} outside the feasible interval [{lo}, {hi}]"),
        });
    }
    let protocol = ProtocolAParams {
        delta0,
        delta1: 1.0,
        mu_s,
        silence_prob_state0: silence_prob(delta0, eps),
        silence_prob_state1: silence_prob(1.0, eps),
    };
    let back = silence_posterior_bayes(delta0, 1.0, params)?;
    let mean = protocol.induced_law(params)?.mean();
    if (back - mu_s).abs() > CHECK_TOL || (mean - pi).abs() > CHECK_TOL {
        return Err(Error::InfeasibleProtocol {
            reason: format!("round trip failed: bayes {back}, mean {mean}"),
        });
    }
    Ok(protocol)
}

/// Hard evidence plus a soft label after silence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolBParams {
    pub delta0: f64,
    pub a1: f64,
    pub a0: f64,
    pub mu_l: f64,
    /// Weight on the posterior 1.
    pub alpha: f64,
    /// Weight on the posterior 0; nonzero only for the three-atom fallback.
    pub weight_zero: f64,
}

impl ProtocolBParams {
    pub fn induced_law(&self) -> Result<PosteriorLaw> {
        let w_l = 1.0 - self.alpha - self.weight_zero;
        PosteriorLaw::new(vec![0.0, self.mu_l, 1.0], vec![self.weight_zero, w_l, self.alpha])
    }

    pub fn is_three_atom(&self) -> bool {
        self.weight_zero > 0.0
    }
}

/// Posterior after silence followed by the label `H`.
pub fn label_posterior(params: &ModelParams, delta0: f64, a0: f64, a1: f64) -> f64 {
    let (pi, eps) = (params.prior(), params.friction());
    let s0 = silence_prob(delta0, eps);
    let num = pi * eps * a1;
    num / (num + (1.0 - pi) * s0 * a0)
}

/// Label probability in state zero that makes `(silence, H)` induce `mu_l`.
fn a0_for(params: &ModelParams, delta0: f64, mu_l: f64) -> f64 {
    let (pi, eps) = (params.prior(), params.friction());
    let s0 = silence_prob(delta0, eps);
    pi * eps / ((1.0 - pi) * s0) * (1.0 / mu_l - 1.0)
}

/// The `delta0` at which the label construction yields the given `a0`.
pub fn delta0_for_label(params: &ModelParams, mu_l: Belief, a0: f64) -> Result<f64> {
    let mu_l = mu_l.value();
    if !(a0 > 0.0 && a0 < 1.0) || !(mu_l > 0.0 && mu_l < 1.0) {
        return Err(Error::domain("need a0 and mu_l in (0, 1)"));
    }
    let (pi, eps) = (params.prior(), params.friction());
    let s0 = pi * eps * (1.0 - mu_l) / ((1.0 - pi) * mu_l * a0);
    let delta0 = (1.0 - s0) / (1.0 - eps);
    if !(0.0..=1.0).contains(&delta0) {
        return Err(Error::InfeasibleProtocol {
            reason: format!("no delta0 in [0, 1] gives a0 = {a0} at mu_L = {mu_l}"),
        });
    }
    Ok(delta0)
}

/// Build the soft-label protocol for a target posterior `mu_l` after silence.
///
/// With `mu_l <= pi` the induced law sits on `{mu_l, 1}`. Above the prior that
/// law cannot average to `pi`, so the Bayes-induced three-atom law
/// `{0, mu_l, 1}` with masses `(rest, pi eps / mu_l, pi (1 - eps))` is used.
pub fn protocol_b_construct(params: &ModelParams, delta0: f64, target_mu_l: Belief) -> Result<ProtocolBParams> {
    check_prob("delta0", delta0)?;
    let mu_l = target_mu_l.value();
    if !(mu_l > 0.0 && mu_l < 1.0) {
        return Err(Error::domain(format!("target mu_L must be interior, got {mu_l}")));
    }
    let (pi, eps) = (params.prior(), params.friction());
    let a0 = a0_for(params, delta0, mu_l);
    if !(a0 > 0.0 && a0 < 1.0) {
        return Err(Error::InfeasibleProtocol {
            reason: format!(
                "label probability a0 = {a0} outside (0, 1); a smaller delta0 lowers it"
            ),
        });
    }
    let back = label_posterior(params, delta0, a0, 1.0);
    if (back - mu_l).abs() > CHECK_TOL {
        return Err(Error::InfeasibleProtocol {
            reason: format!("label posterior {back} misses target {mu_l}"),
        });
    }
    let (alpha, weight_zero) = if mu_l <= pi {
        ((pi - mu_l) / (1.0 - mu_l), 0.0)
    } else {
        let w1 = pi * (1.0 - eps);
        let w_l = pi * eps / mu_l;
        (w1, 1.0 - w1 - w_l)
    };
    let protocol = ProtocolBParams {
        delta0,
        a1: 1.0,
        a0,
        mu_l,
        alpha,
        weight_zero,
    };
    let mean = protocol.induced_law()?.mean();
    if (mean - pi).abs() > CHECK_TOL {
        return Err(Error::InfeasibleProtocol {
            reason: format!("induced law has mean {mean}, prior is {pi}"),
        });
    }
    Ok(protocol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    A(ProtocolAParams),
    B(ProtocolBParams),
}

impl Protocol {
    /// Posterior after silence (Protocol A) or after silence with label `H`.
    pub fn silence_belief(&self) -> f64 {
        match self {
            Protocol::A(p) => p.mu_s,
            Protocol::B(p) => p.mu_l,
        }
    }

    pub fn delta0(&self) -> f64 {
        match self {
            Protocol::A(p) => p.delta0,
            Protocol::B(p) => p.delta0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpicReport {
    /// Silence loss minus disclosure loss in state one; EPIC-1 needs `>= 0`.
    pub epic1_slack: f64,
    /// `b^2 - ((1 - lambda) mu_s - b)^2` in state zero.
    pub epic0_slack: f64,
    /// `delta0` is interior, so state zero must be indifferent.
    pub indifference_required: bool,
}

impl EpicReport {
    pub fn holds(&self) -> bool {
        let epic0 = if self.indifference_required {
            self.epic0_slack.abs() <= CHECK_TOL
        } else {
            self.epic0_slack >= -CHECK_TOL
        };
        self.epic1_slack >= -CHECK_TOL && epic0
    }
}

pub fn epic_check(protocol: &Protocol, dist: &CostDistribution, params: &ModelParams) -> EpicReport {
    let b = params.bias();
    let mu = Belief::clamped(protocol.silence_belief());
    let gap1 = aggregate_action(mu, State::One, dist) - (1.0 + b);
    let gap0 = aggregate_action(mu, State::Zero, dist) - b;
    let d0 = protocol.delta0();
    EpicReport {
        epic1_slack: gap1 * gap1 - b * b,
        epic0_slack: b * b - gap0 * gap0,
        indifference_required: d0 > 0.0 && d0 < 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unif() -> CostDistribution {
        CostDistribution::uniform(0.0, 1.0).unwrap()
    }

    fn bel(m: f64) -> Belief {
        Belief::new(m).unwrap()
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(bel(0.0), &unif()), 0.0);
        assert_eq!(phi(bel(0.5), &unif()), 0.375);
        assert_eq!(phi(bel(1.0), &unif()), 1.0);
    }

    #[test]
    fn silence_anchor() {
        let sol = solve_silence_posterior(3.0 / 16.0, &unif(), Branch::Smallest).unwrap();
        assert_eq!(sol.roots.len(), 1);
        assert!((sol.mu_s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn silence_matches_cubic_oracle() {
        // Oracle: plain bisection on the cubic, independent of the cdf code.
        let oracle = |b: f64| {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if m * m * m - m * m + m - 2.0 * b < 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            0.5 * (lo + hi)
        };
        let r = oracle(0.1);
        assert!((r - 0.2455).abs() < 5e-5, "{r}");
        for b in [0.1, 0.45] {
            let sol = solve_silence_posterior(b, &unif(), Branch::Smallest).unwrap();
            assert!((sol.mu_s - oracle(b)).abs() < 1e-10);
            assert!((uniform_cubic_root(b).unwrap() - oracle(b)).abs() < 1e-10);
        }
        let high = solve_silence_posterior(0.45, &unif(), Branch::Smallest).unwrap().mu_s;
        assert!(high > 0.5 && high < 1.0);
    }

    #[test]
    fn silence_errors() {
        assert!(matches!(
            solve_silence_posterior(0.6, &unif(), Branch::Smallest),
            Err(Error::InfeasibleBias { .. })
        ));
        assert!(matches!(
            solve_silence_posterior(0.1, &unif(), Branch::UpperHalf),
            Err(Error::NoRoot { .. })
        ));
        let atom = CostDistribution::piecewise_linear(vec![(0.0, 0.1), (1.0, 1.0)]).unwrap();
        assert!(solve_silence_posterior(0.1, &atom, Branch::Smallest).is_err());
        assert!(matches!(uniform_cubic_root(0.51), Err(Error::InfeasibleBias { .. })));
    }

    #[test]
    fn cubic_boundary() {
        assert_eq!(uniform_cubic_root(0.5).unwrap(), 1.0);
        assert!((uniform_cubic_root(3.0 / 16.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn multiple_roots_are_all_reported() {
        // Cheap verification around mu = 1/2 makes phi dip back down.
        let d = CostDistribution::scaled_uniform(0.2).unwrap();
        let sol = solve_silence_posterior(0.02, &d, Branch::Smallest).unwrap();
        assert_eq!(sol.roots.len(), 3, "{:?}", sol.roots);
        let largest = solve_silence_posterior(0.02, &d, Branch::Largest).unwrap();
        assert_eq!(largest.mu_s, sol.roots[2]);
        assert!(largest.mu_s > 0.724);
        for r in &sol.roots {
            assert!((phi(bel(*r), &d) - 0.04).abs() <= 1e-12);
        }
    }

    #[test]
    fn bayes_silence_examples() {
        let p = ModelParams::new(0.5, 0.1, 0.1).unwrap();
        assert!((silence_posterior_bayes(0.0, 0.0, &p).unwrap() - 0.5).abs() < 1e-15);
        assert!((silence_posterior_bayes(1.0, 1.0, &p).unwrap() - 0.5).abs() < 1e-15);
        let m = silence_posterior_bayes(0.5, 1.0, &p).unwrap();
        assert!((m - 0.1 / 0.65).abs() < 1e-15);
        assert!(silence_posterior_bayes(1.5, 1.0, &p).is_err());
    }

    #[test]
    fn protocol_a_round_trip() {
        let p = ModelParams::new(0.5, 0.1, 0.01).unwrap();
        let a = protocol_a_solve(&p, bel(0.4)).unwrap();
        assert!((silence_posterior_bayes(a.delta0, 1.0, &p).unwrap() - 0.4).abs() < 1e-10);
        assert!((a.induced_law(&p).unwrap().mean() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn protocol_a_at_prior_needs_full_disclosure_of_zero() {
        let p = ModelParams::new(0.5, 0.1, 1e-6).unwrap();
        let a = protocol_a_solve(&p, bel(0.5)).unwrap();
        assert!((a.delta0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn protocol_a_above_prior_is_infeasible() {
        let p = ModelParams::new(0.5, 0.1, 0.01).unwrap();
        let err = protocol_a_solve(&p, bel(0.6)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleProtocol { .. }));
        let (lo, hi) = protocol_a_feasible_interval(&p);
        assert!((lo - 0.005 / 0.505).abs() < 1e-15 && hi == 0.5);
    }

    #[test]
    fn protocol_b_limit_and_guard() {
        let p = ModelParams::new(0.5, 0.1, 0.01).unwrap();
        let err = protocol_b_construct(&p, 1.0, bel(0.4)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleProtocol { .. }));
        // delta0 = 1: a0 = pi/(1-pi) (1/mu_L - 1)
        let b = protocol_b_construct(&p, 1.0, bel(0.75)).unwrap();
        assert!((b.a0 - 1.0 / 3.0).abs() < 1e-12);
        assert!(b.is_three_atom());
        assert!((b.induced_law().unwrap().mean() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn protocol_b_two_atom() {
        let p = ModelParams::new(0.5, 0.1, 0.01).unwrap();
        let d0 = delta0_for_label(&p, bel(0.3), 0.5).unwrap();
        let b = protocol_b_construct(&p, d0, bel(0.3)).unwrap();
        assert!((b.a0 - 0.5).abs() < 1e-12);
        assert!((b.alpha + (1.0 - b.alpha) * 0.3 - 0.5).abs() < 1e-12);
        assert!((label_posterior(&p, d0, b.a0, 1.0) - 0.3).abs() < 1e-10);
        assert!(!b.is_three_atom());
    }

    #[test]
    fn epic_slack_examples() {
        let p = ModelParams::new(0.5, 3.0 / 16.0, 1e-6).unwrap();
        let a = protocol_a_solve(&p, bel(0.5)).unwrap();
        let r = epic_check(&Protocol::A(a), &unif(), &p);
        assert!(r.epic0_slack.abs() < 1e-10);
        let expected = (0.625f64 - 1.1875).powi(2) - 0.1875f64.powi(2);
        assert!((r.epic1_slack - expected).abs() < 1e-12);
        assert!(r.epic1_slack > 0.0);

        let at_one = ProtocolAParams {
            delta0: 1.0,
            delta1: 1.0,
            mu_s: 1.0,
            silence_prob_state0: 0.0,
            silence_prob_state1: 0.0,
        };
        let r = epic_check(&Protocol::A(at_one), &unif(), &p);
        assert!(r.epic1_slack.abs() < 1e-15);
    }
}
