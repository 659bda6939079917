//! Ex-post falsification and violence.
//!
//! Falsification shifts the realized aggregate by `d` at convex cost `c(d)`;
//! violence jumps it to `min(A + rho, 1)` at fixed cost `K` and is followed by
//! falsification. The target is `theta + b` and is never capped.

use serde::{Deserialize, Serialize};

use crate::cost_dist::CostDistribution;
use crate::error::{Error, Result};
use crate::model::{aggregate_action, Belief, State};
use crate::numeric::golden_min;

/// Convex, even falsification cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FalsificationCost {
    /// `c(d) = kappa d^2 / 2`, so the unconstrained optimum is `2/(2+kappa)` of the gap.
    Quadratic { kappa: f64 },
    /// Linear interpolation of `(d, c)` knots, extended linearly past the ends.
    TabulatedConvex { knots: Vec<(f64, f64)> },
}

impl FalsificationCost {
    pub fn eval(&self, d: f64) -> f64 {
        match self {
            FalsificationCost::Quadratic { kappa } => 0.5 * kappa * d * d,
            FalsificationCost::TabulatedConvex { knots } => {
                let n = knots.len();
                let i = knots.partition_point(|k| k.0 <= d).clamp(1, n - 1);
                let (x0, c0) = knots[i - 1];
                let (x1, c1) = knots[i];
                c0 + (c1 - c0) * (d - x0) / (x1 - x0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FalsificationCost::Quadratic { kappa } => {
                if !(kappa.is_finite() && *kappa > 0.0) {
                    return Err(Error::domain(format!("kappa must be > 0, got {kappa}")));
                }
            }
            FalsificationCost::TabulatedConvex { knots } => {
                let bad = |m: &str| Err(Error::domain(format!("tabulated cost: {m}")));
                if knots.len() < 3 {
                    return bad("needs at least 3 knots");
                }
                if knots.iter().any(|(d, c)| !d.is_finite() || !c.is_finite()) {
                    return bad("knots must be finite");
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return bad("distortions must be strictly increasing");
                }
                if !knots.iter().any(|&(d, c)| d == 0.0 && c == 0.0) {
                    return bad("needs the knot (0, 0)");
                }
                for &(d, c) in knots {
                    let mirrored = knots.iter().any(|&(e, ce)| e == -d && (ce - c).abs() <= 1e-12);
                    if !mirrored {
                        return bad("cost must be even");
                    }
                }
                let slopes: Vec<f64> = knots
                    .windows(2)
                    .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                    .collect();
                if slopes.windows(2).any(|s| s[1] < s[0] - 1e-12) {
                    return bad("cost must be convex");
                }
            }
        }
        Ok(())
    }
}

/// Where the distortion may lie. Bounded domains also truncate `A + d` to
/// `[0, 1]`; the unbounded domain does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Unbounded,
    NonNegative,
    Capacity { dbar: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFalsification")]
pub struct FalsificationSpec {
    pub cost: FalsificationCost,
    pub domain: Domain,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFalsification {
    cost: FalsificationCost,
    domain: Domain,
}

impl TryFrom<RawFalsification> for FalsificationSpec {
    type Error = Error;
    fn try_from(r: RawFalsification) -> Result<Self> {
        FalsificationSpec::new(r.cost, r.domain)
    }
}

impl FalsificationSpec {
    pub fn new(cost: FalsificationCost, domain: Domain) -> Result<Self> {
        cost.validate()?;
        if let Domain::Capacity { dbar } = domain {
            if !(dbar.is_finite() && dbar > 0.0) {
                return Err(Error::domain(format!("capacity must be > 0, got {dbar}")));
            }
        }
        Ok(FalsificationSpec { cost, domain })
    }

    pub fn quadratic(kappa: f64, domain: Domain) -> Result<Self> {
        Self::new(FalsificationCost::Quadratic { kappa }, domain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawViolence")]
pub struct ViolenceSpec {
    fixed_cost: f64,
    reach: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawViolence {
    fixed_cost: f64,
    reach: f64,
}

impl TryFrom<RawViolence> for ViolenceSpec {
    type Error = Error;
    fn try_from(r: RawViolence) -> Result<Self> {
        ViolenceSpec::new(r.fixed_cost, r.reach)
    }
}

impl ViolenceSpec {
    /// `fixed_cost` may be `+inf`, which disables violence.
    pub fn new(fixed_cost: f64, reach: f64) -> Result<Self> {
        if !(fixed_cost >= 0.0) {
            return Err(Error::domain(format!("fixed cost must be >= 0, got {fixed_cost}")));
        }
        if !(reach > 0.0 && reach <= 1.0) {
            return Err(Error::domain(format!("reach must lie in (0, 1], got {reach}")));
        }
        Ok(ViolenceSpec { fixed_cost, reach })
    }

    pub fn fixed_cost(&self) -> f64 {
        self.fixed_cost
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }
}

/// Optimal distortion and the resulting loss (squared gap plus cost).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Falsification {
    pub d_star: f64,
    pub loss: f64,
}

pub fn falsify_quadratic_unconstrained(a: f64, target: f64, kappa: f64) -> Result<Falsification> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::domain(format!("kappa must be > 0, got {kappa}")));
    }
    let gap = target - a;
    Ok(Falsification {
        d_star: 2.0 / (2.0 + kappa) * gap,
        loss: kappa / (2.0 + kappa) * gap * gap,
    })
}

fn feasible_interval(a: f64, domain: Domain) -> Result<(f64, f64)> {
    let (lo, hi) = match domain {
        Domain::Unbounded => return Ok((f64::NEG_INFINITY, f64::INFINITY)),
        Domain::NonNegative => (0.0, f64::INFINITY),
        Domain::Capacity { dbar } => (-dbar, dbar),
    };
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::domain(format!("aggregate {a} outside [0, 1]")));
    }
    // Distortions past the truncation points cost more and change nothing.
    Ok((lo.max(-a), hi.min(1.0 - a)))
}

/// Minimize `(Pi(A + d) - target)^2 + c(d)` over the domain, where `Pi`
/// truncates to `[0, 1]` on bounded domains.
pub fn falsify_constrained(a: f64, target: f64, spec: &FalsificationSpec) -> Result<Falsification> {
    let (lo, hi) = feasible_interval(a, spec.domain)?;
    let truncate = spec.domain != Domain::Unbounded;
    let loss_at = |d: f64| {
        let moved = if truncate { (a + d).clamp(0.0, 1.0) } else { a + d };
        let miss = moved - target;
        miss * miss + spec.cost.eval(d)
    };
    match &spec.cost {
        FalsificationCost::Quadratic { kappa } => {
            if spec.domain == Domain::Unbounded {
                return falsify_quadratic_unconstrained(a, target, *kappa);
            }
            let free = falsify_quadratic_unconstrained(a, target, *kappa)?.d_star;
            let d = free.clamp(lo, hi);
            Ok(Falsification {
                d_star: d,
                loss: loss_at(d),
            })
        }
        FalsificationCost::TabulatedConvex { .. } => {
            let gap = target - a;
            let (blo, bhi) = (lo.max(gap.min(0.0)), hi.min(gap.max(0.0)));
            if bhi - blo <= 0.0 {
                let d = blo.max(lo).min(hi);
                return Ok(Falsification {
                    d_star: d,
                    loss: loss_at(d),
                });
            }
            let (d, loss) = golden_min(loss_at, blo, bhi, 1e-11);
            Ok(Falsification { d_star: d, loss })
        }
    }
}

/// `max(0, |target - A| - dbar)`, whose square bounds the capacity-constrained loss.
pub fn residual_shortfall(a: f64, target: f64, dbar: f64) -> Result<f64> {
    if !(dbar > 0.0) {
        return Err(Error::domain(format!("capacity must be > 0, got {dbar}")));
    }
    Ok(((target - a).abs() - dbar).max(0.0))
}

/// What the sender does ex post at one realized aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outcome {
    pub aggregate: f64,
    pub target: f64,
    /// Falsification without violence.
    pub falsification: Falsification,
    /// Loss reduction from violence before paying `K`; absent without violence.
    pub gap: Option<f64>,
    pub violence: bool,
    /// Distortion in the chosen branch.
    pub d_applied: f64,
    /// Loss in the chosen branch, including `K` when violence is used.
    pub total_loss: f64,
}

/// Optimal ex-post response at aggregate `a`.
pub fn outcome_at(a: f64, target: f64, fspec: &FalsificationSpec, vspec: Option<&ViolenceSpec>) -> Result<Outcome> {
    let plain = falsify_constrained(a, target, fspec)?;
    let mut out = Outcome {
        aggregate: a,
        target,
        falsification: plain,
        gap: None,
        violence: false,
        d_applied: plain.d_star,
        total_loss: plain.loss,
    };
    if let Some(v) = vspec {
        let jumped = falsify_constrained((a + v.reach).min(1.0), target, fspec)?;
        let gap = plain.loss - jumped.loss;
        out.gap = Some(gap);
        if violence_decision(gap, v.fixed_cost) {
            out.violence = true;
            out.d_applied = jumped.d_star;
            out.total_loss = v.fixed_cost + jumped.loss;
        }
    }
    Ok(out)
}

pub fn state_outcome(
    mu: Belief,
    theta: State,
    dist: &CostDistribution,
    b: f64,
    fspec: &FalsificationSpec,
    vspec: Option<&ViolenceSpec>,
) -> Result<Outcome> {
    outcome_at(aggregate_action(mu, theta, dist), theta.value() + b, fspec, vspec)
}

/// Sender value at `mu` after optimal statewise falsification.
pub fn indirect_value_falsified(mu: Belief, dist: &CostDistribution, b: f64, spec: &FalsificationSpec) -> Result<f64> {
    continuation_value(mu, dist, b, spec, None)
}

/// `L^f(A) - L^f(min(A + rho, 1))`; positive when violence lowers the loss.
pub fn violence_gap(
    mu: Belief,
    theta: State,
    dist: &CostDistribution,
    b: f64,
    vspec: &ViolenceSpec,
    fspec: &FalsificationSpec,
) -> Result<f64> {
    let out = state_outcome(mu, theta, dist, b, fspec, Some(vspec))?;
    Ok(out.gap.unwrap_or(0.0))
}

/// Violence is used iff `K < gap`; ties go against violence.
pub fn violence_decision(gap: f64, fixed_cost: f64) -> bool {
    fixed_cost < gap
}

/// Per-belief sender value with optimal ex-post instrument use.
pub fn continuation_value(
    mu: Belief,
    dist: &CostDistribution,
    b: f64,
    fspec: &FalsificationSpec,
    vspec: Option<&ViolenceSpec>,
) -> Result<f64> {
    let mut expected = 0.0;
    for theta in State::ALL {
        let p = theta.probability(mu);
        let out = state_outcome(mu, theta, dist, b, fspec, vspec)?;
        expected += p * out.total_loss;
    }
    Ok(-expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::indirect_value;

    fn quad(kappa: f64, domain: Domain) -> FalsificationSpec {
        FalsificationSpec::quadratic(kappa, domain).unwrap()
    }

    fn unif() -> CostDistribution {
        CostDistribution::uniform(0.0, 1.0).unwrap()
    }

    /// Dense scan oracle kept separate from the production minimizers.
    fn scan_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
        let n = 200_001;
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .map(|d| (d, f(d)))
            .fold((lo, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc })
    }

    #[test]
    fn unconstrained_examples() {
        let f = falsify_quadratic_unconstrained(0.4, 0.4, 2.0).unwrap();
        assert_eq!((f.d_star, f.loss), (0.0, 0.0));
        let f = falsify_quadratic_unconstrained(0.0, 1.0, 2.0).unwrap();
        assert_eq!((f.d_star, f.loss), (0.5, 0.5));
        let (d, l) = scan_min(|d| (d - 1.0f64).powi(2) + d * d, -1.0, 2.0);
        assert!((d - 0.5).abs() < 1e-4 && (l - 0.5).abs() < 1e-8);
        let f = falsify_quadratic_unconstrained(0.0, 1.0, 1e9).unwrap();
        assert!(f.d_star.abs() < 1e-8 && (f.loss - 1.0).abs() < 1e-8);
        assert!(falsify_quadratic_unconstrained(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn constrained_examples() {
        let f = falsify_constrained(0.6, 0.2, &quad(2.0, Domain::NonNegative)).unwrap();
        assert_eq!(f.d_star, 0.0);
        assert!((f.loss - 0.16).abs() < 1e-15);

        let f = falsify_constrained(0.0, 1.0, &quad(2.0, Domain::Capacity { dbar: 0.1 })).unwrap();
        assert!((f.d_star - 0.1).abs() < 1e-15);
        assert!((f.loss - 0.82).abs() < 1e-12);
        let (d, l) = scan_min(|d| (d - 1.0f64).powi(2) + d * d, -0.1, 0.1);
        assert!((d - 0.1).abs() < 1e-5 && (l - 0.82).abs() < 1e-8);

        let u = falsify_constrained(0.3, 0.9, &quad(3.0, Domain::Unbounded)).unwrap();
        let c = falsify_quadratic_unconstrained(0.3, 0.9, 3.0).unwrap();
        assert!((u.d_star - c.d_star).abs() < 1e-12 && (u.loss - c.loss).abs() < 1e-12);
    }

    #[test]
    fn truncation_caps_upward_distortion() {
        // a + d cannot exceed one, so the distortion stops there.
        let f = falsify_constrained(0.95, 1.3, &quad(0.1, Domain::NonNegative)).unwrap();
        assert!((f.d_star - 0.05).abs() < 1e-15);
        assert!((f.loss - (0.09 + 0.05 * 0.05 * 0.05)).abs() < 1e-15);
    }

    #[test]
    fn tabulated_matches_quadratic_on_fine_table() {
        let knots: Vec<(f64, f64)> = (-400..=400)
            .map(|i| {
                let d = i as f64 / 200.0;
                (d, d * d)
            })
            .collect();
        let tab = FalsificationSpec::new(FalsificationCost::TabulatedConvex { knots }, Domain::NonNegative).unwrap();
        let q = quad(2.0, Domain::NonNegative);
        for (a, t) in [(0.2, 0.7), (0.5, 0.1), (0.9, 1.2)] {
            let ft = falsify_constrained(a, t, &tab).unwrap();
            let fq = falsify_constrained(a, t, &q).unwrap();
            assert!((ft.d_star - fq.d_star).abs() < 1e-4, "{a} {t}");
            assert!((ft.loss - fq.loss).abs() < 1e-5);
        }
    }

    #[test]
    fn tabulated_validation() {
        let odd = vec![(-1.0, 2.0), (0.0, 0.0), (1.0, 1.0)];
        assert!(FalsificationSpec::new(FalsificationCost::TabulatedConvex { knots: odd }, Domain::Unbounded).is_err());
        let concave = vec![(-2.0, 1.5), (-1.0, 1.0), (0.0, 0.0), (1.0, 1.0), (2.0, 1.5)];
        assert!(
            FalsificationSpec::new(FalsificationCost::TabulatedConvex { knots: concave }, Domain::Unbounded).is_err()
        );
        assert!(FalsificationSpec::quadratic(1.0, Domain::Capacity { dbar: 0.0 }).is_err());
    }

    #[test]
    fn shortfall_examples() {
        assert_eq!(residual_shortfall(0.5, 0.6, 0.2).unwrap(), 0.0);
        assert!((residual_shortfall(0.0, 0.5, 0.2).unwrap() - 0.3).abs() < 1e-15);
        assert!(residual_shortfall(0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn falsified_value_scales_plain_value() {
        let d = unif();
        for i in 0..=20 {
            let mu = Belief::new(i as f64 / 20.0).unwrap();
            let vf = indirect_value_falsified(mu, &d, 0.2, &quad(2.0, Domain::Unbounded)).unwrap();
            assert!((vf - 0.5 * indirect_value(mu, &d, 0.2)).abs() < 1e-12);
            let big = indirect_value_falsified(mu, &d, 0.2, &quad(1e12, Domain::Unbounded)).unwrap();
            assert!((big - indirect_value(mu, &d, 0.2)).abs() < 1e-10);
        }
    }

    #[test]
    fn gap_examples() {
        // No falsification to speak of: G is the difference of squared gaps.
        let f = quad(1e14, Domain::NonNegative);
        let v = ViolenceSpec::new(0.0, 0.5).unwrap();
        let mu = Belief::new(0.5).unwrap();
        let a = aggregate_action(mu, State::Zero, &unif());
        let t = 0.5;
        let g = violence_gap(mu, State::Zero, &unif(), 0.5, &v, &f).unwrap();
        let expected = (t - a).powi(2) - (t - (a + 0.5f64).min(1.0)).powi(2);
        assert!((g - expected).abs() < 1e-10);

        // At the target any jump overshoots.
        let mu = Belief::new(0.3).unwrap();
        let a = aggregate_action(mu, State::Zero, &unif());
        let g = violence_gap(mu, State::Zero, &unif(), a, &v, &quad(2.0, Domain::NonNegative)).unwrap();
        assert!(g <= 0.0);
    }

    #[test]
    fn gap_composes_falsification() {
        let mu = Belief::new(0.6).unwrap();
        let f = quad(2.0, Domain::Unbounded);
        let v = ViolenceSpec::new(0.0, 0.4).unwrap();
        let a = aggregate_action(mu, State::Zero, &unif());
        let jumped = (a + 0.4f64).min(1.0);
        let obj = |base: f64| move |d: f64| (base + d - 0.3f64).powi(2) + d * d;
        let (_, l0) = scan_min(obj(a), -2.0, 2.0);
        let (_, l1) = scan_min(obj(jumped), -2.0, 2.0);
        let g = violence_gap(mu, State::Zero, &unif(), 0.3, &v, &f).unwrap();
        assert!((g - (l0 - l1)).abs() < 1e-8);
    }

    #[test]
    fn decision_is_strict() {
        assert!(violence_decision(0.1, 0.0));
        assert!(!violence_decision(0.1, 0.1));
        assert!(!violence_decision(0.1, 1e6));
    }

    #[test]
    fn continuation_value_options() {
        let d = unif();
        let f = quad(2.0, Domain::NonNegative);
        let never = ViolenceSpec::new(f64::INFINITY, 1.0).unwrap();
        let free = ViolenceSpec::new(0.0, 1.0).unwrap();
        for i in 0..=10 {
            let mu = Belief::new(i as f64 / 10.0).unwrap();
            let base = indirect_value_falsified(mu, &d, 0.2, &f).unwrap();
            assert_eq!(continuation_value(mu, &d, 0.2, &f, Some(&never)).unwrap(), base);
            assert!(continuation_value(mu, &d, 0.2, &f, Some(&free)).unwrap() >= base);
        }
    }
}
