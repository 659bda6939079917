//! Verification-cost distributions.
//!
//! A [`CostDistribution`] is built from a [`Family`] (the serializable
//! parameter set) and is immutable afterwards. "Cheaper verification" is the
//! distribution whose cdf is pointwise larger, see [`fosd_cheaper`].

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};

/// Parameters of a cost law on `[0, c_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Uniform { lo: f64, hi: f64 },
    /// `cdf(x) = min(x / scale, 1)`.
    ScaledUniform { scale: f64 },
    /// Beta(alpha, beta) stretched onto `[0, hi]`.
    BetaRescaled { alpha: f64, beta: f64, hi: f64 },
    /// Linear interpolation between `(cost, probability)` knots.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

/// Outcome of a first-order stochastic dominance comparison of `A` against `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FosdOrder {
    /// `A` has the pointwise larger cdf: verification is cheaper under `A`.
    Cheaper,
    /// `B` has the pointwise larger cdf.
    Costlier,
    Equal,
    NotComparable,
}

const FOSD_TOL: f64 = 1e-12;

/// A validated cost distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct CostDistribution {
    family: Family,
    beta: Option<Beta>,
}

impl PartialEq for CostDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

impl TryFrom<Family> for CostDistribution {
    type Error = Error;
    fn try_from(f: Family) -> Result<Self> {
        CostDistribution::new(f)
    }
}

impl From<CostDistribution> for Family {
    fn from(d: CostDistribution) -> Family {
        d.family
    }
}

impl CostDistribution {
    pub fn new(family: Family) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        let mut beta = None;
        match &family {
            Family::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && lo < hi) {
                    return bad(format!("uniform needs 0 <= lo < hi, got lo={lo}, hi={hi}"));
                }
            }
            Family::ScaledUniform { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return bad(format!("scaled_uniform needs scale > 0, got {scale}"));
                }
            }
            Family::BetaRescaled { alpha, beta: b, hi } => {
                let ok = [*alpha, *b, *hi].iter().all(|v| v.is_finite() && *v > 0.0);
                if !ok {
                    return bad(format!(
                        "beta_rescaled needs alpha, beta, hi > 0, got {alpha}, {b}, {hi}"
                    ));
                }
                beta = Some(Beta::new(*alpha, *b).map_err(|e| Error::InvalidDistribution(e.to_string()))?);
            }
            Family::PiecewiseLinear { knots } => validate_knots(knots)?,
        }
        Ok(CostDistribution { family, beta })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::Uniform { lo, hi })
    }

    pub fn scaled_uniform(scale: f64) -> Result<Self> {
        Self::new(Family::ScaledUniform { scale })
    }

    pub fn beta_rescaled(alpha: f64, beta: f64, hi: f64) -> Result<Self> {
        Self::new(Family::BetaRescaled { alpha, beta, hi })
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(Family::PiecewiseLinear { knots })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Upper end of the support; the cdf equals one from here on.
    pub fn support_max(&self) -> f64 {
        match &self.family {
            Family::Uniform { hi, .. } => *hi,
            Family::ScaledUniform { scale } => *scale,
            Family::BetaRescaled { hi, .. } => *hi,
            Family::PiecewiseLinear { knots } => knots.last().map_or(0.0, |k| k.0),
        }
    }

    /// Whether `cdf(0) = 0`, which the indifference-equation solver requires.
    pub fn vanishes_at_zero(&self) -> bool {
        self.cdf_or_zero(0.0) == 0.0
    }

    /// `F(x)`; negative costs are a domain error.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::domain(format!("cdf evaluated at negative cost {x}")));
        }
        Ok(self.cdf_or_zero(x))
    }

    /// `F(x)` treating any `x < 0` as zero mass. Used on cutoffs `mu(1-mu)`
    /// that may round to `-0.0`.
    pub fn cdf_or_zero(&self, x: f64) -> f64 {
        if !(x >= 0.0) {
            return 0.0;
        }
        match &self.family {
            Family::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Family::ScaledUniform { scale } => (x / scale).min(1.0),
            Family::BetaRescaled { hi, .. } => {
                if x >= *hi {
                    1.0
                } else {
                    self.beta_law().cdf(x / hi)
                }
            }
            Family::PiecewiseLinear { knots } => piecewise_cdf(knots, x),
        }
    }

    /// Smallest `x` with `cdf(x) >= u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("quantile level {u} outside [0, 1]")));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.family {
            Family::Uniform { lo, hi } => lo + u * (hi - lo),
            Family::ScaledUniform { scale } => u * scale,
            Family::BetaRescaled { hi, .. } => hi * self.beta_law().inverse_cdf(u),
            Family::PiecewiseLinear { knots } => piecewise_quantile(knots, u),
        })
    }

    /// One inverse-cdf draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        // u is in [0, 1) so the quantile cannot fail.
        self.quantile(u).unwrap_or(0.0)
    }

    /// Points where the cdf has kinks; folded into dominance grids.
    fn knots(&self) -> Vec<f64> {
        match &self.family {
            Family::Uniform { lo, hi } => vec![*lo, *hi],
            Family::ScaledUniform { scale } => vec![*scale],
            Family::BetaRescaled { hi, .. } => vec![*hi],
            Family::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
        }
    }

    fn beta_law(&self) -> &Beta {
        self.beta.as_ref().expect("beta family always carries its law")
    }
}

fn validate_knots(knots: &[(f64, f64)]) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidDistribution(format!("piecewise_linear: {m}")));
    if knots.is_empty() {
        return bad("needs at least one knot");
    }
    if knots.iter().any(|(x, p)| !x.is_finite() || !p.is_finite()) {
        return bad("knots must be finite");
    }
    if knots[0].0 < 0.0 {
        return bad("costs must be nonnegative");
    }
    if knots[0].1 < 0.0 {
        return bad("first probability must be >= 0");
    }
    for w in knots.windows(2) {
        if w[1].0 <= w[0].0 {
            return bad("costs must be strictly increasing");
        }
        if w[1].1 < w[0].1 {
            return bad("probabilities must be nondecreasing");
        }
    }
    if knots.last().map(|k| k.1) != Some(1.0) {
        return bad("last probability must be exactly 1");
    }
    Ok(())
}

fn piecewise_cdf(knots: &[(f64, f64)], x: f64) -> f64 {
    let first = knots[0];
    if x < first.0 {
        return 0.0;
    }
    let i = knots.partition_point(|k| k.0 <= x);
    if i >= knots.len() {
        return 1.0;
    }
    let (x0, p0) = knots[i - 1];
    let (x1, p1) = knots[i];
    p0 + (p1 - p0) * (x - x0) / (x1 - x0)
}

fn piecewise_quantile(knots: &[(f64, f64)], u: f64) -> f64 {
    let i = knots.partition_point(|k| k.1 < u);
    if i == 0 {
        return knots[0].0;
    }
    let i = i.min(knots.len() - 1);
    let (x0, p0) = knots[i - 1];
    let (x1, p1) = knots[i];
    x0 + (u - p0) / (p1 - p0) * (x1 - x0)
}

/// Compare `a` against `b` on a uniform grid over `[0, max support]` plus all
/// kink points of either cdf.
pub fn fosd_cheaper(a: &CostDistribution, b: &CostDistribution, grid_points: usize) -> Result<FosdOrder> {
    if grid_points < 2 {
        return Err(Error::domain("fosd grid needs at least 2 points"));
    }
    let top = a.support_max().max(b.support_max());
    let mut xs: Vec<f64> = (0..grid_points)
        .map(|i| top * i as f64 / (grid_points - 1) as f64)
        .collect();
    xs.extend(a.knots());
    xs.extend(b.knots());
    let (mut above, mut below) = (false, false);
    for x in xs {
        let d = a.cdf_or_zero(x) - b.cdf_or_zero(x);
        above |= d > FOSD_TOL;
        below |= d < -FOSD_TOL;
    }
    Ok(match (above, below) {
        (false, false) => FosdOrder::Equal,
        (true, false) => FosdOrder::Cheaper,
        (false, true) => FosdOrder::Costlier,
        (true, true) => FosdOrder::NotComparable,
    })
}
