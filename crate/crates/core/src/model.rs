//! Beliefs, the receivers' cutoff rule and the sender's indirect value.

use serde::{Deserialize, Serialize};

use crate::cost_dist::CostDistribution;
use crate::error::{Error, Result};

/// Environment primitives: prior, sender bias and delivery friction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    prior: f64,
    bias: f64,
    friction: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    prior: f64,
    #[serde(alias = "bias")]
    b: f64,
    #[serde(alias = "friction")]
    epsilon: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.prior, r.b, r.epsilon)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            prior: p.prior,
            b: p.bias,
            epsilon: p.friction,
        }
    }
}

impl ModelParams {
    pub fn new(prior: f64, bias: f64, friction: f64) -> Result<Self> {
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::domain(format!("prior must lie in (0, 1), got {prior}")));
        }
        if !(bias.is_finite() && bias >= 0.0) {
            return Err(Error::domain(format!("bias must be finite and >= 0, got {bias}")));
        }
        if !(friction > 0.0 && friction < 1.0) {
            return Err(Error::domain(format!("friction must lie in (0, 1), got {friction}")));
        }
        Ok(ModelParams { prior, bias, friction })
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn friction(&self) -> f64 {
        self.friction
    }

    pub fn with_bias(self, bias: f64) -> Result<Self> {
        ModelParams::new(self.prior, bias, self.friction)
    }

    pub fn with_prior(self, prior: f64) -> Result<Self> {
        ModelParams::new(prior, self.bias, self.friction)
    }
}

/// A public posterior `Pr(theta = 1 | message)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Belief(f64);

impl Belief {
    pub fn new(mu: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&mu) {
            Ok(Belief(mu))
        } else {
            Err(Error::domain(format!("belief must lie in [0, 1], got {mu}")))
        }
    }

    /// Clamp into `[0, 1]`; for grid arithmetic that may overshoot by an ulp.
    pub fn clamped(mu: f64) -> Self {
        Belief(if mu.is_nan() { 0.0 } else { mu.clamp(0.0, 1.0) })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Belief {
    type Error = Error;
    fn try_from(mu: f64) -> Result<Self> {
        Belief::new(mu)
    }
}

impl From<Belief> for f64 {
    fn from(b: Belief) -> f64 {
        b.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum State {
    Zero,
    One,
}

impl State {
    pub const ALL: [State; 2] = [State::Zero, State::One];

    pub fn value(self) -> f64 {
        match self {
            State::Zero => 0.0,
            State::One => 1.0,
        }
    }

    /// `Pr(theta = self)` under belief `mu`.
    pub fn probability(self, mu: Belief) -> f64 {
        match self {
            State::Zero => 1.0 - mu.value(),
            State::One => mu.value(),
        }
    }
}

/// Benefit of verifying at belief `mu`; a receiver verifies iff its cost is at
/// most this.
pub fn verify_cutoff(mu: Belief) -> f64 {
    let m = mu.value();
    m * (1.0 - m)
}

pub fn verifying_mass(mu: Belief, dist: &CostDistribution) -> f64 {
    dist.cdf_or_zero(verify_cutoff(mu))
}

/// Mean action: verifiers play the state, the rest play their belief.
pub fn aggregate_action(mu: Belief, theta: State, dist: &CostDistribution) -> f64 {
    let lambda = verifying_mass(mu, dist);
    (1.0 - lambda) * mu.value() + lambda * theta.value()
}

/// Sender's expected payoff at `mu` (nonpositive).
pub fn indirect_value(mu: Belief, dist: &CostDistribution, b: f64) -> f64 {
    let lambda = verifying_mass(mu, dist);
    let keep = 1.0 - lambda;
    -(b * b + keep * keep * verify_cutoff(mu))
}
