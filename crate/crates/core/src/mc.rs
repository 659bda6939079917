//! Seeded Monte Carlo over a finite population of receivers.
//!
//! Replication `r` draws from ChaCha8 seeded with `seed` on stream `r`, so
//! results do not depend on scheduling or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost_dist::CostDistribution;
use crate::error::{Error, Result};
use crate::instruments::{outcome_at, FalsificationSpec, ViolenceSpec};
use crate::model::{verify_cutoff, Belief, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSim")]
pub struct SimConfig {
    n: usize,
    seed: u64,
    replications: usize,
}

#[derive(Deserialize)]
struct RawSim {
    n: usize,
    seed: u64,
    #[serde(default = "one")]
    replications: usize,
}

fn one() -> usize {
    1
}

impl TryFrom<RawSim> for SimConfig {
    type Error = Error;
    fn try_from(r: RawSim) -> Result<Self> {
        SimConfig::new(r.n, r.seed, r.replications)
    }
}

impl SimConfig {
    pub fn new(n: usize, seed: u64, replications: usize) -> Result<Self> {
        if n == 0 || replications == 0 {
            return Err(Error::domain("simulation needs n >= 1 and replications >= 1"));
        }
        Ok(SimConfig { n, seed, replications })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SimConfig { seed, ..self }
    }
}

fn stream(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerificationEstimate {
    pub lambda_hat: f64,
    pub a_hat: f64,
    /// Binomial standard error of `lambda_hat`.
    pub se_lambda: f64,
    pub se_a: f64,
    /// Total receivers simulated, `n * replications`.
    pub draws: usize,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    verified: u64,
    sum: f64,
    sum_sq: f64,
}

fn population<R: Rng>(rng: &mut R, mu: f64, theta: f64, cutoff: f64, dist: &CostDistribution, n: usize) -> Tally {
    let mut t = Tally::default();
    for _ in 0..n {
        let action = if dist.sample(rng) <= cutoff {
            t.verified += 1;
            theta
        } else {
            mu
        };
        t.sum += action;
        t.sum_sq += action * action;
    }
    t
}

/// Each receiver draws a cost and verifies iff it is at most `mu (1 - mu)`;
/// verifiers act `theta`, the rest act `mu`.
pub fn simulate_verification(
    mu: Belief,
    theta: State,
    dist: &CostDistribution,
    cfg: &SimConfig,
) -> Result<VerificationEstimate> {
    let (m, th, cutoff) = (mu.value(), theta.value(), verify_cutoff(mu));
    let tallies: Vec<Tally> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| population(&mut stream(cfg.seed, r), m, th, cutoff, dist, cfg.n))
        .collect();
    let total = tallies.iter().fold(Tally::default(), |acc, t| Tally {
        verified: acc.verified + t.verified,
        sum: acc.sum + t.sum,
        sum_sq: acc.sum_sq + t.sum_sq,
    });
    let draws = cfg.n * cfg.replications;
    let nf = draws as f64;
    let p = total.verified as f64 / nf;
    let a_hat = total.sum / nf;
    let var_a = (total.sum_sq / nf - a_hat * a_hat).max(0.0);
    Ok(VerificationEstimate {
        lambda_hat: p,
        a_hat,
        se_lambda: (p * (1.0 - p) / nf).sqrt(),
        se_a: (var_a / nf).sqrt(),
        draws,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueEstimate {
    pub v_hat: f64,
    /// Standard error across replications; NaN with a single replication.
    pub se: f64,
    pub replications: usize,
    pub n: usize,
}

/// Per replication: draw the state from `mu`, simulate the aggregate over
/// `n` receivers, apply the optimal instruments if given, record `-loss`.
pub fn simulate_sender_value(
    mu: Belief,
    dist: &CostDistribution,
    b: f64,
    cfg: &SimConfig,
    fspec: Option<&FalsificationSpec>,
    vspec: Option<&ViolenceSpec>,
) -> Result<ValueEstimate> {
    if vspec.is_some() && fspec.is_none() {
        return Err(Error::domain("violence needs a falsification spec"));
    }
    let (m, cutoff) = (mu.value(), verify_cutoff(mu));
    let values: Vec<Result<f64>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, r);
            let theta = if rng.random::<f64>() < m { State::One } else { State::Zero };
            let t = population(&mut rng, m, theta.value(), cutoff, dist, cfg.n);
            let a_hat = (t.sum / cfg.n as f64).clamp(0.0, 1.0);
            let target = theta.value() + b;
            let loss = match fspec {
                Some(f) => outcome_at(a_hat, target, f, vspec)?.total_loss,
                None => (a_hat - target).powi(2),
            };
            Ok(-loss)
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(ValueEstimate {
        v_hat: mean,
        se: (var / k).sqrt(),
        replications: cfg.replications,
        n: cfg.n,
    })
}
