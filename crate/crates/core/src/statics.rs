//! Comparative statics along paths of cost distributions that get cheaper
//! step by step.
//!
//! Each sweep first checks that consecutive members are FOSD-ordered. If
//! they are not, the table is still produced but nothing is asserted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concavify::{blackwell_spread, optimal_experiment, GridSpec, PosteriorLaw};
use crate::cost_dist::{fosd_cheaper, CostDistribution, FosdOrder};
use crate::epic::{delta0_for_label, protocol_b_construct, solve_silence_posterior, Branch, ProtocolBParams};
use crate::error::{Error, Result};
use crate::instruments::{continuation_value, state_outcome, FalsificationSpec, ViolenceSpec};
use crate::model::{indirect_value, verifying_mass, Belief, ModelParams, State};

/// Differences smaller than this are numerical ties.
pub const TIE_TOL: f64 = 1e-7;
/// Minimum step for "strictly increasing".
pub const STRICT_TOL: f64 = 1e-9;
const FOSD_GRID: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
    pub hi: f64,
}

/// A sequence of cost laws, cheapest last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyPath {
    ScaledUniform { scales: Vec<f64> },
    Beta { params: Vec<BetaParams> },
    Piecewise { knots: Vec<Vec<(f64, f64)>> },
}

impl FamilyPath {
    /// `steps` scales evenly spaced from `from` down to `to`.
    pub fn scaled_uniform_linspace(from: f64, to: f64, steps: usize) -> Self {
        let scales = (0..steps)
            .map(|i| from + (to - from) * i as f64 / (steps.max(2) - 1) as f64)
            .collect();
        FamilyPath::ScaledUniform { scales }
    }

    pub fn members(&self) -> Result<Vec<CostDistribution>> {
        match self {
            FamilyPath::ScaledUniform { scales } => scales.iter().map(|&s| CostDistribution::scaled_uniform(s)).collect(),
            FamilyPath::Beta { params } => params
                .iter()
                .map(|p| CostDistribution::beta_rescaled(p.alpha, p.beta, p.hi))
                .collect(),
            FamilyPath::Piecewise { knots } => knots
                .iter()
                .map(|k| CostDistribution::piecewise_linear(k.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Unconstrained concavification of the (continuation) value.
    #[default]
    Benchmark,
    /// The soft-label protocol with `mu_L` at the silence root.
    ProtocolB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruments {
    pub falsification: FalsificationSpec,
    #[serde(default)]
    pub violence: Option<ViolenceSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub family: FamilyPath,
    pub model: ModelParams,
    pub design: Design,
    pub instruments: Option<Instruments>,
    pub grid: GridSpec,
    pub branch: Branch,
}

impl SweepSpec {
    pub fn new(family: FamilyPath, model: ModelParams) -> Self {
        SweepSpec {
            family,
            model,
            design: Design::Benchmark,
            instruments: None,
            grid: GridSpec::default(),
            branch: Branch::Smallest,
        }
    }
}

/// A failed monotonicity check between members `index - 1` and `index`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub column: String,
    pub previous: f64,
    pub current: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport<R> {
    pub rows: Vec<R>,
    /// Whether the family was FOSD-ordered, so that assertions were made.
    pub asserted: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl<R> SweepReport<R> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Consecutive comparisons: entry `k` is member `k + 1` against member `k`.
pub fn path_ordering(members: &[CostDistribution]) -> Result<Vec<FosdOrder>> {
    members
        .windows(2)
        .map(|w| fosd_cheaper(&w[1], &w[0], FOSD_GRID))
        .collect()
}

struct Checker<'a> {
    members: &'a [CostDistribution],
    violations: Vec<Violation>,
}

impl<'a> Checker<'a> {
    fn new(members: &'a [CostDistribution]) -> Self {
        Checker {
            members,
            violations: Vec::new(),
        }
    }

    fn fail(&mut self, index: usize, column: &str, previous: f64, current: f64, what: &str) {
        self.violations.push(Violation {
            index,
            column: column.to_string(),
            previous,
            current,
            detail: format!(
                "{what}: member {} = {:?}, member {} = {:?}",
                index - 1,
                self.members[index - 1].family(),
                index,
                self.members[index].family()
            ),
        });
    }

    /// `sign = 1` for nondecreasing, `-1` for nonincreasing.
    fn monotone(&mut self, column: &str, values: &[f64], sign: f64) {
        for k in 1..values.len() {
            let step = sign * (values[k] - values[k - 1]);
            if step < -TIE_TOL {
                let what = if sign > 0.0 { "decreased" } else { "increased" };
                self.fail(k, column, values[k - 1], values[k], what);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilenceRow {
    pub index: usize,
    /// NaN when the bias is infeasible for this member.
    pub mu_s: f64,
    pub lambda: f64,
    pub error: Option<String>,
}

fn ordered_or_warn(orders: &[FosdOrder], warnings: &mut Vec<String>) -> bool {
    match orders
        .iter()
        .position(|o| !matches!(o, FosdOrder::Cheaper | FosdOrder::Equal))
    {
        None => true,
        Some(k) => {
            warnings.push(format!(
                "member {} is not FOSD-cheaper than member {k} ({:?}); report only",
                k + 1,
                orders[k]
            ));
            false
        }
    }
}

/// Silence posterior for each member; it must rise as verification gets
/// cheaper, strictly when `b > 0` and the member actually changed.
pub fn sweep_silence_posterior(spec: &SweepSpec, b: f64) -> Result<SweepReport<SilenceRow>> {
    let members = spec.family.members()?;
    let orders = path_ordering(&members)?;
    let mut warnings = Vec::new();
    let asserted = ordered_or_warn(&orders, &mut warnings);
    let rows: Vec<SilenceRow> = members
        .par_iter()
        .enumerate()
        .map(|(index, d)| match solve_silence_posterior(b, d, spec.branch) {
            Ok(sol) => SilenceRow {
                index,
                mu_s: sol.mu_s,
                lambda: verifying_mass(Belief::clamped(sol.mu_s), d),
                error: None,
            },
            Err(e) => SilenceRow {
                index,
                mu_s: f64::NAN,
                lambda: f64::NAN,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let prefix = rows.iter().take_while(|r| r.error.is_none()).count();
    if prefix < rows.len() {
        warnings.push(format!("infeasible from member {prefix}; checks cover members 0..{prefix}"));
    }
    let mut check = Checker::new(&members);
    if asserted {
        let mu: Vec<f64> = rows[..prefix].iter().map(|r| r.mu_s).collect();
        check.monotone("mu_s", &mu, 1.0);
        if b > 0.0 {
            for k in 1..prefix {
                if orders[k - 1] == FosdOrder::Cheaper && mu[k] - mu[k - 1] < STRICT_TOL {
                    check.fail(k, "mu_s", mu[k - 1], mu[k], "not strictly increasing");
                }
            }
        }
    }
    Ok(SweepReport {
        rows,
        asserted,
        violations: check.violations,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignRow {
    pub index: usize,
    pub mu_l: f64,
    pub mu_h: f64,
    pub spread: f64,
    pub value: f64,
    pub error: Option<String>,
}

/// Per-belief value the design maximizes for one member.
pub fn value_function<'a>(
    dist: &'a CostDistribution,
    b: f64,
    instruments: Option<&'a Instruments>,
) -> impl Fn(f64) -> f64 + 'a {
    move |m: f64| {
        let mu = Belief::clamped(m);
        match instruments {
            None => indirect_value(mu, dist, b),
            Some(ins) => continuation_value(mu, dist, b, &ins.falsification, ins.violence.as_ref()).unwrap_or(f64::NAN),
        }
    }
}

/// The soft-label protocol whose label posterior is the silence root. `delta0`
/// is chosen so that `a0 = 1/2` when possible, otherwise at the end of
/// `[0, 1]` that keeps `a0` inside `(0, 1)`.
pub fn protocol_b_equilibrium(params: &ModelParams, dist: &CostDistribution, branch: Branch) -> Result<ProtocolBParams> {
    let mu_l = solve_silence_posterior(params.bias(), dist, branch)?.mu_s;
    let target = Belief::new(mu_l)?;
    if !(mu_l > 0.0 && mu_l < 1.0) {
        return Err(Error::InfeasibleProtocol {
            reason: format!("silence root {mu_l} is not interior"),
        });
    }
    let delta0 = delta0_for_label(params, target, 0.5).unwrap_or(if mu_l > params.prior() { 1.0 } else { 0.0 });
    protocol_b_construct(params, delta0, target)
}

/// The law each design picks for one member.
pub fn design_law(spec: &SweepSpec, dist: &CostDistribution) -> Result<PosteriorLaw> {
    let b = spec.model.bias();
    match spec.design {
        Design::Benchmark => optimal_experiment(&spec.model, value_function(dist, b, spec.instruments.as_ref()), spec.grid),
        Design::ProtocolB => protocol_b_equilibrium(&spec.model, dist, spec.branch)?.induced_law(),
    }
}

fn design_row(spec: &SweepSpec, index: usize, dist: &CostDistribution) -> Result<DesignRow> {
    let law = design_law(spec, dist)?;
    let value_fn = value_function(dist, spec.model.bias(), spec.instruments.as_ref());
    let (mu_l, mu_h, spread) = match spec.design {
        Design::Benchmark => (law.lo(), law.hi(), blackwell_spread(&law)?),
        Design::ProtocolB => {
            // the soft-label atom and the top of the support
            let mu_l = law.support().iter().copied().find(|&m| m > 0.0).unwrap_or(law.lo());
            (mu_l, law.hi(), law.hi() - mu_l)
        }
    };
    Ok(DesignRow {
        index,
        mu_l,
        mu_h,
        spread,
        value: law.expectation(value_fn),
        error: None,
    })
}

/// Optimal design per member. Benchmark: the spread must not grow and each
/// law must be a mean-preserving contraction of the previous one.
/// Protocol B: `mu_L` must not fall.
pub fn sweep_design(spec: &SweepSpec) -> Result<SweepReport<DesignRow>> {
    let members = spec.family.members()?;
    let orders = path_ordering(&members)?;
    let mut warnings = Vec::new();
    let asserted = ordered_or_warn(&orders, &mut warnings);
    let rows: Vec<DesignRow> = members
        .par_iter()
        .enumerate()
        .map(|(index, d)| {
            design_row(spec, index, d).unwrap_or_else(|e| DesignRow {
                index,
                mu_l: f64::NAN,
                mu_h: f64::NAN,
                spread: f64::NAN,
                value: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let prefix = rows.iter().take_while(|r| r.error.is_none()).count();
    if prefix < rows.len() {
        warnings.push(format!("design failed from member {prefix}; checks cover members 0..{prefix}"));
    }
    let mut check = Checker::new(&members);
    if asserted {
        let ok = &rows[..prefix];
        match spec.design {
            Design::Benchmark => {
                let spread: Vec<f64> = ok.iter().map(|r| r.spread).collect();
                check.monotone("spread", &spread, -1.0);
                for k in 1..ok.len() {
                    let (outer, inner) = (&ok[k - 1], &ok[k]);
                    if inner.mu_l < outer.mu_l - TIE_TOL {
                        check.fail(k, "mu_l", outer.mu_l, inner.mu_l, "support not nested");
                    }
                    if inner.mu_h > outer.mu_h + TIE_TOL {
                        check.fail(k, "mu_h", outer.mu_h, inner.mu_h, "support not nested");
                    }
                }
            }
            Design::ProtocolB => {
                let mu_l: Vec<f64> = ok.iter().map(|r| r.mu_l).collect();
                check.monotone("mu_l", &mu_l, 1.0);
            }
        }
    }
    Ok(SweepReport {
        rows,
        asserted,
        violations: check.violations,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsageRow {
    pub index: usize,
    /// Probability that falsification is used (`d > 0` in the chosen branch).
    pub falsification_mass: f64,
    pub violence_prob: f64,
    pub error: Option<String>,
}

/// Ex-ante instrument use under a given law.
pub fn instrument_usage(
    law: &PosteriorLaw,
    dist: &CostDistribution,
    b: f64,
    instruments: &Instruments,
) -> Result<(f64, f64)> {
    let (mut fals, mut viol) = (0.0, 0.0);
    for (&m, &w) in law.support().iter().zip(law.weights()) {
        let mu = Belief::clamped(m);
        for theta in State::ALL {
            let p = w * theta.probability(mu);
            if p == 0.0 {
                continue;
            }
            let out = state_outcome(mu, theta, dist, b, &instruments.falsification, instruments.violence.as_ref())?;
            if out.d_applied > 0.0 {
                fals += p;
            }
            if out.violence {
                viol += p;
            }
        }
    }
    Ok((fals, viol))
}

/// Falsification and violence use integrated over each member's design law;
/// both must weakly increase along the path.
pub fn sweep_instrument_usage(spec: &SweepSpec) -> Result<SweepReport<UsageRow>> {
    let instruments = spec
        .instruments
        .as_ref()
        .ok_or_else(|| Error::domain("instrument sweep needs instruments"))?;
    let members = spec.family.members()?;
    let orders = path_ordering(&members)?;
    let mut warnings = Vec::new();
    let asserted = ordered_or_warn(&orders, &mut warnings);
    let b = spec.model.bias();
    let rows: Vec<UsageRow> = members
        .par_iter()
        .enumerate()
        .map(|(index, d)| {
            let usage = design_law(spec, d).and_then(|law| instrument_usage(&law, d, b, instruments));
            match usage {
                Ok((f, v)) => UsageRow {
                    index,
                    falsification_mass: f,
                    violence_prob: v,
                    error: None,
                },
                Err(e) => UsageRow {
                    index,
                    falsification_mass: f64::NAN,
                    violence_prob: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let prefix = rows.iter().take_while(|r| r.error.is_none()).count();
    if prefix < rows.len() {
        warnings.push(format!("design failed from member {prefix}; checks cover members 0..{prefix}"));
    }
    let mut check = Checker::new(&members);
    if asserted {
        let f: Vec<f64> = rows[..prefix].iter().map(|r| r.falsification_mass).collect();
        let v: Vec<f64> = rows[..prefix].iter().map(|r| r.violence_prob).collect();
        check.monotone("falsification_mass", &f, 1.0);
        check.monotone("violence_prob", &v, 1.0);
    }
    Ok(SweepReport {
        rows,
        asserted,
        violations: check.violations,
        warnings,
    })
}
