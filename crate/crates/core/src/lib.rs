//! Bayesian persuasion when receivers can pay to verify the state.
//!
//! The sender designs an experiment, receivers with random verification costs
//! decide whether to learn the state, and the sender may distort the realized
//! aggregate ex post. See the README for a tour.

// `!(x > 0.0)` is used on purpose so NaN is rejected with the bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod concavify;
pub mod config;
pub mod cost_dist;
pub mod epic;
pub mod error;
pub mod instruments;
pub mod mc;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod statics;

pub use concavify::{
    benchmark_experiment, blackwell_spread, concave_envelope, is_mean_preserving_contraction, optimal_experiment,
    GridSpec, PosteriorLaw,
};
pub use config::Config;
pub use cost_dist::{fosd_cheaper, CostDistribution, Family, FosdOrder};
pub use epic::{
    epic_check, phi, protocol_a_solve, protocol_b_construct, solve_silence_posterior, uniform_cubic_root, Branch,
    EpicReport, Protocol, ProtocolAParams, ProtocolBParams,
};
pub use error::{Error, Result};
pub use instruments::{
    continuation_value, falsify_constrained, falsify_quadratic_unconstrained, outcome_at, residual_shortfall, Domain,
    FalsificationCost, FalsificationSpec, ViolenceSpec,
};
pub use mc::{simulate_sender_value, simulate_verification, SimConfig};
pub use model::{aggregate_action, indirect_value, verify_cutoff, verifying_mass, Belief, ModelParams, State};
pub use statics::{sweep_design, sweep_instrument_usage, sweep_silence_posterior, Design, FamilyPath, SweepSpec};
