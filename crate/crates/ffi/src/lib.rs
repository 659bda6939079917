//! C ABI for persuasion-core.
//!
//! Every call returns a [`PersuasionStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`persuasion_last_error`]. Handles are opaque and must be released with the
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use persuasion_core::concavify::{optimal_experiment, GridSpec};
use persuasion_core::epic::{solve_silence_posterior, Branch};
use persuasion_core::instruments::falsify_quadratic_unconstrained;
use persuasion_core::mc::{simulate_verification, SimConfig};
use persuasion_core::model::{indirect_value, verifying_mass, Belief, ModelParams, State};
use persuasion_core::{CostDistribution, Error};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PersuasionStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    InvalidDistribution = 3,
    InfeasibleBias = 4,
    NoRoot = 5,
    InfeasibleProtocol = 6,
    Parse = 7,
    Internal = 8,
}

/// Root selection for the silence posterior.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PersuasionBranch {
    Smallest = 0,
    Largest = 1,
    UpperHalf = 2,
}

/// Opaque cost distribution.
pub struct PersuasionDist(CostDistribution);

/// Opaque model parameters (prior, bias, friction).
pub struct PersuasionModel(ModelParams);

/// Binary (or degenerate) posterior law.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PersuasionLaw {
    pub lo: f64,
    pub hi: f64,
    /// Probability of `hi`.
    pub weight_hi: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PersuasionStatus {
    match e {
        Error::Domain(_) => PersuasionStatus::Domain,
        Error::InvalidDistribution(_) => PersuasionStatus::InvalidDistribution,
        Error::InfeasibleBias { .. } => PersuasionStatus::InfeasibleBias,
        Error::NoRoot { .. } => PersuasionStatus::NoRoot,
        Error::DegenerateSilence { .. } | Error::InfeasibleProtocol { .. } => PersuasionStatus::InfeasibleProtocol,
        Error::Config { .. } => PersuasionStatus::Parse,
        Error::Io(_) => PersuasionStatus::Internal,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (PersuasionStatus, String)>) -> PersuasionStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PersuasionStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PersuasionStatus::Internal
        }
    }
}

fn core<T>(r: persuasion_core::Result<T>) -> Result<T, (PersuasionStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PersuasionStatus, String) {
    (PersuasionStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (PersuasionStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn dist<'a>(p: *const PersuasionDist) -> Result<&'a CostDistribution, (PersuasionStatus, String)> {
    p.as_ref().map(|d| &d.0).ok_or_else(|| null("dist"))
}

fn belief(mu: f64) -> Result<Belief, (PersuasionStatus, String)> {
    core(Belief::new(mu))
}

fn boxed_dist(d: persuasion_core::Result<CostDistribution>, out_ptr: *mut *mut PersuasionDist) -> PersuasionStatus {
    guard(|| {
        let slot = unsafe { out(out_ptr, "out")? };
        *slot = Box::into_raw(Box::new(PersuasionDist(core(d)?)));
        Ok(())
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn persuasion_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn persuasion_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Uniform costs on `[lo, hi]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_dist_uniform(lo: f64, hi: f64, out: *mut *mut PersuasionDist) -> PersuasionStatus {
    boxed_dist(CostDistribution::uniform(lo, hi), out)
}

/// Uniform costs on `[0, scale]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_dist_scaled_uniform(scale: f64, out: *mut *mut PersuasionDist) -> PersuasionStatus {
    boxed_dist(CostDistribution::scaled_uniform(scale), out)
}

/// `hi * Beta(alpha, beta)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_dist_beta(
    alpha: f64,
    beta: f64,
    hi: f64,
    out: *mut *mut PersuasionDist,
) -> PersuasionStatus {
    boxed_dist(CostDistribution::beta_rescaled(alpha, beta, hi), out)
}

/// Any family from its JSON form, e.g. `{"family":"uniform","lo":0,"hi":1}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_dist_from_json(json: *const c_char, out_ptr: *mut *mut PersuasionDist) -> PersuasionStatus {
    guard(|| {
        let slot = out(out_ptr, "out")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (PersuasionStatus::Parse, e.to_string()))?;
        let d: CostDistribution =
            serde_json::from_str(text).map_err(|e| (PersuasionStatus::Parse, e.to_string()))?;
        *slot = Box::into_raw(Box::new(PersuasionDist(d)));
        Ok(())
    })
}

/// Releases a distribution. Null is ignored.
///
/// # Safety
/// `d` must come from a `persuasion_dist_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn persuasion_dist_free(d: *mut PersuasionDist) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// `F(x)` for `x >= 0`.
///
/// # Safety
/// `d` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_dist_cdf(d: *const PersuasionDist, x: f64, out_ptr: *mut f64) -> PersuasionStatus {
    guard(|| {
        let d = dist(d)?;
        *out(out_ptr, "out")? = core(d.cdf(x))?;
        Ok(())
    })
}

/// Model with prior `prior`, bias `b` and evidence friction `epsilon`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_model_new(
    prior: f64,
    b: f64,
    epsilon: f64,
    out_ptr: *mut *mut PersuasionModel,
) -> PersuasionStatus {
    guard(|| {
        let slot = out(out_ptr, "out")?;
        *slot = Box::into_raw(Box::new(PersuasionModel(core(ModelParams::new(prior, b, epsilon))?)));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `m` must come from [`persuasion_model_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn persuasion_model_free(m: *mut PersuasionModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Share of receivers who verify at belief `mu`.
///
/// # Safety
/// `d` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_verifying_mass(d: *const PersuasionDist, mu: f64, out_ptr: *mut f64) -> PersuasionStatus {
    guard(|| {
        let d = dist(d)?;
        *out(out_ptr, "out")? = verifying_mass(belief(mu)?, d);
        Ok(())
    })
}

/// Sender's expected payoff at belief `mu` with bias `b`.
///
/// # Safety
/// `d` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_indirect_value(
    d: *const PersuasionDist,
    mu: f64,
    b: f64,
    out_ptr: *mut f64,
) -> PersuasionStatus {
    guard(|| {
        let d = dist(d)?;
        *out(out_ptr, "out")? = indirect_value(belief(mu)?, d, b);
        Ok(())
    })
}

/// Silence posterior solving `(1 - lambda(mu)) mu = 2b` on the given branch.
///
/// # Safety
/// `d` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_silence_posterior(
    d: *const PersuasionDist,
    b: f64,
    branch: PersuasionBranch,
    out_ptr: *mut f64,
) -> PersuasionStatus {
    guard(|| {
        let d = dist(d)?;
        let branch = match branch {
            PersuasionBranch::Smallest => Branch::Smallest,
            PersuasionBranch::Largest => Branch::Largest,
            PersuasionBranch::UpperHalf => Branch::UpperHalf,
        };
        *out(out_ptr, "out")? = core(solve_silence_posterior(b, d, branch))?.mu_s;
        Ok(())
    })
}

/// Optimal experiment for the indirect value on a grid of `grid_points`.
/// A point mass comes back as `lo == hi == prior`, `weight_hi == 1`.
///
/// # Safety
/// `m` and `d` must be live handles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_optimal_experiment(
    m: *const PersuasionModel,
    d: *const PersuasionDist,
    grid_points: usize,
    out_ptr: *mut PersuasionLaw,
) -> PersuasionStatus {
    guard(|| {
        let params = m.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))?;
        let d = dist(d)?;
        let slot = out(out_ptr, "out")?;
        let b = params.bias();
        let grid = core(GridSpec::new(grid_points))?;
        let law = core(optimal_experiment(params, |x| indirect_value(Belief::clamped(x), d, b), grid))?;
        if law.len() > 2 {
            return Err((PersuasionStatus::Internal, "law has more than two atoms".into()));
        }
        *slot = PersuasionLaw {
            lo: law.lo(),
            hi: law.hi(),
            weight_hi: *law.weights().last().unwrap_or(&1.0),
        };
        Ok(())
    })
}

/// Unconstrained quadratic falsification of aggregate `a` towards `target`.
///
/// # Safety
/// `d_star` and `loss` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_falsify_quadratic(
    a: f64,
    target: f64,
    kappa: f64,
    d_star: *mut f64,
    loss: *mut f64,
) -> PersuasionStatus {
    guard(|| {
        let (ds, l) = (out(d_star, "d_star")?, out(loss, "loss")?);
        let f = core(falsify_quadratic_unconstrained(a, target, kappa))?;
        *ds = f.d_star;
        *l = f.loss;
        Ok(())
    })
}

/// Monte Carlo verifying mass at `(mu, state)`; `state` is 0 or 1.
///
/// # Safety
/// `d` must be a live handle; `lambda_hat` and `se` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn persuasion_simulate_verification(
    d: *const PersuasionDist,
    mu: f64,
    state: u32,
    n: usize,
    seed: u64,
    replications: usize,
    lambda_hat: *mut f64,
    se: *mut f64,
) -> PersuasionStatus {
    guard(|| {
        let d = dist(d)?;
        let (lh, s) = (out(lambda_hat, "lambda_hat")?, out(se, "se")?);
        let theta = match state {
            0 => State::Zero,
            1 => State::One,
            k => return Err((PersuasionStatus::Domain, format!("state must be 0 or 1, got {k}"))),
        };
        let cfg = core(SimConfig::new(n, seed, replications))?;
        let est = core(simulate_verification(belief(mu)?, theta, d, &cfg))?;
        *lh = est.lambda_hat;
        *s = est.se_lambda;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_codes() {
        assert_eq!(status_of(&Error::NoRoot { target: 0.1 }), PersuasionStatus::NoRoot);
        assert_eq!(
            status_of(&Error::InfeasibleProtocol { reason: "x".into() }),
            PersuasionStatus::InfeasibleProtocol
        );
    }

    #[test]
    fn panics_become_internal() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, PersuasionStatus::Internal);
        let msg = unsafe { CStr::from_ptr(persuasion_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }
}
