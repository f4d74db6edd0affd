//! Temperature schedules: the ESS-driven exponent update used by PE-SMC and
//! the geometric cooling used by the SMC-SA baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::is_ops::{ess, importance_weights};

pub const DEFAULT_BETA: f64 = 0.8;
pub const DEFAULT_CAP_MULT: f64 = 10.0;
pub const DEFAULT_LAMBDA_MAX: f64 = 1e12;
pub const DEFAULT_BISECT_REL_TOL: f64 = 1e-3;
pub const MAX_BISECTIONS: usize = 60;

/// Schedule state carried between iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealState {
    pub k: usize,
    pub lambda: f64,
    /// ESS of the current weighted set at `lambda`.
    pub ess: f64,
    pub beta: f64,
    pub cap_mult: f64,
    pub lambda_max: f64,
    pub bisect_rel_tol: f64,
}

impl AnnealState {
    pub fn new(lambda: f64) -> Self {
        Self {
            k: 1,
            lambda,
            ess: f64::NAN,
            beta: DEFAULT_BETA,
            cap_mult: DEFAULT_CAP_MULT,
            lambda_max: DEFAULT_LAMBDA_MAX,
            bisect_rel_tol: DEFAULT_BISECT_REL_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidConfig(format!("beta must lie in (0,1), got {}", self.beta)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.cap_mult > 1.0) {
            return Err(Error::InvalidConfig(format!("cap multiplier must exceed 1, got {}", self.cap_mult)));
        }
        if !(self.lambda_max > self.lambda) {
            return Err(Error::InvalidConfig(format!(
                "lambda {} has reached lambda_max {}",
                self.lambda, self.lambda_max
            )));
        }
        if !(self.bisect_rel_tol > 0.0) {
            return Err(Error::InvalidConfig("bisection tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// ESS of the sample set reweighted for exponent `lambda`.
pub fn ess_at_lambda(log_f: &[f64], log_q: &[f64], lambda: f64) -> Result<f64> {
    Ok(ess(&importance_weights(log_f, log_q, lambda)?))
}

/// How [`next_lambda_detail`] arrived at its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaStep {
    /// Root of `h(λ) = β·ESS_k` found by bracketing and bisection.
    Solved,
    /// The ESS target was not reached below the cap.
    Capped,
    /// `h` increased along the bracket; fell back to the cap.
    NonMonotone,
}

/// Next exponent: the `λ` in `(λ_k, cap·λ_k]` where the ESS drops to `β·ESS_k`.
pub fn next_lambda(log_f: &[f64], log_q: &[f64], state: &AnnealState) -> Result<f64> {
    next_lambda_detail(log_f, log_q, state).map(|(l, _)| l)
}

pub fn next_lambda_detail(log_f: &[f64], log_q: &[f64], state: &AnnealState) -> Result<(f64, LambdaStep)> {
    state.validate()?;
    let lo0 = state.lambda;
    let cap = (state.cap_mult * lo0).min(state.lambda_max);
    let target = state.beta * state.ess;
    let h = |l: f64| ess_at_lambda(log_f, log_q, l);

    // Doubling bracket: λ_k·2, λ_k·4, ... up to the cap.
    let mut lo = lo0;
    let mut h_lo = state.ess;
    let mut hi;
    loop {
        hi = (2.0 * lo).min(cap);
        let h_hi = h(hi)?;
        // small slack for rounding in flat regions
        if h_hi > h_lo * (1.0 + 1e-9) {
            return Ok((cap, LambdaStep::NonMonotone));
        }
        if h_hi <= target {
            break;
        }
        if hi >= cap {
            return Ok((cap, LambdaStep::Capped));
        }
        lo = hi;
        h_lo = h_hi;
    }

    for _ in 0..MAX_BISECTIONS {
        if (hi - lo) <= state.bisect_rel_tol * lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if h(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let out = 0.5 * (lo + hi);
    Ok((out.max(f64::from_bits(lo0.to_bits() + 1)), LambdaStep::Solved))
}

/// Geometric cooling `T_k = T_1·γ^(k−1)`.
pub fn boltzmann_schedule(t1: f64, gamma: f64, k: usize) -> f64 {
    assert!(k >= 1, "schedule index starts at 1");
    t1 * gamma.powi((k - 1) as i32)
}
