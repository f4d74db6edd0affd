//! Global optimization by posterior-exploration sequential Monte Carlo.
//!
//! The crate provides:
//!
//! * [`objective`]: box-bounded maximization problems evaluated in log space;
//! * [`benchmarks`]: the TF1 to TF17 test functions with their documented optima;
//! * [`tmix`]: the Student's-t mixture importance density (sampling, EM, growth, pruning);
//! * [`is_ops`]: importance weights, ESS, resampling and the componentwise Metropolis move;
//! * [`annealing`]: the ESS-driven exponent schedule and geometric cooling;
//! * [`pe_smc`]: the optimizer itself;
//! * [`smc_sa`]: the SMC simulated-annealing baseline;
//! * [`harness`] and [`levelset`]: benchmark plans, CSV output and level-set quadrature.

pub mod annealing;
pub mod benchmarks;
pub mod error;
pub mod harness;
pub mod is_ops;
pub mod levelset;
mod linalg;
pub mod objective;
pub mod pe_smc;
pub mod rng;
pub mod smc_sa;
pub mod tmix;

pub use error::{Error, Result};
pub use linalg::log_sum_exp;
pub use objective::{Bounds, ObjectiveSpec};
pub use pe_smc::{PeSmcConfig, RunResult, TraceRow};
pub use smc_sa::SmcSaConfig;
pub use tmix::{TComponent, TMixture};
