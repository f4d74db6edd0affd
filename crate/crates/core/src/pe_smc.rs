//! Posterior-exploration sequential Monte Carlo.
//!
//! Each iteration draws from the current t-mixture, then runs the four
//! exploration operators in order (importance weighting, componentwise
//! Metropolis, weighted EM, component addition) and finally picks the next
//! annealing exponent from the ESS of the resulting weighted set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::annealing::{self, AnnealState};
use crate::error::{Error, Result};
use crate::is_ops::{cw_metropolis, WeightedSamples};
use crate::objective::{BestSoFar, Bounds, LogEval, ObjectiveSpec};
use crate::rng;
use crate::tmix::{EmOptions, MahaTable, MixtureRecord, TMixture, DEFAULT_NU};

/// Additions between full redraw/refit passes inside the addition loop.
pub const REFIT_EVERY: usize = 10;
/// Initial component scale: box width divided by this, per axis.
pub const INIT_WIDTH_DIVISOR: f64 = 4.0;

/// Default sample size for a problem dimension.
pub fn default_samples(dim: usize) -> usize {
    match dim {
        0..=2 => 500,
        3..=5 => 2000,
        6..=10 => 5000,
        _ => 50_000,
    }
}

/// Tunables for a PE-SMC run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeSmcConfig {
    pub n_samples: usize,
    pub lambda1: f64,
    pub beta: f64,
    pub ness_threshold: f64,
    pub max_new_components_per_iter: usize,
    pub em_rounds_per_batch: usize,
    pub alpha_min: f64,
    pub m_max: usize,
    pub metropolis_sweeps: usize,
    /// Metropolis step as a fraction of the box width, per axis.
    pub metropolis_step_frac: f64,
    /// Fresh draws per added component; `None` means `max(N/10, 50)`.
    pub new_component_draws: Option<usize>,
    pub stall_iters: usize,
    pub stall_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub nu: f64,
    pub em_sigma_include_u: bool,
    pub lambda_cap_mult: f64,
    pub lambda_max: f64,
    /// Keep a mixture snapshot per iteration in the result.
    pub record_mixtures: bool,
}

impl Default for PeSmcConfig {
    fn default() -> Self {
        Self {
            n_samples: 500,
            lambda1: 1.0,
            beta: annealing::DEFAULT_BETA,
            ness_threshold: 0.3,
            max_new_components_per_iter: 30,
            em_rounds_per_batch: 3,
            alpha_min: 1e-3,
            m_max: 100,
            metropolis_sweeps: 1,
            metropolis_step_frac: 0.1,
            new_component_draws: None,
            stall_iters: 10,
            stall_tol: 1e-6,
            max_iters: 200,
            seed: 0,
            nu: DEFAULT_NU,
            em_sigma_include_u: false,
            lambda_cap_mult: annealing::DEFAULT_CAP_MULT,
            lambda_max: annealing::DEFAULT_LAMBDA_MAX,
            record_mixtures: false,
        }
    }
}

impl PeSmcConfig {
    /// Defaults with the sample size chosen for `dim`.
    pub fn for_dim(dim: usize) -> Self {
        Self { n_samples: default_samples(dim), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_samples == 0 {
            return bad("n_samples must be positive".into());
        }
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return bad(format!("lambda1 must be positive, got {}", self.lambda1));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0,1), got {}", self.beta));
        }
        if !(self.ness_threshold > 0.0 && self.ness_threshold < 1.0) {
            return bad(format!("ness_threshold must lie in (0,1), got {}", self.ness_threshold));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < 1.0) {
            return bad(format!("alpha_min must lie in (0,1), got {}", self.alpha_min));
        }
        if self.max_new_components_per_iter == 0
            || self.em_rounds_per_batch == 0
            || self.m_max == 0
            || self.metropolis_sweeps == 0
            || self.stall_iters == 0
            || self.max_iters == 0
        {
            return bad("all counts must be positive".into());
        }
        if self.new_component_draws == Some(0) {
            return bad("new_component_draws must be positive".into());
        }
        if !(self.metropolis_step_frac >= 0.0 && self.metropolis_step_frac.is_finite()) {
            return bad("metropolis_step_frac must be non-negative".into());
        }
        if !(self.stall_tol >= 0.0) {
            return bad("stall_tol must be non-negative".into());
        }
        if !(self.nu > 0.0) {
            return bad("nu must be positive".into());
        }
        if !(self.lambda_cap_mult > 1.0) {
            return bad("lambda_cap_mult must exceed 1".into());
        }
        if !(self.lambda_max > self.lambda1) {
            return bad("lambda_max must exceed lambda1".into());
        }
        Ok(())
    }

    fn new_draws(&self) -> usize {
        self.new_component_draws.unwrap_or((self.n_samples / 10).max(50))
    }

    fn em_options(&self) -> EmOptions {
        EmOptions { sigma_include_u: self.em_sigma_include_u }
    }
}

/// Stopping rule: no relative improvement above `tol` for `patience`
/// consecutive iterations.
#[derive(Debug, Clone)]
pub struct StallMonitor {
    patience: usize,
    tol: f64,
    reference: Option<f64>,
    stalled: usize,
}

impl StallMonitor {
    pub fn new(patience: usize, tol: f64) -> Self {
        Self { patience, tol, reference: None, stalled: 0 }
    }

    pub fn observe(&mut self, best: f64) {
        let improved = match self.reference {
            None => best.is_finite(),
            Some(r) => best > r + self.tol * r.abs(),
        };
        if improved {
            self.reference = Some(best);
            self.stalled = 0;
        } else {
            self.stalled += 1;
        }
    }

    pub fn stalled(&self) -> bool {
        self.stalled >= self.patience
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub lambda: f64,
    pub ness: f64,
    pub components: usize,
    pub best_f: f64,
    pub accept_rate: f64,
    /// Components added during this iteration.
    #[serde(default)]
    pub additions: usize,
    /// The addition budget or the component cap was reached.
    #[serde(default)]
    pub budget_exhausted: bool,
}

/// Outcome of a complete run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub best_f: f64,
    pub best_x: Vec<f64>,
    pub iterations: usize,
    pub evaluations: u64,
    pub trace: Vec<TraceRow>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mixtures: Vec<MixtureRecord>,
}

/// Best-so-far record plus the objective call counter for one run.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub best: BestSoFar,
    pub evaluations: u64,
}

impl RunContext {
    pub fn new(dim: usize) -> Self {
        Self { best: BestSoFar::empty(dim), evaluations: 0 }
    }

    fn absorb(&mut self, points: &[Vec<f64>], evals: &[LogEval]) -> Vec<f64> {
        let mut log_f = Vec::with_capacity(evals.len());
        for (x, e) in points.iter().zip(evals) {
            if e.value.is_some() {
                self.evaluations += 1;
            }
            self.best.offer_eval(e, x);
            log_f.push(e.log_f);
        }
        log_f
    }

    fn evaluate(&mut self, spec: &ObjectiveSpec, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let evals = spec.log_eval_batch(points)?;
        Ok(self.absorb(points, &evals))
    }
}

/// Mixture, weighted set and diagnostics produced by one exploration pass.
#[derive(Debug, Clone)]
pub struct PeOutcome {
    pub mixture: TMixture,
    pub samples: WeightedSamples,
    pub accept_rate: f64,
    pub additions: usize,
    pub budget_exhausted: bool,
}

/// Working state of the exploration pass: the weighted set plus its
/// component-distance table, kept consistent with the mixture.
struct Batch {
    samples: WeightedSamples,
    table: MahaTable,
}

impl Batch {
    fn fresh<R: Rng + ?Sized>(
        mix: &TMixture,
        n: usize,
        lambda: f64,
        spec: &ObjectiveSpec,
        ctx: &mut RunContext,
        rng: &mut R,
    ) -> Result<Self> {
        let points = mix.sample(n, rng);
        let log_f = ctx.evaluate(spec, &points)?;
        Self::weighted(mix, points, log_f, lambda)
    }

    fn weighted(mix: &TMixture, points: Vec<Vec<f64>>, log_f: Vec<f64>, lambda: f64) -> Result<Self> {
        let table = mix.maha_table(&points);
        let log_q = mix.log_pdf_table(&table);
        let samples = WeightedSamples::new(points, log_f, log_q, lambda)?;
        Ok(Self { samples, table })
    }

    fn reweight(&mut self, mix: &TMixture, lambda: f64) -> Result<()> {
        self.samples.log_q = mix.log_pdf_table(&self.table);
        self.samples.reweight(lambda)
    }

    /// EM rounds on the current weights, then pruning and reweighting.
    fn refit(&mut self, mix: TMixture, lambda: f64, cfg: &PeSmcConfig) -> Result<TMixture> {
        let mut mix = mix;
        for round in 0..cfg.em_rounds_per_batch {
            if round > 0 {
                self.table = mix.maha_table(&self.samples.points);
            }
            mix = mix.em_update_with_table(&self.samples.points, &self.samples.w, &self.table, cfg.em_options())?;
        }
        let pruned = mix.prune(cfg.alpha_min);
        self.table = pruned.maha_table(&self.samples.points);
        self.reweight(&pruned, lambda)?;
        Ok(pruned)
    }
}

fn clamp_into(bounds: &Bounds, x: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(bounds.lower().iter().zip(bounds.upper()))
        .map(|(v, (l, u))| v.clamp(*l, *u))
        .collect()
}

/// One exploration pass at exponent `lambda`.
pub fn pe_procedure<R: Rng + ?Sized>(
    mix: &TMixture,
    lambda: f64,
    spec: &ObjectiveSpec,
    cfg: &PeSmcConfig,
    ctx: &mut RunContext,
    rng: &mut R,
) -> Result<PeOutcome> {
    let bounds = spec.bounds();
    let n = cfg.n_samples;

    // (1) importance sampling
    let batch = Batch::fresh(mix, n, lambda, spec, ctx, rng)?;

    // (2) componentwise Metropolis
    let step: Vec<f64> = bounds.widths().iter().map(|w| cfg.metropolis_step_frac * w).collect();
    let moved = cw_metropolis(
        &batch.samples.points,
        &batch.samples.log_f,
        lambda,
        &step,
        cfg.metropolis_sweeps,
        spec,
        rng,
    )?;
    ctx.evaluations += moved.evaluations;
    ctx.best.merge(&moved.best);
    let accept_rate = moved.accept_rate;

    // (3) reweight the moved set against the current density, then EM
    let mut batch = Batch::weighted(mix, moved.points, moved.log_f, lambda)?;
    let mut mix = batch.refit(mix.clone(), lambda, cfg)?;

    // (4) add components at the heaviest sample until the NESS recovers
    let n_new = cfg.new_draws();
    let mut additions = 0;
    let mut since_refit = 0;
    while batch.samples.ness() < cfg.ness_threshold
        && additions < cfg.max_new_components_per_iter
        && mix.len() < cfg.m_max
    {
        let center = clamp_into(bounds, &batch.samples.points[batch.samples.argmax_weight()]);
        mix = mix.add_component(&center, bounds)?;
        mix.push_maha_column(&mut batch.table, &batch.samples.points);

        let fresh = mix.sample_component(mix.len() - 1, n_new, rng);
        let log_f = ctx.evaluate(spec, &fresh)?;
        mix.extend_maha_table(&mut batch.table, &fresh);
        batch.samples.points.extend(fresh);
        batch.samples.log_f.extend(log_f);
        batch.reweight(&mix, lambda)?;

        additions += 1;
        since_refit += 1;
        if since_refit == REFIT_EVERY {
            since_refit = 0;
            batch = Batch::fresh(&mix, n, lambda, spec, ctx, rng)?;
            mix = batch.refit(mix, lambda, cfg)?;
        }
    }
    let budget_exhausted = additions >= cfg.max_new_components_per_iter || mix.len() >= cfg.m_max;

    Ok(PeOutcome { mixture: mix, samples: batch.samples, accept_rate, additions, budget_exhausted })
}

/// Runs PE-SMC to termination.
pub fn run(spec: &ObjectiveSpec, cfg: &PeSmcConfig) -> Result<RunResult> {
    cfg.validate()?;
    let d = spec.dim();
    let mut rng = rng::stream(cfg.seed);
    let mut ctx = RunContext::new(d);
    let mut mix = TMixture::covering(spec.bounds(), INIT_WIDTH_DIVISOR, cfg.nu)?;

    let mut state = AnnealState::new(cfg.lambda1);
    state.beta = cfg.beta;
    state.cap_mult = cfg.lambda_cap_mult;
    state.lambda_max = cfg.lambda_max;

    let mut trace = Vec::new();
    let mut mixtures = Vec::new();
    let mut prev_lambda = 0.0;
    let mut stall = StallMonitor::new(cfg.stall_iters, cfg.stall_tol);

    for k in 1..=cfg.max_iters {
        state.k = k;
        let outcome = match pe_procedure(&mix, state.lambda, spec, cfg, &mut ctx, &mut rng) {
            Err(Error::DegenerateWeights) => {
                // one retry with half the last temperature step
                state.lambda = prev_lambda + 0.5 * (state.lambda - prev_lambda);
                pe_procedure(&mix, state.lambda, spec, cfg, &mut ctx, &mut rng)?
            }
            other => other?,
        };
        mix = outcome.mixture;
        if cfg.record_mixtures {
            mixtures.push(mix.record(k));
        }

        trace.push(TraceRow {
            k,
            lambda: state.lambda,
            ness: outcome.samples.ness(),
            components: mix.len(),
            best_f: ctx.best.value,
            accept_rate: outcome.accept_rate,
            additions: outcome.additions,
            budget_exhausted: outcome.budget_exhausted,
        });

        stall.observe(ctx.best.value);
        if stall.stalled() || state.lambda >= cfg.lambda_max {
            break;
        }

        state.ess = outcome.samples.ess();
        prev_lambda = state.lambda;
        state.lambda = annealing::next_lambda(&outcome.samples.log_f, &outcome.samples.log_q, &state)?;
    }

    Ok(RunResult {
        best_f: ctx.best.value,
        best_x: ctx.best.point.clone(),
        iterations: trace.len(),
        evaluations: ctx.evaluations,
        trace,
        seed: cfg.seed,
        mixtures,
    })
}
