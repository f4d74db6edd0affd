//! SMC simulated annealing baseline: Boltzmann targets `exp(f/T_k)` with a
//! geometric cooling schedule, multinomial resampling and one full-vector
//! Gaussian Metropolis step per iteration.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealing::boltzmann_schedule;
use crate::error::{Error, Result};
use crate::is_ops::{multinomial_indices, ness, normalize_log_weights};
use crate::objective::{BestSoFar, ObjectiveSpec};
use crate::pe_smc::{default_samples, RunResult, StallMonitor, TraceRow};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcSaConfig {
    pub n_samples: usize,
    pub t1: f64,
    /// Cooling factor; 1 keeps the temperature constant.
    pub gamma: f64,
    /// Proposal standard deviation as a fraction of the box width, per axis.
    pub proposal_frac: f64,
    pub stall_iters: usize,
    pub stall_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SmcSaConfig {
    fn default() -> Self {
        Self {
            n_samples: 500,
            t1: 1.0,
            gamma: 0.95,
            proposal_frac: 0.05,
            stall_iters: 10,
            stall_tol: 1e-6,
            max_iters: 200,
            seed: 0,
        }
    }
}

impl SmcSaConfig {
    pub fn for_dim(dim: usize) -> Self {
        Self { n_samples: default_samples(dim), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.stall_iters == 0 || self.max_iters == 0 {
            return Err(Error::InvalidConfig("all counts must be positive".into()));
        }
        if !(self.t1 > 0.0 && self.t1.is_finite()) {
            return Err(Error::InvalidConfig(format!("t1 must be positive, got {}", self.t1)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0,1], got {}", self.gamma)));
        }
        if !(self.proposal_frac >= 0.0 && self.proposal_frac.is_finite()) {
            return Err(Error::InvalidConfig("proposal_frac must be non-negative".into()));
        }
        if !(self.stall_tol >= 0.0) {
            return Err(Error::InvalidConfig("stall_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Raw objective value, or `-inf` outside the box so such moves are never accepted.
fn boltzmann_value(spec: &ObjectiveSpec, x: &[f64]) -> Result<(f64, bool)> {
    let e = spec.log_eval(x)?;
    Ok(match e.value {
        Some(v) => (v, true),
        None => (f64::NEG_INFINITY, false),
    })
}

/// Final particle set of a baseline run (used by distributional checks).
#[derive(Debug, Clone)]
pub struct SmcSaParticles {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

pub fn run_smc_sa(spec: &ObjectiveSpec, cfg: &SmcSaConfig) -> Result<RunResult> {
    run_smc_sa_with_particles(spec, cfg).map(|(r, _)| r)
}

pub fn run_smc_sa_with_particles(spec: &ObjectiveSpec, cfg: &SmcSaConfig) -> Result<(RunResult, SmcSaParticles)> {
    cfg.validate()?;
    let d = spec.dim();
    let n = cfg.n_samples;
    let bounds = spec.bounds();
    let mut rng = rng::stream(cfg.seed);
    let mut best = BestSoFar::empty(d);
    let mut evaluations = 0u64;

    let mut points: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            bounds
                .lower()
                .iter()
                .zip(bounds.upper())
                .map(|(l, u)| rng.gen_range(*l..=*u))
                .collect()
        })
        .collect();
    let mut values: Vec<f64> = points
        .par_iter()
        .map(|x| boltzmann_value(spec, x).map(|(v, _)| v))
        .collect::<Result<_>>()?;
    evaluations += n as u64;
    for (x, v) in points.iter().zip(&values) {
        best.offer(*v, x);
    }

    let sigma: Vec<f64> = bounds.widths().iter().map(|w| cfg.proposal_frac * w).collect();
    let mut trace = Vec::new();
    let mut stall = StallMonitor::new(cfg.stall_iters, cfg.stall_tol);

    for k in 1..=cfg.max_iters {
        let t_k = boltzmann_schedule(cfg.t1, cfg.gamma, k);
        let inv_delta = if k == 1 {
            1.0 / t_k
        } else {
            1.0 / t_k - 1.0 / boltzmann_schedule(cfg.t1, cfg.gamma, k - 1)
        };
        let log_w: Vec<f64> = values
            .iter()
            .map(|v| if inv_delta == 0.0 { 0.0 } else { v * inv_delta })
            .collect();
        let w = normalize_log_weights(&log_w)?;
        let iter_ness = ness(&w);

        let idx = multinomial_indices(&w, n, &mut rng)?;
        let resampled: Vec<(Vec<f64>, f64)> = idx.iter().map(|&i| (points[i].clone(), values[i])).collect();

        let key = rng::fork_key(&mut rng);
        let moved: Vec<Result<(Vec<f64>, f64, bool, bool)>> = resampled
            .into_par_iter()
            .enumerate()
            .map(|(i, (x, fx))| {
                let mut r = rng::substream(key, i as u64);
                let y: Vec<f64> = x
                    .iter()
                    .zip(&sigma)
                    .map(|(v, s)| v + s * r.sample::<f64, _>(StandardNormal))
                    .collect();
                let (fy, called) = boltzmann_value(spec, &y)?;
                let u: f64 = r.gen();
                let log_ratio = (fy - fx) / t_k;
                if fy >= fx || u.ln() < log_ratio {
                    Ok((y, fy, true, called))
                } else {
                    Ok((x, fx, false, called))
                }
            })
            .collect();

        let mut accepted = 0usize;
        points.clear();
        values.clear();
        for item in moved {
            let (x, v, acc, called) = item?;
            if called {
                evaluations += 1;
                best.offer(v, &x);
            }
            if acc {
                accepted += 1;
            }
            points.push(x);
            values.push(v);
        }

        trace.push(TraceRow {
            k,
            lambda: 1.0 / t_k,
            ness: iter_ness,
            components: 0,
            best_f: best.value,
            accept_rate: accepted as f64 / n as f64,
            additions: 0,
            budget_exhausted: false,
        });

        stall.observe(best.value);
        if stall.stalled() {
            break;
        }
    }

    let result = RunResult {
        best_f: best.value,
        best_x: best.point.clone(),
        iterations: trace.len(),
        evaluations,
        trace,
        seed: cfg.seed,
        mixtures: Vec::new(),
    };
    Ok((result, SmcSaParticles { points, values }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::objective::Bounds;
    use rand::Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn constant_objective_keeps_uniform_weights() {
        let spec = ObjectiveSpec::new("flat", Bounds::cube(-1.0, 1.0, 2).unwrap(), |_| 3.25);
        let cfg = SmcSaConfig { n_samples: 200, seed: 5, ..SmcSaConfig::default() };
        let r = run_smc_sa(&spec, &cfg).unwrap();
        assert_eq!(r.best_f, 3.25);
        assert!(r.trace.iter().all(|t| (t.ness - 1.0).abs() < 1e-12));
        assert!(r.trace.iter().all(|t| t.components == 0));
        // stall rule: reference set on the first iteration, then ten without progress
        assert_eq!(r.iterations, 11);
    }

    #[test]
    fn trace_contract() {
        let spec = benchmarks::make_function("TF9", 2).unwrap();
        let cfg = SmcSaConfig { seed: 3, ..SmcSaConfig::for_dim(2) };
        let r = run_smc_sa(&spec, &cfg).unwrap();
        assert_eq!(r.trace.len(), r.iterations);
        for (i, t) in r.trace.iter().enumerate() {
            assert_eq!(t.k, i + 1);
            assert!((t.lambda - 1.0 / boltzmann_schedule(1.0, 0.95, i + 1)).abs() < 1e-12);
            assert!(t.ness > 0.0 && t.ness <= 1.0 + 1e-12);
        }
        assert!(r.trace.windows(2).all(|p| p[1].best_f >= p[0].best_f));
        assert_eq!(r.best_f, r.trace.last().unwrap().best_f);
        assert_eq!(spec.eval(&r.best_x), r.best_f);
    }

    #[test]
    fn runs_are_seed_deterministic() {
        let spec = benchmarks::make_function("TF11", 2).unwrap();
        let cfg = SmcSaConfig { seed: 17, ..SmcSaConfig::for_dim(2) };
        let a = run_smc_sa(&spec, &cfg).unwrap();
        let b = run_smc_sa(&spec, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.best_x, b.best_x);
    }

    #[test]
    fn gamma_must_be_in_range() {
        let spec = ObjectiveSpec::new("flat", Bounds::cube(0.0, 1.0, 1).unwrap(), |_| 1.0);
        for gamma in [0.0, 1.5, f64::NAN] {
            let cfg = SmcSaConfig { gamma, ..SmcSaConfig::default() };
            assert!(run_smc_sa(&spec, &cfg).is_err());
        }
    }

    #[test]
    fn constant_temperature_leaves_boltzmann_density_invariant() {
        // exp(f/T) with f = -x²/2, T = 1 is the standard normal
        let spec = ObjectiveSpec::new("gauss", Bounds::cube(-10.0, 10.0, 1).unwrap(), |x| -0.5 * x[0] * x[0]);
        let n = 20_000;
        let cfg = SmcSaConfig {
            n_samples: n,
            t1: 1.0,
            gamma: 1.0,
            stall_iters: 1_000,
            max_iters: 60,
            seed: 23,
            ..SmcSaConfig::default()
        };
        let (_, particles) = run_smc_sa_with_particles(&spec, &cfg).unwrap();
        let mut ours: Vec<f64> = particles.points.iter().map(|p| p[0]).collect();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut r = rng::stream(99);
        let mut reference: Vec<f64> = (0..n).map(|_| normal.inverse_cdf(r.gen::<f64>())).collect();
        ours.sort_by(f64::total_cmp);
        reference.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < n && j < n {
            let x = ours[i].min(reference[j]);
            while i < n && ours[i] <= x {
                i += 1;
            }
            while j < n && reference[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 - j as f64).abs() / n as f64);
        }
        let critical = 1.628 * (2.0 / n as f64).sqrt();
        assert!(d < critical, "KS {d} >= {critical}");
    }
}
