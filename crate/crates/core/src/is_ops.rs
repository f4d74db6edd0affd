//! Importance weighting, effective sample size, resampling and the
//! componentwise Metropolis move.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::objective::{BestSoFar, ObjectiveSpec};
use crate::rng;

/// Weighted point set with cached objective and proposal log-densities.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSamples {
    pub points: Vec<Vec<f64>>,
    pub log_f: Vec<f64>,
    pub log_q: Vec<f64>,
    /// Unnormalized log-weights `λ·log_f − log_q`.
    pub log_w: Vec<f64>,
    /// Normalized weights.
    pub w: Vec<f64>,
}

impl WeightedSamples {
    /// Builds the set and weights it for exponent `lambda`.
    pub fn new(points: Vec<Vec<f64>>, log_f: Vec<f64>, log_q: Vec<f64>, lambda: f64) -> Result<Self> {
        let n = points.len();
        if log_f.len() != n || log_q.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: log_f.len().min(log_q.len()) });
        }
        let mut s = Self { points, log_f, log_q, log_w: Vec::new(), w: Vec::new() };
        s.reweight(lambda)?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Recomputes weights from the cached logs.
    pub fn reweight(&mut self, lambda: f64) -> Result<()> {
        let (log_w, w) = log_and_normalized_weights(&self.log_f, &self.log_q, lambda)?;
        self.log_w = log_w;
        self.w = w;
        Ok(())
    }

    pub fn ess(&self) -> f64 {
        ess(&self.w)
    }

    pub fn ness(&self) -> f64 {
        ness(&self.w)
    }

    /// Index of the heaviest sample (first one on ties).
    pub fn argmax_weight(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.w.iter().enumerate() {
            if *w > self.w[best] {
                best = i;
            }
        }
        best
    }

    /// Self-normalized estimate of `E_π[g]`.
    pub fn expectation<G: Fn(&[f64]) -> f64>(&self, g: G) -> f64 {
        self.points.iter().zip(&self.w).map(|(x, w)| w * g(x)).sum()
    }
}

fn log_and_normalized_weights(log_f: &[f64], log_q: &[f64], lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if log_f.len() != log_q.len() {
        return Err(Error::DimensionMismatch { expected: log_f.len(), got: log_q.len() });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda must be positive and finite, got {lambda}")));
    }
    let log_w: Vec<f64> = log_f.iter().zip(log_q).map(|(f, q)| lambda * f - q).collect();
    let w = normalize_log_weights(&log_w)?;
    Ok((log_w, w))
}

/// Max-subtracted softmax of log-weights.
pub fn normalize_log_weights(log_w: &[f64]) -> Result<Vec<f64>> {
    if log_w.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::DegenerateWeights);
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights);
    }
    let mut w: Vec<f64> = log_w.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// Normalized weights for the target `f^λ` against the proposal `q`.
pub fn importance_weights(log_f: &[f64], log_q: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if log_f.is_empty() {
        return Err(Error::InvalidConfig("importance weights need at least one sample".into()));
    }
    log_and_normalized_weights(log_f, log_q, lambda).map(|(_, w)| w)
}

/// `1 / Σ w²`.
pub fn ess(w: &[f64]) -> f64 {
    1.0 / w.iter().map(|v| v * v).sum::<f64>()
}

/// ESS divided by the sample count.
pub fn ness(w: &[f64]) -> f64 {
    ess(w) / w.len() as f64
}

/// Indices of `n_out` independent categorical draws with probabilities `w`.
pub fn multinomial_indices<R: Rng + ?Sized>(w: &[f64], n_out: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n_out == 0 {
        return Ok(Vec::new());
    }
    let dist = WeightedIndex::new(w).map_err(|_| Error::DegenerateWeights)?;
    Ok((0..n_out).map(|_| dist.sample(rng)).collect())
}

/// Multinomial resampling of the point set. Each output carries weight `1/n_out`.
pub fn multinomial_resample<R: Rng + ?Sized>(
    samples: &WeightedSamples,
    n_out: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let idx = multinomial_indices(&samples.w, n_out, rng)?;
    Ok(idx.into_iter().map(|i| samples.points[i].clone()).collect())
}

/// Output of [`cw_metropolis`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetropolisOutcome {
    pub points: Vec<Vec<f64>>,
    pub log_f: Vec<f64>,
    pub accept_rate: f64,
    /// Number of calls made to the user objective.
    pub evaluations: u64,
    /// Best raw objective value among the proposals evaluated.
    pub best: BestSoFar,
}

/// Componentwise random-walk Metropolis targeting `f^λ`.
///
/// Each sweep visits the coordinates of every sample in order, proposing a
/// Gaussian step with standard deviation `step_sigma[j]` on coordinate `j`.
/// Samples are processed in parallel on per-sample sub-streams keyed from one
/// draw of `rng`.
pub fn cw_metropolis<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    log_f: &[f64],
    lambda: f64,
    step_sigma: &[f64],
    sweeps: usize,
    spec: &ObjectiveSpec,
    rng: &mut R,
) -> Result<MetropolisOutcome> {
    let d = spec.dim();
    if step_sigma.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: step_sigma.len() });
    }
    if points.len() != log_f.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), got: log_f.len() });
    }
    let key = rng::fork_key(rng);
    let per_sample: Vec<Result<(Vec<f64>, f64, u64, u64, BestSoFar)>> = points
        .par_iter()
        .zip(log_f.par_iter())
        .enumerate()
        .map(|(i, (x0, lf0))| {
            let mut r = rng::substream(key, i as u64);
            let mut x = x0.clone();
            let mut lf = *lf0;
            let mut accepted = 0u64;
            let mut evals = 0u64;
            let mut best = BestSoFar::empty(d);
            for _ in 0..sweeps {
                for j in 0..d {
                    let z: f64 = r.sample(StandardNormal);
                    let old = x[j];
                    x[j] = old + step_sigma[j] * z;
                    let e = spec.log_eval(&x)?;
                    if e.value.is_some() {
                        evals += 1;
                    }
                    best.offer_eval(&e, &x);
                    let delta = lambda * (e.log_f - lf);
                    let u: f64 = r.gen();
                    if delta >= 0.0 || u.ln() < delta {
                        lf = e.log_f;
                        accepted += 1;
                    } else {
                        x[j] = old;
                    }
                }
            }
            Ok((x, lf, accepted, evals, best))
        })
        .collect();

    let mut out_points = Vec::with_capacity(points.len());
    let mut out_log_f = Vec::with_capacity(points.len());
    let mut accepted = 0u64;
    let mut evaluations = 0u64;
    let mut best = BestSoFar::empty(d);
    for item in per_sample {
        let (x, lf, a, e, b) = item?;
        out_points.push(x);
        out_log_f.push(lf);
        accepted += a;
        evaluations += e;
        best.merge(&b);
    }
    let proposals = (points.len() * d * sweeps) as f64;
    Ok(MetropolisOutcome {
        points: out_points,
        log_f: out_log_f,
        accept_rate: if proposals > 0.0 { accepted as f64 / proposals } else { 0.0 },
        evaluations,
        best,
    })
}
