//! Student's-t mixture importance density.
//!
//! Components are immutable; the Cholesky factor and log normalizing constant
//! are computed once at construction. Operations that change a mixture
//! return a new value.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::{ChiSquared, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::is_ops::WeightedSamples;
use crate::linalg::{self, log_sum_exp};
use crate::objective::Bounds;

/// Degrees of freedom used by every component unless overridden.
pub const DEFAULT_NU: f64 = 5.0;
/// Mass given to a freshly added component.
pub const NEW_COMPONENT_MASS: f64 = 0.1;
/// A new component's per-axis standard scale is the box width divided by this.
pub const NEW_COMPONENT_WIDTH_DIVISOR: f64 = 20.0;
/// Responsibility mass below which a component is left untouched by EM.
pub const STARVATION_MASS: f64 = 1e-12;

const JITTER_REL: f64 = 1e-9;
const JITTER_MAX_TRIES: usize = 40;

/// `(y - μ)ᵀ Σ⁻¹ (y - μ)` via the Cholesky factor of `Σ` (row-major).
pub fn mahalanobis_sq(mu: &[f64], sigma: &[f64], y: &[f64]) -> Result<f64> {
    let d = mu.len();
    if y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: y.len() });
    }
    if sigma.len() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, got: sigma.len() });
    }
    let l = linalg::cholesky(sigma, d)?;
    let mut r: Vec<f64> = y.iter().zip(mu).map(|(a, b)| a - b).collect();
    Ok(linalg::forward_solve_norm_sq(&l, d, &mut r))
}

/// One multivariate Student's-t component with its mixture mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TComponent {
    weight: f64,
    mean: Vec<f64>,
    scale: Vec<f64>,
    nu: f64,
    chol: Vec<f64>,
    log_norm: f64,
}

impl TComponent {
    /// `scale` is the row-major `d×d` scale matrix; it must be symmetric positive definite.
    pub fn new(weight: f64, mean: Vec<f64>, scale: Vec<f64>, nu: f64) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidConfig("component dimension must be positive".into()));
        }
        if scale.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: scale.len() });
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidConfig(format!("component mass {weight} must be >= 0")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidConfig(format!("degrees of freedom {nu} must be > 0")));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("component mean must be finite".into()));
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (scale[i * d + j], scale[j * d + i]);
                if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
                    return Err(Error::InvalidConfig("scale matrix must be symmetric".into()));
                }
            }
        }
        let chol = linalg::cholesky(&scale, d)?;
        let df = d as f64;
        let log_norm = ln_gamma(0.5 * (nu + df))
            - ln_gamma(0.5 * nu)
            - 0.5 * df * (std::f64::consts::PI * nu).ln()
            - 0.5 * linalg::log_det_from_chol(&chol, d);
        Ok(Self { weight, mean, scale, nu, chol, log_norm })
    }

    /// Diagonal scale matrix.
    pub fn diagonal(weight: f64, mean: Vec<f64>, variances: &[f64], nu: f64) -> Result<Self> {
        let d = mean.len();
        let mut scale = vec![0.0; d * d];
        for (i, v) in variances.iter().enumerate() {
            scale[i * d + i] = *v;
        }
        Self::new(weight, mean, scale, nu)
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major scale matrix.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn with_weight(&self, weight: f64) -> Self {
        Self { weight, ..self.clone() }
    }

    pub fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        let mut r: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        linalg::forward_solve_norm_sq(&self.chol, self.dim(), &mut r)
    }

    /// Log density from a precomputed Mahalanobis distance.
    #[inline]
    pub fn log_density_from_maha(&self, maha: f64) -> f64 {
        self.log_norm - 0.5 * (self.nu + self.dim() as f64) * (maha / self.nu).ln_1p()
    }

    /// Log density of this component alone (mass not included).
    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.log_density_from_maha(self.mahalanobis_sq(x))
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let gamma: f64 = ChiSquared::new(self.nu).expect("nu > 0").sample(rng);
        let s = (self.nu / gamma).sqrt();
        (0..d)
            .map(|i| {
                let lz: f64 = (0..=i).map(|k| self.chol[i * d + k] * z[k]).sum();
                self.mean[i] + lz * s
            })
            .collect()
    }
}

/// Finite mixture of Student's-t components sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TMixture {
    components: Vec<TComponent>,
}

/// Options for the weighted EM refit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmOptions {
    /// Divide the scale update by `Σ ω ε u` instead of `Σ ω ε`.
    pub sigma_include_u: bool,
}

/// Mahalanobis distances of a point set to every component, stored per component.
///
/// Lets the density, responsibilities and EM statistics be recomputed
/// without redoing the triangular solves.
#[derive(Debug, Clone, PartialEq)]
pub struct MahaTable {
    cols: Vec<Vec<f64>>,
}

impl MahaTable {
    pub fn n_points(&self) -> usize {
        self.cols.first().map_or(0, Vec::len)
    }

    pub fn n_components(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, m: usize) -> &[f64] {
        &self.cols[m]
    }
}

impl TMixture {
    /// Builds a mixture; masses must be non-negative and sum to 1 within 1e-9.
    pub fn new(components: Vec<TComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidConfig("mixture needs at least one component".into()))?;
        let d = first.dim();
        if let Some(c) = components.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: c.dim() });
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("component masses sum to {total}, not 1")));
        }
        Ok(Self::renormalized(components))
    }

    fn renormalized(mut components: Vec<TComponent>) -> Self {
        let total: f64 = components.iter().map(|c| c.weight).sum();
        for c in &mut components {
            c.weight /= total;
        }
        Self { components }
    }

    /// Single component covering a box: centered, with per-axis scale `width / divisor`.
    pub fn covering(bounds: &Bounds, width_divisor: f64, nu: f64) -> Result<Self> {
        let var: Vec<f64> = bounds
            .widths()
            .iter()
            .map(|w| (w / width_divisor).powi(2))
            .collect();
        Self::new(vec![TComponent::diagonal(1.0, bounds.center(), &var, nu)?])
    }

    pub fn components(&self) -> &[TComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + c.log_density(x))
            .collect();
        log_sum_exp(&terms)
    }

    /// Draws `n` points. The stream is consumed sequentially, so the output is
    /// a deterministic function of the RNG state.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let picker = WeightedIndex::new(self.weights()).expect("mixture masses are valid");
        (0..n)
            .map(|_| self.components[picker.sample(rng)].draw(rng))
            .collect()
    }

    /// Draws `n` points from component `m` only.
    pub fn sample_component<R: Rng + ?Sized>(&self, m: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.components[m].draw(rng)).collect()
    }

    pub fn maha_table(&self, points: &[Vec<f64>]) -> MahaTable {
        let cols = self
            .components
            .iter()
            .map(|c| points.par_iter().map(|x| c.mahalanobis_sq(x)).collect())
            .collect();
        MahaTable { cols }
    }

    /// Appends distances for new points to every column.
    pub fn extend_maha_table(&self, table: &mut MahaTable, points: &[Vec<f64>]) {
        debug_assert_eq!(table.cols.len(), self.len());
        for (c, col) in self.components.iter().zip(table.cols.iter_mut()) {
            let extra: Vec<f64> = points.par_iter().map(|x| c.mahalanobis_sq(x)).collect();
            col.extend(extra);
        }
    }

    /// Adds a column for the last component of `self` (after `add_component`).
    pub fn push_maha_column(&self, table: &mut MahaTable, points: &[Vec<f64>]) {
        let c = self.components.last().expect("non-empty");
        table.cols.push(points.par_iter().map(|x| c.mahalanobis_sq(x)).collect());
        debug_assert_eq!(table.cols.len(), self.len());
    }

    /// Mixture log density at every point of the table.
    pub fn log_pdf_table(&self, table: &MahaTable) -> Vec<f64> {
        let log_alpha: Vec<f64> = self.components.iter().map(|c| c.weight.ln()).collect();
        (0..table.n_points())
            .into_par_iter()
            .map(|i| {
                let terms: Vec<f64> = self
                    .components
                    .iter()
                    .zip(&log_alpha)
                    .zip(&table.cols)
                    .map(|((c, la), col)| la + c.log_density_from_maha(col[i]))
                    .collect();
                log_sum_exp(&terms)
            })
            .collect()
    }

    /// Weighted EM refit against a normalized sample set.
    pub fn em_update(&self, samples: &WeightedSamples, opts: EmOptions) -> Result<TMixture> {
        let table = self.maha_table(&samples.points);
        self.em_update_with_table(&samples.points, &samples.w, &table, opts)
    }

    /// One EM step given precomputed Mahalanobis distances.
    ///
    /// Masses, means and scales follow the weighted t-mixture updates; the
    /// new mean is used when forming the scatter matrices. A component whose
    /// responsibility mass falls below [`STARVATION_MASS`] keeps its location
    /// and scale.
    pub fn em_update_with_table(
        &self,
        points: &[Vec<f64>],
        w: &[f64],
        table: &MahaTable,
        opts: EmOptions,
    ) -> Result<TMixture> {
        let n = points.len();
        if w.len() != n || table.n_points() != n || table.n_components() != self.len() {
            return Err(Error::DimensionMismatch { expected: n, got: w.len() });
        }
        let d = self.dim();
        let df = d as f64;
        let log_q = self.log_pdf_table(table);
        let updated: Vec<Result<TComponent>> = self
            .components
            .par_iter()
            .zip(table.cols.par_iter())
            .map(|(c, col)| {
                let la = c.weight.ln();
                // ω ε and ω ε u per point
                let mut we = Vec::with_capacity(n);
                let mut weu = Vec::with_capacity(n);
                for i in 0..n {
                    let eps = if log_q[i] == f64::NEG_INFINITY {
                        0.0
                    } else {
                        (la + c.log_density_from_maha(col[i]) - log_q[i]).exp()
                    };
                    let u = (c.nu + df) / (c.nu + col[i]);
                    we.push(w[i] * eps);
                    weu.push(w[i] * eps * u);
                }
                let mass: f64 = we.iter().sum();
                if !(mass >= STARVATION_MASS) {
                    return Ok(c.with_weight(mass.max(0.0)));
                }
                let mass_u: f64 = weu.iter().sum();
                let mut mean = vec![0.0; d];
                for (x, wu) in points.iter().zip(&weu) {
                    for (m, xv) in mean.iter_mut().zip(x) {
                        *m += wu * xv;
                    }
                }
                for m in &mut mean {
                    *m /= mass_u;
                }
                let mut scatter = vec![0.0; d * d];
                let mut r = vec![0.0; d];
                for (x, wu) in points.iter().zip(&weu) {
                    if *wu == 0.0 {
                        continue;
                    }
                    for (rj, (xv, m)) in r.iter_mut().zip(x.iter().zip(&mean)) {
                        *rj = xv - m;
                    }
                    for a in 0..d {
                        let ra = wu * r[a];
                        for b in 0..=a {
                            scatter[a * d + b] += ra * r[b];
                        }
                    }
                }
                let denom = if opts.sigma_include_u { mass_u } else { mass };
                for a in 0..d {
                    for b in 0..=a {
                        let v = scatter[a * d + b] / denom;
                        scatter[a * d + b] = v;
                        scatter[b * d + a] = v;
                    }
                }
                linalg::symmetrize(&mut scatter, d);
                let scale = regularize(scatter, d, c.scale())?;
                TComponent::new(mass, mean, scale, c.nu)
            })
            .collect();
        let components = updated.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self::renormalized(components))
    }

    /// Adds a component at `center` with mass 0.1 and per-axis scale of 1/20 of
    /// the box width; existing masses are multiplied by 0.9.
    pub fn add_component(&self, center: &[f64], bounds: &Bounds) -> Result<TMixture> {
        if center.len() != self.dim() || bounds.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: center.len() });
        }
        let var: Vec<f64> = bounds
            .widths()
            .iter()
            .map(|w| (w / NEW_COMPONENT_WIDTH_DIVISOR).powi(2))
            .collect();
        let nu = self.components[0].nu;
        let mut components: Vec<TComponent> = self
            .components
            .iter()
            .map(|c| c.with_weight(c.weight * (1.0 - NEW_COMPONENT_MASS)))
            .collect();
        components.push(TComponent::diagonal(NEW_COMPONENT_MASS, center.to_vec(), &var, nu)?);
        Ok(Self::renormalized(components))
    }

    /// Drops components lighter than `alpha_min` and rescales the survivors.
    /// If every component is below the threshold the heaviest one is kept.
    pub fn prune(&self, alpha_min: f64) -> TMixture {
        self.prune_indexed(alpha_min).0
    }

    /// As [`prune`](Self::prune), also returning the surviving component indices.
    pub fn prune_indexed(&self, alpha_min: f64) -> (TMixture, Vec<usize>) {
        let mut keep: Vec<usize> = (0..self.len())
            .filter(|&m| self.components[m].weight >= alpha_min)
            .collect();
        if keep.is_empty() {
            let heaviest = (0..self.len())
                .max_by(|&a, &b| self.components[a].weight.total_cmp(&self.components[b].weight))
                .expect("non-empty");
            keep.push(heaviest);
        }
        let components: Vec<TComponent> = keep.iter().map(|&m| self.components[m].clone()).collect();
        let total: f64 = components.iter().map(|c| c.weight).sum();
        let components = if total > 0.0 {
            components
        } else {
            components.into_iter().map(|c| c.with_weight(1.0)).collect()
        };
        (Self::renormalized(components), keep)
    }

    /// Trace record for inspection.
    pub fn record(&self, iteration: usize) -> MixtureRecord {
        MixtureRecord {
            iteration,
            components: self
                .components
                .iter()
                .map(|c| ComponentRecord {
                    alpha: c.weight,
                    mu: c.mean.clone(),
                    sigma: c.scale.clone(),
                    nu: c.nu,
                })
                .collect(),
        }
    }

    pub fn from_record(record: &MixtureRecord) -> Result<Self> {
        let comps = record
            .components
            .iter()
            .map(|c| TComponent::new(c.alpha, c.mu.clone(), c.sigma.clone(), c.nu))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }
}

impl MahaTable {
    /// Keeps only the listed component columns.
    pub fn retain_columns(&mut self, keep: &[usize]) {
        let old = std::mem::take(&mut self.cols);
        let mut old: Vec<Option<Vec<f64>>> = old.into_iter().map(Some).collect();
        self.cols = keep.iter().map(|&m| old[m].take().expect("unique index")).collect();
    }
}

/// Adds `jitter·I` with `jitter = 1e-9·trace/d`, growing ×10 until the factorization succeeds.
fn regularize(mut sigma: Vec<f64>, d: usize, previous: &[f64]) -> Result<Vec<f64>> {
    let mut base = JITTER_REL * linalg::trace(&sigma, d) / d as f64;
    if !(base > 0.0 && base.is_finite()) {
        base = JITTER_REL * linalg::trace(previous, d) / d as f64;
    }
    let mut jitter = base;
    let mut last_err = None;
    for _ in 0..JITTER_MAX_TRIES {
        let mut trial = sigma.clone();
        for i in 0..d {
            trial[i * d + i] += jitter;
        }
        match linalg::cholesky(&trial, d) {
            Ok(_) => {
                sigma = trial;
                return Ok(sigma);
            }
            Err(e) => last_err = Some(e),
        }
        jitter *= 10.0;
    }
    Err(last_err.expect("at least one attempt"))
}

/// Serializable snapshot of a mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecord {
    pub iteration: usize,
    pub components: Vec<ComponentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub alpha: f64,
    pub mu: Vec<f64>,
    /// Row-major scale matrix.
    pub sigma: Vec<f64>,
    pub nu: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;
    use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

    fn std_t(d: usize) -> TMixture {
        let mut scale = vec![0.0; d * d];
        for i in 0..d {
            scale[i * d + i] = 1.0;
        }
        TMixture::new(vec![TComponent::new(1.0, vec![0.0; d], scale, DEFAULT_NU).unwrap()]).unwrap()
    }

    fn samples(points: Vec<Vec<f64>>, w: &[f64]) -> WeightedSamples {
        let log_f: Vec<f64> = w.iter().map(|v| v.ln()).collect();
        let n = points.len();
        WeightedSamples::new(points, log_f, vec![0.0; n], 1.0).unwrap()
    }

    #[test]
    fn mahalanobis_examples() {
        assert_eq!(mahalanobis_sq(&[1.0, 2.0], &[3.0, 0.5, 0.5, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((mahalanobis_sq(&[0.0], &[4.0], &[2.0]).unwrap() - 1.0).abs() < 1e-14);
        let m = mahalanobis_sq(&[0.0, 0.0], &[1.0, 0.0, 0.0, 4.0], &[1.0, 2.0]).unwrap();
        assert!((m - 2.0).abs() < 1e-14);
        assert!(mahalanobis_sq(&[0.0, 0.0], &[1.0, 2.0, 2.0, 1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn density_at_the_mode() {
        assert!((std_t(1).log_pdf(&[0.0]) - 0.379607f64.ln()).abs() < 1e-5);
        assert!((std_t(2).log_pdf(&[0.0, 0.0]) - 0.159155f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn density_matches_reference_in_one_dimension() {
        let c = TComponent::new(1.0, vec![1.5], vec![4.0], 5.0).unwrap();
        let mix = TMixture::new(vec![c]).unwrap();
        let reference = StudentsT::new(1.5, 2.0, 5.0).unwrap();
        for x in [-7.0, -1.0, 0.0, 1.5, 3.3, 20.0] {
            assert!((mix.log_pdf(&[x]) - reference.ln_pdf(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn density_is_symmetric_about_the_mean() {
        let c = TComponent::new(1.0, vec![0.5, -1.0], vec![2.0, 0.3, 0.3, 1.0], 5.0).unwrap();
        let mix = TMixture::new(vec![c]).unwrap();
        let a = [0.7, -0.4];
        let plus = [0.5 + a[0], -1.0 + a[1]];
        let minus = [0.5 - a[0], -1.0 - a[1]];
        assert!((mix.log_pdf(&plus) - mix.log_pdf(&minus)).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_matches_linear_sum() {
        let mix = TMixture::new(vec![
            TComponent::new(0.2, vec![-1.0, 0.0], vec![1.0, 0.2, 0.2, 0.5], 5.0).unwrap(),
            TComponent::new(0.5, vec![2.0, 1.0], vec![2.0, 0.0, 0.0, 2.0], 5.0).unwrap(),
            TComponent::new(0.3, vec![0.0, -2.0], vec![0.4, -0.1, -0.1, 0.3], 5.0).unwrap(),
        ])
        .unwrap();
        for x in [[0.0, 0.0], [1.0, -1.0], [3.0, 2.0], [-2.0, -2.5]] {
            let linear: f64 = mix.components().iter().map(|c| c.weight() * c.log_density(&x).exp()).sum();
            let got = mix.log_pdf(&x).exp();
            assert!(((got - linear) / linear).abs() <= 1e-10);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for s in [0.25, 1.0, 4.0] {
            let mix = TMixture::new(vec![TComponent::new(1.0, vec![0.0], vec![s], 5.0).unwrap()]).unwrap();
            let n = 200_000;
            let h = 100.0 / n as f64;
            let total: f64 = (0..n).map(|i| mix.log_pdf(&[-50.0 + (i as f64 + 0.5) * h]).exp() * h).sum();
            assert!((total - 1.0).abs() < 1e-2, "Σ={s}: {total}");
        }
    }

    #[test]
    fn tiny_scale_draws_sit_on_the_mean() {
        let c = TComponent::new(1.0, vec![0.3, -0.7], vec![1e-20, 0.0, 0.0, 1e-20], 5.0).unwrap();
        let mix = TMixture::new(vec![c]).unwrap();
        for x in mix.sample(1000, &mut rng::stream(1)) {
            assert!((x[0] - 0.3).abs() < 1e-8 && (x[1] + 0.7).abs() < 1e-8);
        }
    }

    #[test]
    fn sample_mean_is_near_zero() {
        let xs = std_t(1).sample(200_000, &mut rng::stream(7));
        let mean = xs.iter().map(|x| x[0]).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() <= 0.02, "{mean}");
    }

    #[test]
    fn massless_component_is_never_drawn() {
        let mix = TMixture::new(vec![
            TComponent::new(1.0, vec![-100.0], vec![1.0], 5.0).unwrap(),
            TComponent::new(0.0, vec![100.0], vec![1.0], 5.0).unwrap(),
        ])
        .unwrap();
        assert!(mix.sample(5000, &mut rng::stream(2)).iter().all(|x| x[0] < 0.0));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let mix = std_t(3);
        assert_eq!(mix.sample(100, &mut rng::stream(4)), mix.sample(100, &mut rng::stream(4)));
    }

    fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    #[test]
    fn draws_match_inverse_cdf_reference() {
        let n = 100_000;
        let mix = TMixture::new(vec![TComponent::new(1.0, vec![1.0], vec![2.25], 5.0).unwrap()]).unwrap();
        let ours: Vec<f64> = mix.sample(n, &mut rng::stream(21)).into_iter().map(|x| x[0]).collect();
        let reference_dist = StudentsT::new(1.0, 1.5, 5.0).unwrap();
        let mut r = rng::stream(22);
        let reference: Vec<f64> = (0..n).map(|_| reference_dist.inverse_cdf(r.gen::<f64>())).collect();
        let critical = 1.628 * (2.0 / n as f64).sqrt();
        let d = ks_statistic(ours, reference);
        assert!(d < critical, "KS {d} >= {critical}");
    }

    #[test]
    fn em_symmetric_fixed_point() {
        let mix = std_t(1);
        let s = samples(vec![vec![-1.0], vec![1.0]], &[0.5, 0.5]);
        let out = mix.em_update(&s, EmOptions::default()).unwrap();
        let c = &out.components()[0];
        assert!((c.weight() - 1.0).abs() < 1e-12);
        assert!(c.mean()[0].abs() < 1e-12);
        assert!((c.scale()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn em_on_a_single_point_moves_means_there() {
        let mix = TMixture::new(vec![
            TComponent::new(0.6, vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0], 5.0).unwrap(),
            TComponent::new(0.4, vec![2.0, 1.0], vec![0.5, 0.0, 0.0, 0.5], 5.0).unwrap(),
        ])
        .unwrap();
        let p = vec![0.7, 0.4];
        let s = samples(vec![p.clone(); 4], &[0.25; 4]);
        let out = mix.em_update(&s, EmOptions::default()).unwrap();
        for c in out.components() {
            assert!((c.mean()[0] - p[0]).abs() < 1e-12 && (c.mean()[1] - p[1]).abs() < 1e-12);
            assert!(linalg::cholesky(c.scale(), 2).is_ok());
        }
    }

    /// Direct transcription of the weighted t-mixture EM step in one dimension.
    fn reference_em_1d(alpha: &[f64], mu: &[f64], var: &[f64], nu: f64, x: &[f64], w: &[f64]) -> Vec<(f64, f64, f64)> {
        let m = alpha.len();
        let dens: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let t = StudentsT::new(mu[k], var[k].sqrt(), nu).unwrap();
                x.iter().map(|&xi| alpha[k] * t.pdf(xi)).collect()
            })
            .collect();
        (0..m)
            .map(|k| {
                let mut a = 0.0;
                let mut num_mu = 0.0;
                let mut den_mu = 0.0;
                for i in 0..x.len() {
                    let total: f64 = (0..m).map(|j| dens[j][i]).sum();
                    let eps = dens[k][i] / total;
                    let u = (nu + 1.0) / (nu + (x[i] - mu[k]).powi(2) / var[k]);
                    a += w[i] * eps;
                    num_mu += w[i] * eps * u * x[i];
                    den_mu += w[i] * eps * u;
                }
                let new_mu = num_mu / den_mu;
                let mut num_s = 0.0;
                for i in 0..x.len() {
                    let total: f64 = (0..m).map(|j| dens[j][i]).sum();
                    let eps = dens[k][i] / total;
                    let u = (nu + 1.0) / (nu + (x[i] - mu[k]).powi(2) / var[k]);
                    num_s += w[i] * eps * u * (x[i] - new_mu).powi(2);
                }
                (a, new_mu, num_s / a)
            })
            .collect()
    }

    #[test]
    fn em_separates_two_clusters() {
        let mut r = rng::stream(13);
        let x: Vec<f64> = (0..400)
            .map(|i| {
                let c = if i % 2 == 0 { -10.0 } else { 10.0 };
                c + r.gen_range(-1.0..1.0)
            })
            .collect();
        let w = vec![1.0 / 400.0; 400];
        let alpha = [0.3, 0.7];
        let mu = [-6.0, 4.0];
        let var = [9.0, 16.0];
        let mix = TMixture::new(vec![
            TComponent::new(alpha[0], vec![mu[0]], vec![var[0]], 5.0).unwrap(),
            TComponent::new(alpha[1], vec![mu[1]], vec![var[1]], 5.0).unwrap(),
        ])
        .unwrap();
        let s = samples(x.iter().map(|v| vec![*v]).collect(), &w);
        let out = mix.em_update(&s, EmOptions::default()).unwrap();
        let reference = reference_em_1d(&alpha, &mu, &var, 5.0, &x, &w);
        for (c, (a, m, v)) in out.components().iter().zip(&reference) {
            assert!((c.weight() - a).abs() < 1e-9);
            assert!((c.mean()[0] - m).abs() < 1e-9);
            assert!((c.scale()[0] - v).abs() < 1e-6 * v);
            assert!((c.weight() - 0.5).abs() <= 0.05);
        }
    }

    #[test]
    fn starved_component_is_frozen() {
        let far = TComponent::new(0.5, vec![1e4], vec![1e-4], 5.0).unwrap();
        let mix = TMixture::new(vec![TComponent::new(0.5, vec![0.0], vec![1.0], 5.0).unwrap(), far.clone()]).unwrap();
        let s = samples(vec![vec![-0.5], vec![0.5]], &[0.5, 0.5]);
        let out = mix.em_update(&s, EmOptions::default()).unwrap();
        assert_eq!(out.components()[1].mean(), far.mean());
        assert_eq!(out.components()[1].scale(), far.scale());
        assert!(out.components()[1].weight() < 1e-12);
        assert_eq!(out.prune(1e-3).len(), 1);
    }

    #[test]
    fn sigma_switch_changes_only_the_scale() {
        let mix = std_t(1);
        let s = samples(vec![vec![-2.0], vec![0.1], vec![3.0]], &[0.2, 0.5, 0.3]);
        let a = mix.em_update(&s, EmOptions { sigma_include_u: false }).unwrap();
        let b = mix.em_update(&s, EmOptions { sigma_include_u: true }).unwrap();
        assert_eq!(a.components()[0].mean(), b.components()[0].mean());
        assert!((a.components()[0].scale()[0] - b.components()[0].scale()[0]).abs() > 1e-6);
    }

    #[test]
    fn add_component_rescales_masses() {
        let bounds = Bounds::cube(-5.12, 5.12, 2).unwrap();
        let mut mix = TMixture::covering(&bounds, 4.0, 5.0).unwrap();
        mix = mix.add_component(&[1.0, 1.0], &bounds).unwrap();
        assert_eq!(mix.len(), 2);
        assert!((mix.weights()[0] - 0.9).abs() < 1e-15 && (mix.weights()[1] - 0.1).abs() < 1e-15);
        let s = mix.components()[1].scale();
        assert!((s[0] - 0.512f64.powi(2)).abs() < 1e-12 && (s[3] - 0.512f64.powi(2)).abs() < 1e-12);
        assert_eq!(s[1], 0.0);
        for _ in 0..9 {
            mix = mix.add_component(&[0.0, 0.0], &bounds).unwrap();
        }
        assert_eq!(mix.len(), 11);
        assert!((mix.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    /// Raw masses, not renormalized.
    fn with_masses(masses: &[f64]) -> TMixture {
        TMixture {
            components: masses
                .iter()
                .enumerate()
                .map(|(i, a)| TComponent::new(*a, vec![i as f64], vec![1.0], 5.0).unwrap())
                .collect(),
        }
    }

    #[test]
    fn prune_examples() {
        let m = with_masses(&[0.5, 0.5]).prune(1e-3);
        assert_eq!(m.weights(), vec![0.5, 0.5]);

        let m = with_masses(&[0.998, 0.002, 1e-6]).prune(1e-3);
        assert_eq!(m.len(), 2);
        assert!((m.weights()[0] - 0.998 / 1.0).abs() < 1e-12);
        assert!((m.weights()[1] - 0.002 / 1.0).abs() < 1e-12);

        let m = with_masses(&[1e-9, 1e-9]).prune(1e-3);
        assert_eq!(m.len(), 1);
        assert_eq!(m.weights(), vec![1.0]);
    }

    #[test]
    fn record_round_trip() {
        let mix = with_masses(&[0.25, 0.75]);
        let rec = mix.record(3);
        let json = serde_json::to_string(&rec).unwrap();
        let back: MixtureRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.iteration, 3);
        assert_eq!(TMixture::from_record(&back).unwrap(), mix);
    }

    #[test]
    fn table_paths_agree_with_direct_evaluation() {
        let bounds = Bounds::cube(-3.0, 3.0, 2).unwrap();
        let mut mix = TMixture::covering(&bounds, 4.0, 5.0).unwrap();
        let pts = mix.sample(20, &mut rng::stream(8));
        let mut table = mix.maha_table(&pts);
        mix = mix.add_component(&[1.0, -1.0], &bounds).unwrap();
        mix.push_maha_column(&mut table, &pts);
        let extra = mix.sample(5, &mut rng::stream(9));
        mix.extend_maha_table(&mut table, &extra);
        let all: Vec<Vec<f64>> = pts.into_iter().chain(extra).collect();
        for (x, lq) in all.iter().zip(mix.log_pdf_table(&table)) {
            assert!((mix.log_pdf(x) - lq).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn em_keeps_mass_and_positive_definiteness(
            seed in any::<u64>(),
            n in 3usize..60,
            raw_w in prop::collection::vec(0.0f64..1.0, 60),
        ) {
            let bounds = Bounds::cube(-4.0, 4.0, 2).unwrap();
            let mix = TMixture::covering(&bounds, 4.0, 5.0).unwrap()
                .add_component(&[1.0, 2.0], &bounds).unwrap()
                .add_component(&[-3.0, 0.5], &bounds).unwrap();
            let pts = mix.sample(n, &mut rng::stream(seed));
            let mut w: Vec<f64> = raw_w[..n].iter().map(|v| v + 1e-6).collect();
            let total: f64 = w.iter().sum();
            for v in &mut w { *v /= total; }
            let table = mix.maha_table(&pts);
            let out = mix.em_update_with_table(&pts, &w, &table, EmOptions::default()).unwrap();
            prop_assert!((out.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for c in out.components() {
                prop_assert!(linalg::cholesky(c.scale(), 2).is_ok());
            }
        }

        #[test]
        fn added_component_survives_prune(
            k in 0usize..8,
            alpha_min in 1e-6f64..0.1,
        ) {
            let bounds = Bounds::cube(0.0, 1.0, 1).unwrap();
            let mut mix = TMixture::covering(&bounds, 4.0, 5.0).unwrap();
            for _ in 0..k {
                mix = mix.add_component(&[0.3], &bounds).unwrap();
            }
            let mix = mix.add_component(&[0.9], &bounds).unwrap();
            let (pruned, keep) = mix.prune_indexed(alpha_min);
            prop_assert!(keep.contains(&(mix.len() - 1)));
            prop_assert!((pruned.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
