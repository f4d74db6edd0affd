//! Bounded maximization problems and the positivity floor applied to them.
//!
//! Every sampler works with `log f`, so the objective is floored at a small
//! positive value before the logarithm is taken. Points outside the box are
//! never passed to the user function; they receive `log(f_floor)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default positivity floor applied to objective values.
pub const DEFAULT_F_FLOOR: f64 = 1e-300;

/// Axis-aligned box domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBounds("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBounds(format!(
                    "dimension {j}: lower {lo} must be finite and below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The hypercube `[lo, hi]^dim`.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    /// Inclusive containment test.
    pub fn in_bounds(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.contains(x))
    }

    /// Containment test without the length check; callers guarantee `x.len() == dim`.
    pub(crate) fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }
}

/// Free-function form of [`Bounds::in_bounds`].
pub fn in_bounds(bounds: &Bounds, x: &[f64]) -> Result<bool> {
    bounds.in_bounds(x)
}

pub type ObjectiveFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Result of evaluating `log f` at a single point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEval {
    /// `log(max(f(x), f_floor))`, or `log(f_floor)` outside the box.
    pub log_f: f64,
    /// Raw objective value when the user function was actually called.
    pub value: Option<f64>,
}

/// A box-bounded objective to maximize.
#[derive(Clone)]
pub struct ObjectiveSpec {
    name: String,
    bounds: Bounds,
    eval: Arc<ObjectiveFn>,
    f_floor: f64,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("f_floor", &self.f_floor)
            .finish_non_exhaustive()
    }
}

impl ObjectiveSpec {
    pub fn new<F>(name: impl Into<String>, bounds: Bounds, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            bounds,
            eval: Arc::new(eval),
            f_floor: DEFAULT_F_FLOOR,
        }
    }

    pub fn with_f_floor(mut self, f_floor: f64) -> Result<Self> {
        if !(f_floor > 0.0 && f_floor.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "f_floor must be positive and finite, got {f_floor}"
            )));
        }
        self.f_floor = f_floor;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn f_floor(&self) -> f64 {
        self.f_floor
    }

    /// Raw objective value, without flooring or bound checks.
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Floored log-objective plus the raw value when the function was called.
    pub fn log_eval(&self, x: &[f64]) -> Result<LogEval> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.bounds.contains(x) {
            return Ok(LogEval {
                log_f: self.f_floor.ln(),
                value: None,
            });
        }
        let value = (self.eval)(x);
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective {
                x: x.to_vec(),
                value,
            });
        }
        Ok(LogEval {
            log_f: value.max(self.f_floor).ln(),
            value: Some(value),
        })
    }

    /// Evaluates a batch in parallel; output order matches `points`.
    pub fn log_eval_batch(&self, points: &[Vec<f64>]) -> Result<Vec<LogEval>> {
        points.par_iter().map(|x| self.log_eval(x)).collect()
    }

    /// `log(max(f(x), f_floor))` inside the box, `log(f_floor)` outside.
    pub fn log_f(&self, x: &[f64]) -> Result<f64> {
        self.log_eval(x).map(|e| e.log_f)
    }
}

/// Best objective value seen so far and where it was found.
///
/// Ties keep the earlier point, so offering a batch in index order gives a
/// result that does not depend on evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct BestSoFar {
    pub value: f64,
    pub point: Vec<f64>,
}

impl BestSoFar {
    pub fn empty(dim: usize) -> Self {
        Self {
            value: f64::NEG_INFINITY,
            point: vec![f64::NAN; dim],
        }
    }

    /// Returns true when `value` strictly improves the record.
    pub fn offer(&mut self, value: f64, point: &[f64]) -> bool {
        if value > self.value {
            self.value = value;
            self.point.clear();
            self.point.extend_from_slice(point);
            true
        } else {
            false
        }
    }

    pub fn offer_eval(&mut self, eval: &LogEval, point: &[f64]) -> bool {
        match eval.value {
            Some(v) => self.offer(v, point),
            None => false,
        }
    }

    pub fn merge(&mut self, other: &BestSoFar) {
        if other.value > self.value {
            *self = other.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Bounds {
        Bounds::cube(-1.0, 1.0, 2).unwrap()
    }

    #[test]
    fn in_bounds_is_inclusive() {
        let b = square();
        assert!(b.in_bounds(&[0.0, 0.0]).unwrap());
        assert!(b.in_bounds(&[1.0, 1.0]).unwrap());
        assert!(!b.in_bounds(&[1.0001, 0.0]).unwrap());
    }

    #[test]
    fn in_bounds_rejects_wrong_length() {
        assert!(matches!(
            square().in_bounds(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(vec![], vec![]).is_err());
        assert!(Bounds::new(vec![0.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Bounds::new(vec![f64::NEG_INFINITY], vec![1.0]).is_err());
    }

    #[test]
    fn outside_points_get_the_floor_without_evaluating() {
        let spec = ObjectiveSpec::new("panics", square(), |_| panic!("must not be called"));
        let e = spec.log_eval(&[2.0, 0.0]).unwrap();
        assert_eq!(e.log_f, DEFAULT_F_FLOOR.ln());
        assert_eq!(e.value, None);
    }

    #[test]
    fn negative_values_are_floored() {
        let spec = ObjectiveSpec::new("neg", square(), |_| -3.0);
        let e = spec.log_eval(&[0.0, 0.0]).unwrap();
        assert_eq!(e.log_f, DEFAULT_F_FLOOR.ln());
        assert_eq!(e.value, Some(-3.0));
    }

    #[test]
    fn non_finite_values_are_errors() {
        let spec = ObjectiveSpec::new("nan", square(), |_| f64::NAN);
        match spec.log_f(&[0.5, 0.5]) {
            Err(Error::NonFiniteObjective { x, .. }) => assert_eq!(x, vec![0.5, 0.5]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn custom_floor() {
        let spec = ObjectiveSpec::new("zero", square(), |_| 0.0)
            .with_f_floor(1e-10)
            .unwrap();
        assert!((spec.log_f(&[0.0, 0.0]).unwrap() - 1e-10f64.ln()).abs() < 1e-12);
        assert!(ObjectiveSpec::new("z", square(), |_| 0.0).with_f_floor(0.0).is_err());
    }
}
