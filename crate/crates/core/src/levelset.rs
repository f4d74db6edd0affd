//! Midpoint-rule quadrature of how much of the annealed target `f^λ` sits on
//! the level set `{x : f(x) ≥ f* − ε}`.

use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;

pub const MIN_GRID: usize = 100;

/// Fraction of `∫ f^λ` carried by the ε-level set, on a `grid_n^d` midpoint grid (d ≤ 2).
pub fn level_set_mass(spec: &ObjectiveSpec, f_star: f64, lambda: f64, eps: f64, grid_n: usize) -> Result<f64> {
    let d = spec.dim();
    if d > 2 {
        return Err(Error::InvalidConfig(format!("level-set quadrature needs d <= 2, got {d}")));
    }
    if grid_n < MIN_GRID {
        return Err(Error::InvalidConfig(format!("grid must have at least {MIN_GRID} cells per axis")));
    }
    if !(lambda > 0.0 && eps > 0.0) {
        return Err(Error::InvalidConfig("lambda and eps must be positive".into()));
    }
    let b = spec.bounds();
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let h = (b.upper()[j] - b.lower()[j]) / grid_n as f64;
            (0..grid_n).map(|i| b.lower()[j] + (i as f64 + 0.5) * h).collect()
        })
        .collect();

    let mut log_terms = Vec::with_capacity(grid_n.pow(d as u32));
    let mut inside = Vec::with_capacity(log_terms.capacity());
    let mut x = vec![0.0; d];
    let total = grid_n.pow(d as u32);
    for flat in 0..total {
        let mut rem = flat;
        for (j, axis) in axes.iter().enumerate() {
            x[j] = axis[rem % grid_n];
            rem /= grid_n;
        }
        let e = spec.log_eval(&x)?;
        let raw = e.value.unwrap_or(f64::NEG_INFINITY);
        log_terms.push(lambda * e.log_f);
        inside.push(raw >= f_star - eps);
    }
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, inn) in log_terms.iter().zip(&inside) {
        let v = (t - max).exp();
        den += v;
        if *inn {
            num += v;
        }
    }
    if inside.iter().all(|b| *b) {
        return Ok(1.0);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{known_optimum, make_function};

    #[test]
    fn wide_level_set_is_everything() {
        let spec = make_function("TF3", 2).unwrap();
        let (f_star, _) = known_optimum("TF3", 2).unwrap();
        assert_eq!(level_set_mass(&spec, f_star, 3.0, 1e6, 100).unwrap(), 1.0);
    }

    #[test]
    fn mass_grows_with_lambda() {
        for name in ["TF3", "TF9"] {
            let spec = make_function(name, 2).unwrap();
            let (f_star, _) = known_optimum(name, 2).unwrap();
            let masses: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
                .iter()
                .map(|l| level_set_mass(&spec, f_star, *l, 0.1, 201).unwrap())
                .collect();
            assert!(masses.windows(2).all(|p| p[1] >= p[0]), "{name}: {masses:?}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = make_function("TF5", 3).unwrap();
        assert!(level_set_mass(&spec, 1.0, 1.0, 0.1, 100).is_err());
        let spec = make_function("TF3", 2).unwrap();
        assert!(level_set_mass(&spec, 1.0, 1.0, 0.1, 99).is_err());
        assert!(level_set_mass(&spec, 1.0, 0.0, 0.1, 100).is_err());
    }
}
