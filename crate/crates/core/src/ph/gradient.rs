use serde::Serialize;

use super::HamiltonianModel;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, Matrix, Vector};

/// Base central-difference step; coordinate `i` uses `h·(1 + |x_i|)`.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Central-difference gradient of `model.value` at `x`.
pub fn finite_diff_gradient(model: &HamiltonianModel, x: &Vector, step: f64) -> Result<Vector> {
    finite_diff_gradient_of(|v| model.value(v), x, step)
}

/// Central-difference gradient of an arbitrary scalar function.
pub fn finite_diff_gradient_of<F>(f: F, x: &Vector, step: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> f64,
{
    if !(step > 0.0) {
        return Err(Error::Precondition(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut probe = x.clone();
    let mut grad = Vector::zeros(x.len());
    for i in 0..x.len() {
        let h = step * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite {
                context: "finite-difference gradient",
                index: i,
            });
        }
        grad[i] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

/// Central-difference Jacobian `∂f/∂x` (rows are output components).
pub fn finite_diff_jacobian<F>(f: F, x: &Vector, step: f64) -> Result<Matrix>
where
    F: Fn(&Vector) -> Vector,
{
    let f0 = f(x);
    let mut jac = Matrix::zeros(f0.len(), x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let h = step * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        let col = (up - down) / (2.0 * h);
        if !col.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "finite-difference Jacobian",
                index: i,
            });
        }
        jac.set_column(i, &col);
    }
    Ok(jac)
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub samples: usize,
    pub tol: f64,
    /// `max_i |g − g_fd|_∞ / max(1, |g|_∞)` over all samples.
    pub worst_rel_error: f64,
    pub worst_sample: Option<Vec<f64>>,
    pub passed: bool,
}

/// Compares the analytic gradient with central differences at every sample.
pub fn check_gradient(
    model: &HamiltonianModel,
    samples: &[Vector],
    rel_tol: f64,
) -> Result<GradientReport> {
    let mut worst = 0.0_f64;
    let mut worst_sample = None;
    for x in samples {
        let analytic = model.gradient(x);
        let numeric = finite_diff_gradient(model, x, DEFAULT_FD_STEP)?;
        let err = max_abs(&(&analytic - &numeric)) / max_abs(&analytic).max(1.0);
        if err > worst || worst_sample.is_none() {
            worst = worst.max(err);
            worst_sample = Some(x.as_slice().to_vec());
        }
    }
    Ok(GradientReport {
        samples: samples.len(),
        tol: rel_tol,
        worst_rel_error: worst,
        worst_sample,
        passed: worst <= rel_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn quadratic_gradient() {
        let h = HamiltonianModel::quadratic(Matrix::identity(2, 2), Vector::zeros(2));
        let g = finite_diff_gradient(&h, &vector(&[1.0, 2.0]), DEFAULT_FD_STEP).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8);
        assert!((g[1] - 2.0).abs() / 2.0 < 1e-8);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let h = HamiltonianModel::new(|_| 3.5, |x: &Vector| Vector::zeros(x.len()));
        let g = finite_diff_gradient(&h, &vector(&[0.3, -4.0, 9.0]), DEFAULT_FD_STEP).unwrap();
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn non_finite_value_names_coordinate() {
        let h = HamiltonianModel::new(
            |x: &Vector| if x[1] > 1.0 { f64::NAN } else { 0.0 },
            |x: &Vector| Vector::zeros(x.len()),
        );
        let err = finite_diff_gradient(&h, &vector(&[0.0, 1.0]), DEFAULT_FD_STEP).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
    }

    #[test]
    fn bad_step_rejected() {
        let h = HamiltonianModel::quadratic(Matrix::identity(1, 1), Vector::zeros(1));
        assert!(finite_diff_gradient(&h, &vector(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let h = HamiltonianModel::new(|x: &Vector| x[0] * x[0], |x: &Vector| vector(&[x[0]]));
        let report = check_gradient(&h, &[vector(&[1.0]), vector(&[2.0])], 1e-6).unwrap();
        assert!(!report.passed);
        assert_eq!(report.worst_sample, Some(vec![2.0]));
    }
}
