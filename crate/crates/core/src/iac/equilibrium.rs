use serde::Serialize;

use super::ClosedLoop;
use crate::error::{ensure_len, Error, Result};
use crate::linalg::{concat, Vector};

/// Drift residuals above this make a prediction inconsistent.
pub const EQUILIBRIUM_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    Matched,
    Unmatched,
    Mixed,
}

/// Predicted closed-loop equilibrium, certified by evaluating the drift.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumPrediction {
    pub w_bar: Vec<f64>,
    pub kind: EquilibriumKind,
    /// `‖drift(w̄)‖`.
    pub residual: f64,
    pub d_bar_a: Vec<f64>,
    pub d_bar_u: Vec<f64>,
}

impl EquilibriumPrediction {
    pub fn w_bar(&self) -> Vector {
        Vector::from_column_slice(&self.w_bar)
    }

    pub fn d_bar_a(&self) -> Vector {
        Vector::from_column_slice(&self.d_bar_a)
    }

    pub fn d_bar_u(&self) -> Vector {
        Vector::from_column_slice(&self.d_bar_u)
    }

    /// Integrator value `x_c = x̄_a − w̄_c` at the equilibrium.
    pub fn x_c_bar(&self, closed: &ClosedLoop) -> Vector {
        closed.from_w(&self.w_bar()).1
    }
}

fn certify(
    closed: &ClosedLoop,
    kind: EquilibriumKind,
    x_bar: Vector,
    d_bar_a: Vector,
    d_bar_u: Vector,
) -> Result<EquilibriumPrediction> {
    let w_c = closed.gains().ki_solve(&(&d_bar_a + &d_bar_u))?;
    let w_bar = concat(&[&x_bar, &w_c]);
    let drift = closed.drift_with(&w_bar, Some(&d_bar_a), Some(&d_bar_u))?;
    let residual = drift.norm();
    if !(residual <= EQUILIBRIUM_RESIDUAL_TOL) {
        return Err(Error::Inconsistent {
            residual,
            tol: EQUILIBRIUM_RESIDUAL_TOL,
        });
    }
    Ok(EquilibriumPrediction {
        w_bar: w_bar.as_slice().to_vec(),
        kind,
        residual,
        d_bar_a: d_bar_a.as_slice().to_vec(),
        d_bar_u: d_bar_u.as_slice().to_vec(),
    })
}

fn require_no_rc2(closed: &ClosedLoop, x: &Vector) -> Result<()> {
    let rc2 = closed.gains().rc2().eval(x);
    if rc2.norm() > 0.0 {
        return Err(Error::Precondition(
            "unmatched disturbance rejection requires R_c2 = 0".into(),
        ));
    }
    Ok(())
}

fn shifted_minimum(closed: &ClosedLoop, d_bar_u: &Vector) -> Result<Vector> {
    let report = closed.plant().check_shifted_minimum(d_bar_u)?;
    match report.failure {
        Some(msg) => Err(Error::Assumption(msg)),
        None => Ok(report.x_bar()),
    }
}

/// `w̄ = (x_star, K_i⁻¹ d̄_a)`.
pub fn equilibrium_matched(closed: &ClosedLoop, d_bar_a: &Vector) -> Result<EquilibriumPrediction> {
    let m = closed.plant().partition().m();
    ensure_len("matched disturbance", m, d_bar_a.len())?;
    certify(
        closed,
        EquilibriumKind::Matched,
        closed.plant().x_star().clone(),
        d_bar_a.clone(),
        Vector::zeros(m),
    )
}

/// `w̄ = (x̄, K_i⁻¹ d̄_u)` with `x̄` the minimiser of `H(x) + x_aᵀ d̄_u`.
pub fn equilibrium_unmatched(
    closed: &ClosedLoop,
    d_bar_u: &Vector,
) -> Result<EquilibriumPrediction> {
    let m = closed.plant().partition().m();
    ensure_len("unmatched disturbance", m, d_bar_u.len())?;
    require_no_rc2(closed, closed.plant().x_star())?;
    let x_bar = shifted_minimum(closed, d_bar_u)?;
    require_no_rc2(closed, &x_bar)?;
    certify(closed, EquilibriumKind::Unmatched, x_bar, Vector::zeros(m), d_bar_u.clone())
}

/// `w̄ = (x̄, K_i⁻¹(d̄_a + d̄_u))`.
pub fn equilibrium_mixed(
    closed: &ClosedLoop,
    d_bar_a: &Vector,
    d_bar_u: &Vector,
) -> Result<EquilibriumPrediction> {
    let m = closed.plant().partition().m();
    ensure_len("matched disturbance", m, d_bar_a.len())?;
    ensure_len("unmatched disturbance", m, d_bar_u.len())?;
    require_no_rc2(closed, closed.plant().x_star())?;
    let x_bar = shifted_minimum(closed, d_bar_u)?;
    require_no_rc2(closed, &x_bar)?;
    certify(closed, EquilibriumKind::Mixed, x_bar, d_bar_a.clone(), d_bar_u.clone())
}
