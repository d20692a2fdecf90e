//! Integral action controller for disturbed port-Hamiltonian plants.
//!
//! The canonical realization keeps the integrator state `x_c`:
//!
//! ```text
//! u   = [−J_aa + R_aa + J_c1 − R_c1 − R_c2] ∇_a H + [J_c1 − R_c1] K_i (x_a − x_c) + 2 R_au ∇_u H
//! ẋ_c = −R_c2 ∇_a H + (J_au + R_au) ∇_u H
//! ```
//!
//! and [`control_law_wc`] gives the equivalent form in `w_c = x_a − x_c`.

mod closed_loop;
mod equilibrium;
mod gains;
mod lyapunov;

pub use closed_loop::{build_closed_loop, ClosedLoop};
pub use equilibrium::{
    equilibrium_matched, equilibrium_mixed, equilibrium_unmatched, EquilibriumKind,
    EquilibriumPrediction, EQUILIBRIUM_RESIDUAL_TOL,
};
pub use gains::{matched_gains, GainValues, IacGains};
pub use lyapunov::{
    detect_outputs, lyapunov_matched, lyapunov_rate_bound, lyapunov_unmatched, ShiftedLyapunov,
};

use crate::error::{ensure_len, Result};
use crate::linalg::{Matrix, Vector};
use crate::ph::{PhSystem, StateMatrix};

struct PlantTerms {
    ga: Vector,
    gu: Vector,
    j_aa: Matrix,
    j_au: Matrix,
    r_aa: Matrix,
    r_au: Matrix,
}

fn plant_terms(plant: &PhSystem, x: &Vector) -> Result<PlantTerms> {
    let p = plant.partition();
    ensure_len("plant state", p.n(), x.len())?;
    let g = plant.hamiltonian().gradient(x);
    let jb = plant.interconnection().blocks(x);
    let rb = plant.dissipation().blocks(x);
    Ok(PlantTerms {
        ga: g.rows(0, p.m()).clone_owned(),
        gu: g.rows(p.m(), p.s()).clone_owned(),
        j_aa: jb.aa,
        j_au: jb.au,
        r_aa: rb.aa,
        r_au: rb.au,
    })
}

fn check_gain_dim(plant: &PhSystem, gains: &IacGains) -> Result<()> {
    ensure_len("controller gains", plant.partition().m(), gains.m())
}

/// Control input and integrator rate of the `x_c` realization.
pub fn controller(
    plant: &PhSystem,
    gains: &IacGains,
    x: &Vector,
    x_c: &Vector,
) -> Result<(Vector, Vector)> {
    check_gain_dim(plant, gains)?;
    let m = plant.partition().m();
    ensure_len("integrator state", m, x_c.len())?;
    let t = plant_terms(plant, x)?;
    let k = gains.evaluate(x)?;
    let e = x.rows(0, m) - x_c;
    let u = (-&t.j_aa + &t.r_aa + &k.jc1 - &k.rc1 - &k.rc2) * &t.ga
        + (&k.jc1 - &k.rc1) * (&k.ki * e)
        + (&t.r_au * &t.gu) * 2.0;
    let xc_dot = -(&k.rc2 * &t.ga) + (&t.j_au + &t.r_au) * &t.gu;
    Ok((u, xc_dot))
}

pub fn control_law(plant: &PhSystem, gains: &IacGains, x: &Vector, x_c: &Vector) -> Result<Vector> {
    controller(plant, gains, x, x_c).map(|(u, _)| u)
}

pub fn integrator_dynamics(
    plant: &PhSystem,
    gains: &IacGains,
    x: &Vector,
    x_c: &Vector,
) -> Result<Vector> {
    controller(plant, gains, x, x_c).map(|(_, xc_dot)| xc_dot)
}

/// The `w_c` realization: returns `(u, ẇ_c)`.
///
/// `d_a` is the matched disturbance acting on the plant. A controller that
/// cannot measure it passes zero, which is exact when no matched
/// disturbance is present.
pub fn control_law_wc(
    plant: &PhSystem,
    gains: &IacGains,
    x: &Vector,
    w_c: &Vector,
    d_a: &Vector,
) -> Result<(Vector, Vector)> {
    check_gain_dim(plant, gains)?;
    let m = plant.partition().m();
    ensure_len("integrator state", m, w_c.len())?;
    ensure_len("matched disturbance", m, d_a.len())?;
    let t = plant_terms(plant, x)?;
    let k = gains.evaluate(x)?;
    let ki_w = &k.ki * w_c;
    let g_c = &k.jc1 - &k.rc1;
    let u = (-&t.j_aa + &t.r_aa + &g_c - &k.rc2) * &t.ga + &g_c * &ki_w + (&t.r_au * &t.gu) * 2.0;
    let wc_dot = &g_c * (&t.ga + &ki_w) - d_a;
    Ok((u, wc_dot))
}

/// Integral action on the passive output: `ẋ_c = K_i y_a`, `u = −x_c`.
pub fn baseline_passive_iac(
    plant: &PhSystem,
    ki: &Matrix,
    x: &Vector,
    x_c: &Vector,
) -> Result<(Vector, Vector)> {
    let m = plant.partition().m();
    gains::check_ki(ki, m)?;
    ensure_len("integrator state", m, x_c.len())?;
    let (y_a, _) = plant.outputs(x)?;
    Ok((-x_c.clone(), ki * y_a))
}

/// Damping-free form of the controller for plants with `R_au = 0` and
/// constant `R_aa ≻ 0`.
///
/// Choosing `J_c1 = 0`, `R_c1 = R_aa` and `K_i = κ R_aa⁻¹` makes the law
/// independent of `R`:
///
/// ```text
/// u   = [−J_aa − R_c2] ∇_a H − κ (x_a − x_c)
/// ẋ_c = −R_c2 ∇_a H + J_au ∇_u H
/// ```
#[derive(Debug, Clone)]
pub struct SimplifiedIac {
    pub kappa: f64,
    pub rc2: StateMatrix,
}

impl SimplifiedIac {
    pub fn new(kappa: f64, rc2: StateMatrix) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(crate::Error::Gain(format!("κ must be positive, got {kappa}")));
        }
        Ok(Self { kappa, rc2 })
    }

    /// Full gain set this law reproduces for a given `R_aa`.
    pub fn equivalent_gains(&self, r_aa: &Matrix) -> Result<IacGains> {
        let m = r_aa.nrows();
        let ki = crate::linalg::inverse(r_aa, "R_aa", &[])? * self.kappa;
        let ki = (&ki + ki.transpose()) * 0.5;
        IacGains::new(
            StateMatrix::zeros(m, m),
            StateMatrix::constant(r_aa.clone()),
            self.rc2.clone(),
            ki,
        )
    }

    pub fn controller(&self, plant: &PhSystem, x: &Vector, x_c: &Vector) -> Result<(Vector, Vector)> {
        let m = plant.partition().m();
        ensure_len("integrator state", m, x_c.len())?;
        let p = plant.partition();
        ensure_len("plant state", p.n(), x.len())?;
        let g = plant.hamiltonian().gradient(x);
        let ga = g.rows(0, m);
        let gu = g.rows(m, p.s());
        let jb = plant.interconnection().blocks(x);
        let rc2 = self.rc2.eval(x);
        ensure_len("R_c2", m, rc2.nrows())?;
        let u = (-&jb.aa - &rc2) * ga - (x.rows(0, m) - x_c) * self.kappa;
        let xc_dot = -(&rc2 * ga) + &jb.au * gu;
        Ok((u, xc_dot))
    }
}
