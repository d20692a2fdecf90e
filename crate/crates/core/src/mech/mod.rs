//! Energy-shaped mechanical systems and the momentum transformation that
//! puts them into the partitioned port-Hamiltonian form.
//!
//! The shaped dynamics are
//!
//! ```text
//! q̇ = M⁻¹𝐌_d ∇_𝐩𝐇_d
//! 𝐩̇ = −𝐌_d M⁻¹ ∇_q𝐇_d + (𝐉₂ − R_d) ∇_𝐩𝐇_d + G (u − d̄_m)
//! 𝐇_d = ½ 𝐩ᵀ𝐌_d⁻¹(q) 𝐩 + V_d(q)
//! ```

mod transform;

pub use transform::{
    build_t, mech_closed_loop, mech_equilibrium, mech_iac, momentum_transform, partition_mech,
    MechFrame, TransformedMech, JACOBIAN_REL_TOL,
};

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{ensure_len, Error, Result};
use crate::linalg::{
    condition_number, inverse, min_sym_eigenvalue, skew_defect, symmetry_defect, Matrix, Vector,
};
use crate::ph::Schedule;

/// Model callbacks of a shaped mechanical system with `l` degrees of
/// freedom and `m` inputs.
pub trait ShapedMechanics: Send + Sync {
    fn dof(&self) -> usize;
    fn inputs(&self) -> usize;
    /// Open-loop inertia `M(q)`.
    fn mass(&self, q: &Vector) -> Matrix;
    /// Shaped inertia `𝐌_d(q)`.
    fn desired_mass(&self, q: &Vector) -> Matrix;
    /// `∂𝐌_d/∂q_i` for each `i`; central differences unless overridden.
    fn desired_mass_derivatives(&self, q: &Vector) -> Vec<Matrix> {
        (0..q.len())
            .map(|i| {
                let h = 1e-6 * (1.0 + q[i].abs());
                let mut up = q.clone();
                up[i] += h;
                let mut down = q.clone();
                down[i] -= h;
                (self.desired_mass(&up) - self.desired_mass(&down)) / (2.0 * h)
            })
            .collect()
    }
    fn potential(&self, q: &Vector) -> f64;
    fn potential_gradient(&self, q: &Vector) -> Vector;
    /// Skew matrix `𝐉₂(q, 𝐩)`.
    fn gyroscopic(&self, q: &Vector, _p: &Vector) -> Matrix {
        Matrix::zeros(q.len(), q.len())
    }
    /// Damping `R_d(q) ⪰ 0`.
    fn damping(&self, q: &Vector) -> Matrix;
    /// Input matrix `G(q)`, `l × m`.
    fn input_matrix(&self, q: &Vector) -> Matrix;
    /// Left annihilator `G⊥(q)`; a deterministic orthonormal basis is used
    /// when `None`.
    fn annihilator(&self, _q: &Vector) -> Option<Matrix> {
        None
    }
    /// `∂(T(q)𝐩)/∂q` (row `i` holds the derivatives of component `i`);
    /// finite differences of `T` are used when `None`.
    fn transform_jacobian(&self, _q: &Vector, _p: &Vector) -> Option<Matrix> {
        None
    }
}

/// A shaped mechanical plant with its target configuration and matched
/// disturbance.
#[derive(Clone)]
pub struct MechanicalSystem {
    model: Arc<dyn ShapedMechanics>,
    q_star: Vector,
    d_m: Vector,
    schedule: Schedule,
}

impl fmt::Debug for MechanicalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MechanicalSystem")
            .field("dof", &self.model.dof())
            .field("inputs", &self.model.inputs())
            .field("q_star", &self.q_star.as_slice())
            .field("d_m", &self.d_m.as_slice())
            .field("schedule", &self.schedule)
            .finish()
    }
}

/// Tolerance on `|∇V_d(q_star)|`.
pub const POTENTIAL_STATIONARITY_TOL: f64 = 1e-9;

impl MechanicalSystem {
    pub fn new(model: Arc<dyn ShapedMechanics>, q_star: Vector, d_m: Vector) -> Result<Self> {
        let l = model.dof();
        let m = model.inputs();
        ensure_len("q_star", l, q_star.len())?;
        ensure_len("matched disturbance d̄_m", m, d_m.len())?;
        if m == 0 || m > l {
            return Err(Error::Config(format!(
                "input dimension m = {m} must satisfy 1 ≤ m ≤ l = {l}"
            )));
        }
        let g = model.input_matrix(&q_star);
        if g.shape() != (l, m) {
            return Err(Error::Config(format!(
                "input matrix is {:?}, expected {l}x{m}",
                g.shape()
            )));
        }
        let grad = model.potential_gradient(&q_star);
        ensure_len("potential gradient", l, grad.len())?;
        if !(grad.norm() <= POTENTIAL_STATIONARITY_TOL) {
            return Err(Error::Config(format!(
                "q_star is not a critical point of V_d: |∇V_d| = {:e}",
                grad.norm()
            )));
        }
        Ok(Self {
            model,
            q_star,
            d_m,
            schedule: Schedule::default(),
        })
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_disturbance(mut self, d_m: Vector) -> Result<Self> {
        ensure_len("matched disturbance d̄_m", self.inputs(), d_m.len())?;
        self.d_m = d_m;
        Ok(self)
    }

    pub fn model(&self) -> &dyn ShapedMechanics {
        self.model.as_ref()
    }

    pub fn dof(&self) -> usize {
        self.model.dof()
    }

    pub fn inputs(&self) -> usize {
        self.model.inputs()
    }

    pub fn q_star(&self) -> &Vector {
        &self.q_star
    }

    pub fn d_m(&self) -> &Vector {
        &self.d_m
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    /// `𝐇_d(q, 𝐩)`.
    pub fn hamiltonian(&self, q: &Vector, p: &Vector) -> Result<f64> {
        let md = self.model.desired_mass(q);
        let pt = crate::linalg::solve(&md, p, "desired inertia")?;
        Ok(0.5 * p.dot(&pt) + self.model.potential(q))
    }

    /// `(∇_q𝐇_d, ∇_𝐩𝐇_d)`.
    pub fn gradient(&self, q: &Vector, p: &Vector) -> Result<(Vector, Vector)> {
        let md = self.model.desired_mass(q);
        let pt = crate::linalg::solve(&md, p, "desired inertia")?;
        let mut gq = self.model.potential_gradient(q);
        for (i, dm) in self.model.desired_mass_derivatives(q).iter().enumerate() {
            gq[i] -= 0.5 * pt.dot(&(dm * &pt));
        }
        Ok((gq, pt))
    }

    /// Shaped dynamics `(q̇, 𝐩̇)`; the disturbance enters when `disturbed`.
    pub fn drift(&self, q: &Vector, p: &Vector, u: &Vector, disturbed: bool) -> Result<(Vector, Vector)> {
        let l = self.dof();
        ensure_len("configuration", l, q.len())?;
        ensure_len("momentum", l, p.len())?;
        ensure_len("mechanical input", self.inputs(), u.len())?;
        let m_inv = inverse(&self.model.mass(q), "inertia", q.as_slice())?;
        let md = self.model.desired_mass(q);
        let (gq, gp) = self.gradient(q, p)?;
        let q_dot = &m_inv * &md * &gp;
        let j2 = self.model.gyroscopic(q, p);
        let rd = self.model.damping(q);
        let mut force = u.clone();
        if disturbed {
            force -= &self.d_m;
        }
        let p_dot = -(&md * &m_inv * gq) + (j2 - rd) * gp + self.model.input_matrix(q) * force;
        Ok((q_dot, p_dot))
    }

    /// Audits the model invariants at the given `(q, 𝐩)` samples.
    pub fn check_model(&self, samples: &[(Vector, Vector)]) -> Result<MechAudit> {
        let mut audit = MechAudit::default();
        for (idx, (q, p)) in samples.iter().enumerate() {
            ensure_len("configuration sample", self.dof(), q.len())?;
            ensure_len("momentum sample", self.dof(), p.len())?;
            audit.samples += 1;
            let mut fail = |what: String| {
                if audit.failure.is_none() {
                    audit.failure = Some(format!("{what} at sample {idx}"));
                }
            };
            for (name, a) in [("M", self.model.mass(q)), ("M_d", self.model.desired_mass(q))] {
                let sym = symmetry_defect(&a) / (1.0 + a.norm());
                let eig = min_sym_eigenvalue(&a);
                audit.min_inertia_eigenvalue = audit.min_inertia_eigenvalue.min(eig);
                if sym > 1e-12 {
                    fail(format!("{name} is not symmetric"));
                }
                if !(eig > 0.0) {
                    fail(format!("{name} is not positive definite (eigenvalue {eig:e})"));
                }
            }
            let j2 = self.model.gyroscopic(q, p);
            let skew = skew_defect(&j2) / (1.0 + j2.norm());
            audit.worst_gyroscopic_skew = audit.worst_gyroscopic_skew.max(skew);
            if skew > 1e-12 {
                fail("J_2 is not skew-symmetric".into());
            }
            let rd = self.model.damping(q);
            let eig = min_sym_eigenvalue(&rd);
            audit.min_damping_eigenvalue = audit.min_damping_eigenvalue.min(eig);
            if symmetry_defect(&rd) > 1e-12 * (1.0 + rd.norm()) {
                fail("R_d is not symmetric".into());
            }
            if eig < -1e-10 {
                fail(format!("R_d is not positive semidefinite (eigenvalue {eig:e})"));
            }
            let g = self.model.input_matrix(q);
            let cond = condition_number(&(g.transpose() * &g));
            if !cond.is_finite() || cond > crate::linalg::CONDITION_WARN {
                fail("G is rank deficient".into());
            }
            let t = build_t(self, q)?;
            let m = self.inputs();
            let tg = &t * &g;
            let mut target = Matrix::zeros(self.dof(), m);
            target.view_mut((0, 0), (m, m)).fill_with_identity();
            let ann = (tg - target).norm();
            audit.worst_annihilation = audit.worst_annihilation.max(ann);
            if ann > 1e-12 * (1.0 + g.norm()) {
                fail(format!("T·G differs from col(I, 0) by {ann:e}"));
            }
            let rel = transform::jacobian_cross_check(self, q, p)?;
            audit.worst_jacobian_error = audit.worst_jacobian_error.max(rel);
            if rel > JACOBIAN_REL_TOL {
                fail(format!("∂(T𝐩)/∂q disagrees with finite differences (rel. error {rel:e})"));
            }
        }
        Ok(audit)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MechAudit {
    pub samples: usize,
    pub min_inertia_eigenvalue: f64,
    pub min_damping_eigenvalue: f64,
    pub worst_gyroscopic_skew: f64,
    pub worst_annihilation: f64,
    pub worst_jacobian_error: f64,
    pub failure: Option<String>,
}

impl Default for MechAudit {
    fn default() -> Self {
        Self {
            samples: 0,
            min_inertia_eigenvalue: f64::INFINITY,
            min_damping_eigenvalue: f64::INFINITY,
            worst_gyroscopic_skew: 0.0,
            worst_annihilation: 0.0,
            worst_jacobian_error: 0.0,
            failure: None,
        }
    }
}

impl MechAudit {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}
