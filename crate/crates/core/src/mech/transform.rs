use std::sync::Arc;

use super::MechanicalSystem;
use crate::error::{ensure_len, Error, Result};
use crate::iac::{build_closed_loop, equilibrium_matched, ClosedLoop, EquilibriumPrediction, IacGains};
use crate::linalg::{
    concat, condition_number, inverse, left_null_basis, min_sym_eigenvalue, vstack, Matrix,
    Vector, CONDITION_WARN,
};
use crate::ph::{
    DisturbanceModel, HamiltonianModel, MatchedDisturbance, Partition, PartitionedMatrix, PhSystem,
    StateMatrix,
};

/// Relative tolerance of the `∂(T𝐩)/∂q` finite-difference cross-check.
pub const JACOBIAN_REL_TOL: f64 = 1e-5;

/// `T(q) = col((GᵀG)⁻¹Gᵀ, G⊥)`.
pub fn build_t(sys: &MechanicalSystem, q: &Vector) -> Result<Matrix> {
    ensure_len("configuration", sys.dof(), q.len())?;
    let model = sys.model();
    let g = model.input_matrix(q);
    let gtg = g.transpose() * &g;
    let cond = condition_number(&gtg);
    if !cond.is_finite() || cond > CONDITION_WARN {
        return Err(Error::Singular {
            what: "input matrix G",
            at: q.as_slice().to_vec(),
        });
    }
    let top = inverse(&gtg, "GᵀG", q.as_slice())? * g.transpose();
    let bottom = match model.annihilator(q) {
        Some(a) => a,
        None => left_null_basis(&g),
    };
    if bottom.shape() != (sys.dof() - sys.inputs(), sys.dof()) {
        return Err(Error::Config(format!(
            "annihilator is {:?}, expected {}x{}",
            bottom.shape(),
            sys.dof() - sys.inputs(),
            sys.dof()
        )));
    }
    Ok(vstack(&top, &bottom))
}

fn fd_transform_jacobian(sys: &MechanicalSystem, q: &Vector, p: &Vector) -> Result<Matrix> {
    let l = sys.dof();
    let mut jac = Matrix::zeros(l, l);
    for i in 0..l {
        let h = 1e-6 * (1.0 + q[i].abs());
        let mut up = q.clone();
        up[i] += h;
        let mut down = q.clone();
        down[i] -= h;
        let col = (build_t(sys, &up)? * p - build_t(sys, &down)? * p) / (2.0 * h);
        jac.set_column(i, &col);
    }
    Ok(jac)
}

fn transform_jacobian(sys: &MechanicalSystem, q: &Vector, p: &Vector) -> Result<Matrix> {
    match sys.model().transform_jacobian(q, p) {
        Some(j) => Ok(j),
        None => fd_transform_jacobian(sys, q, p),
    }
}

/// Relative disagreement between the supplied `∂(T𝐩)/∂q` and finite
/// differences; zero when no analytic Jacobian is supplied.
pub(crate) fn jacobian_cross_check(sys: &MechanicalSystem, q: &Vector, p: &Vector) -> Result<f64> {
    let Some(analytic) = sys.model().transform_jacobian(q, p) else {
        return Ok(0.0);
    };
    let numeric = fd_transform_jacobian(sys, q, p)?;
    let scale = analytic.amax().max(1.0);
    Ok((analytic - numeric).amax() / scale)
}

/// Every transformed quantity at one state `(q, p)`.
#[derive(Debug, Clone)]
pub struct MechFrame {
    pub t: Matrix,
    pub t_inv: Matrix,
    /// Physical momentum `𝐩 = T⁻¹p`.
    pub p_bold: Vector,
    /// `M_d⁻¹ = T⁻ᵀ𝐌_d⁻¹T⁻¹`.
    pub md_inv: Matrix,
    pub q_mat: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    /// `∂(T𝐩)/∂q`.
    pub jac: Matrix,
    pub grad_p: Vector,
    pub grad_q: Vector,
    pub energy: f64,
}

impl MechFrame {
    fn compute(sys: &MechanicalSystem, q: &Vector, p: &Vector) -> Result<Self> {
        let l = sys.dof();
        ensure_len("configuration", l, q.len())?;
        ensure_len("transformed momentum", l, p.len())?;
        let model = sys.model();
        let at = q.as_slice();
        let m_inv = inverse(&model.mass(q), "inertia", at)?;
        let md = model.desired_mass(q);
        let md_inv_bold = inverse(&md, "desired inertia", at)?;
        let t = build_t(sys, q)?;
        let t_inv = inverse(&t, "momentum transform T", at)?;
        let p_bold = &t_inv * p;
        let p_tilde = &md_inv_bold * &p_bold;
        let jac = transform_jacobian(sys, q, &p_bold)?;
        let j2 = model.gyroscopic(q, &p_bold);
        let rd = model.damping(q);
        let q_mat = &m_inv * &md * t.transpose();
        let c = &jac * &q_mat - q_mat.transpose() * jac.transpose() + &t * j2 * t.transpose();
        let d = &t * rd * t.transpose();
        let md_inv = t_inv.transpose() * &md_inv_bold * &t_inv;
        let grad_p = t_inv.transpose() * &p_tilde;
        let mut grad_q_bold = model.potential_gradient(q);
        for (i, dm) in model.desired_mass_derivatives(q).iter().enumerate() {
            grad_q_bold[i] -= 0.5 * p_tilde.dot(&(dm * &p_tilde));
        }
        let grad_q = grad_q_bold - jac.transpose() * &grad_p;
        let energy = 0.5 * p_bold.dot(&p_tilde) + model.potential(q);
        Ok(Self {
            t,
            t_inv,
            p_bold,
            md_inv,
            q_mat,
            c,
            d,
            jac,
            grad_p,
            grad_q,
            energy,
        })
    }

    /// `[[C, −Qᵀ], [Q, 0]]` in the order `(p, q)`.
    pub fn interconnection(&self) -> Matrix {
        let l = self.t.nrows();
        let mut j = Matrix::zeros(2 * l, 2 * l);
        j.view_mut((0, 0), (l, l)).copy_from(&self.c);
        j.view_mut((0, l), (l, l)).copy_from(&(-self.q_mat.transpose()));
        j.view_mut((l, 0), (l, l)).copy_from(&self.q_mat);
        j
    }

    /// `diag(D, 0)`.
    pub fn dissipation(&self) -> Matrix {
        let l = self.t.nrows();
        let mut r = Matrix::zeros(2 * l, 2 * l);
        r.view_mut((0, 0), (l, l)).copy_from(&self.d);
        r
    }

    /// `col(∇_p H, ∇_q H)`.
    pub fn gradient(&self) -> Vector {
        concat(&[&self.grad_p, &self.grad_q])
    }
}

/// A mechanical system viewed in the transformed momentum `p = T(q)𝐩`.
#[derive(Debug, Clone)]
pub struct TransformedMech {
    sys: MechanicalSystem,
}

impl TransformedMech {
    pub fn new(sys: &MechanicalSystem) -> Self {
        Self { sys: sys.clone() }
    }

    pub fn system(&self) -> &MechanicalSystem {
        &self.sys
    }

    pub fn frame(&self, q: &Vector, p: &Vector) -> Result<MechFrame> {
        MechFrame::compute(&self.sys, q, p)
    }

    /// Frame from the plant state `x = (p, q)`.
    pub fn frame_at(&self, x: &Vector) -> Result<MechFrame> {
        let l = self.sys.dof();
        ensure_len("mechanical state", 2 * l, x.len())?;
        self.frame(&x.rows(l, l).clone_owned(), &x.rows(0, l).clone_owned())
    }

    /// `p = T(q)𝐩`.
    pub fn to_transformed(&self, q: &Vector, p_bold: &Vector) -> Result<Vector> {
        ensure_len("momentum", self.sys.dof(), p_bold.len())?;
        Ok(build_t(&self.sys, q)? * p_bold)
    }

    /// `𝐩 = T(q)⁻¹p`.
    pub fn to_physical(&self, q: &Vector, p: &Vector) -> Result<Vector> {
        let t = build_t(&self.sys, q)?;
        crate::linalg::solve(&t, p, "momentum transform T")
    }

    /// `H(q, p) = ½ pᵀM_d⁻¹p + V_d`.
    pub fn hamiltonian(&self, q: &Vector, p: &Vector) -> Result<f64> {
        Ok(self.frame(q, p)?.energy)
    }

    /// `(q̇, ṗ)` of the transformed dynamics.
    pub fn drift(&self, q: &Vector, p: &Vector, u: &Vector, disturbed: bool) -> Result<(Vector, Vector)> {
        ensure_len("mechanical input", self.sys.inputs(), u.len())?;
        let f = self.frame(q, p)?;
        let q_dot = &f.q_mat * &f.grad_p;
        let mut force = u.clone();
        if disturbed {
            force -= self.sys.d_m();
        }
        let tg = &f.t * self.sys.model().input_matrix(q);
        let p_dot = -(f.q_mat.transpose() * &f.grad_q) + (&f.c - &f.d) * &f.grad_p + tg * force;
        Ok((q_dot, p_dot))
    }

    /// Maps `(q̇, ṗ)` back to `𝐩̇ = T⁻¹(ṗ − ∂(T𝐩)/∂q · q̇)`.
    pub fn physical_momentum_rate(
        &self,
        q: &Vector,
        p: &Vector,
        q_dot: &Vector,
        p_dot: &Vector,
    ) -> Result<Vector> {
        let f = self.frame(q, p)?;
        Ok(&f.t_inv * (p_dot - &f.jac * q_dot))
    }
}

/// `p = T(q)𝐩` together with the transformed frame, after cross-checking
/// the supplied `∂(T𝐩)/∂q` against finite differences.
pub fn momentum_transform(sys: &MechanicalSystem, q: &Vector, p_bold: &Vector) -> Result<(Vector, MechFrame)> {
    ensure_len("momentum", sys.dof(), p_bold.len())?;
    let rel = jacobian_cross_check(sys, q, p_bold)?;
    if rel > JACOBIAN_REL_TOL {
        return Err(Error::Validation(format!(
            "∂(T𝐩)/∂q disagrees with finite differences at q = {:?} (rel. error {rel:e})",
            q.as_slice()
        )));
    }
    let p = build_t(sys, q)? * p_bold;
    let frame = MechFrame::compute(sys, q, &p)?;
    Ok((p, frame))
}

fn nan_matrix(n: usize) -> Matrix {
    Matrix::from_element(n, n, f64::NAN)
}

/// The transformed system as a partitioned plant with `x_a = p_a` and
/// `x_u = col(p_u, q)`.
pub fn partition_mech(tm: &TransformedMech) -> Result<PhSystem> {
    let sys = tm.system();
    let l = sys.dof();
    let m = sys.inputs();
    let partition = Partition::new(m, 2 * l - m)?;
    let frame_of = {
        let tm = tm.clone();
        Arc::new(move |x: &Vector| tm.frame_at(x))
    };
    let j = {
        let f = frame_of.clone();
        PartitionedMatrix::from_full(partition, move |x| match f(x) {
            Ok(fr) => fr.interconnection(),
            Err(e) => {
                log::error!("interconnection unavailable: {e}");
                nan_matrix(2 * l)
            }
        })
    };
    let r = {
        let f = frame_of.clone();
        PartitionedMatrix::from_full(partition, move |x| match f(x) {
            Ok(fr) => fr.dissipation(),
            Err(e) => {
                log::error!("dissipation unavailable: {e}");
                nan_matrix(2 * l)
            }
        })
    };
    let h = {
        let fv = frame_of.clone();
        let fg = frame_of.clone();
        HamiltonianModel::new(
            move |x| fv(x).map_or(f64::NAN, |fr| fr.energy),
            move |x| {
                fg(x).map_or_else(|_| Vector::from_element(2 * l, f64::NAN), |fr| fr.gradient())
            },
        )
    };
    let dist = DisturbanceModel::none()
        .with_matched(MatchedDisturbance::constant(sys.d_m().clone()))
        .with_schedule(sys.schedule());
    let x_star = concat(&[&Vector::zeros(l), sys.q_star()]);
    PhSystem::new(partition, j, r, h, dist, x_star)
}

fn check_mech_gains(gains: &IacGains, m: usize) -> Result<()> {
    ensure_len("controller gains", m, gains.m())?;
    if !gains.is_constant() {
        return Err(Error::Gain("mechanical IAC requires constant gains".into()));
    }
    let rc2 = gains.rc2().as_constant().expect("constant gains");
    let min = min_sym_eigenvalue(rc2);
    if !(min > 1e-12 * (1.0 + rc2.norm())) {
        return Err(Error::Gain(format!(
            "R_c2 must be positive definite for mechanical plants (smallest eigenvalue {min:e})"
        )));
    }
    Ok(())
}

/// Mechanical IAC: returns `(u, ẋ_c)` at `(q, p, x_c)`.
pub fn mech_iac(
    tm: &TransformedMech,
    gains: &IacGains,
    q: &Vector,
    p: &Vector,
    x_c: &Vector,
) -> Result<(Vector, Vector)> {
    let sys = tm.system();
    let (l, m) = (sys.dof(), sys.inputs());
    let r = l - m;
    check_mech_gains(gains, m)?;
    ensure_len("integrator state", m, x_c.len())?;
    let f = tm.frame(q, p)?;
    let k = gains.evaluate(q)?;
    let c_aa = f.c.view((0, 0), (m, m));
    let c_au = f.c.view((0, m), (m, r));
    let d_aa = f.d.view((0, 0), (m, m));
    let d_au = f.d.view((0, m), (m, r));
    let q_a = f.q_mat.view((0, 0), (l, m));
    let g_pa = f.grad_p.rows(0, m);
    let g_pu = f.grad_p.rows(m, r);
    let u = (-c_aa + d_aa + &k.jc1 - &k.rc1 - &k.rc2) * g_pa
        + (&k.jc1 - &k.rc1) * (&k.ki * (p.rows(0, m) - x_c))
        + (d_au * g_pu) * 2.0;
    let xc_dot = -(&k.rc2 * g_pa) + (c_au + d_au) * g_pu - q_a.transpose() * &f.grad_q;
    Ok((u, xc_dot))
}

/// Closed loop of the partitioned plant with its matched disturbance
/// written as `G_d = J_c1 − R_c1`, `d̄_a = (J_c1 − R_c1)⁻¹ d̄_m`.
pub fn mech_closed_loop(tm: &TransformedMech, gains: &IacGains) -> Result<ClosedLoop> {
    let sys = tm.system();
    check_mech_gains(gains, sys.inputs())?;
    let plant = partition_mech(tm)?;
    let gd = gains.jc1().as_constant().expect("constant gains") - gains.rc1().as_constant().expect("constant gains");
    let d_bar_a = crate::linalg::solve(&gd, sys.d_m(), "J_c1 − R_c1")?;
    let dist = DisturbanceModel::none()
        .with_matched(MatchedDisturbance::new(StateMatrix::constant(gd), d_bar_a))
        .with_schedule(sys.schedule());
    build_closed_loop(&plant.with_disturbance(dist)?, gains)
}

/// `(q, p, w_c) = (q_star, 0, K_i⁻¹(J_c1 − R_c1)⁻¹ d̄_m)`, certified by
/// the closed-loop drift.
pub fn mech_equilibrium(tm: &TransformedMech, gains: &IacGains) -> Result<EquilibriumPrediction> {
    let closed = mech_closed_loop(tm, gains)?;
    let d_bar_a = closed
        .plant()
        .disturbance()
        .matched
        .as_ref()
        .map(|md| md.d_bar.clone())
        .expect("matched model set above");
    equilibrium_matched(&closed, &d_bar_a)
}
