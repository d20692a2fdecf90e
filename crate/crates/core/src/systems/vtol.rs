use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iac::IacGains;
use crate::linalg::{from_rows, inverse, min_sym_eigenvalue, vector, Matrix, Vector};
use crate::mech::{MechanicalSystem, ShapedMechanics};

/// Energy-shaped VTOL aircraft with `q = (x, y, θ)` and two inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VtolParams {
    pub eps: f64,
    pub g: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k_v: [[f64; 2]; 2],
    pub p: [[f64; 2]; 2],
    /// Diagonal of `R₀`.
    pub r0: [f64; 3],
    pub q_star: [f64; 3],
    pub d_m: [f64; 2],
    pub j_c1: [[f64; 2]; 2],
    pub r_c1: [[f64; 2]; 2],
    pub r_c2: [[f64; 2]; 2],
    pub k_i: [[f64; 2]; 2],
}

impl Default for VtolParams {
    fn default() -> Self {
        Self {
            eps: 1.0,
            g: 9.81,
            k1: 2.0,
            k2: 1.1,
            k3: 30.0,
            k_v: [[10.0, 5.0], [5.0, 10.0]],
            p: [[0.03, 0.0], [0.0, 0.02]],
            r0: [1.0, 1.0, 1.0],
            q_star: [5.0, 0.0, 0.0],
            d_m: [5.0, -5.0],
            j_c1: [[0.0, 0.0], [0.0, 0.0]],
            r_c1: [[10.0, 5.0], [5.0, 10.0]],
            r_c2: [[10.0, 0.0], [0.0, 10.0]],
            k_i: [[1.0, 0.0], [0.0, 1.0]],
        }
    }
}

impl VtolParams {
    pub fn gamma(&self) -> f64 {
        self.k1 - self.eps * self.k2
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [self.eps, self.g, self.k1, self.k2, self.k3];
        if !scalars.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("VTOL parameters must be finite".into()));
        }
        if self.eps == 0.0 {
            return Err(Error::Config("eps must be nonzero".into()));
        }
        let gamma = self.gamma();
        if gamma.abs() < 1e-12 * (1.0 + self.k1.abs()) {
            return Err(Error::Config(format!(
                "k1 − eps·k2 = {gamma:e} vanishes; the shaped potential is undefined"
            )));
        }
        if !self.r0.iter().all(|r| *r > 0.0) {
            return Err(Error::Config("R0 entries must be positive".into()));
        }
        for (name, m) in [("k_v", self.k_v), ("p", self.p)] {
            let a = from_rows(&m);
            if (&a - a.transpose()).amax() > 1e-12 * (1.0 + a.amax()) || !(min_sym_eigenvalue(&a) > 0.0) {
                return Err(Error::Config(format!("{name} must be symmetric positive definite")));
            }
        }
        let model = VtolModel::from_params(self);
        for k in 0..=64 {
            let th = -std::f64::consts::PI + k as f64 * std::f64::consts::PI / 32.0;
            let md = model.desired_mass(&vector(&[0.0, 0.0, th]));
            if !(min_sym_eigenvalue(&md) > 0.0) {
                return Err(Error::Config(format!("M_d is not positive definite at θ = {th}")));
            }
        }
        Ok(())
    }

    pub fn gains(&self) -> Result<IacGains> {
        IacGains::constant(
            from_rows(&self.j_c1),
            from_rows(&self.r_c1),
            from_rows(&self.r_c2),
            from_rows(&self.k_i),
        )
    }
}

#[derive(Debug, Clone)]
pub struct VtolModel {
    eps: f64,
    g: f64,
    k1: f64,
    k2: f64,
    k3: f64,
    k_v: Matrix,
    p: Matrix,
    r0: Matrix,
    q_star: Vector,
}

impl VtolModel {
    fn from_params(pr: &VtolParams) -> Self {
        Self {
            eps: pr.eps,
            g: pr.g,
            k1: pr.k1,
            k2: pr.k2,
            k3: pr.k3,
            k_v: from_rows(&pr.k_v),
            p: from_rows(&pr.p),
            r0: Matrix::from_diagonal(&vector(&pr.r0)),
            q_star: vector(&pr.q_star),
        }
    }

    pub fn new(params: &VtolParams) -> Result<Self> {
        params.validate()?;
        Ok(Self::from_params(params))
    }

    fn gamma(&self) -> f64 {
        self.k1 - self.eps * self.k2
    }

    fn c1(&self) -> f64 {
        self.k3 / self.gamma()
    }

    fn c2(&self) -> f64 {
        (self.k3 - self.k1 * self.eps) / self.gamma()
    }

    fn z(&self, q: &Vector) -> Vector {
        vector(&[
            q[0] - self.q_star[0] - self.c1() * q[2].sin(),
            q[1] - self.q_star[1] - self.c2() * (q[2].cos() - 1.0),
        ])
    }

    /// `z(q) − z(q*)`.
    fn shift(&self, q: &Vector) -> Vector {
        self.z(q) - self.z(&self.q_star)
    }

    /// `R₀𝐌_d` split into symmetric and skew parts.
    fn r0_md_parts(&self, q: &Vector) -> (Matrix, Matrix) {
        let a = &self.r0 * self.desired_mass(q);
        let at = a.transpose();
        ((&a + &at) * 0.5, (&a - &at) * 0.5)
    }

    /// `∂T/∂θ`.
    pub fn dt_dtheta(&self, theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        let e = self.eps;
        let k = 1.0 / (1.0 + e * e);
        from_rows(&[
            [2.0 * s * c * k, -(c * c - s * s) * k, -e * s * k],
            [-(c * c - s * s) * k, -2.0 * s * c * k, e * c * k],
            [-s, c, 0.0],
        ])
    }
}

impl ShapedMechanics for VtolModel {
    fn dof(&self) -> usize {
        3
    }

    fn inputs(&self) -> usize {
        2
    }

    fn mass(&self, _q: &Vector) -> Matrix {
        Matrix::identity(3, 3)
    }

    fn desired_mass(&self, q: &Vector) -> Matrix {
        let (s, c) = q[2].sin_cos();
        let (k1, e) = (self.k1, self.eps);
        from_rows(&[
            [k1 * e * c * c + self.k3, k1 * e * c * s, k1 * c],
            [k1 * e * c * s, -k1 * e * c * c + self.k3, k1 * s],
            [k1 * c, k1 * s, self.k2],
        ])
    }

    fn desired_mass_derivatives(&self, q: &Vector) -> Vec<Matrix> {
        let (s, c) = q[2].sin_cos();
        let (k1, e) = (self.k1, self.eps);
        let d = from_rows(&[
            [-2.0 * k1 * e * c * s, k1 * e * (c * c - s * s), -k1 * s],
            [k1 * e * (c * c - s * s), 2.0 * k1 * e * c * s, k1 * c],
            [-k1 * s, k1 * c, 0.0],
        ]);
        vec![Matrix::zeros(3, 3), Matrix::zeros(3, 3), d]
    }

    fn potential(&self, q: &Vector) -> f64 {
        let e = self.shift(q);
        self.g * (1.0 - q[2].cos()) / self.gamma() + 0.5 * e.dot(&(&self.p * &e))
    }

    fn potential_gradient(&self, q: &Vector) -> Vector {
        let pz = &self.p * self.shift(q);
        let (s, c) = q[2].sin_cos();
        vector(&[
            pz[0],
            pz[1],
            self.g * s / self.gamma() - self.c1() * c * pz[0] + self.c2() * s * pz[1],
        ])
    }

    /// `𝐉₂(q, p̃)` minus the skew part of `R₀𝐌_d`.
    fn gyroscopic(&self, q: &Vector, p: &Vector) -> Matrix {
        let md = self.desired_mass(q);
        let pt = inverse(&md, "desired inertia", q.as_slice())
            .map(|mi| mi * p)
            .unwrap_or_else(|_| Vector::from_element(3, f64::NAN));
        let (s, c) = q[2].sin_cos();
        let k = -0.5 * self.k1 * self.gamma();
        let e = self.eps;
        let j12 = k * (2.0 * e * c * pt[0] + 2.0 * e * s * pt[1] + pt[2]);
        let j13 = k * pt[1];
        let j23 = -k * pt[0];
        let j2 = from_rows(&[[0.0, j12, j13], [-j12, 0.0, j23], [-j13, -j23, 0.0]]);
        j2 - self.r0_md_parts(q).1
    }

    /// `G K_v Gᵀ` plus the symmetric part of `R₀𝐌_d`.
    fn damping(&self, q: &Vector) -> Matrix {
        let g = self.input_matrix(q);
        &g * &self.k_v * g.transpose() + self.r0_md_parts(q).0
    }

    fn input_matrix(&self, q: &Vector) -> Matrix {
        let (s, c) = q[2].sin_cos();
        from_rows(&[[1.0, 0.0], [0.0, 1.0], [c / self.eps, s / self.eps]])
    }

    fn annihilator(&self, q: &Vector) -> Option<Matrix> {
        let (s, c) = q[2].sin_cos();
        Some(from_rows(&[[c, s, -self.eps]]))
    }

    fn transform_jacobian(&self, q: &Vector, p: &Vector) -> Option<Matrix> {
        let mut jac = Matrix::zeros(3, 3);
        jac.set_column(2, &(self.dt_dtheta(q[2]) * p));
        Some(jac)
    }
}

/// The aircraft as a shaped mechanical plant with matched disturbance `d̄_m`.
pub fn build_vtol(params: &VtolParams) -> Result<MechanicalSystem> {
    let model = VtolModel::new(params)?;
    MechanicalSystem::new(Arc::new(model), vector(&params.q_star), vector(&params.d_m))
}
