use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iac::SimplifiedIac;
use crate::linalg::{from_rows, min_sym_eigenvalue, vector, Matrix, Vector};
use crate::mech::{MechanicalSystem, ShapedMechanics};
use crate::ph::StateMatrix;

/// Two-link planar arm with `q = (θ_a, θ_u)`, fully actuated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipulatorParams {
    pub a_a: f64,
    pub a_u: f64,
    pub b: f64,
    pub k_p: [[f64; 2]; 2],
    /// Physical damping; never read by the controller.
    pub r_d: [[f64; 2]; 2],
    pub q_star: [f64; 2],
    pub d_a: [f64; 2],
    pub kappa: f64,
    pub r_c2: [[f64; 2]; 2],
}

impl Default for ManipulatorParams {
    fn default() -> Self {
        Self {
            a_a: 2.0,
            a_u: 1.0,
            b: 0.5,
            k_p: [[10.0, 0.0], [0.0, 10.0]],
            r_d: [[1.0, 0.0], [0.0, 1.0]],
            q_star: [1.0, -0.5],
            d_a: [2.0, -1.0],
            kappa: 3.0,
            r_c2: [[5.0, 0.0], [0.0, 5.0]],
        }
    }
}

impl ManipulatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_a > 0.0 && self.a_u > 0.0) {
            return Err(Error::Config("a_a and a_u must be positive".into()));
        }
        if !(self.a_a * self.a_u > self.b * self.b) {
            return Err(Error::Config(format!(
                "inertia not positive definite: a_a·a_u = {} ≤ b² = {}",
                self.a_a * self.a_u,
                self.b * self.b
            )));
        }
        for (name, m) in [("k_p", self.k_p), ("r_d", self.r_d), ("r_c2", self.r_c2)] {
            let a = from_rows(&m);
            if (&a - a.transpose()).norm() > 1e-12 * (1.0 + a.norm()) {
                return Err(Error::Config(format!("{name} must be symmetric")));
            }
            if !(min_sym_eigenvalue(&a) > 0.0) {
                return Err(Error::Config(format!("{name} must be positive definite")));
            }
        }
        if !(self.kappa > 0.0) {
            return Err(Error::Config("kappa must be positive".into()));
        }
        Ok(())
    }

    pub fn r_d_matrix(&self) -> Matrix {
        from_rows(&self.r_d)
    }

    /// Damping-free controller of this arm.
    pub fn controller(&self) -> Result<SimplifiedIac> {
        SimplifiedIac::new(self.kappa, StateMatrix::constant(from_rows(&self.r_c2)))
    }
}

#[derive(Debug, Clone)]
pub struct ManipulatorArm {
    a_a: f64,
    a_u: f64,
    b: f64,
    k_p: Matrix,
    r_d: Matrix,
    q_star: Vector,
}

impl ManipulatorArm {
    pub fn new(params: &ManipulatorParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            a_a: params.a_a,
            a_u: params.a_u,
            b: params.b,
            k_p: from_rows(&params.k_p),
            r_d: from_rows(&params.r_d),
            q_star: vector(&params.q_star),
        })
    }
}

impl ShapedMechanics for ManipulatorArm {
    fn dof(&self) -> usize {
        2
    }

    fn inputs(&self) -> usize {
        2
    }

    fn mass(&self, q: &Vector) -> Matrix {
        let c = q[1].cos();
        from_rows(&[
            [self.a_a + self.a_u + 2.0 * self.b * c, self.a_u + self.b * c],
            [self.a_u + self.b * c, self.a_u],
        ])
    }

    fn desired_mass(&self, q: &Vector) -> Matrix {
        self.mass(q)
    }

    fn desired_mass_derivatives(&self, q: &Vector) -> Vec<Matrix> {
        let s = q[1].sin();
        vec![
            Matrix::zeros(2, 2),
            from_rows(&[[-2.0 * self.b * s, -self.b * s], [-self.b * s, 0.0]]),
        ]
    }

    fn potential(&self, q: &Vector) -> f64 {
        let e = q - &self.q_star;
        0.5 * e.dot(&(&self.k_p * &e))
    }

    fn potential_gradient(&self, q: &Vector) -> Vector {
        &self.k_p * (q - &self.q_star)
    }

    fn damping(&self, _q: &Vector) -> Matrix {
        self.r_d.clone()
    }

    fn input_matrix(&self, _q: &Vector) -> Matrix {
        Matrix::identity(2, 2)
    }

    fn transform_jacobian(&self, _q: &Vector, _p: &Vector) -> Option<Matrix> {
        Some(Matrix::zeros(2, 2))
    }
}

/// The arm as a shaped mechanical plant with matched disturbance `d̄_a`.
pub fn build_manipulator(params: &ManipulatorParams) -> Result<MechanicalSystem> {
    let arm = ManipulatorArm::new(params)?;
    MechanicalSystem::new(Arc::new(arm), vector(&params.q_star), vector(&params.d_a))
}
