use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iac::IacGains;
use crate::linalg::{matrix, vector, Matrix, Vector};
use crate::ph::{
    DisturbanceModel, HamiltonianModel, Partition, PartitionedMatrix, PhSystem, StateMatrix,
};

/// Motor constants and shaping gains. The state is `x = (i_q, i_d, ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmsmParams {
    pub l_d: f64,
    pub l_q: f64,
    /// Stator resistance; absorbed by the energy-shaping law, kept for reference.
    pub r_s: f64,
    pub phi: f64,
    pub inertia: f64,
    pub n_p: f64,
    pub r_m: f64,
    pub tau_l: f64,
    pub r1: f64,
    pub r2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c23: f64,
    pub omega_star: f64,
    pub ki: f64,
}

impl Default for PmsmParams {
    fn default() -> Self {
        Self {
            l_d: 0.011,
            l_q: 0.015,
            r_s: 2.0,
            phi: 0.1,
            inertia: 0.01,
            n_p: 4.0,
            r_m: 0.01,
            tau_l: 0.5,
            r1: 5.0,
            r2: 0.1,
            gamma1: 1.0,
            gamma2: 1.0,
            c23: -1.0,
            omega_star: 50.0,
            ki: 10.0,
        }
    }
}

impl PmsmParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.l_d, self.l_q, self.r_s, self.phi, self.inertia, self.n_p, self.r_m, self.tau_l,
            self.r1, self.r2, self.gamma1, self.gamma2, self.c23, self.omega_star, self.ki,
        ];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("PMSM parameters must be finite".into()));
        }
        for (name, v) in [
            ("r1", self.r1),
            ("r2", self.r2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("phi", self.phi),
            ("inertia", self.inertia),
            ("n_p", self.n_p),
            ("ki", self.ki),
            ("l_d", self.l_d),
            ("l_q", self.l_q),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("PMSM parameter {name} must be positive, got {v}")));
            }
        }
        if !(self.c23 < 0.0) {
            return Err(Error::Config(format!("PMSM parameter c23 must be negative, got {}", self.c23)));
        }
        if self.r_m < 0.0 {
            return Err(Error::Config(format!("PMSM friction r_m must be non-negative, got {}", self.r_m)));
        }
        Ok(())
    }

    /// `C₁₃(i_q) = −n_p (L_d − L_q) i_q / (J γ₁)`.
    pub fn c13(&self, i_q: f64) -> f64 {
        -self.n_p / (self.inertia * self.gamma1) * (self.l_d - self.l_q) * i_q
    }

    /// `d̄_u = (τ_L + R_m ω*) / (J C₂₃)`.
    pub fn d_bar_u(&self) -> f64 {
        (self.tau_l + self.r_m * self.omega_star) / (self.inertia * self.c23)
    }

    /// Raw unmatched disturbance `col(0, (τ_L + R_m ω*)/J)` on `(i_d, ω)`.
    pub fn raw_disturbance(&self) -> Vector {
        vector(&[0.0, (self.tau_l + self.r_m * self.omega_star) / self.inertia])
    }

    /// `(ī_q, ī_d, ω̄) = ((τ_L + R_m ω*)/(n_p Φ), 0, ω*)`.
    pub fn equilibrium(&self) -> Vector {
        vector(&[(self.tau_l + self.r_m * self.omega_star) / (self.n_p * self.phi), 0.0, self.omega_star])
    }

    fn hessian(&self) -> Matrix {
        Matrix::from_diagonal(&vector(&[
            -self.n_p * self.phi / (self.c23 * self.inertia),
            self.gamma1,
            self.gamma2,
        ]))
    }
}

/// Shaped PMSM with `C₁₂ = 0`.
pub fn build_pmsm(params: &PmsmParams) -> Result<PhSystem> {
    build_pmsm_with_coupling(params, 0.0)
}

/// Shaped PMSM with a constant `C₁₂`; any nonzero value breaks the
/// constant unmatched-disturbance structure.
pub fn build_pmsm_with_coupling(params: &PmsmParams, c12: f64) -> Result<PhSystem> {
    params.validate()?;
    let pr = params.clone();
    let p = Partition::new(1, 2)?;
    let j = PartitionedMatrix::interconnection(
        p,
        StateMatrix::zeros(1, 1),
        StateMatrix::constant(matrix(&[&[-c12, params.c23]])),
        StateMatrix::field(move |x| {
            let c13 = pr.c13(x[0]);
            matrix(&[&[0.0, c13], &[-c13, 0.0]])
        }),
    );
    let r = PartitionedMatrix::dissipation(
        p,
        StateMatrix::constant(matrix(&[&[params.r2]])),
        StateMatrix::zeros(1, 2),
        StateMatrix::constant(Matrix::from_diagonal(&vector(&[
            params.r1,
            params.r_m / (params.inertia * params.gamma2),
        ]))),
    );
    let hess = params.hessian();
    let x_star = vector(&[0.0, 0.0, params.omega_star]);
    let h = HamiltonianModel::quadratic(hess.clone(), x_star.clone()).with_hessian(move |_| hess.clone());
    let dist = DisturbanceModel::unmatched(vector(&[params.d_bar_u()]));
    PhSystem::new(p, j, r, h, dist, x_star)
}

/// `J_c1 = 0`, `R_c1 = r₂`, `R_c2 = 0`, `K_i = ki`.
pub fn pmsm_gains(params: &PmsmParams) -> Result<IacGains> {
    IacGains::constant(
        Matrix::zeros(1, 1),
        matrix(&[&[params.r2]]),
        Matrix::zeros(1, 1),
        matrix(&[&[params.ki]]),
    )
}
