//! Fixed-step RK4 integration of plant/controller compositions under
//! step disturbance schedules.

mod export;
mod loops;

pub use export::{verdict_json, write_csv, write_plot_data, write_verdict, VERDICT_SCHEMA_VERSION};
pub use loops::{
    BaselineLoop, Certificate, FnDynamics, IacLoop, MechController, MechLoop, Realization,
    SimplifiedLoop,
};

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_len, Error, Result};
use crate::iac::EquilibriumPrediction;
use crate::linalg::{all_finite, Vector};
use crate::ph::{Activity, Schedule};

/// Steps between step-doubling error estimates.
pub const ERROR_CHECK_INTERVAL: usize = 100;
/// Estimated local error (relative to `1 + ‖x‖`) above which a warning is logged.
pub const STEP_ERROR_WARN: f64 = 1e-6;
/// Single-step increase of the Lyapunov function flagged by verdicts.
pub const LYAPUNOV_INCREASE_TOL: f64 = 1e-7;
/// States with a larger norm are treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Plot panel a state component belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Panel {
    Configuration,
    Momentum,
    Controller,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Label {
    pub name: String,
    pub panel: Panel,
}

impl Label {
    pub fn new(name: impl Into<String>, panel: Panel) -> Self {
        Self {
            name: name.into(),
            panel,
        }
    }
}

/// Quantities recorded alongside the state.
#[derive(Debug, Clone)]
pub struct Observation {
    pub u: Vector,
    pub h_cl: f64,
    /// NaN when no certified Lyapunov function is available.
    pub lyapunov: f64,
    pub y_a: f64,
    pub y_u: f64,
    /// Closed-loop coordinates `w = (x, w_c)`.
    pub w: Vector,
}

/// A composed vector field.
pub trait Dynamics: Send + Sync {
    fn dim(&self) -> usize;
    fn state_labels(&self) -> Vec<Label>;
    fn input_labels(&self) -> Vec<String>;
    fn rhs(&self, x: &Vector, active: Activity) -> Result<Vector>;
    /// Lyapunov value for the equilibrium selected by `active`.
    fn lyapunov(&self, x: &Vector, active: Activity) -> Result<Option<f64>>;
    fn observe(&self, x: &Vector, active: Activity) -> Result<Observation>;
}

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub dynamics: Arc<dyn Dynamics>,
    pub x0: Vector,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
    pub schedule: Schedule,
    /// Equilibrium and tolerance used by [`sweep`] for verdicts.
    pub expectation: Option<(EquilibriumPrediction, f64)>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("x0", &self.x0.as_slice())
            .field("t_end", &self.t_end)
            .field("dt", &self.dt)
            .field("stride", &self.stride)
            .field("schedule", &self.schedule)
            .finish_non_exhaustive()
    }
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        dynamics: Arc<dyn Dynamics>,
        x0: Vector,
        t_end: f64,
        dt: f64,
    ) -> Result<Self> {
        let s = Self {
            name: name.into(),
            dynamics,
            x0,
            t_end,
            dt,
            stride: 1,
            schedule: Schedule::default(),
            expectation: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_stride(mut self, stride: usize) -> Result<Self> {
        self.stride = stride;
        self.validate()?;
        Ok(self)
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_expectation(mut self, prediction: EquilibriumPrediction, tol: f64) -> Self {
        self.expectation = Some((prediction, tol));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        ensure_len("initial state", self.dynamics.dim(), self.x0.len())?;
        if !all_finite(&self.x0) {
            return Err(Error::Config("initial state must be finite".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        let ratio = self.t_end / self.dt;
        let near = ratio.round();
        let n = if (ratio - near).abs() <= 1e-9 * ratio.max(1.0) { near } else { ratio.ceil() };
        n.max(1.0) as usize
    }

    /// Disturbance activity over step `k`; switching times are snapped to
    /// the nearest grid point and held across the RK4 stages.
    pub fn activity_at_step(&self, k: usize) -> Activity {
        let on = |t0: f64| {
            let k0 = (t0 / self.dt).round();
            k0 <= 0.0 || (k as f64) >= k0
        };
        Activity {
            matched: on(self.schedule.matched_on),
            unmatched: on(self.schedule.unmatched_on),
        }
    }
}

/// Classical fourth-order Runge-Kutta step.
pub fn rk4_step(dynamics: &dyn Dynamics, x: &Vector, dt: f64, active: Activity) -> Result<Vector> {
    let k1 = dynamics.rhs(x, active)?;
    let k2 = dynamics.rhs(&(x + &k1 * (0.5 * dt)), active)?;
    let k3 = dynamics.rhs(&(x + &k2 * (0.5 * dt)), active)?;
    let k4 = dynamics.rhs(&(x + &k3 * dt), active)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Recorded samples of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub name: String,
    pub state_labels: Vec<Label>,
    pub input_labels: Vec<String>,
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub h_cl: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub y_a: Vec<f64>,
    pub y_u: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    /// Largest single-step increase of the Lyapunov function, with the
    /// disturbance activity of that step used at both ends.
    pub max_lyapunov_increase: f64,
    /// Largest step-doubling local error estimate.
    pub max_step_error: f64,
}

impl Trajectory {
    fn new(name: &str, dynamics: &dyn Dynamics) -> Self {
        Self {
            name: name.to_string(),
            state_labels: dynamics.state_labels(),
            input_labels: dynamics.input_labels(),
            t: Vec::new(),
            states: Vec::new(),
            inputs: Vec::new(),
            h_cl: Vec::new(),
            lyapunov: Vec::new(),
            y_a: Vec::new(),
            y_u: Vec::new(),
            w: Vec::new(),
            max_lyapunov_increase: 0.0,
            max_step_error: 0.0,
        }
    }

    fn push(&mut self, t: f64, x: &Vector, obs: Observation) {
        self.t.push(t);
        self.states.push(x.as_slice().to_vec());
        self.inputs.push(obs.u.as_slice().to_vec());
        self.h_cl.push(obs.h_cl);
        self.lyapunov.push(obs.lyapunov);
        self.y_a.push(obs.y_a);
        self.y_u.push(obs.y_u);
        self.w.push(obs.w.as_slice().to_vec());
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn final_state(&self) -> Option<Vector> {
        self.states.last().map(|s| Vector::from_column_slice(s))
    }

    pub fn final_w(&self) -> Option<Vector> {
        self.w.last().map(|s| Vector::from_column_slice(s))
    }

    /// Index of the last sample with `t ≤ time`.
    pub fn index_at(&self, time: f64) -> Option<usize> {
        self.t.iter().rposition(|&t| t <= time + 1e-12)
    }

    /// State column of the component labelled `name`.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.state_labels.iter().position(|l| l.name == name)?;
        Some(self.states.iter().map(|row| row[i]).collect())
    }
}

/// Integrates a scenario and records every `stride`-th sample plus the last.
pub fn integrate(scenario: &Scenario) -> Result<Trajectory> {
    scenario.validate()?;
    let dyn_ = scenario.dynamics.as_ref();
    let dt = scenario.dt;
    let n = scenario.steps();
    let mut traj = Trajectory::new(&scenario.name, dyn_);
    let mut x = scenario.x0.clone();
    let mut active = scenario.activity_at_step(0);
    traj.push(0.0, &x, dyn_.observe(&x, active)?);
    let mut w_start: Option<(Activity, f64)> = None;
    for k in 0..n {
        let t = k as f64 * dt;
        active = scenario.activity_at_step(k);
        let w0 = match w_start {
            Some((a, v)) if a == active => Some(v),
            _ => dyn_.lyapunov(&x, active)?,
        };
        if k % ERROR_CHECK_INTERVAL == 0 {
            let full = rk4_step(dyn_, &x, dt, active)?;
            let half = rk4_step(dyn_, &rk4_step(dyn_, &x, 0.5 * dt, active)?, 0.5 * dt, active)?;
            let est = (&full - &half).norm() / 15.0;
            let rel = est / (1.0 + x.norm());
            if rel > traj.max_step_error {
                traj.max_step_error = rel;
            }
            if rel > STEP_ERROR_WARN {
                log::warn!("{}: local error estimate {rel:e} at t = {t}; dt = {dt} may be too coarse", scenario.name);
            }
            x = full;
        } else {
            x = rk4_step(dyn_, &x, dt, active)?;
        }
        let t_next = (k + 1) as f64 * dt;
        if !all_finite(&x) || x.norm() > DIVERGENCE_NORM {
            return Err(Error::Divergence { t: t_next });
        }
        let w1 = dyn_.lyapunov(&x, active)?;
        if let (Some(a), Some(b)) = (w0, w1) {
            if (b - a) > traj.max_lyapunov_increase {
                traj.max_lyapunov_increase = b - a;
            }
        }
        w_start = w1.map(|v| (active, v));
        if (k + 1) % scenario.stride == 0 || k + 1 == n {
            let rec = scenario.activity_at_step(k + 1);
            traj.push(t_next, &x, dyn_.observe(&x, rec)?);
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub converged: bool,
    pub final_error: f64,
    /// Start of the final stretch that stays within tolerance.
    pub first_time_within_tol: Option<f64>,
    pub max_lyapunov_increase: f64,
    pub lyapunov_monotone: bool,
    pub tol: f64,
}

/// Compares the recorded closed-loop coordinates with a predicted
/// equilibrium.
pub fn check_convergence(
    traj: &Trajectory,
    prediction: &EquilibriumPrediction,
    tol: f64,
) -> ConvergenceVerdict {
    let w_bar = prediction.w_bar();
    let errors: Vec<f64> = traj
        .w
        .iter()
        .map(|w| {
            if w.len() != w_bar.len() {
                return f64::INFINITY;
            }
            let e = Vector::from_column_slice(w) - &w_bar;
            let n = e.norm();
            if n.is_nan() { f64::INFINITY } else { n }
        })
        .collect();
    let final_error = errors.last().copied().unwrap_or(f64::INFINITY);
    let mut first = None;
    for (i, e) in errors.iter().enumerate().rev() {
        if *e < tol {
            first = Some(traj.t[i]);
        } else {
            break;
        }
    }
    ConvergenceVerdict {
        converged: final_error < tol,
        final_error,
        first_time_within_tol: first,
        max_lyapunov_increase: traj.max_lyapunov_increase,
        lyapunov_monotone: traj.max_lyapunov_increase <= LYAPUNOV_INCREASE_TOL,
        tol,
    }
}

/// Runs scenarios concurrently; results keep the input order.
pub fn sweep(scenarios: &[Scenario]) -> Vec<Result<(Trajectory, Option<ConvergenceVerdict>)>> {
    scenarios
        .par_iter()
        .map(|s| {
            let traj = integrate(s)?;
            let verdict = s.expectation.as_ref().map(|(p, tol)| check_convergence(&traj, p, *tol));
            Ok((traj, verdict))
        })
        .collect()
}
