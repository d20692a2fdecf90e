use std::sync::Arc;

use super::{Dynamics, Label, Observation, Panel};
use crate::error::{ensure_len, Result};
use crate::iac::{
    baseline_passive_iac, control_law_wc, controller, detect_outputs, equilibrium_matched,
    equilibrium_mixed, equilibrium_unmatched, ClosedLoop, EquilibriumPrediction, IacGains,
    ShiftedLyapunov, SimplifiedIac,
};
use crate::linalg::{concat, Matrix, Vector};
use crate::mech::{mech_closed_loop, mech_iac, partition_mech, TransformedMech};
use crate::ph::{Activity, PhSystem};

const COMBOS: [Activity; 4] = [
    Activity::NONE,
    Activity {
        matched: true,
        unmatched: false,
    },
    Activity {
        matched: false,
        unmatched: true,
    },
    Activity::ALL,
];

#[derive(Debug, Clone)]
struct Entry {
    active: Activity,
    prediction: Option<EquilibriumPrediction>,
    lyapunov: Option<ShiftedLyapunov>,
    d_a: Vector,
    d_u: Vector,
}

/// Certified equilibria and shifted energies of a closed loop, one per
/// combination of active disturbances.
#[derive(Debug, Clone)]
pub struct Certificate {
    closed: ClosedLoop,
    entries: Vec<Entry>,
}

impl Certificate {
    pub fn new(closed: ClosedLoop) -> Self {
        let m = closed.plant().partition().m();
        let dist = closed.plant().disturbance().clone();
        let entries = COMBOS
            .iter()
            .map(|&active| {
                let d_a = dist
                    .matched
                    .as_ref()
                    .filter(|_| active.matched)
                    .map_or_else(|| Vector::zeros(m), |md| md.d_bar.clone());
                let d_u = dist
                    .unmatched
                    .as_ref()
                    .filter(|_| active.unmatched)
                    .map_or_else(|| Vector::zeros(m), |d| d.clone());
                let has_u = active.unmatched && dist.unmatched.is_some();
                let has_a = active.matched && dist.matched.is_some();
                let pred = match (has_a, has_u) {
                    (_, false) => equilibrium_matched(&closed, &d_a),
                    (false, true) => equilibrium_unmatched(&closed, &d_u),
                    (true, true) => equilibrium_mixed(&closed, &d_a, &d_u),
                };
                let prediction = match pred {
                    Ok(p) => Some(p),
                    Err(e) => {
                        log::debug!("no certified equilibrium for {active:?}: {e}");
                        None
                    }
                };
                let lyapunov = prediction
                    .as_ref()
                    .and_then(|p| ShiftedLyapunov::new(&closed, p).ok());
                Entry {
                    active,
                    prediction,
                    lyapunov,
                    d_a,
                    d_u,
                }
            })
            .collect();
        Self { closed, entries }
    }

    pub fn closed(&self) -> &ClosedLoop {
        &self.closed
    }

    fn entry(&self, active: Activity) -> &Entry {
        self.entries
            .iter()
            .find(|e| e.active == active)
            .expect("all combinations present")
    }

    pub fn prediction(&self, active: Activity) -> Option<&EquilibriumPrediction> {
        self.entry(active).prediction.as_ref()
    }

    pub fn lyapunov(&self, w: &Vector, active: Activity) -> Result<Option<f64>> {
        match &self.entry(active).lyapunov {
            Some(l) => l.value(w).map(Some),
            None => Ok(None),
        }
    }

    /// `(H_cl, W, |Y_a|, |Y_u|)`.
    pub fn observe(&self, w: &Vector, active: Activity) -> Result<(f64, f64, f64, f64)> {
        let e = self.entry(active);
        let h = self.closed.hamiltonian(w)?;
        let lyap = self.lyapunov(w, active)?.unwrap_or(f64::NAN);
        let (ya, yu) = detect_outputs(&self.closed, &e.d_a, &e.d_u, w)?;
        Ok((h, lyap, ya.norm(), yu.norm()))
    }
}

fn numbered(prefix: &str, n: usize, panel: Panel) -> Vec<Label> {
    (1..=n).map(|i| Label::new(format!("{prefix}{i}"), panel)).collect()
}

fn inputs(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("u{i}")).collect()
}

/// Integrator coordinate carried by an [`IacLoop`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Realization {
    /// `x_c` with `ẋ_c = −R_c2∇_aH + (J_au + R_au)∇_uH`.
    Integrator,
    /// `w_c = x_a − x_c`, assuming no matched disturbance is measured.
    Error,
}

/// A partitioned plant in closed loop with the full controller.
#[derive(Debug, Clone)]
pub struct IacLoop {
    cert: Certificate,
    realization: Realization,
    labels: Option<Vec<Label>>,
}

impl IacLoop {
    pub fn new(plant: &PhSystem, gains: &IacGains, realization: Realization) -> Result<Self> {
        let closed = crate::iac::build_closed_loop(plant, gains)?;
        Ok(Self {
            cert: Certificate::new(closed),
            realization,
            labels: None,
        })
    }

    /// Names of the plant states.
    pub fn with_state_names(mut self, names: &[&str]) -> Self {
        self.labels = Some(names.iter().map(|n| Label::new(*n, Panel::Configuration)).collect());
        self
    }

    pub fn certificate(&self) -> &Certificate {
        &self.cert
    }

    fn plant(&self) -> &PhSystem {
        self.cert.closed().plant()
    }

    /// Initial loop state from a plant state and `x_c`.
    pub fn initial_state(&self, x: &Vector, x_c: &Vector) -> Vector {
        match self.realization {
            Realization::Integrator => concat(&[x, x_c]),
            Realization::Error => self.cert.closed().to_w(x, x_c),
        }
    }

    fn split(&self, s: &Vector) -> (Vector, Vector) {
        self.cert.closed().split(s)
    }

    fn to_w(&self, s: &Vector) -> Vector {
        match self.realization {
            Realization::Integrator => {
                let (x, xc) = self.split(s);
                self.cert.closed().to_w(&x, &xc)
            }
            Realization::Error => s.clone(),
        }
    }

    fn control(&self, s: &Vector) -> Result<(Vector, Vector)> {
        let (x, c) = self.split(s);
        let gains = self.cert.closed().gains();
        match self.realization {
            Realization::Integrator => controller(self.plant(), gains, &x, &c),
            Realization::Error => {
                let m = c.len();
                control_law_wc(self.plant(), gains, &x, &c, &Vector::zeros(m))
            }
        }
    }
}

impl Dynamics for IacLoop {
    fn dim(&self) -> usize {
        self.cert.closed().dim()
    }

    fn state_labels(&self) -> Vec<Label> {
        let p = self.plant().partition();
        let mut l = self
            .labels
            .clone()
            .unwrap_or_else(|| numbered("x", p.n(), Panel::Configuration));
        let prefix = match self.realization {
            Realization::Integrator => "x_c",
            Realization::Error => "w_c",
        };
        l.extend(numbered(prefix, p.m(), Panel::Controller));
        l
    }

    fn input_labels(&self) -> Vec<String> {
        inputs(self.plant().partition().m())
    }

    fn rhs(&self, s: &Vector, active: Activity) -> Result<Vector> {
        ensure_len("loop state", self.dim(), s.len())?;
        let (x, _) = self.split(s);
        let (u, c_dot) = self.control(s)?;
        let x_dot = self.plant().drift_active(&x, &u, active)?;
        Ok(concat(&[&x_dot, &c_dot]))
    }

    fn lyapunov(&self, s: &Vector, active: Activity) -> Result<Option<f64>> {
        self.cert.lyapunov(&self.to_w(s), active)
    }

    fn observe(&self, s: &Vector, active: Activity) -> Result<Observation> {
        let w = self.to_w(s);
        let (u, _) = self.control(s)?;
        let (h_cl, lyapunov, y_a, y_u) = self.cert.observe(&w, active)?;
        Ok(Observation {
            u,
            h_cl,
            lyapunov,
            y_a,
            y_u,
            w,
        })
    }
}

/// A plant in closed loop with the damping-free law. The optional
/// reference gains are used only for certificates, never by the law.
#[derive(Debug, Clone)]
pub struct SimplifiedLoop {
    plant: PhSystem,
    law: SimplifiedIac,
    cert: Option<Certificate>,
}

impl SimplifiedLoop {
    pub fn new(plant: &PhSystem, law: SimplifiedIac) -> Self {
        Self {
            plant: plant.clone(),
            law,
            cert: None,
        }
    }

    /// Certificates from the equivalent gains for the true `R_aa`.
    pub fn with_reference(mut self, r_aa: &Matrix) -> Result<Self> {
        let gains = self.law.equivalent_gains(r_aa)?;
        self.cert = Some(Certificate::new(crate::iac::build_closed_loop(&self.plant, &gains)?));
        Ok(self)
    }

    fn split(&self, s: &Vector) -> (Vector, Vector) {
        let n = self.plant.partition().n();
        (s.rows(0, n).clone_owned(), s.rows(n, s.len() - n).clone_owned())
    }

    fn to_w(&self, s: &Vector) -> Vector {
        let (x, xc) = self.split(s);
        let m = self.plant.partition().m();
        concat(&[&x, &(x.rows(0, m) - xc)])
    }
}

impl Dynamics for SimplifiedLoop {
    fn dim(&self) -> usize {
        self.plant.partition().n() + self.plant.partition().m()
    }

    fn state_labels(&self) -> Vec<Label> {
        let p = self.plant.partition();
        let mut l = numbered("x", p.n(), Panel::Configuration);
        l.extend(numbered("x_c", p.m(), Panel::Controller));
        l
    }

    fn input_labels(&self) -> Vec<String> {
        inputs(self.plant.partition().m())
    }

    fn rhs(&self, s: &Vector, active: Activity) -> Result<Vector> {
        ensure_len("loop state", self.dim(), s.len())?;
        let (x, xc) = self.split(s);
        let (u, xc_dot) = self.law.controller(&self.plant, &x, &xc)?;
        let x_dot = self.plant.drift_active(&x, &u, active)?;
        Ok(concat(&[&x_dot, &xc_dot]))
    }

    fn lyapunov(&self, s: &Vector, active: Activity) -> Result<Option<f64>> {
        match &self.cert {
            Some(c) => c.lyapunov(&self.to_w(s), active),
            None => Ok(None),
        }
    }

    fn observe(&self, s: &Vector, active: Activity) -> Result<Observation> {
        let (x, xc) = self.split(s);
        let (u, _) = self.law.controller(&self.plant, &x, &xc)?;
        let w = self.to_w(s);
        let (h_cl, lyapunov, y_a, y_u) = match &self.cert {
            Some(c) => c.observe(&w, active)?,
            None => (self.plant.hamiltonian().value(&x), f64::NAN, f64::NAN, f64::NAN),
        };
        Ok(Observation {
            u,
            h_cl,
            lyapunov,
            y_a,
            y_u,
            w,
        })
    }
}

/// Integral action on the passive output, `ẋ_c = K_i y_a`, `u = −x_c`.
#[derive(Debug, Clone)]
pub struct BaselineLoop {
    plant: PhSystem,
    ki: Matrix,
}

impl BaselineLoop {
    pub fn new(plant: &PhSystem, ki: Matrix) -> Self {
        Self {
            plant: plant.clone(),
            ki,
        }
    }

    fn split(&self, s: &Vector) -> (Vector, Vector) {
        let n = self.plant.partition().n();
        (s.rows(0, n).clone_owned(), s.rows(n, s.len() - n).clone_owned())
    }
}

impl Dynamics for BaselineLoop {
    fn dim(&self) -> usize {
        self.plant.partition().n() + self.plant.partition().m()
    }

    fn state_labels(&self) -> Vec<Label> {
        let p = self.plant.partition();
        let mut l = numbered("x", p.n(), Panel::Configuration);
        l.extend(numbered("x_c", p.m(), Panel::Controller));
        l
    }

    fn input_labels(&self) -> Vec<String> {
        inputs(self.plant.partition().m())
    }

    fn rhs(&self, s: &Vector, active: Activity) -> Result<Vector> {
        ensure_len("loop state", self.dim(), s.len())?;
        let (x, xc) = self.split(s);
        let (u, xc_dot) = baseline_passive_iac(&self.plant, &self.ki, &x, &xc)?;
        let x_dot = self.plant.drift_active(&x, &u, active)?;
        Ok(concat(&[&x_dot, &xc_dot]))
    }

    fn lyapunov(&self, _s: &Vector, _active: Activity) -> Result<Option<f64>> {
        Ok(None)
    }

    fn observe(&self, s: &Vector, _active: Activity) -> Result<Observation> {
        let (x, xc) = self.split(s);
        let (u, _) = baseline_passive_iac(&self.plant, &self.ki, &x, &xc)?;
        let (y_a, _) = self.plant.outputs(&x)?;
        Ok(Observation {
            u,
            h_cl: self.plant.hamiltonian().value(&x),
            lyapunov: f64::NAN,
            y_a: y_a.norm(),
            y_u: f64::NAN,
            w: s.clone(),
        })
    }
}

/// Controller driving a [`MechLoop`].
#[derive(Debug, Clone)]
pub enum MechController {
    Full(IacGains),
    /// Damping-free law acting on the partitioned plant.
    Simplified(SimplifiedIac, PhSystem),
}

/// A shaped mechanical plant integrated in the physical coordinates
/// `(q, 𝐩, x_c)`.
#[derive(Debug, Clone)]
pub struct MechLoop {
    tm: TransformedMech,
    law: MechController,
    cert: Certificate,
    names: Vec<String>,
}

impl MechLoop {
    pub fn new(tm: &TransformedMech, gains: &IacGains) -> Result<Self> {
        let closed = mech_closed_loop(tm, gains)?;
        Ok(Self::assemble(tm, MechController::Full(gains.clone()), closed))
    }

    /// Damping-free law; `r_aa` (the true actuated damping) only feeds the
    /// certificate.
    pub fn simplified(tm: &TransformedMech, law: SimplifiedIac, r_aa: &Matrix) -> Result<Self> {
        let gains = law.equivalent_gains(r_aa)?;
        let closed = mech_closed_loop(tm, &gains)?;
        let plant = partition_mech(tm)?;
        Ok(Self::assemble(tm, MechController::Simplified(law, plant), closed))
    }

    fn assemble(tm: &TransformedMech, law: MechController, closed: ClosedLoop) -> Self {
        let l = tm.system().dof();
        Self {
            tm: tm.clone(),
            law,
            cert: Certificate::new(closed),
            names: (1..=l).map(|i| format!("q{i}")).collect(),
        }
    }

    pub fn with_names(mut self, names: &[&str]) -> Self {
        if names.len() == self.names.len() {
            self.names = names.iter().map(|s| s.to_string()).collect();
        }
        self
    }

    pub fn certificate(&self) -> &Certificate {
        &self.cert
    }

    pub fn transformed(&self) -> &TransformedMech {
        &self.tm
    }

    /// Loop state `(q, 𝐩, x_c)`.
    pub fn initial_state(&self, q: &Vector, p_bold: &Vector, x_c: &Vector) -> Vector {
        concat(&[q, p_bold, x_c])
    }

    fn split(&self, s: &Vector) -> (Vector, Vector, Vector) {
        let l = self.tm.system().dof();
        let m = self.tm.system().inputs();
        (
            s.rows(0, l).clone_owned(),
            s.rows(l, l).clone_owned(),
            s.rows(2 * l, m).clone_owned(),
        )
    }

    fn transformed_state(&self, s: &Vector) -> Result<(Vector, Vector, Vector, Vector)> {
        let (q, pb, xc) = self.split(s);
        let p = self.tm.to_transformed(&q, &pb)?;
        Ok((q, pb, p, xc))
    }

    fn control(&self, q: &Vector, p: &Vector, xc: &Vector) -> Result<(Vector, Vector)> {
        match &self.law {
            MechController::Full(g) => mech_iac(&self.tm, g, q, p, xc),
            MechController::Simplified(law, plant) => law.controller(plant, &concat(&[p, q]), xc),
        }
    }

    fn w_of(&self, q: &Vector, p: &Vector, xc: &Vector) -> Vector {
        let m = self.tm.system().inputs();
        concat(&[p, q, &(p.rows(0, m) - xc)])
    }
}

impl Dynamics for MechLoop {
    fn dim(&self) -> usize {
        2 * self.tm.system().dof() + self.tm.system().inputs()
    }

    fn state_labels(&self) -> Vec<Label> {
        let mut l: Vec<Label> = self.names.iter().map(|n| Label::new(n.clone(), Panel::Configuration)).collect();
        l.extend(self.names.iter().map(|n| Label::new(format!("p_{n}"), Panel::Momentum)));
        l.extend(numbered("x_c", self.tm.system().inputs(), Panel::Controller));
        l
    }

    fn input_labels(&self) -> Vec<String> {
        inputs(self.tm.system().inputs())
    }

    fn rhs(&self, s: &Vector, active: Activity) -> Result<Vector> {
        ensure_len("loop state", self.dim(), s.len())?;
        let (q, pb, p, xc) = self.transformed_state(s)?;
        let (u, xc_dot) = self.control(&q, &p, &xc)?;
        let (q_dot, pb_dot) = self.tm.system().drift(&q, &pb, &u, active.matched)?;
        Ok(concat(&[&q_dot, &pb_dot, &xc_dot]))
    }

    fn lyapunov(&self, s: &Vector, active: Activity) -> Result<Option<f64>> {
        let (q, _, p, xc) = self.transformed_state(s)?;
        self.cert.lyapunov(&self.w_of(&q, &p, &xc), active)
    }

    fn observe(&self, s: &Vector, active: Activity) -> Result<Observation> {
        let (q, _, p, xc) = self.transformed_state(s)?;
        let (u, _) = self.control(&q, &p, &xc)?;
        let w = self.w_of(&q, &p, &xc);
        let (h_cl, lyapunov, y_a, y_u) = self.cert.observe(&w, active)?;
        Ok(Observation {
            u,
            h_cl,
            lyapunov,
            y_a,
            y_u,
            w,
        })
    }
}

type VectorField = dyn Fn(&Vector, Activity) -> Vector + Send + Sync;
type Energy = dyn Fn(&Vector) -> f64 + Send + Sync;

/// Vector field given by a closure.
#[derive(Clone)]
pub struct FnDynamics {
    dim: usize,
    f: Arc<VectorField>,
    energy: Option<Arc<Energy>>,
}

impl std::fmt::Debug for FnDynamics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnDynamics").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl FnDynamics {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&Vector, Activity) -> Vector + Send + Sync + 'static,
    {
        Self {
            dim,
            f: Arc::new(f),
            energy: None,
        }
    }

    /// Energy recorded as `H_cl`.
    pub fn with_energy<E>(mut self, e: E) -> Self
    where
        E: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        self.energy = Some(Arc::new(e));
        self
    }
}

impl Dynamics for FnDynamics {
    fn dim(&self) -> usize {
        self.dim
    }

    fn state_labels(&self) -> Vec<Label> {
        numbered("x", self.dim, Panel::Configuration)
    }

    fn input_labels(&self) -> Vec<String> {
        Vec::new()
    }

    fn rhs(&self, x: &Vector, active: Activity) -> Result<Vector> {
        ensure_len("state", self.dim, x.len())?;
        Ok((self.f)(x, active))
    }

    fn lyapunov(&self, _x: &Vector, _active: Activity) -> Result<Option<f64>> {
        Ok(None)
    }

    fn observe(&self, x: &Vector, _active: Activity) -> Result<Observation> {
        Ok(Observation {
            u: Vector::zeros(0),
            h_cl: self.energy.as_ref().map_or(f64::NAN, |e| e(x)),
            lyapunov: f64::NAN,
            y_a: f64::NAN,
            y_u: f64::NAN,
            w: x.clone(),
        })
    }
}
