//! Disturbed port-Hamiltonian plants.
//!
//! A plant has the partitioned form
//!
//! ```text
//! ẋ = [J(x) − R(x)] ∇H(x) + col(u − d_a(x), −d_u(x))
//! y_a = ∇_{x_a} H,  y_u = ∇_{x_u} H
//! ```
//!
//! where `x = col(x_a, x_u)` splits into `m` actuated and `s` unactuated
//! states. Matrices and energies are supplied as evaluator callbacks so the
//! same machinery serves hand-written plants and transformed mechanical
//! systems alike.

mod assumptions;
mod gradient;

pub use assumptions::{
    MatchedReport, MinimumReport, PropertyOutcome, StructureReport, StructureScan, UnmatchedReport,
    Violation,
};
pub use gradient::{
    check_gradient, finite_diff_gradient, finite_diff_gradient_of, finite_diff_jacobian, GradientReport,
    DEFAULT_FD_STEP,
};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::linalg::{Matrix, Vector};

/// Callback returning a matrix for a given full state.
pub type MatrixFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Actuated/unactuated split of the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    m: usize,
    s: usize,
}

impl Partition {
    pub fn new(m: usize, s: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config(
                "partition needs at least one actuated state".into(),
            ));
        }
        Ok(Self { m, s })
    }

    /// Number of actuated states.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of unactuated states.
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.m + self.s
    }

    pub fn actuated<'a>(&self, x: &'a Vector) -> nalgebra::DVectorView<'a, f64> {
        x.rows(0, self.m)
    }

    pub fn unactuated<'a>(&self, x: &'a Vector) -> nalgebra::DVectorView<'a, f64> {
        x.rows(self.m, self.s)
    }
}

/// A matrix that is either constant or evaluated from the state.
#[derive(Clone)]
pub enum StateMatrix {
    Constant(Matrix),
    Field(MatrixFn),
}

impl StateMatrix {
    pub fn constant(m: Matrix) -> Self {
        StateMatrix::Constant(m)
    }

    pub fn field<F>(f: F) -> Self
    where
        F: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    {
        StateMatrix::Field(Arc::new(f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        StateMatrix::Constant(Matrix::zeros(rows, cols))
    }

    pub fn eval(&self, x: &Vector) -> Matrix {
        match self {
            StateMatrix::Constant(m) => m.clone(),
            StateMatrix::Field(f) => f(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, StateMatrix::Constant(_))
    }

    pub fn as_constant(&self) -> Option<&Matrix> {
        match self {
            StateMatrix::Constant(m) => Some(m),
            StateMatrix::Field(_) => None,
        }
    }
}

impl fmt::Debug for StateMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateMatrix::Constant(m) => write!(f, "Constant({m:?})"),
            StateMatrix::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl From<Matrix> for StateMatrix {
    fn from(m: Matrix) -> Self {
        StateMatrix::Constant(m)
    }
}

/// The four blocks of a partitioned matrix evaluated at one state.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub aa: Matrix,
    pub au: Matrix,
    pub ua: Matrix,
    pub uu: Matrix,
}

/// State-dependent `n × n` matrix with the `aa/au/ua/uu` block layout.
#[derive(Clone)]
pub struct PartitionedMatrix {
    partition: Partition,
    assemble: MatrixFn,
}

impl PartitionedMatrix {
    /// Interconnection matrix: `ua = −auᵀ`.
    pub fn interconnection(
        partition: Partition,
        aa: StateMatrix,
        au: StateMatrix,
        uu: StateMatrix,
    ) -> Self {
        Self::from_blocks_with(partition, aa, au, uu, -1.0)
    }

    /// Dissipation matrix: `ua = auᵀ`.
    pub fn dissipation(
        partition: Partition,
        aa: StateMatrix,
        au: StateMatrix,
        uu: StateMatrix,
    ) -> Self {
        Self::from_blocks_with(partition, aa, au, uu, 1.0)
    }

    fn from_blocks_with(
        partition: Partition,
        aa: StateMatrix,
        au: StateMatrix,
        uu: StateMatrix,
        ua_sign: f64,
    ) -> Self {
        let assemble = move |x: &Vector| {
            let au_v = au.eval(x);
            assemble_blocks(partition, &aa.eval(x), &au_v, &(au_v.transpose() * ua_sign), &uu.eval(x))
        };
        Self {
            partition,
            assemble: Arc::new(assemble),
        }
    }

    /// Four independent blocks; structure is not enforced and must be audited.
    pub fn from_blocks(
        partition: Partition,
        aa: StateMatrix,
        au: StateMatrix,
        ua: StateMatrix,
        uu: StateMatrix,
    ) -> Self {
        let assemble = move |x: &Vector| {
            assemble_blocks(partition, &aa.eval(x), &au.eval(x), &ua.eval(x), &uu.eval(x))
        };
        Self {
            partition,
            assemble: Arc::new(assemble),
        }
    }

    /// Evaluator returning the assembled `n × n` matrix directly.
    pub fn from_full<F>(partition: Partition, f: F) -> Self
    where
        F: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    {
        Self {
            partition,
            assemble: Arc::new(f),
        }
    }

    pub fn zeros(partition: Partition) -> Self {
        let n = partition.n();
        Self::from_full(partition, move |_| Matrix::zeros(n, n))
    }

    pub fn eval(&self, x: &Vector) -> Matrix {
        (self.assemble)(x)
    }

    pub fn blocks(&self, x: &Vector) -> Blocks {
        split_blocks(self.partition, &self.eval(x))
    }
}

impl fmt::Debug for PartitionedMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartitionedMatrix")
            .field("partition", &self.partition)
            .finish_non_exhaustive()
    }
}

fn assemble_blocks(p: Partition, aa: &Matrix, au: &Matrix, ua: &Matrix, uu: &Matrix) -> Matrix {
    let (m, n) = (p.m(), p.n());
    assert_eq!(aa.shape(), (m, m), "aa block shape");
    assert_eq!(au.shape(), (m, p.s()), "au block shape");
    assert_eq!(ua.shape(), (p.s(), m), "ua block shape");
    assert_eq!(uu.shape(), (p.s(), p.s()), "uu block shape");
    let mut out = Matrix::zeros(n, n);
    out.view_mut((0, 0), (m, m)).copy_from(aa);
    out.view_mut((0, m), (m, p.s())).copy_from(au);
    out.view_mut((m, 0), (p.s(), m)).copy_from(ua);
    out.view_mut((m, m), (p.s(), p.s())).copy_from(uu);
    out
}

pub(crate) fn split_blocks(p: Partition, full: &Matrix) -> Blocks {
    let (m, s) = (p.m(), p.s());
    Blocks {
        aa: full.view((0, 0), (m, m)).clone_owned(),
        au: full.view((0, m), (m, s)).clone_owned(),
        ua: full.view((m, 0), (s, m)).clone_owned(),
        uu: full.view((m, m), (s, s)).clone_owned(),
    }
}

/// Energy function with its gradient and, optionally, its Hessian.
#[derive(Clone)]
pub struct HamiltonianModel {
    value: ScalarFn,
    grad: VectorFn,
    hess: Option<MatrixFn>,
}

impl HamiltonianModel {
    pub fn new<V, G>(value: V, grad: G) -> Self
    where
        V: Fn(&Vector) -> f64 + Send + Sync + 'static,
        G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            grad: Arc::new(grad),
            hess: None,
        }
    }

    pub fn with_hessian<F>(mut self, hess: F) -> Self
    where
        F: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    {
        self.hess = Some(Arc::new(hess));
        self
    }

    /// `H(x) = ½ (x − c)ᵀ P (x − c)` with symmetric `P`.
    pub fn quadratic(p: Matrix, center: Vector) -> Self {
        let (p1, c1) = (p.clone(), center.clone());
        let (p2, c2) = (p.clone(), center);
        Self::new(
            move |x| {
                let e = x - &c1;
                0.5 * e.dot(&(&p1 * &e))
            },
            move |x| &p2 * (x - &c2),
        )
        .with_hessian(move |_| p.clone())
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        (self.grad)(x)
    }

    pub fn hessian(&self, x: &Vector) -> Option<Matrix> {
        self.hess.as_ref().map(|h| h(x))
    }

    pub fn has_hessian(&self) -> bool {
        self.hess.is_some()
    }
}

impl fmt::Debug for HamiltonianModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianModel")
            .field("hessian", &self.hess.is_some())
            .finish_non_exhaustive()
    }
}

/// Matched disturbance `d_a = G_d(x) d̄_a`.
#[derive(Debug, Clone)]
pub struct MatchedDisturbance {
    pub gd: StateMatrix,
    pub d_bar: Vector,
}

impl MatchedDisturbance {
    pub fn new(gd: StateMatrix, d_bar: Vector) -> Self {
        Self { gd, d_bar }
    }

    /// A constant input-channel disturbance `d_a ≡ d`, written as `G_d = −I`,
    /// `d̄_a = −d`.
    pub fn constant(d: Vector) -> Self {
        let m = d.len();
        Self {
            gd: StateMatrix::Constant(-Matrix::identity(m, m)),
            d_bar: -d,
        }
    }
}

/// Activation times (s) of the step disturbances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub matched_on: f64,
    pub unmatched_on: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            matched_on: 0.0,
            unmatched_on: 0.0,
        }
    }
}

impl Schedule {
    pub fn at(t0: f64) -> Self {
        Self {
            matched_on: t0,
            unmatched_on: t0,
        }
    }

    pub fn activity(&self, t: f64) -> Activity {
        Activity {
            matched: t >= self.matched_on,
            unmatched: t >= self.unmatched_on,
        }
    }
}

/// Which disturbances act at a given instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Activity {
    pub matched: bool,
    pub unmatched: bool,
}

impl Activity {
    pub const NONE: Activity = Activity {
        matched: false,
        unmatched: false,
    };
    pub const ALL: Activity = Activity {
        matched: true,
        unmatched: true,
    };
}

/// Matched and unmatched disturbance descriptions with a step schedule.
///
/// The unmatched disturbance is stored as the constant `d̄_u`; its injection
/// direction `(J_au + R_au)ᵀ(x)` is recomputed from the plant at every call.
#[derive(Debug, Clone, Default)]
pub struct DisturbanceModel {
    pub matched: Option<MatchedDisturbance>,
    pub unmatched: Option<Vector>,
    pub schedule: Schedule,
}

impl DisturbanceModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn matched(gd: StateMatrix, d_bar: Vector) -> Self {
        Self {
            matched: Some(MatchedDisturbance::new(gd, d_bar)),
            ..Self::default()
        }
    }

    pub fn unmatched(d_bar_u: Vector) -> Self {
        Self {
            unmatched: Some(d_bar_u),
            ..Self::default()
        }
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_matched(mut self, matched: MatchedDisturbance) -> Self {
        self.matched = Some(matched);
        self
    }

    pub fn with_unmatched(mut self, d_bar_u: Vector) -> Self {
        self.unmatched = Some(d_bar_u);
        self
    }
}

/// A disturbed port-Hamiltonian plant stabilised at `x_star`.
#[derive(Debug, Clone)]
pub struct PhSystem {
    partition: Partition,
    j: PartitionedMatrix,
    r: PartitionedMatrix,
    h: HamiltonianModel,
    dist: DisturbanceModel,
    x_star: Vector,
}

/// Tolerance on `|∇H(x_star)|` accepted at construction.
pub const STATIONARITY_TOL: f64 = 1e-9;

impl PhSystem {
    pub fn new(
        partition: Partition,
        j: PartitionedMatrix,
        r: PartitionedMatrix,
        h: HamiltonianModel,
        dist: DisturbanceModel,
        x_star: Vector,
    ) -> Result<Self> {
        let n = partition.n();
        ensure_len("x_star", n, x_star.len())?;
        let jx = j.eval(&x_star);
        let rx = r.eval(&x_star);
        if jx.shape() != (n, n) {
            return Err(Error::Config(format!(
                "interconnection matrix is {:?}, expected {n}x{n}",
                jx.shape()
            )));
        }
        if rx.shape() != (n, n) {
            return Err(Error::Config(format!(
                "dissipation matrix is {:?}, expected {n}x{n}",
                rx.shape()
            )));
        }
        let g = h.gradient(&x_star);
        ensure_len("Hamiltonian gradient", n, g.len())?;
        let g_norm = g.norm();
        if !(g_norm <= STATIONARITY_TOL) {
            return Err(Error::Config(format!(
                "x_star is not a stationary point of H: |∇H(x_star)| = {g_norm:e}"
            )));
        }
        let sys = Self {
            partition,
            j,
            r,
            h,
            dist,
            x_star,
        };
        sys.validate_disturbance()?;
        Ok(sys)
    }

    fn validate_disturbance(&self) -> Result<()> {
        let m = self.partition.m();
        if let Some(md) = &self.dist.matched {
            if md.d_bar.len() != m {
                return Err(Error::Config(format!(
                    "matched disturbance has length {}, partition has m = {m}",
                    md.d_bar.len()
                )));
            }
            let gd = md.gd.eval(&self.x_star);
            if gd.shape() != (m, m) {
                return Err(Error::Config(format!(
                    "G_d is {:?}, expected {m}x{m}",
                    gd.shape()
                )));
            }
        }
        if let Some(du) = &self.dist.unmatched {
            if du.len() != m {
                return Err(Error::Config(format!(
                    "unmatched disturbance d̄_u has length {}, expected m = {m}",
                    du.len()
                )));
            }
        }
        Ok(())
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn interconnection(&self) -> &PartitionedMatrix {
        &self.j
    }

    pub fn dissipation(&self) -> &PartitionedMatrix {
        &self.r
    }

    pub fn hamiltonian(&self) -> &HamiltonianModel {
        &self.h
    }

    pub fn disturbance(&self) -> &DisturbanceModel {
        &self.dist
    }

    pub fn x_star(&self) -> &Vector {
        &self.x_star
    }

    /// Same plant with a different disturbance model.
    pub fn with_disturbance(&self, dist: DisturbanceModel) -> Result<Self> {
        let sys = Self {
            dist,
            ..self.clone()
        };
        sys.validate_disturbance()?;
        Ok(sys)
    }

    fn check_state(&self, x: &Vector) -> Result<()> {
        ensure_len("plant state", self.partition.n(), x.len())
    }

    /// `(J_au + R_au)ᵀ(x)`, the unmatched injection direction (s × m).
    pub fn unmatched_direction(&self, x: &Vector) -> Matrix {
        let jb = self.j.blocks(x);
        let rb = self.r.blocks(x);
        (jb.au + rb.au).transpose()
    }

    /// `d_a(x) = G_d(x) d̄_a`, or zero when no matched model exists.
    pub fn matched_disturbance(&self, x: &Vector) -> Vector {
        match &self.dist.matched {
            Some(md) => md.gd.eval(x) * &md.d_bar,
            None => Vector::zeros(self.partition.m()),
        }
    }

    /// `d_u(x) = (J_au + R_au)ᵀ(x) d̄_u`, or zero.
    pub fn unmatched_disturbance(&self, x: &Vector) -> Vector {
        match &self.dist.unmatched {
            Some(du) => self.unmatched_direction(x) * du,
            None => Vector::zeros(self.partition.s()),
        }
    }

    /// Plant vector field with disturbances switched by the schedule at `t`.
    pub fn drift(&self, x: &Vector, u: &Vector, t: f64) -> Result<Vector> {
        if !(t >= 0.0) {
            return Err(Error::Precondition(format!("time must be non-negative, got {t}")));
        }
        self.drift_active(x, u, self.dist.schedule.activity(t))
    }

    /// Plant vector field with an explicit disturbance activity.
    pub fn drift_active(&self, x: &Vector, u: &Vector, active: Activity) -> Result<Vector> {
        self.check_state(x)?;
        ensure_len("plant input", self.partition.m(), u.len())?;
        let (m, s) = (self.partition.m(), self.partition.s());
        let jx = self.j.eval(x);
        let rx = self.r.eval(x);
        let mut dx = (jx - &rx) * self.h.gradient(x);
        let mut top = dx.rows_mut(0, m);
        top += u;
        if active.matched && self.dist.matched.is_some() {
            top -= self.matched_disturbance(x);
        }
        if active.unmatched {
            if let Some(du) = &self.dist.unmatched {
                let jb = self.j.blocks(x);
                let injection = (jb.au + rx.view((0, m), (m, s))).transpose() * du;
                let mut bottom = dx.rows_mut(m, s);
                bottom -= injection;
            }
        }
        Ok(dx)
    }

    /// `(y_a, y_u) = (∇_{x_a}H, ∇_{x_u}H)`.
    pub fn outputs(&self, x: &Vector) -> Result<(Vector, Vector)> {
        self.check_state(x)?;
        let g = self.h.gradient(x);
        let (m, s) = (self.partition.m(), self.partition.s());
        Ok((g.rows(0, m).clone_owned(), g.rows(m, s).clone_owned()))
    }
}
