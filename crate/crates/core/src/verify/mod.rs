//! Seeded numerical audits of the closed-loop stability claims.
//!
//! Each audit samples states in a box around the relevant equilibrium,
//! checks the algebraic identities and sign conditions there, and runs a
//! decay simulation from a perturbed start.

mod report;

pub use report::{AuditReport, Check, REPORT_SCHEMA_VERSION};

use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::iac::{
    build_closed_loop, controller, equilibrium_matched, equilibrium_mixed, equilibrium_unmatched,
    ClosedLoop, EquilibriumPrediction, IacGains, ShiftedLyapunov,
};
use crate::linalg::{concat, max_abs, min_sym_eigenvalue, Vector};
use crate::mech::{mech_closed_loop, mech_equilibrium, mech_iac, partition_mech, MechanicalSystem, TransformedMech};
use crate::ph::{
    finite_diff_gradient_of, Activity, DisturbanceModel, MatchedDisturbance, PhSystem, StateMatrix,
    DEFAULT_FD_STEP,
};
use crate::sim::{check_convergence, integrate, Dynamics, IacLoop, MechLoop, Realization, Scenario};

/// Sampling and simulation settings shared by the audits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditOptions {
    pub seed: u64,
    pub samples: usize,
    /// Half-width of the sampling box (∞-norm) around the equilibrium.
    pub half_width: f64,
    /// Half-width of the perturbation used for decay runs.
    pub perturbation: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Final distance to the equilibrium accepted by decay runs.
    pub decay_tol: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            samples: 100,
            half_width: 5.0,
            perturbation: 1.0,
            horizon: 60.0,
            dt: 5e-3,
            decay_tol: 1e-3,
        }
    }
}

/// Relative tolerance of algebraic identities.
const IDENTITY_TOL: f64 = 1e-9;
/// Relative tolerance of gradient checks.
const GRADIENT_TOL: f64 = 1e-6;
/// Accepted slack `bound − Ẇ` (negative side) per sample.
const RATE_SLACK: f64 = 1e-9;
const EQUILIBRIUM_TOL: f64 = 1e-9;

fn rng(opts: &AuditOptions) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed)
}

fn sample_box(rng: &mut ChaCha8Rng, center: &Vector, half: f64) -> Vector {
    Vector::from_iterator(center.len(), center.iter().map(|c| c + rng.random_range(-half..half)))
}

fn samples_around(rng: &mut ChaCha8Rng, center: &Vector, opts: &AuditOptions) -> Vec<Vector> {
    (0..opts.samples).map(|_| sample_box(rng, center, opts.half_width)).collect()
}

fn rel(a: &Vector, b: &Vector) -> f64 {
    max_abs(&(a - b)) / (1.0 + max_abs(b))
}

/// Worst value of `f` over `samples` with `f ≤ tol` required.
fn worst_over<F>(name: &str, samples: &[Vector], tol: f64, mut f: F) -> Check
where
    F: FnMut(&Vector) -> Result<f64>,
{
    let mut worst = 0.0_f64;
    let mut at = None;
    for w in samples {
        match f(w) {
            Ok(v) if v.is_finite() => {
                if v > worst || at.is_none() {
                    worst = worst.max(v);
                    if v > tol || at.is_none() {
                        at = Some(w.as_slice().to_vec());
                    }
                }
            }
            Ok(v) => return Check::fail(name, v, Some(w.as_slice().to_vec()), "non-finite value"),
            Err(e) => return Check::fail(name, f64::NAN, Some(w.as_slice().to_vec()), &e.to_string()),
        }
    }
    let passed = worst <= tol;
    Check {
        name: name.to_string(),
        passed,
        worst,
        sample: if passed { None } else { at },
        note: format!("tolerance {tol:e}"),
    }
}

/// Closed-loop drift assembled from the plant and controller separately.
fn composed_drift(closed: &ClosedLoop, w: &Vector, d_a: &Vector, d_u: &Vector) -> Result<Vector> {
    let plant = closed.plant();
    let p = plant.partition();
    let (x, xc) = closed.from_w(w);
    let (u, xc_dot) = controller(plant, closed.gains(), &x, &xc)?;
    let mut x_dot = plant.drift_active(&x, &u, Activity::NONE)?;
    let da = closed.matched_term(&x, d_a);
    let du = plant.unmatched_direction(&x) * d_u;
    {
        let mut top = x_dot.rows_mut(0, p.m());
        top -= &da;
    }
    {
        let mut mid = x_dot.rows_mut(p.m(), p.s());
        mid -= &du;
    }
    let wc_dot = x_dot.rows(0, p.m()) - xc_dot;
    Ok(concat(&[&x_dot, &wc_dot]))
}

fn structure_checks(report: &mut AuditReport, closed: &ClosedLoop, samples: &[Vector]) {
    let n = closed.plant().partition().n();
    let plant_x: Vec<Vector> = samples.iter().map(|w| w.rows(0, n).clone_owned()).collect();
    match closed.plant().check_structure(&plant_x) {
        Ok(r) => {
            report.push(Check::from_outcome("plant J skew", &r.skew));
            report.push(Check::from_outcome("plant R symmetric", &r.symmetry));
            report.push(Check::psd("plant R PSD", &r.psd));
        }
        Err(e) => report.push(Check::fail("plant structure", f64::NAN, None, &e.to_string())),
    }
    match closed.check_structure(samples) {
        Ok(r) => {
            report.push(Check::from_outcome("J_cl skew", &r.skew));
            report.push(Check::psd("R_cl PSD", &r.psd));
        }
        Err(e) => report.push(Check::fail("closed-loop structure", f64::NAN, None, &e.to_string())),
    }
}

fn gradient_check(report: &mut AuditReport, closed: &ClosedLoop, samples: &[Vector]) {
    report.push(worst_over("closed-loop energy gradient", samples, GRADIENT_TOL, |w| {
        let analytic = closed.gradient(w)?;
        let numeric = finite_diff_gradient_of(|v| closed.hamiltonian(v).unwrap_or(f64::NAN), w, DEFAULT_FD_STEP)?;
        Ok(max_abs(&(&analytic - &numeric)) / max_abs(&analytic).max(1.0))
    }));
}

fn equilibrium_check(report: &mut AuditReport, pred: &Result<EquilibriumPrediction>) {
    match pred {
        Ok(p) => report.push(Check::at_most("equilibrium residual", p.residual, EQUILIBRIUM_TOL)),
        Err(e) => report.push(Check::fail("equilibrium residual", f64::NAN, None, &e.to_string())),
    }
}

fn lyapunov_checks(report: &mut AuditReport, closed: &ClosedLoop, pred: &EquilibriumPrediction, samples: &[Vector]) {
    let lyap = match ShiftedLyapunov::new(closed, pred) {
        Ok(l) => l,
        Err(e) => {
            report.push(Check::fail("Lyapunov construction", f64::NAN, None, &e.to_string()));
            return;
        }
    };
    let w_bar = pred.w_bar();
    report.push(worst_over("Lyapunov positive off equilibrium", samples, 0.0, |w| {
        let v = lyap.value(w)?;
        Ok(if (w - &w_bar).norm() > 1e-6 && v <= 0.0 { 1.0 - v } else { 0.0 })
    }));
    report.push(worst_over("Lyapunov rate below bound", samples, RATE_SLACK, |w| {
        let (rate, bound) = lyap.rate_and_bound(w)?;
        Ok((rate - bound) / (1.0 + bound.abs()))
    }));
    report.push(worst_over("Lyapunov rate bound non-positive", samples, 0.0, |w| Ok(lyap.bound(w)?.max(0.0))));
    report.push(worst_over("drift equals (J_cl − R_cl)∇W", samples, IDENTITY_TOL, |w| {
        let (j, r) = closed.matrices(w)?;
        let shifted = (j - r) * lyap.gradient(w)?;
        let drift = closed.drift_with(w, Some(&pred.d_bar_a()), Some(&pred.d_bar_u()))?;
        Ok(rel(&shifted, &drift))
    }));
}

fn decay_run(
    report: &mut AuditReport,
    dynamics: Arc<dyn Dynamics>,
    start: Vector,
    pred: &EquilibriumPrediction,
    opts: &AuditOptions,
    output: &str,
) {
    let run = Scenario::new("audit decay", dynamics, start, opts.horizon, opts.dt)
        .and_then(|s| s.with_stride(((opts.horizon / opts.dt) / 200.0).max(1.0) as usize))
        .and_then(|s| integrate(&s));
    match run {
        Ok(traj) => {
            let v = check_convergence(&traj, pred, opts.decay_tol);
            report.push(Check {
                name: "decay run reaches equilibrium".into(),
                passed: v.converged,
                worst: v.final_error,
                sample: None,
                note: format!("horizon {} s, tolerance {:e}", opts.horizon, opts.decay_tol),
            });
            report.push(Check::at_most("decay run Lyapunov monotone", v.max_lyapunov_increase, crate::sim::LYAPUNOV_INCREASE_TOL));
            let y = if output == "|Y_u|" { &traj.y_u } else { &traj.y_a };
            let last = y.last().copied().unwrap_or(f64::NAN);
            report.push(Check::at_most(&format!("{output} vanishes"), last, opts.decay_tol));
        }
        Err(e) => report.push(Check::fail("decay run reaches equilibrium", f64::NAN, None, &e.to_string())),
    }
}

fn loop_start(closed: &ClosedLoop, pred: &EquilibriumPrediction, rng: &mut ChaCha8Rng, opts: &AuditOptions) -> Vector {
    let w0 = sample_box(rng, &pred.w_bar(), opts.perturbation);
    let (x, xc) = closed.from_w(&w0);
    concat(&[&x, &xc])
}

/// Plant carrying constant disturbances. Without a matched model of its own
/// the plant takes `G_d = J_c1 − R_c1`.
fn with_constants(
    plant: &PhSystem,
    gains: &IacGains,
    d_a: Option<&Vector>,
    d_u: Option<&Vector>,
) -> Result<PhSystem> {
    let mut dist = DisturbanceModel::none();
    if let Some(da) = d_a {
        let gd = match &plant.disturbance().matched {
            Some(m) => m.gd.clone(),
            None => {
                let (jc1, rc1) = (gains.jc1().clone(), gains.rc1().clone());
                StateMatrix::field(move |x| jc1.eval(x) - rc1.eval(x))
            }
        };
        dist = dist.with_matched(MatchedDisturbance::new(gd, da.clone()));
    }
    if let Some(du) = d_u {
        dist = dist.with_unmatched(du.clone());
    }
    plant.with_disturbance(dist)
}

/// Closed-loop construction: structure, energy gradient and agreement of
/// the composed and assembled drifts.
pub fn audit_construction(plant: &PhSystem, gains: &IacGains, opts: &AuditOptions) -> AuditReport {
    let mut report = AuditReport::new("closed-loop construction", opts.seed);
    let closed = match build_closed_loop(plant, gains) {
        Ok(c) => c,
        Err(e) => {
            report.push(Check::fail("gain validity", f64::NAN, None, &e.to_string()));
            return report.finish();
        }
    };
    let m = plant.partition().m();
    let center = concat(&[plant.x_star(), &Vector::zeros(m)]);
    let mut r = rng(opts);
    let samples = samples_around(&mut r, &center, opts);
    report.push(worst_over("gain validity", &samples, 0.0, |w| {
        gains.evaluate(&closed.from_w(w).0).map(|_| 0.0)
    }));
    structure_checks(&mut report, &closed, &samples);
    gradient_check(&mut report, &closed, &samples);
    let dist = plant.disturbance();
    let da = dist.matched.as_ref().map_or_else(|| Vector::zeros(m), |d| d.d_bar.clone());
    let du = dist.unmatched.clone().unwrap_or_else(|| Vector::zeros(m));
    report.push(worst_over("composed drift equals closed-loop form", &samples, IDENTITY_TOL, |w| {
        let a = composed_drift(&closed, w, &da, &du)?;
        let b = closed.drift_with(w, Some(&da), Some(&du))?;
        Ok(rel(&a, &b))
    }));
    report.finish()
}

/// Matched disturbance rejection.
pub fn audit_matched(plant: &PhSystem, gains: &IacGains, d_bar_a: &Vector, opts: &AuditOptions) -> AuditReport {
    let mut report = AuditReport::new("matched disturbance rejection", opts.seed);
    let plant = match with_constants(plant, gains, Some(d_bar_a), None) {
        Ok(p) => p,
        Err(e) => {
            report.push(Check::fail("plant", f64::NAN, None, &e.to_string()));
            return report.finish();
        }
    };
    let mut r = rng(opts);
    let x_samples: Vec<Vector> = (0..opts.samples).map(|_| sample_box(&mut r, plant.x_star(), opts.half_width)).collect();
    match plant.check_matched_assumption(&x_samples) {
        Ok(rep) => report.push(Check {
            name: "G_d negative definite".into(),
            passed: rep.passed(),
            worst: rep.worst_margin,
            sample: None,
            note: rep.failure.unwrap_or_default(),
        }),
        Err(e) => report.push(Check::fail("G_d negative definite", f64::NAN, None, &e.to_string())),
    }
    let closed = match build_closed_loop(&plant, gains) {
        Ok(c) => c,
        Err(e) => {
            report.push(Check::fail("gain validity", f64::NAN, None, &e.to_string()));
            return report.finish();
        }
    };
    report.push(worst_over("G_d = J_c1 − R_c1", &x_samples, IDENTITY_TOL, |x| {
        let k = gains.evaluate(x)?;
        let gd = plant.disturbance().matched.as_ref().expect("set above").gd.eval(x);
        Ok((gd - (&k.jc1 - &k.rc1)).amax() / (1.0 + k.rc1.amax()))
    }));
    let m = plant.partition().m();
    let loop_samples: Vec<Vector> = x_samples.iter().map(|x| concat(&[x, &Vector::zeros(m)])).collect();
    structure_checks(&mut report, &closed, &loop_samples);
    let pred = equilibrium_matched(&closed, d_bar_a);
    equilibrium_check(&mut report, &pred);
    if let Ok(pred) = pred {
        let samples = samples_around(&mut r, &pred.w_bar(), opts);
        lyapunov_checks(&mut report, &closed, &pred, &samples);
        match IacLoop::new(&plant, gains, Realization::Integrator) {
            Ok(lp) => {
                let start = loop_start(&closed, &pred, &mut r, opts);
                decay_run(&mut report, Arc::new(lp), start, &pred, opts, "|Y_a|");
            }
            Err(e) => report.push(Check::fail("decay run reaches equilibrium", f64::NAN, None, &e.to_string())),
        }
    }
    report.finish()
}

/// Unmatched disturbance rejection. `d_u_raw` is the disturbance acting on
/// the unactuated states; a constant `d̄_u` is fitted to it.
pub fn audit_unmatched<F>(plant: &PhSystem, gains: &IacGains, d_u_raw: F, opts: &AuditOptions) -> AuditReport
where
    F: Fn(&Vector) -> Vector,
{
    let mut report = AuditReport::new("unmatched disturbance rejection", opts.seed);
    let mut r = rng(opts);
    let x_samples: Vec<Vector> = (0..opts.samples).map(|_| sample_box(&mut r, plant.x_star(), opts.half_width)).collect();
    let rc2_norm = x_samples
        .iter()
        .map(|x| gains.rc2().eval(x).amax())
        .fold(0.0_f64, f64::max);
    report.push(Check {
        name: "R_c2 = 0".into(),
        passed: rc2_norm == 0.0,
        worst: rc2_norm,
        sample: None,
        note: "required for unmatched rejection".into(),
    });
    if rc2_norm != 0.0 {
        return report.finish();
    }
    let d_bar_u = match plant.check_unmatched_assumption(&d_u_raw, &x_samples) {
        Ok(rep) => {
            report.push(Check {
                name: "constant unmatched disturbance".into(),
                passed: rep.passed(),
                worst: rep.max_residual,
                sample: rep.worst_sample_index.filter(|_| !rep.passed()).map(|i| x_samples[i].as_slice().to_vec()),
                note: rep.failure.clone().unwrap_or_default(),
            });
            if !rep.passed() {
                return report.finish();
            }
            rep.d_bar_u()
        }
        Err(e) => {
            report.push(Check::fail("constant unmatched disturbance", f64::NAN, None, &e.to_string()));
            return report.finish();
        }
    };
    match plant.check_shifted_minimum(&d_bar_u) {
        Ok(rep) => report.push(Check {
            name: "shifted energy has isolated minimum".into(),
            passed: rep.passed(),
            worst: rep.gradient_norm,
            sample: None,
            note: rep.failure.unwrap_or_else(|| format!("smallest Hessian eigenvalue {:e}", rep.min_hessian_eigenvalue)),
        }),
        Err(e) => report.push(Check::fail("shifted energy has isolated minimum", f64::NAN, None, &e.to_string())),
    }
    let plant = match with_constants(plant, gains, None, Some(&d_bar_u)) {
        Ok(p) => p,
        Err(e) => {
            report.push(Check::fail("plant", f64::NAN, None, &e.to_string()));
            return report.finish();
        }
    };
    let closed = match build_closed_loop(&plant, gains) {
        Ok(c) => c,
        Err(e) => {
            report.push(Check::fail("gain validity", f64::NAN, None, &e.to_string()));
            return report.finish();
        }
    };
    let pred = equilibrium_unmatched(&closed, &d_bar_u);
    equilibrium_check(&mut report, &pred);
    if let Ok(pred) = pred {
        let samples = samples_around(&mut r, &pred.w_bar(), opts);
        let zero = Vector::zeros(d_bar_u.len());
        report.push(worst_over("composed drift equals closed-loop form", &samples, IDENTITY_TOL, |w| {
            let a = composed_drift(&closed, w, &zero, &d_bar_u)?;
            let b = closed.drift_with(w, None, Some(&d_bar_u))?;
            Ok(rel(&a, &b))
        }));
        lyapunov_checks(&mut report, &closed, &pred, &samples);
        match IacLoop::new(&plant, gains, Realization::Integrator) {
            Ok(lp) => {
                let start = loop_start(&closed, &pred, &mut r, opts);
                decay_run(&mut report, Arc::new(lp), start, &pred, opts, "|Y_u|");
            }
            Err(e) => report.push(Check::fail("decay run reaches equilibrium", f64::NAN, None, &e.to_string())),
        }
    }
    report.finish()
}

/// Simultaneous matched and unmatched rejection.
pub fn audit_mixed(
    plant: &PhSystem,
    gains: &IacGains,
    d_bar_a: &Vector,
    d_bar_u: &Vector,
    opts: &AuditOptions,
) -> AuditReport {
    let mut report = AuditReport::new("mixed disturbance rejection", opts.seed);
    let mut r = rng(opts);
    let plant = match with_constants(plant, gains, Some(d_bar_a), Some(d_bar_u)) {
        Ok(p) => p,
        Err(e) => {
            report.push(Check::fail("plant", f64::NAN, None, &e.to_string()));
            return report.finish();
        }
    };
    let closed = match build_closed_loop(&plant, gains) {
        Ok(c) => c,
        Err(e) => {
            report.push(Check::fail("gain validity", f64::NAN, None, &e.to_string()));
            return report.finish();
        }
    };
    let pred = equilibrium_mixed(&closed, d_bar_a, d_bar_u);
    equilibrium_check(&mut report, &pred);
    if let Ok(pred) = pred {
        let samples = samples_around(&mut r, &pred.w_bar(), opts);
        lyapunov_checks(&mut report, &closed, &pred, &samples);
        match IacLoop::new(&plant, gains, Realization::Integrator) {
            Ok(lp) => {
                let start = loop_start(&closed, &pred, &mut r, opts);
                decay_run(&mut report, Arc::new(lp), start, &pred, opts, "|Y_u|");
            }
            Err(e) => report.push(Check::fail("decay run reaches equilibrium", f64::NAN, None, &e.to_string())),
        }
    }
    report.finish()
}

/// Integral action on a shaped mechanical plant through the momentum
/// transformation.
pub fn audit_mechanical(sys: &MechanicalSystem, gains: &IacGains, opts: &AuditOptions) -> AuditReport {
    let mut report = AuditReport::new("mechanical integral action", opts.seed);
    let tm = TransformedMech::new(sys);
    let mut r = rng(opts);
    let l = sys.dof();
    let m = sys.inputs();
    let qp: Vec<(Vector, Vector)> = (0..opts.samples)
        .map(|_| {
            let q = sample_box(&mut r, sys.q_star(), opts.half_width);
            let pb = sample_box(&mut r, &Vector::zeros(l), opts.half_width);
            (q, pb)
        })
        .collect();
    match sys.check_model(&qp) {
        Ok(a) => report.push(Check {
            name: "mechanical model invariants".into(),
            passed: a.passed(),
            worst: a.worst_jacobian_error.max(a.worst_annihilation).max(a.worst_gyroscopic_skew),
            sample: None,
            note: a.failure.unwrap_or_else(|| format!("smallest inertia eigenvalue {:e}", a.min_inertia_eigenvalue)),
        }),
        Err(e) => report.push(Check::fail("mechanical model invariants", f64::NAN, None, &e.to_string())),
    }
    let flat: Vec<Vector> = qp.iter().map(|(q, p)| concat(&[q, p])).collect();
    let split = |v: &Vector| (v.rows(0, l).clone_owned(), v.rows(l, l).clone_owned());
    report.push(worst_over("energy invariant under momentum transform", &flat, 1e-10, |v| {
        let (q, pb) = split(v);
        let p = tm.to_transformed(&q, &pb)?;
        let hd = sys.hamiltonian(&q, &pb)?;
        Ok((tm.hamiltonian(&q, &p)? - hd).abs() / (1.0 + hd.abs()))
    }));
    report.push(worst_over("transformed drift matches physical drift", &flat, 1e-8, |v| {
        let (q, pb) = split(v);
        let u = Vector::from_element(m, 0.5);
        let (q_dot, pb_dot) = sys.drift(&q, &pb, &u, true)?;
        let p = tm.to_transformed(&q, &pb)?;
        let (tq, tp) = tm.drift(&q, &p, &u, true)?;
        let back = tm.physical_momentum_rate(&q, &p, &tq, &tp)?;
        Ok(rel(&tq, &q_dot).max(rel(&back, &pb_dot)))
    }));
    let closed = match mech_closed_loop(&tm, gains) {
        Ok(c) => c,
        Err(e) => {
            report.push(Check::fail("gain validity", f64::NAN, None, &e.to_string()));
            return report.finish();
        }
    };
    let plant = match partition_mech(&tm) {
        Ok(p) => p,
        Err(e) => {
            report.push(Check::fail("partitioned plant", f64::NAN, None, &e.to_string()));
            return report.finish();
        }
    };
    report.push(worst_over("mechanical law equals general law", &flat, IDENTITY_TOL, |v| {
        let (q, pb) = split(v);
        let p = tm.to_transformed(&q, &pb)?;
        let xc = pb.rows(0, m).clone_owned();
        let (u1, c1) = mech_iac(&tm, gains, &q, &p, &xc)?;
        let (u2, c2) = controller(&plant, gains, &concat(&[&p, &q]), &xc)?;
        Ok(rel(&u1, &u2).max(rel(&c1, &c2)))
    }));
    let pred = mech_equilibrium(&tm, gains);
    equilibrium_check(&mut report, &pred);
    if let Ok(pred) = pred {
        let samples: Vec<Vector> = (0..opts.samples)
            .map(|_| {
                let mut w = sample_box(&mut r, &pred.w_bar(), opts.half_width);
                // Keep momenta moderate so the inertia stays well conditioned.
                for i in 0..l {
                    w[i] = pred.w_bar[i] + (w[i] - pred.w_bar[i]) * 0.5;
                }
                w
            })
            .collect();
        structure_checks(&mut report, &closed, &samples);
        lyapunov_checks(&mut report, &closed, &pred, &samples);
        let rc1_ok = gains
            .rc1()
            .as_constant()
            .map(|a| min_sym_eigenvalue(a) > 0.0)
            .unwrap_or(false);
        if !rc1_ok {
            report.push(Check::fail("R_c1 positive definite", f64::NAN, None, "constant R_c1 ≻ 0 required"));
        }
        match MechLoop::new(&tm, gains) {
            Ok(lp) => {
                let w0 = sample_box(&mut r, &pred.w_bar(), opts.perturbation);
                let p0 = w0.rows(0, l).clone_owned();
                let q0 = w0.rows(l, l).clone_owned();
                let start = tm
                    .to_physical(&q0, &p0)
                    .map(|pb| lp.initial_state(&q0, &pb, &(p0.rows(0, m) - w0.rows(2 * l, m))));
                match start {
                    Ok(s) => decay_run(&mut report, Arc::new(lp), s, &pred, opts, "|Y_a|"),
                    Err(e) => report.push(Check::fail("decay run reaches equilibrium", f64::NAN, None, &e.to_string())),
                }
            }
            Err(e) => report.push(Check::fail("decay run reaches equilibrium", f64::NAN, None, &e.to_string())),
        }
    }
    report.finish()
}

/// Audits are numbered 1 construction, 2 matched, 3 unmatched, 4 mixed,
/// 5 mechanical. Rejects numbers outside 1..=5.
pub fn check_audit_number(n: u32) -> Result<()> {
    if (1..=5).contains(&n) {
        Ok(())
    } else {
        Err(Error::Config(format!("unknown audit {n}; expected 1 to 5")))
    }
}
