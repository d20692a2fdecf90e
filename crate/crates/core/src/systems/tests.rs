use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::iac::{build_closed_loop, equilibrium_unmatched};
use crate::linalg::{from_rows, min_sym_eigenvalue, vector, Matrix, Vector};
use crate::mech::{build_t, partition_mech, TransformedMech};
use crate::ph::check_gradient;

fn pmsm_samples(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vector> {
    (0..n)
        .map(|_| vector(&[rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(45.0..55.0)]))
        .collect()
}

#[test]
fn pmsm_disturbance_recovered_from_raw_torque() {
    let p = PmsmParams::default();
    let plant = build_pmsm(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rep = plant
        .check_unmatched_assumption(|_| p.raw_disturbance(), &pmsm_samples(&mut rng, 50))
        .unwrap();
    assert!(rep.passed());
    // (0.5 + 0.01·50) / (0.01 · −1)
    assert!((rep.d_bar_u[0] - (-100.0)).abs() < 1e-9);
}

#[test]
fn pmsm_coupling_breaks_unmatched_structure() {
    let p = PmsmParams::default();
    let plant = build_pmsm_with_coupling(&p, 0.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rep = plant
        .check_unmatched_assumption(|_| p.raw_disturbance(), &pmsm_samples(&mut rng, 10))
        .unwrap();
    assert!(!rep.passed());
}

#[test]
fn pmsm_shifted_minimum_is_the_operating_point() {
    let p = PmsmParams::default();
    let plant = build_pmsm(&p).unwrap();
    let rep = plant.check_shifted_minimum(&vector(&[p.d_bar_u()])).unwrap();
    assert!(rep.passed());
    let expected = vector(&[(0.5 + 0.01 * 50.0) / (4.0 * 0.1), 0.0, 50.0]);
    assert!((rep.x_bar() - &expected).norm() < 1e-9);
    assert!((p.equilibrium() - expected).norm() < 1e-15);
}

#[test]
fn pmsm_without_load_rests_at_target_speed() {
    let p = PmsmParams {
        tau_l: 0.0,
        r_m: 0.0,
        ..PmsmParams::default()
    };
    let plant = build_pmsm(&p).unwrap();
    let closed = build_closed_loop(&plant, &pmsm_gains(&p).unwrap()).unwrap();
    let eq = equilibrium_unmatched(&closed, &vector(&[p.d_bar_u()])).unwrap();
    assert!((eq.w_bar() - vector(&[0.0, 0.0, 50.0, 0.0])).norm() < 1e-12);
}

#[test]
fn pmsm_rejects_bad_signs() {
    for bad in [
        PmsmParams { c23: 1.0, ..PmsmParams::default() },
        PmsmParams { r1: 0.0, ..PmsmParams::default() },
        PmsmParams { gamma2: -1.0, ..PmsmParams::default() },
    ] {
        assert!(build_pmsm(&bad).is_err());
    }
}

#[test]
fn pmsm_structure_and_gradient() {
    let p = PmsmParams::default();
    let plant = build_pmsm(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs = pmsm_samples(&mut rng, 100);
    assert!(plant.check_structure(&xs).unwrap().passed());
    assert!(check_gradient(plant.hamiltonian(), &xs, 1e-6).unwrap().passed);
}

#[test]
fn manipulator_inertia_positive() {
    let p = ManipulatorParams::default();
    let arm = ManipulatorArm::new(&p).unwrap();
    use crate::mech::ShapedMechanics;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let th = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let m = arm.mass(&vector(&[0.3, th]));
        // det = a_a a_u − b² cos²θ_u
        assert!((m.determinant() - (2.0 - 0.25 * th.cos().powi(2))).abs() < 1e-12);
        assert!(min_sym_eigenvalue(&m) > 0.0);
    }
    assert!(build_manipulator(&ManipulatorParams { b: 1.5, ..p }).is_err());
}

#[test]
fn manipulator_transform_is_identity_and_law_matches() {
    let p = ManipulatorParams::default();
    let sys = build_manipulator(&p).unwrap();
    let tm = TransformedMech::new(&sys);
    let plant = partition_mech(&tm).unwrap();
    let law = p.controller().unwrap();
    let arm = ManipulatorArm::new(&p).unwrap();
    use crate::mech::ShapedMechanics;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let q = vector(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
        let pm = vector(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
        let xc = vector(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
        assert!((build_t(&sys, &q).unwrap() - Matrix::identity(2, 2)).norm() < 1e-14);
        let (u, xc_dot) = law.controller(&plant, &crate::linalg::concat(&[&pm, &q]), &xc).unwrap();
        let m_inv = arm.mass(&q).try_inverse().unwrap();
        let rc2 = Matrix::identity(2, 2) * 5.0;
        let u_ref = -(&rc2 * &m_inv * &pm) - (&pm - &xc) * 3.0;
        let grad_q = {
            let pt = &m_inv * &pm;
            let dm = arm.desired_mass_derivatives(&q);
            let mut g = arm.potential_gradient(&q);
            for i in 0..2 {
                g[i] -= 0.5 * pt.dot(&(&dm[i] * &pt));
            }
            g
        };
        let xc_ref = -(&rc2 * &m_inv * &pm) - grad_q;
        assert!((u - u_ref).norm() < 1e-10);
        assert!((xc_dot - xc_ref).norm() < 1e-10);
    }
}

fn vtol() -> (VtolParams, VtolModel) {
    let p = VtolParams::default();
    let m = VtolModel::new(&p).unwrap();
    (p, m)
}

fn printed_t(th: f64, e: f64) -> Matrix {
    let (s, c) = th.sin_cos();
    let k = e * e + 1.0;
    from_rows(&[
        [(e * e + s * s) / k, -(2.0 * th).sin() / (2.0 * k), e * c / k],
        [-(2.0 * th).sin() / (2.0 * k), (e * e - s * s + 1.0) / k, e * s / k],
        [c, s, -e],
    ])
}

#[test]
fn vtol_desired_inertia_at_origin() {
    use crate::mech::ShapedMechanics;
    let (_, m) = vtol();
    let md = m.desired_mass(&vector(&[0.0, 0.0, 0.0]));
    let want = from_rows(&[[32.0, 0.0, 2.0], [0.0, 28.0, 0.0], [2.0, 0.0, 1.1]]);
    assert!((md - want).norm() < 1e-14);
}

#[test]
fn vtol_potential_vanishes_at_target() {
    use crate::mech::ShapedMechanics;
    let (p, m) = vtol();
    let qs = vector(&p.q_star);
    assert!(m.potential(&qs).abs() < 1e-15);
    assert!(m.potential_gradient(&qs).norm() < 1e-15);
}

#[test]
fn vtol_transform_matches_printed_matrix() {
    let (p, _) = vtol();
    let sys = build_vtol(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let th = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let q = vector(&[1.0, -2.0, th]);
        let t = build_t(&sys, &q).unwrap();
        assert!((&t - printed_t(th, 1.0)).norm() < 1e-12);
        let tg = &t * sys.model().input_matrix(&q);
        let mut want = Matrix::zeros(3, 2);
        want[(0, 0)] = 1.0;
        want[(1, 1)] = 1.0;
        assert!((tg - want).norm() < 1e-12);
    }
}

#[test]
fn vtol_model_audit() {
    let (p, _) = vtol();
    let sys = build_vtol(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples: Vec<(Vector, Vector)> = (0..100)
        .map(|_| {
            let q = vector(&[
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            ]);
            let pb = vector(&[rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]);
            (q, pb)
        })
        .collect();
    let audit = sys.check_model(&samples).unwrap();
    assert!(audit.passed(), "{:?}", audit.failure);
    assert!(audit.worst_jacobian_error < 1e-6);
}

#[test]
fn vtol_skew_damping_moves_into_gyroscopic_term() {
    use crate::mech::ShapedMechanics;
    let p = VtolParams {
        r0: [1.0, 2.0, 0.5],
        ..VtolParams::default()
    };
    let m = VtolModel::new(&p).unwrap();
    let q = vector(&[0.0, 0.0, 0.4]);
    let pb = vector(&[0.2, -0.1, 0.3]);
    let r0 = Matrix::from_diagonal(&vector(&p.r0));
    let g = m.input_matrix(&q);
    let kv = from_rows(&p.k_v);
    let plain_j2 = VtolModel::new(&VtolParams::default()).unwrap().gyroscopic(&q, &pb);
    // J₂ − R_d reproduces J_u − G K_v Gᵀ − R₀𝐌_d.
    let lhs = m.gyroscopic(&q, &pb) - m.damping(&q);
    let rhs = plain_j2 - &g * kv * g.transpose() - r0 * m.desired_mass(&q);
    assert!((lhs - rhs).norm() < 1e-12);
}

#[test]
fn vtol_rejects_degenerate_shaping() {
    let p = VtolParams {
        k1: 2.2,
        k2: 2.2,
        eps: 1.0,
        ..VtolParams::default()
    };
    assert!(matches!(build_vtol(&p), Err(crate::Error::Config(_))));
}

#[test]
fn presets_parse_and_match_defaults() {
    assert_eq!(list_presets().len(), 3);
    let v = load_preset("vtol.paper").unwrap();
    assert_eq!(v.meta.provenance, Provenance::Paper);
    assert_eq!(v.plant, PlantConfig::Vtol(VtolParams::default()));
    assert_eq!(load_preset("pmsm.default").unwrap().plant, PlantConfig::Pmsm(PmsmParams::default()));
    assert_eq!(
        load_preset("manipulator.default").unwrap().plant,
        PlantConfig::Manipulator(ManipulatorParams::default())
    );
    assert!(load_preset("nope").is_err());
}

#[test]
fn overrides_type_checked() {
    let p = Preset::resolve("vtol.paper", None, &[("t_end".into(), "1".into())]).unwrap();
    assert_eq!(p.scenario.t_end, 1.0);
    let p = Preset::resolve("vtol.paper", None, &[("plant.d_m".into(), "[1.0, 2.0]".into())]).unwrap();
    let PlantConfig::Vtol(v) = p.plant else { panic!() };
    assert_eq!(v.d_m, [1.0, 2.0]);
    assert!(Preset::resolve("vtol.paper", None, &[("t_end".into(), "fast".into())]).is_err());
    assert!(Preset::resolve("vtol.paper", None, &[("nonsense".into(), "1".into())]).is_err());
    assert!(Preset::resolve("vtol.paper", None, &[("d_m".into(), "[1.0]".into())]).is_err());
}

#[test]
fn config_file_sits_between_preset_and_flags() {
    let cfg = "[scenario]\nt_end = 5.0\ndt = 0.01\n";
    let p = Preset::resolve("pmsm.default", Some(cfg), &[("dt".into(), "0.002".into())]).unwrap();
    assert_eq!(p.scenario.t_end, 5.0);
    assert_eq!(p.scenario.dt, 0.002);
}
