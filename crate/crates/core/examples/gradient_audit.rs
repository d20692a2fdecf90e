//! Analytic energy gradients against central differences.

use phiac::linalg::{concat, max_abs};
use phiac::ph::{check_gradient, finite_diff_gradient_of, DEFAULT_FD_STEP};
use phiac::systems::{build_manipulator, build_pmsm, build_vtol, ManipulatorParams, PmsmParams, VtolParams};
use phiac::Vector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-half..half))
}

fn main() -> phiac::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let pmsm = build_pmsm(&PmsmParams::default())?;
    let samples: Vec<Vector> = (0..100).map(|_| pmsm.x_star() + random(&mut rng, 3, 5.0)).collect();
    let r = check_gradient(pmsm.hamiltonian(), &samples, 1e-6)?;
    println!("PMSM H            worst {:.2e} passed {}", r.worst_rel_error, r.passed);

    let arm = build_manipulator(&ManipulatorParams::default())?;
    let vtol = build_vtol(&VtolParams::default())?;
    for (label, sys) in [("manipulator H_d", &arm), ("VTOL H_d", &vtol)] {
        let l = sys.dof();
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let q = sys.q_star() + random(&mut rng, l, 3.0);
            let pb = random(&mut rng, l, 3.0);
            let z = concat(&[&q, &pb]);
            let (gq, gp) = sys.gradient(&q, &pb)?;
            let analytic = concat(&[&gq, &gp]);
            let numeric = finite_diff_gradient_of(
                |z| sys.hamiltonian(&z.rows(0, l).into(), &z.rows(l, l).into()).unwrap_or(f64::NAN),
                &z,
                DEFAULT_FD_STEP,
            )?;
            worst = worst.max(max_abs(&(&analytic - &numeric)) / max_abs(&analytic).max(1.0));
        }
        println!("{label:<17} worst {worst:.2e} passed {}", worst <= 1e-6);
    }
    Ok(())
}
