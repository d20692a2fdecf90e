//! Speed regulation of a PMSM under an unknown load torque.
//!
//! Run with `cargo run --example pmsm_speed_regulation [OUT_DIR]`; with an
//! output directory the trajectory and plot data are written there.

use std::path::PathBuf;

use phiac::sim::{check_convergence, integrate, write_csv, write_plot_data};
use phiac::systems::{load_preset, PlantConfig};

fn main() -> phiac::Result<()> {
    let preset = load_preset("pmsm.default")?;
    let PlantConfig::Pmsm(params) = &preset.plant else { unreachable!() };
    let built = preset.build()?;
    let traj = integrate(&built.scenario)?;
    let pred = built.prediction.expect("PMSM equilibrium is certified");
    let verdict = check_convergence(&traj, &pred, preset.scenario.tol);

    let x = traj.final_state().expect("non-empty run");
    let expected = params.equilibrium();
    println!("load torque {} N m, friction {}", params.tau_l, params.r_m);
    println!("{:>6} {:>14} {:>14}", "", "final", "expected");
    for (i, name) in ["i_q", "i_d", "omega"].iter().enumerate() {
        println!("{name:>6} {:>14.9} {:>14.9}", x[i], expected[i]);
    }
    println!(
        "converged: {} (error {:.2e}, inside tolerance from {})",
        verdict.converged,
        verdict.final_error,
        verdict.first_time_within_tol.map_or("never".into(), |t| format!("t = {t:.2} s"))
    );
    println!("largest Lyapunov increase per step: {:.2e}", verdict.max_lyapunov_increase);

    if let Some(dir) = std::env::args().nth(1).map(PathBuf::from) {
        std::fs::create_dir_all(&dir)?;
        write_csv(&traj, &dir.join("pmsm.csv"))?;
        write_plot_data(&traj, &dir.join("pmsm.plot.csv"))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
