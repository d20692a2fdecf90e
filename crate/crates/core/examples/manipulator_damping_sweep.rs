//! The same simplified controller on a two-link arm with different physical
//! damping. The controller never sees `R_d`; every run settles anyway.

use phiac::sim::sweep;
use phiac::systems::{load_preset, PlantConfig};

fn main() -> phiac::Result<()> {
    let dampings = [
        ("0.5 I", [[0.5, 0.0], [0.0, 0.5]]),
        ("I", [[1.0, 0.0], [0.0, 1.0]]),
        ("diag(1, 3)", [[1.0, 0.0], [0.0, 3.0]]),
        ("diag(4, 0.2)", [[4.0, 0.0], [0.0, 0.2]]),
    ];
    let mut scenarios = Vec::new();
    for (_, r_d) in &dampings {
        let mut preset = load_preset("manipulator.default")?;
        if let PlantConfig::Manipulator(p) = &mut preset.plant {
            p.r_d = *r_d;
        }
        scenarios.push(preset.build()?.scenario);
    }
    println!("{:>14} {:>10} {:>12} {:>12}", "R_d", "converged", "error", "settled at");
    for ((label, _), run) in dampings.iter().zip(sweep(&scenarios)) {
        let (traj, verdict) = run?;
        let v = verdict.expect("certified equilibrium");
        let q = traj.final_state().expect("non-empty run");
        println!(
            "{label:>14} {:>10} {:>12.2e} {:>12}   q = ({:.6}, {:.6})",
            v.converged,
            v.final_error,
            v.first_time_within_tol.map_or("-".into(), |t| format!("{t:.2} s")),
            q[0],
            q[1]
        );
    }
    Ok(())
}
