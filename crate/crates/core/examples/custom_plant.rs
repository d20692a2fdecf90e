//! Integral action on a plant assembled by hand: a mass on a spring whose
//! actuated momentum is pushed by a constant unknown force.

use std::sync::Arc;

use phiac::iac::{equilibrium_matched, build_closed_loop, IacGains};
use phiac::linalg::{matrix, vector};
use phiac::ph::{
    DisturbanceModel, HamiltonianModel, Partition, PartitionedMatrix, PhSystem, StateMatrix,
};
use phiac::sim::{check_convergence, integrate, IacLoop, Realization, Scenario};

fn main() -> phiac::Result<()> {
    // x = (p, q): momentum is actuated, position is not.
    let part = Partition::new(1, 1)?;
    let c = |v: f64| StateMatrix::constant(matrix(&[&[v]]));
    let j = PartitionedMatrix::from_blocks(part, c(0.0), c(1.0), c(-1.0), c(0.0));
    let r = PartitionedMatrix::from_blocks(part, c(0.2), c(0.0), c(0.0), c(0.0));
    let x_star = vector(&[0.0, 1.5]);
    let h = HamiltonianModel::quadratic(matrix(&[&[1.0, 0.0], &[0.0, 4.0]]), x_star.clone());
    let force = vector(&[0.8]);
    let dist = DisturbanceModel::matched(c(-1.0), force.clone());
    let plant = PhSystem::new(part, j, r, h, dist, x_star)?;

    let gains = IacGains::from_matched(&c(-1.0), c(0.5), matrix(&[&[2.0]]))?;
    let closed = build_closed_loop(&plant, &gains)?;
    let pred = equilibrium_matched(&closed, &force)?;
    println!("predicted w = {:?}, drift residual {:.1e}", pred.w_bar, pred.residual);

    let lp = IacLoop::new(&plant, &gains, Realization::Integrator)?;
    let start = lp.initial_state(&vector(&[0.0, 0.0]), &vector(&[0.0]));
    let sc = Scenario::new("spring", Arc::new(lp), start, 40.0, 1e-3)?.with_stride(1000)?;
    let traj = integrate(&sc)?;
    for (t, s) in traj.t.iter().zip(&traj.states).step_by(5) {
        println!("t = {t:>4.0}   p = {:>9.5}   q = {:>8.5}   x_c = {:>8.5}", s[0], s[1], s[2]);
    }
    let v = check_convergence(&traj, &pred, 1e-6);
    println!("converged {} with error {:.2e}", v.converged, v.final_error);
    Ok(())
}
