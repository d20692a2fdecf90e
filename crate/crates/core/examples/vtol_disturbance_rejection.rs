//! VTOL aircraft with a matched force disturbance switched on at t = 30 s.
//!
//! Prints the configuration error around the disturbance step and compares
//! the integrator state at the end with the certified equilibrium.

use phiac::mech::{mech_equilibrium, TransformedMech};
use phiac::sim::integrate;
use phiac::systems::{build_vtol, load_preset, PlantConfig};

fn main() -> phiac::Result<()> {
    let preset = load_preset("vtol.paper")?;
    let PlantConfig::Vtol(params) = &preset.plant else { unreachable!() };
    let built = preset.build()?;
    let started = std::time::Instant::now();
    let traj = integrate(&built.scenario)?;
    println!("integrated {} s in {:.2?}", preset.scenario.t_end, started.elapsed());

    let error = |t: f64| {
        let s = &traj.states[traj.index_at(t).expect("sampled time")];
        s.iter().zip(params.q_star).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };
    for t in [0.0, 5.0, 10.0, 20.0, 29.9, 31.0, 35.0, 45.0, 60.0] {
        println!("t = {t:>5.1} s   |q - q*| = {:.4e}", error(t));
    }

    let sys = build_vtol(params)?;
    let pred = mech_equilibrium(&TransformedMech::new(&sys), &params.gains()?)?;
    let x = traj.final_state().expect("non-empty run");
    println!("final momentum |p| = {:.3e}", x.rows(3, 3).norm());
    println!(
        "x_c = ({:.4}, {:.4}), certified ({:.4}, {:.4})",
        x[6],
        x[7],
        pred.w_bar[0] - pred.w_bar[6],
        pred.w_bar[1] - pred.w_bar[7]
    );
    Ok(())
}
