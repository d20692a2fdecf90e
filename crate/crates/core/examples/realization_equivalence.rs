//! The integrator realization (`x_c`) and the error realization
//! (`w_c = x_a − x_c`) of the controller produce the same closed loop when
//! only unmatched disturbances act. Compares both on the PMSM.

use std::sync::Arc;

use phiac::linalg::vector;
use phiac::sim::{integrate, IacLoop, Realization, Scenario};
use phiac::systems::{build_pmsm, pmsm_gains, PmsmParams};

fn main() -> phiac::Result<()> {
    let params = PmsmParams::default();
    let plant = build_pmsm(&params)?;
    let gains = pmsm_gains(&params)?;
    let x0 = vector(&[0.5, -0.2, 10.0]);
    let xc0 = vector(&[0.3]);

    let mut runs = Vec::new();
    for realization in [Realization::Integrator, Realization::Error] {
        let lp = IacLoop::new(&plant, &gains, realization)?;
        let start = lp.initial_state(&x0, &xc0);
        let sc = Scenario::new(format!("{realization:?}"), Arc::new(lp), start, 20.0, 1e-3)?;
        runs.push(integrate(&sc)?);
    }
    let (a, b) = (&runs[0], &runs[1]);
    let sup = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        p.iter()
            .zip(q)
            .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
            .fold(0.0_f64, f64::max)
    };
    let sup_w = sup(&a.w, &b.w);
    let sup_u = sup(&a.inputs, &b.inputs);
    println!("{} samples over 20 s", a.len());
    println!("sup |w_x_c - w_w_c| = {sup_w:.3e}");
    println!("sup |u_x_c - u_w_c| = {sup_u:.3e}");
    Ok(())
}
