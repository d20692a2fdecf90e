//! Momentum transformation of the VTOL: `p = T(q) 𝐩` makes the input matrix
//! `col(I, 0)` without changing the energy or the motion.

use phiac::linalg::vector;
use phiac::mech::{build_t, TransformedMech};
use phiac::systems::{build_vtol, VtolParams};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> phiac::Result<()> {
    let params = VtolParams::default();
    let sys = build_vtol(&params)?;
    let tm = TransformedMech::new(&sys);

    let q = vector(&[0.0, 0.0, 0.3]);
    println!("T(q) at theta = 0.3:\n{:.5}", build_t(&sys, &q)?);
    println!("T(q) G(q):\n{:.5}", build_t(&sys, &q)? * sys.model().input_matrix(&q));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut energy, mut motion) = (0.0_f64, 0.0_f64);
    for _ in 0..100 {
        let q = vector(&[rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-3.0..3.0)]);
        let pb = vector(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
        let u = vector(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let p = tm.to_transformed(&q, &pb)?;
        let hd = sys.hamiltonian(&q, &pb)?;
        energy = energy.max((tm.hamiltonian(&q, &p)? - hd).abs() / (1.0 + hd.abs()));
        let (q_dot, pb_dot) = sys.drift(&q, &pb, &u, true)?;
        let (tq, tp) = tm.drift(&q, &p, &u, true)?;
        let back = tm.physical_momentum_rate(&q, &p, &tq, &tp)?;
        motion = motion.max((tq - q_dot).amax()).max((back - pb_dot).amax());
    }
    println!("100 random states:");
    println!("  worst relative energy mismatch {energy:.2e}");
    println!("  worst drift mismatch           {motion:.2e}");
    Ok(())
}
