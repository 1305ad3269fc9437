//! Random transfer products: large deviations of the norm, the ratio
//! ρ/‖Φ‖, convergence of the right singular factor, and the rank-one
//! lower bound on the spectral radius.
//!
//!     cargo run --release --example products

use hatano_nelson::statistics::{ldp_empirics, radius_norm_ratio, v_convergence};
use hatano_nelson::transfer::{transfer_product, verify_rank_one_bound};
use hatano_nelson::{sample_potential, PotentialSpec};

fn main() -> hatano_nelson::Result<()> {
    let spec = PotentialSpec::uniform(0.0, 4.0);

    let ldp = ldp_empirics(&spec, 2.0, &[100, 400, 1600], 0.05, 1000, 1)?;
    for r in &ldp.rows {
        println!("N = {:5}: P(|rate − γ| ≥ 0.05) ≈ {:.3}", r.n, r.p_hat);
    }

    let rn = radius_norm_ratio(&spec, 2.0, 100, 2000, &[0.01, 0.1, 1.0], 2)?;
    println!("P(ρ/‖Φ‖ ≤ δ) ≈ {:.3}·δ^{:.3}; ρ > ‖Φ‖ in {} samples", rn.big_b, rn.b, rn.radius_exceeds_norm);

    let vc = v_convergence(&spec, 2.0, &[20, 40, 80, 160], 200, 3)?;
    println!("‖V_N − V_N/2‖ decays at rate {:.3} per site", vc.rate);

    let (mut applicable, mut broken) = (0, 0);
    for seed in 0..500 {
        let v = sample_potential(&spec, 50, seed)?;
        let r = verify_rank_one_bound(&transfer_product(&v.values, 1.0 + seed as f64 * 0.01)?);
        applicable += r.applicable as usize;
        broken += !r.bound_holds as usize;
    }
    println!("rank-one bound: {broken} exceptions in {applicable} applicable products");
    Ok(())
}
