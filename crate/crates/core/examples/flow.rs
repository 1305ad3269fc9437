//! Tracks every eigenvalue λ_j(g) from g = 0 and reports where each label
//! leaves the real axis.
//!
//!     cargo run --release --example flow

use hatano_nelson::spectral::track_flow;
use hatano_nelson::{sample_potential, PotentialSpec};

fn main() -> hatano_nelson::Result<()> {
    let v = sample_potential(&PotentialSpec::uniform(0.0, 4.0), 40, 3)?;
    let flow = track_flow(&v, 1.0, 0.01)?;
    println!("{} steps, {} collisions", flow.steps.len(), flow.collisions.len());
    for j in (0..flow.n).step_by(5) {
        let exit = flow.steps.iter().find(|s| !s.real[j]).map(|s| s.g);
        match exit {
            Some(g) => println!("λ_{j}(0) = {:.4} becomes non-real at g ≈ {g:.3}", flow.initial[j]),
            None => println!("λ_{j}(0) = {:.4} stays real up to g = 1", flow.initial[j]),
        }
    }
    Ok(())
}
