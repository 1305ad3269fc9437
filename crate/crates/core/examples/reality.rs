//! Eigenvalues whose Lyapunov exponent exceeds g + ε stay real: one
//! realization, its flow, and the per-label check.
//!
//!     cargo run --release --example reality

use hatano_nelson::lyapunov::{gamma_profile, linspace};
use hatano_nelson::runner::acceptance::theorem_run;
use hatano_nelson::spectral::{gap_capture, TAU_RE};
use hatano_nelson::{sample_potential, PotentialSpec};

fn main() -> hatano_nelson::Result<()> {
    let spec = PotentialSpec::uniform(0.0, 4.0);
    let profile = gamma_profile(&spec, &linspace(-2.5, 6.5, 91), 20_000, 8, 11)?;
    let v = sample_potential(&spec, 70, 4)?;
    let r = theorem_run(&v, &profile, 0.1, 0.01, TAU_RE)?;
    println!("{} (label, g) pairs checked, {} violations", r.n_checks, r.violations.len());
    println!("largest drift |λ_j(g) − λ_j(0)| = {:.2e}", r.max_deviation);
    for viol in r.violations.iter().take(5) {
        println!("  label {} at g = {:.3}: margin {:.3}", viol.label, viol.g, viol.margin);
    }

    let cap = gap_capture(&v, 0.2, &profile, 0.1)?;
    println!("g = 0.2: {} wide even gaps checked, {} without two roots", cap.checked.len(), cap.failures.len());
    Ok(())
}
