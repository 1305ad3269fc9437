//! The Lyapunov exponent γ(E) two ways: Monte Carlo over long transfer
//! products, and the Thouless formula over the density of states.
//!
//!     cargo run --release --example lyapunov

use hatano_nelson::lyapunov::{free_gamma, gamma_profile, gamma_thouless, ids_empirical, linspace};
use hatano_nelson::{Complex64, PotentialSpec};

fn main() -> hatano_nelson::Result<()> {
    println!("free chain: γ(3) = {:.6}", free_gamma(Complex64::new(3.0, 0.0)));

    let spec = PotentialSpec::uniform(0.0, 4.0);
    let grid = linspace(-1.0, 5.0, 13);
    let profile = gamma_profile(&spec, &grid, 100_000, 8, 1)?;
    let dos = ids_empirical(&spec, 1000, 4, 2)?;
    println!("{:>6} {:>9} {:>9} {:>9}", "E", "MC", "stderr", "Thouless");
    for (e, est) in grid.iter().zip(&profile.estimates) {
        let t = gamma_thouless(&dos, *e).value;
        println!("{e:6.2} {:9.5} {:9.1e} {t:9.5}", est.value, est.stderr);
    }
    Ok(())
}
