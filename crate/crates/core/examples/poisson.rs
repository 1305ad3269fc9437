//! Rescaled eigenvalue spacings near the density peak against Exp(1).
//!
//!     cargo run --release --example poisson

use hatano_nelson::lyapunov::{ids_empirical, linspace};
use hatano_nelson::statistics::{ks_exponential, rescaled_gaps, EnsembleConfig};
use hatano_nelson::PotentialSpec;

fn main() -> hatano_nelson::Result<()> {
    let spec = PotentialSpec::uniform(0.0, 4.0);
    let dos = ids_empirical(&spec, 800, 4, 1)?;
    let (lo, hi) = dos.support();
    let e = dos.peak(&linspace(lo, hi, 301)).unwrap_or(2.0);
    for g in [0.0, 0.1] {
        let cfg = EnsembleConfig { spec: spec.clone(), n: 800, n_seeds: 30, base_seed: 2, g };
        let sample = rescaled_gaps(&cfg, e, &dos, 0.1)?;
        let ks = ks_exponential(&sample)?;
        println!(
            "E = {e:.3}, g = {g}: {} spacings, mean {:.3}, KS {:.4} vs {:.4} -> {}",
            ks.count,
            sample.mean(),
            ks.statistic,
            ks.critical,
            if ks.passed { "Poisson" } else { "rejected" }
        );
    }
    Ok(())
}
