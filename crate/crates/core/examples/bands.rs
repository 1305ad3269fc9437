//! Bands and gaps of the periodic transfer matrix: N bands, interleaved
//! with gaps, whose even-gap edges are the eigenvalues of H_N(0).
//!
//!     cargo run --release --example bands

use hatano_nelson::transfer::{band_structure, hermitian_eigenvalues};
use hatano_nelson::{sample_potential, PotentialSpec};

fn main() -> hatano_nelson::Result<()> {
    let v = sample_potential(&PotentialSpec::bernoulli(1.0), 12, 5)?;
    let bs = band_structure(&v.values)?;
    println!("{} bands, interleaving holds: {}", bs.bands.len(), bs.interleaving_holds());
    for (j, b) in bs.bands.iter().enumerate() {
        println!("I_{:<2} [{:+.6}, {:+.6}]  width {:.2e}", j + 1, b.lo, b.hi, b.width());
    }
    let closed = bs.closed.iter().filter(|&&c| c).count();
    println!("closed gaps: {closed}");

    let ev = hermitian_eigenvalues(&v.values)?;
    let err = ev.iter().zip(&bs.periodic).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("periodic edges vs H_N(0) spectrum: {err:.1e}");
    Ok(())
}
