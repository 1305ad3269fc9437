//! Dense spectrum of H_N(g), its split into real eigenvalues and conjugate
//! pairs, and the check against the transfer-matrix characteristic function.
//!
//!     cargo run --release --example spectrum

use hatano_nelson::spectral::{classify_real, cross_validate, full_spectrum};
use hatano_nelson::{build_matrix, sample_potential, PotentialSpec, PotentialVector};

fn main() -> hatano_nelson::Result<()> {
    // free chain: eigenvalues 2cosh(g)cos(2πk/N) + 2i·sinh(g)sin(2πk/N)
    let free = build_matrix(&PotentialVector::from_values(vec![0.0; 4]), 0.1)?;
    for z in full_spectrum(&free)?.eigenvalues {
        println!("free N=4: {:+.6} {:+.6}i", z.re, z.im);
    }

    let v = sample_potential(&PotentialSpec::uniform(0.0, 4.0), 70, 7)?;
    let s = full_spectrum(&build_matrix(&v, 0.3)?)?;
    let c = classify_real(&s)?;
    println!(
        "N=70, g=0.3: {} real, {} conjugate pairs, trace error {:.1e}, max residual {:.1e}",
        c.real.len(),
        c.pairs.len(),
        s.trace_error(),
        s.max_residual()
    );

    let cv = cross_validate(&v, 0.3)?;
    println!("characteristic-function roots agree with the dense solver: {}", cv.passed());
    Ok(())
}
