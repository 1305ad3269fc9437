//! γ(z) on a complex grid and its level curve γ = g, compared with the
//! non-real eigenvalues of one realization.
//!
//!     cargo run --release --example spectral_curve

use hatano_nelson::lyapunov::{extract_curve, gamma_complex_grid, Region};
use hatano_nelson::spectral::{classify_real, full_spectrum};
use hatano_nelson::{build_matrix, sample_potential, PotentialSpec};

fn main() -> hatano_nelson::Result<()> {
    let spec = PotentialSpec::uniform(-0.5, 0.5).with_background(vec![0.0, 2.0]);
    let g = 0.08;
    let field = gamma_complex_grid(&spec, Region::new((-2.0, 4.0), (-0.25, 0.25)), (64, 32), 10_000, 4, 1)?;
    let curve = extract_curve(&field, g);
    println!("level curve: {} pieces, {} vertices", curve.polylines.len(), curve.vertex_count());

    let v = sample_potential(&spec, 70, 1)?;
    let s = full_spectrum(&build_matrix(&v, g)?)?;
    let c = classify_real(&s)?;
    let far = (0..s.n)
        .filter(|&i| !c.is_real(i))
        .map(|i| curve.distance(s.eigenvalues[i]))
        .fold(0.0, f64::max);
    println!("{} non-real eigenvalues, farthest {far:.3} from the curve", s.n - c.real.len());
    Ok(())
}
