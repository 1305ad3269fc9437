//! Numerical laboratory for the periodic non-Hermitian Anderson model
//! (Hatano–Nelson matrices) and the transfer-matrix theory behind it.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: potentials and the periodic matrix `H_N(g)`.
//! * [`transfer`]: overflow-safe products of `SL(2)` transfer matrices,
//!   the characteristic function `tr Φ_N(z) − 2cosh(Ng)`, real roots and
//!   the band/gap structure of the Hermitian problem.
//! * [`lyapunov`]: Lyapunov exponent estimators, the integrated density
//!   of states, the Thouless formula and level curves of `γ(z)`.
//! * [`spectral`]: dense non-symmetric spectra, reality classification,
//!   continuous eigenvalue tracking in `g`, and the reality check for
//!   eigenvalues below the Lyapunov threshold.
//! * [`statistics`]: ensemble suites: Poisson spacings, minimal spacing,
//!   large deviations, radius/norm ratios, gap bounds, Hölder continuity
//!   and convergence of the singular directions.
//! * [`runner`]: experiment configuration, CSV/JSON/SVG output and the
//!   acceptance battery used by the `hnlab` binary.

pub mod error;
pub mod fit;
pub mod lyapunov;
pub mod model;
pub mod rng;
pub mod runner;
pub mod spectral;
pub mod statistics;
pub mod transfer;

pub use error::{Error, Result};
pub use model::{build_matrix, sample_potential, Distribution, HatanoNelsonMatrix, PotentialSpec, PotentialVector};
pub use num_complex::Complex64;
