//! Matrix Möbius pseudo-distances on domains `B_Δ = {z : ‖Δ(z)‖ < 1}` cut out
//! by matrices of holomorphic functions, together with the two-point
//! functional calculus for commuting 2×2 tuples, Schur–Agler realizations and
//! randomized verification sweeps for Schwarz–Pick and von Neumann type
//! inequalities.
//!
//! Module map:
//!
//! - [`matkernel`]: dense complex linear algebra (Jacobi eigensolver,
//!   operator norm, PSD square roots, inverses, Kronecker products).
//! - [`domains`]: the `Δ` maps, membership, samplers and the JSON domain format.
//! - [`distances`]: pseudo-hyperbolic, Cartan-domain and `d_Δ` distances plus
//!   the annulus closed forms.
//! - [`tuples`]: diagonalizable commuting tuples on `C²` and their calculus.
//! - [`schuragler`]: extremal functions, transfer realizations, admissible
//!   kernels and Schwarz–Pick residuals.
//! - [`harness`]: seeded sweeps, certificates and reports.

pub mod distances;
pub mod domains;
pub mod error;
pub mod harness;
pub mod matkernel;
pub mod schuragler;
pub mod tuples;

pub use error::{Error, Result};
pub use matkernel::{CMatrix, C64};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere randomness is needed: ChaCha with 8 rounds,
/// seeded through `SeedableRng::seed_from_u64`.
pub type SweepRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SweepRng {
    ChaCha8Rng::seed_from_u64(seed)
}
