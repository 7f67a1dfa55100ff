//! Computational toolkit for the real symplectic group `Sp(2n, R)`, the Siegel
//! upper half-space, the universal cover of `Sp(2n, R)` and the central
//! extension by `R` that acts on the fibred model space over the Siegel space.
//!
//! The crate is organised bottom-up:
//!
//! - [`symplectic`]: matrix types, generators, the `U(n)` embedding and the
//!   circle map `det ∘ (unitary polar part)`.
//! - [`siegel`]: Siegel points, the fractional-linear action, the Grassmannian
//!   chart, tangent pushforwards and the invariant density.
//! - [`cover`]: universal-cover elements as (matrix, unwrapped winding) pairs.
//! - [`extension`]: the central extension, its action on the model space and
//!   the projection to `PSp(2n, R)`.
//! - [`volume`]: exact Euler characteristics, Seifert-like volumes and the
//!   Monte-Carlo product-measure check.
//! - [`cli`]: the `spgeom` command-line surface and its verification suite.

pub mod cli;
pub mod cover;
pub mod error;
pub mod extension;
pub mod io;
pub mod rng;
pub mod siegel;
pub mod suite;
pub mod symplectic;
pub mod volume;

pub use error::{GeomError, Result};
pub use nalgebra::{Complex, DMatrix};

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;
/// Dense complex matrix.
pub type CMat = DMatrix<C64>;

/// Default tolerances.
pub mod tol {
    /// Absolute max-norm tolerance for group membership checks.
    pub const SYM: f64 = 1e-9;
    /// Tolerance for action identities on the Siegel space and model space.
    pub const ACT: f64 = 1e-8;
    /// Tolerance for the universal-cover invariant `e^{2πiw} = ρ(M)`.
    pub const COV: f64 = 1e-8;
}
