//! Numerical synthesis of Beltrami fields (`curl u = λu` on R³) whose stream
//! lines contain hyperbolic periodic orbits realizing a prescribed link.
//!
//! The pipeline mirrors the constructive argument:
//!
//! 1. [`geometry`]: analytic link components, arc-length parametrization,
//!    rotation-minimizing framing and tube charts with adapted coordinates
//!    `(ρ, z, θ)`.
//! 2. [`strip`]: the Cauchy data `w = ∇θ − z∇z` on a ruled strip through each
//!    component, with its closedness, Lyapunov and monodromy checks.
//! 3. [`marcher`]: a filtered spectral march of `⋆dβ = λβ` off the strip, used
//!    to cross-validate the global field near each strip.
//! 4. [`field`]: exact plane-wave Beltrami expansions fitted to the Cauchy
//!    data of all strips at once.
//! 5. [`dynamics`] and [`topology`]: periodic orbits of the fitted field, their
//!    Floquet multipliers, linking numbers and tube confinement.
//!
//! [`io`] and [`pipeline`] provide the file formats and the commands used by
//! the `beltrami` binary.

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod field;
pub mod geometry;
pub mod io;
pub mod marcher;
pub mod pipeline;
pub mod presets;
pub mod strip;
pub mod topology;
pub mod trig;

pub use error::{Error, Result};
pub use exec::Exec;

/// Points and vectors in R³.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 real matrices (Jacobians, monodromy).
pub type Mat3 = nalgebra::Matrix3<f64>;
