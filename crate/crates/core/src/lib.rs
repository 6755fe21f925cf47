//! Pólya ensembles on the five matrix symmetry classes.
//!
//! The crate evaluates joint spectral densities of polynomial and Pólya
//! ensembles, their Fourier/Hankel/Mellin transforms, the three induced
//! convolutions, Pólya-frequency-function checks and Monte Carlo estimates
//! of the classical group integrals (HCIZ, Berezin–Karpelevich,
//! Gelfand–Naimark).
//!
//! Low-level numerics ([`jet`], [`linalg`], [`quad`], [`spaces`]) are
//! generic over [`Real`]; everything built on boxed weight closures is `f64`.

pub mod ensembles;
pub mod error;
pub mod haarmc;
pub mod jet;
pub mod linalg;
pub mod pff;
pub mod quad;
pub mod scalar;
pub mod spaces;
pub mod special;
pub mod transforms;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Real;

pub use ensembles::{Ensemble, EnsembleForm};
pub use haarmc::{GroupKind, McReport};
pub use spaces::{MatrixSpace, Nu, SpaceKind, SpectralPoint};
pub use transforms::TransformKind;
pub use weights::{Support, Weight, WeightVector};

pub use num_complex::Complex64;

/// Truncated Taylor series in double precision.
pub type Jet64 = jet::Jet<f64>;
/// Quadrature settings in double precision.
pub type QuadratureSpec64 = quad::QuadratureSpec<f64>;
/// Quadrature result in double precision.
pub type Estimate64<V> = quad::Estimate<V, f64>;
