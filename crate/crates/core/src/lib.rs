//! Numerical parabolic implosion for the quadratic family
//! `P(z) = e^{2πi p/q} z + z²`.
//!
//! The crate computes attracting and repelling Fatou coordinates at the
//! parabolic point, the Lavaurs maps `g_σ = ψ₊ ∘ T_σ ∘ φ` and horn maps
//! `h_σ = T_σ ∘ φ ∘ ψ₊`, their virtual multipliers, and classification rasters
//! of the resulting Julia–Lavaurs sets. A second half models the real
//! dynamics at the virtual Siegel disk with a critical Blaschke circle map:
//! rotation-number tuning, dynamical partitions and real bounds, together
//! with the hyperbolic geometry of slit planes used to place balls near the
//! partition intervals.

pub mod cfrac;
pub mod circlemap;
pub mod error;
pub mod fatou;
pub mod hypgeo;
pub mod lavaurs;
pub mod parabolic;
pub mod raster;
mod series;

pub use error::{Error, Result};
