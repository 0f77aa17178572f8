//! Matter-wave interference in a uniform gravitational field.
//!
//! Closed-form Feynman propagators, Fresnel screen wavefunctions for slits,
//! Gaussian wavepackets with spin-dependent branch masses, and a split-step
//! Fourier solver used to cross-check all of it.

pub mod error;
pub mod grid;
pub mod math;
pub mod nonmarkov;
pub mod oracle;
pub mod propagators;
pub mod slit;
pub mod spin;
pub mod wavepacket;

pub use error::{Error, Result};
pub use grid::{ComplexField1D, ScreenDistribution, UniformGrid};
pub use propagators::{BranchMasses, PhysicalConfig, SpacetimePoint};
