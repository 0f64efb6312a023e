//! Space-homogeneous Boltzmann mixtures with hard-potential cross sections.
//!
//! The crate has two halves. The [`dsmc`] module is a conservative
//! stochastic particle simulator for binary elastic collisions between
//! species of unequal masses. The remaining modules compute, and check
//! numerically, the explicit constants that control moments of such
//! mixtures: the bracket-energy identity ([`collision`]), angular-averaging
//! Povzner constants and the moment threshold `k*` ([`povzner`]), moments,
//! entropy and the auxiliary inequalities ([`moments`]), and the moment
//! differential inequality with its Bernoulli comparison envelopes
//! ([`bounds`]).
//!
//! Species are indexed densely from 0. Masses use any consistent unit; every
//! moment is built from the dimensionless bracket
//! `<v>_i = sqrt(1 + m_i |v|^2 / sum_j m_j)`.

pub mod bounds;
pub mod collision;
pub mod dsmc;
mod error;
pub mod mixture;
pub mod moments;
pub mod povzner;
pub mod stats;

pub use error::{Error, Result};

/// Velocities and other 3-vectors.
pub type Vec3 = nalgebra::Vector3<f64>;

pub use collision::{CollisionInput, CollisionOutput, EnergyIdentityTerms};
pub use mixture::{AngularKernel, CrossSection, KernelShape, SpeciesSet};
pub use moments::{MomentRecord, ParticleEnsemble};
