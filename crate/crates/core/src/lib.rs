//! Simulation engine for toy quantum field theories on truncated Fock spaces.
//!
//! Two dynamical pictures live side by side: unitary interaction-picture
//! evolution with S-matrix extraction ([`dynamics`]), and stochastic selection
//! of a single particles-content sector at the scattering output
//! ([`collapse`]). The remaining modules build the decay, absorption and
//! pair-production case studies ([`processes`]), the cluster decomposition
//! and no-signaling checks ([`locality`]) and the three-stage measurement
//! pipeline ([`measurement`]) on top of them.

pub mod collapse;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod locality;
pub mod measurement;
pub mod processes;
pub mod rng;
pub mod sectors;
pub mod stats;
pub mod suites;
pub mod toys;

pub use num_complex::Complex64;

pub use collapse::{CollapseEvent, Collapser, GammaMatrix, UnistochasticVerdict, Verdict};
pub use dynamics::{Hamiltonians, InteractionModel, SMatrix};
pub use error::{Error, Result};
pub use fock::{
    BasisState, LadderKind, Mode, ModeId, MomentumGrid, ParticleSpecies, Registry, StateVector,
    Statistics,
};
pub use locality::{ClusterDecomposition, SignalingReport};
pub use rng::SeedPath;
pub use sectors::{ContentSignature, SectorDecomposition};
