//! Ground-state localization of a particle in a deep optical lattice with a
//! cavity-induced quasiperiodic potential.
//!
//! Energies are in recoil units `E_r`, lengths in `1/k0`; the lattice
//! spacing is `pi`.

pub mod bands;
#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod error;
pub mod model;
pub mod observables;
pub mod sweep;
pub mod tridiag;

pub use config::RunConfig;
pub use bands::{wannier_for, LatticeSpec, WannierBasis};
pub use error::{Error, Result};
pub use model::{ground_state, EffectivePotential, GroundState, HubbardProblem, PotentialMode};
pub use observables::{ipr, lyapunov_fit, LocalizationMetrics};
pub use sweep::{run_sweep, SweepResult, SweepSpec};
