//! Classical and quantum periodically perturbed Harper model.
//!
//! The classical side integrates `H = a(1 - cos p) - eps cos(phi) - mu cos(phi - tau) - mu' cos(phi + tau)`
//! on the torus; the quantum side works in an `N`-state space with `h = 2pi/N`, builds the
//! Floquet propagator by Trotterization and analyses its eigenstates.

pub mod classical;
pub mod error;
pub mod floquet;
pub mod husimi;
pub mod io;
pub mod linalg;
pub mod magnus;
pub mod model;
pub mod quadrature;
pub mod quantum;
pub mod render;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::{OperatorMatrix, StateVector};
pub use model::{h0_classical, params_from_physical, ModelParams, PhasePoint};
pub use num_complex::Complex64 as C64;
pub use quantum::QuantumSpace;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/classical.md")]
    mod classical {}
    #[doc = include_str!("../../../book/src/quantum.md")]
    mod quantum {}
    #[doc = include_str!("../../../book/src/floquet.md")]
    mod floquet {}
    #[doc = include_str!("../../../book/src/husimi.md")]
    mod husimi {}
    #[doc = include_str!("../../../book/src/perturbation.md")]
    mod perturbation {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
