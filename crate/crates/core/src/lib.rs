//! Finite-volume simulator for the one-dimensional compressible
//! Navier-Stokes-Vlasov-Fokker-Planck system on the periodic torus.
//!
//! The fluid `(rho, m)` lives on a periodic x-grid, the particle distribution
//! `f` on the tensor grid `x * v`. One time step is a Lie (or Strang) splitting
//! of free streaming, the Navier-Stokes substep and the drag/Fokker-Planck
//! exchange, arranged so that fluid mass, particle mass and mixture momentum
//! are conserved to round-off. The [`diagnostics`] module evaluates the
//! entropy, dissipation, relative-entropy and equilibrium-gap functionals used
//! to monitor long-time behavior, and [`oracles`] holds independent reference
//! solutions for testing.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod fluid;
pub mod grid;
pub mod io;
pub mod kinetic;
pub mod oracles;
pub mod params;
pub mod run;
pub mod scenario;
pub mod state;
pub mod tridiag;

pub use coupling::{SchemeConfig, SimulationState, Splitting};
pub use diagnostics::DiagnosticsRecord;
pub use equilibrium::{equilibrium_from_initial, EquilibriumState};
pub use error::{Error, Result};
pub use fluid::{FluidSchemeConfig, Reconstruction};
pub use grid::Grid;
pub use kinetic::{FpSolver, KineticSchemeConfig, Transport};
pub use params::{drag_coefficient, pressure, viscosity, ModelParams};
pub use run::{run, RunOptions, RunReport, Simulation};
pub use scenario::{build_initial_data, load_config, ScenarioConfig};
pub use state::{velocity_from_state, FluidState, KineticState};
