//! The long-time state predicted from the initial data: constant density,
//! common velocity and the global Maxwellian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::{FluidState, KineticState};

/// `1 / sqrt(2 pi)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Half-width added to `|u_c|` when choosing the default velocity window;
/// the Gaussian tail mass beyond eight standard deviations is below 1e-14.
pub const DEFAULT_V_MARGIN: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    pub rho_bar: f64,
    pub n_bar: f64,
    pub u_c: f64,
    /// `M(v_j)` at the velocity centers of the grid it was built for.
    pub maxwellian: Vec<f64>,
}

impl EquilibriumState {
    pub fn new(rho_bar: f64, n_bar: f64, u_c: f64, grid: &Grid) -> Self {
        EquilibriumState {
            rho_bar,
            n_bar,
            u_c,
            maxwellian: sample_maxwellian(n_bar, u_c, grid),
        }
    }
}

/// Unit-temperature Maxwellian of mass `n` and mean `u` evaluated at `v`.
#[inline]
pub fn maxwellian(n: f64, u: f64, v: f64) -> f64 {
    let d = v - u;
    n * INV_SQRT_2PI * (-0.5 * d * d).exp()
}

pub fn sample_maxwellian(n: f64, u: f64, grid: &Grid) -> Vec<f64> {
    grid.v_centers().iter().map(|&v| maxwellian(n, u, v)).collect()
}

/// Default velocity half-width for a run whose common velocity is `u_c`.
pub fn default_v_max(u_c: f64) -> f64 {
    DEFAULT_V_MARGIN + u_c.abs()
}

/// Midpoint-rule totals of the initial data and the predicted equilibrium.
pub fn equilibrium_from_initial(fluid0: &FluidState, kinetic0: &KineticState, grid: &Grid) -> Result<EquilibriumState> {
    let dx = grid.dx();
    let rho_bar = fluid0.total_mass(dx);
    let n_bar = kinetic0.total_mass(grid);
    let total = rho_bar + n_bar;
    if !(total > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "total initial mass must be positive, got {total}"
        )));
    }
    let u_c = (fluid0.total_momentum(dx) + kinetic0.total_momentum(grid)) / total;
    Ok(EquilibriumState::new(rho_bar, n_bar, u_c, grid))
}
