//! One full time step of the coupled system and the drag exchange.
//!
//! The drag force is applied by measuring how much momentum the Fokker-Planck
//! substep actually moved into the particles and removing exactly that amount
//! from the fluid in the same cell, so mixture momentum is conserved by
//! construction rather than up to a quadrature error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid::{self, FluidSchemeConfig};
use crate::grid::Grid;
use crate::kinetic::{self, KineticSchemeConfig};
use crate::params::ModelParams;
use crate::state::{moments, FluidState, KineticState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// transport, fluid, drag
    Lie,
    /// half transport, half fluid, drag, half fluid, half transport
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub fluid: FluidSchemeConfig,
    pub kinetic: KineticSchemeConfig,
    pub splitting: Splitting,
    /// Number of Picard refinements of the drag substep (0 disables).
    pub picard_iterations: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            fluid: FluidSchemeConfig::default(),
            kinetic: KineticSchemeConfig::default(),
            splitting: Splitting::Lie,
            picard_iterations: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationState {
    pub fluid: FluidState,
    pub kinetic: KineticState,
    pub t: f64,
    pub step_index: u64,
}

impl SimulationState {
    pub fn new(fluid: FluidState, kinetic: KineticState) -> Self {
        SimulationState {
            fluid,
            kinetic,
            t: 0.0,
            step_index: 0,
        }
    }

    /// `dx * sum(m + nw)`.
    pub fn mixture_momentum(&self, grid: &Grid) -> f64 {
        let (_, nw) = moments(&self.kinetic, grid);
        let s: f64 = self.fluid.m.iter().zip(&nw).map(|(m, j)| m + j).sum();
        grid.dx() * s
    }
}

/// Particle density `n` and momentum `nw` per x-cell.
pub fn drag_moments(f: &KineticState, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    moments(f, grid)
}

/// Fokker-Planck substep with the drag momentum transferred cell by cell.
pub fn coupled_drag_substep(
    sim: &SimulationState,
    dt: f64,
    params: &ModelParams,
    grid: &Grid,
    cfg: &SchemeConfig,
) -> Result<SimulationState> {
    let floor = cfg.fluid.density_floor;
    let rho = &sim.fluid.rho;
    let m_old = &sim.fluid.m;
    let (_, nw_old) = moments(&sim.kinetic, grid);
    let mut u: Vec<f64> = rho.iter().zip(m_old).map(|(&r, &m)| m / r.max(floor)).collect();

    let mut result = None;
    for _ in 0..=cfg.picard_iterations {
        let f_new = kinetic::fokker_planck_with_velocity(&sim.kinetic, rho, &u, dt, params, grid, &cfg.kinetic)?;
        let (_, nw_new) = moments(&f_new, grid);
        let m_new: Vec<f64> = m_old
            .iter()
            .zip(nw_new.iter().zip(&nw_old))
            .map(|(&m, (&jn, &jo))| m - (jn - jo))
            .collect();
        u = rho.iter().zip(&m_new).map(|(&r, &m)| m / r.max(floor)).collect();
        result = Some((f_new, m_new));
    }
    let (kinetic, m) = result.expect("at least one drag iteration");
    if let Some(i) = m.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalBlowup {
            stage: "drag exchange",
            index: i,
        });
    }
    Ok(SimulationState {
        fluid: FluidState { rho: rho.clone(), m },
        kinetic,
        t: sim.t,
        step_index: sim.step_index,
    })
}

/// Largest `dt` for which every substep of [`full_step`] is within its bound.
pub fn stable_dt(sim: &SimulationState, params: &ModelParams, grid: &Grid, cfg: &SchemeConfig) -> f64 {
    let fluid_dt = fluid::stable_dt(&sim.fluid, params, &cfg.fluid, grid);
    let transport_dt = kinetic::transport_stable_dt(grid, &cfg.kinetic);
    let dt = fluid_dt.min(transport_dt);
    match cfg.splitting {
        Splitting::Lie => dt,
        Splitting::Strang => 2.0 * dt,
    }
}

/// Advances the whole system by `dt`. On error the input is left untouched
/// and no partial state escapes.
pub fn full_step(
    sim: &SimulationState,
    dt: f64,
    params: &ModelParams,
    grid: &Grid,
    cfg: &SchemeConfig,
) -> Result<SimulationState> {
    let mut next = match cfg.splitting {
        Splitting::Lie => {
            let kinetic = kinetic::transport_substep(&sim.kinetic, dt, grid, &cfg.kinetic)?;
            let fluid = fluid::fluid_substep(&sim.fluid, dt, params, &cfg.fluid, grid)?;
            let mid = SimulationState {
                fluid,
                kinetic,
                ..sim.clone()
            };
            coupled_drag_substep(&mid, dt, params, grid, cfg)?
        }
        Splitting::Strang => {
            let h = 0.5 * dt;
            let kinetic = kinetic::transport_substep(&sim.kinetic, h, grid, &cfg.kinetic)?;
            let fluid = fluid::fluid_substep(&sim.fluid, h, params, &cfg.fluid, grid)?;
            let mid = SimulationState {
                fluid,
                kinetic,
                ..sim.clone()
            };
            let mut mid = coupled_drag_substep(&mid, dt, params, grid, cfg)?;
            mid.fluid = fluid::fluid_substep(&mid.fluid, h, params, &cfg.fluid, grid)?;
            mid.kinetic = kinetic::transport_substep(&mid.kinetic, h, grid, &cfg.kinetic)?;
            mid
        }
    };
    next.t = sim.t + dt;
    next.step_index = sim.step_index + 1;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::maxwellian;
    use std::f64::consts::PI;

    fn sim_uniform(grid: &Grid, rho: f64, u: f64, n: f64, w: f64) -> SimulationState {
        SimulationState::new(
            FluidState::uniform(grid.nx(), rho, u),
            KineticState::from_fn(grid, |_, v| maxwellian(n, w, v)),
        )
    }

    #[test]
    fn no_particles_no_exchange() {
        let grid = Grid::new(8, 16, 4.0).unwrap();
        let mut sim = sim_uniform(&grid, 1.0, 0.7, 1.0, 0.0);
        sim.kinetic = KineticState::zeros(&grid);
        let out = coupled_drag_substep(&sim, 0.1, &ModelParams::default(), &grid, &Default::default()).unwrap();
        assert_eq!(out.fluid, sim.fluid);
        assert_eq!(out.kinetic, sim.kinetic);
    }

    #[test]
    fn equilibrium_is_stationary() {
        let grid = Grid::new(16, 64, 8.3).unwrap();
        let sim = sim_uniform(&grid, 1.2, 0.3, 0.8, 0.3);
        let p = ModelParams::default();
        let cfg = SchemeConfig::default();
        let dt = 0.9 * stable_dt(&sim, &p, &grid, &cfg);
        let out = full_step(&sim, dt, &p, &grid, &cfg).unwrap();
        let fmax = sim.kinetic.max();
        for (a, b) in out.kinetic.f.iter().zip(&sim.kinetic.f) {
            assert!((a - b).abs() <= 1e-13 * fmax);
        }
        for (a, b) in out.fluid.m.iter().zip(&sim.fluid.m) {
            assert!((a - b).abs() <= 1e-13 * b.abs());
        }
        assert_eq!(out.fluid.rho, sim.fluid.rho);
        assert_eq!(out.step_index, 1);
        assert_eq!(out.t, dt);
    }

    #[test]
    fn exchange_matches_linearized_rate() {
        // rho = 1, u = 1, f = M_{1,0}: drag rate kappa0 (n u - nw) = 1
        let grid = Grid::new(4, 128, 8.0).unwrap();
        let sim = sim_uniform(&grid, 1.0, 1.0, 1.0, 0.0);
        let dt = 1e-3;
        let out = coupled_drag_substep(&sim, dt, &ModelParams::default(), &grid, &Default::default()).unwrap();
        let (_, nw0) = drag_moments(&sim.kinetic, &grid);
        let (_, nw1) = drag_moments(&out.kinetic, &grid);
        for i in 0..4 {
            let gained = nw1[i] - nw0[i];
            let lost = sim.fluid.m[i] - out.fluid.m[i];
            assert!((gained - lost).abs() < 1e-16);
            // linear rate dt, slowed by O(dt) relaxation and the O(dv^2) discrete rate
            assert!((gained / dt - 1.0).abs() < 1e-2, "{gained}");
            assert!(gained < dt);
        }
        assert!((out.mixture_momentum(&grid) - sim.mixture_momentum(&grid)).abs() < 1e-15);
    }

    #[test]
    fn strang_and_lie_conserve() {
        let grid = Grid::new(32, 32, 8.5).unwrap();
        let p = ModelParams::default();
        let x = grid.x_centers().to_vec();
        let fluid = FluidState {
            rho: x.iter().map(|x| 1.0 + 0.2 * (2.0 * PI * x).cos()).collect(),
            m: x.iter().map(|x| 0.1 * (2.0 * PI * x).sin()).collect(),
        };
        let kinetic = KineticState::from_fn(&grid, |x, v| maxwellian(1.0 + 0.3 * (2.0 * PI * x).sin(), 0.5, v));
        for splitting in [Splitting::Lie, Splitting::Strang] {
            let cfg = SchemeConfig {
                splitting,
                ..Default::default()
            };
            let mut sim = SimulationState::new(fluid.clone(), kinetic.clone());
            let p0 = sim.mixture_momentum(&grid);
            let r0 = sim.fluid.total_mass(grid.dx());
            let n0 = sim.kinetic.total_mass(&grid);
            for _ in 0..200 {
                let dt = 0.9 * stable_dt(&sim, &p, &grid, &cfg);
                sim = full_step(&sim, dt, &p, &grid, &cfg).unwrap();
            }
            assert!((sim.mixture_momentum(&grid) - p0).abs() < 1e-13);
            assert!((sim.fluid.total_mass(grid.dx()) - r0).abs() < 1e-13);
            assert!((sim.kinetic.total_mass(&grid) - n0).abs() < 1e-13);
        }
    }

    #[test]
    fn galilean_shift_of_homogeneous_state() {
        // Only u - v enters the velocity-space operator, so shifting the
        // fluid velocity, the profile and the velocity window together
        // reproduces the same solution in the moving frame.
        let w = 0.75;
        let g0 = Grid::new(4, 64, 7.0).unwrap();
        let g1 = Grid::with_window_center(4, 64, 7.0, w).unwrap();
        let p = ModelParams::default();
        let cfg = SchemeConfig::default();
        let profile = |v: f64| maxwellian(0.6, 0.4, v) + maxwellian(0.4, -1.0, v);
        let mut a = SimulationState::new(
            FluidState::uniform(4, 1.0, -0.2),
            KineticState::from_fn(&g0, |_, v| profile(v)),
        );
        let mut b = SimulationState::new(
            FluidState::uniform(4, 1.0, -0.2 + w),
            KineticState::from_fn(&g1, |_, v| profile(v - w)),
        );
        for _ in 0..50 {
            a = full_step(&a, 0.01, &p, &g0, &cfg).unwrap();
            b = full_step(&b, 0.01, &p, &g1, &cfg).unwrap();
        }
        for (fa, fb) in a.kinetic.f.iter().zip(&b.kinetic.f) {
            assert!((fa - fb).abs() < 1e-12);
        }
        let ua = a.fluid.velocity(1e-12);
        let ub = b.fluid.velocity(1e-12);
        for (x, y) in ua.iter().zip(&ub) {
            assert!((x + w - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejected_step_reports_admissible() {
        let grid = Grid::new(16, 16, 4.0).unwrap();
        let sim = sim_uniform(&grid, 1.0, 0.0, 1.0, 0.0);
        let err = full_step(&sim, 1.0, &ModelParams::default(), &grid, &Default::default());
        assert!(matches!(err, Err(Error::StepRejected { stage: "transport", .. })));
    }
}
