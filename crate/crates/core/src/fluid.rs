//! Compressible Navier-Stokes substep on the periodic grid, without drag.
//!
//! Convective fluxes are local Lax-Friedrichs (Rusanov) on `(rho, m)` with the
//! pressure carried in the momentum flux. The viscous term `(mu(rho) u_x)_x`
//! is a theta-scheme on centered differences with face viscosity evaluated at
//! the arithmetic mean of the adjacent densities. Both parts are written as
//! differences of face fluxes, so the discrete totals of `rho` and `m` only
//! move by round-off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::state::{FluidState, DEFAULT_DENSITY_FLOOR};
use crate::tridiag::solve_cyclic_tridiagonal;

/// Relative slack allowed when comparing a requested step against the bound.
pub(crate) const DT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    /// Piecewise-constant states, forward Euler in time.
    FirstOrder,
    /// Minmod-limited linear states, two-stage SSP Runge-Kutta in time.
    MusclMinmod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluidSchemeConfig {
    pub cfl: f64,
    /// Implicitness of the viscous term: 0 explicit, 1 backward Euler,
    /// 0.5 Crank-Nicolson.
    pub visc_theta: f64,
    pub reconstruction: Reconstruction,
    pub density_floor: f64,
}

impl Default for FluidSchemeConfig {
    fn default() -> Self {
        FluidSchemeConfig {
            cfl: 0.9,
            visc_theta: 1.0,
            reconstruction: Reconstruction::FirstOrder,
            density_floor: DEFAULT_DENSITY_FLOOR,
        }
    }
}

impl FluidSchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Validation(format!(
                "fluid.cfl must be in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(0.0..=1.0).contains(&self.visc_theta) {
            return Err(Error::Validation(format!(
                "fluid.visc_theta must be in [0, 1], got {}",
                self.visc_theta
            )));
        }
        if !(self.density_floor > 0.0) {
            return Err(Error::Validation("fluid.density_floor must be > 0".into()));
        }
        Ok(())
    }
}

/// Largest step honoring the advective CFL condition and, for a viscous
/// theta below 1/2, the explicit diffusion limit.
pub fn stable_dt(state: &FluidState, params: &ModelParams, cfg: &FluidSchemeConfig, grid: &Grid) -> f64 {
    let dx = grid.dx();
    let floor = cfg.density_floor;
    let mut max_speed = 0.0_f64;
    let mut max_diffusivity = 0.0_f64;
    for (&r, &m) in state.rho.iter().zip(&state.m) {
        let rf = r.max(floor);
        max_speed = max_speed.max((m / rf).abs() + params.sound_speed(rf));
        max_diffusivity = max_diffusivity.max(params.mu(r) / rf);
    }
    let mut dt = if max_speed > 0.0 {
        cfg.cfl * dx / max_speed
    } else {
        f64::INFINITY
    };
    let explicit_weight = 1.0 - 2.0 * cfg.visc_theta;
    if explicit_weight > 0.0 && max_diffusivity > 0.0 {
        dt = dt.min(cfg.cfl * dx * dx / (2.0 * explicit_weight * max_diffusivity));
    }
    dt
}

/// Advances `(rho, m)` by `dt`: convective update, then the viscous update.
pub fn fluid_substep(
    state: &FluidState,
    dt: f64,
    params: &ModelParams,
    cfg: &FluidSchemeConfig,
    grid: &Grid,
) -> Result<FluidState> {
    let admissible = stable_dt(state, params, cfg, grid);
    if !(dt > 0.0) || dt > admissible * (1.0 + DT_SLACK) {
        return Err(Error::StepRejected {
            stage: "fluid",
            requested: dt,
            admissible,
        });
    }
    let mut next = match cfg.reconstruction {
        Reconstruction::FirstOrder => convective_euler(state, dt, params, cfg, grid),
        Reconstruction::MusclMinmod => {
            let stage1 = convective_euler(state, dt, params, cfg, grid);
            let stage2 = convective_euler(&stage1, dt, params, cfg, grid);
            FluidState {
                rho: average(&state.rho, &stage2.rho),
                m: average(&state.m, &stage2.m),
            }
        }
    };
    viscous_update(&mut next, dt, params, cfg, grid)?;
    for (i, (&r, &m)) in next.rho.iter().zip(&next.m).enumerate() {
        if !r.is_finite() || !m.is_finite() {
            return Err(Error::NumericalBlowup {
                stage: "fluid",
                index: i,
            });
        }
        if r < 0.0 {
            return Err(Error::NumericalBlowup {
                stage: "fluid density positivity",
                index: i,
            });
        }
    }
    Ok(next)
}

fn average(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Rusanov flux between left and right conserved states.
#[inline]
fn rusanov((rl, ml): (f64, f64), (rr, mr): (f64, f64), params: &ModelParams, floor: f64) -> (f64, f64) {
    let rlf = rl.max(floor);
    let rrf = rr.max(floor);
    let ul = ml / rlf;
    let ur = mr / rrf;
    let a = (ul.abs() + params.sound_speed(rlf)).max(ur.abs() + params.sound_speed(rrf));
    let f_rho = 0.5 * (ml + mr) - 0.5 * a * (rr - rl);
    let f_m = 0.5 * (ml * ul + params.p(rl) + mr * ur + params.p(rr)) - 0.5 * a * (mr - ml);
    (f_rho, f_m)
}

/// One forward-Euler convective step with the configured reconstruction.
fn convective_euler(
    state: &FluidState,
    dt: f64,
    params: &ModelParams,
    cfg: &FluidSchemeConfig,
    grid: &Grid,
) -> FluidState {
    let n = state.len();
    let floor = cfg.density_floor;
    let (rho, m) = (&state.rho, &state.m);
    let prev = |i: usize| if i == 0 { n - 1 } else { i - 1 };
    let next = |i: usize| if i + 1 == n { 0 } else { i + 1 };

    let (slope_rho, slope_m): (Vec<f64>, Vec<f64>) = match cfg.reconstruction {
        Reconstruction::FirstOrder => (vec![0.0; n], vec![0.0; n]),
        Reconstruction::MusclMinmod => (0..n)
            .map(|i| {
                let (l, r) = (prev(i), next(i));
                (
                    minmod(rho[i] - rho[l], rho[r] - rho[i]),
                    minmod(m[i] - m[l], m[r] - m[i]),
                )
            })
            .unzip(),
    };

    // flux[i] lives on the face between cells i and i + 1
    let flux: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let r = next(i);
            let left = (rho[i] + 0.5 * slope_rho[i], m[i] + 0.5 * slope_m[i]);
            let right = (rho[r] - 0.5 * slope_rho[r], m[r] - 0.5 * slope_m[r]);
            rusanov(left, right, params, floor)
        })
        .collect();

    let lambda = dt / grid.dx();
    let flux = limit_outflow(flux, rho, lambda);
    let mut out = FluidState {
        rho: Vec::with_capacity(n),
        m: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (fr_in, fm_in) = flux[prev(i)];
        let (fr_out, fm_out) = flux[i];
        out.rho.push(rho[i] - lambda * (fr_out - fr_in));
        out.m.push(m[i] - lambda * (fm_out - fm_in));
    }
    out
}

/// Scales face fluxes so that no cell exports more mass than it holds.
///
/// Rusanov is positive whenever its wave speed bounds `|m| / rho`; that fails
/// only in cells whose density is below the velocity floor, so away from
/// vacuum this is the identity.
fn limit_outflow(mut flux: Vec<(f64, f64)>, rho: &[f64], lambda: f64) -> Vec<(f64, f64)> {
    let n = rho.len();
    let prev = |i: usize| if i == 0 { n - 1 } else { i - 1 };
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let out = lambda * (flux[i].0.max(0.0) + (-flux[prev(i)].0).max(0.0));
            if out > rho[i] {
                rho[i] / out
            } else {
                1.0
            }
        })
        .collect();
    for (i, f) in flux.iter_mut().enumerate() {
        let donor = if f.0 >= 0.0 { i } else { (i + 1) % n };
        let s = scale[donor];
        if s < 1.0 {
            f.0 *= s;
            f.1 *= s;
        }
    }
    flux
}

/// `m <- m + dt (mu(rho) u_x)_x` with the theta-weighted face fluxes.
fn viscous_update(
    state: &mut FluidState,
    dt: f64,
    params: &ModelParams,
    cfg: &FluidSchemeConfig,
    grid: &Grid,
) -> Result<()> {
    let n = state.len();
    let dx = grid.dx();
    let theta = cfg.visc_theta;
    let rho = &state.rho;
    let next = |i: usize| if i + 1 == n { 0 } else { i + 1 };
    let prev = |i: usize| if i == 0 { n - 1 } else { i - 1 };

    let mu_face: Vec<f64> = (0..n).map(|i| params.mu(0.5 * (rho[i] + rho[next(i)]))).collect();
    let u_old: Vec<f64> = rho
        .iter()
        .zip(&state.m)
        .map(|(&r, &m)| m / r.max(cfg.density_floor))
        .collect();

    let u_new = if theta > 0.0 && rho.iter().any(|&r| r > 0.0) {
        // rho u - theta dt L(u) = m + (1 - theta) dt L(u_old)
        let c = theta * dt / (dx * dx);
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = state.m.clone();
        let explicit = (1.0 - theta) * dt / (dx * dx);
        for i in 0..n {
            let (ml, mr) = (mu_face[prev(i)], mu_face[i]);
            lower[i] = -c * ml;
            upper[i] = -c * mr;
            diag[i] = rho[i] + c * (ml + mr);
            if explicit > 0.0 {
                rhs[i] += explicit * (mr * (u_old[next(i)] - u_old[i]) - ml * (u_old[i] - u_old[prev(i)]));
            }
        }
        solve_cyclic_tridiagonal(&lower, &diag, &upper, &mut rhs, "fluid viscous solve")?;
        Some(rhs)
    } else {
        None
    };

    // Face fluxes q = theta mu (u_new)_x + (1 - theta) mu (u_old)_x, applied in
    // conservative form so the momentum total telescopes.
    let face_flux = |i: usize| {
        let r = next(i);
        let mut g = (1.0 - theta) * (u_old[r] - u_old[i]);
        if let Some(u) = &u_new {
            g += theta * (u[r] - u[i]);
        }
        mu_face[i] * g / dx
    };
    let q: Vec<f64> = (0..n).map(face_flux).collect();
    let lambda = dt / dx;
    for i in 0..n {
        if rho[i] == 0.0 {
            state.m[i] = 0.0;
        } else {
            state.m[i] += lambda * (q[i] - q[prev(i)]);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(a: f64, mu0: f64, mu1: f64) -> ModelParams {
        ModelParams {
            a,
            gamma: 1.4,
            mu0,
            mu1,
            beta: 1.0,
            kappa0: 1.0,
        }
    }

    #[test]
    fn constant_state_is_exact() {
        let grid = Grid::new(32, 8, 1.0).unwrap();
        let p = ModelParams::default();
        for reconstruction in [Reconstruction::FirstOrder, Reconstruction::MusclMinmod] {
            for visc_theta in [0.0, 0.5, 1.0] {
                let cfg = FluidSchemeConfig {
                    reconstruction,
                    visc_theta,
                    ..Default::default()
                };
                let s = FluidState::uniform(32, 1.3, -0.7);
                let dt = stable_dt(&s, &p, &cfg, &grid);
                let out = fluid_substep(&s, dt, &p, &cfg, &grid).unwrap();
                assert_eq!(out.rho, s.rho);
                for (a, b) in out.m.iter().zip(&s.m) {
                    assert!((a - b).abs() <= 1e-14 * b.abs());
                }
            }
        }
    }

    #[test]
    fn stable_dt_formula() {
        let grid = Grid::new(64, 8, 1.0).unwrap();
        let p = ModelParams {
            gamma: 2.0,
            ..Default::default()
        };
        let cfg = FluidSchemeConfig::default();
        let s = FluidState::uniform(64, 1.0, 0.0);
        let dt = stable_dt(&s, &p, &cfg, &grid);
        assert!((dt - 0.9 / 64.0 / 2f64.sqrt()).abs() < 1e-15);

        let fine = Grid::new(128, 8, 1.0).unwrap();
        let s2 = FluidState::uniform(128, 1.0, 0.0);
        assert!((stable_dt(&s2, &p, &cfg, &fine) - 0.5 * dt).abs() < 1e-15);
    }

    #[test]
    fn vacuum_dt_bounds() {
        let grid = Grid::new(16, 8, 1.0).unwrap();
        let p = ModelParams::default();
        let s = FluidState::uniform(16, 0.0, 0.0);
        let explicit = FluidSchemeConfig {
            visc_theta: 0.0,
            ..Default::default()
        };
        let dt = stable_dt(&s, &p, &explicit, &grid);
        let want = 0.9 * grid.dx() * grid.dx() / (2.0 * p.mu0 / DEFAULT_DENSITY_FLOOR);
        assert!((dt - want).abs() <= 1e-15 * want);
        // implicit viscosity leaves only the sound speed at the floor
        let c = p.sound_speed(DEFAULT_DENSITY_FLOOR);
        let dt = stable_dt(&s, &p, &FluidSchemeConfig::default(), &grid);
        assert!((dt - 0.9 * grid.dx() / c).abs() <= 1e-15 * dt);
    }

    #[test]
    fn oversized_step_rejected() {
        let grid = Grid::new(16, 8, 1.0).unwrap();
        let p = ModelParams::default();
        let cfg = FluidSchemeConfig::default();
        let s = FluidState::uniform(16, 1.0, 0.5);
        let dt = stable_dt(&s, &p, &cfg, &grid);
        match fluid_substep(&s, 2.0 * dt, &p, &cfg, &grid) {
            Err(Error::StepRejected { admissible, .. }) => assert_eq!(admissible, dt),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn heat_mode_decay() {
        // rho = 1, pressure off, mu = 1: the viscous step is the discrete heat
        // equation and the sine mode is an eigenvector of the Laplacian.
        let nx = 64;
        let grid = Grid::new(nx, 8, 1.0).unwrap();
        let p = params(0.0, 1.0, 0.0);
        let cfg = FluidSchemeConfig {
            visc_theta: 0.0,
            ..Default::default()
        };
        let eps = 1e-7;
        let x = grid.x_centers();
        let s = FluidState {
            rho: vec![1.0; nx],
            m: x.iter().map(|x| eps * (2.0 * PI * x).sin()).collect(),
        };
        let dt = 0.5 * stable_dt(&s, &p, &cfg, &grid);
        let out = fluid_substep(&s, dt, &p, &cfg, &grid).unwrap();
        let u = out.velocity(1e-12);
        let proj = |g: &[f64]| g.iter().zip(x).map(|(g, x)| g * (2.0 * PI * x).sin()).sum::<f64>();
        let dx = grid.dx();
        let want = 1.0 - dt * (2.0 / (dx * dx)) * (1.0 - (2.0 * PI * dx).cos());
        let got = proj(&u) / proj(&s.m);
        assert!((got - want).abs() < 1e-6, "got {got}, want {want}");
    }

    #[test]
    fn implicit_heat_mode_decay() {
        let nx = 32;
        let grid = Grid::new(nx, 8, 1.0).unwrap();
        let p = params(0.0, 1.0, 0.0);
        let cfg = FluidSchemeConfig::default();
        let eps = 1e-7;
        let x = grid.x_centers();
        let s = FluidState {
            rho: vec![1.0; nx],
            m: x.iter().map(|x| eps * (2.0 * PI * x).sin()).collect(),
        };
        let dt = 1e-2;
        let out = fluid_substep(&s, dt, &p, &cfg, &grid).unwrap();
        let u = out.velocity(1e-12);
        let dx = grid.dx();
        let lam = (2.0 / (dx * dx)) * (1.0 - (2.0 * PI * dx).cos());
        let want = 1.0 / (1.0 + dt * lam);
        let proj = |g: &[f64]| g.iter().zip(x).map(|(g, x)| g * (2.0 * PI * x).sin()).sum::<f64>();
        assert!((proj(&u) / proj(&s.m) - want).abs() < 1e-6);
    }

    #[test]
    fn conserves_mass_and_momentum() {
        let nx = 50;
        let grid = Grid::new(nx, 8, 1.0).unwrap();
        let p = ModelParams::default();
        let x = grid.x_centers().to_vec();
        for reconstruction in [Reconstruction::FirstOrder, Reconstruction::MusclMinmod] {
            for visc_theta in [0.0, 1.0] {
                let cfg = FluidSchemeConfig {
                    reconstruction,
                    visc_theta,
                    cfl: 0.45,
                    ..Default::default()
                };
                let mut s = FluidState {
                    rho: x.iter().map(|x| 1.0 + 0.5 * (2.0 * PI * x).sin()).collect(),
                    m: x.iter().map(|x| 0.3 + (4.0 * PI * x).cos()).collect(),
                };
                let (m0, p0) = (s.total_mass(grid.dx()), s.total_momentum(grid.dx()));
                for _ in 0..500 {
                    let dt = stable_dt(&s, &p, &cfg, &grid);
                    s = fluid_substep(&s, dt, &p, &cfg, &grid).unwrap();
                    assert!(s.rho.iter().all(|&r| r >= 0.0));
                }
                assert!((s.total_mass(grid.dx()) - m0).abs() <= 1e-13 * m0);
                assert!((s.total_momentum(grid.dx()) - p0).abs() <= 1e-13 * p0.abs());
            }
        }
    }

    #[test]
    fn vacuum_region_stays_nonnegative() {
        let nx = 64;
        let grid = Grid::new(nx, 8, 1.0).unwrap();
        let p = ModelParams::default();
        let cfg = FluidSchemeConfig::default();
        let x = grid.x_centers().to_vec();
        let rho: Vec<f64> = x
            .iter()
            .map(|&x| if (0.25..0.75).contains(&x) { 1.0 } else { 0.0 })
            .collect();
        let mut s = FluidState::new(rho, vec![0.0; nx]).unwrap();
        for _ in 0..200 {
            let dt = stable_dt(&s, &p, &cfg, &grid);
            s = fluid_substep(&s, dt, &p, &cfg, &grid).unwrap();
            assert!(s.rho.iter().all(|&r| r >= 0.0));
        }
    }
}
