//! Cell-averaged fluid and kinetic state containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Vacuum floor used when reconstructing velocities from `(rho, m)`.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-12;

/// Density and momentum per x-cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub rho: Vec<f64>,
    pub m: Vec<f64>,
}

impl FluidState {
    pub fn new(rho: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        let s = FluidState { rho, m };
        s.check()?;
        Ok(s)
    }

    /// Uniform state `rho = rho0`, `u = u0`.
    pub fn uniform(nx: usize, rho0: f64, u0: f64) -> Self {
        FluidState {
            rho: vec![rho0; nx],
            m: vec![rho0 * u0; nx],
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Checks the container invariants: equal lengths, finite entries,
    /// `rho >= 0` and `m = 0` wherever `rho = 0`.
    pub fn check(&self) -> Result<()> {
        if self.rho.len() != self.m.len() {
            return Err(Error::DegenerateInput(format!(
                "rho has {} cells but m has {}",
                self.rho.len(),
                self.m.len()
            )));
        }
        for (i, (&r, &m)) in self.rho.iter().zip(&self.m).enumerate() {
            if !r.is_finite() || !m.is_finite() {
                return Err(Error::NumericalBlowup {
                    stage: "fluid state",
                    index: i,
                });
            }
            if r < 0.0 {
                return Err(Error::domain("density", "nonnegative", r));
            }
            if r == 0.0 && m != 0.0 {
                return Err(Error::DegenerateInput(format!(
                    "nonzero momentum {m} in vacuum cell {i}"
                )));
            }
        }
        Ok(())
    }

    /// `dx * sum(rho)`.
    pub fn total_mass(&self, dx: f64) -> f64 {
        dx * self.rho.iter().sum::<f64>()
    }

    /// `dx * sum(m)`.
    pub fn total_momentum(&self, dx: f64) -> f64 {
        dx * self.m.iter().sum::<f64>()
    }

    pub fn velocity(&self, floor: f64) -> Vec<f64> {
        velocity_from_state(self, floor)
    }
}

/// `u = m / max(rho, floor)`; the exact quotient wherever `rho >= floor`.
pub fn velocity_from_state(state: &FluidState, floor: f64) -> Vec<f64> {
    state
        .rho
        .iter()
        .zip(&state.m)
        .map(|(&r, &m)| m / r.max(floor))
        .collect()
}

/// Phase-space density, stored row-major as `f[i * nv + j]` with `i` the
/// x-cell and `j` the velocity cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticState {
    nx: usize,
    nv: usize,
    pub f: Vec<f64>,
}

impl KineticState {
    pub fn zeros(grid: &Grid) -> Self {
        KineticState {
            nx: grid.nx(),
            nv: grid.nv(),
            f: vec![0.0; grid.len()],
        }
    }

    pub fn from_vec(grid: &Grid, f: Vec<f64>) -> Result<Self> {
        if f.len() != grid.len() {
            return Err(Error::DegenerateInput(format!(
                "expected {} phase-space values, got {}",
                grid.len(),
                f.len()
            )));
        }
        let s = KineticState {
            nx: grid.nx(),
            nv: grid.nv(),
            f,
        };
        s.check()?;
        Ok(s)
    }

    /// `f(x_i, v_j) = profile(x_i, v_j)` at every cell center.
    pub fn from_fn(grid: &Grid, profile: impl Fn(f64, f64) -> f64) -> Self {
        let mut f = Vec::with_capacity(grid.len());
        for &x in grid.x_centers() {
            for &v in grid.v_centers() {
                f.push(profile(x, v));
            }
        }
        KineticState {
            nx: grid.nx(),
            nv: grid.nv(),
            f,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.f[i * self.nv + j]
    }

    /// The velocity profile of x-cell `i`.
    pub fn column(&self, i: usize) -> &[f64] {
        &self.f[i * self.nv..(i + 1) * self.nv]
    }

    pub fn columns(&self) -> std::slice::ChunksExact<'_, f64> {
        self.f.chunks_exact(self.nv)
    }

    pub fn check(&self) -> Result<()> {
        for (k, &v) in self.f.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NumericalBlowup {
                    stage: "kinetic state",
                    index: k,
                });
            }
            if v < 0.0 {
                return Err(Error::domain("distribution value", "nonnegative", v));
            }
        }
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.f.iter().fold(0.0_f64, |a, &b| a.max(b))
    }

    pub fn min(&self) -> f64 {
        self.f.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// `dx * dv * sum(f)`.
    pub fn total_mass(&self, grid: &Grid) -> f64 {
        grid.dx() * grid.dv() * self.f.iter().sum::<f64>()
    }

    /// `dx * dv * sum(v f)`.
    pub fn total_momentum(&self, grid: &Grid) -> f64 {
        let v = grid.v_centers();
        let s: f64 = self.columns().map(|col| first_moment(col, v)).sum();
        grid.dx() * grid.dv() * s
    }
}

/// Density `n` and momentum `nw` of the particle phase per x-cell.
pub fn moments(f: &KineticState, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let dv = grid.dv();
    let v = grid.v_centers();
    f.columns()
        .map(|col| {
            let n: f64 = col.iter().sum();
            (dv * n, dv * first_moment(col, v))
        })
        .unzip()
}

/// `sum_j v_j g_j`, accumulated in mirrored pairs from the outside in so that
/// profiles even in `v` give exactly zero on a symmetric grid.
#[inline]
pub fn first_moment(g: &[f64], v: &[f64]) -> f64 {
    let n = g.len();
    let mut s = 0.0;
    for k in 0..n / 2 {
        let m = n - 1 - k;
        s += v[k] * g[k] + v[m] * g[m];
    }
    if n % 2 == 1 {
        s += v[n / 2] * g[n / 2];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_reconstruction() {
        let s = FluidState::new(vec![1.0, 1.0], vec![2.0, 0.0]).unwrap();
        assert_eq!(velocity_from_state(&s, 1e-12), vec![2.0, 0.0]);
        let s = FluidState::new(vec![0.0], vec![0.0]).unwrap();
        assert_eq!(velocity_from_state(&s, 1e-12), vec![0.0]);
        let s = FluidState::new(vec![0.5], vec![1.0]).unwrap();
        assert_eq!(velocity_from_state(&s, 1e-12), vec![2.0]);
    }

    #[test]
    fn fluid_invariants() {
        assert!(FluidState::new(vec![-1.0], vec![0.0]).is_err());
        assert!(FluidState::new(vec![0.0], vec![1.0]).is_err());
        assert!(FluidState::new(vec![1.0], vec![f64::INFINITY]).is_err());
        assert!(FluidState::new(vec![1.0, 2.0], vec![0.0]).is_err());
    }

    #[test]
    fn kinetic_invariants() {
        let g = Grid::new(4, 8, 1.0).unwrap();
        assert!(KineticState::from_vec(&g, vec![0.0; 31]).is_err());
        let mut f = vec![1.0; 32];
        f[3] = -1e-20;
        assert!(KineticState::from_vec(&g, f).is_err());
        assert!(KineticState::from_vec(&g, vec![0.5; 32]).is_ok());
    }

    #[test]
    fn zero_moments() {
        let g = Grid::new(4, 8, 2.0).unwrap();
        let (n, nw) = moments(&KineticState::zeros(&g), &g);
        assert!(n.iter().chain(&nw).all(|&x| x == 0.0));
    }

    #[test]
    fn even_profile_has_zero_momentum() {
        let g = Grid::new(4, 16, 3.0).unwrap();
        let f = KineticState::from_fn(&g, |x, v| (1.0 + x) * (-(v * v)).exp() + v.abs());
        let (_, nw) = moments(&f, &g);
        assert!(nw.iter().all(|&x| x == 0.0), "{nw:?}");
    }
}
