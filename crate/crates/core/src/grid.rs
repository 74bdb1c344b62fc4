//! Uniform cell-centered grid on the phase space `[0,1) x [c - v_max, c + v_max]`.
//!
//! `x` is periodic with unit length. The velocity window is centered at `c`
//! (zero unless shifted explicitly) and carries zero-flux boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_NX: usize = 4;
pub const MIN_NV: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    nv: usize,
    v_max: f64,
    v_center: f64,
    dx: f64,
    dv: f64,
    x_centers: Vec<f64>,
    v_centers: Vec<f64>,
}

impl Grid {
    pub fn new(nx: usize, nv: usize, v_max: f64) -> Result<Self> {
        Self::with_window_center(nx, nv, v_max, 0.0)
    }

    /// Grid whose velocity window is `[center - v_max, center + v_max]`.
    pub fn with_window_center(nx: usize, nv: usize, v_max: f64, center: f64) -> Result<Self> {
        if nx < MIN_NX {
            return Err(Error::domain("nx", "at least 4", nx as f64));
        }
        if nv < MIN_NV {
            return Err(Error::domain("nv", "at least 8", nv as f64));
        }
        if !(v_max > 0.0 && v_max.is_finite()) {
            return Err(Error::domain("v_max", "positive and finite", v_max));
        }
        if !center.is_finite() {
            return Err(Error::domain("velocity window center", "finite", center));
        }
        let dx = 1.0 / nx as f64;
        let dv = 2.0 * v_max / nv as f64;
        let x_centers = (0..nx).map(|i| (i as f64 + 0.5) * dx).collect();
        // Symmetric construction keeps the centers exactly antisymmetric about
        // the window center when nv is even.
        let v_centers = (0..nv)
            .map(|j| center + (2.0 * j as f64 + 1.0 - nv as f64) * 0.5 * dv)
            .collect();
        Ok(Grid {
            nx,
            nv,
            v_max,
            v_center: center,
            dx,
            dv,
            x_centers,
            v_centers,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn v_center(&self) -> f64 {
        self.v_center
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn x_centers(&self) -> &[f64] {
        &self.x_centers
    }

    pub fn v_centers(&self) -> &[f64] {
        &self.v_centers
    }

    /// Velocity at the face between cells `j` and `j + 1`.
    #[inline]
    pub fn v_face(&self, j: usize) -> f64 {
        self.v_center + (2.0 * (j + 1) as f64 - self.nv as f64) * 0.5 * self.dv
    }

    /// Largest `|v|` over cell centers; this is what bounds free-streaming CFL.
    pub fn max_abs_velocity(&self) -> f64 {
        self.v_centers.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// Number of phase-space cells.
    pub fn len(&self) -> usize {
        self.nx * self.nv
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_covers_domains() {
        let g = Grid::new(64, 32, 8.0).unwrap();
        assert_eq!(g.dx() * g.nx() as f64, 1.0);
        assert_eq!(g.dv() * g.nv() as f64, 16.0);
        assert_eq!(g.x_centers()[0], 0.5 / 64.0);
    }

    #[test]
    fn velocity_centers_symmetric_for_even_nv() {
        let g = Grid::new(8, 40, 7.5).unwrap();
        let v = g.v_centers();
        for j in 0..g.nv() {
            assert_eq!(v[j], -v[g.nv() - 1 - j]);
        }
        assert_eq!(g.v_face(g.nv() / 2 - 1), 0.0);
        assert!((g.v_face(g.nv() - 1) - 7.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_or_bad_grids() {
        assert!(Grid::new(3, 16, 1.0).is_err());
        assert!(Grid::new(4, 7, 1.0).is_err());
        assert!(Grid::new(4, 8, 0.0).is_err());
        assert!(Grid::new(4, 8, f64::NAN).is_err());
        assert!(Grid::new(4, 8, 1.0).is_ok());
    }

    #[test]
    fn shifted_window() {
        let g = Grid::with_window_center(8, 16, 4.0, 1.5).unwrap();
        let v = g.v_centers();
        assert!((v[0] - (-2.5 + 0.25)).abs() < 1e-14);
        assert!((v[15] - (5.5 - 0.25)).abs() < 1e-14);
    }
}
