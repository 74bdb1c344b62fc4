//! Vlasov-Fokker-Planck substeps: free streaming in `x` and the velocity-space
//! drift-diffusion operator with frozen fluid fields.
//!
//! The collision operator is discretized with Chang-Cooper (exponentially
//! fitted) face fluxes and advanced by backward Euler, one independent
//! tridiagonal system per x-cell. Writing the face flux as
//!
//! ```text
//! F_{j+1/2} = kappa / dv * ( B(-w) f_j - B(w) f_{j+1} ),   w = (u - v_{j+1/2}) dv,
//! ```
//!
//! with `B(w) = w / (e^w - 1)` the Bernoulli function, the flux vanishes
//! exactly on `f_j ~ exp(-(v_j - u)^2 / 2)`. Both Bernoulli values are positive,
//! so `I + dt A` is an M-matrix whose columns sum to one: the update is
//! nonnegative and conserves `sum_j f_j` for every `dt > 0`, and the
//! elimination never meets a non-positive pivot.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid::DT_SLACK;
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::state::{FluidState, KineticState};
use crate::tridiag::solve_tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    /// First-order upwind, forward Euler.
    Upwind1,
    /// Minmod-limited MUSCL, two-stage SSP Runge-Kutta.
    MusclMinmod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpSolver {
    /// Chang-Cooper face weights with backward Euler in `v`.
    ImplicitCc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticSchemeConfig {
    pub transport: Transport,
    pub fp_solver: FpSolver,
    /// Clamp tiny negative values to zero after transport. Diagnostic aid only;
    /// it breaks exact mass conservation when it triggers.
    pub positivity_clip: bool,
    /// CFL fraction for free streaming, `dt max|v| <= cfl dx`.
    pub cfl: f64,
}

impl Default for KineticSchemeConfig {
    fn default() -> Self {
        KineticSchemeConfig {
            transport: Transport::Upwind1,
            fp_solver: FpSolver::ImplicitCc,
            positivity_clip: false,
            cfl: 0.9,
        }
    }
}

impl KineticSchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Validation(format!(
                "kinetic.cfl must be in (0, 1], got {}",
                self.cfl
            )));
        }
        Ok(())
    }
}

/// Largest stable free-streaming step for the configured CFL fraction.
pub fn transport_stable_dt(grid: &Grid, cfg: &KineticSchemeConfig) -> f64 {
    let vmax = grid.max_abs_velocity();
    // the limited two-stage scheme is positive only up to Courant number 1/2
    let limit = match cfg.transport {
        Transport::Upwind1 => 1.0,
        Transport::MusclMinmod => 0.5,
    };
    if vmax > 0.0 {
        limit * cfg.cfl * grid.dx() / vmax
    } else {
        f64::INFINITY
    }
}

/// `f(x, v, t) <- f(x - v dt, v, t)` on each velocity row, in flux form.
pub fn transport_substep(f: &KineticState, dt: f64, grid: &Grid, cfg: &KineticSchemeConfig) -> Result<KineticState> {
    // The hard limit is unit Courant number on the fastest row; the configured
    // cfl only shapes the step the controller picks.
    let admissible = grid.dx() / grid.max_abs_velocity();
    if !(dt > 0.0) || dt > admissible * (1.0 + DT_SLACK) {
        return Err(Error::StepRejected {
            stage: "transport",
            requested: dt,
            admissible,
        });
    }
    let mut out = match cfg.transport {
        Transport::Upwind1 => streaming_euler(f, dt, grid, false),
        Transport::MusclMinmod => {
            let s1 = streaming_euler(f, dt, grid, true);
            let s2 = streaming_euler(&s1, dt, grid, true);
            let mut avg = s2;
            avg.f
                .par_iter_mut()
                .zip(f.f.par_iter())
                .for_each(|(a, b)| *a = 0.5 * (*a + b));
            avg
        }
    };
    if cfg.positivity_clip {
        out.f.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    check_finite(&out, "transport")?;
    Ok(out)
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

/// Upwind face value for velocity `v` from the four cells around the face:
/// `l2 | l1 | face | r1 | r2`.
#[inline]
fn upwind_face(l2: f64, l1: f64, r1: f64, r2: f64, v: f64, limited: bool) -> f64 {
    if v >= 0.0 {
        if limited {
            l1 + 0.5 * minmod(l1 - l2, r1 - l1)
        } else {
            l1
        }
    } else if limited {
        r1 - 0.5 * minmod(r1 - l1, r2 - r1)
    } else {
        r1
    }
}

fn streaming_euler(f: &KineticState, dt: f64, grid: &Grid, limited: bool) -> KineticState {
    let nx = grid.nx();
    let nv = grid.nv();
    let lambda = dt / grid.dx();
    let v = grid.v_centers();
    let row = |i: usize| &f.f[(i % nx) * nv..(i % nx + 1) * nv];
    // face_flux[i * nv + j]: flux through the face right of cell i
    let mut face_flux = vec![0.0; grid.len()];
    face_flux.par_chunks_mut(nv).enumerate().for_each(|(i, out)| {
        let (l2, l1, r1, r2) = (row(i + nx - 1), row(i), row(i + 1), row(i + 2));
        for j in 0..nv {
            out[j] = v[j] * upwind_face(l2[j], l1[j], r1[j], r2[j], v[j], limited);
        }
    });
    let mut out = f.clone();
    out.f.par_chunks_mut(nv).enumerate().for_each(|(i, col)| {
        let left = if i == 0 { nx - 1 } else { i - 1 };
        let (fr, fl) = (&face_flux[i * nv..(i + 1) * nv], &face_flux[left * nv..(left + 1) * nv]);
        for j in 0..nv {
            col[j] -= lambda * (fr[j] - fl[j]);
        }
    });
    out
}

/// `B(w) = w / (e^w - 1)`, with its Taylor series near zero.
#[inline]
pub fn bernoulli(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        1.0 - 0.5 * w + w * w / 12.0
    } else {
        w / w.exp_m1()
    }
}

/// Chang-Cooper weight `delta(w) = 1/w - 1/(e^w - 1)` of `f_{j+1}` in the face value
/// `f_{j+1/2} = (1 - delta) f_j + delta f_{j+1}`; tends to 1/2 as `w -> 0`.
pub fn chang_cooper_delta(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        0.5 - w / 12.0
    } else {
        1.0 / w - 1.0 / w.exp_m1()
    }
}

/// Backward-Euler Fokker-Planck step per x-cell with `kappa(rho_i)` and `u_i`
/// frozen from `fluid`.
pub fn fokker_planck_substep(
    f: &KineticState,
    fluid: &FluidState,
    dt: f64,
    params: &ModelParams,
    grid: &Grid,
    cfg: &KineticSchemeConfig,
) -> Result<KineticState> {
    let u = fluid.velocity(crate::state::DEFAULT_DENSITY_FLOOR);
    fokker_planck_with_velocity(f, &fluid.rho, &u, dt, params, grid, cfg)
}

/// Same as [`fokker_planck_substep`] with the column velocities given explicitly.
pub fn fokker_planck_with_velocity(
    f: &KineticState,
    rho: &[f64],
    u: &[f64],
    dt: f64,
    params: &ModelParams,
    grid: &Grid,
    cfg: &KineticSchemeConfig,
) -> Result<KineticState> {
    let FpSolver::ImplicitCc = cfg.fp_solver;
    if !(dt > 0.0) {
        return Err(Error::StepRejected {
            stage: "fokker-planck",
            requested: dt,
            admissible: f64::INFINITY,
        });
    }
    let nv = grid.nv();
    let mut out = f.clone();
    out.f.par_chunks_mut(nv).enumerate().try_for_each_init(
        || ColumnWorkspace::new(nv),
        |ws, (i, col)| {
            let kappa = params.kappa(rho[i]);
            if kappa == 0.0 {
                return Ok(());
            }
            ws.solve(col, kappa, u[i], dt, grid)
        },
    )?;
    check_finite(&out, "fokker-planck")?;
    Ok(out)
}

struct ColumnWorkspace {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    scratch: Vec<f64>,
}

impl ColumnWorkspace {
    fn new(nv: usize) -> Self {
        ColumnWorkspace {
            lower: vec![0.0; nv],
            diag: vec![0.0; nv],
            upper: vec![0.0; nv],
            scratch: vec![0.0; nv],
        }
    }

    /// Overwrites `col` with the solution of `(I + dt A) f_new = f_old`.
    fn solve(&mut self, col: &mut [f64], kappa: f64, u: f64, dt: f64, grid: &Grid) -> Result<()> {
        let nv = col.len();
        let dv = grid.dv();
        let c = kappa * dt / (dv * dv);
        self.lower.fill(0.0);
        self.upper.fill(0.0);
        self.diag.fill(1.0);
        // Face j+1/2 for j in 0..nv-1; the outer faces carry no flux.
        for j in 0..nv - 1 {
            let w = (u - grid.v_face(j)) * dv;
            // B(-w) = B(w) + w; evaluate B on the decaying side to avoid cancellation
            let small = bernoulli(w.abs());
            let (b_minus, b_plus) = if w >= 0.0 {
                (small + w, small)
            } else {
                (small, small - w)
            };
            // row j gains +c (B(-w) f_j - B(w) f_{j+1}), row j+1 loses the same
            self.diag[j] += c * b_minus;
            self.upper[j] = -c * b_plus;
            self.diag[j + 1] += c * b_plus;
            self.lower[j + 1] = -c * b_minus;
        }
        // Off-diagonals are negative and pivots positive, so every elimination
        // and substitution step combines nonnegative terms: the computed
        // solution is nonnegative in floating point, not only in exact arithmetic.
        solve_tridiagonal(
            &self.lower,
            &self.diag,
            &self.upper,
            col,
            &mut self.scratch,
            "fokker-planck column",
        )
    }
}

fn check_finite(f: &KineticState, stage: &'static str) -> Result<()> {
    match f.f.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NumericalBlowup { stage, index }),
        None => Ok(()),
    }
}

/// Ceiling `e^{rho_plus t} sup f_0` for the running maximum of `f`.
pub fn max_principle_bound(f0_sup: f64, rho_plus: f64, t: f64) -> f64 {
    (rho_plus * t).exp() * f0_sup
}
