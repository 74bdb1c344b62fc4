//! Monitored functionals: conserved totals, entropy and its dissipation, the
//! fluid relative entropy, mean velocities, equilibrium gaps and weighted norms.
//!
//! Everything here is a read-only function of a state snapshot. Derivatives
//! are centered differences (one-sided at the velocity boundaries), integrals
//! are midpoint sums, and `0 log 0 = 0`.

use serde::{Deserialize, Serialize};

use crate::coupling::SimulationState;
use crate::equilibrium::EquilibriumState;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::state::{moments, FluidState, KineticState, DEFAULT_DENSITY_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyBreakdown {
    /// `int 1/2 rho u^2`
    pub fluid_kinetic: f64,
    /// `int P(rho) / (gamma - 1)`
    pub fluid_internal: f64,
    /// `int 1/2 v^2 f`
    pub particle_kinetic: f64,
    /// `int f log f`
    pub particle_entropy: f64,
}

impl EntropyBreakdown {
    pub fn total(&self) -> f64 {
        self.fluid_kinetic + self.fluid_internal + self.particle_kinetic + self.particle_entropy
    }
}

fn periodic_neighbors(n: usize, i: usize) -> (usize, usize) {
    (if i == 0 { n - 1 } else { i - 1 }, if i + 1 == n { 0 } else { i + 1 })
}

/// Centered periodic derivative.
fn d_dx(g: &[f64], dx: f64) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| {
            let (l, r) = periodic_neighbors(n, i);
            (g[r] - g[l]) / (2.0 * dx)
        })
        .collect()
}

/// Centered derivative on a bounded velocity column, one-sided at the ends.
fn d_dv(g: &[f64], dv: f64, out: &mut [f64]) {
    let n = g.len();
    out[0] = (g[1] - g[0]) / dv;
    out[n - 1] = (g[n - 1] - g[n - 2]) / dv;
    for j in 1..n - 1 {
        out[j] = (g[j + 1] - g[j - 1]) / (2.0 * dv);
    }
}

/// Total entropy `E` and its four contributions.
pub fn entropy(sim: &SimulationState, params: &ModelParams, grid: &Grid, f_floor: f64) -> (f64, EntropyBreakdown) {
    let dx = grid.dx();
    let dv = grid.dv();
    let mut fk = 0.0;
    let mut fi = 0.0;
    for (&r, &m) in sim.fluid.rho.iter().zip(&sim.fluid.m) {
        if r > 0.0 {
            fk += 0.5 * m * m / r.max(DEFAULT_DENSITY_FLOOR);
        }
        fi += params.internal_energy(r);
    }
    let v = grid.v_centers();
    let mut pk = 0.0;
    let mut pe = 0.0;
    for col in sim.kinetic.columns() {
        for (&f, &v) in col.iter().zip(v) {
            pk += 0.5 * v * v * f;
            if f > f_floor {
                pe += f * f.ln();
            }
        }
    }
    let b = EntropyBreakdown {
        fluid_kinetic: dx * fk,
        fluid_internal: dx * fi,
        particle_kinetic: dx * dv * pk,
        particle_entropy: dx * dv * pe,
    };
    (b.total(), b)
}

/// Viscous part `int mu(rho) |u_x|^2`.
pub fn viscous_dissipation(fluid: &FluidState, params: &ModelParams, grid: &Grid) -> f64 {
    let u = fluid.velocity(DEFAULT_DENSITY_FLOOR);
    let ux = d_dx(&u, grid.dx());
    grid.dx()
        * fluid
            .rho
            .iter()
            .zip(&ux)
            .map(|(&r, g)| params.mu(r) * g * g)
            .sum::<f64>()
}

/// Fokker-Planck part `int rho |(u - v) sqrt f - 2 (sqrt f)_v|^2`.
pub fn fisher_dissipation(sim: &SimulationState, grid: &Grid, f_floor: f64) -> f64 {
    let u = sim.fluid.velocity(DEFAULT_DENSITY_FLOOR);
    let v = grid.v_centers();
    let nv = grid.nv();
    let mut s = vec![0.0; nv];
    let mut ds = vec![0.0; nv];
    let mut total = 0.0;
    for (i, col) in sim.kinetic.columns().enumerate() {
        let rho = sim.fluid.rho[i];
        if rho == 0.0 {
            continue;
        }
        for (sj, &f) in s.iter_mut().zip(col) {
            *sj = f.max(f_floor).sqrt();
        }
        d_dv(&s, grid.dv(), &mut ds);
        let mut acc = 0.0;
        for j in 0..nv {
            let r = (u[i] - v[j]) * s[j] - 2.0 * ds[j];
            acc += r * r;
        }
        total += rho * acc;
    }
    // rho multiplies drag; kappa0 is folded in by the caller
    grid.dx() * grid.dv() * total
}

/// Entropy dissipation rate `D`.
pub fn dissipation(sim: &SimulationState, params: &ModelParams, grid: &Grid, f_floor: f64) -> f64 {
    viscous_dissipation(&sim.fluid, params, grid) + params.kappa0 * fisher_dissipation(sim, grid, f_floor)
}

/// Discrete `I(g)`: zero-mean primitive of `g` on the torus.
pub fn interval_primitive(g: &[f64], grid: &Grid) -> Vec<f64> {
    let dx = grid.dx();
    let mut acc = 0.0;
    let mut out: Vec<f64> = g
        .iter()
        .map(|&gi| {
            let here = acc + 0.5 * dx * gi;
            acc += dx * gi;
            here
        })
        .collect();
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    out.iter_mut().for_each(|x| *x -= mean);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeEntropyParts {
    /// `int 1/2 rho |u - m1|^2`
    pub kinetic: f64,
    /// `int Pi_gamma(rho | rho_bar)`
    pub pi_gamma_total: f64,
    /// `int rho (u - m1) I(rho - rho_bar)`, before multiplying by `-eta`
    pub cross: f64,
    pub m1: f64,
    /// Whether `E_eta >= 0` held on this state.
    pub coercive: bool,
}

/// `Pi_gamma(rho | rho_bar)`, the Bregman divergence of the pressure potential.
pub fn pi_gamma(rho: f64, rho_bar: f64, params: &ModelParams) -> f64 {
    let g = params.gamma;
    params.a / (g - 1.0) * (rho.powf(g) - rho_bar.powf(g) - g * rho_bar.powf(g - 1.0) * (rho - rho_bar))
}

/// The fluid relative entropy `E_eta` around `(rho_bar, m1)`.
pub fn relative_entropy_fluid(
    sim: &SimulationState,
    eq: &EquilibriumState,
    eta: f64,
    params: &ModelParams,
    grid: &Grid,
) -> (f64, RelativeEntropyParts) {
    let dx = grid.dx();
    let rho = &sim.fluid.rho;
    let m1 = sim.fluid.total_momentum(dx) / eq.rho_bar;
    let u = sim.fluid.velocity(DEFAULT_DENSITY_FLOOR);
    let dev: Vec<f64> = rho.iter().map(|r| r - eq.rho_bar).collect();
    let prim = interval_primitive(&dev, grid);
    let mut kin = 0.0;
    let mut pi = 0.0;
    let mut cross = 0.0;
    for i in 0..rho.len() {
        let du = u[i] - m1;
        kin += 0.5 * rho[i] * du * du;
        pi += pi_gamma(rho[i], eq.rho_bar, params);
        cross += rho[i] * du * prim[i];
    }
    let (kin, pi, cross) = (dx * kin, dx * pi, dx * cross);
    let e = kin + pi - eta * cross;
    (
        e,
        RelativeEntropyParts {
            kinetic: kin,
            pi_gamma_total: pi,
            cross,
            m1,
            coercive: e >= 0.0,
        },
    )
}

/// Mean fluid and particle velocities `m1`, `m2`, normalized by the initial
/// phase masses in `eq`. A phase without mass yields `None`.
pub fn mean_velocities(sim: &SimulationState, eq: &EquilibriumState, grid: &Grid) -> (Option<f64>, Option<f64>) {
    let m1 = (eq.rho_bar > 0.0).then(|| sim.fluid.total_momentum(grid.dx()) / eq.rho_bar);
    let m2 = (eq.n_bar > 0.0).then(|| sim.kinetic.total_momentum(grid) / eq.n_bar);
    (m1, m2)
}

/// `U = u + I(n) + mu(rho) rho_x / rho^2`; `None` if any cell is below `floor`.
pub fn effective_velocity(sim: &SimulationState, params: &ModelParams, grid: &Grid, floor: f64) -> Option<Vec<f64>> {
    let rho = &sim.fluid.rho;
    if rho.iter().any(|&r| r < floor) {
        return None;
    }
    let u = sim.fluid.velocity(floor);
    let (n, _) = moments(&sim.kinetic, grid);
    let prim = interval_primitive(&n, grid);
    let rho_x = d_dx(rho, grid.dx());
    Some(
        (0..rho.len())
            .map(|i| u[i] + prim[i] + params.mu(rho[i]) * rho_x[i] / (rho[i] * rho[i]))
            .collect(),
    )
}

/// `G = P(rho) - mu(rho) u_x`.
pub fn effective_viscous_flux(sim: &SimulationState, params: &ModelParams, grid: &Grid) -> Vec<f64> {
    let u = sim.fluid.velocity(DEFAULT_DENSITY_FLOOR);
    let ux = d_dx(&u, grid.dx());
    sim.fluid
        .rho
        .iter()
        .zip(&ux)
        .map(|(&r, g)| params.p(r) - params.mu(r) * g)
        .collect()
}

fn check_weight(l: f64, p: f64) -> Result<()> {
    if !(l >= 0.0) {
        return Err(Error::domain("weight exponent l", "nonnegative", l));
    }
    if !(p >= 1.0) {
        return Err(Error::domain("Lebesgue exponent p", "at least 1", p));
    }
    Ok(())
}

fn weighted_sum(values: impl Iterator<Item = (f64, f64)>, l: f64, p: f64) -> f64 {
    values
        .map(|(v, g)| ((1.0 + v * v).powf(0.5 * l) * g).abs().powf(p))
        .sum()
}

/// `|| <v>^l f ||_{L^p}` with `<v> = sqrt(1 + v^2)`.
pub fn weighted_norm(f: &KineticState, l: f64, p: f64, grid: &Grid) -> Result<f64> {
    check_weight(l, p)?;
    let v = grid.v_centers();
    let s: f64 = f
        .columns()
        .map(|col| weighted_sum(v.iter().copied().zip(col.iter().copied()), l, p))
        .sum();
    Ok((grid.dx() * grid.dv() * s).powf(1.0 / p))
}

/// `|| <v>^l f_v ||_{L^p}` with centered differences in `v`.
pub fn weighted_derivative_norm(f: &KineticState, l: f64, p: f64, grid: &Grid) -> Result<f64> {
    check_weight(l, p)?;
    let v = grid.v_centers();
    let mut d = vec![0.0; grid.nv()];
    let mut s = 0.0;
    for col in f.columns() {
        d_dv(col, grid.dv(), &mut d);
        s += weighted_sum(v.iter().copied().zip(d.iter().copied()), l, p);
    }
    Ok((grid.dx() * grid.dv() * s).powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumGaps {
    pub rho_linf: f64,
    /// Over cells with `rho >= floor` only.
    pub u_l2: f64,
    pub f_l1: f64,
    pub n_l1: f64,
    /// `|| n w - n u_c ||_{L^1}`
    pub nw_l1: f64,
    pub vacuum_cells: usize,
}

/// Distances of the current state to the predicted equilibrium.
pub fn equilibrium_gaps(sim: &SimulationState, eq: &EquilibriumState, grid: &Grid, floor: f64) -> EquilibriumGaps {
    let dx = grid.dx();
    let dv = grid.dv();
    let rho = &sim.fluid.rho;
    let rho_linf = rho.iter().fold(0.0_f64, |a, r| a.max((r - eq.rho_bar).abs()));
    let mut vacuum_cells = 0;
    let mut u2 = 0.0;
    for (&r, &m) in rho.iter().zip(&sim.fluid.m) {
        if r >= floor {
            let d = m / r - eq.u_c;
            u2 += d * d;
        } else {
            vacuum_cells += 1;
        }
    }
    let mut f_l1 = 0.0;
    for col in sim.kinetic.columns() {
        f_l1 += col.iter().zip(&eq.maxwellian).map(|(f, m)| (f - m).abs()).sum::<f64>();
    }
    let (n, nw) = moments(&sim.kinetic, grid);
    let n_l1: f64 = n.iter().map(|x| (x - eq.n_bar).abs()).sum();
    let nw_l1: f64 = n.iter().zip(&nw).map(|(n, j)| (j - n * eq.u_c).abs()).sum();
    EquilibriumGaps {
        rho_linf,
        u_l2: (dx * u2).sqrt(),
        f_l1: dx * dv * f_l1,
        n_l1: dx * n_l1,
        nw_l1: dx * nw_l1,
        vacuum_cells,
    }
}

/// Tunables of the diagnostics pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Weight of the cross term in the fluid relative entropy.
    pub eta: f64,
    /// Velocity weight of the monitored `L^2_k0` norms.
    pub k0: f64,
    pub density_floor: f64,
    /// `f log f` is taken as zero below this fraction of the initial `max f`.
    pub entropy_floor_rel: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            eta: 0.1,
            k0: 4.0,
            density_floor: DEFAULT_DENSITY_FLOOR,
            entropy_floor_rel: 1e-30,
        }
    }
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) {
            return Err(Error::Validation("diagnostics.eta must be >= 0".into()));
        }
        if !(self.k0 >= 2.0) {
            return Err(Error::Validation("diagnostics.k0 must be >= 2".into()));
        }
        if !(self.density_floor > 0.0) || !(self.entropy_floor_rel > 0.0) {
            return Err(Error::Validation("diagnostics floors must be > 0".into()));
        }
        Ok(())
    }
}

/// One sampled row of every monitored functional.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: u64,
    pub fluid_mass: f64,
    pub kinetic_mass: f64,
    pub mixture_momentum: f64,
    pub entropy_E: f64,
    pub dissipation_D: f64,
    /// Trapezoidal time integral of `D` since `t = 0`.
    pub dissipation_integral: f64,
    pub rel_entropy_E_eta: f64,
    pub eta_coercive: bool,
    pub pi_gamma_total: f64,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub u_c_gap_m1: Option<f64>,
    pub u_c_gap_m2: Option<f64>,
    pub rho_Linf_gap: f64,
    pub u_L2_gap: f64,
    pub f_L1_gap_to_maxwellian: f64,
    pub n_L1_gap: f64,
    pub nw_L1_gap: f64,
    pub vacuum_cells: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub f_max: f64,
    pub weighted_f_norm_k0: f64,
    pub weighted_fv_norm: f64,
    pub eff_flux_Linf: f64,
}

/// Formats a value with 17 significant digits.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "NaN".to_string())
}

impl DiagnosticsRecord {
    pub const FIELDS: [&'static str; 27] = [
        "t",
        "step",
        "fluid_mass",
        "kinetic_mass",
        "mixture_momentum",
        "entropy_E",
        "dissipation_D",
        "dissipation_integral",
        "rel_entropy_E_eta",
        "eta_coercive",
        "pi_gamma_total",
        "m1",
        "m2",
        "u_c_gap_m1",
        "u_c_gap_m2",
        "rho_Linf_gap",
        "u_L2_gap",
        "f_L1_gap_to_maxwellian",
        "n_L1_gap",
        "nw_L1_gap",
        "vacuum_cells",
        "rho_min",
        "rho_max",
        "f_max",
        "weighted_f_norm_k0",
        "weighted_fv_norm",
        "eff_flux_Linf",
    ];

    pub fn csv_header() -> String {
        Self::FIELDS.join(",")
    }

    pub fn csv_row(&self) -> String {
        let cols = [
            fmt_f64(self.t),
            self.step.to_string(),
            fmt_f64(self.fluid_mass),
            fmt_f64(self.kinetic_mass),
            fmt_f64(self.mixture_momentum),
            fmt_f64(self.entropy_E),
            fmt_f64(self.dissipation_D),
            fmt_f64(self.dissipation_integral),
            fmt_f64(self.rel_entropy_E_eta),
            u8::from(self.eta_coercive).to_string(),
            fmt_f64(self.pi_gamma_total),
            fmt_opt(self.m1),
            fmt_opt(self.m2),
            fmt_opt(self.u_c_gap_m1),
            fmt_opt(self.u_c_gap_m2),
            fmt_f64(self.rho_Linf_gap),
            fmt_f64(self.u_L2_gap),
            fmt_f64(self.f_L1_gap_to_maxwellian),
            fmt_f64(self.n_L1_gap),
            fmt_f64(self.nw_L1_gap),
            self.vacuum_cells.to_string(),
            fmt_f64(self.rho_min),
            fmt_f64(self.rho_max),
            fmt_f64(self.f_max),
            fmt_f64(self.weighted_f_norm_k0),
            fmt_f64(self.weighted_fv_norm),
            fmt_f64(self.eff_flux_Linf),
        ];
        cols.join(",")
    }

    /// `|m1 - m2|` when both phases carry mass.
    pub fn velocity_gap(&self) -> Option<f64> {
        Some((self.m1? - self.m2?).abs())
    }
}

/// Computes [`DiagnosticsRecord`]s against a fixed equilibrium.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub eq: EquilibriumState,
    pub cfg: DiagnosticsConfig,
    pub params: ModelParams,
    /// Absolute floor below which `f log f` is dropped.
    pub f_floor: f64,
}

impl Diagnostics {
    pub fn new(eq: EquilibriumState, cfg: DiagnosticsConfig, params: ModelParams, initial: &SimulationState) -> Self {
        let fmax = initial.kinetic.max();
        let f_floor = if fmax > 0.0 {
            cfg.entropy_floor_rel * fmax
        } else {
            f64::MIN_POSITIVE
        };
        Diagnostics {
            eq,
            cfg,
            params,
            f_floor,
        }
    }

    pub fn entropy(&self, sim: &SimulationState, grid: &Grid) -> f64 {
        entropy(sim, &self.params, grid, self.f_floor).0
    }

    pub fn dissipation(&self, sim: &SimulationState, grid: &Grid) -> f64 {
        dissipation(sim, &self.params, grid, self.f_floor)
    }

    pub fn record(&self, sim: &SimulationState, grid: &Grid, dissipation_integral: f64) -> Result<DiagnosticsRecord> {
        let params = &self.params;
        let dx = grid.dx();
        let (e, _) = entropy(sim, params, grid, self.f_floor);
        let d = self.dissipation(sim, grid);
        let (e_eta, rel) = relative_entropy_fluid(sim, &self.eq, self.cfg.eta, params, grid);
        let (m1, m2) = mean_velocities(sim, &self.eq, grid);
        let gaps = equilibrium_gaps(sim, &self.eq, grid, self.cfg.density_floor);
        let g = effective_viscous_flux(sim, params, grid);
        let rho = &sim.fluid.rho;
        Ok(DiagnosticsRecord {
            t: sim.t,
            step: sim.step_index,
            fluid_mass: sim.fluid.total_mass(dx),
            kinetic_mass: sim.kinetic.total_mass(grid),
            mixture_momentum: sim.mixture_momentum(grid),
            entropy_E: e,
            dissipation_D: d,
            dissipation_integral,
            rel_entropy_E_eta: e_eta,
            eta_coercive: rel.coercive,
            pi_gamma_total: rel.pi_gamma_total,
            m1,
            m2,
            u_c_gap_m1: m1.map(|m| (m - self.eq.u_c).abs()),
            u_c_gap_m2: m2.map(|m| (m - self.eq.u_c).abs()),
            rho_Linf_gap: gaps.rho_linf,
            u_L2_gap: gaps.u_l2,
            f_L1_gap_to_maxwellian: gaps.f_l1,
            n_L1_gap: gaps.n_l1,
            nw_L1_gap: gaps.nw_l1,
            vacuum_cells: gaps.vacuum_cells,
            rho_min: rho.iter().fold(f64::INFINITY, |a, &b| a.min(b)),
            rho_max: rho.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
            f_max: sim.kinetic.max(),
            weighted_f_norm_k0: weighted_norm(&sim.kinetic, self.cfg.k0, 2.0, grid)?,
            weighted_fv_norm: weighted_derivative_norm(&sim.kinetic, self.cfg.k0 - 2.0, 2.0, grid)?,
            eff_flux_Linf: g.iter().fold(0.0_f64, |a, x| a.max(x.abs())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{maxwellian, EquilibriumState};
    use crate::oracles::gaussian_l1_distance;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sim(
        grid: &Grid,
        rho: impl Fn(f64) -> f64,
        u: impl Fn(f64) -> f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> SimulationState {
        let x = grid.x_centers();
        let r: Vec<f64> = x.iter().map(|&x| rho(x)).collect();
        let m = x.iter().zip(&r).map(|(&x, &r)| r * u(x)).collect();
        SimulationState::new(FluidState { rho: r, m }, KineticState::from_fn(grid, f))
    }

    fn params(a: f64, gamma: f64, mu0: f64, mu1: f64) -> ModelParams {
        ModelParams {
            a,
            gamma,
            mu0,
            mu1,
            ..Default::default()
        }
    }

    #[test]
    fn entropy_examples() {
        let g = Grid::new(16, 256, 8.0).unwrap();
        let p = params(1.0, 2.0, 1.0, 1.0);
        let empty = sim(&g, |_| 0.0, |_| 0.0, |_, _| 0.0);
        assert_eq!(entropy(&empty, &p, &g, 1e-300).0, 0.0);
        let fluid_only = sim(&g, |_| 1.0, |_| 0.0, |_, _| 0.0);
        assert_abs_diff_eq!(entropy(&fluid_only, &p, &g, 1e-300).0, 1.0, epsilon = 1e-14);
        let gas = sim(&g, |_| 0.0, |_| 0.0, |_, v| maxwellian(1.0, 0.0, v));
        let (e, parts) = entropy(&gas, &p, &g, 1e-300);
        assert_abs_diff_eq!(e, -0.5 * (2.0 * PI).ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(parts.particle_kinetic, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn dissipation_of_shear_mode() {
        let g = Grid::new(256, 8, 4.0).unwrap();
        let p = params(1.0, 1.4, 1.0, 0.0);
        let s = sim(&g, |_| 1.0, |x| (2.0 * PI * x).sin(), |_, _| 0.0);
        let d = dissipation(&s, &p, &g, 1e-300);
        let exact = 2.0 * PI * PI;
        // centered differences damp the mode by (sin(k dx) / (k dx))^2
        assert!((d - exact).abs() <= 1e-3 * exact);
        let vac = sim(&g, |_| 0.0, |_| 0.0, |_, _| 0.0);
        assert_eq!(dissipation(&vac, &p, &g, 1e-300), 0.0);
    }

    #[test]
    fn equilibrium_dissipation_is_fourth_order_in_dv() {
        let p = ModelParams::default();
        let d = |nv: usize| {
            let g = Grid::new(8, nv, 8.3).unwrap();
            let s = sim(&g, |_| 1.2, |_| 0.3, |_, v| maxwellian(0.9, 0.3, v));
            dissipation(&s, &p, &g, 1e-300)
        };
        let (d1, d2, d3) = (d(64), d(128), d(256));
        assert!(d1 / d2 > 14.0 && d2 / d3 > 14.0, "{d1} {d2} {d3}");
        assert!(d3 < 1e-6);
    }

    #[test]
    fn relative_entropy_examples() {
        let g = Grid::new(64, 8, 4.0).unwrap();
        let p = params(1.0, 2.0, 1.0, 1.0);
        let eq = EquilibriumState::new(1.5, 1.0, 0.2, &g);
        let at_rest = sim(&g, |_| 1.5, |_| 0.2, |_, _| 0.0);
        for eta in [0.0, 0.1, 1.0] {
            assert_abs_diff_eq!(
                relative_entropy_fluid(&at_rest, &eq, eta, &p, &g).0,
                0.0,
                epsilon = 1e-15
            );
        }
        let moving = sim(&g, |_| 1.5, |x| (2.0 * PI * x).cos(), |_, _| 0.0);
        let (e, parts) = relative_entropy_fluid(&moving, &eq, 0.0, &p, &g);
        assert_abs_diff_eq!(parts.m1, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e, 0.5 * 1.5 * 0.5, epsilon = 1e-14);
        // gamma = 2: Pi is (rho - rho_bar)^2, which integrates to rho_bar^2 eps^2 / 2
        let eps = 1e-3;
        let wavy = sim(&g, |x| 1.5 * (1.0 + eps * (2.0 * PI * x).cos()), |_| 0.0, |_, _| 0.0);
        let (_, parts) = relative_entropy_fluid(&wavy, &eq, 0.1, &p, &g);
        assert_abs_diff_eq!(parts.pi_gamma_total, 1.5 * 1.5 * eps * eps / 2.0, epsilon = 1e-15);
        assert!(parts.coercive);
    }

    #[test]
    fn primitive_properties() {
        let g = Grid::new(128, 8, 4.0).unwrap();
        assert!(interval_primitive(&[0.0; 128], &g).iter().all(|&v| v == 0.0));
        let noisy: Vec<f64> = (0..128).map(|k| ((k * 7919) % 113) as f64 / 17.0 - 3.0).collect();
        let prim = interval_primitive(&noisy, &g);
        assert!((g.dx() * prim.iter().sum::<f64>()).abs() < 1e-15);
        let cos: Vec<f64> = g.x_centers().iter().map(|x| (2.0 * PI * x).cos()).collect();
        for (p, x) in interval_primitive(&cos, &g).iter().zip(g.x_centers()) {
            assert!((p - (2.0 * PI * x).sin() / (2.0 * PI)).abs() < 1e-4);
        }
    }

    #[test]
    fn effective_velocity_examples() {
        let g = Grid::new(128, 16, 4.0).unwrap();
        let p = params(1.0, 1.4, 2.0, 0.0);
        let flat = sim(&g, |_| 0.7, |_| -0.4, |_, _| 0.0);
        for u in effective_velocity(&flat, &p, &g, 1e-12).unwrap() {
            assert_abs_diff_eq!(u, -0.4, epsilon = 1e-15);
        }
        let eps = 1e-2;
        let wavy = sim(&g, |x| 1.0 + eps * (2.0 * PI * x).sin(), |_| 0.0, |_, _| 0.0);
        let u = effective_velocity(&wavy, &p, &g, 1e-12).unwrap();
        for (ui, x) in u.iter().zip(g.x_centers()) {
            let rho = 1.0 + eps * (2.0 * PI * x).sin();
            let exact = 2.0 * eps * 2.0 * PI * (2.0 * PI * x).cos() / (rho * rho);
            assert!((ui - exact).abs() < 1e-4);
        }
        // a constant density n adds its zero-mean primitive n (x - 1/2)
        let loaded = sim(
            &g,
            |x| 1.0 + eps * (2.0 * PI * x).sin(),
            |_| 0.0,
            |_, v| maxwellian(3.0, 0.0, v),
        );
        let n = loaded.kinetic.total_mass(&g);
        let u3 = effective_velocity(&loaded, &p, &g, 1e-12).unwrap();
        for ((a, b), x) in u3.iter().zip(&u).zip(g.x_centers()) {
            assert_abs_diff_eq!(a - b, n * (x - 0.5), epsilon = 1e-13);
        }
        let vac = sim(&g, |x| if x < 0.5 { 0.0 } else { 1.0 }, |_| 0.0, |_, _| 0.0);
        assert!(effective_velocity(&vac, &p, &g, 1e-12).is_none());
    }

    #[test]
    fn effective_flux_examples() {
        let g = Grid::new(128, 16, 4.0).unwrap();
        let p = params(2.0, 1.4, 1.0, 1.0);
        for v in effective_viscous_flux(&sim(&g, |_| 1.3, |_| 0.2, |_, _| 0.0), &p, &g) {
            assert_abs_diff_eq!(v, 2.0 * 1.3f64.powf(1.4), epsilon = 1e-14);
        }
        let p = params(0.0, 1.4, 1.0, 0.0);
        let s = sim(&g, |_| 1.0, |x| (2.0 * PI * x).sin(), |_, _| 0.0);
        for (v, x) in effective_viscous_flux(&s, &p, &g).iter().zip(g.x_centers()) {
            assert!((v + 2.0 * PI * (2.0 * PI * x).cos()).abs() < 5e-3);
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let g = Grid::new(8, 256, 8.0).unwrap();
        let s = sim(&g, |_| 0.0, |_| 0.0, |_, v| maxwellian(1.0, 0.0, v));
        assert_abs_diff_eq!(
            weighted_norm(&s.kinetic, 0.0, 1.0, &g).unwrap(),
            s.kinetic.total_mass(&g),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(weighted_norm(&s.kinetic, 2.0, 1.0, &g).unwrap(), 2.0, epsilon = 1e-10);
        assert!(weighted_norm(&s.kinetic, 1.0, 0.5, &g).is_err());
        assert!(weighted_derivative_norm(&s.kinetic, -1.0, 2.0, &g).is_err());
        // <v> = 1 at v = 0
        let g9 = Grid::new(8, 9, 4.5).unwrap();
        let spike = KineticState::from_fn(&g9, |_, v| if v == 0.0 { 2.0 } else { 0.0 });
        assert_eq!(
            weighted_norm(&spike, 3.0, 2.0, &g9).unwrap(),
            weighted_norm(&spike, 0.0, 2.0, &g9).unwrap()
        );
    }

    #[test]
    fn gaps_and_mean_velocities() {
        let g = Grid::new(16, 256, 8.5).unwrap();
        let eq = EquilibriumState::new(1.0, 1.0, 0.0, &g);
        let at_eq = sim(&g, |_| 1.0, |_| 0.0, |_, v| maxwellian(1.0, 0.0, v));
        let gaps = equilibrium_gaps(&at_eq, &eq, &g, 1e-12);
        assert_eq!(gaps.f_l1, 0.0);
        assert!(gaps.n_l1 < 1e-14 && gaps.nw_l1 < 1e-14 && gaps.rho_linf == 0.0);
        let (m1, m2) = mean_velocities(&at_eq, &eq, &g);
        assert_eq!((m1, m2), (Some(0.0), Some(0.0)));

        let shifted = sim(&g, |_| 1.0, |_| 0.0, |_, v| maxwellian(1.0, 0.5, v));
        let gaps = equilibrium_gaps(&shifted, &eq, &g, 1e-12);
        // midpoint rule across the kink of |f - M| is only second order
        assert!((gaps.f_l1 - gaussian_l1_distance(1.0, 0.0, 1.0, 0.5)).abs() < 1e-3);
        let (_, m2) = mean_velocities(&shifted, &eq, &g);
        assert!((m2.unwrap() - 0.5).abs() < 1e-12);

        let no_fluid = EquilibriumState::new(0.0, 1.0, 0.0, &g);
        assert_eq!(mean_velocities(&at_eq, &no_fluid, &g).0, None);
    }

    #[test]
    fn csv_row_matches_header() {
        let g = Grid::new(8, 16, 8.0).unwrap();
        let s = sim(&g, |_| 1.0, |_| 0.1, |_, v| maxwellian(1.0, 0.0, v));
        let eq = crate::equilibrium::equilibrium_from_initial(&s.fluid, &s.kinetic, &g).unwrap();
        let d = Diagnostics::new(eq, DiagnosticsConfig::default(), ModelParams::default(), &s);
        let rec = d.record(&s, &g, 0.0).unwrap();
        assert_eq!(rec.csv_row().split(',').count(), DiagnosticsRecord::FIELDS.len());
        assert_eq!(
            DiagnosticsRecord::csv_header().split(',').count(),
            DiagnosticsRecord::FIELDS.len()
        );
        // mixture momentum identity on the initial state
        let lhs = rec.m1.unwrap() * d.eq.rho_bar + rec.m2.unwrap() * d.eq.n_bar;
        assert!((lhs - rec.mixture_momentum).abs() < 1e-15);
        assert!(rec.velocity_gap().unwrap() > 0.0);
    }
}
