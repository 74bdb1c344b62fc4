//! Scenario files and deterministic initial data.
//!
//! A scenario is TOML text with dotted sections; unknown keys are rejected.
//! [`load_config`] applies every default and validates, so serializing the
//! result echoes the complete configuration that will run.
//!
//! ```toml
//! name = "shifted"
//! t_end = 2.0
//!
//! [grid]
//! nx = 128
//! nv = 128
//!
//! [initial.kinetic_shift]
//! delta_u = 0.5
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::{SchemeConfig, SimulationState, Splitting};
use crate::diagnostics::DiagnosticsConfig;
use crate::equilibrium::{maxwellian, DEFAULT_V_MARGIN};
use crate::error::{Error, Result};
use crate::fluid::FluidSchemeConfig;
use crate::grid::Grid;
use crate::io::read_snapshot;
use crate::kinetic::KineticSchemeConfig;
use crate::params::ModelParams;
use crate::state::{FluidState, KineticState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtMode {
    /// `dt = safety * stable_dt` recomputed every step.
    Auto,
    /// Constant `dt`; a step beyond the stability bound is an error.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub dt_mode: DtMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub safety: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            dt_mode: DtMode::Auto,
            dt: None,
            safety: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nv: Option<usize>,
    /// Half-width of the velocity window; defaults to `8 + ` the largest
    /// distance of any initial Maxwellian center from `v_center`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    pub v_center: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nx: None,
            nv: None,
            v_max: None,
            v_center: 0.0,
        }
    }
}

pub const DEFAULT_NX: usize = 64;
pub const DEFAULT_NV: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    pub splitting: Splitting,
    pub picard_iterations: usize,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        let s = SchemeConfig::default();
        CouplingConfig {
            splitting: s.splitting,
            picard_iterations: s.picard_iterations,
        }
    }
}

/// `rho0 = rho_bar (1 + amplitude cos(2 pi mode x + phase))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidPerturbation {
    pub amplitude: f64,
    #[serde(default = "one")]
    pub mode: u32,
    /// Draw the phase from the scenario seed instead of using zero.
    #[serde(default)]
    pub random_phase: bool,
    /// Permit `amplitude >= 1`, which creates vacuum cells.
    #[serde(default)]
    pub allow_vacuum: bool,
}

fn one() -> u32 {
    1
}

/// Particles start at `M(n_bar, velocity + delta_u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticShift {
    pub delta_u: f64,
}

/// Particles start as two half-mass Maxwellians `separation` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStream {
    pub separation: f64,
}

/// Fields read from a snapshot file; grid sizes come from its header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tabulated {
    pub path: PathBuf,
}

/// Initial data: uniform fluid at `velocity` and particles at
/// `M(n_bar, velocity)`, modified by at most one fluid and one kinetic
/// component. `tabulated` replaces everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub rho_bar: f64,
    pub n_bar: f64,
    pub velocity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fluid_perturbation: Option<FluidPerturbation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kinetic_shift: Option<KineticShift>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_stream: Option<TwoStream>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tabulated: Option<Tabulated>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            rho_bar: 1.0,
            n_bar: 1.0,
            velocity: 0.0,
            fluid_perturbation: None,
            kinetic_shift: None,
            two_stream: None,
            tabulated: None,
        }
    }
}

impl InitialConfig {
    /// Centers of every Maxwellian in the initial particle distribution.
    pub fn maxwellian_centers(&self) -> Vec<f64> {
        let u = self.velocity;
        match (self.kinetic_shift, self.two_stream) {
            (Some(k), _) => vec![u + k.delta_u],
            (None, Some(s)) => vec![u - 0.5 * s.separation, u + 0.5 * s.separation],
            (None, None) => vec![u],
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        if self.tabulated.is_some() {
            if self.fluid_perturbation.is_some() || self.kinetic_shift.is_some() || self.two_stream.is_some() {
                return bad("initial.tabulated cannot be combined with other initial-data components");
            }
            return Ok(());
        }
        if !(self.rho_bar >= 0.0 && self.rho_bar.is_finite()) {
            return bad("initial.rho_bar must be finite and >= 0");
        }
        if !(self.n_bar >= 0.0 && self.n_bar.is_finite()) {
            return bad("initial.n_bar must be finite and >= 0");
        }
        if self.rho_bar + self.n_bar <= 0.0 {
            return bad("initial data has zero total mass");
        }
        if !self.velocity.is_finite() {
            return bad("initial.velocity must be finite");
        }
        if self.kinetic_shift.is_some() && self.two_stream.is_some() {
            return bad("initial.kinetic_shift and initial.two_stream are mutually exclusive");
        }
        if let Some(p) = self.fluid_perturbation {
            if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) {
                return bad("initial.fluid_perturbation.amplitude must be >= 0");
            }
            if p.amplitude >= 1.0 && !p.allow_vacuum {
                return bad("initial.fluid_perturbation.amplitude must be < 1 so that inf rho0 > 0 \
                     (set allow_vacuum = true to permit vacuum)");
            }
            if p.amplitude > 1.0 {
                return bad("initial.fluid_perturbation.amplitude > 1 gives negative density");
            }
            if p.mode == 0 {
                return bad("initial.fluid_perturbation.mode must be >= 1");
            }
        }
        if let Some(k) = self.kinetic_shift {
            if !k.delta_u.is_finite() {
                return bad("initial.kinetic_shift.delta_u must be finite");
            }
        }
        if let Some(s) = self.two_stream {
            if !(s.separation >= 0.0 && s.separation.is_finite()) {
                return bad("initial.two_stream.separation must be >= 0");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    /// Diagnostics cadence in simulation time; defaults to `t_end / 100`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub fluid: FluidSchemeConfig,
    #[serde(default)]
    pub kinetic: KineticSchemeConfig,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
}

impl ScenarioConfig {
    pub fn scheme(&self) -> SchemeConfig {
        SchemeConfig {
            fluid: self.fluid,
            kinetic: self.kinetic,
            splitting: self.coupling.splitting,
            picard_iterations: self.coupling.picard_iterations,
        }
    }

    pub fn sample_every(&self) -> f64 {
        self.sample_every.unwrap_or(self.t_end / 100.0)
    }

    /// Fills every optional field with its resolved default.
    pub fn resolve(&mut self) -> Result<()> {
        if let Some(tab) = &self.initial.tabulated {
            let snap = read_snapshot(&tab.path)?;
            for (name, given, actual) in [("grid.nx", self.grid.nx, snap.nx), ("grid.nv", self.grid.nv, snap.nv)] {
                if given.is_some_and(|g| g != actual) {
                    return Err(Error::Validation(format!(
                        "{name} = {} conflicts with snapshot value {actual}",
                        given.unwrap()
                    )));
                }
            }
            if self.grid.v_max.is_some_and(|v| v != snap.v_max) {
                return Err(Error::Validation(
                    "grid.v_max conflicts with the snapshot header".into(),
                ));
            }
            self.grid.nx = Some(snap.nx);
            self.grid.nv = Some(snap.nv);
            self.grid.v_max = Some(snap.v_max);
        }
        self.grid.nx.get_or_insert(DEFAULT_NX);
        self.grid.nv.get_or_insert(DEFAULT_NV);
        if self.grid.v_max.is_none() {
            let c = self.grid.v_center;
            let reach = self
                .initial
                .maxwellian_centers()
                .iter()
                .fold(0.0_f64, |a, u| a.max((u - c).abs()));
            self.grid.v_max = Some(DEFAULT_V_MARGIN + reach);
        }
        if self.sample_every.is_none() {
            self.sample_every = Some(self.t_end / 100.0);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.name.trim().is_empty() {
            return bad("name must not be empty".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be > 0, got {}", self.t_end));
        }
        let se = self.sample_every();
        if !(se > 0.0 && se <= self.t_end) {
            return bad(format!("sample_every must be in (0, t_end], got {se}"));
        }
        if let Some(s) = self.snapshot_every {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("snapshot_every must be > 0, got {s}"));
            }
        }
        match (self.time.dt_mode, self.time.dt) {
            (DtMode::Fixed, None) => return bad("time.dt is required when time.dt_mode = \"fixed\"".into()),
            (DtMode::Fixed, Some(dt)) if !(dt > 0.0 && dt.is_finite()) => {
                return bad(format!("time.dt must be > 0, got {dt}"))
            }
            (DtMode::Auto, Some(_)) => return bad("time.dt is only used with time.dt_mode = \"fixed\"".into()),
            _ => {}
        }
        if !(self.time.safety > 0.0 && self.time.safety <= 1.0) {
            return bad(format!("time.safety must be in (0, 1], got {}", self.time.safety));
        }
        if !self.grid.v_center.is_finite() {
            return bad("grid.v_center must be finite".into());
        }
        self.params.validate()?;
        self.fluid.validate()?;
        self.kinetic.validate()?;
        self.diagnostics.validate()?;
        self.initial.validate()?;
        self.build_grid()?;
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::with_window_center(
            self.grid.nx.unwrap_or(DEFAULT_NX),
            self.grid.nv.unwrap_or(DEFAULT_NV),
            self.grid
                .v_max
                .ok_or_else(|| Error::Validation("grid.v_max unresolved".into()))?,
            self.grid.v_center,
        )
        .map_err(|e| Error::Validation(format!("grid: {e}")))
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }
}

/// Parses, resolves and validates scenario text.
pub fn load_config(text: &str) -> Result<ScenarioConfig> {
    let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    cfg.resolve()?;
    cfg.validate()?;
    Ok(cfg)
}

/// Grid and initial state for a validated configuration. Deterministic in
/// the configuration and seed.
pub fn build_initial_data(cfg: &ScenarioConfig) -> Result<(Grid, SimulationState)> {
    let grid = cfg.build_grid()?;
    let init = &cfg.initial;
    if let Some(tab) = &init.tabulated {
        let snap = read_snapshot(&tab.path)?;
        let fluid = FluidState::new(snap.rho, snap.m)?;
        let kinetic = KineticState::from_vec(&grid, snap.f)?;
        return Ok((grid, SimulationState::new(fluid, kinetic)));
    }

    let u0 = init.velocity;
    let rho: Vec<f64> = match init.fluid_perturbation {
        None => vec![init.rho_bar; grid.nx()],
        Some(p) => {
            let phase = if p.random_phase {
                ChaCha8Rng::seed_from_u64(cfg.seed).random_range(0.0..2.0 * PI)
            } else {
                0.0
            };
            let k = 2.0 * PI * f64::from(p.mode);
            grid.x_centers()
                .iter()
                .map(|&x| (init.rho_bar * (1.0 + p.amplitude * (k * x + phase).cos())).max(0.0))
                .collect()
        }
    };
    let m = rho.iter().map(|&r| if r > 0.0 { r * u0 } else { 0.0 }).collect();
    let fluid = FluidState::new(rho, m)?;

    let n = init.n_bar;
    let profile: Vec<f64> = match (init.kinetic_shift, init.two_stream) {
        (Some(k), _) => grid
            .v_centers()
            .iter()
            .map(|&v| maxwellian(n, u0 + k.delta_u, v))
            .collect(),
        (None, Some(s)) => {
            let h = 0.5 * s.separation;
            grid.v_centers()
                .iter()
                .map(|&v| maxwellian(0.5 * n, u0 - h, v) + maxwellian(0.5 * n, u0 + h, v))
                .collect()
        }
        (None, None) => grid.v_centers().iter().map(|&v| maxwellian(n, u0, v)).collect(),
    };
    let f = (0..grid.nx()).flat_map(|_| profile.iter().copied()).collect();
    let kinetic = KineticState::from_vec(&grid, f)?;
    Ok((grid, SimulationState::new(fluid, kinetic)))
}
