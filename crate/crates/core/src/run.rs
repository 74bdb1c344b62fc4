//! Time loop, sampling, output files and the refinement study.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coupling::{self, SchemeConfig, SimulationState};
use crate::diagnostics::{Diagnostics, DiagnosticsConfig, DiagnosticsRecord};
use crate::equilibrium::{equilibrium_from_initial, EquilibriumState};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::{sha256_file, write_snapshot, CsvWriter, Snapshot};
use crate::kinetic::max_principle_bound;
use crate::params::ModelParams;
use crate::scenario::{build_initial_data, DtMode, ScenarioConfig};

/// Relative slack on the `f_max` watchdog.
const WATCHDOG_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    Auto { safety: f64 },
    Fixed(f64),
}

/// A stepping simulation together with its running monitors.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub grid: Grid,
    pub params: ModelParams,
    pub scheme: SchemeConfig,
    pub dt_policy: DtPolicy,
    pub state: SimulationState,
    pub diagnostics: Diagnostics,
    f0_sup: f64,
    rho_plus: f64,
    d_last: f64,
    d_integral: f64,
    /// Steps at which `f_max` exceeded the maximum-principle bound.
    pub watchdog_violations: u64,
    /// Steps at which some density or distribution value was negative.
    pub negativity_violations: u64,
}

impl Simulation {
    pub fn new(
        grid: Grid,
        params: ModelParams,
        scheme: SchemeConfig,
        dt_policy: DtPolicy,
        state: SimulationState,
        diag: DiagnosticsConfig,
    ) -> Result<Self> {
        state.fluid.check()?;
        state.kinetic.check()?;
        let eq = equilibrium_from_initial(&state.fluid, &state.kinetic, &grid)?;
        let diagnostics = Diagnostics::new(eq, diag, params, &state);
        let d_last = diagnostics.dissipation(&state, &grid);
        Ok(Simulation {
            f0_sup: state.kinetic.max(),
            rho_plus: state.fluid.rho.iter().fold(0.0_f64, |a, &b| a.max(b)),
            grid,
            params,
            scheme,
            dt_policy,
            state,
            diagnostics,
            d_last,
            d_integral: 0.0,
            watchdog_violations: 0,
            negativity_violations: 0,
        })
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let (grid, state) = build_initial_data(cfg)?;
        let policy = match cfg.time.dt_mode {
            DtMode::Auto => DtPolicy::Auto {
                safety: cfg.time.safety,
            },
            DtMode::Fixed => DtPolicy::Fixed(cfg.time.dt.ok_or_else(|| Error::Validation("time.dt missing".into()))?),
        };
        Simulation::new(grid, cfg.params, cfg.scheme(), policy, state, cfg.diagnostics)
    }

    pub fn equilibrium(&self) -> &EquilibriumState {
        &self.diagnostics.eq
    }

    /// Running maximum of the density over all steps so far.
    pub fn rho_plus(&self) -> f64 {
        self.rho_plus
    }

    /// Trapezoidal integral of the dissipation rate up to the current time.
    pub fn dissipation_integral(&self) -> f64 {
        self.d_integral
    }

    pub fn stable_dt(&self) -> f64 {
        coupling::stable_dt(&self.state, &self.params, &self.grid, &self.scheme)
    }

    /// The step the policy asks for next, before any cap.
    pub fn next_dt(&self) -> f64 {
        match self.dt_policy {
            DtPolicy::Auto { safety } => safety * self.stable_dt(),
            DtPolicy::Fixed(dt) => dt,
        }
    }

    /// Advances by exactly `dt`. The state is unchanged on error.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let next = coupling::full_step(&self.state, dt, &self.params, &self.grid, &self.scheme)?;
        if next.fluid.rho.iter().any(|&r| r < 0.0) || next.kinetic.f.iter().any(|&f| f < 0.0) {
            self.negativity_violations += 1;
        }
        let rho_max = next.fluid.rho.iter().fold(0.0_f64, |a, &b| a.max(b));
        self.rho_plus = self.rho_plus.max(rho_max);
        let bound = max_principle_bound(self.f0_sup, self.params.kappa0 * self.rho_plus, next.t);
        if next.kinetic.max() > bound * (1.0 + WATCHDOG_SLACK) {
            self.watchdog_violations += 1;
        }
        let d = self.diagnostics.dissipation(&next, &self.grid);
        self.d_integral += 0.5 * dt * (self.d_last + d);
        self.d_last = d;
        self.state = next;
        Ok(())
    }

    /// Steps until `t_target` is reached exactly, shortening the last step.
    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        loop {
            let remaining = t_target - self.state.t;
            if remaining <= 1e-12 * t_target.abs().max(1.0) {
                self.state.t = t_target.max(self.state.t);
                return Ok(());
            }
            let dt = self.next_dt();
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::StepRejected {
                    stage: "step control",
                    requested: dt,
                    admissible: self.stable_dt(),
                });
            }
            if dt >= remaining * (1.0 - 1e-9) {
                self.step(remaining)?;
                self.state.t = t_target;
                return Ok(());
            }
            self.step(dt)?;
        }
    }

    pub fn record(&self) -> Result<DiagnosticsRecord> {
        self.diagnostics.record(&self.state, &self.grid, self.d_integral)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            nx: self.grid.nx(),
            nv: self.grid.nv(),
            v_max: self.grid.v_max(),
            t: self.state.t,
            f: self.state.kinetic.f.clone(),
            rho: self.state.fluid.rho.clone(),
            m: self.state.fluid.m.clone(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub steps: u64,
    pub t_final: f64,
    pub samples: usize,
    pub snapshots: usize,
    pub watchdog_violations: u64,
    pub negativity_violations: u64,
    pub rho_plus: f64,
    pub equilibrium: EquilibriumSummary,
    pub final_record: DiagnosticsRecord,
    pub records: Vec<DiagnosticsRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSummary {
    pub rho_bar: f64,
    pub n_bar: f64,
    pub u_c: f64,
}

impl From<&EquilibriumState> for EquilibriumSummary {
    fn from(eq: &EquilibriumState) -> Self {
        EquilibriumSummary {
            rho_bar: eq.rho_bar,
            n_bar: eq.n_bar,
            u_c: eq.u_c,
        }
    }
}

#[derive(Debug, Serialize)]
struct ManifestFile {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    name: &'a str,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    code_version: &'static str,
    wall_time_seconds: f64,
    steps: u64,
    t_final: f64,
    watchdog_violations: u64,
    negativity_violations: u64,
    equilibrium: EquilibriumSummary,
    final_record: Option<&'a DiagnosticsRecord>,
    config: &'a ScenarioConfig,
    files: Vec<ManifestFile>,
}

/// Sample times `k * every` in `[0, t_end]`, always ending with `t_end`.
fn schedule(every: f64, t_end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 1u64;
    loop {
        let t = k as f64 * every;
        if t >= t_end * (1.0 - 1e-12) {
            break;
        }
        out.push(t);
        k += 1;
    }
    out.push(t_end);
    out
}

struct Outputs {
    dir: PathBuf,
    csv: CsvWriter,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join("diagnostics.csv");
        let csv = CsvWriter::create(&csv_path)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            csv,
            files: vec![csv_path],
        })
    }

    fn snapshot(&mut self, sim: &Simulation, index: usize) -> Result<()> {
        let p = self.dir.join(format!("snapshot_{index:05}.bin"));
        write_snapshot(&p, &sim.snapshot())?;
        self.files.push(p);
        Ok(())
    }

    fn finish(
        self,
        cfg: &ScenarioConfig,
        sim: &Simulation,
        final_record: Option<&DiagnosticsRecord>,
        failure: Option<&Error>,
        wall: f64,
    ) -> Result<()> {
        self.csv.finish()?;
        let mut files = Vec::with_capacity(self.files.len());
        for p in &self.files {
            files.push(ManifestFile {
                path: p
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                sha256: sha256_file(p)?,
            });
        }
        let manifest = Manifest {
            name: &cfg.name,
            status: if failure.is_some() { "failed" } else { "completed" },
            error: failure.map(|e| e.to_string()),
            code_version: env!("CARGO_PKG_VERSION"),
            wall_time_seconds: wall,
            steps: sim.state.step_index,
            t_final: sim.state.t,
            watchdog_violations: sim.watchdog_violations,
            negativity_violations: sim.negativity_violations,
            equilibrium: sim.equilibrium().into(),
            final_record,
            config: cfg,
            files,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Validation(e.to_string()))?;
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

/// Runs a validated scenario to `t_end`, sampling diagnostics on the
/// configured cadence. A numerical failure flushes what was produced, marks
/// the manifest failed and returns the error.
pub fn run(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    let start = Instant::now();
    let mut sim = Simulation::from_config(cfg)?;
    if let DtPolicy::Fixed(dt) = sim.dt_policy {
        let admissible = sim.stable_dt();
        if dt > admissible {
            return Err(Error::Validation(format!(
                "time.dt = {dt} exceeds the initial stability bound {admissible}"
            )));
        }
    }
    let mut out = opts.out_dir.as_deref().map(Outputs::create).transpose()?;

    let samples = schedule(cfg.sample_every(), cfg.t_end);
    let snaps = cfg.snapshot_every.map(|s| schedule(s, cfg.t_end)).unwrap_or_default();
    let mut targets: Vec<f64> = samples.iter().chain(&snaps).copied().collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    let mut records = vec![sim.record()?];
    let mut n_snap = 0;
    let mut failure = None;
    if let Some(o) = out.as_mut() {
        o.csv.write(&records[0])?;
        if cfg.snapshot_every.is_some() {
            o.snapshot(&sim, n_snap)?;
            n_snap += 1;
        }
    }
    let (mut si, mut pi) = (0, 0);
    for &target in &targets {
        if let Err(e) = sim.advance_to(target) {
            failure = Some(e);
            break;
        }
        if si < samples.len() && samples[si] == target {
            si += 1;
            let rec = sim.record()?;
            if let Some(o) = out.as_mut() {
                o.csv.write(&rec)?;
            }
            records.push(rec);
        }
        if pi < snaps.len() && snaps[pi] == target {
            pi += 1;
            if let Some(o) = out.as_mut() {
                o.snapshot(&sim, n_snap)?;
            }
            n_snap += 1;
        }
    }
    let final_record = records.last().cloned().expect("initial record");
    if let Some(o) = out {
        o.finish(
            cfg,
            &sim,
            Some(&final_record),
            failure.as_ref(),
            start.elapsed().as_secs_f64(),
        )?;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(RunReport {
        name: cfg.name.clone(),
        steps: sim.state.step_index,
        t_final: sim.state.t,
        samples: records.len(),
        snapshots: n_snap,
        watchdog_violations: sim.watchdog_violations,
        negativity_violations: sim.negativity_violations,
        rho_plus: sim.rho_plus,
        equilibrium: sim.equilibrium().into(),
        final_record,
        records,
    })
}

/// Error norms of one refinement level against the next finer one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub nx: usize,
    pub nv: usize,
    pub rho_l1: f64,
    pub m_l1: f64,
    pub f_l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub levels: Vec<ConvergenceLevel>,
    /// `log2(e_k / e_{k+1})` per field, one entry per consecutive pair.
    pub orders_rho: Vec<f64>,
    pub orders_m: Vec<f64>,
    pub orders_f: Vec<f64>,
}

/// Averages each 2x2 (or 2x1 for fluid) block of a field on the doubled grid.
fn restrict_x(fine: &[f64]) -> Vec<f64> {
    fine.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}

fn restrict_xv(fine: &[f64], nv_fine: usize) -> Vec<f64> {
    let nv = nv_fine / 2;
    let nx = fine.len() / nv_fine / 2;
    let mut out = vec![0.0; nx * nv];
    for i in 0..nx {
        for j in 0..nv {
            let a = (2 * i) * nv_fine + 2 * j;
            let b = (2 * i + 1) * nv_fine + 2 * j;
            out[i * nv + j] = 0.25 * (fine[a] + fine[a + 1] + fine[b] + fine[b + 1]);
        }
    }
    out
}

fn l1_diff(a: &[f64], b: &[f64], w: f64) -> f64 {
    w * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Self-convergence in space: runs `refinements + 1` levels with `nx` and
/// `nv` doubled each time, compares each level with the block average of the
/// next one at `t_end`, and reports observed orders.
pub fn convergence_study(cfg: &ScenarioConfig, refinements: usize) -> Result<ConvergenceStudy> {
    if refinements < 2 {
        return Err(Error::Validation(
            "convergence study needs at least 2 refinements".into(),
        ));
    }
    if cfg.initial.tabulated.is_some() {
        return Err(Error::Validation(
            "convergence study cannot refine tabulated initial data".into(),
        ));
    }
    let nx0 = cfg.grid.nx.unwrap_or(crate::scenario::DEFAULT_NX);
    let nv0 = cfg.grid.nv.unwrap_or(crate::scenario::DEFAULT_NV);
    let mut finals = Vec::with_capacity(refinements + 1);
    for k in 0..=refinements {
        let mut c = cfg.clone();
        c.grid.nx = Some(nx0 << k);
        c.grid.nv = Some(nv0 << k);
        c.snapshot_every = None;
        c.sample_every = Some(c.t_end);
        if let Some(dt) = c.time.dt {
            // keep the ratio dt / dx fixed
            c.time.dt = Some(dt / (1u64 << k) as f64);
        }
        let mut sim = Simulation::from_config(&c)?;
        sim.advance_to(c.t_end)?;
        finals.push(sim);
    }
    let mut levels = Vec::new();
    for pair in finals.windows(2) {
        let (coarse, fine) = (&pair[0], &pair[1]);
        let g = &coarse.grid;
        levels.push(ConvergenceLevel {
            nx: g.nx(),
            nv: g.nv(),
            rho_l1: l1_diff(&coarse.state.fluid.rho, &restrict_x(&fine.state.fluid.rho), g.dx()),
            m_l1: l1_diff(&coarse.state.fluid.m, &restrict_x(&fine.state.fluid.m), g.dx()),
            f_l1: l1_diff(
                &coarse.state.kinetic.f,
                &restrict_xv(&fine.state.kinetic.f, fine.grid.nv()),
                g.dx() * g.dv(),
            ),
        });
    }
    let orders = |sel: fn(&ConvergenceLevel) -> f64| -> Vec<f64> {
        levels.windows(2).map(|w| (sel(&w[0]) / sel(&w[1])).log2()).collect()
    };
    Ok(ConvergenceStudy {
        orders_rho: orders(|l| l.rho_l1),
        orders_m: orders(|l| l.m_l1),
        orders_f: orders(|l| l.f_l1),
        levels,
    })
}
