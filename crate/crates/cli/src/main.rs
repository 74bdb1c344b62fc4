//! `nsvfp`: run, validate and inspect scenario files.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
//! 1 anything else (I/O, snapshots).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsvfp_core::run::{convergence_study, Simulation};
use nsvfp_core::{load_config, run, Error, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "nsvfp",
    version,
    about = "Coupled Navier-Stokes / Vlasov-Fokker-Planck solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario to t_end, writing diagnostics, snapshots and a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario and print it with every default filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the equilibrium the initial data relaxes to.
    Equilibrium {
        #[arg(long)]
        config: PathBuf,
    },
    /// Self-convergence study over `refinements` grid doublings.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2)]
        refinements: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        2
    } else if e.is_numerical() {
        3
    } else {
        1
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    load_config(&text)
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let report = run(
                &cfg,
                &RunOptions {
                    out_dir: Some(out.clone()),
                },
            )?;
            let r = &report.final_record;
            println!("scenario       {}", report.name);
            println!("steps          {}", report.steps);
            println!("t_final        {:.6e}", report.t_final);
            println!("samples        {}", report.samples);
            println!("snapshots      {}", report.snapshots);
            println!("entropy        {:.6e}", r.entropy_E);
            println!("rho_linf_gap   {:.6e}", r.rho_Linf_gap);
            println!("f_l1_gap       {:.6e}", r.f_L1_gap_to_maxwellian);
            println!("watchdog       {} violations", report.watchdog_violations);
            println!("negativity     {} violations", report.negativity_violations);
            println!("output         {}", out.display());
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            print!("{}", cfg.to_toml()?);
        }
        Command::Equilibrium { config } => {
            let cfg = load(&config)?;
            let sim = Simulation::from_config(&cfg)?;
            let eq = sim.equilibrium();
            println!("rho_bar {:.17e}", eq.rho_bar);
            println!("n_bar   {:.17e}", eq.n_bar);
            println!("u_c     {:.17e}", eq.u_c);
        }
        Command::Convergence { config, refinements } => {
            let cfg = load(&config)?;
            let study = convergence_study(&cfg, refinements)?;
            println!("{:>6} {:>6} {:>14} {:>14} {:>14}", "nx", "nv", "rho_l1", "m_l1", "f_l1");
            for l in &study.levels {
                println!(
                    "{:>6} {:>6} {:>14.6e} {:>14.6e} {:>14.6e}",
                    l.nx, l.nv, l.rho_l1, l.m_l1, l.f_l1
                );
            }
            println!("observed orders (log2 of successive error ratios)");
            for (k, ((a, b), c)) in study
                .orders_rho
                .iter()
                .zip(&study.orders_m)
                .zip(&study.orders_f)
                .enumerate()
            {
                println!("  level {k}: rho {a:.3}  m {b:.3}  f {c:.3}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
