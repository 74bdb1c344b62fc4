//! Fixtures shared by the kernel benchmarks.

use nsvfp_core::run::Simulation;
use nsvfp_core::{load_config, ScenarioConfig};

/// A smooth coupled state on an `n x n` grid: perturbed fluid, shifted particles.
pub fn coupled_config(n: usize) -> ScenarioConfig {
    load_config(&format!(
        "name = \"bench\"\nt_end = 1.0\n[grid]\nnx = {n}\nnv = {n}\n\
         [initial.fluid_perturbation]\namplitude = 0.1\n\
         [initial.kinetic_shift]\ndelta_u = 0.5\n"
    ))
    .expect("bench scenario is valid")
}

pub fn coupled_simulation(n: usize) -> Simulation {
    Simulation::from_config(&coupled_config(n)).expect("bench scenario builds")
}
