//! Néel-order dynamics of a four-atom star under dephasing: quantum
//! trajectories against the dense master equation, with the closed system
//! as reference.
//!
//!     cargo run --example neel_dynamics

use cayley_anneal::config::ExperimentConfig;
use cayley_anneal::dynamics::lindblad::evolve_lindblad;
use cayley_anneal::dynamics::trajectory::evolve_trajectories_with_steps;
use cayley_anneal::dynamics::{evolve_schrodinger, NoiseModel, ObservableSet, StepControl};
use cayley_anneal::hamiltonian::{interaction_matrix, RydbergHamiltonian};
use cayley_anneal::state::{DensityMatrix, StateVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::preset(1)?;
    cfg.graph.shells = 2; // the 4-atom star fits the dense master equation
    let consts = cfg.physical_constants();
    let (g, geo) = cfg.build_graph()?;
    let ham = RydbergHamiltonian::new(interaction_matrix(&g, &geo, &consts, cfg.interaction_mode())?)?;
    let sched = cfg.schedule();
    let noise = NoiseModel::default();
    let obs = ObservableSet::for_graph(&g);
    let psi0 = StateVector::all_down(g.n_vertices());
    let rho0 = DensityMatrix::from_pure(&psi0);
    let times: Vec<f64> = (0..=6).map(|i| sched.t_f * i as f64 / 6.0).collect();

    println!(
        "4-atom star, γ_ind = {} kHz, γ_col = {} kHz",
        cfg.noise.gamma_individual_khz, cfg.noise.gamma_collective_khz
    );
    let closed = evolve_schrodinger(&ham, &sched, &psi0, StepControl::Fixed(400), &times, &obs)?;
    let lindblad =
        evolve_lindblad(&ham, &sched, &rho0, &noise, StepControl::Fixed(400), &times, &obs)?;
    let n_traj = 300;
    let traj = evolve_trajectories_with_steps(
        &ham, &sched, &psi0, &noise, n_traj, 11, &times, &obs, 400,
    )?;

    println!("\n  t/t_f    closed    master eq   {n_traj} trajectories");
    for i in 0..times.len() {
        let se = traj.snapshots[i].neel_stderr.unwrap_or(0.0);
        println!(
            "  {:5.3}   {:+.4}    {:+.4}      {:+.4} ± {:.4}",
            times[i] / sched.t_f,
            closed.snapshots[i].neel,
            lindblad.snapshots[i].neel,
            traj.snapshots[i].neel,
            se
        );
    }
    println!("\ndephasing suppresses the antiferromagnetic order the closed system builds;");
    println!("the stochastic average reproduces the master equation within its error bars.");
    Ok(())
}
