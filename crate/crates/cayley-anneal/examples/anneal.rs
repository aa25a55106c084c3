//! Closed-system anneal of the ten-atom tree into its shell-alternating
//! ground state: Ω ramps on and off while Δ sweeps from −2Ω0 to +2Ω0.
//!
//!     cargo run --example anneal

use cayley_anneal::config::ExperimentConfig;
use cayley_anneal::dynamics::{evolve_schrodinger, ObservableSet, StepControl};
use cayley_anneal::groundstate::brute_force_ground;
use cayley_anneal::hamiltonian::{interaction_matrix, RydbergHamiltonian};
use cayley_anneal::state::StateVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::preset(1)?;
    let consts = cfg.physical_constants();
    let (g, geo) = cfg.build_graph()?;
    let couplings = interaction_matrix(&g, &geo, &consts, cfg.interaction_mode())?;
    let delta_f = cfg.point.delta_f_over_omega0 * consts.omega0;
    let ground = brute_force_ground(&couplings, delta_f, 1e-12 * consts.omega0)?;
    let ham = RydbergHamiltonian::new(couplings)?;
    let sched = cfg.schedule();

    println!(
        "G10 anneal: U/Ω0 = {}, Δf/Ω0 = {}, t_f = {:.4} us",
        cfg.point.u_over_omega0, cfg.point.delta_f_over_omega0, sched.t_f
    );
    println!("classical ground state: {:?} (energy {:.4} Ω0)\n", ground.configs, ground.energy / consts.omega0);

    let times: Vec<f64> = (0..=8).map(|i| sched.t_f * i as f64 / 8.0).collect();
    let obs = ObservableSet::for_graph(&g).with_ground_configs(ground.configs.clone());
    let psi0 = StateVector::all_down(g.n_vertices());
    let result = evolve_schrodinger(&ham, &sched, &psi0, StepControl::default(), &times, &obs)?;

    println!("  t/t_f     O_N     P(ground)   |norm-1|");
    for s in &result.snapshots {
        println!(
            "  {:5.3}  {:7.4}   {:8.5}   {:.2e}",
            s.t / sched.t_f,
            s.neel,
            s.ground_overlap.unwrap_or(0.0),
            (s.norm - 1.0).abs()
        );
    }

    let label = result.final_state.argmax();
    let dist = result.final_state.distribution();
    println!("\nmost probable configuration: {label} (binary {label:010b}, P = {:.4})", dist[label as usize]);
    Ok(())
}
