//! Finite-shot readout of the annealed G10 state, with and without
//! state-preparation-and-measurement (SPAM) errors.
//!
//!     cargo run --example sample_distribution

use cayley_anneal::config::ExperimentConfig;
use cayley_anneal::dynamics::{evolve_schrodinger, neel_order, ObservableSet, SpinSource, StepControl};
use cayley_anneal::hamiltonian::{interaction_matrix, RydbergHamiltonian};
use cayley_anneal::measurement::{apply_spam, histogram, sample_bitstrings, SampleSource};
use cayley_anneal::state::StateVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::preset(1)?;
    let consts = cfg.physical_constants();
    let (g, geo) = cfg.build_graph()?;
    let ham = RydbergHamiltonian::new(interaction_matrix(&g, &geo, &consts, cfg.interaction_mode())?)?;
    let sched = cfg.schedule();
    let psi0 = StateVector::all_down(g.n_vertices());
    let obs = ObservableSet::for_graph(&g);
    let result =
        evolve_schrodinger(&ham, &sched, &psi0, StepControl::default(), &[sched.t_f], &obs)?;

    let psi = match &result.final_state {
        cayley_anneal::dynamics::FinalState::Pure(psi) => psi.clone(),
        _ => unreachable!("closed evolution returns a pure state"),
    };

    let shots = cfg.run.shots as u64;
    let clean = sample_bitstrings(SampleSource::State(&psi), shots, cfg.run.seed)?;
    let spam = apply_spam(&clean, &cfg.spam_model(), cfg.run.seed + 1)?;

    println!("{} shots from the annealed G10 state (seed {})\n", shots, cfg.run.seed);
    for (name, record) in [("ideal readout", &clean), ("with SPAM", &spam)] {
        println!("{name}: O_N = {:+.4}, top configurations:", neel_order(SpinSource::Shots(record), &g));
        let mut rows = histogram(record);
        rows.sort_by(|a, b| b.count.cmp(&a.count).then(a.label.cmp(&b.label)));
        for row in rows.iter().take(5) {
            println!(
                "  {:4}  {:010b}  count {:4}  P = {:.4} ± {:.4}",
                row.label, row.label, row.count, row.probability, row.stderr
            );
        }
        println!();
    }
    println!("SPAM pushes weight off the ground configuration and dilutes O_N;");
    println!("the affine correction in `SpamModel::affine_coefficients` undoes the bias.");
    Ok(())
}
