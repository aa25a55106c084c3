//! Artifact-producing task driver shared by the command-line binary, the
//! examples, and the end-to-end tests.
//!
//! Every artifact is a pure function of the configuration: no timestamps,
//! fixed float formatting, and fixed-order parallel reductions, so repeated
//! runs are byte-identical regardless of the rayon thread count.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::ExperimentConfig;
use crate::dynamics::{
    self, evolve_schrodinger, EvolutionResult, ObservableSet, SpinSource, StepControl,
};
use crate::dynamics::trajectory::evolve_trajectories_with_steps;
use crate::error::{Error, Result};
use crate::groundstate::{self, GroundSet};
use crate::hamiltonian::{interaction_matrix, RydbergHamiltonian};
use crate::holography::{self, TargetSet};
use crate::lattice::{self, Geometry, TreeGraph};
use crate::measurement::{self, SampleSource, ShotRecord};
use crate::state::StateVector;

/// One CLI subcommand's worth of work.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    /// Realize the array geometry and validate its spacing rules.
    Geometry,
    /// Classify classical ground states over the configured (U, Δ) grid.
    PhaseDiagram,
    /// Closed-system anneal with time-resolved observables.
    Anneal,
    /// Bitstring shots (with optional SPAM) from the end of a run.
    Sample,
    /// Néel-order time series, open-system when noise is configured.
    Neel,
    /// Weighted-GS hologram for the array's tweezer pattern.
    Holo,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Geometry => "geometry",
            Task::PhaseDiagram => "phase-diagram",
            Task::Anneal => "anneal",
            Task::Sample => "sample",
            Task::Neel => "neel",
            Task::Holo => "holo",
        }
    }
}

/// Largest system the brute-force phase-diagram scan will accept.
pub const MAX_PHASE_DIAGRAM_ATOMS: usize = 14;

/// Runs `task` and writes its artifacts into `out_dir` (created if absent).
/// Returns the paths written, metadata first.
pub fn run(task: Task, cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let (g, geo) = cfg.build_graph()?;
    let mut artifacts = vec![write_metadata(task, cfg, &g, &geo, out_dir)?];
    let mut more = match task {
        Task::Geometry => run_geometry(cfg, &g, &geo, out_dir)?,
        Task::PhaseDiagram => run_phase_diagram(cfg, &g, out_dir)?,
        Task::Anneal => run_anneal(cfg, &g, &geo, out_dir)?,
        Task::Sample => run_sample(cfg, &g, &geo, out_dir)?,
        Task::Neel => run_neel(cfg, &g, &geo, out_dir)?,
        Task::Holo => run_holo(cfg, &geo, out_dir)?,
    };
    artifacts.append(&mut more);
    Ok(artifacts)
}

/// [`run`] inside a dedicated rayon pool of `threads` workers (`None` uses
/// the default pool). Outputs do not depend on the choice.
pub fn run_with_threads(
    task: Task,
    cfg: &ExperimentConfig,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<Vec<PathBuf>> {
    match threads {
        None => run(task, cfg, out_dir),
        Some(n) => {
            if n == 0 {
                return Err(Error::InvalidParameter("--threads must be positive".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(|| run(task, cfg, out_dir))
        }
    }
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn write_json(path: PathBuf, value: &serde_json::Value) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    write_file(path, &text)
}

fn write_metadata(
    task: Task,
    cfg: &ExperimentConfig,
    g: &TreeGraph,
    geo: &Geometry,
    out_dir: &Path,
) -> Result<PathBuf> {
    let consts = cfg.physical_constants();
    let meta = json!({
        "task": task.name(),
        "graph": g.signature(),
        "n_atoms": g.n_vertices(),
        "n_edges": g.n_edges(),
        "edge_spacing_um": geo.d(),
        "blockade_radius_um": consts.blockade_radius(),
        "d_over_r_b": geo.d() / consts.blockade_radius(),
        "notes": cfg.notes,
        "config": serde_json::to_value(cfg).expect("config serializes"),
    });
    write_json(out_dir.join("metadata.json"), &meta)
}

fn run_geometry(
    cfg: &ExperimentConfig,
    g: &TreeGraph,
    geo: &Geometry,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let geometry_path = out_dir.join("geometry.txt");
    lattice::write_geometry(&geometry_path, g, geo)?;
    let report = lattice::validate_geometry(g, geo);
    let consts = cfg.physical_constants();
    let validation = json!({
        "signature": g.signature(),
        "n_atoms": g.n_vertices(),
        "n_edges": g.n_edges(),
        "edge_spacing_um": geo.d(),
        "d_over_r_b": geo.d() / consts.blockade_radius(),
        "edge_dev_max": report.edge_dev_max,
        "min_nonedge_ratio": report.min_nonedge_ratio,
        "max_nonedge_coupling_ratio": report.max_nonedge_coupling_ratio,
        "sqrt3_rule_satisfied": report.min_nonedge_ratio >= 3f64.sqrt() - 1e-9,
    });
    Ok(vec![geometry_path, write_json(out_dir.join("validation.json"), &validation)?])
}

fn run_phase_diagram(
    cfg: &ExperimentConfig,
    g: &TreeGraph,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if g.n_vertices() > MAX_PHASE_DIAGRAM_ATOMS {
        return Err(Error::TooLarge(format!(
            "phase-diagram scans enumerate all 2^N configurations per grid point and are \
             limited to {MAX_PHASE_DIAGRAM_ATOMS} atoms; the configured graph has {}",
            g.n_vertices()
        )));
    }
    let points = groundstate::phase_diagram(g, &cfg.phase_grid(), cfg.physical_constants().omega0)?;
    let csv = groundstate::phase_diagram_csv(&points);
    Ok(vec![write_file(out_dir.join("phase_diagram.csv"), &csv)?])
}

/// Ground configurations of the realized couplings at the final detuning.
fn final_ground_set(
    cfg: &ExperimentConfig,
    g: &TreeGraph,
    geo: &Geometry,
) -> Result<(RydbergHamiltonian, GroundSet)> {
    let consts = cfg.physical_constants();
    let couplings = interaction_matrix(g, geo, &consts, cfg.interaction_mode())?;
    let delta_f = cfg.point.delta_f_over_omega0 * consts.omega0;
    let ground = groundstate::brute_force_ground(&couplings, delta_f, 1e-12 * consts.omega0)?;
    Ok((RydbergHamiltonian::new(couplings)?, ground))
}

fn observables_for(g: &TreeGraph, ground: &GroundSet) -> ObservableSet {
    ObservableSet::for_graph(g).with_ground_configs(ground.configs.clone()).with_half_swap(g)
}

fn step_control(cfg: &ExperimentConfig) -> StepControl {
    match cfg.schedule.steps {
        Some(n) => StepControl::Fixed(n),
        None => StepControl::default(),
    }
}

/// Closed or open evolution at the configured sample times, as the noise
/// settings dictate.
fn evolve(cfg: &ExperimentConfig, g: &TreeGraph, geo: &Geometry, times: &[f64]) -> Result<EvolutionResult> {
    let (ham, ground) = final_ground_set(cfg, g, geo)?;
    let obs = observables_for(g, &ground);
    let sched = cfg.schedule();
    let psi0 = StateVector::all_down(g.n_vertices());
    if cfg.noise_active() {
        evolve_trajectories_with_steps(
            &ham,
            &sched,
            &psi0,
            &cfg.noise_model(),
            cfg.noise.trajectories,
            cfg.run.seed,
            times,
            &obs,
            cfg.noise.steps,
        )
    } else {
        evolve_schrodinger(&ham, &sched, &psi0, step_control(cfg), times, &obs)
    }
}

fn dynamics_summary(cfg: &ExperimentConfig, result: &EvolutionResult) -> serde_json::Value {
    let last = result.final_snapshot();
    let dist = result.final_state.distribution();
    let argmax = result.final_state.argmax();
    json!({
        "n_atoms": result.n_atoms,
        "t_f_us": cfg.schedule().t_f,
        "open_system": cfg.noise_active(),
        "argmax_label": argmax,
        "argmax_probability": dist[argmax as usize],
        "final_neel_order": last.neel,
        "final_ground_probability": last.ground_overlap,
        "final_norm": last.norm,
    })
}

fn run_anneal(
    cfg: &ExperimentConfig,
    g: &TreeGraph,
    geo: &Geometry,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let result = evolve(cfg, g, geo, &cfg.sample_times())?;
    let jsonl = write_file(out_dir.join("anneal.jsonl"), &result.to_jsonl())?;
    let summary = write_json(out_dir.join("summary.json"), &dynamics_summary(cfg, &result))?;
    Ok(vec![jsonl, summary])
}

fn run_neel(
    cfg: &ExperimentConfig,
    g: &TreeGraph,
    geo: &Geometry,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let result = evolve(cfg, g, geo, &cfg.sample_times())?;
    let mut csv =
        String::from("t_us,neel,neel_stderr,ground_probability,ground_probability_stderr\n");
    for s in &result.snapshots {
        let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_default();
        writeln!(
            csv,
            "{:.9e},{:.9e},{},{},{}",
            s.t,
            s.neel,
            fmt_opt(s.neel_stderr),
            fmt_opt(s.ground_overlap),
            fmt_opt(s.ground_overlap_stderr),
        )
        .expect("string write");
    }
    let csv_path = write_file(out_dir.join("neel.csv"), &csv)?;
    let summary = write_json(out_dir.join("summary.json"), &dynamics_summary(cfg, &result))?;
    Ok(vec![csv_path, summary])
}

/// Shots from the final state; SPAM seed is derived from the sampling seed
/// so the two stages stay independent.
fn sampled_record(cfg: &ExperimentConfig, result: &EvolutionResult) -> Result<ShotRecord> {
    let dist;
    let source = match &result.final_state {
        dynamics::FinalState::Pure(psi) => SampleSource::State(psi),
        dynamics::FinalState::Density(rho) => SampleSource::Density(rho),
        dynamics::FinalState::Mixture(p) => {
            dist = p.clone();
            SampleSource::Distribution(&dist)
        }
    };
    let record = measurement::sample_bitstrings(source, cfg.run.shots as u64, cfg.run.seed)?;
    if cfg.spam.enabled {
        measurement::apply_spam(&record, &cfg.spam_model(), cfg.run.seed ^ 0x5350_414d)
    } else {
        Ok(record)
    }
}

fn run_sample(
    cfg: &ExperimentConfig,
    g: &TreeGraph,
    geo: &Geometry,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let t_f = cfg.schedule().t_f;
    let result = evolve(cfg, g, geo, &[t_f])?;
    let record = sampled_record(cfg, &result)?;
    let csv = write_file(out_dir.join("histogram.csv"), &measurement::histogram_csv(&record))?;
    let argmax = record.argmax();
    let summary = json!({
        "n_atoms": record.n_atoms(),
        "n_shots": record.n_shots(),
        "spam_applied": record.spam_applied(),
        "argmax_label": argmax,
        "argmax_frequency": record.frequency(argmax),
        "sampled_neel_order": dynamics::neel_order(SpinSource::Shots(&record), g),
        "simulated_argmax_label": result.final_state.argmax(),
    });
    let summary = write_json(out_dir.join("summary.json"), &summary)?;
    Ok(vec![csv, summary])
}

fn run_holo(cfg: &ExperimentConfig, geo: &Geometry, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let targets = TargetSet::uniform(geo.positions().to_vec())?;
    let plane = cfg.slm_plane();
    let outcome =
        holography::wgs_optimize(&targets, &plane, cfg.holography.iterations, cfg.run.seed)?;
    let phase_path = out_dir.join("hologram.phase");
    outcome.pattern.write_file(&phase_path)?;
    let csv = write_file(
        out_dir.join("holo_intensities.csv"),
        &holography::intensity_history_csv(&outcome),
    )?;
    let summary = json!({
        "n_targets": targets.len(),
        "iterations": cfg.holography.iterations,
        "final_uniformity": outcome.final_uniformity(),
        "uniformity_history": outcome.uniformity_history,
    });
    let summary = write_json(out_dir.join("summary.json"), &summary)?;
    Ok(vec![phase_path, csv, summary])
}
