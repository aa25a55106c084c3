//! Monte-Carlo wave-function unraveling of the dephasing master equation.
//!
//! Between jumps the state evolves under the non-Hermitian generator
//! H(t) − (i/2)Σ L†L. All jump operators are diagonal, so the
//! anti-Hermitian part is the basis-state decay Γ(b) = γ_ind·N_up(b) +
//! γ_col·N_up(b)², applied exactly as a Strang split around each unitary
//! step: e^{−Γ dt/4} · U_CFM4(dt) · e^{−Γ dt/4}. Jumps use the waiting-time
//! construction — the squared norm is compared against a uniform draw at
//! every step boundary — and project with n̂_j (individual) or weight by
//! N_up (collective), chosen proportionally to γ⟨L†L⟩.
//!
//! Trajectory `i` owns an RNG derived from `(seed, i)` and trajectories are
//! reduced in fixed 64-trajectory chunks, so every statistic is independent
//! of thread count.

use num_complex::Complex64 as C64;
use rand::Rng;

use super::{
    build_time_grid, cfm4_step, EvolutionResult, FinalState, NoiseModel, ObservableEngine,
    ObservableSet, Snapshot,
};
use crate::error::{Error, Result};
use crate::hamiltonian::RydbergHamiltonian;
use crate::krylov::ExpvOptions;
use crate::schedule::Schedule;
use crate::state::StateVector;
use crate::util;

/// Trajectories per reduction chunk; fixed so ensemble statistics do not
/// depend on the thread count.
const TRAJ_CHUNK: usize = 64;

/// Largest system accepted for noisy ensembles; each trajectory costs a
/// full wavefunction propagation, so bigger systems belong to the closed
/// solver.
pub const MAX_TRAJECTORY_ATOMS: usize = 14;

/// Default number of unitary steps per trajectory.
const DEFAULT_STEPS: usize = 400;

/// Integrator steps with sample marks, shared by all trajectories.
struct StepPlan {
    /// (start time, dt) per step.
    steps: Vec<(f64, f64)>,
    /// (steps completed, sample time) in step order.
    marks: Vec<(usize, f64)>,
}

fn build_step_plan(sched: &Schedule, sample_times: &[f64], n_steps: usize) -> Result<StepPlan> {
    let grid = build_time_grid(sched, sample_times)?;
    let dt_target = sched.t_f / n_steps.max(1) as f64;
    let mut steps = Vec::new();
    let mut marks = Vec::new();
    if grid.sample_zero {
        marks.push((0, 0.0));
    }
    let mut t = 0.0;
    for &(t_end, sample) in &grid.nodes {
        let span = t_end - t;
        if span > 1e-15 * sched.t_f {
            let k = (span / dt_target).ceil().max(1.0) as usize;
            let dt = span / k as f64;
            for i in 0..k {
                steps.push((t + i as f64 * dt, dt));
            }
        }
        t = t_end;
        if sample {
            marks.push((steps.len(), t));
        }
    }
    Ok(StepPlan { steps, marks })
}

struct SampleAccum {
    neel: f64,
    neel_sq: f64,
    ground: f64,
    ground_sq: f64,
    antisym: f64,
    occ: Vec<f64>,
    occ_sq: Vec<f64>,
}

impl SampleAccum {
    fn new(n: usize) -> Self {
        SampleAccum {
            neel: 0.0,
            neel_sq: 0.0,
            ground: 0.0,
            ground_sq: 0.0,
            antisym: 0.0,
            occ: vec![0.0; n],
            occ_sq: vec![0.0; n],
        }
    }

    fn add(&mut self, snap: &Snapshot) {
        self.neel += snap.neel;
        self.neel_sq += snap.neel * snap.neel;
        if let Some(g) = snap.ground_overlap {
            self.ground += g;
            self.ground_sq += g * g;
        }
        if let Some(a) = snap.antisym_overlap {
            self.antisym += a;
        }
        for (j, &o) in snap.occupations.iter().enumerate() {
            self.occ[j] += o;
            self.occ_sq[j] += o * o;
        }
    }

    fn merge(&mut self, other: &SampleAccum) {
        self.neel += other.neel;
        self.neel_sq += other.neel_sq;
        self.ground += other.ground;
        self.ground_sq += other.ground_sq;
        self.antisym += other.antisym;
        for j in 0..self.occ.len() {
            self.occ[j] += other.occ[j];
            self.occ_sq[j] += other.occ_sq[j];
        }
    }
}

/// Standard error of the mean from Σx and Σx² over n samples.
fn stderr_of_mean(sum: f64, sum_sq: f64, n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (var / n).sqrt()
}

struct ChunkResult {
    accums: Vec<SampleAccum>,
    dist: Vec<f64>,
}

struct TrajectoryContext<'a> {
    ham: &'a RydbergHamiltonian,
    sched: &'a Schedule,
    psi0: &'a [C64],
    plan: &'a StepPlan,
    engine: &'a ObservableEngine,
    /// Γ(b) per basis label; empty in the closed limit.
    decay: Vec<f64>,
    noise: NoiseModel,
    seed: u64,
    expv_opts: ExpvOptions,
}

impl TrajectoryContext<'_> {
    fn run_one(&self, index: u64, accums: &mut [SampleAccum], dist: &mut [f64]) -> Result<()> {
        let n = self.ham.n_atoms();
        let dim = self.ham.dim();
        let mut rng = util::derived_rng(self.seed, index);
        let mut amps = self.psi0.to_vec();
        let closed = self.decay.is_empty();
        let mut threshold = if closed { -1.0 } else { rng.gen::<f64>() };
        let mut mark_idx = 0usize;
        let record = |steps_done: usize,
                          mark_idx: &mut usize,
                          amps: &[C64],
                          accums: &mut [SampleAccum]| {
            while *mark_idx < self.plan.marks.len()
                && self.plan.marks[*mark_idx].0 == steps_done
            {
                let (_, t) = self.plan.marks[*mark_idx];
                let snap = self.engine.snapshot(t, amps);
                accums[*mark_idx].add(&snap);
                *mark_idx += 1;
            }
        };
        record(0, &mut mark_idx, &amps, accums);
        for (i, &(t, dt)) in self.plan.steps.iter().enumerate() {
            if !closed {
                let quarter = 0.25 * dt;
                for (b, a) in amps.iter_mut().enumerate() {
                    *a *= (-self.decay[b] * quarter).exp();
                }
            }
            cfm4_step(self.ham, self.sched, t, dt, &mut amps, &self.expv_opts)?;
            if !closed {
                let quarter = 0.25 * dt;
                let mut norm2 = 0.0;
                for (b, a) in amps.iter_mut().enumerate() {
                    *a *= (-self.decay[b] * quarter).exp();
                    norm2 += a.norm_sqr();
                }
                if norm2 <= threshold {
                    self.jump(&mut amps, &mut rng, n)?;
                    threshold = rng.gen::<f64>();
                }
            }
            record(i + 1, &mut mark_idx, &amps, accums);
        }
        // Normalized final distribution into the ensemble average.
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let inv = 1.0 / norm2;
        for b in 0..dim {
            dist[b] += amps[b].norm_sqr() * inv;
        }
        Ok(())
    }

    /// Apply one jump, with channels weighted by γ⟨L†L⟩ on the pre-jump
    /// state: γ_ind·⟨n̂_j⟩ per atom, γ_col·⟨N_up²⟩ collectively.
    fn jump(&self, amps: &mut [C64], rng: &mut impl Rng, n: usize) -> Result<()> {
        let mut weights = vec![0.0; n + 1];
        for (b, a) in amps.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let mut bits = b as u64;
            while bits != 0 {
                let pos = bits.trailing_zeros() as usize;
                weights[n - 1 - pos] += self.noise.gamma_individual * w;
                bits &= bits - 1;
            }
            let nu = (b as u64).count_ones() as f64;
            weights[n] += self.noise.gamma_collective * nu * nu * w;
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter(
                "jump triggered with zero total jump rate".into(),
            ));
        }
        let mut x = rng.gen::<f64>() * total;
        let mut channel = n; // fall through to collective on rounding
        for (j, &w) in weights.iter().enumerate() {
            if x < w {
                channel = j;
                break;
            }
            x -= w;
        }
        if channel < n {
            // L = √γ·n̂_j: project out components with atom `channel` down.
            let mask = 1u64 << crate::state::atom_bit_position(n, channel);
            for (b, a) in amps.iter_mut().enumerate() {
                if b as u64 & mask == 0 {
                    *a = C64::new(0.0, 0.0);
                }
            }
        } else {
            // L = √γ·Σn̂: weight amplitudes by the up-count.
            for (b, a) in amps.iter_mut().enumerate() {
                *a *= (b as u64).count_ones() as f64;
            }
        }
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::InvalidParameter("jump annihilated the state".into()));
        }
        let inv = 1.0 / norm2.sqrt();
        for a in amps.iter_mut() {
            *a *= inv;
        }
        Ok(())
    }
}

/// Ensemble of quantum trajectories under the annealing schedule.
///
/// Snapshot observables are per-trajectory expectations averaged over the
/// ensemble, with standard errors of the mean; `norm` is 1 by construction.
/// The final state is the trajectory-averaged basis distribution. With both
/// rates zero every trajectory reduces to the deterministic Schrödinger
/// evolution.
pub fn evolve_trajectories(
    ham: &RydbergHamiltonian,
    sched: &Schedule,
    psi0: &StateVector,
    noise: &NoiseModel,
    n_traj: usize,
    seed: u64,
    sample_times: &[f64],
    observables: &ObservableSet,
) -> Result<EvolutionResult> {
    evolve_trajectories_with_steps(
        ham,
        sched,
        psi0,
        noise,
        n_traj,
        seed,
        sample_times,
        observables,
        DEFAULT_STEPS,
    )
}

/// [`evolve_trajectories`] with an explicit unitary step count.
#[allow(clippy::too_many_arguments)]
pub fn evolve_trajectories_with_steps(
    ham: &RydbergHamiltonian,
    sched: &Schedule,
    psi0: &StateVector,
    noise: &NoiseModel,
    n_traj: usize,
    seed: u64,
    sample_times: &[f64],
    observables: &ObservableSet,
    n_steps: usize,
) -> Result<EvolutionResult> {
    sched.validate()?;
    noise.validate()?;
    if psi0.dim() != ham.dim() {
        return Err(Error::DimensionMismatch { expected: ham.dim(), got: psi0.dim() });
    }
    if n_traj == 0 {
        return Err(Error::InvalidParameter("need at least one trajectory".into()));
    }
    if !noise.is_closed() && ham.n_atoms() > MAX_TRAJECTORY_ATOMS {
        return Err(Error::TooLarge(format!(
            "noisy trajectory ensembles are limited to {MAX_TRAJECTORY_ATOMS} atoms (got {})",
            ham.n_atoms()
        )));
    }
    let n = ham.n_atoms();
    let dim = ham.dim();
    let plan = build_step_plan(sched, sample_times, n_steps)?;
    let engine = ObservableEngine::new(n, observables);
    let decay: Vec<f64> = if noise.is_closed() {
        Vec::new()
    } else {
        (0..dim).map(|b| noise.decay_rate((b as u64).count_ones())).collect()
    };
    let ctx = TrajectoryContext {
        ham,
        sched,
        psi0: psi0.amplitudes(),
        plan: &plan,
        engine: &engine,
        decay,
        noise: *noise,
        seed,
        expv_opts: ExpvOptions { krylov_dim: 20, tol: 1e-11, max_attempts: 100_000 },
    };
    let n_samples = plan.marks.len();
    let n_chunks = n_traj.div_ceil(TRAJ_CHUNK);
    let run_chunk = |c: usize| -> Result<ChunkResult> {
        let lo = c * TRAJ_CHUNK;
        let hi = (lo + TRAJ_CHUNK).min(n_traj);
        let mut accums: Vec<SampleAccum> = (0..n_samples).map(|_| SampleAccum::new(n)).collect();
        let mut dist = vec![0.0; dim];
        for traj in lo..hi {
            ctx.run_one(traj as u64, &mut accums, &mut dist)?;
        }
        Ok(ChunkResult { accums, dist })
    };
    let chunks: Vec<Result<ChunkResult>> = if n_traj * dim >= util::PAR_THRESHOLD {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(run_chunk).collect()
    } else {
        (0..n_chunks).map(run_chunk).collect()
    };
    let mut accums: Vec<SampleAccum> = (0..n_samples).map(|_| SampleAccum::new(n)).collect();
    let mut dist = vec![0.0; dim];
    for chunk in chunks {
        let chunk = chunk?;
        for (acc, part) in accums.iter_mut().zip(&chunk.accums) {
            acc.merge(part);
        }
        for (d, p) in dist.iter_mut().zip(&chunk.dist) {
            *d += p;
        }
    }
    let nt = n_traj as f64;
    for d in dist.iter_mut() {
        *d /= nt;
    }
    let snapshots: Vec<Snapshot> = plan
        .marks
        .iter()
        .zip(&accums)
        .map(|(&(_, t), acc)| Snapshot {
            t,
            norm: 1.0,
            neel: acc.neel / nt,
            occupations: acc.occ.iter().map(|&s| s / nt).collect(),
            ground_overlap: observables.ground_configs.as_ref().map(|_| acc.ground / nt),
            antisym_overlap: observables.antisym_perm.as_ref().map(|_| acc.antisym / nt),
            neel_stderr: Some(stderr_of_mean(acc.neel, acc.neel_sq, nt)),
            ground_overlap_stderr: observables
                .ground_configs
                .as_ref()
                .map(|_| stderr_of_mean(acc.ground, acc.ground_sq, nt)),
            occupation_stderr: Some(
                (0..n).map(|j| stderr_of_mean(acc.occ[j], acc.occ_sq[j], nt)).collect(),
            ),
        })
        .collect();
    Ok(EvolutionResult { n_atoms: n, snapshots, final_state: FinalState::Mixture(dist) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::lindblad::evolve_lindblad;
    use crate::dynamics::{evolve_schrodinger, StepControl};
    use crate::hamiltonian::CouplingMap;
    use crate::lattice::{TreeGraph, TreeKind};
    use crate::state::DensityMatrix;
    use crate::units::PhysicalConstants;

    fn star_graph(u: f64) -> (TreeGraph, RydbergHamiltonian) {
        let g = TreeGraph::from_parts(
            TreeKind::Regular { z: 3, s: 2 },
            vec![0, 1, 1, 1],
            vec![None, Some(0), Some(0), Some(0)],
            vec![(0, 1), (0, 2), (0, 3)],
        )
        .unwrap();
        let pairs = g.edges().iter().map(|&(j, k)| (j, k, u)).collect();
        let ham = RydbergHamiltonian::new(CouplingMap::new(4, pairs).unwrap()).unwrap();
        (g, ham)
    }

    #[test]
    fn closed_noise_reproduces_schrodinger_exactly() {
        let consts = PhysicalConstants::default();
        let omega0 = consts.omega0;
        let (g, ham) = star_graph(1.82 * omega0);
        let sched = Schedule::standard(&consts, 2.0 * omega0);
        let psi0 = StateVector::all_down(4);
        let obs = ObservableSet::for_graph(&g);
        let times = [0.5 * sched.t_f, sched.t_f];
        let traj = evolve_trajectories_with_steps(
            &ham,
            &sched,
            &psi0,
            &NoiseModel::closed(),
            8,
            99,
            &times,
            &obs,
            320,
        )
        .unwrap();
        let pure = evolve_schrodinger(
            &ham,
            &sched,
            &psi0,
            StepControl::Fixed(320),
            &times,
            &obs,
        )
        .unwrap();
        let FinalState::Pure(psi) = &pure.final_state else { panic!() };
        let FinalState::Mixture(dist) = &traj.final_state else { panic!() };
        // The trajectory mixture is normalized per trajectory; compare
        // against the normalized pure distribution.
        let inv = 1.0 / psi.norm_sqr();
        for (b, &p) in dist.iter().enumerate() {
            assert!(
                (p - psi.probability(b as u64) * inv).abs() < 1e-13,
                "population mismatch at {b}"
            );
        }
        // Ensemble spread must vanish when all trajectories coincide; the
        // variance of identical values only cancels to FP roundoff, which
        // the square root amplifies to ~1e-8.
        for snap in &traj.snapshots {
            assert!(snap.neel_stderr.unwrap() < 1e-7);
        }
        for (a, b) in traj.snapshots.iter().zip(&pure.snapshots) {
            assert!((a.neel - b.neel).abs() < 1e-12);
        }
    }

    #[test]
    fn trajectories_agree_with_lindblad_on_the_star() {
        let consts = PhysicalConstants::default();
        let omega0 = consts.omega0;
        let (g, ham) = star_graph(1.82 * omega0);
        let sched = Schedule::standard(&consts, 2.0 * omega0);
        let psi0 = StateVector::all_down(4);
        let obs = ObservableSet::for_graph(&g);
        let noise = NoiseModel::default();
        let times: Vec<f64> = (1..=4).map(|i| sched.t_f * i as f64 / 4.0).collect();
        let exact = evolve_lindblad(
            &ham,
            &sched,
            &DensityMatrix::from_pure(&psi0),
            &noise,
            StepControl::Fixed(800),
            &times,
            &obs,
        )
        .unwrap();
        let traj = evolve_trajectories(
            &ham, &sched, &psi0, &noise, 600, 2024, &times, &obs,
        )
        .unwrap();
        // Band: 3 standard errors plus the jump-time discretization bias,
        // which dominates early in the anneal where trajectories have not
        // yet diverged and the ensemble variance collapses.
        let bias = 2.5e-3;
        for (t_snap, e_snap) in traj.snapshots.iter().zip(&exact.snapshots) {
            let band = 3.0 * t_snap.neel_stderr.unwrap() + bias;
            assert!(
                (t_snap.neel - e_snap.neel).abs() < band,
                "O_N mismatch at t = {}: traj {} vs exact {} (band {band})",
                t_snap.t,
                t_snap.neel,
                e_snap.neel
            );
            for j in 0..4 {
                let band = 3.0 * t_snap.occupation_stderr.as_ref().unwrap()[j] + bias;
                assert!(
                    (t_snap.occupations[j] - e_snap.occupations[j]).abs() < band,
                    "occupation {j} mismatch at t = {}",
                    t_snap.t
                );
            }
        }
    }

    #[test]
    fn trajectory_count_must_be_positive() {
        let consts = PhysicalConstants::default();
        let (_, ham) = star_graph(consts.omega0);
        let sched = Schedule::standard(&consts, consts.omega0);
        let err = evolve_trajectories(
            &ham,
            &sched,
            &StateVector::all_down(4),
            &NoiseModel::default(),
            0,
            1,
            &[sched.t_f],
            &ObservableSet::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn ensemble_is_thread_count_independent() {
        // Same seed, different rayon pool sizes: byte-identical statistics.
        let consts = PhysicalConstants::default();
        let omega0 = consts.omega0;
        let (g, ham) = star_graph(1.82 * omega0);
        let sched = Schedule::standard(&consts, 2.0 * omega0);
        let psi0 = StateVector::all_down(4);
        let obs = ObservableSet::for_graph(&g);
        let noise = NoiseModel::default();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                evolve_trajectories_with_steps(
                    &ham,
                    &sched,
                    &psi0,
                    &noise,
                    130,
                    7,
                    &[sched.t_f],
                    &obs,
                    200,
                )
                .unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        let (FinalState::Mixture(da), FinalState::Mixture(db)) =
            (&a.final_state, &b.final_state)
        else {
            panic!()
        };
        assert_eq!(da, db, "trajectory mixture differs across thread counts");
        assert_eq!(a.final_snapshot().neel.to_bits(), b.final_snapshot().neel.to_bits());
    }

    #[test]
    fn jumps_actually_occur_at_default_rates() {
        // With the default rates over ~3 µs and several excited atoms, the
        // ensemble must not stay pure: the mixture entropy is visible in a
        // spread of outcomes relative to the closed run.
        let consts = PhysicalConstants::default();
        let omega0 = consts.omega0;
        let (g, ham) = star_graph(1.82 * omega0);
        let sched = Schedule::standard(&consts, 2.0 * omega0);
        let psi0 = StateVector::all_down(4);
        let obs = ObservableSet::for_graph(&g);
        let noisy = evolve_trajectories(
            &ham,
            &sched,
            &psi0,
            &NoiseModel::default(),
            400,
            31,
            &[sched.t_f],
            &obs,
        )
        .unwrap();
        let spread = noisy.final_snapshot().neel_stderr.unwrap();
        assert!(spread > 1e-4, "no trajectory-to-trajectory variation: {spread}");
    }
}
