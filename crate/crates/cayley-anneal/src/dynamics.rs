//! Time evolution under the annealing schedule: closed Schrödinger
//! propagation here, the dense Lindblad master equation in [`lindblad`] and
//! the quantum-trajectory unraveling in [`trajectory`].
//!
//! The unitary stepper is a fourth-order commutator-free Magnus scheme: per
//! step two Krylov exponentials of effective Hamiltonians built from the
//! controls at the two Gauss nodes,
//!   ψ ← exp(−i dt [a₂H(t₁) + a₁H(t₂)]) · exp(−i dt [a₁H(t₁) + a₂H(t₂)]) ψ,
//! with a₁ = 1/4 + √3/6, a₂ = 1/4 − √3/6. Each effective operator is the
//! drive at blended controls plus half the interaction, so the matrix-free
//! kernel serves both factors. Steps are aligned to stage breakpoints and
//! sample times, and accuracy is enforced by a step-doubling contract.

pub mod lindblad;
pub mod trajectory;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::RydbergHamiltonian;
use crate::krylov::{self, ExpvOptions};
use crate::lattice::TreeGraph;
use crate::measurement::ShotRecord;
use crate::schedule::Schedule;
use crate::state::{atom_bit_position, permute_label, DensityMatrix, StateVector};
use crate::util;

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6
const CFM_A1: f64 = 0.25 + GAUSS_OFFSET;
const CFM_A2: f64 = 0.25 - GAUSS_OFFSET;

/// Laser dephasing rates in rad/µs; both zero reproduces closed dynamics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// Per-atom dephasing rate (jump operator √γ·n̂_j).
    pub gamma_individual: f64,
    /// Collective dephasing rate (jump operator √γ·Σ_j n̂_j).
    pub gamma_collective: f64,
}

/// The default rates read the quoted dephasing figures (36 kHz individual,
/// 3 kHz collective) as plain rates in µs⁻¹. Under that convention the
/// open-system ten-atom anneal with nearest-neighbour couplings lands at
/// 62% ground-state probability and pre-measurement O_N = 0.82; the
/// 2π-implied alternative over-damps both.
/// `NoiseConfig::angular_rates` selects the 2π reading instead.
impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { gamma_individual: 0.036, gamma_collective: 0.003 }
    }
}

impl NoiseModel {
    pub fn closed() -> Self {
        NoiseModel { gamma_individual: 0.0, gamma_collective: 0.0 }
    }

    pub fn is_closed(&self) -> bool {
        self.gamma_individual == 0.0 && self.gamma_collective == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_individual < 0.0 || self.gamma_collective < 0.0 {
            return Err(Error::InvalidParameter("negative dephasing rate".into()));
        }
        Ok(())
    }

    /// Decay exponent Γ(b) = γ_ind·N_up + γ_col·N_up² of a basis state.
    #[inline]
    pub fn decay_rate(&self, n_up: u32) -> f64 {
        let nu = n_up as f64;
        self.gamma_individual * nu + self.gamma_collective * nu * nu
    }
}

/// Propagation accuracy control.
#[derive(Clone, Copy, Debug)]
pub enum StepControl {
    /// Fixed number of integrator steps over [0, t_f].
    Fixed(usize),
    /// Double the step count until the final-state fidelity moves by less
    /// than `fidelity_tol`, starting from `start_steps`.
    Adaptive { fidelity_tol: f64, start_steps: usize, max_rounds: usize },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Adaptive { fidelity_tol: 1e-8, start_steps: 64, max_rounds: 8 }
    }
}

/// Which derived quantities to record at sample times.
#[derive(Clone, Debug, Default)]
pub struct ObservableSet {
    /// Graph edges for the Néel order parameter.
    pub edges: Vec<(usize, usize)>,
    /// Basis labels whose total population is reported as `ground_overlap`.
    pub ground_configs: Option<Vec<u64>>,
    /// Vertex permutation whose antisymmetric-subspace weight is recorded.
    pub antisym_perm: Option<Vec<usize>>,
}

impl ObservableSet {
    pub fn for_graph(g: &TreeGraph) -> Self {
        ObservableSet { edges: g.edges().to_vec(), ..Default::default() }
    }

    pub fn with_ground_configs(mut self, configs: Vec<u64>) -> Self {
        self.ground_configs = Some(configs);
        self
    }

    pub fn with_half_swap(mut self, g: &TreeGraph) -> Self {
        self.antisym_perm = g.half_swap_permutation();
        self
    }
}

/// Observables at one sample time. Standard errors are present only for
/// trajectory-ensemble results.
#[derive(Clone, Debug, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub norm: f64,
    #[serde(rename = "O_N")]
    pub neel: f64,
    pub occupations: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antisym_overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neel_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_overlap_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occupation_stderr: Option<Vec<f64>>,
}

/// Terminal state of an evolution, in whichever representation the
/// propagator produces.
#[derive(Clone, Debug)]
pub enum FinalState {
    Pure(StateVector),
    Density(DensityMatrix),
    /// Trajectory-averaged basis populations.
    Mixture(Vec<f64>),
}

impl FinalState {
    /// Basis-state probability distribution of the final state.
    pub fn distribution(&self) -> Vec<f64> {
        match self {
            FinalState::Pure(psi) => psi.amplitudes().iter().map(|a| a.norm_sqr()).collect(),
            FinalState::Density(rho) => rho.populations(),
            FinalState::Mixture(p) => p.clone(),
        }
    }

    /// Label with the largest final population (smallest label on ties).
    pub fn argmax(&self) -> u64 {
        let dist = self.distribution();
        let mut best = 0usize;
        let mut best_p = dist[0];
        for (b, &p) in dist.iter().enumerate().skip(1) {
            if p > best_p {
                best_p = p;
                best = b;
            }
        }
        best as u64
    }
}

/// Time-resolved observables plus the final state.
#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub n_atoms: usize,
    pub snapshots: Vec<Snapshot>,
    pub final_state: FinalState,
}

impl EvolutionResult {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("at least one snapshot")
    }

    /// One JSON record per sample time.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.snapshots {
            out.push_str(&serde_json::to_string(s).expect("snapshot serializes"));
            out.push('\n');
        }
        out
    }
}

/// Antisymmetric-subspace weight time series (t, overlap) recorded during
/// evolution; requires `ObservableSet::with_half_swap`.
pub fn symmetry_overlap(result: &EvolutionResult) -> Vec<(f64, f64)> {
    result
        .snapshots
        .iter()
        .filter_map(|s| s.antisym_overlap.map(|o| (s.t, o)))
        .collect()
}

/// Spin-configuration source for the Néel order parameter.
pub enum SpinSource<'a> {
    State(&'a StateVector),
    Density(&'a DensityMatrix),
    Shots(&'a ShotRecord),
}

/// O_N = −(1/|E|)·Σ_edges ⟨σ_z σ_z⟩: +1 for perfect edge anti-alignment,
/// −1 for a fully aligned configuration.
pub fn neel_order(source: SpinSource<'_>, g: &TreeGraph) -> f64 {
    let n = g.n_vertices();
    let masks = edge_masks(n, g.edges());
    match source {
        SpinSource::State(psi) => {
            let amps = psi.amplitudes();
            let w = util::par_sum_f64(amps.len(), |b| {
                amps[b].norm_sqr() * neel_of_label(b as u64, &masks)
            });
            w / psi.norm_sqr()
        }
        SpinSource::Density(rho) => {
            let pops = rho.populations();
            let w: f64 =
                pops.iter().enumerate().map(|(b, &p)| p * neel_of_label(b as u64, &masks)).sum();
            w / rho.trace()
        }
        SpinSource::Shots(record) => {
            let mut acc = 0.0;
            let mut total = 0u64;
            for (&label, &count) in record.counts() {
                acc += count as f64 * neel_of_label(label, &masks);
                total += count;
            }
            acc / total as f64
        }
    }
}

fn edge_masks(n: usize, edges: &[(usize, usize)]) -> Vec<u64> {
    edges
        .iter()
        .map(|&(i, j)| (1u64 << atom_bit_position(n, i)) | (1u64 << atom_bit_position(n, j)))
        .collect()
}

/// Per-configuration Néel value: (2·#anti-aligned-edges − |E|)/|E|.
#[inline]
fn neel_of_label(b: u64, masks: &[u64]) -> f64 {
    let mut anti = 0usize;
    for &m in masks {
        if (b & m).count_ones() == 1 {
            anti += 1;
        }
    }
    (2.0 * anti as f64 - masks.len() as f64) / masks.len() as f64
}

/// Shared snapshot computation over raw amplitudes.
pub(crate) struct ObservableEngine {
    n: usize,
    edge_masks: Vec<u64>,
    ground_configs: Option<Vec<u64>>,
    antisym_perm: Option<Vec<usize>>,
}

impl ObservableEngine {
    pub(crate) fn new(n: usize, obs: &ObservableSet) -> ObservableEngine {
        ObservableEngine {
            n,
            edge_masks: edge_masks(n, &obs.edges),
            ground_configs: obs.ground_configs.clone(),
            antisym_perm: obs.antisym_perm.clone(),
        }
    }

    /// One pass over the amplitudes; observables are normalized by the
    /// state's norm², which is reported separately.
    pub(crate) fn snapshot(&self, t: f64, amps: &[C64]) -> Snapshot {
        let dim = amps.len();
        let n = self.n;
        let chunk = util::REDUCE_CHUNK;
        let n_chunks = dim.div_ceil(chunk);
        struct Partial {
            norm2: f64,
            neel: f64,
            occ: Vec<f64>,
            antisym: f64,
        }
        let reduce_chunk = |c: usize| -> Partial {
            let lo = c * chunk;
            let hi = (lo + chunk).min(dim);
            let mut p = Partial { norm2: 0.0, neel: 0.0, occ: vec![0.0; n], antisym: 0.0 };
            for b in lo..hi {
                let w = amps[b].norm_sqr();
                if w != 0.0 {
                    p.norm2 += w;
                    if !self.edge_masks.is_empty() {
                        p.neel += w * neel_of_label(b as u64, &self.edge_masks);
                    }
                    let mut bits = b as u64;
                    while bits != 0 {
                        let pos = bits.trailing_zeros();
                        p.occ[n - 1 - pos as usize] += w;
                        bits &= bits - 1;
                    }
                }
                if let Some(perm) = &self.antisym_perm {
                    let pb = permute_label(b as u64, n, perm) as usize;
                    p.antisym += 0.25 * (amps[b] - amps[pb]).norm_sqr();
                }
            }
            p
        };
        let partials: Vec<Partial> = if dim >= util::PAR_THRESHOLD {
            use rayon::prelude::*;
            (0..n_chunks).into_par_iter().map(reduce_chunk).collect()
        } else {
            (0..n_chunks).map(reduce_chunk).collect()
        };
        let mut norm2 = 0.0;
        let mut neel = 0.0;
        let mut occ = vec![0.0; n];
        let mut antisym = 0.0;
        for p in partials {
            norm2 += p.norm2;
            neel += p.neel;
            antisym += p.antisym;
            for (o, v) in occ.iter_mut().zip(&p.occ) {
                *o += v;
            }
        }
        let inv = 1.0 / norm2;
        let ground_overlap = self.ground_configs.as_ref().map(|configs| {
            configs.iter().map(|&c| amps[c as usize].norm_sqr()).sum::<f64>() * inv
        });
        Snapshot {
            t,
            norm: norm2.sqrt(),
            neel: if self.edge_masks.is_empty() { 0.0 } else { neel * inv },
            occupations: occ.into_iter().map(|o| o * inv).collect(),
            ground_overlap,
            antisym_overlap: self.antisym_perm.as_ref().map(|_| antisym * inv),
            neel_stderr: None,
            ground_overlap_stderr: None,
            occupation_stderr: None,
        }
    }
}

/// The time grid a propagation walks: stage breakpoints and sample times
/// fall exactly on step boundaries.
pub(crate) struct TimeGrid {
    /// (segment end time, emit snapshot at end).
    pub(crate) nodes: Vec<(f64, bool)>,
    pub(crate) sample_zero: bool,
}

pub(crate) fn build_time_grid(sched: &Schedule, sample_times: &[f64]) -> Result<TimeGrid> {
    let t_f = sched.t_f;
    let eps = 1e-12 * t_f;
    for &t in sample_times {
        if !(-eps..=t_f + eps).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "sample time {t} outside [0, {t_f}]"
            )));
        }
    }
    let (t1, t2) = sched.stage_times();
    let mut marks: Vec<(f64, bool)> = vec![(t1, false), (t2, false), (t_f, false)];
    for &t in sample_times {
        if t > eps {
            marks.push((t.min(t_f), true));
        }
    }
    marks.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
    let mut nodes: Vec<(f64, bool)> = Vec::new();
    for (t, sample) in marks {
        match nodes.last_mut() {
            Some((prev, prev_sample)) if (t - *prev).abs() <= eps => {
                *prev_sample |= sample;
            }
            _ => nodes.push((t, sample)),
        }
    }
    let sample_zero = sample_times.iter().any(|&t| t.abs() <= eps);
    Ok(TimeGrid { nodes, sample_zero })
}

/// One CFM4 step of `dt` from time `t` on raw amplitudes.
pub(crate) fn cfm4_step(
    ham: &RydbergHamiltonian,
    sched: &Schedule,
    t: f64,
    dt: f64,
    amps: &mut [C64],
    expv_opts: &ExpvOptions,
) -> Result<()> {
    let tg1 = t + (0.5 - GAUSS_OFFSET) * dt;
    let tg2 = t + (0.5 + GAUSS_OFFSET) * dt;
    let (o1, d1) = (sched.omega(tg1), sched.delta(tg1));
    let (o2, d2) = (sched.omega(tg2), sched.delta(tg2));
    for (w1, w2) in [(CFM_A1, CFM_A2), (CFM_A2, CFM_A1)] {
        let omega_eff = w1 * o1 + w2 * o2;
        let delta_eff = w1 * d1 + w2 * d2;
        let apply =
            |x: &[C64], y: &mut [C64]| ham.apply_scaled(omega_eff, delta_eff, 0.5, x, y);
        let bound = ham.norm_bound(omega_eff, delta_eff, 0.5);
        krylov::expv(&apply, dt, amps, bound, expv_opts)?;
    }
    Ok(())
}

fn propagate_fixed(
    ham: &RydbergHamiltonian,
    sched: &Schedule,
    psi0: &StateVector,
    n_steps: usize,
    grid: &TimeGrid,
    engine: &ObservableEngine,
) -> Result<(Vec<Snapshot>, StateVector)> {
    let mut psi = psi0.clone();
    let mut snapshots = Vec::new();
    if grid.sample_zero {
        snapshots.push(engine.snapshot(0.0, psi.amplitudes()));
    }
    let expv_opts = ExpvOptions { krylov_dim: 20, tol: 1e-11, max_attempts: 100_000 };
    let dt_target = sched.t_f / n_steps.max(1) as f64;
    let mut t = 0.0;
    for &(t_end, sample) in &grid.nodes {
        let span = t_end - t;
        if span > 1e-15 * sched.t_f {
            let k = (span / dt_target).ceil().max(1.0) as usize;
            let dt = span / k as f64;
            for i in 0..k {
                cfm4_step(ham, sched, t + i as f64 * dt, dt, psi.amplitudes_mut(), &expv_opts)?;
            }
        }
        t = t_end;
        if sample {
            snapshots.push(engine.snapshot(t, psi.amplitudes()));
        }
    }
    Ok((snapshots, psi))
}

/// Closed-system propagation of the annealing schedule.
///
/// Accuracy contract: under `StepControl::Adaptive`, the step count is
/// doubled until the final-state fidelity between consecutive refinements
/// changes by less than the tolerance.
pub fn evolve_schrodinger(
    ham: &RydbergHamiltonian,
    sched: &Schedule,
    psi0: &StateVector,
    control: StepControl,
    sample_times: &[f64],
    observables: &ObservableSet,
) -> Result<EvolutionResult> {
    sched.validate()?;
    if psi0.dim() != ham.dim() {
        return Err(Error::DimensionMismatch { expected: ham.dim(), got: psi0.dim() });
    }
    let grid = build_time_grid(sched, sample_times)?;
    let engine = ObservableEngine::new(ham.n_atoms(), observables);
    let (snapshots, psi) = match control {
        StepControl::Fixed(n) => propagate_fixed(ham, sched, psi0, n, &grid, &engine)?,
        StepControl::Adaptive { fidelity_tol, start_steps, max_rounds } => {
            let mut n = start_steps.max(4);
            let (mut snaps, mut psi) = propagate_fixed(ham, sched, psi0, n, &grid, &engine)?;
            let mut converged = false;
            let mut change = f64::INFINITY;
            for _ in 0..max_rounds {
                n *= 2;
                let (snaps2, psi2) = propagate_fixed(ham, sched, psi0, n, &grid, &engine)?;
                let fid = psi.fidelity(&psi2) / (psi.norm_sqr() * psi2.norm_sqr());
                change = (1.0 - fid).abs();
                snaps = snaps2;
                psi = psi2;
                if change < fidelity_tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::StepControlFailure {
                    rounds: max_rounds,
                    achieved: change,
                    tolerance: fidelity_tol,
                });
            }
            (snaps, psi)
        }
    };
    Ok(EvolutionResult {
        n_atoms: ham.n_atoms(),
        snapshots,
        final_state: FinalState::Pure(psi),
    })
}
