//! Classical ground states of the final Hamiltonian, phase-diagram
//! classification, and exact quantum ground states for small systems.
//!
//! The classical energy of a bitstring b is
//! E(b) = Σ_{j<k} U_jk·[both up] − (Δ_f/2)·Σ_j σ_z^{(j)}(b),
//! minimized by exhaustive enumeration with all ties reported.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{CouplingMap, IsingParameters, RydbergHamiltonian};
use crate::krylov::{self, GroundOptions};
use crate::lattice::{TreeGraph, TreeKind};
use crate::state::{atom_bit_position, StateVector};
use crate::util;

/// All bitstrings attaining the minimal classical energy.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundSet {
    /// Minimal energy in rad/µs.
    pub energy: f64,
    /// Sorted list of minimizing configurations.
    pub configs: Vec<u64>,
}

impl GroundSet {
    pub fn degeneracy(&self) -> usize {
        self.configs.len()
    }
}

/// Phase of the final classical Hamiltonian: I/II paramagnetic down/up,
/// III shell-alternating antiferromagnet, IV/V the dual-center variants,
/// `Other` on boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseLabel {
    AllDown,
    AllUp,
    ShellAlternating,
    CentersUpUp,
    CentersDegenerate,
    Other,
}

impl PhaseLabel {
    /// Roman-numeral label used in phase-diagram CSV output.
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseLabel::AllDown => "I",
            PhaseLabel::AllUp => "II",
            PhaseLabel::ShellAlternating => "III",
            PhaseLabel::CentersUpUp => "IV",
            PhaseLabel::CentersDegenerate => "V",
            PhaseLabel::Other => "Other",
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[inline]
fn pair_masks(couplings: &CouplingMap) -> Vec<(u64, f64)> {
    let n = couplings.n_atoms();
    couplings
        .pairs()
        .iter()
        .map(|&(j, k, u)| {
            ((1u64 << atom_bit_position(n, j)) | (1u64 << atom_bit_position(n, k)), u)
        })
        .collect()
}

#[inline]
fn energy_with_masks(b: u64, n: usize, masks: &[(u64, f64)], delta_f: f64) -> f64 {
    let mut e = 0.0;
    for &(m, u) in masks {
        if b & m == m {
            e += u;
        }
    }
    let sz_sum = 2 * b.count_ones() as i64 - n as i64;
    e - 0.5 * delta_f * sz_sum as f64
}

/// Classical energy of one spin configuration under the given couplings and
/// final detuning.
pub fn classical_energy(config: u64, couplings: &CouplingMap, delta_f: f64) -> f64 {
    let masks = pair_masks(couplings);
    energy_with_masks(config, couplings.n_atoms(), &masks, delta_f)
}

/// Ising-form energy J Σ σσ + Σ_j h_j σ_j of a configuration; the offset
/// `params.offset_per_edge·|E|` relates it to [`classical_energy`] in the
/// graph-ideal case.
pub fn ising_energy(config: u64, g: &TreeGraph, params: &IsingParameters) -> f64 {
    let n = g.n_vertices();
    let outer = g.outer_shell();
    let mut e = 0.0;
    for &(j, k) in g.edges() {
        e += params.j
            * crate::state::atom_sigma_z(config, n, j)
            * crate::state::atom_sigma_z(config, n, k);
    }
    for v in 0..n {
        let h = if g.shell_of(v) == outer { params.h_z_valence } else { params.h_z_core };
        e += h * crate::state::atom_sigma_z(config, n, v);
    }
    e
}

/// Exhaustive minimum of [`classical_energy`] over all 2^N bitstrings.
///
/// `tie_tol` is the absolute energy window treated as degenerate
/// (1e-12·Ω0 is the conventional choice). Enumeration budget: N ≤ 26.
pub fn brute_force_ground(
    couplings: &CouplingMap,
    delta_f: f64,
    tie_tol: f64,
) -> Result<GroundSet> {
    let n = couplings.n_atoms();
    if n > 26 {
        return Err(Error::TooLarge(format!("{n} atoms; enumeration capped at 26")));
    }
    let dim: u64 = 1 << n;
    let masks = pair_masks(couplings);
    let chunk = 1u64 << 12;
    let n_chunks = dim.div_ceil(chunk);

    let chunk_mins: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(dim);
            let mut best = f64::INFINITY;
            for b in lo..hi {
                best = best.min(energy_with_masks(b, n, &masks, delta_f));
            }
            best
        })
        .collect();
    let energy = chunk_mins.iter().fold(f64::INFINITY, |m, &v| m.min(v));

    let configs: Vec<u64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(dim);
            let mut hits = Vec::new();
            for b in lo..hi {
                if energy_with_masks(b, n, &masks, delta_f) <= energy + tie_tol {
                    hits.push(b);
                }
            }
            hits
        })
        .reduce(Vec::new, |mut a, mut b| {
            a.append(&mut b);
            a
        });
    let mut configs = configs;
    configs.sort_unstable();
    Ok(GroundSet { energy, configs })
}

/// The shell-alternating configuration: a vertex is ↑ when its graph
/// distance from the valence shell is even.
pub fn shell_alternating_config(g: &TreeGraph) -> u64 {
    let n = g.n_vertices();
    let outer = g.outer_shell();
    let mut b = 0u64;
    for v in 0..n {
        if (outer - g.shell_of(v)) % 2 == 0 {
            b |= 1 << atom_bit_position(n, v);
        }
    }
    b
}

/// Classifies a ground set into the phase taxonomy above.
pub fn classify(g: &TreeGraph, ground: &GroundSet) -> PhaseLabel {
    let n = g.n_vertices();
    let all_up = (1u64 << n) - 1;
    if ground.configs == [0] {
        return PhaseLabel::AllDown;
    }
    if ground.configs == [all_up] {
        return PhaseLabel::AllUp;
    }
    if ground.configs == [shell_alternating_config(g)] {
        return match g.kind() {
            TreeKind::Regular { .. } => PhaseLabel::ShellAlternating,
            TreeKind::DualCenter { .. } => PhaseLabel::CentersUpUp,
        };
    }
    if let Some(perm) = g.half_swap_permutation() {
        if ground.configs.len() == 2 {
            let (a, b) = (ground.configs[0], ground.configs[1]);
            if a != b && crate::state::permute_label(a, n, &perm) == b {
                return PhaseLabel::CentersDegenerate;
            }
        }
    }
    PhaseLabel::Other
}

/// One classified point of a phase diagram.
#[derive(Clone, Debug)]
pub struct PhasePoint {
    pub u_over_omega0: f64,
    pub delta_over_omega0: f64,
    pub label: PhaseLabel,
    pub degeneracy: usize,
    /// Ground energy in units of Ω0.
    pub energy_over_omega0: f64,
}

/// Classifies every (U, Δ_f) grid point (units of Ω0) for the graph-ideal
/// Hamiltonian on `g`.
pub fn phase_diagram(
    g: &TreeGraph,
    grid: &[(f64, f64)],
    omega0: f64,
) -> Result<Vec<PhasePoint>> {
    let mut out = Vec::with_capacity(grid.len());
    for &(u, df) in grid {
        let pairs = g.edges().iter().map(|&(j, k)| (j, k, u * omega0)).collect();
        let couplings = CouplingMap::new(g.n_vertices(), pairs)?;
        let ground = brute_force_ground(&couplings, df * omega0, 1e-12 * omega0)?;
        out.push(PhasePoint {
            u_over_omega0: u,
            delta_over_omega0: df,
            label: classify(g, &ground),
            degeneracy: ground.degeneracy(),
            energy_over_omega0: ground.energy / omega0,
        });
    }
    Ok(out)
}

/// Renders phase points as the CSV consumed by plotting scripts.
pub fn phase_diagram_csv(points: &[PhasePoint]) -> String {
    let mut out = String::from("U_over_Omega0,Delta_over_Omega0,label,degeneracy,energy\n");
    for p in points {
        out.push_str(&format!(
            "{:.6},{:.6},{},{},{:.9e}\n",
            p.u_over_omega0, p.delta_over_omega0, p.label, p.degeneracy, p.energy_over_omega0
        ));
    }
    out
}

/// Lowest eigenpair of the quantum Hamiltonian at frozen controls.
///
/// Budget: N ≤ 14 (iterative solver on the matrix-free operator).
pub fn exact_ground_state(
    ham: &RydbergHamiltonian,
    omega: f64,
    delta: f64,
) -> Result<(f64, StateVector)> {
    if ham.n_atoms() > 14 {
        return Err(Error::TooLarge(format!(
            "{} atoms; exact_ground_state capped at 14",
            ham.n_atoms()
        )));
    }
    let apply = |x: &[num_complex::Complex64], y: &mut [num_complex::Complex64]| {
        ham.apply(omega, delta, x, y)
    };
    let bound = ham.norm_bound(omega, delta, 1.0);
    let (theta, v, _report) =
        krylov::lowest_eigenpair(ham.dim(), &apply, bound, &GroundOptions::default())?;
    Ok((theta, StateVector::from_amplitudes(ham.n_atoms(), v)?))
}

/// Greedy single-flip descent from a random start; an independent
/// cross-check of [`brute_force_ground`] on small systems.
pub fn local_search_energy(couplings: &CouplingMap, delta_f: f64, restarts: usize, seed: u64) -> f64 {
    use rand::Rng;
    let n = couplings.n_atoms();
    let masks = pair_masks(couplings);
    let mut best = f64::INFINITY;
    for r in 0..restarts {
        let mut rng = util::derived_rng(seed, r as u64);
        let mut b: u64 = rng.gen_range(0..(1u64 << n));
        let mut e = energy_with_masks(b, n, &masks, delta_f);
        loop {
            let mut improved = false;
            for bit in 0..n {
                let cand = b ^ (1u64 << bit);
                let ec = energy_with_masks(cand, n, &masks, delta_f);
                if ec < e {
                    b = cand;
                    e = ec;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        best = best.min(e);
    }
    best
}
