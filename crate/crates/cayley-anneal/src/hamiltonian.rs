//! The Rydberg Hamiltonian, its graph-ideal form and Ising parameters.
//!
//! H(t) = ½ Σ_j (Ω σ_x^{(j)} − Δ σ_z^{(j)}) + Σ_{j<k} U_jk n̂_j n̂_k, with
//! U_jk = C6/r_jk^6 (full van der Waals) or U on edges only (graph-ideal).
//! The operator is matrix-free: a precomputed interaction diagonal plus the
//! single-bit-flip drive rule; dense matrices exist only as small-system
//! test oracles.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{Geometry, TreeGraph};
use crate::state::{atom_bit_position, StateVector};
use crate::units::PhysicalConstants;
use crate::util;

/// Largest atom count for which a state vector is allocated (2^24 ≈ 17M).
pub const MAX_ATOMS: usize = 24;

/// Pairwise-coupling source.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InteractionMode {
    /// U_jk = C6/r_jk^6 for every atom pair.
    FullVdW,
    /// U = C6/d^6 on graph edges, zero elsewhere.
    GraphIdeal,
}

/// Symmetric pair couplings U_jk ≥ 0 in rad/µs.
#[derive(Clone, Debug)]
pub struct CouplingMap {
    n_atoms: usize,
    pairs: Vec<(usize, usize, f64)>,
}

impl CouplingMap {
    pub fn new(n_atoms: usize, mut pairs: Vec<(usize, usize, f64)>) -> Result<Self> {
        for p in pairs.iter_mut() {
            if p.0 > p.1 {
                *p = (p.1, p.0, p.2);
            }
            if p.0 == p.1 || p.1 >= n_atoms {
                return Err(Error::InvalidParameter(format!("bad coupling pair ({}, {})", p.0, p.1)));
            }
            if p.2 < 0.0 {
                return Err(Error::InvalidParameter(format!("negative coupling U = {}", p.2)));
            }
        }
        pairs.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(CouplingMap { n_atoms, pairs })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// (j, k, U_jk) triples with j < k.
    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        self.pairs
            .binary_search_by(|p| (p.0, p.1).cmp(&key))
            .map(|i| self.pairs[i].2)
            .unwrap_or(0.0)
    }
}

/// Builds the coupling map for a geometry.
pub fn interaction_matrix(
    g: &TreeGraph,
    geo: &Geometry,
    consts: &PhysicalConstants,
    mode: InteractionMode,
) -> Result<CouplingMap> {
    let n = g.n_vertices();
    if geo.n_atoms() != n {
        return Err(Error::DimensionMismatch { expected: n, got: geo.n_atoms() });
    }
    let mut pairs = Vec::new();
    match mode {
        InteractionMode::FullVdW => {
            for j in 0..n {
                for k in (j + 1)..n {
                    let r = geo.distance(j, k);
                    if r == 0.0 {
                        return Err(Error::CoincidentAtoms(j, k));
                    }
                    pairs.push((j, k, consts.c6 / r.powi(6)));
                }
            }
        }
        InteractionMode::GraphIdeal => {
            let u = consts.c6 / geo.d().powi(6);
            for &(j, k) in g.edges() {
                pairs.push((j, k, u));
            }
        }
    }
    CouplingMap::new(n, pairs)
}

/// Matrix-free Rydberg Hamiltonian with a precomputed interaction diagonal.
#[derive(Clone, Debug)]
pub struct RydbergHamiltonian {
    couplings: CouplingMap,
    int_diag: Vec<f64>,
}

impl RydbergHamiltonian {
    pub fn new(couplings: CouplingMap) -> Result<Self> {
        let n = couplings.n_atoms();
        if n == 0 || n > MAX_ATOMS {
            return Err(Error::TooLarge(format!("{n} atoms; state vectors support 1..={MAX_ATOMS}")));
        }
        let dim = 1usize << n;
        let masks: Vec<(u64, f64)> = couplings
            .pairs()
            .iter()
            .map(|&(j, k, u)| {
                ((1u64 << atom_bit_position(n, j)) | (1u64 << atom_bit_position(n, k)), u)
            })
            .collect();
        let mut int_diag = vec![0.0f64; dim];
        util::par_fill(&mut int_diag, |b| {
            let b = b as u64;
            masks.iter().map(|&(m, u)| if b & m == m { u } else { 0.0 }).sum()
        });
        Ok(RydbergHamiltonian { couplings, int_diag })
    }

    pub fn n_atoms(&self) -> usize {
        self.couplings.n_atoms()
    }

    pub fn dim(&self) -> usize {
        self.int_diag.len()
    }

    pub fn couplings(&self) -> &CouplingMap {
        &self.couplings
    }

    /// Σ_{j<k} U_jk n_j n_k evaluated on every basis state.
    pub fn interaction_diagonal(&self) -> &[f64] {
        &self.int_diag
    }

    /// Full diagonal entry ⟨b|H|b⟩ at detuning δ and interaction scale s.
    #[inline]
    pub fn diagonal_at(&self, delta: f64, u_scale: f64, b: usize) -> f64 {
        let n = self.n_atoms() as i64;
        let sz_sum = 2 * (b as u64).count_ones() as i64 - n;
        u_scale * self.int_diag[b] - 0.5 * delta * sz_sum as f64
    }

    /// out = H(Ω, Δ)·input with the interaction scaled by `u_scale`.
    ///
    /// The scale lets commutator-free integrators reuse this kernel for
    /// effective operators of the form aH(t1) + bH(t2), whose interaction
    /// weight a + b differs from 1.
    pub fn apply_scaled(&self, omega: f64, delta: f64, u_scale: f64, input: &[C64], out: &mut [C64]) {
        assert_eq!(input.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let n = self.n_atoms();
        let half_omega = 0.5 * omega;
        util::par_fill(out, |b| {
            let mut acc = input[b] * self.diagonal_at(delta, u_scale, b);
            if half_omega != 0.0 {
                let mut flip_sum = C64::new(0.0, 0.0);
                for bit in 0..n {
                    flip_sum += input[b ^ (1usize << bit)];
                }
                acc += flip_sum * half_omega;
            }
            acc
        });
    }

    /// out = H(Ω, Δ)·input.
    pub fn apply(&self, omega: f64, delta: f64, input: &[C64], out: &mut [C64]) {
        self.apply_scaled(omega, delta, 1.0, input, out);
    }

    /// Hψ as a new state vector.
    pub fn apply_state(&self, omega: f64, delta: f64, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: psi.dim() });
        }
        let mut out = StateVector::zero(self.n_atoms());
        self.apply(omega, delta, psi.amplitudes(), out.amplitudes_mut());
        Ok(out)
    }

    /// Upper bound on the spectral radius at the given controls, used to
    /// size Krylov substeps.
    pub fn norm_bound(&self, omega: f64, delta: f64, u_scale: f64) -> f64 {
        let n = self.n_atoms() as f64;
        let max_int = self.int_diag.iter().fold(0.0f64, |m, &v| m.max(v));
        u_scale.abs() * max_int + 0.5 * delta.abs() * n + 0.5 * omega.abs() * n
    }

    /// Dense matrix oracle for small systems.
    pub fn dense(&self, omega: f64, delta: f64) -> Result<DMatrix<C64>> {
        let n = self.n_atoms();
        if n > 12 {
            return Err(Error::TooLarge(format!("dense oracle capped at 12 atoms, got {n}")));
        }
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let mut basis = vec![C64::new(0.0, 0.0); dim];
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for b in 0..dim {
            basis[b] = C64::new(1.0, 0.0);
            self.apply(omega, delta, &basis, &mut col);
            for (a, &v) in col.iter().enumerate() {
                m[(a, b)] = v;
            }
            basis[b] = C64::new(0.0, 0.0);
        }
        Ok(m)
    }
}

/// Ising-form parameters of the graph-ideal final Hamiltonian.
///
/// H_G = J Σ_edges σ_z σ_z + h_z^C Σ_core σ_z + h_z^V Σ_valence σ_z
///       + offset_per_edge · |E|,
/// valid for coordination-3 trees (core degree 3, valence degree 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsingParameters {
    pub j: f64,
    pub h_z_core: f64,
    pub h_z_valence: f64,
    /// Constant offset per edge relating the n̂n̂ and σσ forms.
    pub offset_per_edge: f64,
}

/// Maps (U, Δ_f) to the Ising coupling, local fields and energy offset.
pub fn ising_parameters(u: f64, delta_f: f64) -> IsingParameters {
    IsingParameters {
        j: u / 4.0,
        h_z_core: 0.75 * u - 0.5 * delta_f,
        h_z_valence: 0.25 * u - 0.5 * delta_f,
        offset_per_edge: u / 4.0,
    }
}
