//! State vectors and density matrices over the spin-1/2 product basis.
//!
//! Basis labels are integers with atom 0 as the most significant bit and
//! ↓ = 0, ↑ = 1, so the 10-atom label 575 reads |↑;↓↓↓;↑↑↑↑↑↑⟩ from the
//! center outward. σ_z|↑⟩ = +|↑⟩ and n̂ = (1 + σ_z)/2.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::util;

/// Bit position of `atom` within an `n`-atom label (atom 0 = MSB).
#[inline]
pub fn atom_bit_position(n: usize, atom: usize) -> u32 {
    debug_assert!(atom < n);
    (n - 1 - atom) as u32
}

/// Spin of `atom` in basis label `b`: true = ↑.
#[inline]
pub fn atom_is_up(b: u64, n: usize, atom: usize) -> bool {
    (b >> atom_bit_position(n, atom)) & 1 == 1
}

/// σ_z eigenvalue (±1) of `atom` in basis label `b`.
#[inline]
pub fn atom_sigma_z(b: u64, n: usize, atom: usize) -> f64 {
    if atom_is_up(b, n, atom) {
        1.0
    } else {
        -1.0
    }
}

/// Relabels a basis state under a vertex permutation: the spin of atom `j`
/// moves to atom `perm[j]`.
pub fn permute_label(b: u64, n: usize, perm: &[usize]) -> u64 {
    let mut out = 0u64;
    for (j, &pj) in perm.iter().enumerate() {
        if atom_is_up(b, n, j) {
            out |= 1 << atom_bit_position(n, pj);
        }
    }
    out
}

/// A pure state over `2^n_atoms` amplitudes.
#[derive(Clone, Debug)]
pub struct StateVector {
    n_atoms: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// The zero vector (not a physical state until filled).
    pub fn zero(n_atoms: usize) -> Self {
        StateVector { n_atoms, amps: vec![C64::new(0.0, 0.0); 1 << n_atoms] }
    }

    /// Computational basis state |label⟩.
    pub fn basis(n_atoms: usize, label: u64) -> Self {
        let mut s = Self::zero(n_atoms);
        s.amps[label as usize] = C64::new(1.0, 0.0);
        s
    }

    /// The all-down product state |↓…↓⟩.
    pub fn all_down(n_atoms: usize) -> Self {
        Self::basis(n_atoms, 0)
    }

    pub fn from_amplitudes(n_atoms: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n_atoms {
            return Err(Error::DimensionMismatch { expected: 1 << n_atoms, got: amps.len() });
        }
        Ok(StateVector { n_atoms, amps })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        util::par_sum_f64(self.amps.len(), |i| self.amps[i].norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for a in &mut self.amps {
                *a *= inv;
            }
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        util::par_sum_c64(self.amps.len(), |i| self.amps[i].conj() * other.amps[i])
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn probability(&self, label: u64) -> f64 {
        self.amps[label as usize].norm_sqr()
    }

    /// Basis label with the largest population (smallest label on ties).
    pub fn argmax_probability(&self) -> u64 {
        let mut best = 0usize;
        let mut best_p = self.amps[0].norm_sqr();
        for (b, a) in self.amps.iter().enumerate().skip(1) {
            let p = a.norm_sqr();
            if p > best_p {
                best_p = p;
                best = b;
            }
        }
        best as u64
    }

    /// Rydberg populations ⟨n̂_j⟩ for every atom.
    pub fn occupations(&self) -> Vec<f64> {
        let n = self.n_atoms;
        (0..n)
            .map(|j| {
                let mask = 1u64 << atom_bit_position(n, j);
                util::par_sum_f64(self.amps.len(), |b| {
                    if b as u64 & mask != 0 {
                        self.amps[b].norm_sqr()
                    } else {
                        0.0
                    }
                })
            })
            .collect()
    }

    /// ⟨σ_z⟩ per atom.
    pub fn sigma_z_expectations(&self) -> Vec<f64> {
        self.occupations().into_iter().map(|p| 2.0 * p - 1.0).collect()
    }

    /// Applies a vertex permutation: spin of atom j moves to atom perm[j].
    pub fn permute_atoms(&self, perm: &[usize]) -> StateVector {
        debug_assert_eq!(perm.len(), self.n_atoms);
        let mut out = Self::zero(self.n_atoms);
        for (b, &a) in self.amps.iter().enumerate() {
            let nb = permute_label(b as u64, self.n_atoms, perm);
            out.amps[nb as usize] = a;
        }
        out
    }
}

/// A dense density matrix; practical for small atom counts only.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n_atoms: usize,
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Self {
        let d = psi.dim();
        let mut mat = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                mat[(a, b)] = psi.amplitudes()[a] * psi.amplitudes()[b].conj();
            }
        }
        DensityMatrix { n_atoms: psi.n_atoms(), mat }
    }

    pub fn from_matrix(n_atoms: usize, mat: DMatrix<C64>) -> Result<Self> {
        let d = 1usize << n_atoms;
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: mat.nrows() });
        }
        Ok(DensityMatrix { n_atoms, mat })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    /// Diagonal populations (real parts).
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn occupations(&self) -> Vec<f64> {
        let n = self.n_atoms;
        let pops = self.populations();
        (0..n)
            .map(|j| {
                let mask = 1u64 << atom_bit_position(n, j);
                pops.iter()
                    .enumerate()
                    .filter(|&(b, _)| b as u64 & mask != 0)
                    .map(|(_, &p)| p)
                    .sum()
            })
            .collect()
    }

    /// Smallest eigenvalue of the Hermitian part; negative values signal a
    /// positivity violation.
    pub fn min_eigenvalue(&self) -> f64 {
        // Symmetrize first so numerical drift does not feed the solver a
        // non-Hermitian matrix.
        let herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigenvalues();
        eig.iter().fold(f64::INFINITY, |m, &e| m.min(e))
    }

    pub fn purity(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                s += (self.mat[(a, b)] * self.mat[(b, a)]).re;
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn label_conventions_match_shellwise_reading() {
        // |↑;↓↓↓;↑↑↑↑↑↑⟩ on 10 atoms: atom 0 up, atoms 1-3 down, 4-9 up.
        let n = 10;
        let b: u64 = 575;
        assert!(atom_is_up(b, n, 0));
        for atom in 1..=3 {
            assert!(!atom_is_up(b, n, atom));
        }
        for atom in 4..=9 {
            assert!(atom_is_up(b, n, atom));
        }
        assert_eq!(atom_sigma_z(b, n, 0), 1.0);
        assert_eq!(atom_sigma_z(b, n, 1), -1.0);
    }

    #[test]
    fn occupations_and_norms() {
        let mut psi = StateVector::zero(2);
        // (|↓↑⟩ + |↑↑⟩)/√2: atom 0 has ⟨n⟩ = 1/2, atom 1 has ⟨n⟩ = 1.
        psi.amplitudes_mut()[0b01] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi.amplitudes_mut()[0b11] = C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        assert_relative_eq!(psi.norm_sqr(), 1.0, max_relative = 1e-14);
        let occ = psi.occupations();
        assert_relative_eq!(occ[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(occ[1], 1.0, max_relative = 1e-14);
        assert_eq!(psi.argmax_probability(), 0b01);
    }

    #[test]
    fn permute_atoms_moves_spins() {
        let n = 4;
        // Swap atoms 0,1 and atoms 2,3.
        let perm = vec![1, 0, 3, 2];
        let b = 0b1010u64; // atoms: 0↑ 1↓ 2↑ 3↓
        assert_eq!(permute_label(b, n, &perm), 0b0101);
        let psi = StateVector::basis(n, b);
        let phi = psi.permute_atoms(&perm);
        assert_eq!(phi.argmax_probability(), 0b0101);
        // Involution.
        assert_relative_eq!(phi.permute_atoms(&perm).fidelity(&psi), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn density_matrix_basics() {
        let mut psi = StateVector::zero(1);
        psi.amplitudes_mut()[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi.amplitudes_mut()[1] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let rho = DensityMatrix::from_pure(&psi);
        assert_relative_eq!(rho.trace(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(rho.purity(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(rho.occupations()[0], 0.5, max_relative = 1e-14);
        // Pure-state eigenvalues are {0, 1}.
        assert!(rho.min_eigenvalue().abs() < 1e-14);
    }
}
