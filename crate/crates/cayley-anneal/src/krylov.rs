//! Krylov-subspace primitives for matrix-free Hermitian operators:
//! `expv` propagates exp(−iτH)·v through a Lanczos subspace with adaptive
//! substepping, and `lowest_eigenpair` runs restarted Lanczos with full
//! reorthogonalization for ground states.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::util;

/// Controls for [`expv`].
#[derive(Clone, Copy, Debug)]
pub struct ExpvOptions {
    /// Lanczos subspace dimension per substep.
    pub krylov_dim: usize,
    /// Per-substep error budget relative to the vector norm.
    pub tol: f64,
    /// Hard cap on substep attempts before giving up.
    pub max_attempts: usize,
}

impl Default for ExpvOptions {
    fn default() -> Self {
        ExpvOptions { krylov_dim: 20, tol: 1e-10, max_attempts: 10_000 }
    }
}

/// Diagnostics from one [`expv`] call.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExpvReport {
    pub applies: usize,
    pub substeps: usize,
    /// Sum of per-substep error estimates, relative to the vector norm.
    pub est_error: f64,
}

struct LanczosBasis {
    vecs: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

/// Runs `m` Lanczos steps from the normalized start vector `v0`.
/// `beta[k]` is the off-diagonal following `alpha[k]`; a tiny `beta`
/// terminates the recurrence early (happy breakdown).
fn lanczos<F>(apply: &F, v0: &[C64], m: usize, full_reorth: bool, breakdown: f64) -> LanczosBasis
where
    F: Fn(&[C64], &mut [C64]),
{
    let dim = v0.len();
    let mut basis = LanczosBasis {
        vecs: vec![v0.to_vec()],
        alpha: Vec::with_capacity(m),
        beta: Vec::with_capacity(m),
    };
    let mut w = vec![C64::new(0.0, 0.0); dim];
    for k in 0..m {
        apply(&basis.vecs[k], &mut w);
        let alpha = util::par_sum_c64(dim, |i| basis.vecs[k][i].conj() * w[i]).re;
        basis.alpha.push(alpha);
        {
            let vk = &basis.vecs[k];
            let vprev = if k > 0 { Some((&basis.vecs[k - 1], basis.beta[k - 1])) } else { None };
            util::par_update(&mut w, |i, x| {
                let mut y = x - vk[i] * alpha;
                if let Some((vp, b)) = vprev {
                    y -= vp[i] * b;
                }
                y
            });
        }
        if full_reorth {
            // Classical Gram-Schmidt pass against the whole block.
            let coeffs: Vec<C64> = basis
                .vecs
                .iter()
                .map(|v| util::par_sum_c64(dim, |i| v[i].conj() * w[i]))
                .collect();
            for (v, c) in basis.vecs.iter().zip(coeffs) {
                util::par_update(&mut w, |i, x| x - v[i] * c);
            }
        }
        let beta = util::par_sum_f64(dim, |i| w[i].norm_sqr()).sqrt();
        basis.beta.push(beta);
        if beta <= breakdown {
            break;
        }
        if k + 1 < m {
            let inv = 1.0 / beta;
            let mut next = vec![C64::new(0.0, 0.0); dim];
            util::par_fill(&mut next, |i| w[i] * inv);
            basis.vecs.push(next);
        }
    }
    basis
}

/// Eigen-decomposition of the real symmetric tridiagonal (alpha, beta).
fn tridiag_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for k in 0..m {
        t[(k, k)] = alpha[k];
        if k + 1 < m {
            t[(k, k + 1)] = beta[k];
            t[(k + 1, k)] = beta[k];
        }
    }
    let eig = t.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// u = exp(−iτT)·e1 for the tridiagonal T.
fn expm_tridiag_e1(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<C64> {
    let (lambda, q) = tridiag_eigen(alpha, beta);
    let m = alpha.len();
    let mut u = vec![C64::new(0.0, 0.0); m];
    for (j, &lj) in lambda.iter().enumerate() {
        let phase = C64::from_polar(1.0, -tau * lj);
        let qe1 = q[(0, j)];
        for k in 0..m {
            u[k] += q[(k, j)] * phase * qe1;
        }
    }
    u
}

/// In-place v ← exp(−iτH)·v through adaptive Lanczos substeps.
///
/// `norm_bound` is any upper bound on the spectral radius of H; it seeds
/// the initial substep so that ‖δt·H‖ stays O(10). The per-substep error
/// estimate is the standard Krylov residual β·|u_m| and drives step
/// halving; the accumulated estimate is returned.
pub fn expv<F>(
    apply: &F,
    tau: f64,
    v: &mut [C64],
    norm_bound: f64,
    opts: &ExpvOptions,
) -> Result<ExpvReport>
where
    F: Fn(&[C64], &mut [C64]),
{
    let dim = v.len();
    let mut report = ExpvReport::default();
    if tau == 0.0 {
        return Ok(report);
    }
    let vnorm = util::par_sum_f64(dim, |i| v[i].norm_sqr()).sqrt();
    if vnorm == 0.0 {
        return Ok(report);
    }
    let m = opts.krylov_dim.min(dim).max(2);
    let sign = tau.signum();
    let total = tau.abs();
    let mut done = 0.0f64;
    // Keep the first substep's ‖δt·H‖ around 10 so m ≈ 20 converges.
    let mut dt = if norm_bound > 0.0 { (10.0 / norm_bound).min(total) } else { total };
    let breakdown = 1e-13 * vnorm;

    let mut unit = vec![C64::new(0.0, 0.0); dim];
    let inv = 1.0 / vnorm;
    util::par_fill(&mut unit, |i| v[i] * inv);
    let mut scale = vnorm;

    while done < total {
        let step = dt.min(total - done);
        let basis = lanczos(apply, &unit, m, false, breakdown);
        report.applies += basis.alpha.len();
        let mk = basis.alpha.len();
        let u = expm_tridiag_e1(&basis.alpha, &basis.beta, sign * step);
        let happy = basis.beta[mk - 1] <= breakdown;
        let est = if happy { 0.0 } else { (basis.beta[mk - 1] * u[mk - 1].norm()).abs() * step };
        report.substeps += 1;
        if report.substeps + report.applies > opts.max_attempts {
            return Err(Error::ConvergenceFailure {
                iterations: report.substeps,
                residual: est,
                target: opts.tol,
            });
        }
        if !happy && est > opts.tol {
            dt = 0.5 * step;
            continue;
        }
        // v ← scale · V·u.
        util::par_fill(v, |i| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, uk) in u.iter().enumerate() {
                acc += basis.vecs[k][i] * *uk;
            }
            acc * scale
        });
        done += step;
        report.est_error += est;
        if est < 0.01 * opts.tol {
            dt = step * 1.5;
        }
        if done < total {
            scale = util::par_sum_f64(dim, |i| v[i].norm_sqr()).sqrt();
            let inv = 1.0 / scale;
            util::par_fill(&mut unit, |i| v[i] * inv);
        }
    }
    Ok(report)
}

/// Controls for [`lowest_eigenpair`].
#[derive(Clone, Copy, Debug)]
pub struct GroundOptions {
    /// Lanczos block size per restart.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Residual target relative to the operator norm bound.
    pub tol: f64,
    /// Seed for the deterministic pseudo-random start vector.
    pub seed: u64,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions { krylov_dim: 60, max_restarts: 400, tol: 1e-8, seed: 0xCA11E7 }
    }
}

/// Diagnostics from [`lowest_eigenpair`].
#[derive(Clone, Copy, Debug)]
pub struct GroundReport {
    pub restarts: usize,
    pub applies: usize,
    /// Final absolute residual ‖Hx − θx‖.
    pub residual: f64,
}

/// Lowest eigenpair (θ, x) of a Hermitian matrix-free operator by restarted
/// Lanczos with full reorthogonalization. The residual contract is
/// ‖Hx − θx‖ ≤ tol·norm_bound.
pub fn lowest_eigenpair<F>(
    dim: usize,
    apply: &F,
    norm_bound: f64,
    opts: &GroundOptions,
) -> Result<(f64, Vec<C64>, GroundReport)>
where
    F: Fn(&[C64], &mut [C64]),
{
    use rand::Rng;
    let mut rng = util::derived_rng(opts.seed, 0);
    let mut v: Vec<C64> =
        (0..dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let nrm = util::par_sum_f64(dim, |i| v[i].norm_sqr()).sqrt();
    for x in &mut v {
        *x /= nrm;
    }
    let m = opts.krylov_dim.min(dim).max(2);
    let target = opts.tol * norm_bound.max(f64::MIN_POSITIVE);
    let mut applies = 0usize;
    let mut residual = f64::INFINITY;
    let mut w = vec![C64::new(0.0, 0.0); dim];

    for restart in 0..opts.max_restarts {
        let basis = lanczos(apply, &v, m, true, 1e-14);
        applies += basis.alpha.len();
        let mk = basis.alpha.len();
        let (lambda, q) = tridiag_eigen(&basis.alpha, &basis.beta);
        let (jmin, _) = lambda
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite eigenvalues"))
            .expect("nonempty spectrum");
        let theta = lambda[jmin];
        util::par_fill(&mut v, |i| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..mk {
                acc += basis.vecs[k][i] * q[(k, jmin)];
            }
            acc
        });
        let nrm = util::par_sum_f64(dim, |i| v[i].norm_sqr()).sqrt();
        let inv = 1.0 / nrm;
        util::par_update(&mut v, |_, x| x * inv);
        // Explicit residual check.
        apply(&v, &mut w);
        applies += 1;
        residual = util::par_sum_f64(dim, |i| (w[i] - v[i] * theta).norm_sqr()).sqrt();
        if residual <= target {
            return Ok((theta, v, GroundReport { restarts: restart + 1, applies, residual }));
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: opts.max_restarts,
        residual,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{CouplingMap, InteractionMode, RydbergHamiltonian, interaction_matrix};
    use crate::lattice::{build_regular_tree, Layout};
    use crate::state::StateVector;
    use crate::units::PhysicalConstants;
    use approx::assert_relative_eq;

    fn star_hamiltonian() -> RydbergHamiltonian {
        let consts = PhysicalConstants::default();
        let (g, geo) =
            build_regular_tree(3, 2, 0.9 * consts.blockade_radius(), Layout::Planar).unwrap();
        let c = interaction_matrix(&g, &geo, &consts, InteractionMode::FullVdW).unwrap();
        RydbergHamiltonian::new(c).unwrap()
    }

    /// Dense exp(−iτH)·v oracle via Hermitian eigendecomposition.
    fn dense_expv(ham: &RydbergHamiltonian, omega: f64, delta: f64, tau: f64, v: &[C64]) -> Vec<C64> {
        let h = ham.dense(omega, delta).unwrap();
        let eig = h.symmetric_eigen();
        let dim = v.len();
        let vin = nalgebra::DVector::from_column_slice(v);
        let coeffs = eig.eigenvectors.adjoint() * vin;
        let mut out = nalgebra::DVector::from_element(dim, C64::new(0.0, 0.0));
        for j in 0..dim {
            let phase = C64::from_polar(1.0, -tau * eig.eigenvalues[j]);
            out += eig.eigenvectors.column(j) * (coeffs[j] * phase);
        }
        out.iter().copied().collect()
    }

    #[test]
    fn expv_matches_dense_oracle() {
        let ham = star_hamiltonian();
        let consts = PhysicalConstants::default();
        let (omega, delta) = (consts.omega0, -0.8 * consts.omega0);
        let tau = 0.9;
        let mut v = StateVector::all_down(4);
        let expect = dense_expv(&ham, omega, delta, tau, v.amplitudes());
        let apply = |x: &[C64], y: &mut [C64]| ham.apply(omega, delta, x, y);
        let report = expv(
            &apply,
            tau,
            v.amplitudes_mut(),
            ham.norm_bound(omega, delta, 1.0),
            &ExpvOptions::default(),
        )
        .unwrap();
        let err: f64 = v
            .amplitudes()
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-9, "error {err}, report {report:?}");
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn expv_zero_time_is_identity() {
        let ham = star_hamiltonian();
        let mut v = StateVector::basis(4, 7);
        let apply = |x: &[C64], y: &mut [C64]| ham.apply(1.0, 0.5, x, y);
        expv(&apply, 0.0, v.amplitudes_mut(), 10.0, &ExpvOptions::default()).unwrap();
        assert_eq!(v.argmax_probability(), 7);
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn expv_rabi_pi_pulse() {
        let omega = 2.0;
        let ham = RydbergHamiltonian::new(CouplingMap::new(1, vec![]).unwrap()).unwrap();
        let mut v = StateVector::all_down(1);
        let apply = |x: &[C64], y: &mut [C64]| ham.apply(omega, 0.0, x, y);
        expv(
            &apply,
            std::f64::consts::PI / omega,
            v.amplitudes_mut(),
            omega,
            &ExpvOptions::default(),
        )
        .unwrap();
        // |↓⟩ → −i|↑⟩.
        assert!((v.amplitudes()[1] - C64::new(0.0, -1.0)).norm() < 1e-10);
        assert!(v.amplitudes()[0].norm() < 1e-10);
    }

    #[test]
    fn ground_state_single_atom() {
        let ham = RydbergHamiltonian::new(CouplingMap::new(1, vec![]).unwrap()).unwrap();
        let apply = |x: &[C64], y: &mut [C64]| ham.apply(0.0, 1.0, x, y);
        let (theta, v, report) =
            lowest_eigenpair(2, &apply, 1.0, &GroundOptions::default()).unwrap();
        assert_relative_eq!(theta, -0.5, epsilon = 1e-10);
        assert!(v[1].norm() > 1.0 - 1e-9, "report {report:?}");
    }

    #[test]
    fn ground_state_matches_dense_oracle() {
        let consts = PhysicalConstants::default();
        let ham = star_hamiltonian();
        let (omega, delta) = (consts.omega0, consts.omega0);
        let apply = |x: &[C64], y: &mut [C64]| ham.apply(omega, delta, x, y);
        let (theta, v, _) =
            lowest_eigenpair(ham.dim(), &apply, ham.norm_bound(omega, delta, 1.0), &GroundOptions::default())
                .unwrap();
        let dense = ham.dense(omega, delta).unwrap();
        let eig = dense.symmetric_eigen();
        let (jmin, emin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert_relative_eq!(theta, *emin, epsilon = 1e-10);
        let overlap: C64 = eig
            .eigenvectors
            .column(jmin)
            .iter()
            .zip(&v)
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!(overlap.norm() > 1.0 - 1e-9);
    }

    #[test]
    fn ground_solver_reports_nonconvergence() {
        let ham = star_hamiltonian();
        let apply = |x: &[C64], y: &mut [C64]| ham.apply(1.0, 1.0, x, y);
        let opts = GroundOptions { krylov_dim: 2, max_restarts: 1, tol: 1e-14, seed: 3 };
        let err = lowest_eigenpair(ham.dim(), &apply, 100.0, &opts).unwrap_err();
        assert!(matches!(err, Error::ConvergenceFailure { .. }));
    }
}
