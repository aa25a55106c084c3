//! Projective measurement: bitstring sampling, detection-error (SPAM)
//! corruption, and histogram summaries.
//!
//! Readout errors are modeled per atom and per shot: an atom measured in
//! ↑ is misread as ↓ with probability `p_down_given_up`, and ↓ as ↑ with
//! probability `p_up_given_down`. Under this channel a single-atom
//! expectation transforms affinely, ⟨σ_z⟩ → a⟨σ_z⟩ + b with
//! a = 1 − p↓|↑ − p↑|↓ and b = p↑|↓ − p↓|↑.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{atom_bit_position, atom_is_up, DensityMatrix, StateVector};
use crate::util::derived_rng;
use rand::Rng;

/// Detection-error probabilities for a single readout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpamModel {
    /// Probability that an atom in ↑ is read out as ↓.
    pub p_down_given_up: f64,
    /// Probability that an atom in ↓ is read out as ↑.
    pub p_up_given_down: f64,
}

impl Default for SpamModel {
    fn default() -> Self {
        SpamModel { p_down_given_up: 0.18, p_up_given_down: 0.02 }
    }
}

impl SpamModel {
    pub fn validate(&self) -> Result<()> {
        for p in [self.p_down_given_up, self.p_up_given_down] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "detection-error probability {p} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Coefficients (a, b) of the affine map ⟨σ_z⟩ → a⟨σ_z⟩ + b induced on
    /// single-atom expectations.
    pub fn affine_coefficients(&self) -> (f64, f64) {
        let a = 1.0 - self.p_down_given_up - self.p_up_given_down;
        let b = self.p_up_given_down - self.p_down_given_up;
        (a, b)
    }
}

/// Aggregated measurement outcomes: label → count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShotRecord {
    n_atoms: usize,
    n_shots: u64,
    counts: BTreeMap<u64, u64>,
    spam_applied: bool,
    seed: u64,
}

impl ShotRecord {
    pub fn from_counts(
        n_atoms: usize,
        counts: BTreeMap<u64, u64>,
        spam_applied: bool,
        seed: u64,
    ) -> Result<Self> {
        let dim = 1u64 << n_atoms;
        if counts.keys().any(|&label| label >= dim) {
            return Err(Error::InvalidParameter(format!(
                "shot label outside the {n_atoms}-atom basis"
            )));
        }
        let n_shots = counts.values().sum();
        Ok(ShotRecord { n_atoms, n_shots, counts, spam_applied, seed })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_shots(&self) -> u64 {
        self.n_shots
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn spam_applied(&self) -> bool {
        self.spam_applied
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Empirical probability of one label.
    pub fn frequency(&self, label: u64) -> f64 {
        *self.counts.get(&label).unwrap_or(&0) as f64 / self.n_shots as f64
    }

    /// Label with the highest count (smallest label on ties).
    pub fn argmax(&self) -> u64 {
        let mut best = 0u64;
        let mut best_count = 0u64;
        for (&label, &count) in &self.counts {
            if count > best_count {
                best_count = count;
                best = label;
            }
        }
        best
    }
}

/// What to draw bitstrings from.
pub enum SampleSource<'a> {
    State(&'a StateVector),
    Density(&'a DensityMatrix),
    /// Explicit basis-state probabilities (e.g. a trajectory-averaged
    /// mixture), indexed by label.
    Distribution(&'a [f64]),
}

/// Draw `n_shots` projective-measurement outcomes.
///
/// The source must be normalized to within 1e-6. Shot `i` consumes its own
/// generator derived from `(seed, i)`, so the record is independent of
/// thread count and any subset of shots is reproducible.
pub fn sample_bitstrings(
    source: SampleSource<'_>,
    n_shots: u64,
    seed: u64,
) -> Result<ShotRecord> {
    let (n_atoms, probs): (usize, Vec<f64>) = match source {
        SampleSource::State(psi) => {
            (psi.n_atoms(), psi.amplitudes().iter().map(|a| a.norm_sqr()).collect())
        }
        SampleSource::Density(rho) => (rho.n_atoms(), rho.populations()),
        SampleSource::Distribution(p) => {
            let dim = p.len();
            if !dim.is_power_of_two() {
                return Err(Error::InvalidParameter(
                    "distribution length must be a power of two".into(),
                ));
            }
            (dim.trailing_zeros() as usize, p.to_vec())
        }
    };
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized((total - 1.0).abs()));
    }
    if probs.iter().any(|&p| p < -1e-12) {
        return Err(Error::InvalidParameter("negative probability in source".into()));
    }
    let mut cum = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in &probs {
        acc += p.max(0.0);
        cum.push(acc);
    }
    let grand_total = acc;
    let draw = |shot: u64| -> u64 {
        let mut rng = derived_rng(seed, shot);
        let r: f64 = rng.gen::<f64>() * grand_total;
        cum.partition_point(|&c| c <= r).min(probs.len() - 1) as u64
    };
    let labels: Vec<u64> = if n_shots >= 1024 {
        use rayon::prelude::*;
        (0..n_shots).into_par_iter().map(draw).collect()
    } else {
        (0..n_shots).map(draw).collect()
    };
    let mut counts = BTreeMap::new();
    for label in labels {
        *counts.entry(label).or_insert(0u64) += 1;
    }
    Ok(ShotRecord { n_atoms, n_shots, counts, spam_applied: false, seed })
}

/// Corrupt a shot record with per-atom detection errors.
///
/// Refuses to run twice on the same record: the channel is calibrated for
/// ideal inputs, and double application would silently compound it.
pub fn apply_spam(record: &ShotRecord, spam: &SpamModel, seed: u64) -> Result<ShotRecord> {
    spam.validate()?;
    if record.spam_applied {
        return Err(Error::DoubleApplication);
    }
    let n = record.n_atoms;
    let mut counts = BTreeMap::new();
    let mut shot_index = 0u64;
    for (&label, &count) in &record.counts {
        for _ in 0..count {
            let mut rng = derived_rng(seed, shot_index);
            shot_index += 1;
            let mut out = label;
            for atom in 0..n {
                let up = atom_is_up(label, n, atom);
                let p_flip = if up { spam.p_down_given_up } else { spam.p_up_given_down };
                if rng.gen::<f64>() < p_flip {
                    out ^= 1u64 << atom_bit_position(n, atom);
                }
            }
            *counts.entry(out).or_insert(0u64) += 1;
        }
    }
    Ok(ShotRecord {
        n_atoms: n,
        n_shots: record.n_shots,
        counts,
        spam_applied: true,
        seed: record.seed,
    })
}

/// Per-atom up/down flags (atom order) of one basis label.
pub fn decode_label(label: u64, n_atoms: usize) -> Vec<bool> {
    (0..n_atoms).map(|atom| atom_is_up(label, n_atoms, atom)).collect()
}

/// Inverse of [`decode_label`].
pub fn encode_label(spins: &[bool]) -> u64 {
    let n = spins.len();
    let mut label = 0u64;
    for (atom, &up) in spins.iter().enumerate() {
        if up {
            label |= 1u64 << atom_bit_position(n, atom);
        }
    }
    label
}

/// One histogram line: empirical probability with a Wilson-score
/// uncertainty at one standard deviation.
#[derive(Clone, Debug, Serialize)]
pub struct HistogramRow {
    pub label: u64,
    pub count: u64,
    pub probability: f64,
    pub stderr: f64,
}

/// Histogram of a shot record, sorted by label.
pub fn histogram(record: &ShotRecord) -> Vec<HistogramRow> {
    let n = record.n_shots as f64;
    record
        .counts
        .iter()
        .map(|(&label, &count)| {
            let p = count as f64 / n;
            let half = ((p * (1.0 - p) / n + 0.25 / (n * n)).sqrt()) / (1.0 + 1.0 / n);
            HistogramRow { label, count, probability: p, stderr: half }
        })
        .collect()
}

/// CSV rendering of [`histogram`] with header `label,count,probability,stderr`.
pub fn histogram_csv(record: &ShotRecord) -> String {
    let mut out = String::from("label,count,probability,stderr\n");
    for row in histogram(record) {
        writeln!(
            out,
            "{},{},{:.9e},{:.9e}",
            row.label, row.count, row.probability, row.stderr
        )
        .expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn affine_coefficients_of_default_model() {
        let (a, b) = SpamModel::default().affine_coefficients();
        assert_relative_eq!(a, 0.80, epsilon = 1e-15);
        assert_relative_eq!(b, -0.16, epsilon = 1e-15);
    }

    #[test]
    fn sampling_a_basis_state_is_deterministic() {
        let psi = StateVector::basis(10, 575);
        let record = sample_bitstrings(SampleSource::State(&psi), 1000, 7).unwrap();
        assert_eq!(record.counts().len(), 1);
        assert_eq!(record.counts()[&575], 1000);
        assert_eq!(record.n_shots(), 1000);
        assert!(!record.spam_applied());
    }

    #[test]
    fn unnormalized_source_is_rejected() {
        let mut psi = StateVector::basis(3, 5);
        psi.amplitudes_mut()[0] = num_complex::Complex64::new(0.1, 0.0);
        let err = sample_bitstrings(SampleSource::State(&psi), 10, 0).unwrap_err();
        assert!(matches!(err, Error::NotNormalized(_)));
    }

    #[test]
    fn sampling_matches_distribution_chi_square() {
        // 3-atom distribution with known probabilities.
        let probs = [0.5, 0.25, 0.0, 0.125, 0.0625, 0.0625, 0.0, 0.0];
        let record =
            sample_bitstrings(SampleSource::Distribution(&probs), 16_384, 42).unwrap();
        let mut chi2 = 0.0;
        for (b, &p) in probs.iter().enumerate() {
            let observed = *record.counts().get(&(b as u64)).unwrap_or(&0) as f64;
            let expected = p * 16_384.0;
            if p == 0.0 {
                assert_eq!(observed, 0.0, "impossible outcome {b} drawn");
            } else {
                chi2 += (observed - expected).powi(2) / expected;
            }
        }
        // 4 degrees of freedom; χ² < 18.5 is the p ≈ 0.001 cutoff.
        assert!(chi2 < 18.5, "chi-square {chi2}");
    }

    #[test]
    fn sampling_is_reproducible_and_seed_sensitive() {
        let probs = [0.5, 0.5, 0.0, 0.0];
        let a = sample_bitstrings(SampleSource::Distribution(&probs), 4096, 1).unwrap();
        let b = sample_bitstrings(SampleSource::Distribution(&probs), 4096, 1).unwrap();
        let c = sample_bitstrings(SampleSource::Distribution(&probs), 4096, 2).unwrap();
        assert_eq!(a.counts(), b.counts());
        assert_ne!(a.counts(), c.counts());
    }

    #[test]
    fn spam_shifts_neel_order_to_the_affine_value() {
        use crate::dynamics::{neel_order, SpinSource};
        use crate::lattice::{build_regular_tree, Layout};
        // Perfect shell-alternating state on the 10-atom tree, corrupted by
        // the default detection errors. Each edge has σσ = −1 and σ_i + σ_j
        // = 0, so the corrupted Néel order is a² − b² = 0.6144.
        let (g, _) = build_regular_tree(3, 3, 1.0, Layout::Planar).unwrap();
        let psi = StateVector::basis(10, 575);
        let clean = sample_bitstrings(SampleSource::State(&psi), 200_000, 11).unwrap();
        let noisy = apply_spam(&clean, &SpamModel::default(), 13).unwrap();
        let observed = neel_order(SpinSource::Shots(&noisy), &g);
        assert_relative_eq!(observed, 0.6144, epsilon = 0.01);
        assert!(noisy.spam_applied());
    }

    #[test]
    fn spam_cannot_be_applied_twice() {
        let psi = StateVector::basis(2, 1);
        let record = sample_bitstrings(SampleSource::State(&psi), 100, 0).unwrap();
        let once = apply_spam(&record, &SpamModel::default(), 5).unwrap();
        let err = apply_spam(&once, &SpamModel::default(), 5).unwrap_err();
        assert!(matches!(err, Error::DoubleApplication));
    }

    #[test]
    fn histogram_rows_are_sorted_and_consistent() {
        let probs = [0.25, 0.75];
        let record =
            sample_bitstrings(SampleSource::Distribution(&probs), 10_000, 3).unwrap();
        let rows = histogram(&record);
        assert!(rows.windows(2).all(|w| w[0].label < w[1].label));
        let total: u64 = rows.iter().map(|r| r.count).sum();
        assert_eq!(total, 10_000);
        for row in &rows {
            assert_relative_eq!(row.probability, row.count as f64 / 10_000.0);
            assert!(row.stderr > 0.0 && row.stderr < 0.01);
        }
        let csv = histogram_csv(&record);
        assert!(csv.starts_with("label,count,probability,stderr\n"));
        assert_eq!(csv.lines().count(), rows.len() + 1);
    }

    proptest! {
        #[test]
        fn label_codec_roundtrip(n in 1usize..=24, raw in any::<u64>()) {
            let label = raw & ((1u64 << n) - 1);
            let spins = decode_label(label, n);
            prop_assert_eq!(spins.len(), n);
            prop_assert_eq!(encode_label(&spins), label);
        }
    }
}
