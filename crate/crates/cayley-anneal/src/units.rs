//! Unit conventions and physical constants.
//!
//! All frequencies are stored as angular frequencies in rad/µs, lengths in
//! µm, and times in µs, with ħ = 1. Configuration files accept frequencies
//! in MHz, interpreted as 2π·MHz, which [`mhz`] converts.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Convert a frequency quoted in (2π)MHz to an angular frequency in rad/µs.
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// Convert an angular frequency in rad/µs back to (2π)MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / TAU
}

/// Van der Waals coefficient and peak Rabi frequency of the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Van der Waals coefficient C₆ in rad·µs⁻¹·µm⁶.
    pub c6: f64,
    /// Peak Rabi frequency Ω₀ in rad/µs.
    pub omega0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            c6: mhz(1.004e6),
            omega0: mhz(1.1),
        }
    }
}

impl PhysicalConstants {
    pub fn new(c6: f64, omega0: f64) -> Self {
        Self { c6, omega0 }
    }

    /// Blockade radius r_b = (C₆/Ω₀)^{1/6} in µm: the distance at which the
    /// pair interaction equals the peak Rabi frequency.
    pub fn blockade_radius(&self) -> f64 {
        (self.c6 / self.omega0).powf(1.0 / 6.0)
    }

    /// Edge length that realizes a given interaction-to-drive ratio U/Ω₀.
    pub fn edge_length_for_u(&self, u_over_omega0: f64) -> f64 {
        self.blockade_radius() * u_over_omega0.powf(-1.0 / 6.0)
    }

    /// Critical edge length d_c = 2^{-1/6}·r_b at which U(d_c) equals the
    /// default final detuning 2Ω₀.
    pub fn critical_distance(&self) -> f64 {
        self.blockade_radius() * 2.0_f64.powf(-1.0 / 6.0)
    }

    /// Default total anneal duration t_f = 2π·3.2/Ω₀ in µs.
    pub fn default_anneal_time(&self) -> f64 {
        TAU * 3.2 / self.omega0
    }
}

/// Blockade radius for explicit (C₆, Ω₀) values.
pub fn blockade_radius(constants: &PhysicalConstants) -> f64 {
    constants.blockade_radius()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn blockade_radius_defaults() {
        let c = PhysicalConstants::default();
        // 9.8 µm to within 1%.
        let rb = c.blockade_radius();
        assert!((rb - 9.8).abs() / 9.8 < 0.01, "rb = {rb}");
        assert_relative_eq!(rb, (1.004e6_f64 / 1.1).powf(1.0 / 6.0), epsilon = 1e-12);
    }

    #[test]
    fn blockade_radius_unit_case() {
        let c = PhysicalConstants::new(1.0, 1.0);
        assert_relative_eq!(c.blockade_radius(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn blockade_radius_sixth_root_scaling() {
        let c = PhysicalConstants::default();
        let scaled = PhysicalConstants::new(64.0 * c.c6, c.omega0);
        assert_relative_eq!(
            scaled.blockade_radius(),
            2.0 * c.blockade_radius(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn anneal_time_matches_convention() {
        let c = PhysicalConstants::default();
        // 2π·3.2/(2π·1.1) = 3.2/1.1 µs.
        assert_relative_eq!(c.default_anneal_time(), 3.2 / 1.1, epsilon = 1e-12);
    }

    #[test]
    fn critical_distance_ratio() {
        let c = PhysicalConstants::default();
        let ratio = c.critical_distance() / c.blockade_radius();
        assert_relative_eq!(ratio, 0.8908987181403393, epsilon = 1e-12);
    }
}
