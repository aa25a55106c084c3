//! The three-stage annealing waveforms Ω(t), Δ(t).
//!
//! Stage 1 (0 → 0.1·t_f): Ω ramps 0 → Ω0 while Δ holds at Δ_i.
//! Stage 2 (0.1 → 0.9·t_f): Ω holds at Ω0 while Δ sweeps Δ_i → Δ_f.
//! Stage 3 (0.9·t_f → t_f): Δ holds at Δ_f while Ω ramps Ω0 → 0.
//! Ramps are linear by default; a cosine shape is available for
//! sensitivity studies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::PhysicalConstants;

/// Ramp shape within each stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    #[default]
    Linear,
    Cosine,
}

impl RampShape {
    /// Monotone interpolant from 0 to 1 on s ∈ [0, 1].
    #[inline]
    fn blend(self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            RampShape::Linear => s,
            RampShape::Cosine => 0.5 * (1.0 - (std::f64::consts::PI * s).cos()),
        }
    }
}

/// Piecewise annealing schedule; all frequencies in rad/µs, times in µs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t_f: f64,
    /// Stage boundaries as fractions of t_f.
    pub breakpoints: (f64, f64),
    pub omega0: f64,
    pub delta_i: f64,
    pub delta_f: f64,
    pub shape: RampShape,
}

impl Schedule {
    /// The standard anneal: t_f = 2π·3.2/Ω0, Δ from −2Ω0 to `delta_f`.
    pub fn standard(consts: &PhysicalConstants, delta_f: f64) -> Schedule {
        Schedule {
            t_f: consts.default_anneal_time(),
            breakpoints: (0.1, 0.9),
            omega0: consts.omega0,
            delta_i: -2.0 * consts.omega0,
            delta_f,
            shape: RampShape::Linear,
        }
    }

    pub fn with_t_f(mut self, t_f: f64) -> Schedule {
        self.t_f = t_f;
        self
    }

    pub fn with_shape(mut self, shape: RampShape) -> Schedule {
        self.shape = shape;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (b1, b2) = self.breakpoints;
        if !(self.t_f > 0.0 && self.t_f.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_f = {} µs", self.t_f)));
        }
        if !(0.0 < b1 && b1 < b2 && b2 < 1.0) {
            return Err(Error::InvalidParameter(format!("breakpoints ({b1}, {b2})")));
        }
        if self.omega0 < 0.0 {
            return Err(Error::InvalidParameter(format!("omega0 = {}", self.omega0)));
        }
        Ok(())
    }

    /// Stage boundary times (t1, t2) in µs.
    pub fn stage_times(&self) -> (f64, f64) {
        (self.breakpoints.0 * self.t_f, self.breakpoints.1 * self.t_f)
    }

    /// Ω(t) in rad/µs; zero outside [0, t_f].
    pub fn omega(&self, t: f64) -> f64 {
        let (t1, t2) = self.stage_times();
        if t <= 0.0 || t >= self.t_f {
            0.0
        } else if t < t1 {
            self.omega0 * self.shape.blend(t / t1)
        } else if t <= t2 {
            self.omega0
        } else {
            self.omega0 * self.shape.blend((self.t_f - t) / (self.t_f - t2))
        }
    }

    /// Δ(t) in rad/µs; clamped to the endpoint values outside [0, t_f].
    pub fn delta(&self, t: f64) -> f64 {
        let (t1, t2) = self.stage_times();
        if t <= t1 {
            self.delta_i
        } else if t >= t2 {
            self.delta_f
        } else {
            let s = (t - t1) / (t2 - t1);
            self.delta_i + (self.delta_f - self.delta_i) * self.shape.blend(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn standard() -> Schedule {
        let consts = PhysicalConstants::default();
        Schedule::standard(&consts, 2.0 * consts.omega0)
    }

    #[test]
    fn endpoint_values() {
        let s = standard();
        s.validate().unwrap();
        assert_eq!(s.omega(0.0), 0.0);
        assert_eq!(s.omega(s.t_f), 0.0);
        assert_relative_eq!(s.t_f, 3.2 / 1.1, max_relative = 1e-12);
        assert_eq!(s.delta(0.0), s.delta_i);
        assert_eq!(s.delta(s.t_f), s.delta_f);
        let (t1, t2) = s.stage_times();
        assert_relative_eq!(s.omega(t1), s.omega0, max_relative = 1e-12);
        assert_relative_eq!(s.omega(t2), s.omega0, max_relative = 1e-12);
        assert_relative_eq!(s.omega(0.5 * s.t_f), s.omega0, max_relative = 1e-12);
        assert_relative_eq!(s.delta(0.5 * (t1 + t2)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn continuity_at_breakpoints() {
        for shape in [RampShape::Linear, RampShape::Cosine] {
            let s = standard().with_shape(shape);
            let (t1, t2) = s.stage_times();
            for t_star in [t1, t2] {
                let eps = 1e-9 * s.t_f;
                assert_relative_eq!(s.omega(t_star - eps), s.omega(t_star + eps), epsilon = 1e-6);
                assert_relative_eq!(s.delta(t_star - eps), s.delta(t_star + eps), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn omega_nonnegative_and_delta_monotone() {
        for shape in [RampShape::Linear, RampShape::Cosine] {
            let s = standard().with_shape(shape);
            let mut prev_delta = f64::NEG_INFINITY;
            for k in 0..=1000 {
                let t = s.t_f * k as f64 / 1000.0;
                assert!(s.omega(t) >= 0.0);
                assert!(s.omega(t) <= s.omega0 + 1e-12);
                let d = s.delta(t);
                assert!(d >= prev_delta - 1e-12);
                prev_delta = d;
            }
        }
    }

    #[test]
    fn invalid_schedules_rejected() {
        let mut s = standard();
        s.t_f = 0.0;
        assert!(s.validate().is_err());
        let mut s = standard();
        s.breakpoints = (0.9, 0.1);
        assert!(s.validate().is_err());
    }
}
