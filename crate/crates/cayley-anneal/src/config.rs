//! TOML experiment configuration and the five reference presets.
//!
//! Frequencies in config files are plain MHz; the library multiplies by 2π
//! internally so that `omega0_mhz = 1.1` means Ω0 = 2π × 1.1 rad/µs. Lengths
//! are µm, times µs. Every field has a default, so a config file only needs
//! to state what differs from the baseline ten-atom array.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::NoiseModel;
use crate::error::{Error, Result};
use crate::hamiltonian::InteractionMode;
use crate::holography::SlmPlane;
use crate::lattice::{self, Geometry, Layout, TreeGraph};
use crate::measurement::SpamModel;
use crate::schedule::{RampShape, Schedule};
use crate::units::{self, PhysicalConstants};

/// Which Cayley tree to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    /// Single-center tree; `shells` counts shells including the center and
    /// selects the 4-atom star (2), G10 (3), or G22 (4, rotated-3D only).
    Regular,
    /// Two fused centers with valence-3 completion (G14); `shells` ignored.
    DualCenter,
}

/// Coordinate layout for regular trees; ignored for dual-center, whose
/// geometry is intrinsically three-dimensional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutKind {
    Planar,
    Rotated3d,
}

/// How interactions enter the Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Nearest-neighbor couplings only, all exactly U.
    Ideal,
    /// Full C6/r^6 tails between every atom pair of the realized geometry.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    /// Shell count for regular trees (2–4).
    pub shells: usize,
    pub layout: LayoutKind,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { kind: GraphKind::Regular, shells: 3, layout: LayoutKind::Planar }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    /// Rabi frequency in MHz (2π-implied).
    pub omega0_mhz: f64,
    /// van der Waals coefficient in MHz·µm⁶ (2π-implied).
    pub c6_mhz_um6: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig { omega0_mhz: 1.1, c6_mhz_um6: 1.004e6 }
    }
}

/// Where in the (U/Ω0, Δf/Ω0) plane the anneal ends; U also fixes the edge
/// spacing d = r_b (Ω0/U)^{1/6}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointConfig {
    pub u_over_omega0: f64,
    pub delta_f_over_omega0: f64,
}

impl Default for PointConfig {
    fn default() -> Self {
        PointConfig { u_over_omega0: 1.82, delta_f_over_omega0: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Total anneal time in µs; `None` means the standard 2π·3.2/Ω0.
    pub t_f_us: Option<f64>,
    pub shape: RampShape,
    /// Number of uniformly spaced observable snapshots over [0, t_f].
    pub samples: usize,
    /// Fixed CFM4 step count; `None` selects adaptive step doubling
    /// (closed dynamics only — open solvers always use fixed steps).
    pub steps: Option<usize>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { t_f_us: None, shape: RampShape::Linear, samples: 200, steps: None }
    }
}

/// Dephasing rates are quoted in kHz. Whether such figures mean a plain
/// rate (γ = 2π-free, coherences decay as e^{−γt/2} per up-atom) or a
/// 2π-implied linewidth is a real ambiguity in hardware datasheets; under
/// the plain reading the open-system ten-atom anneal lands at 62%
/// ground-state probability and O_N = 0.82, so it is the default. Set
/// `angular_rates` to multiply by 2π instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Individual dephasing rate in kHz.
    pub gamma_individual_khz: f64,
    /// Collective (laser-phase) dephasing rate in kHz.
    pub gamma_collective_khz: f64,
    /// Read the kHz figures as 2π-implied linewidths.
    pub angular_rates: bool,
    /// Monte-Carlo trajectories; 0 disables noise entirely.
    pub trajectories: usize,
    /// Unitary steps per trajectory.
    pub steps: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            gamma_individual_khz: 36.0,
            gamma_collective_khz: 3.0,
            angular_rates: false,
            trajectories: 2000,
            steps: 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpamConfig {
    pub enabled: bool,
    pub p_down_given_up: f64,
    pub p_up_given_down: f64,
}

impl Default for SpamConfig {
    fn default() -> Self {
        SpamConfig { enabled: true, p_down_given_up: 0.18, p_up_given_down: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub shots: usize,
    pub seed: u64,
    pub mode: RunMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { shots: 672, seed: 7, mode: RunMode::Ideal }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoloConfig {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch_um: f64,
    pub focal_length_um: f64,
    pub wavelength_um: f64,
    pub iterations: usize,
}

impl Default for HoloConfig {
    fn default() -> Self {
        let p = SlmPlane::default();
        HoloConfig {
            width: p.width,
            height: p.height,
            pixel_pitch_um: p.pixel_pitch,
            focal_length_um: p.focal_length,
            wavelength_um: p.wavelength,
            iterations: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    pub u_min: f64,
    pub u_max: f64,
    pub u_points: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        PhaseDiagramConfig {
            u_min: 0.2,
            u_max: 6.0,
            u_points: 30,
            delta_min: -2.0,
            delta_max: 8.0,
            delta_points: 41,
        }
    }
}

/// Complete experiment description; every field defaulted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form annotations echoed into output metadata.
    pub notes: Vec<String>,
    pub graph: GraphConfig,
    pub constants: ConstantsConfig,
    pub point: PointConfig,
    pub schedule: ScheduleConfig,
    pub noise: NoiseConfig,
    pub spam: SpamConfig,
    pub run: RunConfig,
    pub holography: HoloConfig,
    pub phase_diagram: PhaseDiagramConfig,
}

impl ExperimentConfig {
    /// One of the five reference operating points:
    ///
    /// 1. G10 planar, U/Ω0 = 1.82, Δf/Ω0 = 2 (shell-alternating phase), 672 shots
    /// 2. G22 rotated-3D, U/Ω0 = 2.25, Δf/Ω0 = 2, 2208 shots
    /// 3. G14 dual-center, U/Ω0 = 1.67, Δf/Ω0 = 2 (centers ↑↑), 5113 shots
    /// 4. G14 dual-center, U/Ω0 = 2.70, Δf/Ω0 = 2 (degenerate pair), 5113 shots
    /// 5. G14 dual-center, U/Ω0 = 5.41, Δf/Ω0 = 2 (degenerate pair), 5113 shots
    pub fn preset(index: usize) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        match index {
            1 => {}
            2 => {
                cfg.graph =
                    GraphConfig { kind: GraphKind::Regular, shells: 4, layout: LayoutKind::Rotated3d };
                cfg.point.u_over_omega0 = 2.25;
                cfg.run.shots = 2208;
            }
            3 => {
                cfg.graph.kind = GraphKind::DualCenter;
                cfg.point.u_over_omega0 = 1.67;
                cfg.run.shots = 5113;
            }
            4 => {
                cfg.graph.kind = GraphKind::DualCenter;
                cfg.point.u_over_omega0 = 2.70;
                cfg.run.shots = 5113;
                cfg.notes.push(
                    "preset 4: U/Omega0 = 2.70 gives edge spacing d = 0.847 r_b; the hardware \
                     array this point mirrors quoted d = 0.86 r_b"
                        .into(),
                );
            }
            5 => {
                cfg.graph.kind = GraphKind::DualCenter;
                cfg.point.u_over_omega0 = 5.41;
                cfg.run.shots = 5113;
            }
            other => {
                return Err(Error::Config(format!("preset {other} does not exist; use 1-5")));
            }
        }
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("config encode: {e}")))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.graph.kind == GraphKind::Regular && !(2..=4).contains(&self.graph.shells) {
            return Err(Error::Config(format!(
                "graph.shells = {}; regular trees support 2-4 shells",
                self.graph.shells
            )));
        }
        if self.constants.omega0_mhz <= 0.0 || self.constants.c6_mhz_um6 <= 0.0 {
            return Err(Error::Config("constants must be positive".into()));
        }
        if self.point.u_over_omega0 <= 0.0 {
            return Err(Error::Config("point.u_over_omega0 must be positive".into()));
        }
        if let Some(t_f) = self.schedule.t_f_us {
            if t_f <= 0.0 {
                return Err(Error::Config("schedule.t_f_us must be positive".into()));
            }
        }
        if self.schedule.samples < 2 {
            return Err(Error::Config("schedule.samples must be at least 2".into()));
        }
        if self.schedule.steps == Some(0) {
            return Err(Error::Config("schedule.steps must be positive when set".into()));
        }
        if self.noise.gamma_individual_khz < 0.0 || self.noise.gamma_collective_khz < 0.0 {
            return Err(Error::Config("noise rates must be non-negative".into()));
        }
        if self.noise.trajectories > 0 && self.noise.steps == 0 {
            return Err(Error::Config("noise.steps must be positive".into()));
        }
        if self.spam.enabled {
            self.spam_model()
                .validate()
                .map_err(|e| Error::Config(format!("spam: {e}")))?;
        }
        if self.run.shots == 0 {
            return Err(Error::Config("run.shots must be positive".into()));
        }
        let plane = self.slm_plane();
        plane.validate().map_err(|e| Error::Config(format!("holography: {e}")))?;
        if self.holography.iterations == 0 {
            return Err(Error::Config("holography.iterations must be positive".into()));
        }
        let pd = &self.phase_diagram;
        if pd.u_points == 0 || pd.delta_points == 0 {
            return Err(Error::Config("phase_diagram grid needs at least one point per axis".into()));
        }
        if pd.u_min <= 0.0 || pd.u_max < pd.u_min || pd.delta_max < pd.delta_min {
            return Err(Error::Config("phase_diagram grid bounds are inverted or non-positive".into()));
        }
        Ok(())
    }

    /// Physical constants in rad/µs angular units.
    pub fn physical_constants(&self) -> PhysicalConstants {
        PhysicalConstants::new(units::mhz(self.constants.c6_mhz_um6), units::mhz(self.constants.omega0_mhz))
    }

    /// Edge spacing in µm implied by the operating point.
    pub fn edge_spacing(&self) -> f64 {
        self.physical_constants().edge_length_for_u(self.point.u_over_omega0)
    }

    pub fn build_graph(&self) -> Result<(TreeGraph, Geometry)> {
        let d = self.edge_spacing();
        match self.graph.kind {
            GraphKind::Regular => {
                let layout = match self.graph.layout {
                    LayoutKind::Planar => Layout::Planar,
                    LayoutKind::Rotated3d => Layout::Rotated3D,
                };
                lattice::build_regular_tree(lattice::COORDINATION, self.graph.shells, d, layout)
            }
            GraphKind::DualCenter => lattice::build_dual_center_tree(d),
        }
    }

    pub fn schedule(&self) -> Schedule {
        let consts = self.physical_constants();
        let delta_f = self.point.delta_f_over_omega0 * consts.omega0;
        let mut sched = Schedule::standard(&consts, delta_f).with_shape(self.schedule.shape);
        if let Some(t_f) = self.schedule.t_f_us {
            sched = sched.with_t_f(t_f);
        }
        sched
    }

    /// Uniform snapshot times over [0, t_f], endpoints included.
    pub fn sample_times(&self) -> Vec<f64> {
        let t_f = self.schedule().t_f;
        let n = self.schedule.samples;
        (0..n).map(|i| t_f * i as f64 / (n - 1) as f64).collect()
    }

    pub fn noise_model(&self) -> NoiseModel {
        let scale = if self.noise.angular_rates { std::f64::consts::TAU } else { 1.0 };
        NoiseModel {
            gamma_individual: scale * 1e-3 * self.noise.gamma_individual_khz,
            gamma_collective: scale * 1e-3 * self.noise.gamma_collective_khz,
        }
    }

    /// Noise is active only when both a rate and a trajectory budget exist.
    pub fn noise_active(&self) -> bool {
        self.noise.trajectories > 0 && !self.noise_model().is_closed()
    }

    pub fn spam_model(&self) -> SpamModel {
        SpamModel {
            p_down_given_up: self.spam.p_down_given_up,
            p_up_given_down: self.spam.p_up_given_down,
        }
    }

    pub fn slm_plane(&self) -> SlmPlane {
        SlmPlane {
            width: self.holography.width,
            height: self.holography.height,
            pixel_pitch: self.holography.pixel_pitch_um,
            focal_length: self.holography.focal_length_um,
            wavelength: self.holography.wavelength_um,
        }
    }

    pub fn interaction_mode(&self) -> InteractionMode {
        match self.run.mode {
            RunMode::Ideal => InteractionMode::GraphIdeal,
            RunMode::Full => InteractionMode::FullVdW,
        }
    }

    /// The (U/Ω0, Δ/Ω0) grid for phase-diagram scans, row-major in U then Δ.
    pub fn phase_grid(&self) -> Vec<(f64, f64)> {
        let pd = &self.phase_diagram;
        let lin = |lo: f64, hi: f64, n: usize, i: usize| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let mut grid = Vec::with_capacity(pd.u_points * pd.delta_points);
        for iu in 0..pd.u_points {
            for id in 0..pd.delta_points {
                grid.push((
                    lin(pd.u_min, pd.u_max, pd.u_points, iu),
                    lin(pd.delta_min, pd.delta_max, pd.delta_points, id),
                ));
            }
        }
        grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn presets_build_the_advertised_graphs() {
        let sizes = [(1, 10), (2, 22), (3, 14), (4, 14), (5, 14)];
        for (idx, n) in sizes {
            let cfg = ExperimentConfig::preset(idx).unwrap();
            cfg.validate().unwrap();
            let (g, geo) = cfg.build_graph().unwrap();
            assert_eq!(g.n_vertices(), n, "preset {idx}");
            assert_eq!(geo.n_atoms(), n);
        }
        assert!(matches!(ExperimentConfig::preset(0), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::preset(6), Err(Error::Config(_))));
    }

    #[test]
    fn preset_four_documents_its_spacing() {
        let cfg = ExperimentConfig::preset(4).unwrap();
        assert!(!cfg.notes.is_empty());
        let r_b = cfg.physical_constants().blockade_radius();
        assert_relative_eq!(cfg.edge_spacing() / r_b, 2.70f64.powf(-1.0 / 6.0), epsilon = 1e-12);
        assert_relative_eq!(cfg.edge_spacing() / r_b, 0.847, epsilon = 5e-4);
    }

    #[test]
    fn frequencies_are_two_pi_implied() {
        let cfg = ExperimentConfig::default();
        let consts = cfg.physical_constants();
        assert_relative_eq!(consts.omega0, 2.0 * std::f64::consts::PI * 1.1, epsilon = 1e-12);
        // Dephasing rates are the exception: plain kHz by default, with the
        // 2π reading behind the `angular_rates` switch.
        let noise = cfg.noise_model();
        assert_relative_eq!(noise.gamma_individual, 0.036, epsilon = 1e-12);
        let mut angular = cfg.clone();
        angular.noise.angular_rates = true;
        assert_relative_eq!(
            angular.noise_model().gamma_individual,
            2.0 * std::f64::consts::PI * 0.036,
            epsilon = 1e-12
        );
        let sched = cfg.schedule();
        assert_relative_eq!(sched.t_f, 2.0 * std::f64::consts::PI * 3.2 / consts.omega0, epsilon = 1e-12);
    }

    #[test]
    fn partial_config_uses_defaults_elsewhere() {
        let cfg = ExperimentConfig::from_toml_str(
            "[graph]\nkind = \"dual-center\"\n\n[run]\nshots = 99\n",
        )
        .unwrap();
        assert_eq!(cfg.graph.kind, GraphKind::DualCenter);
        assert_eq!(cfg.run.shots, 99);
        assert_eq!(cfg.run.seed, 7);
        assert_eq!(cfg.noise.trajectories, 2000);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str("[run]\nshotz = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn invalid_values_are_rejected_with_context() {
        for text in [
            "[graph]\nshells = 9\n",
            "[point]\nu_over_omega0 = -1.0\n",
            "[schedule]\nsamples = 1\n",
            "[run]\nshots = 0\n",
            "[spam]\np_down_given_up = 1.5\n",
            "[holography]\niterations = 0\n",
        ] {
            let err = ExperimentConfig::from_toml_str(text).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "accepted bad config: {text}");
        }
    }

    #[test]
    fn sample_times_cover_the_anneal_uniformly() {
        let mut cfg = ExperimentConfig::default();
        cfg.schedule.samples = 5;
        cfg.schedule.t_f_us = Some(2.0);
        let times = cfg.sample_times();
        assert_eq!(times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn phase_grid_has_row_major_layout() {
        let mut cfg = ExperimentConfig::default();
        cfg.phase_diagram = PhaseDiagramConfig {
            u_min: 1.0,
            u_max: 2.0,
            u_points: 2,
            delta_min: 0.0,
            delta_max: 1.0,
            delta_points: 3,
        };
        let grid = cfg.phase_grid();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[0], (1.0, 0.0));
        assert_eq!(grid[2], (1.0, 1.0));
        assert_eq!(grid[3], (2.0, 0.0));
    }
}
