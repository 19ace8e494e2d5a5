//! Scenario configuration and its flat `key = value` text format.
//!
//! ```text
//! # comment
//! seed = 42
//! detector_distance_mm = 100
//! mode_hop_map = synthetic        # none | synthetic | path to a map file
//! full_sun_intervals_h = 120-220  # comma-separated start-end pairs, or none
//! ```
//!
//! Units are part of the key names. Keys may appear in any order; unknown
//! keys are errors. [`ScenarioConfig::to_text`] writes every key and
//! [`ScenarioConfig::parse`] reads it back exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::detection::{CoincidenceWindow, DetectorConfig};
use crate::geometry::{DistanceReference, OpeningAngleDistribution, OpticalLayout};
use crate::mission::{HeaterConfig, OrbitProfile, MAX_STEP_S};
use crate::polarization::ChshSettings;
use crate::source::SourceConfig;
use crate::{Error, Result};

use super::sweep::Arm;

/// Where the laser's D/A visibility map comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeHopSource {
    /// No mode hopping: the intrinsic visibilities apply at every current.
    None,
    /// [`crate::source::SyntheticLaser`] with its default grid.
    Synthetic,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub source: SourceConfig,
    /// Intrinsic H/V visibility of the source.
    pub visibility_hv: f64,
    /// Intrinsic D/A visibility when no mode-hop map is used.
    pub visibility_da: f64,
    pub tilt_detuning_urad: f64,
    /// Pump power when no mode-hop map supplies a power curve.
    pub pump_power_mw: f64,
    /// Generated pairs per second per mW of pump, before any loss.
    pub brightness_pairs_per_s_per_mw: f64,
    pub layout: OpticalLayout,
    /// Fixed geometric efficiency; `None` runs the Monte Carlo estimate.
    pub geometric_efficiency: Option<f64>,
    pub geometry_samples: u64,
    pub detector: DetectorConfig,
    pub coincidence_window_ns: f64,
    /// Detected singles per channel at the reference efficiency, excluding dark counts.
    pub singles_signal_hz: f64,
    pub singles_idler_hz: f64,
    pub orbit: OrbitProfile,
    pub heater: HeaterConfig,
    pub thermal_dt_s: f64,
    /// Payload temperature at mission start; `None` starts at the ambient.
    pub initial_temperature_c: Option<f64>,
    /// Payload temperature assumed by stand-alone sweeps and CHSH runs.
    pub operating_temperature_c: f64,
    pub mode_hop: ModeHopSource,
    /// Fixed laser current; `None` selects the optimal current from the map.
    pub laser_current_ma: Option<f64>,
    pub fixed_arm: Arm,
    pub sweep_start_deg: f64,
    pub sweep_stop_deg: f64,
    pub sweep_step_deg: f64,
    pub lcpr_span_limit_deg: f64,
    pub integration_time_s: f64,
    pub chsh: ChshSettings,
    /// Shift applied to the swept-arm angles at which CHSH points are read.
    pub settings_offset_deg: f64,
    /// Physical error of the fixed arm at its D and A settings.
    pub da_setting_error_deg: f64,
    pub survey_start_deg: f64,
    pub survey_stop_deg: f64,
    pub survey_step_deg: f64,
    pub survey_integration_time_s: f64,
    pub measurement_interval_s: f64,
    pub mission_duration_s: f64,
    pub output_dir: Option<PathBuf>,
}

/// Calibrated per-point integration time giving sigma_S ≈ 0.06 at the
/// default rates (see [`super::calibrate_integration_time`]).
pub const DEFAULT_INTEGRATION_TIME_S: f64 = 1.07;

const HOUR_S: f64 = 3600.0;
const DAY_S: f64 = 24.0 * HOUR_S;

impl Default for ScenarioConfig {
    fn default() -> Self {
        let orbit = OrbitProfile {
            full_sun_intervals: vec![(5.0 * DAY_S, 5.0 * DAY_S + 100.0 * HOUR_S)],
            ..OrbitProfile::default()
        };
        Self {
            seed: 1,
            source: SourceConfig::default(),
            visibility_hv: 0.975,
            visibility_da: 0.88,
            tilt_detuning_urad: 0.0,
            pump_power_mw: 17.0,
            // 2200 detected pairs/s at 17 mW with the default layout and detectors
            brightness_pairs_per_s_per_mw: 11_770.0,
            layout: OpticalLayout::default(),
            geometric_efficiency: None,
            geometry_samples: 1_000_000,
            detector: DetectorConfig::default(),
            coincidence_window_ns: CoincidenceWindow::DEFAULT_NS,
            singles_signal_hz: 350_000.0,
            singles_idler_hz: 350_000.0,
            orbit,
            heater: HeaterConfig::default(),
            thermal_dt_s: MAX_STEP_S,
            initial_temperature_c: Some(18.0),
            operating_temperature_c: 17.5,
            mode_hop: ModeHopSource::Synthetic,
            laser_current_ma: None,
            fixed_arm: Arm::Signal,
            sweep_start_deg: 22.5,
            sweep_stop_deg: 157.5,
            sweep_step_deg: 11.25,
            lcpr_span_limit_deg: 150.0,
            integration_time_s: DEFAULT_INTEGRATION_TIME_S,
            chsh: ChshSettings::STANDARD,
            settings_offset_deg: 0.0,
            da_setting_error_deg: 0.0,
            survey_start_deg: 0.0,
            survey_stop_deg: 140.0,
            survey_step_deg: 20.0,
            survey_integration_time_s: 60.0,
            measurement_interval_s: 5400.0,
            mission_duration_s: 14.0 * DAY_S,
            output_dir: None,
        }
    }
}

fn angle_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.layout.validate()?;
        self.detector.validate()?;
        self.orbit.validate()?;
        self.heater.validate()?;
        CoincidenceWindow::new(self.coincidence_window_ns)?;
        for (name, v) in [
            ("visibility_hv", self.visibility_hv),
            ("visibility_da", self.visibility_da),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if let Some(g) = self.geometric_efficiency {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::invalid(format!("geometric efficiency {g} outside (0, 1]")));
            }
        }
        for (name, v) in [
            ("pump_power_mw", self.pump_power_mw),
            (
                "brightness_pairs_per_s_per_mw",
                self.brightness_pairs_per_s_per_mw,
            ),
            ("singles_signal_hz", self.singles_signal_hz),
            ("singles_idler_hz", self.singles_idler_hz),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        for (name, v) in [
            ("integration_time_s", self.integration_time_s),
            ("survey_integration_time_s", self.survey_integration_time_s),
            ("measurement_interval_s", self.measurement_interval_s),
            ("sweep_step_deg", self.sweep_step_deg),
            ("survey_step_deg", self.survey_step_deg),
            ("lcpr_span_limit_deg", self.lcpr_span_limit_deg),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.mission_duration_s >= 0.0) {
            return Err(Error::invalid("mission_duration_s must be ≥ 0"));
        }
        if !(self.thermal_dt_s > 0.0 && self.thermal_dt_s <= MAX_STEP_S) {
            return Err(Error::invalid(format!(
                "thermal_dt_s must lie in (0, {MAX_STEP_S}]"
            )));
        }
        if self.geometric_efficiency.is_none() && self.geometry_samples < crate::geometry::MIN_SAMPLES {
            return Err(Error::invalid("geometry_samples below the Monte Carlo minimum"));
        }
        if let Some(c) = self.laser_current_ma {
            if !(c >= 0.0) {
                return Err(Error::invalid("laser_current_ma must be ≥ 0"));
            }
        }
        Ok(())
    }

    pub fn window(&self) -> Result<CoincidenceWindow> {
        CoincidenceWindow::new(self.coincidence_window_ns)
    }

    /// Swept-arm angles of each CHSH correlation curve.
    pub fn sweep_angles(&self) -> Vec<f64> {
        angle_grid(self.sweep_start_deg, self.sweep_stop_deg, self.sweep_step_deg)
    }

    /// Swept-arm angles of each heatmap survey point.
    pub fn survey_angles(&self) -> Vec<f64> {
        angle_grid(self.survey_start_deg, self.survey_stop_deg, self.survey_step_deg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Parses a config on top of the defaults. `origin` labels errors and
    /// anchors relative map paths.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            cfg.set(key.trim(), value.trim(), origin).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Every key with its current value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of the canonical text form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>, none: &str| v.map_or(none.to_string(), |x| x.to_string());
        let s = &self.source;
        let l = &self.layout;
        let d = &self.detector;
        let o = &self.orbit;
        let h = &self.heater;
        let intervals = if o.full_sun_intervals.is_empty() {
            "none".to_string()
        } else {
            o.full_sun_intervals
                .iter()
                .map(|(a, b)| format!("{}-{}", a / HOUR_S, b / HOUR_S))
                .collect::<Vec<_>>()
                .join(",")
        };
        vec![
            ("seed", self.seed.to_string()),
            ("pump_wavelength_nm", s.pump_wavelength_nm.to_string()),
            ("pump_linewidth_mhz", s.pump_linewidth_mhz.to_string()),
            ("beam_fwhm_horizontal_um", s.beam_fwhm_horizontal_um.to_string()),
            ("beam_fwhm_vertical_um", s.beam_fwhm_vertical_um.to_string()),
            ("crystal_cut_angle_deg", s.crystal_cut_angle_deg.to_string()),
            ("crystal_length_mm", s.crystal_length_mm.to_string()),
            (
                "tilt_phase_coefficient_rad_per_urad",
                s.tilt_phase_coefficient.to_string(),
            ),
            ("nondegenerate_split_nm", s.nondegenerate_split_nm.to_string()),
            ("visibility_hv", self.visibility_hv.to_string()),
            ("visibility_da", self.visibility_da.to_string()),
            ("tilt_detuning_urad", self.tilt_detuning_urad.to_string()),
            ("pump_power_mw", self.pump_power_mw.to_string()),
            (
                "brightness_pairs_per_s_per_mw",
                self.brightness_pairs_per_s_per_mw.to_string(),
            ),
            ("crystal_refractive_index", l.crystal_refractive_index.to_string()),
            ("max_opening_angle_deg", l.max_opening_angle_deg.to_string()),
            (
                "opening_angle_distribution",
                match l.opening_angle_distribution {
                    OpeningAngleDistribution::UniformAngle => "uniform_angle",
                    OpeningAngleDistribution::UniformSolidAngle => "uniform_solid_angle",
                }
                .into(),
            ),
            ("detector_diameter_um", l.detector_diameter_um.to_string()),
            ("detector_distance_mm", l.detector_distance_mm.to_string()),
            (
                "distance_reference",
                match l.distance_reference {
                    DistanceReference::SourceCenter => "source_center",
                    DistanceReference::ExitFace => "exit_face",
                }
                .into(),
            ),
            ("wavelength_band_nm", l.wavelength_band_nm.to_string()),
            ("geometric_efficiency", opt(self.geometric_efficiency, "auto")),
            ("geometry_samples", self.geometry_samples.to_string()),
            ("detector_efficiency", d.efficiency.to_string()),
            ("dark_count_rate_hz", d.dark_count_rate_hz.to_string()),
            (
                "breakdown_voltage_slope_v_per_c",
                d.breakdown_voltage_slope_v_per_c.to_string(),
            ),
            ("breakdown_voltage_ref_v", d.breakdown_voltage_ref_v.to_string()),
            (
                "detector_reference_temperature_c",
                d.reference_temperature_c.to_string(),
            ),
            ("nominal_overvoltage_v", d.nominal_overvoltage_v.to_string()),
            (
                "untracked_efficiency_loss_per_c",
                d.untracked_efficiency_loss_per_c.to_string(),
            ),
            ("bias_tracking", d.bias_tracking.to_string()),
            ("coincidence_window_ns", self.coincidence_window_ns.to_string()),
            ("singles_signal_hz", self.singles_signal_hz.to_string()),
            ("singles_idler_hz", self.singles_idler_hz.to_string()),
            ("orbit_period_min", (o.period_s / 60.0).to_string()),
            ("ambient_min_c", o.ambient_min_c.to_string()),
            ("ambient_max_c", o.ambient_max_c.to_string()),
            ("eclipse_fraction", o.eclipse_fraction.to_string()),
            ("full_sun_ambient_c", o.full_sun_ambient_c.to_string()),
            ("full_sun_intervals_h", intervals),
            ("heater_enabled", h.enabled.to_string()),
            ("heater_power_w", h.power_w.to_string()),
            ("band_low_c", h.band_low_c.to_string()),
            ("band_high_c", h.band_high_c.to_string()),
            ("heat_on_below_c", h.heat_on_below_c.to_string()),
            ("heat_off_above_c", h.heat_off_above_c.to_string()),
            ("heater_cycle_gap_s", h.cycle_gap_s.to_string()),
            (
                "thermal_capacitance_j_per_c",
                h.thermal_capacitance_j_per_c.to_string(),
            ),
            ("thermal_conductance_w_per_c", h.conductance_w_per_c.to_string()),
            ("thermal_dt_s", self.thermal_dt_s.to_string()),
            (
                "initial_temperature_c",
                opt(self.initial_temperature_c, "ambient"),
            ),
            (
                "operating_temperature_c",
                self.operating_temperature_c.to_string(),
            ),
            (
                "mode_hop_map",
                match &self.mode_hop {
                    ModeHopSource::None => "none".into(),
                    ModeHopSource::Synthetic => "synthetic".into(),
                    ModeHopSource::File(p) => p.display().to_string(),
                },
            ),
            ("laser_current_ma", opt(self.laser_current_ma, "auto")),
            ("fixed_arm", self.fixed_arm.as_str().into()),
            ("sweep_start_deg", self.sweep_start_deg.to_string()),
            ("sweep_stop_deg", self.sweep_stop_deg.to_string()),
            ("sweep_step_deg", self.sweep_step_deg.to_string()),
            ("lcpr_span_limit_deg", self.lcpr_span_limit_deg.to_string()),
            ("integration_time_s", self.integration_time_s.to_string()),
            ("chsh_a_deg", self.chsh.a.to_string()),
            ("chsh_a_prime_deg", self.chsh.a_prime.to_string()),
            ("chsh_b_deg", self.chsh.b.to_string()),
            ("chsh_b_prime_deg", self.chsh.b_prime.to_string()),
            ("settings_offset_deg", self.settings_offset_deg.to_string()),
            ("da_setting_error_deg", self.da_setting_error_deg.to_string()),
            ("survey_start_deg", self.survey_start_deg.to_string()),
            ("survey_stop_deg", self.survey_stop_deg.to_string()),
            ("survey_step_deg", self.survey_step_deg.to_string()),
            (
                "survey_integration_time_s",
                self.survey_integration_time_s.to_string(),
            ),
            ("measurement_interval_s", self.measurement_interval_s.to_string()),
            (
                "mission_duration_h",
                (self.mission_duration_s / HOUR_S).to_string(),
            ),
            (
                "output_dir",
                self.output_dir
                    .as_ref()
                    .map_or("none".into(), |p| p.display().to_string()),
            ),
        ]
    }

    fn set(&mut self, key: &str, value: &str, origin: &Path) -> std::result::Result<(), String> {
        let num = || {
            value
                .parse::<f64>()
                .map_err(|_| format!("`{key}`: bad number `{value}`"))
        };
        let opt_num = || match value {
            "auto" => Ok(None),
            _ => num().map(Some),
        };
        let flag = || {
            value
                .parse::<bool>()
                .map_err(|_| format!("`{key}`: expected true or false, got `{value}`"))
        };
        match key {
            "seed" => self.seed = value.parse().map_err(|_| format!("`seed`: bad u64 `{value}`"))?,
            "pump_wavelength_nm" => {
                self.source.pump_wavelength_nm = num()?;
                self.layout.pump_wavelength_nm = self.source.pump_wavelength_nm;
            }
            "pump_linewidth_mhz" => self.source.pump_linewidth_mhz = num()?,
            "beam_fwhm_horizontal_um" => {
                self.source.beam_fwhm_horizontal_um = num()?;
                self.layout.beam_fwhm_horizontal_um = self.source.beam_fwhm_horizontal_um;
            }
            "beam_fwhm_vertical_um" => {
                self.source.beam_fwhm_vertical_um = num()?;
                self.layout.beam_fwhm_vertical_um = self.source.beam_fwhm_vertical_um;
            }
            "crystal_cut_angle_deg" => self.source.crystal_cut_angle_deg = num()?,
            "crystal_length_mm" => {
                self.source.crystal_length_mm = num()?;
                self.layout.crystal_length_mm = self.source.crystal_length_mm;
            }
            "tilt_phase_coefficient_rad_per_urad" => self.source.tilt_phase_coefficient = num()?,
            "nondegenerate_split_nm" => {
                self.source.nondegenerate_split_nm = num()?;
                self.layout.nondegenerate_split_nm = self.source.nondegenerate_split_nm;
            }
            "visibility_hv" => self.visibility_hv = num()?,
            "visibility_da" => self.visibility_da = num()?,
            "tilt_detuning_urad" => self.tilt_detuning_urad = num()?,
            "pump_power_mw" => self.pump_power_mw = num()?,
            "brightness_pairs_per_s_per_mw" => self.brightness_pairs_per_s_per_mw = num()?,
            "crystal_refractive_index" => self.layout.crystal_refractive_index = num()?,
            "max_opening_angle_deg" => self.layout.max_opening_angle_deg = num()?,
            "opening_angle_distribution" => {
                self.layout.opening_angle_distribution = match value {
                    "uniform_angle" => OpeningAngleDistribution::UniformAngle,
                    "uniform_solid_angle" => OpeningAngleDistribution::UniformSolidAngle,
                    _ => return Err(format!("unknown opening_angle_distribution `{value}`")),
                }
            }
            "detector_diameter_um" => {
                self.layout.detector_diameter_um = num()?;
                self.detector.active_diameter_um = self.layout.detector_diameter_um;
            }
            "detector_distance_mm" => self.layout.detector_distance_mm = num()?,
            "distance_reference" => {
                self.layout.distance_reference = match value {
                    "source_center" => DistanceReference::SourceCenter,
                    "exit_face" => DistanceReference::ExitFace,
                    _ => return Err(format!("unknown distance_reference `{value}`")),
                }
            }
            "wavelength_band_nm" => self.layout.wavelength_band_nm = num()?,
            "geometric_efficiency" => self.geometric_efficiency = opt_num()?,
            "geometry_samples" => {
                self.geometry_samples = value
                    .parse()
                    .map_err(|_| format!("`geometry_samples`: bad count `{value}`"))?
            }
            "detector_efficiency" => self.detector.efficiency = num()?,
            "dark_count_rate_hz" => self.detector.dark_count_rate_hz = num()?,
            "breakdown_voltage_slope_v_per_c" => self.detector.breakdown_voltage_slope_v_per_c = num()?,
            "breakdown_voltage_ref_v" => self.detector.breakdown_voltage_ref_v = num()?,
            "detector_reference_temperature_c" => self.detector.reference_temperature_c = num()?,
            "nominal_overvoltage_v" => self.detector.nominal_overvoltage_v = num()?,
            "untracked_efficiency_loss_per_c" => self.detector.untracked_efficiency_loss_per_c = num()?,
            "bias_tracking" => self.detector.bias_tracking = flag()?,
            "coincidence_window_ns" => self.coincidence_window_ns = num()?,
            "singles_signal_hz" => self.singles_signal_hz = num()?,
            "singles_idler_hz" => self.singles_idler_hz = num()?,
            "orbit_period_min" => self.orbit.period_s = num()? * 60.0,
            "ambient_min_c" => self.orbit.ambient_min_c = num()?,
            "ambient_max_c" => self.orbit.ambient_max_c = num()?,
            "eclipse_fraction" => self.orbit.eclipse_fraction = num()?,
            "full_sun_ambient_c" => self.orbit.full_sun_ambient_c = num()?,
            "full_sun_intervals_h" => self.orbit.full_sun_intervals = parse_intervals(value)?,
            "heater_enabled" => self.heater.enabled = flag()?,
            "heater_power_w" => self.heater.power_w = num()?,
            "band_low_c" => self.heater.band_low_c = num()?,
            "band_high_c" => self.heater.band_high_c = num()?,
            "heat_on_below_c" => self.heater.heat_on_below_c = num()?,
            "heat_off_above_c" => self.heater.heat_off_above_c = num()?,
            "heater_cycle_gap_s" => self.heater.cycle_gap_s = num()?,
            "thermal_capacitance_j_per_c" => self.heater.thermal_capacitance_j_per_c = num()?,
            "thermal_conductance_w_per_c" => self.heater.conductance_w_per_c = num()?,
            "thermal_dt_s" => self.thermal_dt_s = num()?,
            "initial_temperature_c" => {
                self.initial_temperature_c = match value {
                    "ambient" => None,
                    _ => Some(num()?),
                }
            }
            "operating_temperature_c" => self.operating_temperature_c = num()?,
            "mode_hop_map" => {
                self.mode_hop = match value {
                    "none" => ModeHopSource::None,
                    "synthetic" => ModeHopSource::Synthetic,
                    path => ModeHopSource::File(resolve(origin, path)),
                }
            }
            "laser_current_ma" => self.laser_current_ma = opt_num()?,
            "fixed_arm" => {
                self.fixed_arm = match value {
                    "signal" => Arm::Signal,
                    "idler" => Arm::Idler,
                    _ => return Err(format!("fixed_arm must be signal or idler, got `{value}`")),
                }
            }
            "sweep_start_deg" => self.sweep_start_deg = num()?,
            "sweep_stop_deg" => self.sweep_stop_deg = num()?,
            "sweep_step_deg" => self.sweep_step_deg = num()?,
            "lcpr_span_limit_deg" => self.lcpr_span_limit_deg = num()?,
            "integration_time_s" => self.integration_time_s = num()?,
            "chsh_a_deg" => self.chsh.a = num()?,
            "chsh_a_prime_deg" => self.chsh.a_prime = num()?,
            "chsh_b_deg" => self.chsh.b = num()?,
            "chsh_b_prime_deg" => self.chsh.b_prime = num()?,
            "settings_offset_deg" => self.settings_offset_deg = num()?,
            "da_setting_error_deg" => self.da_setting_error_deg = num()?,
            "survey_start_deg" => self.survey_start_deg = num()?,
            "survey_stop_deg" => self.survey_stop_deg = num()?,
            "survey_step_deg" => self.survey_step_deg = num()?,
            "survey_integration_time_s" => self.survey_integration_time_s = num()?,
            "measurement_interval_s" => self.measurement_interval_s = num()?,
            "mission_duration_h" => self.mission_duration_s = num()? * HOUR_S,
            "output_dir" => {
                self.output_dir = match value {
                    "none" => None,
                    path => Some(PathBuf::from(path)),
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

fn resolve(origin: &Path, path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    match origin.parent() {
        Some(dir) if p.is_relative() && !dir.as_os_str().is_empty() => dir.join(p),
        _ => p,
    }
}

fn parse_intervals(value: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    if value == "none" {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|part| {
            let (a, b) = part
                .trim()
                .split_once('-')
                .ok_or_else(|| format!("interval `{part}` must be `start-end` in hours"))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad interval bound `{s}`"))
            };
            Ok((parse(a)? * HOUR_S, parse(b)? * HOUR_S))
        })
        .collect()
}

impl Arm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arm::Signal => "signal",
            Arm::Idler => "idler",
        }
    }
}
