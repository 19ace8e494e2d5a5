use crate::detection::{effective_efficiency, CoincidenceWindow};
use crate::geometry::estimate_geometric_efficiency;
use crate::polarization::{make_noisy_state, TwoPhotonState};
use crate::source::{
    optimal_current, pair_rate, visibility_at, visibility_vs_detuning, LaserOperatingPoint, ModeHopMap,
    SyntheticLaser,
};
use crate::{seeds, Result};

use super::config::{ModeHopSource, ScenarioConfig};

/// Payload temperature and laser current for one measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditions {
    pub temperature_c: f64,
    /// `None` picks the optimal current from the mode-hop map, if any.
    pub laser_current_ma: Option<f64>,
}

/// Everything needed to turn analyzer probabilities into count rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub laser_current_ma: Option<f64>,
    pub pump_power_mw: f64,
    /// Pairs per second reaching both analyzers and detected when transmitted.
    pub pair_rate_hz: f64,
    pub singles_signal_hz: f64,
    pub singles_idler_hz: f64,
    pub visibility_hv: f64,
    pub visibility_da: f64,
}

/// A validated scenario with its derived, run-independent quantities:
/// geometric efficiency and the resolved mode-hop map.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ScenarioConfig,
    geometric_efficiency: f64,
    map: Option<ModeHopMap>,
    window: CoincidenceWindow,
}

impl Experiment {
    pub fn prepare(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let map = match &config.mode_hop {
            ModeHopSource::None => None,
            ModeHopSource::Synthetic => Some(SyntheticLaser::default().default_map()?),
            ModeHopSource::File(path) => Some(ModeHopMap::load(path)?),
        };
        let geometric_efficiency = match config.geometric_efficiency {
            Some(g) => g,
            None => {
                let seed = seeds::derive(config.seed, "geometric-efficiency", 0);
                estimate_geometric_efficiency(&config.layout, config.geometry_samples, seed)?.efficiency
            }
        };
        let window = config.window()?;
        Ok(Self {
            config,
            geometric_efficiency,
            map,
            window,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn geometric_efficiency(&self) -> f64 {
        self.geometric_efficiency
    }

    pub fn mode_hop_map(&self) -> Option<&ModeHopMap> {
        self.map.as_ref()
    }

    pub fn window(&self) -> CoincidenceWindow {
        self.window
    }

    /// Replaces the master seed; derived quantities are kept.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.seed = seed;
        self
    }

    /// The configured operating temperature and laser current.
    pub fn nominal_conditions(&self) -> Conditions {
        Conditions {
            temperature_c: self.config.operating_temperature_c,
            laser_current_ma: self.config.laser_current_ma,
        }
    }

    pub fn rates(&self, conditions: Conditions) -> Result<RateModel> {
        let cfg = &self.config;
        let t = conditions.temperature_c;
        let current = match (conditions.laser_current_ma, &self.map) {
            (Some(c), _) => Some(c),
            (None, Some(map)) => Some(optimal_current(t, map)?),
            (None, None) => None,
        };
        let (pump_power_mw, base_da) = match (&self.map, current) {
            (Some(map), Some(c)) => (
                map.power_curve().power_at(c),
                visibility_at(LaserOperatingPoint::new(c, t)?, map)?,
            ),
            _ => (cfg.pump_power_mw, cfg.visibility_da),
        };
        let tilt = visibility_vs_detuning(cfg.tilt_detuning_urad, &cfg.source)?;
        let visibility_da = (base_da * tilt).min(cfg.visibility_hv);

        let eta = effective_efficiency(t, &cfg.detector);
        let generated = pair_rate(pump_power_mw, cfg.brightness_pairs_per_s_per_mw)?;
        // singles are configured at the reference pump power and efficiency
        let singles_scale = if cfg.pump_power_mw > 0.0 {
            pump_power_mw / cfg.pump_power_mw * eta / cfg.detector.efficiency
        } else {
            0.0
        };
        Ok(RateModel {
            laser_current_ma: current,
            pump_power_mw,
            pair_rate_hz: generated * self.geometric_efficiency * eta * eta,
            singles_signal_hz: cfg.singles_signal_hz * singles_scale,
            singles_idler_hz: cfg.singles_idler_hz * singles_scale,
            visibility_hv: cfg.visibility_hv,
            visibility_da,
        })
    }

    pub fn state(&self, rates: &RateModel) -> Result<TwoPhotonState> {
        make_noisy_state(rates.visibility_hv, rates.visibility_da)
    }
}
