use serde::{Deserialize, Serialize};

use crate::mission::{can_operate, min_off_gap, Illumination, ThermalSimulator, TraceSample};
use crate::{seeds, Result};

use super::chsh::{run_chsh, ChshProtocol};
use super::experiment::{Conditions, Experiment};
use super::stats::{welch_t_test, WelchResult};

/// One CHSH measurement taken during a mission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionRow {
    pub time_s: f64,
    pub temperature_c: f64,
    pub illumination: Illumination,
    /// `NaN` without a mode-hop map.
    pub laser_current_ma: f64,
    pub pump_power_mw: f64,
    pub s: f64,
    pub sigma_s: f64,
    pub v_h: f64,
    pub v_v: f64,
    pub v_d: f64,
    pub v_a: f64,
    pub pair_rate_hz: f64,
    pub singles_signal_hz: f64,
    pub singles_idler_hz: f64,
    /// Taken after the end of a full-sun period.
    pub post_blackout: bool,
}

impl MissionRow {
    pub const CSV_HEADER: &'static str = "time_s,temperature_C,illumination,laser_current_mA,pump_power_mW,\
S,sigma_S,V_H,V_V,V_D,V_A,pair_rate_hz,singles_signal_hz,singles_idler_hz,post_blackout";
}

#[derive(Debug, Clone)]
pub struct MissionReport {
    pub rows: Vec<MissionRow>,
    pub trace: Vec<TraceSample>,
    /// Scheduled measurements postponed because the payload was not operable.
    pub skipped_epochs: usize,
    /// Measurements that failed (logged, not fatal).
    pub failed_measurements: usize,
}

impl MissionReport {
    pub fn max_temperature_c(&self) -> f64 {
        self.trace
            .iter()
            .map(|s| s.state.payload_temperature_c)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_off_gap_s(&self) -> Option<f64> {
        min_off_gap(&self.trace)
    }

    /// S values before and after the first full-sun period.
    pub fn s_by_blackout(&self) -> (Vec<f64>, Vec<f64>) {
        let pre = self
            .rows
            .iter()
            .filter(|r| !r.post_blackout)
            .map(|r| r.s)
            .collect();
        let post = self
            .rows
            .iter()
            .filter(|r| r.post_blackout)
            .map(|r| r.s)
            .collect();
        (pre, post)
    }

    /// Welch test of pre- against post-blackout S, when both groups exist.
    pub fn blackout_comparison(&self) -> Option<WelchResult> {
        let (pre, post) = self.s_by_blackout();
        welch_t_test(&pre, &post).ok()
    }
}

/// Steps the thermal model for `duration_s` and takes a CHSH measurement
/// every measurement interval while the payload is operable. A measurement
/// that falls due while inoperable is taken at the first operable step.
///
/// Measurements are treated as instantaneous on the thermal time scale.
/// Measurement `k` draws from stream `k` derived from the master seed.
pub fn mission_run(experiment: &Experiment, duration_s: f64) -> Result<MissionReport> {
    let cfg = experiment.config();
    let protocol = ChshProtocol::from_config(cfg);
    let mut sim = ThermalSimulator::new(cfg.orbit.clone(), cfg.heater.clone(), cfg.thermal_dt_s)?;
    if let Some(t0) = cfg.initial_temperature_c {
        sim = sim.with_initial_temperature(t0);
    }
    let steps = (duration_s / cfg.thermal_dt_s).ceil() as usize;
    let mut trace = Vec::with_capacity(steps);
    let mut rows = Vec::new();
    let mut next_due = 0.0;
    let mut waiting = false;
    let mut skipped = 0;
    let mut failed = 0;
    let mut index = 0u64;

    for _ in 0..steps {
        let sample = sim.step()?;
        trace.push(sample);
        let state = sample.state;
        if state.time_s < next_due {
            continue;
        }
        if !can_operate(&state, &cfg.heater) {
            if !waiting {
                skipped += 1;
                waiting = true;
                log::debug!(
                    "t = {:.0} s: not operable at {:.2} °C ({})",
                    state.time_s,
                    state.payload_temperature_c,
                    state.illumination.as_str()
                );
            }
            continue;
        }
        waiting = false;
        next_due = state.time_s + cfg.measurement_interval_s;
        let conditions = Conditions {
            temperature_c: state.payload_temperature_c,
            laser_current_ma: cfg.laser_current_ma,
        };
        let mut rng = seeds::derived_rng(cfg.seed, "mission", index);
        index += 1;
        match run_chsh(experiment, &protocol, conditions, &mut rng) {
            Ok(run) => {
                let v = run.visibilities;
                rows.push(MissionRow {
                    time_s: state.time_s,
                    temperature_c: state.payload_temperature_c,
                    illumination: state.illumination,
                    laser_current_ma: run.rates.laser_current_ma.unwrap_or(f64::NAN),
                    pump_power_mw: run.rates.pump_power_mw,
                    s: run.measurement.s,
                    sigma_s: run.measurement.sigma_s,
                    v_h: v.v_h,
                    v_v: v.v_v,
                    v_d: v.v_d,
                    v_a: v.v_a,
                    pair_rate_hz: run.rates.pair_rate_hz,
                    singles_signal_hz: run.rates.singles_signal_hz,
                    singles_idler_hz: run.rates.singles_idler_hz,
                    post_blackout: cfg.orbit.last_full_sun_end(state.time_s).is_some(),
                });
            }
            Err(e) => {
                failed += 1;
                log::warn!("t = {:.0} s: measurement failed: {e}", state.time_s);
            }
        }
    }
    Ok(MissionReport {
        rows,
        trace,
        skipped_epochs: skipped,
        failed_measurements: failed,
    })
}
