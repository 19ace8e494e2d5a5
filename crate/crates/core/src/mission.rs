//! Orbital thermal environment and heater control.
//!
//! The payload is a single lumped node with heat capacity `C` coupled to
//! the spacecraft bus (ambient) through a conductance `G`:
//!
//! ```text
//! C · dT/dt = P_heater · on − G · (T − T_ambient)
//! ```
//!
//! integrated with explicit Euler steps of at most [`MAX_STEP_S`].

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_STEP_S: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Illumination {
    Sun,
    Eclipse,
    /// Continuous illumination; no data is taken.
    FullSunPeriod,
}

impl Illumination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Illumination::Sun => "sun",
            Illumination::Eclipse => "eclipse",
            Illumination::FullSunPeriod => "full_sun_period",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitProfile {
    pub period_s: f64,
    pub ambient_min_c: f64,
    pub ambient_max_c: f64,
    /// Fraction of a normal orbit spent in eclipse.
    pub eclipse_fraction: f64,
    /// Ambient plateau during continuous illumination.
    pub full_sun_ambient_c: f64,
    /// `(start, end)` mission times in seconds.
    pub full_sun_intervals: Vec<(f64, f64)>,
}

impl Default for OrbitProfile {
    fn default() -> Self {
        Self {
            period_s: 90.0 * 60.0,
            ambient_min_c: -5.0,
            ambient_max_c: 10.0,
            eclipse_fraction: 0.38,
            full_sun_ambient_c: 21.0,
            full_sun_intervals: Vec::new(),
        }
    }
}

impl OrbitProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_s > 0.0) {
            return Err(Error::invalid("orbit period must be > 0"));
        }
        if !(self.ambient_min_c <= self.ambient_max_c) {
            return Err(Error::invalid("ambient_min_c must not exceed ambient_max_c"));
        }
        if !(0.0..=1.0).contains(&self.eclipse_fraction) {
            return Err(Error::invalid("eclipse fraction outside [0, 1]"));
        }
        if self.full_sun_intervals.iter().any(|&(a, b)| !(a >= 0.0 && b > a)) {
            return Err(Error::invalid("full-sun intervals must satisfy 0 ≤ start < end"));
        }
        Ok(())
    }

    pub fn in_full_sun(&self, t_s: f64) -> bool {
        self.full_sun_intervals.iter().any(|&(a, b)| t_s >= a && t_s < b)
    }

    /// End of the most recent full-sun interval that finished at or before `t_s`.
    pub fn last_full_sun_end(&self, t_s: f64) -> Option<f64> {
        self.full_sun_intervals
            .iter()
            .map(|&(_, b)| b)
            .filter(|&b| b <= t_s)
            .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.max(b))))
    }

    fn orbit_phase(&self, t_s: f64) -> f64 {
        (t_s / self.period_s).rem_euclid(1.0)
    }

    /// Eclipse fraction of the orbit at `t_s`: zero during full sun.
    pub fn eclipse_fraction_at(&self, t_s: f64) -> f64 {
        if self.in_full_sun(t_s) {
            0.0
        } else {
            self.eclipse_fraction
        }
    }

    pub fn illumination(&self, t_s: f64) -> Illumination {
        if self.in_full_sun(t_s) {
            return Illumination::FullSunPeriod;
        }
        // The sinusoidal ambient peaks at phase 0.25 and bottoms at 0.75;
        // the eclipse is centred on the minimum.
        let half = self.eclipse_fraction / 2.0;
        let phase = self.orbit_phase(t_s);
        if (phase - 0.75).abs() <= half {
            Illumination::Eclipse
        } else {
            Illumination::Sun
        }
    }
}

/// Bus temperature seen by the payload.
pub fn ambient_temperature(t_s: f64, profile: &OrbitProfile) -> Result<f64> {
    if !(t_s >= 0.0) {
        return Err(Error::invalid(format!("mission time {t_s} s must be ≥ 0")));
    }
    if profile.in_full_sun(t_s) {
        return Ok(profile.full_sun_ambient_c);
    }
    let mid = (profile.ambient_min_c + profile.ambient_max_c) / 2.0;
    let amp = (profile.ambient_max_c - profile.ambient_min_c) / 2.0;
    Ok(mid + amp * (TAU * t_s / profile.period_s).sin())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaterConfig {
    pub enabled: bool,
    pub power_w: f64,
    pub band_low_c: f64,
    pub band_high_c: f64,
    /// Heater switches on below this temperature.
    pub heat_on_below_c: f64,
    /// Heater switches off at or above this temperature.
    pub heat_off_above_c: f64,
    /// Minimum off time between heating cycles.
    pub cycle_gap_s: f64,
    pub thermal_capacitance_j_per_c: f64,
    pub conductance_w_per_c: f64,
}

impl Default for HeaterConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            power_w: 2.5,
            band_low_c: 15.0,
            band_high_c: 28.0,
            heat_on_below_c: 17.0,
            heat_off_above_c: 20.0,
            cycle_gap_s: 120.0,
            thermal_capacitance_j_per_c: 900.0,
            conductance_w_per_c: 0.15,
        }
    }
}

impl HeaterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.power_w >= 0.0) {
            return Err(Error::invalid("heater power must be ≥ 0"));
        }
        if !(self.band_low_c < self.band_high_c) {
            return Err(Error::invalid("band_low_c must be below band_high_c"));
        }
        if !(self.heat_on_below_c < self.heat_off_above_c && self.heat_off_above_c <= self.band_high_c) {
            return Err(Error::invalid(
                "heater thresholds must satisfy heat_on_below < heat_off_above ≤ band_high",
            ));
        }
        if !(self.cycle_gap_s >= 0.0)
            || !(self.thermal_capacitance_j_per_c > 0.0)
            || !(self.conductance_w_per_c >= 0.0)
        {
            return Err(Error::invalid(
                "cycle gap, capacitance and conductance must be non-negative",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub time_s: f64,
    pub payload_temperature_c: f64,
    pub heater_on: bool,
    pub illumination: Illumination,
    /// When the heater last switched off; gates the next cycle.
    pub last_heater_off_s: Option<f64>,
}

impl ThermalState {
    pub fn new(time_s: f64, payload_temperature_c: f64, illumination: Illumination) -> Self {
        Self {
            time_s,
            payload_temperature_c,
            heater_on: false,
            illumination,
            last_heater_off_s: None,
        }
    }
}

/// Advances one Euler step with the current heater status, then applies the
/// hysteresis controller with its mandatory off gap.
pub fn heater_step(
    state: &ThermalState,
    config: &HeaterConfig,
    dt_s: f64,
    ambient_c: f64,
) -> Result<ThermalState> {
    if !(dt_s > 0.0 && dt_s <= MAX_STEP_S) {
        return Err(Error::invalid(format!(
            "time step {dt_s} s outside (0, {MAX_STEP_S}]"
        )));
    }
    let heating = if state.heater_on { config.power_w } else { 0.0 };
    let flow = heating - config.conductance_w_per_c * (state.payload_temperature_c - ambient_c);
    let t_next = state.payload_temperature_c + dt_s * flow / config.thermal_capacitance_j_per_c;
    let time = state.time_s + dt_s;

    let mut next = ThermalState {
        time_s: time,
        payload_temperature_c: t_next,
        ..*state
    };
    if state.heater_on {
        if !config.enabled || t_next >= config.heat_off_above_c {
            next.heater_on = false;
            next.last_heater_off_s = Some(time);
        }
    } else {
        let gap_ok = state
            .last_heater_off_s
            .is_none_or(|off| time - off >= config.cycle_gap_s);
        if config.enabled && t_next < config.heat_on_below_c && gap_ok {
            next.heater_on = true;
        }
    }
    Ok(next)
}

/// True when the payload sits inside the safe band outside a full-sun period.
pub fn can_operate(state: &ThermalState, config: &HeaterConfig) -> bool {
    state.illumination != Illumination::FullSunPeriod
        && state.payload_temperature_c >= config.band_low_c
        && state.payload_temperature_c <= config.band_high_c
}

/// Thermal trace sample with the ambient that drove it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub state: ThermalState,
    pub ambient_c: f64,
}

/// Stepper that owns the orbit, heater and current state.
#[derive(Debug, Clone)]
pub struct ThermalSimulator {
    profile: OrbitProfile,
    heater: HeaterConfig,
    dt_s: f64,
    state: ThermalState,
}

impl ThermalSimulator {
    /// Starts at `t = 0` with the payload at the ambient temperature.
    pub fn new(profile: OrbitProfile, heater: HeaterConfig, dt_s: f64) -> Result<Self> {
        profile.validate()?;
        heater.validate()?;
        if !(dt_s > 0.0 && dt_s <= MAX_STEP_S) {
            return Err(Error::invalid(format!(
                "time step {dt_s} s outside (0, {MAX_STEP_S}]"
            )));
        }
        let t0 = ambient_temperature(0.0, &profile)?;
        let state = ThermalState::new(0.0, t0, profile.illumination(0.0));
        Ok(Self {
            profile,
            heater,
            dt_s,
            state,
        })
    }

    pub fn with_initial_temperature(mut self, temperature_c: f64) -> Self {
        self.state.payload_temperature_c = temperature_c;
        self
    }

    pub fn state(&self) -> &ThermalState {
        &self.state
    }

    pub fn profile(&self) -> &OrbitProfile {
        &self.profile
    }

    pub fn heater(&self) -> &HeaterConfig {
        &self.heater
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn step(&mut self) -> Result<TraceSample> {
        let ambient = ambient_temperature(self.state.time_s, &self.profile)?;
        let mut next = heater_step(&self.state, &self.heater, self.dt_s, ambient)?;
        next.illumination = self.profile.illumination(next.time_s);
        self.state = next;
        Ok(TraceSample {
            state: next,
            ambient_c: ambient,
        })
    }

    pub fn run(&mut self, duration_s: f64) -> Result<Vec<TraceSample>> {
        let steps = (duration_s / self.dt_s).ceil() as usize;
        (0..steps).map(|_| self.step()).collect()
    }
}

/// `(on, off)` times of each heating cycle in a trace. An interval still
/// open at the end of the trace ends at the last sample.
pub fn heater_on_intervals(trace: &[TraceSample]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = None;
    for s in trace {
        match (s.state.heater_on, start) {
            (true, None) => start = Some(s.state.time_s),
            (false, Some(t0)) => {
                out.push((t0, s.state.time_s));
                start = None;
            }
            _ => {}
        }
    }
    if let (Some(t0), Some(last)) = (start, trace.last()) {
        out.push((t0, last.state.time_s));
    }
    out
}

/// Smallest off gap between consecutive heating cycles, if there are two.
pub fn min_off_gap(trace: &[TraceSample]) -> Option<f64> {
    heater_on_intervals(trace)
        .windows(2)
        .map(|w| w[1].0 - w[0].1)
        .reduce(f64::min)
}

pub const TRACE_HEADER: &str = "time_s,ambient_C,payload_C,heater_on,illumination";

pub fn write_trace<W: Write>(mut out: W, trace: &[TraceSample]) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for s in trace {
        writeln!(
            out,
            "{},{:.4},{:.4},{},{}",
            s.state.time_s,
            s.ambient_c,
            s.state.payload_temperature_c,
            u8::from(s.state.heater_on),
            s.state.illumination.as_str()
        )?;
    }
    Ok(())
}
