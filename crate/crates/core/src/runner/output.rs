//! Result writers. Column orders are fixed; headers are the `*_HEADER`
//! constants next to each writer.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::polarization::VisibilitySet;
use crate::source::ModeHopMap;
use crate::Result;

use super::chsh::ChshMeasurement;
use super::config::ScenarioConfig;
use super::mission_run::MissionRow;
use super::sweep::SweepCurve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// SHA-256 of the canonical config text.
    pub config_hash: String,
    pub version: String,
}

impl Provenance {
    pub fn of(config: &ScenarioConfig) -> Self {
        Self {
            seed: config.seed,
            config_hash: config.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Machine-readable run summary. Fields a command does not produce are null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub s: Option<f64>,
    pub sigma_s: Option<f64>,
    pub visibilities: Option<VisibilitySet>,
    pub geometric_efficiency: Option<f64>,
    /// Command-specific extras.
    pub details: serde_json::Value,
    pub provenance: Provenance,
}

impl Summary {
    pub fn new(command: &str, config: &ScenarioConfig) -> Self {
        Self {
            command: command.to_string(),
            s: None,
            sigma_s: None,
            visibilities: None,
            geometric_efficiency: None,
            details: serde_json::Value::Object(Default::default()),
            provenance: Provenance::of(config),
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// Any serializable table as a JSON array.
pub fn write_json<W: Write, T: Serialize>(mut out: W, rows: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_mission_rows<W: Write>(mut out: W, rows: &[MissionRow]) -> Result<()> {
    writeln!(out, "{}", MissionRow::CSV_HEADER)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.time_s,
            r.temperature_c,
            r.illumination.as_str(),
            r.laser_current_ma,
            r.pump_power_mw,
            r.s,
            r.sigma_s,
            r.v_h,
            r.v_v,
            r.v_d,
            r.v_a,
            r.pair_rate_hz,
            r.singles_signal_hz,
            r.singles_idler_hz,
            r.post_blackout
        )?;
    }
    Ok(())
}

pub const CHSH_POINTS_HEADER: &str = "e_index,fixed_deg,swept_deg,corrected_counts,variance,interpolated";

pub fn write_chsh_points<W: Write>(mut out: W, m: &ChshMeasurement) -> Result<()> {
    writeln!(out, "{CHSH_POINTS_HEADER}")?;
    for (i, p) in m.points.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            i / 4,
            p.fixed_deg,
            p.swept_deg,
            p.counts,
            p.variance,
            p.interpolated
        )?;
    }
    Ok(())
}

pub const FIT_HEADER: &str = "fixed_arm,fixed_setting,amplitude_hz,visibility,phase_offset_deg,\
sigma_amplitude_hz,sigma_visibility,sigma_phase_deg,residual_norm";

pub fn write_fits<W: Write>(mut out: W, curves: &[SweepCurve]) -> Result<()> {
    writeln!(out, "{FIT_HEADER}")?;
    for c in curves {
        let f = &c.fit;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.plan.fixed_arm.as_str(),
            c.plan.fixed_setting.label(),
            f.amplitude,
            f.visibility,
            f.phase_offset_deg,
            f.sigma_amplitude,
            f.sigma_visibility,
            f.sigma_phase_deg,
            f.residual_norm
        )?;
    }
    Ok(())
}

pub const MAP_HEADER: &str = "current_mA,temperature_C,visibility";

/// Long-form map table, one row per grid point.
pub fn write_map_csv<W: Write>(mut out: W, map: &ModeHopMap) -> Result<()> {
    writeln!(out, "{MAP_HEADER}")?;
    for (ti, t) in map.temperatures().iter().enumerate() {
        for (ci, c) in map.currents().iter().enumerate() {
            writeln!(out, "{c},{t},{}", map.value(ti, ci))?;
        }
    }
    Ok(())
}
