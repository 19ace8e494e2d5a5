//! CHSH extraction from four correlation curves.
//!
//! The fixed arm holds `a`, `a + 90°`, `a′` and `a′ + 90°`; the swept arm
//! is read at `b`, `b + 90°`, `b′` and `b′ + 90°` (each shifted by the
//! settings offset). Each `E` combines four points:
//!
//! ```text
//! E(x, y) = (N(x, y) + N(x⊥, y⊥) − N(x, y⊥) − N(x⊥, y)) / Σ
//! S = E(a, b) + E(a, b′) + E(a′, b) − E(a′, b′)
//! ```
//!
//! `N` are accidental-corrected counts. Uncertainties are first order in
//! the Poisson variance of each raw count plus that of the subtracted
//! accidental estimate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detection::{CoincidenceWindow, CountRecord, RateInputs};
use crate::polarization::{reduce_angle, ChshSettings, VisibilitySet};
use crate::{Error, Result};

use super::config::ScenarioConfig;
use super::experiment::{Conditions, Experiment, RateModel};
use super::fit::fit_corrected_curve;
use super::sweep::{point_rates, run_sweep_at, Arm, FixedSetting, SweepCurve, SweepPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshProtocol {
    pub fixed_arm: Arm,
    pub swept_angles_deg: Vec<f64>,
    pub integration_time_s: f64,
    pub lcpr_span_limit_deg: f64,
    pub settings: ChshSettings,
    pub settings_offset_deg: f64,
}

impl ChshProtocol {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            fixed_arm: cfg.fixed_arm,
            swept_angles_deg: cfg.sweep_angles(),
            integration_time_s: cfg.integration_time_s,
            lcpr_span_limit_deg: cfg.lcpr_span_limit_deg,
            settings: cfg.chsh,
            settings_offset_deg: cfg.settings_offset_deg,
        }
    }

    pub fn with_integration_time(mut self, seconds: f64) -> Self {
        self.integration_time_s = seconds;
        self
    }

    /// Fixed-arm settings `a, a⊥, a′, a′⊥`; `a` and `a′` must be basis
    /// angles from different bases.
    pub fn fixed_settings(&self) -> Result<[FixedSetting; 4]> {
        let basis = |deg: f64| {
            FixedSetting::from_angle(deg)
                .ok_or_else(|| Error::MissingSetting(format!("fixed-arm angle {deg}° is not H, V, D or A")))
        };
        let s = self.settings;
        let out = [
            basis(s.a)?,
            basis(s.a + 90.0)?,
            basis(s.a_prime)?,
            basis(s.a_prime + 90.0)?,
        ];
        if out[0].is_diagonal() == out[2].is_diagonal() {
            return Err(Error::MissingSetting(
                "a and a′ must come from different bases".into(),
            ));
        }
        Ok(out)
    }

    pub fn plans(&self) -> Result<Vec<SweepPlan>> {
        self.fixed_settings()?
            .into_iter()
            .map(|fixed| {
                SweepPlan::new(
                    self.fixed_arm,
                    fixed,
                    self.swept_angles_deg.clone(),
                    self.integration_time_s,
                    self.lcpr_span_limit_deg,
                )
            })
            .collect()
    }
}

/// One of the 16 counts entering S.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshPoint {
    pub fixed_deg: f64,
    pub swept_deg: f64,
    /// Accidental-corrected counts.
    pub counts: f64,
    pub variance: f64,
    /// Read from the curve fit rather than a measured record.
    pub interpolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshMeasurement {
    pub settings: ChshSettings,
    pub settings_offset_deg: f64,
    /// Measured records behind the points, in point order.
    pub records: Vec<CountRecord>,
    /// Four points per E-value: `(x, y)`, `(x⊥, y⊥)`, `(x, y⊥)`, `(x⊥, y)`.
    pub points: Vec<ChshPoint>,
    /// `E(a,b), E(a,b′), E(a′,b), E(a′,b′)`.
    pub e_values: [f64; 4],
    pub e_sigmas: [f64; 4],
    pub s: f64,
    pub sigma_s: f64,
}

fn same_angle(a: f64, b: f64) -> bool {
    let d = (reduce_angle(a) - reduce_angle(b)).abs();
    d < 1e-6 || 180.0 - d < 1e-6
}

fn curve_for(curves: &[SweepCurve], fixed_deg: f64) -> Result<&SweepCurve> {
    curves
        .iter()
        .find(|c| same_angle(c.plan.fixed_setting.angle_deg(), fixed_deg))
        .ok_or_else(|| Error::MissingSetting(format!("no curve with the fixed arm at {fixed_deg}°")))
}

fn read_point(
    curve: &SweepCurve,
    swept_deg: f64,
    window: CoincidenceWindow,
) -> Result<(ChshPoint, Option<CountRecord>)> {
    let fixed_deg = curve.plan.fixed_setting.angle_deg();
    let swept_deg = reduce_angle(swept_deg);
    if let Some(r) = curve
        .records
        .iter()
        .find(|r| same_angle(curve.plan.swept_angle_of(&r.setting), swept_deg))
    {
        let acc = r.expected_accidentals(window);
        let acc_var = acc * acc * (inv(r.singles_signal) + inv(r.singles_idler));
        let point = ChshPoint {
            fixed_deg,
            swept_deg,
            counts: r.coincidences as f64 - acc,
            variance: (r.coincidences as f64).max(1.0) + acc_var,
            interpolated: false,
        };
        return Ok((point, Some(*r)));
    }

    // the fitted model is 180°-periodic, so it answers for any angle
    let n = curve.records.len() as f64;
    let t = curve.plan.integration_time_s;
    let mean_acc = curve
        .records
        .iter()
        .map(|r| r.expected_accidentals(window))
        .sum::<f64>()
        / n;
    let counts = curve.fit.eval(swept_deg) * t;
    Ok((
        ChshPoint {
            fixed_deg,
            swept_deg,
            counts,
            variance: (counts + mean_acc).max(1.0),
            interpolated: true,
        },
        None,
    ))
}

fn inv(n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        1.0 / n as f64
    }
}

/// `E` and its first-order standard error from the four points.
fn correlation(points: &[ChshPoint; 4]) -> Result<(f64, f64)> {
    let signs = [1.0, 1.0, -1.0, -1.0];
    let total: f64 = points.iter().map(|p| p.counts).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateData(
            "corrected counts of a correlation sum to ≤ 0".into(),
        ));
    }
    let e = points.iter().zip(signs).map(|(p, s)| s * p.counts).sum::<f64>() / total;
    let var = points
        .iter()
        .zip(signs)
        .map(|(p, s)| ((s - e) / total).powi(2) * p.variance)
        .sum::<f64>();
    Ok((e, var.sqrt()))
}

/// Builds S from four fitted curves.
pub fn extract_chsh(
    curves: &[SweepCurve],
    settings: ChshSettings,
    settings_offset_deg: f64,
    window: CoincidenceWindow,
) -> Result<ChshMeasurement> {
    let pairs = [
        (settings.a, settings.b),
        (settings.a, settings.b_prime),
        (settings.a_prime, settings.b),
        (settings.a_prime, settings.b_prime),
    ];
    let mut points = Vec::with_capacity(16);
    let mut records = Vec::with_capacity(16);
    let mut e_values = [0.0; 4];
    let mut e_sigmas = [0.0; 4];
    for (k, &(x, y)) in pairs.iter().enumerate() {
        let y = y + settings_offset_deg;
        let along = curve_for(curves, x)?;
        let across = curve_for(curves, x + 90.0)?;
        let mut quad = [ChshPoint {
            fixed_deg: 0.0,
            swept_deg: 0.0,
            counts: 0.0,
            variance: 0.0,
            interpolated: false,
        }; 4];
        for (slot, (curve, swept)) in [(along, y), (across, y + 90.0), (along, y + 90.0), (across, y)]
            .into_iter()
            .enumerate()
        {
            let (p, r) = read_point(curve, swept, window)?;
            quad[slot] = p;
            records.extend(r);
        }
        let (e, s) = correlation(&quad)?;
        e_values[k] = e;
        e_sigmas[k] = s;
        points.extend(quad);
    }
    let s = e_values[0] + e_values[1] + e_values[2] - e_values[3];
    let sigma_s = e_sigmas.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(ChshMeasurement {
        settings,
        settings_offset_deg,
        records,
        points,
        e_values,
        e_sigmas,
        s,
        sigma_s,
    })
}

/// A full CHSH measurement: four sweeps, their fits and the extracted S.
#[derive(Debug, Clone, PartialEq)]
pub struct ChshRun {
    pub conditions: Conditions,
    pub rates: RateModel,
    pub curves: Vec<SweepCurve>,
    pub measurement: ChshMeasurement,
    /// Accidental-corrected fitted visibilities of the H, V, D and A curves.
    pub visibilities: VisibilitySet,
}

pub fn run_chsh<R: Rng + ?Sized>(
    experiment: &Experiment,
    protocol: &ChshProtocol,
    conditions: Conditions,
    rng: &mut R,
) -> Result<ChshRun> {
    let window = experiment.window();
    let rates = experiment.rates(conditions)?;
    // pin the current so all four curves share one operating point
    let conditions = Conditions {
        laser_current_ma: rates.laser_current_ma,
        ..conditions
    };
    let curves = protocol
        .plans()?
        .into_iter()
        .map(|plan| {
            let records = run_sweep_at(experiment, &plan, conditions, rng)?;
            let fit = fit_corrected_curve(&records, window)?;
            Ok(SweepCurve { plan, records, fit })
        })
        .collect::<Result<Vec<_>>>()?;
    let measurement = extract_chsh(&curves, protocol.settings, protocol.settings_offset_deg, window)?;
    let v = |s: FixedSetting| -> Result<f64> {
        Ok(curves
            .iter()
            .find(|c| c.plan.fixed_setting == s)
            .ok_or_else(|| Error::MissingSetting(format!("no {} curve", s.label())))?
            .fit
            .visibility)
    };
    let visibilities = VisibilitySet::new(
        v(FixedSetting::H)?,
        v(FixedSetting::V)?,
        v(FixedSetting::D)?,
        v(FixedSetting::A)?,
    )?;
    Ok(ChshRun {
        conditions,
        rates,
        curves,
        measurement,
        visibilities,
    })
}

/// Expected `(raw counts, accidental counts)` at one swept angle of a plan.
fn expected_counts(
    experiment: &Experiment,
    plan: &SweepPlan,
    rates: &RateModel,
    swept_deg: f64,
) -> Result<(f64, f64, f64)> {
    let mut single = plan.clone();
    single.swept_angles_deg = vec![swept_deg];
    let (
        _,
        RateInputs {
            true_coincidence_hz,
            singles_signal_hz,
            singles_idler_hz,
        },
    ) = point_rates(experiment, &single, rates)?[0];
    let dark = experiment.config().detector.dark_count_rate_hz;
    let t = plan.integration_time_s;
    let s1 = (singles_signal_hz + dark) * t;
    let s2 = (singles_idler_hz + dark) * t;
    let acc = s1 * s2 * experiment.window().tau_s() / t;
    Ok((true_coincidence_hz * t, acc, acc * acc * (1.0 / s1 + 1.0 / s2)))
}

/// Propagated sigma_S expected for a protocol, from mean counts.
pub fn expected_sigma_s(
    experiment: &Experiment,
    protocol: &ChshProtocol,
    conditions: Conditions,
) -> Result<f64> {
    let rates = experiment.rates(conditions)?;
    let plans = protocol.plans()?;
    let plan_for = |deg: f64| {
        plans
            .iter()
            .find(|p| same_angle(p.fixed_setting.angle_deg(), deg))
            .ok_or_else(|| Error::MissingSetting(format!("no plan at {deg}°")))
    };
    let st = protocol.settings;
    let off = protocol.settings_offset_deg;
    let mut var_s = 0.0;
    for (x, y) in [
        (st.a, st.b),
        (st.a, st.b_prime),
        (st.a_prime, st.b),
        (st.a_prime, st.b_prime),
    ] {
        let y = y + off;
        let mut quad = [ChshPoint {
            fixed_deg: 0.0,
            swept_deg: 0.0,
            counts: 0.0,
            variance: 0.0,
            interpolated: false,
        }; 4];
        for (slot, (fx, sy)) in [(x, y), (x + 90.0, y + 90.0), (x, y + 90.0), (x + 90.0, y)]
            .into_iter()
            .enumerate()
        {
            let (signal, acc, acc_var) = expected_counts(experiment, plan_for(fx)?, &rates, sy)?;
            quad[slot] = ChshPoint {
                fixed_deg: fx,
                swept_deg: sy,
                counts: signal,
                variance: signal + acc + acc_var,
                interpolated: false,
            };
        }
        var_s += correlation(&quad)?.1.powi(2);
    }
    Ok(var_s.sqrt())
}

/// Per-point integration time giving `target_sigma_s`. Every variance in
/// `E` scales as `1/t`, so one evaluation fixes the answer.
pub fn calibrate_integration_time(
    experiment: &Experiment,
    protocol: &ChshProtocol,
    conditions: Conditions,
    target_sigma_s: f64,
) -> Result<f64> {
    if !(target_sigma_s > 0.0) {
        return Err(Error::invalid("target sigma_S must be > 0"));
    }
    let sigma = expected_sigma_s(experiment, protocol, conditions)?;
    Ok(protocol.integration_time_s * (sigma / target_sigma_s).powi(2))
}
