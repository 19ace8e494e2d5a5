use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detection::{simulate_counts_with, CountRecord, RateInputs};
use crate::mission::{can_operate, Illumination, ThermalState};
use crate::polarization::{
    coincidence_probability, reduce_angle, AnalyzerSetting, A_DEG, D_DEG, H_DEG, V_DEG,
};
use crate::{seeds, Error, Result};

use super::experiment::{Conditions, Experiment, RateModel};
use super::fit::CorrelationCurveFit;

/// Fewest swept points accepted in a plan.
pub const MIN_SWEEP_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Signal,
    Idler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedSetting {
    H,
    V,
    D,
    A,
}

impl FixedSetting {
    pub const ALL: [FixedSetting; 4] = [FixedSetting::H, FixedSetting::V, FixedSetting::D, FixedSetting::A];

    pub fn angle_deg(&self) -> f64 {
        match self {
            FixedSetting::H => H_DEG,
            FixedSetting::V => V_DEG,
            FixedSetting::D => D_DEG,
            FixedSetting::A => A_DEG,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, FixedSetting::D | FixedSetting::A)
    }

    /// The basis setting at `deg` (mod 180), if any.
    pub fn from_angle(deg: f64) -> Option<Self> {
        let r = reduce_angle(deg);
        Self::ALL.into_iter().find(|s| {
            let d = (r - s.angle_deg()).abs();
            d < 1e-9 || (180.0 - d) < 1e-9
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            FixedSetting::H => "H",
            FixedSetting::V => "V",
            FixedSetting::D => "D",
            FixedSetting::A => "A",
        }
    }
}

/// One correlation curve: one arm held at a basis setting, the other swept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub fixed_arm: Arm,
    pub fixed_setting: FixedSetting,
    pub swept_angles_deg: Vec<f64>,
    pub integration_time_s: f64,
    /// Largest span the liquid-crystal rotator can cover, degrees.
    pub lcpr_span_limit_deg: f64,
}

impl SweepPlan {
    pub fn new(
        fixed_arm: Arm,
        fixed_setting: FixedSetting,
        swept_angles_deg: Vec<f64>,
        integration_time_s: f64,
        lcpr_span_limit_deg: f64,
    ) -> Result<Self> {
        let plan = Self {
            fixed_arm,
            fixed_setting,
            swept_angles_deg,
            integration_time_s,
            lcpr_span_limit_deg,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.swept_angles_deg.len() < MIN_SWEEP_POINTS {
            return Err(Error::invalid(format!(
                "sweep needs ≥ {MIN_SWEEP_POINTS} points, got {}",
                self.swept_angles_deg.len()
            )));
        }
        if self.swept_angles_deg.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("swept angles must be finite"));
        }
        if self.span_deg() > self.lcpr_span_limit_deg + 1e-9 {
            return Err(Error::invalid(format!(
                "sweep span {}° exceeds the rotator limit {}°",
                self.span_deg(),
                self.lcpr_span_limit_deg
            )));
        }
        if !(self.integration_time_s > 0.0) || !self.integration_time_s.is_finite() {
            return Err(Error::invalid("integration time must be > 0"));
        }
        Ok(())
    }

    pub fn span_deg(&self) -> f64 {
        let (lo, hi) = self
            .swept_angles_deg
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
                (lo.min(a), hi.max(a))
            });
        hi - lo
    }

    fn setting(&self, fixed_deg: f64, swept_deg: f64) -> AnalyzerSetting {
        match self.fixed_arm {
            Arm::Signal => AnalyzerSetting::new(fixed_deg, swept_deg),
            Arm::Idler => AnalyzerSetting::new(swept_deg, fixed_deg),
        }
    }

    /// Recorded (intended) setting for a swept angle.
    pub fn nominal_setting(&self, swept_deg: f64) -> AnalyzerSetting {
        self.setting(self.fixed_setting.angle_deg(), swept_deg)
    }

    /// Swept-arm angle of a record taken under this plan.
    pub fn swept_angle_of(&self, setting: &AnalyzerSetting) -> f64 {
        match self.fixed_arm {
            Arm::Signal => setting.theta_idler(),
            Arm::Idler => setting.theta_signal(),
        }
    }
}

/// A measured curve and its accidental-corrected fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub plan: SweepPlan,
    pub records: Vec<CountRecord>,
    pub fit: CorrelationCurveFit,
}

/// Expected rates at every swept point, with the nominal setting each
/// record will carry. The D/A setting error moves the physical fixed arm.
pub(crate) fn point_rates(
    experiment: &Experiment,
    plan: &SweepPlan,
    rates: &RateModel,
) -> Result<Vec<(AnalyzerSetting, RateInputs)>> {
    let state = experiment.state(rates)?;
    let mut fixed = plan.fixed_setting.angle_deg();
    if plan.fixed_setting.is_diagonal() {
        fixed += experiment.config().da_setting_error_deg;
    }
    Ok(plan
        .swept_angles_deg
        .iter()
        .map(|&swept| {
            let p = coincidence_probability(&state, plan.setting(fixed, swept));
            (
                plan.nominal_setting(swept),
                RateInputs {
                    true_coincidence_hz: rates.pair_rate_hz * p,
                    singles_signal_hz: rates.singles_signal_hz,
                    singles_idler_hz: rates.singles_idler_hz,
                },
            )
        })
        .collect())
}

/// Simulates a sweep under explicit conditions, without a thermal check.
pub fn run_sweep_at<R: Rng + ?Sized>(
    experiment: &Experiment,
    plan: &SweepPlan,
    conditions: Conditions,
    rng: &mut R,
) -> Result<Vec<CountRecord>> {
    plan.validate()?;
    let rates = experiment.rates(conditions)?;
    let cfg = experiment.config();
    point_rates(experiment, plan, &rates)?
        .into_iter()
        .map(|(setting, inputs)| {
            simulate_counts_with(
                inputs,
                &cfg.detector,
                experiment.window(),
                plan.integration_time_s,
                setting,
                rng,
            )
        })
        .collect()
}

/// Checks the payload is operable at `temperature_c` in normal illumination.
pub(crate) fn require_operable(experiment: &Experiment, temperature_c: f64) -> Result<()> {
    let heater = &experiment.config().heater;
    let state = ThermalState::new(0.0, temperature_c, Illumination::Sun);
    if can_operate(&state, heater) {
        Ok(())
    } else {
        Err(Error::NotOperable {
            temperature_c,
            reason: format!(
                "outside the [{}, {}] °C band",
                heater.band_low_c, heater.band_high_c
            ),
        })
    }
}

/// Runs one sweep at the scenario's nominal operating point. `run` selects
/// an independent random stream under the master seed.
pub fn run_sweep(experiment: &Experiment, plan: &SweepPlan, run: u64) -> Result<Vec<CountRecord>> {
    let conditions = experiment.nominal_conditions();
    require_operable(experiment, conditions.temperature_c)?;
    let mut rng = seeds::derived_rng(experiment.config().seed, "sweep", run);
    run_sweep_at(experiment, plan, conditions, &mut rng)
}
