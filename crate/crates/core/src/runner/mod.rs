//! End-to-end orchestration: sweeps, fits, CHSH extraction, heatmap
//! surveys and mission runs.

mod chsh;
pub mod config;
mod experiment;
mod fit;
mod mission_run;
pub mod output;
mod stats;
mod survey;
mod sweep;

pub use chsh::{
    calibrate_integration_time, expected_sigma_s, extract_chsh, run_chsh, ChshMeasurement, ChshPoint,
    ChshProtocol, ChshRun,
};
pub use config::{ModeHopSource, ScenarioConfig};
pub use experiment::{Conditions, Experiment, RateModel};
pub use fit::{
    fit_corrected_curve, fit_curve, fit_points, CorrelationCurveFit, CurvePoint, MAX_FIT_ITERATIONS,
};
pub use mission_run::{mission_run, MissionReport, MissionRow};
pub use stats::{mean_and_std, welch_t_test, WelchResult};
pub use survey::survey_heatmap;
pub use sweep::{run_sweep, run_sweep_at, Arm, FixedSetting, SweepCurve, SweepPlan};
