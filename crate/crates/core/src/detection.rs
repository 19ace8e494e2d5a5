//! Detector and coincidence statistics.
//!
//! Counts are Poisson. Accidentals follow the standard two-stream estimator
//! `R_acc = S1·S2·τ`. Dead time and afterpulsing are not modelled.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::polarization::{self, AnalyzerSetting};
use crate::{seeds, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_count_rate_hz: f64,
    pub active_diameter_um: f64,
    pub breakdown_voltage_slope_v_per_c: f64,
    pub breakdown_voltage_ref_v: f64,
    pub reference_temperature_c: f64,
    pub nominal_overvoltage_v: f64,
    /// Relative efficiency lost per °C of untracked temperature drift.
    pub untracked_efficiency_loss_per_c: f64,
    pub bias_tracking: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            efficiency: 0.45,
            dark_count_rate_hz: 500.0,
            active_diameter_um: 500.0,
            breakdown_voltage_slope_v_per_c: 0.05,
            breakdown_voltage_ref_v: 120.0,
            reference_temperature_c: 20.0,
            nominal_overvoltage_v: 5.0,
            untracked_efficiency_loss_per_c: 0.02,
            bias_tracking: true,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::invalid(format!(
                "detector efficiency {} outside [0, 1]",
                self.efficiency
            )));
        }
        if !(self.dark_count_rate_hz >= 0.0) || !(self.active_diameter_um > 0.0) {
            return Err(Error::invalid(
                "dark count rate must be ≥ 0 and active diameter > 0",
            ));
        }
        if !(self.untracked_efficiency_loss_per_c >= 0.0) {
            return Err(Error::invalid("untracked efficiency loss must be ≥ 0"));
        }
        Ok(())
    }
}

/// Operating temperature range of the bias model, °C.
pub const BIAS_RANGE_C: (f64, f64) = (-20.0, 40.0);

/// Bias voltage that keeps the configured overvoltage above a breakdown
/// voltage drifting linearly with temperature.
pub fn bias_voltage(temperature_c: f64, config: &DetectorConfig) -> Result<f64> {
    if !(BIAS_RANGE_C.0..=BIAS_RANGE_C.1).contains(&temperature_c) {
        return Err(Error::invalid(format!(
            "temperature {temperature_c} °C outside bias model range {BIAS_RANGE_C:?}"
        )));
    }
    let breakdown = config.breakdown_voltage_ref_v
        + config.breakdown_voltage_slope_v_per_c * (temperature_c - config.reference_temperature_c);
    Ok(breakdown + config.nominal_overvoltage_v)
}

/// Detection efficiency at a temperature. With bias tracking the efficiency
/// is constant; without it the bias stays at its reference value and the
/// efficiency falls linearly with the temperature error.
pub fn effective_efficiency(temperature_c: f64, config: &DetectorConfig) -> f64 {
    if config.bias_tracking {
        return config.efficiency;
    }
    let drift = (temperature_c - config.reference_temperature_c).abs();
    (config.efficiency * (1.0 - config.untracked_efficiency_loss_per_c * drift)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceWindow {
    tau_ns: f64,
}

impl CoincidenceWindow {
    pub const DEFAULT_NS: f64 = 4.84;

    pub fn new(tau_ns: f64) -> Result<Self> {
        if !(tau_ns > 0.0) || !tau_ns.is_finite() {
            return Err(Error::invalid(format!(
                "coincidence window {tau_ns} ns must be > 0"
            )));
        }
        Ok(Self { tau_ns })
    }

    pub fn tau_ns(&self) -> f64 {
        self.tau_ns
    }

    pub fn tau_s(&self) -> f64 {
        self.tau_ns * 1e-9
    }
}

impl Default for CoincidenceWindow {
    fn default() -> Self {
        Self {
            tau_ns: Self::DEFAULT_NS,
        }
    }
}

/// Expected accidental coincidence rate `s1·s2·τ`, counts/s.
pub fn accidental_rate(s1_hz: f64, s2_hz: f64, window: CoincidenceWindow) -> Result<f64> {
    if !(s1_hz >= 0.0) || !(s2_hz >= 0.0) {
        return Err(Error::invalid(format!(
            "singles rates ({s1_hz}, {s2_hz}) must be ≥ 0"
        )));
    }
    Ok(s1_hz * s2_hz * window.tau_s())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: AnalyzerSetting,
    pub integration_time_s: f64,
    pub singles_signal: u64,
    pub singles_idler: u64,
    pub coincidences: u64,
}

impl CountRecord {
    /// Accidental coincidences expected from this record's own singles.
    pub fn expected_accidentals(&self, window: CoincidenceWindow) -> f64 {
        self.singles_signal as f64 * self.singles_idler as f64 * window.tau_s() / self.integration_time_s
    }

    /// Coincidences minus expected accidentals, and whether it was clamped at 0.
    pub fn corrected_coincidences(&self, window: CoincidenceWindow) -> (f64, bool) {
        let c = self.coincidences as f64 - self.expected_accidentals(window);
        if c < 0.0 {
            (0.0, true)
        } else {
            (c, false)
        }
    }
}

/// Per-record rates fed to [`simulate_counts`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    pub true_coincidence_hz: f64,
    pub singles_signal_hz: f64,
    pub singles_idler_hz: f64,
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Draws one record from an explicit generator.
///
/// Coincidences are Poisson with mean `(true + accidental)·t`. Each singles
/// channel is the coincidence draw plus an independent Poisson remainder, so
/// its marginal is Poisson with mean `(singles + dark)·t` (or the
/// coincidence mean, if larger) and `coincidences ≤ singles` always holds.
pub fn simulate_counts_with<R: Rng + ?Sized>(
    rates: RateInputs,
    config: &DetectorConfig,
    window: CoincidenceWindow,
    integration_time_s: f64,
    setting: AnalyzerSetting,
    rng: &mut R,
) -> Result<CountRecord> {
    let RateInputs {
        true_coincidence_hz,
        singles_signal_hz,
        singles_idler_hz,
    } = rates;
    if !(true_coincidence_hz >= 0.0) || !(singles_signal_hz >= 0.0) || !(singles_idler_hz >= 0.0) {
        return Err(Error::invalid("count rates must be non-negative"));
    }
    if !(integration_time_s > 0.0) || !integration_time_s.is_finite() {
        return Err(Error::invalid(format!(
            "integration time {integration_time_s} s must be > 0"
        )));
    }
    let dark = config.dark_count_rate_hz;
    let s1 = singles_signal_hz + dark;
    let s2 = singles_idler_hz + dark;
    let coinc_mean = (true_coincidence_hz + accidental_rate(s1, s2, window)?) * integration_time_s;
    let coincidences = poisson(coinc_mean, rng);
    let singles_signal = coincidences + poisson((s1 * integration_time_s - coinc_mean).max(0.0), rng);
    let singles_idler = coincidences + poisson((s2 * integration_time_s - coinc_mean).max(0.0), rng);
    Ok(CountRecord {
        setting,
        integration_time_s,
        singles_signal,
        singles_idler,
        coincidences,
    })
}

/// Seeded form of [`simulate_counts_with`].
pub fn simulate_counts(
    rates: RateInputs,
    config: &DetectorConfig,
    window: CoincidenceWindow,
    integration_time_s: f64,
    setting: AnalyzerSetting,
    seed: u64,
) -> Result<CountRecord> {
    simulate_counts_with(
        rates,
        config,
        window,
        integration_time_s,
        setting,
        &mut seeds::rng(seed),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedVisibility {
    pub visibility: f64,
    /// At least one corrected count went negative and was clamped to zero.
    pub clamped: bool,
}

/// Visibility after subtracting each record's expected accidentals.
pub fn corrected_visibility(
    max_record: &CountRecord,
    min_record: &CountRecord,
    window: CoincidenceWindow,
) -> Result<CorrectedVisibility> {
    if (max_record.integration_time_s - min_record.integration_time_s).abs()
        > 1e-12 * max_record.integration_time_s
    {
        return Err(Error::invalid("records must share an integration time"));
    }
    let (hi, c1) = max_record.corrected_coincidences(window);
    let (lo, c2) = min_record.corrected_coincidences(window);
    if c1 || c2 {
        log::warn!("accidental-corrected count clamped to zero");
    }
    let total = hi + lo;
    if total == 0.0 {
        return Err(Error::ZeroTotal);
    }
    Ok(CorrectedVisibility {
        visibility: (hi - lo) / total,
        clamped: c1 || c2,
    })
}

/// Raw, uncorrected visibility of two records.
pub fn raw_visibility(max_record: &CountRecord, min_record: &CountRecord) -> Result<f64> {
    let (hi, lo) = (max_record.coincidences as f64, min_record.coincidences as f64);
    if hi + lo == 0.0 {
        return Err(Error::ZeroTotal);
    }
    Ok((hi - lo) / (hi + lo))
}

pub const COUNT_CSV_HEADER: &str = "setting_signal_deg,setting_idler_deg,t_s,singles_s,singles_i,coinc";

/// Writes records in the delimited count format (header plus one row each).
pub fn write_count_records<W: Write>(mut out: W, records: &[CountRecord]) -> Result<()> {
    writeln!(out, "{COUNT_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.setting.theta_signal(),
            r.setting.theta_idler(),
            r.integration_time_s,
            r.singles_signal,
            r.singles_idler,
            r.coincidences
        )?;
    }
    Ok(())
}

pub fn read_count_records<R: BufRead>(input: R) -> Result<Vec<CountRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: "<count records>".into(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if i == 0 {
            if line != COUNT_CSV_HEADER {
                return Err(err(1, format!("unexpected header `{line}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err(i + 1, format!("expected 6 fields, found {}", fields.len())));
        }
        let f = |k: usize| -> Result<f64> {
            fields[k]
                .trim()
                .parse()
                .map_err(|_| err(i + 1, format!("bad number `{}`", fields[k])))
        };
        let u = |k: usize| -> Result<u64> {
            fields[k]
                .trim()
                .parse()
                .map_err(|_| err(i + 1, format!("bad count `{}`", fields[k])))
        };
        let record = CountRecord {
            setting: AnalyzerSetting::new(f(0)?, f(1)?),
            integration_time_s: f(2)?,
            singles_signal: u(3)?,
            singles_idler: u(4)?,
            coincidences: u(5)?,
        };
        if record.coincidences > record.singles_signal.min(record.singles_idler) {
            return Err(err(i + 1, "coincidences exceed singles".into()));
        }
        out.push(record);
    }
    Ok(out)
}

/// Convenience: the expected true-coincidence rate for a setting, given the
/// rate of pairs reaching both analyzers.
pub fn true_coincidence_rate(
    state: &polarization::TwoPhotonState,
    setting: AnalyzerSetting,
    pair_rate_at_analyzers_hz: f64,
) -> f64 {
    pair_rate_at_analyzers_hz * polarization::coincidence_probability(state, setting)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn setting() -> AnalyzerSetting {
        AnalyzerSetting::new(0.0, 0.0)
    }

    fn quiet() -> DetectorConfig {
        DetectorConfig {
            dark_count_rate_hz: 0.0,
            ..DetectorConfig::default()
        }
    }

    #[test]
    fn accidental_examples() {
        let w1 = CoincidenceWindow::new(1.0).unwrap();
        assert_abs_diff_eq!(accidental_rate(1e5, 1e5, w1).unwrap(), 10.0, epsilon = 1e-9);
        assert_eq!(accidental_rate(0.0, 1e6, w1).unwrap(), 0.0);
        let r = accidental_rate(2.95e5, 2.95e5, CoincidenceWindow::default()).unwrap();
        assert_abs_diff_eq!(r, 421.2, epsilon = 0.1);
        assert!(accidental_rate(-1.0, 1.0, w1).is_err());
    }

    #[test]
    fn window_must_be_positive() {
        assert!(CoincidenceWindow::new(0.0).is_err());
        assert!(CoincidenceWindow::new(f64::NAN).is_err());
    }

    #[test]
    fn zero_rates_give_zero_record() {
        let rates = RateInputs {
            true_coincidence_hz: 0.0,
            singles_signal_hz: 0.0,
            singles_idler_hz: 0.0,
        };
        let r = simulate_counts(rates, &quiet(), CoincidenceWindow::default(), 1.0, setting(), 3).unwrap();
        assert_eq!((r.singles_signal, r.singles_idler, r.coincidences), (0, 0, 0));
    }

    #[test]
    fn coincidence_mean_and_fano_factor() {
        let rates = RateInputs {
            true_coincidence_hz: 1400.0,
            singles_signal_hz: 0.0,
            singles_idler_hz: 0.0,
        };
        let mut rng = seeds::rng(11);
        let n = 10_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                simulate_counts_with(
                    rates,
                    &quiet(),
                    CoincidenceWindow::default(),
                    1.0,
                    setting(),
                    &mut rng,
                )
                .unwrap()
                .coincidences as f64
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sigma = 1400f64.sqrt();
        assert!(
            (mean - 1400.0).abs() < 3.0 * sigma / (n as f64).sqrt(),
            "mean {mean}"
        );
        assert!((var / mean - 1.0).abs() < 0.05, "fano {}", var / mean);
    }

    #[test]
    fn determinism_and_singles_bound() {
        let rates = RateInputs {
            true_coincidence_hz: 50.0,
            singles_signal_hz: 40.0,
            singles_idler_hz: 1e4,
        };
        let cfg = DetectorConfig::default();
        let a = simulate_counts(rates, &cfg, CoincidenceWindow::default(), 2.0, setting(), 99).unwrap();
        let b = simulate_counts(rates, &cfg, CoincidenceWindow::default(), 2.0, setting(), 99).unwrap();
        assert_eq!(a, b);
        let mut rng = seeds::rng(5);
        for _ in 0..2000 {
            let r = simulate_counts_with(
                rates,
                &quiet(),
                CoincidenceWindow::default(),
                0.1,
                setting(),
                &mut rng,
            )
            .unwrap();
            assert!(r.coincidences <= r.singles_signal.min(r.singles_idler));
        }
    }

    fn record(coinc: u64, singles: u64) -> CountRecord {
        CountRecord {
            setting: setting(),
            integration_time_s: 1.0,
            singles_signal: singles,
            singles_idler: singles,
            coincidences: coinc,
        }
    }

    #[test]
    fn corrected_equals_raw_without_accidentals() {
        let w = CoincidenceWindow::default();
        let (hi, lo) = (record(950, 0), record(50, 0));
        let c = corrected_visibility(&hi, &lo, w).unwrap();
        assert_abs_diff_eq!(c.visibility, raw_visibility(&hi, &lo).unwrap(), epsilon = 1e-15);
        assert!(!c.clamped);
    }

    #[test]
    fn correction_raises_visibility() {
        // Raw V = 0.90 from (950, 50); τ = 9.5 ns with 1e5 singles gives 95
        // accidentals, 10 % of C_max. The minimum goes to −45 and clamps, so
        // the corrected visibility is 855/855 = 1.
        let w = CoincidenceWindow::new(9.5).unwrap();
        let (hi, lo) = (record(950, 100_000), record(50, 100_000));
        assert_abs_diff_eq!(raw_visibility(&hi, &lo).unwrap(), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(hi.expected_accidentals(w), 95.0, epsilon = 1e-9);
        let c = corrected_visibility(&hi, &lo, w).unwrap();
        assert_eq!(c.visibility, 1.0);
        assert!(c.clamped);

        // Unclamped case: (1900, 400) with 95 accidentals each.
        let (hi, lo) = (record(1900, 100_000), record(400, 100_000));
        let c = corrected_visibility(&hi, &lo, w).unwrap();
        assert_abs_diff_eq!(c.visibility, 1500.0 / (1805.0 + 305.0), epsilon = 1e-12);
        assert!(c.visibility > raw_visibility(&hi, &lo).unwrap());
    }

    #[test]
    fn negative_corrected_counts_clamp() {
        let w = CoincidenceWindow::new(1.0).unwrap();
        let singles = 100_000; // 10 accidentals/s
        let c = corrected_visibility(&record(50, singles), &record(2, singles), w).unwrap();
        assert!(c.clamped);
        assert_eq!(c.visibility, 1.0);
        assert!(matches!(
            corrected_visibility(&record(1, singles), &record(1, singles), w),
            Err(Error::ZeroTotal)
        ));
    }

    #[test]
    fn bias_examples() {
        let cfg = DetectorConfig::default();
        let nominal = cfg.breakdown_voltage_ref_v + cfg.nominal_overvoltage_v;
        assert_eq!(bias_voltage(cfg.reference_temperature_c, &cfg).unwrap(), nominal);
        assert_abs_diff_eq!(
            bias_voltage(cfg.reference_temperature_c + 10.0, &cfg).unwrap() - nominal,
            0.5,
            epsilon = 1e-12
        );
        for t in [-20.0, 0.0, 17.5, 40.0] {
            assert_eq!(effective_efficiency(t, &cfg), 0.45);
        }
        assert!(bias_voltage(41.0, &cfg).is_err());
        let untracked = DetectorConfig {
            bias_tracking: false,
            ..cfg
        };
        assert!(effective_efficiency(30.0, &untracked) < 0.45);
        assert_abs_diff_eq!(
            effective_efficiency(30.0, &untracked),
            0.45 * 0.8,
            epsilon = 1e-12
        );
    }

    #[test]
    fn count_format_round_trip() {
        let recs = vec![
            CountRecord {
                setting: AnalyzerSetting::new(45.0, 22.5),
                integration_time_s: 1.5,
                singles_signal: 10,
                singles_idler: 12,
                coincidences: 3,
            },
            record(7, 9),
        ];
        let mut buf = Vec::new();
        write_count_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(COUNT_CSV_HEADER));
        assert_eq!(read_count_records(&buf[..]).unwrap(), recs);
        assert!(read_count_records(&b"bad\n"[..]).is_err());
    }
}
