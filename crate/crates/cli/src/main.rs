//! `qsat`: batch front end for sweeps, CHSH runs, geometry estimates,
//! heatmap surveys and mission scenarios.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qsat::detection::write_count_records;
use qsat::geometry::estimate_with_hitmap;
use qsat::mission::write_trace;
use qsat::polarization::{chsh_s, make_noisy_state};
use qsat::runner::output::{
    write_chsh_points, write_fits, write_json, write_map_csv, write_mission_rows, Summary,
};
use qsat::runner::{
    calibrate_integration_time, fit_corrected_curve, mission_run, run_chsh, run_sweep, survey_heatmap,
    ChshProtocol, Experiment, FixedSetting, ScenarioConfig, SweepPlan,
};
use qsat::seeds;
use qsat::source::{optimal_current, SyntheticLaser};

#[derive(Parser)]
#[command(name = "qsat", version, about = "Entangled photon-pair payload simulator")]
struct Cli {
    /// Scenario config (flat `key = value`); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's output_dir, then `.`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    H,
    V,
    D,
    A,
}

impl From<Basis> for FixedSetting {
    fn from(b: Basis) -> Self {
        match b {
            Basis::H => FixedSetting::H,
            Basis::V => FixedSetting::V,
            Basis::D => FixedSetting::D,
            Basis::A => FixedSetting::A,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// One correlation curve with the fixed arm at a basis setting.
    Sweep {
        #[arg(long, value_enum, ignore_case = true, default_value_t = Basis::D)]
        fixed: Basis,
    },
    /// Four curves and the CHSH parameter.
    Chsh {
        /// Calibrate the per-point integration time to this sigma_S first.
        #[arg(long)]
        target_sigma: Option<f64>,
    },
    /// Monte Carlo geometric efficiency and detector-plane hit map.
    Geometry {
        /// Defaults to geometry_samples from the config.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        #[arg(long, default_value_t = 1000.0)]
        half_width_um: f64,
    },
    /// D/A visibility survey over a current × temperature grid.
    Heatmap {
        /// `start:stop:step` in mA; defaults to the scenario map's grid.
        #[arg(long)]
        currents: Option<String>,
        /// `start:stop:step` in °C; defaults to the scenario map's grid.
        #[arg(long)]
        temperatures: Option<String>,
    },
    /// Thermal mission with periodic CHSH measurements.
    Mission {
        /// Overrides mission_duration_h.
        #[arg(long)]
        duration_h: Option<f64>,
    },
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number in `{s}`"))
        })
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        bail!("range `{s}` must be start:stop:step");
    };
    if step.is_nan() || step <= 0.0 || stop < start {
        bail!("range `{s}` needs step > 0 and stop ≥ start");
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    log::info!("writing {}", path.display());
    Ok(BufWriter::new(f))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let format = cli.format;

    let experiment = Experiment::prepare(config.clone())?;
    let cfg = experiment.config();
    let mut summary = Summary::new("", cfg);
    summary.geometric_efficiency = Some(experiment.geometric_efficiency());

    match cli.command {
        Command::Sweep { fixed } => {
            summary.command = "sweep".into();
            let plan = SweepPlan::new(
                cfg.fixed_arm,
                fixed.into(),
                cfg.sweep_angles(),
                cfg.integration_time_s,
                cfg.lcpr_span_limit_deg,
            )?;
            let records = run_sweep(&experiment, &plan, 0)?;
            let fit = fit_corrected_curve(&records, experiment.window())?;
            let name = format!("sweep.{}", format.ext());
            match format {
                Format::Csv => write_count_records(create(&out, &name)?, &records)?,
                Format::Json => write_json(create(&out, &name)?, &records)?,
            }
            summary.details = json!({ "plan": plan, "fit": fit });
        }
        Command::Chsh { target_sigma } => {
            summary.command = "chsh".into();
            let conditions = experiment.nominal_conditions();
            let mut protocol = ChshProtocol::from_config(cfg);
            if let Some(target) = target_sigma {
                let t = calibrate_integration_time(&experiment, &protocol, conditions, target)?;
                log::info!("calibrated integration time {t:.4} s per point");
                protocol = protocol.with_integration_time(t);
            }
            let mut rng = seeds::derived_rng(cfg.seed, "chsh", 0);
            let run = run_chsh(&experiment, &protocol, conditions, &mut rng)?;
            let records: Vec<_> = run
                .curves
                .iter()
                .flat_map(|c| c.records.iter().copied())
                .collect();
            match format {
                Format::Csv => {
                    write_count_records(create(&out, "chsh_records.csv")?, &records)?;
                    write_chsh_points(create(&out, "chsh_points.csv")?, &run.measurement)?;
                    write_fits(create(&out, "chsh_fits.csv")?, &run.curves)?;
                }
                Format::Json => {
                    write_json(create(&out, "chsh_records.json")?, &records)?;
                    write_json(create(&out, "chsh_points.json")?, &run.measurement.points)?;
                    write_json(create(&out, "chsh_fits.json")?, &run.curves)?;
                }
            }
            let rates = run.rates;
            let analytic = chsh_s(
                &make_noisy_state(rates.visibility_hv, rates.visibility_da)?,
                protocol.settings,
            )?;
            summary.s = Some(run.measurement.s);
            summary.sigma_s = Some(run.measurement.sigma_s);
            summary.visibilities = Some(run.visibilities);
            summary.details = json!({
                "e_values": run.measurement.e_values,
                "e_sigmas": run.measurement.e_sigmas,
                "analytic_s": analytic,
                "integration_time_s": protocol.integration_time_s,
                "temperature_c": run.conditions.temperature_c,
                "laser_current_ma": rates.laser_current_ma,
                "pump_power_mw": rates.pump_power_mw,
                "pair_rate_hz": rates.pair_rate_hz,
                "singles_signal_hz": rates.singles_signal_hz,
                "singles_idler_hz": rates.singles_idler_hz,
            });
        }
        Command::Geometry {
            samples,
            bins,
            half_width_um,
        } => {
            summary.command = "geometry".into();
            let n = samples.unwrap_or(cfg.geometry_samples);
            let seed = seeds::derive(cfg.seed, "geometry-cli", 0);
            let (estimate, hitmap) = estimate_with_hitmap(&cfg.layout, n, seed, half_width_um, bins)?;
            match format {
                Format::Csv => {
                    estimate.write_buckets(create(&out, "geometry_buckets.csv")?)?;
                    hitmap.write_csv(create(&out, "geometry_hitmap.csv")?)?;
                }
                Format::Json => {
                    write_json(create(&out, "geometry_buckets.json")?, &estimate)?;
                    write_json(create(&out, "geometry_hitmap.json")?, &hitmap)?;
                }
            }
            summary.geometric_efficiency = Some(estimate.efficiency);
            summary.details = json!({ "estimate": estimate });
        }
        Command::Heatmap {
            currents,
            temperatures,
        } => {
            summary.command = "heatmap".into();
            let reference = match experiment.mode_hop_map() {
                Some(m) => m.clone(),
                None => SyntheticLaser::default().default_map()?,
            };
            let currents = match currents {
                Some(s) => parse_range(&s)?,
                None => reference.currents().to_vec(),
            };
            let temperatures = match temperatures {
                Some(s) => parse_range(&s)?,
                None => reference.temperatures().to_vec(),
            };
            let map = survey_heatmap(&experiment, &currents, &temperatures)?;
            map.save(&out.join("heatmap.txt"))?;
            match format {
                Format::Csv => write_map_csv(create(&out, "heatmap.csv")?, &map)?,
                Format::Json => write_json(create(&out, "heatmap.json")?, &map)?,
            }
            let optimal = temperatures
                .iter()
                .map(|&t| Ok(json!({ "temperature_c": t, "current_ma": optimal_current(t, &map)? })))
                .collect::<qsat::Result<Vec<_>>>()?;
            summary.details = json!({ "optimal_currents": optimal });
        }
        Command::Mission { duration_h } => {
            summary.command = "mission".into();
            let duration = duration_h.map_or(cfg.mission_duration_s, |h| h * 3600.0);
            let report = mission_run(&experiment, duration)?;
            match format {
                Format::Csv => {
                    write_mission_rows(create(&out, "mission.csv")?, &report.rows)?;
                    write_trace(create(&out, "thermal_trace.csv")?, &report.trace)?;
                }
                Format::Json => {
                    write_json(create(&out, "mission.json")?, &report.rows)?;
                    write_json(create(&out, "thermal_trace.json")?, &report.trace)?;
                }
            }
            let s: Vec<f64> = report.rows.iter().map(|r| r.s).collect();
            let (mean, std) = qsat::runner::mean_and_std(&s);
            if !s.is_empty() {
                summary.s = Some(mean);
                summary.sigma_s = Some(
                    (report.rows.iter().map(|r| r.sigma_s.powi(2)).sum::<f64>() / s.len() as f64).sqrt(),
                );
            }
            summary.details = json!({
                "measurements": report.rows.len(),
                "s_sample_std": std,
                "skipped_epochs": report.skipped_epochs,
                "failed_measurements": report.failed_measurements,
                "max_temperature_c": report.max_temperature_c(),
                "min_heater_off_gap_s": report.min_off_gap_s(),
                "blackout_comparison": report.blackout_comparison(),
            });
        }
    }
    summary.write(create(&out, "summary.json")?)?;
    Ok(())
}
