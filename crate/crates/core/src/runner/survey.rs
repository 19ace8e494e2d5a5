use rayon::prelude::*;

use crate::source::{ModeHopMap, PowerCurve};
use crate::{seeds, Error, Result};

use super::experiment::{Conditions, Experiment};
use super::fit::fit_corrected_curve;
use super::sweep::{require_operable, run_sweep_at, FixedSetting, SweepPlan};

/// Measures the D/A visibility at every (current, temperature) grid point
/// with a short D-fixed sweep and returns the fitted visibilities as a map.
///
/// Grid points run in parallel; point `k` (row-major, temperature outer)
/// draws from its own stream derived from the master seed, so the result
/// does not depend on the worker count.
pub fn survey_heatmap(
    experiment: &Experiment,
    currents_ma: &[f64],
    temperatures_c: &[f64],
) -> Result<ModeHopMap> {
    let sorted = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]);
    if !sorted(currents_ma) || !sorted(temperatures_c) {
        return Err(Error::invalid(
            "survey grids must be non-empty and strictly increasing",
        ));
    }
    for &t in temperatures_c {
        require_operable(experiment, t)?;
    }
    let cfg = experiment.config();
    let plan = SweepPlan::new(
        cfg.fixed_arm,
        FixedSetting::D,
        cfg.survey_angles(),
        cfg.survey_integration_time_s,
        cfg.lcpr_span_limit_deg,
    )?;
    let nc = currents_ma.len();
    let values = (0..nc * temperatures_c.len())
        .into_par_iter()
        .map(|k| {
            let conditions = Conditions {
                temperature_c: temperatures_c[k / nc],
                laser_current_ma: Some(currents_ma[k % nc]),
            };
            let mut rng = seeds::derived_rng(cfg.seed, "survey", k as u64);
            let records = run_sweep_at(experiment, &plan, conditions, &mut rng)?;
            Ok(fit_corrected_curve(&records, experiment.window())?.visibility)
        })
        .collect::<Result<Vec<f64>>>()?;
    let rows = values.chunks(nc).map(<[f64]>::to_vec).collect();
    let power = experiment
        .mode_hop_map()
        .map_or_else(PowerCurve::default, |m| m.power_curve().clone());
    ModeHopMap::new(currents_ma.to_vec(), temperatures_c.to_vec(), rows, power)
}
