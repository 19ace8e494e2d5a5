//! Weighted least-squares fit of `C(θ) = A·[1 − V·cos 2(θ − θ₀)]`.
//!
//! Levenberg–Marquardt with `V` projected onto `[0, 1]` and `A` onto
//! `[0, ∞)`. Four starts: θ₀ at the smallest data point and at 45°, 90°
//! and 135° from it. The best χ² wins.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::detection::{CoincidenceWindow, CountRecord};
use crate::polarization::reduce_angle;
use crate::{Error, Result};

/// Iteration cap per start, counting rejected steps.
pub const MAX_FIT_ITERATIONS: usize = 500;

const MIN_POINTS: usize = 4;
const MIN_SPAN_DEG: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub angle_deg: f64,
    pub value: f64,
    /// Variance of `value`; the weight is its inverse.
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurveFit {
    /// Mean level `A`, in the units of the fitted values (counts/s for records).
    pub amplitude: f64,
    pub visibility: f64,
    /// Angle of the curve minimum in `[0, 180)`.
    pub phase_offset_deg: f64,
    pub sigma_amplitude: f64,
    pub sigma_visibility: f64,
    pub sigma_phase_deg: f64,
    /// `√χ²`.
    pub residual_norm: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub iterations: usize,
}

impl CorrelationCurveFit {
    pub fn eval(&self, angle_deg: f64) -> f64 {
        let x = 2.0 * (angle_deg - self.phase_offset_deg).to_radians();
        self.amplitude * (1.0 - self.visibility * x.cos())
    }

    pub fn max_value(&self) -> f64 {
        self.amplitude * (1.0 + self.visibility)
    }

    pub fn min_value(&self) -> f64 {
        self.amplitude * (1.0 - self.visibility)
    }
}

type Params = Vector3<f64>; // A, V, θ₀ (rad)

fn model(p: &Params, theta: f64) -> (f64, Vector3<f64>) {
    let x = 2.0 * (theta - p[2]);
    let (s, c) = x.sin_cos();
    let m = p[0] * (1.0 - p[1] * c);
    (m, Vector3::new(1.0 - p[1] * c, -p[0] * c, -2.0 * p[0] * p[1] * s))
}

struct Problem {
    theta: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Problem {
    fn chi2(&self, p: &Params) -> f64 {
        (0..self.y.len())
            .map(|i| {
                let r = self.y[i] - model(p, self.theta[i]).0;
                self.w[i] * r * r
            })
            .sum()
    }

    fn normal_equations(&self, p: &Params) -> (Matrix3<f64>, Vector3<f64>) {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for i in 0..self.y.len() {
            let (m, g) = model(p, self.theta[i]);
            jtj += self.w[i] * g * g.transpose();
            jtr += self.w[i] * (self.y[i] - m) * g;
        }
        (jtj, jtr)
    }
}

fn project(mut p: Params) -> Params {
    p[0] = p[0].max(0.0);
    p[1] = p[1].clamp(0.0, 1.0);
    p
}

/// Returns the minimum found and the iterations used, or `None` at the cap.
fn levenberg_marquardt(problem: &Problem, start: Params) -> Option<(Params, f64, usize)> {
    let mut p = project(start);
    let mut chi2 = problem.chi2(&p);
    let mut lambda = 1e-3;
    for iter in 1..=MAX_FIT_ITERATIONS {
        let (jtj, jtr) = problem.normal_equations(&p);
        let floor = 1e-12 * jtj.trace().abs().max(f64::MIN_POSITIVE);
        let mut damped = jtj;
        for k in 0..3 {
            damped[(k, k)] += lambda * jtj[(k, k)].max(floor);
        }
        let step = match damped.cholesky() {
            Some(ch) => ch.solve(&jtr),
            None => {
                lambda *= 10.0;
                continue;
            }
        };
        let candidate = project(p + step);
        let c2 = problem.chi2(&candidate);
        if c2 <= chi2 {
            let moved = (candidate - p).abs();
            let scale = p.abs().add_scalar(1e-12);
            let small_step = moved.component_div(&scale).max() < 1e-12;
            let small_gain = chi2 - c2 <= 1e-14 * chi2.max(f64::MIN_POSITIVE);
            p = candidate;
            chi2 = c2;
            lambda = (lambda / 10.0).max(1e-15);
            if small_step || small_gain {
                return Some((p, chi2, iter));
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                // no descent direction left: at a (bounded) minimum
                return Some((p, chi2, iter));
            }
        }
    }
    None
}

/// Fits arbitrary `(angle, value, variance)` points.
pub fn fit_points(points: &[CurvePoint]) -> Result<CorrelationCurveFit> {
    if points.len() < MIN_POINTS {
        return Err(Error::invalid(format!(
            "fit needs ≥ {MIN_POINTS} points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|p| !p.angle_deg.is_finite() || !p.value.is_finite() || !(p.variance > 0.0))
    {
        return Err(Error::invalid(
            "fit points need finite values and positive variances",
        ));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.angle_deg), hi.max(p.angle_deg))
        });
    if hi - lo < MIN_SPAN_DEG {
        return Err(Error::invalid(format!(
            "fit points span {}° < {MIN_SPAN_DEG}°",
            hi - lo
        )));
    }
    let (ymin_i, ymax_i) = (0..points.len()).fold((0, 0), |(a, b), i| {
        (
            if points[i].value < points[a].value { i } else { a },
            if points[i].value > points[b].value { i } else { b },
        )
    });
    let (ymin, ymax) = (points[ymin_i].value, points[ymax_i].value);
    if ymax - ymin <= 1e-12 * ymax.abs().max(ymin.abs()) {
        return Err(Error::DegenerateData("all values are equal".into()));
    }

    let problem = Problem {
        theta: points.iter().map(|p| p.angle_deg.to_radians()).collect(),
        y: points.iter().map(|p| p.value).collect(),
        w: points.iter().map(|p| 1.0 / p.variance).collect(),
    };
    let a0 = ((ymax + ymin) / 2.0).max(f64::MIN_POSITIVE);
    let v0 = ((ymax - ymin) / (ymax + ymin).abs().max(f64::MIN_POSITIVE)).clamp(0.05, 0.95);
    let theta_min = points[ymin_i].angle_deg;

    let mut best: Option<(Params, f64, usize)> = None;
    let mut used = 0;
    for k in 0..4 {
        let start = Params::new(a0, v0, (theta_min + 45.0 * k as f64).to_radians());
        if let Some((p, c2, it)) = levenberg_marquardt(&problem, start) {
            used += it;
            if best.as_ref().is_none_or(|b| c2 < b.1) {
                best = Some((p, c2, it));
            }
        } else {
            used += MAX_FIT_ITERATIONS;
        }
    }
    let (p, chi2, _) = best.ok_or(Error::NonConvergence {
        iterations: MAX_FIT_ITERATIONS,
    })?;

    let (jtj, _) = problem.normal_equations(&p);
    let sigma = jtj
        .try_inverse()
        .map(|cov| Vector3::new(cov[(0, 0)], cov[(1, 1)], cov[(2, 2)]).map(|v| v.max(0.0).sqrt()))
        .unwrap_or_else(|| Vector3::repeat(f64::INFINITY));
    Ok(CorrelationCurveFit {
        amplitude: p[0],
        visibility: p[1],
        phase_offset_deg: reduce_angle(p[2].to_degrees()),
        sigma_amplitude: sigma[0],
        sigma_visibility: sigma[1],
        sigma_phase_deg: sigma[2].to_degrees(),
        residual_norm: chi2.sqrt(),
        chi_square: chi2,
        dof: points.len().saturating_sub(3),
        iterations: used,
    })
}

/// Swept-arm angle of each record; the other arm must be constant.
pub(crate) fn swept_angles(records: &[CountRecord]) -> Result<Vec<f64>> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("no records to fit"))?
        .setting;
    let same = |a: f64, b: f64| (a - b).abs() < 1e-9;
    if records
        .iter()
        .all(|r| same(r.setting.theta_signal(), first.theta_signal()))
    {
        Ok(records.iter().map(|r| r.setting.theta_idler()).collect())
    } else if records
        .iter()
        .all(|r| same(r.setting.theta_idler(), first.theta_idler()))
    {
        Ok(records.iter().map(|r| r.setting.theta_signal()).collect())
    } else {
        Err(Error::DegenerateData("records vary both analyzer arms".into()))
    }
}

fn fit_records(records: &[CountRecord], value: impl Fn(&CountRecord) -> f64) -> Result<CorrelationCurveFit> {
    let angles = swept_angles(records)?;
    let points: Vec<CurvePoint> = records
        .iter()
        .zip(angles)
        .map(|(r, angle_deg)| {
            let t = r.integration_time_s;
            CurvePoint {
                angle_deg,
                value: value(r) / t,
                // Poisson variance of the raw count, floored at one count
                variance: (r.coincidences as f64).max(1.0) / (t * t),
            }
        })
        .collect();
    fit_points(&points)
}

/// Fits raw coincidence rates of a sweep.
pub fn fit_curve(records: &[CountRecord]) -> Result<CorrelationCurveFit> {
    fit_records(records, |r| r.coincidences as f64)
}

/// Fits accidental-subtracted rates. Weights still come from the raw counts.
pub fn fit_corrected_curve(
    records: &[CountRecord],
    window: CoincidenceWindow,
) -> Result<CorrelationCurveFit> {
    fit_records(records, |r| {
        r.coincidences as f64 - r.expected_accidentals(window)
    })
}
