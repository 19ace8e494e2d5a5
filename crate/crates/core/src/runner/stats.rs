use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Sample mean and (n − 1) standard deviation.
pub fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t_statistic: f64,
    pub dof: f64,
    /// Two-sided.
    pub p_value: f64,
}

/// Welch's unequal-variance two-sample t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("Welch test needs ≥ 2 samples per group"));
    }
    let (ma, sa) = mean_and_std(a);
    let (mb, sb) = mean_and_std(b);
    let (va, vb) = (sa * sa / a.len() as f64, sb * sb / b.len() as f64);
    let se2 = va + vb;
    if !(se2 > 0.0) {
        return Err(Error::DegenerateData("both samples have zero variance".into()));
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(WelchResult {
        t_statistic: t,
        dof,
        p_value: 2.0 * (1.0 - dist.cdf(t.abs())),
    })
}
