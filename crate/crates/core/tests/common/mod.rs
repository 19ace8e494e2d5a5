//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use qsat::geometry::{OpeningAngleDistribution, OpticalLayout, FWHM_TO_SIGMA};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use statrs::function::erf::erf;

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Deterministic grid integration of the pair-collection efficiency.
///
/// Both photons share one polar angle and opposite azimuths, so for a pair
/// born at transverse offset `o` with radial displacement `d` along unit
/// vector `u`, the landings are `o ± d·u`. Both hit iff `o` lies in the lens
/// `|s| ≤ √(R² − w²) − d` (s along u, w across). The Gaussian mass of that
/// lens is integrated over `w` with the `s` direction done by the normal CDF,
/// tabulated in `d`, then averaged over azimuth, polar angle and birth depth.
pub fn grid_efficiency(layout: &OpticalLayout) -> f64 {
    let r = layout.detector_radius_um();
    let sx = layout.beam_fwhm_horizontal_um * FWHM_TO_SIGMA;
    let sy = layout.beam_fwhm_vertical_um * FWHM_TO_SIGMA;

    let lens_mass = |d: f64| -> f64 {
        if d >= r {
            return 0.0;
        }
        let (n_phi, n_w) = (48, 400);
        let mut total = 0.0;
        for ip in 0..n_phi {
            // the beam and the lens are symmetric under both reflections
            let phi = FRAC_PI_2 * (ip as f64 + 0.5) / n_phi as f64;
            let (sn, c) = phi.sin_cos();
            let var_s = sx * sx * c * c + sy * sy * sn * sn;
            let var_w = sx * sx * sn * sn + sy * sy * c * c;
            let cov = (sy * sy - sx * sx) * c * sn;
            let cond_sd = (var_s - cov * cov / var_w).max(0.0).sqrt();
            let w_max = (r * r - d * d).sqrt();
            let mut inner = 0.0;
            for iw in 0..n_w {
                // w = w_max·sin t smooths the square-root edges
                let t = -FRAC_PI_2 + PI * (iw as f64 + 0.5) / n_w as f64;
                let w = w_max * t.sin();
                let jac = w_max * t.cos() * PI / n_w as f64;
                let h = (r * r - w * w).max(0.0).sqrt() - d;
                if h <= 0.0 {
                    continue;
                }
                let density = (-0.5 * w * w / var_w).exp() / (2.0 * PI * var_w).sqrt();
                let mu = cov / var_w * w;
                let p = if cond_sd > 0.0 {
                    std_normal_cdf((h - mu) / cond_sd) - std_normal_cdf((-h - mu) / cond_sd)
                } else if mu.abs() <= h {
                    1.0
                } else {
                    0.0
                };
                inner += density * p * jac;
            }
            total += inner;
        }
        total / n_phi as f64
    };

    let n_table = 1200;
    let table: Vec<f64> = (0..=n_table)
        .map(|i| lens_mass(r * i as f64 / n_table as f64))
        .collect();
    let mass_at = |d: f64| -> f64 {
        if d >= r {
            return 0.0;
        }
        let x = d / r * n_table as f64;
        let i = (x.floor() as usize).min(n_table - 1);
        let f = x - i as f64;
        table[i] * (1.0 - f) + table[i + 1] * f
    };

    let n = layout.crystal_refractive_index;
    let exit = layout.exit_face_z_mm();
    let outside_mm = layout.detector_plane_z_mm() - exit;
    let half = layout.crystal_length_mm / 2.0;
    let alpha = layout.max_opening_angle_deg.to_radians();
    let (n_z, n_theta) = (160, 1600);
    let mut sum = 0.0;
    for iz in 0..n_z {
        let z = -half + 2.0 * half * (iz as f64 + 0.5) / n_z as f64;
        for it in 0..n_theta {
            let u = (it as f64 + 0.5) / n_theta as f64;
            let theta = match layout.opening_angle_distribution {
                OpeningAngleDistribution::UniformAngle => alpha * u,
                OpeningAngleDistribution::UniformSolidAngle => (1.0 - u * (1.0 - alpha.cos())).acos(),
            };
            let s_out = n * theta.sin();
            let tan_out = s_out / (1.0 - s_out * s_out).sqrt();
            let d = 1000.0 * ((exit - z) * theta.tan() + outside_mm * tan_out);
            sum += mass_at(d);
        }
    }
    sum / (n_z * n_theta) as f64
}

/// Brute-force accidental count between two independent Poisson streams:
/// every cross pair with `|t₁ − t₂| < τ/2` counts once.
pub fn timetag_accidentals<R: Rng + ?Sized>(
    rate1_hz: f64,
    rate2_hz: f64,
    tau_s: f64,
    duration_s: f64,
    rng: &mut R,
) -> u64 {
    let stream = |rate: f64, rng: &mut R| {
        let gap = Exp::new(rate).expect("positive rate");
        let mut t = 0.0;
        let mut out = Vec::new();
        loop {
            t += gap.sample(rng);
            if t >= duration_s {
                break out;
            }
            out.push(t);
        }
    };
    let a = stream(rate1_hz, rng);
    let b = stream(rate2_hz, rng);
    let half = tau_s / 2.0;
    let mut lo = 0;
    let mut count = 0;
    for &t in &a {
        while lo < b.len() && b[lo] <= t - half {
            lo += 1;
        }
        let mut j = lo;
        while j < b.len() && b[j] < t + half {
            count += 1;
            j += 1;
        }
    }
    count
}

/// Random mixed two-qubit density matrix `GG†/Tr(GG†)` from a complex
/// Ginibre matrix with `rank` columns.
pub fn random_density<R: Rng + ?Sized>(
    rank: usize,
    rng: &mut R,
) -> nalgebra::Matrix4<num_complex::Complex64> {
    let normal = rand_distr::StandardNormal;
    let g = nalgebra::DMatrix::<num_complex::Complex64>::from_fn(4, rank.max(1), |_, _| {
        num_complex::Complex64::new(normal.sample(rng), normal.sample(rng))
    });
    let rho = &g * g.adjoint();
    let trace = rho.trace();
    nalgebra::Matrix4::from_fn(|i, j| rho[(i, j)] / trace)
}
