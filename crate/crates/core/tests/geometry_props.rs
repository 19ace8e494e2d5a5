mod common;

use proptest::prelude::*;
use qsat::geometry::{
    estimate_geometric_efficiency, estimate_with_workers, exit_angle_rad, sample_ray_pair, trace_to_detector,
    HitOutcome, OpeningAngleDistribution, OpticalLayout,
};
use qsat::seeds;

fn reduced_layout() -> OpticalLayout {
    OpticalLayout {
        detector_distance_mm: 40.0,
        detector_diameter_um: 800.0,
        ..OpticalLayout::default()
    }
}

#[test]
fn monte_carlo_matches_grid_oracle_on_reduced_layout() {
    for distribution in [
        OpeningAngleDistribution::UniformAngle,
        OpeningAngleDistribution::UniformSolidAngle,
    ] {
        let layout = OpticalLayout {
            opening_angle_distribution: distribution,
            ..reduced_layout()
        };
        let mc = estimate_geometric_efficiency(&layout, 400_000, 17).unwrap();
        let grid = common::grid_efficiency(&layout);
        assert!(
            (mc.efficiency - grid).abs() < 3.0 * mc.std_error,
            "{distribution:?}: mc {} ± {}, grid {grid}",
            mc.efficiency,
            mc.std_error
        );
    }
}

#[test]
fn trivial_limits_are_exact() {
    let collinear = OpticalLayout {
        max_opening_angle_deg: 0.0,
        beam_fwhm_horizontal_um: 0.0,
        beam_fwhm_vertical_um: 0.0,
        ..OpticalLayout::default()
    };
    let mc = estimate_geometric_efficiency(&collinear, 10_000, 1).unwrap();
    assert_eq!(mc.efficiency, 1.0);
    let huge = OpticalLayout {
        detector_diameter_um: 1e6,
        ..OpticalLayout::default()
    };
    let mc = estimate_geometric_efficiency(&huge, 10_000, 1).unwrap();
    assert_eq!(mc.efficiency, 1.0);
}

#[test]
fn transverse_birth_fwhm_matches_beam() {
    let layout = OpticalLayout::default();
    let mut rng = seeds::rng(5);
    let n = 1_000_000;
    let mut xs: Vec<f64> = (0..n)
        .map(|_| sample_ray_pair(&layout, &mut rng).unwrap().birth_transverse_um[0])
        .collect();
    xs.sort_by(f64::total_cmp);
    // half-maximum points of a Gaussian sit at the 6.25% / 93.75% quantiles
    let q = |p: f64| xs[(p * n as f64) as usize];
    let cdf_at_half_max = 0.5 * (1.0 + statrs::function::erf::erf(-(2.0f64.ln()).sqrt()));
    let fwhm = q(1.0 - cdf_at_half_max) - q(cdf_at_half_max);
    assert!((fwhm / 800.0 - 1.0).abs() < 0.02, "fwhm {fwhm}");
}

#[test]
fn efficiency_ladders_are_monotone() {
    let est = |layout: &OpticalLayout| estimate_geometric_efficiency(layout, 200_000, 3).unwrap();
    let mut prev: Option<qsat::geometry::EfficiencyEstimate> = None;
    for d in [200.0, 500.0, 1000.0, 2000.0] {
        let e = est(&OpticalLayout {
            detector_diameter_um: d,
            ..OpticalLayout::default()
        });
        if let Some(p) = prev {
            assert!(
                e.efficiency - 3.0 * e.std_error > p.efficiency + 3.0 * p.std_error,
                "diameter {d}"
            );
        }
        prev = Some(e);
    }
    prev = None;
    for alpha in [0.05, 0.1, 0.2, 0.3] {
        let e = est(&OpticalLayout {
            max_opening_angle_deg: alpha,
            ..OpticalLayout::default()
        });
        if let Some(p) = prev {
            assert!(
                e.efficiency + 3.0 * e.std_error < p.efficiency - 3.0 * p.std_error,
                "alpha {alpha}"
            );
        }
        prev = Some(e);
    }
}

#[test]
fn worker_count_does_not_change_the_estimate() {
    let layout = OpticalLayout::default();
    let one = estimate_with_workers(&layout, 300_000, 11, 1).unwrap();
    for w in [2, 3, 8] {
        assert_eq!(estimate_with_workers(&layout, 300_000, 11, w).unwrap(), one);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairs_are_unit_and_antisymmetric(seed in any::<u64>(), alpha in 0.0f64..2.0) {
        let layout = OpticalLayout { max_opening_angle_deg: alpha, ..OpticalLayout::default() };
        let mut rng = seeds::rng(seed);
        for _ in 0..50 {
            let p = sample_ray_pair(&layout, &mut rng).unwrap();
            let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            prop_assert!((norm(p.signal_direction) - 1.0).abs() < 1e-12);
            prop_assert!((norm(p.idler_direction) - 1.0).abs() < 1e-12);
            prop_assert!((p.signal_direction[0] + p.idler_direction[0]).abs() < 1e-12);
            prop_assert!((p.signal_direction[1] + p.idler_direction[1]).abs() < 1e-12);
            prop_assert!(p.signal_direction[2].acos() <= alpha.to_radians() + 1e-12);
            let s = p.birth_axial_mm.abs();
            prop_assert!(s <= layout.crystal_length_mm / 2.0);
        }
    }

    #[test]
    fn counts_partition_samples(seed in any::<u64>(), diameter in 100.0f64..3000.0) {
        let layout = OpticalLayout { detector_diameter_um: diameter, ..OpticalLayout::default() };
        let e = estimate_geometric_efficiency(&layout, 20_000, seed).unwrap();
        prop_assert_eq!(e.both_hit + e.only_signal + e.only_idler + e.neither, e.n_samples);
        prop_assert_eq!(e.efficiency, e.both_hit as f64 / e.n_samples as f64);
        prop_assert!(e.both_hit <= e.both_hit + e.only_signal.min(e.only_idler));
        prop_assert_eq!(estimate_geometric_efficiency(&layout, 20_000, seed).unwrap(), e);
    }

    #[test]
    fn snell_is_monotone_and_paraxial(theta in 0.0f64..0.6, n in 1.0f64..2.5) {
        let out = exit_angle_rad(theta.to_radians(), n);
        if let Some(o) = out {
            prop_assert!(o >= theta.to_radians() - 1e-15);
            if theta > 0.0 && theta < 1e-3 {
                prop_assert!((o / theta.to_radians() - n).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn outcome_classification_fixtures() {
    let layout = OpticalLayout::default();
    let mut rng = seeds::rng(0);
    let mut pair = sample_ray_pair(&layout, &mut rng).unwrap();
    pair.birth_transverse_um = [0.0, 0.0];
    pair.signal_direction = [0.0, 0.0, 1.0];
    pair.idler_direction = [0.0, 0.0, 1.0];
    assert_eq!(trace_to_detector(&pair, &layout), HitOutcome::Both);
    let t = 0.3f64.to_radians();
    pair.signal_direction = [t.sin(), 0.0, t.cos()];
    pair.idler_direction = [-t.sin(), 0.0, t.cos()];
    assert_eq!(trace_to_detector(&pair, &layout), HitOutcome::Neither);
    // a small angle plus an offset towards the signal side saves only the signal
    let t = 0.05f64.to_radians();
    pair.signal_direction = [-t.sin(), 0.0, t.cos()];
    pair.idler_direction = [t.sin(), 0.0, t.cos()];
    pair.birth_transverse_um = [200.0, 0.0];
    assert_eq!(trace_to_detector(&pair, &layout), HitOutcome::SignalOnly);
}
