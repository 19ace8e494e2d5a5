//! Monte Carlo ray tracing of the lens-free pair-collection geometry.
//!
//! Frame: `z` runs along the pump axis with the origin at the crystal
//! centre, so the crystal occupies `z ∈ [−L/2, L/2]` and its exit face is
//! the plane `z = L/2`. Transverse coordinates are in µm, axial ones in mm.
//! Signal and idler each travel to their own detector; after the dichroic
//! split both detectors sit on the unfolded axis at the same distance.
//!
//! # Seeding
//!
//! Samples are processed in fixed chunks of [`CHUNK_SAMPLES`]. Chunk `k`
//! draws from `ChaCha8Rng::seed_from_u64(seeds::derive(seed, "geometry", k))`
//! regardless of which worker runs it, and per-chunk counts are summed, so
//! the estimate is bit-identical for any number of workers.

use std::f64::consts::TAU;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{seeds, source, Error, Result};

pub const CHUNK_SAMPLES: u64 = 1 << 16;
pub const MIN_SAMPLES: u64 = 10_000;

/// FWHM → standard deviation for a Gaussian profile.
pub const FWHM_TO_SIGMA: f64 = 0.424_660_900_144_009_5; // 1 / (2·√(2 ln 2))

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpeningAngleDistribution {
    /// Uniform in polar angle over `[0, α]`.
    UniformAngle,
    /// Uniform in solid angle inside the cone of half-angle `α`.
    UniformSolidAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceReference {
    SourceCenter,
    ExitFace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalLayout {
    pub crystal_length_mm: f64,
    pub crystal_refractive_index: f64,
    pub beam_fwhm_horizontal_um: f64,
    pub beam_fwhm_vertical_um: f64,
    /// Largest internal opening angle of a pair, degrees.
    pub max_opening_angle_deg: f64,
    pub opening_angle_distribution: OpeningAngleDistribution,
    pub detector_diameter_um: f64,
    pub detector_distance_mm: f64,
    pub distance_reference: DistanceReference,
    pub pump_wavelength_nm: f64,
    pub nondegenerate_split_nm: f64,
    /// Full width of the uniform signal-wavelength band, nm.
    pub wavelength_band_nm: f64,
}

impl Default for OpticalLayout {
    fn default() -> Self {
        Self {
            crystal_length_mm: 6.0,
            crystal_refractive_index: 1.66,
            beam_fwhm_horizontal_um: 800.0,
            beam_fwhm_vertical_um: 400.0,
            max_opening_angle_deg: 0.3,
            opening_angle_distribution: OpeningAngleDistribution::UniformAngle,
            detector_diameter_um: 500.0,
            detector_distance_mm: 100.0,
            distance_reference: DistanceReference::SourceCenter,
            pump_wavelength_nm: 405.0,
            nondegenerate_split_nm: 50.0,
            wavelength_band_nm: 20.0,
        }
    }
}

impl OpticalLayout {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("crystal_length_mm", self.crystal_length_mm),
            ("crystal_refractive_index", self.crystal_refractive_index),
            ("detector_diameter_um", self.detector_diameter_um),
            ("detector_distance_mm", self.detector_distance_mm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("beam_fwhm_horizontal_um", self.beam_fwhm_horizontal_um),
            ("beam_fwhm_vertical_um", self.beam_fwhm_vertical_um),
            ("wavelength_band_nm", self.wavelength_band_nm),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        if !(0.0..90.0).contains(&self.max_opening_angle_deg) {
            return Err(Error::invalid(format!(
                "max opening angle {}° outside [0, 90)",
                self.max_opening_angle_deg
            )));
        }
        if exit_angle_rad(
            self.max_opening_angle_deg.to_radians(),
            self.crystal_refractive_index,
        )
        .is_none()
        {
            return Err(Error::invalid(
                "max opening angle exceeds the total-internal-reflection limit",
            ));
        }
        if self.detector_plane_z_mm() <= self.exit_face_z_mm() {
            return Err(Error::invalid(
                "detector plane must lie beyond the crystal exit face",
            ));
        }
        let (s, _) = self.nominal_wavelengths()?;
        if s - self.wavelength_band_nm / 2.0 <= self.pump_wavelength_nm {
            return Err(Error::invalid("wavelength band reaches the pump wavelength"));
        }
        Ok(())
    }

    pub fn exit_face_z_mm(&self) -> f64 {
        self.crystal_length_mm / 2.0
    }

    pub fn detector_plane_z_mm(&self) -> f64 {
        match self.distance_reference {
            DistanceReference::SourceCenter => self.detector_distance_mm,
            DistanceReference::ExitFace => self.exit_face_z_mm() + self.detector_distance_mm,
        }
    }

    pub fn detector_radius_um(&self) -> f64 {
        self.detector_diameter_um / 2.0
    }

    pub fn nominal_wavelengths(&self) -> Result<(f64, f64)> {
        source::signal_idler_wavelengths(self.pump_wavelength_nm, self.nondegenerate_split_nm)
    }
}

pub type Vec3 = [f64; 3];

/// One sampled SPDC emission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayPair {
    pub birth_axial_mm: f64,
    /// (horizontal, vertical), µm.
    pub birth_transverse_um: [f64; 2],
    /// Internal unit directions.
    pub signal_direction: Vec3,
    pub idler_direction: Vec3,
    pub signal_wavelength_nm: f64,
    pub idler_wavelength_nm: f64,
}

fn direction(polar: f64, azimuth: f64) -> Vec3 {
    let (sp, cp) = polar.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    [sp * ca, sp * sa, cp]
}

struct Sampler {
    axial: (f64, f64),
    horizontal: Normal<f64>,
    vertical: Normal<f64>,
    max_angle: f64,
    cos_max: f64,
    distribution: OpeningAngleDistribution,
    signal_band: (f64, f64),
    pump_nm: f64,
}

impl Sampler {
    fn new(layout: &OpticalLayout) -> Result<Self> {
        layout.validate()?;
        let half = layout.crystal_length_mm / 2.0;
        let (signal_nm, _) = layout.nominal_wavelengths()?;
        let normal =
            |fwhm: f64| Normal::new(0.0, fwhm * FWHM_TO_SIGMA).map_err(|e| Error::invalid(e.to_string()));
        let max_angle = layout.max_opening_angle_deg.to_radians();
        Ok(Self {
            axial: (-half, half),
            horizontal: normal(layout.beam_fwhm_horizontal_um)?,
            vertical: normal(layout.beam_fwhm_vertical_um)?,
            max_angle,
            cos_max: max_angle.cos(),
            distribution: layout.opening_angle_distribution,
            signal_band: (
                signal_nm - layout.wavelength_band_nm / 2.0,
                signal_nm + layout.wavelength_band_nm / 2.0,
            ),
            pump_nm: layout.pump_wavelength_nm,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RayPair {
        let u_axial: f64 = rng.random();
        let birth_axial_mm = self.axial.0 + (self.axial.1 - self.axial.0) * u_axial;
        let birth_transverse_um = [self.horizontal.sample(rng), self.vertical.sample(rng)];
        let u_angle: f64 = rng.random();
        let polar = match self.distribution {
            OpeningAngleDistribution::UniformAngle => self.max_angle * u_angle,
            OpeningAngleDistribution::UniformSolidAngle => {
                (1.0 - u_angle * (1.0 - self.cos_max)).clamp(-1.0, 1.0).acos()
            }
        };
        let azimuth = TAU * rng.random::<f64>();
        let u_wl: f64 = rng.random();
        let signal_wavelength_nm = self.signal_band.0 + (self.signal_band.1 - self.signal_band.0) * u_wl;
        let idler_wavelength_nm = 1.0 / (1.0 / self.pump_nm - 1.0 / signal_wavelength_nm);
        RayPair {
            birth_axial_mm,
            birth_transverse_um,
            signal_direction: direction(polar, azimuth),
            idler_direction: direction(polar, azimuth + std::f64::consts::PI),
            signal_wavelength_nm,
            idler_wavelength_nm,
        }
    }
}

/// Draws one pair: axial birth uniform over the crystal, transverse birth
/// Gaussian with the pump FWHMs, opening angle in `[0, α]`, azimuth uniform
/// with the idler opposite the signal.
pub fn sample_ray_pair<R: Rng + ?Sized>(layout: &OpticalLayout, rng: &mut R) -> Result<RayPair> {
    Ok(Sampler::new(layout)?.sample(rng))
}

/// Snell refraction of a polar angle at the flat exit face; `None` past the
/// critical angle.
pub fn exit_angle_rad(internal_rad: f64, refractive_index: f64) -> Option<f64> {
    let s = refractive_index * internal_rad.sin();
    (s.abs() <= 1.0).then(|| s.asin())
}

/// Refracts an internal unit direction into air at the exit face (normal `+z`).
/// The tangential component scales by `n`; the azimuth is preserved.
pub fn refract_at_exit(direction: Vec3, refractive_index: f64) -> Option<Vec3> {
    let tx = refractive_index * direction[0];
    let ty = refractive_index * direction[1];
    let t2 = tx * tx + ty * ty;
    if t2 > 1.0 {
        return None;
    }
    Some([tx, ty, (1.0 - t2).sqrt()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HitOutcome {
    Both,
    SignalOnly,
    IdlerOnly,
    Neither,
}

/// Landing points of both photons on their detector planes, µm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landing {
    pub signal_um: [f64; 2],
    pub idler_um: [f64; 2],
    pub outcome: HitOutcome,
}

fn propagate(
    origin_um: [f64; 2],
    birth_z_mm: f64,
    direction: Vec3,
    layout: &OpticalLayout,
) -> Option<[f64; 2]> {
    let internal_mm = layout.exit_face_z_mm() - birth_z_mm;
    let external_mm = layout.detector_plane_z_mm() - layout.exit_face_z_mm();
    let outside = refract_at_exit(direction, layout.crystal_refractive_index)?;
    let step_in = 1000.0 * internal_mm / direction[2];
    let step_out = 1000.0 * external_mm / outside[2];
    Some([
        origin_um[0] + step_in * direction[0] + step_out * outside[0],
        origin_um[1] + step_in * direction[1] + step_out * outside[1],
    ])
}

/// Propagates both photons to the detector plane and classifies the pair.
pub fn trace_landing(pair: &RayPair, layout: &OpticalLayout) -> Landing {
    let r2 = layout.detector_radius_um().powi(2);
    let land = |d: Vec3| propagate(pair.birth_transverse_um, pair.birth_axial_mm, d, layout);
    let (s, i) = (land(pair.signal_direction), land(pair.idler_direction));
    let hit = |p: Option<[f64; 2]>| p.is_some_and(|p| p[0] * p[0] + p[1] * p[1] <= r2);
    let outcome = match (hit(s), hit(i)) {
        (true, true) => HitOutcome::Both,
        (true, false) => HitOutcome::SignalOnly,
        (false, true) => HitOutcome::IdlerOnly,
        (false, false) => HitOutcome::Neither,
    };
    let nan = [f64::NAN; 2];
    Landing {
        signal_um: s.unwrap_or(nan),
        idler_um: i.unwrap_or(nan),
        outcome,
    }
}

pub fn trace_to_detector(pair: &RayPair, layout: &OpticalLayout) -> HitOutcome {
    trace_landing(pair, layout).outcome
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EfficiencyEstimate {
    pub n_samples: u64,
    pub both_hit: u64,
    pub only_signal: u64,
    pub only_idler: u64,
    pub neither: u64,
    pub efficiency: f64,
    pub std_error: f64,
}

impl EfficiencyEstimate {
    fn from_counts(c: [u64; 4]) -> Self {
        let n: u64 = c.iter().sum();
        let p = if n > 0 { c[0] as f64 / n as f64 } else { 0.0 };
        Self {
            n_samples: n,
            both_hit: c[0],
            only_signal: c[1],
            only_idler: c[2],
            neither: c[3],
            efficiency: p,
            std_error: if n > 0 {
                (p * (1.0 - p) / n as f64).sqrt()
            } else {
                0.0
            },
        }
    }

    /// Fraction of pairs whose signal photon reaches its detector.
    pub fn signal_singles_fraction(&self) -> f64 {
        (self.both_hit + self.only_signal) as f64 / self.n_samples as f64
    }

    pub fn idler_singles_fraction(&self) -> f64 {
        (self.both_hit + self.only_idler) as f64 / self.n_samples as f64
    }

    pub const BUCKET_HEADER: &'static str = "bucket,count,fraction";

    /// One row per classification bucket.
    pub fn write_buckets<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::BUCKET_HEADER)?;
        let n = self.n_samples.max(1) as f64;
        for (name, count) in [
            ("both", self.both_hit),
            ("signal_only", self.only_signal),
            ("idler_only", self.only_idler),
            ("neither", self.neither),
        ] {
            writeln!(out, "{name},{count},{}", count as f64 / n)?;
        }
        Ok(())
    }
}

/// Square detector-plane histogram centred on the axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitMap {
    pub half_width_um: f64,
    pub bins: usize,
    /// Signal landing positions of all pairs, row-major `[y][x]`.
    pub signal: Vec<u64>,
    /// Signal landing positions of pairs where both photons hit.
    pub coincidence: Vec<u64>,
}

impl HitMap {
    pub fn new(half_width_um: f64, bins: usize) -> Result<Self> {
        if !(half_width_um > 0.0) || bins == 0 {
            return Err(Error::invalid("hit map needs a positive extent and ≥ 1 bin"));
        }
        Ok(Self {
            half_width_um,
            bins,
            signal: vec![0; bins * bins],
            coincidence: vec![0; bins * bins],
        })
    }

    fn index(&self, p: [f64; 2]) -> Option<usize> {
        let scale = self.bins as f64 / (2.0 * self.half_width_um);
        let ix = ((p[0] + self.half_width_um) * scale).floor();
        let iy = ((p[1] + self.half_width_um) * scale).floor();
        let n = self.bins as f64;
        (ix >= 0.0 && ix < n && iy >= 0.0 && iy < n).then(|| iy as usize * self.bins + ix as usize)
    }

    fn record(&mut self, landing: &Landing) {
        if let Some(k) = self.index(landing.signal_um) {
            self.signal[k] += 1;
            if landing.outcome == HitOutcome::Both {
                self.coincidence[k] += 1;
            }
        }
    }

    fn merge(mut self, other: &HitMap) -> Self {
        for (a, b) in self.signal.iter_mut().zip(&other.signal) {
            *a += b;
        }
        for (a, b) in self.coincidence.iter_mut().zip(&other.coincidence) {
            *a += b;
        }
        self
    }

    pub fn bin_center(&self, ix: usize) -> f64 {
        -self.half_width_um + (ix as f64 + 0.5) * 2.0 * self.half_width_um / self.bins as f64
    }

    pub const HEADER: &'static str = "x_um,y_um,signal,coincidence";

    /// One row per bin, bin centres in µm.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::HEADER)?;
        for iy in 0..self.bins {
            for ix in 0..self.bins {
                let k = iy * self.bins + ix;
                writeln!(
                    out,
                    "{},{},{},{}",
                    self.bin_center(ix),
                    self.bin_center(iy),
                    self.signal[k],
                    self.coincidence[k]
                )?;
            }
        }
        Ok(())
    }
}

fn outcome_index(o: HitOutcome) -> usize {
    match o {
        HitOutcome::Both => 0,
        HitOutcome::SignalOnly => 1,
        HitOutcome::IdlerOnly => 2,
        HitOutcome::Neither => 3,
    }
}

fn run_chunk(
    sampler: &Sampler,
    layout: &OpticalLayout,
    seed: u64,
    chunk: u64,
    n: u64,
    mut hitmap: Option<&mut HitMap>,
) -> [u64; 4] {
    let mut rng = seeds::derived_rng(seed, "geometry", chunk);
    let mut counts = [0u64; 4];
    for _ in 0..n {
        let pair = sampler.sample(&mut rng);
        let landing = trace_landing(&pair, layout);
        counts[outcome_index(landing.outcome)] += 1;
        if let Some(map) = hitmap.as_deref_mut() {
            map.record(&landing);
        }
    }
    counts
}

fn chunks(n_samples: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    let n_chunks = n_samples.div_ceil(CHUNK_SAMPLES);
    (0..n_chunks).into_par_iter().map(move |k| {
        let start = k * CHUNK_SAMPLES;
        (k, CHUNK_SAMPLES.min(n_samples - start))
    })
}

fn sum4(a: [u64; 4], b: [u64; 4]) -> [u64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn check_samples(n_samples: u64) -> Result<()> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "n_samples = {n_samples} below the minimum of {MIN_SAMPLES}"
        )));
    }
    Ok(())
}

/// Monte Carlo geometric pair-collection efficiency with binomial error.
/// Runs on the current rayon pool; see the module docs for the seeding scheme.
pub fn estimate_geometric_efficiency(
    layout: &OpticalLayout,
    n_samples: u64,
    seed: u64,
) -> Result<EfficiencyEstimate> {
    check_samples(n_samples)?;
    let sampler = Sampler::new(layout)?;
    let counts = chunks(n_samples)
        .map(|(k, n)| run_chunk(&sampler, layout, seed, k, n, None))
        .reduce(|| [0; 4], sum4);
    Ok(EfficiencyEstimate::from_counts(counts))
}

/// Same estimate on a dedicated pool of `workers` threads.
pub fn estimate_with_workers(
    layout: &OpticalLayout,
    n_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<EfficiencyEstimate> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    pool.install(|| estimate_geometric_efficiency(layout, n_samples, seed))
}

/// Estimate plus a detector-plane histogram of signal landing points.
pub fn estimate_with_hitmap(
    layout: &OpticalLayout,
    n_samples: u64,
    seed: u64,
    half_width_um: f64,
    bins: usize,
) -> Result<(EfficiencyEstimate, HitMap)> {
    check_samples(n_samples)?;
    let sampler = Sampler::new(layout)?;
    let empty = HitMap::new(half_width_um, bins)?;
    let (counts, map) = chunks(n_samples)
        .map(|(k, n)| {
            let mut map = empty.clone();
            let c = run_chunk(&sampler, layout, seed, k, n, Some(&mut map));
            (c, map)
        })
        .reduce(
            || ([0; 4], empty.clone()),
            |(ca, ma), (cb, mb)| (sum4(ca, cb), ma.merge(&mb)),
        );
    Ok((EfficiencyEstimate::from_counts(counts), map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn on_axis_pair() -> RayPair {
        RayPair {
            birth_axial_mm: 0.0,
            birth_transverse_um: [0.0, 0.0],
            signal_direction: [0.0, 0.0, 1.0],
            idler_direction: [0.0, 0.0, 1.0],
            signal_wavelength_nm: 760.0,
            idler_wavelength_nm: 867.0,
        }
    }

    #[test]
    fn collinear_limit_samples_on_axis() {
        let layout = OpticalLayout {
            max_opening_angle_deg: 0.0,
            ..OpticalLayout::default()
        };
        let mut rng = seeds::rng(1);
        for _ in 0..100 {
            let p = sample_ray_pair(&layout, &mut rng).unwrap();
            assert_eq!(p.signal_direction, [0.0, 0.0, 1.0]);
            assert_eq!(p.idler_direction, [0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn directions_are_unit_and_azimuths_opposite() {
        let layout = OpticalLayout::default();
        let mut rng = seeds::rng(2);
        for _ in 0..10_000 {
            let p = sample_ray_pair(&layout, &mut rng).unwrap();
            for d in [p.signal_direction, p.idler_direction] {
                let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                assert!((n - 1.0).abs() < 1e-12);
            }
            let phi_s = p.signal_direction[1].atan2(p.signal_direction[0]);
            let phi_i = p.idler_direction[1].atan2(p.idler_direction[0]);
            let diff = (phi_s - phi_i).rem_euclid(TAU);
            assert!((diff - std::f64::consts::PI).abs() < 1e-12, "{diff}");
            // transverse momenta cancel
            assert!((p.signal_direction[0] + p.idler_direction[0]).abs() < 1e-15);
            assert!((p.signal_direction[1] + p.idler_direction[1]).abs() < 1e-15);
            let e = 1.0 / p.signal_wavelength_nm + 1.0 / p.idler_wavelength_nm - 1.0 / 405.0;
            assert!(e.abs() < 1e-12);
            assert!(p.birth_axial_mm.abs() <= 3.0);
        }
    }

    #[test]
    fn snell_examples() {
        assert_eq!(exit_angle_rad(0.0, 1.66), Some(0.0));
        let out = exit_angle_rad(0.3f64.to_radians(), 1.66).unwrap().to_degrees();
        assert_abs_diff_eq!(
            out,
            (1.66 * 0.3f64.to_radians().sin()).asin().to_degrees(),
            epsilon = 1e-12
        );
        assert!((out - 0.498).abs() < 1e-3);
        let tiny = 1e-6;
        assert_abs_diff_eq!(exit_angle_rad(tiny, 1.66).unwrap() / tiny, 1.66, epsilon = 1e-9);
        assert!(exit_angle_rad(80f64.to_radians(), 1.66).is_none());
        let d = direction(0.3f64.to_radians(), 1.0);
        let o = refract_at_exit(d, 1.66).unwrap();
        assert_abs_diff_eq!(o[2].acos().to_degrees(), out, epsilon = 1e-9);
        assert_abs_diff_eq!(o[1].atan2(o[0]), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_examples() {
        let layout = OpticalLayout::default();
        assert_eq!(trace_to_detector(&on_axis_pair(), &layout), HitOutcome::Both);

        let theta = 0.3f64.to_radians();
        let mut wide = on_axis_pair();
        wide.signal_direction = direction(theta, 0.0);
        wide.idler_direction = direction(theta, std::f64::consts::PI);
        let l = trace_landing(&wide, &layout);
        let r = l.signal_um[0];
        // 3 mm inside at 0.3°, 97 mm outside at 0.498°
        let expect = 3000.0 * theta.tan() + 97_000.0 * exit_angle_rad(theta, 1.66).unwrap().tan();
        assert_abs_diff_eq!(r, expect, epsilon = 1e-9);
        assert!(r > 800.0 && r < 900.0);
        assert_eq!(l.outcome, HitOutcome::Neither);

        // Born 200 µm off axis; a small angle pushes the signal inward and
        // the idler outward.
        let small = 0.08f64.to_radians();
        let mut lopsided = on_axis_pair();
        lopsided.birth_transverse_um = [200.0, 0.0];
        lopsided.signal_direction = direction(small, std::f64::consts::PI);
        lopsided.idler_direction = direction(small, 0.0);
        assert_eq!(trace_to_detector(&lopsided, &layout), HitOutcome::SignalOnly);
        lopsided.signal_direction = direction(small, 0.0);
        lopsided.idler_direction = direction(small, std::f64::consts::PI);
        assert_eq!(trace_to_detector(&lopsided, &layout), HitOutcome::IdlerOnly);
    }

    #[test]
    fn exit_face_reference_moves_detector() {
        let layout = OpticalLayout {
            distance_reference: DistanceReference::ExitFace,
            ..OpticalLayout::default()
        };
        assert_eq!(layout.detector_plane_z_mm(), 103.0);
    }

    #[test]
    fn sample_count_precondition() {
        assert!(estimate_geometric_efficiency(&OpticalLayout::default(), 100, 1).is_err());
    }

    #[test]
    fn everything_hits_with_huge_detector() {
        let layout = OpticalLayout {
            detector_diameter_um: 1e6,
            ..OpticalLayout::default()
        };
        let est = estimate_geometric_efficiency(&layout, 20_000, 4).unwrap();
        assert_eq!(est.efficiency, 1.0);
    }

    #[test]
    fn point_source_collinear_is_exact() {
        let layout = OpticalLayout {
            max_opening_angle_deg: 0.0,
            beam_fwhm_horizontal_um: 0.0,
            beam_fwhm_vertical_um: 0.0,
            ..OpticalLayout::default()
        };
        let est = estimate_geometric_efficiency(&layout, 10_000, 4).unwrap();
        assert_eq!(est.efficiency, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn bucket_export() {
        let est = EfficiencyEstimate::from_counts([3, 2, 1, 4]);
        let mut buf = Vec::new();
        est.write_buckets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], EfficiencyEstimate::BUCKET_HEADER);
        assert_eq!(lines[1], "both,3,0.3");
        assert_eq!(lines.len(), 5);
    }
}
