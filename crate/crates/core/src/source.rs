//! Source model: crystal tilt phase, signal/idler wavelengths, laser
//! mode-hop maps and pair rates.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest crystal detuning accepted by the tilt model, µrad.
pub const MAX_DETUNING_URAD: f64 = 10_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub pump_wavelength_nm: f64,
    pub pump_linewidth_mhz: f64,
    pub beam_fwhm_horizontal_um: f64,
    pub beam_fwhm_vertical_um: f64,
    pub crystal_cut_angle_deg: f64,
    pub crystal_length_mm: f64,
    /// Phase slope of the pair phase with crystal detuning, rad/µrad.
    pub tilt_phase_coefficient: f64,
    /// Signal offset below degeneracy, nm.
    pub nondegenerate_split_nm: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            pump_wavelength_nm: 405.0,
            pump_linewidth_mhz: 160.0,
            beam_fwhm_horizontal_um: 800.0,
            beam_fwhm_vertical_um: 400.0,
            crystal_cut_angle_deg: 28.8,
            crystal_length_mm: 6.0,
            // cos(k · 100 µrad) = cos(π/6) ≈ 0.87 at the tolerance edge
            tilt_phase_coefficient: PI / 600.0,
            nondegenerate_split_nm: 50.0,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pump_wavelength_nm", self.pump_wavelength_nm),
            ("pump_linewidth_mhz", self.pump_linewidth_mhz),
            ("beam_fwhm_horizontal_um", self.beam_fwhm_horizontal_um),
            ("beam_fwhm_vertical_um", self.beam_fwhm_vertical_um),
            ("crystal_length_mm", self.crystal_length_mm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.tilt_phase_coefficient.is_finite() {
            return Err(Error::invalid("tilt_phase_coefficient must be finite"));
        }
        signal_idler_wavelengths(self.pump_wavelength_nm, self.nondegenerate_split_nm)?;
        Ok(())
    }
}

fn check_detuning(detuning_urad: f64) -> Result<()> {
    if !detuning_urad.is_finite() || detuning_urad.abs() > MAX_DETUNING_URAD {
        return Err(Error::invalid(format!(
            "detuning {detuning_urad} µrad outside ±{MAX_DETUNING_URAD} µrad"
        )));
    }
    Ok(())
}

/// Pair phase `Δφ = π + k·δθ` for a crystal detuning in µrad.
pub fn phase_from_tilt(detuning_urad: f64, config: &SourceConfig) -> Result<f64> {
    check_detuning(detuning_urad)?;
    Ok(PI + config.tilt_phase_coefficient * detuning_urad)
}

/// D/A visibility `|cos(k·δθ)|` of the ideal state at the given detuning.
pub fn visibility_vs_detuning(detuning_urad: f64, config: &SourceConfig) -> Result<f64> {
    check_detuning(detuning_urad)?;
    Ok((config.tilt_phase_coefficient * detuning_urad).cos().abs())
}

/// Signal and idler wavelengths for a pump wavelength and a signal offset
/// below degeneracy. The idler satisfies `1/λp = 1/λs + 1/λi`.
pub fn signal_idler_wavelengths(pump_nm: f64, split_nm: f64) -> Result<(f64, f64)> {
    let fail = || Error::NoWavelengthSolution { pump_nm, split_nm };
    if !(pump_nm > 0.0) || !pump_nm.is_finite() || !(split_nm >= 0.0) || !split_nm.is_finite() {
        return Err(fail());
    }
    let signal = 2.0 * pump_nm - split_nm;
    if signal <= pump_nm {
        return Err(fail());
    }
    let idler = 1.0 / (1.0 / pump_nm - 1.0 / signal);
    if !idler.is_finite() || idler <= 0.0 {
        return Err(fail());
    }
    Ok((signal, idler))
}

/// Detected or generated pair rate for a pump power, pairs/s.
pub fn pair_rate(pump_power_mw: f64, brightness: f64) -> Result<f64> {
    if !(pump_power_mw >= 0.0) || !(brightness >= 0.0) {
        return Err(Error::invalid(format!(
            "pump power {pump_power_mw} mW and brightness {brightness} must be non-negative"
        )));
    }
    Ok(pump_power_mw * brightness)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserOperatingPoint {
    pub current_ma: f64,
    pub temperature_c: f64,
}

impl LaserOperatingPoint {
    pub fn new(current_ma: f64, temperature_c: f64) -> Result<Self> {
        if !(current_ma >= 0.0) || !temperature_c.is_finite() {
            return Err(Error::invalid(format!(
                "operating point ({current_ma} mA, {temperature_c} °C) invalid"
            )));
        }
        Ok(Self {
            current_ma,
            temperature_c,
        })
    }
}

/// Piecewise-linear laser output power vs. drive current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    currents_ma: Vec<f64>,
    powers_mw: Vec<f64>,
}

impl PowerCurve {
    pub fn new(currents_ma: Vec<f64>, powers_mw: Vec<f64>) -> Result<Self> {
        if currents_ma.len() != powers_mw.len() || currents_ma.len() < 2 {
            return Err(Error::invalid(
                "power curve needs ≥ 2 matching (current, power) nodes",
            ));
        }
        if !strictly_increasing(&currents_ma) {
            return Err(Error::invalid("power curve currents must be strictly increasing"));
        }
        if powers_mw.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::invalid("power curve powers must be non-negative"));
        }
        Ok(Self {
            currents_ma,
            powers_mw,
        })
    }

    /// Threshold, linear rise, a flat plateau, then a second rise.
    ///
    /// The plateau reproduces the non-proportional current/power behaviour
    /// around mode transitions.
    pub fn with_plateau(
        threshold_ma: f64,
        slope_mw_per_ma: f64,
        plateau_ma: (f64, f64),
        max_current_ma: f64,
    ) -> Result<Self> {
        let (p0, p1) = plateau_ma;
        if !(threshold_ma < p0 && p0 < p1 && p1 < max_current_ma) {
            return Err(Error::invalid(
                "plateau must lie between threshold and max current",
            ));
        }
        let at_p0 = slope_mw_per_ma * (p0 - threshold_ma);
        let at_max = at_p0 + slope_mw_per_ma * (max_current_ma - p1);
        Self::new(
            vec![0.0, threshold_ma, p0, p1, max_current_ma],
            vec![0.0, 0.0, at_p0, at_p0, at_max],
        )
    }

    /// Output power at a drive current; clamps outside the tabulated range.
    pub fn power_at(&self, current_ma: f64) -> f64 {
        let n = self.currents_ma.len();
        if current_ma <= self.currents_ma[0] {
            return self.powers_mw[0];
        }
        if current_ma >= self.currents_ma[n - 1] {
            return self.powers_mw[n - 1];
        }
        let j = self.currents_ma.partition_point(|&c| c <= current_ma);
        let (c0, c1) = (self.currents_ma[j - 1], self.currents_ma[j]);
        let (p0, p1) = (self.powers_mw[j - 1], self.powers_mw[j]);
        p0 + (p1 - p0) * (current_ma - c0) / (c1 - c0)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.currents_ma
            .iter()
            .copied()
            .zip(self.powers_mw.iter().copied())
    }
}

impl Default for PowerCurve {
    fn default() -> Self {
        // ~17 mW near 40 mA, flat between 42 and 45 mA.
        Self::with_plateau(20.0, 0.85, (42.0, 45.0), 60.0).expect("valid default power curve")
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

/// D/A visibility over a (current, temperature) grid plus the laser power curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeHopMap {
    currents_ma: Vec<f64>,
    temperatures_c: Vec<f64>,
    /// Row-major, one row per temperature.
    visibility: Vec<Vec<f64>>,
    power: PowerCurve,
}

impl ModeHopMap {
    pub fn new(
        currents_ma: Vec<f64>,
        temperatures_c: Vec<f64>,
        visibility: Vec<Vec<f64>>,
        power: PowerCurve,
    ) -> Result<Self> {
        if currents_ma.is_empty() || temperatures_c.is_empty() {
            return Err(Error::invalid("mode-hop map grid must be non-empty"));
        }
        if !strictly_increasing(&currents_ma) || !strictly_increasing(&temperatures_c) {
            return Err(Error::invalid("mode-hop map axes must be sorted and distinct"));
        }
        if visibility.len() != temperatures_c.len()
            || visibility.iter().any(|row| row.len() != currents_ma.len())
        {
            return Err(Error::invalid("mode-hop map grid is not rectangular"));
        }
        if visibility.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("mode-hop map visibilities must lie in [0, 1]"));
        }
        Ok(Self {
            currents_ma,
            temperatures_c,
            visibility,
            power,
        })
    }

    pub fn currents(&self) -> &[f64] {
        &self.currents_ma
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures_c
    }

    pub fn value(&self, temperature_index: usize, current_index: usize) -> f64 {
        self.visibility[temperature_index][current_index]
    }

    pub fn power_curve(&self) -> &PowerCurve {
        &self.power
    }

    pub fn with_power_curve(mut self, power: PowerCurve) -> Self {
        self.power = power;
        self
    }

    /// Parses the text grid format:
    ///
    /// ```text
    /// # comment
    /// currents: 30 31 32
    /// power: 8.5 9.35 10.2        (optional, mW at each current)
    /// 15.0: 0.88 0.41 0.12
    /// 15.5: 0.87 0.52 0.20
    /// ```
    ///
    /// Temperature rows are `t: v1 v2 ...`, one value per current.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let numbers = |line: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| err(line, format!("bad number `{tok}`")))
                })
                .collect()
        };

        let mut currents: Option<Vec<f64>> = None;
        let mut power: Option<Vec<f64>> = None;
        let mut temps = Vec::new();
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| err(line_no, "expected `key: values`".into()))?;
            let key = key.trim();
            match key {
                "currents" => currents = Some(numbers(line_no, rest)?),
                "power" => power = Some(numbers(line_no, rest)?),
                _ => {
                    if currents.is_none() {
                        return Err(err(line_no, "`currents:` header must come first".into()));
                    }
                    let t = key
                        .parse::<f64>()
                        .map_err(|_| err(line_no, format!("bad temperature `{key}`")))?;
                    temps.push(t);
                    rows.push(numbers(line_no, rest)?);
                }
            }
        }
        let currents = currents.ok_or_else(|| err(0, "missing `currents:` header".into()))?;
        let power = match power {
            Some(p) if currents.len() >= 2 => PowerCurve::new(currents.clone(), p)?,
            Some(_) => return Err(err(0, "power curve needs at least two currents".into())),
            None => PowerCurve::default(),
        };
        Self::new(currents, temps, rows, power)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Serializes to the text grid format accepted by [`ModeHopMap::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &mut dyn Iterator<Item = f64>| v.map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "currents: {}", join(&mut self.currents_ma.iter().copied()));
        let _ = writeln!(
            out,
            "power: {}",
            join(&mut self.currents_ma.iter().map(|&c| self.power.power_at(c)))
        );
        for (t, row) in self.temperatures_c.iter().zip(&self.visibility) {
            let _ = writeln!(out, "{t}: {}", join(&mut row.iter().copied()));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    fn bracket(axis: &[f64], x: f64) -> Option<(usize, usize, f64)> {
        let n = axis.len();
        if !(x >= axis[0] && x <= axis[n - 1]) {
            return None;
        }
        if n == 1 {
            return Some((0, 0, 0.0));
        }
        let j = axis.partition_point(|&a| a <= x).clamp(1, n - 1);
        let (a0, a1) = (axis[j - 1], axis[j]);
        Some((j - 1, j, (x - a0) / (a1 - a0)))
    }
}

/// Bilinear interpolation of the map's D/A visibility.
pub fn visibility_at(point: LaserOperatingPoint, map: &ModeHopMap) -> Result<f64> {
    let out = || Error::OutOfGrid {
        current_ma: point.current_ma,
        temperature_c: point.temperature_c,
    };
    let (c0, c1, fc) = ModeHopMap::bracket(&map.currents_ma, point.current_ma).ok_or_else(out)?;
    let (t0, t1, ft) = ModeHopMap::bracket(&map.temperatures_c, point.temperature_c).ok_or_else(out)?;
    let v = |t: usize, c: usize| map.visibility[t][c];
    let lower = v(t0, c0) * (1.0 - fc) + v(t0, c1) * fc;
    let upper = v(t1, c0) * (1.0 - fc) + v(t1, c1) * fc;
    Ok(lower * (1.0 - ft) + upper * ft)
}

/// Grid current with the highest interpolated visibility at `temperature_c`.
/// Ties go to the lower current.
pub fn optimal_current(temperature_c: f64, map: &ModeHopMap) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &current in &map.currents_ma {
        let v = visibility_at(LaserOperatingPoint::new(current, temperature_c)?, map)?;
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((current, v)),
        }
    }
    // currents is non-empty, so best is set once the first lookup succeeds
    Ok(best.expect("non-empty current axis").0)
}

/// Synthetic laser whose wavelength, and hence pair phase, hops between
/// longitudinal modes as current and temperature change.
///
/// The tuning coordinate `u = current·per_ma + temperature·per_c` selects
/// mode `m = ⌊u⌋`. Within a mode the phase drifts linearly; each mode adds
/// a fixed phase offset and has its own coherence, both taken cyclically
/// from `mode_phases` and `mode_coherence`. The D/A visibility is
/// `base · coherence · |cos(phase)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLaser {
    pub base_visibility: f64,
    pub modes_per_ma: f64,
    pub modes_per_c: f64,
    pub intramode_drift_rad: f64,
    pub mode_phases: Vec<f64>,
    pub mode_coherence: Vec<f64>,
    pub power: PowerCurve,
}

impl Default for SyntheticLaser {
    fn default() -> Self {
        // One clean mode per six; near 40 mA at 18.5 °C.
        Self {
            base_visibility: 0.88,
            modes_per_ma: 0.25,
            modes_per_c: 0.4,
            intramode_drift_rad: 2.4,
            mode_phases: vec![0.9, 0.45, 1.2, 0.7, 0.3, 0.0],
            mode_coherence: vec![0.7, 0.85, 0.6, 0.75, 0.65, 1.0],
            power: PowerCurve::default(),
        }
    }
}

impl SyntheticLaser {
    fn mode(&self, point: LaserOperatingPoint) -> (usize, f64) {
        let u = point.current_ma * self.modes_per_ma + point.temperature_c * self.modes_per_c;
        let mode = u.floor();
        let k = self.mode_phases.len() as i64;
        ((mode as i64).rem_euclid(k) as usize, u - mode)
    }

    pub fn phase_offset(&self, point: LaserOperatingPoint) -> f64 {
        let (idx, frac) = self.mode(point);
        self.mode_phases[idx] + self.intramode_drift_rad * (frac - 0.5)
    }

    pub fn visibility(&self, point: LaserOperatingPoint) -> f64 {
        let (idx, _) = self.mode(point);
        let coherence = self.mode_coherence[idx % self.mode_coherence.len()];
        (self.base_visibility * coherence * self.phase_offset(point).cos().abs()).clamp(0.0, 1.0)
    }

    /// Samples the laser onto a map grid.
    pub fn to_map(&self, currents_ma: &[f64], temperatures_c: &[f64]) -> Result<ModeHopMap> {
        if self.mode_phases.is_empty() || self.mode_coherence.is_empty() {
            return Err(Error::invalid("synthetic laser needs at least one mode"));
        }
        let rows = temperatures_c
            .iter()
            .map(|&t| {
                currents_ma
                    .iter()
                    .map(|&c| LaserOperatingPoint::new(c, t).map(|p| self.visibility(p)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        ModeHopMap::new(
            currents_ma.to_vec(),
            temperatures_c.to_vec(),
            rows,
            self.power.clone(),
        )
    }

    /// The default survey grid: 26–49 mA (one mode cycle) in 1 mA steps, 15–28 °C in 0.5 °C steps.
    pub fn default_map(&self) -> Result<ModeHopMap> {
        let currents: Vec<f64> = (26..=49).map(f64::from).collect();
        let temps: Vec<f64> = (30..=56).map(|i| f64::from(i) * 0.5).collect();
        self.to_map(&currents, &temps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::{full_sweep_grid, make_bell_state, sweep_contrast, D_DEG};
    use approx::assert_abs_diff_eq;

    #[test]
    fn nominal_alignment_gives_pi() {
        let cfg = SourceConfig::default();
        assert_eq!(phase_from_tilt(0.0, &cfg).unwrap(), PI);
        assert_eq!(visibility_vs_detuning(0.0, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn tolerance_zone_edge() {
        let cfg = SourceConfig::default();
        for d in [-100.0, 100.0] {
            let v = visibility_vs_detuning(d, &cfg).unwrap();
            assert!(v >= 0.85, "{v}");
            let state = make_bell_state(phase_from_tilt(d, &cfg).unwrap());
            let swept = sweep_contrast(&state, D_DEG, &full_sweep_grid()).unwrap();
            assert!(swept >= 0.85);
        }
    }

    #[test]
    fn quarter_and_third_turn_detunings() {
        let cfg = SourceConfig::default();
        let k = cfg.tilt_phase_coefficient;
        let quarter = (PI / 2.0) / k;
        let state = make_bell_state(phase_from_tilt(quarter, &cfg).unwrap());
        assert_abs_diff_eq!(
            sweep_contrast(&state, D_DEG, &full_sweep_grid()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let third = (PI / 3.0) / k;
        assert_abs_diff_eq!(visibility_vs_detuning(third, &cfg).unwrap(), 0.5, epsilon = 1e-12);
        let state = make_bell_state(phase_from_tilt(third, &cfg).unwrap());
        assert_abs_diff_eq!(
            sweep_contrast(&state, D_DEG, &full_sweep_grid()).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn detuning_range_is_enforced() {
        let cfg = SourceConfig::default();
        assert!(phase_from_tilt(10_001.0, &cfg).is_err());
        assert!(visibility_vs_detuning(f64::NAN, &cfg).is_err());
    }

    #[test]
    fn wavelength_examples() {
        assert_eq!(signal_idler_wavelengths(405.0, 0.0).unwrap(), (810.0, 810.0));
        let (s, i) = signal_idler_wavelengths(405.0, 50.0).unwrap();
        assert_eq!(s, 760.0);
        assert_abs_diff_eq!(i, 405.0 * 760.0 / 355.0, epsilon = 1e-9);
        assert!((i - 867.1).abs() < 0.1);
        assert!((1.0 / s + 1.0 / i - 1.0 / 405.0).abs() < 1e-12);
        assert!(s < i);
        assert!(signal_idler_wavelengths(405.0, 405.0).is_err());
        assert!(signal_idler_wavelengths(405.0, -1.0).is_err());
    }

    #[test]
    fn pair_rate_examples() {
        // 82.35 is itself rounded from 1400/17

        assert_abs_diff_eq!(pair_rate(17.0, 82.35).unwrap(), 1400.0, epsilon = 0.1);
        assert_eq!(pair_rate(0.0, 82.35).unwrap(), 0.0);
        assert_abs_diff_eq!(pair_rate(34.0, 82.35).unwrap(), 2800.0, epsilon = 0.2);
        assert!(pair_rate(-1.0, 1.0).is_err());
    }

    fn grid_map(currents: Vec<f64>, temps: Vec<f64>, rows: Vec<Vec<f64>>) -> ModeHopMap {
        ModeHopMap::new(currents, temps, rows, PowerCurve::default()).unwrap()
    }

    #[test]
    fn interpolation_identity_and_midpoint() {
        let map = grid_map(
            vec![30.0, 32.0],
            vec![15.0, 20.0],
            vec![vec![0.2, 0.4], vec![0.6, 1.0]],
        );
        let at = |c, t| visibility_at(LaserOperatingPoint::new(c, t).unwrap(), &map).unwrap();
        assert_eq!(at(30.0, 15.0), 0.2);
        assert_eq!(at(32.0, 20.0), 1.0);
        assert_abs_diff_eq!(at(31.0, 17.5), (0.2 + 0.4 + 0.6 + 1.0) / 4.0, epsilon = 1e-15);
        assert!(matches!(
            visibility_at(LaserOperatingPoint::new(33.0, 15.0).unwrap(), &map),
            Err(Error::OutOfGrid { .. })
        ));
    }

    #[test]
    fn mode_hop_band_fixture() {
        // 36–38 mA is a mode-hop band at every temperature.
        let currents: Vec<f64> = (30..=45).map(f64::from).collect();
        let temps = vec![15.0, 17.5, 20.0];
        let row: Vec<f64> = currents
            .iter()
            .map(|&c| if (36.0..=38.0).contains(&c) { 0.3 } else { 0.9 })
            .collect();
        let map = grid_map(currents, temps, vec![row.clone(), row.clone(), row]);
        let at = |c, t| visibility_at(LaserOperatingPoint::new(c, t).unwrap(), &map).unwrap();
        assert!(at(37.0, 16.0) < 0.5);
        assert!(at(32.0, 16.0) >= 0.85);
        assert!(at(42.0, 19.0) >= 0.85);
    }

    #[test]
    fn optimal_current_examples() {
        let single = grid_map(vec![40.0], vec![10.0, 20.0], vec![vec![0.5], vec![0.7]]);
        assert_eq!(optimal_current(15.0, &single).unwrap(), 40.0);

        let currents: Vec<f64> = (30..=45).map(f64::from).collect();
        let temps = vec![15.0, 17.5, 20.0];
        let rows = temps
            .iter()
            .map(|&t| {
                currents
                    .iter()
                    .map(|&c: &f64| {
                        let peak = if t == 17.5 { 38.0 } else { 33.0 };
                        (0.95 - 0.04 * (c - peak).abs()).max(0.0)
                    })
                    .collect()
            })
            .collect();
        let map = grid_map(currents.clone(), temps, rows);
        // exhaustive scan oracle
        let scan = currents
            .iter()
            .map(|&c| (c, map.value(1, currents.iter().position(|&x| x == c).unwrap())))
            .fold(
                (0.0, f64::NEG_INFINITY),
                |b, (c, v)| if v > b.1 { (c, v) } else { b },
            );
        assert_eq!(scan.0, 38.0);
        assert_eq!(optimal_current(17.5, &map).unwrap(), 38.0);

        let tie = grid_map(
            vec![30.0, 35.0, 40.0],
            vec![17.0, 18.0],
            vec![vec![0.5, 0.9, 0.9], vec![0.5, 0.9, 0.9]],
        );
        assert_eq!(optimal_current(17.5, &tie).unwrap(), 35.0);
        assert!(optimal_current(25.0, &tie).is_err());
    }

    #[test]
    fn map_text_round_trip() {
        let map = SyntheticLaser::default().default_map().unwrap();
        let text = map.to_text();
        let back = ModeHopMap::parse(&text, Path::new("mem")).unwrap();
        assert_eq!(back.currents(), map.currents());
        assert_eq!(back.temperatures(), map.temperatures());
        for t in 0..map.temperatures().len() {
            for c in 0..map.currents().len() {
                assert_eq!(back.value(t, c), map.value(t, c));
            }
        }
    }

    #[test]
    fn map_parse_errors() {
        let p = Path::new("x.txt");
        assert!(ModeHopMap::parse("15: 0.5\n", p).is_err());
        assert!(ModeHopMap::parse("currents: 1 2\n15: 0.5\n", p).is_err());
        assert!(ModeHopMap::parse("currents: 1 2\n15: 0.5 1.5\n", p).is_err());
        assert!(ModeHopMap::parse("currents: 2 1\n15: 0.5 0.5\n", p).is_err());
        let ok = ModeHopMap::parse("# c\ncurrents: 1 2\n15: 0.5 0.6\n16: 0.7 0.8\n", p).unwrap();
        assert_eq!(ok.value(1, 0), 0.7);
    }

    #[test]
    fn power_curve_has_plateau() {
        let pc = PowerCurve::default();
        assert_eq!(pc.power_at(10.0), 0.0);
        assert_eq!(pc.power_at(43.0), pc.power_at(44.5));
        assert!(pc.power_at(50.0) > pc.power_at(45.0));
        assert!((pc.power_at(40.0) - 17.0).abs() < 1e-9);
    }

    #[test]
    fn synthetic_map_has_good_current_at_every_temperature() {
        let laser = SyntheticLaser::default();
        let map = laser.default_map().unwrap();
        for &t in map.temperatures() {
            let best = optimal_current(t, &map).unwrap();
            let v = visibility_at(LaserOperatingPoint::new(best, t).unwrap(), &map).unwrap();
            assert!(v > 0.8, "T = {t}: best {v}");
        }
    }
}
