//! Two-photon polarization algebra.
//!
//! States are 4×4 density matrices over the product basis
//! `{HH, HV, VH, VV}` (signal first, idler second). Analyzers are ideal
//! linear polarizers, so every projection is onto
//! `|θs⟩ ⊗ |θi⟩` with `|θ⟩ = cos θ |H⟩ + sin θ |V⟩`.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance used when validating density-matrix invariants.
pub const STATE_TOLERANCE: f64 = 1e-12;

pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Analyzer angles of the standard H/V/D/A basis, degrees.
pub const H_DEG: f64 = 0.0;
pub const V_DEG: f64 = 90.0;
pub const D_DEG: f64 = 45.0;
pub const A_DEG: f64 = 135.0;

/// Reduces a polarizer angle to `[0, 180)`.
pub fn reduce_angle(deg: f64) -> f64 {
    let r = deg.rem_euclid(180.0);
    if r >= 180.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    theta_signal: f64,
    theta_idler: f64,
}

impl AnalyzerSetting {
    pub fn new(theta_signal_deg: f64, theta_idler_deg: f64) -> Self {
        Self {
            theta_signal: reduce_angle(theta_signal_deg),
            theta_idler: reduce_angle(theta_idler_deg),
        }
    }

    pub fn theta_signal(&self) -> f64 {
        self.theta_signal
    }

    pub fn theta_idler(&self) -> f64 {
        self.theta_idler
    }
}

/// Visibilities measured with one arm fixed at H, V, D and A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilitySet {
    pub v_h: f64,
    pub v_v: f64,
    pub v_d: f64,
    pub v_a: f64,
}

impl VisibilitySet {
    pub fn new(v_h: f64, v_v: f64, v_d: f64, v_a: f64) -> Result<Self> {
        for (name, v) in [("v_h", v_h), ("v_v", v_v), ("v_d", v_d), ("v_a", v_a)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(Self { v_h, v_v, v_d, v_a })
    }

    pub fn mean(&self) -> f64 {
        (self.v_h + self.v_v + self.v_d + self.v_a) / 4.0
    }

    pub fn hv(&self) -> f64 {
        (self.v_h + self.v_v) / 2.0
    }

    pub fn da(&self) -> f64 {
        (self.v_d + self.v_a) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    rho: Matrix4<Complex64>,
}

impl TwoPhotonState {
    /// Wraps a density matrix after checking trace, hermiticity and positivity.
    pub fn from_density(rho: Matrix4<Complex64>) -> Result<Self> {
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > STATE_TOLERANCE || trace.im.abs() > STATE_TOLERANCE {
            return Err(Error::invalid(format!("trace {trace} is not 1")));
        }
        let herm_err = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > STATE_TOLERANCE {
            return Err(Error::invalid(format!(
                "matrix is not Hermitian (max deviation {herm_err:e})"
            )));
        }
        let min_eig = rho.symmetric_eigenvalues().min();
        if min_eig < -STATE_TOLERANCE {
            return Err(Error::invalid(format!(
                "matrix is not positive semidefinite (eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { rho })
    }

    /// Pure state `|ψ⟩⟨ψ|` from an (unnormalized) amplitude vector.
    pub fn from_amplitudes(amps: Vector4<Complex64>) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("amplitude vector has zero or non-finite norm"));
        }
        let psi = amps / Complex64::new(norm, 0.0);
        Self::from_density(psi * psi.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self {
            rho: Matrix4::identity() * Complex64::new(0.25, 0.0),
        }
    }

    pub fn density(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    fn expectation(&self, psi: &Vector4<Complex64>) -> f64 {
        (psi.adjoint() * self.rho * psi)[(0, 0)].re
    }
}

/// `(|HH⟩ + e^{iΔφ}|VV⟩)/√2`; `Δφ = π` gives `|Φ⁻⟩`.
pub fn make_bell_state(delta_phi: f64) -> TwoPhotonState {
    let c = Complex64::from_polar(0.5, delta_phi);
    let mut rho = Matrix4::zeros();
    rho[(0, 0)] = Complex64::new(0.5, 0.0);
    rho[(3, 3)] = Complex64::new(0.5, 0.0);
    rho[(3, 0)] = c;
    rho[(0, 3)] = c.conj();
    TwoPhotonState { rho }
}

/// `|Φ⁻⟩ = (|HH⟩ − |VV⟩)/√2`.
pub fn phi_minus() -> TwoPhotonState {
    make_bell_state(std::f64::consts::PI)
}

/// Mixture of phase-damped `|Φ⁻⟩` with HV/VH coloured noise.
///
/// ```text
/// ρ = p·[(|HH⟩⟨HH| + |VV⟩⟨VV|)/2 − c(|HH⟩⟨VV| + |VV⟩⟨HH|)/2]
///   + (1 − p)·(|HV⟩⟨HV| + |VH⟩⟨VH|)/2
/// ```
///
/// with `p = (1 + v_hv)/2` and `c = v_da / p`. H/V sweeps then have contrast
/// `2p − 1 = v_hv` and D/A sweeps contrast `p·c = v_da`.
pub fn make_noisy_state(v_hv: f64, v_da: f64) -> Result<TwoPhotonState> {
    if !v_hv.is_finite() || !v_da.is_finite() || v_da < 0.0 || v_hv > 1.0 {
        return Err(Error::invalid(format!(
            "visibilities ({v_hv}, {v_da}) must satisfy 0 ≤ v_da ≤ v_hv ≤ 1"
        )));
    }
    if v_da > v_hv {
        return Err(Error::invalid(format!(
            "v_da = {v_da} exceeds v_hv = {v_hv}; not reachable with this noise model"
        )));
    }
    let p = (1.0 + v_hv) / 2.0;
    let coherence = v_da / 2.0;
    let mut rho = Matrix4::zeros();
    rho[(0, 0)] = Complex64::new(p / 2.0, 0.0);
    rho[(3, 3)] = Complex64::new(p / 2.0, 0.0);
    rho[(1, 1)] = Complex64::new((1.0 - p) / 2.0, 0.0);
    rho[(2, 2)] = Complex64::new((1.0 - p) / 2.0, 0.0);
    rho[(0, 3)] = Complex64::new(-coherence, 0.0);
    rho[(3, 0)] = Complex64::new(-coherence, 0.0);
    TwoPhotonState::from_density(rho)
}

fn product_vector(theta_signal_deg: f64, theta_idler_deg: f64) -> Vector4<Complex64> {
    let (ss, cs) = theta_signal_deg.to_radians().sin_cos();
    let (si, ci) = theta_idler_deg.to_radians().sin_cos();
    Vector4::new(
        Complex64::new(cs * ci, 0.0),
        Complex64::new(cs * si, 0.0),
        Complex64::new(ss * ci, 0.0),
        Complex64::new(ss * si, 0.0),
    )
}

/// `Tr(ρ · P(θs) ⊗ P(θi))`.
pub fn coincidence_probability(state: &TwoPhotonState, setting: AnalyzerSetting) -> f64 {
    let psi = product_vector(setting.theta_signal, setting.theta_idler);
    state.expectation(&psi).clamp(0.0, 1.0)
}

fn probability_deg(state: &TwoPhotonState, a_deg: f64, b_deg: f64) -> f64 {
    coincidence_probability(state, AnalyzerSetting::new(a_deg, b_deg))
}

/// Normalized correlation from the four projections at `(a, b)`, `(a⊥, b⊥)`,
/// `(a, b⊥)` and `(a⊥, b)`.
pub fn correlation_e(state: &TwoPhotonState, a_deg: f64, b_deg: f64) -> Result<f64> {
    let pp = probability_deg(state, a_deg, b_deg);
    let mm = probability_deg(state, a_deg + 90.0, b_deg + 90.0);
    let pm = probability_deg(state, a_deg, b_deg + 90.0);
    let mp = probability_deg(state, a_deg + 90.0, b_deg);
    let total = pp + mm + pm + mp;
    if total <= f64::EPSILON {
        return Err(Error::DegenerateSetting { a_deg, b_deg });
    }
    Ok(((pp + mm - pm - mp) / total).clamp(-1.0, 1.0))
}

/// CHSH settings for one measurement, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshSettings {
    /// `a = 0°, a′ = 45°, b = −22.5°, b′ = 22.5°`, optimal for `|Φ⁻⟩`.
    pub const STANDARD: ChshSettings = ChshSettings {
        a: 0.0,
        a_prime: 45.0,
        b: -22.5,
        b_prime: 22.5,
    };
}

impl Default for ChshSettings {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// `S = E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′)`.
pub fn chsh_s(state: &TwoPhotonState, settings: ChshSettings) -> Result<f64> {
    let ChshSettings {
        a,
        a_prime,
        b,
        b_prime,
    } = settings;
    Ok(
        correlation_e(state, a, b)? + correlation_e(state, a, b_prime)? + correlation_e(state, a_prime, b)?
            - correlation_e(state, a_prime, b_prime)?,
    )
}

/// Contrast `(c_max − c_min)/(c_max + c_min)`.
pub fn visibility(c_max: f64, c_min: f64) -> Result<f64> {
    if c_max < 0.0 || c_min < 0.0 || !c_max.is_finite() || !c_min.is_finite() {
        return Err(Error::invalid(format!(
            "counts ({c_max}, {c_min}) must be finite and non-negative"
        )));
    }
    let total = c_max + c_min;
    if total == 0.0 {
        return Err(Error::ZeroTotal);
    }
    if c_min > c_max {
        return Err(Error::invalid(format!("c_min = {c_min} exceeds c_max = {c_max}")));
    }
    Ok((c_max - c_min) / total)
}

pub fn qber_from_visibility(v_mean: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v_mean) {
        return Err(Error::invalid(format!("mean visibility {v_mean} outside [0, 1]")));
    }
    Ok((1.0 - v_mean) / 2.0)
}

/// Contrast of a correlation curve with the signal analyzer fixed at
/// `fixed_signal_deg` and the idler swept over `swept_deg`.
pub fn sweep_contrast(state: &TwoPhotonState, fixed_signal_deg: f64, swept_deg: &[f64]) -> Result<f64> {
    let (lo, hi) = swept_deg
        .iter()
        .map(|&b| probability_deg(state, fixed_signal_deg, b))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p), hi.max(p))
        });
    if swept_deg.is_empty() {
        return Err(Error::invalid("empty sweep"));
    }
    visibility(hi, lo)
}

/// Half-degree sweep grid over `[0°, 180°)`; contains all H/V/D/A extrema.
pub fn full_sweep_grid() -> Vec<f64> {
    (0..360).map(|i| f64::from(i) * 0.5).collect()
}

/// Visibilities of the four fixed-arm correlation curves, from sweeps.
pub fn sweep_visibilities(state: &TwoPhotonState) -> Result<VisibilitySet> {
    let grid = full_sweep_grid();
    VisibilitySet::new(
        sweep_contrast(state, H_DEG, &grid)?,
        sweep_contrast(state, V_DEG, &grid)?,
        sweep_contrast(state, D_DEG, &grid)?,
        sweep_contrast(state, A_DEG, &grid)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn bell_state_phi_minus_elements() {
        let s = make_bell_state(PI);
        let r = s.density();
        assert_abs_diff_eq!(r[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r[(3, 3)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r[(1, 1)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[(2, 2)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[(0, 3)].re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r[(3, 0)].re, -0.5, epsilon = 1e-15);
        assert!(TwoPhotonState::from_density(*r).is_ok());
    }

    #[test]
    fn phi_plus_diagonal_coincidence() {
        let s = make_bell_state(0.0);
        assert_abs_diff_eq!(
            coincidence_probability(&s, AnalyzerSetting::new(45.0, 45.0)),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn quarter_phase_kills_da_visibility() {
        let s = make_bell_state(PI / 2.0);
        let v = sweep_contrast(&s, D_DEG, &full_sweep_grid()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_examples() {
        let s = phi_minus();
        let p = |a, b| coincidence_probability(&s, AnalyzerSetting::new(a, b));
        assert_abs_diff_eq!(p(0.0, 0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p(0.0, 90.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p(45.0, 45.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn correlation_examples() {
        let s = phi_minus();
        assert_abs_diff_eq!(correlation_e(&s, 0.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(correlation_e(&s, 0.0, 45.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(correlation_e(&s, 22.5, 22.5).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            correlation_e(&s, 0.0, 22.5).unwrap(),
            FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn correlation_cross_check_against_raw_projections() {
        // P(0,22.5) = cos²(22.5°)/2 etc. for Φ⁻: P = cos²(a+b)/2.
        let p = |a: f64, b: f64| (a + b).to_radians().cos().powi(2) / 2.0;
        let e = (p(0.0, 22.5) + p(90.0, 112.5) - p(0.0, 112.5) - p(90.0, 22.5))
            / (p(0.0, 22.5) + p(90.0, 112.5) + p(0.0, 112.5) + p(90.0, 22.5));
        assert_abs_diff_eq!(e, FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_correlation_is_reported() {
        let zero = TwoPhotonState {
            rho: Matrix4::zeros(),
        };
        assert!(matches!(
            correlation_e(&zero, 0.0, 0.0),
            Err(Error::DegenerateSetting { .. })
        ));
    }

    #[test]
    fn chsh_examples() {
        let s = chsh_s(&phi_minus(), ChshSettings::STANDARD).unwrap();
        assert_abs_diff_eq!(s, TSIRELSON_BOUND, epsilon = 1e-12);
        let mixed = chsh_s(&TwoPhotonState::maximally_mixed(), ChshSettings::STANDARD).unwrap();
        assert_abs_diff_eq!(mixed, 0.0, epsilon = 1e-15);
        let noisy = make_noisy_state(0.975, 0.88).unwrap();
        let s = chsh_s(&noisy, ChshSettings::STANDARD).unwrap();
        assert_abs_diff_eq!(s, 2f64.sqrt() * (0.975 + 0.88), epsilon = 1e-12);
        assert!((s - 2.60).abs() < 0.1);
    }

    #[test]
    fn standard_settings_maximize_phi_minus() {
        // Grid search over all four angles at 7.5° resolution.
        let s = phi_minus();
        let grid: Vec<f64> = (0..24).map(|i| f64::from(i) * 7.5).collect();
        let mut best = f64::NEG_INFINITY;
        for &a in &grid {
            for &ap in &grid {
                for &b in &grid {
                    for &bp in &grid {
                        let v = chsh_s(
                            &s,
                            ChshSettings {
                                a,
                                a_prime: ap,
                                b,
                                b_prime: bp,
                            },
                        )
                        .unwrap();
                        best = best.max(v);
                    }
                }
            }
        }
        let standard = chsh_s(&s, ChshSettings::STANDARD).unwrap();
        assert!(standard >= best - 1e-12);
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(100.0, 0.0).unwrap(), 1.0);
        assert_eq!(visibility(100.0, 100.0).unwrap(), 0.0);
        assert_abs_diff_eq!(visibility(985.0, 15.0).unwrap(), 0.97, epsilon = 1e-15);
        assert!(matches!(visibility(0.0, 0.0), Err(Error::ZeroTotal)));
    }

    #[test]
    fn qber_examples() {
        assert_eq!(qber_from_visibility(1.0).unwrap(), 0.0);
        assert_eq!(qber_from_visibility(0.0).unwrap(), 0.5);
        let v = VisibilitySet::new(0.97, 0.97, 0.84, 0.90).unwrap();
        let q = qber_from_visibility(v.mean()).unwrap();
        assert_abs_diff_eq!(q, 0.04, epsilon = 1e-12);
        assert!((q - 0.039).abs() <= 0.004);
    }

    #[test]
    fn noisy_state_examples() {
        let ideal = make_noisy_state(1.0, 1.0).unwrap();
        let diff = (ideal.density() - phi_minus().density()).norm();
        assert!(diff < 1e-15);

        for (hv, da) in [(0.97, 0.87), (0.5, 0.5)] {
            let s = make_noisy_state(hv, da).unwrap();
            let v = sweep_visibilities(&s).unwrap();
            for x in [v.v_h, v.v_v] {
                assert_abs_diff_eq!(x, hv, epsilon = 1e-9);
            }
            for x in [v.v_d, v.v_a] {
                assert_abs_diff_eq!(x, da, epsilon = 1e-9);
            }
        }
        assert!(make_noisy_state(0.8, 0.9).is_err());
    }

    #[test]
    fn rejects_invalid_density() {
        let mut rho = Matrix4::<Complex64>::zeros();
        rho[(0, 0)] = Complex64::new(1.5, 0.0);
        rho[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(TwoPhotonState::from_density(rho).is_err());
        rho[(0, 0)] = Complex64::new(0.5, 0.0);
        assert!(TwoPhotonState::from_density(rho).is_err());
    }

    #[test]
    fn angles_reduce_modulo_180() {
        let s = AnalyzerSetting::new(-22.5, 200.0);
        assert_abs_diff_eq!(s.theta_signal(), 157.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta_idler(), 20.0, epsilon = 1e-12);
    }
}
