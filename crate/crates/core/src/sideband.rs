//! Phase-modulated light and its conversion to amplitude modulation in a
//! Sagnac loop.
//!
//! A phase modulator of depth `φ` writes `exp(i (φ/2) cos ω_φ t)` onto the
//! carrier. By the Jacobi–Anger expansion the field is a comb of harmonics
//! `A_k = i^k J_k(φ/2)` at offsets `k ω_φ` from the carrier. Inside the Sagnac
//! loop the modulated beam interferes with an unmodulated counter-propagating
//! beam of relative amplitude `a` and phase `π + δφ₀`, which only adds to the
//! `k = 0` component.
//!
//! The intensity `|E(t)|²` then has Fourier components
//! `C_m = Σ_k A_{k+m} conj(A_k)` at `m ω_φ`. For pure phase modulation every
//! `C_m` with `m ≠ 0` vanishes. For the balanced loop (`a = 1`, `δφ₀ = 0`) the
//! odd harmonics vanish and `|C_m| = 2 J_m(φ/2)` for even `m`.
//!
//! Field amplitudes are normalized so the pure phase-modulated comb carries
//! unit power. Nothing here depends on `ω_φ`; it only labels the harmonics.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::bessel::bessel_j_seq;
use crate::{Error, Result};

/// Default half-wave voltage used to map drive voltage onto modulation depth.
pub const DEFAULT_V_PI: f64 = 3.14;

/// Amplitudes below this magnitude do not count towards a spectrum's support.
const SUPPORT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationConfig {
    /// Peak-to-peak phase excursion `φ` in radians; the field phase swings by `±φ/2`.
    pub depth_phi: f64,
    /// Modulation angular frequency `ω_φ` in rad/s.
    pub mod_freq: f64,
    /// Linear drive map `φ = drive_voltage_to_phi · V`, in rad/V.
    pub drive_voltage_to_phi: f64,
}

impl ModulationConfig {
    pub fn new(depth_phi: f64, mod_freq: f64) -> Result<Self> {
        let cfg = ModulationConfig {
            depth_phi,
            mod_freq,
            drive_voltage_to_phi: std::f64::consts::PI / DEFAULT_V_PI,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces the drive map with `φ = (π / v_pi) V`.
    pub fn with_v_pi(mut self, v_pi: f64) -> Result<Self> {
        if !(v_pi > 0.0 && v_pi.is_finite()) {
            return Err(Error::param("v_pi", format!("must be positive, got {v_pi}")));
        }
        self.drive_voltage_to_phi = std::f64::consts::PI / v_pi;
        Ok(self)
    }

    pub fn with_depth(mut self, depth_phi: f64) -> Result<Self> {
        self.depth_phi = depth_phi;
        self.validate()?;
        Ok(self)
    }

    pub fn drive_voltage(&self) -> f64 {
        self.depth_phi / self.drive_voltage_to_phi
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.depth_phi >= 0.0 && self.depth_phi.is_finite()) {
            return Err(Error::param(
                "depth_phi",
                format!("must be finite and non-negative, got {}", self.depth_phi),
            ));
        }
        if !(self.mod_freq > 0.0 && self.mod_freq.is_finite()) {
            return Err(Error::param(
                "mod_freq",
                format!("must be positive, got {}", self.mod_freq),
            ));
        }
        if !(self.drive_voltage_to_phi > 0.0 && self.drive_voltage_to_phi.is_finite()) {
            return Err(Error::param(
                "drive_voltage_to_phi",
                format!("must be positive, got {}", self.drive_voltage_to_phi),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SagnacConfig {
    pub modulation: ModulationConfig,
    /// Amplitude `a` of the unmodulated beam relative to the modulated one.
    pub amplitude_ratio: f64,
    /// Residual loop phase `δφ₀` in radians, on top of the nominal `π`.
    pub residual_phase: f64,
}

impl SagnacConfig {
    pub fn balanced(modulation: ModulationConfig) -> Self {
        SagnacConfig {
            modulation,
            amplitude_ratio: 1.0,
            residual_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.modulation.validate()?;
        if !(self.amplitude_ratio >= 0.0 && self.amplitude_ratio.is_finite()) {
            return Err(Error::param(
                "amplitude_ratio",
                format!("must be finite and non-negative, got {}", self.amplitude_ratio),
            ));
        }
        if !self.residual_phase.is_finite() {
            return Err(Error::param("residual_phase", "must be finite"));
        }
        Ok(())
    }

    pub fn with_depth(mut self, depth_phi: f64) -> Result<Self> {
        self.modulation = self.modulation.with_depth(depth_phi)?;
        Ok(self)
    }
}

/// Complex field amplitudes on the harmonic lattice `-K..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpectrum {
    amplitudes: Vec<Complex64>,
    truncation: usize,
}

impl FieldSpectrum {
    /// Builds a spectrum from amplitudes listed for `k = -K..=K`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() % 2 != 1 {
            return Err(Error::param(
                "amplitudes",
                "length must be odd (indices -K..=K)",
            ));
        }
        if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::param("amplitudes", "must be finite"));
        }
        let truncation = amplitudes.len() / 2;
        Ok(FieldSpectrum {
            amplitudes,
            truncation,
        })
    }

    pub fn truncation_order(&self) -> usize {
        self.truncation
    }

    /// Amplitude of harmonic `k`; zero outside the lattice.
    pub fn get(&self, k: i64) -> Complex64 {
        let t = self.truncation as i64;
        if k < -t || k > t {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[(k + t) as usize]
        }
    }

    pub fn harmonics(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let t = self.truncation as i64;
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, a)| (i as i64 - t, *a))
    }

    /// Largest `|k|` whose amplitude exceeds `1e-12`.
    pub fn support(&self) -> usize {
        self.harmonics()
            .filter(|(_, a)| a.norm() > SUPPORT_FLOOR)
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(&self, s: f64) -> FieldSpectrum {
        FieldSpectrum {
            amplitudes: self.amplitudes.iter().map(|a| a * s).collect(),
            truncation: self.truncation,
        }
    }

    /// Field value at modulation phase `θ = ω_φ t`, in the carrier frame.
    pub fn field_at(&self, theta: f64) -> Complex64 {
        self.harmonics()
            .map(|(k, a)| a * Complex64::from_polar(1.0, k as f64 * theta))
            .sum()
    }
}

/// Smallest truncation order accepted for depth `φ`.
pub fn minimum_truncation(depth_phi: f64) -> usize {
    (depth_phi / 2.0).ceil() as usize + 10
}

/// `max(ceil(φ/2) + 20, 25)`; beyond it `|J_n(φ/2)|` is far below `1e-12`.
pub fn default_truncation(depth_phi: f64) -> usize {
    ((depth_phi / 2.0).ceil() as usize + 20).max(25)
}

fn check_truncation(depth_phi: f64, truncation: usize) -> Result<()> {
    let required = minimum_truncation(depth_phi);
    if truncation < required {
        return Err(Error::Truncation {
            given: truncation,
            required,
        });
    }
    Ok(())
}

/// `i^k` for integer `k`.
fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Sideband comb `A_k = i^k J_k(φ/2)` of a pure phase modulator.
pub fn phase_mod_spectrum(cfg: &ModulationConfig, truncation: usize) -> Result<FieldSpectrum> {
    cfg.validate()?;
    check_truncation(cfg.depth_phi, truncation)?;
    let j = bessel_j_seq(cfg.depth_phi / 2.0, truncation);
    let t = truncation as i64;
    let amplitudes = (-t..=t)
        .map(|k| {
            let n = k.unsigned_abs() as usize;
            // J_{-n} = (-1)^n J_n
            let jk = if k < 0 && n % 2 == 1 { -j[n] } else { j[n] };
            i_pow(k) * jk
        })
        .collect();
    Ok(FieldSpectrum {
        amplitudes,
        truncation,
    })
}

/// Output port of the Sagnac loop: the modulated comb plus a carrier of
/// amplitude `a` and phase `π + δφ₀`.
pub fn sagnac_output_spectrum(cfg: &SagnacConfig, truncation: usize) -> Result<FieldSpectrum> {
    cfg.validate()?;
    let mut spec = phase_mod_spectrum(&cfg.modulation, truncation)?;
    // e^{i(π + δφ₀)} = −e^{iδφ₀}, written so that δφ₀ = 0 gives an exact −a.
    let carrier = -Complex64::from_polar(cfg.amplitude_ratio, cfg.residual_phase);
    spec.amplitudes[truncation] += carrier;
    Ok(spec)
}

/// Time-averaged output intensity `C_0 = Σ |A_k|²`.
pub fn dc_intensity(spec: &FieldSpectrum) -> f64 {
    spec.amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

/// Complex intensity beat `C_m = Σ_k A_{k+m} conj(A_k)` at `m ω_φ`.
///
/// Any integer `m` is accepted; `C_{-m} = conj(C_m)` and `C_0` is the DC
/// intensity. Fails when `|m|` plus the spectrum's support exceeds the
/// truncation order, since the shifted comb would leave the lattice.
pub fn harmonic_amplitude(spec: &FieldSpectrum, m: i64) -> Result<Complex64> {
    let support = spec.support();
    let required = support + m.unsigned_abs() as usize;
    if required > spec.truncation {
        return Err(Error::Truncation {
            given: spec.truncation,
            required,
        });
    }
    let t = spec.truncation as i64;
    let lo = (-t).max(-t - m);
    let hi = t.min(t - m);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in lo..=hi {
        acc += spec.get(k + m) * spec.get(k).conj();
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatRow {
    pub phi: f64,
    pub drive_voltage: f64,
    pub dc_intensity: f64,
    /// `|C_m|` keyed by harmonic index.
    pub harmonics: BTreeMap<u32, f64>,
}

impl BeatRow {
    pub fn beat(&self, m: u32) -> Option<f64> {
        self.harmonics.get(&m).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeatCurve {
    pub rows: Vec<BeatRow>,
}

impl BeatCurve {
    /// Leading rows over which the DC intensity does not decrease.
    ///
    /// Rows are taken in sweep order, which callers supply with increasing `φ`.
    pub fn monotonic_branch(&self) -> &[BeatRow] {
        let mut end = self.rows.len().min(1);
        while end < self.rows.len() && self.rows[end].dc_intensity >= self.rows[end - 1].dc_intensity
        {
            end += 1;
        }
        &self.rows[..end]
    }
}

/// DC intensity and `|C_m|` for each modulation depth of a sweep.
pub fn beat_curve(cfg: &SagnacConfig, phi_values: &[f64], m_values: &[u32]) -> Result<BeatCurve> {
    if phi_values.is_empty() {
        return Err(Error::param("phi_values", "sweep must not be empty"));
    }
    if m_values.is_empty() {
        return Err(Error::param("m_values", "harmonic list must not be empty"));
    }
    let rows = phi_values
        .iter()
        .map(|&phi| {
            let point = cfg.with_depth(phi)?;
            let spec = sagnac_output_spectrum(&point, default_truncation(phi))?;
            let mut harmonics = BTreeMap::new();
            for &m in m_values {
                harmonics.insert(m, harmonic_amplitude(&spec, m as i64)?.norm());
            }
            Ok(BeatRow {
                phi,
                drive_voltage: point.modulation.drive_voltage(),
                dc_intensity: dc_intensity(&spec),
                harmonics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BeatCurve { rows })
}

/// Infers `|C_2|` from a measured DC intensity by linear interpolation on
/// the curve's first monotonic branch.
pub fn calibration_lookup(curve: &BeatCurve, dc_value: f64) -> Result<f64> {
    let branch = curve.monotonic_branch();
    let (first, last) = match (branch.first(), branch.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::param("curve", "calibration curve is empty")),
    };
    if branch.iter().any(|r| r.beat(2).is_none()) {
        return Err(Error::param("curve", "calibration needs the m = 2 harmonic"));
    }
    let beat2 = |r: &BeatRow| r.beat(2).unwrap_or(0.0);
    // Round-off can leave the first node a hair above an exact zero.
    let slack = 1e-12 * last.dc_intensity.abs().max(1.0);
    if dc_value >= first.dc_intensity - slack && dc_value < first.dc_intensity {
        return Ok(beat2(first));
    }
    if !(dc_value >= first.dc_intensity && dc_value <= last.dc_intensity) {
        return Err(Error::OutOfRange {
            value: dc_value,
            min: first.dc_intensity,
            max: last.dc_intensity,
        });
    }
    for pair in branch.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if dc_value <= b.dc_intensity {
            let span = b.dc_intensity - a.dc_intensity;
            if span <= 0.0 {
                return Ok(beat2(a));
            }
            let w = (dc_value - a.dc_intensity) / span;
            return Ok(beat2(a) + w * (beat2(b) - beat2(a)));
        }
    }
    Ok(beat2(last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn modulation(phi: f64) -> ModulationConfig {
        ModulationConfig::new(phi, 2.0 * PI * 1e9).unwrap()
    }

    fn sagnac(phi: f64, a: f64, dphi0: f64) -> SagnacConfig {
        SagnacConfig {
            modulation: modulation(phi),
            amplitude_ratio: a,
            residual_phase: dphi0,
        }
    }

    /// 30-term power series for J_n, independent of the recurrence.
    fn series_j(n: u32, x: f64) -> f64 {
        let half = x / 2.0;
        (0..30u32)
            .map(|k| {
                let mut term = half.powi((2 * k + n) as i32);
                for j in 1..=k {
                    term /= j as f64;
                }
                for j in 1..=(k + n) {
                    term /= j as f64;
                }
                if k % 2 == 1 {
                    -term
                } else {
                    term
                }
            })
            .sum()
    }

    /// Fourier bin `m` of `|E(θ)|²` with `E` synthesized directly from the
    /// modulated exponential, not from the Bessel comb.
    fn time_domain_bin(phi: f64, a: f64, dphi0: f64, m: i64, points: usize) -> Complex64 {
        let carrier = Complex64::from_polar(a, PI + dphi0);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..points {
            let theta = 2.0 * PI * j as f64 / points as f64;
            let e = Complex64::from_polar(1.0, 0.5 * phi * theta.cos()) + carrier;
            acc += e.norm_sqr() * Complex64::from_polar(1.0, -(m as f64) * theta);
        }
        acc / points as f64
    }

    #[test]
    fn unmodulated_spectrum_is_carrier_only() {
        let spec = phase_mod_spectrum(&modulation(0.0), 25).unwrap();
        for (k, a) in spec.harmonics() {
            let expect = if k == 0 { 1.0 } else { 0.0 };
            assert!((a - Complex64::new(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn first_sideband_matches_series() {
        let spec = phase_mod_spectrum(&modulation(1.0), 25).unwrap();
        assert!((spec.get(1).norm() - series_j(1, 0.5)).abs() < 1e-15);
        assert!((spec.get(-1).norm() - series_j(1, 0.5)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ModulationConfig::new(-0.1, 1.0).is_err());
        let m = modulation(30.0);
        assert!(matches!(
            phase_mod_spectrum(&m, 20),
            Err(Error::Truncation { given: 20, required: 25 })
        ));
        assert!(phase_mod_spectrum(&m, 25).is_ok());
    }

    #[test]
    fn balanced_loop_without_modulation_is_dark() {
        let spec = sagnac_output_spectrum(&sagnac(0.0, 1.0, 0.0), 25).unwrap();
        assert!(spec.harmonics().all(|(_, a)| a.norm() < 1e-15));
        assert!(dc_intensity(&spec) < 1e-30);
    }

    #[test]
    fn no_carrier_reduces_to_phase_modulation() {
        let pm = phase_mod_spectrum(&modulation(2.3), 25).unwrap();
        let sg = sagnac_output_spectrum(&sagnac(2.3, 0.0, 0.4), 25).unwrap();
        assert_eq!(pm, sg);
    }

    #[test]
    fn residual_phase_carrier_against_scalar_arithmetic() {
        let spec = sagnac_output_spectrum(&sagnac(2.0, 1.0, 0.1), 25).unwrap();
        let direct = Complex64::new(series_j(0, 1.0), 0.0) - Complex64::from_polar(1.0, 0.1);
        assert!((spec.get(0).norm_sqr() - direct.norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn dc_intensity_closed_form_and_time_average() {
        for &(phi, a, d) in &[(3.0, 1.0, 0.0), (1.7, 0.8, 0.3), (5.0, 1.2, -0.2)] {
            let spec = sagnac_output_spectrum(&sagnac(phi, a, d), 30).unwrap();
            let closed = 1.0 + a * a - 2.0 * a * series_j(0, phi / 2.0) * d.cos();
            assert!((dc_intensity(&spec) - closed).abs() < 1e-12);
            let avg = time_domain_bin(phi, a, d, 0, 1 << 14).re;
            assert!((dc_intensity(&spec) - avg).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_phase_modulation_has_no_beat() {
        for &phi in &[0.3, 1.0, 4.0, 9.5] {
            let spec = phase_mod_spectrum(&modulation(phi), default_truncation(phi)).unwrap();
            assert!((dc_intensity(&spec) - 1.0).abs() < 1e-12);
            for m in 1..=4 {
                assert!(harmonic_amplitude(&spec, m).unwrap().norm() < 1e-10);
            }
        }
    }

    #[test]
    fn second_harmonic_against_fft_bin() {
        let spec = sagnac_output_spectrum(&sagnac(2.5, 1.0, 0.0), 25).unwrap();
        let c2 = harmonic_amplitude(&spec, 2).unwrap();
        assert!((c2.norm() - 2.0 * series_j(2, 1.25)).abs() < 1e-13);
        let bin = time_domain_bin(2.5, 1.0, 0.0, 2, 1 << 12);
        assert!((c2 - bin).norm() / c2.norm() < 1e-8);
        assert!(harmonic_amplitude(&spec, 1).unwrap().norm() < 1e-12);
        assert!(harmonic_amplitude(&spec, 3).unwrap().norm() < 1e-12);
    }

    #[test]
    fn shift_beyond_lattice_is_an_error() {
        let spec = sagnac_output_spectrum(&sagnac(8.0, 1.0, 0.0), 25).unwrap();
        assert!(matches!(
            harmonic_amplitude(&spec, 24),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn beat_curve_ordering_and_frequency_independence() {
        let phis: Vec<f64> = (0..=60).map(|i| i as f64 * 0.12).collect();
        let cfg = sagnac(0.0, 1.0, 0.0);
        let curve = beat_curve(&cfg, &phis, &[1, 2, 3]).unwrap();
        let max_of = |m| {
            curve
                .rows
                .iter()
                .map(|r| r.beat(m).unwrap())
                .fold(0.0_f64, f64::max)
        };
        assert!(max_of(2) > 10.0 * max_of(1));
        assert!(max_of(2) > 10.0 * max_of(3));

        let mut other = cfg;
        other.modulation.mod_freq = 2.0 * PI * 3.417e9;
        assert_eq!(beat_curve(&other, &phis, &[1, 2, 3]).unwrap(), curve);
    }

    #[test]
    fn zero_depth_row() {
        let curve = beat_curve(&sagnac(0.0, 1.0, 0.0), &[0.0], &[1, 2, 3]).unwrap();
        assert_eq!(curve.rows.len(), 1);
        assert!(curve.rows[0].dc_intensity.abs() < 1e-30);
        assert!(curve.rows[0].harmonics.values().all(|v| *v < 1e-15));
        assert!(beat_curve(&sagnac(0.0, 1.0, 0.0), &[], &[2]).is_err());
    }

    #[test]
    fn calibration_lookup_nodes_and_midpoints() {
        let phis: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let curve = beat_curve(&sagnac(0.0, 1.0, 0.0), &phis, &[2]).unwrap();
        let branch = curve.monotonic_branch();
        // dc(φ) = 2 - 2 J0(φ/2) peaks where J0 is minimal, φ/2 ≈ 3.83.
        let last_phi = branch.last().unwrap().phi;
        assert!((7.25..=7.75).contains(&last_phi), "branch ends at {last_phi}");

        let node = &branch[10];
        assert_eq!(calibration_lookup(&curve, node.dc_intensity).unwrap(), node.beat(2).unwrap());
        assert_eq!(calibration_lookup(&curve, 0.0).unwrap(), 0.0);

        // Dense resampling: the interpolated value at a midpoint lies within
        // the local curvature bound of the true curve value there.
        let (a, b) = (&branch[12], &branch[13]);
        let mid = 0.5 * (a.dc_intensity + b.dc_intensity);
        let got = calibration_lookup(&curve, mid).unwrap();
        let fine: Vec<f64> = (0..=2000).map(|i| a.phi + (b.phi - a.phi) * i as f64 / 2000.0).collect();
        let dense = beat_curve(&sagnac(0.0, 1.0, 0.0), &fine, &[2]).unwrap();
        let nearest = dense
            .rows
            .iter()
            .min_by(|x, y| {
                (x.dc_intensity - mid)
                    .abs()
                    .partial_cmp(&(y.dc_intensity - mid).abs())
                    .unwrap()
            })
            .unwrap();
        assert!((got - nearest.beat(2).unwrap()).abs() < 2e-3);
        assert!((got - 0.5 * (a.beat(2).unwrap() + b.beat(2).unwrap())).abs() < 1e-12);

        assert!(matches!(
            calibration_lookup(&curve, 10.0),
            Err(Error::OutOfRange { .. })
        ));
    }
}
