//! Two-photon Raman coupling driven by the intensity beat of the Sagnac output.
//!
//! In the far-detuned limit every pair of comb lines separated by the
//! hyperfine splitting couples `|1⟩` and `|2⟩` through the same intermediate
//! detuning `Δ`, so the effective Rabi frequency is the one-photon scale
//! squared over `4Δ` times the complex beat `C_m` at `m ω_φ = ω_hf`.

use num_complex::Complex64;

use crate::consts::RB87_HYPERFINE_HZ;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanParams {
    /// One-photon detuning `Δ` in rad/s.
    pub one_photon_detuning: f64,
    /// One-photon Rabi frequency per unit normalized field amplitude, rad/s.
    /// Absorbs the dipole matrix element and the field strength.
    pub one_photon_rabi_scale: f64,
    /// Hyperfine splitting `ω_hf` in rad/s.
    pub hyperfine_splitting: f64,
    /// Two-photon detuning `δ` in rad/s.
    pub two_photon_detuning: f64,
}

impl Default for RamanParams {
    fn default() -> Self {
        RamanParams {
            one_photon_detuning: 2.0 * std::f64::consts::PI * 1e9,
            one_photon_rabi_scale: 2.0 * std::f64::consts::PI * 1e6,
            hyperfine_splitting: 2.0 * std::f64::consts::PI * RB87_HYPERFINE_HZ,
            two_photon_detuning: 0.0,
        }
    }
}

impl RamanParams {
    pub fn validate(&self) -> Result<()> {
        if self.one_photon_detuning == 0.0 || !self.one_photon_detuning.is_finite() {
            return Err(Error::Singular(
                "one-photon detuning must be non-zero and finite".into(),
            ));
        }
        if !(self.hyperfine_splitting > 0.0 && self.hyperfine_splitting.is_finite()) {
            return Err(Error::param(
                "hyperfine_splitting",
                format!("must be positive, got {}", self.hyperfine_splitting),
            ));
        }
        if !self.one_photon_rabi_scale.is_finite() || !self.two_photon_detuning.is_finite() {
            return Err(Error::param("raman", "rates must be finite"));
        }
        Ok(())
    }
}

/// Harmonic `m` with `|ω_hf − m ω_φ| ≤ tolerance`, if one exists.
pub fn resonance_harmonic(params: &RamanParams, mod_freq: f64, tolerance: f64) -> Option<u32> {
    if !(mod_freq > 0.0) || !(tolerance >= 0.0) {
        return None;
    }
    let m = (params.hyperfine_splitting / mod_freq).round();
    if m < 1.0 || m > u32::MAX as f64 {
        return None;
    }
    if (params.hyperfine_splitting - m * mod_freq).abs() <= tolerance {
        Some(m as u32)
    } else {
        None
    }
}

/// Complex two-photon Rabi frequency `Ω_R = scale² C_m / (4Δ)` in rad/s.
///
/// The division by `Δ` is real, so for `Δ > 0` the argument of `Ω_R` is the
/// beat phase itself; a red detuning adds `π`.
pub fn two_photon_rabi(beat: Complex64, params: &RamanParams) -> Result<Complex64> {
    params.validate()?;
    let k = params.one_photon_rabi_scale.powi(2) / (4.0 * params.one_photon_detuning);
    Ok(beat * k)
}

/// One-photon scale that makes `|Ω_R| = target` for the given beat.
///
/// Used to pin the otherwise free coupling constant by demanding a given
/// pulse area.
pub fn calibrate_rabi_scale(beat: Complex64, params: &RamanParams, target: f64) -> Result<f64> {
    params.validate()?;
    if beat.norm() == 0.0 {
        return Err(Error::Singular(
            "cannot calibrate against a vanishing beat".into(),
        ));
    }
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::param("target", "must be finite and non-negative"));
    }
    Ok((4.0 * params.one_photon_detuning.abs() * target / beat.norm()).sqrt())
}
