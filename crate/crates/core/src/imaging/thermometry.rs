use serde::{Deserialize, Serialize};

use crate::consts::{BOLTZMANN, HBAR, RB87_MASS, ZETA_3};
use crate::lsq::{levenberg_marquardt, FitOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapParams {
    /// Trap angular frequencies (ωx, ωy, ωz), rad/s.
    pub trap_freqs: [f64; 3],
    #[serde(default = "default_mass")]
    pub atom_mass: f64,
    /// Time of flight before imaging, s.
    pub expansion_time: f64,
}

fn default_mass() -> f64 {
    RB87_MASS
}

impl Default for TrapParams {
    fn default() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        TrapParams {
            trap_freqs: [two_pi * 20.0, two_pi * 250.0, two_pi * 250.0],
            atom_mass: RB87_MASS,
            expansion_time: 24.1e-3,
        }
    }
}

impl TrapParams {
    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.trap_freqs.iter().enumerate() {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::param("trap_freqs", format!("component {i} must be positive, got {w}")));
            }
        }
        if !(self.atom_mass > 0.0) || !self.atom_mass.is_finite() {
            return Err(Error::param("atom_mass", "must be positive"));
        }
        if !(self.expansion_time >= 0.0) || !self.expansion_time.is_finite() {
            return Err(Error::param("expansion_time", "must be finite and non-negative"));
        }
        Ok(())
    }

    /// Geometric mean trap frequency ω̄.
    pub fn mean_frequency(&self) -> f64 {
        let [a, b, c] = self.trap_freqs;
        (a * b * c).cbrt()
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::param(name, format!("must be positive, got {v}")));
    }
    Ok(())
}

/// Temperature from a time-of-flight width, with `σ` the `1/e` radius of
/// `n ∝ exp(−x²/σ²)`: `T = m σ² ω² / (2 k_B (1 + ω² t²))`.
pub fn temperature_from_tof(sigma: f64, omega: f64, t_exp: f64, mass: f64) -> Result<f64> {
    check_positive("sigma", sigma)?;
    check_positive("omega", omega)?;
    check_positive("mass", mass)?;
    if !(t_exp >= 0.0) || !t_exp.is_finite() {
        return Err(Error::param("t_exp", "must be finite and non-negative"));
    }
    let wt = omega * t_exp;
    Ok(mass * sigma * sigma * omega * omega / (2.0 * BOLTZMANN * (1.0 + wt * wt)))
}

/// Inverse of [`temperature_from_tof`]: the width a thermal cloud reaches.
pub fn thermal_width_for_temperature(temperature: f64, omega: f64, t_exp: f64, mass: f64) -> Result<f64> {
    check_positive("temperature", temperature)?;
    check_positive("omega", omega)?;
    check_positive("mass", mass)?;
    let wt = omega * t_exp;
    Ok((2.0 * BOLTZMANN * temperature * (1.0 + wt * wt) / (mass * omega * omega)).sqrt())
}

/// Finite-size shift `π² / (12 ζ(3))` of the critical-temperature bracket.
pub fn finite_size_offset() -> f64 {
    std::f64::consts::PI.powi(2) / (12.0 * ZETA_3)
}

/// Critical temperature of a harmonically trapped gas with the leading
/// finite-size correction.
pub fn critical_temperature(atom_number: f64, trap: &TrapParams) -> Result<f64> {
    trap.validate()?;
    if !(atom_number >= 1.0) || !atom_number.is_finite() {
        return Err(Error::param("atom_number", format!("must be at least 1, got {atom_number}")));
    }
    let bracket = (atom_number / ZETA_3).cbrt() - finite_size_offset();
    if bracket <= 0.0 {
        return Err(Error::Undefined(format!(
            "critical temperature is not positive for N = {atom_number}"
        )));
    }
    Ok(HBAR * trap.mean_frequency() / BOLTZMANN * bracket)
}

/// Condensate fraction `1 − (x/a)³` below `x = a`, zero above.
pub fn condensate_fraction(reduced_temperature: f64, a_cal: f64) -> f64 {
    (1.0 - (reduced_temperature / a_cal).powi(3)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFit {
    pub a_cal: f64,
    pub std_error: f64,
    pub points_used: usize,
}

/// Least-squares fit of `N_c/N = 1 − (T/(a T₀))³` to `(T/T₀, N_c/N)` points.
///
/// Points without a condensate (`N_c/N ≤ 0`) carry no curvature information
/// and are dropped before fitting.
pub fn condensate_fraction_fit(points: &[(f64, f64)]) -> Result<CalibrationFit> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::param("points", "must be finite"));
    }
    let used: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, y)| y > 0.0).collect();
    let mut xs: Vec<f64> = used.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    if used.len() < 3 || xs.len() < 3 {
        return Err(Error::param(
            "points",
            format!("need at least 3 points with distinct abscissae and N_c/N > 0, got {}", xs.len()),
        ));
    }
    if xs.iter().all(|x| *x <= 0.0) {
        return Err(Error::Singular("all abscissae are zero".into()));
    }
    // Per-point inversions of the model give a robust starting value.
    let mut guesses: Vec<f64> = used
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y < 1.0)
        .map(|(x, y)| x / (1.0 - y).cbrt())
        .collect();
    guesses.sort_by(|a, b| a.total_cmp(b));
    let a0 = guesses.get(guesses.len() / 2).copied().unwrap_or(1.0);
    let res = levenberg_marquardt(
        |q| used.iter().map(|(x, y)| 1.0 - (x / q[0]).powi(3) - y).collect(),
        &[a0],
        &FitOptions::default(),
    )?;
    Ok(CalibrationFit {
        a_cal: res.params[0],
        std_error: res.std_error(0),
        points_used: used.len(),
    })
}
