//! Shot-to-shot statistics of the population measurement.

mod allan;
mod binomial;
mod scene;
mod sweep;

pub use allan::{allan_deviation, octave_taus, relative_intensity, AllanSeries};
pub use binomial::sample_binomial;
pub use scene::{photon_sigma_p, ImagingScene, RegionMode};
pub use sweep::{crossover_atom_number, sample_shot, sweep_sigma_p, NoiseSweepResult, ShotRecord, SweepOptions, SweepRow};

use crate::{Error, Result};

/// Projection-noise limit `sqrt(p(1−p)/N)` of the transition probability.
pub fn qpn_sigma(atom_number: f64, p: f64) -> Result<f64> {
    if !(atom_number >= 1.0) || !atom_number.is_finite() {
        return Err(Error::param("atom_number", format!("must be at least 1, got {atom_number}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", format!("must lie in [0, 1], got {p}")));
    }
    Ok((p * (1.0 - p) / atom_number).sqrt())
}

/// Fringe slope `dp/dφ` at mid-fringe for a given visibility.
pub fn mid_fringe_slope(visibility: f64) -> f64 {
    visibility / 2.0
}

/// Phase uncertainty from a probability uncertainty, averaged over `runs`
/// independent repetitions.
pub fn phase_sensitivity(sigma_p: f64, fringe_slope: f64, runs: u32) -> Result<f64> {
    if fringe_slope == 0.0 || !fringe_slope.is_finite() {
        return Err(Error::param("fringe_slope", "must be finite and non-zero"));
    }
    if runs == 0 {
        return Err(Error::param("runs", "must be at least 1"));
    }
    if !(sigma_p >= 0.0) {
        return Err(Error::param("sigma_p", "must be non-negative"));
    }
    Ok(sigma_p / fringe_slope.abs() / f64::from(runs).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_noise_values() {
        assert_eq!(qpn_sigma(1e4, 0.5).unwrap(), 0.005);
        assert_eq!(qpn_sigma(100.0, 0.5).unwrap(), 0.05);
        assert_eq!(qpn_sigma(50.0, 0.0).unwrap(), 0.0);
        assert_eq!(qpn_sigma(50.0, 1.0).unwrap(), 0.0);
        assert!(qpn_sigma(0.5, 0.5).is_err());
        assert!(qpn_sigma(10.0, 1.5).is_err());
    }

    #[test]
    fn phase_from_probability() {
        let s = mid_fringe_slope(1.0);
        assert!((phase_sensitivity(0.005, s, 1).unwrap() - 0.010).abs() < 1e-15);
        assert!((phase_sensitivity(2e-3, s, 1).unwrap() - 4e-3).abs() < 1e-15);
        let one = phase_sensitivity(0.005, s, 1).unwrap();
        assert!((phase_sensitivity(0.005, s, 5).unwrap() - one / 5f64.sqrt()).abs() < 1e-15);
        assert!(phase_sensitivity(0.005, 0.0, 1).is_err());
    }
}
