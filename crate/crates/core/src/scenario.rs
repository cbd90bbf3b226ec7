//! Scenario files: TOML with one table per stage of the measurement chain.
//!
//! Frequencies are given in Hz and converted to rad/s here, once. Every
//! table rejects unknown keys; tables a command needs must be present.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::imaging::{CloudKind, FrameSize, ImagingParams, TrapParams};
use crate::noise::{ImagingScene, RegionMode, SweepOptions};
use crate::ramsey::{AtomTrajectory, SequenceConfig, SequenceMode};
use crate::raman::RamanParams;
use crate::sideband::{ModulationConfig, SagnacConfig};
use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub modulation: Option<ModulationSection>,
    pub sagnac: Option<SagnacSection>,
    pub raman: Option<RamanSection>,
    pub sequence: Option<SequenceSection>,
    pub imaging: Option<ImagingSection>,
    pub trap: Option<TrapSection>,
    pub noise_sweep: Option<NoiseSweepSection>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    pub mod_freq_hz: f64,
    /// Half-wave voltage of the modulator, V.
    pub v_pi: f64,
    /// Largest modulation depth of a beat-curve scan, rad.
    pub phi_max: f64,
    pub phi_steps: usize,
    pub harmonics: Vec<u32>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SagnacSection {
    pub amplitude_ratio: f64,
    pub residual_phase: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RamanSection {
    pub one_photon_detuning_hz: f64,
    pub one_photon_rabi_scale_hz: f64,
    #[serde(default)]
    pub hyperfine_hz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SequenceSection {
    /// `ideal` or `transit`.
    pub mode: String,
    pub initial_velocity: f64,
    pub gravity: f64,
    /// Depth of the first sheet below the release point, m.
    pub first_sheet_drop: f64,
    pub interrogation_time: f64,
    pub waist: f64,
    pub pulse_area: f64,
    /// Overrides the peak Rabi frequency of both sheets instead of tuning
    /// it to `pulse_area`.
    #[serde(default)]
    pub peak_rabi_hz: Option<f64>,
    pub detuning_min_hz: f64,
    pub detuning_max_hz: f64,
    pub detuning_steps: usize,
    #[serde(default)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ImagingSection {
    pub wavelength: f64,
    pub pixel_size: f64,
    pub magnification: f64,
    pub detuning_im_hz: f64,
    pub linewidth_hz: f64,
    pub sat_intensity_electrons: f64,
    pub quantum_efficiency: f64,
    pub frame_width: usize,
    pub frame_height: usize,
    pub ref_level: f64,
    pub cloud_kind: CloudKind,
    /// Cloud radii in pixels.
    pub radius_px: [f64; 2],
    /// State |1⟩ cloud center in pixels.
    pub center_px: [f64; 2],
    /// Displacement of the state |2⟩ cloud in pixels.
    pub separation_px: [f64; 2],
    pub region_mode: RegionMode,
    /// Atom numbers of the two states for single-image runs.
    pub atoms: [f64; 2],
    pub noise: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub trap_freqs_hz: [f64; 3],
    pub atom_mass: f64,
    pub expansion_time: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseSweepSection {
    pub n_values: Vec<u64>,
    pub shots_per_n: usize,
    pub p: f64,
    pub poisson_total: bool,
    pub imaging: bool,
}

fn missing(section: &str) -> Error {
    Error::Config(format!("scenario has no [{section}] table"))
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Sagnac configuration at the scan's largest depth.
    pub fn sagnac_config(&self) -> Result<SagnacConfig> {
        let m = self.modulation.as_ref().ok_or_else(|| missing("modulation"))?;
        let s = self.sagnac.as_ref().ok_or_else(|| missing("sagnac"))?;
        let modulation = ModulationConfig::new(m.phi_max, TWO_PI * m.mod_freq_hz)
            .and_then(|c| c.with_v_pi(m.v_pi))
            .map_err(config)?;
        let cfg = SagnacConfig {
            modulation,
            amplitude_ratio: s.amplitude_ratio,
            residual_phase: s.residual_phase,
        };
        cfg.validate().map_err(config)?;
        if m.phi_steps == 0 {
            return Err(Error::Config("modulation.phi_steps must be at least 1".into()));
        }
        if m.harmonics.is_empty() {
            return Err(Error::Config("modulation.harmonics must not be empty".into()));
        }
        Ok(cfg)
    }

    pub fn raman_params(&self) -> Result<RamanParams> {
        let r = self.raman.as_ref().ok_or_else(|| missing("raman"))?;
        let mut p = RamanParams {
            one_photon_detuning: TWO_PI * r.one_photon_detuning_hz,
            one_photon_rabi_scale: TWO_PI * r.one_photon_rabi_scale_hz,
            ..RamanParams::default()
        };
        if let Some(hf) = r.hyperfine_hz {
            p.hyperfine_splitting = TWO_PI * hf;
        }
        p.validate().map_err(config)?;
        Ok(p)
    }

    pub fn sequence_config(&self) -> Result<SequenceConfig> {
        let s = self.sequence.as_ref().ok_or_else(|| missing("sequence"))?;
        let mode: SequenceMode = s.mode.parse().map_err(config)?;
        let trajectory = AtomTrajectory {
            initial_velocity: s.initial_velocity,
            gravity: s.gravity,
        };
        if s.detuning_steps == 0 || !(s.detuning_max_hz >= s.detuning_min_hz) {
            return Err(Error::Config(
                "sequence detuning grid needs detuning_steps ≥ 1 and max ≥ min".into(),
            ));
        }
        let mut cfg = SequenceConfig::symmetric(
            trajectory,
            s.first_sheet_drop,
            s.interrogation_time,
            s.waist,
            s.pulse_area,
            mode,
        )
        .map_err(config)?;
        if let Some(r) = s.peak_rabi_hz {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Config("sequence.peak_rabi_hz must be non-negative".into()));
            }
            for sheet in cfg.sheets.iter_mut() {
                sheet.peak_rabi = Complex64::new(TWO_PI * r, 0.0);
            }
        }
        cfg.step = s.step;
        cfg.validate().map_err(config)?;
        Ok(cfg)
    }

    /// Detuning grid in Hz.
    pub fn detuning_grid_hz(&self) -> Result<Vec<f64>> {
        let s = self.sequence.as_ref().ok_or_else(|| missing("sequence"))?;
        Ok(linspace(s.detuning_min_hz, s.detuning_max_hz, s.detuning_steps))
    }

    pub fn imaging_params(&self) -> Result<ImagingParams> {
        let s = self.imaging.as_ref().ok_or_else(|| missing("imaging"))?;
        let p = ImagingParams {
            wavelength: s.wavelength,
            pixel_size: s.pixel_size,
            magnification: s.magnification,
            detuning_im: TWO_PI * s.detuning_im_hz,
            linewidth: TWO_PI * s.linewidth_hz,
            sat_intensity_electrons: s.sat_intensity_electrons,
            quantum_efficiency: s.quantum_efficiency,
        };
        p.validate().map_err(config)?;
        Ok(p)
    }

    pub fn imaging_scene(&self) -> Result<ImagingScene> {
        let s = self.imaging.as_ref().ok_or_else(|| missing("imaging"))?;
        let params = self.imaging_params()?;
        let px = params.object_pixel();
        let scene = ImagingScene {
            params,
            frame: FrameSize {
                width: s.frame_width,
                height: s.frame_height,
            },
            kind: s.cloud_kind,
            radii: (s.radius_px[0] * px, s.radius_px[1] * px),
            center: (s.center_px[0] * px, s.center_px[1] * px),
            separation: (s.separation_px[0] * px, s.separation_px[1] * px),
            ref_level: s.ref_level,
            regions: s.region_mode,
        };
        if s.frame_width == 0 || s.frame_height == 0 {
            return Err(Error::Config("imaging frame dimensions must be non-zero".into()));
        }
        scene.validate().map_err(config)?;
        if s.atoms.iter().any(|n| !(*n >= 0.0) || !n.is_finite()) {
            return Err(Error::Config("imaging.atoms must be finite and non-negative".into()));
        }
        Ok(scene)
    }

    pub fn trap_params(&self) -> Result<TrapParams> {
        let t = self.trap.as_ref().ok_or_else(|| missing("trap"))?;
        let p = TrapParams {
            trap_freqs: t.trap_freqs_hz.map(|f| TWO_PI * f),
            atom_mass: t.atom_mass,
            expansion_time: t.expansion_time,
        };
        p.validate().map_err(config)?;
        Ok(p)
    }

    pub fn sweep_options(&self) -> Result<(Vec<u64>, SweepOptions, bool)> {
        let s = self.noise_sweep.as_ref().ok_or_else(|| missing("noise_sweep"))?;
        if s.n_values.is_empty() || s.n_values.contains(&0) {
            return Err(Error::Config("noise_sweep.n_values must be non-empty and positive".into()));
        }
        if s.shots_per_n < 2 {
            return Err(Error::Config("noise_sweep.shots_per_n must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&s.p) {
            return Err(Error::Config("noise_sweep.p must lie in [0, 1]".into()));
        }
        let opts = SweepOptions {
            shots_per_n: s.shots_per_n,
            p: s.p,
            base_seed: self.base_seed,
            poisson_total: s.poisson_total,
        };
        Ok((s.n_values.clone(), opts, s.imaging))
    }
}

fn config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// `n` evenly spaced values from `a` to `b` inclusive; `[a]` for `n = 1`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}
