//! Absorption imaging: synthesis, atom counting and calibration.
//!
//! Atom numbers are inferred pixelwise from the electron counts of an atom
//! frame `N_el` and a reference frame `N_el,0`:
//!
//! ```text
//! N_px = c₀ (L ln(N_el,0 / N_el) + (N_el,0 − N_el) / N_el,sat)
//! c₀   = 2π px² / (3 λ² M²),   L = (4Δ² + Γ²) / Γ²
//! ```
//!
//! `c₀` is exactly the printed prefactor: the object-plane pixel area
//! `px²/M²` times `2π/(3λ²)`, which is the inverse of the resonant
//! absorption cross section `3λ²/2π`. With `px` and `λ` in meters it is
//! dimensionless (atoms per unit optical depth per pixel).
//!
//! Photon shot noise of both frames propagates into the per-pixel variance
//! `σ² = c₀² [(L/√N_el + √N_el/N_sat)² + (L/√N_el,0 + √N_el,0/N_sat)²]`.

mod counting;
mod fit;
mod render;
mod thermometry;

pub use counting::{
    count_pixel, count_region, forward_transmission, pixel_noise_variance, PixelCount, RegionCount,
};
pub use fit::{
    bimodal_fit, bimodal_fit_image, fit_thomas_fermi, gaussian_profile, integrated_profiles,
    thomas_fermi_profile, BimodalFit, GaussianComponent, Profile1D, TfComponent, TfFit,
};
pub use render::{cloud_fits_frame, column_atoms, render_image, FrameSize};
pub use thermometry::{
    condensate_fraction, condensate_fraction_fit, critical_temperature, finite_size_offset,
    temperature_from_tof, thermal_width_for_temperature, CalibrationFit, TrapParams,
};

use serde::{Deserialize, Serialize};

use crate::consts::{RB87_D2_LINEWIDTH_HZ, RB87_D2_WAVELENGTH};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagingParams {
    /// Imaging wavelength λ, m.
    pub wavelength: f64,
    /// Camera pixel pitch, m.
    pub pixel_size: f64,
    pub magnification: f64,
    /// Imaging detuning Δ_im, rad/s.
    pub detuning_im: f64,
    /// Natural linewidth Γ, rad/s.
    pub linewidth: f64,
    /// Electron count per pixel per exposure at the saturation intensity.
    pub sat_intensity_electrons: f64,
    pub quantum_efficiency: f64,
}

impl Default for ImagingParams {
    fn default() -> Self {
        ImagingParams {
            wavelength: RB87_D2_WAVELENGTH,
            pixel_size: 6.45e-6,
            magnification: 2.0,
            detuning_im: 0.0,
            linewidth: 2.0 * std::f64::consts::PI * RB87_D2_LINEWIDTH_HZ,
            sat_intensity_electrons: 1e5,
            quantum_efficiency: 0.5,
        }
    }
}

impl ImagingParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("pixel_size", self.pixel_size),
            ("magnification", self.magnification),
            ("linewidth", self.linewidth),
            ("sat_intensity_electrons", self.sat_intensity_electrons),
        ];
        for (name, v) in positive {
            // Infinite saturation count is the unsaturated limit.
            if !(v > 0.0) || v.is_nan() || (v.is_infinite() && name != "sat_intensity_electrons") {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !self.detuning_im.is_finite() {
            return Err(Error::param("detuning_im", "must be finite"));
        }
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::param(
                "quantum_efficiency",
                format!("must lie in (0, 1], got {}", self.quantum_efficiency),
            ));
        }
        Ok(())
    }

    /// `c₀ = 2π px² / (3 λ² M²)`.
    pub fn c0(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.pixel_size.powi(2)
            / (3.0 * self.wavelength.powi(2) * self.magnification.powi(2))
    }

    /// Detuning factor `L = (4Δ² + Γ²)/Γ²`.
    pub fn detuning_factor(&self) -> f64 {
        (4.0 * self.detuning_im.powi(2) + self.linewidth.powi(2)) / self.linewidth.powi(2)
    }

    /// Pixel pitch projected into the object plane, m.
    pub fn object_pixel(&self) -> f64 {
        self.pixel_size / self.magnification
    }

    /// Expected electrons for a photon count, `N_el = QE · N_γ`.
    pub fn electrons_from_photons(&self, photons: f64) -> f64 {
        self.quantum_efficiency * photons
    }
}

/// Row-major grid of electron counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("frame", "dimensions must be non-zero"));
        }
        if data.len() != width * height {
            return Err(Error::param(
                "frame",
                format!("{} values for a {width}x{height} frame", data.len()),
            ));
        }
        if data.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::param("frame", "counts must be finite and non-negative"));
        }
        Ok(Frame { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Frame::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Atom and reference exposures of one shot.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelImage {
    pub atom_frame: Frame,
    pub ref_frame: Frame,
    pub params: ImagingParams,
}

impl PixelImage {
    pub fn new(atom_frame: Frame, ref_frame: Frame, params: ImagingParams) -> Result<Self> {
        if atom_frame.width != ref_frame.width || atom_frame.height != ref_frame.height {
            return Err(Error::param("image", "atom and reference frames differ in size"));
        }
        params.validate()?;
        Ok(PixelImage {
            atom_frame,
            ref_frame,
            params,
        })
    }

    pub fn width(&self) -> usize {
        self.atom_frame.width
    }

    pub fn height(&self) -> usize {
        self.atom_frame.height
    }

    /// Per-pixel atom numbers; clamped pixels keep their clamped value.
    pub fn atom_map(&self) -> Result<Vec<f64>> {
        self.atom_frame
            .data
            .iter()
            .zip(&self.ref_frame.data)
            .map(|(&n, &n0)| count_pixel(n, n0, &self.params).map(|c| c.atoms))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudKind {
    ThomasFermi,
    Gaussian,
}

/// Column-integrated cloud on the camera, in object-plane coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudProfile {
    pub kind: CloudKind,
    /// Center `(x, y)` in meters from the frame corner.
    pub center: (f64, f64),
    /// Thomas–Fermi radii, or Gaussian `1/e` radii with `n ∝ exp(−x²/σ²)`.
    pub radii: (f64, f64),
    pub atom_number: f64,
}

impl CloudProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.radii.0 > 0.0 && self.radii.1 > 0.0) || !self.radii.0.is_finite() || !self.radii.1.is_finite() {
            return Err(Error::param("radii", "must be positive"));
        }
        if !(self.atom_number >= 0.0 && self.atom_number.is_finite()) {
            return Err(Error::param("atom_number", "must be finite and non-negative"));
        }
        if !self.center.0.is_finite() || !self.center.1.is_finite() {
            return Err(Error::param("center", "must be finite"));
        }
        Ok(())
    }
}

/// Axis-aligned counting rectangle in pixel coordinates.
///
/// A pixel `(i, j)` belongs to the region when its center `(i + ½, j + ½)`
/// lies within the half-extents of the region center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingRegion {
    pub center: (f64, f64),
    pub half_width: f64,
    pub half_height: f64,
}

impl CountingRegion {
    /// Region spanning whole pixel columns `x0..x1` and rows `y0..y1`.
    pub fn from_bounds(x0: usize, x1: usize, y0: usize, y1: usize) -> Self {
        CountingRegion {
            center: ((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0),
            half_width: (x1 - x0) as f64 / 2.0,
            half_height: (y1 - y0) as f64 / 2.0,
        }
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let (cx, cy) = self.center;
        if !(self.half_width >= 0.0 && self.half_height >= 0.0) || !cx.is_finite() || !cy.is_finite() {
            return Err(Error::Geometry("region extents must be finite and non-negative".into()));
        }
        let eps = 1e-9;
        if cx - self.half_width < -eps
            || cy - self.half_height < -eps
            || cx + self.half_width > width as f64 + eps
            || cy + self.half_height > height as f64 + eps
        {
            return Err(Error::Geometry(format!(
                "region centered at ({cx:.2}, {cy:.2}) with half-extents ({:.2}, {:.2}) leaves the {width}x{height} frame",
                self.half_width, self.half_height
            )));
        }
        Ok(())
    }

    /// Inclusive-exclusive pixel index ranges covered by the region.
    pub fn pixel_ranges(&self, width: usize, height: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let span = |c: f64, h: f64, n: usize| {
            let lo = (c - h - 0.5).ceil().max(0.0) as usize;
            let hi = ((c + h - 0.5).floor() + 1.0).clamp(0.0, n as f64) as usize;
            lo.min(hi)..hi
        };
        (
            span(self.center.0, self.half_width, width),
            span(self.center.1, self.half_height, height),
        )
    }

    pub fn overlaps(&self, other: &CountingRegion) -> bool {
        (self.center.0 - other.center.0).abs() < self.half_width + other.half_width
            && (self.center.1 - other.center.1).abs() < self.half_height + other.half_height
    }
}
