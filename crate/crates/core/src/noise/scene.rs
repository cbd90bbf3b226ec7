use serde::{Deserialize, Serialize};

use crate::imaging::{
    cloud_fits_frame, count_region, fit_thomas_fermi, render_image, CloudKind, CloudProfile, CountingRegion, FrameSize,
    ImagingParams, PixelImage, RegionCount,
};
use crate::{Error, Result};

/// Counting regions span this multiple of the Thomas–Fermi diameter.
const TF_REGION_SCALE: f64 = 1.2;
/// Gaussian clouds are counted out to this many `1/e` radii.
const GAUSSIAN_REGION_SCALE: f64 = 3.0;
/// TF fits search a box this much larger than the counting region.
const SEARCH_SCALE: f64 = 1.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RegionMode {
    /// Regions placed from the known cloud geometry, identical for every shot.
    #[default]
    Fixed,
    /// Regions re-derived from a Thomas–Fermi fit of each image.
    Fit,
}

/// Two spatially separated clouds imaged onto one frame.
///
/// State |1⟩ sits at `center`, state |2⟩ at `center + separation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagingScene {
    pub params: ImagingParams,
    pub frame: FrameSize,
    pub kind: CloudKind,
    /// Cloud radii in meters, shared by both states.
    pub radii: (f64, f64),
    pub center: (f64, f64),
    pub separation: (f64, f64),
    pub ref_level: f64,
    pub regions: RegionMode,
}

impl Default for ImagingScene {
    fn default() -> Self {
        let params = ImagingParams::default();
        let px = params.object_pixel();
        ImagingScene {
            params,
            frame: FrameSize { width: 256, height: 256 },
            kind: CloudKind::ThomasFermi,
            radii: (16.0 * px, 16.0 * px),
            center: (88.0 * px, 128.0 * px),
            separation: (80.0 * px, 0.0),
            ref_level: 2e4,
            regions: RegionMode::Fixed,
        }
    }
}

impl ImagingScene {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.ref_level > 0.0) || !self.ref_level.is_finite() {
            return Err(Error::param("ref_level", "must be positive"));
        }
        let [a, b] = self.clouds(1.0, 1.0);
        a.validate()?;
        for c in [a, b] {
            if !cloud_fits_frame(&c, self.frame, &self.params) {
                return Err(Error::Geometry(format!(
                    "cloud at ({:.3e}, {:.3e}) m does not fit in the {}x{} frame",
                    c.center.0, c.center.1, self.frame.width, self.frame.height
                )));
            }
        }
        let [r1, r2] = self.nominal_regions();
        for r in [r1, r2] {
            r.validate(self.frame.width, self.frame.height)?;
        }
        if r1.overlaps(&r2) {
            return Err(Error::Geometry(
                "counting regions of the two states overlap; increase the separation".into(),
            ));
        }
        Ok(())
    }

    pub fn clouds(&self, n1: f64, n2: f64) -> [CloudProfile; 2] {
        let cloud = |center, n| CloudProfile {
            kind: self.kind,
            center,
            radii: self.radii,
            atom_number: n,
        };
        let c2 = (self.center.0 + self.separation.0, self.center.1 + self.separation.1);
        [cloud(self.center, n1), cloud(c2, n2)]
    }

    /// Counting regions derived from the true cloud geometry.
    pub fn nominal_regions(&self) -> [CountingRegion; 2] {
        let px = self.params.object_pixel();
        let scale = match self.kind {
            CloudKind::ThomasFermi => TF_REGION_SCALE,
            CloudKind::Gaussian => GAUSSIAN_REGION_SCALE,
        };
        let region = |c: (f64, f64)| CountingRegion {
            center: (c.0 / px, c.1 / px),
            half_width: scale * self.radii.0 / px,
            half_height: scale * self.radii.1 / px,
        };
        let c2 = (self.center.0 + self.separation.0, self.center.1 + self.separation.1);
        [region(self.center), region(c2)]
    }

    fn search_box(&self, nominal: &CountingRegion) -> CountingRegion {
        let (w, h) = (self.frame.width as f64, self.frame.height as f64);
        let (cx, cy) = nominal.center;
        let hw = (SEARCH_SCALE * nominal.half_width).min(cx).min(w - cx);
        let hh = (SEARCH_SCALE * nominal.half_height).min(cy).min(h - cy);
        CountingRegion {
            center: nominal.center,
            half_width: hw,
            half_height: hh,
        }
    }

    pub fn render(&self, n1: f64, n2: f64, seed: Option<u64>) -> Result<PixelImage> {
        render_image(&self.clouds(n1, n2), self.frame, &self.params, self.ref_level, seed)
    }

    /// Counts both states on an image, returning `[state 1, state 2]`.
    pub fn count(&self, img: &PixelImage) -> Result<[RegionCount; 2]> {
        let nominal = self.nominal_regions();
        let regions = match self.regions {
            RegionMode::Fixed => nominal,
            RegionMode::Fit => {
                let mut out = nominal;
                for (slot, r) in out.iter_mut().zip(&nominal) {
                    *slot = fit_thomas_fermi(img, &self.search_box(r))?.region;
                }
                out
            }
        };
        Ok([count_region(img, &regions[0])?, count_region(img, &regions[1])?])
    }
}

/// First-order photon-noise contribution to `p = N₂/(N₁+N₂)` at the
/// scene's noise-free counts.
pub fn photon_sigma_p(scene: &ImagingScene, n1: f64, n2: f64) -> Result<f64> {
    let n = n1 + n2;
    if !(n > 0.0) {
        return Err(Error::Undefined("transition probability is undefined without atoms".into()));
    }
    let img = scene.render(n1, n2, None)?;
    let regions = scene.nominal_regions();
    let s1 = count_region(&img, &regions[0])?.predicted_sigma;
    let s2 = count_region(&img, &regions[1])?.predicted_sigma;
    Ok(((n1 * s2).powi(2) + (n2 * s1).powi(2)).sqrt() / (n * n))
}
