use super::{CountingRegion, ImagingParams, PixelImage};
use crate::{Error, Result};

/// Zero counts are raised to this value before taking the logarithm.
///
/// Sampled frames hold whole electrons, so only empty pixels are affected.
/// Noise-free frames may carry fractional counts and pass through exactly.
const MIN_COUNT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCount {
    pub atoms: f64,
    /// One of the frames held no electrons and was clamped.
    pub clamped: bool,
}

fn check_count(name: &'static str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::param(name, format!("electron count must be finite and non-negative, got {v}")));
    }
    Ok(())
}

/// Atom number of one pixel from its atom and reference electron counts.
pub fn count_pixel(n_el: f64, n_el0: f64, params: &ImagingParams) -> Result<PixelCount> {
    check_count("n_el", n_el)?;
    check_count("n_el0", n_el0)?;
    let clamped = n_el <= 0.0 || n_el0 <= 0.0;
    let n = if n_el > 0.0 { n_el } else { MIN_COUNT };
    let n0 = if n_el0 > 0.0 { n_el0 } else { MIN_COUNT };
    let atoms = params.c0()
        * (params.detuning_factor() * (n0 / n).ln() + (n0 - n) / params.sat_intensity_electrons);
    Ok(PixelCount { atoms, clamped })
}

/// Noise-free atom-frame electron count that produces `true_atoms_px`.
///
/// Inverts the counting relation by bisection on the optical depth
/// `u = ln(N_el,0/N_el)`, where it is strictly increasing.
pub fn forward_transmission(true_atoms_px: f64, n_el0: f64, params: &ImagingParams) -> Result<f64> {
    if !(true_atoms_px >= 0.0) || !true_atoms_px.is_finite() {
        return Err(Error::param("true_atoms_px", "must be finite and non-negative"));
    }
    if !(n_el0 > 0.0) || !n_el0.is_finite() {
        return Err(Error::param("n_el0", "must be positive"));
    }
    if true_atoms_px == 0.0 {
        return Ok(n_el0);
    }
    let c0 = params.c0();
    let l = params.detuning_factor();
    let sat = params.sat_intensity_electrons;
    let atoms_at = |u: f64| c0 * (l * u - n_el0 * (-u).exp_m1() / sat);
    let mut lo = 0.0;
    let mut hi = true_atoms_px / (c0 * l);
    // atoms_at(hi) ≥ target since the saturation term is non-negative.
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if atoms_at(mid) < true_atoms_px {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(n_el0 * (-0.5 * (lo + hi)).exp())
}

/// Photon shot-noise variance of one pixel's atom number, atoms².
///
/// Counts below one electron are evaluated at one, where the `1/√N` form
/// stops describing a counting process.
pub fn pixel_noise_variance(n_el: f64, n_el0: f64, params: &ImagingParams) -> f64 {
    let l = params.detuning_factor();
    let sat = params.sat_intensity_electrons;
    let term = |n: f64| {
        let n = n.max(MIN_COUNT);
        (l / n.sqrt() + n.sqrt() / sat).powi(2)
    };
    params.c0().powi(2) * (term(n_el) + term(n_el0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCount {
    pub atoms: f64,
    /// Predicted photon shot-noise standard deviation of `atoms`.
    pub predicted_sigma: f64,
    pub pixels: usize,
    /// Clamped pixels, excluded from the sum.
    pub invalid: Vec<(usize, usize)>,
}

/// Sums pixel atom numbers and photon-noise variances over a region.
pub fn count_region(img: &PixelImage, region: &CountingRegion) -> Result<RegionCount> {
    region.validate(img.width(), img.height())?;
    let (xs, ys) = region.pixel_ranges(img.width(), img.height());
    let mut atoms = 0.0;
    let mut var = 0.0;
    let mut pixels = 0;
    let mut invalid = Vec::new();
    for y in ys {
        for x in xs.clone() {
            let n = img.atom_frame.get(x, y);
            let n0 = img.ref_frame.get(x, y);
            let c = count_pixel(n, n0, &img.params)?;
            if c.clamped {
                invalid.push((x, y));
                continue;
            }
            atoms += c.atoms;
            var += pixel_noise_variance(n, n0, &img.params);
            pixels += 1;
        }
    }
    if !invalid.is_empty() {
        log::warn!("{} clamped pixels excluded from the region count", invalid.len());
    }
    Ok(RegionCount {
        atoms,
        predicted_sigma: var.sqrt(),
        pixels,
        invalid,
    })
}
