use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{forward_transmission, CloudKind, CloudProfile, Frame, ImagingParams, PixelImage};
use crate::{Error, Result};

/// Midpoint sub-samples per pixel along x for Thomas–Fermi clouds; the
/// y direction is integrated in closed form.
const TF_SUBSAMPLES: usize = 16;

/// Gaussian clouds must fit in the frame out to this many `1/e` radii.
const GAUSSIAN_EXTENT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSize {
    pub width: usize,
    pub height: usize,
}

/// `∫ (a² − y²)^{3/2} dy` from 0 to `y`, for `|y| ≤ a`.
fn tf_column_primitive(y: f64, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let y = y.clamp(-a, a);
    let a2 = a * a;
    let root = (a2 - y * y).max(0.0).sqrt();
    y / 8.0 * (5.0 * a2 - 2.0 * y * y) * root + 3.0 * a2 * a2 / 8.0 * (y / a).clamp(-1.0, 1.0).asin()
}

fn cloud_extent(cloud: &CloudProfile) -> (f64, f64) {
    match cloud.kind {
        CloudKind::ThomasFermi => cloud.radii,
        CloudKind::Gaussian => (GAUSSIAN_EXTENT * cloud.radii.0, GAUSSIAN_EXTENT * cloud.radii.1),
    }
}

/// Whether the cloud's extent lies inside a frame, both in pixels.
pub fn cloud_fits_frame(cloud: &CloudProfile, size: FrameSize, params: &ImagingParams) -> bool {
    let px = params.object_pixel();
    let (cx, cy) = (cloud.center.0 / px, cloud.center.1 / px);
    let (ex, ey) = cloud_extent(cloud);
    let (ex, ey) = (ex / px, ey / px);
    cx - ex >= 0.0 && cy - ey >= 0.0 && cx + ex <= size.width as f64 && cy + ey <= size.height as f64
}

/// Adds the pixel-integrated atom numbers of one cloud to `out`.
fn accumulate_cloud(cloud: &CloudProfile, size: FrameSize, params: &ImagingParams, out: &mut [f64]) {
    let px = params.object_pixel();
    let (cx, cy) = (cloud.center.0 / px, cloud.center.1 / px);
    let (rx, ry) = (cloud.radii.0 / px, cloud.radii.1 / px);
    let (ex, ey) = cloud_extent(cloud);
    let (ex, ey) = (ex / px, ey / px);
    // Gaussian tails are integrated across the whole frame.
    let (x_lo, x_hi, y_lo, y_hi) = match cloud.kind {
        CloudKind::Gaussian => (0, size.width, 0, size.height),
        CloudKind::ThomasFermi => (
            (cx - ex).floor().max(0.0) as usize,
            ((cx + ex).ceil() as usize).min(size.width),
            (cy - ey).floor().max(0.0) as usize,
            ((cy + ey).ceil() as usize).min(size.height),
        ),
    };
    let n = cloud.atom_number;
    match cloud.kind {
        CloudKind::Gaussian => {
            let frac = |lo: f64, hi: f64, c: f64, s: f64| 0.5 * (libm::erf((hi - c) / s) - libm::erf((lo - c) / s));
            let fy: Vec<f64> = (y_lo..y_hi).map(|j| frac(j as f64, j as f64 + 1.0, cy, ry)).collect();
            for i in x_lo..x_hi {
                let fx = frac(i as f64, i as f64 + 1.0, cx, rx);
                for (k, j) in (y_lo..y_hi).enumerate() {
                    out[j * size.width + i] += n * fx * fy[k];
                }
            }
        }
        CloudKind::ThomasFermi => {
            // Column density N·5/(2π Rx Ry)·(1 − X² − Y²)^{3/2}; in scaled
            // coordinates the y-integral over a pixel is a primitive difference.
            let norm = n * 5.0 / (2.0 * std::f64::consts::PI);
            let dx = 1.0 / TF_SUBSAMPLES as f64;
            for i in x_lo..x_hi {
                for s in 0..TF_SUBSAMPLES {
                    let x = i as f64 + (s as f64 + 0.5) * dx;
                    let xs = (x - cx) / rx;
                    let a2 = 1.0 - xs * xs;
                    if a2 <= 0.0 {
                        continue;
                    }
                    let a = a2.sqrt();
                    for j in y_lo..y_hi {
                        let y0 = (j as f64 - cy) / ry;
                        let y1 = (j as f64 + 1.0 - cy) / ry;
                        let col = tf_column_primitive(y1, a) - tf_column_primitive(y0, a);
                        // dX = dx/rx, and the Y-integral already carries 1/ry via scaling.
                        out[j * size.width + i] += norm * col * dx / rx;
                    }
                }
            }
        }
    }
}

/// True atoms per pixel for a set of clouds, row-major.
pub fn column_atoms(clouds: &[CloudProfile], size: FrameSize, params: &ImagingParams) -> Result<Vec<f64>> {
    if size.width == 0 || size.height == 0 {
        return Err(Error::param("frame", "dimensions must be non-zero"));
    }
    let mut out = vec![0.0; size.width * size.height];
    for cloud in clouds {
        cloud.validate()?;
        if !cloud_fits_frame(cloud, size, params) {
            return Err(Error::Geometry(format!(
                "cloud at ({:.3e}, {:.3e}) m does not fit in the {}x{} frame",
                cloud.center.0, cloud.center.1, size.width, size.height
            )));
        }
        accumulate_cloud(cloud, size, params, &mut out);
    }
    Ok(out)
}

/// Synthesizes an atom frame and a fresh reference frame.
///
/// With `rng_seed = None` both frames hold the expected electron counts;
/// otherwise every pixel of both frames is drawn from a Poisson
/// distribution, atom frame first, in row-major order.
pub fn render_image(
    clouds: &[CloudProfile],
    size: FrameSize,
    params: &ImagingParams,
    ref_level_electrons: f64,
    rng_seed: Option<u64>,
) -> Result<PixelImage> {
    params.validate()?;
    if !(ref_level_electrons > 0.0) || !ref_level_electrons.is_finite() {
        return Err(Error::param("ref_level_electrons", "must be positive"));
    }
    let atoms = column_atoms(clouds, size, params)?;
    let expected = atoms
        .iter()
        .map(|&a| forward_transmission(a, ref_level_electrons, params))
        .collect::<Result<Vec<f64>>>()?;
    let (atom_data, ref_data) = match rng_seed {
        None => (expected, vec![ref_level_electrons; size.width * size.height]),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let atom_data = expected.iter().map(|&m| poisson(m, &mut rng)).collect::<Result<Vec<_>>>()?;
            let ref_dist = Poisson::new(ref_level_electrons)
                .map_err(|e| Error::param("ref_level_electrons", e.to_string()))?;
            let ref_data = (0..size.width * size.height).map(|_| ref_dist.sample(&mut rng)).collect();
            (atom_data, ref_data)
        }
    };
    PixelImage::new(
        Frame::new(size.width, size.height, atom_data)?,
        Frame::new(size.width, size.height, ref_data)?,
        *params,
    )
}

fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if mean <= 0.0 {
        return Ok(0.0);
    }
    Poisson::new(mean)
        .map(|d| d.sample(rng))
        .map_err(|e| Error::param("poisson mean", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ImagingParams {
        ImagingParams::default()
    }

    fn size() -> FrameSize {
        FrameSize { width: 64, height: 48 }
    }

    fn tf(n: f64, cx_px: f64, cy_px: f64, r_px: (f64, f64)) -> CloudProfile {
        let px = params().object_pixel();
        CloudProfile {
            kind: CloudKind::ThomasFermi,
            center: (cx_px * px, cy_px * px),
            radii: (r_px.0 * px, r_px.1 * px),
            atom_number: n,
        }
    }

    #[test]
    fn primitive_spans_full_column() {
        // ∫_{-a}^{a} (a² − y²)^{3/2} dy = 3π a⁴ / 8
        let a = 0.7_f64;
        let full = tf_column_primitive(a, a) - tf_column_primitive(-a, a);
        assert!((full - 3.0 * std::f64::consts::PI * a.powi(4) / 8.0).abs() < 1e-15);
    }

    #[test]
    fn empty_scene_without_noise() {
        let img = render_image(&[], size(), &params(), 2e4, None).unwrap();
        assert_eq!(img.atom_frame, img.ref_frame);
    }

    #[test]
    fn tf_total_against_fine_quadrature() {
        let cloud = tf(1e4, 30.3, 22.7, (11.4, 8.2));
        let atoms = column_atoms(&[cloud], size(), &params()).unwrap();
        let total: f64 = atoms.iter().sum();
        assert!((total - 1e4).abs() < 1e-3 * 1e4, "{total}");

        // Brute 2-D midpoint quadrature at 10x resolution of the column density.
        let px = params().object_pixel();
        let (cx, cy) = (cloud.center.0 / px, cloud.center.1 / px);
        let (rx, ry) = (cloud.radii.0 / px, cloud.radii.1 / px);
        let norm = 1e4 * 5.0 / (2.0 * std::f64::consts::PI * rx * ry);
        let sub = 10;
        let (i, j) = (30usize, 25usize);
        let mut brute = 0.0;
        for a in 0..sub {
            for b in 0..sub {
                let x = i as f64 + (a as f64 + 0.5) / sub as f64;
                let y = j as f64 + (b as f64 + 0.5) / sub as f64;
                let q = 1.0 - ((x - cx) / rx).powi(2) - ((y - cy) / ry).powi(2);
                if q > 0.0 {
                    brute += norm * q.powf(1.5) / (sub * sub) as f64;
                }
            }
        }
        let got = atoms[j * 64 + i];
        assert!((got - brute).abs() < 1e-3 * got, "{got} vs {brute}");
    }

    #[test]
    fn gaussian_total() {
        let px = params().object_pixel();
        let cloud = CloudProfile {
            kind: CloudKind::Gaussian,
            center: (32.0 * px, 24.0 * px),
            radii: (5.0 * px, 4.0 * px),
            atom_number: 5000.0,
        };
        let total: f64 = column_atoms(&[cloud], size(), &params()).unwrap().iter().sum();
        assert!((total - 5000.0).abs() < 1e-6 * 5000.0);
    }

    #[test]
    fn cloud_outside_frame_is_rejected() {
        let cloud = tf(1e3, 5.0, 20.0, (8.0, 8.0));
        assert!(matches!(
            render_image(&[cloud], size(), &params(), 2e4, None),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let cloud = tf(2e3, 32.0, 24.0, (9.0, 9.0));
        let a = render_image(&[cloud], size(), &params(), 2e4, Some(7)).unwrap();
        let b = render_image(&[cloud], size(), &params(), 2e4, Some(7)).unwrap();
        let c = render_image(&[cloud], size(), &params(), 2e4, Some(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
