use super::{CountingRegion, PixelImage};
use crate::lsq::{levenberg_marquardt, FitOptions};
use crate::{Error, Result};

/// Counting regions span this multiple of the fitted Thomas–Fermi diameter.
const REGION_SCALE: f64 = 1.2;
/// Thermal wings start this many Thomas–Fermi radii from the center.
const WING_SCALE: f64 = 1.1;
/// Components carrying less than this fraction of the total are dropped.
const NEGLIGIBLE: f64 = 1e-3;
const BIMODAL_ROUNDS: usize = 3;
/// Trial condensate radii, in units of the single-Gaussian width.
const CORE_FRACTIONS: [f64; 8] = [0.15, 0.25, 0.35, 0.5, 0.65, 0.8, 1.0, 1.3];

/// Binned 1-D atom distribution; bin `i` spans
/// `[origin + i·bin, origin + (i+1)·bin)` in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile1D {
    pub origin: f64,
    pub bin: f64,
    pub values: Vec<f64>,
}

impl Profile1D {
    fn edges(&self, i: usize) -> (f64, f64) {
        let lo = self.origin + i as f64 * self.bin;
        (lo, lo + self.bin)
    }

    fn center_of(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.bin
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Centroid and variance of the positive part of the profile.
    fn moments(&self) -> (f64, f64) {
        let mut w = 0.0;
        let mut m1 = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let v = v.max(0.0);
            w += v;
            m1 += v * self.center_of(i);
        }
        if w <= 0.0 {
            return (self.center_of(self.values.len() / 2), self.bin * self.bin);
        }
        let c = m1 / w;
        let var = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| v.max(0.0) * (self.center_of(i) - c).powi(2))
            .sum::<f64>()
            / w;
        (c, var.max(self.bin * self.bin / 12.0))
    }
}

/// Integrated Thomas–Fermi profile `∝ (1 − x²/R²)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfComponent {
    pub atoms: f64,
    pub center: f64,
    pub radius: f64,
}

/// Gaussian profile `∝ exp(−(x − c)²/σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub atoms: f64,
    pub center: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BimodalFit {
    pub condensate: TfComponent,
    pub thermal: GaussianComponent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfFit {
    /// Cloud center in pixels.
    pub center: (f64, f64),
    /// Thomas–Fermi radii in pixels.
    pub radius: (f64, f64),
    /// Atom number of the x-profile fit.
    pub atoms: f64,
    pub region: CountingRegion,
}

fn tf_primitive(u: f64) -> f64 {
    let u = u.clamp(-1.0, 1.0);
    let u2 = u * u;
    u * (1.0 - 2.0 * u2 / 3.0 + u2 * u2 / 5.0)
}

fn tf_bin(c: &TfComponent, lo: f64, hi: f64) -> f64 {
    let r = c.radius.abs();
    if r == 0.0 {
        return 0.0;
    }
    c.atoms * 15.0 / 16.0 * (tf_primitive((hi - c.center) / r) - tf_primitive((lo - c.center) / r))
}

fn gaussian_bin(c: &GaussianComponent, lo: f64, hi: f64) -> f64 {
    let s = c.sigma.abs();
    if s == 0.0 {
        return 0.0;
    }
    0.5 * c.atoms * (libm::erf((hi - c.center) / s) - libm::erf((lo - c.center) / s))
}

fn bins_of<F: Fn(f64, f64) -> f64>(origin: f64, bin: f64, len: usize, f: F) -> Profile1D {
    let values = (0..len)
        .map(|i| {
            let lo = origin + i as f64 * bin;
            f(lo, lo + bin)
        })
        .collect();
    Profile1D { origin, bin, values }
}

/// Bin-integrated Thomas–Fermi profile.
pub fn thomas_fermi_profile(origin: f64, bin: f64, len: usize, c: &TfComponent) -> Profile1D {
    bins_of(origin, bin, len, |lo, hi| tf_bin(c, lo, hi))
}

/// Bin-integrated Gaussian profile.
pub fn gaussian_profile(origin: f64, bin: f64, len: usize, c: &GaussianComponent) -> Profile1D {
    bins_of(origin, bin, len, |lo, hi| gaussian_bin(c, lo, hi))
}

/// Atom numbers summed along y (x-profile) and along x (y-profile).
pub fn integrated_profiles(img: &PixelImage, search_box: &CountingRegion) -> Result<(Profile1D, Profile1D)> {
    search_box.validate(img.width(), img.height())?;
    let (xs, ys) = search_box.pixel_ranges(img.width(), img.height());
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Geometry("search box contains no pixels".into()));
    }
    let map = img.atom_map()?;
    let w = img.width();
    let mut px = vec![0.0; xs.len()];
    let mut py = vec![0.0; ys.len()];
    for (j, y) in ys.clone().enumerate() {
        for (i, x) in xs.clone().enumerate() {
            let v = map[y * w + x];
            px[i] += v;
            py[j] += v;
        }
    }
    Ok((
        Profile1D {
            origin: xs.start as f64,
            bin: 1.0,
            values: px,
        },
        Profile1D {
            origin: ys.start as f64,
            bin: 1.0,
            values: py,
        },
    ))
}

fn opts() -> FitOptions {
    FitOptions::default()
}

fn fit_tf_profile(p: &Profile1D, guess: TfComponent) -> Result<TfComponent> {
    let res = levenberg_marquardt(
        |q| {
            let c = TfComponent {
                atoms: q[0],
                center: q[1],
                radius: q[2],
            };
            (0..p.values.len())
                .map(|i| {
                    let (lo, hi) = p.edges(i);
                    tf_bin(&c, lo, hi) - p.values[i]
                })
                .collect()
        },
        &[guess.atoms, guess.center, guess.radius],
        &opts(),
    )?;
    Ok(TfComponent {
        atoms: res.params[0],
        center: res.params[1],
        radius: res.params[2].abs(),
    })
}

fn tf_guess(p: &Profile1D) -> TfComponent {
    let (c, var) = p.moments();
    TfComponent {
        atoms: p.total(),
        center: c,
        // Variance of the (1 − u²)² profile is R²/7.
        radius: (7.0 * var).sqrt(),
    }
}

/// Fits a single Thomas–Fermi component to a 1-D profile.
fn fit_tf_1d(p: &Profile1D) -> Result<TfComponent> {
    if p.values.len() < 3 {
        return Err(Error::Geometry("profile needs at least three bins".into()));
    }
    if !(p.total() > 0.0) {
        return Err(Error::Undefined("profile holds no atoms".into()));
    }
    fit_tf_profile(p, tf_guess(p))
}

/// Thomas–Fermi fits to both integrated profiles inside `search_box`.
///
/// The returned counting region is centered on the fit and spans 1.2 times
/// the fitted diameter along each axis.
pub fn fit_thomas_fermi(img: &PixelImage, search_box: &CountingRegion) -> Result<TfFit> {
    let (px, py) = integrated_profiles(img, search_box)?;
    let fx = fit_tf_1d(&px)?;
    let fy = fit_tf_1d(&py)?;
    Ok(TfFit {
        center: (fx.center, fy.center),
        radius: (fx.radius, fy.radius),
        atoms: fx.atoms,
        region: CountingRegion {
            center: (fx.center, fy.center),
            half_width: REGION_SCALE * fx.radius,
            half_height: REGION_SCALE * fy.radius,
        },
    })
}

fn subprofile(p: &Profile1D, keep: impl Fn(f64) -> bool) -> (Vec<usize>, Vec<f64>) {
    (0..p.values.len())
        .filter(|&i| keep(p.center_of(i)))
        .map(|i| (i, p.values[i]))
        .unzip()
}

fn fit_gaussian_bins(p: &Profile1D, idx: &[usize], guess: GaussianComponent) -> Result<GaussianComponent> {
    let res = levenberg_marquardt(
        |q| {
            let g = GaussianComponent {
                atoms: q[0],
                center: q[1],
                sigma: q[2],
            };
            idx.iter()
                .map(|&i| {
                    let (lo, hi) = p.edges(i);
                    gaussian_bin(&g, lo, hi) - p.values[i]
                })
                .collect()
        },
        &[guess.atoms, guess.center, guess.sigma],
        &opts(),
    )?;
    Ok(GaussianComponent {
        atoms: res.params[0],
        center: res.params[1],
        sigma: res.params[2].abs(),
    })
}

fn zero_tf(center: f64) -> TfComponent {
    TfComponent {
        atoms: 0.0,
        center,
        radius: 0.0,
    }
}

fn zero_gaussian(center: f64) -> GaussianComponent {
    GaussianComponent {
        atoms: 0.0,
        center,
        sigma: 0.0,
    }
}

fn fit_tf_bins(p: &Profile1D, idx: &[usize], values: &[f64], guess: TfComponent) -> Result<TfComponent> {
    let res = levenberg_marquardt(
        |q| {
            let c = TfComponent {
                atoms: q[0],
                center: q[1],
                radius: q[2],
            };
            idx.iter()
                .zip(values)
                .map(|(&i, v)| {
                    let (lo, hi) = p.edges(i);
                    tf_bin(&c, lo, hi) - v
                })
                .collect()
        },
        &[guess.atoms, guess.center, guess.radius],
        &opts(),
    )?;
    Ok(TfComponent {
        atoms: res.params[0],
        center: res.params[1],
        radius: res.params[2].abs(),
    })
}

fn bimodal_rss(p: &Profile1D, f: &BimodalFit) -> f64 {
    (0..p.values.len())
        .map(|i| {
            let (lo, hi) = p.edges(i);
            (tf_bin(&f.condensate, lo, hi) + gaussian_bin(&f.thermal, lo, hi) - p.values[i]).powi(2)
        })
        .sum()
}

/// Wings first, core on the residual, alternated, then a joint refinement
/// with a shared center. `None` when either component vanishes.
fn two_stage(p: &Profile1D, center: f64, radius: f64, width: f64) -> Option<BimodalFit> {
    let total = p.total();
    let (mut c, mut r) = (center, radius);
    let mut th = GaussianComponent {
        atoms: total,
        center: c,
        sigma: width,
    };
    let mut tf = TfComponent {
        atoms: 0.0,
        center: c,
        radius: r,
    };
    for _ in 0..BIMODAL_ROUNDS {
        let (wings, values) = subprofile(p, |x| (x - c).abs() > WING_SCALE * r);
        if wings.len() < 4 || values.iter().sum::<f64>() <= NEGLIGIBLE * total {
            return None;
        }
        th = fit_gaussian_bins(p, &wings, GaussianComponent { center: c, ..th }).ok()?;
        let (core, raw) = subprofile(p, |x| (x - c).abs() <= WING_SCALE * r);
        let residual: Vec<f64> = core
            .iter()
            .zip(&raw)
            .map(|(&i, v)| {
                let (lo, hi) = p.edges(i);
                v - gaussian_bin(&th, lo, hi)
            })
            .collect();
        let core_atoms: f64 = residual.iter().sum();
        if core.len() < 3 || core_atoms <= NEGLIGIBLE * total {
            return None;
        }
        let guess = TfComponent {
            atoms: core_atoms,
            center: c,
            radius: r,
        };
        tf = fit_tf_bins(p, &core, &residual, guess).ok()?;
        if !(tf.radius > 0.0) || !tf.radius.is_finite() {
            return None;
        }
        c = tf.center;
        r = tf.radius;
    }

    let res = levenberg_marquardt(
        |q| {
            let t = TfComponent {
                atoms: q[0],
                center: q[1],
                radius: q[2],
            };
            let g = GaussianComponent {
                atoms: q[3],
                center: q[1],
                sigma: q[4],
            };
            (0..p.values.len())
                .map(|i| {
                    let (lo, hi) = p.edges(i);
                    tf_bin(&t, lo, hi) + gaussian_bin(&g, lo, hi) - p.values[i]
                })
                .collect()
        },
        &[tf.atoms, tf.center, tf.radius, th.atoms, th.sigma],
        &opts(),
    )
    .ok()?;
    let q = &res.params;
    let fit = BimodalFit {
        condensate: TfComponent {
            atoms: q[0],
            center: q[1],
            radius: q[2].abs(),
        },
        thermal: GaussianComponent {
            atoms: q[3],
            center: q[1],
            sigma: q[4].abs(),
        },
    };
    let ok = q.iter().all(|v| v.is_finite()) && fit.condensate.atoms > 0.0 && fit.thermal.atoms > 0.0;
    ok.then_some(fit)
}

/// Separates a 1-D profile into a condensate and a thermal component.
///
/// For a ladder of trial condensate radii the thermal Gaussian is fitted to
/// the wings outside 1.1 radii and the condensate to the residual core; the
/// two steps are alternated and finished by a joint fit. Single-component
/// fits compete with these, and the model with the best penalized residual
/// (Bayesian information criterion) wins.
pub fn bimodal_fit(p: &Profile1D) -> Result<BimodalFit> {
    let mid = p.center_of(p.values.len() / 2);
    if p.values.iter().all(|v| *v == 0.0) {
        return Ok(BimodalFit {
            condensate: zero_tf(mid),
            thermal: zero_gaussian(mid),
        });
    }
    if !(p.total() > 0.0) {
        return Err(Error::Undefined("profile holds no atoms".into()));
    }
    if p.values.len() < 3 {
        return Err(Error::Geometry("profile needs at least three bins".into()));
    }
    if !(p.bin > 0.0) || !p.bin.is_finite() || !p.origin.is_finite() {
        return Err(Error::param("bin", "must be positive and finite"));
    }
    // Fitting in bin units keeps every parameter of order one to a few hundred.
    let unit = Profile1D {
        origin: 0.0,
        bin: 1.0,
        values: p.values.clone(),
    };
    let f = bimodal_fit_unit(&unit)?;
    let to_axis = |x: f64| p.origin + x * p.bin;
    Ok(BimodalFit {
        condensate: TfComponent {
            center: to_axis(f.condensate.center),
            radius: f.condensate.radius * p.bin,
            ..f.condensate
        },
        thermal: GaussianComponent {
            center: to_axis(f.thermal.center),
            sigma: f.thermal.sigma * p.bin,
            ..f.thermal
        },
    })
}

fn bimodal_fit_unit(p: &Profile1D) -> Result<BimodalFit> {
    let n = p.values.len();
    let total = p.total();
    let (c0, var) = p.moments();
    let all: Vec<usize> = (0..n).collect();
    let mut candidates: Vec<(usize, BimodalFit)> = Vec::new();

    let start = GaussianComponent {
        atoms: total,
        center: c0,
        sigma: (2.0 * var).sqrt(),
    };
    let gauss = fit_gaussian_bins(p, &all, start).ok().filter(|g| g.atoms > 0.0 && g.sigma > 0.0);
    if let Some(g) = gauss {
        candidates.push((
            3,
            BimodalFit {
                condensate: zero_tf(g.center),
                thermal: g,
            },
        ));
    }
    let tf_err = match fit_tf_profile(p, tf_guess(p)) {
        Ok(t) if t.atoms > 0.0 && t.radius > 0.0 => {
            candidates.push((
                3,
                BimodalFit {
                    condensate: t,
                    thermal: zero_gaussian(t.center),
                },
            ));
            None
        }
        Ok(t) => Some(Error::Undefined(format!("Thomas–Fermi fit degenerated to {t:?}"))),
        Err(e) => Some(e),
    };

    let width = gauss.map_or(start.sigma, |g| g.sigma);
    let center = gauss.map_or(c0, |g| g.center);
    for k in CORE_FRACTIONS {
        if let Some(f) = two_stage(p, center, k * width, width) {
            candidates.push((5, f));
        }
    }

    // Noise-free inputs fit to rounding; the floor lets the penalty decide.
    let floor = (1e-12 * total / n as f64).powi(2);
    let score = |k: usize, f: &BimodalFit| {
        let nf = n as f64;
        nf * (bimodal_rss(p, f) / nf).max(floor).ln() + k as f64 * nf.ln()
    };
    candidates
        .iter()
        .map(|(k, f)| (score(*k, f), *f))
        .filter(|(s, _)| s.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, f)| f)
        .ok_or_else(|| tf_err.unwrap_or_else(|| Error::Undefined("no bimodal decomposition converged".into())))
}

/// Bimodal fits of the x- and y-integrated profiles inside `search_box`.
pub fn bimodal_fit_image(img: &PixelImage, search_box: &CountingRegion) -> Result<(BimodalFit, BimodalFit)> {
    let (px, py) = integrated_profiles(img, search_box)?;
    Ok((bimodal_fit(&px)?, bimodal_fit(&py)?))
}
