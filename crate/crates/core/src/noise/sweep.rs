use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::{photon_sigma_p, qpn_sigma, sample_binomial, ImagingScene};
use crate::{Error, Result};

/// One simulated run of the experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    pub n_total_true: u64,
    pub n2_true: u64,
    pub n1_measured: f64,
    pub n2_measured: f64,
    pub p_hat: f64,
}

/// Simulates one shot: a binomial split of `n_total` atoms, optionally
/// imaged and counted through `scene`.
pub fn sample_shot(n_total: u64, p: f64, scene: Option<&ImagingScene>, seed: u64) -> Result<ShotRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shot_with_rng(n_total, p, scene, &mut rng)
}

fn shot_with_rng(n_total: u64, p: f64, scene: Option<&ImagingScene>, rng: &mut ChaCha8Rng) -> Result<ShotRecord> {
    if n_total == 0 {
        return Err(Error::param("n_total", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", format!("must lie in [0, 1], got {p}")));
    }
    let n2 = sample_binomial(n_total, p, rng);
    let n1 = n_total - n2;
    let (m1, m2) = match scene {
        None => (n1 as f64, n2 as f64),
        Some(s) => {
            let img = s.render(n1 as f64, n2 as f64, Some(rng.next_u64()))?;
            let [c1, c2] = s.count(&img)?;
            (c1.atoms, c2.atoms)
        }
    };
    Ok(ShotRecord {
        n_total_true: n_total,
        n2_true: n2,
        n1_measured: m1,
        n2_measured: m2,
        p_hat: m2 / (m1 + m2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub shots_per_n: usize,
    pub p: f64,
    pub base_seed: u64,
    /// Draw each shot's total atom number from a Poisson distribution.
    pub poisson_total: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            shots_per_n: 500,
            p: 0.5,
            base_seed: 0,
            poisson_total: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: u64,
    pub shots: usize,
    pub sigma_measured: f64,
    pub sigma_qpn: f64,
    pub sigma_photon: f64,
    pub sigma_combined: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweepResult {
    pub rows: Vec<SweepRow>,
    /// Per-row shot records in shot order.
    pub shots: Vec<Vec<ShotRecord>>,
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Measured and predicted spread of `p̂` at each total atom number.
///
/// Shot `i` of every row is seeded with `base_seed + i`, so rows share
/// their random streams and differences between rows reflect `N` rather
/// than sampling luck. Shots run in parallel; results are ordered by
/// `(N, shot index)`.
pub fn sweep_sigma_p(n_values: &[u64], opts: &SweepOptions, scene: Option<&ImagingScene>) -> Result<NoiseSweepResult> {
    if opts.shots_per_n < 2 {
        return Err(Error::param("shots_per_n", "must be at least 2"));
    }
    if let Some(s) = scene {
        s.validate()?;
    }
    let mut rows = Vec::with_capacity(n_values.len());
    let mut shots = Vec::with_capacity(n_values.len());
    for &n in n_values {
        if n == 0 {
            return Err(Error::param("N", "atom numbers must be at least 1"));
        }
        let records = (0..opts.shots_per_n)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.base_seed.wrapping_add(i as u64));
                let total = if opts.poisson_total {
                    let d = Poisson::new(n as f64).map_err(|e| Error::param("N", e.to_string()))?;
                    (d.sample(&mut rng) as u64).max(1)
                } else {
                    n
                };
                shot_with_rng(total, opts.p, scene, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let p_hats: Vec<f64> = records.iter().map(|r| r.p_hat).collect();
        let nf = n as f64;
        let sigma_qpn = qpn_sigma(nf, opts.p)?;
        let sigma_photon = match scene {
            Some(s) => photon_sigma_p(s, nf * (1.0 - opts.p), nf * opts.p)?,
            None => 0.0,
        };
        rows.push(SweepRow {
            n,
            shots: opts.shots_per_n,
            sigma_measured: sample_std(&p_hats),
            sigma_qpn,
            sigma_photon,
            sigma_combined: sigma_qpn.hypot(sigma_photon),
        });
        shots.push(records);
    }
    Ok(NoiseSweepResult { rows, shots })
}

/// Atom number where the photon and projection-noise predictions cross,
/// searched in `[lo, hi]`. `None` when one source dominates throughout.
pub fn crossover_atom_number(scene: &ImagingScene, p: f64, lo: f64, hi: f64) -> Result<Option<f64>> {
    if !(lo >= 1.0 && hi > lo) || !hi.is_finite() {
        return Err(Error::param("range", format!("need 1 ≤ lo < hi, got [{lo}, {hi}]")));
    }
    let gap = |n: f64| -> Result<f64> {
        let photon = photon_sigma_p(scene, n * (1.0 - p), n * p)?;
        Ok(photon.ln() - qpn_sigma(n, p)?.ln())
    };
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let (ga, gb) = (gap(lo)?, gap(hi)?);
    if ga == 0.0 {
        return Ok(Some(lo));
    }
    if ga.signum() == gb.signum() {
        return Ok(None);
    }
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let g = gap(mid.exp())?;
        if g.signum() == ga.signum() {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    Ok(Some((0.5 * (a + b)).exp()))
}
