use crate::{Error, Result};

/// Overlapping Allan deviation at a set of averaging times.
#[derive(Debug, Clone, PartialEq)]
pub struct AllanSeries {
    pub taus: Vec<f64>,
    pub adev: Vec<f64>,
    /// Samples per second of the input series.
    pub input_rate: f64,
    /// Requested averaging times the series was too short for.
    pub omitted: Vec<f64>,
}

/// Series divided by its mean.
pub fn relative_intensity(series: &[f64]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::param("series", "is empty"));
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    if mean == 0.0 || !mean.is_finite() {
        return Err(Error::Undefined(format!("series mean is {mean}; cannot normalize")));
    }
    Ok(series.iter().map(|v| v / mean).collect())
}

/// Averaging times `interval · 2^k` that fit twice into `len` samples.
pub fn octave_taus(len: usize, interval: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut m = 1usize;
    while 2 * m <= len {
        out.push(m as f64 * interval);
        m *= 2;
    }
    out
}

/// Overlapping Allan deviation
/// `σ²(m) = Σ_k (ȳ_{k+m} − ȳ_k)² / (2 (n − 2m + 1))` with `ȳ_k` the mean of
/// `m` samples starting at `k`.
///
/// Each τ must be a whole multiple of `interval`. Averaging times needing
/// more than `n/2` samples per window are omitted with a warning.
pub fn allan_deviation(series: &[f64], interval: f64, taus: &[f64]) -> Result<AllanSeries> {
    if !(interval > 0.0) || !interval.is_finite() {
        return Err(Error::param("interval", "must be positive"));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::param("series", format!("sample {i} is not finite")));
    }
    let mut windows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let m = tau / interval;
        let mr = m.round();
        if !(mr >= 1.0) || (m - mr).abs() > 1e-9 * mr {
            return Err(Error::param(
                "taus",
                format!("{tau} s is not a positive whole multiple of the {interval} s interval"),
            ));
        }
        windows.push(mr as usize);
    }
    windows.sort_unstable();
    windows.dedup();

    let n = series.len();
    // Offsetting by the first sample keeps constant series exactly zero.
    let base = series.first().copied().unwrap_or(0.0);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in series {
        acc += v - base;
        prefix.push(acc);
    }

    let mut out = AllanSeries {
        taus: Vec::new(),
        adev: Vec::new(),
        input_rate: 1.0 / interval,
        omitted: Vec::new(),
    };
    for m in windows {
        let tau = m as f64 * interval;
        if 2 * m > n {
            log::warn!("tau = {tau} s needs {} samples, series has {n}; omitted", 2 * m);
            out.omitted.push(tau);
            continue;
        }
        let terms = n - 2 * m + 1;
        let mf = m as f64;
        let mut sum = 0.0;
        for k in 0..terms {
            let a = prefix[k + m] - prefix[k];
            let b = prefix[k + 2 * m] - prefix[k + m];
            let d = (b - a) / mf;
            sum += d * d;
        }
        out.taus.push(tau);
        out.adev.push((sum / (2.0 * terms as f64)).sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_is_zero() {
        let s = vec![0.731; 1000];
        let a = allan_deviation(&s, 0.1, &octave_taus(1000, 0.1)).unwrap();
        assert!(a.adev.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_samples() {
        let a = allan_deviation(&[1.0, 4.0], 0.5, &[0.5]).unwrap();
        assert!((a.adev[0] - 3.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn direct_definition_matches() {
        let s: Vec<f64> = (0..50).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let m = 3;
        let means: Vec<f64> = (0..=s.len() - m).map(|k| s[k..k + m].iter().sum::<f64>() / m as f64).collect();
        let terms = s.len() - 2 * m + 1;
        let direct = ((0..terms).map(|k| (means[k + m] - means[k]).powi(2)).sum::<f64>() / (2.0 * terms as f64)).sqrt();
        let a = allan_deviation(&s, 1.0, &[3.0]).unwrap();
        assert!((a.adev[0] - direct).abs() < 1e-13);
    }

    #[test]
    fn long_taus_are_omitted() {
        let a = allan_deviation(&[1.0, 2.0, 3.0, 4.0], 1.0, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.taus, vec![1.0, 2.0]);
        assert_eq!(a.omitted, vec![3.0]);
    }

    #[test]
    fn rejects_fractional_tau() {
        assert!(allan_deviation(&[1.0; 10], 1.0, &[1.5]).is_err());
    }
}
