use rand::Rng;
use rand_distr::StandardNormal;

/// Largest trial count always sampled by exact inversion.
const EXACT_MAX_TRIALS: u64 = 1000;
/// Above [`EXACT_MAX_TRIALS`], inversion is still used while `Np(1−p)` is
/// below this; the normal approximation takes over beyond it.
const NORMAL_MIN_VARIANCE: f64 = 250.0;

/// Draws from Binomial(n, p).
///
/// Exact CDF inversion for small `n` or small variance, otherwise a normal
/// approximation rounded to the nearest integer (continuity correction).
pub fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if p > 0.5 {
        return n - sample_binomial(n, 1.0 - p, rng);
    }
    let q = 1.0 - p;
    let nf = n as f64;
    if n <= EXACT_MAX_TRIALS || nf * p * q < NORMAL_MIN_VARIANCE {
        invert(n, p, rng)
    } else {
        let z: f64 = rng.sample(StandardNormal);
        let k = (nf * p + (nf * p * q).sqrt() * z).round();
        k.clamp(0.0, nf) as u64
    }
}

fn invert<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    let q = 1.0 - p;
    let ratio = p / q;
    let u: f64 = rng.random();
    let mut pmf = (n as f64 * q.ln()).exp();
    let mut cdf = pmf;
    let mut k = 0;
    while u > cdf && k < n {
        pmf *= (n - k) as f64 / (k + 1) as f64 * ratio;
        k += 1;
        cdf += pmf;
        if pmf == 0.0 && k as f64 > n as f64 * p {
            break;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn edge_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_binomial(100, 0.0, &mut rng), 0);
        assert_eq!(sample_binomial(100, 1.0, &mut rng), 100);
        assert_eq!(sample_binomial(0, 0.3, &mut rng), 0);
    }

    #[test]
    fn small_case_frequencies() {
        // Binomial(3, 0.25): pmf = 27/64, 27/64, 9/64, 1/64.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut hist = [0usize; 4];
        let draws = 200_000;
        for _ in 0..draws {
            hist[sample_binomial(3, 0.25, &mut rng) as usize] += 1;
        }
        let expect = [27.0 / 64.0, 27.0 / 64.0, 9.0 / 64.0, 1.0 / 64.0];
        for k in 0..4 {
            let f = hist[k] as f64 / draws as f64;
            let sd = (expect[k] * (1.0 - expect[k]) / draws as f64).sqrt();
            assert!((f - expect[k]).abs() < 5.0 * sd, "k={k}: {f}");
        }
    }

    #[test]
    fn normal_branch_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000u64;
        let draws = 50_000;
        let xs: Vec<f64> = (0..draws).map(|_| sample_binomial(n, 0.3, &mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        assert!((mean - 3000.0).abs() < 5.0 * (2100.0f64 / draws as f64).sqrt());
        assert!((var / 2100.0 - 1.0).abs() < 0.05);
    }
}
