//! Bessel functions of the first kind for integer order.
//!
//! Values are produced as a whole sequence `J_0(x) .. J_nmax(x)` with Miller's
//! downward recurrence, normalized by `J_0 + 2 Σ J_2k = 1`. Downward
//! recurrence is stable for every order, including orders far beyond `x`
//! where the upward recurrence loses all precision.

const RESCALE_THRESHOLD: f64 = 1e250;

/// `J_0(x), J_1(x), ..., J_nmax(x)` for `x ≥ 0`.
///
/// Negative `x` is handled through `J_n(-x) = (-1)^n J_n(x)`.
pub fn bessel_j_seq(x: f64, nmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let order_scale = nmax.max(ax.ceil() as usize);
    let extra = 40 + (80.0 * order_scale as f64).sqrt() as usize;
    let mut start = order_scale + extra;
    if start % 2 == 1 {
        start += 1;
    }

    let two_over_x = 2.0 / ax;
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-300; // J_k, arbitrary seed
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let j_prev = k as f64 * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur now holds the unnormalized J_{k-1}.
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = j_cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > RESCALE_THRESHOLD {
            let s = 1.0 / RESCALE_THRESHOLD;
            j_cur *= s;
            j_next *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    norm += j_cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Single value `J_n(x)` for any integer order.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let order = n.unsigned_abs() as usize;
    let v = bessel_j_seq(x, order)[order];
    if n < 0 && order % 2 == 1 {
        -v
    } else {
        v
    }
}
