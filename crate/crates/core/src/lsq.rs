//! Small dense Levenberg–Marquardt least-squares solver.
//!
//! Problems here have at most a handful of parameters and a few hundred
//! residuals, so the Jacobian is formed by central differences and the
//! damped normal equations are solved by Cholesky factorization.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative decrease of the residual sum of squares that counts as converged.
    pub ftol: f64,
    /// Relative parameter step that counts as converged.
    pub xtol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            ftol: 1e-14,
            xtol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Parameter covariance `s² (JᵀJ)⁻¹` with `s² = RSS / (n − p)`.
    pub covariance: Vec<Vec<f64>>,
    pub rss: f64,
    pub iterations: usize,
    pub residual_count: usize,
}

impl FitResult {
    pub fn std_error(&self, i: usize) -> f64 {
        self.covariance[i][i].max(0.0).sqrt()
    }
}

fn rss_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<F>(residuals: &F, p: &[f64], r0_len: usize) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut jac = vec![vec![0.0; p.len()]; r0_len];
    let mut work = p.to_vec();
    for j in 0..p.len() {
        let h = 1e-6 * p[j].abs().max(1e-6);
        work[j] = p[j] + h;
        let up = residuals(&work);
        work[j] = p[j] - h;
        let down = residuals(&work);
        work[j] = p[j];
        if up.len() != r0_len || down.len() != r0_len {
            return Err(Error::param("residuals", "residual length changed between calls"));
        }
        for i in 0..r0_len {
            jac[i][j] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Cholesky solve of a symmetric positive-definite system.
pub(crate) fn solve_spd(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

fn normal_equations(jac: &[Vec<f64>], r: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let p = jac.first().map(|row| row.len()).unwrap_or(0);
    let mut jtj = vec![vec![0.0; p]; p];
    let mut jtr = vec![0.0; p];
    for (row, ri) in jac.iter().zip(r) {
        for a in 0..p {
            jtr[a] += row[a] * ri;
            for b in 0..=a {
                jtj[a][b] += row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            jtj[b][a] = jtj[a][b];
        }
    }
    (jtj, jtr)
}

fn invert_spd(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    // Scale to unit diagonal for conditioning, then undo.
    let d: Vec<f64> = (0..n).map(|i| a[i][i].sqrt()).collect();
    if d.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let scaled: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[i][j] / (d[i] * d[j])).collect())
        .collect();
    let mut inv = vec![vec![0.0; n]; n];
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let col = solve_spd(&scaled, &e)?;
        for r in 0..n {
            inv[r][c] = col[r] / (d[r] * d[c]);
        }
    }
    Some(inv)
}

/// Minimizes `Σ r_i(p)²` starting from `p0`.
///
/// Fails with [`Error::FitNonConvergence`] after `max_iterations` and with
/// [`Error::Singular`] when the normal equations lose rank.
pub fn levenberg_marquardt<F>(residuals: F, p0: &[f64], opts: &FitOptions) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let np = p0.len();
    let mut p = p0.to_vec();
    let mut r = residuals(&p);
    let n = r.len();
    if n < np {
        return Err(Error::Singular(format!("{n} residuals for {np} parameters")));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("initial guess", "residuals are not finite"));
    }
    let mut rss = rss_of(&r);
    let mut jac = jacobian(&residuals, &p, n)?;
    let (mut jtj, mut jtr) = normal_equations(&jac, &r);
    let mut lambda = 1e-3 * (0..np).map(|i| jtj[i][i]).fold(0.0_f64, f64::max);
    let mut nu = 2.0;
    let mut iterations = 0;
    let mut converged = rss == 0.0;

    while !converged {
        if iterations >= opts.max_iterations {
            return Err(Error::FitNonConvergence {
                iterations,
                detail: format!("rss = {rss:.6e}, params = {p:?}, damping = {lambda:.3e}"),
            });
        }
        iterations += 1;
        if let Some(j) = (0..np).find(|&i| !(jtj[i][i] > 0.0)) {
            return Err(Error::Singular(format!(
                "parameter {j} has no influence on the residuals at {p:?}"
            )));
        }
        let mut damped = jtj.clone();
        for i in 0..np {
            damped[i][i] += lambda * jtj[i][i];
        }
        let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
        let step = match solve_spd(&damped, &rhs) {
            Some(s) => s,
            None => {
                return Err(Error::Singular(format!(
                    "damped normal equations are not positive definite at {p:?}"
                )))
            }
        };
        let trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
        let r_trial = residuals(&trial);
        let rss_trial = if r_trial.iter().all(|v| v.is_finite()) {
            rss_of(&r_trial)
        } else {
            f64::INFINITY
        };
        let small_step = step
            .iter()
            .zip(&p)
            .all(|(s, x)| s.abs() <= opts.xtol * (x.abs() + opts.xtol));
        if rss_trial < rss {
            let decrease = rss - rss_trial;
            p = trial;
            r = r_trial;
            let old = rss;
            rss = rss_trial;
            lambda = (lambda / 3.0).max(1e-300);
            nu = 2.0;
            jac = jacobian(&residuals, &p, n)?;
            let ne = normal_equations(&jac, &r);
            jtj = ne.0;
            jtr = ne.1;
            if decrease <= opts.ftol * old || small_step || rss == 0.0 {
                converged = true;
            }
        } else {
            if small_step || rss_trial == rss {
                converged = true;
            }
            lambda *= nu;
            nu *= 2.0;
            if !lambda.is_finite() {
                converged = true;
            }
        }
    }

    let dof = n.saturating_sub(np);
    let s2 = if dof > 0 { rss / dof as f64 } else { f64::NAN };
    let covariance = match invert_spd(&jtj) {
        Some(inv) => inv
            .into_iter()
            .map(|row| row.into_iter().map(|v| v * s2).collect())
            .collect(),
        None => {
            return Err(Error::Singular(format!(
                "normal equations are singular at the solution {p:?}"
            )))
        }
    };
    Ok(FitResult {
        params: p,
        covariance,
        rss,
        iterations,
        residual_count: n,
    })
}
