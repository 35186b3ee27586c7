use serde::{Deserialize, Serialize};

use crate::error::{EstimationError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    /// Scale columns to unit (1/n) variance internally.
    pub standardize: bool,
    /// Stop when no coefficient moves more than this in a full sweep.
    pub tol: f64,
    /// Maximum violation of the optimality conditions accepted on exit.
    pub kkt_tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions { standardize: true, tol: 1e-10, kkt_tol: 1e-8, max_sweeps: 200_000 }
    }
}

/// Solution of `(1/2n)|y - b0 - X g|^2 + lambda * sum_j psi_j |g_j|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// Loadings `psi_j` on the original column scale.
    pub loadings: Vec<f64>,
    pub active: Vec<usize>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_max_violation: f64,
}

/// Column means and 1/n standard deviations.
pub(crate) fn moments(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let m = col.iter().sum::<f64>() / n;
    let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Default loadings: the column standard deviations, which is a unit
/// loading on the standardized scale.
pub fn default_loadings(x: &[&[f64]]) -> Vec<f64> {
    x.iter().map(|c| moments(c).1).collect()
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn validate(x: &[&[f64]], y: &[f64], lambda: f64, loadings: &[f64]) -> Result<()> {
    let n = y.len();
    if n < 2 {
        return Err(EstimationError::InvalidArgument("lasso needs at least 2 rows".into()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(EstimationError::InvalidArgument(format!("lambda {lambda} must be finite and >= 0")));
    }
    if loadings.len() != x.len() {
        return Err(EstimationError::InvalidArgument(format!(
            "{} loadings for {} columns",
            loadings.len(),
            x.len()
        )));
    }
    if let Some(j) = loadings.iter().position(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(EstimationError::InvalidArgument(format!("loading {j} must be positive")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(EstimationError::InvalidArgument("response has non-finite values".into()));
    }
    for (j, c) in x.iter().enumerate() {
        if c.len() != n {
            return Err(EstimationError::InvalidArgument(format!("column {j} has {} rows, expected {n}", c.len())));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(EstimationError::InvalidArgument(format!("column {j} has non-finite values")));
        }
    }
    Ok(())
}

/// Cyclic coordinate descent with an active-set strategy.
pub fn lasso(x: &[&[f64]], y: &[f64], lambda: f64, loadings: &[f64], opts: &LassoOptions) -> Result<LassoFit> {
    lasso_warm(x, y, lambda, loadings, opts, None)
}

pub(crate) fn lasso_warm(
    x: &[&[f64]],
    y: &[f64],
    lambda: f64,
    loadings: &[f64],
    opts: &LassoOptions,
    init: Option<&[f64]>,
) -> Result<LassoFit> {
    validate(x, y, lambda, loadings)?;
    let n = y.len();
    let nf = n as f64;
    let p = x.len();
    let mut centers = vec![0.0; p];
    let mut scales = vec![1.0; p];
    for j in 0..p {
        let (m, s) = moments(x[j]);
        centers[j] = m;
        if opts.standardize {
            if s == 0.0 {
                return Err(EstimationError::RankDeficient(format!("column {j} has zero variance")));
            }
            scales[j] = s;
        }
    }
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| x[j].iter().map(|v| (v - centers[j]) / scales[j]).collect())
        .collect();
    let curv: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    let pen: Vec<f64> = (0..p).map(|j| lambda * loadings[j] / scales[j]).collect();
    let ybar = y.iter().sum::<f64>() / nf;
    let mut g = vec![0.0; p];
    if let Some(init) = init {
        for j in 0..p {
            g[j] = init[j] * scales[j];
        }
    }
    let mut r: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    for j in 0..p {
        if g[j] != 0.0 {
            for i in 0..n {
                r[i] -= cols[j][i] * g[j];
            }
        }
    }

    let update = |j: usize, g: &mut [f64], r: &mut [f64]| -> f64 {
        if curv[j] == 0.0 {
            return 0.0;
        }
        let c = &cols[j];
        let z = c.iter().zip(r.iter()).map(|(a, b)| a * b).sum::<f64>() / nf + curv[j] * g[j];
        let new = soft(z, pen[j]) / curv[j];
        let delta = new - g[j];
        if delta != 0.0 {
            for i in 0..n {
                r[i] -= c[i] * delta;
            }
            g[j] = new;
        }
        delta.abs()
    };

    let mut sweeps = 0;
    let mut tol = opts.tol;
    let mut converged = false;
    let all: Vec<usize> = (0..p).collect();
    let mut kkt = f64::INFINITY;
    'outer: for _refine in 0..4 {
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            let change = all.iter().map(|&j| update(j, &mut g, &mut r)).fold(0.0, f64::max);
            if change < tol {
                converged = true;
                break;
            }
            loop {
                let active: Vec<usize> = (0..p).filter(|&j| g[j] != 0.0).collect();
                if sweeps >= opts.max_sweeps {
                    break;
                }
                sweeps += 1;
                let change = active.iter().map(|&j| update(j, &mut g, &mut r)).fold(0.0, f64::max);
                if change < tol {
                    break;
                }
            }
        }
        // exact residuals for the certificate
        for i in 0..n {
            r[i] = y[i] - ybar - (0..p).map(|j| cols[j][i] * g[j]).sum::<f64>();
        }
        kkt = kkt_violation(&cols, &r, &g, &pen, &scales);
        if kkt <= opts.kkt_tol || !converged {
            break 'outer;
        }
        tol *= 1e-2;
        converged = false;
    }
    let coefficients: Vec<f64> = (0..p).map(|j| g[j] / scales[j]).collect();
    let intercept = ybar - (0..p).map(|j| coefficients[j] * centers[j]).sum::<f64>();
    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - intercept - (0..p).map(|j| coefficients[j] * x[j][i]).sum::<f64>())
        .collect();
    Ok(LassoFit {
        active: (0..p).filter(|&j| coefficients[j] != 0.0).collect(),
        coefficients,
        intercept,
        lambda,
        loadings: loadings.to_vec(),
        residuals,
        iterations: sweeps,
        converged: converged && kkt <= opts.kkt_tol,
        kkt_max_violation: kkt,
    })
}

/// Largest violation of the subgradient conditions, measured on the
/// original column scale: `x_j'r/n = lambda psi_j sign(g_j)` when active and
/// `|x_j'r/n| <= lambda psi_j` otherwise.
fn kkt_violation(cols: &[Vec<f64>], r: &[f64], g: &[f64], pen: &[f64], scales: &[f64]) -> f64 {
    let nf = r.len() as f64;
    let mut worst: f64 = 0.0;
    for j in 0..cols.len() {
        // standardized column j is (x_j - m_j) / s_j
        let grad = cols[j].iter().zip(r).map(|(a, b)| a * b).sum::<f64>() / nf * scales[j];
        let bound = pen[j] * scales[j];
        let v = if g[j] != 0.0 {
            (grad - bound * g[j].signum()).abs()
        } else {
            (grad.abs() - bound).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Smallest lambda at which every coefficient is zero.
pub fn lambda_max(x: &[&[f64]], y: &[f64], loadings: &[f64]) -> f64 {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    x.iter()
        .zip(loadings)
        .map(|(c, l)| {
            let (m, _) = moments(c);
            let dot: f64 = c.iter().zip(y).map(|(a, b)| (a - m) * (b - ybar)).sum();
            (dot / n).abs() / l
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{design_with_intercept, ols};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_problem(n: usize, p: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let y = (0..n)
            .map(|i| 1.0 + 2.0 * x[0][i] - x[1 % p][i] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        (x, y)
    }

    fn refs(x: &[Vec<f64>]) -> Vec<&[f64]> {
        x.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn above_lambda_max_everything_is_zero() {
        let (x, y) = random_problem(50, 8, 1);
        let xr = refs(&x);
        let psi = default_loadings(&xr);
        let lm = lambda_max(&xr, &y, &psi);
        let fit = lasso(&xr, &y, lm * 1.0001, &psi, &LassoOptions::default()).unwrap();
        assert!(fit.active.is_empty());
        let below = lasso(&xr, &y, lm * 0.99, &psi, &LassoOptions::default()).unwrap();
        assert_eq!(below.active.len(), 1);
    }

    #[test]
    fn zero_lambda_is_ols() {
        let (x, y) = random_problem(80, 5, 2);
        let xr = refs(&x);
        let fit = lasso(&xr, &y, 0.0, &default_loadings(&xr), &LassoOptions::default()).unwrap();
        let o = ols(&design_with_intercept(&xr), &y).unwrap();
        assert!((fit.intercept - o.coef[0]).abs() < 1e-6);
        for j in 0..5 {
            assert!((fit.coefficients[j] - o.coef[j + 1]).abs() < 1e-6);
        }
    }

    #[test]
    fn orthonormal_design_soft_thresholds() {
        // centered columns with x_j'x_k / n = delta_jk
        let n = 8;
        let h: [[f64; 8]; 3] = [
            [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
            [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0],
            [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0],
        ];
        let x: Vec<Vec<f64>> = h.iter().map(|r| r.to_vec()).collect();
        let y = [3.0, -0.5, 1.0, 2.0, 0.0, 4.0, -2.0, 1.5];
        let xr = refs(&x);
        let lambda = 0.3;
        let psi = [1.0, 2.0, 0.5];
        let fit = lasso(&xr, &y, lambda, &psi, &LassoOptions { standardize: false, ..Default::default() }).unwrap();
        for j in 0..3 {
            let z: f64 = x[j].iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            let want = soft(z, lambda * psi[j]);
            assert!((fit.coefficients[j] - want).abs() < 1e-8, "j={j}");
        }
        assert!(fit.kkt_max_violation < 1e-8);
    }

    #[test]
    fn zero_variance_column_rejected() {
        let x = [vec![1.0; 5], vec![1.0, 2.0, 3.0, 4.0, 5.0]];
        let xr = refs(&x);
        let r = lasso(&xr, &[1.0, 2.0, 3.0, 4.0, 5.0], 0.1, &[1.0, 1.0], &LassoOptions::default());
        assert!(matches!(r, Err(EstimationError::RankDeficient(_))));
        let bad = lasso(&xr[1..], &[1.0, f64::NAN, 3.0, 4.0, 5.0], 0.1, &[1.0], &LassoOptions::default());
        assert!(matches!(bad, Err(EstimationError::InvalidArgument(_))));
    }
}
