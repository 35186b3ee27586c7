use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lasso::{default_loadings, lambda_max, lasso, lasso_warm, moments, LassoOptions};
use crate::error::{EstimationError, Result};

/// Penalty-level selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaRule {
    /// `c * sigma * sqrt(2 log p / n)` with sigma refit from residuals twice.
    Plugin { c: f64 },
    /// `k`-fold cross-validation over a 100-point log grid.
    Cv { k: usize, one_se: bool },
    Fixed { lambda: f64 },
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::Plugin { c: PLUGIN_C }
    }
}

pub const PLUGIN_C: f64 = 1.1;
const PLUGIN_ROUNDS: usize = 2;
const GRID_LEN: usize = 100;
const GRID_RATIO: f64 = 1e-3;

impl fmt::Display for LambdaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaRule::Plugin { c } => write!(f, "plugin:{c}"),
            LambdaRule::Cv { k, one_se: false } => write!(f, "cv:{k}"),
            LambdaRule::Cv { k, one_se: true } => write!(f, "cv1se:{k}"),
            LambdaRule::Fixed { lambda } => write!(f, "fixed:{lambda}"),
        }
    }
}

/// Parses `plugin`, `plugin:C`, `cv`, `cv:K`, `cv1se:K` or `fixed:LAMBDA`.
impl FromStr for LambdaRule {
    type Err = EstimationError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || EstimationError::InvalidArgument(format!("unrecognized lambda rule `{s}`"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| a.map(|v| v.parse::<f64>().map_err(|_| bad())).transpose();
        match head {
            "plugin" => Ok(LambdaRule::Plugin { c: num(arg)?.unwrap_or(PLUGIN_C) }),
            "cv" | "cv1se" => {
                let k = match arg {
                    Some(a) => a.parse::<usize>().map_err(|_| bad())?,
                    None => 10,
                };
                Ok(LambdaRule::Cv { k, one_se: head == "cv1se" })
            }
            "fixed" => Ok(LambdaRule::Fixed { lambda: num(arg)?.ok_or_else(bad)? }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    pub lambda: f64,
    pub mse: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaChoice {
    pub lambda: f64,
    pub loadings: Vec<f64>,
    pub rule: LambdaRule,
    /// Final residual scale of the plug-in iteration.
    pub sigma_hat: Option<f64>,
    pub cv_curve: Option<Vec<CvPoint>>,
}

/// Chooses lambda for `y ~ x`; loadings are the column standard deviations.
pub fn select_lambda(x: &[&[f64]], y: &[f64], rule: LambdaRule, seed: u64) -> Result<LambdaChoice> {
    let n = y.len();
    let (_, sd_y) = moments(y);
    if sd_y.is_nan() || sd_y <= 0.0 {
        return Err(EstimationError::Undefined("response has zero variance".into()));
    }
    let loadings = default_loadings(x);
    if let Some(j) = loadings.iter().position(|&s| s == 0.0) {
        return Err(EstimationError::RankDeficient(format!("column {j} has zero variance")));
    }
    let opts = LassoOptions::default();
    match rule {
        LambdaRule::Fixed { lambda } => {
            Ok(LambdaChoice { lambda, loadings, rule, sigma_hat: None, cv_curve: None })
        }
        LambdaRule::Plugin { c } => {
            if c.is_nan() || c <= 0.0 {
                return Err(EstimationError::InvalidArgument(format!("plug-in constant {c} must be positive")));
            }
            let p = x.len().max(1) as f64;
            let rate = (2.0 * p.ln() / n as f64).sqrt();
            let mut sigma = sd_y;
            for _ in 0..PLUGIN_ROUNDS {
                let fit = lasso(x, y, c * sigma * rate, &loadings, &opts)?;
                sigma = (fit.residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
            }
            Ok(LambdaChoice { lambda: c * sigma * rate, loadings, rule, sigma_hat: Some(sigma), cv_curve: None })
        }
        LambdaRule::Cv { k, one_se } => {
            if k < 2 || n < k {
                return Err(EstimationError::InvalidArgument(format!("cv needs 2 <= k <= n, got k = {k}, n = {n}")));
            }
            let curve = cv_curve(x, y, &loadings, k, seed, &opts)?;
            let best = (0..curve.len())
                .min_by(|&a, &b| curve[a].mse.total_cmp(&curve[b].mse))
                .expect("grid is non-empty");
            let pick = if one_se {
                let limit = curve[best].mse + curve[best].se;
                // grid is decreasing, so the first point under the limit is the largest lambda
                (0..=best).find(|&i| curve[i].mse <= limit).unwrap_or(best)
            } else {
                best
            };
            Ok(LambdaChoice { lambda: curve[pick].lambda, loadings, rule, sigma_hat: None, cv_curve: Some(curve) })
        }
    }
}

/// Decreasing log-spaced grid from `lambda_max` to `lambda_max * 1e-3`.
pub fn lambda_grid(x: &[&[f64]], y: &[f64], loadings: &[f64]) -> Vec<f64> {
    let top = lambda_max(x, y, loadings);
    (0..GRID_LEN)
        .map(|i| top * GRID_RATIO.powf(i as f64 / (GRID_LEN - 1) as f64))
        .collect()
}

/// Fold of each row after a seeded shuffle.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % k;
    }
    fold
}

fn cv_curve(
    x: &[&[f64]],
    y: &[f64],
    loadings: &[f64],
    k: usize,
    seed: u64,
    opts: &LassoOptions,
) -> Result<Vec<CvPoint>> {
    let grid = lambda_grid(x, y, loadings);
    let folds = fold_assignment(y.len(), k, seed);
    // errors[f][g]: mean squared test error of fold f at grid point g
    let mut errors = vec![vec![0.0; grid.len()]; k];
    for (f, row) in errors.iter_mut().enumerate() {
        let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
        let xt: Vec<Vec<f64>> = x.iter().map(|c| train.iter().map(|&i| c[i]).collect()).collect();
        let xt_ref: Vec<&[f64]> = xt.iter().map(Vec::as_slice).collect();
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        // training folds can contain constant columns even when the full data do not
        let unstd = LassoOptions { standardize: false, ..*opts };
        let fold_opts = if xt.iter().any(|c| moments(c).1 == 0.0) { &unstd } else { opts };
        let mut warm: Option<Vec<f64>> = None;
        for (g, &lambda) in grid.iter().enumerate() {
            let fit = lasso_warm(&xt_ref, &yt, lambda, loadings, fold_opts, warm.as_deref())?;
            let mse = test
                .iter()
                .map(|&i| {
                    let pred = fit.intercept + (0..x.len()).map(|j| fit.coefficients[j] * x[j][i]).sum::<f64>();
                    (y[i] - pred).powi(2)
                })
                .sum::<f64>()
                / test.len() as f64;
            row[g] = mse;
            warm = Some(fit.coefficients);
        }
    }
    Ok(grid
        .iter()
        .enumerate()
        .map(|(g, &lambda)| {
            let vals: Vec<f64> = errors.iter().map(|e| e[g]).collect();
            let mean = vals.iter().sum::<f64>() / k as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k as f64 - 1.0);
            CvPoint { lambda, mse: mean, se: (var / k as f64).sqrt() }
        })
        .collect())
}
