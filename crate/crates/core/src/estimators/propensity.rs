use serde::{Deserialize, Serialize};

use super::{split_arms, EffectReport};
use crate::data::Dataset;
use crate::error::{EstimationError, Result};
use crate::linalg::ols;
use crate::stats::{mean, population_variance, quantile, sample_variance};

/// Fitted scores are clipped to `[SCORE_CLIP, 1 - SCORE_CLIP]`.
pub const SCORE_CLIP: f64 = 1e-6;

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-8;
/// Linear predictors beyond this are treated as a sign of separation.
const ETA_LIMIT: f64 = 35.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityModel {
    /// `["intercept", covariates...]`
    pub names: Vec<String>,
    /// On the original covariate scale, aligned with `names`.
    pub coefficients: Vec<f64>,
    pub scores: Vec<f64>,
    pub converged: bool,
    pub separation: bool,
    pub iterations: usize,
    /// Number of scores moved by clipping.
    pub clipped: usize,
}

impl PropensityModel {
    pub fn require_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else if self.separation {
            Err(EstimationError::NonConvergence(
                "logistic fit diverged: treatment is (quasi-)separated by the covariates".into(),
            ))
        } else {
            Err(EstimationError::NonConvergence(format!("no convergence after {MAX_ITER} iterations")))
        }
    }
}

fn logistic(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Logistic regression of the treatment on the covariates by iteratively
/// reweighted least squares on standardized covariates.
pub fn fit_propensity(ds: &Dataset) -> Result<PropensityModel> {
    let d = ds.binary_treatment()?;
    let covs = ds.covariates()?;
    let (n, k) = (ds.n(), covs.len() + 1);
    if n <= k {
        return Err(EstimationError::RankDeficient(format!("{n} rows for {k} logistic coefficients")));
    }
    let mut centers = Vec::with_capacity(covs.len());
    let mut scales = Vec::with_capacity(covs.len());
    for (name, c) in ds.roles().covariates.iter().zip(&covs) {
        let sd = population_variance(c).sqrt();
        if sd == 0.0 {
            return Err(EstimationError::RankDeficient(format!("covariate `{name}` is constant")));
        }
        centers.push(mean(c));
        scales.push(sd);
    }
    let x = nalgebra::DMatrix::from_fn(n, k, |i, j| {
        if j == 0 {
            1.0
        } else {
            (covs[j - 1][i] - centers[j - 1]) / scales[j - 1]
        }
    });
    let mut beta = nalgebra::DVector::zeros(k);
    let (mut converged, mut separation, mut iterations) = (false, false, 0);
    while iterations < MAX_ITER {
        iterations += 1;
        let eta = &x * &beta;
        let mut xw = x.clone();
        let mut zw = vec![0.0; n];
        for i in 0..n {
            let p = logistic(eta[i]);
            let w = (p * (1.0 - p)).max(f64::MIN_POSITIVE);
            let sw = w.sqrt();
            xw.row_mut(i).scale_mut(sw);
            zw[i] = sw * (eta[i] + (d[i] - p) / w);
        }
        let next = match ols(&xw, &zw) {
            Ok(fit) => fit.coef,
            Err(_) => {
                separation = true;
                break;
            }
        };
        let change = (&next - &beta).amax();
        beta = next;
        if (&x * &beta).amax() > ETA_LIMIT {
            separation = true;
            break;
        }
        if change < TOL {
            converged = true;
            break;
        }
    }
    let eta = &x * &beta;
    let mut clipped = 0;
    let scores = eta
        .iter()
        .map(|&e| {
            let p = logistic(e);
            let c = p.clamp(SCORE_CLIP, 1.0 - SCORE_CLIP);
            clipped += usize::from(c != p);
            c
        })
        .collect();
    let mut coefficients = vec![beta[0]];
    for j in 1..k {
        coefficients.push(beta[j] / scales[j - 1]);
        coefficients[0] -= beta[j] * centers[j - 1] / scales[j - 1];
    }
    let mut names = vec!["intercept".to_string()];
    names.extend(ds.roles().covariates.iter().cloned());
    Ok(PropensityModel {
        names,
        coefficients,
        scores,
        converged: converged && !separation,
        separation,
        iterations,
        clipped,
    })
}

fn check_scores(n: usize, scores: &[f64]) -> Result<()> {
    if scores.len() != n {
        return Err(EstimationError::InvalidArgument(format!("{} scores for {n} rows", scores.len())));
    }
    if let Some((row, s)) = scores.iter().enumerate().find(|(_, &s)| !(s > 0.0 && s < 1.0)) {
        return Err(EstimationError::Positivity(format!("row {row}: score {s} outside (0, 1)")));
    }
    Ok(())
}

/// `H = D / p(X) - (1 - D) / (1 - p(X))`.
pub fn ht_transform(ds: &Dataset, scores: &[f64]) -> Result<Vec<f64>> {
    let d = ds.binary_treatment()?;
    check_scores(d.len(), scores)?;
    Ok(d.iter().zip(scores).map(|(&di, &p)| di / p - (1.0 - di) / (1.0 - p)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IpwOptions {
    /// Weights `P(D = d) / P(D = d | X)` normalized within arm.
    pub stabilized: bool,
    /// Clamp weights at these sample percentiles, e.g. `(1.0, 99.0)`.
    pub truncate: Option<(f64, f64)>,
}

/// Inverse-probability-weighted ATE. Standard errors treat the weights as
/// fixed; see [`super::bootstrap`] for the refitting alternative.
pub fn ipw_ate(ds: &Dataset, scores: &[f64], opts: IpwOptions, level: f64) -> Result<EffectReport> {
    let y = ds.outcome()?;
    let d = ds.binary_treatment()?;
    check_scores(d.len(), scores)?;
    split_arms(ds)?;
    let n = d.len();
    let p1 = d.iter().sum::<f64>() / n as f64;
    let mut w: Vec<f64> = d
        .iter()
        .zip(scores)
        .map(|(&di, &p)| {
            let (num1, num0) = if opts.stabilized { (p1, 1.0 - p1) } else { (1.0, 1.0) };
            if di == 1.0 {
                num1 / p
            } else {
                num0 / (1.0 - p)
            }
        })
        .collect();
    let mut truncated = 0usize;
    if let Some((lo, hi)) = opts.truncate {
        if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo >= hi {
            return Err(EstimationError::InvalidArgument(format!(
                "truncation percentiles ({lo}, {hi}) must satisfy 0 <= lo < hi <= 100"
            )));
        }
        let (a, b) = (quantile(&w, lo / 100.0), quantile(&w, hi / 100.0));
        for wi in &mut w {
            let c = wi.clamp(a, b);
            truncated += usize::from(c != *wi);
            *wi = c;
        }
    }
    let (estimate, se, method) = if opts.stabilized {
        let arm = |t: f64| {
            let rows: Vec<usize> = (0..n).filter(|&i| d[i] == t).collect();
            let sw: f64 = rows.iter().map(|&i| w[i]).sum();
            let mu = rows.iter().map(|&i| w[i] * y[i]).sum::<f64>() / sw;
            let var = rows.iter().map(|&i| (w[i] * (y[i] - mu)).powi(2)).sum::<f64>() / (sw * sw);
            (mu, var)
        };
        let ((m1, v1), (m0, v0)) = (arm(1.0), arm(0.0));
        (m1 - m0, (v1 + v0).sqrt(), "ipw_stabilized")
    } else {
        let psi: Vec<f64> = (0..n).map(|i| if d[i] == 1.0 { w[i] * y[i] } else { -w[i] * y[i] }).collect();
        (mean(&psi), (sample_variance(&psi) / n as f64).sqrt(), "ipw")
    };
    let max_weight = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_score = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_score = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(EffectReport::wald(method, estimate, se, level, n)?
        .with_diagnostic("max_weight", max_weight)
        .with_diagnostic("truncated_fraction", truncated as f64 / n as f64)
        .with_diagnostic("min_score", min_score)
        .with_diagnostic("max_score", max_score))
}
