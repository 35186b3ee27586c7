use serde::{Deserialize, Serialize};

use super::{check_level, EffectReport};
use crate::data::Dataset;
use crate::error::Result;
use crate::linalg::{design_with_intercept, ols, Hc};
use crate::stats::{mean, z_critical};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CateCoefficient {
    /// Covariate whose centered value multiplies the treatment.
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub ci: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CateReport {
    /// Coefficient on `D`, the ATE when covariates are centered.
    pub ate: EffectReport,
    /// Slopes of `CATE(x) = ate + sum_j c_j (x_j - mean_j)`.
    pub cate_coeffs: Vec<CateCoefficient>,
    pub centers: Vec<f64>,
}

/// OLS of `Y` on `1, D, X - mean(X), D (X - mean(X))` with HC1 errors.
pub fn cate_interaction(ds: &Dataset, level: f64) -> Result<CateReport> {
    check_level(level)?;
    let y = ds.outcome()?;
    let d = ds.binary_treatment()?;
    let covs = ds.covariates()?;
    let centers: Vec<f64> = covs.iter().map(|c| mean(c)).collect();
    let centered: Vec<Vec<f64>> = covs
        .iter()
        .zip(&centers)
        .map(|(c, m)| c.iter().map(|v| v - m).collect())
        .collect();
    let inter: Vec<Vec<f64>> = centered
        .iter()
        .map(|c| c.iter().zip(d).map(|(v, di)| v * di).collect())
        .collect();
    let mut cols: Vec<&[f64]> = vec![d];
    cols.extend(centered.iter().map(Vec::as_slice));
    cols.extend(inter.iter().map(Vec::as_slice));
    let x = design_with_intercept(&cols);
    let fit = ols(&x, y)?;
    let cov = fit.robust_cov(&x, Hc::Hc1);
    let z = z_critical(level);
    let p = covs.len();
    let ate = EffectReport::wald("cate_interaction", fit.coef[1], cov[(1, 1)].sqrt(), level, ds.n())?;
    let cate_coeffs = ds
        .roles()
        .covariates
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let idx = 2 + p + j;
            let (est, se) = (fit.coef[idx], cov[(idx, idx)].sqrt());
            CateCoefficient { name: name.clone(), estimate: est, se, ci: [est - z * se, est + z * se] }
        })
        .collect();
    Ok(CateReport { ate, cate_coeffs, centers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Roles;
    use crate::error::EstimationError;

    #[test]
    fn exact_interaction_recovered() {
        // Y = 1 + 2 D + 0.5 X + 3 D (X - mean X), no noise
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
        let d: Vec<f64> = (0..12).map(|i| (i % 3 == 0) as u8 as f64).collect();
        let xm = mean(&x);
        let y: Vec<f64> = (0..12).map(|i| 1.0 + 2.0 * d[i] + 0.5 * x[i] + 3.0 * d[i] * (x[i] - xm)).collect();
        let ds = Dataset::new(
            vec![("Y".into(), y), ("D".into(), d), ("X".into(), x)],
            Roles::new("Y", "D", &["X"]),
        )
        .unwrap();
        let r = cate_interaction(&ds, 0.95).unwrap();
        assert!((r.ate.estimate - 2.0).abs() < 1e-12);
        assert!((r.cate_coeffs[0].estimate - 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_covariate_is_rank_error() {
        let ds = Dataset::new(
            vec![
                ("Y".into(), vec![1.0, 2.0, 3.0, 4.0]),
                ("D".into(), vec![0.0, 1.0, 0.0, 1.0]),
                ("X".into(), vec![2.0; 4]),
            ],
            Roles::new("Y", "D", &["X"]),
        )
        .unwrap();
        assert!(matches!(cate_interaction(&ds, 0.95), Err(EstimationError::RankDeficient(_))));
    }
}
