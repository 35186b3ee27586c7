//! Treatment-effect estimators and diagnostics on a [`Dataset`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{EstimationError, Result};
use crate::stats::z_critical;

mod balance;
mod bootstrap;
mod cate;
mod means;
mod propensity;
mod standardize;

pub use balance::{balance_check, default_dictionary, BalanceReport, Dictionary, TermStat};
pub use bootstrap::{bootstrap, BootstrapResult};
pub use cate::{cate_interaction, CateCoefficient, CateReport};
pub use means::{ate_wald, crossover_effect, group_means, relative_effect, risk_measures, GroupMeans, RiskMeasures};
pub use propensity::{
    fit_propensity, ht_transform, ipw_ate, IpwOptions, PropensityModel, SCORE_CLIP,
};
pub use standardize::{
    standardized_contrast, standardized_contrast_exact, ExactContrast, StandardizedContrast, Stratum,
    StratifiedTable,
};

/// Point estimate with standard error, confidence interval and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectReport {
    pub method: String,
    pub estimate: f64,
    pub se: f64,
    pub ci: [f64; 2],
    pub level: f64,
    pub n: usize,
    pub diagnostics: BTreeMap<String, f64>,
}

impl EffectReport {
    /// Wald interval `estimate -/+ z * se`.
    pub fn wald(method: &str, estimate: f64, se: f64, level: f64, n: usize) -> Result<Self> {
        check_level(level)?;
        let half = z_critical(level) * se;
        Ok(EffectReport {
            method: method.to_string(),
            estimate,
            se,
            ci: [estimate - half, estimate + half],
            level,
            n,
            diagnostics: BTreeMap::new(),
        })
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

pub fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(EstimationError::InvalidArgument(format!("confidence level {level} not in (0, 1)")))
    }
}

/// Outcomes split by arm as (control, treated).
pub(crate) fn split_arms(ds: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let y = ds.outcome()?;
    let d = ds.binary_treatment()?;
    let mut arms = (Vec::new(), Vec::new());
    for (&yi, &di) in y.iter().zip(d) {
        if di == 1.0 {
            arms.1.push(yi);
        } else {
            arms.0.push(yi);
        }
    }
    if arms.0.is_empty() {
        return Err(EstimationError::EmptyArm { arm: 0 });
    }
    if arms.1.is_empty() {
        return Err(EstimationError::EmptyArm { arm: 1 });
    }
    Ok(arms)
}

pub(crate) fn require_binary_outcome(ds: &Dataset) -> Result<&[f64]> {
    let y = ds.outcome()?;
    if let Some((row, v)) = y.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
        return Err(EstimationError::InvalidArgument(format!(
            "outcome must be 0/1, row {row} has {v}"
        )));
    }
    Ok(y)
}
