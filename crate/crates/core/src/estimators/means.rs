use serde::{Deserialize, Serialize};

use super::{require_binary_outcome, split_arms, EffectReport};
use crate::data::Dataset;
use crate::error::{EstimationError, Result};
use crate::stats::{mean, sample_variance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMeans {
    pub theta0: f64,
    pub theta1: f64,
    pub n0: usize,
    pub n1: usize,
}

pub fn group_means(ds: &Dataset) -> Result<GroupMeans> {
    let (c, t) = split_arms(ds)?;
    Ok(GroupMeans { theta0: mean(&c), theta1: mean(&t), n0: c.len(), n1: t.len() })
}

fn need_two(c: &[f64], t: &[f64]) -> Result<()> {
    for (arm, rows) in [(0u8, c), (1, t)] {
        if rows.len() < 2 {
            return Err(EstimationError::TooFewRows { arm, got: rows.len(), need: 2 });
        }
    }
    Ok(())
}

/// Difference in means with the unequal-variance Wald interval.
pub fn ate_wald(ds: &Dataset, level: f64) -> Result<EffectReport> {
    let (c, t) = split_arms(ds)?;
    need_two(&c, &t)?;
    let (v0, v1) = (sample_variance(&c), sample_variance(&t));
    let se = (v0 / c.len() as f64 + v1 / t.len() as f64).sqrt();
    Ok(EffectReport::wald("ate_wald", mean(&t) - mean(&c), se, level, ds.n())?
        .with_diagnostic("theta0", mean(&c))
        .with_diagnostic("theta1", mean(&t))
        .with_diagnostic("n0", c.len() as f64)
        .with_diagnostic("n1", t.len() as f64))
}

/// Effect measures for a binary outcome. Undefined ratios are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskMeasures {
    pub risk0: f64,
    pub risk1: f64,
    pub rd: f64,
    pub rr: Option<f64>,
    pub or: Option<f64>,
    /// `1 / rd`, absent when `rd = 0`.
    pub nnt: Option<f64>,
}

pub fn risk_measures(ds: &Dataset) -> Result<RiskMeasures> {
    require_binary_outcome(ds)?;
    let g = group_means(ds)?;
    let (r0, r1) = (g.theta0, g.theta1);
    let rd = r1 - r0;
    let rr = (r0 != 0.0).then(|| r1 / r0);
    // every cell of the 2x2 table must be occupied
    let cells_ok = r0 > 0.0 && r0 < 1.0 && r1 > 0.0 && r1 < 1.0;
    let or = cells_ok.then(|| (r1 / (1.0 - r1)) / (r0 / (1.0 - r0)));
    let nnt = (rd != 0.0).then(|| 1.0 / rd);
    Ok(RiskMeasures { risk0: r0, risk1: r1, rd, rr, or, nnt })
}

/// `theta1 / theta0 - 1` with a delta-method standard error.
pub fn relative_effect(ds: &Dataset, level: f64) -> Result<EffectReport> {
    let (c, t) = split_arms(ds)?;
    need_two(&c, &t)?;
    let n = ds.n() as f64;
    let (th0, th1) = (mean(&c), mean(&t));
    if th0 == 0.0 {
        return Err(EstimationError::Undefined("control mean is zero, ratio undefined".into()));
    }
    let (p0, p1) = (c.len() as f64 / n, t.len() as f64 / n);
    let g = [-th1 / (th0 * th0), 1.0 / th0];
    let v = [sample_variance(&c) / p0, sample_variance(&t) / p1];
    let se = ((g[0] * g[0] * v[0] + g[1] * g[1] * v[1]) / n).sqrt();
    Ok(EffectReport::wald("relative_effect", th1 / th0 - 1.0, se, level, ds.n())?
        .with_diagnostic("theta0", th0)
        .with_diagnostic("theta1", th1)
        .with_diagnostic("grad0", g[0])
        .with_diagnostic("grad1", g[1]))
}

/// Within-subject difference `mean(y1 - y0)` for paired measurements.
pub fn crossover_effect(y0: &[f64], y1: &[f64], level: f64) -> Result<EffectReport> {
    if y0.len() != y1.len() {
        return Err(EstimationError::InvalidArgument(format!(
            "paired columns differ in length ({} vs {})",
            y0.len(),
            y1.len()
        )));
    }
    if y0.len() < 2 {
        return Err(EstimationError::InvalidArgument("need at least 2 pairs".into()));
    }
    let diffs: Vec<f64> = y0.iter().zip(y1).map(|(a, b)| b - a).collect();
    let se = (sample_variance(&diffs) / diffs.len() as f64).sqrt();
    EffectReport::wald("crossover", mean(&diffs), se, level, diffs.len())
}
