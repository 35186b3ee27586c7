use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_level;
use crate::data::Dataset;
use crate::error::{EstimationError, Result};
use crate::stats::{quantile_sorted, sample_variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub se: f64,
    /// Percentile interval.
    pub ci: [f64; 2],
    pub level: f64,
    pub replicates: usize,
    pub failures: usize,
}

/// Nonparametric bootstrap of `estimator`. Replicate `r` resamples rows with
/// a ChaCha8 generator seeded by `seed` on stream `r`, so results do not
/// depend on scheduling. More than 10% failing replicates is an error.
pub fn bootstrap<F>(ds: &Dataset, estimator: F, b: usize, seed: u64, level: f64) -> Result<BootstrapResult>
where
    F: Fn(&Dataset) -> Result<f64> + Sync,
{
    check_level(level)?;
    if b < 100 {
        return Err(EstimationError::InvalidArgument(format!("bootstrap needs b >= 100, got {b}")));
    }
    let n = ds.n();
    let draws: Vec<Option<f64>> = (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            estimator(&ds.select_rows(&rows)).ok().filter(|v| v.is_finite())
        })
        .collect();
    let mut values: Vec<f64> = draws.iter().flatten().copied().collect();
    let failures = b - values.len();
    if failures * 10 > b {
        return Err(EstimationError::BootstrapFailures { failed: failures, total: b });
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let alpha = 1.0 - level;
    Ok(BootstrapResult {
        se: sample_variance(&values).sqrt(),
        ci: [quantile_sorted(&values, alpha / 2.0), quantile_sorted(&values, 1.0 - alpha / 2.0)],
        level,
        replicates: values.len(),
        failures,
    })
}
