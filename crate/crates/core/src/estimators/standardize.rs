use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{require_binary_outcome, split_arms};
use crate::data::Dataset;
use crate::error::{EstimationError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub value: f64,
    pub n_treated: usize,
    pub n_control: usize,
    pub risk_treated: f64,
    pub risk_control: f64,
    /// Sample share of the stratum.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedTable {
    /// Sorted by stratum value.
    pub strata: Vec<Stratum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedContrast {
    pub table: StratifiedTable,
    pub std_risk1: f64,
    pub std_risk0: f64,
    pub std_rr: Option<f64>,
    pub std_rd: f64,
    pub crude_risk1: f64,
    pub crude_risk0: f64,
    pub crude_rr: Option<f64>,
}

/// Exact rational version for 0/1 outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactContrast {
    pub std_risk1: Ratio<i64>,
    pub std_risk0: Ratio<i64>,
    pub std_rr: Option<Ratio<i64>>,
    pub crude_risk1: Ratio<i64>,
    pub crude_risk0: Ratio<i64>,
    pub crude_rr: Option<Ratio<i64>>,
}

/// Per stratum value: (control outcomes, treated outcomes).
type Cells = Vec<(f64, Vec<f64>, Vec<f64>)>;

fn cells(ds: &Dataset, stratum_col: &str) -> Result<Cells> {
    let y = ds.outcome()?;
    let d = ds.binary_treatment()?;
    let l = ds.column(stratum_col)?;
    let mut cells: Cells = Vec::new();
    for i in 0..ds.n() {
        let pos = match cells.iter().position(|c| c.0 == l[i]) {
            Some(p) => p,
            None => {
                cells.push((l[i], Vec::new(), Vec::new()));
                cells.len() - 1
            }
        };
        if d[i] == 1.0 {
            cells[pos].2.push(y[i]);
        } else {
            cells[pos].1.push(y[i]);
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (value, c, t) in &cells {
        let missing = if t.is_empty() {
            Some("treated")
        } else if c.is_empty() {
            Some("control")
        } else {
            None
        };
        if let Some(arm) = missing {
            return Err(EstimationError::Positivity(format!(
                "stratum {stratum_col}={value} has no {arm} rows"
            )));
        }
    }
    Ok(cells)
}

fn avg(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standardized risks `sum_l P(L = l) * risk_d(l)` with sample-share weights,
/// next to the crude contrast.
pub fn standardized_contrast(ds: &Dataset, stratum_col: &str) -> Result<StandardizedContrast> {
    let cells = cells(ds, stratum_col)?;
    let n = ds.n() as f64;
    let strata: Vec<Stratum> = cells
        .iter()
        .map(|(value, c, t)| Stratum {
            value: *value,
            n_treated: t.len(),
            n_control: c.len(),
            risk_treated: avg(t),
            risk_control: avg(c),
            weight: (c.len() + t.len()) as f64 / n,
        })
        .collect();
    let std_risk1: f64 = strata.iter().map(|s| s.weight * s.risk_treated).sum();
    let std_risk0: f64 = strata.iter().map(|s| s.weight * s.risk_control).sum();
    let (c, t) = split_arms(ds)?;
    let (crude_risk0, crude_risk1) = (avg(&c), avg(&t));
    Ok(StandardizedContrast {
        table: StratifiedTable { strata },
        std_risk1,
        std_risk0,
        std_rr: (std_risk0 != 0.0).then(|| std_risk1 / std_risk0),
        std_rd: std_risk1 - std_risk0,
        crude_risk1,
        crude_risk0,
        crude_rr: (crude_risk0 != 0.0).then(|| crude_risk1 / crude_risk0),
    })
}

/// Same quantities in exact rational arithmetic; the outcome must be 0/1.
pub fn standardized_contrast_exact(ds: &Dataset, stratum_col: &str) -> Result<ExactContrast> {
    require_binary_outcome(ds)?;
    let cells = cells(ds, stratum_col)?;
    let n = ds.n() as i64;
    let risk = |v: &[f64]| Ratio::new(v.iter().filter(|&&y| y == 1.0).count() as i64, v.len() as i64);
    let mut std_risk1 = Ratio::from_integer(0);
    let mut std_risk0 = Ratio::from_integer(0);
    for (_, c, t) in &cells {
        let w = Ratio::new((c.len() + t.len()) as i64, n);
        std_risk1 += w * risk(t);
        std_risk0 += w * risk(c);
    }
    let (c, t) = split_arms(ds)?;
    let (crude_risk0, crude_risk1) = (risk(&c), risk(&t));
    let ratio = |a: Ratio<i64>, b: Ratio<i64>| (b != Ratio::from_integer(0)).then(|| a / b);
    Ok(ExactContrast {
        std_rr: ratio(std_risk1, std_risk0),
        crude_rr: ratio(crude_risk1, crude_risk0),
        std_risk1,
        std_risk0,
        crude_risk1,
        crude_risk0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Roles;

    /// rows as (L, A, Y) repeated `count` times
    fn table(rows: &[(f64, f64, f64, usize)]) -> Dataset {
        let (mut l, mut a, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for &(li, ai, yi, k) in rows {
            for _ in 0..k {
                l.push(li);
                a.push(ai);
                y.push(yi);
            }
        }
        Dataset::new(
            vec![("L".into(), l), ("A".into(), a), ("Y".into(), y)],
            Roles::new("Y", "A", &["L"]),
        )
        .unwrap()
    }

    #[test]
    fn single_stratum_equals_crude() {
        let ds = table(&[(0.0, 1.0, 1.0, 3), (0.0, 1.0, 0.0, 2), (0.0, 0.0, 1.0, 1), (0.0, 0.0, 0.0, 3)]);
        let s = standardized_contrast(&ds, "L").unwrap();
        assert!((s.std_risk1 - s.crude_risk1).abs() < 1e-15);
        assert!((s.std_risk0 - s.crude_risk0).abs() < 1e-15);
        let e = standardized_contrast_exact(&ds, "L").unwrap();
        assert_eq!(e.std_rr, e.crude_rr);
        assert_eq!(e.std_rr, Some(Ratio::new(12, 5)));
    }

    #[test]
    fn weights_sum_to_one_and_risks_bounded() {
        let ds = table(&[
            (0.0, 1.0, 1.0, 2),
            (0.0, 0.0, 0.0, 1),
            (1.0, 1.0, 0.0, 4),
            (1.0, 0.0, 1.0, 2),
            (2.0, 1.0, 1.0, 1),
            (2.0, 0.0, 1.0, 1),
        ]);
        let s = standardized_contrast(&ds, "L").unwrap();
        let total: f64 = s.table.strata.iter().map(|x| x.weight).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(s.table.strata.iter().all(|x| (0.0..=1.0).contains(&x.risk_treated)));
        assert_eq!(s.table.strata.iter().map(|x| x.value).collect::<Vec<_>>(), vec![0.0, 1.0, 2.0]);
        // hand computation: weights 3/11, 6/11, 2/11
        let e = standardized_contrast_exact(&ds, "L").unwrap();
        assert_eq!(e.std_risk1, Ratio::new(3, 11) + Ratio::new(2, 11));
        assert_eq!(e.std_risk0, Ratio::new(6, 11) + Ratio::new(2, 11));
    }

    #[test]
    fn missing_arm_is_positivity_error() {
        let ds = table(&[(0.0, 1.0, 1.0, 2), (0.0, 0.0, 0.0, 1), (1.0, 0.0, 1.0, 2)]);
        match standardized_contrast(&ds, "L") {
            Err(EstimationError::Positivity(msg)) => assert!(msg.contains("L=1") && msg.contains("treated")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
