use serde::{Deserialize, Serialize};

use super::ht_transform;
use crate::data::Dataset;
use crate::error::{EstimationError, Result};
use crate::linalg::{design_with_intercept, ols, Hc};
use crate::stats::{f_upper_tail, mean};

/// Transformed covariates `W = f(X)` regressed on in the balance check.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

/// Raw covariates, squares of the non-binary ones, and all pairwise products.
pub fn default_dictionary(ds: &Dataset) -> Result<Dictionary> {
    let names = &ds.roles().covariates;
    let covs = ds.covariates()?;
    let mut dict = Dictionary { names: Vec::new(), columns: Vec::new() };
    for (name, c) in names.iter().zip(&covs) {
        dict.names.push(name.clone());
        dict.columns.push(c.to_vec());
    }
    for (name, c) in names.iter().zip(&covs) {
        if c.iter().any(|&v| v != 0.0 && v != 1.0) {
            dict.names.push(format!("{name}^2"));
            dict.columns.push(c.iter().map(|v| v * v).collect());
        }
    }
    for i in 0..covs.len() {
        for j in i + 1..covs.len() {
            dict.names.push(format!("{}*{}", names[i], names[j]));
            dict.columns.push(covs[i].iter().zip(covs[j]).map(|(a, b)| a * b).collect());
        }
    }
    Ok(dict)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermStat {
    pub name: String,
    pub coef: f64,
    pub se: f64,
    pub t: f64,
    pub robust_se: f64,
    pub robust_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub n: usize,
    /// Classical overall F for all non-intercept terms.
    pub f_stat: f64,
    pub p_value: f64,
    pub df1: usize,
    pub df2: usize,
    /// HC1 Wald statistic divided by `df1`, referred to the same F law.
    pub robust_f: f64,
    pub robust_p_value: f64,
    pub terms: Vec<TermStat>,
}

/// Regresses the Horvitz-Thompson transform `H` on the dictionary. Under a
/// correct score `E[H | X] = 0`, so the terms should be jointly insignificant.
pub fn balance_check(ds: &Dataset, scores: &[f64], dict: &Dictionary) -> Result<BalanceReport> {
    if dict.columns.is_empty() {
        return Err(EstimationError::Undefined("dictionary has no terms besides the intercept".into()));
    }
    let h = ht_transform(ds, scores)?;
    let cols: Vec<&[f64]> = dict.columns.iter().map(Vec::as_slice).collect();
    let x = design_with_intercept(&cols);
    let (n, k) = x.shape();
    let q = k - 1;
    if n <= k {
        return Err(EstimationError::RankDeficient(format!("{n} rows for {k} columns")));
    }
    let fit = ols(&x, &h)?;
    let hbar = mean(&h);
    let tss: f64 = h.iter().map(|v| (v - hbar) * (v - hbar)).sum();
    let rss = fit.rss();
    let df2 = n - k;
    let f_stat = ((tss - rss) / q as f64) / (rss / df2 as f64);
    let classical = fit.classical_cov();
    let robust = fit.robust_cov(&x, Hc::Hc1);
    let b = fit.coef.rows(1, q).into_owned();
    let vr = robust.view((1, 1), (q, q)).into_owned();
    let chol = vr
        .cholesky()
        .ok_or_else(|| EstimationError::RankDeficient("robust covariance is not positive definite".into()))?;
    let robust_f = (b.transpose() * chol.solve(&b))[(0, 0)] / q as f64;
    let terms = dict
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let coef = fit.coef[j + 1];
            let se = classical[(j + 1, j + 1)].sqrt();
            let robust_se = robust[(j + 1, j + 1)].sqrt();
            TermStat { name: name.clone(), coef, se, t: coef / se, robust_se, robust_t: coef / robust_se }
        })
        .collect();
    Ok(BalanceReport {
        n,
        f_stat,
        p_value: f_upper_tail(f_stat, q as f64, df2 as f64),
        df1: q,
        df2,
        robust_f,
        robust_p_value: f_upper_tail(robust_f, q as f64, df2 as f64),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Roles;

    #[test]
    fn default_dictionary_terms() {
        let ds = Dataset::new(
            vec![
                ("Y".into(), vec![0.0; 4]),
                ("D".into(), vec![0.0, 1.0, 0.0, 1.0]),
                ("A".into(), vec![0.0, 1.0, 1.0, 0.0]),
                ("B".into(), vec![0.5, 2.0, -1.0, 3.0]),
            ],
            Roles::new("Y", "D", &["A", "B"]),
        )
        .unwrap();
        let d = default_dictionary(&ds).unwrap();
        assert_eq!(d.names, vec!["A", "B", "B^2", "A*B"]);
        assert_eq!(d.columns[3], vec![0.0, 2.0, -1.0, 0.0]);
    }

    #[test]
    fn intercept_only_is_undefined() {
        let ds = Dataset::new(
            vec![("Y".into(), vec![0.0; 4]), ("D".into(), vec![0.0, 1.0, 0.0, 1.0])],
            Roles::new("Y", "D", &[]),
        )
        .unwrap();
        let empty = Dictionary { names: vec![], columns: vec![] };
        assert!(matches!(balance_check(&ds, &[0.5; 4], &empty), Err(EstimationError::Undefined(_))));
    }

    #[test]
    fn f_matches_squared_t_for_one_term() {
        let x: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64).collect();
        let d: Vec<f64> = (0..30).map(|i| ((i * 5 + 1) % 3 == 0) as u8 as f64).collect();
        let ds = Dataset::new(
            vec![("Y".into(), vec![0.0; 30]), ("D".into(), d), ("X".into(), x.clone())],
            Roles::new("Y", "D", &["X"]),
        )
        .unwrap();
        let dict = Dictionary { names: vec!["X".into()], columns: vec![x] };
        let r = balance_check(&ds, &[0.4; 30], &dict).unwrap();
        assert!((r.f_stat - r.terms[0].t.powi(2)).abs() < 1e-9 * r.f_stat.max(1.0));
        assert!((r.robust_f - r.terms[0].robust_t.powi(2)).abs() < 1e-9 * r.robust_f.max(1.0));
        assert_eq!((r.df1, r.df2), (1, 28));
        assert!((0.0..=1.0).contains(&r.p_value));
    }
}
