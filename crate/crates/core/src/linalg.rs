//! Least squares with QR and sandwich covariances.

use nalgebra::{DMatrix, DVector};

use crate::error::{EstimationError, Result};

/// Heteroskedasticity-consistent covariance flavours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hc {
    /// `(X'X)^-1 X' diag(e^2) X (X'X)^-1`
    Hc0,
    /// HC0 scaled by `n / (n - k)`.
    Hc1,
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coef: DVector<f64>,
    pub residuals: DVector<f64>,
    xtx_inv: DMatrix<f64>,
}

/// Column-major design matrix from columns.
pub fn design(columns: &[&[f64]]) -> DMatrix<f64> {
    let n = columns.first().map(|c| c.len()).unwrap_or(0);
    DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i])
}

/// Design with a leading intercept column.
pub fn design_with_intercept(columns: &[&[f64]]) -> DMatrix<f64> {
    let n = columns.first().map(|c| c.len()).unwrap_or(0);
    DMatrix::from_fn(n, columns.len() + 1, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] })
}

/// Relative pivot tolerance below which a design is treated as rank deficient.
const RANK_TOL: f64 = 1e-9;

pub fn ols(x: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(EstimationError::InvalidArgument(format!(
            "response has {} rows, design has {n}",
            y.len()
        )));
    }
    if k == 0 {
        return Err(EstimationError::InvalidArgument("empty design".into()));
    }
    if n < k {
        return Err(EstimationError::RankDeficient(format!("{n} rows for {k} columns")));
    }
    // scale columns to unit norm so the pivot test is scale free
    let mut scale = vec![0.0; k];
    let mut xs = x.clone();
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = x.column(j).norm();
        if norm == 0.0 {
            return Err(EstimationError::RankDeficient(format!("column {j} is identically zero")));
        }
        *s = norm;
        xs.column_mut(j).scale_mut(1.0 / norm);
    }
    let qr = xs.qr();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)].abs() < RANK_TOL {
            return Err(EstimationError::RankDeficient(format!(
                "column {j} is collinear with earlier columns"
            )));
        }
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let coef_scaled = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| EstimationError::RankDeficient("singular triangular factor".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| EstimationError::RankDeficient("singular triangular factor".into()))?;
    let mut xtx_inv = &r_inv * r_inv.transpose();
    let mut coef = coef_scaled;
    for j in 0..k {
        coef[j] /= scale[j];
        for l in 0..k {
            xtx_inv[(j, l)] /= scale[j] * scale[l];
        }
    }
    let residuals = yv - x * &coef;
    Ok(OlsFit { coef, residuals, xtx_inv })
}

impl OlsFit {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    pub fn k(&self) -> usize {
        self.coef.len()
    }

    pub fn rss(&self) -> f64 {
        self.residuals.norm_squared()
    }

    pub fn xtx_inv(&self) -> &DMatrix<f64> {
        &self.xtx_inv
    }

    /// Classical `s^2 (X'X)^-1` with `s^2 = RSS / (n - k)`.
    pub fn classical_cov(&self) -> DMatrix<f64> {
        let dof = (self.n() - self.k()) as f64;
        &self.xtx_inv * (self.rss() / dof)
    }

    pub fn robust_cov(&self, x: &DMatrix<f64>, kind: Hc) -> DMatrix<f64> {
        let (n, k) = x.shape();
        let mut meat = DMatrix::zeros(k, k);
        for i in 0..n {
            let e2 = self.residuals[i] * self.residuals[i];
            let row = x.row(i);
            for a in 0..k {
                let ra = row[a] * e2;
                for b in 0..k {
                    meat[(a, b)] += ra * row[b];
                }
            }
        }
        let mut cov = &self.xtx_inv * meat * &self.xtx_inv;
        if kind == Hc::Hc1 && n > k {
            cov *= n as f64 / (n - k) as f64;
        }
        cov
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_recovers_coefficients() {
        let x1 = [1.0, 2.0, 3.0, 4.0, 5.0];
        let x2 = [2.0, -1.0, 0.5, 3.0, 1.0];
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 1.0 + 2.0 * a - 3.0 * b).collect();
        let fit = ols(&design_with_intercept(&[&x1, &x2]), &y).unwrap();
        assert!((fit.coef[0] - 1.0).abs() < 1e-12);
        assert!((fit.coef[1] - 2.0).abs() < 1e-12);
        assert!((fit.coef[2] + 3.0).abs() < 1e-12);
        assert!(fit.rss() < 1e-20);
    }

    #[test]
    fn normal_equations_agree() {
        // x'x beta = x'y solved by hand for a 2-column design
        let x1 = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 2.0, 5.0];
        let fit = ols(&design_with_intercept(&[&x1]), &y).unwrap();
        // slope = Sxy / Sxx = 5.5 / 5, intercept = ybar - slope * xbar
        assert!((fit.coef[1] - 1.1).abs() < 1e-14);
        assert!((fit.coef[0] - (2.75 - 1.1 * 1.5)).abs() < 1e-14);
    }

    #[test]
    fn collinear_columns_detected() {
        let x1 = [1.0, 2.0, 3.0];
        let x2 = [2.0, 4.0, 6.0];
        assert!(matches!(
            ols(&design_with_intercept(&[&x1, &x2]), &[1.0, 2.0, 3.0]),
            Err(EstimationError::RankDeficient(_))
        ));
        let c = [1.0, 1.0, 1.0];
        assert!(matches!(
            ols(&design_with_intercept(&[&c]), &[1.0, 2.0, 3.0]),
            Err(EstimationError::RankDeficient(_))
        ));
    }

    #[test]
    fn hc0_for_bivariate_regression() {
        // HC0 slope variance = sum((x - xbar)^2 e^2) / Sxx^2
        let x1 = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.3, 1.1, 1.7, 3.4, 3.9];
        let x = design_with_intercept(&[&x1]);
        let fit = ols(&x, &y).unwrap();
        let e = &fit.residuals;
        let num: f64 = (0..5).map(|i| (x1[i] - 2.0).powi(2) * e[i] * e[i]).sum();
        let expected = num / 100.0;
        let cov = fit.robust_cov(&x, Hc::Hc0);
        assert!((cov[(1, 1)] - expected).abs() < 1e-14);
        let hc1 = fit.robust_cov(&x, Hc::Hc1);
        assert!((hc1[(1, 1)] - expected * 5.0 / 3.0).abs() < 1e-14);
    }
}
