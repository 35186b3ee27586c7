use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::lambda::{select_lambda, LambdaRule};
use super::lasso::{lasso, moments, LassoFit, LassoOptions};
use crate::data::Dataset;
use crate::error::{EstimationError, Result};
use crate::estimators::{check_level, EffectReport};
use crate::linalg::{design_with_intercept, ols, Hc};
use crate::stats::{mean, ols_slope, z_critical};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmlMethod {
    PartiallingOut,
    DoubleSelection,
    Debiased,
    /// Naive post-selection OLS using only the outcome equation.
    SingleSelection,
}

/// How nuisance residuals are formed from a Lasso fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nuisance {
    /// Residuals of the penalized fit.
    Lasso,
    /// Residuals of an OLS refit on the Lasso-selected controls.
    #[default]
    PostLasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmlOptions {
    pub rule: LambdaRule,
    /// Seeds cross-validation folds.
    pub seed: u64,
    pub level: f64,
    pub nuisance: Nuisance,
}

impl Default for DmlOptions {
    fn default() -> Self {
        DmlOptions { rule: LambdaRule::default(), seed: 0, level: 0.95, nuisance: Nuisance::PostLasso }
    }
}

/// Residuals of `y` on the selected columns of `x` (with intercept).
fn refit_residuals(x: &[&[f64]], y: &[f64], selected: &[usize]) -> Result<Vec<f64>> {
    let cols: Vec<&[f64]> = selected.iter().map(|&j| x[j]).collect();
    if cols.is_empty() {
        let m = mean(y);
        return Ok(y.iter().map(|v| v - m).collect());
    }
    Ok(ols(&design_with_intercept(&cols), y)?.residuals.iter().copied().collect())
}

/// OLS coefficients of `y` on the selected columns of `x` (with intercept),
/// scattered back to length `x.len()` with zeros elsewhere.
fn refit_coefficients(x: &[&[f64]], y: &[f64], selected: &[usize]) -> Result<Vec<f64>> {
    let mut coef = vec![0.0; x.len()];
    if selected.is_empty() {
        return Ok(coef);
    }
    let cols: Vec<&[f64]> = selected.iter().map(|&j| x[j]).collect();
    let fit = ols(&design_with_intercept(&cols), y)?;
    for (k, &j) in selected.iter().enumerate() {
        coef[j] = fit.coef[k + 1];
    }
    Ok(coef)
}

fn nuisance_residuals(x: &[&[f64]], y: &[f64], fit: &LassoFit, how: Nuisance) -> Result<Vec<f64>> {
    match how {
        Nuisance::Lasso => Ok(fit.residuals.clone()),
        Nuisance::PostLasso => refit_residuals(x, y, &fit.active),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// Inference on the coefficient of `D` in `Y = alpha D + g(W) + e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmlReport {
    pub method: DmlMethod,
    pub alpha_hat: f64,
    pub variance_hat: f64,
    pub se: f64,
    pub ci: [f64; 2],
    pub level: f64,
    pub n: usize,
    /// Selected covariate indices per stage, sorted.
    pub selected_controls: BTreeMap<String, Vec<usize>>,
    pub lambdas: BTreeMap<String, f64>,
    pub loadings: BTreeMap<String, LoadingSummary>,
    pub kkt_max_violation: f64,
    #[serde(skip)]
    pub fits: BTreeMap<String, LassoFit>,
    #[serde(skip)]
    moment: Option<MomentState>,
}

/// Residuals from which the estimating equation can be re-evaluated.
#[derive(Debug, Clone, PartialEq)]
enum MomentState {
    /// `mean((rY - a rD) rD)` with nuisance residuals `rY`, `rD`.
    Orthogonal { ry: Vec<f64>, rd: Vec<f64> },
    /// `mean((Y - a D - b'W) D)`, final-regression residuals `e`.
    Naive { e: Vec<f64>, d: Vec<f64> },
}

struct Inputs<'a> {
    y: &'a [f64],
    d: &'a [f64],
    w: Vec<&'a [f64]>,
}

fn inputs(ds: &Dataset) -> Result<Inputs<'_>> {
    let y = ds.outcome()?;
    let d = ds.treatment()?;
    let w = ds.covariates()?;
    if w.is_empty() {
        return Err(EstimationError::InvalidArgument("at least one control is required".into()));
    }
    if ds.n() < 10 {
        return Err(EstimationError::InvalidArgument(format!("need n >= 10, got {}", ds.n())));
    }
    Ok(Inputs { y, d, w })
}

fn fit_stage(x: &[&[f64]], y: &[f64], opts: &DmlOptions, scale: f64) -> Result<LassoFit> {
    let choice = select_lambda(x, y, opts.rule, opts.seed)?;
    let fit = lasso(x, y, choice.lambda * scale, &choice.loadings, &LassoOptions::default())?;
    if !fit.converged {
        return Err(EstimationError::NonConvergence(format!(
            "lasso stopped after {} sweeps with KKT violation {:.3e}",
            fit.iterations, fit.kkt_max_violation
        )));
    }
    Ok(fit)
}

fn summary(l: &[f64]) -> LoadingSummary {
    LoadingSummary {
        min: l.iter().cloned().fold(f64::INFINITY, f64::min),
        mean: mean(l),
        max: l.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

fn report(
    method: DmlMethod,
    alpha_hat: f64,
    variance_hat: f64,
    n: usize,
    level: f64,
    stages: Vec<(&str, LassoFit, Vec<usize>)>,
    moment: Option<MomentState>,
) -> Result<DmlReport> {
    if !(variance_hat > 0.0 && variance_hat.is_finite()) {
        return Err(EstimationError::Undefined(format!("variance estimate {variance_hat} is not positive")));
    }
    let se = (variance_hat / n as f64).sqrt();
    let z = z_critical(level);
    let mut r = DmlReport {
        method,
        alpha_hat,
        variance_hat,
        se,
        ci: [alpha_hat - z * se, alpha_hat + z * se],
        level,
        n,
        selected_controls: BTreeMap::new(),
        lambdas: BTreeMap::new(),
        loadings: BTreeMap::new(),
        kkt_max_violation: 0.0,
        fits: BTreeMap::new(),
        moment,
    };
    for (name, fit, selected) in stages {
        r.selected_controls.insert(name.to_string(), selected);
        r.lambdas.insert(name.to_string(), fit.lambda);
        r.loadings.insert(name.to_string(), summary(&fit.loadings));
        r.kkt_max_violation = r.kkt_max_violation.max(fit.kkt_max_violation);
        r.fits.insert(name.to_string(), fit);
    }
    Ok(r)
}

/// Sandwich `mean(r^2 e^2) / mean(r^2)^2` for the residualized moment.
fn sandwich(r: &[f64], e: &[f64]) -> f64 {
    let n = r.len() as f64;
    let j: f64 = r.iter().map(|v| v * v).sum::<f64>() / n;
    let meat: f64 = r.iter().zip(e).map(|(a, b)| a * a * b * b).sum::<f64>() / n;
    meat / (j * j)
}

fn check_variation(resid: &[f64], raw: &[f64], what: &str) -> Result<()> {
    let (_, sd) = moments(raw);
    let rss: f64 = resid.iter().map(|v| v * v).sum();
    if sd == 0.0 || rss <= 1e-12 * sd * sd * raw.len() as f64 {
        return Err(EstimationError::NoIdentification(format!(
            "{what} is (almost) fully explained by the controls"
        )));
    }
    Ok(())
}

/// Double Lasso by partialling out: residualize `Y` and `D` on `W` with the
/// Lasso (refit by OLS on the selected controls unless `opts.nuisance` is
/// `Lasso`), then regress residual on residual.
pub fn partial_out(ds: &Dataset, opts: &DmlOptions) -> Result<DmlReport> {
    check_level(opts.level)?;
    let inp = inputs(ds)?;
    let fy = fit_stage(&inp.w, inp.y, opts, 1.0)?;
    let fd = fit_stage(&inp.w, inp.d, opts, 1.0)?;
    let ry = nuisance_residuals(&inp.w, inp.y, &fy, opts.nuisance)?;
    let rd = nuisance_residuals(&inp.w, inp.d, &fd, opts.nuisance)?;
    check_variation(&rd, inp.d, "treatment")?;
    let alpha = ry.iter().zip(&rd).map(|(a, b)| a * b).sum::<f64>() / rd.iter().map(|v| v * v).sum::<f64>();
    let eps: Vec<f64> = ry.iter().zip(&rd).map(|(a, b)| a - alpha * b).collect();
    let v = sandwich(&rd, &eps);
    let (sy, sd) = (fy.active.clone(), fd.active.clone());
    report(
        DmlMethod::PartiallingOut,
        alpha,
        v,
        ds.n(),
        opts.level,
        vec![("outcome", fy, sy), ("treatment", fd, sd)],
        Some(MomentState::Orthogonal { ry, rd }),
    )
}

fn with_treatment<'a>(d: &'a [f64], w: &[&'a [f64]]) -> Vec<&'a [f64]> {
    let mut x = Vec::with_capacity(w.len() + 1);
    x.push(d);
    x.extend_from_slice(w);
    x
}

/// Post-double-selection: OLS of `Y` on `D` and the union of controls
/// selected in `Y ~ (D, W)` and `D ~ W`, with HC1 errors.
pub fn double_selection(ds: &Dataset, opts: &DmlOptions) -> Result<DmlReport> {
    check_level(opts.level)?;
    let inp = inputs(ds)?;
    let n = ds.n();
    let xy = with_treatment(inp.d, &inp.w);
    let mut scale = 1.0;
    for _ in 0..10 {
        let fy = fit_stage(&xy, inp.y, opts, scale)?;
        let fd = fit_stage(&inp.w, inp.d, opts, scale)?;
        let sy: Vec<usize> = fy.active.iter().filter(|&&j| j > 0).map(|j| j - 1).collect();
        let sd = fd.active.clone();
        let mut union: Vec<usize> = sy.iter().chain(&sd).copied().collect();
        union.sort_unstable();
        union.dedup();
        if union.len() + 2 >= n {
            scale *= 1.5;
            continue;
        }
        let mut cols: Vec<&[f64]> = vec![inp.d];
        cols.extend(union.iter().map(|&j| inp.w[j]));
        let x = design_with_intercept(&cols);
        let fit = ols(&x, inp.y)?;
        let cov = fit.robust_cov(&x, Hc::Hc1);
        let alpha = fit.coef[1];
        let v = cov[(1, 1)] * n as f64;
        let mut r = report(
            DmlMethod::DoubleSelection,
            alpha,
            v,
            n,
            opts.level,
            vec![("outcome", fy, sy), ("treatment", fd, sd)],
            None,
        )?;
        r.selected_controls.insert("union".into(), union);
        return Ok(r);
    }
    Err(EstimationError::RankDeficient(format!(
        "selected control set stays at n - 2 or more (n = {n}) after tightening lambda"
    )))
}

/// Debiased Lasso: `alpha = mean((Y - b'W) Dt) / mean(D Dt)` where `b` comes
/// from the Lasso of `Y` on `(D, W)` and `Dt` is the Lasso residual of `D` on
/// `W`. With `Nuisance::PostLasso` both fits are refit by OLS on their
/// selected columns.
pub fn debiased_lasso(ds: &Dataset, opts: &DmlOptions) -> Result<DmlReport> {
    check_level(opts.level)?;
    let inp = inputs(ds)?;
    let n = ds.n();
    let xy = with_treatment(inp.d, &inp.w);
    let fy = fit_stage(&xy, inp.y, opts, 1.0)?;
    let fd = fit_stage(&inp.w, inp.d, opts, 1.0)?;
    let dt = nuisance_residuals(&inp.w, inp.d, &fd, opts.nuisance)?;
    check_variation(&dt, inp.d, "treatment")?;
    let beta = match opts.nuisance {
        Nuisance::Lasso => fy.coefficients[1..].to_vec(),
        Nuisance::PostLasso => refit_coefficients(&xy, inp.y, &fy.active)?[1..].to_vec(),
    };
    let partial: Vec<f64> = (0..n)
        .map(|i| inp.y[i] - (0..beta.len()).map(|j| beta[j] * inp.w[j][i]).sum::<f64>())
        .collect();
    let denom = mean(&inp.d.iter().zip(&dt).map(|(a, b)| a * b).collect::<Vec<_>>());
    if denom.abs() <= 1e-12 * moments(inp.d).1.powi(2) {
        return Err(EstimationError::NoIdentification("mean(D * residualized D) is zero".into()));
    }
    let alpha = mean(&partial.iter().zip(&dt).map(|(a, b)| a * b).collect::<Vec<_>>()) / denom;
    let shifted: Vec<f64> = partial.iter().zip(inp.d).map(|(p, d)| p - alpha * d).collect();
    let b0 = mean(&shifted);
    let eps: Vec<f64> = shifted.iter().map(|v| v - b0).collect();
    let v = sandwich(&dt, &eps);
    let sy: Vec<usize> = fy.active.iter().filter(|&&j| j > 0).map(|j| j - 1).collect();
    let sd = fd.active.clone();
    report(DmlMethod::Debiased, alpha, v, n, opts.level, vec![("outcome", fy, sy), ("treatment", fd, sd)], None)
}

/// Non-orthogonal contrast: controls selected from `Y ~ (D, W)` only, then
/// OLS with HC1 errors. Omits controls that matter mainly through `D`.
pub fn single_selection(ds: &Dataset, opts: &DmlOptions) -> Result<DmlReport> {
    check_level(opts.level)?;
    let inp = inputs(ds)?;
    let n = ds.n();
    let xy = with_treatment(inp.d, &inp.w);
    let fy = fit_stage(&xy, inp.y, opts, 1.0)?;
    let sy: Vec<usize> = fy.active.iter().filter(|&&j| j > 0).map(|j| j - 1).collect();
    if sy.len() + 2 >= n {
        return Err(EstimationError::RankDeficient(format!("{} controls selected for n = {n}", sy.len())));
    }
    let mut cols: Vec<&[f64]> = vec![inp.d];
    cols.extend(sy.iter().map(|&j| inp.w[j]));
    let x = design_with_intercept(&cols);
    let fit = ols(&x, inp.y)?;
    let cov = fit.robust_cov(&x, Hc::Hc1);
    let e: Vec<f64> = fit.residuals.iter().copied().collect();
    report(
        DmlMethod::SingleSelection,
        fit.coef[1],
        cov[(1, 1)] * n as f64,
        n,
        opts.level,
        vec![("outcome", fy, sy)],
        Some(MomentState::Naive { e, d: inp.d.to_vec() }),
    )
}

/// OLS of `Y` on `D` and every control with HC1 errors.
pub fn ols_all_controls(ds: &Dataset, level: f64) -> Result<EffectReport> {
    let y = ds.outcome()?;
    let d = ds.treatment()?;
    let mut cols: Vec<&[f64]> = vec![d];
    cols.extend(ds.covariates()?);
    let x = design_with_intercept(&cols);
    let fit = ols(&x, y)?;
    let cov = fit.robust_cov(&x, Hc::Hc1);
    Ok(EffectReport::wald("ols_all_controls", fit.coef[1], cov[(1, 1)].sqrt(), level, ds.n())?
        .with_diagnostic("controls", (cols.len() - 1) as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityRow {
    pub t: f64,
    pub moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityCheck {
    pub method: DmlMethod,
    /// Unit perturbation direction in standardized-coefficient space.
    pub direction: Vec<f64>,
    pub moment_at_zero: f64,
    pub rows: Vec<OrthogonalityRow>,
    /// Least-squares slope of `log |M|` on `log t`.
    pub slope: f64,
}

pub const DEFAULT_T_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

/// Re-evaluates the empirical moment at `alpha_hat` with the nuisance
/// functions moved by `t * delta` along a seeded random unit direction in
/// the standardized-control coefficients. For partialling out the direction
/// has one block per nuisance (outcome and treatment equations); for single
/// selection it moves the outcome-equation coefficients only.
pub fn orthogonality_check(
    ds: &Dataset,
    report: &DmlReport,
    t_grid: &[f64],
    direction_seed: u64,
) -> Result<OrthogonalityCheck> {
    let moment = report.moment.as_ref().ok_or_else(|| {
        EstimationError::InvalidArgument(format!(
            "orthogonality check needs a partialling-out or single-selection report, got {:?}",
            report.method
        ))
    })?;
    if t_grid.len() < 2 || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(EstimationError::InvalidArgument("t grid needs at least two positive steps".into()));
    }
    let w = ds.covariates()?;
    let n = ds.n();
    let p = w.len();
    let std: Vec<Vec<f64>> = w
        .iter()
        .map(|c| {
            let (m, s) = moments(c);
            let s = if s > 0.0 { s } else { 1.0 };
            c.iter().map(|v| (v - m) / s).collect()
        })
        .collect();
    let blocks = match moment {
        MomentState::Orthogonal { .. } => 2,
        MomentState::Naive { .. } => 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(direction_seed);
    let mut delta: Vec<f64> = (0..blocks * p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
    delta.iter_mut().for_each(|v| *v /= norm);
    let project = |block: usize| -> Vec<f64> {
        (0..n).map(|i| (0..p).map(|j| delta[block * p + j] * std[j][i]).sum()).collect()
    };
    let alpha = report.alpha_hat;
    let eval: Box<dyn Fn(f64) -> f64> = match moment {
        MomentState::Orthogonal { ry, rd } => {
            let (a, b) = (project(0), project(1));
            let (ry, rd) = (ry.clone(), rd.clone());
            Box::new(move |t| {
                (0..n)
                    .map(|i| {
                        let rdt = rd[i] - t * b[i];
                        (ry[i] - t * a[i] - alpha * rdt) * rdt
                    })
                    .sum::<f64>()
                    / n as f64
            })
        }
        MomentState::Naive { e, d } => {
            let a = project(0);
            let (e, d) = (e.clone(), d.clone());
            Box::new(move |t| (0..n).map(|i| (e[i] - t * a[i]) * d[i]).sum::<f64>() / n as f64)
        }
    };
    let rows: Vec<OrthogonalityRow> = t_grid.iter().map(|&t| OrthogonalityRow { t, moment: eval(t) }).collect();
    let lx: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.moment.abs().ln()).collect();
    Ok(OrthogonalityCheck {
        method: report.method,
        direction: delta,
        moment_at_zero: eval(0.0),
        slope: ols_slope(&lx, &ly),
        rows,
    })
}

impl DmlReport {
    /// The report as a generic effect report.
    pub fn to_effect_report(&self) -> EffectReport {
        let method = match self.method {
            DmlMethod::PartiallingOut => "partial_out",
            DmlMethod::DoubleSelection => "double_selection",
            DmlMethod::Debiased => "debiased_lasso",
            DmlMethod::SingleSelection => "single_selection",
        };
        let mut r = EffectReport {
            method: method.into(),
            estimate: self.alpha_hat,
            se: self.se,
            ci: self.ci,
            level: self.level,
            n: self.n,
            diagnostics: BTreeMap::new(),
        };
        r.diagnostics.insert("variance_hat".into(), self.variance_hat);
        r.diagnostics.insert("kkt_max_violation".into(), self.kkt_max_violation);
        for (stage, sel) in &self.selected_controls {
            r.diagnostics.insert(format!("selected_{stage}"), sel.len() as f64);
        }
        for (stage, l) in &self.lambdas {
            r.diagnostics.insert(format!("lambda_{stage}"), *l);
        }
        r
    }
}
