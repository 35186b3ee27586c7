use std::collections::BTreeMap;

use causal_kit::data::{Dataset, Roles};
use causal_kit::highdim::*;
use causal_kit::sem::scenario;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn refs(cols: &[Vec<f64>]) -> Vec<&[f64]> {
    cols.iter().map(Vec::as_slice).collect()
}

/// Normal-equations OLS with an intercept; returns `[b0, b1, ...]`.
fn normal_equations(cols: &[&[f64]], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let x = DMatrix::from_fn(n, cols.len() + 1, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * DVector::from_column_slice(y);
    xtx.lu().solve(&xty).unwrap().iter().copied().collect()
}

/// Dataset with outcome `Y`, treatment `D` and controls `W1..Wp`.
fn dml_dataset(y: Vec<f64>, d: Vec<f64>, w: Vec<Vec<f64>>) -> Dataset {
    let names: Vec<String> = (1..=w.len()).map(|j| format!("W{j}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut cols = vec![("Y".to_string(), y), ("D".to_string(), d)];
    cols.extend(names.iter().cloned().zip(w));
    Dataset::new(cols, Roles::new("Y", "D", &name_refs)).unwrap()
}

/// Independent KKT check from the returned residuals.
fn kkt_violation(x: &[&[f64]], fit: &LassoFit) -> f64 {
    let n = fit.residuals.len() as f64;
    let mut worst: f64 = 0.0;
    for (j, col) in x.iter().enumerate() {
        let g: f64 = col.iter().zip(&fit.residuals).map(|(a, r)| a * r).sum::<f64>() / n;
        let bound = fit.lambda * fit.loadings[j];
        let b = fit.coefficients[j];
        let v = if b == 0.0 { (g.abs() - bound).max(0.0) } else { (g - bound * b.signum()).abs() };
        worst = worst.max(v);
    }
    worst
}

fn soft(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kkt_certificate_holds(
        n in 15usize..60,
        p in 1usize..12,
        frac in 0.0f64..1.2,
        seed in 0u64..10_000,
    ) {
        let x: Vec<Vec<f64>> = (0..p).map(|j| gaussian(n, seed * 100 + j as u64)).collect();
        let xr = refs(&x);
        let e = gaussian(n, seed * 100 + 99);
        let y: Vec<f64> = (0..n).map(|i| 2.0 * x[0][i] - x[p - 1][i] + e[i]).collect();
        let loadings = default_loadings(&xr);
        let lambda = frac * lambda_max(&xr, &y, &loadings);
        let fit = lasso(&xr, &y, lambda, &loadings, &LassoOptions::default()).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(fit.kkt_max_violation <= 1e-8);
        prop_assert!(kkt_violation(&xr, &fit) <= 1e-8);
        let active: Vec<usize> = (0..p).filter(|&j| fit.coefficients[j] != 0.0).collect();
        prop_assert_eq!(active, fit.active.clone());
    }

    #[test]
    fn lasso_is_deterministic(seed in 0u64..1000) {
        let x: Vec<Vec<f64>> = (0..5).map(|j| gaussian(30, seed + 17 * j)).collect();
        let xr = refs(&x);
        let y = gaussian(30, seed + 5000);
        let l = default_loadings(&xr);
        let a = lasso(&xr, &y, 0.05, &l, &LassoOptions::default()).unwrap();
        let b = lasso(&xr, &y, 0.05, &l, &LassoOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fwl_at_zero_penalty(seed in 0u64..1000) {
        let n = 60;
        let w: Vec<Vec<f64>> = (0..4).map(|j| gaussian(n, seed * 10 + j)).collect();
        let v = gaussian(n, seed * 10 + 7);
        let e = gaussian(n, seed * 10 + 8);
        let d: Vec<f64> = (0..n).map(|i| w[0][i] - 0.5 * w[2][i] + v[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| 0.7 * d[i] + w[1][i] + e[i]).collect();
        let mut cols: Vec<&[f64]> = vec![&d];
        cols.extend(refs(&w));
        let full = normal_equations(&cols, &y)[1];
        let ds = dml_dataset(y, d, w);
        for nuisance in [Nuisance::Lasso, Nuisance::PostLasso] {
            let opts = DmlOptions { rule: LambdaRule::Fixed { lambda: 0.0 }, nuisance, ..Default::default() };
            let r = partial_out(&ds, &opts).unwrap();
            prop_assert!((r.alpha_hat - full).abs() <= 1e-6 * full.abs().max(1e-12));
        }
    }
}

#[test]
fn penalty_at_lambda_max_kills_everything() {
    let x: Vec<Vec<f64>> = (0..6).map(|j| gaussian(40, j)).collect();
    let xr = refs(&x);
    let y: Vec<f64> = (0..40).map(|i| x[2][i] + 0.3 * x[4][i]).collect();
    let l = default_loadings(&xr);
    let top = lambda_max(&xr, &y, &l);
    let at = lasso(&xr, &y, top, &l, &LassoOptions::default()).unwrap();
    assert!(at.active.is_empty());
    let below = lasso(&xr, &y, 0.99 * top, &l, &LassoOptions::default()).unwrap();
    assert_eq!(below.active, vec![2]);
}

#[test]
fn zero_penalty_matches_ols() {
    let n = 50;
    let x: Vec<Vec<f64>> = (0..5).map(|j| gaussian(n, 300 + j)).collect();
    let xr = refs(&x);
    let e = gaussian(n, 399);
    let y: Vec<f64> = (0..n).map(|i| 1.0 + x[0][i] - 2.0 * x[3][i] + e[i]).collect();
    let fit = lasso(&xr, &y, 0.0, &default_loadings(&xr), &LassoOptions::default()).unwrap();
    let b = normal_equations(&xr, &y);
    assert!((fit.intercept - b[0]).abs() < 1e-6);
    for j in 0..5 {
        assert!((fit.coefficients[j] - b[j + 1]).abs() < 1e-6, "coef {j}");
    }
}

#[test]
fn orthonormal_design_soft_thresholds() {
    // Centered columns with x_j'x_k / n = delta_jk.
    let n = 8;
    let h: [[f64; 8]; 4] = [
        [1., -1., 1., -1., 1., -1., 1., -1.],
        [1., 1., -1., -1., 1., 1., -1., -1.],
        [1., 1., 1., 1., -1., -1., -1., -1.],
        [1., -1., -1., 1., 1., -1., -1., 1.],
    ];
    let x: Vec<Vec<f64>> = h.iter().map(|r| r.to_vec()).collect();
    let xr = refs(&x);
    let y = [3.0, -1.0, 0.5, 2.0, -0.7, 1.1, 0.0, 4.2];
    let loadings = [1.0, 2.0, 0.5, 1.5];
    for lambda in [0.0, 0.1, 0.35, 0.8, 2.0] {
        let fit = lasso(&xr, &y, lambda, &loadings, &LassoOptions::default()).unwrap();
        for j in 0..4 {
            let z: f64 = x[j].iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            let expect = soft(z, lambda * loadings[j]);
            assert!((fit.coefficients[j] - expect).abs() <= 1e-8, "lambda {lambda} coef {j}");
        }
    }
}

#[test]
fn active_set_shrinks_with_lambda() {
    // Independent designs: the path never re-activates a dropped column.
    for seed in 0..5u64 {
        let n = 120;
        let x: Vec<Vec<f64>> = (0..10).map(|j| gaussian(n, seed * 50 + j)).collect();
        let xr = refs(&x);
        let e = gaussian(n, seed * 50 + 49);
        let y: Vec<f64> = (0..n).map(|i| (0..10).map(|j| x[j][i] / (1.0 + j as f64)).sum::<f64>() + e[i]).collect();
        let l = default_loadings(&xr);
        let grid = lambda_grid(&xr, &y, &l);
        let sizes: Vec<usize> = grid
            .iter()
            .map(|&lam| lasso(&xr, &y, lam, &l, &LassoOptions::default()).unwrap().active.len())
            .collect();
        for w in sizes.windows(2) {
            assert!(w[1] >= w[0], "seed {seed}: {sizes:?}");
        }
    }
}

#[test]
fn plugin_lambda_formula() {
    let n = 90;
    let x: Vec<Vec<f64>> = (0..60).map(|j| gaussian(n, 700 + j)).collect();
    let xr = refs(&x);
    let y = gaussian(n, 799);
    let choice = select_lambda(&xr, &y, LambdaRule::default(), 0).unwrap();
    let rate = (2.0 * 60f64.ln() / 90.0).sqrt();
    assert!((PLUGIN_C * rate - 0.331).abs() < 1e-3);
    let sigma = choice.sigma_hat.unwrap();
    assert!((choice.lambda - PLUGIN_C * sigma * rate).abs() < 1e-12);
    assert!((0.7..1.3).contains(&sigma), "sigma_hat {sigma}");
    assert_eq!(choice.loadings, default_loadings(&xr));
}

#[test]
fn cv_on_noise_prefers_the_empty_model() {
    let n = 100;
    let mut near_top = 0;
    for seed in 0..20u64 {
        let x: Vec<Vec<f64>> = (0..20).map(|j| gaussian(n, seed * 1000 + j)).collect();
        let xr = refs(&x);
        let y = gaussian(n, seed * 1000 + 999);
        let choice = select_lambda(&xr, &y, LambdaRule::Cv { k: 10, one_se: false }, seed).unwrap();
        let again = select_lambda(&xr, &y, LambdaRule::Cv { k: 10, one_se: false }, seed).unwrap();
        assert_eq!(choice, again);
        let grid = lambda_grid(&xr, &y, &choice.loadings);
        if choice.lambda >= grid[0] * 0.5 {
            near_top += 1;
        }
    }
    assert!(near_top >= 12, "{near_top} of 20 noise fits chose lambda near the top");
}

#[test]
fn irrelevant_controls_give_bivariate_slope() {
    let n = 400;
    let w: Vec<Vec<f64>> = (0..10).map(|j| gaussian(n, 900 + j)).collect();
    let d = gaussian(n, 950);
    let e = gaussian(n, 951);
    let y: Vec<f64> = (0..n).map(|i| 0.5 * d[i] + e[i]).collect();
    let slope = normal_equations(&[&d], &y)[1];
    let ds = dml_dataset(y, d, w);
    let opts = DmlOptions::default();
    let po = partial_out(&ds, &opts).unwrap();
    assert!((po.alpha_hat - slope).abs() < 0.02);
    let sel = double_selection(&ds, &opts).unwrap();
    if sel.selected_controls["union"].is_empty() {
        assert!((sel.alpha_hat - slope).abs() < 1e-10);
    }
    let db = debiased_lasso(&ds, &opts).unwrap();
    assert!((db.alpha_hat - slope).abs() < 0.02);
}

#[test]
fn empty_union_is_bivariate_ols() {
    let n = 200;
    let w: Vec<Vec<f64>> = (0..5).map(|j| gaussian(n, 1100 + j).iter().map(|v| v * 1e-3).collect()).collect();
    let d = gaussian(n, 1150);
    let e = gaussian(n, 1151);
    let y: Vec<f64> = (0..n).map(|i| d[i] + e[i]).collect();
    let slope = normal_equations(&[&d], &y)[1];
    let ds = dml_dataset(y, d, w);
    let r = double_selection(&ds, &DmlOptions::default()).unwrap();
    assert!(r.selected_controls["union"].is_empty());
    assert!((r.alpha_hat - slope).abs() < 1e-10);
}

#[test]
fn debiased_equals_partial_out_without_treatment_selection() {
    let n = 300;
    let w: Vec<Vec<f64>> = (0..8).map(|j| gaussian(n, 1200 + j)).collect();
    let d = gaussian(n, 1250);
    let e = gaussian(n, 1251);
    let y: Vec<f64> = (0..n).map(|i| 2.0 * w[0][i] - w[3][i] + e[i]).collect();
    let ds = dml_dataset(y, d, w);
    // a common penalty keeps the W fits of Y ~ W and Y ~ (D, W) identical
    let opts = DmlOptions { rule: LambdaRule::Fixed { lambda: 0.1 }, nuisance: Nuisance::Lasso, ..Default::default() };
    let po = partial_out(&ds, &opts).unwrap();
    let db = debiased_lasso(&ds, &opts).unwrap();
    assert!(po.selected_controls["treatment"].is_empty());
    assert!(db.fits["outcome"].coefficients[0] == 0.0);
    assert!((po.alpha_hat - db.alpha_hat).abs() < 1e-10);
    assert!((po.variance_hat - db.variance_hat).abs() < 1e-10 * po.variance_hat);
}

#[test]
fn weak_confounder_enters_through_treatment_equation() {
    let n = 200;
    let w: Vec<Vec<f64>> = (0..20).map(|j| gaussian(n, 1300 + j)).collect();
    let v = gaussian(n, 1350);
    let e = gaussian(n, 1351);
    let d: Vec<f64> = (0..n).map(|i| 1.5 * w[0][i] + 0.5 * v[i]).collect();
    let y: Vec<f64> = (0..n).map(|i| 0.5 * d[i] + 0.2 * w[0][i] + w[1][i] + e[i]).collect();
    let ds = dml_dataset(y, d, w);
    let r = double_selection(&ds, &DmlOptions::default()).unwrap();
    assert!(r.selected_controls["treatment"].contains(&0));
    assert!(r.selected_controls["union"].contains(&0));
    assert!(r.ci[0] <= 0.5 && 0.5 <= r.ci[1]);
}

#[test]
fn outcome_scale_equivariance() {
    let m = scenario("growth_highdim", &BTreeMap::new()).unwrap();
    let ds = m.simulate(90, 5).unwrap();
    let c = 3.7;
    let mut cols: Vec<(String, Vec<f64>)> =
        ds.names().iter().map(|nm| (nm.clone(), ds.column(nm).unwrap().to_vec())).collect();
    for (nm, col) in cols.iter_mut() {
        if nm == "Y" {
            col.iter_mut().for_each(|v| *v *= c);
        }
    }
    let scaled = Dataset::new(cols, ds.roles().clone()).unwrap();
    let opts = DmlOptions::default();
    type Est = fn(&Dataset, &DmlOptions) -> causal_kit::error::Result<DmlReport>;
    let ests: [Est; 3] = [partial_out, double_selection, debiased_lasso];
    for f in ests {
        let a = f(&ds, &opts).unwrap();
        let b = f(&scaled, &opts).unwrap();
        assert_eq!(a.selected_controls, b.selected_controls);
        assert!((b.alpha_hat - c * a.alpha_hat).abs() <= 1e-9 * a.alpha_hat.abs().max(a.se), "{:?}", a.method);
        assert!((b.se - c * a.se).abs() <= 1e-9 * a.se, "{:?}", a.method);
    }
}

#[test]
fn report_interval_and_serialization() {
    let m = scenario("growth_highdim", &BTreeMap::new()).unwrap();
    let ds = m.simulate(90, 11).unwrap();
    let r = partial_out(&ds, &DmlOptions::default()).unwrap();
    assert!(r.variance_hat > 0.0);
    assert!((r.se - (r.variance_hat / 90.0).sqrt()).abs() < 1e-15);
    let z = 1.959963984540054;
    assert!((r.ci[0] - (r.alpha_hat - z * r.se)).abs() < 1e-12);
    assert!((r.ci[1] - (r.alpha_hat + z * r.se)).abs() < 1e-12);
    let json = serde_json::to_value(&r).unwrap();
    for key in ["selected_controls", "lambdas", "loadings", "kkt_max_violation"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert!(r.kkt_max_violation <= 1e-8);
    for sel in r.selected_controls.values() {
        assert!(sel.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn treatment_explained_by_controls_is_not_identified() {
    let n = 60;
    let w: Vec<Vec<f64>> = (0..3).map(|j| gaussian(n, 1400 + j)).collect();
    let d = w[0].clone();
    let y = gaussian(n, 1450);
    let ds = dml_dataset(y, d, w);
    let opts = DmlOptions { rule: LambdaRule::Fixed { lambda: 0.0 }, ..Default::default() };
    let err = partial_out(&ds, &opts).unwrap_err();
    assert_eq!(err.code(), "NO_IDENTIFICATION");
}

#[test]
fn orthogonality_probe_basics() {
    let m = scenario("growth_highdim", &BTreeMap::from([("p".to_string(), 20.0)])).unwrap();
    let ds = m.simulate(2000, 3).unwrap();
    let po = partial_out(&ds, &DmlOptions::default()).unwrap();
    let chk = orthogonality_check(&ds, &po, &DEFAULT_T_GRID, 9).unwrap();
    assert!(chk.moment_at_zero.abs() < 1e-12);
    assert_eq!(chk.direction.len(), 40);
    assert!((chk.direction.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(chk, orthogonality_check(&ds, &po, &DEFAULT_T_GRID, 9).unwrap());
    let naive = single_selection(&ds, &DmlOptions::default()).unwrap();
    let chk = orthogonality_check(&ds, &naive, &DEFAULT_T_GRID, 9).unwrap();
    assert_eq!(chk.direction.len(), 20);
    assert!((chk.slope - 1.0).abs() < 1e-6);
    let ds_report = double_selection(&ds, &DmlOptions::default()).unwrap();
    assert!(orthogonality_check(&ds, &ds_report, &DEFAULT_T_GRID, 9).is_err());
}

#[test]
fn studentized_estimates_are_near_normal() {
    use rayon::prelude::*;
    let m = scenario("growth_highdim", &BTreeMap::new()).unwrap();
    let mut z: Vec<f64> = (0..1000u64)
        .into_par_iter()
        .map(|r| {
            let ds = m.simulate(400, 50_000 + r).unwrap();
            let rep = partial_out(&ds, &DmlOptions::default()).unwrap();
            (rep.alpha_hat + 0.045) / rep.se
        })
        .collect();
    z.sort_by(f64::total_cmp);
    let lo = causal_kit::stats::quantile_sorted(&z, 0.025);
    let hi = causal_kit::stats::quantile_sorted(&z, 0.975);
    assert!((lo + 1.96).abs() <= 0.25 && (hi - 1.96).abs() <= 0.25, "quantiles {lo} {hi}");
}

#[test]
fn selection_methods_agree_on_growth_draws() {
    let m = scenario("growth_highdim", &BTreeMap::new()).unwrap();
    for r in 0..50u64 {
        let ds = m.simulate(90, 70_000 + r).unwrap();
        let a = partial_out(&ds, &DmlOptions::default()).unwrap();
        let b = double_selection(&ds, &DmlOptions::default()).unwrap();
        assert!((a.alpha_hat - b.alpha_hat).abs() < 2.0 * (a.se + b.se), "replicate {r}");
    }
}
