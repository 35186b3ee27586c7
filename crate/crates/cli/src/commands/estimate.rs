use std::fs::File;
use std::io::BufReader;

use causal_kit::data::{Dataset, Roles};
use causal_kit::estimators::{
    ate_wald, balance_check, bootstrap, cate_interaction, default_dictionary, fit_propensity, group_means, ipw_ate,
    relative_effect, risk_measures, standardized_contrast, IpwOptions,
};
use causal_kit::highdim::{
    debiased_lasso, double_selection, orthogonality_check, partial_out, single_selection, DmlOptions, DmlReport,
    LambdaRule, Nuisance, DEFAULT_T_GRID,
};
use causal_kit::EstimationError;
use serde_json::{json, Map, Value};

use crate::args::{EstimateArgs, Method, NuisanceArg};
use crate::error::{CliError, Result, EXIT_PARSE};
use crate::json::{document, to_value};

/// Where propensity scores come from.
enum Scores {
    Fit,
    Column(String),
}

pub fn run(args: &EstimateArgs) -> Result<Value> {
    let scores = match args.scores.as_str() {
        "fit" => Scores::Fit,
        col => Scores::Column(col.to_string()),
    };
    let ds = load(args, &scores)?;
    let level = args.level;
    let result = match args.method {
        Method::Ate => json!({
            "group_means": to_value(&group_means(&ds)?)?,
            "effect": to_value(&ate_wald(&ds, level)?)?,
        }),
        Method::Risk => json!({ "risk": to_value(&risk_measures(&ds)?)? }),
        Method::Standardize => {
            let stratum = args
                .stratum
                .as_deref()
                .ok_or_else(|| CliError::usage("standardize needs --stratum"))?;
            json!({ "standardized": to_value(&standardized_contrast(&ds, stratum)?)? })
        }
        Method::Relative => {
            let mut out = json!({ "effect": to_value(&relative_effect(&ds, level)?)? });
            if args.bootstrap > 0 {
                let b = bootstrap(&ds, |r| Ok(relative_effect(r, level)?.estimate), args.bootstrap, args.seed, level)?;
                out["bootstrap"] = to_value(&b)?;
            }
            out
        }
        Method::Ipw => ipw(&ds, &scores, args)?,
        Method::Balance => {
            let (s, propensity) = score_vector(&ds, &scores)?;
            let report = balance_check(&ds, &s, &default_dictionary(&ds)?)?;
            json!({ "balance": to_value(&report)?, "propensity": propensity })
        }
        Method::Cate => json!({ "cate": to_value(&cate_interaction(&ds, level)?)? }),
        Method::DmlPo => dml_json(&ds, &partial_out(&ds, &dml_options(args)?)?)?,
        Method::DmlDs => dml_json(&ds, &double_selection(&ds, &dml_options(args)?)?)?,
        Method::DmlDb => dml_json(&ds, &debiased_lasso(&ds, &dml_options(args)?)?)?,
        Method::OrthoCheck => {
            let opts = dml_options(args)?;
            let po = partial_out(&ds, &opts)?;
            let naive = single_selection(&ds, &opts)?;
            json!({
                "t_grid": DEFAULT_T_GRID,
                "partialling_out": to_value(&orthogonality_check(&ds, &po, &DEFAULT_T_GRID, args.seed)?)?,
                "single_selection": to_value(&orthogonality_check(&ds, &naive, &DEFAULT_T_GRID, args.seed)?)?,
            })
        }
    };
    let Value::Object(mut fields) = result else { unreachable!("results are objects") };
    fields.insert("roles".into(), to_value(ds.roles())?);
    fields.insert("n".into(), ds.n().into());
    let method = to_value(&args.method)?;
    let command = format!("estimate {}", method.as_str().unwrap_or_default());
    Ok(document(&command, to_value(args)?, fields))
}

fn load(args: &EstimateArgs, scores: &Scores) -> Result<Dataset> {
    let file = File::open(&args.data)
        .map_err(|e| CliError::new(EXIT_PARSE, "IO", format!("{}: {e}", args.data.display())))?;
    let raw = Dataset::read_csv(BufReader::new(file), Roles::default())?;
    let covariates: Vec<String> = match &args.x {
        Some(x) => x.clone(),
        None => {
            let score_col = match scores {
                Scores::Column(c) => Some(c.as_str()),
                Scores::Fit => None,
            };
            raw.names()
                .iter()
                .filter(|c| {
                    let c = c.as_str();
                    c != args.y && c != args.d && Some(c) != args.stratum.as_deref() && Some(c) != score_col
                })
                .cloned()
                .collect()
        }
    };
    let refs: Vec<&str> = covariates.iter().map(String::as_str).collect();
    Ok(raw.with_roles(Roles::new(&args.y, &args.d, &refs))?)
}

fn score_vector(ds: &Dataset, scores: &Scores) -> Result<(Vec<f64>, Value)> {
    match scores {
        Scores::Fit => {
            let m = fit_propensity(ds)?;
            let summary = json!({
                "source": "logistic_fit",
                "names": m.names,
                "coefficients": m.coefficients,
                "converged": m.converged,
                "separation": m.separation,
            });
            Ok((m.scores, summary))
        }
        Scores::Column(c) => Ok((ds.column(c)?.to_vec(), json!({ "source": "column", "column": c }))),
    }
}

fn parse_truncate(text: &str) -> Result<(f64, f64)> {
    let bad = || CliError::usage(format!("--truncate expects LOW,HIGH percentiles, got `{text}`"));
    let (lo, hi) = text.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(0.0..hi).contains(&lo) || hi > 100.0 {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// IPW with the sandwich standard error (scores treated as known) and a
/// bootstrap that re-derives the scores in every replicate.
fn ipw(ds: &Dataset, scores: &Scores, args: &EstimateArgs) -> Result<Value> {
    let opts = IpwOptions { stabilized: args.stabilized, truncate: args.truncate.as_deref().map(parse_truncate).transpose()? };
    let (s, propensity) = score_vector(ds, scores)?;
    let report = ipw_ate(ds, &s, opts, args.level)?;
    let mut out = json!({ "effect": to_value(&report)?, "propensity": propensity });
    if args.bootstrap > 0 {
        let estimator = |r: &Dataset| -> std::result::Result<f64, EstimationError> {
            let s = match scores {
                Scores::Fit => fit_propensity(r)?.scores,
                Scores::Column(c) => r.column(c)?.to_vec(),
            };
            Ok(ipw_ate(r, &s, opts, args.level)?.estimate)
        };
        out["bootstrap"] = to_value(&bootstrap(ds, estimator, args.bootstrap, args.seed, args.level)?)?;
    }
    Ok(out)
}

fn dml_options(args: &EstimateArgs) -> Result<DmlOptions> {
    let rule: LambdaRule = args.lambda.parse()?;
    let nuisance = match args.nuisance {
        NuisanceArg::Lasso => Nuisance::Lasso,
        NuisanceArg::PostLasso => Nuisance::PostLasso,
    };
    Ok(DmlOptions { rule, seed: args.seed, level: args.level, nuisance })
}

/// The report plus selected controls by name.
fn dml_json(ds: &Dataset, report: &DmlReport) -> Result<Value> {
    let names = &ds.roles().covariates;
    let by_name: Map<String, Value> = report
        .selected_controls
        .iter()
        .map(|(stage, idx)| (stage.clone(), idx.iter().map(|&j| names[j].clone()).collect::<Vec<_>>().into()))
        .collect();
    Ok(json!({ "dml": to_value(report)?, "selected_control_names": by_name }))
}
