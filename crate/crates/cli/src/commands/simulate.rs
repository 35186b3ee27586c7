use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;

use causal_kit::estimators::group_means;
use causal_kit::sem::{OracleEffects, Scenario};
use causal_kit::stats::{mean, ols_slope};
use serde_json::{json, Value};

use crate::args::SimulateArgs;
use crate::error::{CliError, Result};
use crate::json::{document, render, to_value};

pub fn parse_params(items: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("parameter `{item}` is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("parameter `{k}`: `{v}` is not a number")))?;
        if out.insert(k.trim().to_string(), v).is_some() {
            return Err(CliError::usage(format!("parameter `{k}` given twice")));
        }
    }
    Ok(out)
}

/// Writes the CSV and its sidecar; returns the sidecar document.
pub fn run(args: &SimulateArgs) -> Result<Value> {
    let sc: Scenario = args.scenario.parse()?;
    let params = sc.resolve(&parse_params(&args.params)?)?;
    let n = args.n.unwrap_or_else(|| sc.default_n());
    if n == 0 {
        return Err(CliError::new(crate::error::EXIT_USAGE, "INVALID_ARGUMENT", "--n must be positive"));
    }
    let model = sc.build(&params)?;
    let roles = model.roles().clone();
    let (Some(d), Some(y)) = (roles.treatment.clone(), roles.outcome.clone()) else {
        return Err(CliError::new(1, "INTERNAL", "scenario lacks treatment or outcome role"));
    };

    let (ds, oracle, crude) = if model.is_binary(&d)? {
        let (draws, ds) = model.counterfactual_pairs(&d, n, args.seed)?;
        let g = group_means(&ds)?;
        let o = OracleEffects::from_draws(&draws);
        let oracle = json!({ "oracle_ate": o.ate, "oracle_att": o.att, "oracle_atc": o.atc });
        (ds, oracle, json!({ "kind": "difference_in_means", "value": g.theta1 - g.theta0 }))
    } else {
        // unit-level effect of a one-unit shift, from the same noise draws
        let ds = model.simulate(n, args.seed)?;
        let y1 = model.intervene(&d, 1.0)?.simulate(n, args.seed)?;
        let y0 = model.intervene(&d, 0.0)?.simulate(n, args.seed)?;
        let effects: Vec<f64> = y1.column(&y)?.iter().zip(y0.column(&y)?).map(|(a, b)| a - b).collect();
        let oracle = json!({ "oracle_ate": mean(&effects), "oracle_att": null, "oracle_atc": null });
        let slope = ols_slope(ds.column(&d)?, ds.column(&y)?);
        (ds, oracle, json!({ "kind": "ols_slope", "value": slope }))
    };

    let file = File::create(&args.out)
        .map_err(|e| CliError::new(crate::error::EXIT_USAGE, "IO", format!("{}: {e}", args.out.display())))?;
    ds.write_csv(BufWriter::new(file))?;

    let mut result = serde_json::Map::new();
    result.insert("scenario".into(), sc.name().into());
    result.insert("params".into(), to_value(&params)?);
    result.insert("seed".into(), args.seed.into());
    result.insert("n".into(), n.into());
    result.insert("roles".into(), to_value(&roles)?);
    result.insert("crude_contrast".into(), crude);
    result.insert("output".into(), args.out.display().to_string().into());
    if let Value::Object(o) = oracle {
        result.extend(o);
    }
    let doc = document("simulate", to_value(args)?, result);
    std::fs::write(sidecar_path(&args.out), render(&doc))?;
    Ok(doc)
}

pub fn sidecar_path(csv: &std::path::Path) -> std::path::PathBuf {
    csv.with_extension("json")
}
