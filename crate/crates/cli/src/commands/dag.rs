use std::fs;

use causal_kit::dag::Dag;
use causal_kit::dag::{BackdoorCheck, BackdoorFailure};
use serde_json::{json, Value};

use crate::args::DagQuery;
use crate::error::{CliError, Result};
use crate::json::{document, to_value};

pub fn run(query: &DagQuery) -> Result<Value> {
    let (command, result) = match query {
        DagQuery::Dsep { file, x, y, given } => {
            let g = load(file)?;
            let sep = g.d_separated(x, y, given).map_err(CliError::dag_query)?;
            ("dag dsep", json!({ "d_separated": sep }))
        }
        DagQuery::Backdoor { file, d, y, given } => {
            let g = load(file)?;
            let paths = g.backdoor_paths(d, y).map_err(CliError::dag_query)?;
            let mut out = json!({
                "backdoor_paths": paths.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            });
            if let Some(set) = given {
                let check = g.is_valid_backdoor_set(d, y, set).map_err(CliError::dag_query)?;
                let mut v = to_value(&check)?;
                // witness paths print in arrow notation rather than as node/step arrays
                if let Some(w) = v.pointer_mut("/failure/witness") {
                    *w = witness(&check).map(Value::String).unwrap_or(Value::Null);
                }
                out["adjustment_check"] = v;
            }
            ("dag backdoor", out)
        }
        DagQuery::Minsets { file, d, y, max_size } => {
            let g = load(file)?;
            let sets = g.minimal_backdoor_sets(d, y, *max_size).map_err(CliError::dag_query)?;
            ("dag minsets", json!({ "minimal_sets": sets }))
        }
        DagQuery::Swig { file, node, label } => {
            let g = load(file)?;
            let s = g.make_swig(node, label).map_err(CliError::dag_query)?;
            let edges: Vec<[String; 2]> = s.graph.edges().into_iter().map(|(a, b)| [a, b]).collect();
            (
                "dag swig",
                json!({
                    "natural_node": s.natural_node,
                    "intervention_node": s.intervention_node,
                    "nodes": s.graph.nodes(),
                    "edges": edges,
                    "text": s.graph.to_text(),
                }),
            )
        }
    };
    let Value::Object(fields) = result else { unreachable!("results are objects") };
    Ok(document(command, to_value(query)?, fields))
}

fn witness(check: &BackdoorCheck) -> Option<String> {
    match &check.failure {
        Some(BackdoorFailure::OpenBackdoorPath { witness: Some(p) }) => Some(p.to_string()),
        _ => None,
    }
}

fn load(path: &std::path::Path) -> Result<Dag> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::new(crate::error::EXIT_PARSE, "IO", format!("{}: {e}", path.display())))?;
    Dag::parse(&text).map_err(CliError::dag_file)
}
