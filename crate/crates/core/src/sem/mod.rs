//! Acyclic structural equation models: simulation, fix-interventions and
//! shared-noise counterfactual pairs.
//!
//! Each node `X_j := f_j(Pa_j, e_j)` is an [`Equation`] over its parents plus
//! one independent [`Noise`] draw. The graph is derived from the equations,
//! so equations always consume exactly the node's parents.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dag::{Dag, DagError};
use crate::data::{DataError, Dataset, Roles};

pub mod rng;
mod scenarios;

pub use scenarios::{heart_transplant_table, scenario, Scenario};

#[derive(Debug, Error)]
pub enum SemError {
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}`: {message}")]
    InvalidNoise { node: String, message: String },
    #[error("parameter `{name}`: {message}")]
    InvalidParameter { name: String, message: String },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("unknown scenario `{0}` (expected smoking_bias, heart_transplant or growth_highdim)")]
    UnknownScenario(String),
    #[error("treatment `{0}` is not generated by a binary equation")]
    NonBinaryTreatment(String),
    #[error("{0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, SemError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum Noise {
    Normal { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
    Uniform { low: f64, high: f64 },
}

impl Noise {
    pub fn normal(mean: f64, sd: f64) -> Self {
        Noise::Normal { mean, sd }
    }

    pub fn standard_normal() -> Self {
        Noise::Normal { mean: 0.0, sd: 1.0 }
    }

    /// Degenerate noise for deterministic equations.
    pub fn none() -> Self {
        Noise::Normal { mean: 0.0, sd: 0.0 }
    }

    pub fn bernoulli(p: f64) -> Self {
        Noise::Bernoulli { p }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Noise::Uniform { low, high }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            Noise::Normal { mean, sd } => {
                if !mean.is_finite() || !sd.is_finite() || sd < 0.0 {
                    return Err(format!("normal({mean}, {sd}) needs finite mean and sd >= 0"));
                }
            }
            Noise::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("bernoulli({p}) needs p in [0, 1]"));
                }
            }
            Noise::Uniform { low, high } => {
                if !low.is_finite() || !high.is_finite() || low >= high {
                    return Err(format!("uniform({low}, {high}) needs finite low < high"));
                }
            }
        }
        Ok(())
    }
}

/// One summand `coef * prod(factors)` of an index. A single factor gives a
/// linear term, several give a product interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub factors: Vec<String>,
}

impl Term {
    pub fn linear(parent: &str, coef: f64) -> Self {
        Term { coef, factors: vec![parent.to_string()] }
    }

    pub fn product(factors: &[&str], coef: f64) -> Self {
        Term { coef, factors: factors.iter().map(|f| f.to_string()).collect() }
    }
}

/// How the index and the noise combine into the node value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "link", content = "cut", rename_all = "snake_case")]
pub enum Link {
    /// `index + noise`
    Identity,
    /// `1{index + noise > cut}`
    Threshold(f64),
    /// `1{noise < index}` with uniform(0, 1) noise, so the index is `P(X = 1 | parents)`.
    Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Equation {
    Constant { value: f64 },
    Index { intercept: f64, terms: Vec<Term>, link: Link },
}

impl Equation {
    pub fn linear(intercept: f64, coefs: &[(&str, f64)]) -> Self {
        Equation::Index {
            intercept,
            terms: coefs.iter().map(|&(p, c)| Term::linear(p, c)).collect(),
            link: Link::Identity,
        }
    }

    fn parents(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        if let Equation::Index { terms, .. } = self {
            for f in terms.iter().flat_map(|t| &t.factors) {
                if !out.contains(&f.as_str()) {
                    out.push(f);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub equation: Equation,
    pub noise: Noise,
    /// Latent nodes are simulated but not written to datasets.
    pub observed: bool,
}

impl NodeSpec {
    /// Exogenous node equal to its noise.
    pub fn exogenous(name: &str, noise: Noise) -> Self {
        NodeSpec::new(name, Equation::linear(0.0, &[]), noise)
    }

    /// `intercept + sum coef * parent + noise`.
    pub fn linear(name: &str, intercept: f64, coefs: &[(&str, f64)], noise: Noise) -> Self {
        NodeSpec::new(name, Equation::linear(intercept, coefs), noise)
    }

    /// Bernoulli node with `P(X = 1 | parents) = intercept + sum coef * parent`.
    pub fn probability(name: &str, intercept: f64, coefs: &[(&str, f64)]) -> Self {
        let terms = coefs.iter().map(|&(p, c)| Term::linear(p, c)).collect();
        NodeSpec::new(
            name,
            Equation::Index { intercept, terms, link: Link::Probability },
            Noise::uniform(0.0, 1.0),
        )
    }

    pub fn new(name: &str, equation: Equation, noise: Noise) -> Self {
        NodeSpec { name: name.to_string(), equation, noise, observed: true }
    }

    pub fn latent(mut self) -> Self {
        self.observed = false;
        self
    }
}

#[derive(Debug, Clone)]
struct CompiledTerm {
    coef: f64,
    factors: Vec<usize>,
}

#[derive(Debug, Clone)]
enum Compiled {
    Constant(f64),
    Index { intercept: f64, terms: Vec<CompiledTerm>, link: Link },
}

/// Immutable structural model. Node `j` in declaration order draws its noise
/// from substream `(seed, row, j)`, see [`rng`].
#[derive(Debug, Clone)]
pub struct StructuralModel {
    dag: Dag,
    nodes: Vec<NodeSpec>,
    compiled: Vec<Compiled>,
    roles: Roles,
}

/// Potential outcomes for one row, all from the same noise draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualDraw {
    pub y0: f64,
    pub y1: f64,
    pub observed_d: f64,
    /// Seed of the run; with the row number it identifies the noise substreams.
    pub noise_seed: u64,
    pub row: u64,
}

impl CounterfactualDraw {
    pub fn observed_y(&self) -> f64 {
        if self.observed_d == 1.0 {
            self.y1
        } else {
            self.y0
        }
    }
}

/// Population-style effects averaged over counterfactual draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEffects {
    pub ate: f64,
    /// `None` when no draw is treated.
    pub att: Option<f64>,
    /// `None` when no draw is untreated.
    pub atc: Option<f64>,
    pub n: usize,
}

impl OracleEffects {
    pub fn from_draws(draws: &[CounterfactualDraw]) -> Self {
        let (mut all, mut treated, mut control) = (0.0, (0.0, 0usize), (0.0, 0usize));
        for d in draws {
            let diff = d.y1 - d.y0;
            all += diff;
            if d.observed_d == 1.0 {
                treated.0 += diff;
                treated.1 += 1;
            } else {
                control.0 += diff;
                control.1 += 1;
            }
        }
        let avg = |(s, k): (f64, usize)| (k > 0).then(|| s / k as f64);
        OracleEffects {
            ate: all / draws.len() as f64,
            att: avg(treated),
            atc: avg(control),
            n: draws.len(),
        }
    }
}

impl StructuralModel {
    /// Builds a model from node specifications in declaration order. Roles
    /// name the outcome, treatment and covariate nodes used for datasets.
    pub fn new(nodes: Vec<NodeSpec>, roles: Roles) -> Result<Self> {
        let mut edges = Vec::new();
        for spec in &nodes {
            for p in spec.equation.parents() {
                edges.push((p.to_string(), spec.name.clone()));
            }
        }
        let names: Vec<&str> = nodes.iter().map(|s| s.name.as_str()).collect();
        let dag = Dag::new(&names, edges)?;
        let mut compiled = Vec::with_capacity(nodes.len());
        for spec in &nodes {
            spec.noise
                .validate()
                .map_err(|message| SemError::InvalidNoise { node: spec.name.clone(), message })?;
            compiled.push(match &spec.equation {
                Equation::Constant { value } => Compiled::Constant(*value),
                Equation::Index { intercept, terms, link } => {
                    if *link == Link::Probability && spec.noise != Noise::uniform(0.0, 1.0) {
                        return Err(SemError::InvalidNoise {
                            node: spec.name.clone(),
                            message: "probability link needs uniform(0, 1) noise".into(),
                        });
                    }
                    let terms = terms
                        .iter()
                        .map(|t| {
                            if t.factors.is_empty() {
                                return Err(SemError::Argument(format!(
                                    "node `{}` has a term without factors",
                                    spec.name
                                )));
                            }
                            let factors = dag.ids_of(&t.factors)?;
                            Ok(CompiledTerm { coef: t.coef, factors })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Compiled::Index { intercept: *intercept, terms, link: *link }
                }
            });
        }
        let model = StructuralModel { dag, nodes, compiled, roles };
        for name in model.roles.outcome.iter().chain(&model.roles.treatment).chain(&model.roles.covariates) {
            let id = model.index_of(name)?;
            if !model.nodes[id].observed {
                return Err(SemError::Argument(format!("role node `{name}` is latent")));
            }
        }
        Ok(model)
    }

    /// Linear-Gaussian model over `dag` with the given edge coefficients and
    /// independent normal(0, sd) noises. Missing coefficients default to 0,
    /// which keeps the edge in the graph.
    pub fn linear_gaussian(dag: &Dag, coef: impl Fn(&str, &str) -> f64, sd: f64) -> Result<Self> {
        let nodes = dag
            .nodes()
            .iter()
            .map(|n| {
                let parents = dag.parents(n)?;
                let terms = parents.iter().map(|p| Term::linear(p, coef(p, n))).collect();
                Ok(NodeSpec::new(
                    n,
                    Equation::Index { intercept: 0.0, terms, link: Link::Identity },
                    Noise::normal(0.0, sd),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        StructuralModel::new(nodes, Roles::default())
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn roles(&self) -> &Roles {
        &self.roles
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| SemError::UnknownNode(name.to_string()))
    }

    pub fn node(&self, name: &str) -> Result<&NodeSpec> {
        Ok(&self.nodes[self.index_of(name)?])
    }

    /// True when every equation is a constant or an identity-link sum of
    /// single-parent terms.
    pub fn is_linear(&self) -> bool {
        self.compiled.iter().all(|c| match c {
            Compiled::Constant(_) => true,
            Compiled::Index { terms, link, .. } => {
                *link == Link::Identity && terms.iter().all(|t| t.factors.len() == 1)
            }
        })
    }

    /// Coefficients on each parent for a linear node, sorted by parent name.
    pub fn linear_coefficients(&self, node: &str) -> Result<Option<Vec<(String, f64)>>> {
        let id = self.index_of(node)?;
        let Compiled::Index { terms, link: Link::Identity, .. } = &self.compiled[id] else {
            return Ok(matches!(self.compiled[id], Compiled::Constant(_)).then(Vec::new));
        };
        if terms.iter().any(|t| t.factors.len() != 1) {
            return Ok(None);
        }
        let mut acc: BTreeMap<String, f64> = BTreeMap::new();
        for t in terms {
            *acc.entry(self.nodes[t.factors[0]].name.clone()).or_default() += t.coef;
        }
        Ok(Some(acc.into_iter().collect()))
    }

    /// True when the node's value is 0 or 1 for every noise realization.
    pub fn is_binary(&self, node: &str) -> Result<bool> {
        let id = self.index_of(node)?;
        Ok(match &self.compiled[id] {
            Compiled::Constant(v) => *v == 0.0 || *v == 1.0,
            Compiled::Index { intercept, terms, link } => match link {
                Link::Threshold(_) | Link::Probability => true,
                Link::Identity => {
                    terms.is_empty()
                        && *intercept == 0.0
                        && matches!(self.nodes[id].noise, Noise::Bernoulli { .. })
                }
            },
        })
    }

    /// Replaces the node's equation with the constant `value`; edges into the
    /// node disappear, everything else (noise streams included) is kept.
    pub fn intervene(&self, node: &str, value: f64) -> Result<StructuralModel> {
        let id = self.index_of(node)?;
        if !value.is_finite() {
            return Err(SemError::Argument(format!("intervention value {value} is not finite")));
        }
        let mut nodes = self.nodes.clone();
        nodes[id].equation = Equation::Constant { value };
        StructuralModel::new(nodes, self.roles.clone())
    }

    /// Noise values for one row, indexed by declaration order.
    fn noises(&self, seed: u64, row: u64) -> Vec<f64> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(j, s)| rng::draw(&s.noise, seed, row, j as u64))
            .collect()
    }

    /// Evaluates all nodes from given noises, optionally forcing one node.
    fn evaluate(&self, noises: &[f64], forced: Option<(usize, f64)>) -> Vec<f64> {
        let mut values = vec![0.0; self.nodes.len()];
        for &j in self.dag.topo_ids() {
            values[j] = match forced {
                Some((k, v)) if k == j => v,
                _ => self.compute(j, &values, noises[j]),
            };
        }
        values
    }

    fn compute(&self, j: usize, values: &[f64], noise: f64) -> f64 {
        match &self.compiled[j] {
            Compiled::Constant(v) => *v,
            Compiled::Index { intercept, terms, link } => {
                let index = terms.iter().fold(*intercept, |acc, t| {
                    acc + t.coef * t.factors.iter().map(|&f| values[f]).product::<f64>()
                });
                match link {
                    Link::Identity => index + noise,
                    Link::Threshold(cut) => f64::from(u8::from(index + noise > *cut)),
                    Link::Probability => f64::from(u8::from(noise < index)),
                }
            }
        }
    }

    /// All node values (latent included) for `n` rows, one vector per node
    /// in declaration order.
    pub fn simulate_all(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(SemError::Argument("n must be at least 1".into()));
        }
        let rows: Vec<Vec<f64>> = (0..n as u64)
            .into_par_iter()
            .map(|r| self.evaluate(&self.noises(seed, r), None))
            .collect();
        Ok(transpose(&rows, self.nodes.len()))
    }

    /// Simulates `n` independent rows. Columns are the observed nodes: the
    /// outcome, then the treatment, then covariates, then the rest in
    /// declaration order.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<Dataset> {
        let cols = self.simulate_all(n, seed)?;
        self.dataset(cols)
    }

    fn column_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = Vec::new();
        let named = self.roles.outcome.iter().chain(&self.roles.treatment).chain(&self.roles.covariates);
        for name in named {
            if let Ok(id) = self.index_of(name) {
                if !order.contains(&id) {
                    order.push(id);
                }
            }
        }
        for (j, s) in self.nodes.iter().enumerate() {
            if s.observed && !order.contains(&j) {
                order.push(j);
            }
        }
        order
    }

    fn dataset(&self, mut cols: Vec<Vec<f64>>) -> Result<Dataset> {
        let columns = self
            .column_order()
            .into_iter()
            .map(|j| (self.nodes[j].name.clone(), std::mem::take(&mut cols[j])))
            .collect();
        Ok(Dataset::new(columns, self.roles.clone())?)
    }

    /// Evaluates each row three times on one noise draw: with the treatment
    /// forced to 0, forced to 1, and factually. Returns the draws together
    /// with the factual dataset.
    pub fn counterfactual_pairs(
        &self,
        treatment: &str,
        n: usize,
        seed: u64,
    ) -> Result<(Vec<CounterfactualDraw>, Dataset)> {
        let d = self.index_of(treatment)?;
        if !self.is_binary(treatment)? {
            return Err(SemError::NonBinaryTreatment(treatment.to_string()));
        }
        let outcome = self
            .roles
            .outcome
            .as_deref()
            .ok_or_else(|| SemError::Argument("model has no outcome role".into()))?;
        let y = self.index_of(outcome)?;
        if n == 0 {
            return Err(SemError::Argument("n must be at least 1".into()));
        }
        let out: Vec<(CounterfactualDraw, Vec<f64>)> = (0..n as u64)
            .into_par_iter()
            .map(|r| {
                let noises = self.noises(seed, r);
                let y0 = self.evaluate(&noises, Some((d, 0.0)))[y];
                let y1 = self.evaluate(&noises, Some((d, 1.0)))[y];
                let factual = self.evaluate(&noises, None);
                let draw = CounterfactualDraw { y0, y1, observed_d: factual[d], noise_seed: seed, row: r };
                (draw, factual)
            })
            .collect();
        let (draws, rows): (Vec<_>, Vec<_>) = out.into_iter().unzip();
        let ds = self.dataset(transpose(&rows, self.nodes.len()))?;
        Ok((draws, ds))
    }
}

fn transpose(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    (0..width).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}
