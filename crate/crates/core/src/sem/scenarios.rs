//! Preset models.
//!
//! | scenario           | parameter  | default | range            |
//! |--------------------|------------|---------|------------------|
//! | `smoking_bias`     | `rho`      | -0.5    | (-1, 0)          |
//! |                    | `eta1`     | 0       | finite           |
//! |                    | `mu`       | 0       | finite           |
//! |                    | `sd`       | 1       | > 0              |
//! | `heart_transplant` | `q`        | 0.6     | [0, 1]           |
//! |                    | `p_treat_critical` | 0.75 | [0, 1]       |
//! |                    | `p_treat_stable`   | 0.5  | [0, 1]       |
//! |                    | `risk_critical`    | 2/3  | [0, 1]       |
//! |                    | `risk_stable`      | 1/4  | [0, 1]       |
//! |                    | `effect`   | 0       | risks stay in [0, 1] |
//! | `growth_highdim`   | `alpha`    | -0.045  | finite           |
//! |                    | `p`        | 60      | integer >= s     |
//! |                    | `s`        | 5       | integer >= 0     |
//! |                    | `rho`      | 0.5     | (-1, 1)          |
//! |                    | `beta`     | 0.5     | finite           |
//! |                    | `gamma`    | 0.5     | finite           |
//! |                    | `sigma`    | 0.16    | > 0              |
//! |                    | `sigma_d`  | 1       | > 0              |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Equation, Link, NodeSpec, Noise, Result, SemError, StructuralModel, Term};
use crate::data::{Dataset, Roles};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// `eta0 ~ N(mu, sd^2)`, `nu = rho * z(eta0) + sqrt(1 - rho^2) e`,
    /// `D = 1{nu > 0}`, `Y = eta0 + eta1 * D`. Only `Y` and `D` are observed.
    SmokingBias,
    /// Stratum `L ~ bernoulli(q)`, treatment `A | L` and binary outcome `Y | L, A`.
    HeartTransplant,
    /// Partially linear `Y = alpha D + beta'W + e`, `D = gamma'W + v`, with
    /// `W` a Gaussian AR(1) chain and only the first `s` controls relevant.
    GrowthHighdim,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::SmokingBias, Scenario::HeartTransplant, Scenario::GrowthHighdim];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SmokingBias => "smoking_bias",
            Scenario::HeartTransplant => "heart_transplant",
            Scenario::GrowthHighdim => "growth_highdim",
        }
    }

    /// Suggested sample size.
    pub fn default_n(self) -> usize {
        match self {
            Scenario::SmokingBias => 100_000,
            Scenario::HeartTransplant => 20,
            Scenario::GrowthHighdim => 90,
        }
    }

    /// Parameter names with their defaults.
    pub fn defaults(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            Scenario::SmokingBias => &[("rho", -0.5), ("eta1", 0.0), ("mu", 0.0), ("sd", 1.0)],
            Scenario::HeartTransplant => &[
                ("q", 0.6),
                ("p_treat_critical", 0.75),
                ("p_treat_stable", 0.5),
                ("risk_critical", 2.0 / 3.0),
                ("risk_stable", 0.25),
                ("effect", 0.0),
            ],
            Scenario::GrowthHighdim => &[
                ("alpha", -0.045),
                ("p", 60.0),
                ("s", 5.0),
                ("rho", 0.5),
                ("beta", 0.5),
                ("gamma", 0.5),
                ("sigma", 0.16),
                ("sigma_d", 1.0),
            ],
        };
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    /// Defaults overridden by `params`; unknown keys are rejected.
    pub fn resolve(self, params: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
        let mut merged = self.defaults();
        for (k, &v) in params {
            match merged.get_mut(k) {
                Some(slot) => *slot = v,
                None => return Err(SemError::UnknownParameter(k.clone())),
            }
        }
        Ok(merged)
    }

    pub fn build(self, params: &BTreeMap<String, f64>) -> Result<StructuralModel> {
        let p = Params(self.resolve(params)?);
        match self {
            Scenario::SmokingBias => smoking_bias(&p),
            Scenario::HeartTransplant => heart_transplant(&p),
            Scenario::GrowthHighdim => growth_highdim(&p),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = SemError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| SemError::UnknownScenario(s.to_string()))
    }
}

/// Builds the named preset with `params` overriding the defaults.
pub fn scenario(name: &str, params: &BTreeMap<String, f64>) -> Result<StructuralModel> {
    name.parse::<Scenario>()?.build(params)
}

/// The realized 20-patient transplant table: stratum `L` (1 = critical),
/// treatment `A` and death `Y`. Critical: 9 treated (6 deaths), 3 control
/// (2 deaths). Stable: 4 treated (1 death), 4 control (1 death).
pub fn heart_transplant_table() -> Dataset {
    let cells: [(f64, f64, f64, usize); 8] = [
        (1.0, 1.0, 1.0, 6),
        (1.0, 1.0, 0.0, 3),
        (1.0, 0.0, 1.0, 2),
        (1.0, 0.0, 0.0, 1),
        (0.0, 1.0, 1.0, 1),
        (0.0, 1.0, 0.0, 3),
        (0.0, 0.0, 1.0, 1),
        (0.0, 0.0, 0.0, 3),
    ];
    let (mut l, mut a, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (li, ai, yi, k) in cells {
        l.extend(std::iter::repeat_n(li, k));
        a.extend(std::iter::repeat_n(ai, k));
        y.extend(std::iter::repeat_n(yi, k));
    }
    Dataset::new(
        vec![("Y".into(), y), ("A".into(), a), ("L".into(), l)],
        Roles::new("Y", "A", &["L"]),
    )
    .expect("static table is well formed")
}

struct Params(BTreeMap<String, f64>);

impl Params {
    fn get(&self, name: &str, ok: impl Fn(f64) -> bool, range: &str) -> Result<f64> {
        let v = self.0[name];
        if v.is_finite() && ok(v) {
            Ok(v)
        } else {
            Err(SemError::InvalidParameter { name: name.into(), message: format!("{v} outside {range}") })
        }
    }

    fn prob(&self, name: &str) -> Result<f64> {
        self.get(name, |v| (0.0..=1.0).contains(&v), "[0, 1]")
    }

    fn count(&self, name: &str) -> Result<usize> {
        let v = self.get(name, |v| v >= 0.0 && v.fract() == 0.0 && v <= 1e6, "non-negative integers")?;
        Ok(v as usize)
    }
}

fn smoking_bias(p: &Params) -> Result<StructuralModel> {
    let rho = p.get("rho", |v| v > -1.0 && v < 0.0, "(-1, 0)")?;
    let eta1 = p.get("eta1", |_| true, "finite values")?;
    let mu = p.get("mu", |_| true, "finite values")?;
    let sd = p.get("sd", |v| v > 0.0, "(0, inf)")?;
    let nodes = vec![
        NodeSpec::exogenous("eta0", Noise::normal(mu, sd)).latent(),
        NodeSpec::linear(
            "nu",
            -rho * mu / sd,
            &[("eta0", rho / sd)],
            Noise::normal(0.0, (1.0 - rho * rho).sqrt()),
        )
        .latent(),
        NodeSpec::new(
            "D",
            Equation::Index { intercept: 0.0, terms: vec![Term::linear("nu", 1.0)], link: Link::Threshold(0.0) },
            Noise::none(),
        ),
        NodeSpec::linear("Y", 0.0, &[("eta0", 1.0), ("D", eta1)], Noise::none()),
    ];
    StructuralModel::new(nodes, Roles::new("Y", "D", &[]))
}

fn heart_transplant(p: &Params) -> Result<StructuralModel> {
    let q = p.prob("q")?;
    let pc = p.prob("p_treat_critical")?;
    let ps = p.prob("p_treat_stable")?;
    let rc = p.prob("risk_critical")?;
    let rs = p.prob("risk_stable")?;
    let effect = p.get("effect", |_| true, "finite values")?;
    for risk in [rc + effect, rs + effect] {
        if !(0.0..=1.0).contains(&risk) {
            return Err(SemError::InvalidParameter {
                name: "effect".into(),
                message: format!("treated risk {risk} outside [0, 1]"),
            });
        }
    }
    let nodes = vec![
        NodeSpec::exogenous("L", Noise::bernoulli(q)),
        NodeSpec::probability("A", ps, &[("L", pc - ps)]),
        NodeSpec::probability("Y", rs, &[("L", rc - rs), ("A", effect)]),
    ];
    StructuralModel::new(nodes, Roles::new("Y", "A", &["L"]))
}

fn growth_highdim(p: &Params) -> Result<StructuralModel> {
    let alpha = p.get("alpha", |_| true, "finite values")?;
    let dim = p.count("p")?;
    let s = p.count("s")?;
    let rho = p.get("rho", |v| v > -1.0 && v < 1.0, "(-1, 1)")?;
    let beta = p.get("beta", |_| true, "finite values")?;
    let gamma = p.get("gamma", |_| true, "finite values")?;
    let sigma = p.get("sigma", |v| v > 0.0, "(0, inf)")?;
    let sigma_d = p.get("sigma_d", |v| v > 0.0, "(0, inf)")?;
    if dim == 0 || s > dim {
        return Err(SemError::InvalidParameter {
            name: "p".into(),
            message: format!("need p >= 1 and p >= s, got p = {dim}, s = {s}"),
        });
    }
    let names: Vec<String> = (1..=dim).map(|j| format!("W{j}")).collect();
    let innovation = (1.0 - rho * rho).sqrt();
    let mut nodes = vec![NodeSpec::exogenous(&names[0], Noise::standard_normal())];
    for j in 1..dim {
        nodes.push(NodeSpec::linear(&names[j], 0.0, &[(&names[j - 1], rho)], Noise::normal(0.0, innovation)));
    }
    let relevant = |c: f64| -> Vec<(&str, f64)> { names[..s].iter().map(|n| (n.as_str(), c)).collect() };
    nodes.push(NodeSpec::linear("D", 0.0, &relevant(gamma), Noise::normal(0.0, sigma_d)));
    let mut y_terms = relevant(beta);
    y_terms.push(("D", alpha));
    nodes.push(NodeSpec::linear("Y", 0.0, &y_terms, Noise::normal(0.0, sigma)));
    let covariates: Vec<&str> = names.iter().map(String::as_str).collect();
    StructuralModel::new(nodes, Roles::new("Y", "D", &covariates))
}
