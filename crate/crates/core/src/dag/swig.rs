use std::collections::BTreeMap;

use super::{valid_name, Dag, DagError, Result};

/// Single-world intervention graph produced by splitting one node into a
/// natural half (keeps the incoming edges) and a fixed half (keeps the
/// outgoing edges). Descendants of the split node become counterfactual
/// variables and are renamed `name(label)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Swig {
    pub base: Dag,
    pub graph: Dag,
    pub split_node: String,
    /// `D*`: the pre-intervention value, childless.
    pub natural_node: String,
    /// Carries the fixed value; has no parents.
    pub intervention_node: String,
    pub fixed_label: String,
    renamed: BTreeMap<String, String>,
}

impl Swig {
    /// Name in the SWIG of an original node other than the split node.
    pub fn node_name(&self, original: &str) -> Option<&str> {
        self.renamed.get(original).map(String::as_str)
    }

    pub fn d_separated<S: AsRef<str>>(&self, x: &str, y: &str, s: &[S]) -> Result<bool> {
        self.graph.d_separated(x, y, s)
    }
}

impl Dag {
    /// Splits `node` for the intervention that fixes it to `label`.
    pub fn make_swig(&self, node: &str, label: &str) -> Result<Swig> {
        let split = self.id(node)?;
        if !valid_name(label) {
            return Err(DagError::InvalidName(label.to_string()));
        }
        let desc = self.descendant_mask(split);
        let natural = format!("{node}*");
        let mut renamed = BTreeMap::new();
        for (i, name) in self.nodes().iter().enumerate() {
            if i == split {
                continue;
            }
            let new = if desc[i] { format!("{name}({label})") } else { name.clone() };
            renamed.insert(name.clone(), new);
        }
        let mut nodes: Vec<String> = Vec::with_capacity(self.len() + 1);
        for (i, name) in self.nodes().iter().enumerate() {
            if i == split {
                nodes.push(natural.clone());
                nodes.push(label.to_string());
            } else {
                nodes.push(renamed[name].clone());
            }
        }
        let mut edges = Vec::new();
        for (a, b) in self.edges() {
            let from = if a == node { label.to_string() } else { renamed[&a].clone() };
            let to = if b == node { natural.clone() } else { renamed[&b].clone() };
            edges.push((from, to));
        }
        let graph = Dag::new(&nodes, edges).map_err(|e| match e {
            DagError::DuplicateNode(n) => {
                DagError::Argument(format!("SWIG node name `{n}` collides with an existing node"))
            }
            other => other,
        })?;
        Ok(Swig {
            base: self.clone(),
            graph,
            split_node: node.to_string(),
            natural_node: natural,
            intervention_node: label.to_string(),
            fixed_label: label.to_string(),
            renamed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::backdoor_figure;
    use super::*;

    #[test]
    fn superfluous_control_split() {
        let g = Dag::from_edges([("D", "Z"), ("D", "Y")]).unwrap();
        let s = g.make_swig("D", "d").unwrap();
        assert_eq!(
            s.graph.edges(),
            vec![("d".to_string(), "Y(d)".to_string()), ("d".to_string(), "Z(d)".to_string())]
        );
        assert!(s.graph.contains("D*"));
        assert!(s.graph.parents("D*").unwrap().is_empty());
        assert!(s.graph.children("D*").unwrap().is_empty());
        assert!(s.d_separated("Y(d)", "D*", &["Z(d)"]).unwrap());
        assert!(s.d_separated("Y(d)", "D*", &[] as &[&str]).unwrap());
    }

    #[test]
    fn figure_swig_exogeneity_given_x1_x2() {
        let g = backdoor_figure();
        let s = g.make_swig("D", "d").unwrap();
        assert_eq!(s.node_name("Y"), Some("Y(d)"));
        assert_eq!(s.node_name("X1"), Some("X1"));
        assert_eq!(s.graph.parents("D*").unwrap(), vec!["X1", "X2"]);
        assert_eq!(s.graph.children("d").unwrap(), vec!["M(d)"]);
        assert!(s.d_separated("Y(d)", "D*", &["X1", "X2"]).unwrap());
        assert!(!s.d_separated("Y(d)", "D*", &["X2"]).unwrap());
    }

    #[test]
    fn isolated_node_split() {
        let g = Dag::new(["A", "B"], Vec::<(&str, &str)>::new()).unwrap();
        let s = g.make_swig("A", "a").unwrap();
        assert!(s.graph.edges().is_empty());
        assert_eq!(s.graph.len(), 3);
    }

    #[test]
    fn unknown_node_and_collisions() {
        let g = Dag::from_edges([("D", "Y"), ("d", "Y")]).unwrap();
        assert!(matches!(g.make_swig("Q", "q"), Err(DagError::UnknownNode(_))));
        assert!(matches!(g.make_swig("D", "d"), Err(DagError::Argument(_))));
    }
}
