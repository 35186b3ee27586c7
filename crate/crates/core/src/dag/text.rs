//! Line-oriented DAG text format.
//!
//! ```text
//! # comment
//! node A
//! A -> B
//! ```
//!
//! Nodes are declared on first use; `node` lines fix declaration order and
//! allow isolated nodes.

use std::fmt;
use std::str::FromStr;

use super::{valid_name, Dag, DagError, Result};

impl Dag {
    pub fn parse(text: &str) -> Result<Dag> {
        let mut nodes: Vec<String> = Vec::new();
        let mut edges: Vec<(String, String)> = Vec::new();
        let declare = |nodes: &mut Vec<String>, n: &str| {
            if !nodes.iter().any(|m| m == n) {
                nodes.push(n.to_string());
            }
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| DagError::Parse { line: lineno + 1, message };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                ["node", name] => {
                    if !valid_name(name) {
                        return Err(err(format!("invalid node name `{name}`")));
                    }
                    declare(&mut nodes, name);
                }
                [a, "->", b] => {
                    for n in [a, b] {
                        if !valid_name(n) {
                            return Err(err(format!("invalid node name `{n}`")));
                        }
                    }
                    if edges.iter().any(|(x, y)| x == a && y == b) {
                        return Err(err(format!("duplicate edge {a} -> {b}")));
                    }
                    declare(&mut nodes, a);
                    declare(&mut nodes, b);
                    edges.push((a.to_string(), b.to_string()));
                }
                _ => return Err(err(format!("expected `node NAME` or `A -> B`, got `{line}`"))),
            }
        }
        Dag::new(nodes, edges).map_err(|e| match e {
            e @ DagError::Parse { .. } => e,
            other => DagError::Parse { line: 0, message: other.to_string() },
        })
    }

    /// Declarations then edges, each sorted.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<&String> = self.nodes().iter().collect();
        names.sort();
        for n in names {
            writeln!(f, "node {n}")?;
        }
        for (a, b) in self.edges() {
            writeln!(f, "{a} -> {b}")?;
        }
        Ok(())
    }
}

impl FromStr for Dag {
    type Err = DagError;

    fn from_str(s: &str) -> Result<Dag> {
        Dag::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_comments_and_declarations() {
        let g = Dag::parse("# example\nnode Q\nZ -> X  # edge\n\nU -> X\nU -> Y\nZ -> Y\n").unwrap();
        assert_eq!(g.len(), 5);
        assert!(g.has_edge("Z", "Y"));
        assert!(g.parents("Q").unwrap().is_empty());
    }

    #[test]
    fn serialization_is_sorted() {
        let g = Dag::parse("B -> A\nnode C\nA -> C\n").unwrap();
        assert_eq!(g.to_text(), "node A\nnode B\nnode C\nA -> C\nB -> A\n");
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        match Dag::parse("A -> B\nA => C\n") {
            Err(DagError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Dag::parse("A -> B\nA -> B\n"), Err(DagError::Parse { line: 2, .. })));
        assert!(matches!(Dag::parse("A -> B\nB -> A\n"), Err(DagError::Parse { .. })));
        assert!(matches!(Dag::parse("A ->\n"), Err(DagError::Parse { line: 1, .. })));
    }

    fn arb_dag() -> impl Strategy<Value = Dag> {
        (1usize..8, proptest::collection::vec(any::<bool>(), 28)).prop_map(|(n, bits)| {
            let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if bits[k % bits.len()] {
                        edges.push((names[i].clone(), names[j].clone()));
                    }
                    k += 1;
                }
            }
            Dag::new(&names, edges).unwrap()
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(g in arb_dag()) {
            let back = Dag::parse(&g.to_text()).unwrap();
            prop_assert_eq!(back.edges(), g.edges());
            let mut a = back.nodes().to_vec();
            let mut b = g.nodes().to_vec();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            prop_assert_eq!(back.to_text(), g.to_text());
        }
    }
}
