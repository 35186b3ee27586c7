use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Dag, DagError, Result};

/// Orientation of one step along a path relative to the underlying edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    /// `a -> b`
    Forward,
    /// `a <- b`
    Backward,
}

/// A simple path: consecutive nodes are adjacent, no node repeats.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<String>,
    pub steps: Vec<Step>,
}

/// Bounds on exhaustive path enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathLimits {
    /// Longest path reported, counted in nodes.
    pub max_nodes: usize,
}

impl Default for PathLimits {
    fn default() -> Self {
        PathLimits { max_nodes: 12 }
    }
}

impl Path {
    pub fn first(&self) -> &str {
        &self.nodes[0]
    }

    pub fn last(&self) -> &str {
        &self.nodes[self.nodes.len() - 1]
    }

    /// Parses `A -> B <- C` notation.
    pub fn parse(text: &str) -> Result<Path> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() < 3 || tokens.len().is_multiple_of(2) {
            return Err(DagError::InvalidPath(text.to_string()));
        }
        let mut nodes = vec![tokens[0].to_string()];
        let mut steps = Vec::new();
        for pair in tokens[1..].chunks(2) {
            let step = match pair[0] {
                "->" => Step::Forward,
                "<-" => Step::Backward,
                _ => return Err(DagError::InvalidPath(text.to_string())),
            };
            steps.push(step);
            nodes.push(pair[1].to_string());
        }
        Ok(Path { nodes, steps })
    }

    /// True iff the middle node at interior position `i` is a collider.
    pub fn is_collider_at(&self, i: usize) -> bool {
        i > 0
            && i + 1 < self.nodes.len()
            && self.steps[i - 1] == Step::Forward
            && self.steps[i] == Step::Backward
    }

    /// Checks that the path is simple and follows existing edges of `dag`.
    pub fn validate(&self, dag: &Dag) -> Result<()> {
        if self.nodes.len() < 2 || self.steps.len() + 1 != self.nodes.len() {
            return Err(DagError::InvalidPath(self.to_string()));
        }
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            dag.id(n)?;
            if !seen.insert(n) {
                return Err(DagError::InvalidPath(format!("{self}: repeats `{n}`")));
            }
        }
        for (i, step) in self.steps.iter().enumerate() {
            let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
            let ok = match step {
                Step::Forward => dag.has_edge(a, b),
                Step::Backward => dag.has_edge(b, a),
            };
            if !ok {
                return Err(DagError::InvalidPath(format!("{self}: no such edge at `{a}`")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.nodes[0])?;
        for (step, node) in self.steps.iter().zip(&self.nodes[1..]) {
            let arrow = match step {
                Step::Forward => "->",
                Step::Backward => "<-",
            };
            write!(f, " {arrow} {node}")?;
        }
        Ok(())
    }
}

impl Dag {
    /// All simple non-directed paths between `a` and `b`, ordered
    /// lexicographically by node sequence.
    pub fn enumerate_paths(&self, a: &str, b: &str) -> Result<Vec<Path>> {
        self.enumerate_paths_with(a, b, PathLimits::default())
    }

    pub fn enumerate_paths_with(&self, a: &str, b: &str, limits: PathLimits) -> Result<Vec<Path>> {
        let (ia, ib) = (self.id(a)?, self.id(b)?);
        if ia == ib {
            return Err(DagError::Argument(format!("path endpoints coincide (`{a}`)")));
        }
        let mut out = Vec::new();
        let mut on_path = vec![false; self.len()];
        let mut nodes = vec![ia];
        let mut steps = Vec::new();
        on_path[ia] = true;
        self.extend_paths(ib, limits.max_nodes, &mut on_path, &mut nodes, &mut steps, &mut out);
        out.sort_by(|x, y| x.nodes.cmp(&y.nodes));
        Ok(out)
    }

    fn extend_paths(
        &self,
        target: usize,
        max_nodes: usize,
        on_path: &mut [bool],
        nodes: &mut Vec<usize>,
        steps: &mut Vec<Step>,
        out: &mut Vec<Path>,
    ) {
        let v = *nodes.last().unwrap();
        if v == target {
            out.push(Path {
                nodes: nodes.iter().map(|&i| self.name(i).to_string()).collect(),
                steps: steps.clone(),
            });
            return;
        }
        if nodes.len() >= max_nodes {
            return;
        }
        let forward = self.child_ids(v).iter().map(|&w| (w, Step::Forward));
        let backward = self.parent_ids(v).iter().map(|&w| (w, Step::Backward));
        let next: Vec<(usize, Step)> = forward.chain(backward).collect();
        for (w, step) in next {
            if on_path[w] {
                continue;
            }
            on_path[w] = true;
            nodes.push(w);
            steps.push(step);
            self.extend_paths(target, max_nodes, on_path, nodes, steps, out);
            steps.pop();
            nodes.pop();
            on_path[w] = false;
        }
    }

    /// Whether `s` blocks `path`: some chain or fork has its middle node in
    /// `s`, or some collider has neither itself nor a descendant in `s`.
    pub fn path_blocked<S: AsRef<str>>(&self, path: &Path, s: &[S]) -> Result<bool> {
        path.validate(self)?;
        let cond = self.ids_of(s)?;
        let mut in_s = vec![false; self.len()];
        for &c in &cond {
            in_s[c] = true;
        }
        // a collider is opened by conditioning on it or any descendant,
        // i.e. exactly when it is an ancestor (self included) of s
        let opened = self.ancestor_mask(&cond);
        for i in 1..path.nodes.len() - 1 {
            let m = self.id(&path.nodes[i])?;
            if path.is_collider_at(i) {
                if !opened[m] {
                    return Ok(true);
                }
            } else if in_s[m] {
                return Ok(true);
            }
        }
        Ok(false)
    }
}
