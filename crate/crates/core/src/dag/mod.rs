//! Directed acyclic graphs over named nodes and the identification queries
//! built on them: paths, blocking, d-separation, backdoor adjustment and
//! single-world intervention graphs.

mod backdoor;
mod dsep;
mod paths;
mod swig;
mod text;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

pub use backdoor::{BackdoorCheck, BackdoorFailure};
pub use paths::{Path, PathLimits, Step};
pub use swig::Swig;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DagError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("graph has a directed cycle through `{0}`")]
    Cycle(String),
    #[error("invalid node name `{0}`")]
    InvalidName(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, DagError>;

/// Which relatives of a node to collect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Parents,
    Children,
    /// Includes the node itself.
    Ancestors,
    /// Excludes the node itself.
    Descendants,
}

/// An immutable DAG. Nodes keep their declaration order internally; every
/// query result is reported in lexicographic order of node names.
#[derive(Clone, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

pub(crate) fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.chars().any(|c| c.is_whitespace() || c == '#' || c == ',')
        && !name.contains("->")
}

impl Dag {
    /// Builds a DAG from declared nodes and edges. Edge endpoints must be
    /// declared; use [`Dag::from_edges`] to declare on first use.
    pub fn new<N, E, S, T>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = S>,
        E: IntoIterator<Item = (T, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut names = Vec::new();
        let mut index = BTreeMap::new();
        for n in nodes {
            let n = n.as_ref();
            if !valid_name(n) {
                return Err(DagError::InvalidName(n.to_string()));
            }
            if index.insert(n.to_string(), names.len()).is_some() {
                return Err(DagError::DuplicateNode(n.to_string()));
            }
            names.push(n.to_string());
        }
        let mut parents = vec![Vec::new(); names.len()];
        let mut children = vec![Vec::new(); names.len()];
        for (a, b) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            let ia = *index.get(a).ok_or_else(|| DagError::UnknownNode(a.to_string()))?;
            let ib = *index.get(b).ok_or_else(|| DagError::UnknownNode(b.to_string()))?;
            if ia == ib {
                return Err(DagError::SelfLoop(a.to_string()));
            }
            if children[ia].contains(&ib) {
                return Err(DagError::DuplicateEdge(a.to_string(), b.to_string()));
            }
            children[ia].push(ib);
            parents[ib].push(ia);
        }
        let mut dag = Dag {
            names,
            index,
            parents,
            children,
            topo: Vec::new(),
        };
        // neighbour lists sorted by name so traversals are deterministic
        for list in dag.parents.iter_mut().chain(dag.children.iter_mut()) {
            list.sort_by(|&x, &y| dag.names[x].cmp(&dag.names[y]));
        }
        dag.topo = dag.topological_order()?;
        Ok(dag)
    }

    /// Builds a DAG declaring nodes in order of first appearance in `edges`.
    pub fn from_edges<E, S>(edges: E) -> Result<Self>
    where
        E: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let edges: Vec<(String, String)> = edges
            .into_iter()
            .map(|(a, b)| (a.as_ref().to_string(), b.as_ref().to_string()))
            .collect();
        let mut nodes: Vec<String> = Vec::new();
        for (a, b) in &edges {
            for n in [a, b] {
                if !nodes.contains(n) {
                    nodes.push(n.clone());
                }
            }
        }
        Dag::new(nodes, edges)
    }

    fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.names.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        // Kahn's algorithm, ties broken by declaration order
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap_or(0);
            return Err(DagError::Cycle(self.names[stuck].clone()));
        }
        Ok(order)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Node names in declaration order.
    pub fn nodes(&self) -> &[String] {
        &self.names
    }

    /// Edges as (from, to) pairs, sorted.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .children
            .iter()
            .enumerate()
            .flat_map(|(a, cs)| cs.iter().map(move |&b| (a, b)))
            .map(|(a, b)| (self.names[a].clone(), self.names[b].clone()))
            .collect();
        out.sort();
        out
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&a), Some(&b)) => self.children[a].contains(&b),
            _ => false,
        }
    }

    pub(crate) fn id(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| DagError::UnknownNode(name.to_string()))
    }

    pub(crate) fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub(crate) fn parent_ids(&self, id: usize) -> &[usize] {
        &self.parents[id]
    }

    pub(crate) fn child_ids(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    /// Node indices in a topological order (parents before children).
    pub(crate) fn topo_ids(&self) -> &[usize] {
        &self.topo
    }

    /// Node names in topological order.
    pub fn topological(&self) -> Vec<&str> {
        self.topo.iter().map(|&i| self.names[i].as_str()).collect()
    }

    pub(crate) fn ids_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    pub(crate) fn sorted_names(&self, ids: impl IntoIterator<Item = usize>) -> Vec<String> {
        let mut v: Vec<String> = ids.into_iter().map(|i| self.names[i].clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Relatives of `node`, sorted by name.
    pub fn relatives(&self, node: &str, kind: Relation) -> Result<Vec<String>> {
        let id = self.id(node)?;
        let ids: Vec<usize> = match kind {
            Relation::Parents => self.parents[id].clone(),
            Relation::Children => self.children[id].clone(),
            Relation::Ancestors => self.reach(&[id], |v| &self.parents[v]),
            Relation::Descendants => {
                let mut d = self.reach(&[id], |v| &self.children[v]);
                d.retain(|&v| v != id);
                d
            }
        };
        Ok(self.sorted_names(ids))
    }

    pub fn parents(&self, node: &str) -> Result<Vec<String>> {
        self.relatives(node, Relation::Parents)
    }

    pub fn children(&self, node: &str) -> Result<Vec<String>> {
        self.relatives(node, Relation::Children)
    }

    pub fn ancestors(&self, node: &str) -> Result<Vec<String>> {
        self.relatives(node, Relation::Ancestors)
    }

    pub fn descendants(&self, node: &str) -> Result<Vec<String>> {
        self.relatives(node, Relation::Descendants)
    }

    /// Seeds plus everything reachable through `next`.
    fn reach<'a, F>(&'a self, seeds: &[usize], next: F) -> Vec<usize>
    where
        F: Fn(usize) -> &'a Vec<usize>,
    {
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in seeds {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &w in next(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    /// Membership mask of the ancestors of `seeds`, seeds included.
    pub(crate) fn ancestor_mask(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for v in self.reach(seeds, |v| &self.parents[v]) {
            mask[v] = true;
        }
        mask
    }

    /// Membership mask of the descendants of `id`, `id` excluded.
    pub(crate) fn descendant_mask(&self, id: usize) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for v in self.reach(&[id], |v| &self.children[v]) {
            mask[v] = true;
        }
        mask[id] = false;
        mask
    }

    /// Copy of the graph with all edges into `node` removed.
    pub fn without_incoming(&self, node: &str) -> Result<Dag> {
        let id = self.id(node)?;
        let edges: Vec<(String, String)> = self
            .edges()
            .into_iter()
            .filter(|(_, b)| b != &self.names[id])
            .collect();
        Dag::new(self.names.clone(), edges)
    }

    /// Copy of the graph with all edges out of `node` removed.
    pub fn without_outgoing(&self, node: &str) -> Result<Dag> {
        let id = self.id(node)?;
        let edges: Vec<(String, String)> = self
            .edges()
            .into_iter()
            .filter(|(a, _)| a != &self.names[id])
            .collect();
        Dag::new(self.names.clone(), edges)
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dag")
            .field("nodes", &self.names)
            .field("edges", &self.edges())
            .finish()
    }
}
