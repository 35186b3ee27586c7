use std::collections::VecDeque;

use super::{Dag, DagError, PathLimits, Result};

impl Dag {
    fn check_dsep_args<S: AsRef<str>>(&self, x: &str, y: &str, s: &[S]) -> Result<(usize, usize, Vec<usize>)> {
        let (ix, iy) = (self.id(x)?, self.id(y)?);
        if ix == iy {
            return Err(DagError::Argument(format!("`{x}` tested against itself")));
        }
        let cond = self.ids_of(s)?;
        if cond.contains(&ix) || cond.contains(&iy) {
            return Err(DagError::Argument(
                "conditioning set overlaps the tested nodes".to_string(),
            ));
        }
        Ok((ix, iy, cond))
    }

    /// d-separation of `x` and `y` given `s`, by a linear-time reachability
    /// search over (node, direction of arrival) states.
    pub fn d_separated<S: AsRef<str>>(&self, x: &str, y: &str, s: &[S]) -> Result<bool> {
        let (ix, iy, cond) = self.check_dsep_args(x, y, s)?;
        Ok(!self.active_reach(ix, &cond)[iy])
    }

    /// The same query answered by enumerating every simple path and testing
    /// each for blocking. Exponential; kept as a cross-check.
    pub fn d_separated_by_paths<S: AsRef<str>>(&self, x: &str, y: &str, s: &[S]) -> Result<bool> {
        self.check_dsep_args(x, y, s)?;
        let limits = PathLimits { max_nodes: self.len() };
        for path in self.enumerate_paths_with(x, y, limits)? {
            if !self.path_blocked(&path, s)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Nodes connected to `source` by an open path given `cond`.
    pub(crate) fn active_reach(&self, source: usize, cond: &[usize]) -> Vec<bool> {
        let n = self.len();
        let mut in_s = vec![false; n];
        for &c in cond {
            in_s[c] = true;
        }
        let opens_collider = self.ancestor_mask(cond);

        // state index: 2*v for "arrived from a child", 2*v+1 for "arrived from a parent"
        let mut visited = vec![false; 2 * n];
        let mut reached = vec![false; n];
        let mut queue = VecDeque::new();
        visited[2 * source] = true;
        queue.push_back((source, true));
        while let Some((v, from_child)) = queue.pop_front() {
            if !in_s[v] {
                reached[v] = true;
            }
            let mut push = |w: usize, up: bool, q: &mut VecDeque<(usize, bool)>| {
                let k = if up { 2 * w } else { 2 * w + 1 };
                if !visited[k] {
                    visited[k] = true;
                    q.push_back((w, up));
                }
            };
            if from_child {
                if !in_s[v] {
                    for &p in self.parent_ids(v) {
                        push(p, true, &mut queue);
                    }
                    for &c in self.child_ids(v) {
                        push(c, false, &mut queue);
                    }
                }
            } else {
                if !in_s[v] {
                    for &c in self.child_ids(v) {
                        push(c, false, &mut queue);
                    }
                }
                if opens_collider[v] {
                    for &p in self.parent_ids(v) {
                        push(p, true, &mut queue);
                    }
                }
            }
        }
        reached[source] = false;
        reached
    }
}
