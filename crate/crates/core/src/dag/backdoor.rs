use serde::Serialize;

use super::{Dag, DagError, Path, Result, Step};

/// Why a candidate adjustment set fails the backdoor criterion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum BackdoorFailure {
    /// The set contains a descendant of the treatment.
    DescendantOfTreatment { node: String },
    /// Some backdoor path stays open; `witness` is the first such path in
    /// lexicographic order, if one was found within the enumeration limits.
    OpenBackdoorPath { witness: Option<Path> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BackdoorCheck {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<BackdoorFailure>,
}

impl Dag {
    /// Simple paths from `d` to `y` whose first edge points into `d`.
    pub fn backdoor_paths(&self, d: &str, y: &str) -> Result<Vec<Path>> {
        let mut paths = self.enumerate_paths(d, y)?;
        paths.retain(|p| p.steps[0] == Step::Backward);
        Ok(paths)
    }

    /// Backdoor criterion for adjusting on `s` when estimating the effect of
    /// `d` on `y`.
    pub fn is_valid_backdoor_set<S: AsRef<str>>(&self, d: &str, y: &str, s: &[S]) -> Result<BackdoorCheck> {
        let (id, iy) = (self.id(d)?, self.id(y)?);
        if id == iy {
            return Err(DagError::Argument(format!("treatment and outcome coincide (`{d}`)")));
        }
        let cond = self.ids_of(s)?;
        if cond.contains(&id) || cond.contains(&iy) {
            return Err(DagError::Argument(
                "adjustment set contains the treatment or the outcome".to_string(),
            ));
        }
        let desc = self.descendant_mask(id);
        let mut offending: Vec<String> = cond
            .iter()
            .filter(|&&c| desc[c])
            .map(|&c| self.name(c).to_string())
            .collect();
        offending.sort();
        if let Some(node) = offending.into_iter().next() {
            return Ok(BackdoorCheck {
                valid: false,
                failure: Some(BackdoorFailure::DescendantOfTreatment { node }),
            });
        }
        if self.backdoor_blocked(id, iy, &cond)? {
            return Ok(BackdoorCheck { valid: true, failure: None });
        }
        let mut witness = None;
        for path in self.backdoor_paths(d, y)? {
            if !self.path_blocked(&path, s)? {
                witness = Some(path);
                break;
            }
        }
        Ok(BackdoorCheck {
            valid: false,
            failure: Some(BackdoorFailure::OpenBackdoorPath { witness }),
        })
    }

    /// Every backdoor path blocked by `cond`. With no descendants of `d` in
    /// `cond` this is d-separation in the graph with `d`'s out-edges removed.
    fn backdoor_blocked(&self, d: usize, y: usize, cond: &[usize]) -> Result<bool> {
        let cut = self.without_outgoing(self.name(d))?;
        Ok(!cut.active_reach(d, cond)[y])
    }

    /// All inclusion-minimal valid adjustment sets with at most `max_size`
    /// members, ordered by size and then lexicographically.
    pub fn minimal_backdoor_sets(&self, d: &str, y: &str, max_size: usize) -> Result<Vec<Vec<String>>> {
        let (id, iy) = (self.id(d)?, self.id(y)?);
        if id == iy {
            return Err(DagError::Argument(format!("treatment and outcome coincide (`{d}`)")));
        }
        let desc = self.descendant_mask(id);
        let mut candidates: Vec<usize> = (0..self.len())
            .filter(|&v| v != id && v != iy && !desc[v])
            .collect();
        candidates.sort_by(|&a, &b| self.name(a).cmp(self.name(b)));

        let cut = self.without_outgoing(d)?;
        let mut found: Vec<Vec<usize>> = Vec::new();
        for size in 0..=max_size.min(candidates.len()) {
            let mut level: Vec<Vec<usize>> = Vec::new();
            for_each_combination(candidates.len(), size, |idx| {
                let set: Vec<usize> = idx.iter().map(|&i| candidates[i]).collect();
                if found.iter().any(|f| f.iter().all(|v| set.contains(v))) {
                    return;
                }
                if !cut.active_reach(id, &set)[iy] {
                    level.push(set);
                }
            });
            found.extend(level);
        }
        let mut out: Vec<Vec<String>> = found
            .into_iter()
            .map(|set| self.sorted_names(set))
            .collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(out)
    }
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // rightmost position that can still advance
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
