//! How many candidates compile, counted two ways: per model, and per problem
//! where any model's candidate counts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Candidate, FinalStatus};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub valid: usize,
    pub total: usize,
}

impl Tally {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.valid as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub per_model: BTreeMap<String, Tally>,
    /// Problems with at least one valid candidate, over all problems seen.
    pub ensemble: Tally,
}

pub fn validity(candidates: &[Candidate]) -> Validity {
    let mut per_model: BTreeMap<String, Tally> = BTreeMap::new();
    let mut problems = BTreeSet::new();
    let mut solved = BTreeSet::new();
    for c in candidates {
        let ok = c.final_status == FinalStatus::Valid;
        let t = per_model.entry(c.model.clone()).or_default();
        t.total += 1;
        t.valid += usize::from(ok);
        problems.insert(c.problem_id.as_str());
        if ok {
            solved.insert(c.problem_id.as_str());
        }
    }
    Validity {
        per_model,
        ensemble: Tally {
            valid: solved.len(),
            total: problems.len(),
        },
    }
}
