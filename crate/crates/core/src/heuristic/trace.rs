use serde::{Deserialize, Serialize};

/// A kernel set identified by bank indices and spec strings, with its CV
/// accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSet {
    pub indices: Vec<usize>,
    pub kernels: Vec<String>,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    EmptyCandidates,
    EmptyBestSubset,
    AllSelected,
}

/// One pass of steps 2–4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionIteration {
    /// `S` at the start of the pass, with its score.
    pub selected: ScoredSet,
    /// Per view: each unselected kernel `k` with the score of `S ∪ {k}`.
    pub pools: Vec<Vec<ScoredSet>>,
    /// At most one strictly improving kernel per view.
    pub candidates: Vec<ScoredSet>,
    /// Every subset `B` of the candidates (scores are of `S ∪ B`).
    pub subsets: Vec<ScoredSet>,
    pub best_subset: ScoredSet,
    /// Best CV accuracy after the pass.
    pub best_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    /// Step 1: every kernel scored alone.
    pub singles: Vec<ScoredSet>,
    pub initial: ScoredSet,
    pub iterations: Vec<SelectionIteration>,
    pub selected: ScoredSet,
    pub evaluate_calls: usize,
    pub classifier_train_count: usize,
    pub terminated_reason: TerminationReason,
    pub warnings: Vec<String>,
}

impl SelectionTrace {
    /// `S` after step 1 and after each accepted pass.
    pub fn selected_sets(&self) -> Vec<ScoredSet> {
        let mut out = vec![self.initial.clone()];
        for it in &self.iterations {
            if !it.best_subset.indices.is_empty() {
                let mut next: Vec<usize> = it.selected.indices.clone();
                next.extend(&it.best_subset.indices);
                next.sort_unstable();
                let kernels = self.name_lookup(&next);
                out.push(ScoredSet {
                    indices: next,
                    kernels,
                    score: it.best_score,
                });
            }
        }
        out
    }

    fn name_lookup(&self, indices: &[usize]) -> Vec<String> {
        indices
            .iter()
            .map(|&m| {
                self.singles
                    .iter()
                    .find(|s| s.indices == [m])
                    .map(|s| s.kernels[0].clone())
                    .unwrap_or_else(|| format!("#{m}"))
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
