use crate::dataio::FoldAssignment;
use crate::error::{Error, Result};
use crate::kernels::KernelBank;
use crate::mkl::MklParams;
use crate::scalar::Scalar;

use super::evaluator::{CvEvaluator, FoldGrams};
use super::trace::{ScoredSet, SelectionIteration, SelectionTrace, TerminationReason};

/// Selected bank indices (sorted) with the audit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub trace: SelectionTrace,
}

struct Scorer<'a, T> {
    bank: &'a KernelBank<T>,
}

impl<T: Scalar> Scorer<'_, T> {
    fn names(&self, set: &[usize]) -> Vec<String> {
        set.iter().map(|&m| self.bank.spec(m).to_string()).collect()
    }

    fn scored(&self, indices: Vec<usize>, score: f64) -> ScoredSet {
        ScoredSet {
            kernels: self.names(&indices),
            indices,
            score,
        }
    }

    fn union(s: &[usize], extra: &[usize]) -> Vec<usize> {
        let mut u: Vec<usize> = s.iter().chain(extra).copied().collect();
        u.sort_unstable();
        u.dedup();
        u
    }
}

/// Greedy selection over the bank's kernels.
///
/// 1. For each view, the best single kernel joins `S`.
/// 2. Every unselected kernel `k` is scored as `S ∪ {k}`.
/// 3. Per view, the kernel with the largest strict improvement over `S`
///    becomes a candidate.
/// 4. Every subset `B` of the candidates (including `∅`) is scored as
///    `S ∪ B`; the best one joins `S` (ties: fewer kernels, then the
///    lexicographically smallest indices).
///
/// Steps 2–4 repeat until no candidate exists, the best subset is empty or
/// every kernel is selected. `params.p` is the MKL norm used for scoring.
pub fn select_kernels<T: Scalar>(
    bank: &KernelBank<T>,
    labels: &[usize],
    folds: &FoldAssignment,
    params: &MklParams<T>,
) -> Result<Selection> {
    if bank.is_empty() {
        return Err(Error::Invalid("kernel bank is empty".into()));
    }
    if labels.len() != bank.n_samples() {
        return Err(Error::Dimension(format!(
            "{} labels for a bank over {} samples",
            labels.len(),
            bank.n_samples()
        )));
    }
    let data = FoldGrams::new(bank.specs(), bank.grams(), labels, folds)?;
    select_kernels_on(bank, &data, params)
}

/// [`select_kernels`] over fold blocks already cut from `bank`.
pub fn select_kernels_on<T: Scalar>(
    bank: &KernelBank<T>,
    data: &FoldGrams<T>,
    params: &MklParams<T>,
) -> Result<Selection> {
    if bank.is_empty() || data.n_kernels() != bank.len() {
        return Err(Error::Invalid(format!(
            "fold blocks cover {} kernels, bank has {}",
            data.n_kernels(),
            bank.len()
        )));
    }
    let eval = CvEvaluator::new(data, *params);
    let sc = Scorer { bank };
    let views: Vec<Vec<usize>> = (0..bank.n_views()).map(|f| bank.kernels_of_view(f)).collect();

    // Step 1.
    let single_sets: Vec<Vec<usize>> = (0..bank.len()).map(|m| vec![m]).collect();
    let single_scores = eval.evaluate_many(&single_sets)?;
    let singles: Vec<ScoredSet> = single_sets
        .into_iter()
        .zip(&single_scores)
        .map(|(s, &v)| sc.scored(s, v))
        .collect();
    let mut selected: Vec<usize> = views
        .iter()
        .filter_map(|ks| argmax_first(ks.iter().map(|&m| (m, single_scores[m]))))
        .map(|(m, _)| m)
        .collect();
    selected.sort_unstable();
    let mut score = eval.evaluate(&selected)?;
    let initial = sc.scored(selected.clone(), score);
    log::info!("initial selection {:?} scores {score:.4}", sc.names(&selected));

    let mut iterations = Vec::new();
    let reason = loop {
        if selected.len() == bank.len() {
            break TerminationReason::AllSelected;
        }
        // Step 2.
        let pool_sets: Vec<Vec<usize>> = (0..bank.len())
            .filter(|m| !selected.contains(m))
            .map(|m| Scorer::<T>::union(&selected, &[m]))
            .collect();
        eval.evaluate_many(&pool_sets)?;
        let mut pools = Vec::with_capacity(views.len());
        let mut candidates = Vec::new();
        for ks in &views {
            let mut pool = Vec::new();
            let mut best: Option<(usize, f64)> = None;
            for &m in ks.iter().filter(|m| !selected.contains(m)) {
                let v = eval.evaluate(&Scorer::<T>::union(&selected, &[m]))?;
                pool.push(sc.scored(vec![m], v));
                // Step 3: strict improvement, ties to the lower index.
                if v > score && best.is_none_or(|(_, b)| v > b) {
                    best = Some((m, v));
                }
            }
            if let Some((m, v)) = best {
                candidates.push(sc.scored(vec![m], v));
            }
            pools.push(pool);
        }
        let before = sc.scored(selected.clone(), score);
        if candidates.is_empty() {
            iterations.push(SelectionIteration {
                selected: before,
                pools,
                candidates,
                subsets: Vec::new(),
                best_subset: sc.scored(Vec::new(), score),
                best_score: score,
            });
            break TerminationReason::EmptyCandidates;
        }

        // Step 4.
        let cand: Vec<usize> = candidates.iter().map(|c| c.indices[0]).collect();
        let subsets = all_subsets(&cand);
        let unions: Vec<Vec<usize>> = subsets
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| Scorer::<T>::union(&selected, b))
            .collect();
        eval.evaluate_many(&unions)?;
        let mut scored_subsets = Vec::with_capacity(subsets.len());
        for b in subsets {
            let v = if b.is_empty() {
                score
            } else {
                eval.evaluate(&Scorer::<T>::union(&selected, &b))?
            };
            scored_subsets.push(sc.scored(b, v));
        }
        let best = scored_subsets
            .iter()
            .fold(None::<&ScoredSet>, |acc, s| match acc {
                None => Some(s),
                Some(a) if better_subset(s, a) => Some(s),
                keep => keep,
            })
            .expect("subsets include the empty set")
            .clone();
        let accepted = !best.indices.is_empty();
        let new_score = if accepted { best.score } else { score };
        iterations.push(SelectionIteration {
            selected: before,
            pools,
            candidates,
            subsets: scored_subsets,
            best_subset: best.clone(),
            best_score: new_score,
        });
        if !accepted {
            break TerminationReason::EmptyBestSubset;
        }
        selected = Scorer::<T>::union(&selected, &best.indices);
        score = new_score;
        log::info!("selection grew to {:?} ({score:.4})", sc.names(&selected));
    };

    let trace = SelectionTrace {
        singles,
        initial,
        iterations,
        selected: sc.scored(selected.clone(), score),
        evaluate_calls: eval.evaluate_calls(),
        classifier_train_count: eval.classifier_trainings(),
        terminated_reason: reason,
        warnings: eval.warnings(),
    };
    Ok(Selection {
        indices: selected,
        trace,
    })
}

fn argmax_first(items: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    items.fold(None, |best, (m, v)| match best {
        Some((_, b)) if v <= b => best,
        _ => Some((m, v)),
    })
}

/// Subsets of `items` ordered by size, then lexicographically.
fn all_subsets(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..1 << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &m)| m)
                .collect()
        })
        .collect();
    for s in &mut out {
        s.sort_unstable();
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn better_subset(a: &ScoredSet, b: &ScoredSet) -> bool {
    if a.score != b.score {
        return a.score > b.score;
    }
    (a.indices.len(), &a.indices) < (b.indices.len(), &b.indices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_ordered() {
        assert_eq!(
            all_subsets(&[5, 2]),
            vec![vec![], vec![2], vec![5], vec![2, 5]]
        );
        assert_eq!(all_subsets(&[1, 2, 3, 4]).len(), 16);
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax_first([(3, 0.5), (4, 0.7), (5, 0.7)].into_iter()), Some((4, 0.7)));
        assert_eq!(argmax_first(std::iter::empty()), None);
    }

    #[test]
    fn subset_tie_rule() {
        let s = |i: Vec<usize>, v| ScoredSet { indices: i, kernels: vec![], score: v };
        assert!(better_subset(&s(vec![], 0.8), &s(vec![1], 0.8)));
        assert!(better_subset(&s(vec![1, 9], 0.8), &s(vec![2, 3], 0.8)));
        assert!(better_subset(&s(vec![1, 2], 0.9), &s(vec![1], 0.8)));
    }
}
