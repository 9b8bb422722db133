use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::{crowding_distance, fast_non_dominated_sort, ParetoError};
use crate::scalar::Scalar;
use crate::types::EvaluatedPrompt;
use crate::Score;

/// Anything that can be ranked: an objective vector plus a total tie-break key.
pub trait Candidate<T> {
    type Key: Ord + Clone;

    fn objectives(&self) -> &[T];
    fn tie_key(&self) -> Self::Key;
}

impl Candidate<Score> for EvaluatedPrompt {
    type Key = crate::types::PromptId;

    fn objectives(&self) -> &[Score] {
        &self.fitness.scores
    }

    fn tie_key(&self) -> Self::Key {
        self.prompt.id
    }
}

impl<T> Candidate<T> for (Vec<T>, usize) {
    type Key = usize;

    fn objectives(&self) -> &[T] {
        &self.0
    }

    fn tie_key(&self) -> usize {
        self.1
    }
}

/// Outcome of selection for one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected<T> {
    pub index: usize,
    pub rank: usize,
    pub crowding: T,
    /// Included through per-objective augmentation rather than the Pareto core.
    pub elite: bool,
}

fn cmp_desc<T: PartialOrd>(a: T, b: T) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// NSGA-II selection followed by per-objective elite augmentation.
///
/// The Pareto core holds `min(g, len)` candidates, filled by ascending rank
/// with the last admitted front truncated by descending crowding distance
/// (ties by ascending key). When that front must be cut, a candidate whose
/// vector equals one already kept from it waits until every distinct vector
/// is in. Then, for each objective in order, the `top_n`
/// best-scoring candidates not yet selected are appended. The core is ordered
/// by (rank, crowding desc, key); elites follow in objective order.
pub fn select_indices<T, C>(candidates: &[C], g: usize, top_n: usize) -> Result<Vec<Selected<T>>, ParetoError>
where
    T: Scalar,
    C: Candidate<T>,
{
    if candidates.is_empty() {
        return Err(ParetoError::EmptyPopulation);
    }
    let vectors: Vec<&[T]> = candidates.iter().map(|c| c.objectives()).collect();
    let fronts = fast_non_dominated_sort(&vectors)?;

    let mut rank = vec![0usize; candidates.len()];
    let mut crowding = vec![T::zero(); candidates.len()];
    for front in &fronts {
        let members: Vec<&[T]> = front.members.iter().map(|&i| vectors[i]).collect();
        for (&i, d) in front.members.iter().zip(crowding_distance(&members)) {
            rank[i] = front.rank;
            crowding[i] = d;
        }
    }

    let by_crowding = |a: &usize, b: &usize| {
        cmp_desc(crowding[*a], crowding[*b])
            .then_with(|| candidates[*a].tie_key().cmp(&candidates[*b].tie_key()))
    };

    let budget = g.min(candidates.len());
    let mut core: Vec<usize> = Vec::with_capacity(budget);
    for front in &fronts {
        if core.len() >= budget {
            break;
        }
        let mut members = front.members.clone();
        members.sort_by(by_crowding);
        let room = budget - core.len();
        if members.len() > room {
            // Identical vectors share a crowding distance, so copies of one boundary point would
            // all tie at infinity; a repeat only competes once every distinct vector is in.
            let mut kept: Vec<usize> = Vec::with_capacity(members.len());
            let mut repeats = Vec::new();
            for i in members {
                if kept.iter().any(|&j| vectors[j] == vectors[i]) {
                    repeats.push(i);
                } else {
                    kept.push(i);
                }
            }
            kept.append(&mut repeats);
            kept.truncate(room);
            kept.sort_by(by_crowding);
            members = kept;
        }
        core.extend(members);
    }

    let mut taken: BTreeSet<usize> = core.iter().copied().collect();
    let mut out: Vec<Selected<T>> = core
        .into_iter()
        .map(|i| Selected { index: i, rank: rank[i], crowding: crowding[i], elite: false })
        .collect();

    let m = vectors[0].len();
    #[allow(clippy::needless_range_loop)]
    for objective in 0..m {
        let mut rest: Vec<usize> = (0..candidates.len()).filter(|i| !taken.contains(i)).collect();
        rest.sort_by(|&a, &b| {
            cmp_desc(vectors[a][objective], vectors[b][objective])
                .then_with(|| candidates[a].tie_key().cmp(&candidates[b].tie_key()))
        });
        for &i in rest.iter().take(top_n) {
            taken.insert(i);
            out.push(Selected { index: i, rank: rank[i], crowding: crowding[i], elite: true });
        }
    }
    Ok(out)
}

/// Selection over evaluated prompts; returned prompts carry rank and crowding.
pub fn pareto_selection(
    evaluated: &[EvaluatedPrompt],
    g: usize,
    top_n: usize,
) -> Result<Vec<EvaluatedPrompt>, ParetoError> {
    Ok(select_indices(evaluated, g, top_n)?
        .into_iter()
        .map(|s| {
            let mut chosen = evaluated[s.index].clone();
            chosen.pareto_rank = Some(s.rank);
            chosen.crowding = Some(s.crowding);
            chosen
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(vectors: &[&[f64]]) -> Vec<(Vec<f64>, usize)> {
        vectors.iter().enumerate().map(|(i, v)| (v.to_vec(), i)).collect()
    }

    fn indices(selected: &[Selected<f64>]) -> Vec<usize> {
        selected.iter().map(|s| s.index).collect()
    }

    #[test]
    fn truncates_by_crowding() {
        let p = pool(&[&[0.9, 0.1], &[0.1, 0.9], &[0.5, 0.5], &[0.4, 0.4]]);
        let s = select_indices(&p, 2, 0).unwrap();
        assert_eq!(indices(&s), vec![0, 1]);
        assert!(s.iter().all(|x| x.rank == 0 && x.crowding.is_infinite()));
    }

    #[test]
    fn repeated_vectors_wait_for_distinct_ones() {
        let p = pool(&[&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]);
        assert_eq!(indices(&select_indices(&p, 3, 0).unwrap()), vec![0, 3, 4]);
        assert_eq!(indices(&select_indices(&p, 4, 0).unwrap()), vec![0, 1, 3, 4]);
    }

    #[test]
    fn no_truncation_when_budget_covers_population() {
        let p = pool(&[&[0.9, 0.1], &[0.1, 0.9], &[0.5, 0.5], &[0.4, 0.4]]);
        let mut got = indices(&select_indices(&p, 10, 0).unwrap());
        got.sort_unstable();
        assert_eq!(got, vec![0, 1, 2, 3]);
    }

    #[test]
    fn objective_specialist_enters_as_elite() {
        // Index 4 is rank 3 overall but the best non-selected on objective 1.
        let p = pool(&[
            &[0.9, 0.9, 0.9],
            &[0.8, 0.8, 0.8],
            &[0.7, 0.7, 0.7],
            &[0.1, 0.6, 0.1],
            &[0.0, 0.65, 0.0],
        ]);
        let s = select_indices(&p, 1, 1).unwrap();
        assert_eq!(indices(&s)[0], 0);
        let elites: Vec<usize> = s.iter().filter(|x| x.elite).map(|x| x.index).collect();
        assert_eq!(elites, vec![1, 2, 3]);
        let s = select_indices(&p, 3, 1).unwrap();
        assert!(indices(&s).contains(&4));
        assert_eq!(s.iter().find(|x| x.index == 4).unwrap().rank, 3);
    }

    #[test]
    fn empty_population_is_an_error() {
        let p: Vec<(Vec<f64>, usize)> = vec![];
        assert_eq!(select_indices(&p, 2, 0), Err(ParetoError::EmptyPopulation));
    }
}
