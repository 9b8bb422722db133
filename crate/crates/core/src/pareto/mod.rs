//! NSGA-II machinery. All objectives are maximized.

mod crowding;
mod hypervolume;
mod selection;

pub use crowding::crowding_distance;
pub use hypervolume::hypervolume;
pub use selection::{pareto_selection, select_indices, Candidate, Selected};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParetoError {
    #[error("objective vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("objective vectors use different objective orderings")]
    ObjectiveMismatch,
    #[error("population is empty")]
    EmptyPopulation,
    #[error("point {0} lies below the reference point")]
    BelowReference(usize),
    #[error("hypervolume supports 1 to 3 objectives, got {0}")]
    UnsupportedDimension(usize),
}

/// `a` dominates `b` when it is at least as good on every objective and
/// strictly better on one.
pub fn dominates<T: PartialOrd>(a: &[T], b: &[T]) -> Result<bool, ParetoError> {
    if a.len() != b.len() {
        return Err(ParetoError::LengthMismatch(a.len(), b.len()));
    }
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return Ok(false);
        }
        if x > y {
            strictly_better = true;
        }
    }
    Ok(strictly_better)
}

/// One non-domination level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Front {
    pub rank: usize,
    /// Indices into the sorted population, ascending.
    pub members: Vec<usize>,
}

/// Deb's fast non-dominated sort.
///
/// Every index lands in exactly one front; ranks are dense from 0.
pub fn fast_non_dominated_sort<T, V>(population: &[V]) -> Result<Vec<Front>, ParetoError>
where
    T: PartialOrd,
    V: AsRef<[T]>,
{
    if population.is_empty() {
        return Err(ParetoError::EmptyPopulation);
    }
    let width = population[0].as_ref().len();
    if let Some(bad) = population.iter().find(|v| v.as_ref().len() != width) {
        return Err(ParetoError::LengthMismatch(width, bad.as_ref().len()));
    }

    let n = population.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (population[i].as_ref(), population[j].as_ref());
            if dominates(a, b)? {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(b, a)? {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominates_list[p] {
                dominated_by_count[q] -= 1;
                if dominated_by_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(Front { rank: fronts.len(), members: current });
        current = next;
    }
    Ok(fronts)
}

/// Rank of every index, derived from the fronts.
pub fn ranks_of(fronts: &[Front], len: usize) -> Vec<usize> {
    let mut ranks = vec![0; len];
    for front in fronts {
        for &m in &front.members {
            ranks[m] = front.rank;
        }
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    /// Rank = 1 + max rank of any dominator, computed by repeated peeling.
    fn brute_force_ranks(pop: &[Vec<f64>]) -> Vec<usize> {
        let n = pop.len();
        let mut rank = vec![usize::MAX; n];
        let mut assigned = 0;
        let mut level = 0;
        while assigned < n {
            let layer: Vec<usize> = (0..n)
                .filter(|&i| rank[i] == usize::MAX)
                .filter(|&i| {
                    !(0..n).any(|j| {
                        rank[j] == usize::MAX
                            && j != i
                            && pop[j].iter().zip(&pop[i]).all(|(a, b)| a >= b)
                            && pop[j].iter().zip(&pop[i]).any(|(a, b)| a > b)
                    })
                })
                .collect();
            for &i in &layer {
                rank[i] = level;
            }
            assigned += layer.len();
            level += 1;
        }
        rank
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]).unwrap());
        assert!(!dominates(&[0.5, 0.5], &[0.5, 0.5]).unwrap());
        assert!(!dominates(&[0.9, 0.1], &[0.1, 0.9]).unwrap());
        assert_eq!(dominates(&[1.0], &[1.0, 2.0]), Err(ParetoError::LengthMismatch(1, 2)));
    }

    #[test]
    fn dominance_on_exact_rationals() {
        let a = [Ratio::new(1, 3), Ratio::new(2, 3)];
        let b = [Ratio::new(1, 3), Ratio::new(3, 5)];
        assert!(dominates(&a, &b).unwrap());
        assert!(!dominates(&b, &a).unwrap());
    }

    #[test]
    fn sort_example() {
        let pop = vec![vec![0.9, 0.1], vec![0.1, 0.9], vec![0.5, 0.5], vec![0.4, 0.4]];
        let fronts = fast_non_dominated_sort::<f64, _>(&pop).unwrap();
        let members: Vec<_> = fronts.iter().map(|f| f.members.clone()).collect();
        assert_eq!(members, vec![vec![0, 1, 2], vec![3]]);
        assert_eq!(brute_force_ranks(&pop), vec![0, 0, 0, 1]);
    }

    #[test]
    fn sort_singleton_and_identical() {
        let one = vec![vec![0.3, 0.2]];
        assert_eq!(fast_non_dominated_sort::<f64, _>(&one).unwrap()[0].members, vec![0]);
        let same = vec![vec![0.5, 0.5]; 4];
        let fronts = fast_non_dominated_sort::<f64, _>(&same).unwrap();
        assert_eq!(fronts.len(), 1);
        assert_eq!(fronts[0].members, vec![0, 1, 2, 3]);
    }

    #[test]
    fn sort_rejects_empty_and_ragged() {
        let empty: Vec<Vec<f64>> = vec![];
        assert_eq!(fast_non_dominated_sort::<f64, _>(&empty), Err(ParetoError::EmptyPopulation));
        let ragged = vec![vec![0.1, 0.2], vec![0.3]];
        assert!(fast_non_dominated_sort::<f64, _>(&ragged).is_err());
    }

    fn vectors(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..=3).prop_flat_map(move |m| {
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, m), 1..max_n)
        })
    }

    proptest! {
        #[test]
        fn dominance_is_a_strict_partial_order(
            a in prop::collection::vec(0u8..4, 3),
            b in prop::collection::vec(0u8..4, 3),
            c in prop::collection::vec(0u8..4, 3),
        ) {
            prop_assert!(!dominates(&a, &a).unwrap());
            prop_assert!(!(dominates(&a, &b).unwrap() && dominates(&b, &a).unwrap()));
            if dominates(&a, &b).unwrap() && dominates(&b, &c).unwrap() {
                prop_assert!(dominates(&a, &c).unwrap());
            }
        }

        #[test]
        fn sort_matches_brute_force(pop in vectors(60)) {
            let fronts = fast_non_dominated_sort::<f64, _>(&pop).unwrap();
            let ranks = ranks_of(&fronts, pop.len());
            prop_assert_eq!(ranks, brute_force_ranks(&pop));
            let total: usize = fronts.iter().map(|f| f.members.len()).sum();
            prop_assert_eq!(total, pop.len());
        }
    }
}
