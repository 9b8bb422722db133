use std::cmp::Ordering;

use crate::scalar::Scalar;

/// Crowding distance of every member of one front.
///
/// Per objective, members at the minimum or maximum value get infinity and
/// interior members add the gap between the neighbouring distinct values,
/// normalized by the objective's range. Members sharing a value are treated
/// as one point, which keeps the result permutation-equivariant. An objective
/// with zero range contributes nothing. Fronts of one or two members are all
/// extremes.
pub fn crowding_distance<T, V>(front: &[V]) -> Vec<T>
where
    T: Scalar,
    V: AsRef<[T]>,
{
    let n = front.len();
    if n <= 2 {
        return vec![T::infinity(); n];
    }
    let m = front[0].as_ref().len();
    let mut distance = vec![T::zero(); n];

    for objective in 0..m {
        let value = |i: usize| front[i].as_ref()[objective];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).unwrap_or(Ordering::Equal));

        let lo = value(order[0]);
        let hi = value(order[n - 1]);
        let range = hi - lo;
        if range <= T::zero() {
            continue;
        }

        // Distinct values in ascending order; members map onto them.
        let mut levels: Vec<T> = Vec::with_capacity(n);
        for &i in &order {
            if levels.last().is_none_or(|&last| value(i) > last) {
                levels.push(value(i));
            }
        }
        let mut level = 0;
        for &i in &order {
            while levels[level] < value(i) {
                level += 1;
            }
            if level == 0 || level == levels.len() - 1 {
                distance[i] = T::infinity();
            } else if distance[i].is_finite() {
                distance[i] = distance[i] + (levels[level + 1] - levels[level - 1]) / range;
            }
        }
    }
    distance
}
