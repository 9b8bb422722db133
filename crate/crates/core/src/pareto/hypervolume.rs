use std::cmp::Ordering;

use num_traits::Num;

use super::ParetoError;

fn desc<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    b.partial_cmp(a).unwrap_or(Ordering::Equal)
}

/// Area dominated by `(x, y)` points above `(rx, ry)`, by a sweep in descending x.
fn area_2d<T: Num + Copy + PartialOrd>(points: &mut [(T, T)], rx: T, ry: T) -> T {
    points.sort_by(|a, b| desc(&a.0, &b.0).then_with(|| desc(&a.1, &b.1)));
    let mut area = T::zero();
    let mut covered_y = ry;
    for &(x, y) in points.iter() {
        if y > covered_y {
            area = area + (x - rx) * (y - covered_y);
            covered_y = y;
        }
    }
    area
}

/// Measure of the union of boxes `[reference, point]` (maximization).
///
/// Supports one to three objectives. Works on any ordered numeric type, so
/// exact rationals give exact volumes.
pub fn hypervolume<T, V>(front: &[V], reference: &[T]) -> Result<T, ParetoError>
where
    T: Num + Copy + PartialOrd,
    V: AsRef<[T]>,
{
    let m = reference.len();
    if !(1..=3).contains(&m) {
        return Err(ParetoError::UnsupportedDimension(m));
    }
    for (i, p) in front.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != m {
            return Err(ParetoError::LengthMismatch(m, p.len()));
        }
        if p.iter().zip(reference).any(|(a, r)| a < r) {
            return Err(ParetoError::BelowReference(i));
        }
    }
    if front.is_empty() {
        return Ok(T::zero());
    }

    match m {
        1 => {
            let best = front.iter().map(|p| p.as_ref()[0]).fold(reference[0], |a, b| if b > a { b } else { a });
            Ok(best - reference[0])
        }
        2 => {
            let mut pts: Vec<(T, T)> = front.iter().map(|p| (p.as_ref()[0], p.as_ref()[1])).collect();
            Ok(area_2d(&mut pts, reference[0], reference[1]))
        }
        _ => {
            // Slice along the third objective: between consecutive z levels the
            // cross-section is the 2-D union of every point at or above the level.
            let mut pts: Vec<[T; 3]> = front
                .iter()
                .map(|p| {
                    let p = p.as_ref();
                    [p[0], p[1], p[2]]
                })
                .collect();
            pts.sort_by(|a, b| desc(&a[2], &b[2]));
            let mut volume = T::zero();
            let mut slab: Vec<(T, T)> = Vec::with_capacity(pts.len());
            for (k, p) in pts.iter().enumerate() {
                slab.push((p[0], p[1]));
                let lower = pts.get(k + 1).map_or(reference[2], |q| q[2]);
                let depth = p[2] - lower;
                if depth > T::zero() {
                    volume = volume + area_2d(&mut slab, reference[0], reference[1]) * depth;
                }
            }
            Ok(volume)
        }
    }
}
