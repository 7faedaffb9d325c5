//! Non-dominated sorting and crowding distance for two minimized objectives.

use crate::objectives::{dominates, ObjectiveVector};

/// Splits `objs` into fronts of indices. Front 0 holds the non-dominated
/// points; each later front is non-dominated once the earlier ones are
/// removed. Indices inside a front are ascending.
pub fn non_dominated_sort(objs: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let points: Vec<[f64; 2]> = objs.iter().map(ObjectiveVector::as_array).collect();
    non_dominated_sort_points(&points)
}

pub fn non_dominated_sort_points(points: &[[f64; 2]]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(points[i], points[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(points[j], points[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each member of a front. Boundary points of either
/// objective get `+inf`; the rest get the sum over objectives of the gap
/// between their neighbours divided by the objective's range.
pub fn crowding_distance(front: &[ObjectiveVector]) -> Vec<f64> {
    let points: Vec<[f64; 2]> = front.iter().map(ObjectiveVector::as_array).collect();
    crowding_distance_points(&points)
}

pub fn crowding_distance_points(front: &[[f64; 2]]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut distance = vec![0.0; n];
    #[allow(clippy::needless_range_loop)]
    for obj in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| front[a][obj].total_cmp(&front[b][obj]));
        let lo = front[order[0]][obj];
        let hi = front[order[n - 1]][obj];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if !(range > 0.0) {
            continue;
        }
        for w in order.windows(3) {
            let gap = front[w[2]][obj] - front[w[0]][obj];
            distance[w[1]] += gap / range;
        }
    }
    distance
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(xs: &[(f64, f64)]) -> Vec<[f64; 2]> {
        xs.iter().map(|&(a, b)| [a, b]).collect()
    }

    #[test]
    fn strict_dominance_gives_two_fronts() {
        assert_eq!(
            non_dominated_sort_points(&pts(&[(1.0, 1.0), (2.0, 2.0)])),
            vec![vec![0], vec![1]]
        );
    }

    #[test]
    fn trade_off_gives_one_front() {
        assert_eq!(
            non_dominated_sort_points(&pts(&[(1.0, 2.0), (2.0, 1.0)])),
            vec![vec![0, 1]]
        );
    }

    #[test]
    fn duplicates_share_a_front() {
        let fronts = non_dominated_sort_points(&pts(&[(1.0, 1.0), (1.0, 1.0), (0.5, 3.0)]));
        assert_eq!(fronts, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn small_fronts_are_all_boundary() {
        assert!(crowding_distance_points(&pts(&[(1.0, 2.0), (2.0, 1.0)]))
            .iter()
            .all(|d| d.is_infinite()));
        assert!(crowding_distance_points(&pts(&[(1.0, 2.0)]))[0].is_infinite());
    }

    #[test]
    fn collinear_middle_point_scores_two() {
        let d = crowding_distance_points(&pts(&[(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)]));
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert!((d[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn interior_duplicates_get_equal_finite_distance() {
        let d = crowding_distance_points(&pts(&[(0.0, 2.0), (1.0, 1.0), (1.0, 1.0), (2.0, 0.0)]));
        assert!(d[1].is_finite() && d[2].is_finite());
        assert_eq!(d[1], d[2]);
    }

    fn brute_force_ranks(points: &[[f64; 2]]) -> Vec<usize> {
        let n = points.len();
        let mut rank = vec![usize::MAX; n];
        let mut remaining: Vec<usize> = (0..n).collect();
        let mut r = 0;
        while !remaining.is_empty() {
            let layer: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| !remaining.iter().any(|&j| dominates(points[j], points[i])))
                .collect();
            for &i in &layer {
                rank[i] = r;
            }
            remaining.retain(|i| !layer.contains(i));
            r += 1;
        }
        rank
    }

    proptest! {
        #[test]
        fn sort_matches_pairwise_oracle(raw in prop::collection::vec((0u8..20, 0u8..20), 1..50)) {
            let points: Vec<[f64; 2]> = raw.iter().map(|&(a, b)| [f64::from(a), f64::from(b)]).collect();
            let fronts = non_dominated_sort_points(&points);
            let expected = brute_force_ranks(&points);
            let mut seen = 0;
            for (r, front) in fronts.iter().enumerate() {
                for &i in front {
                    prop_assert_eq!(expected[i], r);
                    seen += 1;
                }
            }
            prop_assert_eq!(seen, points.len());
        }

        #[test]
        fn crowding_is_non_negative(raw in prop::collection::vec((0u8..20, 0u8..20), 1..30)) {
            let points: Vec<[f64; 2]> = raw.iter().map(|&(a, b)| [f64::from(a), f64::from(b)]).collect();
            prop_assert!(crowding_distance_points(&points).iter().all(|d| *d >= 0.0));
        }
    }
}
