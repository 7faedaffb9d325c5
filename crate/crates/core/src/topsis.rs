//! TOPSIS ranking of a Pareto front with two cost-type objectives.
//!
//! Each column is first shifted by its minimum so that the large, slowly
//! varying power cost and the small penalty score end up on similar scales.
//! Then the usual steps follow: vector normalization, weighting, ideal and
//! nadir points, Euclidean distances and relative closeness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objectives::ObjectiveVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopsisError {
    #[error("need at least 2 solutions to rank, got {0}")]
    TooFew(usize),
    #[error("nothing to rank: every solution has the same objective values")]
    NothingToRank,
    #[error("degenerate front: column `{0}` is constant while the other column varies")]
    DegenerateColumn(&'static str),
    #[error("objective values must be finite (row {0})")]
    NonFinite(usize),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

/// Weights of (power cost, penalty).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub power_cost: f64,
    pub penalty: f64,
}

impl Weights {
    pub fn new(power_cost: f64, penalty: f64) -> Result<Self, TopsisError> {
        for w in [power_cost, penalty] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(TopsisError::InvalidWeights(format!("{w} is not a positive number")));
            }
        }
        Ok(Weights { power_cost, penalty })
    }

    fn as_array(&self) -> [f64; 2] {
        [self.power_cost, self.penalty]
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            power_cost: 0.4,
            penalty: 0.6,
        }
    }
}

impl FromStr for Weights {
    type Err = TopsisError;

    /// Parses `"w1,w2"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [a, b] = parts.as_slice() else {
            return Err(TopsisError::InvalidWeights(format!("expected `w1,w2`, got `{s}`")));
        };
        let parse = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| TopsisError::InvalidWeights(format!("`{x}` is not a number")))
        };
        Weights::new(parse(a)?, parse(b)?)
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.power_cost, self.penalty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    /// Position of the solution in the input.
    pub index: usize,
    pub closeness: f64,
    pub power_cost: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopsisRanking {
    /// Sorted by closeness, highest first; ties keep input order.
    pub entries: Vec<RankEntry>,
    pub weights: Weights,
}

impl TopsisRanking {
    /// The recommended solution.
    pub fn best(&self) -> &RankEntry {
        &self.entries[0]
    }

    /// Closeness of each solution in input order.
    pub fn closeness_by_index(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.entries.len()];
        for e in &self.entries {
            out[e.index] = e.closeness;
        }
        out
    }
}

/// Ranks a front of objective vectors.
pub fn rank(front: &[ObjectiveVector], weights: Weights) -> Result<TopsisRanking, TopsisError> {
    let points: Vec<[f64; 2]> = front.iter().map(ObjectiveVector::as_array).collect();
    rank_points(&points, weights)
}

/// Ranks `(power cost, penalty)` pairs.
pub fn rank_points(points: &[[f64; 2]], weights: Weights) -> Result<TopsisRanking, TopsisError> {
    let weights = Weights::new(weights.power_cost, weights.penalty)?;
    if points.len() < 2 {
        return Err(TopsisError::TooFew(points.len()));
    }
    if let Some(i) = points.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(TopsisError::NonFinite(i));
    }

    let w = weights.as_array();
    let mut v = vec![[0.0; 2]; points.len()];
    let mut norms = [0.0; 2];
    for j in 0..2 {
        let min = points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
        for (row, p) in v.iter_mut().zip(points) {
            row[j] = p[j] - min;
        }
        norms[j] = v.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
    }
    match (norms[0] > 0.0, norms[1] > 0.0) {
        (false, false) => return Err(TopsisError::NothingToRank),
        (false, true) => return Err(TopsisError::DegenerateColumn("f1")),
        (true, false) => return Err(TopsisError::DegenerateColumn("f2")),
        (true, true) => {}
    }
    for row in &mut v {
        for j in 0..2 {
            row[j] = w[j] * row[j] / norms[j];
        }
    }

    let mut ideal = [f64::INFINITY; 2];
    let mut nadir = [f64::NEG_INFINITY; 2];
    for row in &v {
        for j in 0..2 {
            ideal[j] = ideal[j].min(row[j]);
            nadir[j] = nadir[j].max(row[j]);
        }
    }
    let dist = |a: &[f64; 2], b: &[f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();

    let mut entries: Vec<RankEntry> = v
        .iter()
        .zip(points)
        .enumerate()
        .map(|(index, (row, p))| {
            let d_plus = dist(row, &ideal);
            let d_minus = dist(row, &nadir);
            RankEntry {
                index,
                closeness: d_minus / (d_minus + d_plus),
                power_cost: p[0],
                penalty: p[1],
            }
        })
        .collect();
    entries.sort_by(|a, b| b.closeness.total_cmp(&a.closeness).then(a.index.cmp(&b.index)));
    Ok(TopsisRanking { entries, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_point_hand_computation() {
        let r = rank_points(&[[10.0, 20.0], [30.0, 5.0]], Weights::default()).unwrap();
        let c = r.closeness_by_index();
        assert!((c[0] - 0.4).abs() < 1e-12);
        assert!((c[1] - 0.6).abs() < 1e-12);
        assert_eq!(r.best().index, 1);
    }

    #[test]
    fn dominating_point_ranks_first() {
        let r = rank_points(&[[5.0, 9.0], [3.0, 2.0], [4.0, 6.0]], Weights::default()).unwrap();
        let c = r.closeness_by_index();
        assert!(c[1] > c[2] && c[2] > c[0]);
        assert!((c[1] - 1.0).abs() < 1e-12);
        assert!(c[0].abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_refused() {
        assert_eq!(
            rank_points(&[[1.0, 1.0]], Weights::default()),
            Err(TopsisError::TooFew(1))
        );
        assert_eq!(
            rank_points(&[[1.0, 1.0], [1.0, 1.0]], Weights::default()),
            Err(TopsisError::NothingToRank)
        );
        assert_eq!(
            rank_points(&[[1.0, 1.0], [1.0, 2.0]], Weights::default()),
            Err(TopsisError::DegenerateColumn("f1"))
        );
        assert_eq!(
            rank_points(&[[1.0, 1.0], [2.0, 1.0]], Weights::default()),
            Err(TopsisError::DegenerateColumn("f2"))
        );
    }

    #[test]
    fn weights_parse() {
        assert_eq!("0.6, 0.4".parse::<Weights>().unwrap(), Weights::new(0.6, 0.4).unwrap());
        assert!("0.6".parse::<Weights>().is_err());
        assert!("0.6,-1".parse::<Weights>().is_err());
        assert!("a,b".parse::<Weights>().is_err());
    }

    /// Closeness of the eight published front points, frozen from an
    /// independent NumPy computation of the same pipeline.
    #[test]
    fn published_front_closeness_values() {
        let rows = [
            [300600.61, 7097.0],
            [300414.79, 7424.0],
            [300079.79, 8081.0],
            [300296.46, 7949.0],
            [301898.17, 6654.0],
            [299376.89, 9916.0],
            [299368.24, 10899.0],
            [298841.41, 13330.0],
        ];
        let expected = [
            0.729060, 0.734751, 0.725357, 0.711905, 0.619069, 0.590152, 0.492691, 0.380931,
        ];
        let r = rank_points(&rows, Weights::default()).unwrap();
        for (c, e) in r.closeness_by_index().iter().zip(expected) {
            assert!((c - e).abs() < 1e-6, "{c} vs {e}");
        }
    }

    #[test]
    fn weights_can_change_the_winner() {
        let front = [[0.0, 10.0], [3.0, 3.0], [10.0, 0.0]];
        let a = rank_points(&front, Weights::new(0.4, 0.6).unwrap()).unwrap();
        let b = rank_points(&front, Weights::new(0.9, 0.1).unwrap()).unwrap();
        assert_eq!(a.best().index, 1);
        assert_eq!(b.best().index, 0);
    }

    fn front_strategy() -> impl Strategy<Value = Vec<[f64; 2]>> {
        prop::collection::vec((0.0..1000.0f64, 0.0..1000.0f64), 2..12)
            .prop_map(|v| v.into_iter().map(|(a, b)| [a, b]).collect())
    }

    proptest! {
        #[test]
        fn scaling_a_column_keeps_the_order(front in front_strategy(), scale in 0.01..100.0f64) {
            let Ok(base) = rank_points(&front, Weights::default()) else { return Ok(()); };
            let scaled: Vec<[f64; 2]> = front.iter().map(|p| [p[0] * scale, p[1]]).collect();
            let r = rank_points(&scaled, Weights::default()).unwrap();
            for (x, y) in base.closeness_by_index().iter().zip(r.closeness_by_index()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn closeness_in_unit_interval_and_permutation_stable(front in front_strategy()) {
            let Ok(base) = rank_points(&front, Weights::default()) else { return Ok(()); };
            prop_assert!(base.entries.iter().all(|e| (0.0..=1.0).contains(&e.closeness)));
            prop_assert!(base.entries.windows(2).all(|w| w[0].closeness >= w[1].closeness));
            let mut reversed = front.clone();
            reversed.reverse();
            let r = rank_points(&reversed, Weights::default()).unwrap();
            let n = front.len();
            let (a, b) = (base.closeness_by_index(), r.closeness_by_index());
            for i in 0..n {
                prop_assert!((a[i] - b[n - 1 - i]).abs() < 1e-12);
            }
        }
    }
}
