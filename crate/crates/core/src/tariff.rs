//! Time-of-use tariffs and piecewise electricity cost.
//!
//! A [`TouTariff`] is an ordered list of contiguous price periods that exactly
//! covers `[0, horizon)`. Times are hours from the horizon origin, prices are
//! CNY per kWh and energies are MWh (1 MWh = 1000 kWh).
//!
//! Period membership is half-open: a period owns `[start, start + duration)`.
//! Completion instants use the mirrored convention `(start, start + duration]`
//! so that a job ending exactly on a boundary is attributed to the period it
//! was actually running in.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute slack used when checking that periods tile the horizon.
const COVERAGE_EPS: f64 = 1e-9;

/// kWh per MWh.
pub const KWH_PER_MWH: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TariffError {
    #[error("tariff has no periods")]
    Empty,
    #[error("horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("period {index}: duration must be positive, got {duration}")]
    NonPositiveDuration { index: usize, duration: f64 },
    #[error("period {index}: price must be positive, got {price}")]
    NonPositivePrice { index: usize, price: f64 },
    #[error("period {index}: expected start {expected}, found {found}")]
    NotContiguous { index: usize, expected: f64, found: f64 },
    #[error("periods cover {covered} h but the horizon is {horizon} h")]
    CoverageMismatch { covered: f64, horizon: f64 },
    #[error("time {t} h is outside the horizon [0, {horizon})")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("invalid interval [{start}, {end}]")]
    InvalidInterval { start: f64, end: f64 },
    #[error("energy must be non-negative, got {0}")]
    NegativeEnergy(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodLabel {
    OnPeak,
    MidPeak,
    FlatPeak,
    OffPeak,
}

impl fmt::Display for PeriodLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PeriodLabel::OnPeak => "on-peak",
            PeriodLabel::MidPeak => "mid-peak",
            PeriodLabel::FlatPeak => "flat-peak",
            PeriodLabel::OffPeak => "off-peak",
        };
        f.write_str(s)
    }
}

/// One price period of a tariff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouPeriod {
    #[serde(rename = "start_h")]
    pub start: f64,
    #[serde(rename = "duration_h")]
    pub duration: f64,
    #[serde(rename = "price_cny_per_kwh")]
    pub price: f64,
    pub label: PeriodLabel,
}

impl TouPeriod {
    pub fn new(start: f64, duration: f64, price: f64, label: PeriodLabel) -> Self {
        TouPeriod {
            start,
            duration,
            price,
            label,
        }
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// How a slab's energy is charged against the tariff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostMode {
    /// Energy is spread uniformly over the processing interval and every
    /// slice is charged at the price of the period it falls in.
    #[default]
    Proportional,
    /// The whole energy is charged at the price in force when processing
    /// starts.
    StartPeriod,
}

impl std::str::FromStr for CostMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proportional" => Ok(CostMode::Proportional),
            "start-period" => Ok(CostMode::StartPeriod),
            other => Err(format!(
                "unknown cost mode `{other}` (expected proportional or start-period)"
            )),
        }
    }
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostMode::Proportional => f.write_str("proportional"),
            CostMode::StartPeriod => f.write_str("start-period"),
        }
    }
}

/// An ordered, contiguous set of price periods covering `[0, horizon)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TouTariff {
    periods: Vec<TouPeriod>,
    horizon: f64,
    cycle: f64,
}

impl TouTariff {
    /// Builds a tariff whose periods exactly cover `[0, horizon)`.
    pub fn new(periods: Vec<TouPeriod>, horizon: f64) -> Result<Self, TariffError> {
        validate_periods(&periods)?;
        if !(horizon > 0.0) {
            return Err(TariffError::NonPositiveHorizon(horizon));
        }
        let covered = periods.last().map(TouPeriod::end).unwrap_or(0.0);
        if (covered - horizon).abs() > COVERAGE_EPS {
            return Err(TariffError::CoverageMismatch { covered, horizon });
        }
        Ok(TouTariff {
            periods,
            horizon,
            cycle: horizon,
        })
    }

    /// Repeats one tariff cycle (typically a day) until `horizon` is covered,
    /// truncating the final period if the horizon is not a whole number of
    /// cycles.
    pub fn tiled(cycle: &[TouPeriod], horizon: f64) -> Result<Self, TariffError> {
        validate_periods(cycle)?;
        if !(horizon > 0.0) {
            return Err(TariffError::NonPositiveHorizon(horizon));
        }
        let cycle_len = cycle.last().map(TouPeriod::end).unwrap_or(0.0);
        let mut periods = Vec::new();
        let mut offset = 0.0;
        'outer: loop {
            for p in cycle {
                let start = offset + p.start;
                if start >= horizon - COVERAGE_EPS {
                    break 'outer;
                }
                let end = (offset + p.end()).min(horizon);
                let end = if (horizon - end).abs() <= COVERAGE_EPS {
                    horizon
                } else {
                    end
                };
                periods.push(TouPeriod::new(start, end - start, p.price, p.label));
                if end >= horizon {
                    break 'outer;
                }
            }
            offset += cycle_len;
        }
        Ok(TouTariff {
            periods,
            horizon,
            cycle: cycle_len,
        })
    }

    /// The daily tariff of an integrated steel mill: eight periods, four price
    /// levels.
    ///
    /// | period    | frames                             | CNY/kWh |
    /// |-----------|------------------------------------|---------|
    /// | on-peak   | 18-21                              | 0.878   |
    /// | mid-peak  | 08-11, 15-18                       | 0.778   |
    /// | flat-peak | 07-08, 11-15, 21-22                | 0.628   |
    /// | off-peak  | 00-07, 22-24                       | 0.428   |
    pub fn steel_mill_daily() -> Self {
        Self::new(steel_mill_daily_periods(), 24.0).expect("reference tariff is valid")
    }

    pub fn periods(&self) -> &[TouPeriod] {
        &self.periods
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Length of the repeating cycle this tariff was tiled from.
    pub fn cycle_length(&self) -> f64 {
        self.cycle
    }

    /// True when the horizon spans more than one tariff cycle.
    pub fn is_multi_day(&self) -> bool {
        self.horizon > self.cycle + COVERAGE_EPS
    }

    pub fn min_price(&self) -> f64 {
        self.periods.iter().map(|p| p.price).fold(f64::INFINITY, f64::min)
    }

    pub fn max_price(&self) -> f64 {
        self.periods.iter().map(|p| p.price).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the period containing `t` (half-open membership).
    pub fn period_index_at(&self, t: f64) -> Result<usize, TariffError> {
        if !(0.0..self.horizon).contains(&t) {
            return Err(TariffError::OutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let idx = self.periods.partition_point(|p| p.start <= t);
        Ok(idx.saturating_sub(1))
    }

    /// Index of the period a job finishing at `t` was last running in, i.e.
    /// the period whose `(start, end]` contains `t`. `t = 0` maps to the first
    /// period.
    pub fn period_index_ending_at(&self, t: f64) -> Result<usize, TariffError> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(TariffError::OutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let idx = self.periods.partition_point(|p| p.start < t);
        Ok(idx.saturating_sub(1))
    }

    /// Price of the period containing `t`.
    pub fn price_at(&self, t: f64) -> Result<f64, TariffError> {
        self.period_index_at(t).map(|i| self.periods[i].price)
    }

    /// Price in force at the instant a job finishing at `t` completes.
    pub fn price_ending_at(&self, t: f64) -> Result<f64, TariffError> {
        self.period_index_ending_at(t).map(|i| self.periods[i].price)
    }

    /// Overlap in hours between `[start, end]` and every period it touches.
    pub fn overlaps(&self, start: f64, end: f64) -> Result<impl Iterator<Item = (usize, f64)> + '_, TariffError> {
        self.check_interval(start, end)?;
        let first = self.periods.partition_point(|p| p.end() <= start);
        Ok(self.periods[first..]
            .iter()
            .enumerate()
            .take_while(move |(_, p)| p.start < end)
            .map(move |(i, p)| (first + i, p.end().min(end) - p.start.max(start)))
            .filter(|(_, h)| *h > 0.0))
    }

    /// Cost in CNY of consuming `energy` MWh over `[start, end]`.
    pub fn interval_cost(&self, start: f64, end: f64, energy: f64, mode: CostMode) -> Result<f64, TariffError> {
        self.check_interval(start, end)?;
        if !(energy >= 0.0) {
            return Err(TariffError::NegativeEnergy(energy));
        }
        match mode {
            CostMode::Proportional => {
                let span = end - start;
                if span <= 0.0 {
                    return Ok(0.0);
                }
                let kwh_per_hour = energy * KWH_PER_MWH / span;
                Ok(self
                    .overlaps(start, end)?
                    .map(|(i, hours)| kwh_per_hour * hours * self.periods[i].price)
                    .sum())
            }
            CostMode::StartPeriod => {
                if start >= self.horizon {
                    return Err(TariffError::OutOfRange {
                        t: start,
                        horizon: self.horizon,
                    });
                }
                Ok(energy * KWH_PER_MWH * self.price_at(start)?)
            }
        }
    }

    fn check_interval(&self, start: f64, end: f64) -> Result<(), TariffError> {
        if !(start >= 0.0 && end >= start && end <= self.horizon + COVERAGE_EPS) {
            return Err(TariffError::InvalidInterval { start, end });
        }
        Ok(())
    }
}

/// The eight periods of [`TouTariff::steel_mill_daily`].
pub fn steel_mill_daily_periods() -> Vec<TouPeriod> {
    use PeriodLabel::*;
    [
        (0.0, 7.0, 0.428, OffPeak),
        (7.0, 1.0, 0.628, FlatPeak),
        (8.0, 3.0, 0.778, MidPeak),
        (11.0, 4.0, 0.628, FlatPeak),
        (15.0, 3.0, 0.778, MidPeak),
        (18.0, 3.0, 0.878, OnPeak),
        (21.0, 1.0, 0.628, FlatPeak),
        (22.0, 2.0, 0.428, OffPeak),
    ]
    .into_iter()
    .map(|(s, d, p, l)| TouPeriod::new(s, d, p, l))
    .collect()
}

fn validate_periods(periods: &[TouPeriod]) -> Result<(), TariffError> {
    if periods.is_empty() {
        return Err(TariffError::Empty);
    }
    let mut expected = 0.0;
    for (index, p) in periods.iter().enumerate() {
        if !(p.duration > 0.0) {
            return Err(TariffError::NonPositiveDuration {
                index,
                duration: p.duration,
            });
        }
        if !(p.price > 0.0) {
            return Err(TariffError::NonPositivePrice { index, price: p.price });
        }
        if (p.start - expected).abs() > COVERAGE_EPS {
            return Err(TariffError::NotContiguous {
                index,
                expected,
                found: p.start,
            });
        }
        expected = p.end();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tariff() -> TouTariff {
        TouTariff::steel_mill_daily()
    }

    #[test]
    fn prices_from_reference_table() {
        let t = tariff();
        assert_eq!(t.price_at(19.0).unwrap(), 0.878);
        assert_eq!(t.price_at(3.0).unwrap(), 0.428);
        assert_eq!(t.price_at(7.5).unwrap(), 0.628);
        assert_eq!(t.price_at(23.99).unwrap(), 0.428);
    }

    #[test]
    fn membership_is_half_open() {
        let t = tariff();
        assert_eq!(t.price_at(18.0).unwrap(), 0.878);
        assert_eq!(t.price_at(21.0).unwrap(), 0.628);
        assert_eq!(t.price_ending_at(21.0).unwrap(), 0.878);
        assert_eq!(t.price_ending_at(0.0).unwrap(), 0.428);
    }

    #[test]
    fn price_outside_horizon_is_an_error() {
        let t = tariff();
        assert!(matches!(t.price_at(24.0), Err(TariffError::OutOfRange { .. })));
        assert!(matches!(t.price_at(-0.1), Err(TariffError::OutOfRange { .. })));
    }

    #[test]
    fn cost_straddling_mid_and_on_peak() {
        let c = tariff().interval_cost(17.0, 19.0, 2.0, CostMode::Proportional).unwrap();
        assert!((c - 1656.0).abs() < 1e-6, "{c}");
    }

    #[test]
    fn cost_inside_off_peak() {
        let c = tariff()
            .interval_cost(0.0, 8.0 / 3.0, 59.71, CostMode::Proportional)
            .unwrap();
        assert!((c - 25555.88).abs() < 1e-6, "{c}");
    }

    #[test]
    fn zero_length_interval_is_free() {
        let c = tariff().interval_cost(5.0, 5.0, 12.0, CostMode::Proportional).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn start_period_charges_everything_at_start_price() {
        let c = tariff().interval_cost(17.0, 19.0, 2.0, CostMode::StartPeriod).unwrap();
        assert!((c - 2000.0 * 0.778).abs() < 1e-9);
    }

    #[test]
    fn reversed_interval_is_rejected() {
        assert!(matches!(
            tariff().interval_cost(5.0, 4.0, 1.0, CostMode::Proportional),
            Err(TariffError::InvalidInterval { .. })
        ));
    }

    #[test]
    fn construction_rejects_gaps_and_bad_coverage() {
        let mut p = steel_mill_daily_periods();
        p[3].start += 0.5;
        assert!(matches!(
            TouTariff::new(p, 24.0),
            Err(TariffError::NotContiguous { index: 3, .. })
        ));
        assert!(matches!(
            TouTariff::new(steel_mill_daily_periods(), 25.0),
            Err(TariffError::CoverageMismatch { .. })
        ));
        let mut p = steel_mill_daily_periods();
        p[0].price = 0.0;
        assert!(TouTariff::new(p, 24.0).is_err());
    }

    #[test]
    fn tiling_repeats_the_daily_cycle() {
        let t = TouTariff::tiled(&steel_mill_daily_periods(), 36.0).unwrap();
        assert!(t.is_multi_day());
        assert_eq!(t.price_at(24.0 + 3.0).unwrap(), 0.428);
        assert_eq!(t.price_at(24.0 + 7.5).unwrap(), 0.628);
        assert_eq!(t.periods().last().unwrap().end(), 36.0);
        let single = TouTariff::tiled(&steel_mill_daily_periods(), 24.0).unwrap();
        assert_eq!(single, tariff());
        assert!(!single.is_multi_day());
    }

    proptest! {
        #[test]
        fn cost_is_additive(a in 0.0..24.0f64, b in 0.0..24.0f64, c in 0.0..24.0f64, e in 0.0..100.0f64) {
            let mut xs = [a, b, c];
            xs.sort_by(f64::total_cmp);
            let [a, b, c] = xs;
            prop_assume!(c - a > 1e-6);
            let t = tariff();
            let whole = t.interval_cost(a, c, e, CostMode::Proportional).unwrap();
            let left = t.interval_cost(a, b, e * (b - a) / (c - a), CostMode::Proportional).unwrap();
            let right = t.interval_cost(b, c, e * (c - b) / (c - a), CostMode::Proportional).unwrap();
            prop_assert!((whole - left - right).abs() < 1e-6 * (1.0 + whole));
        }

        #[test]
        fn cost_is_bounded_by_price_extremes(a in 0.0..24.0f64, len in 0.01..24.0f64, e in 0.0..100.0f64) {
            let t = tariff();
            let b = (a + len).min(24.0);
            prop_assume!(b > a);
            let cost = t.interval_cost(a, b, e, CostMode::Proportional).unwrap();
            let kwh = e * KWH_PER_MWH;
            prop_assert!(cost >= t.min_price() * kwh - 1e-6);
            prop_assert!(cost <= t.max_price() * kwh + 1e-6);
        }

        #[test]
        fn sliding_into_on_peak_never_gets_cheaper(s1 in 16.0..18.0f64, s2 in 16.0..18.0f64, e in 0.1..50.0f64) {
            // [s, s + 2] trades mid-peak overlap for on-peak overlap as s grows.
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let t = tariff();
            let early = t.interval_cost(lo, lo + 2.0, e, CostMode::Proportional).unwrap();
            let late = t.interval_cost(hi, hi + 2.0, e, CostMode::Proportional).unwrap();
            prop_assert!(early <= late + 1e-9);
        }
    }
}
