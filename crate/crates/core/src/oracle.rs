//! Exhaustive solver for tiny instances, used as ground truth in tests.
//!
//! Every split of the slabs into `m` ordered units is enumerated, checked
//! against the capacity and same-width bounds by its own walker, and paired
//! with every idle vector on a grid. Unit costs come from a cumulative price
//! integral rather than [`crate::tariff::TouTariff::interval_cost`], so the
//! two cost paths check each other.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::encoding::BatchSchedule;
use crate::instance::ProblemInstance;
use crate::objectives::ObjectiveVector;

pub const MAX_SLABS: usize = 8;
pub const MAX_UNITS: usize = 2;
/// Grid used when none is given, in hours.
pub const DEFAULT_IDLE_GRID: f64 = 0.25;
/// Power costs closer than this (CNY) are treated as equal.
pub const COST_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("exhaustive search is limited to {max} slabs, instance has {found}")]
    TooManySlabs { found: usize, max: usize },
    #[error("exhaustive search is limited to {max} units, instance has {found}")]
    TooManyUnits { found: usize, max: usize },
    #[error("idle grid must be a positive number of hours, got {0}")]
    InvalidGrid(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPoint {
    pub objectives: ObjectiveVector,
    pub batch: BatchSchedule,
    pub idle: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactFront {
    /// Mutually non-dominated points sorted by power cost.
    pub points: Vec<ExactPoint>,
    pub instance_digest: String,
    pub idle_grid: f64,
}

impl ExactFront {
    pub fn objective_points(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| p.objectives.as_array()).collect()
    }
}

/// Cumulative price integral `F(t) = ∫_0^t π(s) ds` in CNY/kWh·h.
struct PriceIntegral {
    starts: Vec<f64>,
    prices: Vec<f64>,
    cumulative: Vec<f64>,
}

impl PriceIntegral {
    fn new(instance: &ProblemInstance) -> Self {
        let periods = instance.tariff().periods();
        let mut cumulative = Vec::with_capacity(periods.len());
        let mut acc = 0.0;
        for p in periods {
            cumulative.push(acc);
            acc += p.duration * p.price;
        }
        PriceIntegral {
            starts: periods.iter().map(|p| p.start).collect(),
            prices: periods.iter().map(|p| p.price).collect(),
            cumulative,
        }
    }

    fn at(&self, t: f64) -> f64 {
        let i = self.starts.partition_point(|&s| s <= t).saturating_sub(1);
        self.cumulative[i] + (t - self.starts[i]) * self.prices[i]
    }
}

/// A feasible ordering of one unit.
struct UnitOption {
    slabs: Vec<usize>,
    penalty: f64,
    processing: f64,
}

fn unit_options(members: &[usize], instance: &ProblemInstance) -> Vec<UnitOption> {
    let mut out = Vec::new();
    let mut seq = Vec::with_capacity(members.len());
    let mut used = vec![false; members.len()];
    extend_unit(members, instance, &mut seq, &mut used, 0.0, 0.0, &mut out);
    out
}

/// Depth-first enumeration of orderings, pruned on the length and run bounds.
fn extend_unit(
    members: &[usize],
    instance: &ProblemInstance,
    seq: &mut Vec<usize>,
    used: &mut [bool],
    length: f64,
    run: f64,
    out: &mut Vec<UnitOption>,
) {
    if seq.len() == members.len() {
        if length >= instance.min_unit_length() {
            let penalty = seq.windows(2).map(|w| instance.penalty(w[0], w[1])).sum();
            let processing = seq.iter().map(|&s| instance.slab(s).processing_time).sum();
            out.push(UnitOption {
                slabs: seq.clone(),
                penalty,
                processing,
            });
        }
        return;
    }
    for i in 0..members.len() {
        if used[i] {
            continue;
        }
        let s = instance.slab(members[i]);
        let new_length = length + s.length;
        let same = seq.last().is_some_and(|&prev| instance.slab(prev).width == s.width);
        let new_run = if same { run + s.length } else { s.length };
        if new_length > instance.max_unit_length() || new_run > instance.max_same_width_run() {
            continue;
        }
        used[i] = true;
        seq.push(members[i]);
        extend_unit(members, instance, seq, used, new_length, new_run, out);
        seq.pop();
        used[i] = false;
    }
}

/// Cost of `unit` when it starts at `origin + k * grid`, for `k` in `0..=steps`.
fn unit_costs(
    unit: &[usize],
    origin: f64,
    grid: f64,
    steps: usize,
    instance: &ProblemInstance,
    integral: &PriceIntegral,
) -> Vec<f64> {
    (0..=steps)
        .map(|k| {
            let mut t = origin + k as f64 * grid;
            let mut cost = 0.0;
            for &s in unit {
                let slab = instance.slab(s);
                let end = t + slab.processing_time;
                let mean_price = (integral.at(end) - integral.at(t)) / slab.processing_time;
                cost += slab.energy * 1000.0 * mean_price;
                t = end;
            }
            cost
        })
        .collect()
}

struct Best {
    power_cost: f64,
    units: Vec<Vec<usize>>,
    idle: Vec<f64>,
}

fn offer(best: &mut BTreeMap<i64, Best>, penalty: f64, candidate: Best) {
    let key = (penalty * 1e6).round() as i64;
    match best.get(&key) {
        Some(b) if b.power_cost <= candidate.power_cost => {}
        _ => {
            best.insert(key, candidate);
        }
    }
}

/// The exact Pareto front of `instance` with idle times restricted to
/// multiples of `idle_grid`. Power cost uses the proportional mode.
pub fn exact_front(instance: &ProblemInstance, idle_grid: f64) -> Result<ExactFront, OracleError> {
    let n = instance.slab_count();
    let m = instance.unit_count();
    if n > MAX_SLABS {
        return Err(OracleError::TooManySlabs {
            found: n,
            max: MAX_SLABS,
        });
    }
    if m > MAX_UNITS {
        return Err(OracleError::TooManyUnits {
            found: m,
            max: MAX_UNITS,
        });
    }
    if !(idle_grid > 0.0 && idle_grid.is_finite()) {
        return Err(OracleError::InvalidGrid(idle_grid));
    }

    let integral = PriceIntegral::new(instance);
    let slack = instance.horizon() - instance.total_processing_time();
    let steps = (slack / idle_grid + 1e-9).floor().max(0.0) as usize;
    let mut best: BTreeMap<i64, Best> = BTreeMap::new();

    if m == 1 {
        let all: Vec<usize> = (0..n).collect();
        for opt in unit_options(&all, instance) {
            let costs = unit_costs(&opt.slabs, 0.0, idle_grid, steps, instance, &integral);
            let (a, &c) = argmin(&costs);
            offer(
                &mut best,
                opt.penalty,
                Best {
                    power_cost: c,
                    units: vec![opt.slabs],
                    idle: vec![a as f64 * idle_grid],
                },
            );
        }
    } else {
        for mask in 0u32..(1 << n) {
            let first: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let second: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) == 0).collect();
            if first.is_empty() || second.is_empty() {
                continue;
            }
            let opts1 = unit_options(&first, instance);
            if opts1.is_empty() {
                continue;
            }
            let opts2 = unit_options(&second, instance);
            if opts2.is_empty() {
                continue;
            }
            let p1 = opts1[0].processing;
            let costs1: Vec<Vec<f64>> = opts1
                .iter()
                .map(|o| unit_costs(&o.slabs, 0.0, idle_grid, steps, instance, &integral))
                .collect();
            // Unit 2 starts at p1 + s * grid where s >= a is the total idle.
            let suffix2: Vec<(Vec<f64>, Vec<usize>)> = opts2
                .iter()
                .map(|o| suffix_min(&unit_costs(&o.slabs, p1, idle_grid, steps, instance, &integral)))
                .collect();
            for (o1, c1) in opts1.iter().zip(&costs1) {
                for (o2, (s2, at2)) in opts2.iter().zip(&suffix2) {
                    let mut best_a = 0;
                    let mut best_cost = f64::INFINITY;
                    for a in 0..=steps {
                        let c = c1[a] + s2[a];
                        if c < best_cost {
                            best_cost = c;
                            best_a = a;
                        }
                    }
                    let total = at2[best_a];
                    offer(
                        &mut best,
                        o1.penalty + o2.penalty,
                        Best {
                            power_cost: best_cost,
                            units: vec![o1.slabs.clone(), o2.slabs.clone()],
                            idle: vec![best_a as f64 * idle_grid, (total - best_a) as f64 * idle_grid],
                        },
                    );
                }
            }
        }
    }

    // `best` is keyed by ascending penalty; keep strictly improving costs.
    let mut points = Vec::new();
    let mut floor = f64::INFINITY;
    for (key, b) in best {
        if b.power_cost < floor - COST_EPS {
            floor = b.power_cost;
            points.push(ExactPoint {
                objectives: ObjectiveVector::feasible(b.power_cost, key as f64 / 1e6),
                batch: BatchSchedule::from_units(b.units, instance),
                idle: b.idle,
            });
        }
    }
    points.reverse();
    Ok(ExactFront {
        points,
        instance_digest: instance.digest(),
        idle_grid,
    })
}

fn argmin(xs: &[f64]) -> (usize, &f64) {
    xs.iter()
        .enumerate()
        .fold((0, &xs[0]), |acc, (i, x)| if *x < *acc.1 { (i, x) } else { acc })
}

/// `out[a] = min_{s >= a} xs[s]` with the first index attaining it.
fn suffix_min(xs: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut vals = xs.to_vec();
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    for i in (0..xs.len().saturating_sub(1)).rev() {
        if vals[i + 1] < vals[i] {
            vals[i] = vals[i + 1];
            idx[i] = idx[i + 1];
        }
    }
    (vals, idx)
}

/// Rounds cumulative idle down to the grid, so every unit starts at most one
/// grid step earlier and the total never grows.
pub fn snap_idle_to_grid(idle: &[f64], grid: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(idle.len());
    let mut cumulative = 0.0;
    let mut snapped_prev = 0.0;
    for &v in idle {
        cumulative += v;
        let snapped = (cumulative / grid + 1e-9).floor() * grid;
        out.push((snapped - snapped_prev).max(0.0));
        snapped_prev = snapped;
    }
    out
}

/// Largest change in total power cost caused by moving each unit's start by
/// less than `grid` hours: `grid * 1000 * max slab power * Σ |price jumps|`.
pub fn grid_cost_tolerance(instance: &ProblemInstance, grid: f64) -> f64 {
    let max_power = instance.slabs().iter().map(|s| s.power()).fold(0.0, f64::max);
    let jumps: f64 = instance
        .tariff()
        .periods()
        .windows(2)
        .map(|w| (w[1].price - w[0].price).abs())
        .sum();
    grid * 1000.0 * max_power * jumps
}

/// Points of one front lacking a counterpart in the other.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrontDiff {
    /// Exact points with no found point of equal penalty and close cost.
    pub missing: Vec<[f64; 2]>,
    /// Found points with no exact point of equal penalty and close cost.
    pub extra: Vec<[f64; 2]>,
}

impl FrontDiff {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

/// Compares two fronts: penalties must match exactly, power costs within
/// `f1_tolerance`.
pub fn compare_fronts(found: &[[f64; 2]], exact: &[[f64; 2]], f1_tolerance: f64) -> FrontDiff {
    let close = |a: &[f64; 2], b: &[f64; 2]| (a[1] - b[1]).abs() < 1e-6 && (a[0] - b[0]).abs() <= f1_tolerance;
    FrontDiff {
        missing: exact
            .iter()
            .filter(|e| !found.iter().any(|f| close(f, e)))
            .copied()
            .collect(),
        extra: found
            .iter()
            .filter(|f| !exact.iter().any(|e| close(f, e)))
            .copied()
            .collect(),
    }
}

/// Compares two fronts up to `f1_tolerance`: each point of either front must
/// be matched or beaten by a point of the other, with a penalty no higher and
/// a power cost at most `f1_tolerance` higher. Unlike [`compare_fronts`] this
/// accepts points that are dominated only by less than the tolerance, which is
/// what happens when two schedules whose costs are closer than the tolerance
/// swap order once their idle times are moved onto the grid.
pub fn compare_fronts_within(found: &[[f64; 2]], exact: &[[f64; 2]], f1_tolerance: f64) -> FrontDiff {
    let covers = |a: &[f64; 2], b: &[f64; 2]| a[1] <= b[1] + 1e-6 && a[0] <= b[0] + f1_tolerance;
    FrontDiff {
        missing: exact
            .iter()
            .filter(|e| !found.iter().any(|f| covers(f, e)))
            .copied()
            .collect(),
        extra: found
            .iter()
            .filter(|f| !exact.iter().any(|e| covers(e, f)))
            .copied()
            .collect(),
    }
}

/// Non-dominated subset of `points`, one per distinct vector, sorted by the
/// first objective. First objectives within [`COST_EPS`] count as equal.
pub fn non_dominated_points(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a[1].total_cmp(&b[1]).then(a[0].total_cmp(&b[0])));
    let mut out: Vec<[f64; 2]> = Vec::new();
    let mut floor = f64::INFINITY;
    for p in sorted {
        if p[0] < floor - COST_EPS {
            floor = p[0];
            out.push(p);
        }
    }
    out.reverse();
    out
}
