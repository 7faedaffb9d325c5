//! Hybrid chromosome `(perm, idle)`, the code-mapping decoder that turns the
//! permutation into rolling units, the idle-time adjustment, and unit timing.
//!
//! The permutation holds every code `1..=m*n` once. Code `c` names the pair
//! (slab `(c-1) mod n`, unit `(c-1) div n`), so each (slab, unit) pair has
//! exactly one code. The decoder scans codes left to right and appends a slab
//! to the named unit when the slab is still unplaced and neither the unit
//! length bound nor the same-width run bound would be exceeded.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::ProblemInstance;

/// Tolerance for idle-budget and horizon comparisons, in hours.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("permutation has {found} codes, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("permutation is not a permutation of 1..={expected}: {reason}")]
    InvalidPermutation { expected: usize, reason: String },
    #[error("invalid idle vector: {0}")]
    InvalidIdle(String),
    #[error("schedule is infeasible")]
    InfeasibleSchedule,
    #[error("schedule ends at {end} h, beyond the {horizon} h horizon")]
    HorizonOverflow { end: f64, horizon: f64 },
}

/// The hybrid chromosome: a permutation of codes plus per-unit idle hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub perm: Vec<u32>,
    pub idle: Vec<f64>,
}

impl Chromosome {
    pub fn new(perm: Vec<u32>, idle: Vec<f64>) -> Self {
        Chromosome { perm, idle }
    }

    /// Checks shape and value ranges against `instance`. The idle budget is
    /// not checked here; see [`crate::objectives::check_constraints`].
    pub fn validate(&self, instance: &ProblemInstance) -> Result<(), EncodingError> {
        validate_permutation(&self.perm, instance.code_count())?;
        if self.idle.len() != instance.unit_count() {
            return Err(EncodingError::InvalidIdle(format!(
                "expected {} entries, found {}",
                instance.unit_count(),
                self.idle.len()
            )));
        }
        if let Some(v) = self.idle.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(EncodingError::InvalidIdle(format!(
                "entry {v} is not a non-negative number"
            )));
        }
        Ok(())
    }
}

pub fn validate_permutation(perm: &[u32], expected: usize) -> Result<(), EncodingError> {
    if perm.len() != expected {
        return Err(EncodingError::LengthMismatch {
            expected,
            found: perm.len(),
        });
    }
    let mut seen = vec![false; expected];
    for &c in perm {
        let i = (c as usize).wrapping_sub(1);
        if i >= expected {
            return Err(EncodingError::InvalidPermutation {
                expected,
                reason: format!("code {c} out of range"),
            });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(EncodingError::InvalidPermutation {
                expected,
                reason: format!("code {c} repeated"),
            });
        }
    }
    Ok(())
}

/// Maps a 1-based code to `(slab index, unit index)`, both 0-based.
#[inline]
pub fn code_target(code: u32, slab_count: usize) -> (usize, usize) {
    let c = code as usize - 1;
    (c % slab_count, c / slab_count)
}

/// Inverse of [`code_target`].
#[inline]
pub fn code_for(slab: usize, unit: usize, slab_count: usize) -> u32 {
    (unit * slab_count + slab + 1) as u32
}

/// Why the decoder refused to append a slab to a unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RejectReason {
    /// The unit would exceed the maximum unit length.
    UnitLength {
        unit_length: f64,
        slab_length: f64,
        limit: f64,
    },
    /// The trailing same-width run would exceed its bound.
    SameWidthRun { run: f64, slab_length: f64, limit: f64 },
}

/// One refused placement, recorded by [`decode_traced`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rejection {
    /// Position of the code in the permutation.
    pub position: usize,
    pub slab: usize,
    pub unit: usize,
    pub reason: RejectReason,
}

/// Rolling units produced from a permutation.
///
/// `units[k]` lists slab indices (into [`ProblemInstance::slabs`]) in rolling
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSchedule {
    units: Vec<Vec<usize>>,
    unit_lengths: Vec<f64>,
    longest_runs: Vec<f64>,
    unplaced: Vec<usize>,
    short_units: Vec<usize>,
    feasible: bool,
}

impl BatchSchedule {
    /// Builds a schedule from explicit unit sequences and derives every
    /// statistic from them. `feasible` is true only when each slab appears
    /// exactly once and every unit respects the length and run bounds.
    pub fn from_units(units: Vec<Vec<usize>>, instance: &ProblemInstance) -> Self {
        let n = instance.slab_count();
        let mut count = vec![0usize; n];
        let mut valid_indices = true;
        for &s in units.iter().flatten() {
            match count.get_mut(s) {
                Some(c) => *c += 1,
                None => valid_indices = false,
            }
        }
        let unit_lengths: Vec<f64> = units
            .iter()
            .map(|u| u.iter().filter(|&&s| s < n).map(|&s| instance.slab(s).length).sum())
            .collect();
        let longest_runs: Vec<f64> = units.iter().map(|u| longest_same_width_run(u, instance)).collect();
        let unplaced: Vec<usize> = (0..n).filter(|&s| count[s] == 0).collect();
        let short_units: Vec<usize> = (0..units.len())
            .filter(|&k| unit_lengths[k] < instance.min_unit_length())
            .collect();
        let feasible = valid_indices
            && units.len() == instance.unit_count()
            && count.iter().all(|&c| c == 1)
            && short_units.is_empty()
            && unit_lengths.iter().all(|&l| l <= instance.max_unit_length())
            && longest_runs.iter().all(|&r| r <= instance.max_same_width_run());
        BatchSchedule {
            units,
            unit_lengths,
            longest_runs,
            unplaced,
            short_units,
            feasible,
        }
    }

    pub fn units(&self) -> &[Vec<usize>] {
        &self.units
    }

    pub fn unit(&self, k: usize) -> &[usize] {
        &self.units[k]
    }

    /// Cumulative rolled length of each unit, km.
    pub fn unit_lengths(&self) -> &[f64] {
        &self.unit_lengths
    }

    /// Longest run of equal-width consecutive slabs in each unit, km.
    pub fn longest_runs(&self) -> &[f64] {
        &self.longest_runs
    }

    /// Slabs the decoder could not place.
    pub fn unplaced(&self) -> &[usize] {
        &self.unplaced
    }

    /// Units shorter than the minimum unit length.
    pub fn short_units(&self) -> &[usize] {
        &self.short_units
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    /// Total processing time of each unit, hours.
    pub fn unit_processing_times(&self, instance: &ProblemInstance) -> Vec<f64> {
        self.units
            .iter()
            .map(|u| u.iter().map(|&s| instance.slab(s).processing_time).sum())
            .collect()
    }

    /// Total energy of each unit, MWh.
    pub fn unit_energies(&self, instance: &ProblemInstance) -> Vec<f64> {
        self.units
            .iter()
            .map(|u| u.iter().map(|&s| instance.slab(s).energy).sum())
            .collect()
    }
}

fn longest_same_width_run(unit: &[usize], instance: &ProblemInstance) -> f64 {
    let n = instance.slab_count();
    let mut best: f64 = 0.0;
    let mut run = 0.0;
    let mut prev: Option<f64> = None;
    for &s in unit.iter().filter(|&&s| s < n) {
        let slab = instance.slab(s);
        run = if prev == Some(slab.width) {
            run + slab.length
        } else {
            slab.length
        };
        prev = Some(slab.width);
        best = best.max(run);
    }
    best
}

struct UnitState {
    slabs: Vec<usize>,
    length: f64,
    run: f64,
    last_width: Option<f64>,
}

fn decode_inner(perm: &[u32], instance: &ProblemInstance, mut trace: Option<&mut Vec<Rejection>>) -> BatchSchedule {
    let n = instance.slab_count();
    let m = instance.unit_count();
    let (upper, run_limit) = (instance.max_unit_length(), instance.max_same_width_run());
    let mut placed = vec![false; n];
    let mut units: Vec<UnitState> = (0..m)
        .map(|_| UnitState {
            slabs: Vec::new(),
            length: 0.0,
            run: 0.0,
            last_width: None,
        })
        .collect();

    for (position, &code) in perm.iter().enumerate() {
        let (s, k) = code_target(code, n);
        if placed[s] {
            continue;
        }
        let slab = instance.slab(s);
        let unit = &mut units[k];
        // The run counter restarts whenever the width changes; it is only
        // committed if the slab is actually appended.
        let run = if unit.last_width == Some(slab.width) {
            unit.run + slab.length
        } else {
            slab.length
        };
        let reason = if unit.length + slab.length > upper {
            Some(RejectReason::UnitLength {
                unit_length: unit.length,
                slab_length: slab.length,
                limit: upper,
            })
        } else if run > run_limit {
            Some(RejectReason::SameWidthRun {
                run: run - slab.length,
                slab_length: slab.length,
                limit: run_limit,
            })
        } else {
            None
        };
        match reason {
            None => {
                unit.slabs.push(s);
                unit.length += slab.length;
                unit.run = run;
                unit.last_width = Some(slab.width);
                placed[s] = true;
            }
            Some(reason) => {
                if let Some(t) = trace.as_deref_mut() {
                    t.push(Rejection {
                        position,
                        slab: s,
                        unit: k,
                        reason,
                    });
                }
            }
        }
    }

    BatchSchedule::from_units(units.into_iter().map(|u| u.slabs).collect(), instance)
}

/// Runs the code-mapping procedure on `perm`.
///
/// Infeasibility (unplaced slabs or short units) is reported through
/// [`BatchSchedule::is_feasible`], not as an error.
pub fn decode(perm: &[u32], instance: &ProblemInstance) -> BatchSchedule {
    decode_inner(perm, instance, None)
}

/// Like [`decode`], also returning every refused placement.
pub fn decode_traced(perm: &[u32], instance: &ProblemInstance) -> (BatchSchedule, Vec<Rejection>) {
    let mut trace = Vec::new();
    let batch = decode_inner(perm, instance, Some(&mut trace));
    (batch, trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabTiming {
    pub slab: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitTiming {
    /// Idle hours inserted right before this unit.
    pub idle_before: f64,
    pub start: f64,
    pub end: f64,
    pub slabs: Vec<SlabTiming>,
}

/// Start and end times of every unit and slab.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedSchedule {
    pub units: Vec<UnitTiming>,
}

impl TimedSchedule {
    pub fn slabs(&self) -> impl Iterator<Item = &SlabTiming> {
        self.units.iter().flat_map(|u| u.slabs.iter())
    }

    pub fn end(&self) -> f64 {
        self.units.last().map_or(0.0, |u| u.end)
    }
}

/// Lays units out back to back in index order, each preceded by its idle
/// time; slabs inside a unit follow each other without gaps.
pub fn timing(
    schedule: &BatchSchedule,
    idle: &[f64],
    instance: &ProblemInstance,
) -> Result<TimedSchedule, EncodingError> {
    if !schedule.is_feasible() {
        return Err(EncodingError::InfeasibleSchedule);
    }
    if idle.len() != schedule.units().len() {
        return Err(EncodingError::InvalidIdle(format!(
            "expected {} entries, found {}",
            schedule.units().len(),
            idle.len()
        )));
    }
    let mut t = 0.0;
    let mut units = Vec::with_capacity(idle.len());
    for (unit, &v) in schedule.units().iter().zip(idle) {
        if !(v >= 0.0) {
            return Err(EncodingError::InvalidIdle(format!("negative entry {v}")));
        }
        t += v;
        let start = t;
        let slabs = unit
            .iter()
            .map(|&s| {
                let begin = t;
                t += instance.slab(s).processing_time;
                SlabTiming {
                    slab: s,
                    start: begin,
                    end: t,
                }
            })
            .collect();
        units.push(UnitTiming {
            idle_before: v,
            start,
            end: t,
            slabs,
        });
    }
    let horizon = instance.horizon();
    if t > horizon + TIME_EPS {
        return Err(EncodingError::HorizonOverflow { end: t, horizon });
    }
    Ok(TimedSchedule { units })
}

/// Moves idle time toward expensive periods.
///
/// Periods are visited from the most to the least expensive. For each period
/// and each unit `i`: when unit `i` starts in that period and finishes at a
/// cheaper price, the idle block in front of unit `i + 1` is moved in front
/// of unit `i` (delaying unit `i` without moving unit `i + 1`); when unit `i`
/// finishes in that period after starting at a cheaper price, the idle block
/// in front of unit `i` is moved in front of unit `i + 1` (advancing unit
/// `i`). Every move is a transfer, so the idle total is unchanged.
pub fn allocate_idle(
    schedule: &BatchSchedule,
    instance: &ProblemInstance,
    initial: &[f64],
) -> Result<Vec<f64>, EncodingError> {
    if !schedule.is_feasible() {
        return Err(EncodingError::InfeasibleSchedule);
    }
    let m = schedule.units().len();
    if initial.len() != m {
        return Err(EncodingError::InvalidIdle(format!(
            "expected {m} entries, found {}",
            initial.len()
        )));
    }
    if let Some(v) = initial.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(EncodingError::InvalidIdle(format!(
            "entry {v} is not a non-negative number"
        )));
    }
    let total: f64 = initial.iter().sum();
    let slack = instance.horizon() - instance.total_processing_time();
    if total > slack + TIME_EPS {
        return Err(EncodingError::InvalidIdle(format!(
            "total idle {total} h exceeds the available {slack} h"
        )));
    }

    let tariff = instance.tariff();
    let durations = schedule.unit_processing_times(instance);
    let mut idle = initial.to_vec();

    let mut order: Vec<usize> = (0..tariff.periods().len()).collect();
    order.sort_by(|&a, &b| tariff.periods()[b].price.total_cmp(&tariff.periods()[a].price));

    let bounds = |idle: &[f64], i: usize| {
        let before: f64 = durations[..i].iter().sum::<f64>() + idle[..=i].iter().sum::<f64>();
        (before, before + durations[i])
    };

    for &j in &order {
        let price = tariff.periods()[j].price;
        for i in 0..m {
            if i + 1 >= m {
                continue;
            }
            let (start, end) = bounds(&idle, i);
            // Zero-length units carry no cost to move.
            if end <= start || end > tariff.horizon() + TIME_EPS {
                continue;
            }
            let end = end.min(tariff.horizon());
            let start_period = tariff.period_index_at(start.min(tariff.horizon() - TIME_EPS));
            let end_period = tariff.period_index_ending_at(end);
            let (Ok(sp), Ok(ep)) = (start_period, end_period) else {
                continue;
            };
            let start_price = tariff.periods()[sp].price;
            let end_price = tariff.periods()[ep].price;

            if sp == j && end_price < price && idle[i + 1] > 0.0 {
                let moved = std::mem::take(&mut idle[i + 1]);
                idle[i] += moved;
            } else if ep == j && start_price < price && idle[i] > 0.0 {
                let moved = std::mem::take(&mut idle[i]);
                idle[i + 1] += moved;
            }
        }
    }
    Ok(idle)
}

/// Splits the whole `budget` into `count` non-negative parts, uniformly over
/// the face `{v >= 0, sum(v) = budget}`. Unused slack never lowers the cost,
/// so drawing inside the simplex would only waste samples.
pub fn sample_idle<R: Rng + ?Sized>(count: usize, budget: f64, rng: &mut R) -> Vec<f64> {
    if count == 0 || !(budget > 0.0) {
        return vec![0.0; count];
    }
    // Normalised exponential spacings.
    let draws: Vec<f64> = (0..count).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = draws.iter().sum();
    if !(sum > 0.0) {
        return vec![0.0; count];
    }
    let mut idle: Vec<f64> = draws.iter().map(|e| budget * e / sum).collect();
    // Guard against rounding pushing the total a hair over the budget.
    let total: f64 = idle.iter().sum();
    if total > budget {
        let scale = budget / total;
        idle.iter_mut().for_each(|v| *v *= scale);
    }
    idle
}

/// A uniformly random permutation with a random idle vector. Idle time is
/// only drawn when the permutation decodes to a feasible batch; otherwise it
/// is all zeros.
pub fn random_chromosome<R: Rng + ?Sized>(instance: &ProblemInstance, rng: &mut R) -> Chromosome {
    let mut perm: Vec<u32> = (1..=instance.code_count() as u32).collect();
    perm.shuffle(rng);
    let batch = decode(&perm, instance);
    let idle = if batch.is_feasible() {
        sample_idle(instance.unit_count(), instance.slack(), rng)
    } else {
        vec![0.0; instance.unit_count()]
    };
    Chromosome { perm, idle }
}

/// Draws a fresh idle vector for `perm` and adjusts it toward expensive
/// periods. Infeasible permutations get all-zero idle.
pub fn refresh_idle<R: Rng + ?Sized>(perm: &[u32], instance: &ProblemInstance, rng: &mut R) -> Vec<f64> {
    let batch = decode(perm, instance);
    let m = instance.unit_count();
    if !batch.is_feasible() {
        return vec![0.0; m];
    }
    let drawn = sample_idle(m, instance.slack(), rng);
    allocate_idle(&batch, instance, &drawn).unwrap_or_else(|_| vec![0.0; m])
}
