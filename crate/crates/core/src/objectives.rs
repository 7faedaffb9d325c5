//! The two objectives (electricity cost and jump penalties) and an
//! independent constraint checker.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::encoding::{decode, timing, BatchSchedule, Chromosome, TimedSchedule, TIME_EPS};
use crate::instance::ProblemInstance;
use crate::tariff::CostMode;

/// Objective value given to both objectives of an infeasible solution.
pub const INFEASIBLE_SENTINEL: f64 = 1e12;

/// `f1` (power cost, CNY) and `f2` (penalty score), both minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub power_cost: f64,
    pub penalty: f64,
    pub feasible: bool,
}

impl ObjectiveVector {
    pub fn feasible(power_cost: f64, penalty: f64) -> Self {
        ObjectiveVector {
            power_cost,
            penalty,
            feasible: true,
        }
    }

    pub fn infeasible() -> Self {
        ObjectiveVector {
            power_cost: INFEASIBLE_SENTINEL,
            penalty: INFEASIBLE_SENTINEL,
            feasible: false,
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.power_cost, self.penalty]
    }

    /// Pareto dominance for minimization.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        dominates(self.as_array(), other.as_array())
    }
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: [f64; 2], b: [f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Total electricity cost of a timed schedule in CNY.
pub fn eval_power_cost(timed: &TimedSchedule, instance: &ProblemInstance, mode: CostMode) -> f64 {
    let tariff = instance.tariff();
    let horizon = tariff.horizon();
    timed
        .slabs()
        .map(|s| {
            let start = s.start.clamp(0.0, horizon);
            let end = s.end.clamp(start, horizon);
            tariff
                .interval_cost(start, end, instance.slab(s.slab).energy, mode)
                .expect("slab interval lies inside the horizon")
        })
        .sum()
}

/// Sum of jump penalties between consecutive slabs of each unit.
pub fn eval_penalty(batch: &BatchSchedule, instance: &ProblemInstance) -> f64 {
    batch
        .units()
        .iter()
        .map(|u| u.windows(2).map(|w| instance.penalty(w[0], w[1])).sum::<f64>())
        .sum()
}

/// Evaluates a chromosome. Decoding failures, idle vectors over budget and
/// horizon overflows all yield [`ObjectiveVector::infeasible`].
pub fn evaluate(chromosome: &Chromosome, instance: &ProblemInstance, mode: CostMode) -> ObjectiveVector {
    let batch = decode(&chromosome.perm, instance);
    evaluate_batch(&batch, &chromosome.idle, instance, mode)
}

/// Evaluates an already decoded batch with the given idle vector.
pub fn evaluate_batch(
    batch: &BatchSchedule,
    idle: &[f64],
    instance: &ProblemInstance,
    mode: CostMode,
) -> ObjectiveVector {
    if !batch.is_feasible() || idle_budget_exceeded(idle, instance) {
        return ObjectiveVector::infeasible();
    }
    match timing(batch, idle, instance) {
        Ok(timed) => ObjectiveVector::feasible(eval_power_cost(&timed, instance, mode), eval_penalty(batch, instance)),
        Err(_) => ObjectiveVector::infeasible(),
    }
}

fn idle_budget_exceeded(idle: &[f64], instance: &ProblemInstance) -> bool {
    idle.iter().sum::<f64>() > instance.horizon() - instance.total_processing_time() + TIME_EPS
}

/// The model constraint a [`Violation`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// The batch does not have exactly `m` units.
    UnitCount,
    /// A slab is not scheduled exactly once.
    SlabAssignment,
    /// A same-width run inside a unit is longer than allowed.
    SameWidthRun,
    /// A unit is shorter than the minimum length.
    MinUnitLength,
    /// A unit is longer than the maximum length.
    MaxUnitLength,
    /// The idle vector has the wrong length or a negative entry.
    IdleShape,
    /// Total idle time exceeds the horizon slack.
    IdleBudget,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Constraint::UnitCount => "unit-count",
            Constraint::SlabAssignment => "slab-assignment",
            Constraint::SameWidthRun => "same-width-run",
            Constraint::MinUnitLength => "min-unit-length",
            Constraint::MaxUnitLength => "max-unit-length",
            Constraint::IdleShape => "idle-shape",
            Constraint::IdleBudget => "idle-budget",
        };
        f.write_str(name)
    }
}

/// One broken constraint. `margin` is the amount by which the bound is
/// exceeded (km, hours or a count, depending on the constraint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub unit: Option<usize>,
    pub slab: Option<usize>,
    pub margin: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constraint)?;
        if let Some(u) = self.unit {
            write!(f, " unit {}", u + 1)?;
        }
        if let Some(s) = self.slab {
            write!(f, " slab index {s}")?;
        }
        write!(f, " (margin {:.6})", self.margin)
    }
}

/// Checks every model constraint by walking the units directly. Returns an
/// empty list iff the batch and idle vector are valid.
pub fn check_constraints(batch: &BatchSchedule, idle: &[f64], instance: &ProblemInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = instance.slab_count();
    let m = instance.unit_count();
    let units = batch.units();
    let violation = |constraint, unit, slab, margin| Violation {
        constraint,
        unit,
        slab,
        margin,
    };

    if units.len() != m {
        out.push(violation(
            Constraint::UnitCount,
            None,
            None,
            units.len() as f64 - m as f64,
        ));
    }

    let mut count = vec![0usize; n];
    for (k, unit) in units.iter().enumerate() {
        for &s in unit {
            if s < n {
                count[s] += 1;
            } else {
                out.push(violation(Constraint::SlabAssignment, Some(k), Some(s), 1.0));
            }
        }
    }
    for (s, &c) in count.iter().enumerate() {
        if c != 1 {
            out.push(violation(Constraint::SlabAssignment, None, Some(s), c as f64 - 1.0));
        }
    }

    for (k, unit) in units.iter().enumerate() {
        let slabs: Vec<_> = unit.iter().filter(|&&s| s < n).map(|&s| instance.slab(s)).collect();
        let length: f64 = slabs.iter().map(|s| s.length).sum();
        if length > instance.max_unit_length() {
            out.push(violation(
                Constraint::MaxUnitLength,
                Some(k),
                None,
                length - instance.max_unit_length(),
            ));
        }
        if length < instance.min_unit_length() {
            out.push(violation(
                Constraint::MinUnitLength,
                Some(k),
                None,
                instance.min_unit_length() - length,
            ));
        }
        let mut i = 0;
        while i < slabs.len() {
            let mut j = i;
            let mut run = 0.0;
            while j < slabs.len() && slabs[j].width == slabs[i].width {
                run += slabs[j].length;
                j += 1;
            }
            if run > instance.max_same_width_run() {
                out.push(violation(
                    Constraint::SameWidthRun,
                    Some(k),
                    Some(unit[i]),
                    run - instance.max_same_width_run(),
                ));
            }
            i = j;
        }
    }

    if idle.len() != m {
        out.push(violation(
            Constraint::IdleShape,
            None,
            None,
            idle.len() as f64 - m as f64,
        ));
    }
    for (k, &v) in idle.iter().enumerate() {
        if !(v >= 0.0) {
            out.push(violation(Constraint::IdleShape, Some(k), None, -v));
        }
    }
    let budget = instance.horizon() - instance.total_processing_time();
    let total: f64 = idle.iter().sum();
    if total > budget + TIME_EPS {
        out.push(violation(Constraint::IdleBudget, None, None, total - budget));
    }
    out
}
