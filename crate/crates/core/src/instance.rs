//! Problem data: slabs, jump penalties, rolling-unit capacity bounds and the
//! tariff, plus the JSON instance file that carries them.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::tariff::{TariffError, TouPeriod, TouTariff};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed instance document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("duplicate slab id {0}")]
    DuplicateSlabId(u32),
    #[error("processing exceeds horizon: slabs need {total} h but only {horizon} h are available")]
    ProcessingExceedsHorizon { total: f64, horizon: f64 },
    #[error("invalid `tariff`: {0}")]
    Tariff(#[from] TariffError),
}

impl InstanceError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        InstanceError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// A slab waiting to be rolled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub id: u32,
    #[serde(rename = "width_mm")]
    pub width: f64,
    #[serde(rename = "gauge_mm")]
    pub gauge: f64,
    /// Ordinal hardness grade.
    pub hardness: u32,
    #[serde(rename = "length_km")]
    pub length: f64,
    #[serde(rename = "time_h")]
    pub processing_time: f64,
    #[serde(rename = "energy_mwh")]
    pub energy: f64,
}

impl Slab {
    /// Average electrical load while this slab is rolled, in MW.
    pub fn power(&self) -> f64 {
        self.energy / self.processing_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyStep {
    pub max_jump: f64,
    pub penalty: f64,
}

/// Step function from an absolute attribute jump to a penalty score.
///
/// A jump is charged the penalty of the first step whose `max_jump` is not
/// smaller than it; jumps beyond the last step are charged `overflow`. A zero
/// jump is always free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTable {
    pub steps: Vec<PenaltyStep>,
    pub overflow: f64,
}

impl StepTable {
    pub fn new(steps: Vec<PenaltyStep>, overflow: f64) -> Self {
        StepTable { steps, overflow }
    }

    pub fn lookup(&self, jump: f64) -> f64 {
        let jump = jump.abs();
        if jump == 0.0 {
            return 0.0;
        }
        self.steps
            .iter()
            .find(|s| s.max_jump >= jump)
            .map_or(self.overflow, |s| s.penalty)
    }

    fn validate(&self, field: &str) -> Result<(), InstanceError> {
        let mut prev = 0.0;
        for (i, s) in self.steps.iter().enumerate() {
            if !(s.max_jump > prev) {
                return Err(InstanceError::invalid(
                    format!("{field}.steps[{i}].max_jump"),
                    "bounds must be positive and strictly increasing",
                ));
            }
            if !(s.penalty >= 0.0) {
                return Err(InstanceError::invalid(
                    format!("{field}.steps[{i}].penalty"),
                    "penalty must be non-negative",
                ));
            }
            prev = s.max_jump;
        }
        if !(self.overflow >= 0.0) {
            return Err(InstanceError::invalid(
                format!("{field}.overflow"),
                "penalty must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Jump penalties in width, gauge and hardness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyModel {
    pub width: StepTable,
    pub gauge: StepTable,
    pub hardness: StepTable,
}

impl PenaltyModel {
    /// Step tables shaped after the classic slab-sequencing penalty scheme:
    /// small jumps are cheap, penalties grow steeply with the jump.
    pub fn standard() -> Self {
        let steps = |xs: &[(f64, f64)]| {
            xs.iter()
                .map(|&(max_jump, penalty)| PenaltyStep { max_jump, penalty })
                .collect()
        };
        PenaltyModel {
            width: StepTable::new(
                steps(&[(50.0, 1.0), (100.0, 3.0), (150.0, 6.0), (250.0, 10.0), (400.0, 20.0)]),
                50.0,
            ),
            gauge: StepTable::new(steps(&[(0.25, 1.0), (0.5, 3.0), (1.0, 6.0), (2.0, 12.0)]), 25.0),
            hardness: StepTable::new(steps(&[(1.0, 2.0), (2.0, 5.0), (3.0, 10.0)]), 20.0),
        }
    }

    /// Penalty for rolling `b` immediately after `a`.
    pub fn between(&self, a: &Slab, b: &Slab) -> f64 {
        self.width.lookup(a.width - b.width)
            + self.gauge.lookup(a.gauge - b.gauge)
            + self.hardness.lookup(f64::from(a.hardness) - f64::from(b.hardness))
    }

    fn validate(&self) -> Result<(), InstanceError> {
        self.width.validate("penalties.width")?;
        self.gauge.validate("penalties.gauge")?;
        self.hardness.validate("penalties.hardness")
    }
}

/// Penalty for rolling `b` immediately after `a`.
pub fn penalty_between(model: &PenaltyModel, a: &Slab, b: &Slab) -> f64 {
    model.between(a, b)
}

/// On-disk form of a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub horizon_h: f64,
    pub unit_count: usize,
    pub min_unit_length_km: f64,
    pub max_unit_length_km: f64,
    pub max_same_width_run_km: f64,
    /// One tariff cycle starting at 0; tiled when shorter than the horizon.
    pub tariff: Vec<TouPeriod>,
    pub penalties: PenaltyModel,
    pub slabs: Vec<Slab>,
}

/// A validated scheduling problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    slabs: Vec<Slab>,
    unit_count: usize,
    min_unit_length: f64,
    max_unit_length: f64,
    max_same_width_run: f64,
    tariff_cycle: Vec<TouPeriod>,
    tariff: TouTariff,
    penalties: PenaltyModel,
}

impl ProblemInstance {
    pub fn from_doc(doc: InstanceDoc) -> Result<Self, InstanceError> {
        if doc.slabs.is_empty() {
            return Err(InstanceError::invalid("slabs", "at least one slab is required"));
        }
        if doc.unit_count == 0 {
            return Err(InstanceError::invalid("unit_count", "must be at least 1"));
        }
        if !(doc.min_unit_length_km > 0.0) {
            return Err(InstanceError::invalid("min_unit_length_km", "must be positive"));
        }
        if !(doc.max_unit_length_km >= doc.min_unit_length_km) {
            return Err(InstanceError::invalid(
                "max_unit_length_km",
                "must not be below min_unit_length_km",
            ));
        }
        if !(doc.max_same_width_run_km > 0.0) {
            return Err(InstanceError::invalid("max_same_width_run_km", "must be positive"));
        }
        if !(doc.horizon_h > 0.0) {
            return Err(InstanceError::invalid("horizon_h", "must be positive"));
        }
        let mut seen = HashSet::with_capacity(doc.slabs.len());
        for (i, s) in doc.slabs.iter().enumerate() {
            if !seen.insert(s.id) {
                return Err(InstanceError::DuplicateSlabId(s.id));
            }
            let fields = [
                ("width_mm", s.width),
                ("gauge_mm", s.gauge),
                ("hardness", f64::from(s.hardness)),
                ("length_km", s.length),
                ("time_h", s.processing_time),
                ("energy_mwh", s.energy),
            ];
            for (name, v) in fields {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(InstanceError::invalid(
                        format!("slabs[{i}].{name}"),
                        format!("must be positive and finite, got {v}"),
                    ));
                }
            }
            if s.id == 0 {
                return Err(InstanceError::invalid(format!("slabs[{i}].id"), "ids are 1-based"));
            }
        }
        doc.penalties.validate()?;
        let tariff = TouTariff::tiled(&doc.tariff, doc.horizon_h)?;

        let total: f64 = doc.slabs.iter().map(|s| s.processing_time).sum();
        if total > doc.horizon_h {
            return Err(InstanceError::ProcessingExceedsHorizon {
                total,
                horizon: doc.horizon_h,
            });
        }

        Ok(ProblemInstance {
            slabs: doc.slabs,
            unit_count: doc.unit_count,
            min_unit_length: doc.min_unit_length_km,
            max_unit_length: doc.max_unit_length_km,
            max_same_width_run: doc.max_same_width_run_km,
            tariff_cycle: doc.tariff,
            tariff,
            penalties: doc.penalties,
        })
    }

    pub fn to_doc(&self) -> InstanceDoc {
        InstanceDoc {
            horizon_h: self.horizon(),
            unit_count: self.unit_count,
            min_unit_length_km: self.min_unit_length,
            max_unit_length_km: self.max_unit_length,
            max_same_width_run_km: self.max_same_width_run,
            tariff: self.tariff_cycle.clone(),
            penalties: self.penalties.clone(),
            slabs: self.slabs.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("instance serializes")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn slabs(&self) -> &[Slab] {
        &self.slabs
    }

    pub fn slab(&self, index: usize) -> &Slab {
        &self.slabs[index]
    }

    /// Number of slabs.
    pub fn slab_count(&self) -> usize {
        self.slabs.len()
    }

    pub fn unit_count(&self) -> usize {
        self.unit_count
    }

    pub fn min_unit_length(&self) -> f64 {
        self.min_unit_length
    }

    pub fn max_unit_length(&self) -> f64 {
        self.max_unit_length
    }

    pub fn max_same_width_run(&self) -> f64 {
        self.max_same_width_run
    }

    pub fn horizon(&self) -> f64 {
        self.tariff.horizon()
    }

    pub fn tariff(&self) -> &TouTariff {
        &self.tariff
    }

    pub fn penalties(&self) -> &PenaltyModel {
        &self.penalties
    }

    pub fn total_processing_time(&self) -> f64 {
        self.slabs.iter().map(|s| s.processing_time).sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.slabs.iter().map(|s| s.energy).sum()
    }

    /// Idle time available once every slab is scheduled.
    pub fn slack(&self) -> f64 {
        (self.horizon() - self.total_processing_time()).max(0.0)
    }

    /// Length of the chromosome's permutation part.
    pub fn code_count(&self) -> usize {
        self.slabs.len() * self.unit_count
    }

    /// Penalty for rolling slab `b` right after slab `a` (instance indices).
    pub fn penalty(&self, a: usize, b: usize) -> f64 {
        self.penalties.between(&self.slabs[a], &self.slabs[b])
    }
}

impl TryFrom<InstanceDoc> for ProblemInstance {
    type Error = InstanceError;

    fn try_from(doc: InstanceDoc) -> Result<Self, Self::Error> {
        ProblemInstance::from_doc(doc)
    }
}

/// Parses and validates an instance document.
pub fn parse_instance(document: &str) -> Result<ProblemInstance, InstanceError> {
    let doc: InstanceDoc = serde_json::from_str(document)?;
    ProblemInstance::from_doc(doc)
}
