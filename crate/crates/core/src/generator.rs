//! Synthetic instances shaped after four kinds of production days: many or
//! few product varieties, with the mill either fully loaded or not.
//!
//! The variety level sets the spread of width, gauge, hardness and power;
//! the load level sets total processing time relative to the horizon.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{InstanceDoc, PenaltyModel, ProblemInstance, Slab};
use crate::tariff::steel_mill_daily_periods;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("unknown profile `{0}`; expected `<many|few>-varieties,<full|not-full>-load`")]
    UnknownProfile(String),
    #[error("need at least one slab and one unit")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variety {
    Many,
    Few,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Load {
    Full,
    NotFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub variety: Variety,
    pub load: Load,
}

impl Profile {
    pub const MANY_FULL: Profile = Profile {
        variety: Variety::Many,
        load: Load::Full,
    };
    pub const FEW_NOT_FULL: Profile = Profile {
        variety: Variety::Few,
        load: Load::NotFull,
    };

    /// Share of the horizon taken by processing.
    pub fn load_factor(&self) -> f64 {
        match self.load {
            Load::Full => 0.97,
            Load::NotFull => 0.85,
        }
    }
}

impl FromStr for Profile {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut variety = None;
        let mut load = None;
        for part in s.split([',', '+']).map(str::trim) {
            match part {
                "many-varieties" | "many" => variety = Some(Variety::Many),
                "few-varieties" | "few" => variety = Some(Variety::Few),
                "full-load" | "full" => load = Some(Load::Full),
                "not-full-load" | "not-full" => load = Some(Load::NotFull),
                _ => return Err(GeneratorError::UnknownProfile(s.to_string())),
            }
        }
        match (variety, load) {
            (Some(variety), Some(load)) => Ok(Profile { variety, load }),
            _ => Err(GeneratorError::UnknownProfile(s.to_string())),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.variety {
            Variety::Many => "many-varieties",
            Variety::Few => "few-varieties",
        };
        let l = match self.load {
            Load::Full => "full-load",
            Load::NotFull => "not-full-load",
        };
        write!(f, "{v},{l}")
    }
}

pub const HORIZON_H: f64 = 24.0;
pub const MIN_UNIT_KM: f64 = 5.0;
pub const MAX_UNIT_KM: f64 = 10.0;

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Generates an instance document. The same arguments always give the same
/// document.
pub fn generate_doc(n: usize, m: usize, seed: u64, profile: Profile) -> Result<InstanceDoc, GeneratorError> {
    if n == 0 || m == 0 {
        return Err(GeneratorError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Fill units close to capacity when there are many slabs per unit.
    let fill = if n as f64 / m as f64 >= 20.0 { 0.92 } else { 0.75 };
    let total_length = fill * m as f64 * MAX_UNIT_KM;
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.6..1.4)).collect();
    let raw_sum: f64 = raw.iter().sum();
    let lengths: Vec<f64> = raw.iter().map(|r| round4(r * total_length / raw_sum)).collect();

    let time_weights: Vec<f64> = lengths.iter().map(|l| l * rng.gen_range(0.8..1.2)).collect();
    let weight_sum: f64 = time_weights.iter().sum();
    let total_time = profile.load_factor() * HORIZON_H;
    // Round down so rounding never pushes the total past the target.
    let times: Vec<f64> = time_weights
        .iter()
        .map(|w| ((w * total_time / weight_sum * 1e4).floor() / 1e4).max(1e-4))
        .collect();

    let (widths, powers): (Vec<f64>, (f64, f64)) = match profile.variety {
        Variety::Many => ((0..40).map(|k| 900.0 + 20.0 * k as f64).collect(), (15.0, 28.0)),
        Variety::Few => ((0..6).map(|k| 1000.0 + 50.0 * k as f64).collect(), (19.0, 23.0)),
    };

    let slabs: Vec<Slab> = (0..n)
        .map(|i| {
            let width = *widths.choose(&mut rng).expect("width list is not empty");
            let (gauge, hardness) = match profile.variety {
                Variety::Many => (
                    (rng.gen_range(1.8..12.0f64) * 10.0).round() / 10.0,
                    rng.gen_range(1..=8),
                ),
                Variety::Few => (*[2.0, 2.5, 3.0, 3.5].choose(&mut rng).unwrap(), rng.gen_range(1..=3)),
            };
            let power = rng.gen_range(powers.0..powers.1);
            Slab {
                id: i as u32 + 1,
                width,
                gauge,
                hardness,
                length: lengths[i],
                processing_time: times[i],
                energy: round4(power * times[i]),
            }
        })
        .collect();

    let longest = lengths.iter().copied().fold(0.0, f64::max);
    Ok(InstanceDoc {
        horizon_h: HORIZON_H,
        unit_count: m,
        min_unit_length_km: MIN_UNIT_KM,
        max_unit_length_km: MAX_UNIT_KM,
        max_same_width_run_km: round4((1.5 * longest).max(1.0)),
        tariff: steel_mill_daily_periods(),
        penalties: PenaltyModel::standard(),
        slabs,
    })
}

/// Generates and validates an instance.
pub fn generate(n: usize, m: usize, seed: u64, profile: Profile) -> Result<ProblemInstance, GeneratorError> {
    let doc = generate_doc(n, m, seed, profile)?;
    Ok(ProblemInstance::from_doc(doc).expect("generated instances are valid"))
}
