//! Result files of a run and the readers for the ones that are fed back in.
//!
//! | file                   | content                                              |
//! |------------------------|------------------------------------------------------|
//! | `pareto.csv`           | `f1_cny,f2_penalty,perm,idle`, one row per archive member, by power cost |
//! | `ranking.csv`          | `rank,closeness,f1_cny,f2_penalty,front_row`          |
//! | `schedule_report.csv`  | one row per rolling unit of the recommended solution |
//! | `load_histogram.csv`   | energy drawn in each tariff period                   |
//! | `gantt.svg`            | units as bars over the price step line (optional)    |
//! | `solution.json`        | the recommended chromosome                           |
//! | `manifest.json`        | everything needed to repeat the run                  |
//!
//! Numbers are written in their shortest exact decimal form, so reading a
//! file back gives the same `f64` values and equal inputs give equal bytes.
//! `perm` is a space separated list of codes and `idle` a space separated
//! list of idle hours, one per unit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{decode, timing, BatchSchedule, Chromosome, EncodingError, TimedSchedule};
use crate::instance::ProblemInstance;
use crate::moea::{EvolveResult, Individual, SolverParams};
use crate::objectives::evaluate_batch;
use crate::tariff::{PeriodLabel, KWH_PER_MWH};
use crate::topsis::{rank_points, RankEntry, TopsisError, TopsisRanking, Weights};

pub const PARETO_FILE: &str = "pareto.csv";
pub const RANKING_FILE: &str = "ranking.csv";
pub const SCHEDULE_FILE: &str = "schedule_report.csv";
pub const HISTOGRAM_FILE: &str = "load_histogram.csv";
pub const GANTT_FILE: &str = "gantt.svg";
pub const SOLUTION_FILE: &str = "solution.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("front file: {0}")]
    Front(String),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Ranking(#[from] TopsisError),
    #[error("no feasible solution was found")]
    NoFeasibleSolution,
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, ArtifactError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl From<std::io::Error> for ArtifactError {
    fn from(source: std::io::Error) -> Self {
        ArtifactError::Io {
            path: PathBuf::new(),
            source,
        }
    }
}

/// One row of a front file.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontRow {
    pub f1_cny: f64,
    pub f2_penalty: f64,
    /// Present when the file carries `perm` and `idle` columns.
    pub chromosome: Option<Chromosome>,
}

/// Writes the front file for `solutions` in the given order.
pub fn pareto_csv(solutions: &[Individual]) -> Result<String, ArtifactError> {
    csv_string(
        &["f1_cny", "f2_penalty", "perm", "idle"],
        solutions.iter().map(|s| {
            vec![
                s.objectives.power_cost.to_string(),
                s.objectives.penalty.to_string(),
                join(&s.chromosome.perm),
                join(&s.chromosome.idle),
            ]
        }),
    )
}

#[derive(Deserialize)]
struct RawFrontRow {
    f1_cny: f64,
    f2_penalty: f64,
    #[serde(default)]
    perm: Option<String>,
    #[serde(default)]
    idle: Option<String>,
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str, row: usize) -> Result<Vec<T>, ArtifactError> {
    text.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| ArtifactError::Front(format!("row {row}: `{t}` is not a valid {what} entry")))
        })
        .collect()
}

/// Reads a front file. Only `f1_cny` and `f2_penalty` are required.
pub fn read_front_csv(text: &str) -> Result<Vec<FrontRow>, ArtifactError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    for needed in ["f1_cny", "f2_penalty"] {
        if !headers.iter().any(|h| h == needed) {
            return Err(ArtifactError::Front(format!("missing column `{needed}`")));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.deserialize::<RawFrontRow>().enumerate() {
        let raw = record?;
        let row = i + 1;
        let chromosome = match (raw.perm, raw.idle) {
            (Some(p), Some(v)) if !p.trim().is_empty() => Some(Chromosome::new(
                parse_list(&p, "perm", row)?,
                parse_list(&v, "idle", row)?,
            )),
            _ => None,
        };
        rows.push(FrontRow {
            f1_cny: raw.f1_cny,
            f2_penalty: raw.f2_penalty,
            chromosome,
        });
    }
    Ok(rows)
}

/// TOPSIS ranking that also accepts a single solution, which is then the
/// recommendation with closeness 1.
pub fn recommend(points: &[[f64; 2]], weights: Weights) -> Result<TopsisRanking, TopsisError> {
    if let [p] = points {
        return Ok(TopsisRanking {
            entries: vec![RankEntry {
                index: 0,
                closeness: 1.0,
                power_cost: p[0],
                penalty: p[1],
            }],
            weights,
        });
    }
    rank_points(points, weights)
}

/// `front_row` is the 1-based row of the solution in the front file.
pub fn ranking_csv(ranking: &TopsisRanking) -> Result<String, ArtifactError> {
    csv_string(
        &["rank", "closeness", "f1_cny", "f2_penalty", "front_row"],
        ranking.entries.iter().enumerate().map(|(r, e)| {
            vec![
                (r + 1).to_string(),
                e.closeness.to_string(),
                e.power_cost.to_string(),
                e.penalty.to_string(),
                (e.index + 1).to_string(),
            ]
        }),
    )
}

/// Summary of one rolling unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitReport {
    /// 1-based.
    pub unit: usize,
    pub slab_count: usize,
    pub rolling_length_km: f64,
    pub processing_time_h: f64,
    pub power_demand_mwh: f64,
    pub average_load_mw: f64,
    pub start_h: f64,
    pub end_h: f64,
    /// Idle inserted before the unit.
    pub idle_h: f64,
    pub slab_ids: Vec<u32>,
}

pub fn schedule_report(batch: &BatchSchedule, timed: &TimedSchedule, instance: &ProblemInstance) -> Vec<UnitReport> {
    let lengths = batch.unit_lengths();
    let times = batch.unit_processing_times(instance);
    let energies = batch.unit_energies(instance);
    timed
        .units
        .iter()
        .enumerate()
        .map(|(k, u)| UnitReport {
            unit: k + 1,
            slab_count: u.slabs.len(),
            rolling_length_km: lengths[k],
            processing_time_h: times[k],
            power_demand_mwh: energies[k],
            average_load_mw: if times[k] > 0.0 { energies[k] / times[k] } else { 0.0 },
            start_h: u.start,
            end_h: u.end,
            idle_h: u.idle_before,
            slab_ids: u.slabs.iter().map(|s| instance.slab(s.slab).id).collect(),
        })
        .collect()
}

pub fn schedule_report_csv(units: &[UnitReport]) -> Result<String, ArtifactError> {
    csv_string(
        &[
            "unit",
            "slab_count",
            "rolling_length_km",
            "processing_time_h",
            "power_demand_mwh",
            "average_load_mw",
            "start_h",
            "end_h",
            "idle_h",
            "slab_ids",
        ],
        units.iter().map(|u| {
            vec![
                u.unit.to_string(),
                u.slab_count.to_string(),
                u.rolling_length_km.to_string(),
                u.processing_time_h.to_string(),
                u.power_demand_mwh.to_string(),
                u.average_load_mw.to_string(),
                u.start_h.to_string(),
                u.end_h.to_string(),
                u.idle_h.to_string(),
                join(&u.slab_ids),
            ]
        }),
    )
}

/// Energy drawn during one tariff period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodLoad {
    /// 1-based.
    pub period: usize,
    pub start_h: f64,
    pub end_h: f64,
    pub label: PeriodLabel,
    pub price_cny_per_kwh: f64,
    pub energy_mwh: f64,
    pub average_power_mw: f64,
    /// Cost of that energy at the period price.
    pub cost_cny: f64,
}

/// Splits each slab's energy over the periods its processing overlaps, in
/// proportion to time. The energies add up to the total energy of the slabs.
pub fn load_histogram(timed: &TimedSchedule, instance: &ProblemInstance) -> Vec<PeriodLoad> {
    let tariff = instance.tariff();
    let horizon = tariff.horizon();
    let mut energy = vec![0.0; tariff.periods().len()];
    for s in timed.slabs() {
        let e = instance.slab(s.slab).energy;
        let (start, end) = (s.start.clamp(0.0, horizon), s.end.clamp(0.0, horizon));
        if end <= start {
            continue;
        }
        let span = end - start;
        for (i, hours) in tariff.overlaps(start, end).expect("slab lies inside the horizon") {
            energy[i] += e * hours / span;
        }
    }
    tariff
        .periods()
        .iter()
        .zip(energy)
        .enumerate()
        .map(|(i, (p, e))| PeriodLoad {
            period: i + 1,
            start_h: p.start,
            end_h: p.end(),
            label: p.label,
            price_cny_per_kwh: p.price,
            energy_mwh: e,
            average_power_mw: e / p.duration,
            cost_cny: e * KWH_PER_MWH * p.price,
        })
        .collect()
}

/// Average power over all periods carrying `label`, in MW.
pub fn average_power_in(histogram: &[PeriodLoad], label: PeriodLabel) -> f64 {
    let (energy, hours) = histogram
        .iter()
        .filter(|p| p.label == label)
        .fold((0.0, 0.0), |(e, h), p| (e + p.energy_mwh, h + (p.end_h - p.start_h)));
    if hours > 0.0 {
        energy / hours
    } else {
        0.0
    }
}

pub fn load_histogram_csv(histogram: &[PeriodLoad]) -> Result<String, ArtifactError> {
    csv_string(
        &[
            "period",
            "start_h",
            "end_h",
            "label",
            "price_cny_per_kwh",
            "energy_mwh",
            "average_power_mw",
            "cost_cny",
        ],
        histogram.iter().map(|p| {
            vec![
                p.period.to_string(),
                p.start_h.to_string(),
                p.end_h.to_string(),
                p.label.to_string(),
                p.price_cny_per_kwh.to_string(),
                p.energy_mwh.to_string(),
                p.average_power_mw.to_string(),
                p.cost_cny.to_string(),
            ]
        }),
    )
}

/// Gantt chart: the price step line on top, one bar per unit below it, with
/// tick marks between slabs and the idle gaps left blank.
pub fn gantt_svg(timed: &TimedSchedule, instance: &ProblemInstance) -> String {
    const LEFT: f64 = 60.0;
    const WIDTH: f64 = 900.0;
    const PRICE_TOP: f64 = 20.0;
    const PRICE_H: f64 = 120.0;
    const ROW_H: f64 = 28.0;
    const ROWS_TOP: f64 = PRICE_TOP + PRICE_H + 30.0;
    const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"];

    let tariff = instance.tariff();
    let horizon = tariff.horizon();
    let x = |t: f64| LEFT + WIDTH * t / horizon;
    let (lo, hi) = (tariff.min_price(), tariff.max_price());
    let y = |p: f64| {
        let frac = if hi > lo { (p - lo) / (hi - lo) } else { 0.5 };
        PRICE_TOP + PRICE_H * (1.0 - (0.1 + 0.8 * frac))
    };
    let height = ROWS_TOP + ROW_H * timed.units.len() as f64 + 40.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{height}" viewBox="0 0 {w} {height}" font-family="sans-serif" font-size="11">"#,
        w = LEFT + WIDTH + 20.0
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // Price step line.
    let mut path = String::new();
    for (i, p) in tariff.periods().iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(
            path,
            "{cmd}{:.2},{:.2} L{:.2},{:.2} ",
            x(p.start),
            y(p.price),
            x(p.end()),
            y(p.price)
        );
    }
    let _ = writeln!(
        s,
        r##"<path d="{}" fill="none" stroke="#333" stroke-width="2"/>"##,
        path.trim_end()
    );
    for p in tariff.periods() {
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="#333">{}</text>"##,
            x(p.start + p.duration / 2.0),
            y(p.price) - 4.0,
            p.price
        );
    }
    let _ = writeln!(s, r#"<text x="4" y="{:.2}">CNY/kWh</text>"#, PRICE_TOP + 10.0);

    // Hour axis.
    let axis_y = ROWS_TOP + ROW_H * timed.units.len() as f64 + 8.0;
    let step = if horizon > 48.0 { 12.0 } else { 2.0 };
    let mut t = 0.0;
    while t <= horizon + 1e-9 {
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#ddd"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"##,
            x(t),
            PRICE_TOP,
            axis_y,
            axis_y + 14.0,
            t
        );
        t += step;
    }

    for (k, u) in timed.units.iter().enumerate() {
        let top = ROWS_TOP + ROW_H * k as f64;
        let colour = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<text x="4" y="{:.2}">unit {}</text>"#,
            top + ROW_H / 2.0 + 4.0,
            k + 1
        );
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}"><title>unit {}: {:.3} h to {:.3} h</title></rect>"#,
            x(u.start),
            top + 4.0,
            (x(u.end) - x(u.start)).max(0.5),
            ROW_H - 8.0,
            k + 1,
            u.start,
            u.end
        );
        for sl in u.slabs.iter().skip(1) {
            let _ = writeln!(
                s,
                r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="white" stroke-width="0.5"/>"#,
                x(sl.start),
                top + 4.0,
                top + ROW_H - 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// A chromosome saved for later evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    /// Digest of the instance the solution was found for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_digest: Option<String>,
    pub perm: Vec<u32>,
    pub idle_h: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1_cny: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2_penalty: Option<f64>,
}

impl SolutionDoc {
    pub fn from_individual(ind: &Individual, instance: &ProblemInstance) -> Self {
        SolutionDoc {
            instance_digest: Some(instance.digest()),
            perm: ind.chromosome.perm.clone(),
            idle_h: ind.chromosome.idle.clone(),
            f1_cny: Some(ind.objectives.power_cost),
            f2_penalty: Some(ind.objectives.penalty),
        }
    }

    pub fn chromosome(&self) -> Chromosome {
        Chromosome::new(self.perm.clone(), self.idle_h.clone())
    }
}

/// Everything needed to repeat a run: with the same instance file and these
/// parameters every CSV comes out byte for byte the same.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub instance_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_path: Option<String>,
    pub seed: u64,
    /// The horizon is longer than one tariff cycle, so the tariff was repeated.
    pub multi_day: bool,
    pub params: SolverParams,
    pub weights: Weights,
    pub wall_time_s: f64,
    pub archive_size: usize,
    /// 1-based row of the recommended solution in the front file.
    pub recommended_row: usize,
    pub files: Vec<String>,
}

/// All outputs of a solve run, held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub pareto_csv: String,
    pub ranking_csv: String,
    pub schedule_report_csv: String,
    pub load_histogram_csv: String,
    pub gantt_svg: Option<String>,
    pub solution: SolutionDoc,
    pub manifest: RunManifest,
    /// Not written; kept for callers that print a summary.
    pub recommended: Individual,
    pub ranking: TopsisRanking,
    pub units: Vec<UnitReport>,
    pub histogram: Vec<PeriodLoad>,
}

/// Options of [`RunArtifacts::build`] that do not affect the optimization.
#[derive(Debug, Clone, Default)]
pub struct ExportOptions {
    pub weights: Weights,
    pub svg: bool,
    pub wall_time_s: f64,
    pub instance_path: Option<String>,
}

impl RunArtifacts {
    /// Ranks the archive, picks the solution of highest closeness and renders
    /// every file.
    pub fn build(
        instance: &ProblemInstance,
        params: &SolverParams,
        result: &EvolveResult,
        options: &ExportOptions,
    ) -> Result<Self, ArtifactError> {
        let archive = &result.archive;
        if archive.is_empty() {
            return Err(ArtifactError::NoFeasibleSolution);
        }
        let points: Vec<[f64; 2]> = archive.iter().map(|a| a.objectives.as_array()).collect();
        let ranking = recommend(&points, options.weights)?;
        let best = &archive[ranking.best().index];

        let batch = decode(&best.chromosome.perm, instance);
        let timed = timing(&batch, &best.chromosome.idle, instance)?;
        let units = schedule_report(&batch, &timed, instance);
        let histogram = load_histogram(&timed, instance);

        let mut files = vec![
            PARETO_FILE,
            RANKING_FILE,
            SCHEDULE_FILE,
            HISTOGRAM_FILE,
            SOLUTION_FILE,
            MANIFEST_FILE,
        ];
        if options.svg {
            files.push(GANTT_FILE);
        }
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            instance_digest: instance.digest(),
            instance_path: options.instance_path.clone(),
            seed: params.rng_seed,
            multi_day: instance.tariff().is_multi_day(),
            params: params.clone(),
            weights: options.weights,
            wall_time_s: options.wall_time_s,
            archive_size: archive.len(),
            recommended_row: ranking.best().index + 1,
            files: files.into_iter().map(String::from).collect(),
        };
        Ok(RunArtifacts {
            pareto_csv: pareto_csv(archive)?,
            ranking_csv: ranking_csv(&ranking)?,
            schedule_report_csv: schedule_report_csv(&units)?,
            load_histogram_csv: load_histogram_csv(&histogram)?,
            gantt_svg: options.svg.then(|| gantt_svg(&timed, instance)),
            solution: SolutionDoc::from_individual(best, instance),
            manifest,
            recommended: best.clone(),
            ranking,
            units,
            histogram,
        })
    }

    /// Writes every file into `dir`, creating it if needed, and returns the
    /// paths written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, ArtifactError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ArtifactError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut outputs: Vec<(&str, String)> = vec![
            (PARETO_FILE, self.pareto_csv.clone()),
            (RANKING_FILE, self.ranking_csv.clone()),
            (SCHEDULE_FILE, self.schedule_report_csv.clone()),
            (HISTOGRAM_FILE, self.load_histogram_csv.clone()),
            (SOLUTION_FILE, serde_json::to_string_pretty(&self.solution)? + "\n"),
            (MANIFEST_FILE, serde_json::to_string_pretty(&self.manifest)? + "\n"),
        ];
        if let Some(svg) = &self.gantt_svg {
            outputs.push((GANTT_FILE, svg.clone()));
        }
        let mut written = Vec::new();
        for (name, body) in outputs {
            let path = dir.join(name);
            fs::write(&path, body).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Objectives and schedule of a saved solution, recomputed from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objectives: crate::objectives::ObjectiveVector,
    pub violations: Vec<crate::objectives::Violation>,
    /// Empty when the schedule cannot be timed.
    pub units: Vec<UnitReport>,
}

/// Checks `chromosome` against `instance`. Shape errors (wrong lengths, codes
/// that are not a permutation) are reported as errors; everything else shows
/// up as violations.
pub fn evaluate_solution(
    chromosome: &Chromosome,
    instance: &ProblemInstance,
    mode: crate::tariff::CostMode,
) -> Result<Evaluation, ArtifactError> {
    chromosome.validate(instance)?;
    let batch = decode(&chromosome.perm, instance);
    let objectives = evaluate_batch(&batch, &chromosome.idle, instance, mode);
    let violations = crate::objectives::check_constraints(&batch, &chromosome.idle, instance);
    let units = timing(&batch, &chromosome.idle, instance)
        .map(|timed| schedule_report(&batch, &timed, instance))
        .unwrap_or_default();
    Ok(Evaluation {
        objectives,
        violations,
        units,
    })
}
