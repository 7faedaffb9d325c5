//! NSGA-II over the hybrid chromosome: binary tournament on (rank, crowding),
//! PMX and scramble mutation on the permutation part, idle reallocation after
//! every change of the permutation, and elitist (μ+λ) survival.
//!
//! Randomness comes from one ChaCha8 generator per generation, all seeded with
//! `rng_seed` and told apart by their stream number (0 for initialization,
//! `g` for generation `g`). Evaluation runs on a thread pool and is collected
//! in input order, so results do not depend on the thread count.

mod operators;
mod sorting;

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{allocate_idle, decode, random_chromosome, refresh_idle, Chromosome};
use crate::instance::ProblemInstance;
use crate::objectives::{dominates, evaluate, ObjectiveVector};
use crate::tariff::CostMode;

pub use operators::{pmx_crossover, pmx_with_cuts, scramble_mutation, scramble_window};
pub use sorting::{crowding_distance, crowding_distance_points, non_dominated_sort, non_dominated_sort_points};

/// Environment variable capping the number of evaluation threads.
pub const THREADS_ENV: &str = "TOU_SCHED_THREADS";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoeaError {
    #[error("invalid solver parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("could not start the evaluation thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    /// Upper bound (exclusive) on the distance between the two scramble
    /// positions. `None` means `max(2, n / 10)`.
    pub scramble_max_len: Option<usize>,
    pub rng_seed: u64,
    pub cost_mode: CostMode,
    /// Evaluation threads. `None` reads [`THREADS_ENV`], falling back to the
    /// number of CPUs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Select on the penalty alone, treating every power cost as equal.
    #[serde(default)]
    pub penalty_only: bool,
    /// Print one progress line per generation to standard error.
    #[serde(default, skip_serializing)]
    pub verbose: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            population_size: 50,
            generations: 2000,
            crossover_prob: 0.4,
            mutation_prob: 0.6,
            scramble_max_len: None,
            rng_seed: 0,
            cost_mode: CostMode::Proportional,
            threads: None,
            penalty_only: false,
            verbose: false,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), MoeaError> {
        let bad = |name, reason: &str| {
            Err(MoeaError::InvalidParam {
                name,
                reason: reason.to_string(),
            })
        };
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return bad("population_size", "must be even and at least 4");
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad("crossover_prob", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad("mutation_prob", "must lie in [0, 1]");
        }
        if matches!(self.scramble_max_len, Some(l) if l < 2) {
            return bad("scramble_max_len", "must be at least 2");
        }
        if self.threads == Some(0) {
            return bad("threads", "must be at least 1");
        }
        Ok(())
    }

    /// Scramble window bound for `instance`, clamped to the permutation length.
    pub fn effective_scramble_len(&self, instance: &ProblemInstance) -> usize {
        let len = self
            .scramble_max_len
            .unwrap_or_else(|| (instance.slab_count() / 10).max(2));
        len.min(instance.code_count())
    }

    fn thread_count(&self) -> Option<usize> {
        self.threads.or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .filter(|&t| t > 0)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub objectives: ObjectiveVector,
    /// Front index, starting at 1.
    pub rank: usize,
    pub crowding: f64,
}

/// One line of the progress log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub front_size: usize,
    pub best_power_cost: f64,
    pub best_penalty: f64,
    pub hypervolume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveResult {
    /// Feasible members of the final population's first front.
    pub front: Vec<Individual>,
    /// Every non-dominated feasible solution met during the run, one per
    /// objective vector, sorted by power cost.
    pub archive: Vec<Individual>,
    /// Statistics after initialization (generation 0) and each generation.
    pub history: Vec<GenerationStats>,
    /// Hypervolume reference point, fixed from the first feasible solutions.
    pub reference_point: Option<[f64; 2]>,
}

/// Area dominated by `points` and bounded by `reference` (both objectives
/// minimized). Points not strictly better than the reference in both
/// objectives contribute nothing.
pub fn hypervolume(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Unbounded archive of mutually non-dominated, feasible solutions.
#[derive(Debug, Clone, Default)]
struct Archive {
    members: Vec<Individual>,
}

impl Archive {
    /// Offers a candidate; `key` gives the vector used for dominance.
    fn offer(&mut self, candidate: &Individual, key: impl Fn(&ObjectiveVector) -> [f64; 2]) {
        if !candidate.objectives.feasible {
            return;
        }
        let c = key(&candidate.objectives);
        if self.members.iter().any(|m| {
            let k = key(&m.objectives);
            k == c || dominates(k, c)
        }) {
            return;
        }
        self.members.retain(|m| !dominates(c, key(&m.objectives)));
        let pos = self.members.partition_point(|m| key(&m.objectives)[0] < c[0]);
        self.members.insert(pos, candidate.clone());
    }

    fn points(&self, key: impl Fn(&ObjectiveVector) -> [f64; 2]) -> Vec<[f64; 2]> {
        self.members.iter().map(|m| key(&m.objectives)).collect()
    }
}

fn reference_from(points: &[[f64; 2]]) -> Option<[f64; 2]> {
    if points.is_empty() {
        return None;
    }
    let worst = points
        .iter()
        .fold([f64::NEG_INFINITY; 2], |acc, p| [acc[0].max(p[0]), acc[1].max(p[1])]);
    Some([worst[0] * 1.1 + 1.0, worst[1] * 1.1 + 1.0])
}

/// Runs the optimizer and returns the final front, the archive and the
/// per-generation history.
pub fn evolve(instance: &ProblemInstance, params: &SolverParams) -> Result<EvolveResult, MoeaError> {
    params.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = params.thread_count() {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| MoeaError::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| Engine::new(instance, params).run()))
}

struct Engine<'a> {
    instance: &'a ProblemInstance,
    params: &'a SolverParams,
    scramble_len: usize,
}

impl<'a> Engine<'a> {
    fn new(instance: &'a ProblemInstance, params: &'a SolverParams) -> Self {
        Engine {
            instance,
            params,
            scramble_len: params.effective_scramble_len(instance),
        }
    }

    /// The objective vector used for dominance and selection.
    fn key(&self, o: &ObjectiveVector) -> [f64; 2] {
        if self.params.penalty_only && o.feasible {
            [0.0, o.penalty]
        } else {
            o.as_array()
        }
    }

    fn rng_for(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.rng_seed);
        rng.set_stream(stream);
        rng
    }

    fn evaluate_all(&self, chromosomes: Vec<Chromosome>) -> Vec<Individual> {
        let (instance, mode) = (self.instance, self.params.cost_mode);
        chromosomes
            .into_par_iter()
            .map(|chromosome| {
                let objectives = evaluate(&chromosome, instance, mode);
                Individual {
                    chromosome,
                    objectives,
                    rank: 1,
                    crowding: 0.0,
                }
            })
            .collect()
    }

    fn initial_population(&self) -> Vec<Chromosome> {
        let mut rng = self.rng_for(0);
        (0..self.params.population_size)
            .map(|_| {
                let mut c = random_chromosome(self.instance, &mut rng);
                let batch = decode(&c.perm, self.instance);
                if let Ok(idle) = allocate_idle(&batch, self.instance, &c.idle) {
                    c.idle = idle;
                }
                c
            })
            .collect()
    }

    /// Assigns rank and crowding to every member and returns the fronts.
    fn rank(&self, pop: &mut [Individual]) -> Vec<Vec<usize>> {
        let keys: Vec<[f64; 2]> = pop.iter().map(|i| self.key(&i.objectives)).collect();
        let fronts = non_dominated_sort_points(&keys);
        for (r, front) in fronts.iter().enumerate() {
            let pts: Vec<[f64; 2]> = front.iter().map(|&i| keys[i]).collect();
            for (&i, d) in front.iter().zip(crowding_distance_points(&pts)) {
                pop[i].rank = r + 1;
                pop[i].crowding = d;
            }
        }
        fronts
    }

    fn tournament(&self, pop: &[Individual], rng: &mut ChaCha8Rng) -> usize {
        let a = rng.gen_range(0..pop.len());
        let b = rng.gen_range(0..pop.len());
        let better = |x: usize, y: usize| {
            let (p, q) = (&pop[x], &pop[y]);
            p.rank
                .cmp(&q.rank)
                .then(q.crowding.total_cmp(&p.crowding))
                .then(x.cmp(&y))
                .is_le()
        };
        if better(a, b) {
            a
        } else {
            b
        }
    }

    fn offspring(&self, pop: &[Individual], rng: &mut ChaCha8Rng) -> Vec<Chromosome> {
        let p = self.params;
        let mut children = Vec::with_capacity(p.population_size);
        while children.len() < p.population_size {
            let a = &pop[self.tournament(pop, rng)].chromosome;
            let b = &pop[self.tournament(pop, rng)].chromosome;
            let crossed = rng.gen_bool(p.crossover_prob);
            let (c1, c2) = if crossed {
                pmx_crossover(&a.perm, &b.perm, rng)
            } else {
                (a.perm.clone(), b.perm.clone())
            };
            for (perm, parent) in [(c1, a), (c2, b)] {
                let mut perm = perm;
                let mut changed = crossed && perm != parent.perm;
                if rng.gen_bool(p.mutation_prob) {
                    let mutated = scramble_mutation(&perm, self.scramble_len, rng);
                    changed |= mutated != perm;
                    perm = mutated;
                }
                let idle = if changed {
                    refresh_idle(&perm, self.instance, rng)
                } else {
                    parent.idle.clone()
                };
                children.push(Chromosome::new(perm, idle));
            }
        }
        children.truncate(p.population_size);
        children
    }

    /// Keeps the best `population_size` of `combined` by front, then by
    /// crowding within the last admitted front. Copies of an objective vector
    /// already present only fill slots left over once every distinct vector
    /// has been placed, so clones cannot crowd out the rest of the front.
    fn survive(&self, mut combined: Vec<Individual>) -> Vec<Individual> {
        let target = self.params.population_size;
        let mut seen = HashSet::new();
        let (distinct, copies): (Vec<usize>, Vec<usize>) = (0..combined.len()).partition(|&i| {
            let k = self.key(&combined[i].objectives);
            seen.insert([k[0].to_bits(), k[1].to_bits()])
        });
        let mut chosen = self.select_by_front(&mut combined, &distinct, target);
        if chosen.len() < target {
            let rest = self.select_by_front(&mut combined, &copies, target - chosen.len());
            chosen.extend(rest);
        }
        chosen.sort_unstable();
        let mut slots: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
        let mut next: Vec<Individual> = chosen.into_iter().map(|i| slots[i].take().unwrap()).collect();
        // Ranks and crowding refer to the survivors only.
        self.rank(&mut next);
        next
    }

    /// Up to `count` members of `subset`, whole fronts first.
    fn select_by_front(&self, combined: &mut [Individual], subset: &[usize], count: usize) -> Vec<usize> {
        let mut part: Vec<Individual> = subset.iter().map(|&i| combined[i].clone()).collect();
        let fronts = self.rank(&mut part);
        let mut chosen: Vec<usize> = Vec::with_capacity(count);
        for front in fronts {
            if chosen.len() + front.len() <= count {
                chosen.extend(front);
            } else {
                let mut last = front;
                last.sort_by(|&x, &y| part[y].crowding.total_cmp(&part[x].crowding).then(x.cmp(&y)));
                chosen.extend(last.into_iter().take(count - chosen.len()));
            }
            if chosen.len() == count {
                break;
            }
        }
        chosen.into_iter().map(|j| subset[j]).collect()
    }

    fn stats(
        &self,
        generation: usize,
        pop: &[Individual],
        archive: &Archive,
        reference: Option<[f64; 2]>,
    ) -> GenerationStats {
        let feasible_front = pop.iter().filter(|i| i.rank == 1 && i.objectives.feasible);
        let front_size = feasible_front.clone().count();
        let best_power_cost = archive
            .members
            .iter()
            .map(|m| m.objectives.power_cost)
            .fold(f64::INFINITY, f64::min);
        let best_penalty = archive
            .members
            .iter()
            .map(|m| m.objectives.penalty)
            .fold(f64::INFINITY, f64::min);
        let hv = reference.map_or(0.0, |r| hypervolume(&archive.points(|o| self.key(o)), r));
        GenerationStats {
            generation,
            front_size,
            best_power_cost,
            best_penalty,
            hypervolume: hv,
        }
    }

    fn log(&self, s: &GenerationStats) {
        if self.params.verbose {
            eprintln!(
                "gen {:>5}  front {:>3}  best_f1 {:>14.4}  best_f2 {:>10.4}  hv {:.6e}",
                s.generation, s.front_size, s.best_power_cost, s.best_penalty, s.hypervolume
            );
        }
    }

    fn run(&self) -> EvolveResult {
        let key = |o: &ObjectiveVector| self.key(o);
        let mut pop = self.evaluate_all(self.initial_population());
        self.rank(&mut pop);
        let mut archive = Archive::default();
        for ind in &pop {
            archive.offer(ind, key);
        }
        let mut reference = reference_from(&archive.points(key));
        let mut history = vec![self.stats(0, &pop, &archive, reference)];
        self.log(&history[0]);

        for g in 1..=self.params.generations {
            let mut rng = self.rng_for(g as u64);
            let children = self.evaluate_all(self.offspring(&pop, &mut rng));
            for ind in &children {
                archive.offer(ind, key);
            }
            if reference.is_none() {
                reference = reference_from(&archive.points(key));
            }
            let mut combined = pop;
            combined.extend(children);
            pop = self.survive(combined);
            let s = self.stats(g, &pop, &archive, reference);
            self.log(&s);
            history.push(s);
        }

        let front = pop
            .into_iter()
            .filter(|i| i.rank == 1 && i.objectives.feasible)
            .collect();
        EvolveResult {
            front,
            archive: archive.members,
            history,
            reference_point: reference,
        }
    }
}
