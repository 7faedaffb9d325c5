//! Acceptance checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines come out in order; the process fails if any check
//! fails. `ACCEPTANCE_ONLY=3,5` runs a subset.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tou_sched::artifacts::{average_power_in, load_histogram, pareto_csv};
use tou_sched::encoding::validate_permutation;
use tou_sched::encoding::{decode, decode_traced, random_chromosome, timing, Chromosome, RejectReason};
use tou_sched::generator::{generate, Profile};
use tou_sched::moea::{evolve, pmx_crossover, pmx_with_cuts, scramble_mutation, SolverParams};
use tou_sched::objectives::{check_constraints, evaluate, Constraint};
use tou_sched::oracle::{
    compare_fronts, compare_fronts_within, exact_front, grid_cost_tolerance, non_dominated_points, snap_idle_to_grid,
};
use tou_sched::tariff::{CostMode, PeriodLabel, TouTariff};
use tou_sched::topsis::{rank_points, Weights};

type Check = (usize, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }
}

fn tariff_arithmetic() -> Outcome {
    let t = TouTariff::steel_mill_daily();
    let straddle = t.interval_cost(17.0, 19.0, 2.0, CostMode::Proportional).unwrap();
    let off_peak = t.interval_cost(0.0, 5.0, 59.71, CostMode::Proportional).unwrap();
    let pass = (straddle - 1656.0).abs() <= 1e-6 && (off_peak - 25555.88).abs() <= 1e-6;
    Outcome::new(
        pass,
        format!("17:00-19:00 at 2 MWh costs {straddle:.6} CNY; 59.71 MWh off-peak costs {off_peak:.6} CNY"),
    )
}

fn topsis_ordering() -> Outcome {
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
    let r = rank_points(&rows, Weights::default()).unwrap();
    let order: Vec<usize> = r.entries.iter().map(|e| e.index + 1).collect();
    let expected: Vec<usize> = (1..=8).collect();
    let closeness = r
        .closeness_by_index()
        .iter()
        .enumerate()
        .map(|(i, c)| format!("S{}={c:.6}", i + 1))
        .collect::<Vec<_>>()
        .join(" ");
    let mut o = Outcome::new(order == expected, format!("order {order:?}, expected {expected:?}"));
    o.details.push(format!("closeness {closeness}"));
    o
}

fn oracle_equivalence() -> Outcome {
    const GRID: f64 = 0.25;
    const GENERATIONS: usize = 1000;
    let profiles = [
        "few-varieties,not-full-load",
        "many-varieties,not-full-load",
        "few-varieties,full-load",
        "many-varieties,full-load",
    ];
    let mut failures = Vec::new();
    let mut details = Vec::new();
    let mut strict_mismatches = 0;
    for i in 0..20u64 {
        let n = 5 + (i as usize % 4);
        let profile: Profile = profiles[(i as usize / 4) % 4].parse().unwrap();
        let inst = generate(n, 2, 1000 + i, profile).unwrap();
        let exact = exact_front(&inst, GRID).unwrap().objective_points();
        let params = SolverParams {
            population_size: 50,
            generations: GENERATIONS,
            rng_seed: i,
            threads: Some(1),
            ..SolverParams::default()
        };
        let result = evolve(&inst, &params).unwrap();
        let snapped: Vec<[f64; 2]> = result
            .archive
            .iter()
            .map(|a| {
                let c = Chromosome::new(a.chromosome.perm.clone(), snap_idle_to_grid(&a.chromosome.idle, GRID));
                evaluate(&c, &inst, CostMode::Proportional).as_array()
            })
            .collect();
        let found = non_dominated_points(&snapped);
        let tol = grid_cost_tolerance(&inst, GRID);
        let diff = compare_fronts_within(&found, &exact, tol);
        let min_f2 = |pts: &[[f64; 2]]| pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let same_floor = min_f2(&found) == min_f2(&exact);
        if !compare_fronts(&found, &exact, tol).is_empty() {
            strict_mismatches += 1;
        }
        if !diff.is_empty() || !same_floor {
            failures.push(i);
            details.push(format!(
                "instance {i} (n={n}, {profile}): missing {:?}, extra {:?}, lowest penalty {} vs {}",
                diff.missing,
                diff.extra,
                min_f2(&found),
                min_f2(&exact)
            ));
        }
    }
    let mut o = Outcome::new(
        failures.is_empty(),
        format!(
            "{} of 20 archives match the exact front within the grid tolerance ({GENERATIONS} generations)",
            20 - failures.len()
        ),
    );
    o.details = details;
    o.details.push(format!(
        "{strict_mismatches} of 20 differ under one-to-one point matching, where a cost gap below the tolerance can reorder two schedules"
    ));
    o
}

fn constraint_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let profiles = [
        Profile::MANY_FULL,
        Profile::FEW_NOT_FULL,
        "few-varieties,full-load".parse().unwrap(),
        "many-varieties,not-full-load".parse().unwrap(),
    ];
    let instances: Vec<_> = (0..20u64)
        .map(|s| {
            let m = 2 + (s as usize % 3);
            let n = m * (4 + (s as usize * 7) % 20);
            generate(n, m, 500 + s, profiles[s as usize % 4]).unwrap()
        })
        .collect();
    let (mut feasible, mut infeasible, mut bad) = (0, 0, Vec::new());
    for trial in 0..10_000 {
        let inst = &instances[trial % instances.len()];
        let c = random_chromosome(inst, &mut rng);
        let (batch, rejections) = decode_traced(&c.perm, inst);
        let violations = check_constraints(&batch, &c.idle, inst);
        if batch.is_feasible() {
            feasible += 1;
            if !violations.is_empty() {
                bad.push(format!(
                    "trial {trial}: feasible decode with {} violations",
                    violations.len()
                ));
            }
            continue;
        }
        infeasible += 1;
        // Every unplaced slab had each of its codes turned down for a stated reason.
        for &s in batch.unplaced() {
            let reasons: Vec<_> = rejections.iter().filter(|r| r.slab == s).collect();
            if reasons.len() != inst.unit_count() {
                bad.push(format!(
                    "trial {trial}: slab {s} unplaced with {} recorded rejections",
                    reasons.len()
                ));
            }
            for r in reasons {
                let concrete = match r.reason {
                    RejectReason::UnitLength {
                        unit_length,
                        slab_length,
                        limit,
                    } => unit_length + slab_length > limit,
                    RejectReason::SameWidthRun {
                        run,
                        slab_length,
                        limit,
                    } => run + slab_length > limit,
                };
                if !concrete {
                    bad.push(format!(
                        "trial {trial}: rejection of slab {s} does not exceed its bound"
                    ));
                }
            }
        }
        for &k in batch.short_units() {
            if !violations
                .iter()
                .any(|v| v.constraint == Constraint::MinUnitLength && v.unit == Some(k))
            {
                bad.push(format!("trial {trial}: short unit {k} not reported"));
            }
        }
        if batch.unplaced().is_empty() && batch.short_units().is_empty() {
            bad.push(format!("trial {trial}: infeasible decode without a cause"));
        }
    }
    let mut o = Outcome::new(
        bad.is_empty(),
        format!(
            "{feasible} feasible and {infeasible} infeasible decodes, {} unexplained",
            bad.len()
        ),
    );
    o.details = bad.into_iter().take(10).collect();
    o
}

fn dominance_and_elitism() -> Outcome {
    let inst = generate(442, 8, 1, Profile::MANY_FULL).unwrap();
    let params = SolverParams {
        population_size: 50,
        generations: 2000,
        crossover_prob: 0.4,
        mutation_prob: 0.6,
        rng_seed: 1,
        ..SolverParams::default()
    };
    let r = evolve(&inst, &params).unwrap();
    let hv: Vec<f64> = r.history.iter().map(|h| h.hypervolume).collect();
    let drops = hv.windows(2).filter(|w| w[1] < w[0]).count();
    let clean = r
        .front
        .iter()
        .all(|a| !r.front.iter().any(|b| b.objectives.dominates(&a.objectives)))
        && r.archive
            .iter()
            .all(|a| !r.archive.iter().any(|b| b.objectives.dominates(&a.objectives)));
    Outcome::new(
        drops == 0 && clean && r.reference_point.is_some(),
        format!(
            "hypervolume {:.6e} -> {:.6e} over {} generations with {drops} decreases; final front of {} mutually non-dominated",
            hv[0],
            hv[hv.len() - 1],
            hv.len() - 1,
            r.front.len()
        ),
    )
}

fn load_shifting() -> Outcome {
    let inst = generate(120, 4, 6, Profile::FEW_NOT_FULL).unwrap();
    let base = SolverParams {
        generations: 600,
        rng_seed: 6,
        ..SolverParams::default()
    };
    let cost_aware = evolve(&inst, &base).unwrap();
    let baseline = evolve(
        &inst,
        &SolverParams {
            penalty_only: true,
            ..base.clone()
        },
    )
    .unwrap();

    let profile = |c: &Chromosome| {
        let batch = decode(&c.perm, &inst);
        let timed = timing(&batch, &c.idle, &inst).unwrap();
        let hist = load_histogram(&timed, &inst);
        (
            average_power_in(&hist, PeriodLabel::OnPeak),
            hist.iter().map(|p| p.energy_mwh).sum::<f64>(),
        )
    };
    let best_f1 = cost_aware
        .archive
        .iter()
        .min_by(|a, b| a.objectives.power_cost.total_cmp(&b.objectives.power_cost))
        .unwrap();
    let best_f2 = &baseline.archive[0];
    let (peak_cost, energy_cost) = profile(&best_f1.chromosome);
    let (peak_base, energy_base) = profile(&best_f2.chromosome);
    let conserved = (energy_cost - energy_base).abs() < 1e-6 && (energy_cost - inst.total_energy()).abs() < 1e-6;
    Outcome::new(
        peak_cost < peak_base && conserved,
        format!(
            "on-peak average {peak_cost:.3} MW (cost-aware) vs {peak_base:.3} MW (penalty only); energy {energy_cost:.4} vs {energy_base:.4} MWh"
        ),
    )
}

fn operator_correctness() -> Outcome {
    let (c1, c2) = pmx_with_cuts(&[1, 2, 3, 4, 5], &[5, 4, 3, 2, 1], 1, 3);
    let worked = c1 == [1, 4, 3, 2, 5] && c2 == [5, 2, 3, 4, 1];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut invalid = 0;
    for trial in 0..10_000 {
        let len = 2 + trial % 60;
        let mut p1: Vec<u32> = (1..=len as u32).collect();
        let mut p2 = p1.clone();
        p1.shuffle(&mut rng);
        p2.shuffle(&mut rng);
        let (a, b) = pmx_crossover(&p1, &p2, &mut rng);
        let window = rng.gen_range(2..=len.max(2));
        let m = scramble_mutation(&a, window, &mut rng);
        for c in [&a, &b, &m] {
            if validate_permutation(c, len).is_err() {
                invalid += 1;
            }
        }
    }
    Outcome::new(
        worked && invalid == 0,
        format!("worked example {c1:?}/{c2:?}; {invalid} invalid children in 10000 trials"),
    )
}

fn determinism() -> Outcome {
    let inst = generate(60, 3, 8, "many-varieties,not-full-load".parse().unwrap()).unwrap();
    let run = |threads| {
        let params = SolverParams {
            generations: 200,
            rng_seed: 8,
            threads: Some(threads),
            ..SolverParams::default()
        };
        pareto_csv(&evolve(&inst, &params).unwrap().archive).unwrap()
    };
    let (a, b, c) = (run(1), run(1), run(4));
    Outcome::new(
        a == b && a == c,
        format!(
            "{} bytes; repeat identical: {}; 1 vs 4 threads identical: {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let checks: [Check; 8] = [
        (1, "tariff arithmetic", tariff_arithmetic),
        (2, "TOPSIS ordering", topsis_ordering),
        (3, "oracle equivalence", oracle_equivalence),
        (4, "constraint soundness", constraint_soundness),
        (5, "dominance and elitism", dominance_and_elitism),
        (6, "load shifting", load_shifting),
        (7, "operator correctness", operator_correctness),
        (8, "determinism", determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in checks {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let clock = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {id} ({name}): {} [{:.1}s]",
            o.summary,
            clock.elapsed().as_secs_f64()
        );
        for d in &o.details {
            println!("    {d}");
        }
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
