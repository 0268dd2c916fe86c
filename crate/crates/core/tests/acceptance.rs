//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 1 4`.

mod common;

use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use batchrank::config::parse_configs;
use batchrank::harness::output::{write_aggregate, write_events, write_histogram, write_results};
use batchrank::harness::{aggregate, Histogram, SUBOPTIMAL_REGRET};
use batchrank::{
    bernoulli_kl, run_single, run_sweep, theorem1_bound, Algorithm, ClickModel, ExperimentConfig,
    ModelKind, RankedList, RegretTrace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONVERGENCE_CM: &str = include_str!("../../../experiments/convergence_cm.cfg");
const CONVERGENCE_PBM: &str = include_str!("../../../experiments/convergence_pbm.cfg");
const CONTRAST_PBM: &str = include_str!("../../../experiments/contrast_pbm.cfg");
const CONTRAST_CM: &str = include_str!("../../../experiments/contrast_cm.cfg");

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

// ---------------------------------------------------------------- sweeps

/// Runs of one experiment file, keyed by algorithm; seeds in config order.
type Runs = HashMap<Algorithm, Vec<RegretTrace>>;

fn sweep(text: &str) -> Runs {
    let configs = parse_configs(text).expect("experiment file parses");
    let result = run_sweep(&configs, rayon::current_num_threads(), &Histogram::default_edges())
        .expect("sweep runs");
    let mut runs: Runs = HashMap::new();
    for trace in result.runs {
        runs.entry(trace.algorithm).or_default().push(trace);
    }
    runs
}

fn cached(cell: &'static OnceLock<Runs>, text: &str) -> &'static Runs {
    cell.get_or_init(|| sweep(text))
}

static CONV_CM: OnceLock<Runs> = OnceLock::new();
static CONV_PBM: OnceLock<Runs> = OnceLock::new();
static CONTRAST_PBM_RUNS: OnceLock<Runs> = OnceLock::new();
static CONTRAST_CM_RUNS: OnceLock<Runs> = OnceLock::new();

fn instances() -> [(&'static str, &'static str, &'static OnceLock<Runs>); 4] {
    [
        ("convergence-cm", CONVERGENCE_CM, &CONV_CM),
        ("convergence-pbm", CONVERGENCE_PBM, &CONV_PBM),
        ("contrast-pbm", CONTRAST_PBM, &CONTRAST_PBM_RUNS),
        ("contrast-cm", CONTRAST_CM, &CONTRAST_CM_RUNS),
    ]
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn suboptimal(runs: &[RegretTrace]) -> usize {
    runs.iter()
        .filter(|r| r.final_window_regret() >= SUBOPTIMAL_REGRET)
        .count()
}

// ------------------------------------------------------------ criterion 1

fn kl_scaling() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let slack = 1e-12;
    let (mut checked, mut worst) = (0usize, f64::NEG_INFINITY);
    for _ in 0..100_000 {
        let (c, p, q): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        let full = bernoulli_kl(p, q).unwrap();
        let scaled = bernoulli_kl(c * p, c * q).unwrap();
        if !full.is_finite() || !scaled.is_finite() {
            continue;
        }
        let lower = c * (1.0 - p.max(q)) * full;
        let upper = c * full;
        worst = worst.max(lower - scaled).max(scaled - upper);
        checked += 1;
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= slack && checked > 99_000 && within(elapsed, 5),
        format!("{checked} triples, worst violation {worst:.2e}"),
    )
}

// ------------------------------------------------------------ criterion 2

fn kl_hoeffding() -> Verdict {
    let start = Instant::now();
    let reps = 1_000_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut cells, mut failures) = (0, Vec::new());
    for &mu in &[0.2, 0.5, 0.8] {
        for &n in &[10usize, 50] {
            // distribution of the number of successes
            let mut counts = vec![0u64; n + 1];
            for _ in 0..reps {
                let s = (0..n).filter(|_| rng.gen::<f64>() < mu).count();
                counts[s] += 1;
            }
            for step in 1..=16 {
                let eps = 0.05 * step as f64;
                let level: f64 = mu + eps;
                if level > 1.0 + 1e-12 {
                    break;
                }
                let level = level.min(1.0);
                // P(mean >= level); the small offset absorbs rounding in n * level
                let threshold = (n as f64 * level - 1e-9).ceil() as usize;
                let hits: u64 = counts[threshold.min(n + 1)..].iter().sum();
                let freq = hits as f64 / reps as f64;
                let se = (freq * (1.0 - freq) / reps as f64).sqrt();
                let bound = (-(n as f64) * bernoulli_kl(level, mu).unwrap()).exp();
                cells += 1;
                if freq > bound + 3.0 * se {
                    failures.push(format!("mu={mu} n={n} eps={eps:.2}: {freq:.3e} > {bound:.3e}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = if failures.is_empty() {
        format!("{cells} (mu, n, eps) cells within 3 standard errors of the bound")
    } else {
        failures.join("; ")
    };
    verdict(failures.is_empty() && within(elapsed, 60), detail)
}

// ------------------------------------------------------------ criterion 3

/// Every ordered `k`-tuple of distinct items from `0..l`.
fn ordered_tuples(l: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(l: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for d in 0..l {
            if !prefix.contains(&d) {
                prefix.push(d);
                extend(l, k, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(l, k, &mut Vec::new(), &mut out);
    out
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0..1u32 << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &d)| d)
                .collect()
        })
        .collect()
}

fn exam(model: &ClickModel, list: &[usize], k: usize) -> f64 {
    let l = model.num_items();
    model
        .examination_prob(&RankedList::new(list.to_vec(), l).unwrap(), k)
        .unwrap()
}

/// Completes a prefix to a full list with the smallest unused item ids.
fn complete(model: &ClickModel, prefix: &[usize]) -> Vec<usize> {
    let mut list = prefix.to_vec();
    for d in 0..model.num_items() {
        if list.len() == model.num_positions() {
            break;
        }
        if !list.contains(&d) {
            list.push(d);
        }
    }
    list
}

/// Checks one instance exhaustively; returns the first problem found.
fn brute_force_instance(model: &ClickModel) -> Option<String> {
    let (l, k) = (model.num_items(), model.num_positions());
    let alpha = model.attraction().values().to_vec();
    let lists = ordered_tuples(l, k);
    let reward = |list: &[usize]| {
        model
            .expected_reward(&RankedList::new(list.to_vec(), l).unwrap())
            .unwrap()
    };

    // optimal list against the exhaustive argmax
    let optimal = model.optimal_list().unwrap();
    let best = lists.iter().map(|r| reward(r)).fold(f64::NEG_INFINITY, f64::max);
    let got = reward(optimal.items());
    if (got - best).abs() > 1e-12 {
        return Some(format!("optimal_list {optimal} earns {got}, exhaustive best {best}"));
    }
    let argmax: Vec<&Vec<usize>> = lists.iter().filter(|r| reward(r) >= best - 1e-12).collect();
    if model.kind() == ModelKind::PositionBased
        && argmax.len() == 1
        && argmax[0].as_slice() != optimal.items()
    {
        return Some(format!("unique argmax {:?} differs from {optimal}", argmax[0]));
    }

    for list in &lists {
        for i in 0..k {
            // decreasing examination
            for j in i..k {
                if exam(model, list, i) < exam(model, list, j) - 1e-15 {
                    return Some(format!("{list:?}: position {i} examined less than {j}"));
                }
            }
            // optimal examination
            if exam(model, list, i) < exam(model, optimal.items(), i) - 1e-15 {
                return Some(format!("{list:?}: position {i} examined less than in the optimum"));
            }
            // correct examination scaling: swapping a more attractive lower
            // item upwards cannot raise examination of the lower position
            for j in i + 1..k {
                if alpha[list[i]] <= alpha[list[j]] {
                    let mut swapped = list.clone();
                    swapped.swap(i, j);
                    if exam(model, list, j) < exam(model, &swapped, j) - 1e-15 {
                        return Some(format!("{list:?}: swap {i}<->{j} raised examination"));
                    }
                }
            }
        }
    }

    // averaged examination over all within-batch permutations preserves the
    // attraction order
    for first in 0..k {
        for last in first..k {
            let len = last - first + 1;
            for prefix in ordered_tuples(l, first) {
                let rest: Vec<usize> = (0..l).filter(|d| !prefix.contains(d)).collect();
                for batch in subsets(&rest).into_iter().filter(|b| b.len() >= len) {
                    let mut scale: HashMap<usize, (f64, usize)> = HashMap::new();
                    for perm in ordered_tuples(batch.len(), len) {
                        let mut head = prefix.clone();
                        head.extend(perm.iter().map(|&i| batch[i]));
                        let list = complete(model, &head);
                        for pos in first..=last {
                            let e = scale.entry(list[pos]).or_default();
                            e.0 += exam(model, &list, pos);
                        }
                        for &d in &head[first..] {
                            scale.entry(d).or_default().1 += 1;
                        }
                    }
                    for &a in &batch {
                        for &b in &batch {
                            if alpha[a] >= alpha[b] {
                                let (sa, na) = scale[&a];
                                let (sb, nb) = scale[&b];
                                if sa / (na as f64) < sb / (nb as f64) - 1e-12 {
                                    return Some(format!(
                                        "positions {first}..={last}, prefix {prefix:?}, batch {batch:?}: \
                                         item {a} scaled below item {b}"
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    None
}

fn brute_force() -> Verdict {
    let start = Instant::now();
    let grid = [0.95, 0.8, 0.65, 0.5, 0.35, 0.2, 0.05];
    let chis: [&[f64]; 4] = [&[1.0, 0.5, 0.25], &[0.9, 0.9, 0.3], &[0.7, 0.4, 0.1], &[1.0, 1.0, 1.0]];
    let mut instances = 0;
    for l in 1..=5 {
        // two arrangements of every l-subset of the grid
        for values in subsets(&(0..grid.len()).collect::<Vec<_>>())
            .into_iter()
            .filter(|s| s.len() == l)
        {
            let sorted: Vec<f64> = values.iter().map(|&i| grid[i]).collect();
            let mut shuffled = sorted.clone();
            shuffled.rotate_left(l / 2);
            shuffled.reverse();
            for alpha in [sorted, shuffled] {
                for k in 1..=l.min(3) {
                    let mut models = vec![ClickModel::cascade(alpha.clone(), k).unwrap()];
                    for chi in chis {
                        models.push(ClickModel::position_based(alpha.clone(), chi[..k].to_vec()).unwrap());
                    }
                    for model in &models {
                        instances += 1;
                        if let Some(problem) = brute_force_instance(model) {
                            return verdict(false, format!("{:?} alpha {alpha:?} K={k}: {problem}", model.kind()));
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(within(elapsed, 60), format!("{instances} instances checked exhaustively"))
}

// ------------------------------------------------------------ criterion 4

fn fuzz_invariants() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for run in 0..1_000 {
        let l = rng.gen_range(1..=10);
        let k = rng.gen_range(1..=l.min(5));
        let alpha: Vec<f64> = (0..l).map(|_| rng.gen()).collect();
        let model = if rng.gen() {
            ClickModel::cascade(alpha, k).unwrap()
        } else {
            let mut chi: Vec<f64> = (0..k).map(|_| rng.gen()).collect();
            chi.sort_by(|a, b| b.total_cmp(a));
            ClickModel::position_based(alpha, chi).unwrap()
        };
        let (_, problem) = common::checked_run(&model, 10_000, rng.gen());
        if let Some(p) = problem {
            return verdict(false, format!("run {run} (L={l}, K={k}, {:?}): {p}", model.kind()));
        }
    }
    let elapsed = start.elapsed();
    verdict(within(elapsed, 120), "1000 runs without a violation")
}

// ------------------------------------------------------------ criterion 5

fn convergence() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cell, text) in [("cm", &CONV_CM, CONVERGENCE_CM), ("pbm", &CONV_PBM, CONVERGENCE_PBM)] {
        let runs = &cached(cell, text)[&Algorithm::BatchRank];
        let first = mean(runs.iter().map(RegretTrace::first_window_regret));
        let last = mean(runs.iter().map(RegretTrace::final_window_regret));
        let good = runs.len() - suboptimal(runs);
        let ok = last < 0.1 * first && good >= 8;
        pass &= ok;
        parts.push(format!(
            "{name}: final/first {:.2e}, {good}/{} seeds below 1e-3{}",
            last / first,
            runs.len(),
            if ok { "" } else { " (needs 8)" }
        ));
    }
    verdict(pass, parts.join("; "))
}

// ------------------------------------------------------------ criterion 6

fn baseline_contrast() -> Verdict {
    let pbm = cached(&CONTRAST_PBM_RUNS, CONTRAST_PBM);
    let cascade_bad = suboptimal(&pbm[&Algorithm::CascadeKlUcb]);
    let batchrank_bad = suboptimal(&pbm[&Algorithm::BatchRank]);
    let cm = cached(&CONTRAST_CM_RUNS, CONTRAST_CM);
    let cascade_cm = mean(cm[&Algorithm::CascadeKlUcb].iter().map(RegretTrace::final_window_regret));
    let batchrank_cm = mean(cm[&Algorithm::BatchRank].iter().map(RegretTrace::final_window_regret));
    verdict(
        cascade_bad >= 2 && batchrank_bad == 0 && cascade_cm <= batchrank_cm,
        format!(
            "pbm: CascadeKL-UCB {cascade_bad}/10 and BatchRank {batchrank_bad}/10 seeds at or above 1e-3; \
             cm mean final regret CascadeKL-UCB {cascade_cm:.2e} vs BatchRank {batchrank_cm:.2e}"
        ),
    )
}

// ------------------------------------------------------------ criterion 7

fn bound_dominance() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, text, cell) in instances() {
        let config = parse_configs(text)
            .unwrap()
            .into_iter()
            .find(|c| c.algorithm == Algorithm::BatchRank)
            .unwrap();
        let bound = theorem1_bound(&config.bound_inputs().unwrap()).unwrap();
        let worst = cached(cell, text)[&Algorithm::BatchRank]
            .iter()
            .map(|r| r.cumulative_regret)
            .fold(0.0, f64::max);
        pass &= worst <= bound;
        parts.push(format!("{name}: {worst:.0} <= {bound:.3e}"));
    }
    verdict(pass, parts.join("; "))
}

// ------------------------------------------------------------ criterion 8

fn ranked_exp3_dominated() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cell, text) in [("cm", &CONV_CM, CONVERGENCE_CM), ("pbm", &CONV_PBM, CONVERGENCE_PBM)] {
        let runs = cached(cell, text);
        let worse = runs[&Algorithm::RankedExp3]
            .iter()
            .zip(&runs[&Algorithm::BatchRank])
            .inspect(|(a, b)| assert_eq!(a.seed, b.seed))
            .filter(|(exp3, br)| exp3.final_window_regret() > br.final_window_regret())
            .count();
        pass &= worse >= 8;
        parts.push(format!("{name}: RankedExp3 worse in {worse}/10 seeds"));
    }
    verdict(pass, parts.join("; "))
}

// ------------------------------------------------------------ criterion 9

fn csv_bytes(trace: &RegretTrace) -> Vec<u8> {
    let mut out = Vec::new();
    write_results(&mut out, std::slice::from_ref(trace)).unwrap();
    write_events(&mut out, std::slice::from_ref(trace)).unwrap();
    out
}

fn aggregate_bytes(runs: &[RegretTrace]) -> Vec<u8> {
    let series = aggregate(runs, &Histogram::default_edges()).unwrap();
    let mut out = Vec::new();
    write_aggregate(&mut out, &series).unwrap();
    write_histogram(&mut out, &series).unwrap();
    out
}

fn determinism() -> Verdict {
    let base = |model: ModelKind, algorithm: Algorithm| ExperimentConfig {
        label: "det".into(),
        model,
        alpha: vec![0.8, 0.7, 0.5, 0.3, 0.2],
        chi: if model == ModelKind::PositionBased {
            vec![1.0, 0.6, 0.3]
        } else {
            vec![]
        },
        positions: 3,
        horizon: 50_000,
        algorithm,
        seeds: vec![3, 1, 4, 1, 5],
        window: 10_000,
    };
    let mut configs = Vec::new();
    for model in [ModelKind::Cascade, ModelKind::PositionBased] {
        for algorithm in Algorithm::ALL {
            configs.push(base(model, algorithm));
        }
    }
    for c in &configs {
        if csv_bytes(&run_single(c, 7).unwrap()) != csv_bytes(&run_single(c, 7).unwrap()) {
            return verdict(false, format!("{} {} differs between repeats", c.model, c.algorithm));
        }
    }
    let edges = Histogram::default_edges();
    let serial = run_sweep(&configs, 1, &edges).unwrap();
    let parallel = run_sweep(&configs, 4, &edges).unwrap();
    let reference = aggregate_bytes(&serial.runs);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut permuted = serial.runs.clone();
    for _ in 0..10 {
        rand::seq::SliceRandom::shuffle(permuted.as_mut_slice(), &mut rng);
        if aggregate_bytes(&permuted) != reference {
            return verdict(false, "aggregate depends on run order");
        }
    }
    let same_runs = serial
        .runs
        .iter()
        .zip(&parallel.runs)
        .all(|(a, b)| csv_bytes(a) == csv_bytes(b));
    verdict(
        same_runs && aggregate_bytes(&parallel.runs) == reference,
        format!("{} runs byte-identical on repeat and across thread counts; 10 shuffles give one aggregate", serial.runs.len()),
    )
}

// ------------------------------------------------------------------ main

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("KL scaling lemma", kl_scaling),
        ("KL Hoeffding tail", kl_hoeffding),
        ("brute-force oracles", brute_force),
        ("BatchRank invariants under fuzzing", fuzz_invariants),
        ("convergence in both models", convergence),
        ("baseline contrast", baseline_contrast),
        ("regret bound dominance", bound_dominance),
        ("RankedExp3 dominated", ranked_exp3_dominated),
        ("determinism", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!v.pass);
        println!(
            "criterion {number} {}: {name} ({}) [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
