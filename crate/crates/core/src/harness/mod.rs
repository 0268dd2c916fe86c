//! Regret simulation: single runs, parallel sweeps and their aggregates.
//!
//! Regret is accounted in expectation: each step contributes
//! `r(R*) - r(R_t)` computed from the closed-form expected rewards, so traces
//! carry no Monte-Carlo noise from the reward itself.
//!
//! Seeding: a run with seed `s` owns two ChaCha8 generators built with
//! `ChaCha8Rng::seed_from_u64(s)`, the environment on stream 0 and the
//! learner on stream 1. Results therefore depend only on `(config, seed)`
//! and never on how runs are scheduled across threads.

mod bound;
pub mod output;
pub mod queries;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{CascadeKlUcb, RankedExp3};
use crate::batchrank::BatchRank;
use crate::click_models::{ClickModel, ModelKind, RankedList, SampleOutcome};
use crate::error::{Error, Result};
use crate::learner::{EventKind, FixedList, Learner};

pub use bound::{theorem1_bound, BoundInputs};

/// Steps per reporting window unless configured otherwise.
pub const DEFAULT_WINDOW: u64 = 100_000;

/// Final-window per-step regret at or above this level marks a run as
/// converged to a suboptimal list.
pub const SUBOPTIMAL_REGRET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    BatchRank,
    CascadeKlUcb,
    RankedExp3,
    /// Always plays the optimal list.
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::BatchRank,
        Algorithm::CascadeKlUcb,
        Algorithm::RankedExp3,
        Algorithm::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::BatchRank => "batchrank",
            Algorithm::CascadeKlUcb => "cascadeklucb",
            Algorithm::RankedExp3 => "rankedexp3",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algorithm `{s}` (expected batchrank, cascadeklucb, rankedexp3 or oracle)"
                ))
            })
    }
}

/// One experiment: an environment, a policy, a horizon and a set of seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub model: ModelKind,
    pub alpha: Vec<f64>,
    /// Examination probabilities; PBM only, empty for the CM.
    pub chi: Vec<f64>,
    pub positions: usize,
    pub horizon: u64,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub window: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 5 {
            return Err(Error::HorizonTooShort(self.horizon));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be at least one step".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        match self.model {
            ModelKind::Cascade if !self.chi.is_empty() => {
                return Err(Error::Config("chi is only meaningful for the pbm".into()))
            }
            ModelKind::PositionBased if self.chi.len() != self.positions => {
                return Err(Error::DimensionMismatch {
                    what: "chi (one entry per position)",
                    expected: self.positions,
                    found: self.chi.len(),
                })
            }
            _ => {}
        }
        let model = self.build_model()?;
        model.optimal_list()?;
        Ok(())
    }

    pub fn build_model(&self) -> Result<ClickModel> {
        match self.model {
            ModelKind::Cascade => ClickModel::cascade(self.alpha.clone(), self.positions),
            ModelKind::PositionBased => {
                ClickModel::position_based(self.alpha.clone(), self.chi.clone())
            }
        }
    }

    pub fn build_learner(&self, model: &ClickModel) -> Result<Box<dyn Learner>> {
        let (l, k) = (self.alpha.len(), self.positions);
        Ok(match self.algorithm {
            Algorithm::BatchRank => Box::new(BatchRank::new(l, k, self.horizon)?),
            Algorithm::CascadeKlUcb => Box::new(CascadeKlUcb::new(l, k)?),
            Algorithm::RankedExp3 => Box::new(RankedExp3::new(l, k, self.horizon)?),
            Algorithm::Oracle => Box::new(FixedList::new(model.optimal_list()?)),
        })
    }

    pub fn run_id(&self, seed: u64) -> String {
        format!("{}-{}-s{}", self.label, self.algorithm, seed)
    }

    pub fn bound_inputs(&self) -> Result<BoundInputs> {
        BoundInputs::for_instance(&self.alpha, self.positions, self.horizon)
    }
}

/// Environment and learner generators of a run.
pub fn run_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let env = ChaCha8Rng::seed_from_u64(seed);
    let mut learner = ChaCha8Rng::seed_from_u64(seed);
    learner.set_stream(1);
    (env, learner)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStat {
    pub index: usize,
    /// First step of the window (1-based).
    pub start: u64,
    /// Last step of the window, inclusive.
    pub end: u64,
    pub avg_per_step_regret: f64,
    /// Cumulative regret at the end of the window.
    pub cumulative_regret: f64,
}

impl WindowStat {
    pub fn steps(&self) -> u64 {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedEvent {
    pub step: u64,
    pub kind: EventKind,
    pub batch: usize,
    pub detail: String,
}

/// Windowed regret of one `(config, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub run_id: String,
    pub label: String,
    pub algorithm: Algorithm,
    pub model: ModelKind,
    pub seed: u64,
    pub horizon: u64,
    pub window: u64,
    pub windows: Vec<WindowStat>,
    pub cumulative_regret: f64,
    pub events: Vec<TimedEvent>,
    pub final_list: RankedList,
}

impl RegretTrace {
    pub fn first_window_regret(&self) -> f64 {
        self.windows.first().map_or(0.0, |w| w.avg_per_step_regret)
    }

    pub fn final_window_regret(&self) -> f64 {
        self.windows.last().map_or(0.0, |w| w.avg_per_step_regret)
    }
}

/// Runs one seed of `config`, calling `observer(step, list)` with every
/// displayed list.
pub fn simulate<F>(config: &ExperimentConfig, seed: u64, mut observer: F) -> Result<RegretTrace>
where
    F: FnMut(u64, &RankedList),
{
    config.validate()?;
    let model = config.build_model()?;
    let mut learner = config.build_learner(&model)?;
    let (mut env_rng, mut learner_rng) = run_rngs(seed);
    let best = model.expected_reward(&model.optimal_list()?)?;

    let mut outcome = SampleOutcome::default();
    let mut windows = Vec::new();
    let mut events = Vec::new();
    let mut cumulative = 0.0;
    let mut window_sum = 0.0;
    let mut window_start = 1;
    let mut last_list = None;

    for step in 1..=config.horizon {
        let list = learner.choose(&mut learner_rng)?;
        model.sample_into(&list, &mut env_rng, &mut outcome)?;
        for e in learner.update(&list, &outcome.clicks, &mut learner_rng)? {
            events.push(TimedEvent {
                step,
                kind: e.kind,
                batch: e.batch,
                detail: e.detail,
            });
        }
        // no list beats the optimum; clamping drops rounding noise from
        // reordered products in the cascade reward
        let regret = (best - model.expected_reward_unchecked(list.items())).max(0.0);
        cumulative += regret;
        window_sum += regret;
        observer(step, &list);

        if step % config.window == 0 || step == config.horizon {
            windows.push(WindowStat {
                index: windows.len(),
                start: window_start,
                end: step,
                avg_per_step_regret: window_sum / (step - window_start + 1) as f64,
                cumulative_regret: cumulative,
            });
            window_sum = 0.0;
            window_start = step + 1;
        }
        if step == config.horizon {
            last_list = Some(list);
        }
    }

    Ok(RegretTrace {
        run_id: config.run_id(seed),
        label: config.label.clone(),
        algorithm: config.algorithm,
        model: config.model,
        seed,
        horizon: config.horizon,
        window: config.window,
        windows,
        cumulative_regret: cumulative,
        events,
        final_list: last_list.expect("horizon is at least 5"),
    })
}

/// Runs one seed of `config`.
pub fn run_single(config: &ExperimentConfig, seed: u64) -> Result<RegretTrace> {
    simulate(config, seed, |_, _| {})
}

/// Histogram over half-open bins `[edges[i], edges[i + 1])`; values outside
/// the edges are counted in the nearest end bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Decade bins from 1e-5 to 1e-1, plus the open ends.
    pub fn default_edges() -> Vec<f64> {
        vec![0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, f64::INFINITY]
    }

    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(
                "histogram edges must be at least two strictly increasing values".into(),
            ));
        }
        let bins = edges.len() - 1;
        Ok(Self {
            edges,
            counts: vec![0; bins],
        })
    }

    pub fn add(&mut self, value: f64) {
        let bins = self.counts.len();
        let bin = self.edges[1..bins]
            .iter()
            .take_while(|&&e| value >= e)
            .count();
        self.counts[bin] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Mass in bins whose lower edge is at least `threshold`.
    pub fn count_at_least(&self, threshold: f64) -> usize {
        self.edges
            .iter()
            .zip(&self.counts)
            .filter(|&(&lo, _)| lo >= threshold)
            .map(|(_, &c)| c)
            .sum()
    }
}

/// Mean windowed regret and final-window histogram of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSummary {
    pub algorithm: Algorithm,
    /// `(start, end)` of every window.
    pub windows: Vec<(u64, u64)>,
    pub mean_regret: Vec<f64>,
    pub runs: usize,
    pub histogram: Histogram,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub runs: Vec<RegretTrace>,
    pub series: Vec<SeriesSummary>,
}

/// Groups runs by algorithm and averages their windowed regret.
///
/// Per-window values are summed in sorted order, so the result does not
/// depend on the order of `runs`.
pub fn aggregate(runs: &[RegretTrace], edges: &[f64]) -> Result<Vec<SeriesSummary>> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Config("nothing to aggregate".into()))?;
    if let Some(r) = runs
        .iter()
        .find(|r| r.horizon != first.horizon || r.window != first.window)
    {
        return Err(Error::Config(format!(
            "mixed horizons or windows: {} (T={}, window={}) vs {} (T={}, window={})",
            first.run_id, first.horizon, first.window, r.run_id, r.horizon, r.window
        )));
    }
    let mut algorithms: Vec<Algorithm> = runs.iter().map(|r| r.algorithm).collect();
    algorithms.sort();
    algorithms.dedup();

    algorithms
        .into_iter()
        .map(|algorithm| {
            let group: Vec<&RegretTrace> =
                runs.iter().filter(|r| r.algorithm == algorithm).collect();
            let windows: Vec<(u64, u64)> = first.windows.iter().map(|w| (w.start, w.end)).collect();
            let mean_regret = (0..windows.len())
                .map(|i| {
                    let mut values: Vec<f64> = group
                        .iter()
                        .map(|r| r.windows[i].avg_per_step_regret)
                        .collect();
                    values.sort_by(f64::total_cmp);
                    values.iter().sum::<f64>() / values.len() as f64
                })
                .collect();
            let mut histogram = Histogram::new(edges.to_vec())?;
            for r in &group {
                histogram.add(r.final_window_regret());
            }
            Ok(SeriesSummary {
                algorithm,
                windows,
                mean_regret,
                runs: group.len(),
                histogram,
            })
        })
        .collect()
}

/// Runs every seed of every config on up to `parallelism` threads and
/// aggregates the traces.
pub fn run_sweep(
    configs: &[ExperimentConfig],
    parallelism: usize,
    edges: &[f64],
) -> Result<SweepResult> {
    let first = configs
        .first()
        .ok_or_else(|| Error::Config("a sweep needs at least one config".into()))?;
    for c in configs {
        c.validate()?;
        if c.horizon != first.horizon || c.window != first.window {
            return Err(Error::Config(format!(
                "config `{}` has horizon {} and window {}, expected {} and {}",
                c.label, c.horizon, c.window, first.horizon, first.window
            )));
        }
    }
    let jobs: Vec<(&ExperimentConfig, u64)> = configs
        .iter()
        .flat_map(|c| c.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let runs = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, s)| run_single(c, s))
            .collect::<Result<Vec<_>>>()
    })?;
    let series = aggregate(&runs, edges)?;
    Ok(SweepResult { runs, series })
}
