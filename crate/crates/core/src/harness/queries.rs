//! Synthetic query families standing in for click models fitted to logs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::click_models::ModelKind;
use crate::error::{Error, Result};
use crate::harness::{Algorithm, ExperimentConfig, DEFAULT_WINDOW};

/// Smallest and largest attraction probability of a generated item.
pub const ATTRACTION_RANGE: (f64, f64) = (0.05, 0.9);

/// Shape of the examination probabilities of generated PBM queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExaminationDecay {
    /// `chi(k) = rate^k` for 0-based position `k`.
    Geometric(f64),
    /// `chi(k) = 1 / (k + 1)`.
    Harmonic,
}

impl ExaminationDecay {
    pub fn chi(self, positions: usize) -> Vec<f64> {
        (0..positions)
            .map(|k| match self {
                ExaminationDecay::Geometric(rate) => rate.powi(k as i32),
                ExaminationDecay::Harmonic => 1.0 / (k as f64 + 1.0),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryFamily {
    pub model: ModelKind,
    pub items: usize,
    pub positions: usize,
    pub horizon: u64,
    pub decay: ExaminationDecay,
    pub window: u64,
}

impl Default for QueryFamily {
    fn default() -> Self {
        Self {
            model: ModelKind::PositionBased,
            items: 10,
            positions: 5,
            horizon: 10_000_000,
            decay: ExaminationDecay::Geometric(0.7),
            window: DEFAULT_WINDOW,
        }
    }
}

impl QueryFamily {
    /// Draws `count` queries; attraction probabilities are uniform on
    /// [`ATTRACTION_RANGE`], sorted in decreasing order. Each query yields one
    /// config per algorithm, all sharing `seeds`.
    pub fn generate(
        &self,
        count: usize,
        seed: u64,
        algorithms: &[Algorithm],
        seeds: &[u64],
    ) -> Result<Vec<ExperimentConfig>> {
        if self.positions == 0 || self.positions > self.items {
            return Err(Error::Config(format!(
                "need 1 <= K <= L, got K = {} and L = {}",
                self.positions, self.items
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = ATTRACTION_RANGE;
        let chi = match self.model {
            ModelKind::PositionBased => self.decay.chi(self.positions),
            ModelKind::Cascade => Vec::new(),
        };
        let mut configs = Vec::with_capacity(count * algorithms.len());
        for q in 0..count {
            let alpha = loop {
                let mut alpha: Vec<f64> = (0..self.items).map(|_| rng.gen_range(lo..=hi)).collect();
                alpha.sort_by(|a, b| b.total_cmp(a));
                // the optimum must be unique
                if alpha.windows(2).take(self.positions).all(|w| w[0] > w[1]) {
                    break alpha;
                }
            };
            for &algorithm in algorithms {
                configs.push(ExperimentConfig {
                    label: format!("query{q:03}"),
                    model: self.model,
                    alpha: alpha.clone(),
                    chi: chi.clone(),
                    positions: self.positions,
                    horizon: self.horizon,
                    algorithm,
                    seeds: seeds.to_vec(),
                    window: self.window,
                });
            }
        }
        Ok(configs)
    }
}
