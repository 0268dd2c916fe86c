use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::click_models::RankedList;
use crate::error::{Error, Result};
use crate::kl_math::{self, log_plus_three_loglog};
use crate::learner::{check_feedback, Learner, LearnerEvent};

/// CascadeKL-UCB: ranks items by KL-UCB upper bounds on their attraction
/// probabilities and learns from cascade feedback.
#[derive(Debug, Clone)]
pub struct CascadeKlUcb {
    num_positions: usize,
    clicks: Vec<u64>,
    observations: Vec<u64>,
    step: u64,
    pending: Option<RankedList>,
}

/// Exploration level at step `t`, clamped below at its value for `t = 5`.
pub fn cascade_exploration(step: u64) -> f64 {
    let floor = log_plus_three_loglog(5.0);
    if step < 5 {
        floor
    } else {
        log_plus_three_loglog(step as f64).max(floor)
    }
}

impl CascadeKlUcb {
    pub fn new(num_items: usize, num_positions: usize) -> Result<Self> {
        if num_positions == 0 || num_positions > num_items {
            return Err(Error::DimensionMismatch {
                what: "positions (need 1 <= K <= L)",
                expected: num_items,
                found: num_positions,
            });
        }
        Ok(Self {
            num_positions,
            clicks: vec![0; num_items],
            observations: vec![0; num_items],
            step: 0,
            pending: None,
        })
    }

    pub fn clicks(&self) -> &[u64] {
        &self.clicks
    }

    pub fn observations(&self) -> &[u64] {
        &self.observations
    }

    /// Index of the upcoming step (1-based).
    pub fn step(&self) -> u64 {
        self.step + 1
    }

    /// Upper confidence bound of every item at exploration level `delta`.
    /// Unobserved items get 1.
    pub fn upper_bounds(&self, delta: f64) -> Vec<f64> {
        self.clicks
            .iter()
            .zip(&self.observations)
            .map(|(&c, &n)| {
                if n == 0 {
                    1.0
                } else {
                    kl_math::upper_unchecked(c as f64 / n as f64, n as f64, delta)
                }
            })
            .collect()
    }

    pub fn choose_list<R: Rng + ?Sized>(&mut self, rng: &mut R) -> RankedList {
        let ucb = self.upper_bounds(cascade_exploration(self.step()));
        let mut order: Vec<usize> = (0..ucb.len()).collect();
        order.shuffle(rng);
        order.sort_by(|&a, &b| ucb[b].total_cmp(&ucb[a]));
        order.truncate(self.num_positions);
        let list = RankedList::from_vec_unchecked(order);
        self.pending = Some(list.clone());
        list
    }

    /// Cascade feedback: positions up to the first click are observed, the
    /// first clicked item is credited, later clicks are discarded.
    pub fn observe(&mut self, list: &RankedList, clicks: &[bool]) -> Result<()> {
        check_feedback(self.pending.as_ref(), list, clicks)?;
        self.pending = None;
        let last = clicks
            .iter()
            .position(|&c| c)
            .unwrap_or(self.num_positions - 1);
        for (k, &d) in list.items().iter().enumerate().take(last + 1) {
            self.observations[d] += 1;
            self.clicks[d] += u64::from(clicks[k]);
        }
        self.step += 1;
        Ok(())
    }
}

impl Learner for CascadeKlUcb {
    fn name(&self) -> &'static str {
        "cascadeklucb"
    }

    fn choose(&mut self, rng: &mut dyn RngCore) -> Result<RankedList> {
        Ok(self.choose_list(rng))
    }

    fn update(
        &mut self,
        list: &RankedList,
        clicks: &[bool],
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<LearnerEvent>> {
        self.observe(list, clicks)?;
        Ok(Vec::new())
    }
}
