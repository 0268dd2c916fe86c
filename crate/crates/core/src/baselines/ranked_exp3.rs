use rand::{Rng, RngCore};

use crate::click_models::RankedList;
use crate::error::{Error, Result};
use crate::learner::{check_feedback, Learner, LearnerEvent};

/// Horizon-tuned Exp3 exploration rate `min(1, sqrt(L ln L / ((e - 1) T)))`.
pub fn default_gamma(num_items: usize, horizon: u64) -> f64 {
    let l = num_items as f64;
    let rate = (l * l.ln() / ((std::f64::consts::E - 1.0) * horizon as f64)).sqrt();
    rate.clamp(0.0, 1.0)
}

/// Ranked bandits with one Exp3 instance per position.
///
/// At position `k` the item is drawn from the `k`-th Exp3 distribution
/// restricted to items not placed above and renormalized. The importance
/// weight of the update uses that effective probability. Weights are stored
/// in log space.
#[derive(Debug, Clone)]
pub struct RankedExp3 {
    num_items: usize,
    gamma: f64,
    log_weights: Vec<Vec<f64>>,
    pending: Option<(RankedList, Vec<f64>)>,
}

impl RankedExp3 {
    pub fn new(num_items: usize, num_positions: usize, horizon: u64) -> Result<Self> {
        Self::with_gamma(num_items, num_positions, default_gamma(num_items, horizon))
    }

    pub fn with_gamma(num_items: usize, num_positions: usize, gamma: f64) -> Result<Self> {
        if num_positions == 0 || num_positions > num_items {
            return Err(Error::DimensionMismatch {
                what: "positions (need 1 <= K <= L)",
                expected: num_items,
                found: num_positions,
            });
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Probability {
                what: "exploration rate",
                value: gamma,
            });
        }
        Ok(Self {
            num_items,
            gamma,
            log_weights: vec![vec![0.0; num_items]; num_positions],
            pending: None,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Unrestricted Exp3 distribution of position `position`:
    /// `(1 - gamma) w / sum(w) + gamma / L`.
    pub fn probabilities(&self, position: usize) -> Vec<f64> {
        let logw = &self.log_weights[position];
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|&x| (x - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let floor = self.gamma / self.num_items as f64;
        w.iter()
            .map(|&x| (1.0 - self.gamma) * x / total + floor)
            .collect()
    }

    pub fn weights(&self, position: usize) -> Vec<f64> {
        let logw = &self.log_weights[position];
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        logw.iter().map(|&x| (x - top).exp()).collect()
    }

    /// Samples a list and the effective probability used at each position.
    pub fn sample_list<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (RankedList, Vec<f64>) {
        let k = self.log_weights.len();
        let mut placed = vec![false; self.num_items];
        let mut items = Vec::with_capacity(k);
        let mut used = Vec::with_capacity(k);
        for position in 0..k {
            let probs = self.probabilities(position);
            let mass: f64 = probs
                .iter()
                .zip(&placed)
                .filter(|&(_, &p)| !p)
                .map(|(&q, _)| q)
                .sum();
            let mut target = rng.gen::<f64>() * mass;
            let mut pick = None;
            for (d, &q) in probs.iter().enumerate() {
                if placed[d] {
                    continue;
                }
                pick = Some(d);
                if target < q {
                    break;
                }
                target -= q;
            }
            // the fallback to the last free item absorbs rounding in `mass`
            let d = pick.expect("K <= L leaves a free item");
            placed[d] = true;
            items.push(d);
            used.push(probs[d] / mass);
        }
        let list = RankedList::from_vec_unchecked(items);
        self.pending = Some((list.clone(), used.clone()));
        (list, used)
    }

    /// Importance-weighted update: the weight of the item shown at position
    /// `k` is multiplied by `exp(gamma * click / (p_k * L))`.
    pub fn observe(&mut self, list: &RankedList, clicks: &[bool]) -> Result<()> {
        let (pending, used) = self
            .pending
            .take()
            .ok_or(Error::Protocol("update called before choose"))?;
        if let Err(e) = check_feedback(Some(&pending), list, clicks) {
            self.pending = Some((pending, used));
            return Err(e);
        }
        let l = self.num_items as f64;
        for (k, (&d, &clicked)) in list.items().iter().zip(clicks).enumerate() {
            if clicked {
                self.log_weights[k][d] += self.gamma / (used[k] * l);
            }
        }
        Ok(())
    }
}

impl Learner for RankedExp3 {
    fn name(&self) -> &'static str {
        "rankedexp3"
    }

    fn choose(&mut self, rng: &mut dyn RngCore) -> Result<RankedList> {
        Ok(self.sample_list(rng).0)
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
