//! BatchRank: randomized, divide-and-conquer ranking by elimination.
//!
//! The learner maintains a set of active batches whose position intervals
//! partition `0..K`. Each batch explores its items uniformly in stages: in
//! stage `l` every surviving item must be observed `n_l = ceil(16 * 4^l * ln T)`
//! times. At the end of a stage, KL-UCB bounds on the per-item click rates
//! either split the batch into a more attractive and a less attractive half,
//! or eliminate items that cannot belong to the batch's positions.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::click_models::RankedList;
use crate::error::{Error, Result};
use crate::kl_math::{self, delta_t};
use crate::learner::{check_feedback, EventKind, Learner, LearnerEvent};

/// Number of observations per item required to finish stage `stage`.
///
/// A value above `T` means the stage can never complete, since no item is
/// observed more often than there are steps. Values too large for `u64`
/// saturate to `u64::MAX`.
pub fn stage_length(stage: u32, horizon: u64) -> Result<u64> {
    if horizon < 5 {
        return Err(Error::HorizonTooShort(horizon));
    }
    let raw = 16.0 * 4f64.powi(stage as i32) * (horizon as f64).ln();
    // float-to-int casts saturate
    Ok(raw.ceil() as u64)
}

/// A unit of exploration: a contiguous interval of positions and the items
/// competing for them, with click and observation counters for the current
/// stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub id: usize,
    /// First and last position (inclusive, 0-based).
    pub first: usize,
    pub last: usize,
    pub stage: u32,
    /// Observations required to finish the current stage.
    pub stage_length: u64,
    pub items: Vec<usize>,
    /// Parallel to `items`.
    pub clicks: Vec<u64>,
    /// Parallel to `items`.
    pub observations: Vec<u64>,
}

impl Batch {
    fn new(id: usize, first: usize, last: usize, items: Vec<usize>, horizon: u64) -> Result<Self> {
        let m = items.len();
        Ok(Self {
            id,
            first,
            last,
            stage: 0,
            stage_length: stage_length(0, horizon)?,
            items,
            clicks: vec![0; m],
            observations: vec![0; m],
        })
    }

    /// Number of positions covered by the batch.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn positions(&self) -> RangeInclusive<usize> {
        self.first..=self.last
    }

    pub fn min_observations(&self) -> u64 {
        self.observations.iter().copied().min().unwrap_or(0)
    }

    pub fn max_observations(&self) -> u64 {
        self.observations.iter().copied().max().unwrap_or(0)
    }

    pub fn is_stage_complete(&self) -> bool {
        self.min_observations() == self.stage_length
    }

    fn reset_stage(&mut self, stage: u32, items: Vec<usize>, horizon: u64) -> Result<()> {
        self.stage = stage;
        self.stage_length = stage_length(stage, horizon)?;
        self.clicks = vec![0; items.len()];
        self.observations = vec![0; items.len()];
        self.items = items;
        Ok(())
    }
}

/// End-of-stage statistics of one item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemEstimate {
    pub item: usize,
    pub clicks: u64,
    /// `clicks / n_l`.
    pub click_rate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Result of the end-of-stage test on a batch.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchOutcome {
    /// Move to the next stage with the surviving items.
    Advance {
        survivors: Vec<usize>,
        eliminated: Vec<usize>,
        estimates: Vec<ItemEstimate>,
    },
    /// Split into the `split_at` items with the highest lower bounds
    /// (`upper`) and the rest (`lower`).
    Split {
        split_at: usize,
        upper: Vec<usize>,
        lower: Vec<usize>,
        estimates: Vec<ItemEstimate>,
    },
}

/// Runs the end-of-stage test on a batch whose items have all been observed
/// `n_l` times. Ties in the lower-bound ordering are broken uniformly at
/// random.
pub fn split_or_eliminate<R: Rng + ?Sized>(
    batch: &Batch,
    horizon: u64,
    rng: &mut R,
) -> Result<BatchOutcome> {
    if !batch.is_stage_complete() {
        return Err(Error::StageIncomplete {
            batch: batch.id,
            stage: batch.stage,
        });
    }
    let delta = delta_t(horizon)?;
    let n = batch.stage_length as f64;
    let estimates: Vec<ItemEstimate> = batch
        .items
        .iter()
        .zip(&batch.clicks)
        .map(|(&item, &clicks)| {
            let click_rate = clicks as f64 / n;
            ItemEstimate {
                item,
                clicks,
                click_rate,
                lower: kl_math::lower_unchecked(click_rate, n, delta),
                upper: kl_math::upper_unchecked(click_rate, n, delta),
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..estimates.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| estimates[b].lower.total_cmp(&estimates[a].lower));

    // max_upper_below[k] = max upper bound over order[k..]
    let m = order.len();
    let mut max_upper_below = vec![f64::NEG_INFINITY; m + 1];
    for k in (0..m).rev() {
        max_upper_below[k] = max_upper_below[k + 1].max(estimates[order[k]].upper);
    }

    let len = batch.len();
    // Highest split point s in 1..len with L(d_s) > max U over the rest.
    let split_at = (1..len)
        .rev()
        .find(|&s| estimates[order[s - 1]].lower > max_upper_below[s]);

    if let Some(s) = split_at {
        let upper = order[..s].iter().map(|&i| estimates[i].item).collect();
        let lower = order[s..].iter().map(|&i| estimates[i].item).collect();
        return Ok(BatchOutcome::Split {
            split_at: s,
            upper,
            lower,
            estimates,
        });
    }

    let threshold = estimates[order[len - 1]].lower;
    let (survivors, eliminated): (Vec<ItemEstimate>, Vec<ItemEstimate>) =
        estimates.iter().partition(|e| e.upper >= threshold);
    Ok(BatchOutcome::Advance {
        survivors: survivors.iter().map(|e| e.item).collect(),
        eliminated: eliminated.iter().map(|e| e.item).collect(),
        estimates,
    })
}

/// A structural change of the batch tree.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchEvent {
    StageAdvance {
        batch: usize,
        stage: u32,
        /// Items kept for the new stage.
        survivors: Vec<usize>,
        estimates: Vec<ItemEstimate>,
    },
    Eliminate {
        batch: usize,
        stage: u32,
        removed: Vec<usize>,
    },
    Split {
        parent: usize,
        split_at: usize,
        upper: usize,
        lower: usize,
        estimates: Vec<ItemEstimate>,
    },
}

impl BatchEvent {
    pub fn kind(&self) -> EventKind {
        match self {
            BatchEvent::StageAdvance { .. } => EventKind::StageAdvance,
            BatchEvent::Eliminate { .. } => EventKind::Eliminate,
            BatchEvent::Split { .. } => EventKind::Split,
        }
    }

    pub fn batch(&self) -> usize {
        match *self {
            BatchEvent::StageAdvance { batch, .. } | BatchEvent::Eliminate { batch, .. } => batch,
            BatchEvent::Split { parent, .. } => parent,
        }
    }

    /// Estimates that triggered the event, if it closed a stage.
    pub fn estimates(&self) -> Option<&[ItemEstimate]> {
        match self {
            BatchEvent::StageAdvance { estimates, .. } | BatchEvent::Split { estimates, .. } => {
                Some(estimates)
            }
            BatchEvent::Eliminate { .. } => None,
        }
    }

    fn detail(&self) -> String {
        let join = |items: &[usize]| {
            items
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            BatchEvent::StageAdvance {
                stage, survivors, ..
            } => format!("stage={stage} items={}", join(survivors)),
            BatchEvent::Eliminate { stage, removed, .. } => {
                format!("stage={stage} removed={}", join(removed))
            }
            BatchEvent::Split {
                split_at,
                upper,
                lower,
                ..
            } => {
                let mut s = String::new();
                let _ = write!(s, "s={split_at} children={upper} {lower}");
                s
            }
        }
    }
}

impl From<&BatchEvent> for LearnerEvent {
    fn from(e: &BatchEvent) -> Self {
        LearnerEvent {
            kind: e.kind(),
            batch: e.batch(),
            detail: e.detail(),
        }
    }
}

/// BatchRank learner state for a fixed horizon.
#[derive(Debug, Clone)]
pub struct BatchRank {
    num_items: usize,
    num_positions: usize,
    horizon: u64,
    /// Every batch ever created; batch `id` lives at index `id - 1`.
    batches: Vec<Batch>,
    /// Active batch ids in increasing order.
    active: Vec<usize>,
    /// Batch-local slot displayed at each position by the last `display`.
    slots: Vec<(usize, usize)>,
    pending: Option<RankedList>,
    steps: u64,
}

impl BatchRank {
    /// A single batch over all positions and items.
    pub fn new(num_items: usize, num_positions: usize, horizon: u64) -> Result<Self> {
        if num_positions == 0 || num_positions > num_items {
            return Err(Error::DimensionMismatch {
                what: "positions (need 1 <= K <= L)",
                expected: num_items,
                found: num_positions,
            });
        }
        let root = Batch::new(1, 0, num_positions - 1, (0..num_items).collect(), horizon)?;
        Ok(Self {
            num_items,
            num_positions,
            horizon,
            batches: vec![root],
            active: vec![1],
            slots: vec![(0, 0); num_positions],
            pending: None,
            steps: 0,
        })
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_positions(&self) -> usize {
        self.num_positions
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Number of completed choose/update rounds.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Highest batch id created so far.
    pub fn b_max(&self) -> usize {
        self.batches.len()
    }

    pub fn batch(&self, id: usize) -> Option<&Batch> {
        id.checked_sub(1).and_then(|i| self.batches.get(i))
    }

    pub fn active_ids(&self) -> &[usize] {
        &self.active
    }

    pub fn active_batches(&self) -> impl Iterator<Item = &Batch> {
        self.active.iter().map(move |&id| &self.batches[id - 1])
    }

    /// Builds the next list: in every active batch, the `len(b)` least
    /// observed items (ties broken at random) are placed on the batch's
    /// positions in uniformly random order.
    pub fn display<R: Rng + ?Sized>(&mut self, rng: &mut R) -> RankedList {
        let mut items = vec![usize::MAX; self.num_positions];
        for &id in &self.active {
            let batch = &self.batches[id - 1];
            let mut order: Vec<usize> = (0..batch.items.len()).collect();
            order.shuffle(rng);
            order.sort_by_key(|&i| batch.observations[i]);
            order.truncate(batch.len());
            order.shuffle(rng);
            for (k, &local) in batch.positions().zip(&order) {
                items[k] = batch.items[local];
                self.slots[k] = (id, local);
            }
        }
        let list = RankedList::from_vec_unchecked(items);
        self.pending = Some(list.clone());
        list
    }

    /// Credits clicks to displayed items that sit at their batch's minimum
    /// observation count, then closes every batch whose stage is complete.
    pub fn feed_clicks<R: Rng + ?Sized>(
        &mut self,
        list: &RankedList,
        clicks: &[bool],
        rng: &mut R,
    ) -> Result<Vec<BatchEvent>> {
        check_feedback(self.pending.as_ref(), list, clicks)?;
        self.pending = None;

        for &id in &self.active {
            let batch = &mut self.batches[id - 1];
            let n_min = batch.min_observations();
            for k in batch.positions() {
                let (owner, local) = self.slots[k];
                debug_assert_eq!(owner, id);
                if batch.observations[local] == n_min {
                    batch.clicks[local] += u64::from(clicks[k]);
                    batch.observations[local] += 1;
                }
            }
        }

        let mut events = Vec::new();
        for id in self.active.clone() {
            if self.batches[id - 1].is_stage_complete() {
                let outcome = split_or_eliminate(&self.batches[id - 1], self.horizon, rng)?;
                self.apply(id, outcome, &mut events)?;
            }
        }
        self.steps += 1;
        Ok(events)
    }

    fn apply(
        &mut self,
        id: usize,
        outcome: BatchOutcome,
        events: &mut Vec<BatchEvent>,
    ) -> Result<()> {
        match outcome {
            BatchOutcome::Advance {
                survivors,
                eliminated,
                estimates,
            } => {
                let batch = &mut self.batches[id - 1];
                let next = batch.stage + 1;
                if !eliminated.is_empty() {
                    events.push(BatchEvent::Eliminate {
                        batch: id,
                        stage: batch.stage,
                        removed: eliminated,
                    });
                }
                batch.reset_stage(next, survivors.clone(), self.horizon)?;
                events.push(BatchEvent::StageAdvance {
                    batch: id,
                    stage: next,
                    survivors,
                    estimates,
                });
            }
            BatchOutcome::Split {
                split_at,
                upper,
                lower,
                estimates,
            } => {
                let parent = &self.batches[id - 1];
                let (first, last) = (parent.first, parent.last);
                let upper_id = self.batches.len() + 1;
                let lower_id = upper_id + 1;
                let upper_batch =
                    Batch::new(upper_id, first, first + split_at - 1, upper, self.horizon)?;
                let lower_batch =
                    Batch::new(lower_id, first + split_at, last, lower, self.horizon)?;
                self.batches.push(upper_batch);
                self.batches.push(lower_batch);
                self.active.retain(|&b| b != id);
                self.active.push(upper_id);
                self.active.push(lower_id);
                self.active.sort_unstable();
                events.push(BatchEvent::Split {
                    parent: id,
                    split_at,
                    upper: upper_id,
                    lower: lower_id,
                    estimates,
                });
            }
        }
        Ok(())
    }

    /// Lists every violated structural invariant; empty when the state is
    /// consistent.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let k = self.num_positions;
        let mut covered = vec![0usize; k];
        for b in self.active_batches() {
            if b.first > b.last || b.last >= k {
                out.push(format!(
                    "batch {} has bad interval {}..={}",
                    b.id, b.first, b.last
                ));
                continue;
            }
            for p in b.positions() {
                covered[p] += 1;
            }
            if b.items.len() < b.len() {
                out.push(format!("batch {} has fewer items than positions", b.id));
            }
            if b.last + 1 < k && b.items.len() != b.len() {
                out.push(format!(
                    "batch {} above the last position has {} items for {} positions",
                    b.id,
                    b.items.len(),
                    b.len()
                ));
            }
            if b.max_observations() - b.min_observations() > 1 {
                out.push(format!("batch {} explores items non-uniformly", b.id));
            }
            for (i, (&c, &n)) in b.clicks.iter().zip(&b.observations).enumerate() {
                if c > n || n > b.stage_length {
                    out.push(format!(
                        "batch {} item {} has clicks {c} observations {n} stage length {}",
                        b.id, b.items[i], b.stage_length
                    ));
                }
            }
        }
        if covered.iter().any(|&c| c != 1) {
            out.push(format!(
                "active intervals do not partition positions: {covered:?}"
            ));
        }
        if self.b_max() > 2 * k {
            out.push(format!("b_max {} exceeds 2K = {}", self.b_max(), 2 * k));
        }
        out
    }
}

impl Learner for BatchRank {
    fn name(&self) -> &'static str {
        "batchrank"
    }

    fn choose(&mut self, rng: &mut dyn RngCore) -> Result<RankedList> {
        Ok(self.display(rng))
    }

    fn update(
        &mut self,
        list: &RankedList,
        clicks: &[bool],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<LearnerEvent>> {
        let events = self.feed_clicks(list, clicks, rng)?;
        Ok(events.iter().map(LearnerEvent::from).collect())
    }
}
