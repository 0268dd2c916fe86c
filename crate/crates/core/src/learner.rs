//! The two-method interface shared by every ranking policy.

use std::fmt;

use rand::RngCore;

use crate::click_models::RankedList;
use crate::error::{Error, Result};

/// Structural change reported by a learner after an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Split,
    Eliminate,
    StageAdvance,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Split => "split",
            EventKind::Eliminate => "eliminate",
            EventKind::StageAdvance => "stage_advance",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerEvent {
    pub kind: EventKind,
    pub batch: usize,
    pub detail: String,
}

/// An online learning-to-rank policy.
///
/// Each step the harness calls [`Learner::choose`] once, shows the list to
/// the environment and passes the click vector back through
/// [`Learner::update`].
pub trait Learner: Send {
    fn name(&self) -> &'static str;

    fn choose(&mut self, rng: &mut dyn RngCore) -> Result<RankedList>;

    fn update(
        &mut self,
        list: &RankedList,
        clicks: &[bool],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<LearnerEvent>>;
}

/// Plays the same list forever. With the optimal list it is the zero-regret
/// reference policy.
#[derive(Debug, Clone)]
pub struct FixedList {
    list: RankedList,
    chosen: bool,
}

impl FixedList {
    pub fn new(list: RankedList) -> Self {
        Self {
            list,
            chosen: false,
        }
    }
}

impl Learner for FixedList {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn choose(&mut self, _rng: &mut dyn RngCore) -> Result<RankedList> {
        self.chosen = true;
        Ok(self.list.clone())
    }

    fn update(
        &mut self,
        list: &RankedList,
        _clicks: &[bool],
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<LearnerEvent>> {
        if !std::mem::take(&mut self.chosen) {
            return Err(Error::Protocol("update called before choose"));
        }
        if *list != self.list {
            return Err(Error::Protocol("updated list differs from the chosen list"));
        }
        Ok(Vec::new())
    }
}

/// Checks the list/click-vector pair passed to `update` against the pending
/// list of the preceding `choose`.
pub(crate) fn check_feedback(
    pending: Option<&RankedList>,
    list: &RankedList,
    clicks: &[bool],
) -> Result<()> {
    let pending = pending.ok_or(Error::Protocol("update called before choose"))?;
    if pending != list {
        return Err(Error::Protocol("updated list differs from the chosen list"));
    }
    if clicks.len() != list.len() {
        return Err(Error::DimensionMismatch {
            what: "click vector",
            expected: list.len(),
            found: clicks.len(),
        });
    }
    Ok(())
}
