//! Cascade (CM) and position-based (PBM) click models.
//!
//! Items are identified by `0..L` and positions by `0..K`. Every step draws
//! one attraction indicator per item, independently across items. In the
//! PBM each position is examined independently with a fixed probability; in
//! the CM the user scans from the top and stops at the first attractive item.

use std::fmt;

use rand::Rng;

use crate::error::{check_probability, Error, Result};

/// Attraction probabilities `alpha[d]` of the `L` items.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractionParams {
    alpha: Vec<f64>,
    sorted: bool,
}

impl AttractionParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Config("at least one item is required".into()));
        }
        for &a in &alpha {
            check_probability("attraction probability", a)?;
        }
        Ok(Self {
            alpha,
            sorted: false,
        })
    }

    /// Canonical instance: attraction probabilities must be nonincreasing.
    pub fn new_sorted(alpha: Vec<f64>) -> Result<Self> {
        let mut params = Self::new(alpha)?;
        if !is_nonincreasing(&params.alpha) {
            return Err(Error::Config(
                "sorted attraction probabilities must be nonincreasing".into(),
            ));
        }
        params.sorted = true;
        Ok(params)
    }

    pub fn num_items(&self) -> usize {
        self.alpha.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.alpha
    }

    pub fn get(&self, item: usize) -> f64 {
        self.alpha[item]
    }

    /// Whether this instance was constructed in canonical (sorted) form.
    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    pub fn max(&self) -> f64 {
        self.alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn is_nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] >= w[1])
}

/// Position-based model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PbmParams {
    pub attraction: AttractionParams,
    chi: Vec<f64>,
}

impl PbmParams {
    pub fn new(attraction: AttractionParams, chi: Vec<f64>) -> Result<Self> {
        if chi.is_empty() {
            return Err(Error::Config("at least one position is required".into()));
        }
        for &x in &chi {
            check_probability("examination probability", x)?;
        }
        if !is_nonincreasing(&chi) {
            return Err(Error::Config(
                "examination probabilities must be nonincreasing in position".into(),
            ));
        }
        if chi.len() > attraction.num_items() {
            return Err(Error::DimensionMismatch {
                what: "positions (K must not exceed L)",
                expected: attraction.num_items(),
                found: chi.len(),
            });
        }
        Ok(Self { attraction, chi })
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }
}

/// Cascade model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CmParams {
    pub attraction: AttractionParams,
    positions: usize,
}

impl CmParams {
    pub fn new(attraction: AttractionParams, positions: usize) -> Result<Self> {
        if positions == 0 || positions > attraction.num_items() {
            return Err(Error::DimensionMismatch {
                what: "positions (need 1 <= K <= L)",
                expected: attraction.num_items(),
                found: positions,
            });
        }
        Ok(Self {
            attraction,
            positions,
        })
    }

    pub fn positions(&self) -> usize {
        self.positions
    }
}

/// An ordered list of distinct items; index `k` holds the item at position `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankedList(Vec<usize>);

impl RankedList {
    /// Validates that items are distinct and drawn from `0..num_items`.
    pub fn new(items: Vec<usize>, num_items: usize) -> Result<Self> {
        let mut seen = vec![false; num_items];
        for &d in &items {
            if d >= num_items {
                return Err(Error::InvalidList(format!(
                    "item {d} is not in 0..{num_items}"
                )));
            }
            if std::mem::replace(&mut seen[d], true) {
                return Err(Error::InvalidList(format!("item {d} appears twice")));
            }
        }
        Ok(Self(items))
    }

    pub(crate) fn from_vec_unchecked(items: Vec<usize>) -> Self {
        Self(items)
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.contains(&item)
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for RankedList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// One step's worth of simulated user behaviour.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SampleOutcome {
    /// Attraction indicator of every item.
    pub attraction: Vec<bool>,
    /// Examination indicator of every position of the displayed list.
    pub examination: Vec<bool>,
    /// Click indicator of every position of the displayed list.
    pub clicks: Vec<bool>,
}

impl SampleOutcome {
    pub fn num_clicks(&self) -> usize {
        self.clicks.iter().filter(|&&c| c).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Cascade,
    PositionBased,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Cascade => "cm",
            ModelKind::PositionBased => "pbm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cm" | "cascade" => Ok(ModelKind::Cascade),
            "pbm" | "position-based" => Ok(ModelKind::PositionBased),
            other => Err(Error::Config(format!(
                "unknown model `{other}` (expected cm or pbm)"
            ))),
        }
    }
}

/// A click-model environment.
#[derive(Debug, Clone, PartialEq)]
pub enum ClickModel {
    Cascade(CmParams),
    PositionBased(PbmParams),
}

impl From<CmParams> for ClickModel {
    fn from(p: CmParams) -> Self {
        ClickModel::Cascade(p)
    }
}

impl From<PbmParams> for ClickModel {
    fn from(p: PbmParams) -> Self {
        ClickModel::PositionBased(p)
    }
}

impl ClickModel {
    pub fn cascade(alpha: Vec<f64>, positions: usize) -> Result<Self> {
        Ok(CmParams::new(AttractionParams::new(alpha)?, positions)?.into())
    }

    pub fn position_based(alpha: Vec<f64>, chi: Vec<f64>) -> Result<Self> {
        Ok(PbmParams::new(AttractionParams::new(alpha)?, chi)?.into())
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ClickModel::Cascade(_) => ModelKind::Cascade,
            ClickModel::PositionBased(_) => ModelKind::PositionBased,
        }
    }

    pub fn attraction(&self) -> &AttractionParams {
        match self {
            ClickModel::Cascade(p) => &p.attraction,
            ClickModel::PositionBased(p) => &p.attraction,
        }
    }

    pub fn num_items(&self) -> usize {
        self.attraction().num_items()
    }

    pub fn num_positions(&self) -> usize {
        match self {
            ClickModel::Cascade(p) => p.positions,
            ClickModel::PositionBased(p) => p.chi.len(),
        }
    }

    /// Checks that `list` is a valid action in this environment.
    pub fn check_list(&self, list: &RankedList) -> Result<()> {
        if list.len() != self.num_positions() {
            return Err(Error::DimensionMismatch {
                what: "ranked list length",
                expected: self.num_positions(),
                found: list.len(),
            });
        }
        let l = self.num_items();
        if let Some(&d) = list.items().iter().find(|&&d| d >= l) {
            return Err(Error::InvalidList(format!("item {d} is not in 0..{l}")));
        }
        Ok(())
    }

    /// Draws attraction (and for the PBM, examination) indicators and the
    /// resulting clicks on `list`.
    pub fn sample_step<R: Rng + ?Sized>(
        &self,
        list: &RankedList,
        rng: &mut R,
    ) -> Result<SampleOutcome> {
        let mut outcome = SampleOutcome::default();
        self.sample_into(list, rng, &mut outcome)?;
        Ok(outcome)
    }

    /// Allocation-free variant of [`ClickModel::sample_step`].
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        list: &RankedList,
        rng: &mut R,
        out: &mut SampleOutcome,
    ) -> Result<()> {
        self.check_list(list)?;
        let alpha = self.attraction().values();
        out.attraction.clear();
        out.attraction
            .extend(alpha.iter().map(|&a| rng.gen::<f64>() < a));
        out.examination.clear();
        out.clicks.clear();
        match self {
            ClickModel::PositionBased(p) => {
                out.examination
                    .extend(p.chi.iter().map(|&x| rng.gen::<f64>() < x));
                for (k, &d) in list.items().iter().enumerate() {
                    out.clicks.push(out.examination[k] && out.attraction[d]);
                }
            }
            ClickModel::Cascade(_) => {
                let mut examined = true;
                for &d in list.items() {
                    out.examination.push(examined);
                    let click = examined && out.attraction[d];
                    out.clicks.push(click);
                    if click {
                        examined = false;
                    }
                }
            }
        }
        Ok(())
    }

    /// Expected number of clicks on `list`.
    pub fn expected_reward(&self, list: &RankedList) -> Result<f64> {
        self.check_list(list)?;
        Ok(self.expected_reward_unchecked(list.items()))
    }

    pub(crate) fn expected_reward_unchecked(&self, items: &[usize]) -> f64 {
        let alpha = self.attraction().values();
        match self {
            ClickModel::PositionBased(p) => {
                items.iter().zip(&p.chi).map(|(&d, &x)| x * alpha[d]).sum()
            }
            ClickModel::Cascade(_) => 1.0 - items.iter().map(|&d| 1.0 - alpha[d]).product::<f64>(),
        }
    }

    /// Probability that position `position` of `list` is examined.
    pub fn examination_prob(&self, list: &RankedList, position: usize) -> Result<f64> {
        self.check_list(list)?;
        if position >= self.num_positions() {
            return Err(Error::PositionOutOfRange {
                position,
                len: self.num_positions(),
            });
        }
        Ok(match self {
            ClickModel::PositionBased(p) => p.chi[position],
            ClickModel::Cascade(p) => list.items()[..position]
                .iter()
                .map(|&d| 1.0 - p.attraction.get(d))
                .product(),
        })
    }

    /// The `K` most attractive items in decreasing order of attraction.
    ///
    /// Fails if attraction ties among the `K + 1` most attractive items make
    /// the optimum ambiguous.
    pub fn optimal_list(&self) -> Result<RankedList> {
        let alpha = self.attraction().values();
        let mut order: Vec<usize> = (0..alpha.len()).collect();
        order.sort_by(|&a, &b| alpha[b].total_cmp(&alpha[a]).then(a.cmp(&b)));
        let k = self.num_positions();
        for pair in order.windows(2).take(k) {
            if alpha[pair[0]] == alpha[pair[1]] {
                return Err(Error::AmbiguousOptimum(pair[0], pair[1]));
            }
        }
        order.truncate(k);
        Ok(RankedList(order))
    }

    /// Reward of `list` under fixed attraction and examination draws.
    fn reward_on(&self, items: &[usize], outcome: &SampleOutcome) -> f64 {
        match self {
            ClickModel::PositionBased(_) => items
                .iter()
                .zip(&outcome.examination)
                .filter(|&(&d, &x)| x && outcome.attraction[d])
                .count() as f64,
            ClickModel::Cascade(_) => {
                if items.iter().any(|&d| outcome.attraction[d]) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Realized regret of `chosen` against the optimal list evaluated on the
    /// same draws as `outcome`. May be negative for a single step.
    pub fn realized_regret(&self, chosen: &RankedList, outcome: &SampleOutcome) -> Result<f64> {
        self.check_list(chosen)?;
        if outcome.attraction.len() != self.num_items() {
            return Err(Error::DimensionMismatch {
                what: "attraction indicators",
                expected: self.num_items(),
                found: outcome.attraction.len(),
            });
        }
        if outcome.examination.len() != self.num_positions() {
            return Err(Error::DimensionMismatch {
                what: "examination indicators",
                expected: self.num_positions(),
                found: outcome.examination.len(),
            });
        }
        let optimal = self.optimal_list()?;
        Ok(self.reward_on(optimal.items(), outcome) - self.reward_on(chosen.items(), outcome))
    }
}
