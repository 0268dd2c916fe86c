use crate::error::{Error, Result};

/// Instance quantities entering the BatchRank regret bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub positions: usize,
    pub items: usize,
    pub horizon: u64,
    pub alpha_max: f64,
    /// Smallest gap between consecutive attraction probabilities among the
    /// `K + 1` most attractive items.
    pub delta_min: f64,
}

impl BoundInputs {
    /// Derives `alpha_max` and `delta_min` from attraction probabilities in
    /// any order. With `K = L` only the gaps inside the top `K` exist.
    pub fn for_instance(alpha: &[f64], positions: usize, horizon: u64) -> Result<Self> {
        let mut sorted = alpha.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let delta_min = sorted
            .windows(2)
            .take(positions)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            positions,
            items: alpha.len(),
            horizon,
            alpha_max: sorted.first().copied().unwrap_or(0.0),
            delta_min,
        })
    }
}

/// Upper bound on the expected `T`-step regret of BatchRank:
///
/// ```text
/// 192 K^3 L / ((1 - alpha_max) delta_min) * ln T + 4 K L (3e + K)
/// ```
pub fn theorem1_bound(inputs: &BoundInputs) -> Result<f64> {
    if inputs.horizon < 5 {
        return Err(Error::HorizonTooShort(inputs.horizon));
    }
    if !(inputs.delta_min > 0.0) || !inputs.delta_min.is_finite() {
        return Err(Error::BoundUndefined(
            "delta_min must be positive and finite",
        ));
    }
    if !(inputs.alpha_max < 1.0) {
        return Err(Error::BoundUndefined("alpha_max must be below 1"));
    }
    let k = inputs.positions as f64;
    let l = inputs.items as f64;
    let gap_term = 192.0 * k.powi(3) * l / ((1.0 - inputs.alpha_max) * inputs.delta_min)
        * (inputs.horizon as f64).ln();
    let constant = 4.0 * k * l * (3.0 * std::f64::consts::E + k);
    Ok(gap_term + constant)
}
