//! Bernoulli Kullback-Leibler divergence and KL-UCB confidence bounds.
//!
//! All logarithms are natural. The KL-UCB bounds are found by bisection on
//! the monotone branches of `q -> kl(p, q)`.

use crate::error::{check_probability, Error, Result};

/// Bisection stops once the bracketing interval is at most this wide.
pub const BISECTION_WIDTH: f64 = 1e-9;
/// Hard cap on bisection iterations.
pub const BISECTION_MAX_ITERS: usize = 100;

/// A pair of confidence bounds on a Bernoulli mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceBounds {
    pub lower: f64,
    pub upper: f64,
}

impl ConfidenceBounds {
    /// KL-UCB lower and upper bounds for an empirical mean `c_hat` over `n`
    /// observations at exploration level `delta`.
    pub fn kl_ucb(c_hat: f64, n: u64, delta: f64) -> Result<Self> {
        Ok(Self {
            lower: kl_ucb_lower(c_hat, n, delta)?,
            upper: kl_ucb_upper(c_hat, n, delta)?,
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

// p * ln(p / q) with the 0 * ln 0 = 0 convention.
fn entropy_term(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).ln()
    }
}

/// KL divergence without domain checks, used on hot paths where the
/// arguments are already known to be probabilities.
#[inline]
pub(crate) fn kl_unchecked(p: f64, q: f64) -> f64 {
    let value = entropy_term(p, q) + entropy_term(1.0 - p, 1.0 - q);
    // rounding can push the result of two nearly cancelling terms below zero
    value.max(0.0)
}

/// Kullback-Leibler divergence between Bernoulli(p) and Bernoulli(q).
///
/// Returns `+inf` when `q` is 0 or 1 and `p != q`.
pub fn bernoulli_kl(p: f64, q: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(kl_unchecked(p, q))
}

fn check_bound_inputs(c_hat: f64, n: u64, delta: f64) -> Result<()> {
    check_probability("c_hat", c_hat)?;
    if n == 0 {
        return Err(Error::Domain {
            what: "n",
            constraint: "at least 1",
            value: 0.0,
        });
    }
    if !(delta >= 0.0) {
        return Err(Error::Domain {
            what: "delta",
            constraint: "nonnegative",
            value: delta,
        });
    }
    Ok(())
}

/// Largest `q` in `[c_hat, 1]` with `n * kl(c_hat, q) <= delta`.
///
/// The returned value always satisfies the inequality; the true boundary
/// lies within [`BISECTION_WIDTH`] above it.
pub fn kl_ucb_upper(c_hat: f64, n: u64, delta: f64) -> Result<f64> {
    check_bound_inputs(c_hat, n, delta)?;
    Ok(upper_unchecked(c_hat, n as f64, delta))
}

/// Smallest `q` in `[0, c_hat]` with `n * kl(c_hat, q) <= delta`.
pub fn kl_ucb_lower(c_hat: f64, n: u64, delta: f64) -> Result<f64> {
    check_bound_inputs(c_hat, n, delta)?;
    Ok(lower_unchecked(c_hat, n as f64, delta))
}

pub(crate) fn upper_unchecked(c_hat: f64, n: f64, delta: f64) -> f64 {
    if c_hat >= 1.0 {
        return 1.0;
    }
    if delta == 0.0 {
        return c_hat;
    }
    let level = delta / n;
    if kl_unchecked(c_hat, 1.0) <= level {
        return 1.0;
    }
    let mut infeasible = 1.0;
    // Pinsker: kl(p, q) >= 2 (p - q)^2 gives a tighter bracket
    let pinsker = c_hat + (level / 2.0).sqrt();
    if pinsker < 1.0 && kl_unchecked(c_hat, pinsker) > level {
        infeasible = pinsker;
    }
    let mut feasible = c_hat;
    for _ in 0..BISECTION_MAX_ITERS {
        if infeasible - feasible <= BISECTION_WIDTH {
            break;
        }
        let mid = 0.5 * (feasible + infeasible);
        if kl_unchecked(c_hat, mid) <= level {
            feasible = mid;
        } else {
            infeasible = mid;
        }
    }
    feasible
}

pub(crate) fn lower_unchecked(c_hat: f64, n: f64, delta: f64) -> f64 {
    if c_hat <= 0.0 {
        return 0.0;
    }
    if delta == 0.0 {
        return c_hat;
    }
    let level = delta / n;
    if kl_unchecked(c_hat, 0.0) <= level {
        return 0.0;
    }
    let mut infeasible = 0.0;
    let pinsker = c_hat - (level / 2.0).sqrt();
    if pinsker > 0.0 && kl_unchecked(c_hat, pinsker) > level {
        infeasible = pinsker;
    }
    let mut feasible = c_hat;
    for _ in 0..BISECTION_MAX_ITERS {
        if feasible - infeasible <= BISECTION_WIDTH {
            break;
        }
        let mid = 0.5 * (feasible + infeasible);
        if kl_unchecked(c_hat, mid) <= level {
            feasible = mid;
        } else {
            infeasible = mid;
        }
    }
    feasible
}

/// `ln t + 3 ln ln t`, defined for `t > 1`.
pub(crate) fn log_plus_three_loglog(t: f64) -> f64 {
    let log_t = t.ln();
    log_t + 3.0 * log_t.ln()
}

/// Exploration level `delta_T = ln T + 3 ln ln T` for horizon `T >= 5`.
pub fn delta_t(horizon: u64) -> Result<f64> {
    if horizon < 5 {
        return Err(Error::HorizonTooShort(horizon));
    }
    Ok(log_plus_three_loglog(horizon as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kl_examples() {
        assert_eq!(bernoulli_kl(0.3, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(bernoulli_kl(0.0, 0.5).unwrap(), 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            bernoulli_kl(0.5, 0.25).unwrap(),
            0.143841036225890,
            epsilon = 1e-12
        );
    }

    #[test]
    fn kl_endpoints() {
        assert_eq!(bernoulli_kl(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(bernoulli_kl(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(bernoulli_kl(0.2, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(bernoulli_kl(0.2, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(bernoulli_kl(0.0, 1.0).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(bernoulli_kl(1.0, 0.5).unwrap(), 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn kl_rejects_out_of_range() {
        assert!(matches!(
            bernoulli_kl(-0.1, 0.5),
            Err(Error::Probability { .. })
        ));
        assert!(matches!(
            bernoulli_kl(0.5, 1.5),
            Err(Error::Probability { .. })
        ));
        assert!(bernoulli_kl(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        assert_eq!(kl_ucb_upper(1.0, 7, 3.0).unwrap(), 1.0);
        assert_eq!(kl_ucb_upper(0.37, 7, 0.0).unwrap(), 0.37);
        assert_abs_diff_eq!(
            kl_ucb_upper(0.0, 10, 1.0).unwrap(),
            1.0 - (-0.1f64).exp(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(kl_ucb_lower(0.0, 7, 3.0).unwrap(), 0.0);
        assert_eq!(kl_ucb_lower(0.37, 7, 0.0).unwrap(), 0.37);
        assert_abs_diff_eq!(
            kl_ucb_lower(1.0, 10, 1.0).unwrap(),
            (-0.1f64).exp(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn bound_input_errors() {
        assert!(kl_ucb_upper(0.5, 0, 1.0).is_err());
        assert!(kl_ucb_lower(0.5, 3, -1.0).is_err());
        assert!(kl_ucb_upper(1.2, 3, 1.0).is_err());
    }

    #[test]
    fn huge_radius_approaches_the_endpoints() {
        // kl(0.5, 1) is infinite, so 1 itself is never feasible
        let u = kl_ucb_upper(0.5, 1, 100.0).unwrap();
        assert!(u < 1.0 && u > 1.0 - 2.0 * BISECTION_WIDTH);
        let l = kl_ucb_lower(0.5, 1, 100.0).unwrap();
        assert!(l > 0.0 && l < 2.0 * BISECTION_WIDTH);
    }

    #[test]
    fn delta_t_examples() {
        assert_abs_diff_eq!(delta_t(5).unwrap(), 3.037092898415432, epsilon = 1e-12);
        assert_abs_diff_eq!(delta_t(16).unwrap(), 5.831933043854459, epsilon = 1e-12);
        assert!(matches!(delta_t(4), Err(Error::HorizonTooShort(4))));
    }

    #[test]
    fn confidence_bounds_bracket_the_mean() {
        let b = ConfidenceBounds::kl_ucb(0.4, 50, 2.0).unwrap();
        assert!(b.lower < 0.4 && 0.4 < b.upper);
        assert!(b.contains(0.4));
    }
}
