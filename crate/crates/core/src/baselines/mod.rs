//! Comparison policies behind the common [`Learner`](crate::learner::Learner)
//! interface.

mod cascade_klucb;
mod ranked_exp3;

pub use cascade_klucb::{cascade_exploration, CascadeKlUcb};
pub use ranked_exp3::{default_gamma, RankedExp3};
