#![allow(dead_code)]

use batchrank::{BatchEvent, BatchRank, ClickModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Violations of the construction rules for the children of a split.
pub fn split_violations(state: &BatchRank, event: &BatchEvent) -> Vec<String> {
    let BatchEvent::Split {
        parent,
        split_at,
        upper,
        lower,
        ..
    } = *event
    else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let p = state.batch(parent).expect("parent batch exists");
    let (Some(u), Some(l)) = (state.batch(upper), state.batch(lower)) else {
        return vec![format!("split of {parent} lost a child")];
    };
    if state.active_ids().contains(&parent) {
        out.push(format!("parent {parent} still active after split"));
    }
    if lower != state.b_max() || upper + 1 != lower {
        out.push(format!("children {upper},{lower} are not the two newest ids (b_max {})", state.b_max()));
    }
    if u.first != p.first || u.last + 1 != p.first + split_at || l.first != u.last + 1 || l.last != p.last {
        out.push(format!(
            "child intervals {}..={} and {}..={} do not split {}..={} at {split_at}",
            u.first, u.last, l.first, l.last, p.first, p.last
        ));
    }
    if u.items.len() != split_at || l.items.len() + split_at != p.items.len() {
        out.push(format!("child sizes {} and {} for s = {split_at}", u.items.len(), l.items.len()));
    }
    let mut all: Vec<usize> = u.items.iter().chain(&l.items).copied().collect();
    let mut parent_items = p.items.clone();
    all.sort_unstable();
    parent_items.sort_unstable();
    if all != parent_items {
        out.push("children do not partition the parent's items".into());
    }
    for c in [u, l] {
        if c.stage != 0 || c.clicks.iter().any(|&x| x != 0) || c.observations.iter().any(|&x| x != 0) {
            out.push(format!("child {} does not start fresh", c.id));
        }
    }
    out
}

/// Runs BatchRank against `model` for `horizon` steps, checking every
/// structural invariant after each step. Returns the final state and the
/// first violation found, if any.
pub fn checked_run(model: &ClickModel, horizon: u64, seed: u64) -> (BatchRank, Option<String>) {
    let mut env = ChaCha8Rng::seed_from_u64(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut state = BatchRank::new(model.num_items(), model.num_positions(), horizon).unwrap();
    for step in 1..=horizon {
        let list = state.display(&mut rng);
        let outcome = model.sample_step(&list, &mut env).unwrap();
        let events = state.feed_clicks(&list, &outcome.clicks, &mut rng).unwrap();
        let mut problems = state.invariant_violations();
        for e in &events {
            problems.extend(split_violations(&state, e));
        }
        if let Some(first) = problems.into_iter().next() {
            return (state, Some(format!("step {step}: {first}")));
        }
    }
    (state, None)
}
