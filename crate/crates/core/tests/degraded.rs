//! First-degraded distributions against one reachability query per state.

mod common;

use common::checks;

#[test]
fn hand_derived_values() {
    checks::degraded_hand_values().unwrap();
}

#[test]
fn forward_distributions_match_per_state_queries() {
    checks::forward_vs_per_state(50, 7).unwrap();
}
