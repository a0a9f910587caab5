mod support;

use sdfw_core::simnet::{build_flat, build_tree};
use support::check_policy_soundness;

fn check(t: &sdfw_core::topology::Topology, seed: u64) {
    let (compiled, ambiguous, delivered, blocked) = check_policy_soundness(t, seed, 300);
    assert!(
        compiled > 200 && delivered > 500 && blocked > 500,
        "{compiled} {ambiguous} {delivered} {blocked}"
    );
}

#[test]
fn flat_fabric_enforces_intent() {
    check(&build_flat(4).unwrap(), 31);
}

#[test]
fn tree_fabric_enforces_intent() {
    let t = build_tree(2, 2).unwrap();
    assert_eq!(t.hosts().count(), 4);
    assert!(t.switches().count() >= 3);
    check(&t, 32);
}
