mod common;

use earac::optimizer::{DpTable, Objective};
use earac::ExactValue;

#[test]
fn dp_matches_exhaustive_search() {
    let avg = DpTable::build(Objective::Average, 10).unwrap();
    let min = DpTable::build(Objective::Minimum, 10).unwrap();
    for n in 1..=10 {
        let (f, g) = common::brute_force(n);
        assert_eq!(avg.get(n).unwrap().value, f, "f({n})");
        assert_eq!(min.get(n).unwrap().value, g, "g({n})");
    }
}

#[test]
fn enumeration_counts_distinct_profiles() {
    // one shape for n = 1, 2; E2(L,E2) and E3 for n = 3
    assert_eq!(common::all_trees(1).len(), 1);
    assert_eq!(common::all_trees(2).len(), 1);
    assert_eq!(common::all_trees(3).len(), 2);
    for tree in common::all_trees(7) {
        tree.validate().unwrap();
        assert_eq!(tree.leaf_count(), 7);
    }
}

#[test]
fn best_mean_for_ten_bits() {
    let (f, _) = common::brute_force(10);
    let expected: ExactValue = "1/5 + 1/15*sqrt3".parse().unwrap();
    assert_eq!(f, expected);
}
