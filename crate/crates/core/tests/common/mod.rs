//! Brute-force search over every tree shape, independent of the optimizer.

#![allow(dead_code)]

use std::collections::BTreeSet;

use earac::codetree::{self, CodeTree};
use earac::primitives::PrimitiveKind;
use earac::ExactValue;

/// Every tree on `n` leaves up to child order, one representative per
/// multiset of leaf path profiles. Leaves are labelled left to right.
pub fn all_trees(n: usize) -> Vec<CodeTree> {
    let mut memo: Vec<Vec<CodeTree>> = vec![Vec::new(), vec![CodeTree::Leaf(0)]];
    for m in 2..=n {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut push = |children: Vec<&CodeTree>, out: &mut Vec<CodeTree>| {
            let mut offset = 0;
            let relabelled = children
                .into_iter()
                .map(|c| {
                    let size = c.leaf_count();
                    let t = shift(c, offset);
                    offset += size;
                    t
                })
                .collect::<Vec<_>>();
            let kind = PrimitiveKind::from_arity(relabelled.len()).unwrap();
            let tree = CodeTree::node(kind, relabelled).unwrap();
            let mut key: Vec<(u32, u32)> =
                codetree::leaf_profiles(&tree).iter().map(|p| (p.k, p.j)).collect();
            key.sort();
            if seen.insert(key) {
                out.push(tree);
            }
        };
        for a in 1..m {
            for x in &memo[a] {
                for y in &memo[m - a] {
                    push(vec![x, y], &mut out);
                }
            }
        }
        for a in 1..m {
            for b in 1..m - a {
                let c = m - a - b;
                for x in &memo[a] {
                    for y in &memo[b] {
                        for z in &memo[c] {
                            push(vec![x, y, z], &mut out);
                        }
                    }
                }
            }
        }
        memo.push(out);
    }
    memo.swap_remove(n)
}

fn shift(tree: &CodeTree, offset: usize) -> CodeTree {
    match tree {
        CodeTree::Leaf(i) => CodeTree::Leaf(i + offset),
        CodeTree::Node { kind, children } => CodeTree::Node {
            kind: *kind,
            children: children.iter().map(|c| shift(c, offset)).collect(),
        },
    }
}

/// Best mean and best minimum advantage over all trees on `n` leaves.
pub fn brute_force(n: usize) -> (ExactValue, ExactValue) {
    let mut best_avg: Option<ExactValue> = None;
    let mut best_min: Option<ExactValue> = None;
    for tree in all_trees(n) {
        let advantages: Vec<ExactValue> =
            codetree::leaf_profiles(&tree).iter().map(|p| p.advantage()).collect();
        let mean = advantages.iter().cloned().sum::<ExactValue>() * ExactValue::ratio(1, n as i64);
        let min = advantages.into_iter().min().unwrap();
        if best_avg.as_ref().is_none_or(|b| mean > *b) {
            best_avg = Some(mean);
        }
        if best_min.as_ref().is_none_or(|b| min > *b) {
            best_min = Some(min);
        }
    }
    (best_avg.unwrap(), best_min.unwrap())
}
