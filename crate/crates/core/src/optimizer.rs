//! Optimal concatenation trees and the performance bounds.
//!
//! Values here are advantages `δ = 2p − 1`. A leaf at path profile `(k, j)`
//! has advantage `2^(-k/2)·3^(-j/2)`, so a primitive at the root multiplies
//! every advantage below it by `1/√2` or `1/√3`. Both objectives below
//! decompose over the root's children, which makes a dynamic program over the
//! number of bits exact:
//!
//! * `f(n)`: best mean advantage over the bits (the figure of merit with
//!   shared randomness),
//! * `g(n)`: best worst-bit advantage (no shared randomness).
//!
//! Children may be single bits. Ties go to fewer primitives, then to the
//! lexicographically smallest sorted composition of `n`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::pow;

use crate::codetree::CodeTree;
use crate::error::{Error, Result};
use crate::exactnum::ExactValue;
use crate::primitives::PrimitiveKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Mean advantage over bits.
    Average,
    /// Minimum advantage over bits.
    Minimum,
}

/// Best tree found for `n` bits under one objective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpEntry {
    pub n: usize,
    /// Advantage, not probability.
    pub value: ExactValue,
    pub tree: CodeTree,
    /// Sizes of the root's children, ascending (empty for a single bit).
    pub composition: Vec<usize>,
    pub internal_nodes: usize,
}

impl DpEntry {
    /// `½(1 + δ)`.
    pub fn probability(&self) -> ExactValue {
        self.value.half_plus_half()
    }
}

/// Table of optimal entries for every size `1..=max_n`.
#[derive(Debug, Clone)]
pub struct DpTable {
    objective: Objective,
    entries: Vec<DpEntry>,
}

impl DpTable {
    pub fn build(objective: Objective, max_n: usize) -> Result<Self> {
        if max_n == 0 {
            return Err(Error::InvalidSize("n must be at least 1".into()));
        }
        let mut entries: Vec<DpEntry> = Vec::with_capacity(max_n);
        entries.push(DpEntry {
            n: 1,
            value: ExactValue::one(),
            tree: CodeTree::Leaf(0),
            composition: Vec::new(),
            internal_nodes: 0,
        });
        let inv2 = PrimitiveKind::E2.advantage();
        let inv3 = PrimitiveKind::E3.advantage();
        for n in 2..=max_n {
            let mut best: Option<(ExactValue, usize, Vec<usize>)> = None;
            for parts in compositions(n) {
                let kind_factor = if parts.len() == 2 { &inv2 } else { &inv3 };
                let children = parts.iter().map(|&m| &entries[m - 1]);
                let combined = match objective {
                    Objective::Average => {
                        let weighted: ExactValue = children
                            .map(|c| &c.value * ExactValue::integer(c.n as i64))
                            .sum();
                        weighted * ExactValue::ratio(1, n as i64)
                    }
                    Objective::Minimum => children
                        .map(|c| c.value.clone())
                        .min()
                        .expect("at least two parts"),
                };
                let value = combined * kind_factor;
                let internal = 1 + parts.iter().map(|&m| entries[m - 1].internal_nodes).sum::<usize>();
                let better = match &best {
                    None => true,
                    Some((bv, bi, bc)) => match value.cmp(bv) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => (internal, &parts) < (*bi, bc),
                    },
                };
                if better {
                    best = Some((value, internal, parts));
                }
            }
            let (value, internal_nodes, composition) = best.expect("n ≥ 2 has compositions");
            let tree = assemble(&composition, &entries);
            entries.push(DpEntry {
                n,
                value,
                tree,
                composition,
                internal_nodes,
            });
        }
        Ok(DpTable { objective, entries })
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn get(&self, n: usize) -> Option<&DpEntry> {
        n.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    pub fn entries(&self) -> &[DpEntry] {
        &self.entries
    }
}

/// Compositions of `n` into two or three parts, each part ≥ 1, as ascending
/// multisets.
fn compositions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a in 1..=n / 2 {
        out.push(vec![a, n - a]);
    }
    for a in 1..=n / 3 {
        for b in a..=(n - a) / 2 {
            let c = n - a - b;
            if c >= b {
                out.push(vec![a, b, c]);
            }
        }
    }
    out
}

fn assemble(composition: &[usize], entries: &[DpEntry]) -> CodeTree {
    let mut offset = 0;
    let children = composition
        .iter()
        .map(|&m| {
            let child = shift_leaves(&entries[m - 1].tree, offset);
            offset += m;
            child
        })
        .collect::<Vec<_>>();
    let kind = PrimitiveKind::from_arity(children.len()).expect("two or three parts");
    CodeTree::Node { kind, children }
}

fn shift_leaves(tree: &CodeTree, offset: usize) -> CodeTree {
    match tree {
        CodeTree::Leaf(i) => CodeTree::Leaf(i + offset),
        CodeTree::Node { kind, children } => CodeTree::Node {
            kind: *kind,
            children: children.iter().map(|c| shift_leaves(c, offset)).collect(),
        },
    }
}

/// `f(n)` with its tree.
pub fn best_avg_tree(n: usize) -> Result<DpEntry> {
    let table = DpTable::build(Objective::Average, n)?;
    Ok(table.get(n).expect("built up to n").clone())
}

/// `g(n)` with its tree.
pub fn best_min_tree(n: usize) -> Result<DpEntry> {
    let table = DpTable::build(Objective::Minimum, n)?;
    Ok(table.get(n).expect("built up to n").clone())
}

pub fn is_3_smooth(mut n: u64) -> bool {
    if n == 0 {
        return false;
    }
    while n.is_multiple_of(2) {
        n /= 2;
    }
    while n.is_multiple_of(3) {
        n /= 3;
    }
    n == 1
}

/// Smallest `m ≥ n` of the form `2^k·3^j`.
pub fn smallest_23_smooth_geq(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidSize("n must be at least 1".into()));
    }
    Ok((n..).find(|&m| is_3_smooth(m)).expect("powers of two are unbounded"))
}

/// Success probability achievable for any `n` by running the smallest
/// 3-smooth code of at least `n` bits with the extra inputs fixed.
pub fn lower_bound(n: u64) -> Result<ExactValue> {
    let m = smallest_23_smooth_geq(n)?;
    Ok(ExactValue::inv_sqrt(m)
        .expect("3-smooth sizes have square-free part in {1,2,3,6}")
        .half_plus_half())
}

/// A bound that is exact when it lies in ℚ[√2, √3] and a 20-digit decimal
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    pub exact: Option<ExactValue>,
    pub decimal: String,
}

impl BoundValue {
    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn to_f64(&self) -> f64 {
        self.decimal.parse().expect("decimal rendering parses")
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(v) => write!(f, "{v} ≈ {}", self.decimal),
            None => write!(f, "{} (inexact)", self.decimal),
        }
    }
}

pub const BOUND_DIGITS: u32 = 20;

/// `½(1 + 1/√n)`: no `(n, 1)` code beats it.
pub fn upper_bound(n: u64) -> Result<BoundValue> {
    if n == 0 {
        return Err(Error::InvalidSize("n must be at least 1".into()));
    }
    if let Some(inv) = ExactValue::inv_sqrt(n) {
        let exact = inv.half_plus_half();
        let decimal = exact.to_decimal_string(BOUND_DIGITS);
        return Ok(BoundValue {
            exact: Some(exact),
            decimal,
        });
    }
    // ½ + ½·10^D/√n computed at scale 10^(D+G)
    const GUARD: u32 = 8;
    let ten = BigInt::from(10u32);
    let scale = pow(ten.clone(), (BOUND_DIGITS + GUARD) as usize);
    let inv_root = (&scale * &scale / BigInt::from(n)).sqrt();
    let scaled = (&scale + inv_root) / 2u32;
    let guard = pow(ten, GUARD as usize);
    let rounded = (scaled + &guard / 2u32) / guard;
    let digits = rounded.to_str_radix(10);
    let width = BOUND_DIGITS as usize + 1;
    let padded = format!("{digits:0>width$}");
    let (int, frac) = padded.split_at(padded.len() - BOUND_DIGITS as usize);
    Ok(BoundValue {
        exact: None,
        decimal: format!("{int}.{frac}"),
    })
}

/// Shannon binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcCheck {
    pub lhs: f64,
    pub holds: bool,
}

/// `K·(1 − h(p)) ≤ 1`: after one classical bit, guessing any of `K` random
/// bits with probability `p` must respect this.
pub fn ic_check(k: u64, p: f64) -> IcCheck {
    let lhs = k as f64 * (1.0 - binary_entropy(p));
    IcCheck {
        lhs,
        holds: lhs <= 1.0 + 1e-12,
    }
}

/// Both sides of `1 − h((1+y)/2) ≥ y²/(2 ln 2)`.
pub fn entropy_gap(y: f64) -> (f64, f64) {
    let exact_side = 1.0 - binary_entropy((1.0 + y) / 2.0);
    let quadratic_side = y * y / (2.0 * std::f64::consts::LN_2);
    (exact_side, quadratic_side)
}

/// Pairs `(n, f(n+1) ≤ f(n))` for `1 ≤ n < max_n`. Observational only.
pub fn average_monotonicity(max_n: usize) -> Result<Vec<(usize, bool)>> {
    let table = DpTable::build(Objective::Average, max_n)?;
    Ok(table
        .entries()
        .windows(2)
        .map(|w| (w[0].n, w[1].value <= w[0].value))
        .collect())
}
