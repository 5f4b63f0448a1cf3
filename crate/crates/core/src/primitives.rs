//! The two primitive codes: two bits into one (`E2`) and three bits into one
//! (`E3`), each consuming one shared pair.

use std::fmt;

use crate::bloch::BlochVector;
use crate::error::{Error, Result};
use crate::exactnum::ExactValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveKind {
    E2,
    E3,
}

impl PrimitiveKind {
    pub fn arity(self) -> usize {
        match self {
            PrimitiveKind::E2 => 2,
            PrimitiveKind::E3 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::E2 => "E2",
            PrimitiveKind::E3 => "E3",
        }
    }

    pub fn from_arity(arity: usize) -> Option<Self> {
        match arity {
            2 => Some(PrimitiveKind::E2),
            3 => Some(PrimitiveKind::E3),
            _ => None,
        }
    }

    /// `1/√arity`, the advantage contributed by one use of the primitive.
    pub fn advantage(self) -> ExactValue {
        match self {
            PrimitiveKind::E2 => ExactValue::delta(1, 0),
            PrimitiveKind::E3 => ExactValue::delta(0, 1),
        }
    }

    fn check_arity(self, got: usize) -> Result<()> {
        if got == self.arity() {
            Ok(())
        } else {
            Err(Error::Arity {
                kind: self.name(),
                expected: self.arity(),
                got,
            })
        }
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unnormalized sign pattern of Alice's "+" vector.
pub fn alice_signs(kind: PrimitiveKind, inputs: &[u8]) -> Result<[i8; 3]> {
    kind.check_arity(inputs.len())?;
    let same = |i: usize, j: usize| (inputs[i] & 1) == (inputs[j] & 1);
    Ok(match kind {
        PrimitiveKind::E2 => {
            if same(0, 1) {
                [1, 1, 0]
            } else {
                [1, -1, 0]
            }
        }
        PrimitiveKind::E3 => match (same(0, 1), same(1, 2)) {
            (true, true) => [1, 1, 1],
            (true, false) => [1, 1, -1],
            (false, true) => [1, -1, -1],
            (false, false) => [1, -1, 1],
        },
    })
}

/// The "+" vector of the basis Alice measures in for the given input bits.
pub fn alice_basis(kind: PrimitiveKind, inputs: &[u8]) -> Result<BlochVector> {
    let [x, y, z] = alice_signs(kind, inputs)?;
    BlochVector::new(f64::from(x), f64::from(y), f64::from(z))
}

/// The "+" vector of the basis Bob uses to recover input `query`.
pub fn bob_basis(kind: PrimitiveKind, query: usize) -> Result<BlochVector> {
    if query >= kind.arity() {
        return Err(Error::QueryOutOfRange {
            kind: kind.name(),
            query,
        });
    }
    Ok([BlochVector::X, BlochVector::Y, BlochVector::Z][query])
}

/// Exact inner product of Alice's and Bob's "+" vectors: `±1/√2` for `E2`,
/// `±1/√3` for `E3`.
pub fn exact_dot(kind: PrimitiveKind, inputs: &[u8], query: usize) -> Result<ExactValue> {
    let signs = alice_signs(kind, inputs)?;
    bob_basis(kind, query)?;
    Ok(kind.advantage() * ExactValue::integer(i64::from(signs[query])))
}

/// The classical bit a primitive emits: its first input XOR Alice's outcome.
pub fn node_output(inputs: &[u8], alice_outcome: u8) -> u8 {
    (inputs.first().copied().unwrap_or(0) ^ alice_outcome) & 1
}

/// Bob's guess: the received message XOR all his outcomes along the path.
pub fn decode_guess(message: u8, outcomes: &[u8]) -> u8 {
    outcomes.iter().fold(message & 1, |acc, b| acc ^ (b & 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_inputs(arity: usize) -> impl Iterator<Item = Vec<u8>> {
        (0..1u32 << arity).map(move |m| (0..arity).map(|i| ((m >> i) & 1) as u8).collect())
    }

    fn assert_vec(v: BlochVector, expected: [f64; 3]) {
        let norm = expected.iter().map(|c| c * c).sum::<f64>().sqrt();
        for (a, b) in v.components().iter().zip(expected) {
            assert!((a - b / norm).abs() < 1e-12, "{v:?} vs {expected:?}");
        }
    }

    #[test]
    fn alice_table() {
        assert_vec(alice_basis(PrimitiveKind::E2, &[0, 1]).unwrap(), [1.0, -1.0, 0.0]);
        assert_vec(alice_basis(PrimitiveKind::E3, &[0, 0, 0]).unwrap(), [1.0, 1.0, 1.0]);
        assert_vec(alice_basis(PrimitiveKind::E3, &[1, 0, 1]).unwrap(), [1.0, -1.0, 1.0]);
        assert_vec(alice_basis(PrimitiveKind::E3, &[1, 1, 0]).unwrap(), [1.0, 1.0, -1.0]);
        assert_vec(alice_basis(PrimitiveKind::E3, &[0, 1, 1]).unwrap(), [1.0, -1.0, -1.0]);
        assert!(matches!(
            alice_basis(PrimitiveKind::E2, &[0, 1, 1]),
            Err(Error::Arity { expected: 2, got: 3, .. })
        ));
    }

    #[test]
    fn bob_table() {
        assert_eq!(bob_basis(PrimitiveKind::E2, 1).unwrap(), BlochVector::Y);
        assert_eq!(bob_basis(PrimitiveKind::E3, 2).unwrap(), BlochVector::Z);
        assert!(matches!(
            bob_basis(PrimitiveKind::E2, 2),
            Err(Error::QueryOutOfRange { query: 2, .. })
        ));
        let b: Vec<_> = (0..3).map(|q| bob_basis(PrimitiveKind::E3, q).unwrap()).collect();
        for i in 0..3 {
            for j in 0..i {
                assert_eq!(b[i].dot(&b[j]), 0.0);
            }
        }
    }

    #[test]
    fn bit_rules() {
        assert_eq!(node_output(&[1, 0], 1), 0);
        assert_eq!(node_output(&[0, 1, 1], 0), 0);
        assert_eq!(node_output(&[1, 1], 0), 1);
        assert_eq!(decode_guess(1, &[0, 1]), 0);
        assert_eq!(decode_guess(0, &[]), 0);
        assert_eq!(decode_guess(1, &[1, 1, 1]), 0);
    }

    #[test]
    fn e2_depends_only_on_parity() {
        for inputs in all_inputs(2) {
            let flipped = [inputs[0] ^ 1, inputs[1] ^ 1];
            assert_eq!(
                alice_basis(PrimitiveKind::E2, &inputs).unwrap(),
                alice_basis(PrimitiveKind::E2, &flipped).unwrap()
            );
        }
        let distinct: std::collections::HashSet<_> = all_inputs(2)
            .map(|i| alice_signs(PrimitiveKind::E2, &i).unwrap())
            .collect();
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn e3_invariant_under_global_flip() {
        for inputs in all_inputs(3) {
            let flipped: Vec<u8> = inputs.iter().map(|b| b ^ 1).collect();
            assert_eq!(
                alice_signs(PrimitiveKind::E3, &inputs).unwrap(),
                alice_signs(PrimitiveKind::E3, &flipped).unwrap()
            );
        }
        let distinct: std::collections::HashSet<_> = all_inputs(3)
            .map(|i| alice_signs(PrimitiveKind::E3, &i).unwrap())
            .collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn overlap_magnitudes() {
        for kind in [PrimitiveKind::E2, PrimitiveKind::E3] {
            let expected = 1.0 / (kind.arity() as f64).sqrt();
            for inputs in all_inputs(kind.arity()) {
                let a = alice_basis(kind, &inputs).unwrap();
                for q in 0..kind.arity() {
                    let d = a.dot(&bob_basis(kind, q).unwrap());
                    assert!((d.abs() - expected).abs() < 1e-12);
                    let exact = exact_dot(kind, &inputs, q).unwrap();
                    assert!((exact.to_f64() - d).abs() < 1e-12);
                }
            }
        }
    }

    /// Every input tuple and query, summed over the four joint outcomes
    /// with weights ¼(1 + (-1)^(A⊕B)·a·b).
    #[test]
    fn exhaustive_single_primitive() {
        let quarter = ExactValue::ratio(1, 4);
        for kind in [PrimitiveKind::E2, PrimitiveKind::E3] {
            let expected = kind.advantage().half_plus_half();
            let mut cases = 0;
            for inputs in all_inputs(kind.arity()) {
                for query in 0..kind.arity() {
                    let d = exact_dot(kind, &inputs, query).unwrap();
                    let mut success = ExactValue::zero();
                    for a in 0..2u8 {
                        for b in 0..2u8 {
                            let correlated = if a == b { d.clone() } else { -&d };
                            let weight = (ExactValue::one() + correlated) * &quarter;
                            let message = node_output(&inputs, a);
                            if decode_guess(message, &[b]) == inputs[query] {
                                success += &weight;
                            }
                        }
                    }
                    assert_eq!(success, expected, "{kind} {inputs:?} query {query}");
                    cases += 1;
                }
            }
            assert_eq!(cases, kind.arity() << kind.arity());
        }
    }
}
