//! The (2,1) and (3,1) codes: bases, overlaps and exact success
//! probabilities for every input and query.

use earac::codetree::{exhaustive_success_probability, CodeTree};
use earac::primitives::{self, PrimitiveKind};

fn main() -> earac::Result<()> {
    for kind in [PrimitiveKind::E2, PrimitiveKind::E3] {
        let n = kind.arity();
        println!("{kind}: advantage {}", kind.advantage());
        for q in 0..n {
            println!("  Bob basis for bit {q}: {:?}", primitives::bob_basis(kind, q)?.components());
        }
        let tree = CodeTree::node(kind, (0..n).map(CodeTree::Leaf).collect())?;
        for x in 0..1u32 << n {
            let bits: Vec<u8> = (0..n).map(|i| ((x >> i) & 1) as u8).collect();
            let alice = primitives::alice_basis(kind, &bits)?;
            let probs = (0..n)
                .map(|q| exhaustive_success_probability(&tree, &bits, q).map(|p| p.to_string()))
                .collect::<earac::Result<Vec<_>>>()?;
            println!(
                "  bits {bits:?} Alice {:?}: {}",
                alice.components().map(|c| (c * 1e4).round() / 1e4),
                probs.join(", ")
            );
        }
    }
    Ok(())
}
