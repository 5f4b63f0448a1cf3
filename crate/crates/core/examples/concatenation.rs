//! Building codes by concatenation: the four-bit example traced step by
//! step, path profiles, the composition law, and tree files.

use earac::bloch::SingletPairs;
use earac::codetree::{self, CodeTree, Role};
use earac::primitives::PrimitiveKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> earac::Result<()> {
    let tree = codetree::build_paper_tree(4)?;
    println!("tree {tree}, {} pairs", tree.ebit_count());
    let compiled = tree.compile()?;

    let bits = [1, 0, 1, 1];
    let target = 2;
    let mut pairs = SingletPairs::new(tree.ebit_count() as u32, ChaCha8Rng::seed_from_u64(4));
    let (message, alice) = compiled.encode(&bits, &mut pairs)?;
    let (guess, bob) = compiled.decode(message, target, &mut pairs)?;
    for e in alice.entries.iter().chain(&bob.entries) {
        let who = if e.role == Role::Alice { "Alice" } else { "Bob  " };
        println!("{who} node {} basis {:?} outcome {} -> {}", e.node, e.basis.components(), e.outcome, e.output);
    }
    println!("message {message}; Bob measured nodes {:?}; guess {guess} for bit {}", bob.nodes(Role::Bob), bits[target]);

    // closed form per bit
    for (i, p) in codetree::leaf_profiles(&tree).iter().enumerate() {
        println!("bit {i}: k={} j={} p={}", p.k, p.j, codetree::exact_bit_probability(*p));
    }

    // two uses of the same primitive act like one with squared advantage
    let even = codetree::error_parity_probability(PrimitiveKind::E2, 2, codetree::Parity::Even);
    println!("E2 twice, even number of errors: {even}");

    // tree files round trip
    let dir = std::env::temp_dir().join("earac-concatenation-example.txt");
    tree.save(&dir)?;
    let loaded = CodeTree::load(&dir)?;
    println!("saved and reloaded: {}", loaded == tree);
    print!("{}", tree.to_file_string());
    let custom: CodeTree = "E3(E2(L0, L1), L2, E2(L3, L4))".parse()?;
    println!("custom {custom}: min {} average {}", codetree::min_probability(&custom), codetree::sr_average(&custom));
    Ok(())
}
