//! Simulated sessions against the exact predictions, with the retry rule
//! and the input-independence check.

use earac::codetree;
use earac::montecarlo::{self, Targets};

fn main() -> earac::Result<()> {
    let seed = 2024;
    for n in [2, 5, 7] {
        let tree = codetree::build_paper_tree(n)?;
        let report = montecarlo::estimate_with_retry(&tree, 100_000, seed, Targets::All)?;
        println!("n={n} tree {tree}");
        print!("{}", report.first.to_table());
        if report.retry.is_some() {
            println!("(retry decided: {})", report.pass);
        }
    }
    let tree = codetree::build_paper_tree(4)?;
    let chi = montecarlo::input_independence(&tree, 0, 100_000, seed)?;
    println!(
        "success vs input class: chi² {:.2} on {} dof, p-value {:.3}",
        chi.statistic, chi.dof, chi.p_value
    );
    let fixed = montecarlo::estimate_fixed(&tree, &[1, 1, 0, 1], 20_000, seed, Targets::One(3))?;
    println!("fixed input 1101, bit 3: {}", fixed.to_json());
    Ok(())
}
