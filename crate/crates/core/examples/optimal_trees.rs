//! Optimal trees for the mean and the worst bit, compared with the
//! grouping rule.

use earac::codetree;
use earac::optimizer::{DpTable, Objective};

fn main() -> earac::Result<()> {
    let avg = DpTable::build(Objective::Average, 16)?;
    let min = DpTable::build(Objective::Minimum, 16)?;
    println!("{:>3}  {:<30} {:<30} {:<30}", "n", "grouping rule", "best average", "best worst bit");
    for n in 2..=16 {
        let paper = codetree::sr_average(&codetree::build_paper_tree(n)?);
        let a = avg.get(n).expect("built");
        let m = min.get(n).expect("built");
        println!(
            "{n:>3}  {:<30} {:<30} {:<30}",
            paper.to_string(),
            a.probability().to_string(),
            m.probability().to_string()
        );
    }
    let ten = avg.get(10).expect("built");
    println!("\nbest n=10 tree {} with composition {:?}", ten.tree, ten.composition);
    Ok(())
}
