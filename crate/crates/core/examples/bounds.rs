//! Upper and lower bounds, where they meet, and the information-causality
//! inequality at the achieved values.

use earac::optimizer::{self, DpTable, Objective};

fn main() -> earac::Result<()> {
    let avg = DpTable::build(Objective::Average, 30)?;
    let min = DpTable::build(Objective::Minimum, 30)?;
    println!("{:>3} {:>12} {:>12} {:>12} {:>12} {:>8}", "n", "upper", "best avg", "best min", "lower", "ic lhs");
    for n in 1..=30u64 {
        let upper = optimizer::upper_bound(n)?;
        let lower = optimizer::lower_bound(n)?;
        let a = avg.get(n as usize).expect("built").probability();
        let m = min.get(n as usize).expect("built").probability();
        let ic = optimizer::ic_check(n, a.to_f64());
        let tight = if optimizer::is_3_smooth(n) { "  tight" } else { "" };
        println!(
            "{n:>3} {:>12.8} {:>12} {:>12} {:>12} {:>8.5}{tight}",
            upper.to_f64(),
            a.to_decimal_string(8),
            m.to_decimal_string(8),
            lower.to_decimal_string(8),
            ic.lhs
        );
    }
    let (exact, quadratic) = optimizer::entropy_gap(std::f64::consts::FRAC_1_SQRT_2);
    println!("\n1 − h((1+y)/2) = {exact:.6} ≥ y²/(2 ln 2) = {quadratic:.6} at y = 1/√2");
    Ok(())
}
