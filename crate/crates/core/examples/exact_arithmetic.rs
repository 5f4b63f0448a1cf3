//! Exact values in ℚ[√2, √3]: parsing, arithmetic, ordering and decimals.

use earac::ExactValue;

fn main() -> earac::Result<()> {
    let a: ExactValue = "1/2 + 1/4*sqrt2".parse()?;
    let b: ExactValue = "1/2 + 1/6*sqrt3".parse()?;
    println!("a = {a} ≈ {}", a.to_decimal_string(12));
    println!("b = {b} ≈ {}", b.to_decimal_string(12));
    println!("a·b = {}", &a * &b);
    println!("a − b = {}", &a - &b);
    println!("a > b: {}", a > b);

    // √2·√3 = √6 and (1/√2)² = 1/2 stay exact
    println!("√2·√3 = {}", ExactValue::sqrt2() * ExactValue::sqrt3());
    let d = ExactValue::delta(1, 0);
    println!("δ(1,0) = {d}, squared {}", &d * &d);

    // cancellation does not fool the decimal expansion
    let tiny = ExactValue::sqrt2() - "1393/985".parse::<ExactValue>()?;
    println!("√2 − 1393/985 ≈ {}", tiny.to_decimal_string(15));
    Ok(())
}
