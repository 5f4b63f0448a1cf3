//! Grouping-rule codes with shared randomness next to the published QRAC
//! values, in all three output formats.

use earac::cli::{cmd_table, table_rows, Format, Provenance};

fn main() -> earac::Result<()> {
    print!("{}", cmd_table(15, Format::Table)?);
    println!();
    print!("{}", cmd_table(6, Format::Csv)?);
    let flagged: Vec<usize> = table_rows(15)?
        .iter()
        .filter(|r| r.provenance == Provenance::ErratumFlagged)
        .map(|r| r.n)
        .collect();
    println!("\nrows whose published value differs from the grouping rule: {flagged:?}");
    Ok(())
}
