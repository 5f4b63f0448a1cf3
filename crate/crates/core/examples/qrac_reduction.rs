//! A one-qubit code measured directly versus the same code prepared by
//! steering half of a shared pair plus one classical bit.

use earac::montecarlo;

fn main() -> earac::Result<()> {
    for n in [2, 3] {
        let report = montecarlo::qrac_reduction_experiment(n, 100_000, 11)?;
        println!("n={n}");
        for (direct, steered) in report.direct.bits.iter().zip(&report.steered.bits) {
            println!(
                "  bit {}: exact {:.6}, direct {:.6} (z {:+.2}), steered {:.6} (z {:+.2})",
                direct.target, direct.p_exact, direct.p_hat, direct.z, steered.p_hat, steered.z
            );
        }
    }
    Ok(())
}
