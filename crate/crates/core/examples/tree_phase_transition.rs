//! The n-branching tree: no state below log n, escaped mass at log n, a unique Gibbs limit above.

use roe_kms::tree::{explicit_cylinder_mass, tree_log_z};
use roe_kms::{explicit_tree_state, phase_report};

fn main() -> roe_kms::Result<()> {
    for n in [2usize, 3, 4] {
        let ln_n = (n as f64).ln();
        let betas: Vec<f64> = (0..=20).map(|i| ln_n - 0.5 + i as f64 * 0.05).collect();
        let report = phase_report(n, &betas, &[64, 256, 1024])?;
        println!("n={n}: verdict flips in {:?} (log n = {ln_n:.4})", report.flip_bracket());
        for depth in [4, 8] {
            let s = explicit_tree_state(n, ln_n, depth)?;
            println!("  β=log n, depth {depth}: max weight {}, mass at infinity {}", s.weights().iter().cloned().fold(0.0, f64::max), s.mass_at_infinity());
        }
        let beta = ln_n + 0.5;
        println!("  β=log n+0.5: log Z_64 = {:.6}, exact log Z = {:.6}", tree_log_z(n, beta, 64), -(1.0 - n as f64 * (-beta).exp()).ln());
        for len in 0..3 {
            println!("  mass of a level-{len} cylinder at β=log n+0.01: {:.6} (1/n^{len} = {:.6})", explicit_cylinder_mass(n, ln_n + 0.01, 5000, len)?, (n as f64).powi(-(len as i32)));
        }
    }
    Ok(())
}
