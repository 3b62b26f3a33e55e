//! Locate the convergence threshold of Z(β) on growing truncations.

use roe_kms::asymptotics::critical_beta;
use roe_kms::{PotentialRule, TruncationSequence};

fn main() -> roe_kms::Result<()> {
    let grid: Vec<f64> = (0..=300).map(|i| i as f64 * 0.01).collect();
    let depths: Vec<usize> = (10..=16).map(|k| 1 << k).collect();
    let families = [
        (TruncationSequence::Tree { n: 2 }, PotentialRule::WordLength, "log 2", 2f64.ln()),
        (TruncationSequence::Tree { n: 3 }, PotentialRule::WordLength, "log 3", 3f64.ln()),
        (TruncationSequence::Interval, PotentialRule::LogLabel, "1", 1.0),
        (TruncationSequence::Squares, PotentialRule::LogSqrtLabel, "1", 1.0),
        (TruncationSequence::Interval, PotentialRule::Label, "0", 0.0),
    ];
    // slowly converging power series leave a wide inconclusive band at these depths
    for (seq, rule, name, exact) in families {
        let est = critical_beta(seq, &rule, &grid, &depths)?;
        println!(
            "{:<10} {:<14} bracket {:?}, estimate {:?} (exact {name} = {exact:.4}), monotone {}",
            est.family, est.potential, est.bracket(), est.estimate, est.monotone
        );
    }
    Ok(())
}
