//! Build Gibbs states and audit them with both KMS verifiers.

use roe_kms::space::{make_interval, make_squares, make_tree};
use roe_kms::{gibbs_state, kms_defect_criterion, kms_defect_direct, partition_function, sample, DiagonalState, PotentialRule};

fn main() -> roe_kms::Result<()> {
    let spaces = [
        (make_tree(2, 6)?.into_shared(), PotentialRule::WordLength),
        (make_interval(50)?.into_shared(), PotentialRule::LogLabel),
        (make_squares(50)?.into_shared(), PotentialRule::LogSqrtLabel),
    ];
    for (s, rule) in &spaces {
        let h = rule.on(s)?;
        let pairs = sample::operator_pairs(s, 200, 1);
        let fs = sample::translations(s, 100, 1);
        for beta in [0.2, 0.7, 1.5] {
            let g = gibbs_state(s, &h, beta)?;
            let direct = kms_defect_direct(&g, &h, beta, &pairs)?;
            let crit = kms_defect_criterion(&g, &h, beta, &fs)?;
            let u = kms_defect_criterion(&DiagonalState::uniform(s.len())?, &h, beta, &fs)?;
            println!(
                "{:?} β={beta}: Z={:.4} gibbs defects {:.1e}/{:.1e}, uniform {:.2e}",
                rule,
                partition_function(s, &h, beta)?,
                direct.max_defect(),
                crit.max_defect(),
                u.max_defect()
            );
        }
    }
    Ok(())
}
