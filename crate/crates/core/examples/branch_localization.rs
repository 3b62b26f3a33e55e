//! Move a state localized on one branch to other branches by portrait automorphisms.

use roe_kms::kms::condition_state;
use roe_kms::space::make_tree;
use roe_kms::tree::{branch_isometry, cylinder_mass, pushforward_state, Cylinder};
use roe_kms::{gibbs_state, kms_defect_criterion, sample, Diagonal, PotentialRule, Word};

fn main() -> roe_kms::Result<()> {
    let t = make_tree(2, 7)?.into_shared();
    let h = PotentialRule::WordLength.on(&t)?;
    let beta = 1.0;
    let home = Word::repeat(1, 5);
    let cyl = Cylinder::new(home.clone()).points(2, 7);
    let base = condition_state(&gibbs_state(&t, &h, beta)?, &Diagonal::indicator(t.len(), &cyl))?;
    let fs = sample::translations(&t, 100, 3);
    println!("base state on {home}: defect {:.4e}", kms_defect_criterion(&base, &h, beta, &fs)?.max_defect());
    for target in ["12121", "22222", "21112"] {
        let y = Word::parse(target)?;
        let f = branch_isometry(&t, &y, &home)?;
        let moved = pushforward_state(&base, &f)?;
        println!("moved to {y}: mass there {:.3}, mass on {home} {:.3}", cylinder_mass(&moved, 2, &y)?, cylinder_mass(&moved, 2, &home)?);
    }
    Ok(())
}
