//! Split a random band operator into diagonal-times-partial-isometry terms.

use roe_kms::space::make_tree;
use roe_kms::{band_decompose, reassemble, sample};

fn main() -> roe_kms::Result<()> {
    let t = make_tree(2, 5)?.into_shared();
    let mut rng = sample::rng(42);
    for radius in [0.0, 1.0, 2.0, 3.0] {
        let a = sample::random_band_operator(&t, radius, 0.7, &mut rng);
        let terms = band_decompose(&a);
        let back = reassemble(t.clone(), &terms)?;
        println!(
            "radius {radius}: {} entries, max row {} , {} terms, exact {}",
            a.nnz(),
            t.max_ball_size(radius),
            terms.len(),
            back == a
        );
    }
    Ok(())
}
