//! Composition, inverses and images of partial translations.

use roe_kms::space::make_interval;
use roe_kms::translation::{image_under, preimage_under, separated_partition, split_fixed};
use roe_kms::{compose, inverse, PartialTranslation, PointSet};

fn main() -> roe_kms::Result<()> {
    let x = make_interval(12)?.into_shared();
    let shift = PartialTranslation::shift(x.clone(), 2);
    let flip = PartialTranslation::from_fn(x.clone(), 0..6, |i| Some(11 - i))?;
    let gf = compose(&shift, &flip)?;
    println!("shift: {} pairs, displacement {}", shift.len(), shift.displacement());
    println!("flip:  {} pairs, displacement {}", flip.len(), flip.displacement());
    println!("shift∘flip: {:?}", gf.pairs().collect::<Vec<_>>());

    let a: PointSet = [0, 1, 2, 3].into();
    let b: PointSet = [5, 6, 7, 8, 9].into();
    let lhs: PointSet = image_under(&flip, &a).intersection(&image_under(&shift, &b)).copied().collect();
    let inner: PointSet = image_under(&compose(&inverse(&shift), &flip)?, &a).intersection(&b).copied().collect();
    println!("f[A] ∩ g[B] = {lhs:?}, recovered through g⁻¹∘f: {:?}", preimage_under(&inverse(&shift), &inner));

    let mixed = PartialTranslation::new(x.clone(), [(0, 0), (1, 3), (2, 2), (3, 1)])?;
    let (fixed, moving) = split_fixed(&mixed);
    println!("fixed part {:?}, moving part {:?}", fixed.domain(), moving.domain());

    let all: PointSet = x.ids().collect();
    let p = separated_partition(&all, 2.0, &x)?;
    println!("2-separated classes of the interval: {:?}", p.classes);
    Ok(())
}
