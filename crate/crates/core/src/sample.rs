//! Seeded generators for test populations: band operators, partial translations,
//! operator pairs and weight vectors. All draws go through `ChaCha8Rng`, so a seed
//! fixes the population on every platform.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kms::DiagonalState;
use crate::operator::{isometry_of, BandOperator};
use crate::space::SpaceRef;
use crate::translation::{PartialTranslation, PointSet};

pub type SampleRng = ChaCha8Rng;

/// Radii drawn by the generators when none is given.
pub const RADIUS_LADDER: [f64; 6] = [0.0, 1.0, 2.0, 3.0, 5.0, 8.0];

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on the closed unit disk.
pub fn unit_complex<R: Rng>(rng: &mut R) -> Complex64 {
    let r: f64 = rng.random::<f64>().sqrt();
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, theta)
}

pub fn ladder_radius<R: Rng>(rng: &mut R) -> f64 {
    RADIUS_LADDER[rng.random_range(0..RADIUS_LADDER.len())]
}

/// Each entry `(x, y)` with `d(x, y) ≤ radius` is kept with probability `density`.
pub fn random_band_operator<R: Rng>(space: &SpaceRef, radius: f64, density: f64, rng: &mut R) -> BandOperator {
    let mut entries = Vec::new();
    for x in space.ids() {
        for y in space.ball(x, radius) {
            if rng.random_bool(density.clamp(0.0, 1.0)) {
                entries.push((x, y, unit_complex(rng)));
            }
        }
    }
    BandOperator::from_entries(space.clone(), entries).expect("entries lie in the space")
}

/// Random partial bijection with displacement at most `radius`.
pub fn random_translation<R: Rng>(space: &SpaceRef, radius: f64, keep: f64, rng: &mut R) -> PartialTranslation {
    let mut order: Vec<usize> = space.ids().collect();
    order.shuffle(rng);
    let mut used = vec![false; space.len()];
    let mut pairs = Vec::new();
    for x in order {
        if !rng.random_bool(keep.clamp(0.0, 1.0)) {
            continue;
        }
        let free: Vec<usize> = space.ball(x, radius).into_iter().filter(|&y| !used[y]).collect();
        if let Some(&y) = free.get(rng.random_range(0..free.len().max(1))) {
            used[y] = true;
            pairs.push((x, y));
        }
    }
    PartialTranslation::new(space.clone(), pairs).expect("injective by construction")
}

pub fn random_point_set<R: Rng>(space: &SpaceRef, p: f64, rng: &mut R) -> PointSet {
    space.ids().filter(|_| rng.random_bool(p.clamp(0.0, 1.0))).collect()
}

/// Normalized weights with independent uniform `(0, 1]` masses.
pub fn random_weights<R: Rng>(n: usize, rng: &mut R) -> DiagonalState {
    let w = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
    DiagonalState::from_unnormalized(w).expect("positive weights")
}

/// Mixed population: matrix-unit pairs, isometry pairs and random band pairs.
pub fn operator_pairs(space: &SpaceRef, count: usize, seed: u64) -> Vec<(BandOperator, BandOperator)> {
    let mut rng = rng(seed);
    let n = space.len();
    (0..count)
        .map(|i| match i % 3 {
            0 => {
                let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
                let (u, v) = if rng.random_bool(0.5) { (y, x) } else { (rng.random_range(0..n), rng.random_range(0..n)) };
                (
                    BandOperator::matrix_unit(space.clone(), x, y).expect("in range"),
                    BandOperator::matrix_unit(space.clone(), u, v).expect("in range"),
                )
            }
            1 => {
                let f = isometry_of(&random_translation(space, ladder_radius(&mut rng), 0.7, &mut rng));
                let g = if rng.random_bool(0.5) {
                    f.adjoint()
                } else {
                    isometry_of(&random_translation(space, ladder_radius(&mut rng), 0.7, &mut rng))
                };
                (f, g)
            }
            _ => {
                let r = ladder_radius(&mut rng).min(3.0);
                let a = random_band_operator(space, r, 0.3, &mut rng);
                let b = random_band_operator(space, r, 0.3, &mut rng);
                (a, b)
            }
        })
        .collect()
}

/// Partial translations with ladder radii, every fifth one a single point swap.
pub fn translations(space: &SpaceRef, count: usize, seed: u64) -> Vec<PartialTranslation> {
    let mut rng = rng(seed);
    let n = space.len();
    (0..count)
        .map(|i| {
            if i % 5 == 4 {
                let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
                PartialTranslation::new(space.clone(), [(x, y)]).expect("single pair")
            } else {
                let r = ladder_radius(&mut rng);
                let keep = rng.random_range(0.2..1.0);
                random_translation(space, r, keep, &mut rng)
            }
        })
        .collect()
}
