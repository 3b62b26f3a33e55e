//! Partial translations: injective maps `A → X` of bounded displacement.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{same_space, FiniteSpace, SpaceRef};

pub type PointSet = BTreeSet<usize>;

/// An injection from a subset of a space into the space.
///
/// Domain points are kept in ascending order; `image[i]` is the image of `domain[i]`.
#[derive(Debug, Clone)]
pub struct PartialTranslation {
    space: SpaceRef,
    domain: Vec<usize>,
    image: Vec<usize>,
    forward: Vec<Option<usize>>,
    backward: Vec<Option<usize>>,
    displacement: f64,
}

impl PartialEq for PartialTranslation {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space)
            && self.domain == other.domain
            && self.image == other.image
    }
}

impl PartialTranslation {
    /// Builds a translation from `(x, f(x))` pairs, rejecting duplicates and collisions.
    pub fn new<I>(space: SpaceRef, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = space.len();
        let mut forward = vec![None; n];
        let mut backward: Vec<Option<usize>> = vec![None; n];
        for (x, y) in pairs {
            space.check_point(x)?;
            space.check_point(y)?;
            if let Some(prev) = forward[x] {
                if prev != y {
                    return Err(Error::InvalidArgument(format!(
                        "point {x} mapped to both {prev} and {y}"
                    )));
                }
                continue;
            }
            if let Some(other) = backward[y] {
                return Err(Error::NotInjective { x: other, y: x, image: y });
            }
            forward[x] = Some(y);
            backward[y] = Some(x);
        }
        Ok(Self::from_tables(space, forward, backward))
    }

    fn from_tables(space: SpaceRef, forward: Vec<Option<usize>>, backward: Vec<Option<usize>>) -> Self {
        let mut domain = Vec::new();
        let mut image = Vec::new();
        let mut displacement = 0.0f64;
        for (x, fx) in forward.iter().enumerate() {
            if let Some(y) = *fx {
                domain.push(x);
                image.push(y);
                displacement = displacement.max(space.dist(x, y));
            }
        }
        Self { space, domain, image, forward, backward, displacement }
    }

    /// `x ↦ f(x)` for every `x` in `domain` where `f` returns `Some`.
    pub fn from_fn<F>(space: SpaceRef, domain: impl IntoIterator<Item = usize>, f: F) -> Result<Self>
    where
        F: Fn(usize) -> Option<usize>,
    {
        let pairs: Vec<(usize, usize)> =
            domain.into_iter().filter_map(|x| f(x).map(|y| (x, y))).collect();
        Self::new(space, pairs)
    }

    pub fn identity(space: SpaceRef, domain: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::from_fn(space, domain, Some)
    }

    pub fn identity_on_all(space: SpaceRef) -> Self {
        let n = space.len();
        Self::identity(space, 0..n).expect("ids in range")
    }

    pub fn empty(space: SpaceRef) -> Self {
        let n = space.len();
        Self::from_tables(space, vec![None; n], vec![None; n])
    }

    /// `x ↦ x + offset` on the ids of a space where that stays in range.
    pub fn shift(space: SpaceRef, offset: i64) -> Self {
        let n = space.len() as i64;
        Self::from_fn(space, 0..n as usize, |x| {
            let y = x as i64 + offset;
            (0..n).contains(&y).then_some(y as usize)
        })
        .expect("a shift is injective")
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn domain(&self) -> &[usize] {
        &self.domain
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn domain_set(&self) -> PointSet {
        self.domain.iter().copied().collect()
    }

    pub fn image_set(&self) -> PointSet {
        self.image.iter().copied().collect()
    }

    pub fn apply(&self, x: usize) -> Option<usize> {
        self.forward.get(x).copied().flatten()
    }

    pub fn preimage(&self, y: usize) -> Option<usize> {
        self.backward.get(y).copied().flatten()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.domain.iter().copied().zip(self.image.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// `max_{x ∈ Dom} d(x, f(x))`, zero for the empty translation.
    pub fn displacement(&self) -> f64 {
        self.displacement
    }

    /// True when `f` is a bijection of the whole space.
    pub fn is_total_bijection(&self) -> bool {
        self.len() == self.space.len()
    }

    /// Restriction of `f` to `A ∩ Dom(f)`.
    pub fn restrict(&self, set: &PointSet) -> Self {
        let n = self.space.len();
        let mut forward = vec![None; n];
        let mut backward = vec![None; n];
        for (x, y) in self.pairs().filter(|(x, _)| set.contains(x)) {
            forward[x] = Some(y);
            backward[y] = Some(x);
        }
        Self::from_tables(self.space.clone(), forward, backward)
    }

    pub fn to_json(&self) -> TranslationJson {
        TranslationJson { domain: self.domain.clone(), image: self.image.clone() }
    }

    pub fn from_json(space: SpaceRef, json: &TranslationJson) -> Result<Self> {
        if json.domain.len() != json.image.len() {
            return Err(Error::Parse(format!(
                "domain has {} ids but image has {}",
                json.domain.len(),
                json.image.len()
            )));
        }
        Self::new(space, json.domain.iter().copied().zip(json.image.iter().copied()))
    }
}

/// Parallel id arrays: `image[i] = f(domain[i])`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationJson {
    pub domain: Vec<usize>,
    pub image: Vec<usize>,
}

/// `g ∘ f` on `f⁻¹[Dom(g)]`.
pub fn compose(g: &PartialTranslation, f: &PartialTranslation) -> Result<PartialTranslation> {
    if !same_space(&g.space, &f.space) {
        return Err(Error::SpaceMismatch);
    }
    let n = f.space.len();
    let mut forward = vec![None; n];
    let mut backward = vec![None; n];
    for (x, fx) in f.pairs() {
        if let Some(gfx) = g.apply(fx) {
            forward[x] = Some(gfx);
            backward[gfx] = Some(x);
        }
    }
    Ok(PartialTranslation::from_tables(f.space.clone(), forward, backward))
}

pub fn inverse(f: &PartialTranslation) -> PartialTranslation {
    PartialTranslation::from_tables(f.space.clone(), f.backward.clone(), f.forward.clone())
}

/// `f[A] = f(A ∩ Dom(f))`.
pub fn image_under(f: &PartialTranslation, set: &PointSet) -> PointSet {
    set.iter().filter_map(|&x| f.apply(x)).collect()
}

/// `f⁻¹(S) = {x ∈ Dom(f) : f(x) ∈ S}`.
pub fn preimage_under(f: &PartialTranslation, set: &PointSet) -> PointSet {
    set.iter().filter_map(|&y| f.preimage(y)).collect()
}

/// Splits `f` into its restriction to fixed points and to the remaining domain.
pub fn split_fixed(f: &PartialTranslation) -> (PartialTranslation, PartialTranslation) {
    let fixed: PointSet = f.pairs().filter(|(x, y)| x == y).map(|(x, _)| x).collect();
    let free: PointSet = f.pairs().filter(|(x, y)| x != y).map(|(x, _)| x).collect();
    (f.restrict(&fixed), f.restrict(&free))
}

/// `a_{∘f}`: `x ↦ a(f(x))` on `Dom(f)`, default elsewhere.
pub fn pullback_diag<T: Copy + Default>(a: &[T], f: &PartialTranslation) -> Result<Vec<T>> {
    if a.len() != f.space.len() {
        return Err(Error::Dimension { expected: f.space.len(), got: a.len() });
    }
    let mut out = vec![T::default(); a.len()];
    for (x, y) in f.pairs() {
        out[x] = a[y];
    }
    Ok(out)
}

/// A partition of a point set into classes whose distinct points are more than `separation` apart.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedPartition {
    pub classes: Vec<Vec<usize>>,
    pub separation: f64,
}

impl SeparatedPartition {
    /// Checks disjointness, coverage of `set`, and strict separation inside each class.
    pub fn is_valid_for(&self, set: &PointSet, space: &FiniteSpace) -> bool {
        let mut seen = PointSet::new();
        for class in &self.classes {
            for &x in class {
                if !seen.insert(x) {
                    return false;
                }
            }
            for (i, &x) in class.iter().enumerate() {
                for &y in &class[..i] {
                    if space.dist(x, y) <= self.separation {
                        return false;
                    }
                }
            }
        }
        &seen == set
    }
}

/// Max degree of the graph on `set` joining distinct points at distance `≤ s`.
pub fn proximity_max_degree(set: &PointSet, s: f64, space: &FiniteSpace) -> usize {
    set.iter()
        .map(|&x| set.iter().filter(|&&y| y != x && space.dist(x, y) <= s).count())
        .max()
        .unwrap_or(0)
}

/// Greedy coloring of the proximity graph, points visited in ascending id order.
pub fn separated_partition(set: &PointSet, s: f64, space: &FiniteSpace) -> Result<SeparatedPartition> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::InvalidArgument(format!("separation must be nonnegative, got {s}")));
    }
    if let Some(&max) = set.iter().next_back() {
        space.check_point(max)?;
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &x in set {
        let slot = classes
            .iter()
            .position(|class| class.iter().all(|&y| space.dist(x, y) > s));
        match slot {
            Some(i) => classes[i].push(x),
            None => classes.push(vec![x]),
        }
    }
    Ok(SeparatedPartition { classes, separation: s })
}
