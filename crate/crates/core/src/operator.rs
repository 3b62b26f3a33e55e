//! Band operators on `ℓ₂(X)` for a finite space `X`.
//!
//! An operator is stored row by row as sparse maps `col → a_{row,col}`, where
//! `a_{x,y} = ⟨a δ_y, δ_x⟩`. Exact zeros are never stored. The propagation
//! `max{d(x,y) : a_{x,y} ≠ 0}` is recomputed whenever an operator is built.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{same_space, SpaceRef};
use crate::translation::{PartialTranslation, PointSet};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// An element of `ℓ∞(X)`, viewed as a diagonal matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagonal {
    pub values: Vec<Complex64>,
}

impl Diagonal {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![ZERO; n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![Complex64::new(c, 0.0); n] }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self { values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    /// `χ_A`.
    pub fn indicator(n: usize, set: &PointSet) -> Self {
        let mut values = vec![ZERO; n];
        for &x in set {
            values[x] = ONE;
        }
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, x: usize) -> Complex64 {
        self.values[x]
    }

    /// Real parts, for diagonals known to be real.
    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }

    pub fn support(&self) -> PointSet {
        self.values.iter().enumerate().filter(|(_, c)| **c != ZERO).map(|(x, _)| x).collect()
    }

    pub fn max_abs_diff(&self, other: &Diagonal) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct BandOperator {
    space: SpaceRef,
    rows: Vec<BTreeMap<usize, Complex64>>,
    propagation: f64,
}

impl PartialEq for BandOperator {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.rows == other.rows
    }
}

impl BandOperator {
    fn from_rows(space: SpaceRef, mut rows: Vec<BTreeMap<usize, Complex64>>) -> Self {
        let mut propagation = 0.0f64;
        for (x, row) in rows.iter_mut().enumerate() {
            row.retain(|_, c| *c != ZERO);
            for &y in row.keys() {
                propagation = propagation.max(space.dist(x, y));
            }
        }
        Self { space, rows, propagation }
    }

    pub fn zero(space: SpaceRef) -> Self {
        let n = space.len();
        Self { space, rows: vec![BTreeMap::new(); n], propagation: 0.0 }
    }

    pub fn identity(space: SpaceRef) -> Self {
        let n = space.len();
        Self::diagonal(space, &Diagonal::constant(n, 1.0)).expect("dimensions agree")
    }

    /// Builds an operator from `(row, col, value)` triplets; repeated positions are summed.
    pub fn from_entries<I>(space: SpaceRef, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut rows = vec![BTreeMap::new(); space.len()];
        for (x, y, c) in entries {
            space.check_point(x)?;
            space.check_point(y)?;
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite entry at ({x}, {y})")));
            }
            *rows[x].entry(y).or_insert(ZERO) += c;
        }
        Ok(Self::from_rows(space, rows))
    }

    /// Matrix unit `e_{x,y}` (sends `δ_y` to `δ_x`).
    pub fn matrix_unit(space: SpaceRef, x: usize, y: usize) -> Result<Self> {
        Self::from_entries(space, [(x, y, ONE)])
    }

    pub fn diagonal(space: SpaceRef, d: &Diagonal) -> Result<Self> {
        if d.len() != space.len() {
            return Err(Error::Dimension { expected: space.len(), got: d.len() });
        }
        Self::from_entries(space, d.values.iter().enumerate().map(|(x, &c)| (x, x, c)))
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn propagation(&self) -> f64 {
        self.propagation
    }

    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.rows.get(x).and_then(|r| r.get(&y)).copied().unwrap_or(ZERO)
    }

    pub fn row(&self, x: usize) -> &BTreeMap<usize, Complex64> {
        &self.rows[x]
    }

    /// Stored entries in `(row, col)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(x, r)| r.iter().map(move |(&y, &c)| (x, y, c)))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(BTreeMap::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BTreeMap::is_empty)
    }

    fn check_same(&self, other: &BandOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: other.dim() });
        }
        if !same_space(&self.space, &other.space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// Sparse product `self · other`.
    pub fn multiply(&self, other: &BandOperator) -> Result<BandOperator> {
        self.check_same(other)?;
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = BTreeMap::new();
                for (&y, &a) in row {
                    for (&z, &b) in &other.rows[y] {
                        *acc.entry(z).or_insert(ZERO) += a * b;
                    }
                }
                acc
            })
            .collect();
        Ok(Self::from_rows(self.space.clone(), rows))
    }

    /// Diagonal of `self · other`, without forming the product.
    pub fn product_diagonal(&self, other: &BandOperator) -> Result<Vec<Complex64>> {
        self.check_same(other)?;
        Ok(self
            .rows
            .iter()
            .enumerate()
            .map(|(x, row)| {
                row.iter().map(|(&y, &a)| a * other.get(y, x)).fold(ZERO, |s, t| s + t)
            })
            .collect())
    }

    pub fn add(&self, other: &BandOperator) -> Result<BandOperator> {
        self.check_same(other)?;
        let mut rows = self.rows.clone();
        for (x, row) in other.rows.iter().enumerate() {
            for (&y, &c) in row {
                *rows[x].entry(y).or_insert(ZERO) += c;
            }
        }
        Ok(Self::from_rows(self.space.clone(), rows))
    }

    pub fn sub(&self, other: &BandOperator) -> Result<BandOperator> {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: Complex64) -> BandOperator {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|(&y, &c)| (y, c * s)).collect())
            .collect();
        Self::from_rows(self.space.clone(), rows)
    }

    pub fn adjoint(&self) -> BandOperator {
        let mut rows = vec![BTreeMap::new(); self.dim()];
        for (x, y, c) in self.entries() {
            rows[y].insert(x, c.conj());
        }
        Self { space: self.space.clone(), rows, propagation: self.propagation }
    }

    /// Applies `f(x, y, a_{x,y})` to every stored entry.
    pub fn map_entries<F>(&self, f: F) -> BandOperator
    where
        F: Fn(usize, usize, Complex64) -> Complex64,
    {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(x, r)| r.iter().map(|(&y, &c)| (y, f(x, y, c))).collect())
            .collect();
        Self::from_rows(self.space.clone(), rows)
    }

    /// `d · a` (rows scaled).
    pub fn left_diag(&self, d: &Diagonal) -> Result<BandOperator> {
        if d.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: d.len() });
        }
        Ok(self.map_entries(|x, _, c| d.values[x] * c))
    }

    /// `a · d` (columns scaled).
    pub fn right_diag(&self, d: &Diagonal) -> Result<BandOperator> {
        if d.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: d.len() });
        }
        Ok(self.map_entries(|_, y, c| c * d.values[y]))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|x| self.get(x, x)).fold(ZERO, |s, t| s + t)
    }

    /// Largest entrywise difference `max |a_{x,y} − b_{x,y}|`.
    pub fn max_abs_diff(&self, other: &BandOperator) -> Result<f64> {
        Ok(self.sub(other)?.max_abs_entry())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries().map(|(_, _, c)| c.norm()).fold(0.0, f64::max)
    }

    /// Schur bound `sqrt(max row ℓ¹ · max column ℓ¹)` on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        let mut col = vec![0.0; self.dim()];
        let mut row_max = 0.0f64;
        for r in &self.rows {
            let s: f64 = r.values().map(|c| c.norm()).sum();
            row_max = row_max.max(s);
            for (&y, c) in r {
                col[y] += c.norm();
            }
        }
        let col_max = col.into_iter().fold(0.0, f64::max);
        (row_max * col_max).sqrt()
    }

    pub fn to_triplets(&self) -> TripletJson {
        let mut t = TripletJson::default();
        for (x, y, c) in self.entries() {
            t.rows.push(x);
            t.cols.push(y);
            t.re.push(c.re);
            t.im.push(c.im);
        }
        t
    }

    pub fn from_triplets(space: SpaceRef, t: &TripletJson) -> Result<Self> {
        let n = t.rows.len();
        if t.cols.len() != n || t.re.len() != n || t.im.len() != n {
            return Err(Error::Parse("triplet arrays must have equal lengths".into()));
        }
        Self::from_entries(
            space,
            (0..n).map(|i| (t.rows[i], t.cols[i], Complex64::new(t.re[i], t.im[i]))),
        )
    }

    /// Matrix Market coordinate format (complex general, 1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::from("%%MatrixMarket matrix coordinate complex general\n");
        let _ = writeln!(out, "{} {} {}", self.dim(), self.dim(), self.nnz());
        for (x, y, c) in self.entries() {
            let _ = writeln!(out, "{} {} {:.17e} {:.17e}", x + 1, y + 1, c.re, c.im);
        }
        out
    }
}

/// Sparse triplet form `{rows, cols, re, im}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TripletJson {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

pub fn propagation(a: &BandOperator) -> f64 {
    a.propagation()
}

/// The conditional expectation `E`: keeps the main diagonal.
pub fn expectation(a: &BandOperator) -> Diagonal {
    Diagonal { values: (0..a.dim()).map(|x| a.get(x, x)).collect() }
}

/// `v_f`: the partial isometry with `v_f δ_x = δ_{f(x)}` on `Dom(f)`.
pub fn isometry_of(f: &PartialTranslation) -> BandOperator {
    BandOperator::from_entries(f.space().clone(), f.pairs().map(|(x, y)| (y, x, ONE)))
        .expect("translation ids are in range")
}

/// Writes `a = Σ dᵢ v_{fᵢ}`.
///
/// Each stored entry `(r, c)` is an edge from column `c` to row `r` of a
/// bipartite graph; a proper edge coloring gives partial bijections
/// `fᵢ(c) = r`. Entries are scanned in `(row, col)` order and take the lowest
/// color free at both ends; when none is free, an alternating two-color path
/// is flipped first, so at most `Δ` colors are used, `Δ` being the largest
/// row or column support size.
pub fn band_decompose(a: &BandOperator) -> Vec<(Diagonal, PartialTranslation)> {
    let n = a.dim();
    let delta = (0..n)
        .map(|x| a.row(x).len())
        .chain({
            let mut col = vec![0usize; n];
            for (_, y, _) in a.entries() {
                col[y] += 1;
            }
            col
        })
        .max()
        .unwrap_or(0);
    // row_of[k][c] = row matched to column c in color k; col_of[k][r] likewise.
    let mut row_of = vec![vec![None::<usize>; n]; delta];
    let mut col_of = vec![vec![None::<usize>; n]; delta];
    for (r, c, _) in a.entries() {
        let common = (0..delta).find(|&k| col_of[k][r].is_none() && row_of[k][c].is_none());
        let k = match common {
            Some(k) => k,
            None => {
                let alpha = (0..delta).find(|&k| col_of[k][r].is_none()).expect("row has a free color");
                let beta = (0..delta).find(|&k| row_of[k][c].is_none()).expect("column has a free color");
                flip_alternating_path(&mut row_of, &mut col_of, c, alpha, beta);
                alpha
            }
        };
        row_of[k][c] = Some(r);
        col_of[k][r] = Some(c);
    }
    let mut terms = Vec::new();
    for k in 0..delta {
        let pairs: Vec<(usize, usize)> =
            (0..n).filter_map(|c| row_of[k][c].map(|r| (c, r))).collect();
        if pairs.is_empty() {
            continue;
        }
        let mut d = Diagonal::zeros(n);
        for &(c, r) in &pairs {
            d.values[r] = a.get(r, c);
        }
        let f = PartialTranslation::new(a.space().clone(), pairs).expect("color classes are matchings");
        terms.push((d, f));
    }
    terms
}

/// Swaps colors `alpha`/`beta` along the path leaving column `start` by its `alpha` edge.
fn flip_alternating_path(
    row_of: &mut [Vec<Option<usize>>],
    col_of: &mut [Vec<Option<usize>>],
    start: usize,
    alpha: usize,
    beta: usize,
) {
    // path alternates: column -alpha- row -beta- column -alpha- …
    let mut path = Vec::new();
    let mut col = start;
    while let Some(row) = row_of[alpha][col] {
        path.push((row, col, alpha));
        let Some(next) = col_of[beta][row] else { break };
        path.push((row, next, beta));
        col = next;
    }
    for &(r, c, k) in &path {
        row_of[k][c] = None;
        col_of[k][r] = None;
    }
    for &(r, c, k) in &path {
        let swapped = if k == alpha { beta } else { alpha };
        row_of[swapped][c] = Some(r);
        col_of[swapped][r] = Some(c);
    }
}

/// `Σ dᵢ v_{fᵢ}`.
pub fn reassemble(space: SpaceRef, terms: &[(Diagonal, PartialTranslation)]) -> Result<BandOperator> {
    let mut entries = Vec::new();
    for (d, f) in terms {
        if d.len() != space.len() {
            return Err(Error::Dimension { expected: space.len(), got: d.len() });
        }
        for (x, y) in f.pairs() {
            entries.push((y, x, d.values[y]));
        }
    }
    BandOperator::from_entries(space, entries)
}
