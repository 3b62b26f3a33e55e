//! Finite truncations of uniformly locally finite metric spaces.
//!
//! Three families are built in: integer segments, the squares `{1², 2², …}`
//! and the `n`-branching tree cut at a given depth. Their metrics are integer
//! valued and computed from point ids. Custom spaces carry a validated dense
//! distance matrix.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::Word;

pub type SpaceRef = Arc<FiniteSpace>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpaceKind {
    Interval { n: usize },
    Squares { n: usize },
    Tree { n: usize, depth: usize },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
enum Metric {
    Interval,
    Squares,
    Tree { n: usize, words: Vec<Word> },
    /// Strictly lower-triangular rows: entry `(i, j)` with `j < i` at `i(i-1)/2 + j`.
    Dense(Vec<f64>),
}

/// A finite metric space with points `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    kind: SpaceKind,
    points: Vec<Point>,
    metric: Metric,
}

fn tri_index(i: usize, j: usize) -> usize {
    debug_assert!(j < i);
    i * (i - 1) / 2 + j
}

/// Segment `{0, …, n-1}` of the integers.
pub fn make_interval(n: usize) -> Result<FiniteSpace> {
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    let points = (0..n).map(|i| Point { id: i, label: Some(i.to_string()) }).collect();
    Ok(FiniteSpace { kind: SpaceKind::Interval { n }, points, metric: Metric::Interval })
}

/// The squares `1², …, n²` with the metric of the integers. Labels keep the ambient values.
pub fn make_squares(n: usize) -> Result<FiniteSpace> {
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    let points = (0..n)
        .map(|i| Point { id: i, label: Some(square_label(i).to_string()) })
        .collect();
    Ok(FiniteSpace { kind: SpaceKind::Squares { n }, points, metric: Metric::Squares })
}

fn square_label(id: usize) -> u64 {
    let k = id as u64 + 1;
    k * k
}

/// All words of length at most `depth` over `{1, …, n}`, ids in breadth-first order.
pub fn make_tree(n: usize, depth: usize) -> Result<FiniteSpace> {
    if n == 0 {
        return Err(Error::InvalidArgument("tree branching must be at least 1".into()));
    }
    let size = tree_size(n, depth)
        .ok_or_else(|| Error::InvalidArgument(format!("tree({n}, {depth}) is too large")))?;
    if size > 50_000_000 {
        return Err(Error::InvalidArgument(format!("tree({n}, {depth}) has {size} points")));
    }
    let mut words = Vec::with_capacity(size);
    words.push(Word::empty());
    let mut start = 0;
    for _ in 0..depth {
        let end = words.len();
        for i in start..end {
            for letter in 1..=n {
                let w = words[i].append_letter(letter as u8);
                words.push(w);
            }
        }
        start = end;
    }
    let points = words
        .iter()
        .enumerate()
        .map(|(id, w)| Point { id, label: Some(w.to_string()) })
        .collect();
    Ok(FiniteSpace { kind: SpaceKind::Tree { n, depth }, points, metric: Metric::Tree { n, words } })
}

/// True when both handles denote the same space (pointer or structural equality).
pub fn same_space(a: &SpaceRef, b: &SpaceRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Number of words of length ≤ `depth` over `n` letters.
pub fn tree_size(n: usize, depth: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut level: usize = 1;
    for _ in 0..=depth {
        total = total.checked_add(level)?;
        level = level.checked_mul(n)?;
    }
    Some(total)
}

/// Breadth-first id of a word in a tree over `n` letters.
pub fn tree_id(n: usize, word: &Word) -> usize {
    let k = word.len();
    let offset = tree_size(n, k.saturating_sub(1)).unwrap_or(0) * usize::from(k > 0);
    let mut rank = 0usize;
    for &l in word.letters() {
        rank = rank * n + (l as usize - 1);
    }
    offset + rank
}

/// Builds a custom space from a square distance matrix, rejecting any metric violation.
pub fn from_distance_matrix(d: &[Vec<f64>]) -> Result<FiniteSpace> {
    let n = d.len();
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    for (row, r) in d.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare { rows: n, row, len: r.len() });
        }
    }
    for x in 0..n {
        for y in 0..n {
            let v = d[x][y];
            if !v.is_finite() || v < 0.0 || (x == y && v != 0.0) {
                return Err(Error::InvalidDistance { x, y, d: v });
            }
        }
    }
    for x in 0..n {
        for y in (x + 1)..n {
            if d[x][y] != d[y][x] {
                return Err(Error::Asymmetric { x, y, dxy: d[x][y], dyx: d[y][x] });
            }
            if d[x][y] == 0.0 {
                return Err(Error::ZeroDistance { x, y, d: 0.0 });
            }
        }
    }
    for x in 0..n {
        for z in 0..n {
            for y in 0..n {
                let via = d[x][y] + d[y][z];
                if d[x][z] > via {
                    return Err(Error::Triangle { x, z, y, dxz: d[x][z], via });
                }
            }
        }
    }
    let mut tri = Vec::with_capacity(n * (n - 1) / 2);
    for (i, row) in d.iter().enumerate() {
        tri.extend_from_slice(&row[..i]);
    }
    let points = (0..n).map(|id| Point { id, label: None }).collect();
    Ok(FiniteSpace { kind: SpaceKind::Custom, points, metric: Metric::Dense(tri) })
}

impl FiniteSpace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn ids(&self) -> std::ops::Range<usize> {
        0..self.len()
    }

    pub fn into_shared(self) -> SpaceRef {
        Arc::new(self)
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.points.get(id).and_then(|p| p.label.as_deref())
    }

    /// The ambient numeric value of a point: the integer for segments, `k²` for squares.
    pub fn numeric_label(&self, id: usize) -> Option<f64> {
        match self.metric {
            Metric::Interval => Some(id as f64),
            Metric::Squares => Some(square_label(id) as f64),
            _ => None,
        }
    }

    /// Tree word of a point, when the space is a tree.
    pub fn word(&self, id: usize) -> Option<&Word> {
        match &self.metric {
            Metric::Tree { words, .. } => words.get(id),
            _ => None,
        }
    }

    /// Id of a tree word, if the word lies in this truncation.
    pub fn id_of_word(&self, word: &Word) -> Option<usize> {
        match &self.metric {
            Metric::Tree { n, words } => {
                if word.letters().iter().any(|&l| l == 0 || l as usize > *n) {
                    return None;
                }
                let id = tree_id(*n, word);
                (id < words.len()).then_some(id)
            }
            _ => None,
        }
    }

    pub fn branching(&self) -> Option<usize> {
        match self.metric {
            Metric::Tree { n, .. } => Some(n),
            _ => None,
        }
    }

    pub fn check_point(&self, id: usize) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::PointOutOfRange { id, size: self.len() })
        }
    }

    /// Exact integer distance for the built-in families.
    pub fn int_dist(&self, x: usize, y: usize) -> Option<u64> {
        match &self.metric {
            Metric::Interval => Some((x as i64 - y as i64).unsigned_abs()),
            Metric::Squares => Some(square_label(x).abs_diff(square_label(y))),
            Metric::Tree { words, .. } => Some(words[x].distance(&words[y]) as u64),
            Metric::Dense(_) => None,
        }
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        match &self.metric {
            Metric::Dense(tri) => match x.cmp(&y) {
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => tri[tri_index(x, y)],
                std::cmp::Ordering::Less => tri[tri_index(y, x)],
            },
            _ => self.int_dist(x, y).expect("integer metric") as f64,
        }
    }

    /// Closed ball `{y : d(x, y) ≤ r}` in ascending id order.
    pub fn ball(&self, x: usize, r: f64) -> Vec<usize> {
        self.ids().filter(|&y| self.dist(x, y) <= r).collect()
    }

    pub fn max_ball_size(&self, r: f64) -> usize {
        self.ids().map(|x| self.ids().filter(|&y| self.dist(x, y) <= r).count()).max().unwrap_or(0)
    }

    /// Largest distance between two points.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for x in self.ids() {
            for y in 0..x {
                best = best.max(self.dist(x, y));
            }
        }
        best
    }

    /// Serializes the space; built-in families store a formula tag instead of distances.
    pub fn to_json(&self) -> SpaceJson {
        let dist = match &self.metric {
            Metric::Dense(tri) => DistJson::Dense(tri.clone()),
            _ => DistJson::Formula("formula".into()),
        };
        SpaceJson { space: self.kind, points: self.points.clone(), dist }
    }

    pub fn from_json(json: &SpaceJson) -> Result<Self> {
        let space = match (&json.space, &json.dist) {
            (SpaceKind::Interval { n }, _) => make_interval(*n)?,
            (SpaceKind::Squares { n }, _) => make_squares(*n)?,
            (SpaceKind::Tree { n, depth }, _) => make_tree(*n, *depth)?,
            (SpaceKind::Custom, DistJson::Dense(tri)) => {
                let n = json.points.len();
                if tri.len() != n * n.saturating_sub(1) / 2 {
                    return Err(Error::Parse(format!(
                        "expected {} lower-triangular distances, got {}",
                        n * n.saturating_sub(1) / 2,
                        tri.len()
                    )));
                }
                let mut d = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in 0..i {
                        d[i][j] = tri[tri_index(i, j)];
                        d[j][i] = d[i][j];
                    }
                }
                let mut s = from_distance_matrix(&d)?;
                s.points = json.points.clone();
                s
            }
            (SpaceKind::Custom, DistJson::Formula(_)) => {
                return Err(Error::Parse("custom spaces need explicit distances".into()))
            }
        };
        if space.len() != json.points.len()
            || space.points.iter().zip(&json.points).any(|(a, b)| a.id != b.id)
        {
            return Err(Error::Parse("point list does not match the space parameters".into()));
        }
        Ok(space)
    }
}

/// JSON form: `{kind, params…, points:[{id,label}], dist}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceJson {
    #[serde(flatten)]
    pub space: SpaceKind,
    pub points: Vec<Point>,
    pub dist: DistJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistJson {
    Formula(String),
    Dense(Vec<f64>),
}

/// For each radius, the largest closed-ball cardinality over all centers.
pub fn growth_profile(space: &FiniteSpace, radii: &[f64]) -> Result<Vec<(f64, usize)>> {
    radii
        .iter()
        .map(|&r| {
            if r < 0.0 || r.is_nan() {
                Err(Error::InvalidArgument(format!("negative radius {r}")))
            } else {
                Ok((r, space.max_ball_size(r)))
            }
        })
        .collect()
}

/// A built-in family of nested truncations `X_0 ⊂ X_1 ⊂ …`.
///
/// Depth `D` holds every point of level at most `D`: integers `0..=D` for the
/// segment family, `1², …, D²` for squares, words of length `≤ D` for trees.
/// Point ids agree across depths, so the embedding `X_D → X_D'` is the identity on ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TruncationSequence {
    Interval,
    Squares,
    Tree { n: usize },
}

impl TruncationSequence {
    pub fn at(&self, depth: usize) -> Result<FiniteSpace> {
        match *self {
            TruncationSequence::Interval => make_interval(depth + 1),
            TruncationSequence::Squares => make_squares(depth),
            TruncationSequence::Tree { n } => make_tree(n, depth),
        }
    }

    /// First depth at which a point appears.
    pub fn level(&self, id: usize) -> usize {
        match *self {
            TruncationSequence::Interval => id,
            TruncationSequence::Squares => id + 1,
            TruncationSequence::Tree { n } => {
                let mut k = 0;
                while tree_size(n, k).is_some_and(|s| s <= id) {
                    k += 1;
                }
                k
            }
        }
    }

    /// Image of a point of `X_from` in `X_to`.
    pub fn embed(&self, id: usize, from: usize, to: usize) -> Result<usize> {
        if to < from {
            return Err(Error::InvalidArgument(format!("cannot embed depth {from} into {to}")));
        }
        if self.level(id) > from {
            return Err(Error::PointOutOfRange { id, size: self.size_at(from).unwrap_or(0) });
        }
        Ok(id)
    }

    pub fn size_at(&self, depth: usize) -> Option<usize> {
        match *self {
            TruncationSequence::Interval => Some(depth + 1),
            TruncationSequence::Squares => Some(depth),
            TruncationSequence::Tree { n } => tree_size(n, depth),
        }
    }

    /// `log` of the number of points at exactly `level`.
    pub fn shell_log_count(&self, level: usize) -> f64 {
        match *self {
            TruncationSequence::Interval => 0.0,
            TruncationSequence::Squares if level == 0 => f64::NEG_INFINITY,
            TruncationSequence::Squares => 0.0,
            TruncationSequence::Tree { n } => level as f64 * (n as f64).ln(),
        }
    }

    /// Ambient numeric label of the (single) point at `level` for the line families.
    pub fn shell_label(&self, level: usize) -> Option<f64> {
        match *self {
            TruncationSequence::Interval => Some(level as f64),
            TruncationSequence::Squares => Some((level as f64) * (level as f64)),
            TruncationSequence::Tree { .. } => None,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            TruncationSequence::Interval => "interval".into(),
            TruncationSequence::Squares => "squares".into(),
            TruncationSequence::Tree { n } => format!("tree:{n}"),
        }
    }
}
