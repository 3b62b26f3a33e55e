//! The `n`-branching tree: words, cylinders, the explicit KMS states, branch
//! isometries and the phase report around `β = log n`.
//!
//! Point ids follow breadth-first word order, so the words of length `k` occupy
//! the contiguous id range `[size(k-1), size(k))` and a cylinder meets each level
//! in one contiguous block. Most functions here work on ids directly and never
//! materialize the word list.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kms::{DiagonalState, KmsReport};
use crate::numeric::{self, LogSumExp};
use crate::space::{tree_id, tree_size, FiniteSpace, SpaceKind, SpaceRef};
use crate::translation::{PartialTranslation, PointSet};

/// A finite word over `{1, …, n}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<u8>) -> Self {
        Word(letters)
    }

    /// The word `letter^len`.
    pub fn repeat(letter: u8, len: usize) -> Self {
        Word(vec![letter; len])
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn append_letter(&self, letter: u8) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(letter);
        Word(v)
    }

    /// `self⌢other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn has_suffix(&self, suffix: &Word) -> bool {
        self.0.ends_with(&suffix.0)
    }

    /// Length of the longest common prefix.
    pub fn lcp(&self, other: &Word) -> usize {
        self.0.iter().zip(&other.0).take_while(|(a, b)| a == b).count()
    }

    /// Graph distance `|x| + |y| − 2·lcp(x, y)`.
    pub fn distance(&self, other: &Word) -> usize {
        self.len() + other.len() - 2 * self.lcp(other)
    }

    pub fn parent(&self) -> Option<Word> {
        (!self.0.is_empty()).then(|| Word(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn prefix(&self, k: usize) -> Word {
        Word(self.0[..k.min(self.len())].to_vec())
    }

    /// Checks every letter lies in `1..=n`.
    pub fn check_alphabet(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l == 0 || l as usize > n) {
            Some(l) => Err(Error::InvalidWord(format!("letter {l} outside 1..={n} in {self}"))),
            None => Ok(()),
        }
    }

    /// Parses `∅`, a digit string such as `121`, or dot-separated letters such as `12.3`.
    pub fn parse(s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == "∅" {
            return Ok(Word::empty());
        }
        let letters: Option<Vec<u8>> = if s.contains(['.', '·']) {
            s.split(['.', '·']).map(|p| p.trim().parse::<u8>().ok()).collect()
        } else {
            s.chars().map(|c| c.to_digit(10).map(|d| d as u8)).collect()
        };
        let letters = letters.ok_or_else(|| Error::InvalidWord(s.to_string()))?;
        if letters.contains(&0) {
            return Err(Error::InvalidWord(format!("{s}: letters start at 1")));
        }
        Ok(Word(letters))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        let sep = if self.0.iter().any(|&l| l > 9) { "." } else { "" };
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join(sep))
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Word::parse(s)
    }
}

/// Word with breadth-first id `id` in a tree over `n` letters.
pub fn word_of_id(n: usize, id: usize) -> Word {
    let mut k = 0;
    while tree_size(n, k).is_some_and(|s| s <= id) {
        k += 1;
    }
    let mut rank = id - if k == 0 { 0 } else { tree_size(n, k - 1).unwrap_or(0) };
    let mut letters = vec![0u8; k];
    for slot in letters.iter_mut().rev() {
        *slot = (rank % n) as u8 + 1;
        rank /= n;
    }
    Word(letters)
}

/// Branching number and depth of a tree space.
pub fn tree_shape(space: &FiniteSpace) -> Result<(usize, usize)> {
    match space.kind() {
        SpaceKind::Tree { n, depth } => Ok((n, depth)),
        other => Err(Error::InvalidArgument(format!("expected a tree, got {other:?}"))),
    }
}

/// An infinite branch `x̄ ∈ {1..n}^ℕ` given by a periodic pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pattern: Vec<u8>,
}

impl Branch {
    pub fn periodic(pattern: Vec<u8>) -> Result<Self> {
        if pattern.is_empty() || pattern.contains(&0) {
            return Err(Error::InvalidWord(format!("bad branch pattern {pattern:?}")));
        }
        Ok(Self { pattern })
    }

    /// The constant branch `c c c …`.
    pub fn constant(letter: u8) -> Result<Self> {
        Self::periodic(vec![letter])
    }

    pub fn letter(&self, i: usize) -> u8 {
        self.pattern[i % self.pattern.len()]
    }

    /// `x̄|k = (x₁, …, x_k)`.
    pub fn prefix(&self, k: usize) -> Word {
        Word((0..k).map(|i| self.letter(i)).collect())
    }
}

/// The prefix cylinder `y⌢T` of all words starting with `root`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cylinder {
    pub root: Word,
}

impl Cylinder {
    pub fn new(root: Word) -> Self {
        Self { root }
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.root.is_prefix_of(w)
    }

    /// Contiguous id ranges of the cylinder, one per level, inside `tree(n, depth)`.
    pub fn id_ranges(&self, n: usize, depth: usize) -> Vec<std::ops::Range<usize>> {
        let k = self.root.len();
        if k > depth {
            return Vec::new();
        }
        let rank = tree_id(n, &self.root) - if k == 0 { 0 } else { tree_size(n, k - 1).unwrap_or(0) };
        let mut ranges = Vec::with_capacity(depth - k + 1);
        let mut width = 1usize;
        for level in k..=depth {
            let offset = if level == 0 { 0 } else { tree_size(n, level - 1).unwrap_or(0) };
            let start = offset + rank * width;
            ranges.push(start..start + width);
            width *= n;
        }
        ranges
    }

    pub fn points(&self, n: usize, depth: usize) -> PointSet {
        self.id_ranges(n, depth).into_iter().flatten().collect()
    }
}

/// `χ_{y⌢T}·χ_{z⌢T}`: the longer cylinder when the roots are comparable, else empty.
pub fn cylinder_product(y: &Word, z: &Word) -> Option<Cylinder> {
    if y.is_prefix_of(z) {
        Some(Cylinder::new(z.clone()))
    } else if z.is_prefix_of(y) {
        Some(Cylinder::new(y.clone()))
    } else {
        None
    }
}

/// `q = n e^{−β}`, computed so that `q == 1` exactly at `β = ln n`.
fn ratio(n: usize, beta: f64) -> f64 {
    ((n as f64).ln() - beta).exp()
}

/// `w(y) = e^{−β|y|} − n e^{−β(|y|+1)}` on `tree(n, depth)`; the deficit goes to `mass_at_infinity`.
pub fn explicit_tree_state(n: usize, beta: f64, depth: usize) -> Result<DiagonalState> {
    if n == 0 {
        return Err(Error::InvalidArgument("branching must be at least 1".into()));
    }
    let size = tree_size(n, depth).ok_or_else(|| Error::InvalidArgument(format!("tree({n}, {depth}) too large")))?;
    let q = ratio(n, beta);
    let root_weight = 1.0 - q;
    if root_weight < 0.0 {
        return Err(Error::NegativeWeight { id: 0, weight: root_weight, beta, log_n: (n as f64).ln() });
    }
    let mut weights = Vec::with_capacity(size);
    let mut level_size = 1usize;
    for k in 0..=depth {
        let w = (-beta * k as f64).exp() * root_weight;
        weights.extend(std::iter::repeat_n(w, level_size));
        level_size = level_size.saturating_mul(n);
    }
    let mass_at_infinity = if root_weight == 0.0 { 1.0 } else { q.powi(depth as i32 + 1) };
    DiagonalState::new(weights, mass_at_infinity)
}

fn tree_depth_of_len(n: usize, len: usize) -> Result<usize> {
    let mut d = 0;
    loop {
        match tree_size(n, d) {
            Some(s) if s == len => return Ok(d),
            Some(s) if s < len => d += 1,
            _ => return Err(Error::Dimension { expected: tree_size(n, d).unwrap_or(0), got: len }),
        }
    }
}

/// Cylinder mass of the explicit state for a root of length `root_len`, summed level by level.
///
/// Needs no point list, so `depth` may far exceed what [`explicit_tree_state`] can hold.
pub fn explicit_cylinder_mass(n: usize, beta: f64, depth: usize, root_len: usize) -> Result<f64> {
    let q = ratio(n, beta);
    if q > 1.0 {
        return Err(Error::NegativeWeight { id: 0, weight: 1.0 - q, beta, log_n: (n as f64).ln() });
    }
    if root_len > depth {
        return Ok(0.0);
    }
    // level root_len + j holds n^j cylinder points of weight e^{−β(root_len + j)}(1 − q)
    let terms = (0..=depth - root_len).map(|j| {
        (j as f64 * (n as f64).ln() - beta * (root_len + j) as f64).exp() * (1.0 - q)
    });
    Ok(numeric::sum(terms, depth - root_len + 1))
}

/// `φ(χ_{y⌢T})` summed over the truncation.
pub fn cylinder_mass(phi: &DiagonalState, n: usize, y: &Word) -> Result<f64> {
    y.check_alphabet(n)?;
    let depth = tree_depth_of_len(n, phi.len())?;
    let ranges = Cylinder::new(y.clone()).id_ranges(n, depth);
    let count: usize = ranges.iter().map(|r| r.len()).sum();
    Ok(numeric::sum(ranges.into_iter().flatten().map(|x| phi.weight(x)), count))
}

/// Worst `|φ(χ_{ỹ(A)}) − e^{−β|y|} φ(χ_A)|` with `ỹ(x) = x⌢y`, over all `(y, A)`.
///
/// Pairs whose image leaves the truncation are skipped and counted in the witness text.
pub fn shift_kms_defect(phi: &DiagonalState, n: usize, beta: f64, ys: &[Word], sets: &[PointSet]) -> Result<KmsReport> {
    let depth = tree_depth_of_len(n, phi.len())?;
    for y in ys {
        y.check_alphabet(n)?;
    }
    let mut worst: Option<(f64, String)> = None;
    let mut samples = 0;
    let mut skipped = 0;
    for (i, y) in ys.iter().enumerate() {
        for (j, a) in sets.iter().enumerate() {
            let mut image = 0.0;
            let mut inside = true;
            for &x in a {
                if x >= phi.len() {
                    return Err(Error::PointOutOfRange { id: x, size: phi.len() });
                }
                let w = word_of_id(n, x).concat(y);
                if w.len() > depth {
                    inside = false;
                    break;
                }
                image += phi.weight(tree_id(n, &w));
            }
            if !inside {
                skipped += 1;
                continue;
            }
            samples += 1;
            let base: f64 = a.iter().map(|&x| phi.weight(x)).sum();
            let d = (image - (-beta * y.len() as f64).exp() * base).abs();
            if worst.as_ref().is_none_or(|(m, _)| d > *m) {
                worst = Some((d, format!("y = {y} (#{i}), set #{j}")));
            }
        }
    }
    let witness = worst.as_ref().map(|(_, s)| {
        if skipped > 0 {
            format!("{s}; {skipped} pairs skipped (image leaves truncation)")
        } else {
            s.clone()
        }
    });
    Ok(KmsReport {
        beta,
        defect_direct: None,
        defect_criterion: Some(worst.map_or(0.0, |w| w.0)),
        samples,
        witness,
    })
}

/// Tree automorphism sending `x̄|j ↦ ȳ|j` for `j ≤ k`.
///
/// At each vertex `x̄|j` of the path the children `x̄_{j+1}` and `ȳ_{j+1}` are
/// swapped; every other vertex keeps its children in place.
pub fn branch_isometry(space: &SpaceRef, xbar: &Word, ybar: &Word) -> Result<PartialTranslation> {
    let (n, depth) = tree_shape(space)?;
    if xbar.len() != ybar.len() {
        return Err(Error::PrefixMismatch(xbar.len(), ybar.len()));
    }
    if xbar.len() > depth {
        return Err(Error::InvalidArgument(format!("prefix length {} exceeds depth {depth}", xbar.len())));
    }
    xbar.check_alphabet(n)?;
    ybar.check_alphabet(n)?;
    let (xs, ys) = (xbar.letters(), ybar.letters());
    let map_word = |u: &Word| -> Word {
        let mut out = u.letters().to_vec();
        for (j, l) in out.iter_mut().enumerate() {
            if j >= xs.len() || u.letters()[..j] != xs[..j] {
                break;
            }
            if *l == xs[j] {
                *l = ys[j];
            } else if *l == ys[j] {
                *l = xs[j];
            }
        }
        Word(out)
    };
    let image: Vec<usize> = (0..space.len())
        .into_par_iter()
        .map(|id| tree_id(n, &map_word(&word_of_id(n, id))))
        .collect();
    PartialTranslation::new(space.clone(), image.into_iter().enumerate())
}

/// `w′(x) = w(f(x))` for a bijection `f` of the space.
pub fn pushforward_state(phi: &DiagonalState, f: &PartialTranslation) -> Result<DiagonalState> {
    if f.space().len() != phi.len() {
        return Err(Error::Dimension { expected: phi.len(), got: f.space().len() });
    }
    if !f.is_total_bijection() {
        return Err(Error::NotBijective);
    }
    let w = f.image().iter().map(|&fx| phi.weight(fx)).collect();
    DiagonalState::new(w, phi.mass_at_infinity())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseVerdict {
    /// `β < log n`: the explicit formula has a negative weight.
    NoState,
    /// `β = log n`: every finite weight vanishes.
    Critical,
    /// `β > log n`: `Z` converges and the Gibbs limit is the unique state.
    UniqueGibbs,
}

impl fmt::Display for PhaseVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseVerdict::NoState => "no-state",
            PhaseVerdict::Critical => "critical",
            PhaseVerdict::UniqueGibbs => "unique-gibbs",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub beta: f64,
    pub verdict: PhaseVerdict,
    /// `(Z_D − Z_{D'}) / Z_D` between the last two scheduled depths.
    #[serde(rename = "Z_tail")]
    pub z_tail: f64,
    /// Mass outside `X_{⌊√D⌋}` at the final depth (explicit state for `β ≥ log n`, Gibbs below).
    pub escaped_mass: f64,
    /// Shift-KMS defect of the explicit state, absent when no state exists.
    pub kms_defect: Option<f64>,
    /// Negativity witness for `β < log n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub n: usize,
    pub depths: Vec<usize>,
    pub rows: Vec<PhaseRow>,
}

impl PhaseReport {
    /// Consecutive grid points `(β_i, β_{i+1})` where the verdict leaves `no-state`.
    pub fn flip_bracket(&self) -> Option<(f64, f64)> {
        let first = self.rows.iter().position(|r| r.verdict != PhaseVerdict::NoState)?;
        if first == 0 {
            return None;
        }
        Some((self.rows[first - 1].beta, self.rows[first].beta))
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "beta", "verdict", "Z_tail", "escaped_mass", "kms_defect"])?;
        for r in &self.rows {
            w.write_record([
                self.n.to_string(),
                numeric::fmt_f64(r.beta),
                r.verdict.to_string(),
                numeric::fmt_f64(r.z_tail),
                numeric::fmt_f64(r.escaped_mass),
                r.kms_defect.map(numeric::fmt_f64).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `log Σ_{k ≤ depth} n^k e^{−βk}`, aggregated by level.
pub fn tree_log_z(n: usize, beta: f64, depth: usize) -> f64 {
    let ln_n = (n as f64).ln();
    let mut acc = LogSumExp::new();
    for k in 0..=depth {
        acc.push(k as f64 * (ln_n - beta));
    }
    acc.value()
}

/// Classifies each `β` and gathers the finite-depth evidence.
pub fn phase_report(n: usize, betas: &[f64], depths: &[usize]) -> Result<PhaseReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("branching must be at least 1".into()));
    }
    let mut depths = depths.to_vec();
    depths.sort_unstable();
    depths.dedup();
    let final_depth = *depths.last().ok_or_else(|| Error::InvalidArgument("empty depth schedule".into()))?;
    let prev_depth = if depths.len() > 1 { depths[depths.len() - 2] } else { final_depth / 2 };
    let core = (final_depth as f64).sqrt().floor() as usize;
    // small probe for the shift criterion; the closed form does not depend on depth
    let probe_depth = final_depth.min(6);
    let probe_ys: Vec<Word> = (1..=n.min(3) as u8).map(|l| Word(vec![l])).chain([Word::empty()]).collect();
    let probe_sets: Vec<PointSet> = (0..tree_size(n, probe_depth.saturating_sub(1)).unwrap_or(1).min(40))
        .map(|x| PointSet::from([x]))
        .collect();

    let rows = betas
        .par_iter()
        .map(|&beta| {
            let log_z = tree_log_z(n, beta, final_depth);
            let z_tail = 1.0 - (tree_log_z(n, beta, prev_depth) - log_z).exp();
            match explicit_tree_state(n, beta, probe_depth) {
                Err(Error::NegativeWeight { id, weight, .. }) => {
                    let escaped = 1.0 - (tree_log_z(n, beta, core) - log_z).exp();
                    Ok(PhaseRow {
                        beta,
                        verdict: PhaseVerdict::NoState,
                        z_tail,
                        escaped_mass: escaped,
                        kms_defect: None,
                        witness: Some(format!("w({}) = {weight:e} < 0", word_of_id(n, id))),
                    })
                }
                Err(e) => Err(e),
                Ok(state) => {
                    let q = ratio(n, beta);
                    let verdict = if q == 1.0 { PhaseVerdict::Critical } else { PhaseVerdict::UniqueGibbs };
                    // mass of the explicit state outside the core: q^{core+1}
                    let escaped = if q == 1.0 { 1.0 } else { q.powi(core as i32 + 1) };
                    let defect = shift_kms_defect(&state, n, beta, &probe_ys, &probe_sets)?;
                    Ok(PhaseRow {
                        beta,
                        verdict,
                        z_tail,
                        escaped_mass: escaped,
                        kms_defect: defect.defect_criterion,
                        witness: None,
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseReport { n, depths, rows })
}
