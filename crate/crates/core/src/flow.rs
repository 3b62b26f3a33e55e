//! The diagonal-conjugation flow `σ_{h,t}(a) = e^{ith̄} a e^{−ith̄}` and its
//! analytic continuation `σ_{h,iβ}(a) = e^{−βh̄} a e^{βh̄}`.
//!
//! Both act entrywise: the `(x, y)` entry is multiplied by
//! `e^{it(h(x)−h(y))}` or `e^{−β(h(x)−h(y))}`. No exponential matrix is ever formed.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::EXP_LIMIT;
use crate::operator::BandOperator;
use crate::space::{FiniteSpace, TruncationSequence};

/// A real function on the points of a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((id, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("potential is not finite at {id}: {v}")));
        }
        Ok(Self { values })
    }

    pub fn from_fn(space: &FiniteSpace, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(space.ids().map(f).collect())
    }

    pub fn zero(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.len() == n {
            Ok(())
        } else {
            Err(Error::Dimension { expected: n, got: self.len() })
        }
    }
}

/// Named potentials understood by the command line and the truncation diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PotentialRule {
    /// `h(w) = |w|` on trees (distance to the root).
    WordLength,
    /// `h(x) = x`, the ambient label.
    Label,
    /// `h(x) = log(1 + x)`.
    LogLabel,
    /// `h(x) = log(√x)`, for positive labels.
    LogSqrtLabel,
    Zero,
    /// Explicit values by point id.
    Table(Vec<f64>),
}

impl PotentialRule {
    /// The named potential usually paired with a space family.
    pub fn default_for(seq: TruncationSequence) -> Self {
        match seq {
            TruncationSequence::Interval => PotentialRule::LogLabel,
            TruncationSequence::Squares => PotentialRule::LogSqrtLabel,
            TruncationSequence::Tree { .. } => PotentialRule::WordLength,
        }
    }

    fn of_label(&self, label: f64) -> Option<f64> {
        match self {
            PotentialRule::Label => Some(label),
            PotentialRule::LogLabel => Some((1.0 + label).ln()),
            PotentialRule::LogSqrtLabel if label > 0.0 => Some(label.sqrt().ln()),
            PotentialRule::Zero => Some(0.0),
            _ => None,
        }
    }

    pub fn on(&self, space: &FiniteSpace) -> Result<Potential> {
        let value = |id: usize| -> Result<f64> {
            match self {
                PotentialRule::Zero => Ok(0.0),
                PotentialRule::WordLength => space.word(id).map(|w| w.len() as f64).ok_or_else(|| {
                    Error::InvalidArgument("word-length potential needs a tree".into())
                }),
                PotentialRule::Table(v) => v.get(id).copied().ok_or(Error::Dimension {
                    expected: space.len(),
                    got: v.len(),
                }),
                _ => space
                    .numeric_label(id)
                    .and_then(|l| self.of_label(l))
                    .ok_or_else(|| Error::InvalidArgument(format!("{self} undefined at point {id}"))),
            }
        };
        if let PotentialRule::Table(v) = self {
            if v.len() != space.len() {
                return Err(Error::Dimension { expected: space.len(), got: v.len() });
            }
        }
        Potential::new(space.ids().map(value).collect::<Result<_>>()?)
    }

    /// Value of the potential on the points of level `level`, when it is constant there.
    pub fn shell_value(&self, seq: TruncationSequence, level: usize) -> Option<f64> {
        match (self, seq) {
            (PotentialRule::Zero, _) => Some(0.0),
            (PotentialRule::WordLength, TruncationSequence::Tree { .. }) => Some(level as f64),
            (PotentialRule::Table(v), TruncationSequence::Interval) => v.get(level).copied(),
            (PotentialRule::Table(v), TruncationSequence::Squares) => {
                level.checked_sub(1).and_then(|i| v.get(i).copied())
            }
            (_, TruncationSequence::Tree { .. }) => None,
            (rule, s) => s.shell_label(level).and_then(|l| rule.of_label(l)),
        }
    }

    /// True when `h` grows without bound along the truncation sequence.
    pub fn is_unbounded_on(&self, seq: TruncationSequence) -> bool {
        matches!(
            (self, seq),
            (PotentialRule::WordLength, TruncationSequence::Tree { .. })
                | (PotentialRule::Label | PotentialRule::LogLabel | PotentialRule::LogSqrtLabel,
                   TruncationSequence::Interval | TruncationSequence::Squares)
        )
    }
}

impl fmt::Display for PotentialRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialRule::WordLength => f.write_str("word-length"),
            PotentialRule::Label => f.write_str("label"),
            PotentialRule::LogLabel => f.write_str("log-label"),
            PotentialRule::LogSqrtLabel => f.write_str("log-sqrt-label"),
            PotentialRule::Zero => f.write_str("zero"),
            PotentialRule::Table(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "table:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for PotentialRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word-length" => Ok(PotentialRule::WordLength),
            "label" => Ok(PotentialRule::Label),
            "log-label" => Ok(PotentialRule::LogLabel),
            "log-sqrt-label" => Ok(PotentialRule::LogSqrtLabel),
            "zero" => Ok(PotentialRule::Zero),
            _ => match s.strip_prefix("table:") {
                Some(rest) => rest
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{t}: {e}"))))
                    .collect::<Result<Vec<_>>>()
                    .map(PotentialRule::Table),
                None => Err(Error::Parse(format!("unknown potential '{s}'"))),
            },
        }
    }
}

/// `ω(r) = max{|h(x) − h(y)| : d(x, y) ≤ r}` at a list of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarsenessProfile {
    pub pairs: Vec<(f64, f64)>,
}

pub fn coarseness_modulus(space: &FiniteSpace, h: &Potential, radii: &[f64]) -> Result<CoarsenessProfile> {
    h.check_dim(space.len())?;
    let mut pairs = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut w = 0.0f64;
        for x in space.ids() {
            for y in 0..x {
                if space.dist(x, y) <= r {
                    w = w.max((h.at(x) - h.at(y)).abs());
                }
            }
        }
        pairs.push((r, w));
    }
    Ok(CoarsenessProfile { pairs })
}

/// `σ_{h,t}(a)`.
pub fn evolve(a: &BandOperator, h: &Potential, t: f64) -> Result<BandOperator> {
    h.check_dim(a.dim())?;
    Ok(a.map_entries(|x, y, c| c * Complex64::from_polar(1.0, t * (h.at(x) - h.at(y)))))
}

/// `σ_{h,iβ}(a)`: entry `(x, y)` times `e^{−β(h(x)−h(y))}`.
pub fn analytic_evolve(a: &BandOperator, h: &Potential, beta: f64) -> Result<BandOperator> {
    h.check_dim(a.dim())?;
    if let Some(exponent) = a
        .entries()
        .map(|(x, y, _)| -beta * (h.at(x) - h.at(y)))
        .find(|e| *e > EXP_LIMIT)
    {
        return Err(Error::Overflow {
            exponent,
            limit: EXP_LIMIT,
            context: "analytic continuation of the flow".into(),
        });
    }
    Ok(a.map_entries(|x, y, c| c * (-beta * (h.at(x) - h.at(y))).exp()))
}
