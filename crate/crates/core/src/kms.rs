//! Partition functions, Gibbs states and KMS verification.
//!
//! States are diagonal by default: `φ(a) = Σ_x w(x) a_{x,x}`, i.e. every state
//! factors through the conditional expectation. [`MatrixState`] carries a full
//! density matrix and exists to test that factorization instead of assuming it.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{analytic_evolve, Potential};
use crate::numeric::{self, EXP_LIMIT};
use crate::operator::{BandOperator, Diagonal};
use crate::space::FiniteSpace;
use crate::translation::{PartialTranslation, PointSet};

/// Tolerance on `Σ w + mass_at_infinity = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Default absolute tolerance for KMS defects.
pub const DEFAULT_KMS_TOL: f64 = 1e-10;

/// A linear functional on band operators.
pub trait State: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, a: &BandOperator) -> Result<Complex64>;

    /// `φ(a·b)`.
    fn eval_product(&self, a: &BandOperator, b: &BandOperator) -> Result<Complex64> {
        self.eval(&a.multiply(b)?)
    }
}

/// Nonnegative diagonal weights plus the mass that escaped the truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalState {
    weights: Vec<f64>,
    mass_at_infinity: f64,
}

impl DiagonalState {
    pub fn new(weights: Vec<f64>, mass_at_infinity: f64) -> Result<Self> {
        if let Some((id, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidState(format!("weight {w} at point {id}")));
        }
        if !(0.0..=1.0).contains(&mass_at_infinity) {
            return Err(Error::InvalidState(format!("mass at infinity {mass_at_infinity}")));
        }
        let total = numeric::sum(weights.iter().copied(), weights.len()) + mass_at_infinity;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!("total mass {total} differs from 1")));
        }
        Ok(Self { weights, mass_at_infinity })
    }

    /// Normalizes nonnegative weights to a probability vector.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        let total = numeric::sum(weights.iter().copied(), weights.len());
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::ZeroNormalizer(format!("weights sum to {total}")));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect(), 0.0)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_unnormalized(vec![1.0; n])
    }

    /// Point mass `φ(a) = a_{x,x}`.
    pub fn dirac(n: usize, x: usize) -> Result<Self> {
        let mut w = vec![0.0; n];
        *w.get_mut(x).ok_or(Error::PointOutOfRange { id: x, size: n })? = 1.0;
        Self::new(w, 0.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn mass_at_infinity(&self) -> f64 {
        self.mass_at_infinity
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `φ(χ_A)`.
    pub fn mass(&self, set: &PointSet) -> f64 {
        set.iter().map(|&x| self.weights[x]).sum()
    }

    /// `φ(d)` for a real diagonal `d`.
    pub fn eval_real_diag(&self, d: &[f64]) -> Result<f64> {
        if d.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: d.len() });
        }
        Ok(numeric::sum(self.weights.iter().zip(d).map(|(w, v)| w * v), d.len()))
    }

    /// Largest pointwise weight difference.
    pub fn max_abs_diff(&self, other: &DiagonalState) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold((self.mass_at_infinity - other.mass_at_infinity).abs(), f64::max)
    }

    /// CSV rows `id,label,weight`.
    pub fn write_csv<W: std::io::Write>(&self, space: &FiniteSpace, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "label", "weight"])?;
        for (id, weight) in self.weights.iter().enumerate() {
            w.write_record([
                id.to_string(),
                space.label(id).unwrap_or("").to_string(),
                numeric::fmt_f64(*weight),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl State for DiagonalState {
    fn dim(&self) -> usize {
        self.len()
    }

    fn eval(&self, a: &BandOperator) -> Result<Complex64> {
        if a.dim() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: a.dim() });
        }
        Ok(self.weights.iter().enumerate().map(|(x, &w)| a.get(x, x) * w).sum())
    }

    fn eval_product(&self, a: &BandOperator, b: &BandOperator) -> Result<Complex64> {
        if a.dim() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: a.dim() });
        }
        let diag = a.product_diagonal(b)?;
        Ok(self.weights.iter().zip(diag).map(|(&w, c)| c * w).sum())
    }
}

/// `φ(a) = tr(ρ a) = Σ_{x,y} ρ_{y,x} a_{x,y}` for a density matrix `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixState {
    density: BandOperator,
}

impl MatrixState {
    /// Checks trace one, hermiticity and positivity on basis vectors and their pairwise combinations.
    pub fn new(density: BandOperator) -> Result<Self> {
        let tr = density.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!("density has trace {tr}")));
        }
        if density.max_abs_diff(&density.adjoint())? > NORMALIZATION_TOL {
            return Err(Error::InvalidState("density is not hermitian".into()));
        }
        for x in 0..density.dim() {
            let rxx = density.get(x, x).re;
            if rxx < -NORMALIZATION_TOL {
                return Err(Error::InvalidState(format!("negative diagonal at {x}")));
            }
            for (&y, &rxy) in density.row(x) {
                // 2x2 principal minor
                let ryy = density.get(y, y).re;
                if y != x && rxy.norm_sqr() > rxx * ryy + NORMALIZATION_TOL {
                    return Err(Error::InvalidState(format!("negative 2x2 minor at ({x}, {y})")));
                }
            }
        }
        Ok(Self { density })
    }

    pub fn density(&self) -> &BandOperator {
        &self.density
    }

    /// Sum of `|ρ_{x,y}|` over `x ≠ y`.
    pub fn off_diagonal_mass(&self) -> f64 {
        self.density.entries().filter(|(x, y, _)| x != y).map(|(_, _, c)| c.norm()).sum()
    }
}

impl State for MatrixState {
    fn dim(&self) -> usize {
        self.density.dim()
    }

    fn eval(&self, a: &BandOperator) -> Result<Complex64> {
        if a.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: a.dim() });
        }
        Ok(a.entries().map(|(x, y, c)| self.density.get(y, x) * c).sum())
    }
}

/// Outcome of a KMS check: worst absolute defect over the supplied samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmsReport {
    pub beta: f64,
    pub defect_direct: Option<f64>,
    pub defect_criterion: Option<f64>,
    pub samples: usize,
    pub witness: Option<String>,
}

impl KmsReport {
    pub fn max_defect(&self) -> f64 {
        self.defect_direct.unwrap_or(0.0).max(self.defect_criterion.unwrap_or(0.0))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_defect() <= tol
    }

    /// Combines two reports on the same `β`, keeping the worse witness.
    pub fn merge(self, other: KmsReport) -> KmsReport {
        let witness = if other.max_defect() > self.max_defect() { other.witness } else { self.witness };
        KmsReport {
            beta: self.beta,
            defect_direct: max_opt(self.defect_direct, other.defect_direct),
            defect_criterion: max_opt(self.defect_criterion, other.defect_criterion),
            samples: self.samples + other.samples,
            witness,
        }
    }
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Index and value of the largest entry; the first index wins ties.
fn argmax(values: &[f64]) -> Option<(usize, f64)> {
    values.iter().copied().enumerate().fold(None, |best, (i, v)| match best {
        Some((_, b)) if b >= v => best,
        _ => Some((i, v)),
    })
}

/// `log Z(β) = log Σ_x e^{−βh(x)}`, summed in ascending id order.
pub fn log_partition_function(space: &FiniteSpace, h: &Potential, beta: f64) -> Result<f64> {
    h.check_dim(space.len())?;
    let exps: Vec<f64> = h.values().iter().map(|v| -beta * v).collect();
    Ok(numeric::logsumexp(&exps))
}

/// `Z(β) = tr(e^{−βh̄})`.
pub fn partition_function(space: &FiniteSpace, h: &Potential, beta: f64) -> Result<f64> {
    let log_z = log_partition_function(space, h, beta)?;
    if log_z > EXP_LIMIT {
        let (id, e) = argmax(&h.values().iter().map(|v| -beta * v).collect::<Vec<_>>()).unwrap_or((0, log_z));
        return Err(Error::Overflow {
            exponent: log_z,
            limit: EXP_LIMIT,
            context: format!("partition function; largest term exponent {e} at point {id}"),
        });
    }
    Ok(log_z.exp())
}

/// `w(x) = e^{−βh(x)} / Z(β)`, computed in log space.
pub fn gibbs_state(space: &FiniteSpace, h: &Potential, beta: f64) -> Result<DiagonalState> {
    let log_z = log_partition_function(space, h, beta)?;
    if !log_z.is_finite() {
        return Err(Error::ZeroNormalizer(format!("log Z = {log_z}")));
    }
    let w: Vec<f64> = h.values().iter().map(|v| (-beta * v - log_z).exp()).collect();
    renormalized(w, 0.0)
}

/// Rescales weights so they sum to `1 − mass_at_infinity` exactly up to rounding.
fn renormalized(w: Vec<f64>, mass_at_infinity: f64) -> Result<DiagonalState> {
    let total = numeric::sum(w.iter().copied(), w.len());
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::ZeroNormalizer(format!("weights sum to {total}")));
    }
    let scale = (1.0 - mass_at_infinity) / total;
    DiagonalState::new(w.into_iter().map(|x| x * scale).collect(), mass_at_infinity)
}

/// `max |φ(a σ_{iβ}(b)) − φ(b a)|` over the pairs.
pub fn kms_defect_direct<S: State>(
    phi: &S,
    h: &Potential,
    beta: f64,
    pairs: &[(BandOperator, BandOperator)],
) -> Result<KmsReport> {
    h.check_dim(phi.dim())?;
    let defects: Vec<f64> = pairs
        .par_iter()
        .map(|(a, b)| {
            let sb = analytic_evolve(b, h, beta)?;
            let lhs = phi.eval_product(a, &sb)?;
            let rhs = phi.eval_product(b, a)?;
            Ok((lhs - rhs).norm())
        })
        .collect::<Result<_>>()?;
    let worst = argmax(&defects);
    Ok(KmsReport {
        beta,
        defect_direct: Some(worst.map_or(0.0, |w| w.1)),
        defect_criterion: None,
        samples: pairs.len(),
        witness: worst.map(|(i, _)| format!("operator pair #{i}")),
    })
}

/// `|φ(χ_{f(A)}) − φ(χ_A e^{β(h − h∘f)})|` for one translation.
pub fn criterion_defect(phi: &DiagonalState, h: &Potential, beta: f64, f: &PartialTranslation) -> Result<f64> {
    let image: f64 = f.image().iter().map(|&y| phi.weight(y)).sum();
    let mut weighted = 0.0;
    for (x, y) in f.pairs() {
        let e = beta * (h.at(x) - h.at(y));
        if e > EXP_LIMIT {
            return Err(Error::Overflow {
                exponent: e,
                limit: EXP_LIMIT,
                context: format!("criterion weight at point {x}"),
            });
        }
        weighted += phi.weight(x) * e.exp();
    }
    Ok((image - weighted).abs())
}

/// Worst criterion defect over a family of partial translations.
pub fn kms_defect_criterion(
    phi: &DiagonalState,
    h: &Potential,
    beta: f64,
    translations: &[PartialTranslation],
) -> Result<KmsReport> {
    h.check_dim(phi.len())?;
    for f in translations {
        if f.space().len() != phi.len() {
            return Err(Error::Dimension { expected: phi.len(), got: f.space().len() });
        }
    }
    let defects: Vec<f64> = translations
        .par_iter()
        .map(|f| criterion_defect(phi, h, beta, f))
        .collect::<Result<_>>()?;
    let worst = argmax(&defects);
    Ok(KmsReport {
        beta,
        defect_direct: None,
        defect_criterion: Some(worst.map_or(0.0, |w| w.1)),
        samples: translations.len(),
        witness: worst.map(|(i, _)| {
            let f = &translations[i];
            format!("translation #{i} with {} points, displacement {}", f.len(), f.displacement())
        }),
    })
}

fn reweight(state: &DiagonalState, h: &Potential, coefficient: f64) -> Result<DiagonalState> {
    h.check_dim(state.len())?;
    let logs: Vec<f64> = state
        .weights()
        .iter()
        .zip(h.values())
        .map(|(&w, &v)| if w > 0.0 { w.ln() + coefficient * v } else { f64::NEG_INFINITY })
        .collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::ZeroNormalizer("all weights vanish".into()));
    }
    renormalized(logs.iter().map(|l| (l - m).exp()).collect(), state.mass_at_infinity())
}

/// `τ ↦ φ_τ(a) = τ(a e^{−βh̄})`, normalized.
pub fn trace_to_kms(tau: &DiagonalState, h: &Potential, beta: f64) -> Result<DiagonalState> {
    reweight(tau, h, -beta)
}

/// Inverse of [`trace_to_kms`]: `φ ↦ τ_φ(a) = φ(a e^{βh̄})`, normalized.
pub fn kms_to_trace(phi: &DiagonalState, h: &Potential, beta: f64) -> Result<DiagonalState> {
    reweight(phi, h, beta)
}

/// `φ_c(a) = φ(a c) / φ(c)` for a nonnegative diagonal `c`.
pub fn condition_state(phi: &DiagonalState, c: &Diagonal) -> Result<DiagonalState> {
    if c.len() != phi.len() {
        return Err(Error::Dimension { expected: phi.len(), got: c.len() });
    }
    if let Some((x, v)) = c.values.iter().enumerate().find(|(_, v)| v.im != 0.0 || v.re < 0.0) {
        return Err(Error::InvalidArgument(format!("conditioning weight {v} at {x} is not nonnegative")));
    }
    let w: Vec<f64> = phi.weights().iter().zip(&c.values).map(|(w, v)| w * v.re).collect();
    let total = numeric::sum(w.iter().copied(), w.len());
    if total <= 0.0 {
        return Err(Error::ZeroNormalizer("φ(c) = 0, conditioning undefined".into()));
    }
    renormalized(w, 0.0)
}

/// Strongly continuous part of a sequence of states on nested truncations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScPart {
    /// Estimated pointwise limits on the core (points present at every used depth).
    pub weights: Vec<f64>,
    /// `1 − Σ limits`: mass escaping every finite set.
    pub residual: f64,
}

/// Estimates `ψ(e_{x,x}) = lim_D φ_D(e_{x,x})` from states on increasing depths.
///
/// Uses the last three depths: a point whose last increment is negligible keeps
/// its final weight; otherwise the increments must contract monotonically and
/// the limit is the Aitken extrapolation, clamped at zero.
pub fn sc_part(states: &[DiagonalState]) -> Result<ScPart> {
    let last = states.last().ok_or_else(|| Error::InvalidArgument("no states given".into()))?;
    if states.windows(2).any(|w| w[1].len() < w[0].len()) {
        return Err(Error::InvalidArgument("truncations must be nested".into()));
    }
    let k = states.len();
    let core_len = states[k.saturating_sub(3)].len();
    let mut weights = Vec::with_capacity(core_len);
    for x in 0..core_len {
        let s3 = last.weight(x);
        let stable_tol = 1e-14 + 1e-12 * s3.abs();
        let limit = match k {
            1 => s3,
            2 => {
                let s2 = states[0].weight(x);
                if (s3 - s2).abs() <= stable_tol {
                    s3
                } else {
                    return Err(Error::Divergence {
                        id: x,
                        detail: "weights still moving and only two depths given".into(),
                    });
                }
            }
            _ => {
                let (s1, s2) = (states[k - 3].weight(x), states[k - 2].weight(x));
                let (d1, d2) = (s2 - s1, s3 - s2);
                if d2.abs() <= stable_tol {
                    s3
                } else if d1 * d2 < 0.0 || d2.abs() >= d1.abs() {
                    return Err(Error::Divergence {
                        id: x,
                        detail: format!("increments {d1:e} then {d2:e} do not contract"),
                    });
                } else {
                    (s3 - d2 * d2 / (d2 - d1)).max(0.0)
                }
            }
        };
        weights.push(limit);
    }
    let residual = 1.0 - numeric::sum(weights.iter().copied(), weights.len());
    Ok(ScPart { weights, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::PotentialRule;
    use crate::space::{make_interval, make_squares, make_tree, TruncationSequence};

    #[test]
    fn partition_function_examples() {
        let x = make_interval(7).unwrap();
        for beta in [-2.0, 0.0, 0.5, 3.0] {
            assert!((partition_function(&x, &Potential::zero(7), beta).unwrap() - 7.0).abs() < 1e-13);
        }
        let beta = 4f64.ln();
        for depth in 0..8 {
            let t = make_tree(2, depth).unwrap();
            let h = PotentialRule::WordLength.on(&t).unwrap();
            let z = partition_function(&t, &h, beta).unwrap();
            let geometric = 2.0 * (1.0 - 0.5f64.powi(depth as i32 + 1));
            assert!((z - geometric).abs() < 1e-12, "depth {depth}: {z} vs {geometric}");
        }
        let basel = std::f64::consts::PI.powi(2) / 6.0;
        let mut last_gap = f64::INFINITY;
        for n in [10, 100, 1000] {
            let s = make_squares(n).unwrap();
            let h = PotentialRule::LogSqrtLabel.on(&s).unwrap();
            let z = partition_function(&s, &h, 2.0).unwrap();
            let partial: f64 = (1..=n).map(|k| 1.0 / (k as f64).powi(2)).sum();
            assert!((z - partial).abs() < 1e-12);
            let gap = basel - z;
            assert!(gap > 0.0 && gap < last_gap);
            last_gap = gap;
        }
        assert!(last_gap < 1.1e-3);
    }

    #[test]
    fn partition_function_overflow_is_reported() {
        let x = make_interval(3).unwrap();
        let h = PotentialRule::Label.on(&x).unwrap();
        let err = partition_function(&x, &h, -400.0).unwrap_err();
        assert!(err.is_overflow());
        // the Gibbs state itself is still representable
        let g = gibbs_state(&x, &h, -400.0).unwrap();
        assert!((g.weight(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_examples() {
        let t = make_tree(2, 5).unwrap();
        let h = PotentialRule::WordLength.on(&t).unwrap();
        let g0 = gibbs_state(&t, &h, 0.0).unwrap();
        assert!(g0.weights().iter().all(|w| (w - 1.0 / 63.0).abs() < 1e-15));
        let beta = 4f64.ln();
        let mut prev_gap = f64::INFINITY;
        for depth in [2, 5, 10, 15] {
            let t = make_tree(2, depth).unwrap();
            let h = PotentialRule::WordLength.on(&t).unwrap();
            let g = gibbs_state(&t, &h, beta).unwrap();
            let z = 2.0 * (1.0 - 0.5f64.powi(depth as i32 + 1));
            assert!((g.weight(0) - 1.0 / z).abs() < 1e-12);
            let gap = g.weight(0) - 0.5;
            assert!(gap > 0.0 && gap < prev_gap);
            prev_gap = gap;
        }
        let x = make_interval(20).unwrap();
        let lin = PotentialRule::Label.on(&x).unwrap();
        let cold = gibbs_state(&x, &lin, 50.0).unwrap();
        assert!(1.0 - cold.weight(0) < 1e-21);
    }

    fn matrix_units_pair(space: &crate::space::SpaceRef, x: usize, y: usize) -> (BandOperator, BandOperator) {
        (
            BandOperator::matrix_unit(space.clone(), x, y).unwrap(),
            BandOperator::matrix_unit(space.clone(), y, x).unwrap(),
        )
    }

    #[test]
    fn direct_defect_examples() {
        let t = make_tree(2, 3).unwrap().into_shared();
        let h = PotentialRule::WordLength.on(&t).unwrap();
        let g = gibbs_state(&t, &h, 1.0).unwrap();
        let id = BandOperator::identity(t.clone());
        let r = kms_defect_direct(&g, &h, 1.0, &[(id.clone(), id)]).unwrap();
        assert_eq!(r.defect_direct, Some(0.0));
        let u = DiagonalState::uniform(t.len()).unwrap();
        let (x, y) = (0, 4); // ∅ and "11"
        let r = kms_defect_direct(&u, &h, 1.0, &[matrix_units_pair(&t, x, y)]).unwrap();
        // φ(e_{x,y} σ(e_{y,x})) − φ(e_{y,x} e_{x,y}) = (e^{−β(h(y)−h(x))} − 1)/N
        let expected = ((-2.0f64).exp() - 1.0).abs() / t.len() as f64;
        assert!((r.defect_direct.unwrap() - expected).abs() < 1e-15);
        assert!(r.defect_direct.unwrap() > 0.0);
        let rg = kms_defect_direct(&g, &h, 1.0, &[matrix_units_pair(&t, x, y)]).unwrap();
        assert!(rg.defect_direct.unwrap() < 1e-15);
    }

    #[test]
    fn criterion_examples() {
        let t = make_tree(2, 6).unwrap().into_shared();
        let h = PotentialRule::WordLength.on(&t).unwrap();
        let beta = 1.3;
        let g = gibbs_state(&t, &h, beta).unwrap();
        let a: PointSet = [0, 1, 5, 9].into_iter().collect();
        let id = PartialTranslation::identity(t.clone(), a.iter().copied()).unwrap();
        assert_eq!(criterion_defect(&g, &h, beta, &id).unwrap(), 0.0);
        // append the letter 2 on a cylinder
        let cyl: Vec<usize> = t.ids().filter(|&i| t.word(i).unwrap().letters().first() == Some(&1)).collect();
        let f = PartialTranslation::from_fn(t.clone(), cyl, |i| {
            t.id_of_word(&t.word(i).unwrap().append_letter(2))
        })
        .unwrap();
        assert!(!f.is_empty());
        assert!(criterion_defect(&g, &h, beta, &f).unwrap() <= 1e-12);
        // a point swap reads w(x1) = w(x0) e^{β(h(x0) − h(x1))}
        let (x0, x1) = (3, 40);
        let swap = PartialTranslation::new(t.clone(), [(x0, x1)]).unwrap();
        assert!(criterion_defect(&g, &h, beta, &swap).unwrap() <= 1e-15);
        let lhs = g.weight(x1);
        let rhs = g.weight(x0) * (beta * (h.at(x0) - h.at(x1))).exp();
        assert!((lhs - rhs).abs() <= 1e-15);
    }

    #[test]
    fn trace_kms_correspondence() {
        let t = make_tree(2, 4).unwrap();
        let h = PotentialRule::WordLength.on(&t).unwrap();
        let u = DiagonalState::uniform(t.len()).unwrap();
        assert!(trace_to_kms(&u, &h, 0.0).unwrap().max_abs_diff(&u) < 1e-15);
        let g = gibbs_state(&t, &h, 0.7).unwrap();
        assert!(trace_to_kms(&u, &h, 0.7).unwrap().max_abs_diff(&g) < 1e-15);
        let back = kms_to_trace(&g, &h, 0.7).unwrap();
        assert!(back.max_abs_diff(&u) < 1e-15);
        assert!(trace_to_kms(&DiagonalState::new(vec![0.0; t.len() - 1].into_iter().chain([1.0]).collect(), 0.0).unwrap(), &h, 1.0).is_ok());
    }

    #[test]
    fn conditioning() {
        let t = make_tree(2, 6).unwrap();
        let h = PotentialRule::WordLength.on(&t).unwrap();
        let beta = 0.9;
        let g = gibbs_state(&t, &h, beta).unwrap();
        let all = Diagonal::constant(t.len(), 1.0);
        assert!(condition_state(&g, &all).unwrap().max_abs_diff(&g) < 1e-15);
        let y = crate::tree::Word::from_letters(vec![2, 1]);
        let cyl: PointSet = t.ids().filter(|&i| y.is_prefix_of(t.word(i).unwrap())).collect();
        let c = condition_state(&g, &Diagonal::indicator(t.len(), &cyl)).unwrap();
        // Gibbs of the depth-4 subtree below y
        let sub_z: f64 = (0..=4).map(|k| 2f64.powi(k) * (-beta * k as f64).exp()).sum();
        for x in t.ids() {
            let w = t.word(x).unwrap();
            let expected = if cyl.contains(&x) { (-beta * (w.len() - 2) as f64).exp() / sub_z } else { 0.0 };
            assert!((c.weight(x) - expected).abs() < 1e-15);
        }
        let empty = Diagonal::zeros(t.len());
        assert!(matches!(condition_state(&g, &empty), Err(Error::ZeroNormalizer(_))));
    }

    fn tree_gibbs_sequence(beta: f64, depths: &[usize]) -> Vec<DiagonalState> {
        let seq = TruncationSequence::Tree { n: 2 };
        depths
            .iter()
            .map(|&d| {
                let t = seq.at(d).unwrap();
                gibbs_state(&t, &PotentialRule::WordLength.on(&t).unwrap(), beta).unwrap()
            })
            .collect()
    }

    #[test]
    fn sc_part_examples() {
        let t = make_tree(2, 3).unwrap();
        let g = gibbs_state(&t, &PotentialRule::WordLength.on(&t).unwrap(), 1.0).unwrap();
        let sc = sc_part(&[g.clone(), g.clone(), g.clone()]).unwrap();
        assert_eq!(sc.weights, g.weights());
        assert!(sc.residual.abs() < 1e-15);

        let critical = sc_part(&tree_gibbs_sequence(2f64.ln(), &[4, 8, 16])).unwrap();
        assert!(critical.weights.iter().all(|&w| w == 0.0));
        assert_eq!(critical.residual, 1.0);

        let beta = 4f64.ln();
        let sc = sc_part(&tree_gibbs_sequence(beta, &[8, 12, 16])).unwrap();
        let t6 = make_tree(2, 8).unwrap();
        for x in t6.ids() {
            let want = (-beta * t6.word(x).unwrap().len() as f64).exp() / 2.0;
            assert!((sc.weights[x] - want).abs() < 1e-8, "{x}: {} vs {want}", sc.weights[x]);
        }
        assert!(sc.residual < 2f64.powi(-8));
    }

    #[test]
    fn sc_part_reports_oscillation() {
        let a = DiagonalState::new(vec![0.5, 0.5], 0.0).unwrap();
        let b = DiagonalState::new(vec![0.6, 0.4], 0.0).unwrap();
        assert!(matches!(sc_part(&[a.clone(), b.clone(), a]), Err(Error::Divergence { .. })));
    }

    #[test]
    fn matrix_state_checks() {
        let x = make_interval(3).unwrap().into_shared();
        let rho = BandOperator::from_entries(
            x.clone(),
            [
                (0, 0, Complex64::new(0.5, 0.0)),
                (1, 1, Complex64::new(0.5, 0.0)),
                (0, 1, Complex64::new(0.1, 0.2)),
                (1, 0, Complex64::new(0.1, -0.2)),
            ],
        )
        .unwrap();
        let s = MatrixState::new(rho).unwrap();
        assert!((s.off_diagonal_mass() - 2.0 * 0.05f64.sqrt()).abs() < 1e-15);
        let e01 = BandOperator::matrix_unit(x.clone(), 0, 1).unwrap();
        assert_eq!(s.eval(&e01).unwrap(), Complex64::new(0.1, -0.2));
        let bad = BandOperator::from_entries(x, [(0, 0, Complex64::new(0.5, 0.0))]).unwrap();
        assert!(MatrixState::new(bad).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(DiagonalState::new(vec![0.5, 0.6], 0.0).is_err());
        assert!(DiagonalState::new(vec![-0.5, 1.5], 0.0).is_err());
        assert!(DiagonalState::new(vec![0.25, 0.25], 0.5).is_ok());
        assert!(DiagonalState::from_unnormalized(vec![0.0, 0.0]).is_err());
    }
}
