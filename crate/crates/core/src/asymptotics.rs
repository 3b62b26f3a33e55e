//! Diagnostics along truncation sequences: where `Z_D(β)` stops diverging,
//! thin sets, Higson variation and escaping mass.
//!
//! Partial sums are aggregated per level (`count · e^{−β h}`) in log space, so a
//! depth schedule can reach `2^16` levels on trees without materializing points.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::PotentialRule;
use crate::kms::DiagonalState;
use crate::numeric::{self, LogSumExp};
use crate::space::{FiniteSpace, TruncationSequence};

/// Last term below this fraction of the partial sum counts as converged.
pub const TAIL_TOL: f64 = 1e-9;

/// Growth factor across the final depth doubling that counts as divergence.
pub const GROWTH_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converges => "converges",
            Verdict::Diverges => "diverges",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub beta: f64,
    pub verdict: Verdict,
    /// `(D, log Z_D)` at each scheduled depth.
    pub log_partial_sums: Vec<(usize, f64)>,
    /// Last term over the partial sum at the final depth.
    pub tail_increment: f64,
    /// `Z_D / Z_{⌊D/2⌋}` at the final depth.
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub family: String,
    pub potential: String,
    /// Largest grid point judged divergent (0 when every grid point converges).
    pub lower: Option<f64>,
    /// Smallest grid point judged convergent.
    pub upper: Option<f64>,
    pub estimate: Option<f64>,
    /// False when verdicts are not of the form diverges…inconclusive…converges.
    pub monotone: bool,
    pub verdicts: Vec<ConvergenceVerdict>,
}

impl CriticalEstimate {
    pub fn bracket(&self) -> Option<(f64, f64)> {
        Some((self.lower?, self.upper?))
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["beta", "verdict", "log_z_final", "tail_increment", "growth"])?;
        for v in &self.verdicts {
            let log_z = v.log_partial_sums.last().map_or(f64::NAN, |p| p.1);
            w.write_record([
                numeric::fmt_f64(v.beta),
                v.verdict.to_string(),
                numeric::fmt_f64(log_z),
                numeric::fmt_f64(v.tail_increment),
                numeric::fmt_f64(v.growth),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `log` of the level-`ℓ` term `count(ℓ) e^{−β h(ℓ)}`, or `None` if the rule is not level-constant.
fn level_log_term(seq: TruncationSequence, rule: &PotentialRule, beta: f64, level: usize) -> Result<f64> {
    let count = seq.shell_log_count(level);
    if count == f64::NEG_INFINITY {
        return Ok(count);
    }
    let h = rule.shell_value(seq, level).ok_or_else(|| {
        Error::InvalidArgument(format!("potential {rule} is not constant on level {level} of {}", seq.name()))
    })?;
    // β·h with β = 0 and h = ±∞ would be NaN
    Ok(if beta == 0.0 { count } else { count - beta * h })
}

/// `log Z_D` for each depth in `depths` (any order), plus the last term at the largest depth.
pub fn log_partial_sums(
    seq: TruncationSequence,
    rule: &PotentialRule,
    beta: f64,
    depths: &[usize],
) -> Result<(Vec<(usize, f64)>, f64)> {
    let mut sorted = depths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let max = *sorted.last().ok_or_else(|| Error::InvalidArgument("empty depth schedule".into()))?;
    let mut acc = LogSumExp::new();
    let mut out = Vec::with_capacity(sorted.len());
    let mut next = sorted.iter().peekable();
    let mut last_term = f64::NEG_INFINITY;
    for level in 0..=max {
        last_term = level_log_term(seq, rule, beta, level)?;
        acc.push(last_term);
        while next.peek().is_some_and(|&&d| d == level) {
            out.push((level, acc.value()));
            next.next();
        }
    }
    Ok((out, last_term))
}

/// Judges convergence of `Σ e^{−βh}` along the sequence from partial sums up to `max(depths)`.
pub fn convergence_verdict(
    seq: TruncationSequence,
    rule: &PotentialRule,
    beta: f64,
    depths: &[usize],
) -> Result<ConvergenceVerdict> {
    let max = depths.iter().copied().max().ok_or_else(|| Error::InvalidArgument("empty depth schedule".into()))?;
    let mut schedule = depths.to_vec();
    schedule.push(max / 2);
    let (sums, last_term) = log_partial_sums(seq, rule, beta, &schedule)?;
    let log_final = sums.last().map_or(f64::NEG_INFINITY, |p| p.1);
    let log_half = sums.iter().find(|p| p.0 == max / 2).map_or(f64::NEG_INFINITY, |p| p.1);
    let tail_increment = (last_term - log_final).exp();
    let growth = (log_final - log_half).exp();
    let verdict = if tail_increment < TAIL_TOL {
        Verdict::Converges
    } else if growth >= GROWTH_FACTOR {
        Verdict::Diverges
    } else {
        Verdict::Inconclusive
    };
    let log_partial_sums = sums.into_iter().filter(|p| depths.contains(&p.0)).collect();
    Ok(ConvergenceVerdict { beta, verdict, log_partial_sums, tail_increment, growth })
}

/// Brackets the boundary between divergent and convergent `β` on an ascending grid.
///
/// `β = 0` always diverges on an infinite sequence, so an all-convergent grid
/// of positive values gives the estimate 0.
pub fn critical_beta(
    seq: TruncationSequence,
    rule: &PotentialRule,
    grid: &[f64],
    depths: &[usize],
) -> Result<CriticalEstimate> {
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("β grid must be ascending".into()));
    }
    let verdicts = grid
        .par_iter()
        .map(|&beta| convergence_verdict(seq, rule, beta, depths))
        .collect::<Result<Vec<_>>>()?;
    let rank = |v: Verdict| match v {
        Verdict::Diverges => 0,
        Verdict::Inconclusive => 1,
        Verdict::Converges => 2,
    };
    let monotone = verdicts.windows(2).all(|w| rank(w[0].verdict) <= rank(w[1].verdict));
    let mut lower = verdicts.iter().filter(|v| v.verdict == Verdict::Diverges).map(|v| v.beta).next_back();
    let upper = verdicts.iter().find(|v| v.verdict == Verdict::Converges).map(|v| v.beta);
    let all_converge = !verdicts.is_empty() && verdicts.iter().all(|v| v.verdict == Verdict::Converges);
    let estimate = if !monotone {
        None
    } else if all_converge && grid[0] > 0.0 {
        lower = Some(0.0);
        Some(0.0)
    } else {
        match (lower, upper) {
            (Some(l), Some(u)) => Some(0.5 * (l + u)),
            _ => None,
        }
    };
    Ok(CriticalEstimate {
        family: seq.name(),
        potential: rule.to_string(),
        lower,
        upper,
        estimate,
        monotone,
        verdicts,
    })
}

/// Ordered points with `d(x_k, x_ℓ) ≥ max_{i,j<ℓ} d(x_i, x_j) + ℓ` for all `k < ℓ` (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinSet {
    pub points: Vec<usize>,
}

impl ThinSet {
    /// Checks the gap rule exactly.
    pub fn is_valid(&self, space: &FiniteSpace) -> bool {
        let mut diam = 0.0f64;
        for (l0, &xl) in self.points.iter().enumerate() {
            let ell = (l0 + 1) as f64;
            if self.points[..l0].iter().any(|&xk| space.dist(xk, xl) < diam + ell) {
                return false;
            }
            for &xk in &self.points[..l0] {
                diam = diam.max(space.dist(xk, xl));
            }
        }
        true
    }

    /// Splits into the points at even and odd positions.
    pub fn even_odd(&self) -> (Vec<usize>, Vec<usize>) {
        let even = self.points.iter().step_by(2).copied().collect();
        let odd = self.points.iter().skip(1).step_by(2).copied().collect();
        (even, odd)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinSetResult {
    pub set: ThinSet,
    /// Set when the space ran out before `count` points were found.
    pub notice: Option<String>,
}

/// Greedy construction: each new point is the smallest admissible id.
pub fn build_thin_set(space: &FiniteSpace, count: usize) -> ThinSetResult {
    let mut points: Vec<usize> = Vec::with_capacity(count);
    let mut diam = 0.0f64;
    while points.len() < count {
        let ell = (points.len() + 1) as f64;
        let next = space
            .ids()
            .find(|&x| !points.contains(&x) && points.iter().all(|&p| space.dist(p, x) >= diam + ell));
        let Some(x) = next else {
            return ThinSetResult {
                notice: Some(format!("space exhausted after {} of {count} points", points.len())),
                set: ThinSet { points },
            };
        };
        for &p in &points {
            diam = diam.max(space.dist(p, x));
        }
        points.push(x);
    }
    ThinSetResult { set: ThinSet { points }, notice: None }
}

/// `(depth, Var(D))` with `Var(D) = max |f(x) − f(y)|` over `d(x, y) ≤ R`, both points of level `> D`.
pub fn higson_variation(
    space: &FiniteSpace,
    seq: TruncationSequence,
    f: &[f64],
    r: f64,
    depths: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if f.len() != space.len() {
        return Err(Error::Dimension { expected: space.len(), got: f.len() });
    }
    let levels: Vec<usize> = space.ids().map(|x| seq.level(x)).collect();
    let top = levels.iter().copied().max().unwrap_or(0);
    // best[m] = largest variation among pairs whose lower level is m
    let mut best = vec![0.0f64; top + 1];
    for x in space.ids() {
        for y in space.ball(x, r) {
            let m = levels[x].min(levels[y]);
            best[m] = best[m].max((f[x] - f[y]).abs());
        }
    }
    for m in (0..top).rev() {
        best[m] = best[m].max(best[m + 1]);
    }
    Ok(depths.iter().map(|&d| (d, best.get(d + 1).copied().unwrap_or(0.0))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitClass {
    /// Mass stays on finite sets: a Gibbs-type limit.
    StronglyContinuous,
    /// Every fixed point loses its weight: the limit vanishes on compact operators.
    CompactVanishing,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    pub depth: usize,
    /// Largest weight on the core `X_{D₀}` of the first depth.
    pub core_max_weight: f64,
    /// Mass outside `X_{⌊√D⌋}`, including mass at infinity.
    pub escaped_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassProfile {
    pub rows: Vec<MassRow>,
    pub class: LimitClass,
}

impl MassProfile {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["depth", "core_max_weight", "escaped_mass"])?;
        for r in &self.rows {
            w.write_record([r.depth.to_string(), numeric::fmt_f64(r.core_max_weight), numeric::fmt_f64(r.escaped_mass)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Tracks the core weights and the escaping mass of states on increasing depths.
pub fn mass_at_infinity_profile(seq: TruncationSequence, states: &[(usize, DiagonalState)]) -> Result<MassProfile> {
    if states.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidArgument("depths must increase".into()));
    }
    let first_depth = states.first().ok_or_else(|| Error::InvalidArgument("no states given".into()))?.0;
    let core_len = seq.size_at(first_depth).unwrap_or(0);
    let mut rows = Vec::with_capacity(states.len());
    for (depth, state) in states {
        if seq.size_at(*depth) != Some(state.len()) {
            return Err(Error::Dimension { expected: seq.size_at(*depth).unwrap_or(0), got: state.len() });
        }
        let core_max_weight = state.weights()[..core_len].iter().copied().fold(0.0, f64::max);
        let inner = seq.size_at((*depth as f64).sqrt().floor() as usize).unwrap_or(0).min(state.len());
        let kept = numeric::sum(state.weights()[..inner].iter().copied(), inner);
        rows.push(MassRow { depth: *depth, core_max_weight, escaped_mass: (1.0 - kept).max(0.0) });
    }
    let class = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if rows.len() >= 2 => {
            if b.escaped_mass <= 0.5 && b.escaped_mass <= a.escaped_mass {
                LimitClass::StronglyContinuous
            } else if b.escaped_mass > 0.5 && b.core_max_weight < a.core_max_weight {
                LimitClass::CompactVanishing
            } else {
                LimitClass::Undetermined
            }
        }
        _ => LimitClass::Undetermined,
    };
    Ok(MassProfile { rows, class })
}

/// CSV `depth,value` rows.
pub fn write_profile_csv<W: std::io::Write>(rows: &[(usize, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["depth", "value"])?;
    for (d, v) in rows {
        w.write_record([d.to_string(), numeric::fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kms::gibbs_state;
    use crate::space::{make_interval, make_tree};
    use crate::translation::{image_under, PartialTranslation, PointSet};
    use crate::tree::{tree_log_z, Cylinder, Word};

    fn doubling(max_pow: u32) -> Vec<usize> {
        (4..=max_pow).map(|k| 1usize << k).collect()
    }

    #[test]
    fn tree_bracket_contains_log_n() {
        for n in [2usize, 3] {
            let ln_n = (n as f64).ln();
            let grid: Vec<f64> = (-20..=20).map(|i| (ln_n * 1000.0).round() / 1000.0 + i as f64 * 0.001).collect();
            let est = critical_beta(TruncationSequence::Tree { n }, &PotentialRule::WordLength, &grid, &doubling(16))
                .unwrap();
            assert!(est.monotone);
            let (lo, hi) = est.bracket().unwrap();
            assert!(lo < ln_n && ln_n < hi, "{lo} {hi}");
            assert!(hi - lo <= 0.0025);
        }
    }

    #[test]
    fn tree_bracket_at_depth_2000() {
        let grid: Vec<f64> = (50..=90).map(|i| i as f64 * 0.01).collect();
        let est = critical_beta(TruncationSequence::Tree { n: 2 }, &PotentialRule::WordLength, &grid, &[500, 1000, 2000])
            .unwrap();
        let (lo, hi) = est.bracket().unwrap();
        assert!(lo < 2f64.ln() && 2f64.ln() < hi);
        assert!(hi - lo <= 0.02 + 1e-12);
    }

    #[test]
    fn squares_bracket_contains_one() {
        let grid: Vec<f64> = (1..=30).map(|i| i as f64 * 0.1).collect();
        let est =
            critical_beta(TruncationSequence::Squares, &PotentialRule::LogSqrtLabel, &grid, &[250_000, 500_000, 1_000_000])
                .unwrap();
        assert!(est.monotone);
        let (lo, hi) = est.bracket().unwrap();
        assert!(lo < 1.0 && 1.0 < hi, "{lo} {hi}");
    }

    #[test]
    fn geometric_toy_converges_everywhere() {
        let grid = [0.1, 0.5, 1.0, 2.0];
        let est = critical_beta(TruncationSequence::Interval, &PotentialRule::Label, &grid, &doubling(12)).unwrap();
        assert!(est.verdicts.iter().all(|v| v.verdict == Verdict::Converges));
        assert_eq!(est.estimate, Some(0.0));
    }

    #[test]
    fn negative_beta_diverges() {
        for (seq, rule) in [
            (TruncationSequence::Tree { n: 2 }, PotentialRule::WordLength),
            (TruncationSequence::Squares, PotentialRule::LogSqrtLabel),
            (TruncationSequence::Interval, PotentialRule::LogLabel),
        ] {
            for beta in [-2.0, -0.5, -0.01] {
                let v = convergence_verdict(seq, &rule, beta, &doubling(12)).unwrap();
                assert_eq!(v.verdict, Verdict::Diverges, "{} at {beta}", seq.name());
                assert!(v.log_partial_sums.windows(2).all(|w| w[1].1 > w[0].1));
            }
        }
    }

    #[test]
    fn non_level_constant_rule_is_rejected() {
        let r = convergence_verdict(TruncationSequence::Tree { n: 2 }, &PotentialRule::Label, 1.0, &[8]);
        assert!(r.is_err());
    }

    #[test]
    fn thin_sets() {
        let line = make_interval(200).unwrap();
        let t = build_thin_set(&line, 4);
        assert_eq!(t.set.points, vec![0, 2, 7, 18]);
        assert!(t.set.is_valid(&line));
        assert!(t.notice.is_none());
        assert_eq!(build_thin_set(&line, 1).set.points, vec![0]);
        let short = build_thin_set(&make_interval(10).unwrap(), 5);
        assert_eq!(short.set.points.len(), 3);
        assert!(short.notice.is_some());
        let bad = ThinSet { points: vec![0, 1] };
        assert!(!bad.is_valid(&line));
        let tree = make_tree(2, 9).unwrap();
        let ts = build_thin_set(&tree, 4);
        assert!(ts.set.is_valid(&tree));
    }

    #[test]
    fn thin_set_translates_meet_finitely() {
        let mut worst = Vec::new();
        for size in [1000, 5000] {
            let line = make_interval(size).unwrap().into_shared();
            let thin = build_thin_set(&line, 64).set;
            let (even, odd) = thin.even_odd();
            let a1: PointSet = even.into_iter().collect();
            let a2: PointSet = odd.into_iter().collect();
            let mut m = 0;
            for s in -10..=10 {
                for t in -10..=10 {
                    let f = PartialTranslation::shift(line.clone(), s);
                    let g = PartialTranslation::shift(line.clone(), t);
                    m = m.max(image_under(&f, &a1).intersection(&image_under(&g, &a2)).count());
                }
            }
            worst.push(m);
        }
        assert_eq!(worst[0], worst[1]);
        assert!(worst[0] <= 3);
    }

    #[test]
    fn higson_examples() {
        let seq = TruncationSequence::Tree { n: 2 };
        let t = make_tree(2, 10).unwrap();
        let depths: Vec<usize> = (0..10).collect();
        let constant = vec![0.3; t.len()];
        assert!(higson_variation(&t, seq, &constant, 2.0, &depths).unwrap().iter().all(|p| p.1 == 0.0));
        let y = Word::parse("12").unwrap();
        let cyl = Cylinder::new(y.clone()).points(2, 10);
        let chi: Vec<f64> = t.ids().map(|x| if cyl.contains(&x) { 1.0 } else { 0.0 }).collect();
        for r in [1.0, 2.0, 3.0] {
            let prof = higson_variation(&t, seq, &chi, r, &depths).unwrap();
            for (d, v) in prof {
                if d >= y.len() + r as usize {
                    assert_eq!(v, 0.0);
                }
            }
        }
        let line = make_interval(2000).unwrap();
        let sin: Vec<f64> = line.ids().map(|x| (x as f64).sin()).collect();
        let prof = higson_variation(&line, TruncationSequence::Interval, &sin, 1.0, &[0, 10, 100, 1000, 1990]).unwrap();
        assert!(prof.iter().all(|p| p.1 >= 0.5 * prof[0].1));
        assert!(prof[0].1 > 0.9);
    }

    fn tree_states(beta: f64, depths: &[usize]) -> Vec<(usize, DiagonalState)> {
        let seq = TruncationSequence::Tree { n: 2 };
        depths
            .iter()
            .map(|&d| {
                let t = seq.at(d).unwrap();
                (d, gibbs_state(&t, &PotentialRule::WordLength.on(&t).unwrap(), beta).unwrap())
            })
            .collect()
    }

    #[test]
    fn mass_profiles() {
        let seq = TruncationSequence::Tree { n: 2 };
        let depths = [4, 9, 16];
        let hot = mass_at_infinity_profile(seq, &tree_states(1.0, &depths)).unwrap();
        assert_eq!(hot.class, LimitClass::StronglyContinuous);
        assert!(hot.rows[2].escaped_mass < hot.rows[0].escaped_mass);
        // beyond enumerable depths the same quantity is 1 − Z_{√D}/Z_D
        let escaped = |d: usize| 1.0 - (tree_log_z(2, 1.0, (d as f64).sqrt() as usize) - tree_log_z(2, 1.0, d)).exp();
        assert!(escaped(10_000) < 1e-12 && escaped(400) < escaped(100));
        let crit = mass_at_infinity_profile(seq, &tree_states(2f64.ln(), &depths)).unwrap();
        assert_eq!(crit.class, LimitClass::CompactVanishing);
        assert!(crit.rows.windows(2).all(|w| w[1].core_max_weight < w[0].core_max_weight));
        // Z_D = D + 1 at the critical point
        for r in &crit.rows {
            assert!((r.core_max_weight - 1.0 / (r.depth as f64 + 1.0)).abs() < 1e-14);
        }
        let cold = mass_at_infinity_profile(seq, &tree_states(0.5, &depths)).unwrap();
        for (c, k) in cold.rows.iter().zip(&crit.rows) {
            assert!(c.core_max_weight < k.core_max_weight);
        }
    }
}
