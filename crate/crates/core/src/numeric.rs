//! Summation helpers shared by the partition-function and state code.

/// Largest exponent accepted before reporting overflow (`exp(709.78)` is the f64 limit).
pub const EXP_LIMIT: f64 = 700.0;

/// Sums beyond this many terms use Kahan compensation.
pub const KAHAN_THRESHOLD: usize = 10_000;

/// `log(sum(exp(xs)))`, computed around the maximum.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s = sum(xs.iter().map(|&x| (x - m).exp()), xs.len());
    m + s.ln()
}

/// Sums `len` terms in iteration order, compensated when `len` is large.
pub fn sum<I: IntoIterator<Item = f64>>(terms: I, len: usize) -> f64 {
    if len > KAHAN_THRESHOLD {
        kahan_sum(terms)
    } else {
        terms.into_iter().sum()
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for t in terms {
        let y = t - c;
        let next = s + y;
        c = (next - s) - y;
        s = next;
    }
    s
}

/// Streaming log-sum-exp accumulator: keeps `m + log(s)` with `s` rescaled as the max moves.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
    comp: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, scaled: 0.0, comp: 0.0 }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            let r = (self.max - x).exp();
            self.scaled *= r;
            self.comp *= r;
            self.max = x;
        }
        // Kahan step on the rescaled sum
        let y = (x - self.max).exp() - self.comp;
        let t = self.scaled + y;
        self.comp = (t - self.scaled) - y;
        self.scaled = t;
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Formats a float with 17 significant digits, locale-free.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else {
        format!("{}", x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_matches_naive_sum() {
        let xs = [0.1, -2.0, 3.5, 1.0];
        let naive: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((logsumexp(&xs) - naive).abs() < 1e-14);
    }

    #[test]
    fn logsumexp_survives_large_exponents() {
        let v = logsumexp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn streaming_matches_batch() {
        let xs: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin() * 40.0).collect();
        let mut acc = LogSumExp::new();
        for &x in &xs {
            acc.push(x);
        }
        assert!((acc.value() - logsumexp(&xs)).abs() < 1e-12);
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let terms = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 100_000));
        let s = kahan_sum(terms);
        assert!((s - (1.0 + 1e-11)).abs() < 1e-15);
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, -1e-300] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
