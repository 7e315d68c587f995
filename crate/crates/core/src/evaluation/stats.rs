//! Descriptive statistics and the two significance tests used by the
//! pipeline: Welch's two-sample t-test and the Wilcoxon signed-rank test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (`n - 1` denominator); zero for fewer than two
/// values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Median of the finite values; `None` when there are none.
pub fn median(xs: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

/// Two-sided Welch t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput("t-test needs at least two samples per group".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite value in t-test sample".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (sa, sb) = (variance(a) / na, variance(b) / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let equal = ma == mb;
        return Ok(TTestResult {
            statistic: if equal { 0.0 } else { f64::INFINITY.copysign(ma - mb) },
            dof: na + nb - 2.0,
            p_value: if equal { 1.0 } else { 0.0 },
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::Numeric(format!("t distribution: {e}")))?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(TTestResult {
        statistic: t,
        dof,
        p_value: p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `a` tends to exceed `b`.
    Greater,
    Less,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    /// Exact for at most [`WILCOXON_EXACT_MAX_N`] non-zero differences.
    Auto,
    Exact,
    Normal,
}

pub const WILCOXON_EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub w_plus: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Midranks (1-based) of `values`; tied values share the mean of their ranks.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Null distribution of twice the positive-rank sum, by enumeration of all
/// sign assignments. Entry `s` is the probability that `2 * W+ == s`.
pub fn signed_rank_null_pmf(doubled_ranks: &[u64]) -> Vec<f64> {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0.0_f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0.0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let denom = 2f64.powi(doubled_ranks.len() as i32);
    counts.iter().map(|c| c / denom).collect()
}

/// Paired Wilcoxon signed-rank test of `a - b`.
///
/// Zero differences are dropped and ties get midranks. With no non-zero
/// differences the p-value is 1.
pub fn wilcoxon_test(a: &[f64], b: &[f64], alternative: Alternative) -> Result<WilcoxonResult> {
    wilcoxon_test_with(a, b, alternative, WilcoxonMethod::Auto)
}

pub fn wilcoxon_test_with(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    method: WilcoxonMethod,
) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numeric("non-finite paired difference".into()));
    }
    let n = diffs.len();
    let method = match method {
        WilcoxonMethod::Auto if n <= WILCOXON_EXACT_MAX_N => WilcoxonMethod::Exact,
        WilcoxonMethod::Auto => WilcoxonMethod::Normal,
        m => m,
    };
    if n == 0 {
        return Ok(WilcoxonResult {
            w_plus: 0.0,
            n,
            p_value: 1.0,
            method,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let p_value = match method {
        WilcoxonMethod::Exact => {
            let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
            let pmf = signed_rank_null_pmf(&doubled);
            let obs = (2.0 * w_plus).round() as usize;
            let upper: f64 = pmf[obs..].iter().sum();
            let lower: f64 = pmf[..=obs].iter().sum();
            match alternative {
                Alternative::Greater => upper,
                Alternative::Less => lower,
                Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
            }
        }
        _ => {
            let nf = n as f64;
            let mu = nf * (nf + 1.0) / 4.0;
            let mut tie_term = 0.0;
            let mut sorted = abs.clone();
            sorted.sort_by(f64::total_cmp);
            let mut i = 0;
            while i < sorted.len() {
                let mut j = i + 1;
                while j < sorted.len() && sorted[j] == sorted[i] {
                    j += 1;
                }
                let t = (j - i) as f64;
                tie_term += t * t * t - t;
                i = j;
            }
            let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
            let sd = var.sqrt();
            match alternative {
                Alternative::Greater => 1.0 - normal_cdf((w_plus - mu - 0.5) / sd),
                Alternative::Less => normal_cdf((w_plus - mu + 0.5) / sd),
                Alternative::TwoSided => {
                    let z = ((w_plus - mu).abs() - 0.5).max(0.0) / sd;
                    (2.0 * (1.0 - normal_cdf(z))).min(1.0)
                }
            }
        }
    };
    Ok(WilcoxonResult {
        w_plus,
        n,
        p_value: p_value.clamp(0.0, 1.0),
        method,
    })
}

/// `ln C(n, k)`.
fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `P(X >= k)` and `P(X <= k)` for `X ~ Binomial(n, p)`, summed term by term
/// so that tiny tails keep their precision.
pub fn binomial_tails(n: u64, k: u64, p: f64) -> (f64, f64) {
    let term = |i: u64| -> f64 {
        if p == 0.0 {
            return if i == 0 { 1.0 } else { 0.0 };
        }
        if p == 1.0 {
            return if i == n { 1.0 } else { 0.0 };
        }
        (ln_choose(n, i) + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp()
    };
    let upper: f64 = (k..=n).map(term).sum();
    let lower: f64 = (0..=k.min(n)).map(term).sum();
    (upper.min(1.0), lower.min(1.0))
}
