//! Fisher–Pitman exact permutation test.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest pooled sample size enumerated exactly.
pub const MAX_POOLED: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignificanceResult {
    /// `mean(B) − mean(A)`.
    pub observed: f64,
    /// One-sided: probability that a random split is at least as favourable
    /// to B as the observed one.
    pub p_value: f64,
    pub splits: u64,
    pub at_least_as_large: u64,
}

/// Enumerates every split of the pooled values into samples of sizes
/// `|A|` and `|B|` and counts those whose mean difference reaches the
/// observed one (ties included).
pub fn fisher_pitman(a: &[f64], b: &[f64]) -> Result<SignificanceResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Significance("both samples must be non-empty".into()));
    }
    let n = a.len() + b.len();
    if n > MAX_POOLED {
        return Err(Error::Significance(format!(
            "pooled size {n} exceeds the exact-enumeration limit of {MAX_POOLED}; use an approximate test for larger samples"
        )));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::Significance("samples must be finite".into()));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let observed = mean(b) - mean(a);
    // With the pooled total fixed, the mean difference is increasing in the
    // sum of the B-side values, so comparing sums is equivalent.
    let target: f64 = b.iter().sum();
    let scale = pooled.iter().fold(1.0f64, |m, x| m.max(x.abs())) * n as f64;
    let threshold = target - 1e-9 * scale;
    let mut count = 0u64;
    let mut splits = 0u64;
    enumerate(&pooled, 0, b.len(), 0.0, threshold, &mut count, &mut splits);
    Ok(SignificanceResult {
        observed,
        p_value: count as f64 / splits as f64,
        splits,
        at_least_as_large: count,
    })
}

fn enumerate(xs: &[f64], start: usize, k: usize, sum: f64, threshold: f64, count: &mut u64, splits: &mut u64) {
    if k == 0 {
        *splits += 1;
        if sum >= threshold {
            *count += 1;
        }
        return;
    }
    for i in start..=xs.len() - k {
        enumerate(xs, i + 1, k - 1, sum + xs[i], threshold, count, splits);
    }
}

/// Parses one real per line, ignoring blank lines and `#` comments.
pub fn read_sample(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::format(i + 1, format!("not a number: {:?}", l.trim())))
        })
        .collect()
}
