//! Difference-based autocovariance estimators.
//!
//! For m-dependent errors the variance is estimated from second-order
//! differences of gap `m+1`,
//!
//! ```text
//! gamma0(d) = 1 / (2 n_m (1+d+d^2)) * sum_{i=1}^{n_m} (y_i - (1+d) y_{i+m+1} + d y_{i+2(m+1)})^2
//! ```
//!
//! with `n_m = n - 2(m+1)`, and the remaining lags as
//! `gamma_h(d) = gamma0(d) - delta_h` where `delta_h` is the ordinary gap-`h`
//! difference estimator. The free weight `d` is chosen per lag to minimise the
//! signal-induced bias (see [`optimal_weight`]).

use serde::{Deserialize, Serialize};

use crate::error::{domain, DbacfError, Result};
use crate::signal::{Acvf, Series};

/// Which root of the bias equation to use on the `3h >= 2(m+1)` branch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeightRoot {
    /// `(h - sqrt(h^2 - 4(m+1-h)^2)) / (2(m+1-h))`, lies in `(0, 1]`.
    #[default]
    Smaller,
    Larger,
}

/// How the free weight `d` is picked for each lag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightRule {
    /// `d = 1` for the variance and `d = d_{h,m}` for lag `h`.
    Optimal(WeightRoot),
    /// The same `d` for every lag (including the variance).
    Fixed(f64),
}

impl Default for WeightRule {
    fn default() -> Self {
        WeightRule::Optimal(WeightRoot::Smaller)
    }
}

/// An autocovariance estimate with the weights that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcvfEstimate {
    pub acvf: Acvf,
    /// `weights_used[h]` is the `d` used for lag `h`; index 0 is the variance.
    pub weights_used: Vec<f64>,
    pub n: usize,
}

/// Ordinary difference estimator of gap `h`:
/// `sum_{i=1}^{n-h} (y_i - y_{i+h})^2 / (2(n-h))`.
pub fn ordinary_diff(y: &Series, h: usize) -> Result<f64> {
    let v = y.values();
    let n = v.len();
    if h == 0 || h >= n {
        return domain(format!("gap h = {h} must satisfy 1 <= h < n = {n}"));
    }
    let ss: f64 = v.iter().zip(&v[h..]).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(ss / (2.0 * (n - h) as f64))
}

/// Second-order difference estimator of the variance with gap `m+1` and
/// weight `d`.
pub fn gamma0_hat(y: &Series, m: usize, d: f64) -> Result<f64> {
    let v = y.values();
    let n = v.len();
    let gap = m + 1;
    if n <= 2 * gap {
        return domain(format!(
            "need n > 2(m+1) = {} observations, got {n}",
            2 * gap
        ));
    }
    let nm = n - 2 * gap;
    let ss: f64 = (0..nm)
        .map(|i| (v[i] - (1.0 + d) * v[i + gap] + d * v[i + 2 * gap]).powi(2))
        .sum();
    Ok(ss / (2.0 * nm as f64 * (1.0 + d + d * d)))
}

/// `gamma0_hat(y, m, d) - ordinary_diff(y, h)` for `1 <= h <= m`.
pub fn gammah_hat(y: &Series, m: usize, h: usize, d: f64) -> Result<f64> {
    if h == 0 || h > m {
        return domain(format!("lag h = {h} must satisfy 1 <= h <= m = {m}"));
    }
    Ok(gamma0_hat(y, m, d)? - ordinary_diff(y, h)?)
}

/// Bias-optimal weight `d_{h,m}` (smaller root on the second branch).
pub fn optimal_weight(m: usize, h: usize) -> f64 {
    optimal_weight_root(m, h, WeightRoot::Smaller)
}

/// `d_{h,m}`: 1 when `3h < 2(m+1)`, otherwise a root of `q0(m, d) = h/2`.
pub fn optimal_weight_root(m: usize, h: usize, root: WeightRoot) -> f64 {
    assert!(h <= m, "lag {h} exceeds dependence order {m}");
    if 3 * h < 2 * (m + 1) {
        return 1.0;
    }
    let h = h as f64;
    let c = (m + 1) as f64 - h;
    // non-negative exactly on this branch; clamp rounding noise
    let disc = (h * h - 4.0 * c * c).max(0.0).sqrt();
    match root {
        WeightRoot::Smaller => (h - disc) / (2.0 * c),
        WeightRoot::Larger => (h + disc) / (2.0 * c),
    }
}

/// Estimate of `gamma_0..gamma_m` under the given weight rule.
pub fn estimate(y: &Series, m: usize, rule: WeightRule) -> Result<AcvfEstimate> {
    let weights: Vec<f64> = (0..=m)
        .map(|h| match rule {
            WeightRule::Optimal(root) => {
                if h == 0 {
                    1.0
                } else {
                    optimal_weight_root(m, h, root)
                }
            }
            WeightRule::Fixed(d) => d,
        })
        .collect();
    let mut gamma = Vec::with_capacity(m + 1);
    gamma.push(gamma0_hat(y, m, weights[0])?);
    for (h, &d) in weights.iter().enumerate().skip(1) {
        gamma.push(gammah_hat(y, m, h, d)?);
    }
    Ok(AcvfEstimate {
        acvf: Acvf::unchecked(gamma)?,
        weights_used: weights,
        n: y.len(),
    })
}

/// Bias-optimised estimate: `d = 1` for the variance, `d_{h,m}` for lag `h`.
pub fn dbacf(y: &Series, m: usize) -> Result<AcvfEstimate> {
    estimate(y, m, WeightRule::default())
}

/// Autocorrelations `gamma_h / gamma_0`. Fails when the variance estimate is
/// not positive.
pub fn acf_from_estimate(e: &AcvfEstimate) -> Result<Vec<f64>> {
    let g = e.acvf.gamma();
    if g[0] <= 0.0 {
        return Err(DbacfError::Numeric(format!(
            "degenerate variance estimate {}",
            g[0]
        )));
    }
    Ok(g.iter().map(|x| x / g[0]).collect())
}
