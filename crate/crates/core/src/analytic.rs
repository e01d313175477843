//! Closed-form bias and mean squared error of the difference estimators
//! under a step signal with quadratic variation `J_K` and Gaussian
//! m-dependent noise.
//!
//! Two normalisations are offered for the assembled MSE. [`Normalization::Exact`]
//! uses the number of summands `n_m = n - 2(m+1)` and is exact in finite
//! samples (given the jump separation condition); [`Normalization::Asymptotic`]
//! replaces every `n_m` by `n`, which is the form usually quoted.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::signal::Acvf;

/// Bias factor of the variance estimator: `E[gamma0(d)] = gamma_0 + q0 J_K / n_m`.
pub fn q0(m: usize, d: f64) -> f64 {
    (m as f64 + 1.0) * (d * d + 1.0) / (2.0 * (d * d + d + 1.0))
}

fn n_m(m: usize, n: usize) -> Result<f64> {
    if n <= 2 * (m + 1) {
        return domain(format!("need n > 2(m+1) = {}, got {n}", 2 * (m + 1)));
    }
    Ok((n - 2 * (m + 1)) as f64)
}

/// Exact bias of `gamma0_hat(., m, d)` for a signal with quadratic variation `jk`.
pub fn bias_gamma0(m: usize, d: f64, jk: f64, n: usize) -> Result<f64> {
    Ok(q0(m, d) * jk / n_m(m, n)?)
}

/// Exact bias of `gammah_hat(., m, h, d)`:
/// `q0 J_K / n_m - h J_K / (2(n-h))`.
pub fn bias_gammah(m: usize, h: usize, d: f64, jk: f64, n: usize) -> Result<f64> {
    check_lag(m, h)?;
    Ok(q0(m, d) * jk / n_m(m, n)? - h as f64 * jk / (2.0 * (n - h) as f64))
}

/// Common-`n` form of [`bias_gammah`]: `(q0(m, d) - h/2) J_K / n`.
pub fn bias_gammah_asymptotic(m: usize, h: usize, d: f64, jk: f64, n: usize) -> Result<f64> {
    check_lag(m, h)?;
    n_m(m, n)?;
    Ok((q0(m, d) - h as f64 / 2.0) * jk / n as f64)
}

fn check_lag(m: usize, h: usize) -> Result<()> {
    if h == 0 || h > m {
        return domain(format!("lag h = {h} must satisfy 1 <= h <= m = {m}"));
    }
    Ok(())
}

/// Signal-noise variance coefficient `p1(d; gamma)`: the signal-noise cross
/// term of the variance is `p1 gamma_0 J_K / n_m^2`.
///
/// Computed exactly as `[Psi(0) T_0 + 2 sum_{r>=1} Psi(r) T_r] / ((d^2+d+1)^2 gamma_0)`.
/// The familiar polynomial form ([`p1_published`]) agrees with this only at
/// `d = 0`.
pub fn p1(d: f64, acvf: &Acvf) -> f64 {
    let m = acvf.m();
    let q = d * d + d + 1.0;
    let cross: f64 = (1..=2 * m + 1)
        .map(|r| psi(r, d, acvf) * signal_factor_t(m, d, r))
        .sum();
    (psi(0, d, acvf) * signal_factor_t(m, d, 0) + 2.0 * cross) / (q * q * acvf.gamma()[0])
}

/// The polynomial `[2(m+1)(d^4+1) + 2 sum_h q_h(d) rho_h] / (d^2+d+1)^2` with
/// `q_h(d) = [2(m+1) - 3h](d^4+1) + d^2 h`.
///
/// It is what [`p1`] becomes when the linear-in-`d` terms of `T_r` change
/// sign, so it is exact only for `d = 0`. Kept for comparison.
pub fn p1_published(d: f64, acvf: &Acvf) -> f64 {
    let m = acvf.m();
    let rho = acvf.rho();
    let d2 = d * d;
    let d4 = d2 * d2;
    let q = d2 + d + 1.0;
    let tail: f64 = (1..=m)
        .map(|h| {
            let qh = (2.0 * (m as f64 + 1.0) - 3.0 * h as f64) * (d4 + 1.0) + d2 * h as f64;
            qh * rho[h]
        })
        .sum();
    (2.0 * (m as f64 + 1.0) * (d4 + 1.0) + 2.0 * tail) / (q * q)
}

/// Covariance of the noise parts of two second-order differences `r` apart:
/// `E[eta_i(d) eta_{i+r}(d)]`.
pub fn psi(r: usize, d: f64, acvf: &Acvf) -> f64 {
    let k = acvf.m() + 1;
    let p = 2.0 * (d * d + d + 1.0);
    p * acvf.at(r) - (1.0 + d).powi(2) * acvf.at(r.abs_diff(k)) + d * acvf.at(r.abs_diff(2 * k))
}

/// Excess fourth-moment term `Lambda_r(d; gamma) = E[eta_i^2 eta_{i+r}^2] - E[eta^2]^2`.
/// Vanishes for `r >= 3(m+1)`.
pub fn lambda_r(d: f64, acvf: &Acvf, r: usize) -> f64 {
    let k = acvf.m() + 1;
    let gh = acvf.at(r);
    let ga = acvf.at(r.abs_diff(k));
    let gb = acvf.at(r.abs_diff(2 * k));
    let q = d * d + d + 1.0;
    let dp = 1.0 + d;
    8.0 * q * q * gh * gh + 2.0 * dp.powi(4) * ga * ga + 2.0 * d * d * gb * gb
        - 4.0 * dp * (dp.powi(3) + (d.powi(3) + d * d + d + 1.0)) * gh * ga
        - 4.0 * d * dp * dp * ga * gb
}

fn lambda_sums(d: f64, acvf: &Acvf) -> (f64, f64) {
    let g0sq = acvf.gamma()[0].powi(2);
    (1..=3 * acvf.m() + 2).fold((0.0, 0.0), |(s, w), r| {
        let l = lambda_r(d, acvf, r) / g0sq;
        (s + l, w + r as f64 * l)
    })
}

/// Leading noise variance coefficient: `VAR ~ p2 gamma_0^2 / n_m`.
pub fn p2(d: f64, acvf: &Acvf) -> f64 {
    let q = d * d + d + 1.0;
    let p = 2.0 * q;
    let (s, _) = lambda_sums(d, acvf);
    (p * p + s) / (2.0 * q * q)
}

/// Second-order noise variance coefficient: `-2 sum_r r Lambda_r / (P^2 gamma_0^2)`
/// with `P = 2(d^2+d+1)`.
pub fn p3(d: f64, acvf: &Acvf) -> f64 {
    let p = 2.0 * (d * d + d + 1.0);
    let (_, w) = lambda_sums(d, acvf);
    -2.0 * w / (p * p)
}

/// How the sample size enters the assembled MSE.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Divide by `n_m = n - 2(m+1)`; exact for separated step signals.
    #[default]
    Exact,
    /// Divide by `n`.
    Asymptotic,
}

/// Bias/variance decomposition of `MSE[gamma0_hat(d)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mse0Breakdown {
    pub bias2: f64,
    /// `p1 gamma_0 J_K / N^2`
    pub var_signal: f64,
    /// `p2 gamma_0^2 / N`
    pub var_noise: f64,
    /// `p3 gamma_0^2 / N^2`
    pub var_remainder: f64,
    pub total: f64,
}

pub fn mse_gamma0(
    d: f64,
    acvf: &Acvf,
    jk: f64,
    n: usize,
    norm: Normalization,
) -> Result<Mse0Breakdown> {
    let m = acvf.m();
    let nm = n_m(m, n)?;
    let big_n = match norm {
        Normalization::Exact => nm,
        Normalization::Asymptotic => n as f64,
    };
    let g0 = acvf.gamma()[0];
    let bias2 = (q0(m, d) * jk / big_n).powi(2);
    let var_signal = p1(d, acvf) * g0 * jk / (big_n * big_n);
    let var_noise = p2(d, acvf) * g0 * g0 / big_n;
    let var_remainder = p3(d, acvf) * g0 * g0 / (big_n * big_n);
    Ok(Mse0Breakdown {
        bias2,
        var_signal,
        var_noise,
        var_remainder,
        total: bias2 + var_signal + var_noise + var_remainder,
    })
}

/// Signal-dependent part of the MSE of `gamma0_hat(d)`:
/// `n^-2 [q0^2 (n/n_m)^2 J_K^2 + p1 gamma_0 J_K]`.
pub fn extended_bias_gamma0(d: f64, acvf: &Acvf, jk: f64, n: usize) -> Result<f64> {
    let m = acvf.m();
    let nm = n_m(m, n)?;
    let nf = n as f64;
    Ok((q0(m, d) * jk / nm).powi(2) + p1(d, acvf) * acvf.gamma()[0] * jk / (nf * nf))
}

/// `F_h` with `E[D_h] = F_h J_K`: the variance of the noise collected by the
/// `h` gap-`h` differences straddling one jump, i.e. the variance of the
/// difference of two adjacent length-`h` block sums.
pub fn f_h(acvf: &Acvf, h: usize) -> f64 {
    let block = h as f64 * acvf.at(0)
        + 2.0 * (1..h).map(|k| (h - k) as f64 * acvf.at(k)).sum::<f64>();
    let cross: f64 = (1..2 * h)
        .map(|k| (h - h.abs_diff(k)) as f64 * acvf.at(k))
        .sum();
    2.0 * block - 2.0 * cross
}

/// `V_h = sum_{s=0}^{m} sum_{t=1}^{h} gamma_{s+t} - sum_{s=1}^{m+1} sum_{t=1}^{h} gamma_{|t-s|}`.
pub fn v_h(acvf: &Acvf, h: usize) -> f64 {
    let m = acvf.m();
    let mut v = 0.0;
    for t in 1..=h {
        for s in 0..=m {
            v += acvf.at(s + t);
        }
        for s in 1..=m + 1 {
            v -= acvf.at(t.abs_diff(s));
        }
    }
    v
}

/// `T_r(d)` with `sum_i delta_i(d) delta_{i+r}(d) = T_r(d) J_K` for the
/// signal part `delta_i(d) = f_i - (1+d) f_{i+m+1} + d f_{i+2(m+1)}`.
pub fn signal_factor_t(m: usize, d: f64, r: usize) -> f64 {
    let k = m + 1;
    // around one unit jump delta_i is d on k consecutive indices, then -1 on k
    if r <= m {
        (k - r) as f64 * d * d - r as f64 * d + (k - r) as f64
    } else if r < 2 * k {
        -d * (2 * k - r) as f64
    } else {
        0.0
    }
}
