//! MA(m) models: exact autocovariance and fitting by the innovations
//! algorithm.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DbacfError, Result};
use crate::signal::Acvf;

pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Grid used for spectral checks when the caller has no preference.
pub const DEFAULT_GRID: usize = 4096;
/// Spectral minimum below `NEAR_BOUNDARY * gamma_0` flags a fit as near the
/// non-invertible boundary.
pub const NEAR_BOUNDARY: f64 = 1e-6;

/// `e_i = sum_{j=0..m} theta_j delta_{i-j}` with `theta_0 = 1` and
/// `Var(delta) = sigma2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct MaModel {
    pub theta: Vec<f64>,
    pub sigma2: f64,
}

#[derive(Deserialize)]
struct RawModel {
    theta: Vec<f64>,
    sigma2: f64,
}

impl TryFrom<RawModel> for MaModel {
    type Error = DbacfError;
    fn try_from(r: RawModel) -> Result<Self> {
        MaModel::new(r.theta, r.sigma2)
    }
}

impl MaModel {
    pub fn new(theta: Vec<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return invalid(format!("innovation variance must be positive, got {sigma2}"));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return invalid("MA coefficients must be finite");
        }
        Ok(Self { theta, sigma2 })
    }

    pub fn white(sigma2: f64) -> Result<Self> {
        Self::new(Vec::new(), sigma2)
    }

    pub fn m(&self) -> usize {
        self.theta.len()
    }

    /// `(1, theta_1, ..., theta_m)`.
    pub fn coefficients(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.theta.iter().copied()).collect()
    }

    /// True when every root of `1 + theta_1 z + ... + theta_m z^m` lies
    /// strictly outside the unit circle.
    pub fn is_invertible(&self) -> bool {
        // trailing zero coefficients lower the degree without adding roots
        let deg = self.theta.iter().rposition(|t| *t != 0.0).map_or(0, |i| i + 1);
        if deg == 0 {
            return true;
        }
        // z is a root iff w = 1/z is a root of w^deg + theta_1 w^(deg-1) + ... + theta_deg,
        // so invertibility means every eigenvalue of that companion matrix is inside the disc.
        let mut c = DMatrix::<f64>::zeros(deg, deg);
        for j in 0..deg {
            c[(0, j)] = -self.theta[j];
        }
        for i in 1..deg {
            c[(i, i - 1)] = 1.0;
        }
        c.complex_eigenvalues().iter().all(|w| w.norm() < 1.0)
    }
}

/// Result of [`ma_from_acvf`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaFit {
    pub model: MaModel,
    pub iterations: usize,
    /// `max_h |acvf_from_ma(model)_h - gamma_h|`.
    pub residual: f64,
    /// Spectral minimum within `1e-6 * gamma_0` of zero.
    pub near_boundary: bool,
    pub invertible: bool,
}

/// `gamma_h = sigma2 * sum_{j=0..m-h} theta_j theta_{j+h}`.
pub fn acvf_from_ma(model: &MaModel) -> Acvf {
    let c = model.coefficients();
    let m = model.m();
    let gamma = (0..=m)
        .map(|h| model.sigma2 * (0..=m - h).map(|j| c[j] * c[j + h]).sum::<f64>())
        .collect();
    // gamma_0 >= sigma2 > 0, so the checked constructor cannot fail
    Acvf::unchecked(gamma).expect("finite autocovariance")
}

/// `gamma_0 + 2 sum_h gamma_h cos(h lambda)` (spectral density up to `2 pi`).
pub fn spectral_density(acvf: &Acvf, lambda: f64) -> f64 {
    let g = acvf.gamma();
    g[0] + 2.0 * (1..g.len()).map(|h| g[h] * (h as f64 * lambda).cos()).sum::<f64>()
}

/// Minimum of [`spectral_density`] over `grid_size` equispaced points of
/// `[-pi, pi]` (endpoints included).
pub fn spectral_min(acvf: &Acvf, grid_size: usize) -> f64 {
    let k = grid_size.max(2);
    (0..k)
        .map(|i| spectral_density(acvf, -PI + 2.0 * PI * i as f64 / (k - 1) as f64))
        .fold(f64::INFINITY, f64::min)
}

/// Non-negativity of the implied spectral density on a grid, with a relative
/// slack of `1e-12 * gamma_0`.
pub fn validate_acvf(acvf: &Acvf, grid_size: usize) -> bool {
    acvf.gamma()[0] > 0.0 && spectral_min(acvf, grid_size) >= -1e-12 * acvf.gamma()[0]
}

/// Fit an MA(m) model matching `acvf` by running the innovations algorithm
/// until the coefficients settle.
///
/// For an m-dependent series only `theta_{n,1..m}` are non-zero, so each step
/// costs `O(m^2)`. Stops when the coefficient and variance changes are at most
/// `tol` (variance relative to `gamma_0`) and the roundtrip autocovariance
/// agrees with the input to `tol * max(1, gamma_0)`.
pub fn ma_from_acvf(acvf: &Acvf, max_iter: usize, tol: f64) -> Result<MaFit> {
    if !(tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    let g0 = acvf.gamma()[0];
    if !(g0 > 0.0) {
        return invalid(format!("gamma_0 must be positive, got {g0}"));
    }
    if !validate_acvf(acvf, DEFAULT_GRID) {
        return invalid("autocovariance has a negative spectral density; not an MA(m) autocovariance");
    }
    let m = acvf.m();
    let near_boundary = spectral_min(acvf, DEFAULT_GRID) <= NEAR_BOUNDARY * g0;
    let scale = g0.max(1.0);
    if m == 0 {
        let model = MaModel::white(g0)?;
        return Ok(MaFit { model, iterations: 0, residual: 0.0, near_boundary, invertible: true });
    }

    // thetas[k][j-1] = theta_{k,j}, kept for the last m+1 steps only.
    let mut hist_theta: Vec<Vec<f64>> = vec![vec![0.0; m]];
    let mut hist_v: Vec<f64> = vec![g0];
    let mut residual = f64::INFINITY;
    for n in 1..=max_iter {
        let mut th = vec![0.0; m];
        let len = hist_v.len();
        // hist index of step k is k - (n - len)
        let base = n - len;
        // theta_{n,n-k} for k = max(0, n-m) .. n-1
        for k in n.saturating_sub(m)..n {
            let mut s = acvf.at(n - k);
            for j in n.saturating_sub(m)..k {
                if k - j <= m {
                    s -= hist_theta[k - base][k - j - 1] * th[n - j - 1] * hist_v[j - base];
                }
            }
            let vk = hist_v[k - base];
            if !(vk > 0.0) {
                return Err(DbacfError::Numeric(format!(
                    "innovation variance vanished at step {k}"
                )));
            }
            th[n - k - 1] = s / vk;
        }
        let v = g0 - (n.saturating_sub(m)..n).map(|j| th[n - j - 1].powi(2) * hist_v[j - base]).sum::<f64>();
        if !(v > 0.0) {
            return Err(DbacfError::Numeric(format!(
                "innovation variance became non-positive ({v:e}) at step {n}"
            )));
        }
        let prev = hist_theta.last().expect("history is non-empty");
        let change = th
            .iter()
            .zip(prev)
            .map(|(a, b)| (a - b).abs())
            .fold((v - hist_v[len - 1]).abs() / g0, f64::max);
        hist_theta.push(th);
        hist_v.push(v);
        if hist_v.len() > m + 1 {
            hist_theta.remove(0);
            hist_v.remove(0);
        }
        if change <= tol {
            let model = MaModel::new(hist_theta.last().cloned().unwrap_or_default(), v)?;
            residual = max_abs_diff(acvf_from_ma(&model).gamma(), acvf.gamma());
            if residual <= tol * scale {
                let invertible = model.is_invertible();
                return Ok(MaFit { model, iterations: n, residual, near_boundary, invertible });
            }
        }
    }
    if !residual.is_finite() {
        let th = hist_theta.last().cloned().unwrap_or_default();
        let v = *hist_v.last().expect("history is non-empty");
        residual = max_abs_diff(acvf_from_ma(&MaModel { theta: th, sigma2: v }).gamma(), acvf.gamma());
    }
    Err(DbacfError::Convergence { iterations: max_iter, residual })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Random invertible MA(m): real roots and conjugate pairs with modulus in
    /// [1.2, 3], expanded into `prod (1 - z / r)`.
    pub(crate) fn random_invertible(rng: &mut impl Rng, m: usize) -> MaModel {
        let mut poly = vec![1.0];
        let mut left = m;
        while left > 0 {
            let r: f64 = rng.random_range(1.2..3.0);
            if left >= 2 && rng.random_bool(0.5) {
                let phi: f64 = rng.random_range(0.1..PI - 0.1);
                // (1 - z/w)(1 - z/conj w) = 1 - 2 cos(phi)/r z + z^2/r^2
                poly = mul(&poly, &[1.0, -2.0 * phi.cos() / r, 1.0 / (r * r)]);
                left -= 2;
            } else {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                poly = mul(&poly, &[1.0, -sign / r]);
                left -= 1;
            }
        }
        MaModel::new(poly[1..].to_vec(), rng.random_range(0.2..3.0)).unwrap()
    }

    fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn acvf_examples() {
        let g = acvf_from_ma(&MaModel::new(vec![0.5], 1.0).unwrap());
        assert_eq!(g.gamma(), &[1.25, 0.5]);
        assert_eq!(acvf_from_ma(&MaModel::white(2.0).unwrap()).gamma(), &[2.0]);
        let g = acvf_from_ma(&MaModel::new(vec![0.0; 3], 1.7).unwrap());
        assert_eq!(g.gamma(), &[1.7, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn fit_ma1_closed_form() {
        let fit = ma_from_acvf(&Acvf::new(vec![1.25, 0.5]).unwrap(), DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let rho: f64 = 0.4;
        let theta = (1.0 - (1.0 - 4.0 * rho * rho).sqrt()) / (2.0 * rho);
        assert!((theta - 0.5).abs() < 1e-15);
        assert!((fit.model.theta[0] - theta).abs() < 1e-9);
        assert!((fit.model.sigma2 - 1.0).abs() < 1e-9);
        assert!(fit.invertible && !fit.near_boundary);
    }

    #[test]
    fn fit_white_and_roundtrip() {
        let fit = ma_from_acvf(&Acvf::new(vec![3.0]).unwrap(), 10, DEFAULT_TOL).unwrap();
        assert!(fit.model.theta.is_empty());
        assert_eq!(fit.model.sigma2, 3.0);
        let g = Acvf::new(vec![1.0, 0.4, 0.1]).unwrap();
        let fit = ma_from_acvf(&g, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert!(max_abs_diff(acvf_from_ma(&fit.model).gamma(), g.gamma()) <= 1e-8);
        assert!(fit.invertible);
    }

    #[test]
    fn rejects_negative_spectrum_and_stalls_at_boundary() {
        assert!(matches!(
            ma_from_acvf(&Acvf::new(vec![1.0, 0.7]).unwrap(), DEFAULT_MAX_ITER, DEFAULT_TOL),
            Err(DbacfError::Invalid(_))
        ));
        // unit root: theta_{n,1} = n/(n+1) creeps towards 1
        let r = ma_from_acvf(&Acvf::new(vec![1.0, 0.5]).unwrap(), DEFAULT_MAX_ITER, DEFAULT_TOL);
        assert!(matches!(r, Err(DbacfError::Convergence { .. })));
    }

    #[test]
    fn validate_examples() {
        assert!(validate_acvf(&Acvf::new(vec![1.0, 0.5]).unwrap(), 1001));
        assert!(!validate_acvf(&Acvf::new(vec![1.0, 0.7]).unwrap(), 1001));
        assert!(validate_acvf(&Acvf::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap(), 1001));
    }

    #[test]
    fn invertibility_check() {
        assert!(MaModel::new(vec![0.5], 1.0).unwrap().is_invertible());
        assert!(!MaModel::new(vec![2.0], 1.0).unwrap().is_invertible());
        assert!(!MaModel::new(vec![1.0], 1.0).unwrap().is_invertible());
        // 1 - 2.5z + z^2 has roots 0.5 and 2
        assert!(!MaModel::new(vec![-2.5, 1.0], 1.0).unwrap().is_invertible());
        assert!(MaModel::new(vec![0.3, 0.0], 1.0).unwrap().is_invertible());
    }

    #[test]
    fn json_shape() {
        let m: MaModel = serde_json::from_str(r#"{"theta":[0.5],"sigma2":1.0}"#).unwrap();
        assert_eq!(m.theta, vec![0.5]);
        assert!(serde_json::from_str::<MaModel>(r#"{"theta":[],"sigma2":0}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn roundtrip_recovers_invertible_models(seed in any::<u64>(), m in 1usize..9) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let model = random_invertible(&mut rng, m);
            prop_assert!(model.is_invertible());
            let fit = ma_from_acvf(&acvf_from_ma(&model), DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
            prop_assert!(fit.invertible);
            for (a, b) in fit.model.theta.iter().zip(&model.theta) {
                prop_assert!((a - b).abs() < 1e-7, "{a} vs {b}");
            }
            prop_assert!((fit.model.sigma2 - model.sigma2).abs() < 1e-7 * model.sigma2.max(1.0));
        }

        #[test]
        fn homogeneity(seed in any::<u64>(), m in 1usize..6, c in 0.01f64..100.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = acvf_from_ma(&random_invertible(&mut rng, m));
            let a = ma_from_acvf(&g, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
            let b = ma_from_acvf(&g.scaled(c).unwrap(), DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
            prop_assert!((b.model.sigma2 / a.model.sigma2 - c).abs() < 1e-8 * c);
            for (x, y) in a.model.theta.iter().zip(&b.model.theta) {
                prop_assert!((x - y).abs() < 1e-8);
            }
        }

        #[test]
        fn strictly_positive_spectrum_gives_invertible_fit(seed in any::<u64>(), m in 1usize..6) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<f64> = (0..=m).map(|h| if h == 0 { 1.0 } else { rng.random_range(-0.3..0.3) / h as f64 }).collect();
            let g = Acvf::new(raw).unwrap();
            prop_assume!(spectral_min(&g, DEFAULT_GRID) > 0.05);
            let fit = ma_from_acvf(&g, 2000, DEFAULT_TOL).unwrap();
            prop_assert!(fit.invertible);
        }
    }
}
