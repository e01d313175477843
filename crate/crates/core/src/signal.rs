//! Observation series, piecewise-constant signals and autocovariance
//! containers.
//!
//! Grid convention: observation `i` (1-based) sits at `x_i = i/n`. A change
//! point at fraction `tau` is placed at index `t = floor(n * tau)`, meaning the
//! old level ends at `t` and the new level starts at `t + 1`. Change indices
//! reported anywhere in the crate follow this "last index of the left segment"
//! convention.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, DbacfError, Result};

/// A finite, non-empty vector of observations.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Series(Vec<f64>);

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("series must contain at least one observation");
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("series entry {} is not finite", i + 1));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    /// Element-wise sum with another series of the same length.
    pub fn add(&self, other: &Series) -> Result<Series> {
        if self.len() != other.len() {
            return invalid(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            ));
        }
        Series::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Returns `c * y + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Series {
        Series(self.0.iter().map(|v| scale * v + shift).collect())
    }
}

impl<'de> Deserialize<'de> for Series {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        Series::new(values).map_err(serde::de::Error::custom)
    }
}

/// Piecewise-constant signal on `[0, 1)`: `levels[j]` holds on
/// `[taus[j-1], taus[j])` with `taus[-1] = 0` and `taus[K-1] = 1` implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepSignalRepr")]
pub struct StepSignal {
    taus: Vec<f64>,
    levels: Vec<f64>,
}

#[derive(Deserialize)]
struct StepSignalRepr {
    taus: Vec<f64>,
    levels: Vec<f64>,
}

impl TryFrom<StepSignalRepr> for StepSignal {
    type Error = DbacfError;
    fn try_from(r: StepSignalRepr) -> Result<Self> {
        StepSignal::new(r.taus, r.levels)
    }
}

impl StepSignal {
    pub fn new(taus: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != taus.len() + 1 {
            return invalid(format!(
                "{} change points need {} levels, got {}",
                taus.len(),
                taus.len() + 1,
                levels.len()
            ));
        }
        if levels.iter().chain(&taus).any(|v| !v.is_finite()) {
            return invalid("signal contains non-finite values");
        }
        if taus.iter().any(|&t| t <= 0.0 || t >= 1.0) {
            return invalid("change-point fractions must lie in (0, 1)");
        }
        if taus.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("change-point fractions must be strictly increasing");
        }
        if levels.windows(2).any(|w| w[0] == w[1]) {
            return invalid("adjacent levels must differ");
        }
        Ok(Self { taus, levels })
    }

    /// Signal without jumps.
    pub fn constant(level: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![level])
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Number of segments `K`.
    pub fn segments(&self) -> usize {
        self.levels.len()
    }

    /// Change indices `floor(n * tau_j)` for a sample of size `n`.
    pub fn change_indices(&self, n: usize) -> Vec<usize> {
        self.taus
            .iter()
            .map(|&t| (n as f64 * t).floor() as usize)
            .collect()
    }

    /// Same levels, every level shifted by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(
            self.taus.clone(),
            self.levels.iter().map(|a| a + c).collect(),
        )
    }
}

/// Autocovariance `gamma_0..gamma_m` of an m-dependent stationary process.
/// Lags beyond `m` are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AcvfRepr")]
pub struct Acvf {
    m: usize,
    gamma: Vec<f64>,
}

#[derive(Deserialize)]
struct AcvfRepr {
    m: Option<usize>,
    gamma: Vec<f64>,
}

impl TryFrom<AcvfRepr> for Acvf {
    type Error = DbacfError;
    fn try_from(r: AcvfRepr) -> Result<Self> {
        if let Some(m) = r.m {
            if m + 1 != r.gamma.len() {
                return invalid(format!(
                    "m = {m} requires {} autocovariances, got {}",
                    m + 1,
                    r.gamma.len()
                ));
            }
        }
        Acvf::new(r.gamma)
    }
}

impl Acvf {
    /// Builds an autocovariance from `gamma_0..gamma_m`; requires `gamma_0 > 0`.
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        let acvf = Self::unchecked(gamma)?;
        if acvf.gamma[0] <= 0.0 {
            return invalid(format!("gamma_0 must be positive, got {}", acvf.gamma[0]));
        }
        Ok(acvf)
    }

    /// Like [`Acvf::new`] but allows a non-positive `gamma_0`; raw estimates
    /// can be degenerate and are still worth carrying around.
    pub fn unchecked(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return invalid("autocovariance needs at least gamma_0");
        }
        if gamma.iter().any(|g| !g.is_finite()) {
            return invalid("autocovariance contains non-finite values");
        }
        Ok(Self {
            m: gamma.len() - 1,
            gamma,
        })
    }

    /// White noise with variance `var`.
    pub fn white(var: f64) -> Result<Self> {
        Self::new(vec![var])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `gamma_h` for any lag, zero beyond `m`.
    pub fn at(&self, lag: usize) -> f64 {
        self.gamma.get(lag).copied().unwrap_or(0.0)
    }

    /// Correlations `rho_h = gamma_h / gamma_0`.
    pub fn rho(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| g / self.gamma[0]).collect()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::unchecked(self.gamma.iter().map(|g| c * g).collect())
    }
}

/// Samples `signal` on the grid `x_i = i/n`, `i = 1..n`.
pub fn sample_signal(signal: &StepSignal, n: usize) -> Result<Series> {
    if n == 0 {
        return invalid("n must be positive");
    }
    let mut bounds = Vec::with_capacity(signal.segments() + 1);
    bounds.push(0);
    bounds.extend(signal.change_indices(n));
    bounds.push(n);
    if let Some(j) = bounds.windows(2).position(|w| w[1] <= w[0]) {
        return Err(DbacfError::Domain(format!(
            "n = {n} leaves segment {j} without grid points"
        )));
    }
    let mut values = Vec::with_capacity(n);
    for (w, &level) in bounds.windows(2).zip(signal.levels()) {
        values.extend(std::iter::repeat_n(level, w[1] - w[0]));
    }
    Series::new(values)
}

/// Sum of squared jump sizes `J_K`.
pub fn quadratic_variation(signal: &StepSignal) -> f64 {
    signal
        .levels()
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .sum()
}

/// Whether all segments (including the boundary ones) are longer than
/// `4(m+1)/n`.
pub fn separation_ok(signal: &StepSignal, n: usize, m: usize) -> bool {
    let bound = 4.0 * (m as f64 + 1.0) / n as f64;
    let mut prev = 0.0;
    for &t in signal.taus().iter().chain(std::iter::once(&1.0)) {
        if t - prev <= bound {
            return false;
        }
        prev = t;
    }
    true
}
