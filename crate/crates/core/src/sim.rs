//! Error processes, test signals and the Monte Carlo benchmark of the
//! difference estimators.
//!
//! Every replicate draws from its own ChaCha stream `(seed, r)`, so results do
//! not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DbacfError, Result};
use crate::estimators::{acf_from_estimate, estimate, WeightRule};
use crate::mafit::{acvf_from_ma, MaModel};
use crate::signal::{sample_signal, Series, StepSignal};

/// Seed used whenever the caller does not pick one.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// RNG for replicate `r` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

/// Innovation law.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDist {
    #[default]
    Gaussian,
    /// Student t with 4 degrees of freedom.
    T4,
}

impl std::str::FromStr for NoiseDist {
    type Err = DbacfError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseDist::Gaussian),
            "t4" => Ok(NoiseDist::T4),
            _ => invalid(format!("unknown distribution '{s}' (expected gaussian or t4)")),
        }
    }
}

impl NoiseDist {
    /// Raw variance of one draw.
    pub fn variance(self) -> f64 {
        match self {
            NoiseDist::Gaussian => 1.0,
            NoiseDist::T4 => 2.0,
        }
    }

    fn draw(self, rng: &mut impl Rng, standardized: bool) -> f64 {
        match self {
            NoiseDist::Gaussian => rng.sample(StandardNormal),
            NoiseDist::T4 => {
                let t = StudentT::new(4.0).expect("4 degrees of freedom").sample(rng);
                if standardized {
                    t / 2f64.sqrt()
                } else {
                    t
                }
            }
        }
    }
}

/// MA(1) errors `e_i = r0 d_i + r1 d_{i-1}` parameterised by the lag-one
/// autocovariance of unit-variance innovations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ma1Spec {
    pub gamma1: f64,
    #[serde(default)]
    pub dist: NoiseDist,
    /// Rescale t4 innovations to unit variance (raw t4 has variance 2).
    #[serde(default)]
    pub standardized: bool,
}

impl Ma1Spec {
    pub fn new(gamma1: f64, dist: NoiseDist) -> Result<Self> {
        if !(gamma1.abs() <= 0.5) {
            return invalid(format!("gamma1 must lie in [-0.5, 0.5], got {gamma1}"));
        }
        Ok(Self { gamma1, dist, standardized: false })
    }

    /// `(r0, r1)` with `r0^2 + r1^2 = 1` and `r0 r1 = gamma1`.
    pub fn coefficients(&self) -> (f64, f64) {
        let a = (1.0 + 2.0 * self.gamma1).sqrt();
        let b = (1.0 - 2.0 * self.gamma1).sqrt();
        ((a + b) / 2.0, (a - b) / 2.0)
    }

    fn check(&self) -> Result<()> {
        Self::new(self.gamma1, self.dist).map(|_| ())
    }
}

/// MA(1) errors of length `n` for `spec`, seeded.
pub fn gen_ma1(spec: &Ma1Spec, n: usize, seed: u64) -> Result<Series> {
    Series::new(gen_ma1_with(&mut ChaCha8Rng::seed_from_u64(seed), spec, n)?)
}

/// [`gen_ma1`] drawing from a caller-supplied generator.
pub fn gen_ma1_with(rng: &mut impl Rng, spec: &Ma1Spec, n: usize) -> Result<Vec<f64>> {
    spec.check()?;
    let (r0, r1) = spec.coefficients();
    let delta: Vec<f64> = (0..=n).map(|_| spec.dist.draw(rng, spec.standardized)).collect();
    Ok(delta.windows(2).map(|w| r0 * w[1] + r1 * w[0]).collect())
}

/// MA(m) errors `e_i = sum_j theta_j d_{i-j}` with unit-variance innovations
/// scaled by `sqrt(sigma2)`; `m` burn-in innovations make the series
/// stationary from the first sample.
pub fn gen_ma(model: &MaModel, n: usize, seed: u64, dist: NoiseDist) -> Result<Series> {
    Series::new(gen_ma_with(&mut ChaCha8Rng::seed_from_u64(seed), model, n, dist))
}

/// [`gen_ma`] drawing from a caller-supplied generator.
pub fn gen_ma_with(rng: &mut impl Rng, model: &MaModel, n: usize, dist: NoiseDist) -> Vec<f64> {
    let c = model.coefficients();
    let m = model.m();
    let s = model.sigma2.sqrt();
    let delta: Vec<f64> = (0..n + m).map(|_| s * dist.draw(rng, true)).collect();
    (0..n)
        .map(|i| (0..=m).map(|j| c[j] * delta[i + m - j]).sum())
        .collect()
}

/// Six change points at `(5, 7, 16, 20, 27, 33) / 36` with levels
/// `0, 10, 0, 1, 0, 1, 0`.
pub fn chakar_signal() -> StepSignal {
    StepSignal::new(
        [5.0, 7.0, 16.0, 20.0, 27.0, 33.0].iter().map(|t| t / 36.0).collect(),
        vec![0.0, 10.0, 0.0, 1.0, 0.0, 1.0, 0.0],
    )
    .expect("valid built-in signal")
}

/// `f(x) = 300 x^3 (1-x)^3` at `x_i = i/n`.
pub fn park_signal(n: usize) -> Result<Series> {
    if n == 0 {
        return invalid("n must be positive");
    }
    Series::new(
        (1..=n)
            .map(|i| {
                let x = i as f64 / n as f64;
                300.0 * (x * (1.0 - x)).powi(3)
            })
            .collect(),
    )
}

/// Estimator codes of the benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorCode {
    /// Bias-optimised weights.
    O,
    /// `d = 1` for every lag.
    H,
    /// `d = 0` for every lag.
    R,
}

impl EstimatorCode {
    pub fn rule(self) -> WeightRule {
        match self {
            EstimatorCode::O => WeightRule::default(),
            EstimatorCode::H => WeightRule::Fixed(1.0),
            EstimatorCode::R => WeightRule::Fixed(0.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorCode::O => "O",
            EstimatorCode::H => "H",
            EstimatorCode::R => "R",
        }
    }
}

impl std::str::FromStr for EstimatorCode {
    type Err = DbacfError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "O" | "o" => Ok(EstimatorCode::O),
            "H" | "h" => Ok(EstimatorCode::H),
            "R" | "r" => Ok(EstimatorCode::R),
            _ => invalid(format!("unknown estimator code '{s}' (expected O, H or R)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalSpec {
    Chakar,
    Park,
    Custom(StepSignal),
}

impl SignalSpec {
    pub fn sample(&self, n: usize) -> Result<Series> {
        match self {
            SignalSpec::Chakar => sample_signal(&chakar_signal(), n),
            SignalSpec::Park => park_signal(n),
            SignalSpec::Custom(s) => sample_signal(s, n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorSpec {
    Ma1(Ma1Spec),
    Ma { model: MaModel, dist: NoiseDist },
}

impl ErrorSpec {
    /// True autocorrelations `rho_0, rho_1, ...`.
    pub fn rho(&self) -> Vec<f64> {
        match self {
            ErrorSpec::Ma1(s) => vec![1.0, s.gamma1],
            ErrorSpec::Ma { model, .. } => acvf_from_ma(model).rho(),
        }
    }

    fn draw(&self, rng: &mut impl Rng, n: usize) -> Result<Vec<f64>> {
        match self {
            ErrorSpec::Ma1(s) => gen_ma1_with(rng, s, n),
            ErrorSpec::Ma { model, dist } => Ok(gen_ma_with(rng, model, n, *dist)),
        }
    }

    fn gamma1(&self) -> Option<f64> {
        match self {
            ErrorSpec::Ma1(s) => Some(s.gamma1),
            ErrorSpec::Ma { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub n: usize,
    pub reps: usize,
    pub m: usize,
    pub seed: u64,
    pub signal: SignalSpec,
    pub error: ErrorSpec,
    pub estimators: Vec<EstimatorCode>,
}

/// Autocorrelation lags scored by the benchmark.
pub const BENCH_LAGS: [usize; 2] = [1, 2];

/// One line of the benchmark table: MSE of `rho_hat_lag` for one estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    /// Lag-one autocovariance of the MA(1) design; `None` for MA(m) errors.
    pub gamma1: Option<f64>,
    pub estimator: EstimatorCode,
    pub lag: usize,
    pub mse: f64,
    /// Standard error of `mse` (sd of squared errors over `sqrt(reps)`).
    pub se: f64,
    /// Replicates that produced an estimate.
    pub reps: usize,
    pub n: usize,
    pub seed: u64,
    /// Replicates whose variance estimate was not positive.
    pub failures: usize,
}

/// Estimated `rho_h` for `h` in [`BENCH_LAGS`]; zero beyond `m`.
fn rho_at_lags(y: &Series, m: usize, code: EstimatorCode) -> Result<[f64; 2]> {
    let rho = acf_from_estimate(&estimate(y, m, code.rule())?)?;
    Ok(BENCH_LAGS.map(|h| rho.get(h).copied().unwrap_or(0.0)))
}

/// Squared errors of one replicate, per estimator and lag; `None` marks a
/// degenerate estimate.
fn replicate(cfg: &BenchmarkConfig, f: &Series, truth: &[f64; 2], r: u64) -> Result<Vec<Option<[f64; 2]>>> {
    let mut rng = replicate_rng(cfg.seed, r);
    let e = cfg.error.draw(&mut rng, cfg.n)?;
    let y = f.add(&Series::new(e)?)?;
    cfg.estimators
        .iter()
        .map(|&code| match rho_at_lags(&y, cfg.m, code) {
            Ok(est) => Ok(Some([(est[0] - truth[0]).powi(2), (est[1] - truth[1]).powi(2)])),
            Err(DbacfError::Numeric(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Monte Carlo MSE of the estimated autocorrelations at lags 1 and 2.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<Vec<BenchRow>> {
    if cfg.reps == 0 {
        return invalid("reps must be at least 1");
    }
    if cfg.estimators.is_empty() {
        return invalid("no estimators requested");
    }
    if cfg.n <= 2 * (cfg.m + 1) {
        return Err(DbacfError::Domain(format!(
            "n = {} must exceed 2(m+1) = {}",
            cfg.n,
            2 * (cfg.m + 1)
        )));
    }
    let f = cfg.signal.sample(cfg.n)?;
    let rho = cfg.error.rho();
    let truth = BENCH_LAGS.map(|h| rho.get(h).copied().unwrap_or(0.0));
    let per_rep = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| replicate(cfg, &f, &truth, r))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (k, &code) in cfg.estimators.iter().enumerate() {
        for (li, &lag) in BENCH_LAGS.iter().enumerate() {
            let sq: Vec<f64> = per_rep.iter().filter_map(|r| r[k].map(|e| e[li])).collect();
            let (mse, se) = mean_and_se(&sq);
            rows.push(BenchRow {
                gamma1: cfg.error.gamma1(),
                estimator: code,
                lag,
                mse,
                se,
                reps: sq.len(),
                n: cfg.n,
                seed: cfg.seed,
                failures: cfg.reps - sq.len(),
            });
        }
    }
    Ok(rows)
}

/// Sample mean and its standard error (`NaN` when undefined).
pub fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / k;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}
