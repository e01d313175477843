//! Multiscale jump segmentation for m-dependent errors.
//!
//! Local statistics are squared centred partial sums normalised by their exact
//! variance under the m-dependent autocovariance,
//!
//! ```text
//! T(i, j; mu) = (S_i^j - (j-i+1) mu)^2 / Var(S_i^j),
//! Var(S_i^j) = L gamma_0 + 2 sum_{k=1}^m (L-k)_+ gamma_k,   L = j-i+1,
//! ```
//!
//! so no inverse covariance matrix is needed. The segmentation is the step
//! function with the fewest change points whose every segment passes all
//! local tests of the chosen interval system at level `q`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DbacfError, Result};
use crate::estimators::dbacf;
use crate::mafit::{self, ma_from_acvf, spectral_min, validate_acvf, MaModel};
use crate::projection::{self, project_acvf};
use crate::signal::{Acvf, Series};
use crate::sim::{gen_ma_with, replicate_rng, NoiseDist};

/// `Var(S_i^j)` for an interval of length `len`.
pub fn partial_sum_variance(acvf: &Acvf, len: usize) -> f64 {
    let g = acvf.gamma();
    len as f64 * g[0]
        + 2.0 * (1..g.len()).map(|k| len.saturating_sub(k) as f64 * g[k]).sum::<f64>()
}

/// `(S_i^j - (j-i+1) mu)^2 / Var(S_i^j)` with 1-based inclusive `i..=j`.
pub fn local_stat(y: &Series, i: usize, j: usize, mu: f64, acvf: &Acvf) -> Result<f64> {
    check_interval(i, j, y.len())?;
    let len = j - i + 1;
    let s: f64 = y.values()[i - 1..j].iter().map(|v| v - mu).sum();
    Ok(s * s / positive_variance(acvf, len)?)
}

fn check_interval(i: usize, j: usize, n: usize) -> Result<()> {
    if i == 0 || i > j || j > n {
        return invalid(format!("interval ({i}, {j}) is not inside 1..={n}"));
    }
    Ok(())
}

fn positive_variance(acvf: &Acvf, len: usize) -> Result<f64> {
    let v = partial_sum_variance(acvf, len);
    if v > 0.0 {
        Ok(v)
    } else {
        Err(DbacfError::Numeric(format!(
            "partial sums of length {len} have non-positive variance {v:e}"
        )))
    }
}

/// Family of intervals over which local statistics are maximised.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMode {
    /// Every `(i, j)` with `1 <= i <= j <= n`.
    Full,
    /// Lengths `1, 2, 4, ...` with starts stepped by `max(1, L/2)`.
    #[default]
    Dyadic,
}

impl std::str::FromStr for IntervalMode {
    type Err = DbacfError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(IntervalMode::Full),
            "dyadic" => Ok(IntervalMode::Dyadic),
            _ => invalid(format!("unknown interval system '{s}' (expected full or dyadic)")),
        }
    }
}

/// 1-based inclusive intervals, sorted by start then end, without duplicates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSystem {
    pub n: usize,
    pub intervals: Vec<(usize, usize)>,
}

impl IntervalSystem {
    pub fn new(n: usize, mut intervals: Vec<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &intervals {
            check_interval(i, j, n)?;
        }
        intervals.sort_unstable();
        intervals.dedup();
        Ok(Self { n, intervals })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

pub fn build_intervals(n: usize, mode: IntervalMode) -> Result<IntervalSystem> {
    if n == 0 {
        return invalid("n must be positive");
    }
    let mut out = Vec::new();
    match mode {
        IntervalMode::Full => {
            for i in 1..=n {
                out.extend((i..=n).map(|j| (i, j)));
            }
        }
        IntervalMode::Dyadic => {
            let mut len = 1;
            while len <= n {
                let step = (len / 2).max(1);
                out.extend((1..=n + 1 - len).step_by(step).map(|i| (i, i + len - 1)));
                len *= 2;
            }
        }
    }
    IntervalSystem::new(n, out)
}

/// Prefix sums with a leading zero.
fn prefix(v: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(v.len() + 1);
    p.push(0.0);
    let mut s = 0.0;
    for x in v {
        s += x;
        p.push(s);
    }
    p
}

/// Variances for every length `1..=n` (index 0 unused).
fn variance_table(acvf: &Acvf, n: usize) -> Result<Vec<f64>> {
    let mut v = vec![0.0; n + 1];
    for (len, slot) in v.iter_mut().enumerate().skip(1) {
        *slot = positive_variance(acvf, len)?;
    }
    Ok(v)
}

/// `max_{(i,j)} S_i^j^2 / Var(S_i^j)`: the multiscale statistic at mean zero.
fn max_stat(x: &[f64], sys: &IntervalSystem, var: &[f64]) -> f64 {
    let p = prefix(x);
    sys.intervals
        .iter()
        .map(|&(i, j)| {
            let s = p[j] - p[i - 1];
            s * s / var[j - i + 1]
        })
        .fold(0.0, f64::max)
}

/// Null distribution of the multiscale statistic: one maximum per replicate
/// of a zero-mean Gaussian MA(`model`) series of length `n`, in replicate
/// order.
pub fn null_statistics(
    model: &MaModel,
    n: usize,
    reps: usize,
    seed: u64,
    intervals: &IntervalSystem,
) -> Result<Vec<f64>> {
    if intervals.n != n {
        return invalid(format!("interval system is built for n = {}, not {n}", intervals.n));
    }
    let var = variance_table(&mafit::acvf_from_ma(model), n)?;
    Ok((0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let x = gen_ma_with(&mut replicate_rng(seed, r), model, n, NoiseDist::Gaussian);
            max_stat(&x, intervals, &var)
        })
        .collect())
}

/// Order statistic `ceil((1-alpha) R)` of `sample` (sorted in place).
pub fn empirical_quantile(sample: &mut [f64], alpha: f64) -> Result<f64> {
    if sample.is_empty() {
        return invalid("empty sample");
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    sample.sort_by(f64::total_cmp);
    let r = sample.len();
    let k = (((1.0 - alpha) * r as f64) - 1e-9).ceil().clamp(1.0, r as f64) as usize;
    Ok(sample[k - 1])
}

/// Monte Carlo `(1-alpha)` quantile of the multiscale statistic under the
/// null of a constant (zero) signal with MA(`model`) errors. Replicate `r`
/// draws from stream `(seed, r)`, so the value does not depend on the number
/// of threads and a larger `reps` extends a smaller run.
pub fn null_quantile(
    model: &MaModel,
    n: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
    intervals: &IntervalSystem,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if reps < 100 {
        return invalid(format!("at least 100 replicates are required, got {reps}"));
    }
    let mut stats = null_statistics(model, n, reps, seed, intervals)?;
    empirical_quantile(&mut stats, alpha)
}

/// Fitted step function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFit {
    pub k_hat: usize,
    /// Last 1-based index of every segment but the final one.
    pub changepoints: Vec<usize>,
    /// Segment sample means.
    pub levels: Vec<f64>,
    /// Level of the test that produced `quantile_used`, when known.
    pub alpha: Option<f64>,
    pub quantile_used: f64,
}

impl StepFit {
    /// Fitted value at every index.
    pub fn fitted(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let mut start = 0;
        for (k, &level) in self.levels.iter().enumerate() {
            let end = self.changepoints.get(k).copied().unwrap_or(n);
            out.extend(std::iter::repeat_n(level, end - start));
            start = end;
        }
        out
    }
}

/// Per-start list of system intervals sorted by end, with running
/// intersections of the admissible-mean bounds `[(S - c)/L, (S + c)/L]`.
struct Bounds {
    /// `offsets[i]..offsets[i+1]` indexes the entries starting at `i` (1-based).
    offsets: Vec<usize>,
    ends: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    fn new(p: &[f64], sys: &IntervalSystem, var: &[f64], q: f64) -> Self {
        let n = sys.n;
        let mut offsets = vec![0; n + 2];
        for &(i, _) in &sys.intervals {
            offsets[i + 1] += 1;
        }
        for i in 1..=n + 1 {
            offsets[i] += offsets[i - 1];
        }
        let total = sys.intervals.len();
        let (mut ends, mut lo, mut hi) = (vec![0; total], vec![0.0; total], vec![0.0; total]);
        // intervals are sorted by (start, end), so entries land in order
        let mut run = (usize::MAX, f64::NEG_INFINITY, f64::INFINITY);
        for (k, &(i, j)) in sys.intervals.iter().enumerate() {
            let len = (j - i + 1) as f64;
            let s = p[j] - p[i - 1];
            let c = (q * var[j - i + 1]).sqrt();
            if run.0 != i {
                run = (i, f64::NEG_INFINITY, f64::INFINITY);
            }
            run.1 = run.1.max((s - c) / len);
            run.2 = run.2.min((s + c) / len);
            ends[k] = j;
            lo[k] = run.1;
            hi[k] = run.2;
        }
        Self { offsets, ends, lo, hi }
    }
}

/// Minimal-K step fit: every system interval inside a fitted segment has
/// `local_stat <= q` at the segment mean. Ties in K are broken by the largest
/// sum of log segment lengths.
pub fn segment(y: &Series, acvf: &Acvf, q: f64, intervals: &IntervalSystem) -> Result<StepFit> {
    let n = y.len();
    if !(q > 0.0) || !q.is_finite() {
        return invalid(format!("threshold q must be positive, got {q}"));
    }
    if intervals.n != n {
        return invalid(format!("interval system is built for n = {}, not {n}", intervals.n));
    }
    let v = y.values();
    let p = prefix(v);
    let var = variance_table(acvf, n)?;
    let b = Bounds::new(&p, intervals, &var, q);

    // ptr[i]: number of entries starting at i whose end is <= the current j
    let mut ptr = vec![0usize; n + 1];
    // best[j] = (segments, log-length score, start of the last segment) for y_1..y_j
    let mut best: Vec<(usize, f64, usize)> = vec![(0, 0.0, 0); n + 1];
    for j in 1..=n {
        for i in 1..=j {
            let (o, e) = (b.offsets[i], b.offsets[i + 1]);
            while o + ptr[i] < e && b.ends[o + ptr[i]] <= j {
                ptr[i] += 1;
            }
        }
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut cand: Option<(usize, f64, usize)> = None;
        for i in (1..=j).rev() {
            if ptr[i] > 0 {
                let k = b.offsets[i] + ptr[i] - 1;
                lo = lo.max(b.lo[k]);
                hi = hi.min(b.hi[k]);
            }
            if lo > hi {
                break;
            }
            let mean = (p[j] - p[i - 1]) / (j - i + 1) as f64;
            if mean < lo || mean > hi {
                continue;
            }
            let (segs, score, _) = best[i - 1];
            let c = (segs + 1, score + ((j - i + 1) as f64).ln(), i);
            let better = match cand {
                None => true,
                Some((cs, cscore, _)) => c.0 < cs || (c.0 == cs && c.1 > cscore),
            };
            if better {
                cand = Some(c);
            }
        }
        best[j] = cand.ok_or_else(|| {
            DbacfError::Numeric(format!("no admissible segment ends at index {j}"))
        })?;
    }

    let mut starts = Vec::new();
    let mut j = n;
    while j > 0 {
        let i = best[j].2;
        starts.push(i);
        j = i - 1;
    }
    starts.reverse();
    let changepoints: Vec<usize> = starts[1..].iter().map(|s| s - 1).collect();
    let levels = starts
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let e = starts.get(k + 1).map_or(n, |t| t - 1);
            v[s - 1..e].iter().sum::<f64>() / (e - s + 1) as f64
        })
        .collect();
    Ok(StepFit {
        k_hat: changepoints.len(),
        changepoints,
        levels,
        alpha: None,
        quantile_used: q,
    })
}

/// Options of the estimate-fit-calibrate-segment pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOptions {
    pub m: usize,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub mode: IntervalMode,
    /// Matrix dimension used when an invalid estimate must be projected.
    pub project_dim: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Spectral floor, relative to `gamma_0`, enforced before the MA fit.
    pub spectral_floor: f64,
    pub ma_max_iter: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            m: 1,
            alpha: 0.05,
            reps: 1000,
            seed: crate::sim::DEFAULT_SEED,
            mode: IntervalMode::Dyadic,
            project_dim: 32,
            tol: projection::DEFAULT_TOL,
            max_iter: projection::DEFAULT_MAX_ITER,
            spectral_floor: 1e-4,
            ma_max_iter: 20_000,
        }
    }
}

/// An estimated autocovariance made usable as an MA(m) autocovariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedAcvf {
    pub raw: Acvf,
    pub acvf: Acvf,
    /// The raw estimate had a negative spectral density and was projected.
    pub projected: bool,
    /// `gamma_0` was raised to keep the spectral density away from zero.
    pub adjusted: bool,
}

/// Repair an estimated autocovariance for the MA fit: project it when its
/// spectral density is negative, then lift `gamma_0` if the spectral minimum
/// is below `spectral_floor * gamma_0`.
///
/// Projection makes the `project_dim`-dimensional Toeplitz matrix PSD, which
/// does not make the spectral density non-negative for every dimension; the
/// lift closes that gap and keeps the MA fit away from a unit root.
pub fn prepare_acvf(raw: &Acvf, opts: &PipelineOptions) -> Result<PreparedAcvf> {
    let mut acvf = raw.clone();
    let mut projected = false;
    if !validate_acvf(&acvf, mafit::DEFAULT_GRID) {
        let dim = opts.project_dim.max(acvf.m() + 1);
        let (t, _) = project_acvf(&acvf, dim, opts.tol, opts.max_iter)?;
        acvf = Acvf::unchecked(t.first_row)?;
        projected = true;
    }
    let g0 = acvf.gamma()[0];
    if !(g0 > 0.0) {
        return Err(DbacfError::Numeric(format!(
            "estimated variance {g0:e} is not positive; no noise model can be fitted"
        )));
    }
    let floor = opts.spectral_floor * g0;
    let smin = spectral_min(&acvf, mafit::DEFAULT_GRID);
    let mut adjusted = false;
    if smin < floor {
        let mut g = acvf.gamma().to_vec();
        g[0] += floor - smin;
        acvf = Acvf::new(g)?;
        adjusted = true;
    }
    Ok(PreparedAcvf { raw: raw.clone(), acvf, projected, adjusted })
}

/// Output of [`segment_series`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub fit: StepFit,
    pub acvf: PreparedAcvf,
    pub model: MaModel,
}

/// Estimate the autocovariance, fit the MA noise model, calibrate the
/// threshold by simulation and segment.
pub fn segment_series(y: &Series, opts: &PipelineOptions) -> Result<PipelineResult> {
    let est = dbacf(y, opts.m)?;
    let prepared = prepare_acvf(&est.acvf, opts)?;
    let model = ma_from_acvf(&prepared.acvf, opts.ma_max_iter, mafit::DEFAULT_TOL)?.model;
    let sys = build_intervals(y.len(), opts.mode)?;
    let q = null_quantile(&model, y.len(), opts.alpha, opts.reps, opts.seed, &sys)?;
    let mut fit = segment(y, &prepared.acvf, q, &sys)?;
    fit.alpha = Some(opts.alpha);
    Ok(PipelineResult { fit, acvf: prepared, model })
}
