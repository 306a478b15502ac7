//! The scaled additive functional
//! `I_n(t) = a(n)^{-1} ∫_0^{t²a(n)²} f(X_s) ds`, its Fourier split
//! `I_n = I⁽¹⁾_{n,δ} + f̂(0) I⁽²⁾_{n,δ}` with
//! `I⁽²⁾_{n,δ} = (2π)^{-1} F_n(δ, t)`,
//! `F_n(δ, t) = (2/a(n)) ∫_0^{t²a(n)²} sin(δX_s)/X_s ds`,
//! Monte-Carlo moment estimation and the closed-form limit moments
//! `E I(t)^k = (t/(2√ℓ))^k k!/Γ(1+k/2)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exponents::{classify_conditions, curvature_limit, envelope, CharacteristicExponent};
use crate::kernels::{band_indicator_transform, band_transform, check_class_D, TestKernel};
use crate::sampling::{
    effective_step, occupation_integral_to, riemann_weight, step_count, IncrementSampler,
    PathSample, PathStream, SamplerOptions,
};

/// Number of batches behind every Monte-Carlo standard error.
pub const BATCHES: usize = 32;

/// How `a(n)` grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceRule {
    /// `a(n) = n^p`
    Polynomial { p: f64 },
    /// `a(n) = table[n - 1]`
    Custom { table: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSequence {
    pub rule: SequenceRule,
}

impl Default for ScalingSequence {
    fn default() -> Self {
        Self {
            rule: SequenceRule::Polynomial { p: 1.0 },
        }
    }
}

impl ScalingSequence {
    pub fn polynomial(p: f64) -> Result<Self> {
        let s = Self {
            rule: SequenceRule::Polynomial { p },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn custom(table: Vec<f64>) -> Result<Self> {
        let s = Self {
            rule: SequenceRule::Custom { table },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.rule {
            SequenceRule::Polynomial { p } if !(*p > 0.0 && p.is_finite()) => Err(
                Error::InvalidParameter(format!("polynomial sequence needs p > 0, got {p}")),
            ),
            SequenceRule::Custom { table } => {
                if table.len() < 2
                    || table[0] <= 0.0
                    || table.windows(2).any(|w| !(w[1] > w[0]))
                {
                    Err(Error::InvalidParameter(
                        "custom sequence must be positive and strictly increasing with at least 2 entries"
                            .into(),
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn a(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidParameter("sequence index starts at 1".into()));
        }
        match &self.rule {
            SequenceRule::Polynomial { p } => Ok((n as f64).powf(*p)),
            SequenceRule::Custom { table } => table.get(n as usize - 1).copied().ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "custom sequence has {} entries, index {n} requested",
                    table.len()
                ))
            }),
        }
    }

    /// Whether `a(n)/a(n+N) → 1`. Exact for polynomial rules; for a table it is
    /// an evidence rule: the ratio of consecutive entries over the last quarter
    /// must be non-decreasing and end above 0.95.
    pub fn satisfies_seqcond(&self) -> bool {
        match &self.rule {
            SequenceRule::Polynomial { .. } => true,
            SequenceRule::Custom { table } => {
                let ratios: Vec<f64> = table.windows(2).map(|w| w[0] / w[1]).collect();
                let tail = &ratios[ratios.len() - ratios.len().div_ceil(4)..];
                tail.windows(2).all(|w| w[1] >= w[0] - 1e-12)
                    && tail.last().is_some_and(|&r| r > 0.95)
            }
        }
    }
}

/// `E I(t)^k` for the half-normal limit, via log-gamma.
pub fn limit_moment(ell: f64, t: f64, k: u32) -> f64 {
    let kf = k as f64;
    (kf * (t / (2.0 * ell.sqrt())).ln() + ln_gamma(kf + 1.0) - ln_gamma(1.0 + 0.5 * kf)).exp()
}

/// `(t²/(4ℓ̲(2kδ)))^k (2k)!/k!`, the uniform bound on `E (I⁽²⁾_{n,δ})^{2k}`.
pub fn moment_bound(psi: &CharacteristicExponent, delta: f64, t: f64, k: u32) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let lower = envelope(psi, 2.0 * k as f64 * delta)?.lower;
    if !(lower > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lower envelope at {} is {lower}; the bound needs it positive",
            2.0 * k as f64 * delta
        )));
    }
    let kf = k as f64;
    Ok((kf * (t * t / (4.0 * lower)).ln() + ln_gamma(2.0 * kf + 1.0) - ln_gamma(kf + 1.0)).exp())
}

/// `a(n)^{-1} ∫_0^{t²a(n)²} f(X_s) ds` (left-Riemann sum).
pub fn additive_functional<F: Fn(f64) -> f64>(
    path: &PathSample,
    f: F,
    t: f64,
    a_n: f64,
) -> Result<f64> {
    Ok(occupation_integral_to(path, t * t * a_n * a_n, f)? / a_n)
}

/// `F_n(δ, t)` (left-Riemann sum).
pub fn band_functional(path: &PathSample, delta: f64, t: f64, a_n: f64) -> Result<f64> {
    Ok(occupation_integral_to(path, t * t * a_n * a_n, |x| band_indicator_transform(delta, x))? / a_n)
}

/// Per-path pieces of the split, all on the same Riemann grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionSample {
    pub path_index: u64,
    pub n: u32,
    pub delta: f64,
    pub t: f64,
    pub i_n: f64,
    /// `a^{-1} Σ w [2π f(X) - ∫_{|x|≤δ} f̂(x) cos(xX) dx]`
    pub f_n1: f64,
    /// `a^{-1} Σ w ∫_{|x|≤δ} (f̂(x) - f̂(0)) cos(xX) dx`
    pub f_n2: f64,
    pub f_n: f64,
    /// `i_n - (f_n1 + f_n2 + f̂(0) f_n)/(2π)`
    pub residual: f64,
}

impl DecompositionSample {
    /// `I⁽¹⁾_{n,δ} = (F_{n,1} + F_{n,2})/(2π)`.
    pub fn i1(&self) -> f64 {
        (self.f_n1 + self.f_n2) / (2.0 * PI)
    }
}

/// The split on a stored path.
pub fn decompose(
    path: &PathSample,
    kernel: &TestKernel,
    delta: f64,
    t: f64,
    n: u32,
    a_n: f64,
) -> Result<DecompositionSample> {
    let horizon = t * t * a_n * a_n;
    let steps = step_count(horizon, path.step);
    if steps > path.n_steps() {
        return Err(Error::HorizonMismatch {
            required: horizon,
            available: path.step * path.n_steps() as f64,
        });
    }
    let mut acc = DecompAcc::default();
    for i in 0..steps {
        let w = riemann_weight(i, steps, path.step, horizon);
        acc.add(kernel, delta, path.values[i], w)?;
    }
    Ok(acc.finish(kernel, path.path_index, n, delta, t, a_n))
}

#[derive(Debug, Clone, Copy, Default)]
struct DecompAcc {
    f: f64,
    full_gap: f64,
    centered: f64,
    band: f64,
}

impl DecompAcc {
    #[inline]
    fn add(&mut self, kernel: &TestKernel, delta: f64, x: f64, w: f64) -> Result<()> {
        let b = band_transform(kernel, delta, x)?;
        let fx = kernel.f(x);
        self.f += w * fx;
        self.full_gap += w * (2.0 * PI * fx - b.full);
        self.centered += w * b.centered;
        self.band += w * band_indicator_transform(delta, x);
        Ok(())
    }

    fn finish(&self, kernel: &TestKernel, path_index: u64, n: u32, delta: f64, t: f64, a_n: f64) -> DecompositionSample {
        let i_n = self.f / a_n;
        let f_n1 = self.full_gap / a_n;
        let f_n2 = self.centered / a_n;
        let f_n = self.band / a_n;
        DecompositionSample {
            path_index,
            n,
            delta,
            t,
            i_n,
            f_n1,
            f_n2,
            f_n,
            residual: i_n - (f_n1 + f_n2 + kernel.fhat_at_zero() * f_n) / (2.0 * PI),
        }
    }
}

/// Common inputs of the Monte-Carlo studies.
#[derive(Debug, Clone)]
pub struct StudySetup {
    pub psi: CharacteristicExponent,
    pub kernel: TestKernel,
    pub seq: ScalingSequence,
    pub t: f64,
    pub deltas: Vec<f64>,
    pub n_list: Vec<u32>,
    pub n_paths: usize,
    pub h: f64,
    pub seed: u64,
    /// Cap on steps per path; `h` is coarsened (and flagged) beyond it.
    pub max_steps: Option<u64>,
    pub sampler: SamplerOptions,
}

/// Grid actually simulated for a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyGrid {
    pub h: f64,
    pub coarsened: bool,
    /// `(n, a(n), t²a(n)², steps)` in increasing `n`.
    pub horizons: Vec<(u32, f64, f64, usize)>,
}

impl StudySetup {
    fn validate(&self) -> Result<()> {
        self.seq.validate()?;
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t must be > 0, got {}", self.t)));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidParameter("deltas must be a non-empty list of positive values".into()));
        }
        if self.n_list.is_empty() || self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("n list must be positive and strictly increasing".into()));
        }
        if self.n_paths < BATCHES {
            return Err(Error::InvalidParameter(format!(
                "need at least {BATCHES} paths for batch-means errors, got {}",
                self.n_paths
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter(format!("h must be > 0, got {}", self.h)));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<StudyGrid> {
        self.validate()?;
        let n_max = *self.n_list.last().expect("validated non-empty");
        let a_max = self.seq.a(n_max)?;
        let (h, coarsened) = effective_step(self.t * self.t * a_max * a_max, self.h, self.max_steps);
        let horizons = self
            .n_list
            .iter()
            .map(|&n| {
                let a = self.seq.a(n)?;
                let horizon = self.t * self.t * a * a;
                Ok((n, a, horizon, step_count(horizon, h)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StudyGrid {
            h,
            coarsened,
            horizons,
        })
    }
}

/// `I_n` per horizon and `F_n(δ)` per (horizon, δ) for one streamed path.
fn stream_functionals(
    setup: &StudySetup,
    grid: &StudyGrid,
    sampler: &IncrementSampler,
    path_index: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nd = setup.deltas.len();
    let total = grid.horizons.last().map_or(0, |h| h.3);
    let mut stream = PathStream::new(sampler, grid.h, setup.seed, path_index);
    let (mut sf, mut sb) = (0.0, vec![0.0; nd]);
    let mut i_n = Vec::with_capacity(grid.horizons.len());
    let mut f_n = Vec::with_capacity(grid.horizons.len() * nd);
    let mut bvals = vec![0.0; nd];
    let mut next = 0;
    for i in 0..total {
        let x = stream.position();
        let fx = setup.kernel.f(x);
        sf += grid.h * fx;
        for (j, &d) in setup.deltas.iter().enumerate() {
            bvals[j] = band_indicator_transform(d, x);
            sb[j] += grid.h * bvals[j];
        }
        while next < grid.horizons.len() && grid.horizons[next].3 == i + 1 {
            let (_, a, horizon, steps) = grid.horizons[next];
            let dw = riemann_weight(i, steps, grid.h, horizon) - grid.h;
            i_n.push((sf + dw * fx) / a);
            for j in 0..nd {
                f_n.push((sb[j] + dw * bvals[j]) / a);
            }
            next += 1;
        }
        if i + 1 < total {
            stream.advance()?;
        }
    }
    Ok((i_n, f_n))
}

/// Which functional a moment row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    #[serde(rename = "I_n")]
    In,
    /// `I⁽²⁾_{n,δ} = F_n/(2π)`
    #[serde(rename = "I2")]
    I2,
    /// `I⁽¹⁾_{n,δ} = I_n - f̂(0) I⁽²⁾_{n,δ}`
    #[serde(rename = "I1")]
    I1,
}

/// One Monte-Carlo moment with its closed-form comparators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub model: String,
    pub kernel: String,
    pub quantity: Quantity,
    pub n: u32,
    pub delta: Option<f64>,
    pub t: f64,
    pub k: u32,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub limit_value: Option<f64>,
    pub bound_value: Option<f64>,
    pub n_paths: usize,
    pub h: f64,
    pub seed: u64,
}

/// Mean and batch-means standard error of per-path values in path order.
pub fn batch_mean(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let b = BATCHES.min(n);
    let mut means = Vec::with_capacity(b);
    for k in 0..b {
        let (lo, hi) = (k * n / b, (k + 1) * n / b);
        means.push(values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64);
    }
    let mb = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mb).powi(2)).sum::<f64>() / (b as f64 - 1.0);
    (mean, (var / b as f64).sqrt())
}

/// Result of [`mc_moments`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentStudy {
    pub grid: StudyGrid,
    pub ell: f64,
    pub limit_suppressed: bool,
    pub reports: Vec<MomentReport>,
}

fn check_eligible(setup: &StudySetup) -> Result<f64> {
    let report = classify_conditions(&setup.psi);
    if !report.eligible {
        return Err(Error::InvalidParameter(format!(
            "{} is not eligible: {}",
            setup.psi.label(),
            report.notes.join("; ")
        )));
    }
    let class = check_class_D(&setup.kernel)?;
    if !class.member {
        return Err(Error::InvalidParameter(format!(
            "kernel {} fails the admissibility checks: {class:?}",
            setup.kernel.label()
        )));
    }
    curvature_limit(&setup.psi)
}

/// Per-path `(I_n, F_n)` for every path, in path order.
fn simulate_study(setup: &StudySetup, grid: &StudyGrid) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let sampler = IncrementSampler::new(&setup.psi, setup.sampler)?;
    sampler.validate_step(grid.h)?;
    (0..setup.n_paths as u64)
        .into_par_iter()
        .map(|p| stream_functionals(setup, grid, &sampler, p))
        .collect()
}

/// Monte-Carlo moments of `I_n` (k ≤ k_max), `I⁽²⁾_{n,δ}` (k ≤ k_max) and
/// `I⁽¹⁾_{n,δ}` (k ≤ 2) for every `n` and `δ`.
///
/// Bounds are attached to even moments of `I⁽²⁾`; limits to `I_n` and
/// `I⁽²⁾` unless `f̂(0) = 0`.
pub fn mc_moments(setup: &StudySetup, k_max: u32) -> Result<MomentStudy> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be >= 1".into()));
    }
    let grid = setup.grid()?;
    let ell = check_eligible(setup)?;
    let per_path = simulate_study(setup, &grid)?;
    let fhat0 = setup.kernel.fhat_at_zero();
    let suppressed = fhat0 == 0.0;
    let nd = setup.deltas.len();

    let mut bounds = std::collections::HashMap::new();
    for &d in &setup.deltas {
        for j in 1..=k_max / 2 {
            bounds.insert((d.to_bits(), j), moment_bound(&setup.psi, d, setup.t, j)?);
        }
    }

    let row = |quantity, n, delta, k, values: &[f64], limit, bound| {
        let (m, se) = batch_mean(values);
        MomentReport {
            model: setup.psi.label(),
            kernel: setup.kernel.label().to_string(),
            quantity,
            n,
            delta,
            t: setup.t,
            k,
            mc_estimate: m,
            mc_stderr: se,
            limit_value: if suppressed { None } else { limit },
            bound_value: bound,
            n_paths: setup.n_paths,
            h: grid.h,
            seed: setup.seed,
        }
    };

    let mut reports = Vec::new();
    for (hi, &(n, ..)) in grid.horizons.iter().enumerate() {
        let i_n: Vec<f64> = per_path.iter().map(|p| p.0[hi]).collect();
        for k in 1..=k_max {
            let v: Vec<f64> = i_n.iter().map(|x| x.powi(k as i32)).collect();
            let limit = fhat0.powi(k as i32) * limit_moment(ell, setup.t, k);
            reports.push(row(Quantity::In, n, None, k, &v, Some(limit), None));
        }
        for (di, &d) in setup.deltas.iter().enumerate() {
            let i2: Vec<f64> = per_path.iter().map(|p| p.1[hi * nd + di] / (2.0 * PI)).collect();
            for k in 1..=k_max {
                let v: Vec<f64> = i2.iter().map(|x| x.powi(k as i32)).collect();
                let bound = (k % 2 == 0).then(|| bounds[&(d.to_bits(), k / 2)]);
                reports.push(row(Quantity::I2, n, Some(d), k, &v, Some(limit_moment(ell, setup.t, k)), bound));
            }
            let i1: Vec<f64> = i_n.iter().zip(&i2).map(|(a, b)| a - fhat0 * b).collect();
            for k in 1..=2 {
                let v: Vec<f64> = i1.iter().map(|x| x.powi(k as i32)).collect();
                reports.push(row(Quantity::I1, n, Some(d), k, &v, None, None));
            }
        }
    }
    Ok(MomentStudy {
        grid,
        ell,
        limit_suppressed: suppressed,
        reports,
    })
}

/// Per-(n, δ) summary of the split over all paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionSummary {
    pub n: u32,
    pub delta: f64,
    pub mean_sq_i1: f64,
    pub stderr_sq_i1: f64,
    pub mean_sq_f_n1: f64,
    pub stderr_sq_f_n1: f64,
    pub mean_sq_f_n2: f64,
    pub stderr_sq_f_n2: f64,
    pub max_abs_residual: f64,
    pub limit_suppressed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionStudy {
    pub grid: StudyGrid,
    pub samples: Vec<DecompositionSample>,
    pub summary: Vec<DecompositionSummary>,
}

/// The split with band transforms evaluated by quadrature at every grid point.
pub fn decomposition_study(setup: &StudySetup) -> Result<DecompositionStudy> {
    let grid = setup.grid()?;
    let sampler = IncrementSampler::new(&setup.psi, setup.sampler)?;
    sampler.validate_step(grid.h)?;
    let nd = setup.deltas.len();
    let kernel = &setup.kernel;

    let per_path: Vec<Vec<DecompositionSample>> = (0..setup.n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<DecompositionSample>> {
            let total = grid.horizons.last().map_or(0, |h| h.3);
            let mut stream = PathStream::new(&sampler, grid.h, setup.seed, p);
            let mut acc = vec![DecompAcc::default(); nd];
            let mut out = Vec::with_capacity(grid.horizons.len() * nd);
            let mut next = 0;
            for i in 0..total {
                let x = stream.position();
                while next < grid.horizons.len() && grid.horizons[next].3 == i + 1 {
                    let (n, a, horizon, steps) = grid.horizons[next];
                    let w = riemann_weight(i, steps, grid.h, horizon);
                    for (j, &d) in setup.deltas.iter().enumerate() {
                        let mut last = acc[j];
                        last.add(kernel, d, x, w)?;
                        out.push(last.finish(kernel, p, n, d, setup.t, a));
                    }
                    next += 1;
                }
                for (j, &d) in setup.deltas.iter().enumerate() {
                    acc[j].add(kernel, d, x, grid.h)?;
                }
                if i + 1 < total {
                    stream.advance()?;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut summary = Vec::new();
    let mut samples = Vec::with_capacity(setup.n_paths * grid.horizons.len() * nd);
    for idx in 0..grid.horizons.len() * nd {
        let column: Vec<DecompositionSample> = per_path.iter().map(|p| p[idx]).collect();
        let sq = |g: &dyn Fn(&DecompositionSample) -> f64| {
            batch_mean(&column.iter().map(|s| g(s).powi(2)).collect::<Vec<_>>())
        };
        let (m1, s1) = sq(&|s| s.i1());
        let (mf1, sf1) = sq(&|s| s.f_n1);
        let (mf2, sf2) = sq(&|s| s.f_n2);
        summary.push(DecompositionSummary {
            n: column[0].n,
            delta: column[0].delta,
            mean_sq_i1: m1,
            stderr_sq_i1: s1,
            mean_sq_f_n1: mf1,
            stderr_sq_f_n1: sf1,
            mean_sq_f_n2: mf2,
            stderr_sq_f_n2: sf2,
            max_abs_residual: column.iter().map(|s| s.residual.abs()).fold(0.0, f64::max),
            limit_suppressed: kernel.fhat_at_zero() == 0.0,
        });
    }
    for p in per_path {
        samples.extend(p);
    }
    Ok(DecompositionStudy {
        grid,
        samples,
        summary,
    })
}

/// True when every consecutive pair drops by more than `sigmas` combined
/// standard errors.
pub fn decreasing_beyond(values: &[(f64, f64)], sigmas: f64) -> bool {
    values
        .windows(2)
        .all(|w| w[0].0 - w[1].0 > sigmas * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt())
}

/// Partial sums of `m_{2k}^{-1/(2k)}` for the limit law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarlemanReport {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Least-squares slope of `ln term` against `ln k`.
    pub fitted_slope: f64,
    /// Sums over `k ∈ [2^j, 2^{j+1})` for complete dyadic blocks.
    pub block_sums: Vec<f64>,
    /// The last three block sums increase strictly.
    pub blocks_growing: bool,
}

pub fn carleman_diagnostic(ell: f64, t: f64, big_k: u32) -> Result<CarlemanReport> {
    if big_k < 2 {
        return Err(Error::InvalidParameter("K must be >= 2".into()));
    }
    let terms: Vec<f64> = (1..=big_k)
        .map(|k| {
            let kk = 2.0 * k as f64;
            let ln_m = kk * (t / (2.0 * ell.sqrt())).ln() + ln_gamma(kk + 1.0) - ln_gamma(1.0 + 0.5 * kk);
            (-ln_m / kk).exp()
        })
        .collect();
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |s, v| {
            *s += v;
            Some(*s)
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = terms
        .iter()
        .enumerate()
        .map(|(i, v)| (((i + 1) as f64).ln(), v.ln()))
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let mut block_sums = Vec::new();
    let mut lo = 1usize;
    while 2 * lo - 1 <= big_k as usize {
        block_sums.push(terms[lo - 1..2 * lo - 1].iter().sum());
        lo *= 2;
    }
    let tail = &block_sums[block_sums.len().saturating_sub(3)..];
    let blocks_growing = tail.len() == 3 && tail.windows(2).all(|w| w[1] > w[0]);
    Ok(CarlemanReport {
        terms,
        partial_sums,
        fitted_slope: sxy / sxx,
        block_sums,
        blocks_growing,
    })
}

/// `E (F_{n+N} - F_n)²` on shared paths, with the deterministic factor
/// `(a(n)/a(n+N) - 1)²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyRow {
    pub n: u32,
    pub big_n: u32,
    pub estimate: f64,
    pub stderr: f64,
    pub scale_factor: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn cauchy_l2_check(
    psi: &CharacteristicExponent,
    seq: &ScalingSequence,
    t: f64,
    delta: f64,
    pairs: &[(u32, u32)],
    n_paths: usize,
    h: f64,
    seed: u64,
    sampler: SamplerOptions,
) -> Result<Vec<CauchyRow>> {
    if !seq.satisfies_seqcond() {
        return Err(Error::InvalidParameter(
            "scaling sequence does not satisfy a(n)/a(n+N) -> 1".into(),
        ));
    }
    let mut n_list: Vec<u32> = pairs.iter().flat_map(|&(n, m)| [n, n + m]).collect();
    n_list.sort_unstable();
    n_list.dedup();
    let setup = StudySetup {
        psi: psi.clone(),
        kernel: crate::kernels::gaussian_kernel(),
        seq: seq.clone(),
        t,
        deltas: vec![delta],
        n_list: n_list.clone(),
        n_paths,
        h,
        seed,
        max_steps: None,
        sampler,
    };
    let grid = setup.grid()?;
    let per_path = simulate_study(&setup, &grid)?;
    let pos = |n: u32| n_list.iter().position(|&v| v == n).expect("listed");
    pairs
        .iter()
        .map(|&(n, m)| {
            let (i, j) = (pos(n), pos(n + m));
            let d: Vec<f64> = per_path.iter().map(|p| (p.1[j] - p.1[i]).powi(2)).collect();
            let (estimate, stderr) = batch_mean(&d);
            Ok(CauchyRow {
                n,
                big_n: m,
                estimate,
                stderr,
                scale_factor: (seq.a(n)? / seq.a(n + m)? - 1.0).powi(2),
            })
        })
        .collect()
}
