//! Exact-in-law increment samplers and path construction.
//!
//! Every draw goes through [`RngContract`], so a path is a pure function of
//! `(seed, path_index)` and can be regenerated on any thread.

use std::f64::consts::PI;

use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::exponents::{BernsteinFamily, CharacteristicExponent, ExponentKind};
use crate::rng::{RngContract, StepRng};

/// Knobs for the rejection sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerOptions {
    /// Smallest admissible acceptance rate `e^{-hκλ^β}` per increment.
    pub acceptance_floor: f64,
    /// Proposal budget per increment.
    pub max_tries: u64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            acceptance_floor: 0.01,
            max_tries: 1_000_000,
        }
    }
}

/// Subordinator with Laplace exponent `κ((x+λ)^β - λ^β)` at unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperedStableSubordinator {
    pub kappa: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl TemperedStableSubordinator {
    /// The subordinator of the relativistic process: `κ = 1`, `β = α/2`,
    /// `λ = m^{2/α}`, so `κλ^β = m`.
    pub fn relativistic(m: f64, alpha: f64) -> Result<Self> {
        if !(m >= 0.0 && alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "need m >= 0 and alpha in (0, 2), got m = {m}, alpha = {alpha}"
            )));
        }
        Ok(Self {
            kappa: 1.0,
            beta: 0.5 * alpha,
            lambda: m.powf(2.0 / alpha),
        })
    }

    pub fn laplace_exponent(&self, x: f64) -> f64 {
        self.kappa * ((x + self.lambda).powf(self.beta) - self.lambda.powf(self.beta))
    }

    /// Probability that one proposal at time `h` is accepted.
    pub fn acceptance_rate(&self, h: f64) -> f64 {
        (-h * self.kappa * self.lambda.powf(self.beta)).exp()
    }

    /// Largest step with acceptance rate at least `floor`.
    pub fn max_step(&self, floor: f64) -> f64 {
        let rate = self.kappa * self.lambda.powf(self.beta);
        if rate > 0.0 {
            -floor.ln() / rate
        } else {
            f64::INFINITY
        }
    }

    /// One draw of `S_h` together with the number of proposals used.
    ///
    /// Proposal: the untempered stable subordinator at time `h` by Kanter's
    /// representation; acceptance with probability `e^{-λS}`.
    pub fn sample_with_tries(
        &self,
        h: f64,
        rng: &mut StepRng,
        opts: &SamplerOptions,
    ) -> Result<(f64, u64)> {
        let scale = (self.kappa * h).powf(1.0 / self.beta);
        for tries in 1..=opts.max_tries {
            let s = scale * positive_stable(self.beta, rng);
            if self.lambda == 0.0 || rng.open01() <= (-self.lambda * s).exp() {
                return Ok((s, tries));
            }
        }
        Err(Error::RejectionBudgetExceeded {
            tries: opts.max_tries,
        })
    }
}

/// Kanter draw with `E e^{-xS} = e^{-x^β}`, `β ∈ (0, 1)`.
fn positive_stable(beta: f64, rng: &mut StepRng) -> f64 {
    let u = PI * rng.open01();
    let e: f64 = Exp1.sample(rng);
    let a = (beta * u).sin() / u.sin().powf(1.0 / beta);
    let b = ((1.0 - beta) * u).sin() / e;
    a * b.powf((1.0 - beta) / beta)
}

/// Chambers–Mallows–Stuck draw with `E e^{ixX} = e^{-|x|^α}`.
fn symmetric_stable(alpha: f64, rng: &mut StepRng) -> f64 {
    let v = PI * (rng.open01() - 0.5);
    let w: f64 = Exp1.sample(rng);
    if alpha == 1.0 {
        return v.tan();
    }
    (alpha * v).sin() / v.cos().powf(1.0 / alpha)
        * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// `S_h` for the relativistic subordinator `φ(x) = (x+m^{2/α})^{α/2} - m`.
pub fn sample_tempered_subordinator_increment(
    m: f64,
    alpha: f64,
    h: f64,
    rng: &mut StepRng,
    opts: &SamplerOptions,
) -> Result<f64> {
    let sub = TemperedStableSubordinator::relativistic(m, alpha)?;
    check_step(h)?;
    check_acceptance(&sub, h, opts)?;
    Ok(sub.sample_with_tries(h, rng, opts)?.0)
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be > 0, got {h}")));
    }
    Ok(())
}

fn check_acceptance(sub: &TemperedStableSubordinator, h: f64, opts: &SamplerOptions) -> Result<()> {
    let rate = sub.acceptance_rate(h);
    if rate < opts.acceptance_floor {
        return Err(Error::InvalidParameter(format!(
            "step {h} gives acceptance rate {rate:.3e} below the floor {}; use h <= {:.4}",
            opts.acceptance_floor,
            sub.max_step(opts.acceptance_floor)
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    /// `N(0, 2c)` per unit time.
    Gaussian { c: f64 },
    Stable { alpha: f64 },
    /// `B(S_h)` with `S` tempered stable.
    TemperedSubordinated(TemperedStableSubordinator),
    /// `B(S_h)` with `S` a gamma subordinator.
    GammaSubordinated { scale: f64, rate: f64 },
}

/// Increment sampler bound to one exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementSampler {
    law: Law,
    opts: SamplerOptions,
}

impl IncrementSampler {
    pub fn new(psi: &CharacteristicExponent, opts: SamplerOptions) -> Result<Self> {
        let law = match psi.kind() {
            ExponentKind::Brownian { c } => Law::Gaussian { c: *c },
            ExponentKind::SymmetricStable { alpha } if *alpha == 2.0 => Law::Gaussian { c: 1.0 },
            ExponentKind::SymmetricStable { alpha } => Law::Stable { alpha: *alpha },
            ExponentKind::Relativistic { m, alpha } => {
                Law::TemperedSubordinated(TemperedStableSubordinator::relativistic(*m, *alpha)?)
            }
            ExponentKind::SubordinatedBm(spec) => match spec.family() {
                Some(BernsteinFamily::TemperedStable {
                    scale,
                    index,
                    tempering,
                }) => Law::TemperedSubordinated(TemperedStableSubordinator {
                    kappa: scale * gamma(1.0 - index) / index,
                    beta: index,
                    lambda: tempering,
                }),
                Some(BernsteinFamily::Gamma { scale, rate }) => {
                    Law::GammaSubordinated { scale, rate }
                }
                None => {
                    return Err(Error::Unsupported(format!(
                        "no exact sampler for {} (custom Levy measure)",
                        psi.label()
                    )))
                }
            },
        };
        Ok(Self { law, opts })
    }

    /// Largest step the sampler accepts (finite only for tempered laws).
    pub fn max_step(&self) -> f64 {
        match self.law {
            Law::TemperedSubordinated(sub) => sub.max_step(self.opts.acceptance_floor),
            _ => f64::INFINITY,
        }
    }

    pub fn validate_step(&self, h: f64) -> Result<()> {
        check_step(h)?;
        if let Law::TemperedSubordinated(sub) = self.law {
            check_acceptance(&sub, h, &self.opts)?;
        }
        Ok(())
    }

    /// One increment over time `h`; callers validate `h` once up front.
    #[inline]
    pub fn increment(&self, h: f64, rng: &mut StepRng) -> Result<f64> {
        Ok(match self.law {
            Law::Gaussian { c } => {
                let z: f64 = StandardNormal.sample(rng);
                (2.0 * c * h).sqrt() * z
            }
            Law::Stable { alpha } => h.powf(1.0 / alpha) * symmetric_stable(alpha, rng),
            Law::TemperedSubordinated(sub) => {
                let (s, _) = sub.sample_with_tries(h, rng, &self.opts)?;
                let z: f64 = StandardNormal.sample(rng);
                (2.0 * s).sqrt() * z
            }
            Law::GammaSubordinated { scale, rate } => {
                let g = Gamma::new(scale * h, 1.0 / rate)
                    .map_err(|e| Error::InvalidParameter(format!("gamma subordinator: {e}")))?;
                let s: f64 = g.sample(rng);
                let z: f64 = StandardNormal.sample(rng);
                (2.0 * s).sqrt() * z
            }
        })
    }
}

/// `X` with `E e^{ixX} = e^{-hΨ(x)}`, drawn from `rng`.
pub fn sample_increment(
    psi: &CharacteristicExponent,
    h: f64,
    rng: &mut StepRng,
    opts: &SamplerOptions,
) -> Result<f64> {
    let s = IncrementSampler::new(psi, *opts)?;
    s.validate_step(h)?;
    s.increment(h, rng)
}

/// A trajectory on the uniform grid `0, h, …, Nh`.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub step: f64,
    pub horizon: f64,
    pub values: Vec<f64>,
    pub model: CharacteristicExponent,
    pub seed: u64,
    pub path_index: u64,
}

impl PathSample {
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }
}

/// `⌈T/h⌉`, ignoring rounding noise in `T/h`.
pub fn step_count(horizon: f64, h: f64) -> usize {
    let r = horizon / h;
    let n = r.round();
    if (r - n).abs() <= 1e-9 * r.max(1.0) {
        n as usize
    } else {
        r.ceil() as usize
    }
}

/// `(h', coarsened)`: the step actually used when at most `max_steps` steps
/// are allowed on `[0, horizon]`.
pub fn effective_step(horizon: f64, h: f64, max_steps: Option<u64>) -> (f64, bool) {
    match max_steps {
        Some(cap) if step_count(horizon, h) as u64 > cap => (horizon / cap as f64, true),
        _ => (h, false),
    }
}

/// Streams `X_0 = 0, X_h, X_{2h}, …` of one path without storing it.
pub struct PathStream<'a> {
    sampler: &'a IncrementSampler,
    contract: RngContract,
    h: f64,
    step: u64,
    x: f64,
}

impl<'a> PathStream<'a> {
    pub fn new(sampler: &'a IncrementSampler, h: f64, seed: u64, path_index: u64) -> Self {
        Self {
            sampler,
            contract: RngContract::new(seed, path_index),
            h,
            step: 0,
            x: 0.0,
        }
    }

    /// Current position `X_{step·h}`.
    #[inline]
    pub fn position(&self) -> f64 {
        self.x
    }

    /// Advances one step and returns the new position.
    #[inline]
    pub fn advance(&mut self) -> Result<f64> {
        let mut rng = self.contract.step(self.step);
        self.x += self.sampler.increment(self.h, &mut rng)?;
        self.step += 1;
        Ok(self.x)
    }
}

/// Cumulative sum of `⌈T/h⌉` independent increments.
pub fn sample_path(
    psi: &CharacteristicExponent,
    horizon: f64,
    h: f64,
    seed: u64,
    path_index: u64,
    opts: &SamplerOptions,
) -> Result<PathSample> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
    }
    let sampler = IncrementSampler::new(psi, *opts)?;
    sampler.validate_step(h)?;
    let n = step_count(horizon, h);
    let mut stream = PathStream::new(&sampler, h, seed, path_index);
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    for _ in 0..n {
        values.push(stream.advance()?);
    }
    Ok(PathSample {
        step: h,
        horizon,
        values,
        model: psi.clone(),
        seed,
        path_index,
    })
}

/// Weight of grid point `i` in the left-Riemann sum over `[0, horizon]`.
#[inline]
pub(crate) fn riemann_weight(i: usize, n: usize, h: f64, horizon: f64) -> f64 {
    if i + 1 == n {
        horizon - h * (n - 1) as f64
    } else {
        h
    }
}

/// Left-Riemann sum `Σ_i w_i f(X_{ih})` over `[0, horizon]` with `w_i = h`
/// except for a possibly shorter final cell.
pub fn occupation_integral_to<F: Fn(f64) -> f64>(
    path: &PathSample,
    horizon: f64,
    f: F,
) -> Result<f64> {
    let n = step_count(horizon, path.step);
    if n > path.n_steps() {
        return Err(Error::HorizonMismatch {
            required: horizon,
            available: path.step * path.n_steps() as f64,
        });
    }
    Ok((0..n)
        .map(|i| riemann_weight(i, n, path.step, horizon) * f(path.values[i]))
        .sum())
}

/// `∫_0^T f(X_s) ds` over the whole path.
pub fn occupation_integral<F: Fn(f64) -> f64>(path: &PathSample, f: F) -> f64 {
    occupation_integral_to(path, path.horizon, f).expect("path covers its own horizon")
}

/// Monte-Carlo check of `E exp(i Σ x_j X_{s_j}) = exp(-Σ_i (s_i - s_{i-1}) Ψ(Σ_{j≥i} x_j))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharFnCheck {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub n_paths: usize,
    pub estimate_re: f64,
    pub estimate_im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub exact: f64,
    pub z_re: f64,
    pub z_im: f64,
}

pub fn verify_increment_charfn(
    psi: &CharacteristicExponent,
    times: &[f64],
    xs: &[f64],
    n_paths: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<CharFnCheck> {
    if times.is_empty() || times.len() != xs.len() || times.len() > 4 {
        return Err(Error::InvalidParameter(
            "need 1 to 4 time points with matching probe values".into(),
        ));
    }
    if times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("times must be positive and increasing".into()));
    }
    if n_paths < 2 {
        return Err(Error::InvalidParameter("need at least 2 paths".into()));
    }
    let sampler = IncrementSampler::new(psi, *opts)?;
    // Split each gap into equal sub-steps the sampler accepts.
    let mut plan = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &s in times {
        let gap = s - prev;
        let pieces = (gap / sampler.max_step()).ceil().max(1.0) as u64;
        let h = gap / pieces as f64;
        sampler.validate_step(h)?;
        plan.push((pieces, h));
        prev = s;
    }

    let draws: Vec<(f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let contract = RngContract::new(seed, p);
            let mut step = 0u64;
            let mut x = 0.0;
            let mut phase = 0.0;
            for (j, &(pieces, h)) in plan.iter().enumerate() {
                for _ in 0..pieces {
                    x += sampler.increment(h, &mut contract.step(step))?;
                    step += 1;
                }
                phase += xs[j] * x;
            }
            Ok((phase.cos(), phase.sin()))
        })
        .collect::<Result<_>>()?;

    let n = n_paths as f64;
    let mean = |v: &dyn Fn(&(f64, f64)) -> f64| draws.iter().map(v).sum::<f64>() / n;
    let re = mean(&|d| d.0);
    let im = mean(&|d| d.1);
    let var = |m: f64, v: &dyn Fn(&(f64, f64)) -> f64| {
        draws.iter().map(|d| (v(d) - m).powi(2)).sum::<f64>() / (n - 1.0)
    };
    let se_re = (var(re, &|d| d.0) / n).sqrt();
    let se_im = (var(im, &|d| d.1) / n).sqrt();

    let mut exponent = 0.0;
    let mut prev = 0.0;
    for i in 0..times.len() {
        let tail: f64 = xs[i..].iter().sum();
        exponent += (times[i] - prev) * psi.evaluate(tail)?;
        prev = times[i];
    }
    let exact = (-exponent).exp();
    let z = |d: f64, se: f64| if se > 0.0 { d / se } else if d == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(CharFnCheck {
        times: times.to_vec(),
        xs: xs.to_vec(),
        n_paths,
        estimate_re: re,
        estimate_im: im,
        stderr_re: se_re,
        stderr_im: se_im,
        exact,
        z_re: z(re - exact, se_re),
        z_im: z(im, se_im),
    })
}
