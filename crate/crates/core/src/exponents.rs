//! Symmetric characteristic exponents `Ψ`, their small-`x` curvature `ℓ`,
//! the envelopes `ℓ̲(δ) ≤ Ψ(x)/x² ≤ ℓ̄(δ)` and numeric classifiers for the
//! three standing conditions (finite curvature, Hartman–Wintner growth,
//! integrability of `1/(1+Ψ)`).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::densities::{self, LocalTimeIntegral};
use crate::error::{Error, Result};
use crate::quadrature::{self, classify_series, SeriesVerdict, Tolerance};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Parametric families of Lévy measures `μ(ds)` on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum BernsteinFamily {
    /// `μ(ds) = scale · e^{-tempering·s} · s^{-1-index} ds`, `index ∈ (0, 1)`.
    TemperedStable {
        scale: f64,
        index: f64,
        tempering: f64,
    },
    /// `μ(ds) = scale · e^{-rate·s} / s ds` (gamma subordinator).
    Gamma { scale: f64, rate: f64 },
}

impl BernsteinFamily {
    fn density(&self, s: f64) -> f64 {
        match *self {
            BernsteinFamily::TemperedStable {
                scale,
                index,
                tempering,
            } => scale * (-tempering * s).exp() * s.powf(-1.0 - index),
            BernsteinFamily::Gamma { scale, rate } => scale * (-rate * s).exp() / s,
        }
    }

    fn small_jump_index(&self) -> f64 {
        match *self {
            BernsteinFamily::TemperedStable { index, .. } => index,
            BernsteinFamily::Gamma { .. } => 0.0,
        }
    }

    /// Closed-form Laplace exponent `φ(x) = ∫ μ(ds)(1 - e^{-xs})`.
    pub fn laplace_exponent(&self, x: f64) -> f64 {
        match *self {
            BernsteinFamily::TemperedStable {
                scale,
                index,
                tempering,
            } => {
                let kappa = scale * gamma(1.0 - index) / index;
                if tempering > 0.0 {
                    let lam_pow = tempering.powf(index);
                    kappa * lam_pow * ((index * (x / tempering).ln_1p()).exp_m1())
                } else {
                    kappa * x.powf(index)
                }
            }
            BernsteinFamily::Gamma { scale, rate } => scale * (x / rate).ln_1p(),
        }
    }

    /// `∫ s μ(ds)`, infinite for an untempered stable measure.
    pub fn mean(&self) -> f64 {
        match *self {
            BernsteinFamily::TemperedStable {
                scale,
                index,
                tempering,
            } => {
                if tempering > 0.0 {
                    scale * gamma(1.0 - index) * tempering.powf(index - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            BernsteinFamily::Gamma { scale, rate } => scale / rate,
        }
    }
}

/// A Lévy measure `μ` with density on `(0, ∞)` defining a Bernstein function.
#[derive(Clone)]
pub struct BernsteinSpec {
    density: ScalarFn,
    family: Option<BernsteinFamily>,
    small_jump_index: Option<f64>,
    label: String,
}

impl fmt::Debug for BernsteinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BernsteinSpec")
            .field("label", &self.label)
            .field("family", &self.family)
            .finish()
    }
}

/// Numeric integrability checks for a Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityWitness {
    /// `∫ (s ∧ 1) μ(ds)`
    pub truncated_mass: SeriesVerdict,
    /// `∫ s μ(ds)`
    pub first_moment: SeriesVerdict,
}

impl BernsteinSpec {
    pub fn from_family(family: BernsteinFamily) -> Result<Self> {
        match family {
            BernsteinFamily::TemperedStable {
                scale,
                index,
                tempering,
            } => {
                if !(scale > 0.0 && index > 0.0 && index < 1.0 && tempering >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "tempered stable measure needs scale > 0, index in (0,1), tempering >= 0; got {family:?}"
                    )));
                }
            }
            BernsteinFamily::Gamma { scale, rate } => {
                if !(scale > 0.0 && rate > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "gamma measure needs scale > 0 and rate > 0; got {family:?}"
                    )));
                }
            }
        }
        let label = match family {
            BernsteinFamily::TemperedStable {
                scale,
                index,
                tempering,
            } => format!("tempered_stable(scale={scale},index={index},tempering={tempering})"),
            BernsteinFamily::Gamma { scale, rate } => format!("gamma(scale={scale},rate={rate})"),
        };
        Ok(Self {
            density: Arc::new(move |s| family.density(s)),
            family: Some(family),
            small_jump_index: Some(family.small_jump_index()),
            label,
        })
    }

    /// The measure whose Bernstein function is `(x + m^{2/α})^{α/2} - m`.
    pub fn relativistic(m: f64, alpha: f64) -> Result<Self> {
        let index = alpha / 2.0;
        Self::from_family(BernsteinFamily::TemperedStable {
            scale: index / gamma(1.0 - index),
            index,
            tempering: m.powf(2.0 / alpha),
        })
    }

    /// A user-supplied density. `small_jump_index`, when known, is the `β` in
    /// `μ(s) ~ s^{-1-β}` as `s → 0` and selects the singularity-removing
    /// substitution.
    pub fn custom(
        label: impl Into<String>,
        density: ScalarFn,
        small_jump_index: Option<f64>,
    ) -> Result<Self> {
        let spec = Self {
            density,
            family: None,
            small_jump_index,
            label: label.into(),
        };
        for i in 1..=200 {
            let s = 1e-6 * 1.1f64.powi(i);
            let v = spec.density(s);
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "measure density must be non-negative, got {v} at s = {s}"
                )));
            }
        }
        Ok(spec)
    }

    pub fn density(&self, s: f64) -> f64 {
        (self.density)(s)
    }

    pub fn family(&self) -> Option<BernsteinFamily> {
        self.family
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Exponent `q` of the substitution `s = u^q` on `(0, 1]` that turns
    /// `s · μ(s)` into a bounded integrand.
    fn substitution_power(&self) -> f64 {
        match self.small_jump_index {
            Some(beta) if beta < 1.0 => 1.0 / (1.0 - beta),
            _ => 4.0,
        }
    }

    /// `∫_0^1 g(s) μ(ds)` for `g(s) = O(s)` at the origin.
    fn integrate_near_zero<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let q = self.substitution_power();
        let integrand = |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let s = u.powf(q);
            g(s) * self.density(s) * q * u.powf(q - 1.0)
        };
        Ok(quadrature::adaptive(integrand, 0.0, 1.0, measure_tolerance())?.value)
    }

    fn integrate_tail<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        Ok(
            quadrature::semi_infinite(|s| g(s) * self.density(s), 1.0, measure_tolerance())?
                .value,
        )
    }

    /// `φ(x) = ∫_0^∞ μ(ds)(1 - e^{-xs})` by quadrature.
    pub fn laplace_exponent(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let g = |s: f64| -(-x * s).exp_m1();
        let near = self.integrate_near_zero(g)?;
        let tail = self.integrate_tail(g)?;
        Ok(near + tail)
    }

    /// `∫ s μ(ds)` by quadrature.
    pub fn first_moment(&self) -> Result<f64> {
        let near = self.integrate_near_zero(|s| s)?;
        let tail = self.integrate_tail(|s| s)?;
        Ok(near + tail)
    }

    /// Checks `∫ (s∧1) μ(ds) < ∞` and `∫ s μ(ds)` by truncation doubling
    /// (relative stabilization 1e-6).
    pub fn integrability_witness(&self) -> Result<IntegrabilityWitness> {
        let near = self.integrate_near_zero(|s| s)?;
        let shell = |j: u32, weight: &dyn Fn(f64) -> f64| -> Result<f64> {
            if j == 0 {
                return Ok(near);
            }
            let lo = 2f64.powi(j as i32 - 1);
            let hi = 2f64.powi(j as i32);
            Ok(quadrature::adaptive(|s| weight(s) * self.density(s), lo, hi, measure_tolerance())?.value)
        };
        let truncated_mass = classify_series(|j| shell(j, &|_| 1.0), 60, 1e-6, 0.99, 5)?;
        let first_moment = classify_series(|j| shell(j, &|s| s), 60, 1e-6, 0.99, 5)?;
        Ok(IntegrabilityWitness {
            truncated_mass,
            first_moment,
        })
    }
}

fn measure_tolerance() -> Tolerance {
    Tolerance::new(1e-300, 1e-12).with_max_intervals(4000)
}

#[derive(Debug, Clone)]
pub enum ExponentKind {
    /// `Ψ(x) = c x²`
    Brownian { c: f64 },
    /// `Ψ(x) = |x|^α`
    SymmetricStable { alpha: f64 },
    /// `Ψ(x) = (x² + m^{2/α})^{α/2} - m`
    Relativistic { m: f64, alpha: f64 },
    /// `Ψ(x) = φ(x²)` for the Bernstein function of `μ`.
    SubordinatedBm(BernsteinSpec),
}

/// A symmetric characteristic exponent.
#[derive(Debug, Clone)]
pub struct CharacteristicExponent {
    kind: ExponentKind,
    closed_form_ell: Option<f64>,
}

impl CharacteristicExponent {
    pub fn brownian(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("diffusivity must be > 0, got {c}")));
        }
        Ok(Self {
            kind: ExponentKind::Brownian { c },
            closed_form_ell: Some(c),
        })
    }

    pub fn symmetric_stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "stable index must lie in (0, 2], got {alpha}"
            )));
        }
        Ok(Self {
            kind: ExponentKind::SymmetricStable { alpha },
            closed_form_ell: (alpha == 2.0).then_some(1.0),
        })
    }

    pub fn relativistic(m: f64, alpha: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass m must be > 0, got {m}")));
        }
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "relativistic index must lie in (1, 2), got {alpha}"
            )));
        }
        Ok(Self {
            kind: ExponentKind::Relativistic { m, alpha },
            closed_form_ell: Some(0.5 * alpha * m.powf((alpha - 2.0) / alpha)),
        })
    }

    pub fn subordinated(spec: BernsteinSpec) -> Self {
        let closed_form_ell = spec
            .family()
            .map(|f| f.mean())
            .filter(|v| v.is_finite() && *v > 0.0);
        Self {
            kind: ExponentKind::SubordinatedBm(spec),
            closed_form_ell,
        }
    }

    pub fn kind(&self) -> &ExponentKind {
        &self.kind
    }

    pub fn closed_form_ell(&self) -> Option<f64> {
        self.closed_form_ell
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ExponentKind::Brownian { c } => format!("brownian(c={c})"),
            ExponentKind::SymmetricStable { alpha } => format!("stable(alpha={alpha})"),
            ExponentKind::Relativistic { m, alpha } => {
                format!("relativistic(m={m},alpha={alpha})")
            }
            ExponentKind::SubordinatedBm(spec) => format!("subordinated({})", spec.label()),
        }
    }

    /// `Ψ(x)`. Always evaluated at `|x|`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let x = x.abs();
        Ok(match &self.kind {
            ExponentKind::Brownian { c } => c * x * x,
            ExponentKind::SymmetricStable { alpha } => {
                if *alpha == 2.0 {
                    x * x
                } else {
                    x.powf(*alpha)
                }
            }
            ExponentKind::Relativistic { m, alpha } => {
                let lam = m.powf(2.0 / alpha);
                // m·((1 + x²/λ)^{α/2} - 1) without cancellation at small x.
                m * (0.5 * alpha * (x * x / lam).ln_1p()).exp_m1()
            }
            ExponentKind::SubordinatedBm(spec) => spec.laplace_exponent(x * x)?,
        })
    }

    /// `Ψ(x)` for use inside integrand closures; NaN on evaluation failure so
    /// the enclosing quadrature reports it.
    pub(crate) fn eval_or_nan(&self, x: f64) -> f64 {
        self.evaluate(x).unwrap_or(f64::NAN)
    }
}

/// `ℓ = lim_{x→0} Ψ(x)/x²`: closed form when known, otherwise
/// [`numeric_curvature_limit`].
pub fn curvature_limit(psi: &CharacteristicExponent) -> Result<f64> {
    match psi.closed_form_ell() {
        Some(ell) => Ok(ell),
        None => numeric_curvature_limit(psi),
    }
}

/// Richardson-extrapolated limit of `Ψ(x)/x²` along `x = 0.1·2^{-j}`,
/// `j = 0..=20`.
///
/// Fails with [`Error::Divergence`] when the ratios keep growing by more than
/// 10% per halving, or when the extrapolated values do not settle.
pub fn numeric_curvature_limit(psi: &CharacteristicExponent) -> Result<f64> {
    const X0: f64 = 0.1;
    const LEVELS: usize = 21;
    let mut ratios = Vec::with_capacity(LEVELS);
    for j in 0..LEVELS {
        let x = X0 * 0.5f64.powi(j as i32);
        let r = psi.evaluate(x)? / (x * x);
        if !r.is_finite() {
            return Err(Error::Divergence(format!("Psi(x)/x^2 is not finite at x = {x:e}")));
        }
        ratios.push(r);
    }
    let growing = ratios.windows(2).rev().take(3).all(|w| w[1] > 1.1 * w[0]);
    if growing {
        return Err(Error::Divergence(format!(
            "Psi(x)/x^2 grows without bound as x -> 0 (last ratio {:.3e})",
            ratios[LEVELS - 1]
        )));
    }
    // Two Richardson sweeps for the O(x²) and O(x⁴) corrections.
    let r1: Vec<f64> = ratios.windows(2).map(|w| (4.0 * w[1] - w[0]) / 3.0).collect();
    let r2: Vec<f64> = r1.windows(2).map(|w| (16.0 * w[1] - w[0]) / 15.0).collect();
    let last = r2[r2.len() - 1];
    let prev = r2[r2.len() - 2];
    if (last - prev).abs() > 1e-6 * last.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Divergence(format!(
            "Psi(x)/x^2 fails to stabilize ({prev:.9e} vs {last:.9e})"
        )));
    }
    if last <= 0.0 {
        return Err(Error::Divergence(format!(
            "Psi(x)/x^2 tends to {last:e}, not a positive limit"
        )));
    }
    Ok(last)
}

/// `(ℓ̲(δ), ℓ̄(δ))` with the points where they are attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub lower: f64,
    pub upper: f64,
    pub argmin: f64,
    pub argmax: f64,
}

const ENVELOPE_GRID: usize = 4097;

/// Infimum and supremum of `Ψ(x)/x²` over `0 < |x| ≤ δ`.
///
/// Scans a 4097-point uniform grid on `(0, δ]` together with a geometric
/// sequence toward zero, then refines both extrema by golden-section search
/// between the neighbouring grid points.
pub fn envelope(psi: &CharacteristicExponent, delta: f64) -> Result<Envelope> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    let ratio = |x: f64| -> Result<f64> { Ok(psi.evaluate(x)? / (x * x)) };
    let step = delta / ENVELOPE_GRID as f64;
    let grid: Vec<f64> = (1..=ENVELOPE_GRID).map(|i| step * i as f64).collect();
    let values = grid.iter().map(|&x| ratio(x)).collect::<Result<Vec<_>>>()?;

    let mut env = Envelope {
        lower: f64::INFINITY,
        upper: f64::NEG_INFINITY,
        argmin: delta,
        argmax: delta,
    };
    let mut update = |x: f64, r: f64| {
        if r < env.lower {
            env.lower = r;
            env.argmin = x;
        }
        if r > env.upper {
            env.upper = r;
            env.argmax = x;
        }
    };
    let (imin, imax) = extreme_indices(&values);
    for (&x, &r) in grid.iter().zip(&values) {
        update(x, r);
    }
    for j in 1..=30 {
        let x = step * 0.5f64.powi(j);
        update(x, ratio(x)?);
    }
    let bracket = |i: usize| -> (f64, f64) {
        let lo = if i == 0 { 0.5 * step } else { grid[i - 1] };
        let hi = grid[(i + 1).min(ENVELOPE_GRID - 1)];
        (lo, hi)
    };
    let (lo, hi) = bracket(imin);
    let (x, r) = quadrature::golden_section(|x| psi.eval_or_nan(x) / (x * x), lo, hi, 1e-10);
    if r.is_finite() {
        update(x, r);
    }
    let (lo, hi) = bracket(imax);
    let (x, r) = quadrature::golden_section(|x| -psi.eval_or_nan(x) / (x * x), lo, hi, 1e-10);
    if r.is_finite() {
        update(x, -r);
    }
    Ok(env)
}

fn extreme_indices(values: &[f64]) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[imin] {
            imin = i;
        }
        if *v > values[imax] {
            imax = i;
        }
    }
    (imin, imax)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum EllStatus {
    Finite(f64),
    Diverged(String),
}

/// Numeric evidence for the three standing conditions on `Ψ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub model: String,
    pub ell: EllStatus,
    pub hartman_wintner: bool,
    /// `Ψ(10^j)/ln(10^j + 1)` for `j = 1..=8`.
    pub hartman_wintner_ratios: Vec<f64>,
    pub local_time_integral: LocalTimeIntegral,
    pub eligible: bool,
    pub notes: Vec<String>,
}

/// Hartman–Wintner evidence: `Ψ(10^j)/ln(10^j + 1)`, `j = 1..=8`, must be
/// increasing and exceed 10³ at `j = 8`.
pub fn hartman_wintner_evidence(psi: &CharacteristicExponent) -> Result<(bool, Vec<f64>)> {
    let ratios = (1..=8)
        .map(|j| {
            let x = 10f64.powi(j);
            Ok(psi.evaluate(x)? / x.ln_1p())
        })
        .collect::<Result<Vec<f64>>>()?;
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    Ok((increasing && ratios[7] > 1e3, ratios))
}

pub fn classify_conditions(psi: &CharacteristicExponent) -> ConditionReport {
    let mut notes = Vec::new();
    let ell = match curvature_limit(psi) {
        Ok(v) => {
            if psi.closed_form_ell().is_some() {
                notes.push("ell: closed form".to_string());
            } else {
                notes.push("ell: Richardson extrapolation of Psi(x)/x^2".to_string());
            }
            EllStatus::Finite(v)
        }
        Err(e) => EllStatus::Diverged(e.to_string()),
    };
    let (hartman_wintner, hartman_wintner_ratios) = match hartman_wintner_evidence(psi) {
        Ok((ok, r)) => {
            notes.push(format!(
                "hartman_wintner: numeric evidence only (ratio at 1e8 = {:.4e}, threshold 1e3)",
                r[7]
            ));
            (ok, r)
        }
        Err(e) => {
            notes.push(format!("hartman_wintner: inconclusive ({e})"));
            (false, Vec::new())
        }
    };
    let local_time_integral = match densities::local_time_integral(psi) {
        Ok(v) => v,
        Err(e) => {
            notes.push(format!("local_time_integral: evaluation failed ({e})"));
            LocalTimeIntegral::Inconclusive(f64::NAN)
        }
    };
    match local_time_integral {
        LocalTimeIntegral::Diverged => notes.push(
            "local_time_integral: doubling increments stalled (evidence of divergence)".into(),
        ),
        LocalTimeIntegral::Inconclusive(_) => notes.push(
            "local_time_integral: neither convergence nor divergence within 40 doublings".into(),
        ),
        LocalTimeIntegral::Finite(_) => {}
    }
    let eligible = matches!(ell, EllStatus::Finite(_))
        && hartman_wintner
        && matches!(local_time_integral, LocalTimeIntegral::Finite(_));
    ConditionReport {
        model: psi.label(),
        ell,
        hartman_wintner,
        hartman_wintner_ratios,
        local_time_integral,
        eligible,
        notes,
    }
}

/// `ℓ = ∫ s μ(ds)` for the relativistic measure, by quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMomentSplit {
    pub ell_from_measure: f64,
    pub ell_curvature: f64,
    /// `∫ (s ∧ 1) μ(ds)`
    pub truncated_mass: f64,
    pub agrees: bool,
}

/// Integrates `s μ(ds)` for the relativistic Lévy measure
/// `μ(ds) = (α/2)/Γ(1-α/2) e^{-m^{2/α}s} s^{-1-α/2} ds` and compares it with
/// [`curvature_limit`] (relative tolerance 1e-4).
pub fn second_moment_split(psi: &CharacteristicExponent) -> Result<SecondMomentSplit> {
    let ExponentKind::Relativistic { m, alpha } = *psi.kind() else {
        return Err(Error::Unsupported(format!(
            "second_moment_split needs a relativistic exponent, got {}",
            psi.label()
        )));
    };
    let beta = alpha / 2.0;
    let c = beta / gamma(1.0 - beta);
    let lam = m.powf(2.0 / alpha);
    let q = 1.0 / (1.0 - beta);
    // s = u^q on (0, 1]: s · s^{-1-β} ds = q u^{q(1-β) - 1} du = q du.
    let near = quadrature::adaptive(
        |u| c * q * (-lam * u.powf(q)).exp(),
        0.0,
        1.0,
        measure_tolerance(),
    )?
    .value;
    let tail = quadrature::semi_infinite(
        |s| c * (-lam * s).exp() * s.powf(-beta),
        1.0,
        measure_tolerance(),
    )?
    .value;
    let mass_tail = quadrature::semi_infinite(
        |s| c * (-lam * s).exp() * s.powf(-1.0 - beta),
        1.0,
        measure_tolerance(),
    )?
    .value;
    let ell_from_measure = near + tail;
    let ell_curvature = curvature_limit(psi)?;
    Ok(SecondMomentSplit {
        ell_from_measure,
        ell_curvature,
        truncated_mass: near + mass_tail,
        agrees: (ell_from_measure - ell_curvature).abs() <= 1e-4 * ell_curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rel() -> CharacteristicExponent {
        CharacteristicExponent::relativistic(1.0, 1.5).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(rel().evaluate(0.0).unwrap(), 0.0);
        let b = CharacteristicExponent::brownian(1.0).unwrap();
        assert_eq!(b.evaluate(2.0).unwrap(), 4.0);
        // 2^{0.75} - 1, from the closed form with plain powf.
        let direct = 2f64.powf(0.75) - 1.0;
        assert_relative_eq!(rel().evaluate(1.0).unwrap(), direct, max_relative = 1e-14);
        assert_relative_eq!(rel().evaluate(1.0).unwrap(), 0.681_792_830_507_429, epsilon = 1e-14);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(CharacteristicExponent::brownian(0.0).is_err());
        assert!(CharacteristicExponent::symmetric_stable(2.5).is_err());
        assert!(CharacteristicExponent::relativistic(1.0, 0.9).is_err());
        assert!(CharacteristicExponent::relativistic(-1.0, 1.5).is_err());
        assert!(BernsteinSpec::from_family(BernsteinFamily::Gamma { scale: 1.0, rate: 0.0 }).is_err());
        let bad = BernsteinSpec::custom("neg", Arc::new(|s: f64| -s), None);
        assert!(bad.is_err());
    }

    #[test]
    fn curvature_examples() {
        assert_eq!(curvature_limit(&rel()).unwrap(), 0.75);
        assert_eq!(curvature_limit(&CharacteristicExponent::brownian(1.0).unwrap()).unwrap(), 1.0);
        let stable = CharacteristicExponent::symmetric_stable(1.5).unwrap();
        assert!(matches!(curvature_limit(&stable), Err(Error::Divergence(_))));
        let near2 = CharacteristicExponent::symmetric_stable(1.9).unwrap();
        assert!(matches!(curvature_limit(&near2), Err(Error::Divergence(_))));
    }

    #[test]
    fn numeric_curvature_matches_closed_form() {
        for (m, alpha) in [(1.0, 1.5), (0.5, 1.2), (2.0, 1.9)] {
            let psi = CharacteristicExponent::relativistic(m, alpha).unwrap();
            let numeric = numeric_curvature_limit(&psi).unwrap();
            assert_relative_eq!(numeric, psi.closed_form_ell().unwrap(), max_relative = 1e-6);
        }
        let b = CharacteristicExponent::brownian(2.5).unwrap();
        assert_relative_eq!(numeric_curvature_limit(&b).unwrap(), 2.5, max_relative = 1e-12);
    }

    #[test]
    fn subordinated_matches_relativistic_closed_form() {
        let spec = BernsteinSpec::relativistic(1.0, 1.5).unwrap();
        let sub = CharacteristicExponent::subordinated(spec);
        for x in [1e-3, 0.1, 0.7, 1.0, 3.0, 25.0] {
            assert_relative_eq!(
                sub.evaluate(x).unwrap(),
                rel().evaluate(x).unwrap(),
                max_relative = 1e-9
            );
        }
        assert_relative_eq!(sub.closed_form_ell().unwrap(), 0.75, max_relative = 1e-12);
        assert_relative_eq!(numeric_curvature_limit(&sub).unwrap(), 0.75, max_relative = 1e-6);
    }

    #[test]
    fn custom_measure_quadrature_matches_family() {
        let fam = BernsteinFamily::Gamma { scale: 0.7, rate: 2.0 };
        let custom =
            BernsteinSpec::custom("gamma-copy", Arc::new(move |s| 0.7 * (-2.0 * s).exp() / s), None)
                .unwrap();
        for x in [0.01, 1.0, 50.0] {
            assert_relative_eq!(
                custom.laplace_exponent(x).unwrap(),
                fam.laplace_exponent(x),
                max_relative = 1e-9
            );
        }
        assert_relative_eq!(custom.first_moment().unwrap(), 0.35, max_relative = 1e-10);
    }

    #[test]
    fn integrability_witness() {
        let spec = BernsteinSpec::relativistic(1.0, 1.5).unwrap();
        let w = spec.integrability_witness().unwrap();
        match (w.truncated_mass, w.first_moment) {
            (SeriesVerdict::Finite(_), SeriesVerdict::Finite(first)) => {
                assert_relative_eq!(first, 0.75, max_relative = 1e-6)
            }
            other => panic!("{other:?}"),
        }
        let untempered = BernsteinSpec::from_family(BernsteinFamily::TemperedStable {
            scale: 1.0,
            index: 0.5,
            tempering: 0.0,
        })
        .unwrap();
        let w = untempered.integrability_witness().unwrap();
        assert!(matches!(w.truncated_mass, SeriesVerdict::Finite(_)));
        assert_eq!(w.first_moment, SeriesVerdict::Diverged);
    }

    #[test]
    fn envelope_examples() {
        let b = CharacteristicExponent::brownian(1.0).unwrap();
        let e = envelope(&b, 0.5).unwrap();
        assert_relative_eq!(e.lower, 1.0, max_relative = 1e-14);
        assert_relative_eq!(e.upper, 1.0, max_relative = 1e-14);

        let e = envelope(&rel(), 1.0).unwrap();
        assert!(e.lower <= 0.75 && 0.75 <= e.upper + 1e-12);
        // Brute-force scan on 1e5 points.
        let psi = rel();
        let mut lo = f64::INFINITY;
        for i in 1..=100_000 {
            let x = i as f64 * 1e-5;
            lo = lo.min(psi.evaluate(x).unwrap() / (x * x));
        }
        assert!(e.lower <= lo + 1e-12);
        assert_relative_eq!(e.lower, lo, max_relative = 1e-9);
    }

    #[test]
    fn envelope_converges_to_ell() {
        let psi = rel();
        let mut prev_gap = f64::INFINITY;
        for j in 0..=12 {
            let e = envelope(&psi, 0.5f64.powi(j)).unwrap();
            let gap = e.upper - e.lower;
            assert!(gap <= prev_gap, "gap grew at j={j}");
            prev_gap = gap;
            if j == 12 {
                assert_relative_eq!(e.lower, 0.75, max_relative = 1e-6);
                assert_relative_eq!(e.upper, 0.75, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn classify_examples() {
        let r = classify_conditions(&rel());
        assert!(r.eligible, "{r:?}");

        let b = classify_conditions(&CharacteristicExponent::brownian(1.0).unwrap());
        assert_eq!(b.ell, EllStatus::Finite(1.0));
        assert!(b.hartman_wintner);
        match b.local_time_integral {
            LocalTimeIntegral::Finite(v) => assert_relative_eq!(v, std::f64::consts::PI, max_relative = 1e-6),
            other => panic!("{other:?}"),
        }

        let s = classify_conditions(&CharacteristicExponent::symmetric_stable(1.0).unwrap());
        assert!(matches!(s.ell, EllStatus::Diverged(_)));
        assert_eq!(s.local_time_integral, LocalTimeIntegral::Diverged);
        assert!(!s.eligible);

        // Variance gamma: Ψ grows like 2c·ln|x|, so Hartman–Wintner fails.
        let vg = CharacteristicExponent::subordinated(
            BernsteinSpec::from_family(BernsteinFamily::Gamma { scale: 1.0, rate: 1.0 }).unwrap(),
        );
        let r = classify_conditions(&vg);
        assert!(!r.hartman_wintner);
        assert!(!r.eligible);
    }

    #[test]
    fn second_moment_split_examples() {
        let s = second_moment_split(&rel()).unwrap();
        assert!(s.agrees);
        assert_relative_eq!(s.ell_from_measure, 0.75, max_relative = 1e-4);
        assert!(s.truncated_mass.is_finite() && s.truncated_mass > 0.0);

        let near2 = CharacteristicExponent::relativistic(1.0, 1.9).unwrap();
        let s = second_moment_split(&near2).unwrap();
        assert_relative_eq!(s.ell_from_measure, 0.95, max_relative = 1e-4);

        for (m, alpha) in [(0.3, 1.1), (3.0, 1.7)] {
            let s = second_moment_split(&CharacteristicExponent::relativistic(m, alpha).unwrap())
                .unwrap();
            assert!(s.agrees, "{m} {alpha}: {s:?}");
            assert!(s.truncated_mass.is_finite());
        }
        assert!(second_moment_split(&CharacteristicExponent::brownian(1.0).unwrap()).is_err());
    }

    fn any_exponent() -> impl Strategy<Value = CharacteristicExponent> {
        prop_oneof![
            (0.1f64..5.0).prop_map(|c| CharacteristicExponent::brownian(c).unwrap()),
            (0.2f64..=2.0).prop_map(|a| CharacteristicExponent::symmetric_stable(a).unwrap()),
            (0.1f64..5.0, 1.05f64..1.95)
                .prop_map(|(m, a)| CharacteristicExponent::relativistic(m, a).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn symmetric_nonnegative_monotone(psi in any_exponent(), x1 in 0.0f64..100.0, x2 in 0.0f64..100.0) {
            let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
            let a = psi.evaluate(lo).unwrap();
            let b = psi.evaluate(hi).unwrap();
            prop_assert_eq!(psi.evaluate(-lo).unwrap(), a);
            prop_assert!(a >= 0.0);
            prop_assert!(a <= b + 1e-12);
        }

        #[test]
        fn envelope_sandwich(m in 0.2f64..3.0, alpha in 1.1f64..1.9, delta in 0.05f64..4.0, frac in 0.0f64..1.0) {
            let psi = CharacteristicExponent::relativistic(m, alpha).unwrap();
            let e = envelope(&psi, delta).unwrap();
            let x = (frac * delta).max(1e-9);
            let v = psi.evaluate(x).unwrap();
            let tol = 1e-10 * x * x;
            prop_assert!(e.lower * x * x - tol <= v);
            prop_assert!(v <= e.upper * x * x + tol);
        }
    }
}
