//! Transition densities by Fourier inversion of `e^{-tΨ}`.
//!
//! Because `Ψ` is even and non-decreasing on `[0, ∞)`,
//! `p_t(x) = π^{-1} ∫_0^∞ cos(xξ) e^{-tΨ(ξ)} dξ`, and the integral is cut at the
//! radius `R` where `e^{-tΨ(R)}` drops below `tail_tol`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{hartman_wintner_evidence, CharacteristicExponent};
use crate::quadrature::{self, classify_series, SeriesVerdict, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionSettings {
    pub abs_tol: f64,
    pub tail_tol: f64,
    pub max_panels: usize,
    /// Hard cap on the truncation radius.
    pub radius_cap: f64,
}

impl Default for InversionSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            tail_tol: 1e-12,
            max_panels: 20_000,
            radius_cap: 1e100,
        }
    }
}

impl InversionSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.tail_tol > 0.0 && self.tail_tol < 1.0 && self.max_panels >= 1)
        {
            return Err(Error::InvalidParameter(format!(
                "inversion settings need abs_tol > 0, tail_tol in (0,1), max_panels >= 1: {self:?}"
            )));
        }
        Ok(())
    }

    fn tolerance(&self, parts: usize) -> Tolerance {
        Tolerance::new(self.abs_tol / parts as f64, 1e-10).with_max_intervals(5000)
    }
}

/// One evaluation of `p_t(x)` with its quadrature bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityValue {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub r_used: f64,
    pub panels: usize,
    /// The half-period panel count hit `max_panels`; panels were widened.
    pub saturated: bool,
}

/// Smallest `R` (to bisection precision) with `e^{-tΨ(R)} ≤ tail_tol`.
pub fn truncation_radius(
    psi: &CharacteristicExponent,
    t: f64,
    settings: &InversionSettings,
) -> Result<f64> {
    let target = -settings.tail_tol.ln() / t;
    let mut hi = 1.0;
    while psi.evaluate(hi)? < target {
        hi *= 2.0;
        if hi > settings.radius_cap {
            return Err(Error::TruncationFailure {
                cap: settings.radius_cap,
                tail_tol: settings.tail_tol,
            });
        }
    }
    let mut lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi.evaluate(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time must be > 0, got {t}")));
    }
    Ok(())
}

fn require_hartman_wintner(psi: &CharacteristicExponent) -> Result<()> {
    let (ok, ratios) = hartman_wintner_evidence(psi)?;
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "{} fails the Hartman-Wintner growth test (Psi(1e8)/ln(1e8+1) = {:.3e})",
            psi.label(),
            ratios[7]
        )));
    }
    Ok(())
}

/// `p_t(0) = π^{-1} ∫_0^R e^{-tΨ(ξ)} dξ`.
pub fn density_at_zero(
    psi: &CharacteristicExponent,
    t: f64,
    settings: &InversionSettings,
) -> Result<f64> {
    check_time(t)?;
    settings.validate()?;
    require_hartman_wintner(psi)?;
    density_at_zero_unchecked(psi, t, settings)
}

pub(crate) fn density_at_zero_unchecked(
    psi: &CharacteristicExponent,
    t: f64,
    settings: &InversionSettings,
) -> Result<f64> {
    let r = truncation_radius(psi, t, settings)?;
    let integral = quadrature::adaptive(
        |xi| (-t * psi.eval_or_nan(xi)).exp(),
        0.0,
        r,
        settings.tolerance(1),
    )?;
    Ok(integral.value / PI)
}

/// `p_t(x)`, integrated over half-periods of `cos(xξ)`.
///
/// Tiny negative values from cancellation in the far tail are clamped to 0.
pub fn density(
    psi: &CharacteristicExponent,
    t: f64,
    x: f64,
    settings: &InversionSettings,
) -> Result<DensityValue> {
    check_time(t)?;
    settings.validate()?;
    require_hartman_wintner(psi)?;
    let r = truncation_radius(psi, t, settings)?;
    let ax = x.abs();
    if ax == 0.0 {
        let p = density_at_zero_unchecked(psi, t, settings)?;
        return Ok(DensityValue {
            t,
            x,
            p,
            r_used: r,
            panels: 1,
            saturated: false,
        });
    }
    let wanted = (r * ax / PI).ceil().max(1.0);
    let saturated = wanted > settings.max_panels as f64;
    let panels = if saturated {
        settings.max_panels
    } else {
        wanted as usize
    };
    let width = if saturated { r / panels as f64 } else { PI / ax };
    let tol = settings.tolerance(panels);
    let mut sum = 0.0;
    for i in 0..panels {
        let lo = width * i as f64;
        let hi = (lo + width).min(r);
        if lo >= hi {
            break;
        }
        sum += quadrature::adaptive(|xi| (ax * xi).cos() * (-t * psi.eval_or_nan(xi)).exp(), lo, hi, tol)?
            .value;
    }
    Ok(DensityValue {
        t,
        x,
        p: (sum / PI).max(0.0),
        r_used: r,
        panels,
        saturated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum LocalTimeIntegral {
    Finite(f64),
    Diverged,
    Inconclusive(f64),
}

/// `∫_ℝ dx/(1+Ψ(x))` by truncation doubling `R = 2^j`, `j ≤ 40`.
///
/// Finite once the tail-corrected partial integral moves by less than 1e-6
/// (relative) between doublings; diverged once the doubling increments stop
/// shrinking for five consecutive levels.
pub fn local_time_integral(psi: &CharacteristicExponent) -> Result<LocalTimeIntegral> {
    let tol = Tolerance::new(1e-14, 1e-11).with_max_intervals(4000);
    let shell = |j: u32| -> Result<f64> {
        let (lo, hi) = if j == 0 {
            (0.0, 1.0)
        } else {
            (2f64.powi(j as i32 - 1), 2f64.powi(j as i32))
        };
        let v = quadrature::adaptive(|x| 1.0 / (1.0 + psi.eval_or_nan(x)), lo, hi, tol)?.value;
        Ok(2.0 * v)
    };
    Ok(match classify_series(shell, 40, 1e-6, 0.99, 5)? {
        SeriesVerdict::Finite(v) => LocalTimeIntegral::Finite(v),
        SeriesVerdict::Diverged => LocalTimeIntegral::Diverged,
        SeriesVerdict::Inconclusive(v) => LocalTimeIntegral::Inconclusive(v),
    })
}

/// `∫_0^β p_s(0) ds`, through `s = u²` to tame the small-time blow-up.
pub fn integrated_density_at_zero(
    psi: &CharacteristicExponent,
    beta: f64,
    settings: &InversionSettings,
) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
    }
    settings.validate()?;
    require_hartman_wintner(psi)?;
    small_time_leg(psi, beta, settings)
}

fn small_time_leg(psi: &CharacteristicExponent, beta: f64, settings: &InversionSettings) -> Result<f64> {
    let integrand = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        density_at_zero_unchecked(psi, u * u, settings)
            .map(|p| 2.0 * u * p)
            .unwrap_or(f64::NAN)
    };
    quadrature::adaptive(
        integrand,
        0.0,
        beta.sqrt(),
        Tolerance::new(1e-9, 1e-8).with_max_intervals(400),
    )
    .map(|i| i.value)
    .map_err(|e| match e {
        Error::QuadratureFailure { estimate, error, .. } => Error::QuadratureFailure {
            what: "small-time leg of the density integral did not converge".into(),
            estimate,
            error,
        },
        other => other,
    })
}

/// `a^{-1} ∫_0^a p_s(0) ds = a^{-1} ∫_0^β p_s(0) ds + ∫_{β/a}^1 p_{as}(0) ds`.
pub fn cesaro_density_decay(
    psi: &CharacteristicExponent,
    a: f64,
    beta: f64,
    settings: &InversionSettings,
) -> Result<f64> {
    if !(a > beta && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need a > beta > 0, got a = {a}, beta = {beta}"
        )));
    }
    settings.validate()?;
    require_hartman_wintner(psi)?;
    match local_time_integral(psi)? {
        LocalTimeIntegral::Finite(_) => {}
        other => {
            return Err(Error::InvalidParameter(format!(
                "{} has no finite local-time integral ({other:?})",
                psi.label()
            )))
        }
    }
    let head = small_time_leg(psi, beta, settings)? / a;
    let body = quadrature::adaptive(
        |s| density_at_zero_unchecked(psi, a * s, settings).unwrap_or(f64::NAN),
        beta / a,
        1.0,
        Tolerance::new(1e-10, 1e-9).with_max_intervals(400),
    )?
    .value;
    Ok(head + body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rel() -> CharacteristicExponent {
        CharacteristicExponent::relativistic(1.0, 1.5).unwrap()
    }
    fn bm() -> CharacteristicExponent {
        CharacteristicExponent::brownian(1.0).unwrap()
    }

    /// Composite trapezoid on [0, R]; an oracle independent of the adaptive rule.
    fn trapezoid<F: Fn(f64) -> f64>(f: F, r: f64, n: usize) -> f64 {
        let h = r / n as f64;
        let mut s = 0.5 * (f(0.0) + f(r));
        for i in 1..n {
            s += f(h * i as f64);
        }
        s * h
    }

    #[test]
    fn brownian_density_at_zero() {
        let s = InversionSettings::default();
        let p1 = density_at_zero(&bm(), 1.0, &s).unwrap();
        assert_relative_eq!(p1, 0.5 / PI.sqrt(), max_relative = 1e-9);
        let p4 = density_at_zero(&bm(), 4.0, &s).unwrap();
        assert_relative_eq!(p4, p1 / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn relativistic_density_two_quadratures() {
        let s = InversionSettings::default();
        let psi = rel();
        let v = density_at_zero(&psi, 1.0, &s).unwrap();
        // Ψ_rel(x) ≥ |x|^{1.5} - m, so p_t(0) ≤ e^{mt} times the stable value.
        let stable = CharacteristicExponent::symmetric_stable(1.5).unwrap();
        let vs = density_at_zero(&stable, 1.0, &s).unwrap();
        assert!(v > vs && v < 1f64.exp() * vs, "{v} vs {vs}");
        let r = truncation_radius(&psi, 1.0, &s).unwrap();
        let oracle = trapezoid(|xi| (-psi.evaluate(xi).unwrap()).exp(), r, 400_000) / PI;
        assert_relative_eq!(v, oracle, max_relative = 1e-6);
    }

    #[test]
    fn density_is_radial_and_peaked() {
        let s = InversionSettings::default();
        let psi = rel();
        let p0 = density(&psi, 1.0, 0.0, &s).unwrap();
        for x in [0.3, 1.0, 2.5, 7.0] {
            let a = density(&psi, 1.0, x, &s).unwrap();
            let b = density(&psi, 1.0, -x, &s).unwrap();
            assert_eq!(a.p, b.p);
            assert!(a.p <= p0.p + 1e-12);
        }
        let b = density(&bm(), 1.0, 0.0, &s).unwrap();
        assert_relative_eq!(b.p, 0.282_094_791_773_878_1, max_relative = 1e-9);
        // Brownian with Ψ = x²: N(0, 2t).
        let b = density(&bm(), 1.0, 1.3, &s).unwrap();
        let exact = (-1.3f64 * 1.3 / 4.0).exp() / (4.0 * PI).sqrt();
        assert!((b.p - exact).abs() < 1e-9);
    }

    #[test]
    fn relativistic_density_normalizes() {
        let s = InversionSettings::default();
        let psi = rel();
        // Mass of [-L, L] via the adaptive rule on p(x); L = 40 leaves a tail of
        // order e^{-m^{2/α}·L}-type decay well below 1e-3.
        let mass = 2.0
            * quadrature::adaptive(
                |x| density(&psi, 1.0, x, &s).unwrap().p,
                0.0,
                40.0,
                Tolerance::new(1e-7, 1e-7),
            )
            .unwrap()
            .value;
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
    }

    #[test]
    fn saturation_flag() {
        let s = InversionSettings {
            max_panels: 4,
            ..Default::default()
        };
        let d = density(&bm(), 1.0, 100.0, &s).unwrap();
        assert!(d.saturated);
        assert_eq!(d.panels, 4);
    }

    #[test]
    fn monotone_in_time() {
        let s = InversionSettings::default();
        let psi = rel();
        let mut prev = f64::INFINITY;
        for t in [0.01, 0.1, 0.5, 1.0, 4.0, 30.0] {
            let p = density_at_zero(&psi, t, &s).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn errors() {
        let s = InversionSettings::default();
        assert!(density_at_zero(&bm(), 0.0, &s).is_err());
        let slow = CharacteristicExponent::symmetric_stable(0.3).unwrap();
        assert!(density_at_zero(&slow, 1.0, &s).is_err());
        let tight = InversionSettings {
            radius_cap: 10.0,
            ..Default::default()
        };
        assert!(matches!(
            truncation_radius(&bm(), 1e-3, &tight),
            Err(Error::TruncationFailure { .. })
        ));
    }

    #[test]
    fn local_time_examples() {
        match local_time_integral(&bm()).unwrap() {
            LocalTimeIntegral::Finite(v) => assert_relative_eq!(v, PI, max_relative = 1e-6),
            other => panic!("{other:?}"),
        }
        let cauchy = CharacteristicExponent::symmetric_stable(1.0).unwrap();
        assert_eq!(local_time_integral(&cauchy).unwrap(), LocalTimeIntegral::Diverged);
        match local_time_integral(&rel()).unwrap() {
            LocalTimeIntegral::Finite(v) => {
                // Oracle: the same integral over [0, ∞) with the mapped rule.
                let oracle = 2.0
                    * quadrature::semi_infinite(
                        |x| 1.0 / (1.0 + rel().evaluate(x).unwrap()),
                        0.0,
                        Tolerance::new(1e-12, 1e-12).with_max_intervals(10_000),
                    )
                    .unwrap()
                    .value;
                assert_relative_eq!(v, oracle, max_relative = 1e-5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cesaro_examples() {
        let s = InversionSettings::default();
        let v = cesaro_density_decay(&bm(), 4.0, 1.0, &s).unwrap();
        assert_relative_eq!(v, 0.5 / PI.sqrt(), max_relative = 1e-7);
        let v = cesaro_density_decay(&rel(), 1e3, 1.0, &s).unwrap();
        assert!(v < 0.05, "{v}");
        let mut prev = f64::INFINITY;
        for j in 4..=10 {
            let v = cesaro_density_decay(&rel(), 2f64.powi(j), 1.0, &s).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(cesaro_density_decay(&bm(), 1.0, 2.0, &s).is_err());
    }

    #[test]
    fn domination_inequality() {
        let s = InversionSettings::default();
        for psi in [bm(), rel()] {
            let lhs = 2.0 * PI * (-1f64).exp() * integrated_density_at_zero(&psi, 1.0, &s).unwrap();
            let LocalTimeIntegral::Finite(rhs) = local_time_integral(&psi).unwrap() else {
                panic!()
            };
            assert!(lhs <= rhs + 1e-8, "{lhs} > {rhs}");
        }
    }
}
