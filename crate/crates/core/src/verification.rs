//! The property suite behind `levy-occ verify`: geometric identities and the
//! increment law of every sampler, each reported with its observed value,
//! expected value and tolerance.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{BernsteinFamily, BernsteinSpec, CharacteristicExponent};
use crate::geometry::{
    band_nesting_check, bracketing_check, h_f, h_f_limit, nesting_corner, polar_lemma_check,
    simplex_identity_check, MonotoneF,
};
use crate::rng::mix64;
use crate::sampling::{verify_increment_charfn, SamplerOptions};

/// One named check. `passed` is `|observed - expected| ≤ tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            observed,
            expected,
            tolerance,
            passed: (observed - expected).abs() <= tolerance,
            detail: detail.into(),
        }
    }

    fn flag(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(name, ok as u8 as f64, 1.0, 0.0, detail)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Paths per characteristic-function probe.
    pub charfn_paths: usize,
    /// Random points per band-nesting check.
    pub nesting_samples: usize,
    /// Directions for the k = 3 polar check.
    pub polar_mc: usize,
    /// Name of a check whose expected value is shifted far outside its
    /// tolerance, to exercise the failure path.
    pub inject_failure: Option<String>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            charfn_paths: 100_000,
            nesting_samples: 1_000_000,
            polar_mc: 200_000,
            inject_failure: None,
        }
    }
}

/// Models exercised by the increment-law checks.
pub fn suite_models() -> Result<Vec<CharacteristicExponent>> {
    Ok(vec![
        CharacteristicExponent::brownian(1.0)?,
        CharacteristicExponent::symmetric_stable(1.5)?,
        CharacteristicExponent::relativistic(1.0, 1.5)?,
        CharacteristicExponent::subordinated(BernsteinSpec::from_family(BernsteinFamily::Gamma {
            scale: 1.0,
            rate: 1.0,
        })?),
    ])
}

/// `(times, xs)` probe points: three single-time and two two-time probes.
pub fn charfn_probes() -> Vec<(Vec<f64>, Vec<f64>)> {
    vec![
        (vec![1.0], vec![0.5]),
        (vec![1.0], vec![1.5]),
        (vec![0.5], vec![1.0]),
        (vec![0.5, 1.0], vec![0.7, -0.3]),
        (vec![0.3, 1.0], vec![1.0, 1.0]),
    ]
}

pub fn geometry_checks(opts: &SuiteOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let g = MonotoneF::truncated_gaussian();

    for k in 1..=3 {
        for (label, c) in [
            ("polynomial", simplex_identity_check(|s| 1.0 + s * s, 2.0, k)?),
            ("exponential", simplex_identity_check(|s| (-s).exp(), 2.0, k)?),
        ] {
            out.push(CheckResult::new(
                format!("simplex_identity/{label}/k={k}"),
                c.rel_diff,
                0.0,
                1e-8,
                format!("power {:.15e}, simplex {:.15e}", c.power_side, c.simplex_side),
            ));
        }
    }

    for k in 1..=2 {
        let c = polar_lemma_check(&g, k, 4.0, 1.0, 0, opts.seed)?;
        out.push(CheckResult::new(
            format!("polar_lemma/k={k}"),
            c.rel_diff,
            0.0,
            1e-4,
            format!("cartesian {:.12e}, polar {:.12e}", c.left.value, c.right.value),
        ));
    }
    let c = polar_lemma_check(&g, 3, 4.0, 1.0, opts.polar_mc, opts.seed)?;
    out.push(CheckResult::new(
        "polar_lemma/k=3",
        c.z,
        0.0,
        3.0,
        format!(
            "cube {:.6} ± {:.1e}, directions {:.6} ± {:.1e} (observed in standard errors)",
            c.left.value, c.left.stderr, c.right.value, c.right.stderr
        ),
    ));

    let one = MonotoneF::constant(1.0);
    let v = h_f(&one, 2, 1.0, 1.0, 0, 0)?.value;
    out.push(CheckResult::new("h_f/unit_quarter_circle", v, PI / 2.0, 1e-12, "F = 1, k = 2"));
    out.push(CheckResult::new("h_f/limit_k2", h_f_limit(&g, 2), PI / 2.0, 1e-14, "‖F‖ = 1, k = 2"));

    let rs: Vec<f64> = (0..=60).map(|i| 0.25 * i as f64).collect();
    let vals = rs
        .iter()
        .map(|&r| h_f(&g, 2, r, 1.0, 0, 0).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let monotone = vals.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    out.push(CheckResult::flag("h_f/nondecreasing_in_r", monotone, "k = 2, r in [0, 15]"));

    // The approach to the limit is O(1/r): ≈ 2√(2/π)/(ξr) for k = 2.
    let r = 100.0;
    let v = h_f(&g, 2, r, 1.0, 0, 0)?.value;
    out.push(CheckResult::new(
        "h_f/limit_at_r=100",
        v,
        PI / 2.0,
        2.0 * (2.0 / PI).sqrt() / r * 1.05,
        "tolerance is the first-order gap 2√(2/π)/r plus 5%",
    ));

    let b = bracketing_check(&g, 2.0, 0.5, &[1.0, 10.0, 100.0, 1000.0])?;
    out.push(CheckResult::flag(
        "bracketing/inequalities",
        b.all_hold,
        format!("k = 2, eps = 0.5, {} values of L", b.rows.len()),
    ));
    let last = b.rows.last().expect("non-empty L list");
    out.push(CheckResult::new(
        "bracketing/middle_at_L=1000",
        last.middle,
        0.5,
        1e-3,
        "middle term tends to ‖H‖/k",
    ));

    for k in 1..=3 {
        let c = band_nesting_check(1.0, k, opts.nesting_samples, 5.0, opts.seed)?;
        out.push(CheckResult::new(
            format!("band_nesting/k={k}"),
            c.violations as f64,
            0.0,
            0.0,
            format!("{} points, {} inner, {} middle", c.samples, c.inner_hits, c.middle_hits),
        ));
    }
    let (mid, outer) = nesting_corner(1.0, 3);
    out.push(CheckResult::flag("band_nesting/corner", mid && outer, "(3, 2, 1) with δ = 1"));
    Ok(out)
}

pub fn sampling_checks(opts: &SuiteOptions) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let sampler = SamplerOptions::default();
    for (mi, psi) in suite_models()?.iter().enumerate() {
        for (pi, (times, xs)) in charfn_probes().iter().enumerate() {
            let seed = mix64(opts.seed ^ mix64(((mi as u64) << 8) | pi as u64));
            let c = verify_increment_charfn(psi, times, xs, opts.charfn_paths, seed, &sampler)?;
            let z = c.z_re.abs().max(c.z_im.abs());
            out.push(CheckResult::new(
                format!("increment_charfn/{}/probe{pi}", psi.label()),
                z,
                0.0,
                4.0,
                format!(
                    "times {times:?}, x {xs:?}: re {:.5} ± {:.1e}, im {:.5} ± {:.1e}, exact {:.5} (observed in standard errors)",
                    c.estimate_re, c.stderr_re, c.estimate_im, c.stderr_im, c.exact
                ),
            ));
        }
    }
    Ok(out)
}

/// Runs both suites; an unknown `inject_failure` name is a config error.
pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<CheckResult>> {
    let mut out = geometry_checks(opts)?;
    out.extend(sampling_checks(opts)?);
    if let Some(name) = &opts.inject_failure {
        let c = out.iter_mut().find(|c| &c.name == name).ok_or_else(|| {
            Error::Config(format!("no check named {name:?}; see the names in a default run"))
        })?;
        c.expected += 1.0 + 10.0 * c.tolerance;
        c.passed = (c.observed - c.expected).abs() <= c.tolerance;
        c.detail = format!("injected failure; {}", c.detail);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SuiteOptions {
        SuiteOptions {
            charfn_paths: 4000,
            nesting_samples: 20_000,
            polar_mc: 20_000,
            ..Default::default()
        }
    }

    #[test]
    fn geometry_suite_passes() {
        let r = geometry_checks(&quick()).unwrap();
        for c in &r {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn injection_fails_named_check() {
        let opts = SuiteOptions {
            inject_failure: Some("h_f/limit_k2".into()),
            ..quick()
        };
        let r = run_suite(&opts).unwrap();
        let failed: Vec<_> = r.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["h_f/limit_k2"]);
        let bad = SuiteOptions {
            inject_failure: Some("nope".into()),
            ..quick()
        };
        assert!(matches!(run_suite(&bad), Err(Error::Config(_))));
    }
}
