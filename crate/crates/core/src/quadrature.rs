//! Numerical integration primitives shared by every module.
//!
//! * [`adaptive`]: globally adaptive 15-point Gauss–Kronrod on a finite interval.
//! * [`semi_infinite`] / [`real_line`]: the same rule after the map
//!   `x = a + (1 - u) / u`.
//! * [`GaussLegendre`]: fixed rules for hot loops where the integrand is known
//!   to be smooth on each panel.
//! * [`golden_section`]: one-dimensional extremum refinement.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Stopping rule for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }

    pub fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Non-finite integrand values abort with a quadrature failure rather than
/// propagating NaN into callers.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "finite interval required, got [{a}, {b}]"
        )));
    }
    let (value, error) = kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut intervals = 1;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::QuadratureFailure {
                what: format!("non-finite integrand on [{a}, {b}]"),
                estimate: total,
                error: total_err,
            });
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if intervals >= tol.max_intervals {
            return Err(Error::QuadratureFailure {
                what: format!("interval budget {} exhausted on [{a}, {b}]", tol.max_intervals),
                estimate: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Cannot split further in floating point.
            return Err(Error::QuadratureFailure {
                what: format!("roundoff limit near x = {mid}"),
                estimate: total,
                error: total_err,
            });
        }
        let (v1, e1) = kronrod15(&f, worst.a, mid);
        let (v2, e2) = kronrod15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        intervals += 1;
    }
    // Re-sum to shed accumulated cancellation from the running totals.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Integral {
        value,
        error,
        intervals,
    })
}

/// Integrates `f` over `[a, b]` with the interval split at each breakpoint
/// strictly inside it.
pub fn adaptive_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    let mut cuts: Vec<f64> = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
    cuts.push(b);
    let mut out = Integral {
        value: 0.0,
        error: 0.0,
        intervals: 0,
    };
    for w in cuts.windows(2) {
        let part = adaptive(&f, w[0], w[1], tol)?;
        out.value += part.value;
        out.error += part.error;
        out.intervals += part.intervals;
    }
    Ok(out)
}

/// `∫_a^∞ f(x) dx` through the substitution `x = a + (1 - u)/u`.
pub fn semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<Integral> {
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let x = a + (1.0 - u) / u;
        let v = f(x) / (u * u);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive(g, 0.0, 1.0, tol)
}

/// `∫_ℝ f(x) dx`.
pub fn real_line<F: Fn(f64) -> f64>(f: F, tol: Tolerance) -> Result<Integral> {
    semi_infinite(|x| f(x) + f(-x), 0.0, tol)
}

/// Fixed-order Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 20-point rule.
    pub fn order20() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(20))
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(c + h * x))
            .sum();
        s * h
    }

    /// Composite rule with `panels` equal panels.
    pub fn composite<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> f64 {
        let panels = panels.max(1);
        let w = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + w * i as f64;
                let hi = if i + 1 == panels { b } else { lo + w };
                self.integrate(&f, lo, hi)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > tol * (c.abs() + d.abs()).max(f64::MIN_POSITIVE) && iter < 200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Outcome of a doubling (or dyadic-shell) series test.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum SeriesVerdict {
    Finite(f64),
    Diverged,
    Inconclusive(f64),
}

/// Classifies `Σ_j increment(j)` (non-negative increments, j = 0, 1, …) as
/// finite or divergent.
///
/// The partial sums are corrected by a geometric tail estimate; the series is
/// finite once the corrected sum moves by less than `rel_tol` between levels,
/// and divergent once the increment ratio stays at or above `stall_ratio` for
/// `stall_run` consecutive levels.
pub fn classify_series<F: FnMut(u32) -> Result<f64>>(
    mut increment: F,
    max_levels: u32,
    rel_tol: f64,
    stall_ratio: f64,
    stall_run: u32,
) -> Result<SeriesVerdict> {
    let mut sum = 0.0;
    let mut prev_inc: Option<f64> = None;
    let mut prev_estimate: Option<f64> = None;
    let mut stalls = 0;
    for j in 0..=max_levels {
        let inc = increment(j)?;
        if !inc.is_finite() {
            return Ok(SeriesVerdict::Diverged);
        }
        sum += inc;
        let mut estimate = sum;
        if let Some(p) = prev_inc {
            let ratio = if p > 0.0 { inc / p } else { 0.0 };
            if ratio >= stall_ratio {
                stalls += 1;
                if stalls >= stall_run {
                    return Ok(SeriesVerdict::Diverged);
                }
            } else {
                stalls = 0;
                if ratio > 0.0 {
                    estimate = sum + inc * ratio / (1.0 - ratio);
                }
            }
            if let Some(pe) = prev_estimate {
                if stalls == 0 && (estimate - pe).abs() <= rel_tol * estimate.abs() && j >= 3 {
                    return Ok(SeriesVerdict::Finite(estimate));
                }
            }
        }
        if inc == 0.0 && j >= 3 && prev_inc == Some(0.0) {
            return Ok(SeriesVerdict::Finite(sum));
        }
        prev_inc = Some(inc);
        prev_estimate = Some(estimate);
    }
    Ok(SeriesVerdict::Inconclusive(sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kronrod_polynomials_exact() {
        let r = adaptive(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, Tolerance::default()).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-12);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn handles_endpoint_singularity() {
        let r = adaptive(|x: f64| x.powf(-0.5), 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn infinite_ranges() {
        let r = real_line(|x: f64| (-x * x).exp(), Tolerance::default()).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-10);
        let r = semi_infinite(|x| 1.0 / (1.0 + x * x), 0.0, Tolerance::default()).unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let r = adaptive(|x: f64| 1.0 / x, 1e-300, 1.0, Tolerance::default().with_max_intervals(10));
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn gauss_legendre_weights_and_exactness() {
        for n in [1, 2, 5, 20, 33] {
            let gl = GaussLegendre::new(n);
            let w: f64 = gl.weights().iter().sum();
            assert!((w - 2.0).abs() < 1e-13, "n={n} sum={w}");
            let deg = 2 * n - 1;
            let v = gl.integrate(|x| x.powi(deg as i32 - 1), 0.0, 1.0);
            assert!((v - 1.0 / deg as f64).abs() < 1e-13);
        }
        let v = GaussLegendre::order20().composite(f64::cos, 0.0, 10.0, 4);
        assert!((v - 10f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn golden_section_finds_minimum() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_classifier() {
        // Σ 2^{-j} = 2
        let v = classify_series(|j| Ok(0.5f64.powi(j as i32)), 60, 1e-12, 0.99, 5).unwrap();
        match v {
            SeriesVerdict::Finite(s) => assert!((s - 2.0).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
        let v = classify_series(|_| Ok(1.0), 60, 1e-12, 0.99, 5).unwrap();
        assert_eq!(v, SeriesVerdict::Diverged);
        // Harmonic increments never settle within 10 levels.
        let v = classify_series(|j| Ok(1.0 / (j as f64 + 1.0)), 10, 1e-12, 0.99, 5).unwrap();
        assert!(matches!(v, SeriesVerdict::Inconclusive(_)));
    }
}
