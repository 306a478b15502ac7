//! Test functions `f` with known, real and even Fourier transforms
//! `f̂(ξ) = ∫ e^{iξx} f(x) dx`, the integrability checks defining the admissible
//! class, and the band-limited transforms used by the decomposition.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::ScalarFn;
use crate::quadrature::{self, classify_series, GaussLegendre, SeriesVerdict, Tolerance};

/// Hard cap on panels in [`band_transform`].
const MAX_BAND_PANELS: usize = 100_000;

#[derive(Clone)]
pub struct TestKernel {
    f: ScalarFn,
    fhat: ScalarFn,
    fhat_at_zero: f64,
    support_radius: Option<f64>,
    /// Points in `(0, support)` where `f̂` is not smooth.
    breakpoints: Vec<f64>,
    label: String,
}

impl fmt::Debug for TestKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestKernel")
            .field("label", &self.label)
            .field("fhat_at_zero", &self.fhat_at_zero)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl TestKernel {
    /// Builds a kernel, rejecting transforms that are not even on a test grid.
    pub fn new(
        label: impl Into<String>,
        f: ScalarFn,
        fhat: ScalarFn,
        support_radius: Option<f64>,
        breakpoints: Vec<f64>,
    ) -> Result<Self> {
        let label = label.into();
        for i in 0..=400 {
            let xi = 0.01 * i as f64 * (1.0 + 0.013 * i as f64);
            let (a, b) = (fhat(xi), fhat(-xi));
            if !(a.is_finite() && (a - b).abs() <= 1e-12 * (1.0 + a.abs())) {
                return Err(Error::InvalidParameter(format!(
                    "kernel {label}: transform must be real and even (fhat({xi}) = {a}, fhat(-{xi}) = {b})"
                )));
            }
        }
        if let Some(r) = support_radius {
            if !(r > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "kernel {label}: support radius must be > 0"
                )));
            }
        }
        let fhat_at_zero = fhat(0.0);
        Ok(Self {
            f,
            fhat,
            fhat_at_zero,
            support_radius,
            breakpoints,
            label,
        })
    }

    #[inline]
    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    #[inline]
    pub fn fhat(&self, xi: f64) -> f64 {
        (self.fhat)(xi)
    }

    pub fn fhat_at_zero(&self) -> f64 {
        self.fhat_at_zero
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Breakpoints of `f̂` (plus its support edge) inside `(0, r)`.
    fn cuts_below(&self, r: f64) -> Vec<f64> {
        let mut cuts: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .chain(self.support_radius)
            .filter(|&c| c > 0.0 && c < r)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }
}

/// `f(x) = (2π)^{-1/2} e^{-x²/2}`, `f̂(ξ) = e^{-ξ²/2}`.
pub fn gaussian_kernel() -> TestKernel {
    let norm = (2.0 * PI).sqrt().recip();
    TestKernel::new(
        "gaussian",
        Arc::new(move |x| norm * (-0.5 * x * x).exp()),
        Arc::new(|xi| (-0.5 * xi * xi).exp()),
        None,
        Vec::new(),
    )
    .expect("gaussian kernel is even")
}

/// `f(x) = (2π)^{-1/2}(1 - x²)e^{-x²/2}`, `f̂(ξ) = ξ²e^{-ξ²/2}`: a kernel
/// with `f̂(0) = 0`, for which the limit comparison is vacuous.
pub fn mexican_hat_kernel() -> TestKernel {
    let norm = (2.0 * PI).sqrt().recip();
    TestKernel::new(
        "mexican_hat",
        Arc::new(move |x| norm * (1.0 - x * x) * (-0.5 * x * x).exp()),
        Arc::new(|xi| xi * xi * (-0.5 * xi * xi).exp()),
        None,
        Vec::new(),
    )
    .expect("mexican hat kernel is even")
}

fn jvp_f(x: f64) -> f64 {
    let ratio = if x.abs() < 1e-4 {
        // sin(x/2)/x = 1/2 - x²/48 + O(x⁴)
        0.5 - x * x / 48.0
    } else {
        (0.5 * x).sin() / x
    };
    let r2 = ratio * ratio;
    12.0 / PI * r2 * r2
}

fn jvp_fhat(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 {
        1.0 - 1.5 * a * a + 0.75 * a * a * a
    } else if a <= 2.0 {
        let b = 2.0 - a;
        0.25 * b * b * b
    } else {
        0.0
    }
}

/// Jackson–de la Vallée-Poussin kernel `f(x) = (12/π)(sin(x/2)/x)⁴`, whose
/// transform is a piecewise cubic supported on `[-2, 2]`.
pub fn jvp_kernel() -> TestKernel {
    TestKernel::new(
        "jvp",
        Arc::new(jvp_f),
        Arc::new(jvp_fhat),
        Some(2.0),
        vec![1.0],
    )
    .expect("jvp kernel is even")
}

/// `a * b`: transform is the pointwise product; `f` is evaluated by numeric
/// convolution on each call.
pub fn convolve(a: &TestKernel, b: &TestKernel) -> TestKernel {
    let support_radius = match (a.support_radius, b.support_radius) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    };
    let mut breakpoints: Vec<f64> = a.breakpoints.iter().chain(&b.breakpoints).copied().collect();
    breakpoints.extend(a.support_radius.into_iter().chain(b.support_radius));
    if let Some(r) = support_radius {
        breakpoints.retain(|&c| c < r);
    }
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let (fa, fb) = (a.f.clone(), b.f.clone());
    let f: ScalarFn = Arc::new(move |x| {
        let tol = Tolerance::new(1e-14, 1e-11).with_max_intervals(4000);
        // ∫ fa(y) fb(x - y) dy, split at y = x/2 so both peaks sit at endpoints.
        let mid = 0.5 * x;
        let left = quadrature::semi_infinite(|u| fa(mid - u) * fb(mid + u), 0.0, tol);
        let right = quadrature::semi_infinite(|u| fa(mid + u) * fb(mid - u), 0.0, tol);
        match (left, right) {
            (Ok(l), Ok(r)) => l.value + r.value,
            _ => f64::NAN,
        }
    });
    let (ha, hb) = (a.fhat.clone(), b.fhat.clone());
    TestKernel::new(
        format!("{}*{}", a.label, b.label),
        f,
        Arc::new(move |xi| ha(xi) * hb(xi)),
        support_radius,
        breakpoints,
    )
    .expect("product of even transforms is even")
}

/// Resolves the kernel labels accepted in configuration files.
pub fn kernel_by_label(label: &str) -> Result<TestKernel> {
    match label.trim() {
        "gaussian" => Ok(gaussian_kernel()),
        "jvp" => Ok(jvp_kernel()),
        "gaussian*jvp" | "jvp*gaussian" => Ok(convolve(&gaussian_kernel(), &jvp_kernel())),
        "jvp*jvp" => Ok(convolve(&jvp_kernel(), &jvp_kernel())),
        "gaussian*gaussian" => Ok(convolve(&gaussian_kernel(), &gaussian_kernel())),
        "mexican_hat" => Ok(mexican_hat_kernel()),
        other => Err(Error::Config(format!(
            "unknown kernel '{other}' (expected gaussian, jvp, gaussian*jvp, jvp*jvp, gaussian*gaussian or mexican_hat)"
        ))),
    }
}

/// Outcome of the three admissibility conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassDReport {
    /// `f ∈ L¹ ∩ L^∞`
    pub c0: bool,
    pub l1_norm: f64,
    pub sup_norm: f64,
    /// `∫ |f̂|`
    pub c1: SeriesVerdict,
    /// `∫ |f̂(x) - f̂(0)| / x² dx`
    pub c2: SeriesVerdict,
    /// The `|x| ≤ 1` part of `c2`.
    pub c2_inner: SeriesVerdict,
    pub member: bool,
}

fn combine(a: SeriesVerdict, b: SeriesVerdict) -> SeriesVerdict {
    use SeriesVerdict::*;
    match (a, b) {
        (Diverged, _) | (_, Diverged) => Diverged,
        (Finite(x), Finite(y)) => Finite(x + y),
        (Finite(x) | Inconclusive(x), Finite(y) | Inconclusive(y)) => Inconclusive(x + y),
    }
}

/// Integral of an even, non-negative `g` over `ℝ` by dyadic shells
/// `[2^{j-1}, 2^j]` (with `[0, 1]` first), classified as finite or divergent.
fn even_line_integral<G: Fn(f64) -> f64>(g: G, cuts: &[f64]) -> Result<SeriesVerdict> {
    let tol = Tolerance::new(1e-13, 1e-10).with_max_intervals(4000);
    classify_series(
        |j| {
            let (lo, hi) = if j == 0 {
                (0.0, 1.0)
            } else {
                (2f64.powi(j as i32 - 1), 2f64.powi(j as i32))
            };
            Ok(2.0 * quadrature::adaptive_with_breaks(&g, lo, hi, cuts, tol)?.value)
        },
        60,
        1e-8,
        0.99,
        5,
    )
}

/// Checks the admissibility conditions for `k`.
#[allow(non_snake_case)]
pub fn check_class_D(k: &TestKernel) -> Result<ClassDReport> {
    let cuts = k.cuts_below(f64::INFINITY);

    // C0: L¹ norm of f by dyadic shells and a sup over a log-spaced grid.
    let l1 = even_line_integral(|x| k.f(x).abs() + k.f(-x).abs(), &[]).map(|v| match v {
        SeriesVerdict::Finite(x) => SeriesVerdict::Finite(0.5 * x),
        other => other,
    })?;
    let mut sup = k.f(0.0).abs();
    for i in 0..=2000 {
        let x = 1e-6 * 1.01f64.powi(i);
        sup = sup.max(k.f(x).abs()).max(k.f(-x).abs());
    }
    let (c0, l1_norm) = match l1 {
        SeriesVerdict::Finite(v) => (sup.is_finite(), v),
        SeriesVerdict::Diverged => (false, f64::INFINITY),
        SeriesVerdict::Inconclusive(v) => (false, v),
    };

    // C1
    let c1 = match k.support_radius {
        Some(r) => {
            let v = quadrature::adaptive_with_breaks(
                |x| k.fhat(x).abs(),
                0.0,
                r,
                &cuts,
                Tolerance::new(1e-14, 1e-13),
            )?;
            SeriesVerdict::Finite(2.0 * v.value)
        }
        None => even_line_integral(|x| k.fhat(x).abs(), &cuts)?,
    };

    // C2, inner part over dyadic shells [2^{-j-1}, 2^{-j}] shrinking to 0.
    let f0 = k.fhat_at_zero;
    let g = |x: f64| (k.fhat(x) - f0).abs() / (x * x);
    // f̂(x) - f̂(0) loses digits to cancellation as x → 0, so the relative
    // tolerance here is looser than elsewhere.
    let tol = Tolerance::new(1e-15, 1e-8).with_max_intervals(4000);
    let c2_inner = classify_series(
        |j| {
            let hi = 2f64.powi(-(j as i32));
            Ok(2.0 * quadrature::adaptive_with_breaks(g, 0.5 * hi, hi, &cuts, tol)?.value)
        },
        60,
        1e-7,
        0.99,
        5,
    )?;
    let outer = {
        let near = match k.support_radius {
            Some(r) if r > 1.0 => quadrature::adaptive_with_breaks(g, 1.0, r, &cuts, tol)?.value,
            _ => 0.0,
        };
        let start = k.support_radius.map_or(1.0, |r| r.max(1.0));
        let far = quadrature::semi_infinite(g, start, tol)?.value;
        SeriesVerdict::Finite(2.0 * (near + far))
    };
    let c2 = combine(c2_inner, outer);
    let member = c0
        && matches!(c1, SeriesVerdict::Finite(_))
        && matches!(c2, SeriesVerdict::Finite(_));
    Ok(ClassDReport {
        c0,
        l1_norm,
        sup_norm: sup,
        c1,
        c2,
        c2_inner,
        member,
    })
}

/// `∫_{|x|≤δ} f̂(x) cos(xy) dx` and the same with `f̂(x) - f̂(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandTransform {
    pub full: f64,
    pub centered: f64,
    pub panels: usize,
    /// Panel count hit the cap; panels were widened beyond a half period.
    pub saturated: bool,
}

/// `2 sin(δy)/y`, with the series at the removable singularity.
#[inline]
pub fn band_indicator_transform(delta: f64, y: f64) -> f64 {
    let z = delta * y;
    if z.abs() < 1e-8 {
        2.0 * delta * (1.0 - z * z / 6.0)
    } else {
        2.0 * z.sin() / y
    }
}

/// Both band integrals by 20-point Gauss–Legendre panels of width at most
/// `min(π/|y|, 1)`, aligned with the breakpoints of `f̂`.
pub fn band_transform(k: &TestKernel, delta: f64, y: f64) -> Result<BandTransform> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    let ay = y.abs();
    let upper = k.support_radius.map_or(delta, |r| r.min(delta));
    let width = if ay > 0.0 { (PI / ay).min(1.0) } else { 1.0 };

    let mut edges = vec![0.0];
    edges.extend(k.cuts_below(upper));
    edges.push(upper);
    let wanted: usize = edges
        .windows(2)
        .map(|w| ((w[1] - w[0]) / width).ceil().max(1.0) as usize)
        .sum();
    let saturated = wanted > MAX_BAND_PANELS;
    let scale = if saturated {
        wanted as f64 / MAX_BAND_PANELS as f64
    } else {
        1.0
    };

    let gl = GaussLegendre::order20();
    let f0 = k.fhat_at_zero;
    let (mut full, mut centered, mut panels) = (0.0, 0.0, 0);
    for w in edges.windows(2) {
        let count = (((w[1] - w[0]) / (width * scale)).ceil().max(1.0)) as usize;
        let step = (w[1] - w[0]) / count as f64;
        for i in 0..count {
            let a = w[0] + step * i as f64;
            let b = if i + 1 == count { w[1] } else { a + step };
            let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
            for (x, wt) in gl.nodes().iter().zip(gl.weights()) {
                let xi = mid + half * x;
                let c = (xi * y).cos();
                let fh = k.fhat(xi);
                full += wt * half * fh * c;
                centered += wt * half * (fh - f0) * c;
            }
        }
        panels += count;
    }
    // Past the support f̂ vanishes, so the centered integrand is -f̂(0) cos(xy).
    if upper < delta {
        let tail = band_indicator_transform(delta, y) - band_indicator_transform(upper, y);
        centered -= 0.5 * f0 * tail;
    }
    Ok(BandTransform {
        full: 2.0 * full,
        centered: 2.0 * centered,
        panels,
        saturated,
    })
}
