//! Simplex and sphere identities behind the moment computation: the power
//! identity on ordered simplices, the orthant spherical integral
//! `H_F^{(k)}(r, ξ) = ∫_{S^{k-1}_+} Π F(ξ r z_i) dσ(z)`, the polar change of
//! variables, the bracketing inequalities and the band-nesting inclusions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::exponents::ScalarFn;
use crate::quadrature::{self, GaussLegendre, Tolerance};
use crate::rng::RngContract;

/// `(2π)^{-1/2} ∫_{|y|≤λ} e^{-y²/2} dy = P(1/2, λ²/2)`.
///
/// The regularized incomplete gamma is used instead of `erf(λ/√2)`: the
/// latter is only good to about 1e-11 in statrs.
pub fn truncated_gaussian_mass(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    gamma_lr(0.5, 0.5 * lambda * lambda)
}

/// `|S^{k-1}| = 2π^{k/2}/Γ(k/2)`.
pub fn sphere_area(k: u32) -> f64 {
    let kf = k as f64;
    2.0 * (0.5 * kf * PI.ln() - ln_gamma(0.5 * kf)).exp()
}

/// Area of the positive orthant of the unit sphere, `2^{-k}|S^{k-1}|`.
pub fn orthant_area(k: u32) -> f64 {
    sphere_area(k) / 2f64.powi(k as i32)
}

/// A bounded, non-decreasing `F: [0, ∞) → [0, ∞)`.
#[derive(Clone)]
pub struct MonotoneF {
    f: ScalarFn,
    pub sup_value: f64,
    pub is_nondecreasing: bool,
    pub label: String,
}

impl fmt::Debug for MonotoneF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneF")
            .field("label", &self.label)
            .field("sup_value", &self.sup_value)
            .field("is_nondecreasing", &self.is_nondecreasing)
            .finish()
    }
}

impl MonotoneF {
    /// Wraps `f`; monotonicity and `0 ≤ F ≤ sup_value` are checked on a grid
    /// and recorded, and a negative or out-of-range value is an error.
    pub fn new(label: impl Into<String>, f: ScalarFn, sup_value: f64) -> Result<Self> {
        let label = label.into();
        let mut prev = f(0.0);
        let mut monotone = true;
        for i in 0..=2000 {
            let x = 1e-4 * 1.01f64.powi(i);
            let v = f(x);
            if !(v >= 0.0 && v <= sup_value * (1.0 + 1e-12)) {
                return Err(Error::InvalidParameter(format!(
                    "{label}: F({x}) = {v} outside [0, {sup_value}]"
                )));
            }
            monotone &= v >= prev - 1e-14;
            prev = v;
        }
        Ok(Self {
            f,
            sup_value,
            is_nondecreasing: monotone,
            label,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), Arc::new(move |_| c), c).expect("non-negative constant")
    }

    pub fn truncated_gaussian() -> Self {
        Self::new("truncated_gaussian_mass", Arc::new(truncated_gaussian_mass), 1.0)
            .expect("mass lies in [0, 1]")
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

/// A value with its Monte-Carlo (or zero, for quadrature) standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

fn quad_tol() -> Tolerance {
    Tolerance::new(1e-13, 1e-11).with_max_intervals(4000)
}

/// Uniform direction on `S^{k-1}_+`: absolute Gaussian components, normalized.
fn orthant_direction(rng: &mut crate::rng::StepRng, z: &mut [f64]) {
    let mut norm = 0.0;
    for v in z.iter_mut() {
        let g: f64 = StandardNormal.sample(rng);
        *v = g.abs();
        norm += g * g;
    }
    let norm = norm.sqrt();
    for v in z.iter_mut() {
        *v /= norm;
    }
}

/// `H_F^{(k)}(r, ξ)` for `k ≤ 4`: exact for `k = 1`, adaptive quadrature over
/// the quarter circle for `k = 2`, orthant Monte Carlo with `n_nodes` directions
/// for `k = 3, 4`.
pub fn h_f(f: &MonotoneF, k: u32, r: f64, xi: f64, n_nodes: usize, seed: u64) -> Result<Estimate> {
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidParameter(format!("k must be in 1..=4, got {k}")));
    }
    if !(r >= 0.0 && xi >= 0.0) {
        return Err(Error::InvalidParameter("r and xi must be >= 0".into()));
    }
    let s = xi * r;
    match k {
        1 => Ok(Estimate {
            value: f.eval(s),
            stderr: 0.0,
        }),
        2 => {
            // F(s sin θ) varies on the scale 1/s near each end of the arc;
            // geometric breakpoints keep the rule from stepping over it.
            let mut breaks = Vec::new();
            if s > 1.0 {
                let mut w = 1.0 / s;
                while w < 0.25 * PI {
                    breaks.push(w);
                    breaks.push(0.5 * PI - w);
                    w *= 4.0;
                }
                breaks.sort_by(f64::total_cmp);
            }
            let v = quadrature::adaptive_with_breaks(
                |th| f.eval(s * th.cos()) * f.eval(s * th.sin()),
                0.0,
                0.5 * PI,
                &breaks,
                quad_tol(),
            )?;
            Ok(Estimate {
                value: v.value,
                stderr: 0.0,
            })
        }
        _ => {
            if n_nodes < 2 {
                return Err(Error::Budget("need at least 2 Monte-Carlo directions".into()));
            }
            let contract = RngContract::new(seed, k as u64);
            let mut z = vec![0.0; k as usize];
            let (mut sum, mut sum2) = (0.0, 0.0);
            for i in 0..n_nodes as u64 {
                orthant_direction(&mut contract.step(i), &mut z);
                let v: f64 = z.iter().map(|zi| f.eval(s * zi)).product();
                sum += v;
                sum2 += v * v;
            }
            let n = n_nodes as f64;
            let mean = sum / n;
            let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
            let area = orthant_area(k);
            Ok(Estimate {
                value: area * mean,
                stderr: area * (var / n).sqrt(),
            })
        }
    }
}

/// `lim_{r→∞} H_F^{(k)}(r, ξ)`: `‖F‖_∞` for `k = 1`, else `2^{-k}‖F‖_∞^k |S^{k-1}|`.
pub fn h_f_limit(f: &MonotoneF, k: u32) -> f64 {
    if k == 1 {
        f.sup_value
    } else {
        f.sup_value.powi(k as i32) * orthant_area(k)
    }
}

/// Both sides of the polar change of variables on `D_k(L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarCheck {
    pub k: u32,
    pub left: Estimate,
    pub right: Estimate,
    pub rel_diff: f64,
    /// `|left - right|` in combined standard errors (0 for quadrature).
    pub z: f64,
}

/// Left side `∫_{D_k(L)} Π F(ξ√Δ_i)/√Δ_i ds` (with `u_i = √Δ_i`, i.e.
/// `2^k ∫_{Σu²<L, u>0} Π F(ξu_i) du`) against the polar form
/// `2^k ∫_0^{√L} r^{k-1} H_F^{(k)}(r, ξ) dr`.
///
/// `k ≤ 2` uses nested quadrature in Cartesian and polar coordinates; `k = 3`
/// uses Monte Carlo with `n_mc` points on each side.
pub fn polar_lemma_check(
    f: &MonotoneF,
    k: u32,
    big_l: f64,
    xi: f64,
    n_mc: usize,
    seed: u64,
) -> Result<PolarCheck> {
    if !(big_l > 0.0 && xi > 0.0) {
        return Err(Error::InvalidParameter("L and xi must be > 0".into()));
    }
    let root = big_l.sqrt();
    let (left, right) = match k {
        1 => {
            let l = quadrature::adaptive(|u| f.eval(xi * u), 0.0, root, quad_tol())?.value;
            let r = quadrature::adaptive(|r| h_f(f, 1, r, xi, 0, 0).map_or(f64::NAN, |e| e.value), 0.0, root, quad_tol())?.value;
            (
                Estimate { value: 2.0 * l, stderr: 0.0 },
                Estimate { value: 2.0 * r, stderr: 0.0 },
            )
        }
        2 => {
            let inner = |u1: f64| {
                let top = (big_l - u1 * u1).max(0.0).sqrt();
                quadrature::adaptive(|u2| f.eval(xi * u2), 0.0, top, quad_tol())
                    .map_or(f64::NAN, |v| f.eval(xi * u1) * v.value)
            };
            let l = quadrature::adaptive(inner, 0.0, root, quad_tol())?.value;
            let r = quadrature::adaptive(
                |r| r * h_f(f, 2, r, xi, 0, 0).map_or(f64::NAN, |e| e.value),
                0.0,
                root,
                quad_tol(),
            )?
            .value;
            (
                Estimate { value: 4.0 * l, stderr: 0.0 },
                Estimate { value: 4.0 * r, stderr: 0.0 },
            )
        }
        3 => {
            if n_mc < 2 {
                return Err(Error::Budget("need at least 2 Monte-Carlo points".into()));
            }
            let n = n_mc as f64;
            // Left: uniform points in the cube [0, √L]³, restricted to the ball.
            let contract = RngContract::new(seed, 0);
            let (mut s, mut s2) = (0.0, 0.0);
            for i in 0..n_mc as u64 {
                let mut rng = contract.step(i);
                let u: [f64; 3] = std::array::from_fn(|_| root * rng.open01());
                let v = if u.iter().map(|x| x * x).sum::<f64>() < big_l {
                    u.iter().map(|x| f.eval(xi * x)).product()
                } else {
                    0.0
                };
                s += v;
                s2 += v * v;
            }
            let vol = 8.0 * root.powi(3);
            let mean = s / n;
            let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
            let left = Estimate {
                value: vol * mean,
                stderr: vol * (var / n).sqrt(),
            };
            // Right: random orthant directions, radial integral by Gauss–Legendre.
            let contract = RngContract::new(seed, 1);
            let gl = GaussLegendre::order20();
            let mut z = [0.0; 3];
            let (mut s, mut s2) = (0.0, 0.0);
            for i in 0..n_mc as u64 {
                orthant_direction(&mut contract.step(i), &mut z);
                let v = gl.composite(
                    |r| r * r * z.iter().map(|zi| f.eval(xi * r * zi)).product::<f64>(),
                    0.0,
                    root,
                    8,
                );
                s += v;
                s2 += v * v;
            }
            let scale = 8.0 * orthant_area(3);
            let mean = s / n;
            let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
            let right = Estimate {
                value: scale * mean,
                stderr: scale * (var / n).sqrt(),
            };
            (left, right)
        }
        _ => return Err(Error::InvalidParameter(format!("k must be 1, 2 or 3, got {k}"))),
    };
    let diff = (left.value - right.value).abs();
    let se = (left.stderr.powi(2) + right.stderr.powi(2)).sqrt();
    Ok(PolarCheck {
        k,
        left,
        right,
        rel_diff: diff / left.value.abs().max(f64::MIN_POSITIVE),
        z: if se > 0.0 { diff / se } else { 0.0 },
    })
}

/// `(∫_0^L V)^k` against `k! ∫_{D_k(L)} Π V(s_i) ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimplexCheck {
    pub k: u32,
    pub power_side: f64,
    pub simplex_side: f64,
    pub rel_diff: f64,
}

/// `∫_{0<s_1<…<s_j<u} Π V(s_i) ds` by nested adaptive quadrature.
fn ordered_integral<V: Fn(f64) -> f64>(v: &V, j: u32, u: f64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let tol = Tolerance::new(1e-15, 1e-12).with_max_intervals(2000);
    quadrature::adaptive(|s| v(s) * ordered_integral(v, j - 1, s), 0.0, u, tol)
        .map_or(f64::NAN, |i| i.value)
}

pub fn simplex_identity_check<V: Fn(f64) -> f64>(v: V, big_l: f64, k: u32) -> Result<SimplexCheck> {
    if !(1..=3).contains(&k) || !(big_l > 0.0) {
        return Err(Error::InvalidParameter("need k in 1..=3 and L > 0".into()));
    }
    let total = quadrature::adaptive(&v, 0.0, big_l, Tolerance::new(1e-15, 1e-13))?.value;
    let power_side = total.powi(k as i32);
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    let simplex_side = factorial * ordered_integral(&v, k, big_l);
    if !simplex_side.is_finite() {
        return Err(Error::QuadratureFailure {
            what: "nested simplex integral".into(),
            estimate: simplex_side,
            error: f64::NAN,
        });
    }
    Ok(SimplexCheck {
        k,
        power_side,
        simplex_side,
        rel_diff: (power_side - simplex_side).abs() / power_side.abs().max(f64::MIN_POSITIVE),
    })
}

/// `(1-ε^k)/k · H(εL) ≤ L^{-k} ∫_0^L r^{k-1} H(r) dr ≤ ‖H‖_∞/k` at one `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketRow {
    pub big_l: f64,
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketingCheck {
    pub k: f64,
    pub eps: f64,
    pub rows: Vec<BracketRow>,
    pub all_hold: bool,
    /// `|middle(L_last) - ‖H‖_∞/k|`.
    pub final_gap: f64,
    /// The gap to `‖H‖_∞/k` never grows along `L_list`.
    pub gap_nonincreasing: bool,
}

pub fn bracketing_check(h: &MonotoneF, k: f64, eps: f64, l_list: &[f64]) -> Result<BracketingCheck> {
    if !(k > 0.0 && eps > 0.0 && eps < 1.0) || l_list.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidParameter("need k > 0, eps in (0,1), L > 0".into()));
    }
    let limit = h.sup_value / k;
    let mut rows = Vec::with_capacity(l_list.len());
    for &l in l_list {
        // Substitute r = L·u so the weight stays O(1) for large L.
        let middle = quadrature::adaptive(
            |u| if u > 0.0 { u.powf(k - 1.0) * h.eval(l * u) } else { 0.0 },
            0.0,
            1.0,
            quad_tol(),
        )?
        .value;
        let lower = (1.0 - eps.powf(k)) / k * h.eval(eps * l);
        let slack = 1e-12 * limit.max(1.0);
        rows.push(BracketRow {
            big_l: l,
            lower,
            middle,
            upper: limit,
            holds: lower <= middle + slack && middle <= limit + slack,
        });
    }
    let gaps: Vec<f64> = rows.iter().map(|r| (r.middle - limit).abs()).collect();
    Ok(BracketingCheck {
        k,
        eps,
        all_hold: rows.iter().all(|r| r.holds),
        final_gap: *gaps.last().unwrap_or(&f64::NAN),
        gap_nonincreasing: gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12),
        rows,
    })
}

/// `{|y_i| ≤ δ/2 ∀i} ⊂ {|y_k| ≤ δ, |y_i − y_{i+1}| ≤ δ} ⊂ {|y_i| ≤ kδ ∀i}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestingCheck {
    pub k: usize,
    pub delta: f64,
    pub samples: usize,
    pub inner_hits: usize,
    pub middle_hits: usize,
    pub violations: usize,
}

fn in_inner(y: &[f64], d: f64) -> bool {
    y.iter().all(|v| v.abs() <= 0.5 * d)
}

fn in_middle(y: &[f64], d: f64) -> bool {
    y[y.len() - 1].abs() <= d && y.windows(2).all(|w| (w[0] - w[1]).abs() <= d)
}

fn in_outer(y: &[f64], d: f64) -> bool {
    let k = y.len() as f64;
    y.iter().all(|v| v.abs() <= k * d)
}

/// Counts inclusion violations for uniform points in `[-box_half, box_half]^k`.
pub fn band_nesting_check(
    delta: f64,
    k: usize,
    samples: usize,
    box_half: f64,
    seed: u64,
) -> Result<NestingCheck> {
    if !(delta > 0.0 && k >= 1 && box_half > 0.0) {
        return Err(Error::InvalidParameter("need delta > 0, k >= 1, box > 0".into()));
    }
    let contract = RngContract::new(seed, k as u64);
    let mut y = vec![0.0; k];
    let (mut inner_hits, mut middle_hits, mut violations) = (0, 0, 0);
    for i in 0..samples as u64 {
        let mut rng = contract.step(i);
        for v in y.iter_mut() {
            *v = box_half * (2.0 * rng.open01() - 1.0);
        }
        let (a, b, c) = (in_inner(&y, delta), in_middle(&y, delta), in_outer(&y, delta));
        inner_hits += a as usize;
        middle_hits += b as usize;
        violations += (a && !b) as usize + (b && !c) as usize;
    }
    Ok(NestingCheck {
        k,
        delta,
        samples,
        inner_hits,
        middle_hits,
        violations,
    })
}

/// The telescoping corner `(kδ, (k-1)δ, …, δ)`: in the middle and outer sets.
pub fn nesting_corner(delta: f64, k: usize) -> (bool, bool) {
    let y: Vec<f64> = (0..k).map(|i| (k - i) as f64 * delta).collect();
    (in_middle(&y, delta), in_outer(&y, delta))
}
