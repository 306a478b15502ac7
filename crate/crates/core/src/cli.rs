//! The commands behind the `levy-occ` binary. Each returns its rows plus any
//! property failures; the binary maps those to exit codes:
//! 0 pass, 1 property failure, 2 config error, 3 numeric failure.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::densities::{density, LocalTimeIntegral};
use crate::error::{Error, Result};
use crate::exponents::{classify_conditions, EllStatus};
use crate::functionals::{
    decomposition_study, decreasing_beyond, mc_moments, DecompositionSample, MomentStudy, Quantity,
};
use crate::report::RowSink;
use crate::sampling::{effective_step, sample_path, step_count, PathSample};
use crate::verification::{run_suite, CheckResult};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_PROPERTY: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Exit code for an error that aborted a command.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

/// Rows of a command together with the properties it found violated.
#[derive(Debug, Clone)]
pub struct Outcome<T> {
    pub rows: Vec<T>,
    pub failures: Vec<String>,
}

impl<T> Outcome<T> {
    pub fn exit_code(&self) -> u8 {
        if self.failures.is_empty() {
            EXIT_PASS
        } else {
            EXIT_PROPERTY
        }
    }
}

/// Flat view of the condition report, one row per model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyRow {
    pub model: String,
    pub ell: Option<f64>,
    pub ell_status: String,
    pub hartman_wintner: bool,
    /// `Ψ(10^j)/ln(1+10^j)` for `j = 1..=8`, `;`-separated.
    pub hartman_wintner_ratios: String,
    pub local_time_integral: Option<f64>,
    pub local_time_status: String,
    pub eligible: bool,
    pub notes: String,
}

pub fn cmd_classify(cfg: &ExperimentConfig) -> Result<Vec<ClassifyRow>> {
    let r = classify_conditions(&cfg.psi()?);
    let (ell, ell_status) = match &r.ell {
        EllStatus::Finite(v) => (Some(*v), "finite".to_string()),
        EllStatus::Diverged(why) => (None, format!("diverged: {why}")),
    };
    let (lt, lt_status) = match r.local_time_integral {
        LocalTimeIntegral::Finite(v) => (Some(v), "finite"),
        LocalTimeIntegral::Diverged => (None, "diverged"),
        LocalTimeIntegral::Inconclusive(v) => (Some(v), "inconclusive"),
    };
    Ok(vec![ClassifyRow {
        model: r.model,
        ell,
        ell_status,
        hartman_wintner: r.hartman_wintner,
        hartman_wintner_ratios: r
            .hartman_wintner_ratios
            .iter()
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(";"),
        local_time_integral: lt,
        local_time_status: lt_status.into(),
        eligible: r.eligible,
        notes: r.notes.join("; "),
    }])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRow {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    #[serde(rename = "R_used")]
    pub r_used: f64,
    pub panels: usize,
}

/// `p_t(x)` on the `density.times × density.xs` grid. Saturated panel counts
/// are reported as failures.
pub fn cmd_density(cfg: &ExperimentConfig) -> Result<Outcome<DensityRow>> {
    let psi = cfg.psi()?;
    let points: Vec<(f64, f64)> = cfg
        .density
        .times
        .iter()
        .flat_map(|&t| cfg.density.xs.iter().map(move |&x| (t, x)))
        .collect();
    let values = points
        .par_iter()
        .map(|&(t, x)| density(&psi, t, x, &cfg.inversion))
        .collect::<Result<Vec<_>>>()?;
    let failures = values
        .iter()
        .filter(|v| v.saturated)
        .map(|v| format!("panel budget saturated at t={}, x={}", v.t, v.x))
        .collect();
    Ok(Outcome {
        rows: values
            .iter()
            .map(|v| DensityRow {
                t: v.t,
                x: v.x,
                p: v.p,
                r_used: v.r_used,
                panels: v.panels,
            })
            .collect(),
        failures,
    })
}

/// Per-path summary written by `simulate` without a path dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummaryRow {
    pub model: String,
    pub kernel: String,
    pub path_index: u64,
    pub n_steps: usize,
    pub h: f64,
    pub horizon: f64,
    pub x_final: f64,
    pub max_abs_x: f64,
    /// `∫_0^T f(X_s) ds` (left Riemann sum).
    pub occupation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPointRow {
    pub path_index: u64,
    pub step_index: usize,
    pub t: f64,
    pub x: f64,
}

/// Paths per parallel chunk in `simulate`; bounds memory for path dumps.
const SIMULATE_CHUNK: u64 = 64;

/// `n_paths` paths on `[0, horizon]` (default `t²a(n_max)²`), streamed to
/// `sink` either as one summary row per path or, with `dump_paths`, one row
/// per grid point.
pub fn cmd_simulate<W: Write>(cfg: &ExperimentConfig, dump_paths: bool, sink: &mut RowSink<W>) -> Result<()> {
    let psi = cfg.psi()?;
    let kernel = cfg.kernel()?;
    let horizon = match cfg.simulate.horizon {
        Some(h) => h,
        None => {
            let a = cfg.seq().a(*cfg.n_list.last().expect("validated"))?;
            cfg.t * cfg.t * a * a
        }
    };
    let (h, coarsened) = effective_step(horizon, cfg.h, cfg.max_steps);
    if coarsened {
        eprintln!("note: step coarsened to h = {h} ({} steps)", step_count(horizon, h));
    }
    let n = cfg.n_paths as u64;
    let mut start = 0;
    while start < n {
        let end = (start + SIMULATE_CHUNK).min(n);
        let paths: Vec<PathSample> = (start..end)
            .into_par_iter()
            .map(|p| sample_path(&psi, horizon, h, cfg.seed, p, &cfg.sampler))
            .collect::<Result<_>>()?;
        for path in &paths {
            if dump_paths {
                for (i, &x) in path.values.iter().enumerate() {
                    sink.push(&PathPointRow {
                        path_index: path.path_index,
                        step_index: i,
                        t: i as f64 * h,
                        x,
                    })?;
                }
            } else {
                sink.push(&PathSummaryRow {
                    model: psi.label(),
                    kernel: kernel.label().into(),
                    path_index: path.path_index,
                    n_steps: path.n_steps(),
                    h,
                    horizon,
                    x_final: *path.values.last().expect("path starts at 0"),
                    max_abs_x: path.values.iter().fold(0.0, |m, v| f64::max(m, v.abs())),
                    occupation: crate::sampling::occupation_integral(path, |x| kernel.f(x)),
                    seed: cfg.seed,
                })?;
            }
        }
        start = end;
    }
    Ok(())
}

/// Monte-Carlo moment table; an even moment of `I⁽²⁾` above its bound by
/// more than 4 standard errors is a failure.
pub fn cmd_moments(cfg: &ExperimentConfig) -> Result<(MomentStudy, Vec<String>)> {
    let study = mc_moments(&cfg.study()?, cfg.k_max)?;
    if study.grid.coarsened {
        eprintln!("note: step coarsened to h = {}", study.grid.h);
    }
    let failures = study
        .reports
        .iter()
        .filter_map(|r| {
            let b = r.bound_value?;
            (r.mc_estimate > b + 4.0 * r.mc_stderr).then(|| {
                format!(
                    "moment bound exceeded: n={}, delta={:?}, k={}: {} > {} + 4*{}",
                    r.n, r.delta, r.k, r.mc_estimate, b, r.mc_stderr
                )
            })
        })
        .collect();
    Ok((study, failures))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposeRow {
    pub model: String,
    pub kernel: String,
    pub path_index: u64,
    pub n: u32,
    pub delta: f64,
    pub t: f64,
    pub i_n: f64,
    pub f_n1: f64,
    pub f_n2: f64,
    pub f_n: f64,
    pub i1: f64,
    pub residual: f64,
    pub n_paths: usize,
    pub h: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposeSummaryRow {
    pub n: u32,
    pub delta: f64,
    pub mean_sq_i1: f64,
    pub stderr_sq_i1: f64,
    pub mean_sq_f_n1: f64,
    pub stderr_sq_f_n1: f64,
    pub mean_sq_f_n2: f64,
    pub stderr_sq_f_n2: f64,
    pub max_abs_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposeSummary {
    pub model: String,
    pub kernel: String,
    /// "performed", or "suppressed" when `f̂(0) = 0`.
    pub limit_comparison: String,
    pub residual_tolerance: f64,
    /// Per δ: `E(I⁽¹⁾)²` decreases strictly along `n_list`.
    pub i1_decreasing: Vec<(f64, bool)>,
    pub rows: Vec<DecomposeSummaryRow>,
}

/// Per-path split with its summary. A residual above `1e-6 + h` is a failure.
pub fn cmd_decompose(cfg: &ExperimentConfig) -> Result<(Outcome<DecomposeRow>, DecomposeSummary)> {
    let setup = cfg.study()?;
    let study = decomposition_study(&setup)?;
    let h = study.grid.h;
    let model = setup.psi.label();
    let kernel = setup.kernel.label().to_string();
    let tol = 1e-6 + h;
    let row = |s: &DecompositionSample| DecomposeRow {
        model: model.clone(),
        kernel: kernel.clone(),
        path_index: s.path_index,
        n: s.n,
        delta: s.delta,
        t: s.t,
        i_n: s.i_n,
        f_n1: s.f_n1,
        f_n2: s.f_n2,
        f_n: s.f_n,
        i1: s.i1(),
        residual: s.residual,
        n_paths: setup.n_paths,
        h,
        seed: setup.seed,
    };
    let rows: Vec<DecomposeRow> = study.samples.iter().map(row).collect();
    let failures = rows
        .iter()
        .filter(|r| !(r.residual.abs() <= tol))
        .map(|r| format!("residual {} > {tol} on path {} (n={}, delta={})", r.residual, r.path_index, r.n, r.delta))
        .collect();
    let i1_decreasing = setup
        .deltas
        .iter()
        .map(|&d| {
            let trend: Vec<(f64, f64)> = study
                .summary
                .iter()
                .filter(|s| s.delta == d)
                .map(|s| (s.mean_sq_i1, s.stderr_sq_i1))
                .collect();
            (d, decreasing_beyond(&trend, 0.0))
        })
        .collect();
    let suppressed = study.summary.first().is_some_and(|s| s.limit_suppressed);
    let summary = DecomposeSummary {
        model,
        kernel,
        limit_comparison: if suppressed { "suppressed" } else { "performed" }.into(),
        residual_tolerance: tol,
        i1_decreasing,
        rows: study
            .summary
            .iter()
            .map(|s| DecomposeSummaryRow {
                n: s.n,
                delta: s.delta,
                mean_sq_i1: s.mean_sq_i1,
                stderr_sq_i1: s.stderr_sq_i1,
                mean_sq_f_n1: s.mean_sq_f_n1,
                stderr_sq_f_n1: s.stderr_sq_f_n1,
                mean_sq_f_n2: s.mean_sq_f_n2,
                stderr_sq_f_n2: s.stderr_sq_f_n2,
                max_abs_residual: s.max_abs_residual,
            })
            .collect(),
    };
    Ok((Outcome { rows, failures }, summary))
}

/// The property suite; failing checks are listed by name.
pub fn cmd_verify(cfg: &ExperimentConfig, inject_failure: Option<String>) -> Result<Outcome<CheckResult>> {
    let rows = run_suite(&cfg.suite_options(inject_failure))?;
    let failures = rows
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: observed {}, expected {} ± {}", c.name, c.observed, c.expected, c.tolerance))
        .collect();
    Ok(Outcome { rows, failures })
}

/// Filters moment rows by quantity.
pub fn rows_of(study: &MomentStudy, q: Quantity) -> impl Iterator<Item = &crate::functionals::MomentReport> {
    study.reports.iter().filter(move |r| r.quantity == q)
}
