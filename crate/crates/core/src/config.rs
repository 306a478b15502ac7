//! Experiment configuration: one TOML file plus command-line overrides.
//!
//! ```toml
//! seed = 7
//! t = 1.0
//! kernel = "gaussian"          # gaussian | jvp | gaussian*jvp | jvp*jvp | gaussian*gaussian
//! deltas = [0.5]
//! n_list = [4, 8, 16]
//! k_max = 4
//! n_paths = 2000
//! h = 0.01
//! max_steps = 1000000          # optional; coarsens h when exceeded
//! format = "csv"               # csv | json; classify and verify default to json
//! out = "moments.csv"          # optional; stdout otherwise
//!
//! [model]
//! kind = "relativistic"        # brownian {c} | stable {alpha} | relativistic {m, alpha}
//! m = 1.0                      # | subordinated {measure = {family = "gamma", scale, rate}}
//! alpha = 1.5
//!
//! [sequence]
//! rule = "polynomial"          # a(n) = n^p, or rule = "custom", table = [...]
//! p = 1.0
//!
//! [density]
//! times = [1.0]
//! xs = [0.0, 0.5, 1.0]
//!
//! [simulate]
//! horizon = 10.0
//!
//! [verify]
//! charfn_paths = 100000
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::densities::InversionSettings;
use crate::error::{Error, Result};
use crate::exponents::{BernsteinFamily, BernsteinSpec, CharacteristicExponent};
use crate::functionals::{ScalingSequence, SequenceRule, StudySetup};
use crate::kernels::{kernel_by_label, TestKernel};
use crate::sampling::SamplerOptions;
use crate::verification::SuiteOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown format {other:?}; expected csv or json"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Brownian {
        #[serde(default = "one")]
        c: f64,
    },
    Stable {
        alpha: f64,
    },
    Relativistic {
        m: f64,
        alpha: f64,
    },
    Subordinated {
        measure: BernsteinFamily,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::Brownian { c: 1.0 }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<CharacteristicExponent> {
        match *self {
            Self::Brownian { c } => CharacteristicExponent::brownian(c),
            Self::Stable { alpha } => CharacteristicExponent::symmetric_stable(alpha),
            Self::Relativistic { m, alpha } => CharacteristicExponent::relativistic(m, alpha),
            Self::Subordinated { measure } => {
                BernsteinSpec::from_family(measure).map(CharacteristicExponent::subordinated)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_xs")]
    pub xs: Vec<f64>,
}

fn default_times() -> Vec<f64> {
    vec![1.0]
}

fn default_xs() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0]
}

impl Default for DensitySection {
    fn default() -> Self {
        Self {
            times: default_times(),
            xs: default_xs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Path length; defaults to `t²a(n_max)²`.
    pub horizon: Option<f64>,
}

#[allow(clippy::derivable_impls)]
impl Default for SimulateSection {
    fn default() -> Self {
        Self { horizon: None }
    }
}

/// Budgets of the property suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub charfn_paths: usize,
    pub nesting_samples: usize,
    pub polar_mc: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        let o = SuiteOptions::default();
        Self {
            charfn_paths: o.charfn_paths,
            nesting_samples: o.nesting_samples,
            polar_mc: o.polar_mc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default = "default_kernel")]
    pub kernel: String,
    #[serde(default = "default_rule")]
    pub sequence: SequenceRule,
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<u32>,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub sampler: SamplerOptions,
    #[serde(default)]
    pub inversion: InversionSettings,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub verify: VerifySection,
}

fn default_rule() -> SequenceRule {
    ScalingSequence::default().rule
}

fn default_kernel() -> String {
    "gaussian".into()
}

fn default_deltas() -> Vec<f64> {
    vec![0.5]
}

fn default_n_list() -> Vec<u32> {
    vec![4, 8, 16]
}

fn default_k_max() -> u32 {
    4
}

fn default_n_paths() -> usize {
    2000
}

fn default_h() -> f64 {
    0.01
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads `path` (or the defaults when `None`), applies `overrides` and
    /// validates the result.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
        if let Some(f) = o.format {
            self.format = Some(f);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be a positive number, got {v}")))
            }
        };
        positive("t", self.t)?;
        positive("h", self.h)?;
        if self.deltas.is_empty() {
            return bad("deltas must not be empty".into());
        }
        for &d in &self.deltas {
            positive("delta", d)?;
        }
        if self.n_list.is_empty() || self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("n_list must be positive and strictly increasing, got {:?}", self.n_list));
        }
        if self.k_max == 0 {
            return bad("k_max must be >= 1".into());
        }
        if self.n_paths == 0 {
            return bad("n_paths must be >= 1".into());
        }
        if self.max_steps == Some(0) {
            return bad("max_steps must be >= 1".into());
        }
        if self.verify.charfn_paths < 2 || self.verify.polar_mc < 2 {
            return bad("verify.charfn_paths and verify.polar_mc must be >= 2".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1".into());
        }
        if self.density.times.is_empty() || self.density.xs.is_empty() {
            return bad("density.times and density.xs must not be empty".into());
        }
        for &s in &self.density.times {
            positive("density time", s)?;
        }
        if self.density.xs.iter().any(|x| !x.is_finite()) {
            return bad("density.xs must be finite".into());
        }
        if let Some(hz) = self.simulate.horizon {
            positive("simulate.horizon", hz)?;
        }
        self.seq().validate().map_err(to_config)?;
        if let SequenceRule::Custom { table } = &self.sequence {
            let n_max = *self.n_list.last().expect("non-empty") as usize;
            if table.len() < n_max {
                return bad(format!("sequence table has {} entries, n_list needs {n_max}", table.len()));
            }
        }
        self.model.build().map_err(to_config)?;
        self.kernel().map(|_| ())
    }

    /// The configured format, or `default` when none was given.
    pub fn format_or(&self, default: OutputFormat) -> OutputFormat {
        self.format.unwrap_or(default)
    }

    pub fn suite_options(&self, inject_failure: Option<String>) -> SuiteOptions {
        SuiteOptions {
            seed: self.seed,
            charfn_paths: self.verify.charfn_paths,
            nesting_samples: self.verify.nesting_samples,
            polar_mc: self.verify.polar_mc,
            inject_failure,
        }
    }

    pub fn seq(&self) -> ScalingSequence {
        ScalingSequence {
            rule: self.sequence.clone(),
        }
    }

    pub fn psi(&self) -> Result<CharacteristicExponent> {
        self.model.build().map_err(to_config)
    }

    pub fn kernel(&self) -> Result<TestKernel> {
        kernel_by_label(&self.kernel).map_err(to_config)
    }

    pub fn study(&self) -> Result<StudySetup> {
        Ok(StudySetup {
            psi: self.psi()?,
            kernel: self.kernel()?,
            seq: self.seq(),
            t: self.t,
            deltas: self.deltas.clone(),
            n_list: self.n_list.clone(),
            n_paths: self.n_paths,
            h: self.h,
            seed: self.seed,
            max_steps: self.max_steps,
            sampler: self.sampler,
        })
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.model, ModelSpec::Brownian { c: 1.0 });
        assert_eq!(c.n_list, vec![4, 8, 16]);
    }

    #[test]
    fn full_file_parses() {
        let c = ExperimentConfig::from_toml(
            r#"
            seed = 9
            kernel = "jvp"
            deltas = [0.25, 1.0]
            n_list = [2, 4]
            format = "json"
            [model]
            kind = "subordinated"
            measure = { family = "gamma", scale = 1.0, rate = 1.0 }
            [sequence]
            rule = "custom"
            table = [1.0, 2.0, 3.0, 4.0]
            [density]
            times = [0.5]
            "#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.format, Some(OutputFormat::Json));
        assert_eq!(c.density.xs, default_xs());
        assert!(matches!(c.model, ModelSpec::Subordinated { .. }));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "unknown = 1",
            "t = -1.0",
            "n_list = [4, 2]",
            "kernel = \"nope\"",
            "[model]\nkind = \"stable\"\nalpha = 3.0",
            "[model]\nkind = \"brownian\"\nc = 1.0\nextra = 2",
            "[sequence]\nrule = \"custom\"\ntable = [1.0, 2.0]\n",
        ] {
            let r = ExperimentConfig::from_toml(text).and_then(|c| c.validate());
            assert!(matches!(r, Err(Error::Config(_))), "{text}: {r:?}");
        }
    }

    #[test]
    fn flags_win() {
        let mut c = ExperimentConfig::from_toml("seed = 1\nformat = \"json\"").unwrap();
        c.apply(&Overrides {
            seed: Some(5),
            format: Some(OutputFormat::Csv),
            ..Default::default()
        });
        assert_eq!(c.seed, 5);
        assert_eq!(c.format_or(OutputFormat::Json), OutputFormat::Csv);
    }
}
