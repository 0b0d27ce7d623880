//! Experiment configuration files.
//!
//! One TOML file per experiment:
//!
//! ```toml
//! schema_version = 1
//! kind = "nfl_sum_sweep"
//!
//! [space]
//! x_size = 4
//! levels = 2
//!
//! [experiment]
//! algorithms = ["enumerate", "random(seed=7)"]
//! ```
//!
//! Unknown keys are rejected at every level. After parsing, every default is
//! filled in so the resolved config can be echoed verbatim into the report.

use std::fmt;
use std::path::{Path, PathBuf};

use nfl_core::space::DEFAULT_ENUMERATION_CAP;
use nfl_core::supervised::{LearnerSpec, LossFunction};
use nfl_core::{AlgorithmSpec, FiniteSpace, PerformanceMeasure};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::LabError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentKind {
    NflSumSweep,
    InnerProduct,
    PriorMc,
    SupervisedNfl,
    CvVsAnticv,
    ConditioningContrast,
    MetaInduction,
    McoBenchmark,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        Self::NflSumSweep,
        Self::InnerProduct,
        Self::PriorMc,
        Self::SupervisedNfl,
        Self::CvVsAnticv,
        Self::ConditioningContrast,
        Self::MetaInduction,
        Self::McoBenchmark,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::NflSumSweep => "nfl_sum_sweep",
            Self::InnerProduct => "inner_product",
            Self::PriorMc => "prior_mc",
            Self::SupervisedNfl => "supervised_nfl",
            Self::CvVsAnticv => "cv_vs_anticv",
            Self::ConditioningContrast => "conditioning_contrast",
            Self::MetaInduction => "meta_induction",
            Self::McoBenchmark => "mco_benchmark",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Self::NflSumSweep => "sum over all f of E(Phi|f,m,A) for each algorithm, m and measure",
            Self::InnerProduct => "P(phi|A,m) directly and as the inner product of D-vector and prior",
            Self::PriorMc => "Monte Carlo over flat-Dirichlet priors on the function simplex",
            Self::SupervisedNfl => "off-training-set E(Phi|d) for every training set and learner",
            Self::CvVsAnticv => "cross-validation against anti-cross-validation model selection",
            Self::ConditioningContrast => "whole-space loss per target next to the prior-averaged OTS loss",
            Self::MetaInduction => "majority vs anti-majority predicting which search algorithm wins",
            Self::McoBenchmark => "CV-scheduled Boltzmann MCO against fixed temperatures",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Number type for prior masses in the inner-product check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    #[default]
    Rational,
    Float,
}

impl fmt::Display for Arithmetic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rational => "rational",
            Self::Float => "float",
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    x_size: usize,
    levels: Option<usize>,
    y_values: Option<Vec<f64>>,
    cap: Option<u64>,
}

/// Resolved `[space]` table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceConfig {
    pub x_size: usize,
    pub y_values: Vec<f64>,
    pub cap: u64,
}

impl SpaceConfig {
    /// Enumerable space; fails when |Y|^|X| exceeds the cap.
    pub fn build(&self) -> Result<FiniteSpace, LabError> {
        Ok(FiniteSpace::with_cap(self.x_size, self.y_values.clone(), self.cap)?)
    }

    /// Space used only for sampling, never enumerated.
    pub fn build_sampling(&self) -> Result<FiniteSpace, LabError> {
        Ok(FiniteSpace::sampling_only(self.x_size, self.y_values.clone())?)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    stem: Option<String>,
}

/// Where reports go. Not part of the echoed parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub stem: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    kind: ExperimentKind,
    arithmetic: Option<Arithmetic>,
    space: RawSpace,
    #[serde(default)]
    experiment: toml::Table,
    #[serde(default)]
    output: RawOutput,
}

fn default_run_seeds() -> usize {
    nfl_core::nfl::DEFAULT_SEED_COUNT
}

fn default_measures() -> Vec<PerformanceMeasure> {
    vec![PerformanceMeasure::Min, PerformanceMeasure::Mean]
}

fn default_measure() -> PerformanceMeasure {
    PerformanceMeasure::Min
}

fn default_loss() -> String {
    "zero_one".into()
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NflSumSweep {
    pub algorithms: Vec<AlgorithmSpec>,
    /// Sample sizes; empty means 1..=|X|.
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default = "default_measures")]
    pub measures: Vec<PerformanceMeasure>,
    /// Run seeds 0..n that stochastic algorithms are averaged over.
    #[serde(default = "default_run_seeds")]
    pub run_seeds: usize,
    /// Pairs checked for sum_f [E_A - E_B] = 0.
    #[serde(default)]
    pub win_loss: Vec<[AlgorithmSpec; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerProduct {
    pub algorithms: Vec<AlgorithmSpec>,
    pub m: usize,
    #[serde(default = "default_measure")]
    pub measure: PerformanceMeasure,
    #[serde(default = "yes")]
    pub uniform_prior: bool,
    #[serde(default)]
    pub dirichlet_priors: usize,
    pub seed: u64,
    #[serde(default = "default_run_seeds")]
    pub run_seeds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorMc {
    pub algorithms: Vec<AlgorithmSpec>,
    pub m: usize,
    #[serde(default = "default_measure")]
    pub measure: PerformanceMeasure,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_run_seeds")]
    pub run_seeds: usize,
}

/// `loss = "zero_one" | "absolute" | "squared"`, or a custom matrix
/// indexed `[y_h][y_f]` named by `loss`.
pub fn build_loss(space: &FiniteSpace, name: &str, matrix: Option<&Vec<Vec<f64>>>) -> Result<LossFunction, LabError> {
    Ok(match matrix {
        Some(m) => LossFunction::custom(space, name, m.clone())?,
        None => LossFunction::by_name(space, name)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupervisedNfl {
    pub learners: Vec<LearnerSpec>,
    pub m: usize,
    #[serde(default = "default_loss")]
    pub loss: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_matrix: Option<Vec<Vec<f64>>>,
}

/// `folds = "loo"` or an integer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FoldsSetting {
    Count(usize),
    Named(String),
}

impl Default for FoldsSetting {
    fn default() -> Self {
        Self::Named("loo".into())
    }
}

impl fmt::Display for FoldsSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Count(k) => write!(f, "{k}"),
            Self::Named(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvVsAnticv {
    pub candidates: Vec<LearnerSpec>,
    #[serde(default)]
    pub folds: FoldsSetting,
    pub m: usize,
    #[serde(default = "default_loss")]
    pub loss: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_matrix: Option<Vec<Vec<f64>>>,
}

impl CvVsAnticv {
    /// The two meta-learners as specs.
    pub fn selectors(&self) -> Result<(LearnerSpec, LearnerSpec), LabError> {
        let c: Vec<String> = self.candidates.iter().map(|c| c.to_string()).collect();
        let body = format!("candidates=[{}], folds={}", c.join(","), self.folds);
        let cv = format!("cv_select({body})").parse().map_err(|e| schema("experiment.folds", e))?;
        let anti = format!("anti_cv_select({body})").parse().map_err(|e| schema("experiment.folds", e))?;
        Ok((cv, anti))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditioningContrast {
    pub a: LearnerSpec,
    pub b: LearnerSpec,
    pub m: usize,
    #[serde(default = "default_loss")]
    pub loss: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_matrix: Option<Vec<Vec<f64>>>,
}

/// Outer universe scored for observed accuracy: `"observed"` (the real
/// comparisons), `"smith_always_wins"`, `"smith_never_wins"`, or explicit
/// 0/1 labels per inner function rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UniverseSetting {
    Labels(Vec<usize>),
    Named(String),
}

impl Default for UniverseSetting {
    fn default() -> Self {
        Self::Named("observed".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaInduction {
    /// Smith's algorithm on the inner space.
    pub smith: AlgorithmSpec,
    /// Jones runs `random(seed=jones_seed)` with run seed 0.
    pub jones_seed: u64,
    /// Inner sample size.
    pub m: usize,
    #[serde(default = "default_measure")]
    pub measure: PerformanceMeasure,
    /// Inner function ranks already compared (the outer training inputs).
    pub history: Vec<u64>,
    #[serde(default)]
    pub universe: UniverseSetting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McoBenchmark {
    pub m_total: usize,
    pub candidates: Vec<f64>,
    pub folds: usize,
    pub n_seeds: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentParams {
    NflSumSweep(NflSumSweep),
    InnerProduct(InnerProduct),
    PriorMc(PriorMc),
    SupervisedNfl(SupervisedNfl),
    CvVsAnticv(CvVsAnticv),
    ConditioningContrast(ConditioningContrast),
    MetaInduction(MetaInduction),
    McoBenchmark(McoBenchmark),
}

/// Fully resolved configuration, echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub arithmetic: Arithmetic,
    pub space: SpaceConfig,
    pub experiment: ExperimentParams,
    #[serde(skip)]
    pub output: OutputConfig,
}

fn schema(field: &str, reason: impl fmt::Display) -> LabError {
    LabError::Schema { field: field.into(), reason: reason.to_string() }
}

fn section<T: DeserializeOwned>(table: toml::Table) -> Result<T, LabError> {
    T::deserialize(toml::Value::Table(table)).map_err(|e| schema("experiment", e.message().trim()))
}

fn check_m(field: &str, m: usize, x_size: usize) -> Result<(), LabError> {
    if m == 0 || m > x_size {
        return Err(schema(field, format!("must be in 1..={x_size}, got {m}")));
    }
    Ok(())
}

fn check_nonempty<T>(field: &str, v: &[T]) -> Result<(), LabError> {
    if v.is_empty() {
        return Err(schema(field, "must not be empty"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Io { path: path.to_path_buf(), source: e })?;
        let mut cfg = Self::from_toml_str(&text)?;
        if cfg.output.stem.is_none() {
            cfg.output.stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    /// Parses and validates; no computation happens here.
    pub fn from_toml_str(text: &str) -> Result<Self, LabError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| LabError::Parse(e.message().trim().to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", raw.schema_version),
            ));
        }
        let y_values = match (raw.space.levels, raw.space.y_values) {
            (Some(k), None) => (0..k).map(|v| v as f64).collect(),
            (None, Some(v)) => v,
            _ => return Err(schema("space", "give exactly one of `levels` or `y_values`")),
        };
        let space = SpaceConfig {
            x_size: raw.space.x_size,
            y_values,
            cap: raw.space.cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
        };
        // Validate the space shape (not the enumeration cap) up front.
        space.build_sampling().map_err(|e| schema("space", e))?;

        let experiment = resolve(raw.kind, raw.experiment, &space)?;
        Ok(Self {
            schema_version: raw.schema_version,
            kind: raw.kind,
            arithmetic: raw.arithmetic.unwrap_or_default(),
            space,
            experiment,
            output: OutputConfig { dir: raw.output.dir, stem: raw.output.stem },
        })
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.kind.name().to_string())
    }
}

fn resolve(kind: ExperimentKind, table: toml::Table, space: &SpaceConfig) -> Result<ExperimentParams, LabError> {
    let n = space.x_size;
    Ok(match kind {
        ExperimentKind::NflSumSweep => {
            let mut p: NflSumSweep = section(table)?;
            check_nonempty("experiment.algorithms", &p.algorithms)?;
            check_nonempty("experiment.measures", &p.measures)?;
            if p.m.is_empty() {
                p.m = (1..=n).collect();
            }
            for &m in &p.m {
                check_m("experiment.m", m, n)?;
            }
            if p.run_seeds == 0 {
                return Err(schema("experiment.run_seeds", "must be at least 1"));
            }
            ExperimentParams::NflSumSweep(p)
        }
        ExperimentKind::InnerProduct => {
            let p: InnerProduct = section(table)?;
            check_nonempty("experiment.algorithms", &p.algorithms)?;
            check_m("experiment.m", p.m, n)?;
            if !p.uniform_prior && p.dirichlet_priors == 0 {
                return Err(schema("experiment.dirichlet_priors", "no prior selected"));
            }
            ExperimentParams::InnerProduct(p)
        }
        ExperimentKind::PriorMc => {
            let p: PriorMc = section(table)?;
            check_nonempty("experiment.algorithms", &p.algorithms)?;
            check_m("experiment.m", p.m, n)?;
            let min = nfl_core::nfl::MIN_PRIOR_SAMPLES;
            if p.samples < min {
                return Err(schema("experiment.samples", format!("must be at least {min}")));
            }
            ExperimentParams::PriorMc(p)
        }
        ExperimentKind::SupervisedNfl => {
            let p: SupervisedNfl = section(table)?;
            check_nonempty("experiment.learners", &p.learners)?;
            check_m("experiment.m", p.m, n)?;
            ExperimentParams::SupervisedNfl(p)
        }
        ExperimentKind::CvVsAnticv => {
            let p: CvVsAnticv = section(table)?;
            check_nonempty("experiment.candidates", &p.candidates)?;
            check_m("experiment.m", p.m, n)?;
            p.selectors()?;
            ExperimentParams::CvVsAnticv(p)
        }
        ExperimentKind::ConditioningContrast => {
            let p: ConditioningContrast = section(table)?;
            check_m("experiment.m", p.m, n)?;
            ExperimentParams::ConditioningContrast(p)
        }
        ExperimentKind::MetaInduction => {
            let p: MetaInduction = section(table)?;
            check_m("experiment.m", p.m, n)?;
            if let UniverseSetting::Named(name) = &p.universe {
                if !["observed", "smith_always_wins", "smith_never_wins"].contains(&name.as_str()) {
                    return Err(schema(
                        "experiment.universe",
                        format!("unknown universe `{name}` (observed | smith_always_wins | smith_never_wins | label list)"),
                    ));
                }
            }
            ExperimentParams::MetaInduction(p)
        }
        ExperimentKind::McoBenchmark => {
            let p: McoBenchmark = section(table)?;
            check_nonempty("experiment.candidates", &p.candidates)?;
            check_m("experiment.m_total", p.m_total, n)?;
            let levels = space.y_values.len();
            if space.y_values.iter().enumerate().any(|(i, &v)| v != i as f64) {
                return Err(schema("space", "mco_benchmark needs integer levels 0..k-1 (use `levels`)"));
            }
            if levels < 2 {
                return Err(schema("space.levels", "need at least 2 levels"));
            }
            if p.folds < 2 || p.folds > p.m_total {
                return Err(schema("experiment.folds", format!("must be in 2..={}", p.m_total)));
            }
            if p.n_seeds < 2 {
                return Err(schema("experiment.n_seeds", "must be at least 2"));
            }
            nfl_core::mco::TemperatureSchedule::new(p.candidates.clone())
                .map_err(|e| schema("experiment.candidates", e))?;
            ExperimentParams::McoBenchmark(p)
        }
    })
}
