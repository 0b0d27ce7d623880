//! One runner per experiment kind.

mod learning;
mod mco;
mod meta;
mod search;

use crate::config::{ExperimentConfig, ExperimentParams};
use crate::error::LabError;
use crate::report::ExperimentReport;

pub use meta::{outer_universes_average, MetaOutcome};

/// Runs the configured experiment. Check failures are reported in the
/// returned report, not as errors.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, LabError> {
    match &config.experiment {
        ExperimentParams::NflSumSweep(p) => search::nfl_sum_sweep(config, p),
        ExperimentParams::InnerProduct(p) => search::inner_product(config, p),
        ExperimentParams::PriorMc(p) => search::prior_mc(config, p),
        ExperimentParams::SupervisedNfl(p) => learning::supervised_nfl(config, p),
        ExperimentParams::CvVsAnticv(p) => learning::cv_vs_anticv(config, p),
        ExperimentParams::ConditioningContrast(p) => learning::conditioning_contrast(config, p),
        ExperimentParams::MetaInduction(p) => meta::meta_induction(config, p),
        ExperimentParams::McoBenchmark(p) => mco::mco_benchmark(config, p),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}
