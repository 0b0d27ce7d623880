//! Built-in configs for `verify-all` and the per-kind subcommands.

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SuiteSize {
    /// Desk-scale instances, seconds in total.
    Small,
    /// One size up in |X| or |Y| where enumeration allows.
    Medium,
}

macro_rules! canned {
    ($size:literal) => {
        [
            include_str!(concat!("../configs/", $size, "/nfl_sum_sweep.toml")),
            include_str!(concat!("../configs/", $size, "/inner_product.toml")),
            include_str!(concat!("../configs/", $size, "/prior_mc.toml")),
            include_str!(concat!("../configs/", $size, "/supervised_nfl.toml")),
            include_str!(concat!("../configs/", $size, "/cv_vs_anticv.toml")),
            include_str!(concat!("../configs/", $size, "/conditioning_contrast.toml")),
            include_str!(concat!("../configs/", $size, "/meta_induction.toml")),
            include_str!(concat!("../configs/", $size, "/mco_benchmark.toml")),
        ]
    };
}

const SMALL: [&str; 8] = canned!("small");
const MEDIUM: [&str; 8] = canned!("medium");

/// TOML text of the built-in config for `kind`.
pub fn canned_text(size: SuiteSize, kind: ExperimentKind) -> &'static str {
    let idx = ExperimentKind::ALL.iter().position(|k| *k == kind).expect("kind listed in ALL");
    match size {
        SuiteSize::Small => SMALL[idx],
        SuiteSize::Medium => MEDIUM[idx],
    }
}

pub fn canned(size: SuiteSize, kind: ExperimentKind) -> Result<ExperimentConfig, LabError> {
    let mut cfg = ExperimentConfig::from_toml_str(canned_text(size, kind))?;
    cfg.output.stem.get_or_insert_with(|| kind.name().to_string());
    Ok(cfg)
}
