use nfl_core::mco::{mco_benchmark as run_benchmark, run_mco, smooth_objective, TemperatureSchedule};
use nfl_core::rng;
use serde_json::json;

use super::num;
use crate::config::{ExperimentConfig, McoBenchmark};
use crate::error::LabError;
use crate::report::{CheckOutcome, CsvTable, ExperimentReport};

pub(super) fn mco_benchmark(config: &ExperimentConfig, p: &McoBenchmark) -> Result<ExperimentReport, LabError> {
    let space = config.space.build_sampling()?;
    let levels = space.y_size();
    let schedule = TemperatureSchedule::new(p.candidates.clone())?;
    let r = run_benchmark(space.x_size(), levels, p.m_total, &schedule, p.folds, p.n_seeds, p.seed)?;

    let mut curves = CsvTable::new("", &["scheme", "seed", "step", "best_so_far"]);
    for (scheme, seed, curve) in &r.curves {
        for (step, best) in curve.iter().enumerate() {
            curves.push(vec![scheme.clone(), seed.to_string(), (step + 1).to_string(), num(*best)]);
        }
    }

    // Schedule trace of the CV scheme on the first benchmark function.
    let f = smooth_objective(&space, &mut rng::stream(p.seed, 0));
    let run = run_mco(&f, p.m_total, &schedule, p.folds, Some(1), 0)?;
    let mut sched = CsvTable::new("schedule", &["step", "chosen_T", "q_entropy", "best_so_far"]);
    for rec in &run.records {
        sched.push(vec![
            (rec.step + 1).to_string(),
            rec.temperature.map(num).unwrap_or_default(),
            num(rec.q_entropy),
            num(rec.best_so_far),
        ]);
    }

    let checks = vec![CheckOutcome::new(
        "cv_no_worse_than_worst_fixed",
        r.pass,
        format!(
            "cv - {} = {:.4} +- {:.4} (SE); one-sided 95% upper bound {:.4}",
            r.worst_fixed, r.paired_mean_diff, r.paired_se, r.upper_bound_95
        ),
    )];
    let per_algorithm = r.schemes.iter().map(|s| json!(s)).collect();
    Ok(ExperimentReport::new(config, checks, per_algorithm, r.upper_bound_95, json!(r), vec![curves, sched]))
}
