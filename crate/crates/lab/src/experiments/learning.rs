use nfl_core::exact::{exact_int, exact_to_f64};
use nfl_core::supervised::{
    conditioning_contrast_experiment, make_learner, nfl_supervised_check, Learner, LearnerSpec, LossFunction,
    SupervisedNflReport,
};
use nfl_core::{Exact, FiniteSpace};
use serde_json::json;

use super::num;
use crate::config::{build_loss, ConditioningContrast, CvVsAnticv, ExperimentConfig, SupervisedNfl};
use crate::error::LabError;
use crate::report::{CheckOutcome, CsvTable, ExperimentReport};

fn build(specs: &[LearnerSpec], space: &FiniteSpace, loss: &LossFunction) -> Result<Vec<Box<dyn Learner>>, LabError> {
    specs.iter().map(|s| Ok(make_learner(s, space, loss)?)).collect()
}

fn joined(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Checks, table and per-learner rows shared by the supervised kinds.
fn supervised_report(
    config: &ExperimentConfig,
    space: &FiniteSpace,
    loss: &LossFunction,
    r: SupervisedNflReport,
) -> ExperimentReport {
    let mut checks = vec![CheckOutcome::new(
        "ots_expectation_identical_across_learners",
        r.pass,
        format!("{} training sets, max |E(Phi|d) difference| {}", r.training_sets, r.max_deviation),
    )];
    if loss.name() == "zero_one" {
        // A uniform random target is right with probability 1/|Y| at every
        // off-training x, whatever the learner guesses.
        let y = space.y_size();
        let expected = exact_int(y - 1) / exact_int(y);
        let all = r.e_phi_m_exact.iter().all(|e| *e == expected.to_string());
        checks.push(CheckOutcome::new(
            "zero_one_closed_form",
            all,
            format!("E(Phi|m) = {} for every learner, expected {expected}", r.e_phi_m_exact.join(", ")),
        ));
    }
    for b in &r.balances {
        checks.push(CheckOutcome::new(
            format!("balance[{} vs {}]", b.a, b.b),
            b.pass,
            format!("{} wins, {} losses, {} ties over training sets", b.a_wins, b.b_wins, b.ties),
        ));
    }

    let mut table = CsvTable::new("", &["learner", "d_x", "d_y", "expected_phi"]);
    for row in &r.per_training_set {
        for (name, e) in r.learners.iter().zip(&row.expected) {
            table.push(vec![name.clone(), joined(&row.xs), joined(&row.ys), e.clone()]);
        }
    }
    let per_algorithm = r
        .learners
        .iter()
        .zip(r.e_phi_m.iter().zip(&r.e_phi_m_exact))
        .map(|(l, (v, e))| json!({"learner": l, "e_phi_m": v, "e_phi_m_exact": e}))
        .collect();
    let max_deviation = r.max_deviation;
    ExperimentReport::new(config, checks, per_algorithm, max_deviation, json!(r), vec![table])
}

pub(super) fn supervised_nfl(config: &ExperimentConfig, p: &SupervisedNfl) -> Result<ExperimentReport, LabError> {
    let space = config.space.build()?;
    let loss = build_loss(&space, &p.loss, p.loss_matrix.as_ref())?;
    let learners = build(&p.learners, &space, &loss)?;
    let refs: Vec<&dyn Learner> = learners.iter().map(|l| l.as_ref()).collect();
    let r = nfl_supervised_check(&refs, &space, p.m, &loss)?;
    Ok(supervised_report(config, &space, &loss, r))
}

pub(super) fn cv_vs_anticv(config: &ExperimentConfig, p: &CvVsAnticv) -> Result<ExperimentReport, LabError> {
    let space = config.space.build()?;
    let loss = build_loss(&space, &p.loss, p.loss_matrix.as_ref())?;
    let (cv, anti) = p.selectors()?;
    let learners = build(&[cv, anti], &space, &loss)?;
    let refs: Vec<&dyn Learner> = learners.iter().map(|l| l.as_ref()).collect();
    let r = nfl_supervised_check(&refs, &space, p.m, &loss)?;
    Ok(supervised_report(config, &space, &loss, r))
}

pub(super) fn conditioning_contrast(
    config: &ExperimentConfig,
    p: &ConditioningContrast,
) -> Result<ExperimentReport, LabError> {
    let space = config.space.build()?;
    let loss = build_loss(&space, &p.loss, p.loss_matrix.as_ref())?;
    let a = make_learner(&p.a, &space, &loss)?;
    let b = make_learner(&p.b, &space, &loss)?;
    let r = conditioning_contrast_experiment(a.as_ref(), b.as_ref(), &space, p.m, &loss)?;

    let checks = vec![
        CheckOutcome::new(
            "a_lower_whole_space_loss_for_every_target",
            r.a_lower_for_every_target,
            format!("{} of {} targets favour {}", r.rows.iter().filter(|row| row.a_lower).count(), r.rows.len(), r.a),
        ),
        CheckOutcome::new(
            "ots_expectations_equal",
            r.ots_equal,
            format!("E(Phi|m): {} = {}, {} = {}", r.a, r.e_phi_a, r.b, r.e_phi_b),
        ),
    ];
    let mut table = CsvTable::new("", &["rank", "target", "phi_prime_a", "phi_prime_b"]);
    let mut max_gap = f64::NEG_INFINITY;
    for row in &r.rows {
        let pa: Exact = row.phi_prime_a.parse().expect("rational from core");
        let pb: Exact = row.phi_prime_b.parse().expect("rational from core");
        max_gap = max_gap.max(exact_to_f64(&(&pa - &pb)));
        table.push(vec![row.rank.to_string(), joined(&row.target), num(exact_to_f64(&pa)), num(exact_to_f64(&pb))]);
    }
    if r.rows.is_empty() {
        max_gap = 0.0;
    }
    let per_algorithm = vec![
        json!({"learner": r.a, "e_phi_m_exact": r.e_phi_a}),
        json!({"learner": r.b, "e_phi_m_exact": r.e_phi_b}),
    ];
    // Largest Phi'_a - Phi'_b over targets; negative when A wins everywhere.
    Ok(ExperimentReport::new(config, checks, per_algorithm, max_gap, json!(r), vec![table]))
}
