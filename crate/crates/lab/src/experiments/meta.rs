//! Predicting, from past comparisons, whether one search algorithm beats
//! another on the next objective function.
//!
//! The inner space supplies objective functions; each inner function rank is
//! one outer input x, and the outer label says whether Smith's algorithm had
//! strictly better expected performance than Jones's seeded random search.
//! Majority and anti-majority learners are trained on the compared ranks and
//! scored off the training set, both on one chosen outer universe and
//! averaged over every outer universe consistent with the history.

use nfl_core::exact::{exact_int, exact_to_f64};
use nfl_core::nfl::{expected_performance_exact, SeedSet};
use nfl_core::supervised::{
    majority_label, nfl_supervised_check, ots_cost_uniform, AntiMajority, ConditionalTable, Learner, LossFunction,
    Majority, TrainingSet,
};
use nfl_core::{make_algorithm, AlgorithmSpec, Exact, FiniteSpace, ObjectiveTable};
use serde_json::json;

use super::num;
use crate::config::{ExperimentConfig, MetaInduction, UniverseSetting};
use crate::error::LabError;
use crate::report::{CheckOutcome, CsvTable, ExperimentReport};

/// Per outer universe consistent with the training set, the OTS accuracy of
/// each learner; plus the uniform averages.
#[derive(Clone, Debug, PartialEq)]
pub struct MetaOutcome {
    pub universes: Vec<(u64, Vec<Exact>)>,
    pub averages: Vec<Exact>,
}

fn accuracy(
    learner: &dyn Learner,
    universe: &ObjectiveTable,
    d: &TrainingSet,
    loss: &LossFunction,
) -> Result<Exact, LabError> {
    let h = learner.hypothesis(d, universe.space())?;
    let cost = ots_cost_uniform(&ConditionalTable::from_objective(universe), &h, d, loss)?;
    Ok(exact_int(1) - cost)
}

/// Exhaustive average over outer universes that reproduce `d`.
pub fn outer_universes_average(
    outer: &FiniteSpace,
    d: &TrainingSet,
    learners: &[&dyn Learner],
) -> Result<MetaOutcome, LabError> {
    let loss = LossFunction::zero_one(outer);
    let mut universes = Vec::new();
    let mut totals = vec![exact_int(0); learners.len()];
    for u in outer.functions()? {
        if !d.is_consistent_with(&u) {
            continue;
        }
        let acc = learners.iter().map(|l| accuracy(*l, &u, d, &loss)).collect::<Result<Vec<_>, _>>()?;
        for (t, a) in totals.iter_mut().zip(&acc) {
            *t += a;
        }
        universes.push((u.rank()?, acc));
    }
    let n = exact_int(universes.len());
    let averages = totals.into_iter().map(|t| t / &n).collect();
    Ok(MetaOutcome { universes, averages })
}

/// Label per inner function rank: 1 when Smith strictly beats Jones.
fn observed_labels(inner: &FiniteSpace, p: &MetaInduction) -> Result<Vec<usize>, LabError> {
    let smith = make_algorithm(&p.smith, inner)?;
    let jones = make_algorithm(&AlgorithmSpec::Random { seed: p.jones_seed }, inner)?;
    let run = SeedSet::single(0);
    inner
        .functions()?
        .map(|f| {
            let es = expected_performance_exact(smith.as_ref(), &f, p.m, p.measure, &run)?;
            let ej = expected_performance_exact(jones.as_ref(), &f, p.m, p.measure, &run)?;
            Ok(usize::from(es < ej))
        })
        .collect()
}

fn schema(field: &str, reason: String) -> LabError {
    LabError::Schema { field: field.into(), reason }
}

pub(super) fn meta_induction(config: &ExperimentConfig, p: &MetaInduction) -> Result<ExperimentReport, LabError> {
    let inner = config.space.build()?;
    let n_inner = inner.function_count()? as usize;
    let outer = FiniteSpace::with_cap(n_inner, vec![0.0, 1.0], config.space.cap)?;
    outer.function_count()?;

    let observed = observed_labels(&inner, p)?;
    let labels = match &p.universe {
        UniverseSetting::Named(name) => match name.as_str() {
            "observed" => observed.clone(),
            "smith_always_wins" => vec![1; n_inner],
            "smith_never_wins" => vec![0; n_inner],
            other => return Err(schema("experiment.universe", format!("unknown universe `{other}`"))),
        },
        UniverseSetting::Labels(v) => {
            if v.len() != n_inner || v.iter().any(|&y| y > 1) {
                return Err(schema("experiment.universe", format!("need {n_inner} labels in {{0, 1}}")));
            }
            v.clone()
        }
    };
    let universe = ObjectiveTable::new(&outer, labels.clone())?;
    let mut xs = Vec::with_capacity(p.history.len());
    for &r in &p.history {
        if r as usize >= n_inner {
            return Err(schema("experiment.history", format!("rank {r} outside 0..{n_inner}")));
        }
        xs.push(r as usize);
    }
    let d = TrainingSet::sample(&universe, &xs);
    if d.covers(n_inner) {
        return Err(schema("experiment.history", "history covers every inner function; nothing is off-training".into()));
    }

    let learners: [&dyn Learner; 2] = [&Majority, &AntiMajority];
    let names = ["majority", "anti_majority"];
    let loss = LossFunction::zero_one(&outer);
    let chosen: Vec<Exact> = learners.iter().map(|l| accuracy(*l, &universe, &d, &loss)).collect::<Result<_, _>>()?;
    let outcome = outer_universes_average(&outer, &d, &learners)?;
    let half = exact_int(1) / exact_int(2);

    let mut checks = vec![
        CheckOutcome::new(
            "uniform_average_tie",
            outcome.averages[0] == outcome.averages[1],
            format!(
                "average OTS accuracy over {} universes: majority {}, anti_majority {}",
                outcome.universes.len(),
                outcome.averages[0],
                outcome.averages[1]
            ),
        ),
        CheckOutcome::new(
            "uniform_average_is_one_half",
            outcome.averages.iter().all(|a| *a == half),
            "binary outer labels: a uniform universe is a fair coin off the training set",
        ),
    ];
    let mut every_d = serde_json::Value::Null;
    if !xs.is_empty() {
        let r = nfl_supervised_check(&learners, &outer, xs.len(), &loss)?;
        checks.push(CheckOutcome::new(
            "tie_for_every_training_set",
            r.pass,
            format!("{} outer training sets of size {}", r.training_sets, xs.len()),
        ));
        every_d = json!({"training_sets": r.training_sets, "e_phi_m_exact": r.e_phi_m_exact, "pass": r.pass});
    }

    let empty = TrainingSet::empty();
    let empty_prediction: Vec<usize> = learners
        .iter()
        .map(|l| l.hypothesis(&empty, &outer).map(|h| h.labels().expect("deterministic")[0]))
        .collect::<Result<_, _>>()?;

    let mut table = CsvTable::new("", &["universe_rank", "majority_accuracy", "anti_majority_accuracy"]);
    for (rank, acc) in &outcome.universes {
        table.push(vec![rank.to_string(), num(exact_to_f64(&acc[0])), num(exact_to_f64(&acc[1]))]);
    }
    let per_algorithm = names
        .iter()
        .zip(chosen.iter().zip(&outcome.averages))
        .map(|(n, (c, a))| {
            json!({
                "learner": n,
                "universe_accuracy": exact_to_f64(c),
                "universe_accuracy_exact": c.to_string(),
                "average_accuracy_exact": a.to_string(),
            })
        })
        .collect();
    let max_deviation = outcome.averages.iter().map(|a| exact_to_f64(a) - 0.5).map(f64::abs).fold(0.0, f64::max);
    let details = json!({
        "inner_functions": n_inner,
        "observed_labels": observed,
        "universe_labels": labels,
        "training_set": d.pairs(),
        "majority_label_of_history": majority_label(&d, 2),
        "empty_history_prediction": {"majority": empty_prediction[0], "anti_majority": empty_prediction[1]},
        "consistent_universes": outcome.universes.len(),
        "every_training_set": every_d,
    });
    Ok(ExperimentReport::new(config, checks, per_algorithm, max_deviation, details, vec![table]))
}
