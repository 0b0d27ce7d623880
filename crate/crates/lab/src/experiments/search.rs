use nfl_core::exact::exact_to_f64;
use nfl_core::nfl::{
    inner_product_check, nfl_sum, prior_averaged_nfl_check, win_loss_balance, InnerProductReport, NamedAlgorithm,
    PriorVector, SeedSet,
};
use nfl_core::rng;
use nfl_core::{make_algorithm, AlgorithmSpec, Exact, FiniteSpace, SearchAlgorithm};
use serde_json::json;

use super::num;
use crate::config::{Arithmetic, ExperimentConfig, InnerProduct, NflSumSweep, PriorMc};
use crate::error::LabError;
use crate::report::{CheckOutcome, CsvTable, ExperimentReport};

type Built = Vec<(String, Box<dyn SearchAlgorithm>)>;

fn build(specs: &[AlgorithmSpec], space: &FiniteSpace) -> Result<Built, LabError> {
    specs.iter().map(|s| Ok((s.to_string(), make_algorithm(s, space)?))).collect()
}

fn named(built: &Built) -> Vec<NamedAlgorithm<'_>> {
    built.iter().map(|(n, a)| (n.clone(), a.as_ref())).collect()
}

pub(super) fn nfl_sum_sweep(config: &ExperimentConfig, p: &NflSumSweep) -> Result<ExperimentReport, LabError> {
    let space = config.space.build()?;
    let seeds = SeedSet::range(p.run_seeds)?;
    let algs = build(&p.algorithms, &space)?;
    let mut table = CsvTable::new("", &["algorithm", "m", "phi_measure", "sum"]);
    let mut checks = Vec::new();
    let mut per_alg: Vec<Vec<serde_json::Value>> = vec![Vec::new(); algs.len()];
    let mut max_deviation: f64 = 0.0;

    for &measure in &p.measures {
        for &m in &p.m {
            let sums: Vec<Exact> = algs
                .iter()
                .map(|(_, a)| nfl_sum(a.as_ref(), &space, m, measure, &seeds))
                .collect::<Result<_, _>>()?;
            for (i, ((name, _), s)) in algs.iter().zip(&sums).enumerate() {
                table.push(vec![name.clone(), m.to_string(), measure.to_string(), num(exact_to_f64(s))]);
                per_alg[i].push(json!({"m": m, "measure": measure, "sum": exact_to_f64(s), "sum_exact": s.to_string()}));
            }
            let lo = sums.iter().min().expect("non-empty");
            let hi = sums.iter().max().expect("non-empty");
            max_deviation = max_deviation.max(exact_to_f64(&(hi - lo)));
            checks.push(CheckOutcome::new(
                format!("nfl_sum_constant[m={m},{measure}]"),
                lo == hi,
                format!("sums range over [{lo}, {hi}]"),
            ));
        }
    }

    let mut balances = Vec::new();
    for [a, b] in &p.win_loss {
        let (ba, bb) = (make_algorithm(a, &space)?, make_algorithm(b, &space)?);
        for &measure in &p.measures {
            for &m in &p.m {
                let r = win_loss_balance(
                    (a.to_string(), ba.as_ref()),
                    (b.to_string(), bb.as_ref()),
                    &space,
                    m,
                    measure,
                    &seeds,
                )?;
                checks.push(CheckOutcome::new(
                    format!("win_loss[{a} vs {b},m={m},{measure}]"),
                    r.pass,
                    format!("{} wins, {} losses, {} ties, sum of differences {}", r.a_wins, r.b_wins, r.ties, r.sum_difference_exact),
                ));
                balances.push(r);
            }
        }
    }

    let per_algorithm = algs
        .iter()
        .zip(per_alg)
        .map(|((name, _), sums)| json!({"algorithm": name, "sums": sums}))
        .collect();
    Ok(ExperimentReport::new(
        config,
        checks,
        per_algorithm,
        max_deviation,
        json!({"function_count": space.function_count()?, "win_loss": balances}),
        vec![table],
    ))
}

fn priors_f64(space: &FiniteSpace, p: &InnerProduct) -> Result<Vec<(String, PriorVector<f64>)>, LabError> {
    let mut out = Vec::new();
    if p.uniform_prior {
        out.push(("uniform".to_string(), PriorVector::uniform(space)?));
    }
    for i in 0..p.dirichlet_priors {
        let prior = PriorVector::dirichlet(space, &mut rng::stream(p.seed, i as u64))?;
        out.push((format!("dirichlet[{i}]"), prior));
    }
    Ok(out)
}

pub(super) fn inner_product(config: &ExperimentConfig, p: &InnerProduct) -> Result<ExperimentReport, LabError> {
    let space = config.space.build()?;
    let seeds = SeedSet::range(p.run_seeds)?;
    let algs = build(&p.algorithms, &space)?;
    let float_priors = priors_f64(&space, p)?;

    let mut reports: Vec<(String, String, InnerProductReport)> = Vec::new();
    for (name, alg) in &algs {
        for (prior_name, prior) in &float_priors {
            let r = match config.arithmetic {
                Arithmetic::Float => inner_product_check(alg.as_ref(), &space, p.m, p.measure, prior, &seeds)?,
                Arithmetic::Rational => {
                    let exact = if prior_name == "uniform" {
                        PriorVector::<Exact>::uniform(&space)?
                    } else {
                        PriorVector::exact_from(prior)?
                    };
                    inner_product_check(alg.as_ref(), &space, p.m, p.measure, &exact, &seeds)?
                }
            };
            reports.push((name.clone(), prior_name.clone(), r));
        }
    }

    let mut table = CsvTable::new("", &["algorithm", "prior", "phi", "direct", "inner_product", "deviation"]);
    let mut checks = Vec::new();
    let mut per_algorithm = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for (name, _) in &algs {
        let mine: Vec<_> = reports.iter().filter(|(n, _, _)| n == name).collect();
        let worst = mine.iter().map(|(_, _, r)| r.max_deviation.max(r.partition_deviation)).fold(0.0, f64::max);
        let pass = mine.iter().all(|(_, _, r)| r.pass);
        max_deviation = max_deviation.max(worst);
        for (_, prior, r) in &mine {
            for row in &r.rows {
                table.push(vec![
                    name.clone(),
                    prior.clone(),
                    num(row.phi),
                    num(row.direct),
                    num(row.inner_product),
                    num(row.deviation),
                ]);
            }
        }
        checks.push(CheckOutcome::new(
            format!("inner_product[{name}]"),
            pass,
            format!("max deviation {worst:e} over {} priors", mine.len()),
        ));
        per_algorithm.push(json!({"algorithm": name, "priors": mine.len(), "max_deviation": worst, "pass": pass}));
    }
    let details: Vec<_> = reports.iter().map(|(_, prior, r)| json!({"prior": prior, "report": r})).collect();
    Ok(ExperimentReport::new(config, checks, per_algorithm, max_deviation, json!(details), vec![table]))
}

pub(super) fn prior_mc(config: &ExperimentConfig, p: &PriorMc) -> Result<ExperimentReport, LabError> {
    let space = config.space.build()?;
    let seeds = SeedSet::range(p.run_seeds)?;
    let algs = build(&p.algorithms, &space)?;
    let r = prior_averaged_nfl_check(&named(&algs), &space, p.m, p.measure, p.samples, p.seed, &seeds)?;

    let mut table = CsvTable::new("", &["algorithm", "sample_index", "e_pi_phi"]);
    for ((name, _), samples) in algs.iter().zip(&r.samples) {
        for (i, v) in samples.iter().enumerate() {
            table.push(vec![name.clone(), i.to_string(), num(*v)]);
        }
    }
    let mut checks: Vec<CheckOutcome> = r
        .algorithms
        .iter()
        .map(|a| {
            CheckOutcome::new(
                format!("mean_matches_analytic[{}]", a.algorithm),
                a.pass,
                format!("MC mean {} vs {} ({:.2} SE)", a.mc_mean, r.analytic, a.z),
            )
        })
        .collect();
    checks.extend(r.pairs.iter().map(|pr| {
        CheckOutcome::new(
            format!("paired_difference[{} vs {}]", pr.a, pr.b),
            pr.pass,
            format!("mean difference {:e} ({:.2} SE)", pr.mean_difference, pr.z),
        )
    }));
    checks.push(CheckOutcome::new(
        "simplex_marginals",
        r.marginal_max_z <= nfl_core::nfl::MARGINAL_SIGMA_BOUND,
        format!("largest marginal deviation {:.2} SE", r.marginal_max_z),
    ));
    let max_deviation = r.algorithms.iter().map(|a| (a.mc_mean - r.analytic).abs()).fold(0.0, f64::max);
    let per_algorithm = r.algorithms.iter().map(|a| json!(a)).collect();
    Ok(ExperimentReport::new(config, checks, per_algorithm, max_deviation, json!(r), vec![table]))
}
