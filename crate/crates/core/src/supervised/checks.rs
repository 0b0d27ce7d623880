//! Enumeration checks for the supervised side: the inner-product formula
//! for P(c | d), off-training-set NFL across learners, and the contrast
//! between conditioning on f and averaging over f.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::{full_space_cost, ots_cost_uniform, ConditionalTable, Learner, LossFunction, TrainingSet};
use crate::error::{Error, Result};
use crate::exact::{exact_int, exact_to_f64, Exact};
use crate::nfl::PriorVector;
use crate::space::{FiniteSpace, ObjectiveTable};

/// All length-`m` input tuples over X, drawn with replacement, in odometer
/// order (first position least significant).
pub fn input_tuples(space: &FiniteSpace, m: usize) -> Result<Vec<Vec<usize>>> {
    let n = space.x_size();
    let count = (n as u64).checked_pow(m as u32).filter(|c| *c <= space.cap());
    let Some(count) = count else {
        return Err(Error::EnumerationTooLarge { count: format!("{n}^{m}"), cap: space.cap() });
    };
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = vec![0; m];
    for _ in 0..count {
        out.push(cur.clone());
        for digit in cur.iter_mut() {
            *digit += 1;
            if *digit < n {
                break;
            }
            *digit = 0;
        }
    }
    Ok(out)
}

fn covers(xs: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    for &x in xs {
        seen[x] = true;
    }
    seen.into_iter().all(|b| b)
}

fn targets(space: &FiniteSpace) -> Result<Vec<(ObjectiveTable, ConditionalTable)>> {
    Ok(space.functions()?.map(|f| {
        let t = ConditionalTable::from_objective(&f);
        (f, t)
    }).collect())
}

fn s(v: &Exact) -> String {
    v.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostRow {
    pub cost: f64,
    pub cost_exact: String,
    pub via_matrix: String,
    pub direct: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupervisedIpReport {
    pub learner: String,
    pub loss: String,
    pub training_set: Vec<(usize, usize)>,
    pub rows: Vec<CostRow>,
    pub distributions_equal: bool,
    pub loss_symmetric: bool,
    pub m_symmetric: bool,
    pub pass: bool,
}

/// P(c | d) = sum_{f,h} P(h|d) P(f|d) M_{c,d}(f, h) against direct
/// enumeration, with M_{c,d}(f, h) = [C(f, h, d) = c].
///
/// The likelihood is noise-free (P(d|f) is an indicator up to a constant),
/// so P(f|d) is the prior restricted to functions reproducing d.
pub fn supervised_inner_product_check(
    learner: &dyn Learner,
    space: &FiniteSpace,
    d: &TrainingSet,
    loss: &LossFunction,
    prior: &PriorVector<Exact>,
) -> Result<SupervisedIpReport> {
    if d.covers(space.x_size()) {
        return Err(Error::TrainingCoversSpace);
    }
    let grid = targets(space)?;
    if prior.len() != grid.len() {
        return Err(Error::InvalidPrior(format!("{} weights for {} functions", prior.len(), grid.len())));
    }

    let weights: Vec<Exact> = grid
        .iter()
        .zip(prior.weights())
        .map(|((f, _), p)| if d.is_consistent_with(f) { p.clone() } else { Exact::zero() })
        .collect();
    let z: Exact = weights.iter().cloned().sum();
    if z.is_zero() {
        return Err(Error::ZeroPosterior);
    }
    let p_f: Vec<Exact> = weights.iter().map(|w| w / &z).collect();

    // Hypothesis grid: every deterministic table, plus the learner's output
    // when it is not one of them.
    let h = learner.hypothesis(d, space)?;
    let mut h_grid: Vec<ConditionalTable> = grid.iter().map(|(_, t)| t.clone()).collect();
    let h_index = match h.labels() {
        Some(l) => ObjectiveTable::new(space, l.to_vec())?.rank()? as usize,
        None => {
            h_grid.push(h.clone());
            h_grid.len() - 1
        }
    };
    let mut p_h = vec![Exact::zero(); h_grid.len()];
    p_h[h_index] = Exact::one();

    let cost: Vec<Vec<Exact>> = grid
        .par_iter()
        .map(|(_, f)| h_grid.iter().map(|hh| ots_cost_uniform(f, hh, d, loss)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let mut values: Vec<Exact> = cost.iter().flatten().cloned().collect();
    values.sort();
    values.dedup();

    let mut via_matrix: BTreeMap<Exact, Exact> = BTreeMap::new();
    for c in &values {
        let mut total = Exact::zero();
        for (fi, pf) in p_f.iter().enumerate() {
            if pf.is_zero() {
                continue;
            }
            for (hi, ph) in p_h.iter().enumerate() {
                if !ph.is_zero() && cost[fi][hi] == *c {
                    total += pf * ph;
                }
            }
        }
        via_matrix.insert(c.clone(), total);
    }

    let mut direct: BTreeMap<Exact, Exact> = BTreeMap::new();
    for ((_, f), pf) in grid.iter().zip(&p_f) {
        if !pf.is_zero() {
            let c = ots_cost_uniform(f, &h, d, loss)?;
            *direct.entry(c).or_insert_with(Exact::zero) += pf;
        }
    }

    let rows: Vec<CostRow> = values
        .iter()
        .filter(|c| !via_matrix[*c].is_zero() || direct.contains_key(*c))
        .map(|c| CostRow {
            cost: exact_to_f64(c),
            cost_exact: s(c),
            via_matrix: s(&via_matrix[c]),
            direct: s(direct.get(c).unwrap_or(&Exact::zero())),
        })
        .collect();
    let distributions_equal = values.iter().all(|c| via_matrix[c] == direct.get(c).cloned().unwrap_or_else(Exact::zero))
        && direct.keys().all(|c| via_matrix.contains_key(c));

    let n = grid.len();
    let m_symmetric = (0..n).all(|i| (0..i).all(|j| cost[i][j] == cost[j][i]));
    let loss_symmetric = loss.is_symmetric();
    Ok(SupervisedIpReport {
        learner: learner.name(),
        loss: loss.name().into(),
        training_set: d.pairs().to_vec(),
        rows,
        distributions_equal,
        loss_symmetric,
        m_symmetric,
        pass: distributions_equal && (!loss_symmetric || m_symmetric),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerTrainingSetRow {
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    pub consistent_targets: usize,
    /// E(Phi | d, learner) per learner.
    pub expected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LearnerPairBalance {
    pub a: String,
    pub b: String,
    pub a_wins: usize,
    pub b_wins: usize,
    pub ties: usize,
    pub sum_difference: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupervisedNflReport {
    pub learners: Vec<String>,
    pub loss: String,
    pub x_size: usize,
    pub y_size: usize,
    pub m: usize,
    pub training_sets: usize,
    pub skipped_covering_tuples: usize,
    /// E(Phi | m, learner) under the uniform prior.
    pub e_phi_m: Vec<f64>,
    pub e_phi_m_exact: Vec<String>,
    /// Largest |E(Phi|d, learner) - E(Phi|d, first learner)| over d.
    pub max_deviation: f64,
    pub balances: Vec<LearnerPairBalance>,
    pub pass: bool,
    pub per_training_set: Vec<PerTrainingSetRow>,
    /// E(Phi | f, m, learner) per learner, indexed by function rank.
    #[serde(skip)]
    pub per_target: Vec<Vec<Exact>>,
}

struct TupleResult {
    rows: Vec<(Vec<usize>, Vec<usize>, usize, Vec<Exact>)>,
    per_target: Vec<Vec<Exact>>,
}

/// Off-training-set NFL across learners by exhaustive enumeration under the
/// uniform prior over deterministic targets.
///
/// d_X runs over every length-m tuple that leaves some x untouched; d_Y is
/// read off each target. For every d, E(Phi | d) averages the OTS cost over
/// the targets reproducing d.
pub fn nfl_supervised_check(
    learners: &[&dyn Learner],
    space: &FiniteSpace,
    m: usize,
    loss: &LossFunction,
) -> Result<SupervisedNflReport> {
    if learners.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let grid = targets(space)?;
    let tuples = input_tuples(space, m)?;
    let n = space.x_size();
    let open: Vec<&Vec<usize>> = tuples.iter().filter(|t| !covers(t, n)).collect();
    if open.is_empty() {
        return Err(Error::TrainingCoversSpace);
    }
    let k = learners.len();

    let results: Vec<TupleResult> = open
        .par_iter()
        .map(|xs| {
            let mut per_target = vec![vec![Exact::zero(); grid.len()]; k];
            let mut groups: HashMap<Vec<usize>, (usize, Vec<Exact>, Vec<ConditionalTable>)> = HashMap::new();
            let mut order = Vec::new();
            for (rank, (f, ft)) in grid.iter().enumerate() {
                let d = TrainingSet::sample(f, xs);
                let ys = d.ys();
                if !groups.contains_key(&ys) {
                    let hs = learners.iter().map(|l| l.hypothesis(&d, space)).collect::<Result<Vec<_>>>()?;
                    groups.insert(ys.clone(), (0, vec![Exact::zero(); k], hs));
                    order.push(ys.clone());
                }
                let (count, sums, hs) = groups.get_mut(&ys).expect("inserted");
                *count += 1;
                for (li, h) in hs.iter().enumerate() {
                    let c = ots_cost_uniform(ft, h, &d, loss)?;
                    sums[li] += &c;
                    per_target[li][rank] += c;
                }
            }
            let rows = order
                .into_iter()
                .map(|ys| {
                    let (count, sums, _) = groups.remove(&ys).expect("grouped");
                    let c = exact_int(count);
                    let expected = sums.into_iter().map(|v| v / &c).collect();
                    ((*xs).clone(), ys, count, expected)
                })
                .collect();
            Ok(TupleResult { rows, per_target })
        })
        .collect::<Result<_>>()?;

    let t = exact_int(open.len());
    let mut per_target = vec![vec![Exact::zero(); grid.len()]; k];
    let mut rows = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for r in results {
        for (li, col) in r.per_target.into_iter().enumerate() {
            for (acc, v) in per_target[li].iter_mut().zip(col) {
                *acc += v;
            }
        }
        for (xs, ys, count, expected) in r.rows {
            for e in &expected[1..] {
                max_deviation = max_deviation.max(exact_to_f64(&(e - &expected[0])).abs());
            }
            rows.push(PerTrainingSetRow { xs, ys, consistent_targets: count, expected: expected.iter().map(s).collect() });
        }
    }
    for col in per_target.iter_mut() {
        for v in col.iter_mut() {
            *v /= &t;
        }
    }
    let nf = exact_int(grid.len());
    let e_phi_m: Vec<Exact> = per_target.iter().map(|col| col.iter().cloned().sum::<Exact>() / &nf).collect();

    let mut balances = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let (mut aw, mut bw, mut ties, mut sum) = (0, 0, 0, Exact::zero());
            for (ea, eb) in per_target[a].iter().zip(&per_target[b]) {
                match ea.cmp(eb) {
                    std::cmp::Ordering::Less => aw += 1,
                    std::cmp::Ordering::Greater => bw += 1,
                    std::cmp::Ordering::Equal => ties += 1,
                }
                sum += ea - eb;
            }
            balances.push(LearnerPairBalance {
                a: learners[a].name(),
                b: learners[b].name(),
                a_wins: aw,
                b_wins: bw,
                ties,
                pass: sum.is_zero(),
                sum_difference: s(&sum),
            });
        }
    }

    let per_d_equal = rows.iter().all(|r| r.expected.iter().all(|e| *e == r.expected[0]));
    let m_equal = e_phi_m.iter().all(|e| *e == e_phi_m[0]);
    let pass = per_d_equal && m_equal && balances.iter().all(|b| b.pass);
    Ok(SupervisedNflReport {
        learners: learners.iter().map(|l| l.name()).collect(),
        loss: loss.name().into(),
        x_size: n,
        y_size: space.y_size(),
        m,
        training_sets: rows.len(),
        skipped_covering_tuples: tuples.len() - open.len(),
        e_phi_m: e_phi_m.iter().map(exact_to_f64).collect(),
        e_phi_m_exact: e_phi_m.iter().map(s).collect(),
        max_deviation,
        balances,
        pass,
        per_training_set: rows,
        per_target,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContrastRow {
    pub rank: u64,
    pub target: Vec<usize>,
    /// E(Phi' | m, A, f) and E(Phi' | m, B, f).
    pub phi_prime_a: String,
    pub phi_prime_b: String,
    pub a_lower: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContrastReport {
    pub a: String,
    pub b: String,
    pub loss: String,
    pub x_size: usize,
    pub m: usize,
    pub rows: Vec<ContrastRow>,
    /// E(Phi | m, .) under the uniform prior.
    pub e_phi_a: String,
    pub e_phi_b: String,
    pub a_lower_for_every_target: bool,
    pub ots_equal: bool,
    pub pass: bool,
}

/// Whole-space expected loss conditioned on each target, next to the
/// prior-averaged off-training-set loss. Passes when A's Phi' is strictly
/// lower for every f while the OTS averages coincide.
pub fn conditioning_contrast_experiment(
    a: &dyn Learner,
    b: &dyn Learner,
    space: &FiniteSpace,
    m: usize,
    loss: &LossFunction,
) -> Result<ContrastReport> {
    let grid = targets(space)?;
    let tuples = input_tuples(space, m)?;
    let n = space.x_size();
    let nt = exact_int(tuples.len());

    let per_f: Vec<(Exact, Exact, Exact, Exact)> = grid
        .par_iter()
        .map(|(f, ft)| {
            let (mut pa, mut pb, mut oa, mut ob) = (Exact::zero(), Exact::zero(), Exact::zero(), Exact::zero());
            for xs in &tuples {
                let d = TrainingSet::sample(f, xs);
                let ha = a.hypothesis(&d, space)?;
                let hb = b.hypothesis(&d, space)?;
                pa += full_space_cost(ft, &ha, loss);
                pb += full_space_cost(ft, &hb, loss);
                if !covers(xs, n) {
                    oa += ots_cost_uniform(ft, &ha, &d, loss)?;
                    ob += ots_cost_uniform(ft, &hb, &d, loss)?;
                }
            }
            Ok((pa / &nt, pb / &nt, oa, ob))
        })
        .collect::<Result<_>>()?;

    let open = tuples.iter().filter(|t| !covers(t, n)).count();
    if open == 0 {
        return Err(Error::TrainingCoversSpace);
    }
    let denom = exact_int(open) * exact_int(grid.len());
    let e_a: Exact = per_f.iter().map(|r| r.2.clone()).sum::<Exact>() / &denom;
    let e_b: Exact = per_f.iter().map(|r| r.3.clone()).sum::<Exact>() / &denom;

    let rows: Vec<ContrastRow> = grid
        .iter()
        .zip(&per_f)
        .map(|((f, _), (pa, pb, _, _))| {
            Ok(ContrastRow {
                rank: f.rank()?,
                target: f.y_index().to_vec(),
                phi_prime_a: s(pa),
                phi_prime_b: s(pb),
                a_lower: pa < pb,
            })
        })
        .collect::<Result<_>>()?;
    let a_lower_for_every_target = rows.iter().all(|r| r.a_lower);
    let ots_equal = e_a == e_b;
    Ok(ContrastReport {
        a: a.name(),
        b: b.name(),
        loss: loss.name().into(),
        x_size: n,
        m,
        rows,
        e_phi_a: s(&e_a),
        e_phi_b: s(&e_b),
        a_lower_for_every_target,
        ots_equal,
        pass: a_lower_for_every_target && ots_equal,
    })
}
