//! Performance distributions, D-vectors and NFL sums by enumeration over Y^X.
//!
//! For a fixed algorithm and sample size every objective function yields a
//! distribution over realized value sequences d_Y. Everything here is built
//! from that per-function table:
//!
//! ```text
//! P(phi | A, m)  = sum_{d_Y} P(d_Y | A, m) [phi = Phi(d_Y)]
//! P(d_Y | A, m)  = sum_f P(d_Y | f, m, A) P(f)
//! D(f; phi)      = sum_{d_Y} P(d_Y | f, m, A) [phi = Phi(d_Y)]
//! ```
//!
//! Stochastic algorithms are averaged over a finite [`SeedSet`]; each seeded
//! run is deterministic, so the sums stay exact.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::algorithms::{run_search, SearchAlgorithm};
use crate::error::{Error, Result};
use crate::exact::{compensated_sum, exact_from_f64, exact_int, exact_to_f64, Exact, Mass};
use crate::mco::mean_and_se;
use crate::rng::{self, LabRng};
use crate::space::{FiniteSpace, ObjectiveTable, PerformanceMeasure};

/// Float-mode tolerance for mass comparisons.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_SEED_COUNT: usize = 64;

/// Run seeds that a stochastic algorithm's expectation averages over.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeedSet {
    seeds: Vec<u64>,
}

impl SeedSet {
    pub fn new(seeds: Vec<u64>) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::Invalid("seed set must be non-empty".into()));
        }
        Ok(Self { seeds })
    }

    /// Seeds `0..n`.
    pub fn range(n: usize) -> Result<Self> {
        Self::new((0..n as u64).collect())
    }

    pub fn single(seed: u64) -> Self {
        Self { seeds: vec![seed] }
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }
}

impl Default for SeedSet {
    fn default() -> Self {
        Self { seeds: (0..DEFAULT_SEED_COUNT as u64).collect() }
    }
}

/// P(d_Y | f, m, A): realized Y-index sequences with their probabilities.
pub fn outcome_distribution(
    algorithm: &dyn SearchAlgorithm,
    f: &ObjectiveTable,
    m: usize,
    seeds: &SeedSet,
) -> Result<Vec<(Vec<usize>, Exact)>> {
    if !algorithm.is_stochastic() {
        let trace = run_search(algorithm, f, m, seeds.seeds()[0])?;
        return Ok(vec![(trace.y_indices(), exact_int(1))]);
    }
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for &s in seeds.seeds() {
        *counts.entry(run_search(algorithm, f, m, s)?.y_indices()).or_default() += 1;
    }
    let n = exact_int(seeds.len());
    Ok(counts.into_iter().map(|(d, c)| (d, exact_int(c) / &n)).collect())
}

/// Exact E(Phi | f, m, A).
pub fn expected_performance_exact(
    algorithm: &dyn SearchAlgorithm,
    f: &ObjectiveTable,
    m: usize,
    measure: PerformanceMeasure,
    seeds: &SeedSet,
) -> Result<Exact> {
    let mut total = Exact::zero();
    for (d, w) in outcome_distribution(algorithm, f, m, seeds)? {
        total += measure.evaluate_indices(f.space(), &d)? * w;
    }
    Ok(total)
}

/// E(Phi | f, m, A); for deterministic algorithms Phi of the unique trace.
pub fn expected_performance(
    algorithm: &dyn SearchAlgorithm,
    f: &ObjectiveTable,
    m: usize,
    measure: PerformanceMeasure,
    seeds: &SeedSet,
) -> Result<f64> {
    expected_performance_exact(algorithm, f, m, measure, seeds).map(|v| exact_to_f64(&v))
}

/// Per function rank: the (phi, probability) pairs of D(f; ., A, m).
type PhiOutcomes = Vec<Vec<(Exact, Exact)>>;

fn phi_outcomes(
    algorithm: &dyn SearchAlgorithm,
    space: &FiniteSpace,
    m: usize,
    measure: PerformanceMeasure,
    seeds: &SeedSet,
) -> Result<PhiOutcomes> {
    let count = space.function_count()?;
    (0..count)
        .into_par_iter()
        .map(|rank| {
            let f = ObjectiveTable::from_rank(space, rank)?;
            let mut by_phi: BTreeMap<Exact, Exact> = BTreeMap::new();
            for (d, w) in outcome_distribution(algorithm, &f, m, seeds)? {
                *by_phi.entry(measure.evaluate_indices(space, &d)?).or_insert_with(Exact::zero) += w;
            }
            Ok(by_phi.into_iter().collect())
        })
        .collect()
}

/// E(Phi | f, m, A) for every f, indexed by rank.
pub fn performance_table(
    algorithm: &dyn SearchAlgorithm,
    space: &FiniteSpace,
    m: usize,
    measure: PerformanceMeasure,
    seeds: &SeedSet,
) -> Result<Vec<Exact>> {
    let count = space.function_count()?;
    (0..count)
        .into_par_iter()
        .map(|rank| {
            let f = ObjectiveTable::from_rank(space, rank)?;
            expected_performance_exact(algorithm, &f, m, measure, seeds)
        })
        .collect()
}

/// sum_f E(Phi | f, m, A).
pub fn nfl_sum(
    algorithm: &dyn SearchAlgorithm,
    space: &FiniteSpace,
    m: usize,
    measure: PerformanceMeasure,
    seeds: &SeedSet,
) -> Result<Exact> {
    Ok(performance_table(algorithm, space, m, measure, seeds)?.into_iter().sum())
}

/// P(phi | A, m) on a sorted support.
#[derive(Clone, Debug, PartialEq)]
pub struct PerformanceDistribution<M: Mass> {
    pub support: Vec<Exact>,
    pub mass: Vec<M>,
}

impl<M: Mass> PerformanceDistribution<M> {
    fn from_map(map: BTreeMap<Exact, M>) -> Self {
        let (support, mass) = map.into_iter().unzip();
        Self { support, mass }
    }

    pub fn mass_at(&self, phi: &Exact) -> M {
        match self.support.binary_search(phi) {
            Ok(i) => self.mass[i].clone(),
            Err(_) => M::zero_mass(),
        }
    }

    pub fn total(&self) -> M {
        M::sum(self.mass.iter().cloned())
    }

    pub fn as_f64(&self) -> Vec<(f64, f64)> {
        self.support.iter().zip(&self.mass).map(|(p, m)| (exact_to_f64(p), m.to_f64())).collect()
    }
}

impl<M: Mass> Serialize for PerformanceDistribution<M> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            support: Vec<f64>,
            mass: Vec<f64>,
        }
        Repr {
            support: self.support.iter().map(exact_to_f64).collect(),
            mass: self.mass.iter().map(Mass::to_f64).collect(),
        }
        .serialize(s)
    }
}

/// A prior P(f): a point on the simplex over Y^X, indexed by rank.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorVector<M: Mass> {
    weights: Vec<M>,
}

impl<M: Mass> PriorVector<M> {
    /// Validates length, sign and normalization (exact in rational mode,
    /// within [`FLOAT_TOLERANCE`] otherwise).
    pub fn from_weights(space: &FiniteSpace, weights: Vec<M>) -> Result<Self> {
        let count = space.function_count()? as usize;
        if weights.len() != count {
            return Err(Error::InvalidPrior(format!("{} weights for {count} functions", weights.len())));
        }
        if let Some(i) = weights.iter().position(|w| w.is_negative()) {
            return Err(Error::InvalidPrior(format!("negative weight at rank {i}")));
        }
        let total = M::sum(weights.iter().cloned());
        let off = total.deviation(&M::unit_mass());
        if (M::EXACT && off != 0.0) || off > FLOAT_TOLERANCE {
            return Err(Error::InvalidPrior(format!("weights sum to {}", total.to_f64())));
        }
        Ok(Self { weights })
    }

    pub fn uniform(space: &FiniteSpace) -> Result<Self> {
        let count = space.function_count()?;
        let w = M::from_exact(&(exact_int(1) / exact_int(count as usize)));
        Ok(Self { weights: vec![w; count as usize] })
    }

    pub fn point_mass(space: &FiniteSpace, rank: u64) -> Result<Self> {
        let count = space.function_count()?;
        if rank >= count {
            return Err(Error::RankOutOfRange { rank, count });
        }
        let mut weights = vec![M::zero_mass(); count as usize];
        weights[rank as usize] = M::unit_mass();
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[M] {
        &self.weights
    }

    pub fn get(&self, rank: usize) -> &M {
        &self.weights[rank]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl PriorVector<f64> {
    /// Uniform draw from the simplex: flat Dirichlet via normalized
    /// unit-rate exponentials.
    pub fn dirichlet(space: &FiniteSpace, rng: &mut LabRng) -> Result<Self> {
        let count = space.function_count()? as usize;
        let draws: Vec<f64> = (0..count).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total = compensated_sum(draws.iter().copied());
        Ok(Self { weights: draws.into_iter().map(|v| v / total).collect() })
    }
}

impl PriorVector<Exact> {
    /// Exact copy of a float prior: each weight is taken as the dyadic
    /// rational it represents, then renormalized so the sum is exactly 1.
    pub fn exact_from(prior: &PriorVector<f64>) -> Result<Self> {
        let raw: Vec<Exact> = prior.weights.iter().map(|&w| exact_from_f64(w)).collect();
        let total: Exact = raw.iter().cloned().sum();
        if !total.is_positive() {
            return Err(Error::InvalidPrior("weights sum to zero".into()));
        }
        Ok(Self { weights: raw.into_iter().map(|w| w / &total).collect() })
    }
}

/// A subset B of Y^X as a membership mask over ranks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSubset {
    members: Vec<bool>,
}

impl FunctionSubset {
    pub fn empty(space: &FiniteSpace) -> Result<Self> {
        Ok(Self { members: vec![false; space.function_count()? as usize] })
    }

    pub fn full(space: &FiniteSpace) -> Result<Self> {
        Ok(Self { members: vec![true; space.function_count()? as usize] })
    }

    pub fn from_predicate(space: &FiniteSpace, pred: impl Fn(&ObjectiveTable) -> bool) -> Result<Self> {
        Ok(Self { members: space.functions()?.map(|f| pred(&f)).collect() })
    }

    pub fn from_mask(space: &FiniteSpace, members: Vec<bool>) -> Result<Self> {
        let count = space.function_count()? as usize;
        if members.len() != count {
            return Err(Error::Invalid(format!("subset mask of length {} for {count} functions", members.len())));
        }
        Ok(Self { members })
    }

    pub fn contains(&self, rank: usize) -> bool {
        self.members[rank]
    }

    pub fn complement(&self) -> Self {
        Self { members: self.members.iter().map(|b| !b).collect() }
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn universe_size(&self) -> usize {
        self.members.len()
    }
}

/// P(phi | A, m) directly: accumulate P(d_Y | A, m) from P(d_Y | f, m, A) summed over f,
/// then push each sequence's mass to its phi.
pub fn performance_distribution_direct<M: Mass>(
    algorithm: &dyn SearchAlgorithm,
    space: &FiniteSpace,
    m: usize,
    measure: PerformanceMeasure,
    prior: &PriorVector<M>,
    seeds: &SeedSet,
) -> Result<PerformanceDistribution<M>> {
    check_prior(space, prior)?;
    let mut by_sequence: BTreeMap<Vec<usize>, Vec<M>> = BTreeMap::new();
    for (rank, f) in space.functions()?.enumerate() {
        let p = prior.get(rank);
        if *p == M::zero_mass() {
            continue;
        }
        for (d, w) in outcome_distribution(algorithm, &f, m, seeds)? {
            by_sequence.entry(d).or_default().push(p.mul(&M::from_exact(&w)));
        }
    }
    let mut by_phi: BTreeMap<Exact, Vec<M>> = BTreeMap::new();
    for (d, parts) in by_sequence {
        by_phi.entry(measure.evaluate_indices(space, &d)?).or_default().push(M::sum(parts));
    }
    Ok(PerformanceDistribution::from_map(by_phi.into_iter().map(|(k, v)| (k, M::sum(v))).collect()))
}

fn check_prior<M: Mass>(space: &FiniteSpace, prior: &PriorVector<M>) -> Result<()> {
    let count = space.function_count()? as usize;
    if prior.len() != count {
        return Err(Error::InvalidPrior(format!("{} weights for {count} functions", prior.len())));
    }
    Ok(())
}

/// D(f; phi, A, m) over all f.
#[derive(Clone, Debug, PartialEq)]
pub struct DVector {
    pub phi: Exact,
    pub algorithm: String,
    pub m: usize,
    pub entries: Vec<Exact>,
}

impl DVector {
    pub fn is_binary(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero() || *e == exact_int(1))
    }

    /// sum_f P(f) D(f).
    pub fn dot<M: Mass>(&self, prior: &PriorVector<M>) -> M {
        M::sum(
            self.entries
                .iter()
                .zip(prior.weights())
                .filter(|(d, _)| !d.is_zero())
                .map(|(d, p)| p.mul(&M::from_exact(d))),
        )
    }
}

fn d_vector_from(outcomes: &PhiOutcomes, phi: &Exact, name: String, m: usize) -> DVector {
    let entries = outcomes
        .iter()
        .map(|per_f| {
            per_f.iter().find(|(p, _)| p == phi).map_or_else(Exact::zero, |(_, w)| w.clone())
        })
        .collect();
    DVector { phi: phi.clone(), algorithm: name, m, entries }
}

pub fn d_vector(
    algorithm: &dyn SearchAlgorithm,
    space: &FiniteSpace,
    m: usize,
    measure: PerformanceMeasure,
    phi: &Exact,
    seeds: &SeedSet,
) -> Result<DVector> {
    let outcomes = phi_outcomes(algorithm, space, m, measure, seeds)?;
    Ok(d_vector_from(&outcomes, phi, algorithm.name(), m))
}

/// Every phi some f can produce, sorted.
fn achievable(outcomes: &PhiOutcomes) -> Vec<Exact> {
    let mut all: Vec<Exact> = outcomes.iter().flatten().map(|(p, _)| p.clone()).collect();
    all.sort();
    all.dedup();
    all
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InnerProductRow {
    pub phi: f64,
    pub direct: f64,
    pub inner_product: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InnerProductReport {
    pub algorithm: String,
    pub m: usize,
    pub measure: PerformanceMeasure,
    pub exact: bool,
    pub rows: Vec<InnerProductRow>,
    pub max_deviation: f64,
    /// |sum_phi P(phi) - 1| of the direct distribution.
    pub partition_deviation: f64,
    pub pass: bool,
}

/// Compares P(phi | A, m) from the realized-sequence sum with the inner
/// product sum_f P(f) D(f; phi) at every achievable phi.
pub fn inner_product_check<M: Mass>(
    algorithm: &dyn SearchAlgorithm,
    space: &FiniteSpace,
    m: usize,
    measure: PerformanceMeasure,
    prior: &PriorVector<M>,
    seeds: &SeedSet,
) -> Result<InnerProductReport> {
    let direct = performance_distribution_direct(algorithm, space, m, measure, prior, seeds)?;
    let outcomes = phi_outcomes(algorithm, space, m, measure, seeds)?;
    let mut rows = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for phi in achievable(&outcomes) {
        let dv = d_vector_from(&outcomes, &phi, algorithm.name(), m);
        let inner = dv.dot(prior);
        let lhs = direct.mass_at(&phi);
        let deviation = lhs.deviation(&inner);
        max_deviation = max_deviation.max(deviation);
        rows.push(InnerProductRow {
            phi: exact_to_f64(&phi),
            direct: lhs.to_f64(),
            inner_product: inner.to_f64(),
            deviation,
        });
    }
    let partition_deviation = direct.total().deviation(&M::unit_mass());
    let tol = if M::EXACT { 0.0 } else { FLOAT_TOLERANCE };
    Ok(InnerProductReport {
        algorithm: algorithm.name(),
        m,
        measure,
        exact: M::EXACT,
        rows,
        max_deviation,
        partition_deviation,
        pass: max_deviation <= tol && partition_deviation <= tol,
    })
}

/// Named algorithm under test.
pub type NamedAlgorithm<'a> = (String, &'a dyn SearchAlgorithm);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetRow {
    pub algorithm: String,
    pub subset: String,
    pub subset_size: usize,
    pub inside: f64,
    pub outside: f64,
    pub inside_exact: String,
    pub outside_exact: String,
    pub total_matches_constant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetIdentityReport {
    pub m: usize,
    pub measure: PerformanceMeasure,
    pub constant: f64,
    pub constant_exact: String,
    pub rows: Vec<SubsetRow>,
    pub pass: bool,
}

/// sum_{f in B} E(Phi|f) = constant - sum_{f not in B} E(Phi|f) for every
/// supplied algorithm and subset, with one constant for all of them.
pub fn nfl_subset_identity(
    algorithms: &[NamedAlgorithm<'_>],
    space: &FiniteSpace,
    m: usize,
    measure: PerformanceMeasure,
    subsets: &[(String, FunctionSubset)],
    seeds: &SeedSet,
) -> Result<SubsetIdentityReport> {
    if algorithms.is_empty() {
        return Err(Error::Invalid("need at least one algorithm".into()));
    }
    let tables: Vec<Vec<Exact>> = algorithms
        .iter()
        .map(|(_, a)| performance_table(*a, space, m, measure, seeds))
        .collect::<Result<_>>()?;
    let constant: Exact = tables[0].iter().cloned().sum();
    let mut rows = Vec::new();
    let mut pass = true;
    for ((name, _), table) in algorithms.iter().zip(&tables) {
        for (subset_name, subset) in subsets {
            if subset.universe_size() != table.len() {
                return Err(Error::Invalid(format!("subset `{subset_name}` has the wrong length")));
            }
            let (mut inside, mut outside) = (Exact::zero(), Exact::zero());
            for (rank, v) in table.iter().enumerate() {
                if subset.contains(rank) {
                    inside += v;
                } else {
                    outside += v;
                }
            }
            let ok = &inside + &outside == constant;
            pass &= ok;
            rows.push(SubsetRow {
                algorithm: name.clone(),
                subset: subset_name.clone(),
                subset_size: subset.len(),
                inside: exact_to_f64(&inside),
                outside: exact_to_f64(&outside),
                inside_exact: inside.to_string(),
                outside_exact: outside.to_string(),
                total_matches_constant: ok,
            });
        }
    }
    Ok(SubsetIdentityReport {
        m,
        measure,
        constant: exact_to_f64(&constant),
        constant_exact: constant.to_string(),
        rows,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WinLossReport {
    pub a: String,
    pub b: String,
    pub m: usize,
    pub measure: PerformanceMeasure,
    /// Functions where A's expected performance is strictly lower (better).
    pub a_wins: usize,
    pub b_wins: usize,
    pub ties: usize,
    /// sum over A's wins of E_B - E_A.
    pub gain_on_wins: f64,
    /// sum over B's wins of E_A - E_B.
    pub loss_on_losses: f64,
    pub sum_difference_exact: String,
    pub pass: bool,
}

/// sum_f [E(Phi|f,m,A) - E(Phi|f,m,B)] = 0, with the split into the
/// functions where each side wins.
pub fn win_loss_balance(
    a: NamedAlgorithm<'_>,
    b: NamedAlgorithm<'_>,
    space: &FiniteSpace,
    m: usize,
    measure: PerformanceMeasure,
    seeds: &SeedSet,
) -> Result<WinLossReport> {
    let ta = performance_table(a.1, space, m, measure, seeds)?;
    let tb = performance_table(b.1, space, m, measure, seeds)?;
    let (mut a_wins, mut b_wins, mut ties) = (0, 0, 0);
    let (mut gain, mut loss, mut total) = (Exact::zero(), Exact::zero(), Exact::zero());
    for (ea, eb) in ta.iter().zip(&tb) {
        let diff = ea - eb;
        match ea.cmp(eb) {
            std::cmp::Ordering::Less => {
                a_wins += 1;
                gain -= &diff;
            }
            std::cmp::Ordering::Greater => {
                b_wins += 1;
                loss += &diff;
            }
            std::cmp::Ordering::Equal => ties += 1,
        }
        total += diff;
    }
    Ok(WinLossReport {
        a: a.0,
        b: b.0,
        m,
        measure,
        a_wins,
        b_wins,
        ties,
        gain_on_wins: exact_to_f64(&gain),
        loss_on_losses: exact_to_f64(&loss),
        sum_difference_exact: total.to_string(),
        pass: total.is_zero(),
    })
}

pub const MIN_PRIOR_SAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriorAlgorithmSummary {
    pub algorithm: String,
    pub nfl_sum: f64,
    pub mc_mean: f64,
    pub standard_error: f64,
    /// |mc_mean - analytic| / standard_error.
    pub z: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriorPairSummary {
    pub a: String,
    pub b: String,
    pub mean_difference: f64,
    pub standard_error: f64,
    pub z: f64,
    /// Samples where E_pi(A) < E_pi(B), and the reverse.
    pub a_better: usize,
    pub b_better: usize,
    /// Mean of E_pi(A) - E_pi(B) over the priors in each set.
    pub mean_difference_where_a_better: f64,
    pub mean_difference_where_b_better: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriorMcReport {
    pub m: usize,
    pub measure: PerformanceMeasure,
    pub n_samples: usize,
    pub seed: u64,
    pub generator: String,
    /// nfl_sum / |Y^X|; every algorithm's simplex average.
    pub analytic: f64,
    pub analytic_exact: String,
    pub sigma_bound: f64,
    pub algorithms: Vec<PriorAlgorithmSummary>,
    pub pairs: Vec<PriorPairSummary>,
    /// Monte Carlo mean of pi(f) per rank; 1/|Y^X| by symmetry.
    pub marginal_means: Vec<f64>,
    pub marginal_max_z: f64,
    pub pass: bool,
    /// E_pi(Phi | m, A) per algorithm per sample.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

/// Bound in standard errors for prior-averaged means and paired differences.
pub const PRIOR_SIGMA_BOUND: f64 = 3.0;
/// Bound for each simplex marginal; looser because |Y^X| marginals are
/// tested at once.
pub const MARGINAL_SIGMA_BOUND: f64 = 5.0;

/// Monte Carlo over uniformly drawn priors pi on the simplex. Each
/// algorithm's E_pi(Phi|m,A) = sum_f pi(f) E(Phi|f,m,A) should average to
/// nfl_sum / |Y^X|, and paired differences to zero. Averages are normalized
/// by the simplex volume.
pub fn prior_averaged_nfl_check(
    algorithms: &[NamedAlgorithm<'_>],
    space: &FiniteSpace,
    m: usize,
    measure: PerformanceMeasure,
    n_samples: usize,
    seed: u64,
    seeds: &SeedSet,
) -> Result<PriorMcReport> {
    if n_samples < MIN_PRIOR_SAMPLES {
        return Err(Error::TooFewSamples { n: n_samples, min: MIN_PRIOR_SAMPLES });
    }
    if algorithms.is_empty() {
        return Err(Error::Invalid("need at least one algorithm".into()));
    }
    let tables: Vec<Vec<Exact>> = algorithms
        .iter()
        .map(|(_, a)| performance_table(*a, space, m, measure, seeds))
        .collect::<Result<_>>()?;
    let sums: Vec<Exact> = tables.iter().map(|t| t.iter().cloned().sum()).collect();
    let count = tables[0].len();
    let analytic_exact = &sums[0] / exact_int(count);
    let analytic = exact_to_f64(&analytic_exact);
    let float_tables: Vec<Vec<f64>> =
        tables.iter().map(|t| t.iter().map(exact_to_f64).collect()).collect();

    let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let pi = PriorVector::dirichlet(space, &mut rng::stream(seed, i))?;
            let e: Vec<f64> = float_tables
                .iter()
                .map(|t| compensated_sum(t.iter().zip(pi.weights()).map(|(v, p)| v * p)))
                .collect();
            Ok((e, pi.weights)) as Result<_>
        })
        .collect::<Result<_>>()?;

    let samples: Vec<Vec<f64>> =
        (0..algorithms.len()).map(|a| draws.iter().map(|(e, _)| e[a]).collect()).collect();
    let within = |dev: f64, se: f64, bound: f64| dev <= bound * se + FLOAT_TOLERANCE;
    let z_of = |dev: f64, se: f64| if se > 0.0 { dev / se } else if dev == 0.0 { 0.0 } else { f64::INFINITY };

    let summaries: Vec<PriorAlgorithmSummary> = algorithms
        .iter()
        .zip(&samples)
        .zip(&sums)
        .map(|(((name, _), xs), sum)| {
            let (mean, se) = mean_and_se(xs);
            let dev = (mean - analytic).abs();
            PriorAlgorithmSummary {
                algorithm: name.clone(),
                nfl_sum: exact_to_f64(sum),
                mc_mean: mean,
                standard_error: se,
                z: z_of(dev, se),
                pass: within(dev, se, PRIOR_SIGMA_BOUND) && *sum == sums[0],
            }
        })
        .collect();

    let mut pairs = Vec::new();
    for i in 0..algorithms.len() {
        for j in i + 1..algorithms.len() {
            let diffs: Vec<f64> = samples[i].iter().zip(&samples[j]).map(|(a, b)| a - b).collect();
            let (mean, se) = mean_and_se(&diffs);
            let better: Vec<f64> = diffs.iter().copied().filter(|d| *d < 0.0).collect();
            let worse: Vec<f64> = diffs.iter().copied().filter(|d| *d > 0.0).collect();
            let avg = |v: &[f64]| if v.is_empty() { 0.0 } else { compensated_sum(v.iter().copied()) / v.len() as f64 };
            pairs.push(PriorPairSummary {
                a: algorithms[i].0.clone(),
                b: algorithms[j].0.clone(),
                mean_difference: mean,
                standard_error: se,
                z: z_of(mean.abs(), se),
                a_better: better.len(),
                b_better: worse.len(),
                mean_difference_where_a_better: avg(&better),
                mean_difference_where_b_better: avg(&worse),
                pass: within(mean.abs(), se, PRIOR_SIGMA_BOUND),
            });
        }
    }

    let target = 1.0 / count as f64;
    let mut marginal_means = Vec::with_capacity(count);
    let mut marginal_max_z: f64 = 0.0;
    for f in 0..count {
        let col: Vec<f64> = draws.iter().map(|(_, w)| w[f]).collect();
        let (mean, se) = mean_and_se(&col);
        marginal_max_z = marginal_max_z.max(z_of((mean - target).abs(), se));
        marginal_means.push(mean);
    }

    let pass = summaries.iter().all(|s| s.pass)
        && pairs.iter().all(|p| p.pass)
        && marginal_max_z <= MARGINAL_SIGMA_BOUND;
    Ok(PriorMcReport {
        m,
        measure,
        n_samples,
        seed,
        generator: rng::GENERATOR.into(),
        analytic,
        analytic_exact: analytic_exact.to_string(),
        sigma_bound: PRIOR_SIGMA_BOUND,
        algorithms: summaries,
        pairs,
        marginal_means,
        marginal_max_z,
        pass,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_copy_of_dirichlet_prior_sums_to_one() {
        let space = FiniteSpace::integer_levels(3, 2).unwrap();
        let p = PriorVector::dirichlet(&space, &mut rng::stream(4, 0)).unwrap();
        let e = PriorVector::exact_from(&p).unwrap();
        assert_eq!(e.weights().iter().cloned().sum::<Exact>(), exact_int(1));
        for (a, b) in p.weights().iter().zip(e.weights()) {
            assert!((a - exact_to_f64(b)).abs() < 1e-15);
        }
    }
    use crate::algorithms::{make_algorithm, AlgorithmSpec};
    use crate::exact::exact_ratio;

    fn alg(spec: &str, space: &FiniteSpace) -> Box<dyn SearchAlgorithm> {
        make_algorithm(&spec.parse::<AlgorithmSpec>().unwrap(), space).unwrap()
    }

    fn binary(x: usize) -> FiniteSpace {
        FiniteSpace::integer_levels(x, 2).unwrap()
    }

    #[test]
    fn expected_performance_examples() {
        let s = binary(2);
        let f = ObjectiveTable::new(&s, vec![1, 0]).unwrap();
        let seeds = SeedSet::default();
        let e = expected_performance(alg("enumerate", &s).as_ref(), &f, 2, PerformanceMeasure::Min, &seeds);
        assert_eq!(e.unwrap(), 0.0);

        let ramp_space = FiniteSpace::integer_levels(4, 4).unwrap();
        let ramp = ObjectiveTable::new(&ramp_space, vec![0, 1, 2, 3]).unwrap();
        let e = expected_performance(
            alg("hill_descend(start=3)", &ramp_space).as_ref(),
            &ramp,
            2,
            PerformanceMeasure::Min,
            &seeds,
        );
        assert_eq!(e.unwrap(), 2.0);

        let ones = ObjectiveTable::constant(&s, 1).unwrap();
        for spec in ["enumerate", "random(seed=5)", "hill_ascend(start=1)"] {
            let e = expected_performance(alg(spec, &s).as_ref(), &ones, 2, PerformanceMeasure::Mean, &seeds);
            assert_eq!(e.unwrap(), 1.0);
        }
    }

    #[test]
    fn random_expectation_averages_seed_outcomes() {
        let s = binary(3);
        let f = ObjectiveTable::new(&s, vec![0, 1, 1]).unwrap();
        let r = alg("random(seed=9)", &s);
        let seeds = SeedSet::range(64).unwrap();
        let outcomes = outcome_distribution(r.as_ref(), &f, 1, &seeds).unwrap();
        let total: Exact = outcomes.iter().map(|(_, w)| w.clone()).sum();
        assert_eq!(total, exact_int(1));
        // Oracle: count seeds whose first pick lands on x=0.
        let hits = (0..64).filter(|&s| run_search(r.as_ref(), &f, 1, s).unwrap().xs()[0] == 0).count();
        let e = expected_performance_exact(r.as_ref(), &f, 1, PerformanceMeasure::Min, &seeds).unwrap();
        assert_eq!(e, exact_int(64 - hits) / exact_int(64));
    }

    #[test]
    fn direct_distribution_examples() {
        let s = binary(3);
        let seeds = SeedSet::default();
        let uniform = PriorVector::<Exact>::uniform(&s).unwrap();
        for spec in ["enumerate", "hill_descend(start=2)", "hill_ascend(start=0)"] {
            let d = performance_distribution_direct(alg(spec, &s).as_ref(), &s, 1, PerformanceMeasure::Min, &uniform, &seeds)
                .unwrap();
            assert_eq!(d.mass, vec![exact_ratio(1, 2), exact_ratio(1, 2)]);
        }

        let s2 = binary(2);
        let d = performance_distribution_direct(
            alg("enumerate", &s2).as_ref(),
            &s2,
            2,
            PerformanceMeasure::Min,
            &PriorVector::<Exact>::uniform(&s2).unwrap(),
            &seeds,
        )
        .unwrap();
        assert_eq!(d.support, vec![exact_int(0), exact_int(1)]);
        assert_eq!(d.mass, vec![exact_ratio(3, 4), exact_ratio(1, 4)]);

        // Point prior on f = (1, 0, 1): enumerate with m=2 sees (1, 0).
        let point = PriorVector::<Exact>::point_mass(&s, 5).unwrap();
        let d = performance_distribution_direct(alg("enumerate", &s).as_ref(), &s, 2, PerformanceMeasure::Mean, &point, &seeds)
            .unwrap();
        assert_eq!(d.support, vec![exact_ratio(1, 2)]);
        assert_eq!(d.mass, vec![exact_int(1)]);
    }

    #[test]
    fn d_vector_properties() {
        let s = binary(3);
        let seeds = SeedSet::default();
        let a = alg("hill_descend(start=1)", &s);
        let dv = d_vector(a.as_ref(), &s, 2, PerformanceMeasure::Min, &exact_int(7), &seeds).unwrap();
        assert!(dv.entries.iter().all(Zero::is_zero));

        let zero = d_vector(a.as_ref(), &s, 2, PerformanceMeasure::Min, &exact_int(0), &seeds).unwrap();
        let one = d_vector(a.as_ref(), &s, 2, PerformanceMeasure::Min, &exact_int(1), &seeds).unwrap();
        assert!(zero.is_binary() && one.is_binary());
        for (rank, f) in s.functions().unwrap().enumerate() {
            assert_eq!(&zero.entries[rank] + &one.entries[rank], exact_int(1));
            let phi = PerformanceMeasure::Min.evaluate(&run_search(a.as_ref(), &f, 2, 0).unwrap().y_values(&s));
            assert_eq!(zero.entries[rank] == exact_int(1), phi.unwrap() == 0.0);
        }

        // Stochastic D entries sum to one over phi but need not be binary.
        let r = alg("random(seed=1)", &s);
        let outcomes = phi_outcomes(r.as_ref(), &s, 1, PerformanceMeasure::Min, &seeds).unwrap();
        for per_f in &outcomes {
            assert_eq!(per_f.iter().map(|(_, w)| w.clone()).sum::<Exact>(), exact_int(1));
        }
    }

    #[test]
    fn nfl_sum_examples() {
        let seeds = SeedSet::default();
        let s3 = binary(3);
        let s2 = binary(2);
        for spec in ["enumerate", "random(seed=4)", "hill_descend(start=0)", "hill_ascend(start=1)"] {
            let v = nfl_sum(alg(spec, &s3).as_ref(), &s3, 1, PerformanceMeasure::Min, &seeds).unwrap();
            assert_eq!(v, exact_int(4), "{spec}");
            let v = nfl_sum(alg(spec, &s2).as_ref(), &s2, 2, PerformanceMeasure::Min, &seeds).unwrap();
            assert_eq!(v, exact_int(1), "{spec}");
        }
    }

    #[test]
    fn inner_product_uniform_is_exact() {
        let s = FiniteSpace::integer_levels(3, 3).unwrap();
        let seeds = SeedSet::range(8).unwrap();
        let prior = PriorVector::<Exact>::uniform(&s).unwrap();
        for spec in ["enumerate", "random(seed=2)", "hill_descend(start=1)"] {
            for measure in [PerformanceMeasure::Min, PerformanceMeasure::Final] {
                let r = inner_product_check(alg(spec, &s).as_ref(), &s, 2, measure, &prior, &seeds).unwrap();
                assert!(r.pass && r.max_deviation == 0.0, "{spec}");
            }
        }
    }

    #[test]
    fn inner_product_dirichlet_and_point() {
        let s = binary(3);
        let seeds = SeedSet::range(8).unwrap();
        let a = alg("hill_ascend(start=1)", &s);
        let mut rng = rng::stream(42, 0);
        let prior = PriorVector::dirichlet(&s, &mut rng).unwrap();
        let r = inner_product_check(a.as_ref(), &s, 2, PerformanceMeasure::Mean, &prior, &seeds).unwrap();
        assert!(r.pass && r.max_deviation <= 1e-12);

        let point = PriorVector::<Exact>::point_mass(&s, 6).unwrap();
        let r = inner_product_check(a.as_ref(), &s, 2, PerformanceMeasure::Min, &point, &seeds).unwrap();
        assert!(r.pass);
        let nonzero: Vec<_> = r.rows.iter().filter(|row| row.direct > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
    }

    #[test]
    fn prior_validation() {
        let s = binary(1);
        assert!(PriorVector::<f64>::from_weights(&s, vec![0.5, 0.5]).is_ok());
        assert!(PriorVector::<f64>::from_weights(&s, vec![0.5, 0.6]).is_err());
        assert!(PriorVector::<f64>::from_weights(&s, vec![1.5, -0.5]).is_err());
        assert!(PriorVector::<f64>::from_weights(&s, vec![1.0]).is_err());
        assert!(PriorVector::<Exact>::from_weights(&s, vec![exact_ratio(1, 3), exact_ratio(2, 3)]).is_ok());
        assert!(PriorVector::<Exact>::point_mass(&s, 2).is_err());
        let d = PriorVector::dirichlet(&FiniteSpace::integer_levels(3, 2).unwrap(), &mut rng::stream(1, 1)).unwrap();
        assert!((compensated_sum(d.weights().iter().copied()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn subset_identity_edges_and_hill_vs_random() {
        let s = binary(4);
        let seeds = SeedSet::default();
        let hd = alg("hill_descend(start=0)", &s);
        let rnd = alg("random(seed=11)", &s);
        let m = 2;
        let th = performance_table(hd.as_ref(), &s, m, PerformanceMeasure::Min, &seeds).unwrap();
        let tr = performance_table(rnd.as_ref(), &s, m, PerformanceMeasure::Min, &seeds).unwrap();
        let beats = FunctionSubset::from_mask(&s, th.iter().zip(&tr).map(|(a, b)| a < b).collect()).unwrap();
        let subsets = vec![
            ("empty".to_string(), FunctionSubset::empty(&s).unwrap()),
            ("full".to_string(), FunctionSubset::full(&s).unwrap()),
            ("hill beats random".to_string(), beats.clone()),
            ("complement".to_string(), beats.complement()),
        ];
        let algs: Vec<NamedAlgorithm> = vec![("hd".into(), hd.as_ref()), ("rnd".into(), rnd.as_ref())];
        let r = nfl_subset_identity(&algs, &s, m, PerformanceMeasure::Min, &subsets, &seeds).unwrap();
        assert!(r.pass);
        assert_eq!(r.rows[0].inside, 0.0);
        assert_eq!(r.rows[0].outside, r.constant);
        assert_eq!(r.rows[1].inside, r.constant);
        // What hill descent gains on B it gives back on the complement.
        let on_b: Exact = (0..16).filter(|&i| beats.contains(i)).map(|i| &tr[i] - &th[i]).sum();
        let off_b: Exact = (0..16).filter(|&i| !beats.contains(i)).map(|i| &th[i] - &tr[i]).sum();
        assert!(on_b > Exact::zero());
        assert_eq!(on_b, off_b);
    }

    #[test]
    fn win_loss_balances() {
        let s = FiniteSpace::integer_levels(4, 3).unwrap();
        let seeds = SeedSet::range(16).unwrap();
        let hd = alg("hill_descend(start=0)", &s);
        let ha = alg("hill_ascend(start=0)", &s);
        for m in 1..=4 {
            let r = win_loss_balance(("hd".into(), hd.as_ref()), ("ha".into(), ha.as_ref()), &s, m, PerformanceMeasure::Min, &seeds)
                .unwrap();
            assert!(r.pass, "m={m}");
            assert!((r.gain_on_wins - r.loss_on_losses).abs() < 1e-12);
        }
    }

    #[test]
    fn prior_mc_small() {
        let s = binary(3);
        let seeds = SeedSet::range(4).unwrap();
        let a = alg("enumerate", &s);
        let b = alg("hill_descend(start=2)", &s);
        let algs: Vec<NamedAlgorithm> = vec![("a".into(), a.as_ref()), ("b".into(), b.as_ref())];
        let r = prior_averaged_nfl_check(&algs, &s, 1, PerformanceMeasure::Min, 500, 3, &seeds).unwrap();
        assert_eq!(r.analytic, 0.5);
        assert!(r.pass, "{r:?}");
        assert_eq!(r.samples[0].len(), 500);
        assert!(matches!(
            prior_averaged_nfl_check(&algs, &s, 1, PerformanceMeasure::Min, 99, 3, &seeds),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn uniform_prior_hits_analytic_value() {
        let s = binary(3);
        let seeds = SeedSet::default();
        let a = alg("hill_ascend(start=1)", &s);
        let table = performance_table(a.as_ref(), &s, 1, PerformanceMeasure::Min, &seeds).unwrap();
        let u = PriorVector::<Exact>::uniform(&s).unwrap();
        let e: Exact = table.iter().zip(u.weights()).map(|(v, p)| v * p).sum();
        assert_eq!(e, nfl_sum(a.as_ref(), &s, 1, PerformanceMeasure::Min, &seeds).unwrap() / exact_int(8));
    }
}
