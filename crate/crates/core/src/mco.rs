//! Greedy Monte Carlo optimization.
//!
//! Each step fits a sampling distribution q over the unvisited points from
//! the data set, samples the next point from it, and evaluates f there. Here
//! q is a Boltzmann distribution over a nearest-visited-point surrogate of f:
//!
//! ```text
//! q(x) ∝ exp(-ĝ(x) / T)    for x not in d_X,    q(x) = 0 otherwise
//! ```
//!
//! The temperature T plays the role a regularization constant plays in
//! supervised learning, so it can be tuned the same way: cross-validation on
//! the data already in hand, with no further evaluations of f.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use serde::Serialize;

use crate::algorithms::{unvisited, Ring, SearchAlgorithm};
use crate::error::{Error, Result};
use crate::exact::compensated_sum;
use crate::folds::fold_ranges;
use crate::rng::{self, LabRng};
use crate::space::{FiniteSpace, ObjectiveTable, SearchTrace};

/// Nearest-visited-point interpolation of f on the ring.
///
/// Ties between equally distant visited points go to the lower x index.
#[derive(Clone, Debug, PartialEq)]
pub struct Surrogate {
    estimates: Vec<f64>,
}

impl Surrogate {
    pub fn fit(trace: &SearchTrace, space: &FiniteSpace) -> Result<Self> {
        if trace.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let ring = Ring::new(space.x_size());
        let estimates = (0..space.x_size())
            .map(|x| {
                let (_, _, y) = trace
                    .pairs()
                    .iter()
                    .map(|&(v, y)| (ring.distance(x, v), v, y))
                    .min()
                    .expect("non-empty trace");
                space.y_value(y)
            })
            .collect();
        Ok(Self { estimates })
    }

    pub fn estimate(&self, x: usize) -> f64 {
        self.estimates[x]
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }
}

/// q(x) over X; zero on visited points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplingDistribution {
    weights: Vec<f64>,
}

impl SamplingDistribution {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, x: usize) -> f64 {
        self.weights[x]
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -compensated_sum(self.weights.iter().filter(|&&w| w > 0.0).map(|&w| w * w.ln()))
    }

    /// Inverse-CDF lookup for `u` in [0, 1).
    pub fn sample_with(&self, u: f64) -> usize {
        let mut cumulative = 0.0;
        let mut last_positive = 0;
        for (x, &w) in self.weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            cumulative += w;
            last_positive = x;
            if u < cumulative {
                return x;
            }
        }
        last_positive
    }

    pub fn sample(&self, rng: &mut LabRng) -> usize {
        self.sample_with(rng.random::<f64>())
    }
}

/// Candidate temperatures for cross-validated tuning.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TemperatureSchedule {
    candidates: Vec<f64>,
}

impl TemperatureSchedule {
    pub fn new(candidates: Vec<f64>) -> Result<Self> {
        let valid = !candidates.is_empty()
            && candidates.iter().all(|t| *t > 0.0 && !t.is_nan())
            && candidates.iter().enumerate().all(|(i, a)| candidates[..i].iter().all(|b| b != a));
        if valid {
            Ok(Self { candidates })
        } else {
            Err(Error::InvalidSchedule)
        }
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn largest(&self) -> f64 {
        self.candidates.iter().copied().fold(f64::MIN, f64::max)
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidTemperature(t))
    }
}

/// Boltzmann weighting of the surrogate over unvisited points.
pub fn fit_q(d: &SearchTrace, space: &FiniteSpace, temperature: f64) -> Result<SamplingDistribution> {
    check_temperature(temperature)?;
    let surrogate = Surrogate::fit(d, space)?;
    let open = unvisited(d, space);
    if open.is_empty() {
        return Err(Error::NoUnvisitedPoints);
    }
    let g_min = open.iter().map(|&x| surrogate.estimate(x)).fold(f64::INFINITY, f64::min);
    let mut weights = vec![0.0; space.x_size()];
    for &x in &open {
        let scaled = (surrogate.estimate(x) - g_min) / temperature;
        weights[x] = (-scaled).exp();
    }
    let total = compensated_sum(weights.iter().copied());
    for w in &mut weights {
        *w /= total;
    }
    Ok(SamplingDistribution { weights })
}

/// Blackbox access to f with an evaluation counter.
#[derive(Debug)]
pub struct Oracle<'a> {
    f: &'a ObjectiveTable,
    evaluations: AtomicUsize,
}

impl<'a> Oracle<'a> {
    pub fn new(f: &'a ObjectiveTable) -> Self {
        Self { f, evaluations: AtomicUsize::new(0) }
    }

    /// Y index of f(x).
    pub fn evaluate(&self, x: usize) -> usize {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.f.index_at(x)
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn space(&self) -> &FiniteSpace {
        self.f.space()
    }
}

/// One greedy MCO step: fit q, sample x from it, evaluate f(x), extend d.
pub fn mco_step(
    d: &SearchTrace,
    oracle: &Oracle<'_>,
    temperature: f64,
    rng: &mut LabRng,
) -> Result<(usize, SearchTrace)> {
    let q = fit_q(d, oracle.space(), temperature)?;
    let x = q.sample(rng);
    let mut extended = d.clone();
    extended.push(x, oracle.evaluate(x))?;
    Ok((x, extended))
}

/// [`mco_step`] with a fresh generator seeded by `seed`.
pub fn mco_step_seeded(
    d: &SearchTrace,
    f: &ObjectiveTable,
    temperature: f64,
    seed: u64,
) -> Result<(usize, SearchTrace)> {
    mco_step(d, &Oracle::new(f), temperature, &mut rng::stream(seed, 0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvSelection {
    pub temperature: f64,
    /// Mean held-out score per candidate, `None` when every fold degenerated.
    pub scores: Vec<Option<f64>>,
    /// True when no candidate produced a score and the largest T was used.
    pub fallback: bool,
}

/// Chooses T by cross-validation on the existing data set only.
///
/// For each fold the surrogate and q are fitted on the complement (so the
/// held-out x's count as unvisited) and scored by the expected objective
/// under q restricted to the held-out points. Lowest mean score wins; ties
/// go to the smaller T.
pub fn cv_temperature(
    d: &SearchTrace,
    space: &FiniteSpace,
    schedule: &TemperatureSchedule,
    folds: usize,
) -> Result<CvSelection> {
    let ranges = fold_ranges(d.len(), folds)?;
    let pairs = d.pairs();
    let mut scores = Vec::with_capacity(schedule.candidates().len());
    for &t in schedule.candidates() {
        let mut fold_scores = Vec::new();
        for r in &ranges {
            let train: Vec<(usize, usize)> =
                pairs[..r.start].iter().chain(&pairs[r.end..]).copied().collect();
            let q = fit_q(&SearchTrace::from_pairs(train)?, space, t)?;
            let held = &pairs[r.clone()];
            let mass = compensated_sum(held.iter().map(|&(x, _)| q.get(x)));
            if mass > 0.0 {
                let weighted = compensated_sum(held.iter().map(|&(x, y)| q.get(x) * space.y_value(y)));
                fold_scores.push(weighted / mass);
            }
        }
        scores.push(if fold_scores.is_empty() {
            None
        } else {
            Some(compensated_sum(fold_scores.iter().copied()) / fold_scores.len() as f64)
        });
    }
    let best = schedule
        .candidates()
        .iter()
        .zip(&scores)
        .filter_map(|(&t, s)| s.map(|s| (s, t)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(match best {
        Some((_, t)) => CvSelection { temperature: t, scores, fallback: false },
        None => CvSelection { temperature: schedule.largest(), scores, fallback: true },
    })
}

/// Fixed-temperature greedy MCO as a search algorithm.
#[derive(Clone, Debug)]
pub struct BoltzmannSearch {
    temperature: f64,
}

impl BoltzmannSearch {
    pub fn new(temperature: f64) -> Result<Self> {
        check_temperature(temperature)?;
        Ok(Self { temperature })
    }
}

fn uniform_first(space: &FiniteSpace, rng: &mut LabRng) -> usize {
    rng.random_range(0..space.x_size())
}

impl SearchAlgorithm for BoltzmannSearch {
    fn name(&self) -> String {
        format!("greedy_surrogate(t={})", self.temperature)
    }

    fn is_stochastic(&self) -> bool {
        true
    }

    fn propose(&self, trace: &SearchTrace, space: &FiniteSpace, rng: &mut LabRng) -> Result<usize> {
        if trace.is_empty() {
            return Ok(uniform_first(space, rng));
        }
        Ok(fit_q(trace, space, self.temperature)?.sample(rng))
    }
}

/// Greedy MCO whose temperature is re-chosen by [`cv_temperature`].
///
/// Refits happen at step s when d holds at least `folds` pairs and either no
/// refit has happened yet or `refit_every` steps have passed since the last
/// one. Until the first refit the largest candidate is used. With
/// `refit_every = None` the temperature stays at the largest candidate.
#[derive(Clone, Debug)]
pub struct ScheduledMco {
    schedule: TemperatureSchedule,
    folds: usize,
    refit_every: Option<usize>,
}

impl ScheduledMco {
    pub fn new(schedule: TemperatureSchedule, folds: usize, refit_every: Option<usize>) -> Result<Self> {
        if folds < 2 {
            return Err(Error::InvalidFolds { folds, m: 0 });
        }
        if refit_every == Some(0) {
            return Err(Error::Invalid("refit_every must be positive".into()));
        }
        Ok(Self { schedule, folds, refit_every })
    }

    /// Length of the trace prefix the temperature for the next step is
    /// tuned on, if any refit has happened.
    fn last_refit(&self, len: usize) -> Option<usize> {
        let every = self.refit_every?;
        let mut last = None;
        for s in self.folds..=len {
            match last {
                None => last = Some(s),
                Some(prev) if s - prev >= every => last = Some(s),
                _ => {}
            }
        }
        last
    }

    /// Temperature used to extend `trace`, plus the CV record when a refit
    /// happens at this step.
    pub fn temperature_for(
        &self,
        trace: &SearchTrace,
        space: &FiniteSpace,
    ) -> Result<(f64, Option<CvSelection>)> {
        match self.last_refit(trace.len()) {
            None => Ok((self.schedule.largest(), None)),
            Some(len) => {
                let prefix = SearchTrace::from_pairs(trace.pairs()[..len].to_vec())?;
                let sel = cv_temperature(&prefix, space, &self.schedule, self.folds)?;
                let fresh = (len == trace.len()).then(|| sel.clone());
                Ok((sel.temperature, fresh))
            }
        }
    }
}

impl SearchAlgorithm for ScheduledMco {
    fn name(&self) -> String {
        let c: Vec<String> = self.schedule.candidates().iter().map(|t| t.to_string()).collect();
        let refit = self.refit_every.map_or_else(|| "inf".into(), |r| r.to_string());
        format!("mco_cv(candidates=[{}], folds={}, refit_every={refit})", c.join(","), self.folds)
    }

    fn is_stochastic(&self) -> bool {
        true
    }

    fn propose(&self, trace: &SearchTrace, space: &FiniteSpace, rng: &mut LabRng) -> Result<usize> {
        if trace.is_empty() {
            return Ok(uniform_first(space, rng));
        }
        let (t, _) = self.temperature_for(trace, space)?;
        Ok(fit_q(trace, space, t)?.sample(rng))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub x: usize,
    pub y: f64,
    /// `None` for the uniform seeding step.
    pub temperature: Option<f64>,
    pub q_entropy: f64,
    pub best_so_far: f64,
    pub refit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McoRun {
    pub trace: SearchTrace,
    pub records: Vec<StepRecord>,
    /// q used at each step after the first.
    pub distributions: Vec<SamplingDistribution>,
    pub evaluations: usize,
    /// f evaluations observed while tuning the temperature; always 0.
    pub tuning_evaluations: usize,
}

impl McoRun {
    pub fn best(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.best_so_far)
    }
}

/// Full MCO loop with the per-step schedule record.
pub fn run_mco(
    f: &ObjectiveTable,
    m_total: usize,
    schedule: &TemperatureSchedule,
    folds: usize,
    refit_every: Option<usize>,
    seed: u64,
) -> Result<McoRun> {
    let space = f.space();
    if m_total == 0 || m_total > space.x_size() {
        return Err(Error::SampleCountOutOfRange { m: m_total, x_size: space.x_size() });
    }
    let planner = ScheduledMco::new(schedule.clone(), folds, refit_every)?;
    let oracle = Oracle::new(f);
    let mut rng = planner.rng(seed);
    let mut trace = SearchTrace::new();
    let mut records = Vec::with_capacity(m_total);
    let mut distributions = Vec::with_capacity(m_total.saturating_sub(1));
    let mut tuning_evaluations = 0;
    let mut best = f64::INFINITY;

    let x0 = uniform_first(space, &mut rng);
    trace.push(x0, oracle.evaluate(x0))?;
    best = best.min(f.value(x0));
    records.push(StepRecord {
        step: 0,
        x: x0,
        y: f.value(x0),
        temperature: None,
        q_entropy: (space.x_size() as f64).ln(),
        best_so_far: best,
        refit: false,
    });

    for step in 1..m_total {
        let before = oracle.evaluations();
        let (t, refit) = planner.temperature_for(&trace, space)?;
        tuning_evaluations += oracle.evaluations() - before;
        let q = fit_q(&trace, space, t)?;
        let x = q.sample(&mut rng);
        trace.push(x, oracle.evaluate(x))?;
        best = best.min(f.value(x));
        records.push(StepRecord {
            step,
            x,
            y: f.value(x),
            temperature: Some(t),
            q_entropy: q.entropy(),
            best_so_far: best,
            refit: refit.is_some(),
        });
        distributions.push(q);
    }
    Ok(McoRun { trace, records, distributions, evaluations: oracle.evaluations(), tuning_evaluations })
}

/// Smooth ring function quantized to the levels of `space`.
///
/// Sum of three low-frequency cosines (k = 1..3) with uniform random
/// amplitudes and phases, rescaled to [0, 1] and rounded to the nearest of
/// the levels of `space`.
pub fn smooth_objective(space: &FiniteSpace, rng: &mut LabRng) -> ObjectiveTable {
    use std::f64::consts::TAU;
    let n = space.x_size();
    let terms: Vec<(f64, f64, f64)> = (1..=3)
        .map(|k| {
            let amp = rng.random::<f64>();
            let phase = rng.random::<f64>() * TAU;
            (k as f64, amp, phase)
        })
        .collect();
    let raw: Vec<f64> = (0..n)
        .map(|x| {
            terms
                .iter()
                .map(|(k, a, p)| a * (TAU * k * x as f64 / n as f64 + p).cos())
                .sum()
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let levels = space.y_size();
    let idx = raw
        .iter()
        .map(|v| {
            if hi > lo {
                (((v - lo) / (hi - lo)) * (levels - 1) as f64).round() as usize
            } else {
                0
            }
        })
        .collect();
    ObjectiveTable::new(space, idx).expect("levels within Y")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub scheme: String,
    pub mean_best: f64,
    pub se_best: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub check: String,
    pub x_size: usize,
    pub levels: usize,
    pub m_total: usize,
    pub n_seeds: usize,
    pub seed: u64,
    pub generator: String,
    pub schemes: Vec<SchemeSummary>,
    pub worst_fixed: String,
    /// Mean of (cv best - worst fixed best) over seeds.
    pub paired_mean_diff: f64,
    pub paired_se: f64,
    /// One-sided 95% upper confidence bound on the paired difference.
    pub upper_bound_95: f64,
    pub pass: bool,
    /// Per (scheme, seed): best-so-far curve over steps.
    #[serde(skip)]
    pub curves: Vec<(String, usize, Vec<f64>)>,
}

/// One-sided 95% standard-normal quantile.
pub const Z_95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

/// Mean and standard error of a sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// CV-scheduled MCO against each fixed candidate temperature on seeded
/// smooth functions. Seed i draws its function from substream 2i and runs
/// every scheme with run seed i.
pub fn mco_benchmark(
    x_size: usize,
    levels: usize,
    m_total: usize,
    schedule: &TemperatureSchedule,
    folds: usize,
    n_seeds: usize,
    seed: u64,
) -> Result<BenchmarkReport> {
    use rayon::prelude::*;
    let space = FiniteSpace::sampling_only(x_size, (0..levels).map(|v| v as f64).collect())?;
    if n_seeds < 2 {
        return Err(Error::TooFewSamples { n: n_seeds, min: 2 });
    }
    let mut schemes: Vec<(String, Option<f64>)> = vec![("cv".into(), None)];
    schemes.extend(schedule.candidates().iter().map(|&t| (format!("fixed(t={t})"), Some(t))));

    let per_seed: Vec<Vec<Vec<f64>>> = (0..n_seeds)
        .into_par_iter()
        .map(|i| {
            let f = smooth_objective(&space, &mut rng::stream(seed, 2 * i as u64));
            schemes
                .iter()
                .map(|(_, fixed)| {
                    let run = match fixed {
                        None => run_mco(&f, m_total, schedule, folds, Some(1), i as u64)?,
                        Some(t) => run_mco(
                            &f,
                            m_total,
                            &TemperatureSchedule::new(vec![*t])?,
                            folds,
                            None,
                            i as u64,
                        )?,
                    };
                    Ok(run.records.iter().map(|r| r.best_so_far).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<_>>()?;

    let finals = |s: usize| -> Vec<f64> { per_seed.iter().map(|r| *r[s].last().unwrap()).collect() };
    let summaries: Vec<SchemeSummary> = schemes
        .iter()
        .enumerate()
        .map(|(s, (name, _))| {
            let (mean_best, se_best) = mean_and_se(&finals(s));
            SchemeSummary { scheme: name.clone(), mean_best, se_best }
        })
        .collect();
    let worst = (1..schemes.len())
        .max_by(|&a, &b| summaries[a].mean_best.total_cmp(&summaries[b].mean_best))
        .expect("at least one candidate");
    let diffs: Vec<f64> = finals(0).iter().zip(finals(worst)).map(|(c, w)| c - w).collect();
    let (paired_mean_diff, paired_se) = mean_and_se(&diffs);
    let upper_bound_95 = paired_mean_diff + Z_95_ONE_SIDED * paired_se;
    let curves = per_seed
        .iter()
        .enumerate()
        .flat_map(|(i, runs)| {
            schemes.iter().zip(runs).map(move |((name, _), c)| (name.clone(), i, c.clone()))
        })
        .collect();
    Ok(BenchmarkReport {
        check: "mco_benchmark".into(),
        x_size,
        levels,
        m_total,
        n_seeds,
        seed,
        generator: rng::GENERATOR.into(),
        schemes: summaries,
        worst_fixed: schemes[worst].0.clone(),
        paired_mean_diff,
        paired_se,
        upper_bound_95,
        pass: upper_bound_95 <= 0.0,
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::run_search;

    fn ramp_space(n: usize) -> FiniteSpace {
        FiniteSpace::integer_levels(n, n).unwrap()
    }

    #[test]
    fn surrogate_interpolates_by_nearest_visited() {
        let space = ramp_space(4);
        let d = SearchTrace::from_pairs(vec![(0, 0), (1, 1)]).unwrap();
        let g = Surrogate::fit(&d, &space).unwrap();
        assert_eq!(g.estimates(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(Surrogate::fit(&SearchTrace::new(), &space), Err(Error::EmptyTrace));
    }

    #[test]
    fn boltzmann_ratio() {
        let space = ramp_space(4);
        let d = SearchTrace::from_pairs(vec![(0, 0), (1, 1)]).unwrap();
        let q = fit_q(&d, &space, 1.0).unwrap();
        assert_eq!(q.get(0), 0.0);
        assert_eq!(q.get(1), 0.0);
        assert!((q.get(3) / q.get(2) - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn flat_data_gives_uniform_q() {
        let space = FiniteSpace::integer_levels(6, 3).unwrap();
        let d = SearchTrace::from_pairs(vec![(1, 2), (4, 2)]).unwrap();
        for t in [1e-3, 0.5, 1.0, 1e6] {
            let q = fit_q(&d, &space, t).unwrap();
            for x in [0, 2, 3, 5] {
                assert!((q.get(x) - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn high_temperature_limit() {
        let space = ramp_space(8);
        let d = SearchTrace::from_pairs(vec![(0, 7), (4, 0)]).unwrap();
        let q = fit_q(&d, &space, 1e9).unwrap();
        let open = [1, 2, 3, 5, 6, 7];
        let dev = open.iter().map(|&x| (q.get(x) - 1.0 / 6.0).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-6, "{dev}");
        let q_inf = fit_q(&d, &space, f64::INFINITY).unwrap();
        assert!(open.iter().all(|&x| (q_inf.get(x) - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn low_temperature_concentrates() {
        let space = ramp_space(6);
        let d = SearchTrace::from_pairs(vec![(0, 5), (3, 0)]).unwrap();
        let q = fit_q(&d, &space, 1e-3).unwrap();
        // open: 1 (g=5), 2 (g=0), 4 (g=0), 5 (g=5).
        assert!((q.get(2) - 0.5).abs() < 1e-12 && (q.get(4) - 0.5).abs() < 1e-12);
        let (x, ext) = mco_step_seeded(&d, &ObjectiveTable::new(&space, (0..6).collect()).unwrap(), 1e-3, 5).unwrap();
        assert!(x == 2 || x == 4);
        assert_eq!(ext.len(), 3);
        let d = SearchTrace::from_pairs(vec![(0, 5), (1, 3), (3, 0), (4, 1)]).unwrap();
        let q = fit_q(&d, &space, 1e-4).unwrap();
        assert_eq!(q.sample_with(0.0), 2);
        assert_eq!(q.sample_with(0.999_999), 2);
    }

    #[test]
    fn fit_q_errors() {
        let space = ramp_space(2);
        let full = SearchTrace::from_pairs(vec![(0, 0), (1, 1)]).unwrap();
        assert_eq!(fit_q(&full, &space, 1.0), Err(Error::NoUnvisitedPoints));
        assert_eq!(fit_q(&SearchTrace::new(), &space, 1.0), Err(Error::EmptyTrace));
        let one = SearchTrace::from_pairs(vec![(0, 0)]).unwrap();
        assert!(matches!(fit_q(&one, &space, 0.0), Err(Error::InvalidTemperature(_))));
        assert!(matches!(fit_q(&one, &space, -1.0), Err(Error::InvalidTemperature(_))));
    }

    #[test]
    fn step_is_deterministic() {
        let space = ramp_space(8);
        let f = ObjectiveTable::new(&space, vec![3, 1, 4, 1, 5, 2, 6, 5]).unwrap();
        let d = SearchTrace::from_pairs(vec![(0, 3), (5, 2)]).unwrap();
        let a = mco_step_seeded(&d, &f, 0.7, 11).unwrap();
        let b = mco_step_seeded(&d, &f, 0.7, 11).unwrap();
        assert_eq!(a, b);
        assert!(!d.contains(a.0));
    }

    #[test]
    fn sampling_frequencies_match_q() {
        // Multinomial check: each count within 3 sigma of n q(x).
        let space = FiniteSpace::integer_levels(5, 4).unwrap();
        let d = SearchTrace::from_pairs(vec![(0, 3), (2, 1)]).unwrap();
        let q = fit_q(&d, &space, 1.0).unwrap();
        let mut rng = rng::stream(2024, 0);
        let n = 10_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[q.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[0] + counts[2], 0);
        for x in [1, 3, 4] {
            let p = q.get(x);
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[x] as f64 - n as f64 * p).abs() <= 3.0 * sigma, "x={x}");
        }
    }

    /// Independent re-implementation of the held-out score for one candidate.
    fn oracle_score(d: &[(usize, usize)], n: usize, t: f64, folds: usize) -> f64 {
        let dist = |a: usize, b: usize| {
            let k = a.abs_diff(b);
            k.min(n - k)
        };
        let m = d.len();
        let mut total = 0.0;
        for k in 0..folds {
            let (lo, hi) = (k * m / folds, (k + 1) * m / folds);
            let train: Vec<_> = d[..lo].iter().chain(&d[hi..]).collect();
            let g = |x: usize| {
                let mut best = (usize::MAX, usize::MAX, 0usize);
                for &&(v, y) in &train {
                    let cand = (dist(x, v), v, y);
                    if (cand.0, cand.1) < (best.0, best.1) {
                        best = cand;
                    }
                }
                best.2 as f64
            };
            let open: Vec<usize> = (0..n).filter(|x| !train.iter().any(|p| p.0 == *x)).collect();
            let g_min = open.iter().map(|&x| g(x)).fold(f64::INFINITY, f64::min);
            let z: f64 = open.iter().map(|&x| (-(g(x) - g_min) / t).exp()).sum();
            let q = |x: usize| (-(g(x) - g_min) / t).exp() / z;
            let held = &d[lo..hi];
            let num: f64 = held.iter().map(|&(x, y)| q(x) * y as f64).sum();
            let den: f64 = held.iter().map(|&(x, _)| q(x)).sum();
            total += num / den;
        }
        total / folds as f64
    }

    #[test]
    fn cv_prefers_low_temperature_on_ramp() {
        let space = ramp_space(6);
        let pairs = vec![(5, 5), (0, 0), (4, 4), (1, 1)];
        let d = SearchTrace::from_pairs(pairs.clone()).unwrap();
        let schedule = TemperatureSchedule::new(vec![10.0, 0.1]).unwrap();
        let sel = cv_temperature(&d, &space, &schedule, 2).unwrap();
        let cold = oracle_score(&pairs, 6, 0.1, 2);
        let hot = oracle_score(&pairs, 6, 10.0, 2);
        assert!(cold < hot);
        assert!((sel.scores[1].unwrap() - cold).abs() < 1e-12);
        assert!((sel.scores[0].unwrap() - hot).abs() < 1e-12);
        assert_eq!(sel.temperature, 0.1);
        assert!(!sel.fallback);
    }

    #[test]
    fn cv_ties_pick_smaller_temperature() {
        let space = FiniteSpace::integer_levels(6, 3).unwrap();
        let d = SearchTrace::from_pairs(vec![(0, 1), (2, 1), (4, 1)]).unwrap();
        let schedule = TemperatureSchedule::new(vec![5.0, 0.5, 2.0]).unwrap();
        assert_eq!(cv_temperature(&d, &space, &schedule, 3).unwrap().temperature, 0.5);
        assert_eq!(cv_temperature(&d, &space, &schedule, 2).unwrap().temperature, 0.5);
    }

    #[test]
    fn cv_fold_constraints_and_loo_boundary() {
        let space = ramp_space(6);
        let schedule = TemperatureSchedule::new(vec![1.0]).unwrap();
        let one = SearchTrace::from_pairs(vec![(0, 0)]).unwrap();
        assert!(matches!(cv_temperature(&one, &space, &schedule, 2), Err(Error::InvalidFolds { .. })));
        let two = SearchTrace::from_pairs(vec![(0, 0), (3, 3)]).unwrap();
        assert!(cv_temperature(&two, &space, &schedule, 2).is_ok());
        assert!(matches!(cv_temperature(&two, &space, &schedule, 3), Err(Error::InvalidFolds { .. })));
    }

    #[test]
    fn degenerate_folds_fall_back_to_largest() {
        // At tiny T, q underflows to zero on every held-out point.
        let space = FiniteSpace::sampling_only(16, (0..8).map(f64::from).collect()).unwrap();
        let d = SearchTrace::from_pairs(vec![(0, 7), (8, 0), (1, 7), (15, 0)]).unwrap();
        let sel = cv_temperature(&d, &space, &TemperatureSchedule::new(vec![1e-3, 1e-4]).unwrap(), 2).unwrap();
        assert!(sel.scores.iter().all(|s| s.is_none()), "{sel:?}");
        assert!(sel.fallback);
        assert_eq!(sel.temperature, 1e-3);
    }

    #[test]
    fn schedule_validation() {
        assert!(TemperatureSchedule::new(vec![]).is_err());
        assert!(TemperatureSchedule::new(vec![1.0, 1.0]).is_err());
        assert!(TemperatureSchedule::new(vec![1.0, -2.0]).is_err());
        assert_eq!(TemperatureSchedule::new(vec![0.5, 4.0, 2.0]).unwrap().largest(), 4.0);
    }

    #[test]
    fn run_mco_exhausts_and_matches_algorithm_form() {
        let space = FiniteSpace::integer_levels(7, 4).unwrap();
        let f = ObjectiveTable::new(&space, vec![3, 2, 0, 1, 3, 2, 1]).unwrap();
        let schedule = TemperatureSchedule::new(vec![0.2, 1.0, 5.0]).unwrap();
        let run = run_mco(&f, 7, &schedule, 2, Some(1), 9).unwrap();
        let mut xs = run.trace.xs();
        xs.sort();
        assert_eq!(xs, (0..7).collect::<Vec<_>>());
        assert_eq!(run.evaluations, 7);
        assert_eq!(run.tuning_evaluations, 0);
        assert_eq!(run.best(), 0.0);

        let alg = ScheduledMco::new(schedule.clone(), 2, Some(1)).unwrap();
        for m in 1..=7 {
            let direct = run_search(&alg, &f, m, 9).unwrap();
            assert_eq!(direct.pairs(), &run.trace.pairs()[..m]);
        }
    }

    #[test]
    fn infinite_refit_is_fixed_temperature() {
        let space = FiniteSpace::integer_levels(9, 5).unwrap();
        let f = ObjectiveTable::new(&space, vec![4, 3, 1, 0, 2, 4, 3, 1, 2]).unwrap();
        let schedule = TemperatureSchedule::new(vec![0.3, 2.5]).unwrap();
        let run = run_mco(&f, 6, &schedule, 2, None, 4).unwrap();
        let fixed = run_search(&BoltzmannSearch::new(2.5).unwrap(), &f, 6, 4).unwrap();
        assert_eq!(run.trace, fixed);
        assert!(run.records[1..].iter().all(|r| r.temperature == Some(2.5) && !r.refit));
    }

    #[test]
    fn refit_cadence() {
        let s = ScheduledMco::new(TemperatureSchedule::new(vec![1.0]).unwrap(), 2, Some(3)).unwrap();
        let got: Vec<Option<usize>> = (0..10).map(|l| s.last_refit(l)).collect();
        assert_eq!(
            got,
            vec![None, None, Some(2), Some(2), Some(2), Some(5), Some(5), Some(5), Some(8), Some(8)]
        );
    }

    #[test]
    fn smooth_objective_uses_full_level_range() {
        let space = FiniteSpace::sampling_only(64, (0..8).map(|v| v as f64).collect()).unwrap();
        let f = smooth_objective(&space, &mut rng::stream(1, 0));
        assert!(f.y_index().contains(&0) && f.y_index().contains(&7));
        // Low-frequency: neighbouring levels differ by at most 2 steps.
        let jumps = (0..64).map(|x| f.index_at(x).abs_diff(f.index_at((x + 1) % 64))).max().unwrap();
        assert!(jumps <= 2, "{jumps}");
    }

    #[test]
    fn entropy_of_uniform() {
        let q = SamplingDistribution { weights: vec![0.25; 4] };
        assert!((q.entropy() - 4f64.ln()).abs() < 1e-15);
    }
}
