//! Deterministic off-data-set search algorithms.
//!
//! Every algorithm is a function of (trace, seed): stochastic ones draw from
//! a seeded [`LabRng`] stream, so each (algorithm, seed) pair is itself a
//! deterministic search algorithm and NFL sums over it are exact.
//! Algorithms choose from the unvisited set directly, so a proposal never
//! collides with the data set.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mco::{BoltzmannSearch, ScheduledMco, Surrogate, TemperatureSchedule};
use crate::rng::{self, LabRng};
use crate::space::{FiniteSpace, ObjectiveTable, SearchTrace};

pub trait SearchAlgorithm: Send + Sync {
    fn name(&self) -> String;

    /// Whether proposals depend on the seed.
    fn is_stochastic(&self) -> bool {
        false
    }

    fn rng(&self, run_seed: u64) -> LabRng {
        rng::stream(run_seed, 0)
    }

    /// Next sample point; must be an unvisited x.
    fn propose(&self, trace: &SearchTrace, space: &FiniteSpace, rng: &mut LabRng) -> Result<usize>;
}

/// Grows a trace of length `m` by repeatedly asking `algorithm` for a point.
pub fn run_search(
    algorithm: &dyn SearchAlgorithm,
    f: &ObjectiveTable,
    m: usize,
    seed: u64,
) -> Result<SearchTrace> {
    let space = f.space();
    if m == 0 || m > space.x_size() {
        return Err(Error::SampleCountOutOfRange { m, x_size: space.x_size() });
    }
    let mut rng = algorithm.rng(seed);
    let mut trace = SearchTrace::new();
    while trace.len() < m {
        let x = algorithm.propose(&trace, space, &mut rng)?;
        if x >= space.x_size() || trace.contains(x) {
            return Err(Error::ContractViolation { algorithm: algorithm.name(), x });
        }
        trace.push(x, f.index_at(x))?;
    }
    Ok(trace)
}

/// Ring adjacency on X: x is adjacent to (x +- 1) mod |X|.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ring {
    size: usize,
}

impl Ring {
    pub fn new(size: usize) -> Self {
        Self { size }
    }

    /// Distinct neighbours, lower-side first.
    pub fn neighbors(&self, x: usize) -> Vec<usize> {
        let n = self.size;
        let down = (x + n - 1) % n;
        let up = (x + 1) % n;
        let mut out = Vec::with_capacity(2);
        for v in [down, up] {
            if v != x && !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        d.min(self.size - d)
    }
}

pub(crate) fn unvisited(trace: &SearchTrace, space: &FiniteSpace) -> Vec<usize> {
    let visited = trace.visited(space.x_size());
    (0..space.x_size()).filter(|&x| !visited[x]).collect()
}

/// Uniform choice among unvisited points.
#[derive(Clone, Debug)]
pub struct RandomSearch {
    pub seed: u64,
}

impl SearchAlgorithm for RandomSearch {
    fn name(&self) -> String {
        format!("random(seed={})", self.seed)
    }

    fn is_stochastic(&self) -> bool {
        true
    }

    fn rng(&self, run_seed: u64) -> LabRng {
        rng::stream(self.seed, run_seed)
    }

    fn propose(&self, trace: &SearchTrace, space: &FiniteSpace, rng: &mut LabRng) -> Result<usize> {
        let open = unvisited(trace, space);
        if open.is_empty() {
            return Err(Error::NoUnvisitedPoints);
        }
        Ok(open[rng.random_range(0..open.len())])
    }
}

/// Ascending x order.
#[derive(Clone, Debug)]
pub struct Enumerate;

impl SearchAlgorithm for Enumerate {
    fn name(&self) -> String {
        "enumerate".into()
    }

    fn propose(&self, trace: &SearchTrace, space: &FiniteSpace, _: &mut LabRng) -> Result<usize> {
        unvisited(trace, space).first().copied().ok_or(Error::NoUnvisitedPoints)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Descend,
    Ascend,
}

/// Greedy ring walker.
///
/// From the most recent sample, step to an unvisited ring neighbour. With two
/// candidates, compare their nearest-visited surrogate estimates (smaller for
/// descent, larger for ascent); equal estimates go to the higher index. With
/// no unvisited neighbour, jump to the lowest unvisited x.
#[derive(Clone, Debug)]
pub struct HillClimber {
    pub start: usize,
    pub direction: Direction,
}

impl SearchAlgorithm for HillClimber {
    fn name(&self) -> String {
        match self.direction {
            Direction::Descend => format!("hill_descend(start={})", self.start),
            Direction::Ascend => format!("hill_ascend(start={})", self.start),
        }
    }

    fn propose(&self, trace: &SearchTrace, space: &FiniteSpace, _: &mut LabRng) -> Result<usize> {
        let Some((last, _)) = trace.last() else {
            space.check_x(self.start)?;
            return Ok(self.start);
        };
        let ring = Ring::new(space.x_size());
        let open: Vec<usize> =
            ring.neighbors(last).into_iter().filter(|&v| !trace.contains(v)).collect();
        match open.as_slice() {
            [] => unvisited(trace, space).first().copied().ok_or(Error::NoUnvisitedPoints),
            [only] => Ok(*only),
            [a, b] => {
                let surrogate = Surrogate::fit(trace, space)?;
                let (ga, gb) = (surrogate.estimate(*a), surrogate.estimate(*b));
                let (lo, hi) = if a < b { (*a, *b) } else { (*b, *a) };
                let (g_lo, g_hi) = if a < b { (ga, gb) } else { (gb, ga) };
                let pick = match self.direction {
                    Direction::Descend if g_lo < g_hi => lo,
                    Direction::Ascend if g_lo > g_hi => lo,
                    _ => hi,
                };
                Ok(pick)
            }
            _ => unreachable!("a ring node has at most two neighbours"),
        }
    }
}

/// Parsed algorithm description, e.g. `hill_descend(start=3)`.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgorithmSpec {
    Random { seed: u64 },
    HillDescend { start: usize },
    HillAscend { start: usize },
    Enumerate,
    /// Fixed-temperature Boltzmann sampling over the surrogate.
    GreedySurrogate { temperature: f64 },
    /// Boltzmann sampling with the temperature re-chosen by cross-validation.
    McoCv { candidates: Vec<f64>, folds: usize, refit_every: Option<usize> },
}

impl AlgorithmSpec {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Self::Random { .. } | Self::GreedySurrogate { .. } | Self::McoCv { .. })
    }
}

/// Builds an algorithm, validating it against `space`.
pub fn make_algorithm(spec: &AlgorithmSpec, space: &FiniteSpace) -> Result<Box<dyn SearchAlgorithm>> {
    Ok(match spec {
        AlgorithmSpec::Random { seed } => Box::new(RandomSearch { seed: *seed }),
        AlgorithmSpec::Enumerate => Box::new(Enumerate),
        AlgorithmSpec::HillDescend { start } | AlgorithmSpec::HillAscend { start } => {
            space.check_x(*start)?;
            let direction = if matches!(spec, AlgorithmSpec::HillDescend { .. }) {
                Direction::Descend
            } else {
                Direction::Ascend
            };
            Box::new(HillClimber { start: *start, direction })
        }
        AlgorithmSpec::GreedySurrogate { temperature } => {
            Box::new(BoltzmannSearch::new(*temperature)?)
        }
        AlgorithmSpec::McoCv { candidates, folds, refit_every } => Box::new(ScheduledMco::new(
            TemperatureSchedule::new(candidates.clone())?,
            *folds,
            *refit_every,
        )?),
    })
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Random { seed } => write!(f, "random(seed={seed})"),
            Self::HillDescend { start } => write!(f, "hill_descend(start={start})"),
            Self::HillAscend { start } => write!(f, "hill_ascend(start={start})"),
            Self::Enumerate => write!(f, "enumerate"),
            Self::GreedySurrogate { temperature } => write!(f, "greedy_surrogate(t={temperature})"),
            Self::McoCv { candidates, folds, refit_every } => {
                let c: Vec<String> = candidates.iter().map(|t| t.to_string()).collect();
                let refit = refit_every.map_or_else(|| "inf".to_string(), |r| r.to_string());
                write!(f, "mco_cv(candidates=[{}], folds={folds}, refit_every={refit})", c.join(","))
            }
        }
    }
}

impl FromStr for AlgorithmSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let expr = Expr::parse(s)?;
        let call = expr.as_call("algorithm")?;
        match call.name.as_str() {
            "random" => {
                call.expect_keys(&["seed"])?;
                Ok(Self::Random { seed: call.required_u64(0, "seed")? })
            }
            "hill_descend" => {
                call.expect_keys(&["start"])?;
                Ok(Self::HillDescend { start: call.required_usize(0, "start")? })
            }
            "hill_ascend" => {
                call.expect_keys(&["start"])?;
                Ok(Self::HillAscend { start: call.required_usize(0, "start")? })
            }
            "enumerate" => call.no_args().map(|_| Self::Enumerate),
            "greedy_surrogate" => {
                call.expect_keys(&["t"])?;
                let temperature = call.required_f64(0, "t")?;
                if !(temperature > 0.0 && temperature.is_finite()) {
                    return Err(call.invalid("t", "temperature must be finite and positive"));
                }
                Ok(Self::GreedySurrogate { temperature })
            }
            "mco_cv" => {
                call.expect_keys(&["candidates", "folds", "refit_every"])?;
                let candidates = call
                    .required_list(0, "candidates")?
                    .iter()
                    .map(|e| e.as_f64().ok_or_else(|| call.invalid("candidates", "expected numbers")))
                    .collect::<Result<Vec<_>>>()?;
                let folds = match call.arg(1, "folds") {
                    None => 2,
                    Some(e) => e.as_usize().ok_or_else(|| call.invalid("folds", "expected an integer"))?,
                };
                let refit_every = match call.arg(2, "refit_every") {
                    None => Some(1),
                    Some(e) => match e.as_f64() {
                        Some(v) if v.is_infinite() => None,
                        _ => Some(e.as_usize().filter(|&r| r > 0).ok_or_else(|| {
                            call.invalid("refit_every", "expected a positive integer or inf")
                        })?),
                    },
                };
                Ok(Self::McoCv { candidates, folds, refit_every })
            }
            other => Err(Error::UnknownSpec { kind: "algorithm", name: other.into() }),
        }
    }
}

impl Serialize for AlgorithmSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AlgorithmSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> ObjectiveTable {
        let space = FiniteSpace::integer_levels(n, n).unwrap();
        ObjectiveTable::new(&space, (0..n).collect()).unwrap()
    }

    fn run(spec: &str, f: &ObjectiveTable, m: usize, seed: u64) -> Vec<usize> {
        let alg = make_algorithm(&spec.parse().unwrap(), f.space()).unwrap();
        run_search(alg.as_ref(), f, m, seed).unwrap().xs()
    }

    #[test]
    fn hill_descend_on_ramp() {
        // From 3 both neighbours (2, 0) are estimated at f(3) = 3: tie goes to
        // the higher index 2, then the walk continues downhill.
        assert_eq!(run("hill_descend(start=3)", &ramp(4), 4, 0), vec![3, 2, 1, 0]);
    }

    #[test]
    fn hill_ascend_on_ramp() {
        assert_eq!(run("hill_ascend(start=0)", &ramp(4), 4, 0), vec![0, 3, 2, 1]);
    }

    #[test]
    fn enumerate_is_ascending() {
        assert_eq!(run("enumerate", &ramp(5), 5, 9), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn random_is_seed_deterministic_and_exhaustive() {
        let f = ramp(6);
        let a = run("random(seed=1)", &f, 6, 0);
        assert_eq!(a, run("random(seed=1)", &f, 6, 0));
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn descend_and_ascend_split_on_interpolated_estimates() {
        let space = FiniteSpace::integer_levels(6, 6).unwrap();
        let mut rng = rng::stream(0, 0);
        let down = HillClimber { start: 0, direction: Direction::Descend };
        let up = HillClimber { start: 0, direction: Direction::Ascend };

        // Neighbours 2 and 4 of x=3 both take the estimate f(3) = 0.
        let trace = SearchTrace::from_pairs(vec![(0, 5), (3, 0)]).unwrap();
        assert_eq!(down.propose(&trace, &space, &mut rng).unwrap(), 4);
        assert_eq!(up.propose(&trace, &space, &mut rng).unwrap(), 4);

        // g(3) = f(2) = 1 and g(5) = f(0) = 5.
        let trace = SearchTrace::from_pairs(vec![(0, 5), (2, 1), (4, 3)]).unwrap();
        assert_eq!(down.propose(&trace, &space, &mut rng).unwrap(), 3);
        assert_eq!(up.propose(&trace, &space, &mut rng).unwrap(), 5);
    }

    #[test]
    fn constant_function_performance() {
        let space = FiniteSpace::integer_levels(5, 3).unwrap();
        let f = ObjectiveTable::constant(&space, 2).unwrap();
        for spec in ["enumerate", "random(seed=3)", "hill_descend(start=1)", "hill_ascend(start=4)"] {
            let alg = make_algorithm(&spec.parse().unwrap(), &space).unwrap();
            for m in 1..=5 {
                let t = run_search(alg.as_ref(), &f, m, 0).unwrap();
                let phi = crate::space::evaluate_performance(crate::PerformanceMeasure::Min, &t, &space);
                assert_eq!(phi.unwrap(), 2.0);
            }
        }
    }

    #[test]
    fn spec_errors() {
        let space = FiniteSpace::integer_levels(4, 2).unwrap();
        let err = "hill_descend()".parse::<AlgorithmSpec>().unwrap_err();
        assert!(err.to_string().contains("start"), "{err}");
        assert!(matches!("anneal(t=1)".parse::<AlgorithmSpec>(), Err(Error::UnknownSpec { .. })));
        let spec: AlgorithmSpec = "hill_ascend(start=4)".parse().unwrap();
        assert!(matches!(make_algorithm(&spec, &space), Err(Error::IndexOutOfRange { .. })));
        assert!("random(seed=1, extra=2)".parse::<AlgorithmSpec>().is_err());
    }

    #[test]
    fn spec_display_round_trips() {
        for s in [
            "random(seed=42)",
            "hill_descend(start=3)",
            "hill_ascend(start=0)",
            "enumerate",
            "greedy_surrogate(t=0.5)",
            "mco_cv(candidates=[0.1,1,10], folds=2, refit_every=inf)",
            "mco_cv(candidates=[0.5,2], folds=3, refit_every=4)",
        ] {
            let spec: AlgorithmSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<AlgorithmSpec>().unwrap(), spec, "{s}");
        }
    }

    #[test]
    fn run_search_bounds() {
        let f = ramp(3);
        let alg = Enumerate;
        assert!(matches!(run_search(&alg, &f, 4, 0), Err(Error::SampleCountOutOfRange { .. })));
        assert!(matches!(run_search(&alg, &f, 0, 0), Err(Error::SampleCountOutOfRange { .. })));
    }

    struct Stubborn;
    impl SearchAlgorithm for Stubborn {
        fn name(&self) -> String {
            "stubborn".into()
        }
        fn propose(&self, _: &SearchTrace, _: &FiniteSpace, _: &mut LabRng) -> Result<usize> {
            Ok(0)
        }
    }

    #[test]
    fn revisit_is_a_contract_violation() {
        let err = run_search(&Stubborn, &ramp(3), 2, 0).unwrap_err();
        assert_eq!(err, Error::ContractViolation { algorithm: "stubborn".into(), x: 0 });
    }

    #[test]
    fn ring_topology() {
        let r = Ring::new(5);
        assert_eq!(r.neighbors(0), vec![4, 1]);
        assert_eq!(r.distance(0, 4), 1);
        assert_eq!(Ring::new(2).neighbors(0), vec![1]);
        assert!(Ring::new(1).neighbors(0).is_empty());
        for x in 0..5 {
            for y in r.neighbors(x) {
                assert!(r.neighbors(y).contains(&x));
            }
        }
    }
}
