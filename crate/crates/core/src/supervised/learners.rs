//! Learning algorithms as deterministic maps d -> h.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ConditionalTable, LossFunction, TrainingSet};
use crate::error::{Error, Result};
use crate::exact::{exact_int, Exact};
use crate::expr::{Call, Expr};
use crate::folds::fold_ranges;
use crate::space::FiniteSpace;

/// P(h | d) as a point mass.
pub trait Learner: Send + Sync {
    fn name(&self) -> String;

    /// Must be total over training sets, including the empty one.
    fn hypothesis(&self, d: &TrainingSet, space: &FiniteSpace) -> Result<ConditionalTable>;
}

/// Memorized labels on trained x, `default(x)` elsewhere.
fn memorize_or(d: &TrainingSet, space: &FiniteSpace, default: impl Fn(usize) -> usize) -> Result<ConditionalTable> {
    let labels = d
        .memory(space.x_size())
        .into_iter()
        .enumerate()
        .map(|(x, m)| m.unwrap_or_else(|| default(x)))
        .collect();
    ConditionalTable::deterministic(space, labels)
}

/// Most frequent label in d_Y; ties go to the lower index.
pub fn majority_label(d: &TrainingSet, y_size: usize) -> usize {
    let votes = d.votes(y_size);
    let best = votes.iter().copied().max().unwrap_or(0);
    votes.iter().position(|&v| v == best).unwrap_or(0)
}

/// Least frequent label in d_Y; ties go to the higher index. For binary Y
/// this is exactly the complement of [`majority_label`].
pub fn anti_majority_label(d: &TrainingSet, y_size: usize) -> usize {
    let votes = d.votes(y_size);
    let worst = votes.iter().copied().min().unwrap_or(0);
    votes.iter().rposition(|&v| v == worst).unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct Majority;

impl Learner for Majority {
    fn name(&self) -> String {
        "majority".into()
    }

    fn hypothesis(&self, d: &TrainingSet, space: &FiniteSpace) -> Result<ConditionalTable> {
        let y = majority_label(d, space.y_size());
        memorize_or(d, space, |_| y)
    }
}

#[derive(Clone, Debug)]
pub struct AntiMajority;

impl Learner for AntiMajority {
    fn name(&self) -> String {
        "anti_majority".into()
    }

    fn hypothesis(&self, d: &TrainingSet, space: &FiniteSpace) -> Result<ConditionalTable> {
        let y = anti_majority_label(d, space.y_size());
        memorize_or(d, space, |_| y)
    }
}

/// Ignores d entirely.
#[derive(Clone, Debug)]
pub struct Constant(pub usize);

impl Learner for Constant {
    fn name(&self) -> String {
        format!("constant({})", self.0)
    }

    fn hypothesis(&self, _: &TrainingSet, space: &FiniteSpace) -> Result<ConditionalTable> {
        ConditionalTable::deterministic(space, vec![self.0; space.x_size()])
    }
}

#[derive(Clone, Debug)]
pub struct MemorizePlusDefault(pub usize);

impl Learner for MemorizePlusDefault {
    fn name(&self) -> String {
        format!("memorize_plus_default({})", self.0)
    }

    fn hypothesis(&self, d: &TrainingSet, space: &FiniteSpace) -> Result<ConditionalTable> {
        space.check_y(self.0)?;
        memorize_or(d, space, |_| self.0)
    }
}

/// Label of the nearest trained x on the ring. At equal distance k the
/// point x+k wins over x-k. Empty d predicts label 0.
#[derive(Clone, Debug)]
pub struct NearestNeighbor;

impl Learner for NearestNeighbor {
    fn name(&self) -> String {
        "nearest_neighbor".into()
    }

    fn hypothesis(&self, d: &TrainingSet, space: &FiniteSpace) -> Result<ConditionalTable> {
        let n = space.x_size();
        let memory = d.memory(n);
        memorize_or(d, space, |x| {
            (1..=n / 2)
                .find_map(|k| memory[(x + k) % n].or(memory[(x + n - k) % n]))
                .unwrap_or(0)
        })
    }
}

/// Uniform rows whatever the data.
#[derive(Clone, Debug)]
pub struct UniformGuess;

impl Learner for UniformGuess {
    fn name(&self) -> String {
        "uniform".into()
    }

    fn hypothesis(&self, _: &TrainingSet, space: &FiniteSpace) -> Result<ConditionalTable> {
        Ok(ConditionalTable::uniform(space))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Folds {
    K(usize),
    LeaveOneOut,
}

impl Folds {
    pub fn count(&self, m: usize) -> usize {
        match self {
            Self::K(k) => *k,
            Self::LeaveOneOut => m,
        }
    }
}

impl fmt::Display for Folds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::K(k) => write!(f, "{k}"),
            Self::LeaveOneOut => write!(f, "loo"),
        }
    }
}

/// Mean over folds of the mean held-out loss, training on each complement.
pub fn cv_error(
    learner: &dyn Learner,
    d: &TrainingSet,
    folds: usize,
    loss: &LossFunction,
    space: &FiniteSpace,
) -> Result<Exact> {
    let ranges = fold_ranges(d.len(), folds)?;
    let mut total = Exact::zero();
    for r in &ranges {
        let h = learner.hypothesis(&d.without(r.clone()), space)?;
        let held = &d.pairs()[r.clone()];
        let mut fold_loss = Exact::zero();
        for &(x, y) in held {
            match h.labels() {
                Some(labels) => fold_loss += loss.value(labels[x], y),
                None => {
                    for (yh, p) in h.row(x).iter().enumerate() {
                        fold_loss += loss.value(yh, y) * p;
                    }
                }
            }
        }
        total += fold_loss / exact_int(held.len());
    }
    Ok(total / exact_int(ranges.len()))
}

/// Scientist A (`anti = false`) keeps the candidate with the lowest CV
/// error; scientist B the greatest. Ties go to the earlier candidate. When d
/// is too small for the fold count the first candidate is used.
pub struct CvSelect {
    candidates: Vec<Box<dyn Learner>>,
    folds: Folds,
    anti: bool,
    loss: LossFunction,
}

impl CvSelect {
    pub fn new(candidates: Vec<Box<dyn Learner>>, folds: Folds, anti: bool, loss: LossFunction) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if let Folds::K(k) = folds {
            if k < 2 {
                return Err(Error::InvalidFolds { folds: k, m: 0 });
            }
        }
        Ok(Self { candidates, folds, anti, loss })
    }

    /// Index of the selected candidate and every candidate's CV error.
    pub fn select(&self, d: &TrainingSet, space: &FiniteSpace) -> Result<(usize, Vec<Exact>)> {
        let k = self.folds.count(d.len());
        if d.len() < 2 || k > d.len() {
            return Ok((0, Vec::new()));
        }
        let errors = self
            .candidates
            .iter()
            .map(|c| cv_error(c.as_ref(), d, k, &self.loss, space))
            .collect::<Result<Vec<_>>>()?;
        let mut best = 0;
        for (i, e) in errors.iter().enumerate().skip(1) {
            let better = if self.anti { *e > errors[best] } else { *e < errors[best] };
            if better {
                best = i;
            }
        }
        Ok((best, errors))
    }
}

impl Learner for CvSelect {
    fn name(&self) -> String {
        let c: Vec<String> = self.candidates.iter().map(|c| c.name()).collect();
        let kind = if self.anti { "anti_cv_select" } else { "cv_select" };
        format!("{kind}(candidates=[{}], folds={})", c.join(","), self.folds)
    }

    fn hypothesis(&self, d: &TrainingSet, space: &FiniteSpace) -> Result<ConditionalTable> {
        let (best, _) = self.select(d, space)?;
        self.candidates[best].hypothesis(d, space)
    }
}

/// Parsed learner description.
#[derive(Clone, Debug, PartialEq)]
pub enum LearnerSpec {
    Majority,
    AntiMajority,
    Constant(usize),
    MemorizePlusDefault(usize),
    NearestNeighbor,
    Uniform,
    CvSelect { candidates: Vec<LearnerSpec>, folds: Folds },
    AntiCvSelect { candidates: Vec<LearnerSpec>, folds: Folds },
}

/// Builds a learner; CV meta-learners score candidates with `loss`.
pub fn make_learner(spec: &LearnerSpec, space: &FiniteSpace, loss: &LossFunction) -> Result<Box<dyn Learner>> {
    Ok(match spec {
        LearnerSpec::Majority => Box::new(Majority),
        LearnerSpec::AntiMajority => Box::new(AntiMajority),
        LearnerSpec::Constant(y) => {
            space.check_y(*y)?;
            Box::new(Constant(*y))
        }
        LearnerSpec::MemorizePlusDefault(y) => {
            space.check_y(*y)?;
            Box::new(MemorizePlusDefault(*y))
        }
        LearnerSpec::NearestNeighbor => Box::new(NearestNeighbor),
        LearnerSpec::Uniform => Box::new(UniformGuess),
        LearnerSpec::CvSelect { candidates, folds } | LearnerSpec::AntiCvSelect { candidates, folds } => {
            let built = candidates.iter().map(|c| make_learner(c, space, loss)).collect::<Result<Vec<_>>>()?;
            let anti = matches!(spec, LearnerSpec::AntiCvSelect { .. });
            Box::new(CvSelect::new(built, *folds, anti, loss.clone())?)
        }
    })
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Majority => write!(f, "majority"),
            Self::AntiMajority => write!(f, "anti_majority"),
            Self::Constant(y) => write!(f, "constant({y})"),
            Self::MemorizePlusDefault(y) => write!(f, "memorize_plus_default({y})"),
            Self::NearestNeighbor => write!(f, "nearest_neighbor"),
            Self::Uniform => write!(f, "uniform"),
            Self::CvSelect { candidates, folds } | Self::AntiCvSelect { candidates, folds } => {
                let kind = if matches!(self, Self::CvSelect { .. }) { "cv_select" } else { "anti_cv_select" };
                let c: Vec<String> = candidates.iter().map(|c| c.to_string()).collect();
                write!(f, "{kind}(candidates=[{}], folds={folds})", c.join(","))
            }
        }
    }
}

fn learner_from_expr(expr: &Expr) -> Result<LearnerSpec> {
    let call = expr.as_call("learner")?;
    let label = |call: &Call| -> Result<usize> {
        call.expect_keys(&["y"])?;
        call.required_usize(0, "y")
    };
    match call.name.as_str() {
        "majority" => call.no_args().map(|_| LearnerSpec::Majority),
        "anti_majority" => call.no_args().map(|_| LearnerSpec::AntiMajority),
        "nearest_neighbor" => call.no_args().map(|_| LearnerSpec::NearestNeighbor),
        "uniform" => call.no_args().map(|_| LearnerSpec::Uniform),
        "constant" => Ok(LearnerSpec::Constant(label(call)?)),
        "memorize_plus_default" => Ok(LearnerSpec::MemorizePlusDefault(label(call)?)),
        "cv_select" | "anti_cv_select" => {
            call.expect_keys(&["candidates", "folds"])?;
            let candidates =
                call.required_list(0, "candidates")?.iter().map(learner_from_expr).collect::<Result<Vec<_>>>()?;
            if candidates.is_empty() {
                return Err(Error::EmptyCandidates);
            }
            let folds = match call.arg(1, "folds") {
                None => Folds::LeaveOneOut,
                Some(e) if e.as_ident() == Some("loo") => Folds::LeaveOneOut,
                Some(e) => match e.as_usize() {
                    Some(k) if k >= 2 => Folds::K(k),
                    _ => return Err(call.invalid("folds", "expected `loo` or an integer >= 2")),
                },
            };
            Ok(if call.name == "cv_select" {
                LearnerSpec::CvSelect { candidates, folds }
            } else {
                LearnerSpec::AntiCvSelect { candidates, folds }
            })
        }
        other => Err(Error::UnknownSpec { kind: "learner", name: other.into() }),
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        learner_from_expr(&Expr::parse(s)?)
    }
}

impl Serialize for LearnerSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LearnerSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_ratio;

    fn binary(n: usize) -> FiniteSpace {
        FiniteSpace::integer_levels(n, 2).unwrap()
    }

    fn labels(l: &dyn Learner, d: &TrainingSet, s: &FiniteSpace) -> Vec<usize> {
        l.hypothesis(d, s).unwrap().labels().unwrap().to_vec()
    }

    #[test]
    fn majority_and_complement() {
        let s = binary(5);
        let d = TrainingSet::new(&s, vec![(0, 1), (1, 1), (2, 0)]).unwrap();
        assert_eq!(labels(&Majority, &d, &s), vec![1, 1, 0, 1, 1]);
        assert_eq!(labels(&AntiMajority, &d, &s), vec![1, 1, 0, 0, 0]);
        let tie = TrainingSet::new(&s, vec![(0, 1), (1, 0)]).unwrap();
        assert_eq!(labels(&Majority, &tie, &s)[4], 0);
        assert_eq!(labels(&AntiMajority, &tie, &s)[4], 1);
        let empty = TrainingSet::empty();
        assert_eq!(labels(&Majority, &empty, &s), vec![0; 5]);
        assert_eq!(labels(&AntiMajority, &empty, &s), vec![1; 5]);
    }

    #[test]
    fn anti_majority_on_three_labels() {
        let s = FiniteSpace::integer_levels(4, 3).unwrap();
        let d = TrainingSet::new(&s, vec![(0, 0), (1, 0), (2, 1)]).unwrap();
        assert_eq!(majority_label(&d, 3), 0);
        assert_eq!(anti_majority_label(&d, 3), 2);
    }

    #[test]
    fn nearest_neighbor_prefers_clockwise() {
        let s = binary(5);
        let d = TrainingSet::new(&s, vec![(1, 1), (3, 0)]).unwrap();
        // x=2 sits between 1 and 3; x+1 = 3 wins.
        assert_eq!(labels(&NearestNeighbor, &d, &s), vec![1, 1, 0, 0, 0]);
        assert_eq!(labels(&NearestNeighbor, &TrainingSet::empty(), &s), vec![0; 5]);
    }

    #[test]
    fn cv_error_examples() {
        let s = binary(4);
        let loss = LossFunction::zero_one(&s);
        let ones = TrainingSet::new(&s, vec![(0, 1), (1, 1), (2, 1)]).unwrap();
        for k in 2..=3 {
            assert!(cv_error(&Constant(1), &ones, k, &loss, &s).unwrap().is_zero());
        }
        let d = TrainingSet::new(&s, vec![(0, 1), (1, 0)]).unwrap();
        assert_eq!(cv_error(&Constant(1), &d, 2, &loss, &s).unwrap(), exact_ratio(1, 2));
        assert!(matches!(cv_error(&Constant(1), &d, 3, &loss, &s), Err(Error::InvalidFolds { .. })));
        assert!(matches!(cv_error(&Constant(1), &d, 1, &loss, &s), Err(Error::InvalidFolds { .. })));
    }

    #[test]
    fn nearest_neighbor_leave_one_out() {
        let s = binary(3);
        let d = TrainingSet::new(&s, vec![(0, 1), (1, 1), (2, 0)]).unwrap();
        let e = cv_error(&NearestNeighbor, &d, 3, &LossFunction::zero_one(&s), &s).unwrap();
        assert_eq!(e, exact_ratio(2, 3));
    }

    #[test]
    fn cv_select_picks_lowest_and_anti_highest() {
        let s = binary(5);
        let loss = LossFunction::zero_one(&s);
        let d = TrainingSet::new(&s, vec![(0, 1), (1, 1), (2, 0)]).unwrap();
        let spec: LearnerSpec = "cv_select(candidates=[constant(0), constant(1)], folds=loo)".parse().unwrap();
        let cv = make_learner(&spec, &s, &loss).unwrap();
        assert_eq!(labels(cv.as_ref(), &d, &s), vec![1; 5]);
        let spec: LearnerSpec = "anti_cv_select(candidates=[constant(0), constant(1)], folds=loo)".parse().unwrap();
        let anti = make_learner(&spec, &s, &loss).unwrap();
        assert_eq!(labels(anti.as_ref(), &d, &s), vec![0; 5]);

        let c = CvSelect::new(vec![Box::new(Constant(0)), Box::new(Constant(1))], Folds::LeaveOneOut, false, loss.clone())
            .unwrap();
        let (best, errors) = c.select(&d, &s).unwrap();
        assert_eq!(best, 1);
        assert_eq!(errors, vec![exact_ratio(2, 3), exact_ratio(1, 3)]);
    }

    #[test]
    fn cv_ties_and_small_sets_use_first_candidate() {
        let s = binary(4);
        let loss = LossFunction::zero_one(&s);
        let d = TrainingSet::new(&s, vec![(0, 1), (1, 0)]).unwrap();
        for anti in [false, true] {
            let c = CvSelect::new(vec![Box::new(Constant(1)), Box::new(Constant(0))], Folds::K(2), anti, loss.clone())
                .unwrap();
            assert_eq!(c.select(&d, &s).unwrap().0, 0);
            let one = TrainingSet::new(&s, vec![(2, 0)]).unwrap();
            assert_eq!(c.select(&one, &s).unwrap().0, 0);
            assert_eq!(c.select(&TrainingSet::empty(), &s).unwrap().0, 0);
        }
        let c = CvSelect::new(vec![Box::new(Constant(1))], Folds::K(3), false, loss.clone()).unwrap();
        assert_eq!(c.select(&d, &s).unwrap().0, 0);
        assert!(CvSelect::new(vec![], Folds::K(2), false, loss.clone()).is_err());
        assert!(CvSelect::new(vec![Box::new(Majority)], Folds::K(1), false, loss).is_err());
    }

    #[test]
    fn spec_grammar() {
        for s in [
            "majority",
            "anti_majority",
            "constant(1)",
            "memorize_plus_default(0)",
            "nearest_neighbor",
            "uniform",
            "cv_select(candidates=[constant(0),constant(1),majority], folds=loo)",
            "anti_cv_select(candidates=[majority,nearest_neighbor], folds=3)",
        ] {
            let spec: LearnerSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!(matches!("cv_select(candidates=[])".parse::<LearnerSpec>(), Err(Error::EmptyCandidates)));
        assert!("cv_select(candidates=[majority], folds=1)".parse::<LearnerSpec>().is_err());
        assert!(matches!("svm".parse::<LearnerSpec>(), Err(Error::UnknownSpec { .. })));
        assert!(matches!("constant()".parse::<LearnerSpec>(), Err(Error::MissingArgument { .. })));
        let s = binary(3);
        let loss = LossFunction::zero_one(&s);
        assert!(make_learner(&"constant(2)".parse().unwrap(), &s, &loss).is_err());
        let built = make_learner(&"cv_select(candidates=[constant(0),majority], folds=2)".parse().unwrap(), &s, &loss);
        assert_eq!(built.unwrap().name(), "cv_select(candidates=[constant(0),majority], folds=2)");
    }
}
