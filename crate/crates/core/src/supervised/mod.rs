//! Supervised learning on finite X, Y: targets, hypotheses, training sets,
//! losses and the off-training-set cost
//!
//! ```text
//! C(f, h, d) = sum_{q not in d_X} P(q) sum_{y_f, y_h} L(y_h, y_f) f(y_f | q) h(y_h | q)
//! ```
//!
//! All arithmetic is exact.

mod checks;
mod learners;

pub use checks::*;
pub use learners::*;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{exact_from_f64, exact_int, Exact};
use crate::space::{FiniteSpace, ObjectiveTable};

/// Row-stochastic |X| x |Y| table: a target f(y|x) or hypothesis h(y|x).
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalTable {
    y_size: usize,
    rows: Vec<Vec<Exact>>,
    labels: Option<Vec<usize>>,
}

pub type TargetDistribution = ConditionalTable;
pub type HypothesisDistribution = ConditionalTable;

impl ConditionalTable {
    /// One-hot rows.
    pub fn deterministic(space: &FiniteSpace, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != space.x_size() {
            return Err(Error::InvalidTable(format!(
                "expected {} labels, got {}",
                space.x_size(),
                labels.len()
            )));
        }
        for &y in &labels {
            space.check_y(y)?;
        }
        let rows = labels
            .iter()
            .map(|&y| (0..space.y_size()).map(|j| if j == y { Exact::one() } else { Exact::zero() }).collect())
            .collect();
        Ok(Self { y_size: space.y_size(), rows, labels: Some(labels) })
    }

    pub fn from_objective(f: &ObjectiveTable) -> Self {
        Self::deterministic(f.space(), f.y_index().to_vec()).expect("valid table")
    }

    pub fn from_rows(space: &FiniteSpace, rows: Vec<Vec<Exact>>) -> Result<Self> {
        if rows.len() != space.x_size() {
            return Err(Error::InvalidTable(format!("expected {} rows, got {}", space.x_size(), rows.len())));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != space.y_size() {
                return Err(Error::NotStochastic { row: x, reason: format!("length {}", row.len()) });
            }
            if row.iter().any(|p| *p < Exact::zero()) {
                return Err(Error::NotStochastic { row: x, reason: "negative entry".into() });
            }
            let total: Exact = row.iter().cloned().sum();
            if !total.is_one() {
                return Err(Error::NotStochastic { row: x, reason: format!("sums to {total}") });
            }
        }
        let labels = rows
            .iter()
            .map(|row| row.iter().position(|p| p.is_one()))
            .collect::<Option<Vec<usize>>>();
        Ok(Self { y_size: space.y_size(), rows, labels })
    }

    /// Every row uniform over Y.
    pub fn uniform(space: &FiniteSpace) -> Self {
        let p = exact_int(1) / exact_int(space.y_size());
        let labels = (space.y_size() == 1).then(|| vec![0; space.x_size()]);
        Self { y_size: space.y_size(), rows: vec![vec![p; space.y_size()]; space.x_size()], labels }
    }

    pub fn x_size(&self) -> usize {
        self.rows.len()
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn row(&self, x: usize) -> &[Exact] {
        &self.rows[x]
    }

    pub fn prob(&self, x: usize, y: usize) -> &Exact {
        &self.rows[x][y]
    }

    /// Labels when every row is one-hot.
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn is_row_stochastic(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|p| *p >= Exact::zero()) && r.iter().cloned().sum::<Exact>().is_one())
    }
}

/// Ordered (x, y) pairs; x may repeat.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TrainingSet {
    pairs: Vec<(usize, usize)>,
}

impl TrainingSet {
    pub fn new(space: &FiniteSpace, pairs: Vec<(usize, usize)>) -> Result<Self> {
        for &(x, y) in &pairs {
            space.check_x(x)?;
            space.check_y(y)?;
        }
        Ok(Self { pairs })
    }

    pub fn empty() -> Self {
        Self { pairs: Vec::new() }
    }

    /// Labels `xs` with f.
    pub fn sample(f: &ObjectiveTable, xs: &[usize]) -> Self {
        Self { pairs: xs.iter().map(|&x| (x, f.index_at(x))).collect() }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn xs(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn covered(&self, x_size: usize) -> Vec<bool> {
        let mut seen = vec![false; x_size];
        for &(x, _) in &self.pairs {
            seen[x] = true;
        }
        seen
    }

    pub fn covers(&self, x_size: usize) -> bool {
        self.covered(x_size).into_iter().all(|b| b)
    }

    /// First label recorded for each x.
    pub fn memory(&self, x_size: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; x_size];
        for &(x, y) in &self.pairs {
            out[x].get_or_insert(y);
        }
        out
    }

    /// Vote count per Y index.
    pub fn votes(&self, y_size: usize) -> Vec<usize> {
        let mut v = vec![0; y_size];
        for &(_, y) in &self.pairs {
            v[y] += 1;
        }
        v
    }

    /// Whether some deterministic f reproduces d (no x with two labels).
    pub fn is_consistent(&self, x_size: usize) -> bool {
        let memory = self.memory(x_size);
        self.pairs.iter().all(|&(x, y)| memory[x] == Some(y))
    }

    pub fn is_consistent_with(&self, f: &ObjectiveTable) -> bool {
        self.pairs.iter().all(|&(x, y)| f.index_at(x) == y)
    }

    /// Pairs outside `range`.
    pub fn without(&self, range: std::ops::Range<usize>) -> Self {
        Self { pairs: self.pairs[..range.start].iter().chain(&self.pairs[range.end..]).copied().collect() }
    }

    /// Swaps labels through `map`.
    pub fn relabel(&self, map: &[usize]) -> Self {
        Self { pairs: self.pairs.iter().map(|&(x, y)| (x, map[y])).collect() }
    }
}

/// L(y_h, y_f) as a |Y| x |Y| matrix indexed `[y_h][y_f]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossFunction {
    name: String,
    matrix: Vec<Vec<Exact>>,
}

impl LossFunction {
    pub fn zero_one(space: &FiniteSpace) -> Self {
        let n = space.y_size();
        let matrix = (0..n)
            .map(|a| (0..n).map(|b| if a == b { Exact::zero() } else { Exact::one() }).collect())
            .collect();
        Self { name: "zero_one".into(), matrix }
    }

    pub fn absolute(space: &FiniteSpace) -> Self {
        Self::from_values(space, "absolute", |a, b| (a - b).abs())
    }

    pub fn squared(space: &FiniteSpace) -> Self {
        Self::from_values(space, "squared", |a, b| (a - b) * (a - b))
    }

    fn from_values(space: &FiniteSpace, name: &str, g: impl Fn(&Exact, &Exact) -> Exact) -> Self {
        let n = space.y_size();
        let matrix = (0..n).map(|a| (0..n).map(|b| g(space.y_exact(a), space.y_exact(b))).collect()).collect();
        Self { name: name.into(), matrix }
    }

    /// Arbitrary square matrix `[y_h][y_f]`.
    pub fn custom(space: &FiniteSpace, name: &str, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = space.y_size();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!("loss `{name}` must be {n}x{n}")));
        }
        if matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("loss `{name}` has a non-finite entry")));
        }
        let matrix = matrix.into_iter().map(|r| r.into_iter().map(exact_from_f64).collect()).collect();
        Ok(Self { name: name.into(), matrix })
    }

    pub fn by_name(space: &FiniteSpace, name: &str) -> Result<Self> {
        match name {
            "zero_one" => Ok(Self::zero_one(space)),
            "absolute" => Ok(Self::absolute(space)),
            "squared" => Ok(Self::squared(space)),
            other => Err(Error::UnknownSpec { kind: "loss", name: other.into() }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, y_h: usize, y_f: usize) -> &Exact {
        &self.matrix[y_h][y_f]
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.matrix.len();
        (0..n).all(|a| (0..n).all(|b| self.matrix[a][b] == self.matrix[b][a]))
    }

    /// sum_{y_h, y_f} L(y_h, y_f) h(y_h | x) f(y_f | x).
    fn expected_at(&self, f: &ConditionalTable, h: &ConditionalTable, x: usize) -> Exact {
        match (f.labels(), h.labels()) {
            (Some(fl), Some(hl)) => self.matrix[hl[x]][fl[x]].clone(),
            _ => {
                let mut total = Exact::zero();
                for (yh, ph) in h.row(x).iter().enumerate() {
                    if ph.is_zero() {
                        continue;
                    }
                    for (yf, pf) in f.row(x).iter().enumerate() {
                        if !pf.is_zero() {
                            total += &self.matrix[yh][yf] * ph * pf;
                        }
                    }
                }
                total
            }
        }
    }
}

/// P(q) over X with no mass on trained inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct OffTrainingSampler {
    weights: Vec<Exact>,
}

impl OffTrainingSampler {
    /// Uniform over X \ d_X.
    pub fn uniform(space: &FiniteSpace, d: &TrainingSet) -> Result<Self> {
        let covered = d.covered(space.x_size());
        let open = covered.iter().filter(|c| !**c).count();
        if open == 0 {
            return Err(Error::TrainingCoversSpace);
        }
        let p = exact_int(1) / exact_int(open);
        let weights = covered.iter().map(|&c| if c { Exact::zero() } else { p.clone() }).collect();
        Ok(Self { weights })
    }

    pub fn from_weights(space: &FiniteSpace, d: &TrainingSet, weights: Vec<Exact>) -> Result<Self> {
        let covered = d.covered(space.x_size());
        if weights.len() != space.x_size() {
            return Err(Error::Invalid(format!("sampler needs {} weights", space.x_size())));
        }
        if weights.iter().any(|w| *w < Exact::zero()) {
            return Err(Error::Invalid("sampler weights must be nonnegative".into()));
        }
        if let Some(x) = (0..space.x_size()).find(|&x| covered[x] && !weights[x].is_zero()) {
            return Err(Error::Invalid(format!("sampler puts mass on trained x={x}")));
        }
        if !weights.iter().cloned().sum::<Exact>().is_one() {
            return Err(Error::Invalid("sampler weights must sum to 1".into()));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[Exact] {
        &self.weights
    }
}

/// Off-training-set cost C(f, h, d).
pub fn ots_cost(
    f: &TargetDistribution,
    h: &HypothesisDistribution,
    d: &TrainingSet,
    loss: &LossFunction,
    sampler: &OffTrainingSampler,
) -> Result<Exact> {
    let covered = d.covered(f.x_size());
    if covered.iter().all(|c| *c) {
        return Err(Error::TrainingCoversSpace);
    }
    let mut total = Exact::zero();
    for (q, p) in sampler.weights().iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        if covered[q] {
            return Err(Error::Invalid(format!("sampler puts mass on trained x={q}")));
        }
        total += p * loss.expected_at(f, h, q);
    }
    Ok(total)
}

/// C(f, h, d) with the default uniform sampler over X \ d_X.
pub fn ots_cost_uniform(
    f: &TargetDistribution,
    h: &HypothesisDistribution,
    d: &TrainingSet,
    loss: &LossFunction,
) -> Result<Exact> {
    let covered = d.covered(f.x_size());
    let open: Vec<usize> = (0..f.x_size()).filter(|&x| !covered[x]).collect();
    if open.is_empty() {
        return Err(Error::TrainingCoversSpace);
    }
    let total: Exact = open.iter().map(|&q| loss.expected_at(f, h, q)).sum();
    Ok(total / exact_int(open.len()))
}

/// Expected loss uniformly over all of X.
pub fn full_space_cost(f: &TargetDistribution, h: &HypothesisDistribution, loss: &LossFunction) -> Exact {
    let total: Exact = (0..f.x_size()).map(|q| loss.expected_at(f, h, q)).sum();
    total / exact_int(f.x_size())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_ratio;

    fn binary(n: usize) -> FiniteSpace {
        FiniteSpace::integer_levels(n, 2).unwrap()
    }

    #[test]
    fn perfect_and_coin_flip_hypotheses() {
        let s = binary(4);
        let f = ConditionalTable::deterministic(&s, vec![0, 1, 1, 0]).unwrap();
        let d = TrainingSet::new(&s, vec![(0, 0)]).unwrap();
        let loss = LossFunction::zero_one(&s);
        let sampler = OffTrainingSampler::uniform(&s, &d).unwrap();
        assert_eq!(ots_cost(&f, &f, &d, &loss, &sampler).unwrap(), Exact::zero());
        let h = ConditionalTable::uniform(&s);
        assert_eq!(ots_cost(&f, &h, &d, &loss, &sampler).unwrap(), exact_ratio(1, 2));
    }

    #[test]
    fn hand_evaluated_cost() {
        let s = binary(3);
        let f = ConditionalTable::deterministic(&s, vec![1, 1, 1]).unwrap();
        let h = ConditionalTable::deterministic(&s, vec![0, 1, 0]).unwrap();
        let d = TrainingSet::new(&s, vec![(0, 1)]).unwrap();
        let loss = LossFunction::zero_one(&s);
        let sampler = OffTrainingSampler::uniform(&s, &d).unwrap();
        assert_eq!(ots_cost(&f, &h, &d, &loss, &sampler).unwrap(), exact_ratio(1, 2));
        assert_eq!(ots_cost_uniform(&f, &h, &d, &loss).unwrap(), exact_ratio(1, 2));
    }

    #[test]
    fn covering_training_set_is_rejected() {
        let s = binary(2);
        let f = ConditionalTable::deterministic(&s, vec![1, 1]).unwrap();
        let d = TrainingSet::new(&s, vec![(0, 1), (1, 1)]).unwrap();
        let loss = LossFunction::zero_one(&s);
        assert_eq!(OffTrainingSampler::uniform(&s, &d), Err(Error::TrainingCoversSpace));
        assert_eq!(ots_cost_uniform(&f, &f, &d, &loss), Err(Error::TrainingCoversSpace));
    }

    #[test]
    fn full_space_cost_examples() {
        let s = binary(4);
        let loss = LossFunction::zero_one(&s);
        let f = ConditionalTable::deterministic(&s, vec![0, 1, 1, 0]).unwrap();
        let h = ConditionalTable::deterministic(&s, vec![0, 1, 1, 1]).unwrap();
        assert_eq!(full_space_cost(&f, &f, &loss), Exact::zero());
        assert_eq!(full_space_cost(&f, &h, &loss), exact_ratio(1, 4));
    }

    #[test]
    fn full_space_splits_into_off_training_part() {
        // h reproduces d on trained x, so only the 14 open points contribute.
        let s = binary(16);
        let loss = LossFunction::zero_one(&s);
        let f_labels: Vec<usize> = (0..16).map(|x| x % 2).collect();
        let mut h_labels: Vec<usize> = (0..16).map(|x| (x / 3) % 2).collect();
        h_labels[3] = f_labels[3];
        h_labels[10] = f_labels[10];
        let f = ConditionalTable::deterministic(&s, f_labels.clone()).unwrap();
        let h = ConditionalTable::deterministic(&s, h_labels).unwrap();
        let d = TrainingSet::new(&s, vec![(3, f_labels[3]), (10, f_labels[10])]).unwrap();
        let phi = ots_cost_uniform(&f, &h, &d, &loss).unwrap();
        assert_eq!(full_space_cost(&f, &h, &loss), phi * exact_ratio(14, 16));
    }

    #[test]
    fn stochastic_rows_validated() {
        let s = binary(2);
        let half = exact_ratio(1, 2);
        let ok = ConditionalTable::from_rows(&s, vec![vec![half.clone(), half.clone()], vec![Exact::one(), Exact::zero()]]);
        let t = ok.unwrap();
        assert!(t.labels().is_none());
        assert!(t.is_row_stochastic());
        let bad = ConditionalTable::from_rows(&s, vec![vec![half.clone(), half.clone()], vec![half.clone(), Exact::zero()]]);
        assert!(matches!(bad, Err(Error::NotStochastic { row: 1, .. })));
        let one_hot = ConditionalTable::from_rows(&s, vec![vec![Exact::zero(), Exact::one()]; 2]).unwrap();
        assert_eq!(one_hot.labels(), Some(&[1, 1][..]));
    }

    #[test]
    fn losses() {
        let s = FiniteSpace::new(2, vec![-1.0, 2.0]).unwrap();
        assert!(LossFunction::zero_one(&s).is_symmetric());
        assert_eq!(*LossFunction::absolute(&s).value(0, 1), exact_int(3));
        assert_eq!(*LossFunction::squared(&s).value(1, 0), exact_int(9));
        let asym = LossFunction::custom(&s, "asym", vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(!asym.is_symmetric());
        assert!(LossFunction::custom(&s, "bad", vec![vec![0.0]]).is_err());
        assert!(LossFunction::by_name(&s, "hinge").is_err());
    }

    #[test]
    fn mixed_rows_cost() {
        // f(1|q) = 3/4 on the open point, h says 1 surely: loss 1/4.
        let s = binary(2);
        let f = ConditionalTable::from_rows(
            &s,
            vec![vec![Exact::one(), Exact::zero()], vec![exact_ratio(1, 4), exact_ratio(3, 4)]],
        )
        .unwrap();
        let h = ConditionalTable::deterministic(&s, vec![0, 1]).unwrap();
        let d = TrainingSet::new(&s, vec![(0, 0)]).unwrap();
        let c = ots_cost_uniform(&f, &h, &d, &LossFunction::zero_one(&s)).unwrap();
        assert_eq!(c, exact_ratio(1, 4));
    }

    #[test]
    fn custom_sampler() {
        let s = binary(3);
        let d = TrainingSet::new(&s, vec![(0, 1)]).unwrap();
        let w = vec![Exact::zero(), exact_ratio(1, 4), exact_ratio(3, 4)];
        let sampler = OffTrainingSampler::from_weights(&s, &d, w).unwrap();
        let f = ConditionalTable::deterministic(&s, vec![1, 1, 0]).unwrap();
        let h = ConditionalTable::deterministic(&s, vec![1, 1, 1]).unwrap();
        let c = ots_cost(&f, &h, &d, &LossFunction::zero_one(&s), &sampler).unwrap();
        assert_eq!(c, exact_ratio(3, 4));
        let bad = vec![exact_ratio(1, 2), exact_ratio(1, 2), Exact::zero()];
        assert!(OffTrainingSampler::from_weights(&s, &d, bad).is_err());
    }

    #[test]
    fn training_set_helpers() {
        let s = binary(4);
        let d = TrainingSet::new(&s, vec![(2, 1), (0, 0), (2, 1)]).unwrap();
        assert_eq!(d.memory(4), vec![Some(0), None, Some(1), None]);
        assert_eq!(d.votes(2), vec![1, 2]);
        assert!(d.is_consistent(4));
        assert!(!TrainingSet::new(&s, vec![(1, 0), (1, 1)]).unwrap().is_consistent(4));
        assert_eq!(d.without(1..2).pairs(), &[(2, 1), (2, 1)]);
        assert_eq!(d.relabel(&[1, 0]).ys(), vec![0, 1, 0]);
        assert!(TrainingSet::new(&s, vec![(4, 0)]).is_err());
    }
}
