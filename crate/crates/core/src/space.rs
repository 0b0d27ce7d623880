//! Finite search spaces, objective tables, traces and performance measures.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{exact_from_f64, exact_int, Exact};
use crate::expr::Expr;

/// Default ceiling on |Y|^|X| for anything that enumerates functions.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// A finite X = {0, .., x_size-1} together with an ordered value set Y.
///
/// Values live both as `f64` (for reporting) and as exact rationals, so that
/// sums over functions can run in exact arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpace {
    x_size: usize,
    y_values: Arc<[f64]>,
    y_exact: Arc<[Exact]>,
    function_count: Option<u64>,
    cap: u64,
}

impl FiniteSpace {
    pub fn new(x_size: usize, y_values: Vec<f64>) -> Result<Self> {
        Self::with_cap(x_size, y_values, DEFAULT_ENUMERATION_CAP)
    }

    /// Space whose function set must stay below `cap`.
    pub fn with_cap(x_size: usize, y_values: Vec<f64>, cap: u64) -> Result<Self> {
        let mut space = Self::sampling_only(x_size, y_values)?;
        match checked_power(space.y_size() as u64, x_size) {
            Some(count) if count <= cap => {
                space.function_count = Some(count);
                space.cap = cap;
                Ok(space)
            }
            other => Err(Error::EnumerationTooLarge {
                count: other.map_or_else(
                    || format!("{}^{}", space.y_size(), x_size),
                    |c| c.to_string(),
                ),
                cap,
            }),
        }
    }

    /// Space used only for sampling (e.g. benchmark functions); anything
    /// that enumerates Y^X on it fails with `EnumerationTooLarge`.
    pub fn sampling_only(x_size: usize, y_values: Vec<f64>) -> Result<Self> {
        if x_size == 0 {
            return Err(Error::EmptySearchSpace);
        }
        if y_values.is_empty() {
            return Err(Error::EmptyValueSet);
        }
        for (i, v) in y_values.iter().enumerate() {
            if !v.is_finite() || (i > 0 && *v <= y_values[i - 1]) {
                return Err(Error::InvalidValueSet { position: i });
            }
        }
        let y_exact: Vec<Exact> = y_values.iter().map(|v| exact_from_f64(*v)).collect();
        Ok(Self {
            x_size,
            y_values: y_values.into(),
            y_exact: y_exact.into(),
            function_count: None,
            cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    /// Y = {0, 1, .., levels-1}.
    pub fn integer_levels(x_size: usize, levels: usize) -> Result<Self> {
        Self::new(x_size, (0..levels).map(|v| v as f64).collect())
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_values.len()
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y_values
    }

    pub fn y_value(&self, index: usize) -> f64 {
        self.y_values[index]
    }

    pub fn y_exact(&self, index: usize) -> &Exact {
        &self.y_exact[index]
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// |Y|^|X|, or an error when the space is not enumerable.
    pub fn function_count(&self) -> Result<u64> {
        self.function_count.ok_or_else(|| Error::EnumerationTooLarge {
            count: format!("{}^{}", self.y_size(), self.x_size),
            cap: self.cap,
        })
    }

    pub fn is_enumerable(&self) -> bool {
        self.function_count.is_some()
    }

    /// Position of a value in Y, if present.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        self.y_values.iter().position(|v| *v == value)
    }

    /// All functions in ascending canonical rank.
    pub fn functions(&self) -> Result<FunctionIter> {
        let count = self.function_count()?;
        Ok(FunctionIter {
            space: self.clone(),
            next: vec![0; self.x_size],
            remaining: count,
        })
    }

    pub fn check_x(&self, x: usize) -> Result<()> {
        if x < self.x_size {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { what: "X", index: x, size: self.x_size })
        }
    }

    pub fn check_y(&self, y: usize) -> Result<()> {
        if y < self.y_size() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { what: "Y", index: y, size: self.y_size() })
        }
    }
}

fn checked_power(base: u64, exp: usize) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Enumerates `|Y|^|X|` functions; `free` fn form of [`FiniteSpace::functions`].
pub fn enumerate_functions(space: &FiniteSpace) -> Result<FunctionIter> {
    space.functions()
}

/// Odometer over Y^X with x = 0 as the least significant digit.
pub struct FunctionIter {
    space: FiniteSpace,
    next: Vec<usize>,
    remaining: u64,
}

impl Iterator for FunctionIter {
    type Item = ObjectiveTable;

    fn next(&mut self) -> Option<ObjectiveTable> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = ObjectiveTable { space: self.space.clone(), y_index: self.next.clone() };
        let base = self.space.y_size();
        for digit in self.next.iter_mut() {
            *digit += 1;
            if *digit < base {
                break;
            }
            *digit = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

impl ExactSizeIterator for FunctionIter {}

/// A total function f : X -> Y stored as Y indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveTable {
    space: FiniteSpace,
    y_index: Vec<usize>,
}

impl ObjectiveTable {
    pub fn new(space: &FiniteSpace, y_index: Vec<usize>) -> Result<Self> {
        if y_index.len() != space.x_size() {
            return Err(Error::InvalidTable(format!(
                "expected {} entries, got {}",
                space.x_size(),
                y_index.len()
            )));
        }
        for &y in &y_index {
            space.check_y(y)?;
        }
        Ok(Self { space: space.clone(), y_index })
    }

    /// Table holding exactly the given values, each of which must lie in Y.
    pub fn from_values(space: &FiniteSpace, values: &[f64]) -> Result<Self> {
        let idx = values
            .iter()
            .map(|v| {
                space
                    .index_of(*v)
                    .ok_or_else(|| Error::InvalidTable(format!("{v} is not an element of Y")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, idx)
    }

    pub fn constant(space: &FiniteSpace, y: usize) -> Result<Self> {
        Self::new(space, vec![y; space.x_size()])
    }

    pub fn from_rank(space: &FiniteSpace, rank: u64) -> Result<Self> {
        let count = space.function_count()?;
        if rank >= count {
            return Err(Error::RankOutOfRange { rank, count });
        }
        let base = space.y_size() as u64;
        let mut rest = rank;
        let y_index = (0..space.x_size())
            .map(|_| {
                let digit = (rest % base) as usize;
                rest /= base;
                digit
            })
            .collect();
        Ok(Self { space: space.clone(), y_index })
    }

    /// Canonical rank: base-|Y| numeral, x = 0 least significant.
    pub fn rank(&self) -> Result<u64> {
        self.space.function_count()?;
        let base = self.space.y_size() as u64;
        Ok(self.y_index.iter().rev().fold(0u64, |acc, &d| acc * base + d as u64))
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn y_index(&self) -> &[usize] {
        &self.y_index
    }

    pub fn index_at(&self, x: usize) -> usize {
        self.y_index[x]
    }

    pub fn value(&self, x: usize) -> f64 {
        self.space.y_value(self.y_index[x])
    }

    pub fn values(&self) -> Vec<f64> {
        self.y_index.iter().map(|&i| self.space.y_value(i)).collect()
    }
}

/// `rank_to_function` in free-function form.
pub fn rank_to_function(space: &FiniteSpace, rank: u64) -> Result<ObjectiveTable> {
    ObjectiveTable::from_rank(space, rank)
}

pub fn function_to_rank(table: &ObjectiveTable) -> Result<u64> {
    table.rank()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableJson {
    x_size: usize,
    y_values: Vec<f64>,
    y_index: Vec<usize>,
}

impl Serialize for ObjectiveTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableJson {
            x_size: self.space.x_size(),
            y_values: self.space.y_values().to_vec(),
            y_index: self.y_index.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ObjectiveTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = TableJson::deserialize(d)?;
        let space = match FiniteSpace::new(raw.x_size, raw.y_values.clone()) {
            Ok(space) => space,
            Err(Error::EnumerationTooLarge { .. }) => {
                FiniteSpace::sampling_only(raw.x_size, raw.y_values).map_err(D::Error::custom)?
            }
            Err(e) => return Err(D::Error::custom(e)),
        };
        ObjectiveTable::new(&space, raw.y_index).map_err(D::Error::custom)
    }
}

/// Ordered data set d^m of (x, y-index) pairs with distinct x.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SearchTrace {
    pairs: Vec<(usize, usize)>,
}

impl SearchTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut trace = Self { pairs: Vec::with_capacity(pairs.len()) };
        for (x, y) in pairs {
            trace.push(x, y)?;
        }
        Ok(trace)
    }

    pub fn push(&mut self, x: usize, y_index: usize) -> Result<()> {
        if self.contains(x) {
            return Err(Error::DuplicatePoint { x });
        }
        self.pairs.push((x, y_index));
        Ok(())
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

    pub fn contains(&self, x: usize) -> bool {
        self.pairs.iter().any(|&(v, _)| v == x)
    }

    pub fn last(&self) -> Option<(usize, usize)> {
        self.pairs.last().copied()
    }

    pub fn xs(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn y_indices(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn y_values(&self, space: &FiniteSpace) -> Vec<f64> {
        self.pairs.iter().map(|p| space.y_value(p.1)).collect()
    }

    /// Visited mask over X.
    pub fn visited(&self, x_size: usize) -> Vec<bool> {
        let mut mask = vec![false; x_size];
        for &(x, _) in &self.pairs {
            if x < x_size {
                mask[x] = true;
            }
        }
        mask
    }

    /// JSON list of `[x, y_value]` pairs.
    pub fn to_json(&self, space: &FiniteSpace) -> serde_json::Value {
        serde_json::Value::Array(
            self.pairs
                .iter()
                .map(|&(x, y)| serde_json::json!([x, space.y_value(y)]))
                .collect(),
        )
    }

    pub fn from_json(space: &FiniteSpace, value: &serde_json::Value) -> Result<Self> {
        let bad = |why: &str| Error::InvalidTable(format!("trace JSON: {why}"));
        let items = value.as_array().ok_or_else(|| bad("expected a list"))?;
        let mut trace = Self::new();
        for item in items {
            let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("expected [x, y]"))?;
            let x = pair[0].as_u64().ok_or_else(|| bad("x must be a non-negative integer"))? as usize;
            let y = pair[1].as_f64().ok_or_else(|| bad("y must be a number"))?;
            space.check_x(x)?;
            let yi = space.index_of(y).ok_or_else(|| bad("y value not in Y"))?;
            trace.push(x, yi)?;
        }
        Ok(trace)
    }
}

/// Performance measure Phi on the sampled values d^m_Y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PerformanceMeasure {
    Min,
    Mean,
    /// Minimum over the first k samples.
    BestAtStep(usize),
    /// Last sampled value; order-dependent.
    Final,
}

impl PerformanceMeasure {
    pub fn evaluate(&self, ys: &[f64]) -> Result<f64> {
        self.apply(ys, |n| n as f64)
    }

    pub fn evaluate_exact(&self, ys: &[Exact]) -> Result<Exact> {
        self.apply(ys, exact_int)
    }

    /// Exact Phi of a sequence of Y indices.
    pub fn evaluate_indices(&self, space: &FiniteSpace, idx: &[usize]) -> Result<Exact> {
        let ys: Vec<Exact> = idx.iter().map(|&i| space.y_exact(i).clone()).collect();
        self.evaluate_exact(&ys)
    }

    fn apply<T>(&self, ys: &[T], count: impl Fn(usize) -> T) -> Result<T>
    where
        T: Clone + PartialOrd + std::ops::Add<Output = T> + std::ops::Div<Output = T>,
    {
        if ys.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let min_of = |s: &[T]| {
            s.iter()
                .skip(1)
                .fold(s[0].clone(), |acc, v| if *v < acc { v.clone() } else { acc })
        };
        match *self {
            Self::Min => Ok(min_of(ys)),
            Self::Mean => {
                let total = ys.iter().skip(1).fold(ys[0].clone(), |acc, v| acc + v.clone());
                Ok(total / count(ys.len()))
            }
            Self::BestAtStep(k) => {
                if k == 0 || k > ys.len() {
                    return Err(Error::StepBeyondTrace { k, m: ys.len() });
                }
                Ok(min_of(&ys[..k]))
            }
            Self::Final => Ok(ys[ys.len() - 1].clone()),
        }
    }
}

/// `evaluate_performance(measure, trace, space)`.
pub fn evaluate_performance(
    measure: PerformanceMeasure,
    trace: &SearchTrace,
    space: &FiniteSpace,
) -> Result<f64> {
    measure.evaluate(&trace.y_values(space))
}

impl fmt::Display for PerformanceMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Min => write!(f, "min"),
            Self::Mean => write!(f, "mean"),
            Self::BestAtStep(k) => write!(f, "best_at_step({k})"),
            Self::Final => write!(f, "final"),
        }
    }
}

impl FromStr for PerformanceMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let expr = Expr::parse(s)?;
        let call = expr.as_call("performance measure")?;
        match call.name.as_str() {
            "min" => call.no_args().map(|_| Self::Min),
            "mean" => call.no_args().map(|_| Self::Mean),
            "final" => call.no_args().map(|_| Self::Final),
            "best_at_step" => {
                call.expect_keys(&["k"])?;
                let k = call.required_usize(0, "k")?;
                if k == 0 {
                    return Err(call.invalid("k", "must be at least 1"));
                }
                Ok(Self::BestAtStep(k))
            }
            other => Err(Error::UnknownSpec { kind: "performance measure", name: other.into() }),
        }
    }
}

impl Serialize for PerformanceMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PerformanceMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(x: usize, y: usize) -> FiniteSpace {
        FiniteSpace::integer_levels(x, y).unwrap()
    }

    /// Independent radix conversion: repeated division of the rank.
    fn radix_digits(mut rank: u64, base: u64, len: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for _ in 0..len {
            out.push((rank % base) as usize);
            rank /= base;
        }
        out
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(space(3, 2).functions().unwrap().count(), 8);
        assert_eq!(space(1, 5).functions().unwrap().count(), 5);
        let all: Vec<_> = space(4, 3).functions().unwrap().collect();
        assert_eq!(all.len(), 81);
        assert_eq!(all[80].y_index(), &[2, 2, 2, 2]);
        assert_eq!(all[80].y_index(), radix_digits(80, 3, 4).as_slice());
        for (r, t) in all.iter().enumerate() {
            assert_eq!(t.rank().unwrap(), r as u64);
        }
    }

    #[test]
    fn rank_examples() {
        let s = space(2, 2);
        assert_eq!(rank_to_function(&s, 0).unwrap().y_index(), &[0, 0]);
        assert_eq!(rank_to_function(&s, 3).unwrap().y_index(), &[1, 1]);
        let s3 = space(3, 2);
        assert_eq!(rank_to_function(&s3, 5).unwrap().y_index(), &[1, 0, 1]);
        assert_eq!(radix_digits(5, 2, 3), vec![1, 0, 1]);
        assert!(matches!(
            rank_to_function(&s, 4),
            Err(Error::RankOutOfRange { rank: 4, count: 4 })
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let err = FiniteSpace::with_cap(5, vec![0.0, 1.0], 16).unwrap_err();
        assert_eq!(err, Error::EnumerationTooLarge { count: "32".into(), cap: 16 });
        let big = FiniteSpace::new(64, (0..8).map(|v| v as f64).collect()).unwrap_err();
        assert!(big.to_string().contains("8^64"));
        let sampling = FiniteSpace::sampling_only(64, vec![0.0, 1.0]).unwrap();
        assert!(sampling.functions().is_err());
    }

    #[test]
    fn invalid_spaces() {
        assert_eq!(FiniteSpace::new(0, vec![0.0]), Err(Error::EmptySearchSpace));
        assert_eq!(FiniteSpace::new(2, vec![]), Err(Error::EmptyValueSet));
        assert_eq!(
            FiniteSpace::new(2, vec![0.0, 0.0]),
            Err(Error::InvalidValueSet { position: 1 })
        );
        assert!(FiniteSpace::new(2, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn measures() {
        let m = |p: PerformanceMeasure, ys: &[f64]| p.evaluate(ys).unwrap();
        assert_eq!(m(PerformanceMeasure::Min, &[3.0, 1.0, 2.0]), 1.0);
        assert_eq!(m(PerformanceMeasure::Mean, &[0.0, 1.0]), 0.5);
        assert_eq!(m(PerformanceMeasure::BestAtStep(2), &[3.0, 1.0, 0.0]), 1.0);
        assert_eq!(m(PerformanceMeasure::Final, &[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(m(PerformanceMeasure::Min, &[4.0]), 4.0);
        assert_eq!(PerformanceMeasure::Min.evaluate(&[]), Err(Error::EmptyTrace));
        assert_eq!(
            PerformanceMeasure::BestAtStep(4).evaluate(&[1.0]),
            Err(Error::StepBeyondTrace { k: 4, m: 1 })
        );
    }

    #[test]
    fn measure_grammar() {
        for s in ["min", "mean", "final", "best_at_step(k=2)", "best_at_step(3)"] {
            let p: PerformanceMeasure = s.parse().unwrap();
            let again: PerformanceMeasure = p.to_string().parse().unwrap();
            assert_eq!(p, again);
        }
        assert!("median".parse::<PerformanceMeasure>().is_err());
        let err = "best_at_step()".parse::<PerformanceMeasure>().unwrap_err();
        assert!(err.to_string().contains("`k`"));
    }

    #[test]
    fn trace_rejects_revisits() {
        let mut t = SearchTrace::new();
        t.push(1, 0).unwrap();
        assert_eq!(t.push(1, 1), Err(Error::DuplicatePoint { x: 1 }));
    }

    #[test]
    fn json_forms() {
        let s = FiniteSpace::new(3, vec![-1.0, 0.5]).unwrap();
        let t = ObjectiveTable::new(&s, vec![1, 0, 1]).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"x_size":3,"y_values":[-1.0,0.5],"y_index":[1,0,1]}"#);
        let back: ObjectiveTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);

        let trace = SearchTrace::from_pairs(vec![(2, 1), (0, 0)]).unwrap();
        let v = trace.to_json(&s);
        assert_eq!(v.to_string(), "[[2,0.5],[0,-1.0]]");
        assert_eq!(SearchTrace::from_json(&s, &v).unwrap(), trace);
    }
}
