//! Finite-space machinery for checking No Free Lunch identities by
//! exhaustive enumeration: search spaces and objective tables, off-data-set
//! search algorithms, performance distributions and NFL sums, supervised
//! off-training-set cost, and greedy Monte Carlo optimization.

pub mod algorithms;
pub mod error;
pub mod exact;
pub mod expr;
pub mod folds;
pub mod mco;
pub mod nfl;
pub mod rng;
pub mod space;
pub mod supervised;

pub use algorithms::{make_algorithm, run_search, AlgorithmSpec, SearchAlgorithm};
pub use error::{Error, Result};
pub use exact::{Exact, Mass};
pub use space::{
    enumerate_functions, evaluate_performance, function_to_rank, rank_to_function, FiniteSpace,
    ObjectiveTable, PerformanceMeasure, SearchTrace,
};
