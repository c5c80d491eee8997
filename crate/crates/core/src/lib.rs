//! Monte Carlo diagnostics for ergodic properties of Markov chains on metric
//! state spaces.
//!
//! Kernels are simulated, never integrated: `Pⁿ` is obtained by iterating
//! [`Kernel::step`] and every quantity comes with its seed and confidence
//! interval. The library ships an iterated-function-system jump process
//! ([`ifs`]) and a non-Feller sequence-space chain ([`counterexample`]).

pub mod counterexample;
pub mod diagnostics;
pub mod error;
pub mod ifs;
pub mod kernel;
pub mod metric;
pub mod report;
pub mod rng;
pub mod runner;
pub mod stats;

pub use error::{Error, Result};
pub use kernel::Kernel;
pub use metric::{
    EmpiricalMeasure, Level, Metric, MetricPoint, SeqState, Space, TestFunction,
    TestFunctionDictionary,
};
pub use report::{DiagnosticReport, Verdict};
pub use rng::RandomStream;
