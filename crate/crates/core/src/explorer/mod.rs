//! Per-layer precision search over a small fixed-point inference engine.

pub mod data;
pub mod ideal;
pub mod infer;
pub mod search;

pub use data::{load_evalset, load_weights, EvalSet, WeightSet};
pub use ideal::{ideal_speedup_csv, ideal_speedup_table, IdealSpeedups};
pub use infer::{evaluate_accuracy, Accuracy, FracRule, QuantizedModel};
pub use search::{baseline_accuracy, is_locally_minimal, search_profile, sweep_oracle, AccuracyTarget, SearchOutcome};
