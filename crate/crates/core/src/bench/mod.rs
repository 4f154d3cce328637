//! Error metrics, decode retention, the cost proxy and the experiment grid.

mod cost;
mod experiment;
mod grid;
mod metrics;
mod report;

pub use cost::{estimate_cost, CostModel, REFERENCE_TFLOPS};
pub use experiment::{run_experiment, trend_gates, Experiment, ExperimentConfig};
pub use grid::{
    ordering_gate, run_grid, BenchReport, BenchRow, CellTiming, GateCheck, GridConfig, PartialGrid, SequenceTrace,
    TargetLength,
};
pub use metrics::{cer, edit_distance, mean_greedy_cer, retention_cer};
pub use report::{
    cost_trend, write_report, COST_FILE, CURVES_FILE, FAILED_FILE, REPORT_FILE, SUMMARY_FILE, TIMING_FILE, TRACES_FILE,
};
