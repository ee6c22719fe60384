//! Synthetic data, dataset I/O, exact population oracles and the
//! noise-sweep experiment harness.

mod config;
mod csv_io;
mod oracle;
mod sweep;
mod synth;

pub use config::{DataSource, ExperimentConfig, FlatConfig, Method, RateSource};
pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to, CsvLayout, CsvSchema, LoadedCsv};
pub use oracle::{population_oracle, OracleMetrics};
pub use sweep::{
    aggregate, emit_results, load_source, read_results, run_sweep, run_sweep_with_jobs, summary_path, train_test_split,
    CellFailure, ResultRow, Split, SummaryRow, SweepResults, RESULT_COLUMNS,
};
pub use synth::{cell_index, synth_generate, SyntheticConfig};
