//! Data ingestion, result persistence and sweep orchestration.

pub mod aggregate;
pub mod io;
pub mod sweep;

pub use aggregate::{aggregate_trials, TrialSummary};
pub use io::{read_csv, write_csv, NamedSeries};
pub use sweep::{run_sweep, ResultRow, SweepKind, SweepMethod, SweepSpec};
