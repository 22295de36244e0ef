//! Command-line front end: single evaluations, exact-vs-asymptotic sweeps,
//! distance studies, bound tables and grid caching.

pub mod config;
pub mod error;
pub mod output;
pub mod row;
pub mod run;

pub use config::{Cli, Command, OutputFormat, QuantityArg, RunConfig};
pub use error::CliError;
pub use output::{RowsDocument, CSV_COLUMNS};
pub use row::{compute_row, RowEstimate, RowSettings, SweepRow};
pub use run::{compute_rows, load_grids, run};
