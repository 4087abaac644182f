//! Simulation scenarios, CSV ingestion and the end-to-end fitting pipeline
//! behind the command-line tool.

mod fit;
pub mod io;
mod signal;

pub use fit::{
    fit, fit_data, load, oracle, oracle_dump, write_simulation, DataSource, FitOutput, LoadedData,
    OracleConfigEntry, OracleDump, RunConfig, Sigma2Choice, SummaryJson,
};
pub use signal::{simulate, BlockValues, SignalSpec, Simulated};
