//! Monte Carlo replay engine for hybrid round-robin + knockout tournament
//! designs: the 28-team 8+6 and 4x7 layouts and the 24-team 4x6 layout,
//! with Tullock-contest or explicit-matrix match outcomes.

pub mod draw;
pub mod format;
pub mod metrics;
pub mod model;
pub mod report;
pub mod sim;

pub use draw::{Identification, SeedingPolicy, SeedingVariant};
pub use format::{FormatId, FormatSpec, TournamentResult};
pub use metrics::{AggregateStats, MetricsReport};
pub use model::{ProbTable, Rank, RngStream, TullockModel, WinModel};
pub use report::{EngineInfo, Summary};
pub use sim::{convergence_run, simulate, ModelSpec, SimConfig};
