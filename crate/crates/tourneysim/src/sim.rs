//! Replay orchestration: one RNG stream per replay index, work split into
//! shards, results merged exactly — so the report depends only on the
//! configuration and master seed, never on the worker count.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::draw::{assign_pots, draw_groups, Identification, SeedingPolicy, SeedingVariant};
use crate::format::{run_tournament, spec, FormatError, FormatId, FormatSpec, TournamentResult};
use crate::metrics::{AggregateStats, MetricsError, MetricsReport};
use crate::model::{MatrixModel, ModelError, ProbTable, RngStream, TullockModel, WinModel};

pub const DEFAULT_RUNS: u64 = 1_000_000;
pub const DEFAULT_SHARD_SIZE: u64 = 10_000;

/// The checkpoint ladder of the convergence study: 1, 2.5 and 5 times each
/// power of ten from 10^3 up to 10^7.
pub fn default_checkpoints() -> Vec<u64> {
    let mut out = Vec::new();
    let mut base = 1_000u64;
    while base < 10_000_000 {
        out.extend([base, base * 25 / 10, base * 5]);
        base *= 10;
    }
    out.push(10_000_000);
    out
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot read matrix file {path}: {source}")]
    MatrixIo {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Which match-outcome model to build for a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Tullock { r: f64 },
    /// Every match a coin flip (the homogeneous-team validation scenario).
    Uniform,
    /// The lower rank always wins (the deterministic validation scenario).
    Dominance,
    MatrixFile { path: PathBuf },
}

impl ModelSpec {
    pub fn build(&self, team_count: usize) -> Result<WinModel, SimError> {
        Ok(match self {
            ModelSpec::Tullock { r } => WinModel::Tullock(TullockModel::new(*r)?),
            ModelSpec::Uniform => WinModel::Matrix(MatrixModel::uniform(team_count)),
            ModelSpec::Dominance => WinModel::Matrix(MatrixModel::dominance(team_count)),
            ModelSpec::MatrixFile { path } => WinModel::Matrix(
                MatrixModel::from_file(path).map_err(|source| SimError::MatrixIo {
                    path: path.clone(),
                    source,
                })?,
            ),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub format: FormatId,
    pub seeding: SeedingVariant,
    pub identification: Identification,
    pub model: ModelSpec,
    pub runs: u64,
    pub master_seed: u64,
    pub shard_size: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.runs == 0 {
            return Err(SimError::BadConfig("runs must be at least 1".into()));
        }
        if self.shard_size == 0 {
            return Err(SimError::BadConfig("shard size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn policy(&self) -> SeedingPolicy {
        SeedingPolicy {
            variant: self.seeding,
            identification: self.identification,
        }
    }
}

/// One complete replay, consuming the canonical variate sequence of stream
/// `k`: perceived ranking, group draw, tournament.
pub fn run_replay(
    format: &FormatSpec,
    policy: SeedingPolicy,
    probs: &ProbTable,
    master_seed: u64,
    k: u64,
) -> Result<TournamentResult, SimError> {
    let mut rng = RngStream::new(master_seed, k);
    let ranking = crate::draw::perceived_ranking(format.team_count, policy, &mut rng);
    let pots = assign_pots(&ranking, format).map_err(FormatError::Draw)?;
    let groups = draw_groups(&pots, format, &mut rng).map_err(FormatError::Draw)?;
    Ok(run_tournament(format, &groups, probs, &mut rng)?)
}

fn accumulate_range(
    config: &SimConfig,
    format: &FormatSpec,
    probs: &ProbTable,
    start: u64,
    end: u64,
) -> Result<AggregateStats, SimError> {
    let policy = config.policy();
    let mut acc = AggregateStats::new(config.format, config.identification);
    for k in start..end {
        let result = run_replay(format, policy, probs, config.master_seed, k)?;
        acc.accumulate(&result);
    }
    Ok(acc)
}

/// Accumulates replays `start..end` in parallel shards and merges them in
/// ascending shard order.
fn simulate_span(
    config: &SimConfig,
    format: &FormatSpec,
    probs: &ProbTable,
    start: u64,
    end: u64,
) -> Result<AggregateStats, SimError> {
    let shard_count = (end - start + config.shard_size - 1) / config.shard_size;
    let shards: Vec<Result<AggregateStats, SimError>> = (0..shard_count)
        .into_par_iter()
        .map(|s| {
            let lo = start + s * config.shard_size;
            let hi = (lo + config.shard_size).min(end);
            accumulate_range(config, format, probs, lo, hi)
        })
        .collect();
    let mut total = AggregateStats::new(config.format, config.identification);
    for shard in shards {
        total.merge(&shard?)?;
    }
    Ok(total)
}

pub fn simulate_stats(config: &SimConfig) -> Result<AggregateStats, SimError> {
    config.validate()?;
    let format = spec(config.format);
    let model = config.model.build(format.team_count)?;
    let probs = ProbTable::new(&model, format.team_count)?;
    simulate_span(config, format, &probs, 0, config.runs)
}

pub fn simulate(config: &SimConfig) -> Result<MetricsReport, SimError> {
    Ok(simulate_stats(config)?.finalize()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub runs: u64,
    pub win_share_team1: f64,
    pub mean_meetings_1_2: f64,
}

/// Single-pass running estimates at each checkpoint: the segment between
/// consecutive checkpoints is simulated once and merged into the running
/// total, so checkpoint `c` reflects exactly replays `0..c`.
pub fn convergence_run(
    config: &SimConfig,
    checkpoints: &[u64],
) -> Result<Vec<ConvergencePoint>, SimError> {
    config.validate()?;
    if checkpoints.is_empty() {
        return Err(SimError::BadConfig("no checkpoints given".into()));
    }
    for pair in checkpoints.windows(2) {
        if pair[0] >= pair[1] {
            return Err(SimError::BadConfig(format!(
                "checkpoints must be strictly ascending ({} then {})",
                pair[0], pair[1]
            )));
        }
    }
    if checkpoints[0] == 0 {
        return Err(SimError::BadConfig("checkpoints must be positive".into()));
    }
    if *checkpoints.last().unwrap() > config.runs {
        return Err(SimError::BadConfig(format!(
            "last checkpoint {} exceeds runs {}",
            checkpoints.last().unwrap(),
            config.runs
        )));
    }

    let format = spec(config.format);
    let model = config.model.build(format.team_count)?;
    let probs = ProbTable::new(&model, format.team_count)?;

    let mut total = AggregateStats::new(config.format, config.identification);
    let mut done = 0u64;
    let mut series = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        let segment = simulate_span(config, format, &probs, done, cp)?;
        total.merge(&segment)?;
        done = cp;
        let n = cp as f64;
        series.push(ConvergencePoint {
            runs: cp,
            win_share_team1: total.placement_counts[0][0] as f64 / n,
            mean_meetings_1_2: total.meetings_top_two as f64 / n,
        });
    }
    Ok(series)
}
