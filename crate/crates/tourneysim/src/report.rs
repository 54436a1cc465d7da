//! Experiment-file parsing and bit-stable report emission: summary.json with
//! sorted keys, and fixed six-decimal CSV files.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::draw::{Identification, SeedingVariant};
use crate::format::FormatId;
use crate::metrics::MetricsReport;
use crate::model::RNG_ALGORITHM;
use crate::sim::{ConvergencePoint, ModelSpec, SimConfig, DEFAULT_SHARD_SIZE};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("experiment file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate experiment name {0:?}")]
    DuplicateName(String),
    #[error("experiments disagree on runs: {0} vs {1}")]
    HeterogeneousRuns(u64, u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One named line of an experiment file.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub config: SimConfig,
}

/// Parses `name format seeding identification r runs` lines; '#' starts a
/// comment, blank lines are skipped. All experiments share the master seed.
pub fn parse_experiments(text: &str, master_seed: u64) -> Result<Vec<Experiment>, ReportError> {
    let mut experiments: Vec<Experiment> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(ReportError::Parse {
                line,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let parse_err = |message: String| ReportError::Parse { line, message };
        let name = fields[0].to_string();
        if experiments.iter().any(|e| e.name == name) {
            return Err(ReportError::DuplicateName(name));
        }
        let format = FormatId::from_cli_name(fields[1])
            .ok_or_else(|| parse_err(format!("unknown format {:?}", fields[1])))?;
        let seeding = match fields[2] {
            "seeded" => SeedingVariant::Seeded,
            "random" => SeedingVariant::Random,
            other => return Err(parse_err(format!("unknown seeding {other:?}"))),
        };
        let identification = match fields[3] {
            "correct" => Identification::Correct,
            "erroneous" => Identification::Erroneous,
            other => return Err(parse_err(format!("unknown identification {other:?}"))),
        };
        let r: f64 = fields[4]
            .parse()
            .map_err(|_| parse_err(format!("bad r {:?}", fields[4])))?;
        let runs: u64 = fields[5]
            .parse()
            .map_err(|_| parse_err(format!("bad runs {:?}", fields[5])))?;
        experiments.push(Experiment {
            name,
            config: SimConfig {
                format,
                seeding,
                identification,
                model: ModelSpec::Tullock { r },
                runs,
                master_seed,
                shard_size: DEFAULT_SHARD_SIZE,
            },
        });
    }
    Ok(experiments)
}

/// All experiments of a comparison must use the same replay count.
pub fn check_shared_runs(experiments: &[Experiment]) -> Result<(), ReportError> {
    if let Some(first) = experiments.first() {
        for e in &experiments[1..] {
            if e.config.runs != first.config.runs {
                return Err(ReportError::HeterogeneousRuns(first.config.runs, e.config.runs));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineInfo {
    pub name: String,
    pub version: String,
    pub rng_algorithm: String,
}

impl EngineInfo {
    pub fn current() -> Self {
        EngineInfo {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng_algorithm: RNG_ALGORITHM.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: SimConfig,
    pub engine: EngineInfo,
    pub report: MetricsReport,
}

/// Serializes with sorted object keys and a trailing newline; repeated calls
/// are byte-identical.
pub fn summary_json(summary: &Summary) -> Result<String, ReportError> {
    // round-tripping through Value sorts keys (its object map is ordered)
    let value = serde_json::to_value(summary)?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

pub const PER_TEAM_HEADER: &str =
    "rank,matches_mean,win_pct,prize_mean,p_place1,p_place2,p_place3,p_place4,p_top_groups";

pub fn per_team_csv(report: &MetricsReport) -> String {
    let mut out = String::from(PER_TEAM_HEADER);
    out.push('\n');
    for t in &report.teams {
        let top = t.p_top_groups.map(f6).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            t.rank,
            f6(t.matches_mean),
            f6(t.win_pct),
            f6(t.prize_mean),
            f6(t.p_place[0]),
            f6(t.p_place[1]),
            f6(t.p_place[2]),
            f6(t.p_place[3]),
            top,
        );
    }
    out
}

/// One column per experiment, one row per headline metric.
pub fn comparison_csv(names: &[String], reports: &[MetricsReport]) -> String {
    assert_eq!(names.len(), reports.len());
    let mut out = String::from("metric");
    for name in names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let rows: [(&str, fn(&MetricsReport) -> f64); 6] = [
        ("avg_rank_1", |r| r.avg_rank[0]),
        ("avg_rank_2", |r| r.avg_rank[1]),
        ("avg_rank_3", |r| r.avg_rank[2]),
        ("avg_rank_4", |r| r.avg_rank[3]),
        ("quality_per_pairing", |r| r.quality_per_pairing),
        ("balance_per_pairing", |r| r.balance_per_pairing),
    ];
    for (label, get) in rows {
        out.push_str(label);
        for report in reports {
            out.push(',');
            out.push_str(&f6(get(report)));
        }
        out.push('\n');
    }
    out
}

pub const CONVERGENCE_HEADER: &str = "runs,win_share_team1,mean_meetings_1_2";

pub fn convergence_csv(series: &[ConvergencePoint]) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for p in series {
        let _ = writeln!(
            out,
            "{},{},{}",
            p.runs,
            f6(p.win_share_team1),
            f6(p.mean_meetings_1_2)
        );
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}
