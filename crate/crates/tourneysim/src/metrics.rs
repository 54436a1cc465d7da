//! Integer-exact, mergeable accumulation of tournament metrics over many
//! replays, and the floating-point report derived from it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::draw::{identification_adjusted_rank, Identification};
use crate::format::{spec, FormatId, TournamentResult};
use crate::model::Rank;

/// lcm(1..=20). Per-replay win ratios are stored as `wins * SCALE / matches`,
/// which is exact because every team plays between 10 and 20 matches.
pub const WIN_RATIO_SCALE: u64 = 232_792_560;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("cannot merge accumulators for different formats: {0:?} vs {1:?}")]
    FormatMismatch(FormatId, FormatId),
    #[error("cannot merge accumulators for different identification scenarios")]
    IdentificationMismatch,
    #[error("cannot finalize an empty accumulator")]
    Empty,
}

/// Sums of every reported statistic over the replays seen so far. All fields
/// are integers, so merging shards is exact and order-independent.
///
/// Match quality `i + j` and balance `|i - j|` are taken in
/// identification-adjusted units, matching how the reference tables score the
/// erroneous scenario; with correct identification the adjustment is the
/// identity. Finalist placements, per-team fields, and the top-pair meeting
/// count always use true pre-tournament ranks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregateStats {
    pub format: FormatId,
    pub identification: Identification,
    pub team_count: usize,
    pub replays: u64,
    /// Adjusted rank per team index, precomputed.
    adjusted: Vec<u64>,
    /// Sum of the true pre-tournament rank of the team finishing in place 1..4.
    pub placement_rank_sum: [u64; 4],
    /// Per team: how often it finished in place 1..4.
    pub placement_counts: Vec<[u64; 4]>,
    /// Per team: total matches played and total matches won.
    pub matches_sum: Vec<u64>,
    pub wins_sum: Vec<u64>,
    /// Per team: sum of per-replay `wins * WIN_RATIO_SCALE / matches`.
    pub win_ratio_scaled_sum: Vec<u64>,
    /// Sum over all matches of the two teams' rank sum, and its per-replay
    /// square (for a standard error of the per-replay mean).
    pub quality_sum: u64,
    pub quality_sumsq: u64,
    /// Sum over all matches of the absolute rank difference, and its
    /// per-replay square.
    pub balance_sum: u64,
    pub balance_sumsq: u64,
    pub pairing_count: u64,
    pub match_count: u64,
    /// Matches contested between true ranks 1 and 2.
    pub meetings_top_two: u64,
    /// Per team: replays spent in one of the first two groups.
    pub top_group_count: Vec<u64>,
}

impl AggregateStats {
    pub fn new(format: FormatId, identification: Identification) -> Self {
        let n = spec(format).team_count;
        let adjusted = Rank::all(n)
            .map(|i| u64::from(identification_adjusted_rank(i, identification)))
            .collect();
        AggregateStats {
            format,
            identification,
            team_count: n,
            replays: 0,
            adjusted,
            placement_rank_sum: [0; 4],
            placement_counts: vec![[0; 4]; n],
            matches_sum: vec![0; n],
            wins_sum: vec![0; n],
            win_ratio_scaled_sum: vec![0; n],
            quality_sum: 0,
            quality_sumsq: 0,
            balance_sum: 0,
            balance_sumsq: 0,
            pairing_count: 0,
            match_count: 0,
            meetings_top_two: 0,
            top_group_count: vec![0; n],
        }
    }

    pub fn accumulate(&mut self, result: &TournamentResult) {
        debug_assert_eq!(result.format, self.format);
        let f = spec(self.format);
        self.replays += 1;
        for (place, &team) in result.placements.iter().enumerate() {
            self.placement_rank_sum[place] += u64::from(team.value());
            self.placement_counts[team.index()][place] += 1;
        }
        for i in 0..self.team_count {
            let played = u64::from(result.matches_played[i]);
            self.matches_sum[i] += played;
            self.wins_sum[i] += u64::from(result.wins[i]);
            self.win_ratio_scaled_sum[i] += u64::from(result.wins[i]) * WIN_RATIO_SCALE / played;
            if result.group_of[i] < 2 {
                self.top_group_count[i] += 1;
            }
        }
        let mut quality = 0u64;
        let mut balance = 0u64;
        for m in &result.matches {
            let a = self.adjusted[m.a.index()] as i64;
            let b = self.adjusted[m.b.index()] as i64;
            quality += (a + b) as u64;
            balance += (a - b).unsigned_abs();
            if m.a.value() + m.b.value() == 3 {
                self.meetings_top_two += 1;
            }
        }
        self.quality_sum += quality;
        self.quality_sumsq += quality * quality;
        self.balance_sum += balance;
        self.balance_sumsq += balance * balance;
        self.pairing_count += f.pairing_count as u64;
        self.match_count += f.total_matches as u64;
    }

    /// Fieldwise addition; associative and commutative, so shard order never
    /// affects the result.
    pub fn merge(&mut self, other: &AggregateStats) -> Result<(), MetricsError> {
        if self.format != other.format {
            return Err(MetricsError::FormatMismatch(self.format, other.format));
        }
        if self.identification != other.identification {
            return Err(MetricsError::IdentificationMismatch);
        }
        self.replays += other.replays;
        for p in 0..4 {
            self.placement_rank_sum[p] += other.placement_rank_sum[p];
        }
        for i in 0..self.team_count {
            for p in 0..4 {
                self.placement_counts[i][p] += other.placement_counts[i][p];
            }
            self.matches_sum[i] += other.matches_sum[i];
            self.wins_sum[i] += other.wins_sum[i];
            self.win_ratio_scaled_sum[i] += other.win_ratio_scaled_sum[i];
            self.top_group_count[i] += other.top_group_count[i];
        }
        self.quality_sum += other.quality_sum;
        self.quality_sumsq += other.quality_sumsq;
        self.balance_sum += other.balance_sum;
        self.balance_sumsq += other.balance_sumsq;
        self.pairing_count += other.pairing_count;
        self.match_count += other.match_count;
        self.meetings_top_two += other.meetings_top_two;
        Ok(())
    }

    pub fn finalize(&self) -> Result<MetricsReport, MetricsError> {
        if self.replays == 0 {
            return Err(MetricsError::Empty);
        }
        let n = self.replays as f64;
        let f = spec(self.format);
        let pairings_per_replay = f.metric_pairing_count as f64;
        let per_replay = |sum: u64, sumsq: u64| -> (f64, f64) {
            let mean = sum as f64 / n;
            let se = if self.replays > 1 {
                let var = (sumsq as f64 - n * mean * mean) / (n - 1.0);
                (var.max(0.0) / n).sqrt()
            } else {
                0.0
            };
            (mean, se)
        };
        let (quality_mean, quality_se) = per_replay(self.quality_sum, self.quality_sumsq);
        let (balance_mean, balance_se) = per_replay(self.balance_sum, self.balance_sumsq);

        let teams: Vec<TeamReport> = (0..self.team_count)
            .map(|i| {
                let c = &self.placement_counts[i];
                TeamReport {
                    rank: i as u32 + 1,
                    matches_mean: self.matches_sum[i] as f64 / n,
                    win_pct: self.wins_sum[i] as f64 / self.matches_sum[i] as f64,
                    win_pct_replay_mean: self.win_ratio_scaled_sum[i] as f64
                        / (WIN_RATIO_SCALE as f64 * n),
                    prize_mean: (5 * c[0] + 3 * c[1] + 2 * c[2] + c[3]) as f64 / n,
                    p_place: [
                        c[0] as f64 / n,
                        c[1] as f64 / n,
                        c[2] as f64 / n,
                        c[3] as f64 / n,
                    ],
                    p_top_groups: if self.format == FormatId::D86 {
                        Some(self.top_group_count[i] as f64 / n)
                    } else {
                        None
                    },
                }
            })
            .collect();

        // E_i / E_{i+1} for i up to n-5; beyond that the denominators are too
        // small to be meaningful.
        let prize_ratios: Vec<Option<f64>> = (0..self.team_count.saturating_sub(5))
            .map(|i| {
                let denom = teams[i + 1].prize_mean;
                (denom > 0.0).then(|| teams[i].prize_mean / denom)
            })
            .collect();

        Ok(MetricsReport {
            format: self.format,
            team_count: self.team_count,
            replays: self.replays,
            avg_rank: self.placement_rank_sum.map(|s| s as f64 / n),
            quality_per_pairing: quality_mean / pairings_per_replay,
            quality_per_match: quality_mean / f.total_matches as f64,
            quality_se_per_pairing: quality_se / pairings_per_replay,
            quality_total_sum: self.quality_sum,
            balance_per_pairing: balance_mean / pairings_per_replay,
            balance_per_match: balance_mean / f.total_matches as f64,
            balance_se_per_pairing: balance_se / pairings_per_replay,
            balance_total_sum: self.balance_sum,
            pairing_count: self.pairing_count,
            match_count: self.match_count,
            mean_meetings_1_2: self.meetings_top_two as f64 / n,
            win_share_team1: self.placement_counts[0][0] as f64 / n,
            prize_ratios,
            teams,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeamReport {
    pub rank: u32,
    pub matches_mean: f64,
    /// Pooled wins over pooled matches (the published definition).
    pub win_pct: f64,
    /// Mean over replays of the per-replay win ratio (diagnostic; exact via
    /// the integer scaling).
    pub win_pct_replay_mean: f64,
    pub prize_mean: f64,
    pub p_place: [f64; 4],
    /// Probability of landing in one of the two privileged groups; only the
    /// 8+6 design treats groups unequally.
    pub p_top_groups: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub format: FormatId,
    pub team_count: usize,
    pub replays: u64,
    /// Average true pre-tournament rank of the teams finishing 1st..4th.
    pub avg_rank: [f64; 4],
    pub quality_per_pairing: f64,
    pub quality_per_match: f64,
    pub quality_se_per_pairing: f64,
    pub quality_total_sum: u64,
    pub balance_per_pairing: f64,
    pub balance_per_match: f64,
    pub balance_se_per_pairing: f64,
    pub balance_total_sum: u64,
    pub pairing_count: u64,
    pub match_count: u64,
    pub mean_meetings_1_2: f64,
    pub win_share_team1: f64,
    /// E_i / E_{i+1} for i = 1 .. n-5 (None where E_{i+1} is zero).
    pub prize_ratios: Vec<Option<f64>>,
    pub teams: Vec<TeamReport>,
}
