//! The three tournament structures as bracket data, and the execution of one
//! full replay from drawn groups to Final Four placements.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::draw::{self, DrawError, GroupAssignment};
use crate::model::{sample_winner, ProbTable, Rank, RngStream};

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("group assignment does not match the format: {0}")]
    MalformedGroups(String),
    #[error(transparent)]
    Draw(#[from] DrawError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormatId {
    /// Two groups of eight feeding the knockout directly, two groups of six
    /// behind a play-off (the 2015/16 EHF Champions League design).
    D86,
    /// Four balanced groups of seven.
    D47,
    /// Four balanced groups of six, 24 teams (the pre-2015 design).
    D46,
}

impl FormatId {
    pub const ALL: [FormatId; 3] = [FormatId::D86, FormatId::D47, FormatId::D46];

    pub fn cli_name(self) -> &'static str {
        match self {
            FormatId::D86 => "d86",
            FormatId::D47 => "d47",
            FormatId::D46 => "d46",
        }
    }

    pub fn from_cli_name(name: &str) -> Option<FormatId> {
        FormatId::ALL.into_iter().find(|f| f.cli_name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Group,
    PlayOff,
    Phase1,
    R16,
    QuarterFinal,
    FinalFour,
}

/// Where a tie participant comes from: a final group position, or the winner
/// of an earlier tie in the same template.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    /// `place` is 0-based within the final group ordering.
    GroupPlace { group: usize, place: usize },
    /// Index of an earlier tie in the template.
    WinnerOf(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TieSpec {
    pub stage: Stage,
    pub a: Slot,
    pub b: Slot,
}

const fn tie(stage: Stage, a: Slot, b: Slot) -> TieSpec {
    TieSpec { stage, a, b }
}

const fn gp(group: usize, place: usize) -> Slot {
    Slot::GroupPlace { group, place }
}

const fn w(idx: usize) -> Slot {
    Slot::WinnerOf(idx)
}

/// D(8+6) knockout: play-off K1/K2 among the bottom-group qualifiers, then
/// Phase 1 ties M1..M6, then quarter-finals joined by A1/B1. The winners of
/// the last four ties are the Final Four.
pub const BRACKET_D86: [TieSpec; 12] = [
    tie(Stage::PlayOff, gp(2, 1), gp(3, 0)), // K1 = C2 v D1
    tie(Stage::PlayOff, gp(2, 0), gp(3, 1)), // K2 = C1 v D2
    tie(Stage::Phase1, w(0), gp(0, 1)),      // M1 = W/K1 v A2
    tie(Stage::Phase1, w(1), gp(1, 1)),      // M2 = W/K2 v B2
    tie(Stage::Phase1, gp(0, 2), gp(1, 5)),  // M3 = A3 v B6
    tie(Stage::Phase1, gp(0, 5), gp(1, 2)),  // M4 = A6 v B3
    tie(Stage::Phase1, gp(0, 3), gp(1, 4)),  // M5 = A4 v B5
    tie(Stage::Phase1, gp(0, 4), gp(1, 3)),  // M6 = A5 v B4
    tie(Stage::QuarterFinal, w(2), w(5)),    // QF1 = W/M1 v W/M4
    tie(Stage::QuarterFinal, w(3), w(4)),    // QF2 = W/M2 v W/M3
    tie(Stage::QuarterFinal, w(7), gp(0, 0)), // QF3 = W/M6 v A1
    tie(Stage::QuarterFinal, w(6), gp(1, 0)), // QF4 = W/M5 v B1
];

/// D(4x7) knockout: Phase 1 among places 3..6, Round of 16 joined by places
/// 1..2, then quarter-finals. K2 pairs A4 with B5 so that each of A3..A6
/// meets each of B3..B6 exactly once, mirroring the C/D side.
pub const BRACKET_D47: [TieSpec; 20] = [
    tie(Stage::Phase1, gp(0, 2), gp(1, 5)), // K1 = A3 v B6
    tie(Stage::Phase1, gp(0, 3), gp(1, 4)), // K2 = A4 v B5
    tie(Stage::Phase1, gp(0, 4), gp(1, 3)), // K3 = A5 v B4
    tie(Stage::Phase1, gp(0, 5), gp(1, 2)), // K4 = A6 v B3
    tie(Stage::Phase1, gp(2, 2), gp(3, 5)), // K5 = C3 v D6
    tie(Stage::Phase1, gp(2, 3), gp(3, 4)), // K6 = C4 v D5
    tie(Stage::Phase1, gp(2, 4), gp(3, 3)), // K7 = C5 v D4
    tie(Stage::Phase1, gp(2, 5), gp(3, 2)), // K8 = C6 v D3
    tie(Stage::R16, w(5), gp(0, 0)),        // L1 = W/K6 v A1
    tie(Stage::R16, w(4), gp(0, 1)),        // L2 = W/K5 v A2
    tie(Stage::R16, w(6), gp(1, 0)),        // L3 = W/K7 v B1
    tie(Stage::R16, w(7), gp(1, 1)),        // L4 = W/K8 v B2
    tie(Stage::R16, w(1), gp(2, 0)),        // L5 = W/K2 v C1
    tie(Stage::R16, w(0), gp(2, 1)),        // L6 = W/K1 v C2
    tie(Stage::R16, w(2), gp(3, 0)),        // L7 = W/K3 v D1
    tie(Stage::R16, w(3), gp(3, 1)),        // L8 = W/K4 v D2
    tie(Stage::QuarterFinal, w(8), w(15)),  // QF1 = W/L1 v W/L8
    tie(Stage::QuarterFinal, w(10), w(13)), // QF2 = W/L3 v W/L6
    tie(Stage::QuarterFinal, w(9), w(14)),  // QF3 = W/L2 v W/L7
    tie(Stage::QuarterFinal, w(11), w(12)), // QF4 = W/L4 v W/L5
];

/// Static description of one tournament design.
#[derive(Debug)]
pub struct FormatSpec {
    pub id: FormatId,
    pub team_count: usize,
    pub group_sizes: [usize; 4],
    pub pot_size: usize,
    /// Matches in one full replay (Table 2 structure).
    pub total_matches: usize,
    /// Double round-robin pairs plus two-leg ties plus Final Four singles.
    pub pairing_count: usize,
    /// Divisor reproducing the published per-pairing quality/balance scale:
    /// half the match count of the balanced design drawing on the same team
    /// pool, so both 28-team designs share 106 and the 24-team design uses
    /// 74 (reverse-engineered from the reference tables).
    pub metric_pairing_count: usize,
    /// Predetermined knockout ties; `None` when the knockout bracket is
    /// itself drawn (D46).
    pub bracket: Option<&'static [TieSpec]>,
}

static SPEC_D86: FormatSpec = FormatSpec {
    id: FormatId::D86,
    team_count: 28,
    group_sizes: [8, 8, 6, 6],
    pot_size: 2,
    total_matches: 200,
    pairing_count: 102,
    metric_pairing_count: 106,
    bracket: Some(&BRACKET_D86),
};

static SPEC_D47: FormatSpec = FormatSpec {
    id: FormatId::D47,
    team_count: 28,
    group_sizes: [7, 7, 7, 7],
    pot_size: 4,
    total_matches: 212,
    pairing_count: 108,
    metric_pairing_count: 106,
    bracket: Some(&BRACKET_D47),
};

static SPEC_D46: FormatSpec = FormatSpec {
    id: FormatId::D46,
    team_count: 24,
    group_sizes: [6, 6, 6, 6],
    pot_size: 4,
    total_matches: 148,
    pairing_count: 76,
    metric_pairing_count: 74,
    bracket: None,
};

pub fn spec(id: FormatId) -> &'static FormatSpec {
    match id {
        FormatId::D86 => &SPEC_D86,
        FormatId::D47 => &SPEC_D47,
        FormatId::D46 => &SPEC_D46,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchRecord {
    pub stage: Stage,
    pub a: Rank,
    pub b: Rank,
    pub winner: Rank,
}

/// Win counts of one group's double round robin.
#[derive(Clone, Debug)]
pub struct GroupTable {
    pub teams: Vec<Rank>,
    pub wins: Vec<u32>,
}

/// Every unordered pair plays two independent matches; no home advantage.
pub fn play_double_round_robin(
    group: &[Rank],
    probs: &ProbTable,
    rng: &mut RngStream,
    matches: &mut Vec<MatchRecord>,
) -> GroupTable {
    let n = group.len();
    let mut wins = vec![0u32; n];
    for x in 0..n {
        for y in x + 1..n {
            for _ in 0..2 {
                let winner = sample_winner(group[x], group[y], probs, rng);
                let w = if winner == group[x] { x } else { y };
                wins[w] += 1;
                matches.push(MatchRecord {
                    stage: Stage::Group,
                    a: group[x],
                    b: group[y],
                    winner,
                });
            }
        }
    }
    GroupTable {
        teams: group.to_vec(),
        wins,
    }
}

/// Strict group ordering: descending by wins, every maximal tied block
/// resolved by an equal-odds uniform permutation.
pub fn rank_group(table: &GroupTable, rng: &mut RngStream) -> Vec<Rank> {
    let n = table.teams.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| table.wins[b].cmp(&table.wins[a]));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && table.wins[idx[end]] == table.wins[idx[start]] {
            end += 1;
        }
        if end - start > 1 {
            rng.shuffle(&mut idx[start..end]);
        }
        start = end;
    }
    idx.into_iter().map(|i| table.teams[i]).collect()
}

/// Two-leg knockout tie. A 1-1 split is resolved by one more Bernoulli draw
/// with the match-win probability, so P(a qualifies) = p^2 (3 - 2p). Only the
/// two legs are recorded as matches.
pub fn play_two_leg_tie(
    a: Rank,
    b: Rank,
    stage: Stage,
    probs: &ProbTable,
    rng: &mut RngStream,
    matches: &mut Vec<MatchRecord>,
) -> Rank {
    let w1 = sample_winner(a, b, probs, rng);
    let w2 = sample_winner(a, b, probs, rng);
    matches.push(MatchRecord { stage, a, b, winner: w1 });
    matches.push(MatchRecord { stage, a, b, winner: w2 });
    if w1 == w2 {
        w1
    } else {
        sample_winner(a, b, probs, rng)
    }
}

/// Final Four: freshly drawn single-match semi-finals, a final, and a
/// third-place match. Returns placements 1-4.
pub fn play_final_four(
    finalists: &[Rank; 4],
    probs: &ProbTable,
    rng: &mut RngStream,
    matches: &mut Vec<MatchRecord>,
) -> Result<[Rank; 4], DrawError> {
    let semis = draw::draw_final_four(finalists, rng)?;
    let mut winners = [finalists[0]; 2];
    let mut losers = [finalists[0]; 2];
    for (s, (a, b)) in semis.into_iter().enumerate() {
        let winner = sample_winner(a, b, probs, rng);
        winners[s] = winner;
        losers[s] = if winner == a { b } else { a };
        matches.push(MatchRecord { stage: Stage::FinalFour, a, b, winner });
    }
    let champion = sample_winner(winners[0], winners[1], probs, rng);
    let second = if champion == winners[0] { winners[1] } else { winners[0] };
    matches.push(MatchRecord {
        stage: Stage::FinalFour,
        a: winners[0],
        b: winners[1],
        winner: champion,
    });
    let third = sample_winner(losers[0], losers[1], probs, rng);
    let fourth = if third == losers[0] { losers[1] } else { losers[0] };
    matches.push(MatchRecord {
        stage: Stage::FinalFour,
        a: losers[0],
        b: losers[1],
        winner: third,
    });
    Ok([champion, second, third, fourth])
}

/// One replay's full outcome.
#[derive(Clone, Debug)]
pub struct TournamentResult {
    pub format: FormatId,
    pub matches: Vec<MatchRecord>,
    /// Ranks of places 1-4.
    pub placements: [Rank; 4],
    /// Group index (0..4) per team, indexed by `Rank::index`.
    pub group_of: Vec<u8>,
    /// Matches played per team, indexed by `Rank::index`.
    pub matches_played: Vec<u16>,
    /// Matches won per team, indexed by `Rank::index`.
    pub wins: Vec<u16>,
}

impl TournamentResult {
    /// Whether the team sat in one of the two top groups (meaningful for
    /// D86, where groups are treated unequally).
    pub fn in_top_groups(&self, team: Rank) -> bool {
        self.group_of[team.index()] < 2
    }
}

/// Executes one tournament replay: group stage, the format's knockout
/// (predetermined bracket or drawn, per design), and the Final Four.
pub fn run_tournament(
    format: &FormatSpec,
    groups: &GroupAssignment,
    probs: &ProbTable,
    rng: &mut RngStream,
) -> Result<TournamentResult, FormatError> {
    if groups.groups.len() != 4 {
        return Err(FormatError::MalformedGroups(format!(
            "expected 4 groups, got {}",
            groups.groups.len()
        )));
    }
    let mut seen = vec![false; format.team_count];
    for (g, group) in groups.groups.iter().enumerate() {
        if group.len() != format.group_sizes[g] {
            return Err(FormatError::MalformedGroups(format!(
                "group {g} has {} teams, expected {}",
                group.len(),
                format.group_sizes[g]
            )));
        }
        for &team in group {
            if team.index() >= format.team_count || seen[team.index()] {
                return Err(FormatError::MalformedGroups(format!(
                    "team {team} out of range or duplicated"
                )));
            }
            seen[team.index()] = true;
        }
    }

    let mut matches = Vec::with_capacity(format.total_matches);
    let mut placed: Vec<Vec<Rank>> = Vec::with_capacity(4);
    for group in &groups.groups {
        let table = play_double_round_robin(group, probs, rng, &mut matches);
        placed.push(rank_group(&table, rng));
    }

    let finalists: [Rank; 4] = match format.bracket {
        Some(bracket) => {
            let mut winners: Vec<Rank> = Vec::with_capacity(bracket.len());
            for spec in bracket {
                let resolve = |slot: Slot| match slot {
                    Slot::GroupPlace { group, place } => placed[group][place],
                    Slot::WinnerOf(idx) => winners[idx],
                };
                let a = resolve(spec.a);
                let b = resolve(spec.b);
                winners.push(play_two_leg_tie(a, b, spec.stage, probs, rng, &mut matches));
            }
            let n = winners.len();
            [winners[n - 4], winners[n - 3], winners[n - 2], winners[n - 1]]
        }
        None => {
            // D46: drawn Round of 16, then pot-based quarter-final draw
            let tables: [Vec<Rank>; 4] = [
                placed[0].clone(),
                placed[1].clone(),
                placed[2].clone(),
                placed[3].clone(),
            ];
            let ties = draw::draw_r16_d46(&tables, rng)?;
            let mut qualifiers = [tables[0][0]; 8];
            for (t, &(a, b)) in ties.iter().enumerate() {
                qualifiers[t] = play_two_leg_tie(a, b, Stage::R16, probs, rng, &mut matches);
            }
            let qf = draw::draw_qf_d46(&qualifiers[..4], &qualifiers[4..], rng)?;
            let mut winners = [qualifiers[0]; 4];
            for (t, &(a, b)) in qf.iter().enumerate() {
                winners[t] = play_two_leg_tie(a, b, Stage::QuarterFinal, probs, rng, &mut matches);
            }
            winners
        }
    };

    let placements = play_final_four(&finalists, probs, rng, &mut matches)?;
    debug_assert_eq!(matches.len(), format.total_matches);

    let mut group_of = vec![0u8; format.team_count];
    for (g, group) in groups.groups.iter().enumerate() {
        for &team in group {
            group_of[team.index()] = g as u8;
        }
    }
    let mut matches_played = vec![0u16; format.team_count];
    let mut wins = vec![0u16; format.team_count];
    for m in &matches {
        matches_played[m.a.index()] += 1;
        matches_played[m.b.index()] += 1;
        wins[m.winner.index()] += 1;
    }

    Ok(TournamentResult {
        format: format.id,
        matches,
        placements,
        group_of,
        matches_played,
        wins,
    })
}
