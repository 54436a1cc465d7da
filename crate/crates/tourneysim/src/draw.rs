//! Group composition from seeding policies and every in-tournament random
//! draw: the constrained Round of 16, quarter-final pots, and the Final Four.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::FormatSpec;
use crate::model::{Rank, RngStream};

#[derive(Debug, Error, PartialEq)]
pub enum DrawError {
    #[error("expected {expected} teams, got {got}")]
    TeamCountMismatch { expected: usize, got: usize },
    #[error("expected a pot of {expected} qualifiers, got {got}")]
    PotSizeMismatch { expected: usize, got: usize },
    #[error("duplicate team {0} among finalists")]
    DuplicateFinalist(Rank),
    #[error("group {0} has fewer than 4 placed teams")]
    ShortGroupTable(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedingVariant {
    Seeded,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Identification {
    Correct,
    Erroneous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedingPolicy {
    pub variant: SeedingVariant,
    pub identification: Identification,
}

/// Constant of the reranking score `44 * Rnd + (28 - i)`. Kept at 28 for the
/// 24-team format as well, so perceived-rank noise is identical across designs.
const SCORE_RANK_BASE: f64 = 28.0;
const SCORE_NOISE_SCALE: f64 = 44.0;

/// Rank as perceived by the seeding procedure.
///
/// The erroneous scenario demotes team 9 to perceived rank 17 and promotes
/// teams 10..=17 by one place; everything else is unchanged.
pub fn identification_adjusted_rank(i: Rank, identification: Identification) -> u32 {
    match identification {
        Identification::Correct => i.value(),
        Identification::Erroneous => match i.value() {
            9 => 17,
            l @ 10..=17 => l - 1,
            k => k,
        },
    }
}

/// Order of the `n` teams as perceived by the seeding procedure, strongest
/// first.
///
/// The random variant draws one fresh uniform per team, in rank order, and
/// sorts by descending score; score ties break by lower true rank.
pub fn perceived_ranking(n: usize, policy: SeedingPolicy, rng: &mut RngStream) -> Vec<Rank> {
    let mut order: Vec<Rank> = Rank::all(n).collect();
    match policy.variant {
        SeedingVariant::Seeded => {
            order.sort_by_key(|&i| identification_adjusted_rank(i, policy.identification));
        }
        SeedingVariant::Random => {
            let scores: Vec<f64> = order
                .iter()
                .map(|&i| {
                    let e = identification_adjusted_rank(i, policy.identification) as f64;
                    SCORE_NOISE_SCALE * rng.uniform() + (SCORE_RANK_BASE - e)
                })
                .collect();
            order.sort_by(|&a, &b| {
                scores[b.index()]
                    .partial_cmp(&scores[a.index()])
                    .unwrap()
                    .then(a.cmp(&b))
            });
        }
    }
    order
}

/// Ordered pots, each an ordered list of teams.
#[derive(Clone, Debug, PartialEq)]
pub struct PotAssignment {
    pub pots: Vec<Vec<Rank>>,
}

/// Teams of the four groups, in pot order within each group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAssignment {
    pub groups: Vec<Vec<Rank>>,
}

/// Consecutive blocks of the perceived order fill the pots in order.
pub fn assign_pots(ranking: &[Rank], format: &FormatSpec) -> Result<PotAssignment, DrawError> {
    if ranking.len() != format.team_count {
        return Err(DrawError::TeamCountMismatch {
            expected: format.team_count,
            got: ranking.len(),
        });
    }
    let pots = ranking
        .chunks(format.pot_size)
        .map(|c| c.to_vec())
        .collect();
    Ok(PotAssignment { pots })
}

/// Within each pot, a uniformly random bijection from pot members to the
/// receiving groups, independent across pots.
pub fn draw_groups(
    pots: &PotAssignment,
    format: &FormatSpec,
    rng: &mut RngStream,
) -> Result<GroupAssignment, DrawError> {
    let expected_pots = format.team_count / format.pot_size;
    if pots.pots.len() != expected_pots || pots.pots.iter().any(|p| p.len() != format.pot_size) {
        return Err(DrawError::TeamCountMismatch {
            expected: format.team_count,
            got: pots.pots.iter().map(Vec::len).sum(),
        });
    }
    let mut groups: Vec<Vec<Rank>> = vec![Vec::new(); 4];
    for (pot_idx, pot) in pots.pots.iter().enumerate() {
        let mut members = pot.clone();
        rng.shuffle(&mut members);
        // D(8+6): pots of 2, the first 8 feed groups A/B, the rest C/D
        let receiving: &[usize] = if format.pot_size == 2 {
            if pot_idx < 8 {
                &[0, 1]
            } else {
                &[2, 3]
            }
        } else {
            &[0, 1, 2, 3]
        };
        for (&team, &g) in members.iter().zip(receiving) {
            groups[g].push(team);
        }
    }
    debug_assert_eq!(
        groups.iter().map(Vec::len).collect::<Vec<_>>(),
        format.group_sizes.to_vec()
    );
    Ok(GroupAssignment { groups })
}

/// The 9 feasible group-to-group matchings of the Round of 16 draw: every
/// derangement of (A, B, C, D). `R16_MATCHINGS[k][g]` is the group whose
/// fourth-placed (or third-placed) team the winner (or runner-up) of group
/// `g` meets.
pub const R16_MATCHINGS: [[usize; 4]; 9] = [
    [1, 0, 3, 2],
    [1, 2, 3, 0],
    [1, 3, 0, 2],
    [2, 0, 3, 1],
    [2, 3, 0, 1],
    [2, 3, 1, 0],
    [3, 0, 1, 2],
    [3, 2, 0, 1],
    [3, 2, 1, 0],
];

/// Round of 16 draw of the 24-team format: one of the 9 feasible matchings
/// for winners-vs-fourths and, independently, one for runners-up-vs-thirds.
///
/// Returns the four winner-vs-fourth ties (in group order of the winner)
/// followed by the four runner-up-vs-third ties.
pub fn draw_r16_d46(
    tables: &[Vec<Rank>; 4],
    rng: &mut RngStream,
) -> Result<[(Rank, Rank); 8], DrawError> {
    for (g, t) in tables.iter().enumerate() {
        if t.len() < 4 {
            return Err(DrawError::ShortGroupTable(g));
        }
    }
    let winners_map = R16_MATCHINGS[rng.below(9)];
    let runners_map = R16_MATCHINGS[rng.below(9)];
    let mut ties = [(tables[0][0], tables[0][0]); 8];
    for g in 0..4 {
        ties[g] = (tables[g][0], tables[winners_map[g]][3]);
        ties[4 + g] = (tables[g][1], tables[runners_map[g]][2]);
    }
    Ok(ties)
}

/// Quarter-final draw of the 24-team format: a uniformly random perfect
/// matching between the two pots of four qualifiers, with no restrictions.
pub fn draw_qf_d46(
    pot1: &[Rank],
    pot2: &[Rank],
    rng: &mut RngStream,
) -> Result<[(Rank, Rank); 4], DrawError> {
    for pot in [pot1, pot2] {
        if pot.len() != 4 {
            return Err(DrawError::PotSizeMismatch {
                expected: 4,
                got: pot.len(),
            });
        }
    }
    let mut opponents = [pot2[0], pot2[1], pot2[2], pot2[3]];
    rng.shuffle(&mut opponents);
    Ok([
        (pot1[0], opponents[0]),
        (pot1[1], opponents[1]),
        (pot1[2], opponents[2]),
        (pot1[3], opponents[3]),
    ])
}

/// Final Four semi-final draw: all four teams in one pot, so one of the 3
/// pairings uniformly at random.
pub fn draw_final_four(
    finalists: &[Rank; 4],
    rng: &mut RngStream,
) -> Result<[(Rank, Rank); 2], DrawError> {
    for a in 0..4 {
        for b in a + 1..4 {
            if finalists[a] == finalists[b] {
                return Err(DrawError::DuplicateFinalist(finalists[a]));
            }
        }
    }
    let [a, b, c, d] = *finalists;
    Ok(match rng.below(3) {
        0 => [(a, b), (c, d)],
        1 => [(a, c), (b, d)],
        _ => [(a, d), (b, c)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{self, FormatId};

    fn stream(i: u64) -> RngStream {
        RngStream::new(123, i)
    }

    fn ranks(vals: &[u32]) -> Vec<Rank> {
        vals.iter().map(|&v| Rank::new(v).unwrap()).collect()
    }

    #[test]
    fn seeded_correct_is_identity() {
        let policy = SeedingPolicy {
            variant: SeedingVariant::Seeded,
            identification: Identification::Correct,
        };
        let order = perceived_ranking(28, policy, &mut stream(0));
        assert_eq!(order, Rank::all(28).collect::<Vec<_>>());
    }

    #[test]
    fn erroneous_map_values() {
        let e = |i: u32| identification_adjusted_rank(Rank::new(i).unwrap(), Identification::Erroneous);
        assert_eq!(e(9), 17);
        assert_eq!(e(10), 9);
        assert_eq!(e(17), 16);
        assert_eq!(e(1), 1);
        assert_eq!(e(8), 8);
        assert_eq!(e(18), 18);
        assert_eq!(e(28), 28);
        // e is a permutation of 1..=28
        let mut image: Vec<u32> = (1..=28).map(e).collect();
        image.sort_unstable();
        assert_eq!(image, (1..=28).collect::<Vec<_>>());
    }

    #[test]
    fn seeded_erroneous_order() {
        let policy = SeedingPolicy {
            variant: SeedingVariant::Seeded,
            identification: Identification::Erroneous,
        };
        let order = perceived_ranking(28, policy, &mut stream(0));
        let values: Vec<u32> = order.iter().map(|r| r.value()).collect();
        let expected: Vec<u32> = (1..=8)
            .chain(10..=17)
            .chain(std::iter::once(9))
            .chain(18..=28)
            .collect();
        assert_eq!(values, expected);
    }

    #[test]
    fn random_top_group_frequencies() {
        // Fig. 2 endpoints: team 1 at 0.887, team 28 at 0.253, curve decreasing
        let policy = SeedingPolicy {
            variant: SeedingVariant::Random,
            identification: Identification::Correct,
        };
        let n = 200_000;
        let mut top = [0u32; 28];
        for k in 0..n {
            let order = perceived_ranking(28, policy, &mut stream(k));
            for &team in &order[..16] {
                top[team.index()] += 1;
            }
        }
        let f = |i: usize| top[i] as f64 / n as f64;
        assert!((f(0) - 0.887).abs() < 0.005, "team 1: {}", f(0));
        assert!((f(27) - 0.253).abs() < 0.005, "team 28: {}", f(27));
        for i in 1..28 {
            assert!(f(i) < f(i - 1), "curve not decreasing at {}", i + 1);
        }
    }

    #[test]
    fn pot_blocks() {
        let d86 = format::spec(FormatId::D86);
        let identity: Vec<Rank> = Rank::all(28).collect();
        let pots = assign_pots(&identity, d86).unwrap();
        assert_eq!(pots.pots.len(), 14);
        assert_eq!(pots.pots[0], ranks(&[1, 2]));
        assert_eq!(pots.pots[7], ranks(&[15, 16]));
        assert_eq!(pots.pots[8], ranks(&[17, 18]));
        assert_eq!(pots.pots[13], ranks(&[27, 28]));

        let d47 = format::spec(FormatId::D47);
        let pots = assign_pots(&identity, d47).unwrap();
        assert_eq!(pots.pots[0], ranks(&[1, 2, 3, 4]));

        let d46 = format::spec(FormatId::D46);
        let identity24: Vec<Rank> = Rank::all(24).collect();
        let pots = assign_pots(&identity24, d46).unwrap();
        assert_eq!(pots.pots[5], ranks(&[21, 22, 23, 24]));

        assert!(assign_pots(&identity24, d86).is_err());
    }

    #[test]
    fn group_draw_shapes_and_feeding() {
        let d86 = format::spec(FormatId::D86);
        let identity: Vec<Rank> = Rank::all(28).collect();
        let pots = assign_pots(&identity, d86).unwrap();
        for k in 0..200 {
            let groups = draw_groups(&pots, d86, &mut stream(k)).unwrap();
            assert_eq!(groups.groups[0].len(), 8);
            assert_eq!(groups.groups[1].len(), 8);
            assert_eq!(groups.groups[2].len(), 6);
            assert_eq!(groups.groups[3].len(), 6);
            // pots 1-8 feed only A/B: true ranks 1..=16 never reach C/D
            for g in 2..4 {
                assert!(groups.groups[g].iter().all(|r| r.value() > 16));
            }
            // partition of the team set
            let mut all: Vec<Rank> = groups.groups.concat();
            all.sort();
            assert_eq!(all, identity);
        }
    }

    #[test]
    fn group_draw_is_uniform_per_pot() {
        let d47 = format::spec(FormatId::D47);
        let identity: Vec<Rank> = Rank::all(28).collect();
        let pots = assign_pots(&identity, d47).unwrap();
        let n = 100_000;
        // pot 3 member with true rank 9 should land in each group 1/4 of the time
        let mut counts = [0u32; 4];
        for k in 0..n {
            let groups = draw_groups(&pots, d47, &mut stream(k)).unwrap();
            for g in 0..4 {
                if groups.groups[g].contains(&Rank::new(9).unwrap()) {
                    counts[g] += 1;
                }
            }
        }
        for g in 0..4 {
            let f = counts[g] as f64 / n as f64;
            assert!((f - 0.25).abs() < 0.006, "group {g}: {f}");
        }
    }

    #[test]
    fn r16_matchings_are_the_nine_derangements() {
        // Table 1: 15 of the 24 permutations violate the restriction
        let mut derangements = 0;
        let mut perms = Vec::new();
        let idx = [0, 1, 2, 3];
        permute(&idx, &mut vec![], &mut perms);
        assert_eq!(perms.len(), 24);
        for p in &perms {
            if (0..4).all(|i| p[i] != i) {
                derangements += 1;
                assert!(R16_MATCHINGS.contains(&[p[0], p[1], p[2], p[3]]));
            }
        }
        assert_eq!(derangements, 9);
        assert_eq!(24 - derangements, 15);
    }

    fn permute(rest: &[usize], acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        for (i, &x) in rest.iter().enumerate() {
            let mut next: Vec<usize> = rest.to_vec();
            next.remove(i);
            acc.push(x);
            permute(&next, acc, out);
            acc.pop();
        }
    }

    #[test]
    fn r16_draw_marginals() {
        // 3 of the 9 matchings send A -> B, so P(winner of A meets fourth of B) = 1/3
        let tables: [Vec<Rank>; 4] = [
            ranks(&[1, 2, 3, 4]),
            ranks(&[5, 6, 7, 8]),
            ranks(&[9, 10, 11, 12]),
            ranks(&[13, 14, 15, 16]),
        ];
        let n = 100_000;
        let mut a_meets_b4 = 0u32;
        for k in 0..n {
            let ties = draw_r16_d46(&tables, &mut stream(k)).unwrap();
            for (a, b) in ties {
                // never against a team from the own group
                let ga = tables.iter().position(|t| t.contains(&a)).unwrap();
                let gb = tables.iter().position(|t| t.contains(&b)).unwrap();
                assert_ne!(ga, gb);
            }
            if ties[0].1 == tables[1][3] {
                a_meets_b4 += 1;
            }
        }
        let f = a_meets_b4 as f64 / n as f64;
        assert!((f - 1.0 / 3.0).abs() < 0.006, "{f}");
    }

    #[test]
    fn qf_draw_uniform_matching() {
        let pot1 = ranks(&[1, 2, 3, 4]);
        let pot2 = ranks(&[5, 6, 7, 8]);
        let n = 100_000;
        let mut first_pair = [0u32; 4];
        for k in 0..n {
            let ties = draw_qf_d46(&pot1, &pot2, &mut stream(k)).unwrap();
            let opp = ties[0].1.value() as usize - 5;
            first_pair[opp] += 1;
        }
        for (o, c) in first_pair.iter().enumerate() {
            let f = *c as f64 / n as f64;
            assert!((f - 0.25).abs() < 0.006, "opponent {o}: {f}");
        }
        assert!(draw_qf_d46(&pot1[..3], &pot2, &mut stream(0)).is_err());
    }

    #[test]
    fn final_four_draw_covers_all_pairings() {
        let finalists = [
            Rank::new(1).unwrap(),
            Rank::new(2).unwrap(),
            Rank::new(3).unwrap(),
            Rank::new(4).unwrap(),
        ];
        let n = 100_000;
        let mut meet_12 = 0u32;
        let mut seen = [false; 3];
        for k in 0..n {
            let semis = draw_final_four(&finalists, &mut stream(k)).unwrap();
            let joins = |p: (Rank, Rank), x: u32, y: u32| {
                (p.0.value() == x && p.1.value() == y) || (p.0.value() == y && p.1.value() == x)
            };
            if joins(semis[0], 1, 2) || joins(semis[1], 1, 2) {
                meet_12 += 1;
                seen[0] = true;
            } else if joins(semis[0], 1, 3) || joins(semis[1], 1, 3) {
                seen[1] = true;
            } else {
                seen[2] = true;
            }
        }
        let f = meet_12 as f64 / n as f64;
        assert!((f - 1.0 / 3.0).abs() < 0.006, "{f}");
        assert!(seen.iter().all(|&s| s));

        let dup = [finalists[0], finalists[0], finalists[2], finalists[3]];
        assert!(draw_final_four(&dup, &mut stream(0)).is_err());
    }
}
