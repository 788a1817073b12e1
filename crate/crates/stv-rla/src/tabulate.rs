// Copyright 2026 The stv-rla Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Exact-arithmetic US-style STV tabulation with an optional batch-elimination
//! pre-step, producing a full audit-ready trace.
//!
//! Every ballot starts at value 1. Candidates whose tally reaches the quota
//! are seated in surplus order; their ballots are reweighted by the transfer
//! value `(t - Q)/t` and passed to the next eligible preference. When nobody
//! has a quota the smallest tally is eliminated and its ballots move at their
//! current value. All tallies are exact rationals, so elimination order can
//! never be flipped by rounding drift.

use crate::ballots::{CandidateId, Election};
use crate::{ratio_from_u64, Error, Ratio, Result};
use num::{One, Zero};
use std::collections::BTreeSet;

/// How equal-smallest tallies (or equal surpluses) are resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// Break ties toward the lowest candidate id and record them in the trace.
    #[default]
    LowestId,
    /// Refuse to tabulate past a tie.
    Strict,
}

/// Tabulation switches.
#[derive(Clone, Copy, Debug, Default)]
pub struct TabulateOptions {
    /// Run a batch elimination before any election and redistribute those
    /// ballots at value 1.
    pub batch_first: bool,
    pub tie_break: TieBreak,
}

/// What happened in one round.
#[derive(Clone, Debug, PartialEq)]
pub enum RoundAction {
    BatchEliminate { eliminated: Vec<CandidateId> },
    Eliminate { candidate: CandidateId },
    Elect { candidate: CandidateId, transfer_value: Ratio },
    ElectRemaining { candidates: Vec<CandidateId> },
}

/// One round of the trace: start-of-round tallies, the action taken, and the
/// cumulative exhausted value once the action's redistribution settled.
#[derive(Clone, Debug)]
pub struct Round {
    /// 1-based round number; a batch-elimination pre-step is round 0.
    pub round: usize,
    /// Per-candidate tallies at the start of the round. Candidates who have
    /// already left (seated or eliminated) show zero; a seated candidate's
    /// retained quota is tracked separately for value conservation.
    pub tallies: Vec<Ratio>,
    pub action: RoundAction,
    /// Cumulative exhausted value after this round's redistribution.
    pub exhausted: Ratio,
    /// Set of tied candidates when a tie had to be broken this round.
    pub tie: Option<Vec<CandidateId>>,
}

/// Complete record of a tabulation.
#[derive(Clone, Debug)]
pub struct TabulationTrace {
    pub rounds: Vec<Round>,
    /// Seated candidates in seating order; always exactly `seats` long.
    pub winners: Vec<CandidateId>,
    /// Integer tallies at the start of round 1, after any batch elimination
    /// has redistributed its ballots at value 1.
    pub first_pref_tallies: Vec<u64>,
    pub batch_eliminated: Vec<CandidateId>,
    pub quota: u64,
    pub total_valid: u64,
}

impl TabulationTrace {
    /// The transfer value of the first seated candidate, when the first
    /// action after any batch elimination was an election.
    pub fn first_round_transfer(&self) -> Option<(CandidateId, Ratio)> {
        let first = self.rounds.iter().find(|r| r.round == 1)?;
        match &first.action {
            RoundAction::Elect {
                candidate,
                transfer_value,
            } => Some((*candidate, transfer_value.clone())),
            _ => None,
        }
    }

    /// True when some candidate reached a quota on first preferences (after
    /// any batch elimination), i.e. round 1 opened with an election.
    pub fn first_round_winner_criterion(&self) -> bool {
        self.first_round_transfer().is_some()
    }
}

/// The exact transfer value `(tally - quota)/tally`.
pub fn transfer_value(tally: &Ratio, quota: u64) -> Result<Ratio> {
    let quota_r = ratio_from_u64(quota);
    if tally < &quota_r || quota == 0 {
        return Err(Error::TallyBelowQuota {
            tally: tally.to_string(),
            quota,
        });
    }
    Ok((tally - &quota_r) / tally)
}

/// Candidates with no mathematical possibility of winning: everyone outside
/// the top `seats` first-preference tallies whose total mentions fall strictly
/// below the smallest top tally.
pub fn batch_eliminate(election: &Election) -> BTreeSet<CandidateId> {
    let first_prefs = election.first_preference_tallies();
    let mut order: Vec<CandidateId> = election.candidate_ids().collect();
    // Highest first-preference tally first; ties toward the lowest id.
    order.sort_by_key(|c| (std::cmp::Reverse(first_prefs[c.index()]), c.0));
    let top: BTreeSet<CandidateId> = order.iter().take(election.seats() as usize).copied().collect();
    let threshold = top.iter().map(|c| first_prefs[c.index()]).min().unwrap_or(0);
    election
        .candidate_ids()
        .filter(|c| !top.contains(c) && election.mention_count(*c) < threshold)
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Standing,
    Elected,
    Eliminated,
}

struct Pile {
    prefs: std::rc::Rc<Vec<CandidateId>>,
    count: u64,
    value: Ratio,
}

/// Runs the full tabulation and returns its trace.
pub fn tabulate(election: &Election, options: TabulateOptions) -> Result<TabulationTrace> {
    let n_candidates = election.candidate_count();
    let seats = election.seats();
    if n_candidates < seats as usize {
        return Err(Error::TooFewCandidates {
            seats,
            candidates: n_candidates,
        });
    }
    let quota = election.quota();
    let quota_r = ratio_from_u64(quota);

    let mut status = vec![Status::Standing; n_candidates];
    let mut tallies: Vec<Ratio> = vec![Ratio::zero(); n_candidates];
    let mut piles: Vec<Vec<Pile>> = vec![Vec::new(); n_candidates];
    let mut exhausted = Ratio::zero();
    let mut retained_quota = Ratio::zero();
    let mut rounds = Vec::new();
    let mut winners = Vec::new();
    let mut batch_eliminated = Vec::new();

    for group in election.ballots() {
        let prefs = std::rc::Rc::new(group.ranking.prefs().to_vec());
        match prefs.first() {
            Some(c) => {
                tallies[c.index()] += ratio_from_u64(group.count);
                piles[c.index()].push(Pile {
                    prefs,
                    count: group.count,
                    value: Ratio::one(),
                });
            }
            None => exhausted += ratio_from_u64(group.count),
        }
    }

    if options.batch_first {
        let batch = batch_eliminate(election);
        if !batch.is_empty() {
            let start_tallies = tallies.clone();
            // Batch-eliminated candidates cannot receive transfers (their
            // mentions are below every top tally), so the redistribution
            // order within the batch is immaterial: everything moves in one
            // pass at value 1 to the first preference outside the batch.
            let eligible: BTreeSet<CandidateId> = election
                .candidate_ids()
                .filter(|c| !batch.contains(c))
                .collect();
            for c in &batch {
                status[c.index()] = Status::Eliminated;
                tallies[c.index()] = Ratio::zero();
                let moved = std::mem::take(&mut piles[c.index()]);
                for pile in moved {
                    debug_assert!(pile.value.is_one());
                    match pile.prefs.iter().find(|p| eligible.contains(p)) {
                        Some(next) => {
                            tallies[next.index()] += ratio_from_u64(pile.count);
                            piles[next.index()].push(pile);
                        }
                        None => exhausted += ratio_from_u64(pile.count),
                    }
                }
            }
            batch_eliminated = batch.iter().copied().collect();
            rounds.push(Round {
                round: 0,
                tallies: start_tallies,
                action: RoundAction::BatchEliminate {
                    eliminated: batch_eliminated.clone(),
                },
                exhausted: exhausted.clone(),
                tie: None,
            });
        }
    }

    use num::ToPrimitive;
    let first_pref_tallies: Vec<u64> = tallies
        .iter()
        .map(|t| t.to_integer().to_u64().expect("integer round-1 tally"))
        .collect();

    let mut round_no = 1usize;
    loop {
        debug_assert!({
            let circulating: Ratio = tallies.iter().sum();
            circulating + &retained_quota + &exhausted == ratio_from_u64(election.total_valid())
        });

        if winners.len() == seats as usize {
            break;
        }
        let standing: Vec<CandidateId> = election
            .candidate_ids()
            .filter(|c| status[c.index()] == Status::Standing)
            .collect();
        let seats_left = seats as usize - winners.len();
        if standing.len() <= seats_left {
            let mut remaining = standing.clone();
            remaining.sort_by_key(|c| (std::cmp::Reverse(tallies[c.index()].clone()), c.0));
            for c in &remaining {
                status[c.index()] = Status::Elected;
                winners.push(*c);
            }
            rounds.push(Round {
                round: round_no,
                tallies: tallies.clone(),
                action: RoundAction::ElectRemaining { candidates: remaining },
                exhausted: exhausted.clone(),
                tie: None,
            });
            break;
        }

        let over_quota: Vec<CandidateId> = standing
            .iter()
            .copied()
            .filter(|c| tallies[c.index()] >= quota_r)
            .collect();

        if !over_quota.is_empty() {
            // Seat the largest surplus first; with one fixed quota that is
            // simply the largest tally.
            let best = over_quota
                .iter()
                .map(|c| &tallies[c.index()])
                .max()
                .unwrap()
                .clone();
            let tied: Vec<CandidateId> = over_quota
                .iter()
                .copied()
                .filter(|c| tallies[c.index()] == best)
                .collect();
            let tie = record_tie(&tied, options.tie_break, election)?;
            let winner = tied[0];
            let start_tallies = tallies.clone();
            let tally = tallies[winner.index()].clone();
            let tau = transfer_value(&tally, quota)?;

            status[winner.index()] = Status::Elected;
            winners.push(winner);
            // Eligibility is frozen before the distribution starts; a
            // candidate crossing the quota mid-distribution keeps receiving
            // ballots from this pile. (The alternative — re-checking after
            // every group — would make the result depend on pile order.)
            let eligible = eligible_set(election, &status, &tallies, &quota_r);
            tallies[winner.index()] = Ratio::zero();
            retained_quota += &quota_r;
            let moved = std::mem::take(&mut piles[winner.index()]);
            for mut pile in moved {
                pile.value *= &tau;
                if pile.value.is_zero() {
                    continue;
                }
                let amount = &pile.value * ratio_from_u64(pile.count);
                match pile.prefs.iter().find(|p| eligible.contains(p)) {
                    Some(next) => {
                        tallies[next.index()] += amount;
                        piles[next.index()].push(pile);
                    }
                    None => exhausted += amount,
                }
            }
            rounds.push(Round {
                round: round_no,
                tallies: start_tallies,
                action: RoundAction::Elect {
                    candidate: winner,
                    transfer_value: tau,
                },
                exhausted: exhausted.clone(),
                tie,
            });
        } else {
            let worst = standing
                .iter()
                .map(|c| &tallies[c.index()])
                .min()
                .unwrap()
                .clone();
            let tied: Vec<CandidateId> = standing
                .iter()
                .copied()
                .filter(|c| tallies[c.index()] == worst)
                .collect();
            let tie = record_tie(&tied, options.tie_break, election)?;
            let loser = tied[0];
            let start_tallies = tallies.clone();

            status[loser.index()] = Status::Eliminated;
            let eligible = eligible_set(election, &status, &tallies, &quota_r);
            tallies[loser.index()] = Ratio::zero();
            let moved = std::mem::take(&mut piles[loser.index()]);
            for pile in moved {
                if pile.value.is_zero() {
                    continue;
                }
                let amount = &pile.value * ratio_from_u64(pile.count);
                match pile.prefs.iter().find(|p| eligible.contains(p)) {
                    Some(next) => {
                        tallies[next.index()] += amount;
                        piles[next.index()].push(pile);
                    }
                    None => exhausted += amount,
                }
            }
            rounds.push(Round {
                round: round_no,
                tallies: start_tallies,
                action: RoundAction::Eliminate { candidate: loser },
                exhausted: exhausted.clone(),
                tie,
            });
        }
        round_no += 1;
    }

    Ok(TabulationTrace {
        rounds,
        winners,
        first_pref_tallies,
        batch_eliminated,
        quota,
        total_valid: election.total_valid(),
    })
}

/// Candidates eligible to receive ballots: standing with less than a quota.
fn eligible_set(
    election: &Election,
    status: &[Status],
    tallies: &[Ratio],
    quota_r: &Ratio,
) -> BTreeSet<CandidateId> {
    election
        .candidate_ids()
        .filter(|c| status[c.index()] == Status::Standing && &tallies[c.index()] < quota_r)
        .collect()
}

fn record_tie(
    tied: &[CandidateId],
    tie_break: TieBreak,
    election: &Election,
) -> Result<Option<Vec<CandidateId>>> {
    if tied.len() < 2 {
        return Ok(None);
    }
    match tie_break {
        TieBreak::LowestId => Ok(Some(tied.to_vec())),
        TieBreak::Strict => Err(Error::Tie {
            names: tied
                .iter()
                .map(|c| election.candidate_name(*c).to_string())
                .collect(),
        }),
    }
}
