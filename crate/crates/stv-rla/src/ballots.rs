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

//! Election and ballot domain types, the Droop quota, ranking projection, and
//! ballot-file ingestion.
//!
//! Candidate names are mapped to dense integer ids at parse time; everything
//! downstream works on ids. All types are immutable after construction and
//! safe to share across threads.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// Dense 0-based index into an election's candidate name table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateId(pub u32);

impl CandidateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// An ordered preference sequence without duplicates. It may be empty and
/// need not mention every candidate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Ranking(Vec<CandidateId>);

impl Ranking {
    /// Builds a ranking, rejecting duplicate candidates.
    pub fn new(prefs: Vec<CandidateId>) -> Result<Ranking> {
        let mut seen = BTreeSet::new();
        for c in &prefs {
            if !seen.insert(*c) {
                return Err(Error::DuplicateCandidate {
                    ballot: 0,
                    name: c.to_string(),
                });
            }
        }
        Ok(Ranking(prefs))
    }

    /// Builds a ranking the caller already knows to be duplicate-free.
    pub(crate) fn from_unchecked(prefs: Vec<CandidateId>) -> Ranking {
        debug_assert_eq!(prefs.iter().collect::<BTreeSet<_>>().len(), prefs.len());
        Ranking(prefs)
    }

    pub fn prefs(&self) -> &[CandidateId] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// The largest subsequence containing only candidates in `keep`, with the
    /// relative order preserved.
    pub fn project(&self, keep: &BTreeSet<CandidateId>) -> Ranking {
        Ranking(project(&self.0, keep))
    }

    /// First preference, absent when the ranking is empty.
    pub fn first_preference(&self) -> Option<CandidateId> {
        first_preference(&self.0)
    }
}

impl std::ops::Deref for Ranking {
    type Target = [CandidateId];
    fn deref(&self) -> &[CandidateId] {
        &self.0
    }
}

/// Projects a preference sequence onto a keep-set, preserving order.
pub fn project(prefs: &[CandidateId], keep: &BTreeSet<CandidateId>) -> Vec<CandidateId> {
    prefs.iter().copied().filter(|c| keep.contains(c)).collect()
}

/// First element of a preference sequence, if any.
pub fn first_preference(prefs: &[CandidateId]) -> Option<CandidateId> {
    prefs.first().copied()
}

/// A number of identical ballots sharing one ranking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallotGroup {
    pub ranking: Ranking,
    pub count: u64,
}

/// The Droop quota `floor(total / (seats + 1)) + 1`.
pub fn droop_quota(total_valid: u64, seats: u32) -> Result<u64> {
    if seats == 0 {
        return Err(Error::InvalidSeats);
    }
    Ok(total_valid / (seats as u64 + 1) + 1)
}

/// A complete election: candidates, ballot multiset, seat count, and quota.
///
/// Identical rankings are merged on construction. The quota defaults to the
/// Droop quota of the valid total but may be set explicitly, which supports
/// contests whose published threshold was computed before ballot ingestion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Election {
    pub name: String,
    candidates: Vec<String>,
    ballots: Vec<BallotGroup>,
    seats: u32,
    quota: u64,
    total_valid: u64,
}

impl Election {
    /// Builds an election, merging identical rankings and computing the Droop
    /// quota unless `quota` overrides it.
    pub fn new(
        name: impl Into<String>,
        candidates: Vec<String>,
        ballots: Vec<BallotGroup>,
        seats: u32,
        quota: Option<u64>,
    ) -> Result<Election> {
        if seats == 0 {
            return Err(Error::InvalidSeats);
        }
        let merged = merge_groups(ballots);
        let total_valid: u64 = merged.iter().map(|g| g.count).sum();
        let quota = match quota {
            Some(q) => q,
            None => droop_quota(total_valid, seats)?,
        };
        Ok(Election {
            name: name.into(),
            candidates,
            ballots: merged,
            seats,
            quota,
            total_valid,
        })
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn candidate_name(&self, c: CandidateId) -> &str {
        &self.candidates[c.index()]
    }

    pub fn candidate_names(&self) -> &[String] {
        &self.candidates
    }

    pub fn candidate_ids(&self) -> impl Iterator<Item = CandidateId> {
        (0..self.candidates.len() as u32).map(CandidateId)
    }

    pub fn ballots(&self) -> &[BallotGroup] {
        &self.ballots
    }

    pub fn seats(&self) -> u32 {
        self.seats
    }

    pub fn quota(&self) -> u64 {
        self.quota
    }

    pub fn total_valid(&self) -> u64 {
        self.total_valid
    }

    /// Per-candidate first-preference tallies `t_{c,1}`.
    pub fn first_preference_tallies(&self) -> Vec<u64> {
        let mut tallies = vec![0u64; self.candidates.len()];
        for group in &self.ballots {
            if let Some(c) = group.ranking.first_preference() {
                tallies[c.index()] += group.count;
            }
        }
        tallies
    }

    /// Number of ballots on which `c` is ranked anywhere.
    pub fn mention_count(&self, c: CandidateId) -> u64 {
        self.ballots
            .iter()
            .filter(|g| g.ranking.contains(&c))
            .map(|g| g.count)
            .sum()
    }

    /// The election obtained by erasing `removed` from every ranking, as after
    /// a batch elimination redistributes those ballots at full value.
    ///
    /// The candidate table, seat count, quota, and ballot counts are kept;
    /// only rankings shrink (possibly to empty, which then count as exhausted).
    pub fn without_candidates(&self, removed: &BTreeSet<CandidateId>) -> Election {
        let keep: BTreeSet<CandidateId> =
            self.candidate_ids().filter(|c| !removed.contains(c)).collect();
        let ballots = self
            .ballots
            .iter()
            .map(|g| BallotGroup {
                ranking: g.ranking.project(&keep),
                count: g.count,
            })
            .collect();
        Election {
            name: self.name.clone(),
            candidates: self.candidates.clone(),
            ballots: merge_groups(ballots),
            seats: self.seats,
            quota: self.quota,
            total_valid: self.total_valid,
        }
    }

    /// Parses an election from bytes in the given format.
    pub fn parse(bytes: &[u8], format: BallotFormat) -> Result<Election> {
        match format {
            BallotFormat::CanonicalJson => Self::from_json(bytes),
            BallotFormat::Blt => Self::from_blt(bytes),
        }
    }

    /// Parses the canonical JSON ballot format.
    pub fn from_json(bytes: &[u8]) -> Result<Election> {
        let raw: RawElection = serde_json::from_slice(bytes)?;
        let seats = raw.seats.ok_or(Error::MissingField("seats"))?;
        let mut index = HashMap::new();
        for (i, name) in raw.candidates.iter().enumerate() {
            index.insert(name.as_str(), CandidateId(i as u32));
        }
        let mut ballots = Vec::with_capacity(raw.ballots.len());
        for (ballot_no, raw_group) in raw.ballots.iter().enumerate() {
            if raw_group.count <= 0 {
                return Err(Error::NonPositiveCount { ballot: ballot_no });
            }
            let mut prefs = Vec::with_capacity(raw_group.ranking.len());
            let mut seen = BTreeSet::new();
            for name in &raw_group.ranking {
                let id = *index.get(name.as_str()).ok_or_else(|| Error::UnknownCandidate {
                    ballot: ballot_no,
                    name: name.clone(),
                })?;
                if !seen.insert(id) {
                    return Err(Error::DuplicateCandidate {
                        ballot: ballot_no,
                        name: name.clone(),
                    });
                }
                prefs.push(id);
            }
            ballots.push(BallotGroup {
                ranking: Ranking::from_unchecked(prefs),
                count: raw_group.count as u64,
            });
        }
        Election::new(raw.name, raw.candidates, ballots, seats, raw.quota)
    }

    /// Parses the integer-coded BLT preferential format: a `candidates seats`
    /// header, weighted ballot lines each terminated by `0`, a lone `0` line,
    /// quoted candidate names, and a title line.
    pub fn from_blt(bytes: &[u8]) -> Result<Election> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Malformed {
            format: "BLT",
            message: e.to_string(),
        })?;
        let malformed = |message: String| Error::Malformed {
            format: "BLT",
            message,
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| malformed("empty file".into()))?;
        let mut head = header.split_whitespace();
        let n_candidates: usize = head
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| malformed("bad candidate count in header".into()))?;
        let seats: u32 = head
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| malformed("bad seat count in header".into()))?;

        let mut ballots = Vec::new();
        let mut ballot_no = 0usize;
        for line in lines.by_ref() {
            let tokens: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| malformed(format!("non-numeric ballot line {line:?}")))?;
            if tokens == [0] {
                break;
            }
            if tokens.first().copied().unwrap_or(0) < 0 {
                // Withdrawal line; withdrawn candidates are not supported.
                return Err(malformed("withdrawn candidates are not supported".into()));
            }
            let count = tokens[0];
            if count <= 0 {
                return Err(Error::NonPositiveCount { ballot: ballot_no });
            }
            let body = &tokens[1..];
            if body.last().copied() != Some(0) {
                return Err(malformed(format!("ballot line not terminated by 0: {line:?}")));
            }
            let mut prefs = Vec::new();
            let mut seen = BTreeSet::new();
            for &t in &body[..body.len() - 1] {
                if t < 1 || t as usize > n_candidates {
                    return Err(malformed(format!("candidate number {t} out of range")));
                }
                let id = CandidateId(t as u32 - 1);
                if !seen.insert(id) {
                    return Err(Error::DuplicateCandidate {
                        ballot: ballot_no,
                        name: format!("{t}"),
                    });
                }
                prefs.push(id);
            }
            ballots.push(BallotGroup {
                ranking: Ranking::from_unchecked(prefs),
                count: count as u64,
            });
            ballot_no += 1;
        }

        let mut names = Vec::with_capacity(n_candidates);
        for line in lines.by_ref() {
            names.push(line.trim().trim_matches('"').to_string());
            if names.len() == n_candidates {
                break;
            }
        }
        if names.len() != n_candidates {
            return Err(malformed("missing candidate names".into()));
        }
        let title = lines
            .next()
            .map(|l| l.trim().trim_matches('"').to_string())
            .unwrap_or_default();
        Election::new(title, names, ballots, seats, None)
    }

    /// Serializes to the canonical JSON ballot format.
    pub fn to_canonical_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "seats": self.seats,
            "quota": self.quota,
            "candidates": self.candidates,
            "ballots": self.ballots.iter().map(|g| {
                serde_json::json!({
                    "ranking": g.ranking.prefs().iter()
                        .map(|c| self.candidate_name(*c))
                        .collect::<Vec<_>>(),
                    "count": g.count,
                })
            }).collect::<Vec<_>>(),
        })
    }
}

/// Supported ballot-file formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallotFormat {
    CanonicalJson,
    Blt,
}

#[derive(Deserialize)]
struct RawElection {
    #[serde(default)]
    name: String,
    seats: Option<u32>,
    quota: Option<u64>,
    candidates: Vec<String>,
    #[serde(default)]
    ballots: Vec<RawGroup>,
}

#[derive(Deserialize)]
struct RawGroup {
    ranking: Vec<String>,
    count: i64,
}

fn merge_groups(ballots: Vec<BallotGroup>) -> Vec<BallotGroup> {
    let mut order: Vec<Ranking> = Vec::new();
    let mut counts: HashMap<Ranking, u64> = HashMap::new();
    for group in ballots {
        if !counts.contains_key(&group.ranking) {
            order.push(group.ranking.clone());
        }
        *counts.entry(group.ranking).or_insert(0) += group.count;
    }
    order
        .into_iter()
        .map(|ranking| {
            let count = counts[&ranking];
            BallotGroup { ranking, count }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(i: u32) -> CandidateId {
        CandidateId(i)
    }

    fn ranking(ids: &[u32]) -> Ranking {
        Ranking::from_unchecked(ids.iter().map(|&i| c(i)).collect())
    }

    #[test]
    fn droop_quota_matches_known_contests() {
        assert_eq!(droop_quota(21001, 2).unwrap(), 7001);
        assert_eq!(droop_quota(30001, 2).unwrap(), 10001);
        assert_eq!(droop_quota(95625, 2).unwrap(), 31876);
        assert_eq!(droop_quota(3, 1).unwrap(), 2);
    }

    #[test]
    fn droop_quota_rejects_zero_seats() {
        assert!(matches!(droop_quota(10, 0), Err(Error::InvalidSeats)));
    }

    #[test]
    fn projection_keeps_relative_order() {
        let keep: BTreeSet<_> = [c(1), c(2)].into();
        assert_eq!(ranking(&[0, 1, 3, 2]).project(&keep), ranking(&[1, 2]));
        let keep: BTreeSet<_> = [c(1), c(2), c(3), c(4)].into();
        assert_eq!(ranking(&[5, 3, 6, 1, 0]).project(&keep), ranking(&[3, 1]));
        assert_eq!(ranking(&[0, 1]).project(&BTreeSet::new()), ranking(&[]));
    }

    #[test]
    fn first_preference_of_rankings() {
        assert_eq!(ranking(&[0, 2]).first_preference(), Some(c(0)));
        assert_eq!(ranking(&[]).first_preference(), None);
        let keep: BTreeSet<_> = [c(2)].into();
        assert_eq!(ranking(&[0, 2]).project(&keep).first_preference(), Some(c(2)));
    }

    pub(crate) fn demo_json() -> &'static str {
        r#"{
            "name": "two-seat demo",
            "seats": 2,
            "candidates": ["c1", "c2", "c3", "c4", "c5"],
            "ballots": [
                {"ranking": ["c1", "c3"], "count": 8001},
                {"ranking": ["c1"], "count": 1000},
                {"ranking": ["c2", "c3", "c4"], "count": 3000},
                {"ranking": ["c3", "c4"], "count": 5000},
                {"ranking": ["c4", "c1", "c2"], "count": 3950},
                {"ranking": ["c5", "c2"], "count": 50}
            ]
        }"#
    }

    #[test]
    fn parses_canonical_json() {
        let e = Election::from_json(demo_json().as_bytes()).unwrap();
        assert_eq!(e.total_valid(), 21001);
        assert_eq!(e.quota(), 7001);
        assert_eq!(e.first_preference_tallies(), vec![9001, 3000, 5000, 3950, 50]);
    }

    #[test]
    fn duplicate_candidate_in_ranking_is_rejected() {
        let bad = r#"{"seats": 1, "candidates": ["c1"],
                      "ballots": [{"ranking": ["c1", "c1"], "count": 1}]}"#;
        match Election::from_json(bad.as_bytes()) {
            Err(Error::DuplicateCandidate { ballot, name }) => {
                assert_eq!(ballot, 0);
                assert_eq!(name, "c1");
            }
            other => panic!("expected duplicate-candidate error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_candidate_is_rejected() {
        let bad = r#"{"seats": 1, "candidates": ["c1"],
                      "ballots": [{"ranking": ["zz"], "count": 1}]}"#;
        assert!(matches!(
            Election::from_json(bad.as_bytes()),
            Err(Error::UnknownCandidate { ballot: 0, .. })
        ));
    }

    #[test]
    fn non_positive_count_is_rejected() {
        let bad = r#"{"seats": 1, "candidates": ["c1"],
                      "ballots": [{"ranking": ["c1"], "count": 0}]}"#;
        assert!(matches!(
            Election::from_json(bad.as_bytes()),
            Err(Error::NonPositiveCount { ballot: 0 })
        ));
    }

    #[test]
    fn missing_seats_is_rejected() {
        let bad = r#"{"candidates": ["c1"], "ballots": []}"#;
        assert!(matches!(
            Election::from_json(bad.as_bytes()),
            Err(Error::MissingField("seats"))
        ));
    }

    #[test]
    fn explicit_quota_is_honored() {
        let json = r#"{
            "name": "board election",
            "seats": 2,
            "quota": 31876,
            "candidates": ["Brandt", "Pree-Stinson", "Salica", "Nikiforakis", "UWI"],
            "ballots": [{"ranking": ["Brandt"], "count": 95625}]
        }"#;
        let e = Election::from_json(json.as_bytes()).unwrap();
        assert_eq!(e.quota(), 31876);
        assert_eq!(e.total_valid(), 95625);
    }

    #[test]
    fn identical_rankings_merge_on_load() {
        let json = r#"{"seats": 1, "candidates": ["a", "b"],
                       "ballots": [{"ranking": ["a", "b"], "count": 2},
                                   {"ranking": ["a", "b"], "count": 3}]}"#;
        let e = Election::from_json(json.as_bytes()).unwrap();
        assert_eq!(e.ballots().len(), 1);
        assert_eq!(e.ballots()[0].count, 5);
    }

    #[test]
    fn blt_round_trip() {
        let blt = "5 2\n8001 1 3 0\n1000 1 0\n3000 2 3 4 0\n5000 3 4 0\n3950 4 1 2 0\n50 5 2 0\n0\n\"c1\"\n\"c2\"\n\"c3\"\n\"c4\"\n\"c5\"\n\"two-seat demo\"\n";
        let e = Election::from_blt(blt.as_bytes()).unwrap();
        assert_eq!(e.total_valid(), 21001);
        assert_eq!(e.quota(), 7001);
        assert_eq!(e.name, "two-seat demo");
        assert_eq!(e.first_preference_tallies(), vec![9001, 3000, 5000, 3950, 50]);
    }

    #[test]
    fn empty_rankings_count_toward_the_total() {
        let json = r#"{"seats": 1, "candidates": ["a"],
                       "ballots": [{"ranking": [], "count": 4},
                                   {"ranking": ["a"], "count": 5}]}"#;
        let e = Election::from_json(json.as_bytes()).unwrap();
        assert_eq!(e.total_valid(), 9);
        assert_eq!(e.quota(), 5);
    }

    fn arb_ranking(max_candidates: u32) -> impl Strategy<Value = Ranking> {
        proptest::sample::subsequence((0..max_candidates).collect::<Vec<_>>(), 0..=max_candidates as usize)
            .prop_shuffle()
            .prop_map(|ids| Ranking::from_unchecked(ids.into_iter().map(CandidateId).collect()))
    }

    proptest! {
        #[test]
        fn projection_composes_by_intersection(
            r in arb_ranking(6),
            t in proptest::collection::btree_set(0..6u32, 0..=6),
            s in proptest::collection::btree_set(0..6u32, 0..=6),
        ) {
            let t: BTreeSet<_> = t.into_iter().map(CandidateId).collect();
            let s: BTreeSet<_> = s.into_iter().map(CandidateId).collect();
            let s_inside_t: BTreeSet<_> = s.intersection(&t).copied().collect();
            prop_assert_eq!(
                r.project(&t).project(&s_inside_t),
                r.project(&s_inside_t)
            );
        }

        #[test]
        fn projection_is_idempotent_and_full_set_is_identity(
            r in arb_ranking(6),
            s in proptest::collection::btree_set(0..6u32, 0..=6),
        ) {
            let s: BTreeSet<_> = s.into_iter().map(CandidateId).collect();
            let once = r.project(&s);
            prop_assert_eq!(once.project(&s), once);
            let all: BTreeSet<_> = (0..6).map(CandidateId).collect();
            prop_assert_eq!(r.project(&all), r);
        }

        #[test]
        fn droop_quota_bounds(total in 0u64..1_000_000, seats in 1u32..6) {
            let q = droop_quota(total, seats).unwrap();
            // q > total/(seats+1), and no seats+1 candidates can all reach q.
            prop_assert!(q as u128 * (seats as u128 + 1) > total as u128);
        }

        #[test]
        fn parse_serialize_parse_round_trips(
            counts in proptest::collection::vec(1u64..50, 1..8),
            seed in proptest::collection::vec(proptest::collection::vec(0u32..4, 0..4), 1..8),
        ) {
            let names: Vec<String> = (0..4).map(|i| format!("cand{i}")).collect();
            let ballots: Vec<BallotGroup> = counts.iter().zip(&seed).map(|(&count, ids)| {
                let mut seen = BTreeSet::new();
                let prefs: Vec<CandidateId> = ids.iter()
                    .filter(|&&i| seen.insert(i))
                    .map(|&i| CandidateId(i))
                    .collect();
                BallotGroup { ranking: Ranking::from_unchecked(prefs), count }
            }).collect();
            let e = Election::new("round trip", names, ballots, 2, None).unwrap();
            let json = serde_json::to_vec(&e.to_canonical_json()).unwrap();
            let reparsed = Election::from_json(&json).unwrap();
            prop_assert_eq!(e, reparsed);
        }
    }
}
