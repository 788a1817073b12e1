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

//! Unit-test fixtures shared across module tests.

use crate::ballots::{BallotGroup, CandidateId, Election, Ranking};

pub(crate) fn group(ids: &[u32], count: u64) -> BallotGroup {
    BallotGroup {
        ranking: Ranking::from_unchecked(ids.iter().map(|&i| CandidateId(i)).collect()),
        count,
    }
}

/// Five candidates, 21001 ballots, quota 7001. c1 (id 0) opens with 9001
/// first preferences, so tabulation seats c1 then c3.
pub(crate) fn demo_election() -> Election {
    Election::new(
        "two-seat demo",
        (1..=5).map(|i| format!("c{i}")).collect(),
        vec![
            group(&[0, 2], 8001),
            group(&[0], 1000),
            group(&[1, 2, 3], 3000),
            group(&[2, 3], 5000),
            group(&[3, 0, 1], 3950),
            group(&[4, 1], 50),
        ],
        2,
        None,
    )
    .unwrap()
}

/// Eight candidates, 30001 ballots, quota 10001. The winner pair flips from
/// {w, b} to {w, a} when a batch elimination removes the five minor
/// candidates before any seat is filled.
pub(crate) fn divergence_election() -> Election {
    let mut ballots = vec![group(&[0], 15001), group(&[1], 6875), group(&[2], 3125)];
    for i in 3..8 {
        ballots.push(group(&[i, 0, 2], 1000));
    }
    Election::new(
        "batch divergence demo",
        ["w", "a", "b", "c1", "c2", "c3", "c4", "c5"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        ballots,
        2,
        None,
    )
    .unwrap()
}
