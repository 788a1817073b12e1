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

//! Certification plans for batch eliminations: one `AG(top, c)` assertion per
//! (top candidate, batch-eliminated candidate) pair, verifying that every
//! batch-eliminated candidate had no mathematical possibility of winning.

use crate::assertions::{eval, Assertion};
use crate::ballots::{CandidateId, Election};
use crate::plans::{overall_asn, AuditAssertion};
use crate::risk::AuditParams;
use crate::tabulate::batch_eliminate;
use std::collections::BTreeSet;

/// The assertion set certifying a batch elimination.
#[derive(Clone, Debug)]
pub struct BatchCheckPlan {
    /// The `seats` candidates with the highest first-preference tallies,
    /// lowest id first on tally ties.
    pub top: Vec<CandidateId>,
    /// Candidates removed by the batch elimination.
    pub batch: Vec<CandidateId>,
    /// `AG(top_i, c)` for every top candidate and batch member.
    pub assertions: Vec<AuditAssertion>,
    /// True when every assertion holds on the reported ballots. A failing
    /// assertion means this method cannot certify the batch elimination.
    pub feasible: bool,
    /// Max member ASN; `None` when some member cannot be audited.
    pub asn: Option<u64>,
}

/// Builds the batch-elimination certification plan for `election`.
pub fn plan_batch_check(election: &Election, params: &AuditParams) -> BatchCheckPlan {
    let first_prefs = election.first_preference_tallies();
    let mut order: Vec<CandidateId> = election.candidate_ids().collect();
    order.sort_by_key(|c| (std::cmp::Reverse(first_prefs[c.index()]), c.0));
    let top: Vec<CandidateId> = order.into_iter().take(election.seats() as usize).collect();
    let batch: Vec<CandidateId> = batch_eliminate(election).into_iter().collect();

    let mut assertions = Vec::with_capacity(top.len() * batch.len());
    let mut feasible = true;
    for &t in &top {
        for &c in &batch {
            let assertion = Assertion::ag(t, c);
            feasible &= eval(&assertion, election).holds;
            assertions.push(AuditAssertion::build(
                assertion,
                election,
                &BTreeSet::new(),
                params,
            ));
        }
    }
    let asn = if batch.is_empty() {
        Some(0)
    } else {
        overall_asn(&assertions)
    };
    BatchCheckPlan {
        top,
        batch,
        assertions,
        feasible,
        asn,
    }
}
