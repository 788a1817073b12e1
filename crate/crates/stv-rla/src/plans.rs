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

//! Shared plan primitives: an assertion priced for auditing, and the
//! max-of-members cost rule used by every planner.

use crate::assertions::Assertion;
use crate::assorter::Assorter;
use crate::ballots::{CandidateId, Election};
use crate::risk::{estimate_asn, AuditParams};
use std::collections::BTreeSet;

/// An assertion together with its assorter and expected sample size.
#[derive(Clone, Debug)]
pub struct AuditAssertion {
    pub assertion: Assertion,
    pub assorter: Assorter,
    /// Expected ballots to certify; `None` when infeasible.
    pub asn: Option<u64>,
}

impl AuditAssertion {
    /// Prices `assertion` against `election` (already projected when
    /// `exclude` is nonempty).
    pub fn build(
        assertion: Assertion,
        election: &Election,
        exclude: &BTreeSet<CandidateId>,
        params: &AuditParams,
    ) -> AuditAssertion {
        let assorter = Assorter::build_excluding(&assertion, election, exclude.clone());
        let asn = estimate_asn(&assorter, election.total_valid(), params);
        AuditAssertion {
            assertion,
            assorter,
            asn,
        }
    }

    pub fn label(&self, election: &Election) -> String {
        self.assertion.label(election)
    }

    pub fn margin_f64(&self) -> f64 {
        self.assorter.margin_f64()
    }
}

/// Plan cost: the maximum member ASN. Any infeasible member makes the whole
/// plan infeasible; an empty plan costs nothing.
pub fn overall_asn<'a>(members: impl IntoIterator<Item = &'a AuditAssertion>) -> Option<u64> {
    let mut max = 0u64;
    for member in members {
        max = max.max(member.asn?);
    }
    Some(max)
}
