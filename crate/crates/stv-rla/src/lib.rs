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

//! Tabulation and risk-limiting audits for two-seat single transferable vote
//! (STV) elections.
//!
//! The crate provides, as library modules:
//!
//! * [`ballots`] — election and ballot types, the Droop quota, ranking
//!   projection, and ingestion of canonical-JSON and BLT ballot files;
//! * [`tabulate`] — exact-rational US-style STV tabulation with an optional
//!   batch-elimination pre-step, producing a complete audit-ready trace;
//! * [`assertions`] — the audit assertion family (`IQ`, `UT`, `LT*`, `AG`,
//!   `AG*`, `NL*`), their truth evaluation against a ballot set, and
//!   conversion to SHANGRLA-style assorters;
//! * [`risk`] — the ALPHA sequential test, expected-sample-size (ASN)
//!   estimation, and p-value measurement for audited samples;
//! * [`batch`] — certification plans for batch eliminations;
//! * [`frw`] — the first-round-winner audit planner with its nested search
//!   over transfer-value lower and upper bounds;
//! * [`general`] — the five-stage general method producing full or partial
//!   audits when no candidate starts with a quota;
//! * [`sim`] — Monte Carlo audit simulation against a plan;
//! * [`report`] — JSON report envelopes and human-readable tables;
//! * [`cli`] — the subcommand dispatcher behind the `stv-rla` binary.
//!
//! Every runnable capability has a matching program under `examples/`; start
//! with `cargo run --example tabulate_basic`.

pub mod assertions;
pub mod assorter;
pub mod ballots;
pub mod batch;
pub mod cli;
pub mod frw;
pub mod general;
pub mod plans;
pub mod report;
pub mod risk;
pub mod sim;
pub mod tabulate;

#[cfg(test)]
pub(crate) mod testutil;

use num::BigRational;

/// Exact rational used for every tally, transfer value, and margin.
pub type Ratio = BigRational;

/// Builds an exact rational from a numerator/denominator pair.
pub fn rational(numer: i64, denom: i64) -> Ratio {
    Ratio::new(numer.into(), denom.into())
}

pub(crate) fn ratio_from_u64(n: u64) -> Ratio {
    Ratio::from_integer(n.into())
}

pub(crate) fn ratio_to_f64(r: &Ratio) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("seats must be at least 1")]
    InvalidSeats,
    #[error("ballot {ballot}: duplicate candidate {name:?} in ranking")]
    DuplicateCandidate { ballot: usize, name: String },
    #[error("ballot {ballot}: unknown candidate {name:?}")]
    UnknownCandidate { ballot: usize, name: String },
    #[error("ballot {ballot}: count must be at least 1")]
    NonPositiveCount { ballot: usize },
    #[error("missing required field {0:?}")]
    MissingField(&'static str),
    #[error("malformed {format} input: {message}")]
    Malformed {
        format: &'static str,
        message: String,
    },
    #[error("tabulation needs at least {seats} candidates, election has {candidates}")]
    TooFewCandidates { seats: u32, candidates: usize },
    #[error("tally {tally} is below the quota {quota}")]
    TallyBelowQuota { tally: String, quota: u64 },
    #[error("tie between {names:?} with strict tie handling enabled")]
    Tie { names: Vec<String> },
    #[error("no candidate reaches a quota on first preferences")]
    FirstRoundWinnerCriterion,
    #[error("sample value {value} outside [0, {upper}]")]
    ValueOutOfRange { value: f64, upper: f64 },
    #[error("reported and audited score sequences have different lengths")]
    MismatchedLengths,
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
