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

//! Audit planning for two-seat contests whose first winner reaches a quota on
//! first preferences (after any batch elimination).
//!
//! The planner runs a nested search over transfer-value bounds for the first
//! winner `w1`. The outer loop raises a lower bound, the inner loop raises an
//! upper bound; each candidate pair of bounds prices a full assertion set:
//! `IQ(w1)`, `LT*`/`UT` pinning the transfer value between the bounds, and
//! one `NL*(w2, l)` per reported loser showing the second winner never loses.
//! `AG*` helpers join a plan only when they reduce the `NL*` cost by more
//! than they cost themselves. A candidate configuration is kept only while
//! its cost (the maximum member ASN) strictly improves, so the accepted cost
//! sequence is strictly decreasing.

use crate::assertions::{eval, Assertion};
use crate::ballots::{CandidateId, Election};
use crate::plans::{overall_asn, AuditAssertion};
use crate::rational;
use crate::risk::AuditParams;
use crate::tabulate::TabulationTrace;
use crate::{Error, Ratio, Result};
use num::Zero;
use std::collections::BTreeSet;

/// Planner configuration: the bound-search step and the audit parameters.
#[derive(Clone, Debug)]
pub struct FrwConfig {
    /// Search step for both bound loops; exact 1/20 by default.
    pub delta: Ratio,
    pub params: AuditParams,
}

impl Default for FrwConfig {
    fn default() -> Self {
        FrwConfig {
            delta: rational(1, 20),
            params: AuditParams::default(),
        }
    }
}

/// Whether a plan certifies the full outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanKind {
    FullRla,
    Infeasible,
}

/// A priced audit plan.
#[derive(Clone, Debug)]
pub struct AuditPlan {
    pub kind: PlanKind,
    pub assertions: Vec<AuditAssertion>,
    /// Max member ASN; `None` when the plan is infeasible.
    pub overall_asn: Option<u64>,
    pub winner_first: CandidateId,
    pub winner_second: CandidateId,
    /// Chosen transfer-value bounds for `w1`; the lower bound is absent when
    /// the winning configuration used zero (no `LT*` needed).
    pub tau_lower: Option<Ratio>,
    pub tau_upper: Option<Ratio>,
    /// Accepted overall cost after each outer-loop improvement, in order.
    pub accepted_asns: Vec<u64>,
    /// Candidates a preceding batch elimination removed; assorters score raw
    /// ballots through this projection.
    pub excluded: Vec<CandidateId>,
}

/// True when the first action after any batch elimination seats a candidate.
pub fn frw_criterion(trace: &TabulationTrace) -> bool {
    trace.first_round_winner_criterion()
}

/// Generates the first-round-winner audit for a tabulated two-seat election.
///
/// `trace` must come from tabulating `election` (with or without the batch
/// pre-step); the planner evaluates assertions on the matching post-batch
/// projection.
pub fn plan_frw(
    election: &Election,
    trace: &TabulationTrace,
    config: &FrwConfig,
) -> Result<AuditPlan> {
    if election.seats() != 2 {
        return Err(Error::Input(
            "first-round-winner planning applies to 2-seat elections".into(),
        ));
    }
    let (w1, tau_w1) = trace
        .first_round_transfer()
        .ok_or(Error::FirstRoundWinnerCriterion)?;
    let w2 = trace.winners[1];
    let excluded: BTreeSet<CandidateId> = trace.batch_eliminated.iter().copied().collect();
    let contest = if excluded.is_empty() {
        election.clone()
    } else {
        election.without_candidates(&excluded)
    };
    let losers: Vec<CandidateId> = contest
        .candidate_ids()
        .filter(|c| *c != w1 && *c != w2 && !excluded.contains(c))
        .collect();
    let params = &config.params;
    let two_thirds = rational(2, 3);

    let iq = AuditAssertion::build(Assertion::Iq { candidate: w1 }, &contest, &excluded, params);

    let mut best: Option<Accepted> = None;
    let mut best_asn: Option<u64> = None;
    let mut accepted_asns = Vec::new();
    let mut tau_lo = Ratio::zero();

    while tau_lo < tau_w1 {
        let lt = if tau_lo.is_zero() {
            None
        } else {
            Some(AuditAssertion::build(
                Assertion::LtStar {
                    candidate: w1,
                    tau_lower: tau_lo.clone(),
                },
                &contest,
                &excluded,
                params,
            ))
        };

        let mut tau_hi = &tau_w1 + &config.delta;
        if tau_hi >= two_thirds {
            // Out of room above the reported value: run the inner loop once
            // with the bound clamped strictly below 2/3.
            tau_hi = (&tau_w1 + &two_thirds) / rational(2, 1);
        }

        let mut inner_best: Option<Accepted> = None;
        let mut inner_asn: Option<u64> = best_asn;

        while tau_hi < two_thirds {
            let candidate =
                price_configuration(&contest, &excluded, &iq, &lt, w1, w2, &losers, &tau_lo, &tau_hi, params);
            if better(&candidate.asn, &inner_asn) {
                inner_asn = candidate.asn;
                inner_best = Some(candidate);
                tau_hi += &config.delta;
            } else {
                break;
            }
        }

        match inner_best {
            Some(found) if better(&found.asn, &best_asn) => {
                best_asn = found.asn;
                accepted_asns.push(found.asn.expect("accepted configurations are finite"));
                best = Some(found);
                tau_lo = if tau_lo.is_zero() {
                    &tau_w1 / rational(2, 1)
                } else {
                    &tau_lo + &config.delta
                };
            }
            _ => break,
        }
    }

    let plan = match best {
        Some(found) => {
            let assertions = remove_redundant_nl(found.assertions);
            debug_assert!(assertions
                .iter()
                .all(|a| eval(&a.assertion, &contest).holds));
            AuditPlan {
                kind: PlanKind::FullRla,
                overall_asn: overall_asn(&assertions),
                assertions,
                winner_first: w1,
                winner_second: w2,
                tau_lower: if found.tau_lower.is_zero() {
                    None
                } else {
                    Some(found.tau_lower)
                },
                tau_upper: Some(found.tau_upper),
                accepted_asns,
                excluded: excluded.iter().copied().collect(),
            }
        }
        None => AuditPlan {
            kind: PlanKind::Infeasible,
            assertions: Vec::new(),
            overall_asn: None,
            winner_first: w1,
            winner_second: w2,
            tau_lower: None,
            tau_upper: None,
            accepted_asns,
            excluded: excluded.iter().copied().collect(),
        },
    };
    Ok(plan)
}

struct Accepted {
    assertions: Vec<AuditAssertion>,
    asn: Option<u64>,
    tau_lower: Ratio,
    tau_upper: Ratio,
}

fn better(candidate: &Option<u64>, current: &Option<u64>) -> bool {
    match (candidate, current) {
        (Some(c), Some(b)) => c < b,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

/// Prices the full assertion set for one pair of transfer-value bounds.
#[allow(clippy::too_many_arguments)]
fn price_configuration(
    contest: &Election,
    excluded: &BTreeSet<CandidateId>,
    iq: &AuditAssertion,
    lt: &Option<AuditAssertion>,
    w1: CandidateId,
    w2: CandidateId,
    losers: &[CandidateId],
    tau_lo: &Ratio,
    tau_hi: &Ratio,
    params: &AuditParams,
) -> Accepted {
    let seated = vec![w1];
    let lo_vec = vec![tau_lo.clone()];
    let hi_vec = vec![tau_hi.clone()];

    let mut assertions: Vec<AuditAssertion> = vec![iq.clone()];
    if let Some(lt) = lt {
        assertions.push(lt.clone());
    }
    assertions.push(AuditAssertion::build(
        Assertion::Ut {
            candidate: w1,
            tau_upper: tau_hi.clone(),
        },
        contest,
        excluded,
        params,
    ));

    // All AG* assertions between pairs drawn from the losers and w2, in the
    // seated-w1 context at these bounds. Only holding ones are kept.
    let mut holding_ags: Vec<(CandidateId, CandidateId)> = Vec::new();
    let mut pool: Vec<CandidateId> = losers.to_vec();
    pool.push(w2);
    for &c in &pool {
        for &l in losers {
            if c == l {
                continue;
            }
            let check = crate::assertions::eval_agstar(contest, c, l, &seated, &lo_vec, &hi_vec);
            if check.holds {
                holding_ags.push((c, l));
            }
        }
    }
    let o_star_all: Vec<CandidateId> = holding_ags
        .iter()
        .filter(|(c, _)| *c == w2)
        .map(|(_, l)| *l)
        .collect();

    let mut complete = true;
    for &l in losers {
        let g_star_all: Vec<CandidateId> = holding_ags
            .iter()
            .filter(|(_, target)| *target == l)
            .map(|(c, _)| *c)
            .collect();
        match form_nl(
            contest, excluded, w2, l, &seated, &lo_vec, &hi_vec, &g_star_all, &o_star_all, params,
        ) {
            Some((nl, helpers)) => {
                assertions.push(nl);
                for helper in helpers {
                    if !assertions.iter().any(|a| a.assertion == helper.assertion) {
                        assertions.push(helper);
                    }
                }
            }
            None => complete = false,
        }
    }

    let asn = if complete {
        overall_asn(&assertions)
    } else {
        None
    };
    Accepted {
        assertions,
        asn,
        tau_lower: tau_lo.clone(),
        tau_upper: tau_hi.clone(),
    }
}

/// Forms `NL*(w, l)` in the seated context, choosing which helper candidates
/// to keep. A helper stays only when it strictly reduces the `NL*` cost and
/// the unhelped `NL*` costs more than the helper's own `AG*`.
///
/// Helper sets start from every candidate whose qualifying `AG*` holds; the
/// kept helpers' `AG*` assertions are returned so they can be audited along
/// with the `NL*` whose assumptions they carry.
#[allow(clippy::too_many_arguments)]
pub(crate) fn form_nl(
    contest: &Election,
    excluded: &BTreeSet<CandidateId>,
    w: CandidateId,
    l: CandidateId,
    seated: &[CandidateId],
    tau_lower: &[Ratio],
    tau_upper: &[Ratio],
    g_candidates: &[CandidateId],
    o_candidates: &[CandidateId],
    params: &AuditParams,
) -> Option<(AuditAssertion, Vec<AuditAssertion>)> {
    let full_check = crate::assertions::eval_nlstar(
        contest,
        w,
        l,
        seated,
        tau_lower,
        tau_upper,
        g_candidates,
        o_candidates,
    );
    if !full_check.holds {
        return None;
    }

    let price_nl = |g: &[CandidateId], o: &[CandidateId]| -> Option<u64> {
        let assertion = Assertion::NlStar {
            winner: w,
            loser: l,
            seated: seated.to_vec(),
            tau_lower: tau_lower.to_vec(),
            tau_upper: tau_upper.to_vec(),
            g_star: g.to_vec(),
            o_star: o.to_vec(),
        };
        if !eval(&assertion, contest).holds {
            return None;
        }
        AuditAssertion::build(assertion, contest, excluded, params).asn
    };
    let price_ag = |winner: CandidateId, loser: CandidateId| -> (Assertion, Option<u64>) {
        let assertion = Assertion::AgStar {
            winner,
            loser,
            seated: seated.to_vec(),
            tau_lower: tau_lower.to_vec(),
            tau_upper: tau_upper.to_vec(),
        };
        let asn = AuditAssertion::build(assertion.clone(), contest, excluded, params).asn;
        (assertion, asn)
    };

    let mut kept_g: Vec<CandidateId> = g_candidates.to_vec();
    let mut kept_o: Vec<CandidateId> = o_candidates.to_vec();

    enum Side {
        G,
        O,
    }
    let helper_order: Vec<(Side, CandidateId)> = g_candidates
        .iter()
        .map(|&c| (Side::G, c))
        .chain(o_candidates.iter().map(|&c| (Side::O, c)))
        .collect();

    for (side, h) in helper_order {
        let (without_g, without_o): (Vec<_>, Vec<_>) = match side {
            Side::G => (
                kept_g.iter().copied().filter(|&c| c != h).collect(),
                kept_o.clone(),
            ),
            Side::O => (
                kept_g.clone(),
                kept_o.iter().copied().filter(|&c| c != h).collect(),
            ),
        };
        let with_h = price_nl(&kept_g, &kept_o);
        let without_h = price_nl(&without_g, &without_o);
        let helper_pair = match side {
            Side::G => (h, l),
            Side::O => (w, h),
        };
        let (_, helper_asn) = price_ag(helper_pair.0, helper_pair.1);
        let reduces = better(&with_h, &without_h);
        let worth_it = match (without_h, helper_asn) {
            (None, _) => true,
            (Some(base), Some(own)) => base > own,
            (Some(_), None) => false,
        };
        if !(reduces && worth_it) {
            kept_g = without_g;
            kept_o = without_o;
        }
    }

    let nl = Assertion::NlStar {
        winner: w,
        loser: l,
        seated: seated.to_vec(),
        tau_lower: tau_lower.to_vec(),
        tau_upper: tau_upper.to_vec(),
        g_star: kept_g.clone(),
        o_star: kept_o.clone(),
    };
    debug_assert!(eval(&nl, contest).holds);
    let nl = AuditAssertion::build(nl, contest, excluded, params);
    let mut helpers = Vec::new();
    for &g in &kept_g {
        let (assertion, _) = price_ag(g, l);
        helpers.push(AuditAssertion::build(assertion, contest, excluded, params));
    }
    for &o in &kept_o {
        let (assertion, _) = price_ag(w, o);
        helpers.push(AuditAssertion::build(assertion, contest, excluded, params));
    }
    Some((nl, helpers))
}

/// Drops every `NL*` whose (winner, loser) pair is already covered by an
/// `AG*` in the same plan; the `AG*` is strictly stronger.
fn remove_redundant_nl(assertions: Vec<AuditAssertion>) -> Vec<AuditAssertion> {
    let ag_pairs: BTreeSet<(CandidateId, CandidateId)> = assertions
        .iter()
        .filter(|a| matches!(a.assertion, Assertion::AgStar { .. }))
        .filter_map(|a| a.assertion.pair())
        .collect();
    assertions
        .into_iter()
        .filter(|a| match &a.assertion {
            Assertion::NlStar { .. } => !ag_pairs.contains(&a.assertion.pair().unwrap()),
            _ => true,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabulate::{tabulate, TabulateOptions};
    use crate::testutil::{demo_election as demo, divergence_election, group};

    fn c(i: u32) -> CandidateId {
        CandidateId(i)
    }

    #[test]
    fn demo_plan_is_feasible_with_expected_members() {
        let e = demo();
        let trace = tabulate(&e, TabulateOptions::default()).unwrap();
        let plan = plan_frw(&e, &trace, &FrwConfig::default()).unwrap();
        assert_eq!(plan.kind, PlanKind::FullRla);
        assert!(plan
            .assertions
            .iter()
            .any(|a| matches!(a.assertion, Assertion::Iq { candidate } if candidate == c(0))));
        assert!(plan.assertions.iter().any(|a| matches!(
            &a.assertion,
            Assertion::NlStar { winner, loser, .. } if *winner == c(2) && *loser == c(3)
        )));
        // Every member evaluates true on the reported ballots.
        for a in &plan.assertions {
            assert!(eval(&a.assertion, &e).holds, "{}", a.label(&e));
        }
        // The accepted cost sequence strictly decreases.
        assert!(!plan.accepted_asns.is_empty());
        for w in plan.accepted_asns.windows(2) {
            assert!(w[1] < w[0]);
        }
        // Chosen bounds bracket the reported transfer value.
        let tau = crate::rational(2000, 9001);
        if let Some(lo) = &plan.tau_lower {
            assert!(lo < &tau);
        }
        assert!(plan.tau_upper.as_ref().unwrap() > &tau);
        // NL* and AG* never share a pair.
        let nl_pairs: Vec<_> = plan
            .assertions
            .iter()
            .filter(|a| matches!(a.assertion, Assertion::NlStar { .. }))
            .map(|a| a.assertion.pair().unwrap())
            .collect();
        for a in &plan.assertions {
            if matches!(a.assertion, Assertion::AgStar { .. }) {
                assert!(!nl_pairs.contains(&a.assertion.pair().unwrap()));
            }
        }
    }

    #[test]
    fn criterion_failure_is_an_error() {
        // Nobody reaches the quota of 13 on first preferences.
        let e = Election::new(
            "no first-round winner",
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![
                group(&[0, 1], 12),
                group(&[1, 0], 11),
                group(&[2, 1], 9),
                group(&[3, 2], 6),
            ],
            2,
            None,
        )
        .unwrap();
        let trace = tabulate(&e, TabulateOptions::default()).unwrap();
        assert!(!frw_criterion(&trace));
        let err = plan_frw(&e, &trace, &FrwConfig::default()).unwrap_err();
        assert!(matches!(err, Error::FirstRoundWinnerCriterion));
    }

    #[test]
    fn criterion_examples() {
        let e = demo();
        let trace = tabulate(&e, TabulateOptions::default()).unwrap();
        assert!(frw_criterion(&trace));

        let d = divergence_election();
        let trace = tabulate(&d, TabulateOptions::default()).unwrap();
        assert!(frw_criterion(&trace)); // w holds 15001 >= 10001
    }
}
