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

//! The audit assertion family and its truth evaluation against a ballot set.
//!
//! An assertion is an inequality over ballot tallies; the audited outcome is
//! implied when every assertion in a plan is true. Six kinds are supported:
//!
//! * `IQ(c)` — c reaches a quota on first preferences;
//! * `UT(c, t̄)` — c's transfer value is below `t̄`, i.e. `t_c < Q/(1 - t̄)`;
//! * `LT*(c, t_)` — c's transfer value is above `t_`, i.e. `t_c > Q/(1 - t_)`;
//! * `AG*(w, l, W, t_, t̄)` — w always out-tallies l while w stands, in the
//!   context where the candidates in `W` are already seated with transfer
//!   values bounded by `t_` and `t̄` componentwise;
//! * `NL*(w, l, W, t_, t̄, G*, O*)` — w never loses to l in that context,
//!   strengthened by helper sets `G*` (candidates that always beat l) and
//!   `O*` (candidates w always beats);
//! * plain `AG(w, l)` is `AG*` with an empty context, and the unstarred
//!   `NL(w, l, W, G, O)` is encoded as `NL*` with zero lower bounds and the
//!   universal two-seat upper bound 2/3 on every seated candidate.
//!
//! Truth is decided by exact rational comparison; equality fails.

use crate::ballots::{CandidateId, Election};
use crate::{rational, ratio_from_u64, Ratio};
use num::{One, Zero};

/// A testable inequality over ballot tallies.
#[derive(Clone, Debug, PartialEq)]
pub enum Assertion {
    Iq {
        candidate: CandidateId,
    },
    Ut {
        candidate: CandidateId,
        tau_upper: Ratio,
    },
    LtStar {
        candidate: CandidateId,
        tau_lower: Ratio,
    },
    AgStar {
        winner: CandidateId,
        loser: CandidateId,
        /// Candidates assumed already seated, aligned with the bound vectors.
        seated: Vec<CandidateId>,
        tau_lower: Vec<Ratio>,
        tau_upper: Vec<Ratio>,
    },
    NlStar {
        winner: CandidateId,
        loser: CandidateId,
        seated: Vec<CandidateId>,
        tau_lower: Vec<Ratio>,
        tau_upper: Vec<Ratio>,
        g_star: Vec<CandidateId>,
        o_star: Vec<CandidateId>,
    },
}

impl Assertion {
    /// Plain `AG(w, l)`: an `AG*` with an empty seated context.
    pub fn ag(winner: CandidateId, loser: CandidateId) -> Assertion {
        Assertion::AgStar {
            winner,
            loser,
            seated: Vec::new(),
            tau_lower: Vec::new(),
            tau_upper: Vec::new(),
        }
    }

    /// Unstarred `NL(w, l, W, G, O)` in its compatibility encoding: zero
    /// transfer-value lower bounds and the universal two-seat upper bound 2/3.
    pub fn nl(
        winner: CandidateId,
        loser: CandidateId,
        seated: Vec<CandidateId>,
        g: Vec<CandidateId>,
        o: Vec<CandidateId>,
    ) -> Assertion {
        let n = seated.len();
        Assertion::NlStar {
            winner,
            loser,
            seated,
            tau_lower: vec![Ratio::zero(); n],
            tau_upper: vec![rational(2, 3); n],
            g_star: g,
            o_star: o,
        }
    }

    pub fn is_plain_ag(&self) -> bool {
        matches!(self, Assertion::AgStar { seated, .. } if seated.is_empty())
    }

    /// True for `NL*` carrying the compatibility encoding of unstarred `NL`.
    pub fn is_nl_compat(&self) -> bool {
        match self {
            Assertion::NlStar {
                tau_lower,
                tau_upper,
                ..
            } => {
                tau_lower.iter().all(|t| t.is_zero())
                    && tau_upper.iter().all(|t| t == &rational(2, 3))
            }
            _ => false,
        }
    }

    /// The (winner, loser) pair for the pairwise kinds.
    pub fn pair(&self) -> Option<(CandidateId, CandidateId)> {
        match self {
            Assertion::AgStar { winner, loser, .. } | Assertion::NlStar { winner, loser, .. } => {
                Some((*winner, *loser))
            }
            _ => None,
        }
    }

    /// Short human-readable label, e.g. `AG*(c3, c4 | c1)`.
    pub fn label(&self, election: &Election) -> String {
        let name = |c: &CandidateId| election.candidate_name(*c).to_string();
        match self {
            Assertion::Iq { candidate } => format!("IQ({})", name(candidate)),
            Assertion::Ut {
                candidate,
                tau_upper,
            } => format!(
                "UT({}, {:.4})",
                name(candidate),
                crate::ratio_to_f64(tau_upper)
            ),
            Assertion::LtStar {
                candidate,
                tau_lower,
            } => format!(
                "LT*({}, {:.4})",
                name(candidate),
                crate::ratio_to_f64(tau_lower)
            ),
            Assertion::AgStar {
                winner,
                loser,
                seated,
                ..
            } => {
                if seated.is_empty() {
                    format!("AG({}, {})", name(winner), name(loser))
                } else {
                    let ctx: Vec<String> = seated.iter().map(name).collect();
                    format!("AG*({}, {} | {})", name(winner), name(loser), ctx.join(","))
                }
            }
            Assertion::NlStar {
                winner,
                loser,
                seated,
                ..
            } => {
                let star = if self.is_nl_compat() { "" } else { "*" };
                let ctx: Vec<String> = seated.iter().map(name).collect();
                format!(
                    "NL{star}({}, {} | {})",
                    name(winner),
                    name(loser),
                    ctx.join(",")
                )
            }
        }
    }
}

/// Outcome of evaluating one assertion: `holds` iff `lhs > rhs` strictly.
#[derive(Clone, Debug, PartialEq)]
pub struct AssertionCheck {
    pub holds: bool,
    /// Winner-side quantity (a minimum tally, or the threshold for `UT`).
    pub lhs: Ratio,
    /// Loser-side quantity (a maximum tally, or the threshold for `LT*`).
    pub rhs: Ratio,
}

impl AssertionCheck {
    fn compare(lhs: Ratio, rhs: Ratio) -> AssertionCheck {
        AssertionCheck {
            holds: lhs > rhs,
            lhs,
            rhs,
        }
    }
}

fn position(prefs: &[CandidateId], c: CandidateId) -> Option<usize> {
    prefs.iter().position(|&p| p == c)
}

/// First preference once the candidates in `remove` are erased.
fn first_outside(prefs: &[CandidateId], remove: &[CandidateId]) -> Option<CandidateId> {
    prefs.iter().copied().find(|p| !remove.contains(p))
}

/// `max{t̄_k : k in seated, k precedes l in prefs}`; `None` when no seated
/// candidate precedes l.
fn maxt(
    prefs: &[CandidateId],
    l: CandidateId,
    seated: &[CandidateId],
    tau_upper: &[Ratio],
) -> Option<Ratio> {
    let l_pos = position(prefs, l)?;
    seated
        .iter()
        .zip(tau_upper)
        .filter(|(k, _)| matches!(position(prefs, **k), Some(p) if p < l_pos))
        .map(|(_, t)| t.clone())
        .max()
}

/// Product of seated-candidate transfer-value lower bounds over the members
/// of `seated` that precede `w` in the ballot.
fn lower_bound_product(
    prefs: &[CandidateId],
    w: CandidateId,
    seated: &[CandidateId],
    tau_lower: &[Ratio],
) -> Ratio {
    let w_pos = position(prefs, w).expect("w must appear when its projection starts with w");
    seated
        .iter()
        .zip(tau_lower)
        .filter(|(k, _)| matches!(position(prefs, **k), Some(p) if p < w_pos))
        .fold(Ratio::one(), |acc, (_, t)| acc * t)
}

/// Ballot contribution to the minimum tally of `w` for `AG*`.
pub fn agstar_contrib_min(
    prefs: &[CandidateId],
    w: CandidateId,
    seated: &[CandidateId],
    tau_lower: &[Ratio],
) -> Ratio {
    if prefs.first() == Some(&w) {
        return Ratio::one();
    }
    if first_outside(prefs, seated) == Some(w) {
        return lower_bound_product(prefs, w, seated, tau_lower);
    }
    Ratio::zero()
}

/// Ballot contribution to the maximum tally of `l` for `AG*`.
pub fn agstar_contrib_max(
    prefs: &[CandidateId],
    l: CandidateId,
    w: CandidateId,
    seated: &[CandidateId],
    tau_upper: &[Ratio],
) -> Ratio {
    let Some(l_pos) = position(prefs, l) else {
        return Ratio::zero();
    };
    if matches!(position(prefs, w), Some(p) if p < l_pos) {
        return Ratio::zero();
    }
    if prefs.first().is_some_and(|f| seated.contains(f)) {
        return maxt(prefs, l, seated, tau_upper)
            .expect("a seated first preference precedes l");
    }
    Ratio::one()
}

/// Ballot contribution to the minimum tally of `w` for `NL*`: full value when
/// `w` leads once `O*` is erased, reduced value when `w` leads once the seated
/// candidates are erased, nothing otherwise.
pub fn nlstar_contrib_min(
    prefs: &[CandidateId],
    w: CandidateId,
    seated: &[CandidateId],
    tau_lower: &[Ratio],
    o_star: &[CandidateId],
) -> Ratio {
    if first_outside(prefs, o_star) == Some(w) {
        return Ratio::one();
    }
    if first_outside(prefs, seated) == Some(w) {
        return lower_bound_product(prefs, w, seated, tau_lower);
    }
    Ratio::zero()
}

/// Ballot contribution to the maximum tally of `l` for `NL*`: like `AG*` but
/// also zero whenever some member of `G*` precedes `l`.
pub fn nlstar_contrib_max(
    prefs: &[CandidateId],
    l: CandidateId,
    w: CandidateId,
    seated: &[CandidateId],
    tau_upper: &[Ratio],
    g_star: &[CandidateId],
) -> Ratio {
    let Some(l_pos) = position(prefs, l) else {
        return Ratio::zero();
    };
    if matches!(position(prefs, w), Some(p) if p < l_pos) {
        return Ratio::zero();
    }
    if g_star
        .iter()
        .any(|g| matches!(position(prefs, *g), Some(p) if p < l_pos))
    {
        return Ratio::zero();
    }
    if prefs.first().is_some_and(|f| seated.contains(f)) {
        return maxt(prefs, l, seated, tau_upper)
            .expect("a seated first preference precedes l");
    }
    Ratio::one()
}

fn weighted_sum(election: &Election, mut f: impl FnMut(&[CandidateId]) -> Ratio) -> Ratio {
    let mut sum = Ratio::zero();
    for group in election.ballots() {
        let contribution = f(group.ranking.prefs());
        if !contribution.is_zero() {
            sum += contribution * ratio_from_u64(group.count);
        }
    }
    sum
}

/// `IQ(c)`: first-preference tally at least a quota. Encoded strictly as
/// `t_{c,1} > Q - 1`, exact because round-1 tallies are integers.
pub fn eval_iq(election: &Election, c: CandidateId) -> AssertionCheck {
    let tally = election.first_preference_tallies()[c.index()];
    AssertionCheck::compare(ratio_from_u64(tally), ratio_from_u64(election.quota() - 1))
}

/// `UT(c, t̄)`: the transfer value of c stays below `t̄`, i.e.
/// `t_{c,1} < Q/(1 - t̄)`.
pub fn eval_ut(election: &Election, c: CandidateId, tau_upper: &Ratio) -> AssertionCheck {
    let tally = ratio_from_u64(election.first_preference_tallies()[c.index()]);
    let threshold = ratio_from_u64(election.quota()) / (Ratio::one() - tau_upper);
    AssertionCheck::compare(threshold, tally)
}

/// `LT*(c, t_)`: the transfer value of c exceeds `t_`, i.e.
/// `t_{c,1} > Q/(1 - t_)`.
pub fn eval_lt(election: &Election, c: CandidateId, tau_lower: &Ratio) -> AssertionCheck {
    let tally = ratio_from_u64(election.first_preference_tallies()[c.index()]);
    let threshold = ratio_from_u64(election.quota()) / (Ratio::one() - tau_lower);
    AssertionCheck::compare(tally, threshold)
}

/// `AG*`: compares w's minimum tally against l's maximum tally in the seated
/// context.
pub fn eval_agstar(
    election: &Election,
    w: CandidateId,
    l: CandidateId,
    seated: &[CandidateId],
    tau_lower: &[Ratio],
    tau_upper: &[Ratio],
) -> AssertionCheck {
    let t1min = weighted_sum(election, |prefs| {
        agstar_contrib_min(prefs, w, seated, tau_lower)
    });
    let t1max = weighted_sum(election, |prefs| {
        agstar_contrib_max(prefs, l, w, seated, tau_upper)
    });
    AssertionCheck::compare(t1min, t1max)
}

/// `NL*`: compares w's minimum tally (with `O*` assumed gone) against l's
/// maximum tally (with `G*` blocking).
#[allow(clippy::too_many_arguments)]
pub fn eval_nlstar(
    election: &Election,
    w: CandidateId,
    l: CandidateId,
    seated: &[CandidateId],
    tau_lower: &[Ratio],
    tau_upper: &[Ratio],
    g_star: &[CandidateId],
    o_star: &[CandidateId],
) -> AssertionCheck {
    let t2min = weighted_sum(election, |prefs| {
        nlstar_contrib_min(prefs, w, seated, tau_lower, o_star)
    });
    let t2max = weighted_sum(election, |prefs| {
        nlstar_contrib_max(prefs, l, w, seated, tau_upper, g_star)
    });
    AssertionCheck::compare(t2min, t2max)
}

/// Evaluates any assertion against an election.
pub fn eval(assertion: &Assertion, election: &Election) -> AssertionCheck {
    match assertion {
        Assertion::Iq { candidate } => eval_iq(election, *candidate),
        Assertion::Ut {
            candidate,
            tau_upper,
        } => eval_ut(election, *candidate, tau_upper),
        Assertion::LtStar {
            candidate,
            tau_lower,
        } => eval_lt(election, *candidate, tau_lower),
        Assertion::AgStar {
            winner,
            loser,
            seated,
            tau_lower,
            tau_upper,
        } => eval_agstar(election, *winner, *loser, seated, tau_lower, tau_upper),
        Assertion::NlStar {
            winner,
            loser,
            seated,
            tau_lower,
            tau_upper,
            g_star,
            o_star,
        } => eval_nlstar(
            election, *winner, *loser, seated, tau_lower, tau_upper, g_star, o_star,
        ),
    }
}
