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

//! Conversion of assertions to assorter form.
//!
//! An assorter scores each ballot into `[0, u]` so that the population mean
//! exceeds 1/2 exactly when the assertion holds. Every supported assertion is
//! a linear inequality over ballots, `sum d(b) > 0`, where `d(b)` is the
//! winner-side contribution minus the loser-side contribution (threshold
//! kinds fold the constant in per ballot). With `L` and `U` the attainable
//! extremes of `d`, the score is `s(b) = (d(b) - L) / (-2L)` and
//! `u = (U - L) / (-2L)`, which centers the decision threshold at mean 1/2.
//! The extremes are taken over the whole ballot space, not just the reported
//! ballots, so unseen ballots drawn during an audit still score inside
//! `[0, u]`.

use crate::assertions::{
    agstar_contrib_max, agstar_contrib_min, nlstar_contrib_max, nlstar_contrib_min, Assertion,
};
use crate::ballots::{CandidateId, Election};
use crate::{ratio_from_u64, ratio_to_f64, Ratio};
use num::{One, Signed, Zero};
use std::collections::BTreeSet;

/// A per-ballot scoring function in `[0, upper]` whose population mean
/// exceeds 1/2 iff the source assertion holds.
#[derive(Clone, Debug)]
pub struct Assorter {
    pub assertion: Assertion,
    /// Candidates erased from every ballot before scoring. Set when the
    /// assertion was formed on a post-batch-elimination election but the
    /// audit draws raw ballots.
    pub exclude: BTreeSet<CandidateId>,
    /// Number of ballots in the reported election.
    pub population: u64,
    /// Upper bound `u` of the score.
    pub upper: Ratio,
    /// Mean score over the reported ballots.
    pub mean: Ratio,
    /// `2 * mean - 1`; positive iff the assertion holds on the reported set.
    pub margin: Ratio,
    /// Set when every ballot's raw contribution shares one sign, so the
    /// normalization collapses and the assorter is constantly true or false.
    pub degenerate: bool,
    /// Distinct score values over the reported ballots with their counts,
    /// used by polling-mode sample-size estimates.
    score_histogram: Vec<(f64, u64)>,
    lower_d: Ratio,
    threshold_per_ballot: Option<Ratio>,
}

impl Assorter {
    /// Builds the assorter for `assertion`, computing its mean and margin
    /// over the reported election.
    pub fn build(assertion: &Assertion, election: &Election) -> Assorter {
        Self::build_excluding(assertion, election, BTreeSet::new())
    }

    /// Like [`Assorter::build`], but scoring through a projection that erases
    /// `exclude` from every ballot first. The election passed here must be
    /// the one the assertion was evaluated on (the post-projection one).
    pub fn build_excluding(
        assertion: &Assertion,
        election: &Election,
        exclude: BTreeSet<CandidateId>,
    ) -> Assorter {
        let population = election.total_valid();
        let n = ratio_from_u64(population);
        let (lower_d, upper_d, threshold_per_ballot) = match assertion {
            Assertion::Iq { .. } => {
                let threshold = ratio_from_u64(election.quota() - 1) / &n;
                (-threshold.clone(), Ratio::one() - &threshold, Some(threshold))
            }
            Assertion::Ut { tau_upper, .. } => {
                let bound = ratio_from_u64(election.quota()) / (Ratio::one() - tau_upper);
                let threshold = bound / &n;
                (&threshold - Ratio::one(), threshold.clone(), Some(threshold))
            }
            Assertion::LtStar { tau_lower, .. } => {
                let bound = ratio_from_u64(election.quota()) / (Ratio::one() - tau_lower);
                let threshold = bound / &n;
                (-threshold.clone(), Ratio::one() - &threshold, Some(threshold))
            }
            // Pairwise contributions live in [0, 1] on both sides.
            Assertion::AgStar { .. } | Assertion::NlStar { .. } => {
                (-Ratio::one(), Ratio::one(), None)
            }
        };

        let mut assorter = Assorter {
            assertion: assertion.clone(),
            exclude,
            population,
            upper: Ratio::one(),
            mean: Ratio::zero(),
            margin: Ratio::zero(),
            degenerate: false,
            score_histogram: Vec::new(),
            lower_d,
            threshold_per_ballot,
        };

        let mut mean_d = Ratio::zero();
        for group in election.ballots() {
            mean_d += assorter.contribution(group.ranking.prefs()) * ratio_from_u64(group.count);
        }
        if population > 0 {
            mean_d /= &n;
        }

        if assorter.lower_d >= Ratio::zero() || upper_d <= Ratio::zero() {
            // All contributions share one sign: constantly true or false.
            assorter.degenerate = true;
            assorter.upper = Ratio::one();
            if mean_d.is_positive() {
                assorter.mean = Ratio::one();
                assorter.margin = Ratio::one();
            } else {
                assorter.mean = Ratio::zero();
                assorter.margin = -Ratio::one();
            }
        } else {
            let minus_2l = -(&assorter.lower_d + &assorter.lower_d);
            assorter.upper = (&upper_d - &assorter.lower_d) / &minus_2l;
            assorter.mean = (&mean_d - &assorter.lower_d) / &minus_2l;
            assorter.margin = &assorter.mean + &assorter.mean - Ratio::one();
        }

        let mut histogram: std::collections::BTreeMap<u64, (f64, u64)> =
            std::collections::BTreeMap::new();
        for group in election.ballots() {
            let score = ratio_to_f64(&assorter.score(group.ranking.prefs()));
            let key = (score * 1e12).round() as u64;
            let entry = histogram.entry(key).or_insert((score, 0));
            entry.1 += group.count;
        }
        assorter.score_histogram = histogram.into_values().collect();
        assorter
    }

    /// Distinct reported score values with their ballot counts.
    pub fn reported_score_histogram(&self) -> &[(f64, u64)] {
        &self.score_histogram
    }

    /// Raw contribution `d(b)` before normalization, with the exclusion
    /// projection applied.
    fn contribution(&self, raw_prefs: &[CandidateId]) -> Ratio {
        let projected;
        let prefs: &[CandidateId] = if self.exclude.is_empty() {
            raw_prefs
        } else {
            projected = raw_prefs
                .iter()
                .copied()
                .filter(|c| !self.exclude.contains(c))
                .collect::<Vec<_>>();
            &projected
        };
        match &self.assertion {
            Assertion::Iq { candidate } | Assertion::LtStar { candidate, .. } => {
                let indicator = if prefs.first() == Some(candidate) {
                    Ratio::one()
                } else {
                    Ratio::zero()
                };
                indicator - self.threshold_per_ballot.as_ref().unwrap()
            }
            Assertion::Ut { candidate, .. } => {
                let indicator = if prefs.first() == Some(candidate) {
                    Ratio::one()
                } else {
                    Ratio::zero()
                };
                self.threshold_per_ballot.clone().unwrap() - indicator
            }
            Assertion::AgStar {
                winner,
                loser,
                seated,
                tau_lower,
                tau_upper,
            } => {
                agstar_contrib_min(prefs, *winner, seated, tau_lower)
                    - agstar_contrib_max(prefs, *loser, *winner, seated, tau_upper)
            }
            Assertion::NlStar {
                winner,
                loser,
                seated,
                tau_lower,
                tau_upper,
                g_star,
                o_star,
            } => {
                nlstar_contrib_min(prefs, *winner, seated, tau_lower, o_star)
                    - nlstar_contrib_max(prefs, *loser, *winner, seated, tau_upper, g_star)
            }
        }
    }

    /// Scores one ballot into `[0, upper]`.
    pub fn score(&self, raw_prefs: &[CandidateId]) -> Ratio {
        if self.degenerate {
            return if self.margin.is_positive() {
                Ratio::one()
            } else {
                Ratio::zero()
            };
        }
        let d = self.contribution(raw_prefs);
        let minus_2l = -(&self.lower_d + &self.lower_d);
        (d - &self.lower_d) / minus_2l
    }

    pub fn margin_f64(&self) -> f64 {
        ratio_to_f64(&self.margin)
    }

    pub fn mean_f64(&self) -> f64 {
        ratio_to_f64(&self.mean)
    }

    pub fn upper_f64(&self) -> f64 {
        ratio_to_f64(&self.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::eval;
    use crate::rational;
    use crate::testutil::{demo_election as demo, group};

    fn c(i: u32) -> CandidateId {
        CandidateId(i)
    }

    #[test]
    fn plain_ag_margin_matches_the_tally_difference() {
        let e = demo();
        let a = Assorter::build(&Assertion::ag(c(0), c(4)), &e);
        // mean = (9001 - 50 + 21001) / (2 * 21001), margin = 8951/21001.
        assert_eq!(a.mean, rational(9001 - 50 + 21001, 2 * 21001));
        assert_eq!(a.margin, rational(8951, 21001));
        assert_eq!(a.upper, Ratio::one());
        assert!(!a.degenerate);
        // Scores stay in [0, u] on every reported ballot shape.
        for g in e.ballots() {
            let s = a.score(g.ranking.prefs());
            assert!(s >= Ratio::zero() && s <= a.upper);
        }
    }

    #[test]
    fn iq_margin_flips_when_enough_ballots_move() {
        let e = demo();
        let a = Assorter::build(&Assertion::Iq { candidate: c(0) }, &e);
        assert!(a.margin.is_positive());

        // Flipping 2001 first-preference c1 ballots to exhausted kills the
        // quota: 9001 - 2001 = 7000 < 7001.
        let altered = Election::new(
            "altered",
            e.candidate_names().to_vec(),
            vec![
                group(&[0, 2], 8001 - 2001),
                group(&[], 2001),
                group(&[0], 1000),
                group(&[1, 2, 3], 3000),
                group(&[2, 3], 5000),
                group(&[3, 0, 1], 3950),
                group(&[4, 1], 50),
            ],
            2,
            Some(e.quota()),
        )
        .unwrap();
        let b = Assorter::build(&Assertion::Iq { candidate: c(0) }, &altered);
        assert!(!b.margin.is_positive());
        assert!(!eval(&Assertion::Iq { candidate: c(0) }, &altered).holds);
    }

    #[test]
    fn ut_mean_below_half_when_assertion_fails() {
        let e = demo();
        let a = Assorter::build(
            &Assertion::Ut {
                candidate: c(0),
                tau_upper: rational(1, 5),
            },
            &e,
        );
        assert!(a.mean < rational(1, 2));
        assert!(a.margin.is_negative());
    }

    #[test]
    fn exclusion_projects_raw_ballots_before_scoring() {
        let e = demo();
        let batch: BTreeSet<_> = [c(4)].into();
        let projected = e.without_candidates(&batch);
        let assertion = Assertion::Iq { candidate: c(1) };
        let a = Assorter::build_excluding(&assertion, &projected, batch);
        // The raw [c5, c2] ballot scores as a first preference for c2.
        let first_pref_score = a.score(&[c(4), c(1)]);
        let direct = a.score(&[c(1)]);
        assert_eq!(first_pref_score, direct);
    }

    #[test]
    fn degenerate_always_true_bound() {
        // Quota 1 makes IQ(c) hold for any candidate with a ballot, and the
        // threshold side of d collapses to zero: degenerate, margin +1.
        let e = Election::new(
            "tiny",
            vec!["a".into(), "b".into()],
            vec![group(&[0], 3)],
            1,
            Some(1),
        )
        .unwrap();
        let a = Assorter::build(&Assertion::Iq { candidate: c(0) }, &e);
        assert!(a.degenerate);
        assert_eq!(a.margin, Ratio::one());
        let b = Assorter::build(&Assertion::Iq { candidate: c(1) }, &e);
        assert!(b.degenerate);
        assert_eq!(b.margin, -Ratio::one());
    }
}
