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

//! The ALPHA sequential test and expected-sample-size (ASN) estimation.
//!
//! ALPHA maintains a nonnegative supermartingale against the null hypothesis
//! that the assorter's population mean is at most 1/2. Each draw multiplies
//! the wealth `T` by `(x*eta/mu + (u - x)*(u - eta)/(u - mu)) / u`, where `mu`
//! is the null mean updated for sampling without replacement and `eta` is a
//! truncated-shrinkage estimate of the alternative. `p = min(1, 1/T)` is an
//! anytime-valid p-value; the audit certifies when it falls to the risk
//! limit.
//!
//! Sample sizes are estimated on a deterministic synthetic sequence: every
//! draw carries the clean reported-consistent value except that every
//! `ceil(1/r)`-th draw is a one-vote overstatement, matching an assumed error
//! rate of `r` overstatements per ballot.

use crate::assorter::Assorter;
use crate::{ratio_to_f64, Error, Result};
use serde::{Deserialize, Serialize};

/// Whether samples are scored against CVRs (comparison) or on their own
/// (polling).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditMode {
    #[default]
    Comparison,
    Polling,
}

/// Audit parameters: risk limit 10%, two overstatements per 1000 ballots,
/// shrinkage weight 100, ballot-comparison scoring.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AuditParams {
    pub risk_limit: f64,
    /// Assumed overstatements per ballot when estimating sample sizes.
    pub error_rate: f64,
    /// Prior weight `d` of the shrink-trunc estimate of the alternative.
    pub shrink_d: u32,
    /// Floor spacing above the null mean; defaults to `u / 1000`.
    pub eps_floor: Option<f64>,
    pub mode: AuditMode,
}

impl Default for AuditParams {
    fn default() -> Self {
        AuditParams {
            risk_limit: 0.10,
            error_rate: 0.002,
            shrink_d: 100,
            eps_floor: None,
            mode: AuditMode::Comparison,
        }
    }
}

/// Running state of one ALPHA test.
#[derive(Clone, Debug)]
pub struct AlphaState {
    upper: f64,
    eta0: f64,
    population: u64,
    shrink_d: f64,
    eps: f64,
    log_t: f64,
    drawn: u64,
    sum: f64,
    /// Set once the null mean is forced above `u`: no rejection is possible
    /// any more and the p-value stays 1.
    dead: bool,
    /// Set once the null mean is forced below 0: the null is impossible.
    certain: bool,
}

impl AlphaState {
    /// Starts a test of the null "population mean <= 1/2" for values in
    /// `[0, upper]`, with `eta0` the anticipated (alternative) mean.
    pub fn new(upper: f64, eta0: f64, population: u64, params: &AuditParams) -> AlphaState {
        let eps = params.eps_floor.unwrap_or(upper / 1000.0);
        AlphaState {
            upper,
            eta0: eta0.clamp(0.0, upper),
            population,
            shrink_d: params.shrink_d as f64,
            eps,
            log_t: 0.0,
            drawn: 0,
            sum: 0.0,
            dead: false,
            certain: false,
        }
    }

    /// Feeds one draw and returns the attained p-value.
    pub fn push(&mut self, x: f64) -> Result<f64> {
        if !(0.0..=self.upper + 1e-9).contains(&x) {
            return Err(Error::ValueOutOfRange {
                value: x,
                upper: self.upper,
            });
        }
        if self.dead || self.certain {
            self.drawn += 1;
            self.sum += x;
            return Ok(self.p_value());
        }
        let u = self.upper;
        let n = self.population as f64;
        let j = self.drawn as f64; // draws before this one
        // Null mean for draw j+1 under sampling without replacement.
        let mu = (n / 2.0 - self.sum) / (n - j);
        if mu < 0.0 {
            self.certain = true;
        } else if mu > u {
            self.dead = true;
        } else {
            let shrunk = (self.shrink_d * self.eta0 + self.sum) / (self.shrink_d + j);
            let floor = mu + self.eps / (self.shrink_d + j).sqrt();
            let eta = shrunk.max(floor).min(u - self.eps);
            let factor = if mu == 0.0 {
                // All null mass spent: any positive draw is infinite evidence.
                if x > 0.0 {
                    self.certain = true;
                    1.0
                } else {
                    1.0
                }
            } else if (u - mu).abs() < f64::EPSILON {
                (x * eta / mu) / u
            } else {
                (x * eta / mu + (u - x) * (u - eta) / (u - mu)) / u
            };
            if factor > 0.0 {
                self.log_t += factor.ln();
            } else {
                self.log_t = f64::NEG_INFINITY;
            }
        }
        self.drawn += 1;
        self.sum += x;
        Ok(self.p_value())
    }

    /// `min(1, 1/T)` at the current draw.
    pub fn p_value(&self) -> f64 {
        if self.certain {
            return 0.0;
        }
        if self.dead {
            return 1.0;
        }
        (-self.log_t).exp().min(1.0)
    }
}

/// A completed test trajectory: the p-value after every draw, and the first
/// position (1-based) at which it reached the risk limit.
#[derive(Clone, Debug)]
pub struct RiskTrajectory {
    pub p_values: Vec<f64>,
    pub decision_index: Option<usize>,
}

impl RiskTrajectory {
    pub fn min_p(&self) -> f64 {
        self.p_values.iter().copied().fold(1.0, f64::min)
    }
}

/// Runs ALPHA over a whole sample sequence.
pub fn alpha_test(
    xs: &[f64],
    upper: f64,
    eta0: f64,
    population: u64,
    params: &AuditParams,
) -> Result<RiskTrajectory> {
    if xs.len() as u64 > population {
        return Err(Error::Input(format!(
            "sample of {} exceeds population {population}",
            xs.len()
        )));
    }
    let mut state = AlphaState::new(upper, eta0, population, params);
    let mut p_values = Vec::with_capacity(xs.len());
    let mut decision_index = None;
    for (i, &x) in xs.iter().enumerate() {
        let p = state.push(x)?;
        p_values.push(p);
        if decision_index.is_none() && p <= params.risk_limit {
            decision_index = Some(i + 1);
        }
    }
    Ok(RiskTrajectory {
        p_values,
        decision_index,
    })
}

/// The clean and one-vote-overstatement values of the comparison-audit
/// overstatement assorter, plus its upper bound, for a reported margin `v`
/// on an assorter bounded by `u`.
pub(crate) fn comparison_values(v: f64, u: f64) -> (f64, f64, f64) {
    let denom = 2.0 - v / u;
    let clean = 1.0 / denom;
    let one_vote_over = 0.5 / denom;
    let upper = 2.0 / denom;
    (clean, one_vote_over, upper)
}

/// The anticipated alternative mean used when testing the overstatement
/// assorter: midway between its clean value and its upper bound.
pub(crate) fn comparison_eta0(v: f64, u: f64) -> f64 {
    let (clean, _, upper) = comparison_values(v, u);
    (clean + upper) / 2.0
}

/// Expected number of ballots to certify `assorter` at the configured risk
/// limit and error rate, or `None` when no decision is reached within the
/// population (including every assertion with a nonpositive margin).
pub fn estimate_asn(assorter: &Assorter, population: u64, params: &AuditParams) -> Option<u64> {
    let v = assorter.margin_f64();
    if v <= 0.0 || population == 0 {
        return None;
    }
    let spacing = error_spacing(params.error_rate);
    match params.mode {
        AuditMode::Comparison => {
            let u = assorter.upper_f64();
            let (clean, over, b_upper) = comparison_values(v, u);
            let eta0 = comparison_eta0(v, u);
            let mut state = AlphaState::new(b_upper, eta0, population, params);
            run_to_decision(&mut state, population, params.risk_limit, |j| {
                if is_error_draw(j, spacing) {
                    over
                } else {
                    clean
                }
            })
        }
        AuditMode::Polling => {
            let u = assorter.upper_f64();
            let eta0 = assorter.mean_f64();
            // Deterministic interleaving of the reported scores, largest
            // remainder first, so running proportions track the reported mix.
            let total = assorter.population.max(1) as f64;
            let values: Vec<(f64, f64)> = assorter
                .reported_score_histogram()
                .iter()
                .map(|(score, count)| (*score, *count as f64 / total))
                .collect();
            let mut emitted = vec![0.0f64; values.len()];
            let mut state = AlphaState::new(u, eta0, population, params);
            let mut pick = |j: u64| {
                let mut best = 0;
                let mut best_deficit = f64::NEG_INFINITY;
                for (i, (_, share)) in values.iter().enumerate() {
                    let deficit = share * j as f64 - emitted[i];
                    if deficit > best_deficit {
                        best_deficit = deficit;
                        best = i;
                    }
                }
                emitted[best] += 1.0;
                values[best].0
            };
            run_to_decision(&mut state, population, params.risk_limit, |j| {
                let s = pick(j);
                if is_error_draw(j, spacing) {
                    (s - u / 2.0).max(0.0)
                } else {
                    s
                }
            })
        }
    }
}

fn error_spacing(error_rate: f64) -> Option<u64> {
    if error_rate > 0.0 {
        Some((1.0 / error_rate).ceil() as u64)
    } else {
        None
    }
}

fn is_error_draw(j: u64, spacing: Option<u64>) -> bool {
    matches!(spacing, Some(s) if j % s == 0)
}

fn run_to_decision(
    state: &mut AlphaState,
    population: u64,
    risk_limit: f64,
    mut value: impl FnMut(u64) -> f64,
) -> Option<u64> {
    for j in 1..=population {
        let p = state.push(value(j)).ok()?;
        if p <= risk_limit {
            return Some(j);
        }
    }
    None
}

/// Measures the attained risk for one assertion from a sample of
/// (reported score, audited score) pairs, comparison style.
pub fn measure_risk(
    sample: &[(f64, f64)],
    assorter: &Assorter,
    params: &AuditParams,
) -> Result<f64> {
    let u = assorter.upper_f64();
    let v = assorter.margin_f64();
    let denom = 2.0 - v / u;
    let b_upper = 2.0 / denom;
    let eta0 = comparison_eta0(v, u);
    let xs: Vec<f64> = sample
        .iter()
        .map(|(reported, audited)| {
            let overstatement = reported - audited;
            ((1.0 - overstatement / u) / denom).max(0.0)
        })
        .collect();
    if xs.is_empty() {
        return Ok(1.0);
    }
    let trajectory = alpha_test(&xs, b_upper, eta0, assorter.population, params)?;
    Ok(trajectory.min_p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::Assertion;
    use crate::assorter::Assorter;
    use crate::ballots::{BallotGroup, CandidateId, Election, Ranking};

    fn params() -> AuditParams {
        AuditParams::default()
    }

    #[test]
    fn maximal_evidence_reaches_a_decision() {
        let xs = vec![1.0; 200];
        let t = alpha_test(&xs, 1.0, 0.9, 10_000, &params()).unwrap();
        assert!(t.decision_index.is_some());
        // The p-value trajectory is non-increasing under constant maximal draws.
        for w in t.p_values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn null_consistent_data_never_decides() {
        let xs = vec![0.5; 500];
        let t = alpha_test(&xs, 1.0, 0.9, 10_000, &params()).unwrap();
        assert!(t.decision_index.is_none());
        for p in &t.p_values {
            assert!(*p >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn hand_computed_wealth_product() {
        // Five maximal draws with a pinned alternative of 3/4 and the null
        // mean pinned at 1/2 (huge population, huge shrink weight) multiply
        // the wealth by (3/2)^5 = 7.59375, p = 0.131687...
        let alpha = AuditParams {
            shrink_d: u32::MAX,
            ..params()
        };
        let xs = vec![1.0; 5];
        let t = alpha_test(&xs, 1.0, 0.75, u64::MAX / 2, &alpha).unwrap();
        let p = t.p_values[4];
        assert!((p - 1.0 / 7.59375).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn out_of_range_sample_is_rejected() {
        let err = alpha_test(&[1.5], 1.0, 0.9, 100, &params()).unwrap_err();
        assert!(matches!(err, Error::ValueOutOfRange { .. }));
    }

    fn unit_assorter(margin_thousandths: i64) -> Assorter {
        // A plain AG-shaped assorter over a synthetic two-candidate election
        // with the requested margin.
        let n: i64 = 2000;
        let w = (n + margin_thousandths * n / 1000) / 2;
        let l = n - w;
        let group = |ids: &[u32], count: u64| BallotGroup {
            ranking: Ranking::from_unchecked(ids.iter().map(|&i| CandidateId(i)).collect()),
            count,
        };
        let e = Election::new(
            "synthetic",
            vec!["w".into(), "l".into()],
            vec![group(&[0], w as u64), group(&[1], l as u64)],
            1,
            None,
        )
        .unwrap();
        Assorter::build(&Assertion::ag(CandidateId(0), CandidateId(1)), &e)
    }

    #[test]
    fn full_margin_certifies_quickly() {
        let n = 2000u64;
        let group = BallotGroup {
            ranking: Ranking::from_unchecked(vec![CandidateId(0)]),
            count: n,
        };
        let e = Election::new("unanimous", vec!["w".into(), "l".into()], vec![group], 1, None)
            .unwrap();
        let a = Assorter::build(&Assertion::ag(CandidateId(0), CandidateId(1)), &e);
        assert_eq!(a.margin_f64(), 1.0);
        let p = AuditParams {
            error_rate: 0.0,
            ..params()
        };
        let asn = estimate_asn(&a, n, &p).unwrap();
        assert!(asn < 25, "asn = {asn}");
    }

    #[test]
    fn zero_margin_is_infeasible() {
        let a = unit_assorter(0);
        assert_eq!(a.margin_f64(), 0.0);
        assert_eq!(estimate_asn(&a, 2000, &params()), None);
    }

    #[test]
    fn asn_is_anti_monotone_in_margin_and_monotone_in_error_rate() {
        let mut last = u64::MAX;
        for m in [50i64, 100, 200, 400, 600] {
            let a = unit_assorter(m);
            let asn = estimate_asn(&a, 2000, &params()).unwrap();
            assert!(asn <= last, "margin {m}: {asn} > {last}");
            last = asn;
        }
        let a = unit_assorter(100);
        let low_error = estimate_asn(
            &a,
            2000,
            &AuditParams {
                error_rate: 0.0,
                ..params()
            },
        )
        .unwrap();
        let high_error = estimate_asn(
            &a,
            2000,
            &AuditParams {
                error_rate: 0.01,
                ..params()
            },
        )
        .unwrap();
        assert!(high_error >= low_error);
        let strict_alpha = estimate_asn(
            &a,
            2000,
            &AuditParams {
                risk_limit: 0.05,
                ..params()
            },
        )
        .unwrap();
        let loose_alpha = estimate_asn(
            &a,
            2000,
            &AuditParams {
                risk_limit: 0.20,
                ..params()
            },
        )
        .unwrap();
        assert!(strict_alpha >= loose_alpha);
    }

    #[test]
    fn error_free_sample_of_size_asn_certifies() {
        let a = unit_assorter(300);
        let asn = estimate_asn(&a, 2000, &params()).unwrap();
        let mean = a.mean_f64();
        let sample: Vec<(f64, f64)> = (0..asn).map(|_| (mean, mean)).collect();
        let p = measure_risk(&sample, &a, &params()).unwrap();
        assert!(p <= params().risk_limit, "p = {p}");
    }

    #[test]
    fn empty_sample_has_p_one() {
        let a = unit_assorter(300);
        assert_eq!(measure_risk(&[], &a, &params()).unwrap(), 1.0);
    }

    #[test]
    fn two_vote_overstatements_keep_p_at_one() {
        let a = unit_assorter(300);
        let u = a.upper_f64();
        let sample: Vec<(f64, f64)> = (0..100).map(|_| (u, 0.0)).collect();
        let p = measure_risk(&sample, &a, &params()).unwrap();
        assert!(p >= 1.0 - 1e-9);
    }

    #[test]
    fn alpha_is_deterministic_and_permutation_stable_on_constant_data() {
        let xs = vec![0.7; 50];
        let a = alpha_test(&xs, 1.0, 0.8, 1000, &params()).unwrap();
        let b = alpha_test(&xs, 1.0, 0.8, 1000, &params()).unwrap();
        assert_eq!(a.p_values, b.p_values);
    }
}
