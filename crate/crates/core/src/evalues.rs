//! Selective e-values and the eBH step-up rule.
//!
//! Within a group every non-zero e-value equals
//! `(1 + R)/θ̂ · 1/(1 + R(t̂))`, where `R(t)` counts residual scores at or
//! above the score cut-off `t̂`. Values are kept as exact ratios of counts.

use crate::engine::{prepare, GroupView};
use crate::error::{PspError, Result};
use crate::exact::{gcd, le_scaled_reduced, Ratio};
use crate::types::{
    ClassLabel, Decision, DecisionReport, EvidenceKind, GroupOutcome, GroupPartition, ScoreMatrix,
};

/// E-values of one group, aligned with [`GroupView::subjects`].
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEValues {
    pub group: usize,
    pub subjects: Vec<usize>,
    pub evalues: Vec<Ratio>,
    /// Score cut-off; `None` stands for `+∞`.
    pub score_cutoff: Option<f64>,
}

/// Outcome of eBH in one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EThreshold {
    /// `e_(l̂)`; `None` stands for `+∞` (nothing decided).
    pub threshold: Option<Ratio>,
    pub l_hat: Option<usize>,
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(PspError::AlphaOutOfRange { group: 0, alpha })
    }
}

/// Smallest candidate score `t` with
/// `m_g/(1+R) · (1 + R(t))/S(t) <= α'/θ̂`, where `S(t)` counts subject scores
/// at or above `t`. Candidates are the subject scores and the residual
/// scores. `S(t) = 0` fails the criterion. Returns `None` when no candidate
/// qualifies.
pub fn score_threshold(view: &GroupView, alpha_prime: f64) -> Result<Option<f64>> {
    check_level(alpha_prime)?;
    let mut subjects = view.subject_scores.clone();
    subjects.sort_unstable_by(f64::total_cmp);
    let mut residuals = view.residual_scores.clone();
    residuals.sort_unstable_by(f64::total_cmp);

    let m_g = subjects.len() as u128;
    let r1 = 1 + residuals.len() as u128;
    let theta = view.theta_hat;
    // Sweep the merged candidates in ascending order; counts at or above a
    // candidate shrink as the sweep advances.
    let (mut si, mut ri) = (0usize, 0usize);
    while si < subjects.len() || ri < residuals.len() {
        let t = match (subjects.get(si), residuals.get(ri)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        let s_t = (subjects.len() - si) as u128;
        let r_t = (residuals.len() - ri) as u128;
        // m_g (1 + R(t)) θ.num <= α' θ.den (1 + R) S(t)
        if s_t > 0 {
            let lhs = m_g * (1 + r_t) * theta.num as u128;
            let rhs = theta.den as u128 * r1 * s_t;
            if le_scaled_reduced(lhs, rhs, alpha_prime) {
                return Ok(Some(t));
            }
        }
        while si < subjects.len() && subjects[si] == t {
            si += 1;
        }
        while ri < residuals.len() && residuals[ri] == t {
            ri += 1;
        }
    }
    Ok(None)
}

/// E-values for a given score cut-off.
pub fn selective_evalues(view: &GroupView, score_cutoff: Option<f64>) -> GroupEValues {
    let evalues = match score_cutoff {
        None => vec![Ratio::ZERO; view.subjects.len()],
        Some(t) => {
            let r_t = view.residual_scores.iter().filter(|&&v| v >= t).count() as u128;
            let theta = view.theta_hat;
            // (1 + R) θ.den / (θ.num (1 + R(t)))
            let mut num = (1 + view.residual_count() as u128) * theta.den as u128;
            let mut den = theta.num as u128 * (1 + r_t);
            let g = gcd(num, den);
            num /= g;
            den /= g;
            let value = Ratio::new(
                u64::try_from(num).expect("e-value numerator fits in 64 bits"),
                u64::try_from(den).expect("e-value denominator fits in 64 bits"),
            );
            view.subject_scores
                .iter()
                .map(|&s| if s >= t { value } else { Ratio::ZERO })
                .collect()
        }
    };
    GroupEValues {
        group: view.group,
        subjects: view.subjects.clone(),
        evalues,
        score_cutoff,
    }
}

/// eBH: `l̂ = max{l : e_(l) >= m_g/(l·α)}` over e-values sorted descending.
pub fn ebh_threshold(evalues: &[Ratio], alpha: f64) -> EThreshold {
    let m_g = evalues.len() as u128;
    let mut order: Vec<usize> = (0..evalues.len()).collect();
    order.sort_by(|&a, &b| evalues[b].cmp(&evalues[a]).then(a.cmp(&b)));
    for l in (1..=evalues.len()).rev() {
        let e = evalues[order[l - 1]];
        // m_g e.den <= l e.num α
        if !e.is_zero() && le_scaled_reduced(m_g * e.den as u128, l as u128 * e.num as u128, alpha) {
            return EThreshold {
                threshold: Some(e),
                l_hat: Some(l),
            };
        }
    }
    EThreshold {
        threshold: None,
        l_hat: None,
    }
}

/// Decision mask for one group: `e_j >= T̂`.
pub fn ebh_decide(evals: &GroupEValues, alpha: f64) -> (EThreshold, Vec<bool>) {
    let th = ebh_threshold(&evals.evalues, alpha);
    let mask = match th.threshold {
        None => vec![false; evals.evalues.len()],
        Some(t) => evals.evalues.iter().map(|&e| e >= t).collect(),
    };
    (th, mask)
}

/// The e-value procedure end to end, with one `α'` per group.
pub fn epsp_run(
    target_scores: &ScoreMatrix,
    holdout_scores: &ScoreMatrix,
    pre_target: &[ClassLabel],
    pre_holdout: &[ClassLabel],
    holdout_truth: &[ClassLabel],
    partition: &GroupPartition,
    alpha_prime: &[f64],
) -> Result<DecisionReport> {
    if alpha_prime.len() != partition.num_groups() {
        return Err(PspError::AlphaCountMismatch {
            expected: partition.num_groups(),
            actual: alpha_prime.len(),
        });
    }
    for (g, &a) in alpha_prime.iter().enumerate() {
        check_level(a).map_err(|_| PspError::AlphaOutOfRange { group: g, alpha: a })?;
    }
    let (calib, views) = prepare(
        target_scores,
        holdout_scores,
        pre_target,
        pre_holdout,
        holdout_truth,
        partition,
    )?;
    let m = pre_target.len();
    let mut decisions = vec![Decision::ABSTAIN; m];
    let mut evidence = vec![0.0; m];
    let mut outcomes = Vec::with_capacity(views.len());
    for view in &views {
        let g = view.group;
        let cutoff = score_threshold(view, alpha_prime[g])?;
        let evals = selective_evalues(view, cutoff);
        let (th, mask) = ebh_decide(&evals, partition.alpha(g));
        let mut decided = 0;
        for ((&j, &e), keep) in evals.subjects.iter().zip(&evals.evalues).zip(mask) {
            evidence[j] = e.to_f64();
            if keep {
                decisions[j] = pre_target[j].into();
                decided += 1;
            }
        }
        outcomes.push(GroupOutcome {
            theta_hat: calib.theta_hat(g),
            threshold: th.threshold.map_or(f64::INFINITY, Ratio::to_f64),
            l_hat: th.l_hat,
            subjects: view.subjects.len(),
            decided,
            holdouts: view.holdout_count,
            residuals: view.residual_count(),
        });
    }
    Ok(DecisionReport {
        kind: EvidenceKind::EValue,
        decisions,
        pre_labels: pre_target.to_vec(),
        groups: pre_target.iter().map(|&l| partition.group_of(l)).collect(),
        evidence,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(subjects: &[f64], residuals: &[f64], holdout_count: usize) -> GroupView {
        GroupView {
            group: 0,
            subjects: (0..subjects.len()).collect(),
            subject_scores: subjects.to_vec(),
            residual_scores: residuals.to_vec(),
            holdout_count,
            theta_hat: Ratio::new(1 + residuals.len() as u64, 1 + holdout_count as u64),
        }
    }

    /// Direct quadratic scan of the candidate set with float arithmetic on
    /// the unsimplified criterion.
    fn naive_cutoff(v: &GroupView, alpha_prime: f64) -> Option<f64> {
        let mut cands: Vec<f64> = v
            .subject_scores
            .iter()
            .chain(&v.residual_scores)
            .copied()
            .collect();
        cands.sort_by(f64::total_cmp);
        let m_g = v.subject_scores.len() as f64;
        let r = v.residual_scores.len() as f64;
        let theta = v.theta_hat.to_f64();
        cands.into_iter().find(|&t| {
            let s_t = v.subject_scores.iter().filter(|&&s| s >= t).count() as f64;
            let r_t = v.residual_scores.iter().filter(|&&s| s >= t).count() as f64;
            s_t > 0.0 && m_g / (1.0 + r) * (1.0 + r_t) / s_t <= alpha_prime / theta
        })
    }

    #[test]
    fn balanced_counts_take_minimum_candidate() {
        // 10 subjects, 1 residual, 20 hold-outs: θ̂ = 2/21 <= α'
        let subjects: Vec<f64> = (0..10).map(|i| 0.5 + i as f64 * 0.05).collect();
        let v = view(&subjects, &[0.1], 20);
        let t = score_threshold(&v, 0.3).unwrap();
        assert_eq!(t, Some(0.1));
        assert_eq!(t, naive_cutoff(&v, 0.3));
    }

    #[test]
    fn no_residuals_scan() {
        let v = view(&[0.2, 0.4, 0.9], &[], 5);
        for a in [0.1, 0.2, 0.5, 0.9] {
            assert_eq!(score_threshold(&v, a).unwrap(), naive_cutoff(&v, a), "alpha' {a}");
        }
    }

    #[test]
    fn unsatisfiable_gives_infinity() {
        let v = view(&[0.1, 0.2], &[0.9, 0.8, 0.7, 0.6], 4);
        assert_eq!(score_threshold(&v, 0.01).unwrap(), None);
    }

    #[test]
    fn alpha_prime_must_be_open_unit() {
        let v = view(&[0.1], &[], 0);
        assert!(score_threshold(&v, 1.0).is_err());
        assert!(score_threshold(&v, 0.0).is_err());
    }

    #[test]
    fn evalue_formula() {
        // R = 3, θ̂ = 0.4 = 4/10, one residual at or above the cut-off
        let v = view(&[0.8, 0.2], &[0.9, 0.1, 0.3], 9);
        assert_eq!(v.theta_hat.to_f64(), 0.4);
        let e = selective_evalues(&v, Some(0.5));
        assert_eq!(e.evalues[0], Ratio::new(5, 1));
        assert_eq!(e.evalues[1], Ratio::ZERO);
        let none = selective_evalues(&v, None);
        assert!(none.evalues.iter().all(|e| e.is_zero()));
    }

    #[test]
    fn ebh_worked_example() {
        let e = [Ratio::new(10, 1), Ratio::new(10, 1), Ratio::ZERO];
        let th = ebh_threshold(&e, 0.2);
        assert_eq!(th.l_hat, Some(2));
        assert_eq!(th.threshold, Some(Ratio::new(10, 1)));
    }

    #[test]
    fn all_zero_evalues_abstain() {
        let evals = GroupEValues {
            group: 0,
            subjects: vec![0, 1],
            evalues: vec![Ratio::ZERO; 2],
            score_cutoff: None,
        };
        let (th, mask) = ebh_decide(&evals, 0.5);
        assert_eq!(th.threshold, None);
        assert_eq!(mask, vec![false, false]);
    }

    #[test]
    fn ties_at_threshold_are_decided() {
        let evals = GroupEValues {
            group: 0,
            subjects: vec![0, 1, 2, 3],
            evalues: vec![
                Ratio::new(20, 1),
                Ratio::new(20, 1),
                Ratio::new(20, 1),
                Ratio::ZERO,
            ],
            score_cutoff: Some(0.0),
        };
        let (th, mask) = ebh_decide(&evals, 0.2);
        assert_eq!(th.l_hat, Some(3));
        assert_eq!(mask, vec![true, true, true, false]);
    }

    #[test]
    fn empty_group_is_empty_fragment() {
        let v = view(&[], &[0.3], 2);
        assert_eq!(score_threshold(&v, 0.1).unwrap(), None);
        let evals = selective_evalues(&v, None);
        let (th, mask) = ebh_decide(&evals, 0.1);
        assert!(mask.is_empty());
        assert_eq!(th.l_hat, None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cutoff_is_candidate_and_matches_scan(
                subjects in proptest::collection::vec(0u8..20, 0..30),
                residuals in proptest::collection::vec(0u8..20, 0..30),
                extra in 0usize..30,
                alpha_prime in 0.01f64..0.99,
            ) {
                // coarse grid forces ties
                let s: Vec<f64> = subjects.iter().map(|&v| v as f64 / 20.0).collect();
                let r: Vec<f64> = residuals.iter().map(|&v| v as f64 / 20.0).collect();
                let v = view(&s, &r, r.len() + extra);
                let got = score_threshold(&v, alpha_prime).unwrap();
                if let Some(t) = got {
                    prop_assert!(s.contains(&t) || r.contains(&t));
                }
                // the float scan may disagree only on exact-boundary cases
                let naive = naive_cutoff(&v, alpha_prime);
                if got != naive {
                    let t = got.or(naive).unwrap();
                    let s_t = s.iter().filter(|&&x| x >= t).count() as f64;
                    let r_t = r.iter().filter(|&&x| x >= t).count() as f64;
                    let lhs = s.len() as f64 / (1.0 + r.len() as f64) * (1.0 + r_t) / s_t;
                    let rhs = alpha_prime / v.theta_hat.to_f64();
                    prop_assert!((lhs - rhs).abs() < 1e-9 * rhs.max(1.0));
                }
                let e = selective_evalues(&v, got);
                let nonzero: Vec<Ratio> = e.evalues.iter().copied().filter(|e| !e.is_zero()).collect();
                prop_assert!(nonzero.windows(2).all(|w| w[0] == w[1]));
            }
        }
    }
}
