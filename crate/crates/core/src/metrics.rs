//! Error and power functionals for one replication, and their aggregation.

use crate::error::{PspError, Result};
use crate::types::{ClassLabel, Decision, GroupPartition};

fn check_len(decisions: usize, truth: usize) -> Result<()> {
    if decisions != truth {
        return Err(PspError::LengthMismatch {
            what: "truth labels",
            expected: decisions,
            actual: truth,
        });
    }
    Ok(())
}

/// False and total decisions landing in `group`.
pub fn group_counts(
    decisions: &[Decision],
    truth: &[ClassLabel],
    group: &[ClassLabel],
) -> Result<(usize, usize)> {
    check_len(decisions.len(), truth.len())?;
    let mut false_count = 0;
    let mut total = 0;
    for (d, y) in decisions.iter().zip(truth) {
        if let Some(label) = d.as_label() {
            if group.contains(&label) {
                total += 1;
                if label != *y {
                    false_count += 1;
                }
            }
        }
    }
    Ok((false_count, total))
}

/// False decision proportion within a label group: `false / (1 ∨ total)`.
pub fn group_fdp(decisions: &[Decision], truth: &[ClassLabel], group: &[ClassLabel]) -> Result<f64> {
    let (f, t) = group_counts(decisions, truth, group)?;
    Ok(f as f64 / t.max(1) as f64)
}

/// Fraction of all subjects labelled correctly; abstentions count as misses.
pub fn overall_power(decisions: &[Decision], truth: &[ClassLabel]) -> Result<f64> {
    check_len(decisions.len(), truth.len())?;
    if truth.is_empty() {
        return Err(PspError::EmptyInput);
    }
    let hits = decisions
        .iter()
        .zip(truth)
        .filter(|(d, y)| d.as_label() == Some(**y))
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Correct decisions for class `k` over true members of `k`; `None` when the
/// class is absent from `truth`.
pub fn classwise_power(
    decisions: &[Decision],
    truth: &[ClassLabel],
    k: ClassLabel,
) -> Result<Option<f64>> {
    check_len(decisions.len(), truth.len())?;
    let members = truth.iter().filter(|&&y| y == k).count();
    if members == 0 {
        return Ok(None);
    }
    let hits = decisions
        .iter()
        .zip(truth)
        .filter(|(d, y)| **y == k && d.as_label() == Some(k))
        .count();
    Ok(Some(hits as f64 / members as f64))
}

/// Metrics of one replication at one target level.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationMetrics {
    /// Per group: FDP, false decisions, decisions.
    pub group_fdp: Vec<f64>,
    pub group_false: Vec<usize>,
    pub group_decided: Vec<usize>,
    pub overall_power: f64,
    /// Per class: FDP of decisions equal to that class.
    pub class_fdp: Vec<f64>,
    pub class_power: Vec<Option<f64>>,
}

impl ReplicationMetrics {
    pub fn compute(
        decisions: &[Decision],
        truth: &[ClassLabel],
        partition: &GroupPartition,
    ) -> Result<Self> {
        let mut group_fdp = Vec::new();
        let mut group_false = Vec::new();
        let mut group_decided = Vec::new();
        for g in 0..partition.num_groups() {
            let (f, t) = group_counts(decisions, truth, partition.members(g))?;
            group_fdp.push(f as f64 / t.max(1) as f64);
            group_false.push(f);
            group_decided.push(t);
        }
        let k = partition.num_classes();
        let mut class_fdp = Vec::with_capacity(k);
        let mut class_power = Vec::with_capacity(k);
        for c in 0..k {
            let label = ClassLabel::from_index(c);
            class_fdp.push(group_fdp_single(decisions, truth, label));
            class_power.push(classwise_power(decisions, truth, label)?);
        }
        Ok(ReplicationMetrics {
            group_fdp,
            group_false,
            group_decided,
            overall_power: overall_power(decisions, truth)?,
            class_fdp,
            class_power,
        })
    }
}

fn group_fdp_single(decisions: &[Decision], truth: &[ClassLabel], label: ClassLabel) -> f64 {
    group_fdp(decisions, truth, &[label]).expect("lengths checked by caller")
}

/// Sample mean with its Monte-Carlo standard error (`sd / √n`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// `None` with fewer than two observations.
    pub se: Option<f64>,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Some(Estimate { mean, se, n })
    }

    /// `mean + z·se`, or the mean alone when no standard error exists.
    pub fn upper(&self, z: f64) -> f64 {
        self.mean + z * self.se.unwrap_or(0.0)
    }

    pub fn lower(&self, z: f64) -> f64 {
        self.mean - z * self.se.unwrap_or(0.0)
    }
}

/// Ratio-of-means `mean(false) / mean(decided)` with a delta-method
/// standard error.
fn ratio_of_means(num: &[f64], den: &[f64]) -> Option<Estimate> {
    let n = num.len();
    let mean_den = den.iter().sum::<f64>() / n as f64;
    if n == 0 || mean_den == 0.0 {
        return None;
    }
    let mean_num = num.iter().sum::<f64>() / n as f64;
    let ratio = mean_num / mean_den;
    let se = (n > 1).then(|| {
        let resid: Vec<f64> = num.iter().zip(den).map(|(a, b)| a - ratio * b).collect();
        let var = resid.iter().map(|r| r * r).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt() / mean_den
    });
    Some(Estimate {
        mean: ratio,
        se,
        n,
    })
}

/// Aggregate over replications at one target level.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub reps: usize,
    pub group_fdr: Vec<Estimate>,
    /// `None` when no replication made a decision in the group.
    pub group_mfdr: Vec<Option<Estimate>>,
    pub group_decided: Vec<Estimate>,
    pub overall_power: Estimate,
    pub class_fdr: Vec<Estimate>,
    /// Over replications where the class occurred; `None` if it never did.
    pub class_power: Vec<Option<Estimate>>,
}

pub fn aggregate(reps: &[ReplicationMetrics]) -> Result<MetricsSummary> {
    let first = reps.first().ok_or(PspError::EmptyInput)?;
    let groups = first.group_fdp.len();
    let classes = first.class_fdp.len();
    let column = |f: &dyn Fn(&ReplicationMetrics) -> f64| -> Vec<f64> { reps.iter().map(f).collect() };
    let est = |v: Vec<f64>| Estimate::from_samples(&v).expect("non-empty");
    let mut group_fdr = Vec::with_capacity(groups);
    let mut group_mfdr = Vec::with_capacity(groups);
    let mut group_decided = Vec::with_capacity(groups);
    for g in 0..groups {
        group_fdr.push(est(column(&|r| r.group_fdp[g])));
        let f = column(&|r| r.group_false[g] as f64);
        let d = column(&|r| r.group_decided[g] as f64);
        group_mfdr.push(ratio_of_means(&f, &d));
        group_decided.push(est(d));
    }
    let class_fdr = (0..classes).map(|c| est(column(&|r| r.class_fdp[c]))).collect();
    let class_power = (0..classes)
        .map(|c| {
            let present: Vec<f64> = reps.iter().filter_map(|r| r.class_power[c]).collect();
            Estimate::from_samples(&present)
        })
        .collect();
    Ok(MetricsSummary {
        reps: reps.len(),
        group_fdr,
        group_mfdr,
        group_decided,
        overall_power: est(column(&|r| r.overall_power)),
        class_fdr,
        class_power,
    })
}

/// Proportion of selected prediction sets that miss the true label.
pub fn false_coverage_proportion(
    selected: &[usize],
    sets: &[Vec<ClassLabel>],
    truth: &[ClassLabel],
) -> f64 {
    let misses = selected
        .iter()
        .filter(|&&j| !sets[j].contains(&truth[j]))
        .count();
    misses as f64 / selected.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lbl(v: u32) -> ClassLabel {
        ClassLabel::from_index(v as usize - 1)
    }

    fn dec(v: &[u32]) -> Vec<Decision> {
        v.iter()
            .map(|&x| if x == 0 { Decision::ABSTAIN } else { Decision::label(lbl(x)) })
            .collect()
    }

    fn lbls(v: &[u32]) -> Vec<ClassLabel> {
        v.iter().map(|&x| lbl(x)).collect()
    }

    #[test]
    fn fdp_guards_empty_decisions() {
        assert_eq!(group_fdp(&dec(&[0, 0]), &lbls(&[1, 2]), &[lbl(1)]).unwrap(), 0.0);
    }

    #[test]
    fn fdp_hand_count() {
        let f = group_fdp(&dec(&[1, 1, 0]), &lbls(&[1, 2, 1]), &[lbl(1)]).unwrap();
        assert_eq!(f, 0.5);
        assert_eq!(group_fdp(&dec(&[1, 2]), &lbls(&[1, 2]), &[lbl(1), lbl(2)]).unwrap(), 0.0);
    }

    #[test]
    fn fdp_length_checked() {
        assert!(group_fdp(&dec(&[1]), &lbls(&[1, 2]), &[lbl(1)]).is_err());
    }

    #[test]
    fn power_cases() {
        assert_eq!(overall_power(&dec(&[0, 0]), &lbls(&[1, 2])).unwrap(), 0.0);
        assert_eq!(overall_power(&dec(&[1, 2]), &lbls(&[1, 2])).unwrap(), 1.0);
        let p = overall_power(&dec(&[1, 0, 2]), &lbls(&[1, 2, 2])).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn classwise_power_cases() {
        assert_eq!(classwise_power(&dec(&[1]), &lbls(&[1]), lbl(2)).unwrap(), None);
        let p = classwise_power(&dec(&[2, 2, 2, 0, 1]), &lbls(&[2, 2, 2, 2, 1]), lbl(2)).unwrap();
        assert_eq!(p, Some(0.75));
        let truth = lbls(&[1, 2, 3, 3]);
        let d: Vec<Decision> = truth.iter().map(|&l| Decision::label(l)).collect();
        for c in 1..=3 {
            assert_eq!(classwise_power(&d, &truth, lbl(c)).unwrap(), Some(1.0));
        }
    }

    fn rep(fdp: f64, f: usize, d: usize) -> ReplicationMetrics {
        ReplicationMetrics {
            group_fdp: vec![fdp],
            group_false: vec![f],
            group_decided: vec![d],
            overall_power: 0.5,
            class_fdp: vec![fdp],
            class_power: vec![None],
        }
    }

    #[test]
    fn single_replication_has_no_se() {
        let s = aggregate(&[rep(0.1, 1, 10)]).unwrap();
        assert_eq!(s.group_fdr[0].mean, 0.1);
        assert_eq!(s.group_fdr[0].se, None);
    }

    #[test]
    fn two_point_statistics() {
        let s = aggregate(&[rep(0.0, 0, 5), rep(0.2, 1, 5)]).unwrap();
        assert!((s.group_fdr[0].mean - 0.1).abs() < 1e-15);
        assert!((s.group_fdr[0].se.unwrap() - 0.1).abs() < 1e-15);
        assert!((s.group_mfdr[0].unwrap().mean - 0.1).abs() < 1e-15);
        assert_eq!(s.class_power[0], None);
    }

    #[test]
    fn mfdr_missing_without_decisions() {
        let s = aggregate(&[rep(0.0, 0, 0), rep(0.0, 0, 0)]).unwrap();
        assert_eq!(s.group_mfdr[0], None);
        assert_eq!(aggregate(&[]).unwrap_err(), PspError::EmptyInput);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn instance() -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
            (1usize..60).prop_flat_map(|m| {
                (
                    proptest::collection::vec(0u32..=4, m),
                    proptest::collection::vec(1u32..=4, m),
                )
            })
        }

        proptest! {
            #[test]
            fn group_fdp_reduces_to_overall_and_classwise((d, y) in instance()) {
                let decisions = dec(&d);
                let truth = lbls(&y);
                // overall FDP written out directly
                let made = d.iter().filter(|&&v| v != 0).count();
                let wrong = d.iter().zip(&y).filter(|(&a, &b)| a != 0 && a != b).count();
                let all = lbls(&[1, 2, 3, 4]);
                prop_assert_eq!(
                    group_fdp(&decisions, &truth, &all).unwrap(),
                    wrong as f64 / made.max(1) as f64
                );
                for k in 1..=4u32 {
                    let made_k = d.iter().filter(|&&v| v == k).count();
                    let wrong_k = d.iter().zip(&y).filter(|(&a, &b)| a == k && b != k).count();
                    prop_assert_eq!(
                        group_fdp(&decisions, &truth, &[lbl(k)]).unwrap(),
                        wrong_k as f64 / made_k.max(1) as f64
                    );
                }
                // false decisions add up over a disjoint partition
                let p = GroupPartition::new(&[vec![1, 4], vec![2], vec![3]], &[0.1; 3], 4).unwrap();
                let m = ReplicationMetrics::compute(&decisions, &truth, &p).unwrap();
                prop_assert_eq!(m.group_false.iter().sum::<usize>(), wrong);
            }
        }
    }
}
