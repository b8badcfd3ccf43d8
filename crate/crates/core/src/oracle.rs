//! Population benchmark under a known mixture law.
//!
//! The optimal post-classification rule thresholds the true posterior of the
//! pre-assigned class. Its cut-off depends on the group-wise survival curves
//! of that posterior among all pre-classified subjects (`F1`) and among the
//! misclassified ones (`F0`), which are estimated here by Monte Carlo.

use rayon::prelude::*;

use crate::error::{PspError, Result};
use crate::models::{gmm_posterior, ArgmaxRule, GmmSpec, PreClassifier, ScoreFunction};
use crate::rng::stream_rng;
use crate::types::{ClassLabel, Decision, GroupPartition, ScoreMatrix};

pub const DEFAULT_MC_SIZE: usize = 100_000;
const MIN_MC_SIZE: usize = 1_000;
const SHARD: usize = 10_000;

/// Survival curves `F0`, `F1` tabulated on a sorted grid, plus `θ_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationCurves {
    grid: Vec<f64>,
    f0: Vec<f64>,
    f1: Vec<f64>,
    theta_r: f64,
    n_mc: usize,
}

impl PopulationCurves {
    /// Curves from explicit tabulations. The grid must be strictly increasing
    /// and both curves non-increasing with values in `[0, 1]`.
    pub fn from_parts(grid: Vec<f64>, f0: Vec<f64>, f1: Vec<f64>, theta_r: f64) -> Result<Self> {
        if f0.len() != grid.len() || f1.len() != grid.len() {
            return Err(PspError::LengthMismatch {
                what: "curve tabulation",
                expected: grid.len(),
                actual: f0.len().min(f1.len()),
            });
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PspError::InvalidSpec("grid must be strictly increasing".into()));
        }
        for f in [&f0, &f1] {
            if f.iter().any(|v| !(0.0..=1.0).contains(v)) || f.windows(2).any(|w| w[1] > w[0]) {
                return Err(PspError::InvalidSpec(
                    "curves must be non-increasing in [0, 1]".into(),
                ));
            }
        }
        if !(0.0..=1.0).contains(&theta_r) {
            return Err(PspError::InvalidSpec("theta_R outside [0, 1]".into()));
        }
        Ok(PopulationCurves {
            grid,
            f0,
            f1,
            theta_r,
            n_mc: 0,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn f1(&self) -> &[f64] {
        &self.f1
    }

    pub fn theta_r(&self) -> f64 {
        self.theta_r
    }

    /// Monte-Carlo draws behind the estimate (0 for hand-built curves).
    pub fn n_mc(&self) -> usize {
        self.n_mc
    }

    /// `R(t) = θ_R F0(t) / F1(t)` at grid point `idx`; `None` where `F1 = 0`.
    pub fn ratio(&self, idx: usize) -> Option<f64> {
        (self.f1[idx] > 0.0).then(|| self.theta_r * self.f0[idx] / self.f1[idx])
    }
}

/// Estimates `θ_R`, `F0`, `F1` for the subjects that `preclassifier` assigns
/// to `group`, using `n_mc` draws from `spec`.
///
/// The grid is `{0, 1}` together with every observed posterior value;
/// survival functions use strict `>`.
pub fn estimate_curves(
    spec: &GmmSpec,
    preclassifier: &dyn PreClassifier,
    group: &[ClassLabel],
    n_mc: usize,
    seed: u64,
) -> Result<PopulationCurves> {
    if n_mc < MIN_MC_SIZE {
        return Err(PspError::InvalidSpec(format!(
            "Monte-Carlo size {n_mc} is below {MIN_MC_SIZE}"
        )));
    }
    let posterior = gmm_posterior(spec);
    let k = spec.num_classes();
    let mut in_group = vec![false; k];
    for l in group {
        if l.index() >= k {
            return Err(PspError::LabelOutOfRange {
                label: l.value() as i64,
                k,
            });
        }
        in_group[l.index()] = true;
    }
    let shards = n_mc.div_ceil(SHARD);
    // (posterior of pre-assigned class, misclassified)
    let draws: Vec<(f64, bool)> = (0..shards)
        .into_par_iter()
        .flat_map_iter(|s| {
            let mut rng = stream_rng(seed, s as u64);
            let size = SHARD.min(n_mc - s * SHARD);
            let mut out = Vec::with_capacity(size);
            let mut post = vec![0.0; k];
            for sample in spec.sample(size, &mut rng) {
                let pre = preclassifier.preclassify(&sample.x, &mut rng);
                if in_group[pre.index()] {
                    posterior.scores_into(&sample.x, &mut post);
                    out.push((post[pre.index()], pre != sample.y));
                }
            }
            out
        })
        .collect();
    if draws.is_empty() {
        return Err(PspError::NoGroupMembers);
    }

    let mut all: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let mut wrong: Vec<f64> = draws.iter().filter(|d| d.1).map(|d| d.0).collect();
    all.sort_unstable_by(f64::total_cmp);
    wrong.sort_unstable_by(f64::total_cmp);
    let mut grid = Vec::with_capacity(all.len() + 2);
    grid.push(0.0);
    grid.extend(all.iter().copied().filter(|&v| v > 0.0 && v < 1.0));
    grid.push(1.0);
    grid.dedup();

    let survival = |sorted: &[f64], t: f64| -> f64 {
        if sorted.is_empty() {
            return 0.0;
        }
        let above = sorted.len() - sorted.partition_point(|&v| v <= t);
        above as f64 / sorted.len() as f64
    };
    let f0 = grid.iter().map(|&t| survival(&wrong, t)).collect();
    let f1 = grid.iter().map(|&t| survival(&all, t)).collect();
    Ok(PopulationCurves {
        grid,
        f0,
        f1,
        theta_r: wrong.len() as f64 / all.len() as f64,
        n_mc,
    })
}

/// Thresholding rule on the posterior of the pre-assigned class.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRule {
    pub group: Vec<ClassLabel>,
    pub t_star: f64,
    /// Distance from `t_star` to the preceding grid point.
    pub resolution: f64,
}

/// `t* = min{t on the grid : F1(t) > 0, R(t) <= α}`.
pub fn oracle_threshold(
    curves: &PopulationCurves,
    group: &[ClassLabel],
    alpha: f64,
) -> Result<OracleRule> {
    for idx in 0..curves.grid.len() {
        if let Some(r) = curves.ratio(idx) {
            if r <= alpha {
                let t_star = curves.grid[idx];
                let resolution = if idx == 0 {
                    0.0
                } else {
                    t_star - curves.grid[idx - 1]
                };
                return Ok(OracleRule {
                    group: group.to_vec(),
                    t_star,
                    resolution,
                });
            }
        }
    }
    Err(PspError::NoFeasibleThreshold { alpha })
}

/// Oracle rules for every group of `partition`, pre-classifying by the argmax
/// of the true posterior.
pub fn oracle_rules(
    spec: &GmmSpec,
    partition: &GroupPartition,
    n_mc: usize,
    seed: u64,
) -> Result<Vec<OracleRule>> {
    let rule = ArgmaxRule(gmm_posterior(spec));
    (0..partition.num_groups())
        .map(|g| {
            let members = partition.members(g);
            let curves = estimate_curves(spec, &rule, members, n_mc, seed)?;
            oracle_threshold(&curves, members, partition.alpha(g))
        })
        .collect()
}

/// Decides subject `j` iff the posterior of its pre-label strictly exceeds the
/// cut-off of the rule covering that label. Labels covered by no rule abstain.
pub fn oracle_decide(
    rules: &[OracleRule],
    posteriors: &ScoreMatrix,
    pre_labels: &[ClassLabel],
) -> Result<Vec<Decision>> {
    if posteriors.len() != pre_labels.len() {
        return Err(PspError::LengthMismatch {
            what: "pre-labels",
            expected: posteriors.len(),
            actual: pre_labels.len(),
        });
    }
    Ok(pre_labels
        .iter()
        .enumerate()
        .map(|(j, &label)| {
            let keep = rules
                .iter()
                .find(|r| r.group.contains(&label))
                .is_some_and(|r| posteriors.score(j, label) > r.t_star);
            if keep {
                Decision::label(label)
            } else {
                Decision::ABSTAIN
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lbl(v: u32) -> ClassLabel {
        ClassLabel::from_index(v as usize - 1)
    }

    fn symmetric(sep: f64) -> GmmSpec {
        GmmSpec::new(vec![0.5, 0.5], vec![vec![-sep, 0.0], vec![sep, 0.0]]).unwrap()
    }

    #[test]
    fn separable_law_has_no_false_preclassification() {
        let spec = symmetric(20.0);
        let rule = ArgmaxRule(gmm_posterior(&spec));
        let c = estimate_curves(&spec, &rule, &[lbl(1)], 100_000, 1).unwrap();
        assert!(c.theta_r() <= 0.01);
    }

    #[test]
    fn survival_endpoints() {
        let spec = symmetric(1.0);
        let rule = ArgmaxRule(gmm_posterior(&spec));
        let c = estimate_curves(&spec, &rule, &[lbl(1), lbl(2)], 20_000, 2).unwrap();
        assert_eq!(c.grid()[0], 0.0);
        assert_eq!(*c.grid().last().unwrap(), 1.0);
        assert_eq!(c.f1()[0], 1.0);
        assert_eq!(*c.f1().last().unwrap(), 0.0);
        for f in [c.f0(), c.f1()] {
            assert!(f.windows(2).all(|w| w[1] <= w[0]));
        }
        assert_eq!(c.ratio(0), Some(c.theta_r()));
    }

    #[test]
    fn symmetric_law_gives_matching_groups() {
        let spec = symmetric(0.8);
        let rule = ArgmaxRule(gmm_posterior(&spec));
        let n = 100_000;
        let a = estimate_curves(&spec, &rule, &[lbl(1)], n, 3).unwrap();
        let b = estimate_curves(&spec, &rule, &[lbl(2)], n, 3).unwrap();
        // each group retains about n/2 draws
        let se = (a.theta_r() * (1.0 - a.theta_r()) / (n as f64 / 2.0)).sqrt();
        let diff_se = se * 2f64.sqrt();
        assert!((a.theta_r() - b.theta_r()).abs() <= 3.0 * diff_se);
    }

    #[test]
    fn too_few_draws_rejected() {
        let spec = symmetric(1.0);
        let rule = ArgmaxRule(gmm_posterior(&spec));
        assert!(estimate_curves(&spec, &rule, &[lbl(1)], 10, 0).is_err());
    }

    #[test]
    fn unreachable_group_has_no_members() {
        let spec = symmetric(1.0);
        let always_one = crate::models::HardRule(|_: &[f64]| lbl(1));
        let err = estimate_curves(&spec, &always_one, &[lbl(2)], 1000, 0).unwrap_err();
        assert_eq!(err, PspError::NoGroupMembers);
    }

    #[test]
    fn low_theta_gives_zero_cutoff() {
        let c = PopulationCurves::from_parts(
            vec![0.0, 0.5, 1.0],
            vec![1.0, 0.5, 0.0],
            vec![1.0, 0.8, 0.0],
            0.05,
        )
        .unwrap();
        let rule = oracle_threshold(&c, &[lbl(1)], 0.1).unwrap();
        assert_eq!(rule.t_star, 0.0);
    }

    #[test]
    fn ratio_inequality_solved_on_grid() {
        let step = 1e-3;
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * step).collect();
        let f0 = grid.iter().map(|t| 1.0 - t).collect();
        let f1 = grid.iter().map(|t| 1.0 - t / 2.0).collect();
        let c = PopulationCurves::from_parts(grid, f0, f1, 0.3).unwrap();
        // 0.3 (1 - t) <= 0.2 (1 - t/2)  <=>  t >= 0.5
        let rule = oracle_threshold(&c, &[lbl(1)], 0.2).unwrap();
        assert!((rule.t_star - 0.5).abs() <= step + 1e-12, "{}", rule.t_star);
        assert!((rule.resolution - step).abs() < 1e-9);
    }

    #[test]
    fn always_feasible_takes_first_grid_point() {
        let c = PopulationCurves::from_parts(
            vec![0.1, 0.4, 0.9],
            vec![0.9, 0.6, 0.2],
            vec![1.0, 0.7, 0.3],
            0.5,
        )
        .unwrap();
        let max_ratio = (0..3).filter_map(|i| c.ratio(i)).fold(0.0, f64::max);
        let rule = oracle_threshold(&c, &[lbl(1)], max_ratio).unwrap();
        assert_eq!(rule.t_star, 0.1);
        let err = oracle_threshold(&c, &[lbl(1)], 1e-6).unwrap_err();
        assert!(matches!(err, PspError::NoFeasibleThreshold { .. }));
    }

    #[test]
    fn strict_cutoff_semantics() {
        let post = ScoreMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6], vec![0.2, 0.8]]).unwrap();
        let pre = vec![lbl(1), lbl(2), lbl(2)];
        let zero = OracleRule {
            group: vec![lbl(1), lbl(2)],
            t_star: 0.0,
            resolution: 0.0,
        };
        let all = oracle_decide(&[zero], &post, &pre).unwrap();
        assert!(all.iter().all(|d| !d.is_abstain()));
        let at_boundary = OracleRule {
            group: vec![lbl(1), lbl(2)],
            t_star: 0.6,
            resolution: 0.0,
        };
        let d = oracle_decide(&[at_boundary], &post, &pre).unwrap();
        assert_eq!(d, vec![Decision::label(lbl(1)), Decision::ABSTAIN, Decision::label(lbl(2))]);
    }

    #[test]
    fn curve_validation() {
        assert!(PopulationCurves::from_parts(vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, 1.0], 0.1).is_err());
        assert!(PopulationCurves::from_parts(vec![0.0, 1.0], vec![0.5, 0.6], vec![1.0, 1.0], 0.1).is_err());
    }
}
