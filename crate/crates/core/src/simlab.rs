//! Gaussian-mixture simulation studies.
//!
//! Each replication draws class priors, a training split, a hold-out split and
//! a target split, fits a score function on the training split only, and runs
//! the decision procedures for every level on the grid. Replication `r` uses
//! its own sub-seed, so it can be rerun alone.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::engine::psp_run;
use crate::error::{PspError, Result};
use crate::evalues::epsp_run;
use crate::exact::le_scaled;
use crate::extensions::{
    informative_sets, select_subjects, InformativeSetTask, SelectionTask,
};
use crate::metrics::{aggregate, Estimate, MetricsSummary, ReplicationMetrics};
use crate::models::{
    argmax_preclassify, gmm_posterior, train_softmax, GmmSpec, ScoreFunction, TrainConfig,
};
use crate::oracle::{estimate_curves, oracle_decide, oracle_threshold, OracleRule, PopulationCurves};
use crate::models::ArgmaxRule;
use crate::rng::{
    derive_seed, stream_rng, TAG_ORACLE, TAG_PRIORS, TAG_REPLICATION, TAG_TIES_HOLDOUT,
    TAG_TIES_TARGET,
};
use crate::types::{ClassLabel, DecisionReport, FeatureVector, GroupPartition, LabeledSample, ScoreMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// One group holding every class.
    Overall,
    /// One group per class, all at the same level.
    Classwise,
}

impl Preset {
    pub fn partition(self, k: usize, alpha: f64) -> Result<GroupPartition> {
        match self {
            Preset::Overall => GroupPartition::overall(k, alpha),
            Preset::Classwise => GroupPartition::classwise(k, &vec![alpha; k]),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Overall => "overall",
            Preset::Classwise => "classwise",
        })
    }
}

/// Where the score function comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreSource {
    /// The true mixture posterior.
    Oracle,
    /// Softmax regression fit on the training split.
    Softmax(TrainConfig),
}

impl fmt::Display for ScoreSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreSource::Oracle => "oracle",
            ScoreSource::Softmax(_) => "softmax",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDesign {
    pub k: usize,
    pub d: usize,
    /// Per-class size unit; every split has `k * n0` samples.
    pub n0: usize,
    pub reps: usize,
    pub seed: u64,
    pub preset: Preset,
    pub alphas: Vec<f64>,
    pub scores: ScoreSource,
    /// Separate source for pre-classification; `None` reuses `scores`.
    pub pre_scores: Option<ScoreSource>,
    /// Draw fresh priors in every replication instead of once per study.
    pub redraw_priors: bool,
    /// Also run the e-value procedure with `α' = factor · α`.
    pub epsp_factor: Option<f64>,
    /// Also run the oracle rule with this many Monte-Carlo draws per curve.
    pub oracle_mc: Option<usize>,
}

impl SimDesign {
    pub fn new(k: usize, preset: Preset) -> Self {
        let alphas = match preset {
            Preset::Overall => vec![0.05, 0.1, 0.15, 0.2],
            Preset::Classwise => vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
        };
        SimDesign {
            k,
            d: 10,
            n0: 100,
            reps: 500,
            seed: 0,
            preset,
            alphas,
            scores: ScoreSource::Oracle,
            pre_scores: None,
            redraw_priors: true,
            epsp_factor: None,
            oracle_mc: None,
        }
    }

    pub fn split_size(&self) -> usize {
        self.k * self.n0
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(PspError::TooFewClasses(self.k));
        }
        if self.d == 0 || self.n0 == 0 || self.reps == 0 {
            return Err(PspError::InvalidSpec("d, n0 and reps must be positive".into()));
        }
        if self.alphas.is_empty() {
            return Err(PspError::InvalidSpec("empty alpha grid".into()));
        }
        for &a in &self.alphas {
            self.preset.partition(self.k, a)?;
        }
        if let Some(f) = self.epsp_factor {
            if !(f > 0.0 && f.is_finite()) {
                return Err(PspError::InvalidSpec(format!("e-value level factor {f}")));
            }
        }
        Ok(())
    }
}

/// Normalised `Z_1..Z_K` with `Z_k ~ U(1, 2)`.
pub fn sample_priors<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let z: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..2.0)).collect();
    normalize(&z)
}

fn normalize(z: &[f64]) -> Vec<f64> {
    let total: f64 = z.iter().sum();
    z.iter().map(|v| v / total).collect()
}

/// `m_k = k · 1_d / d^{1/4}` for `k = 1..K`.
pub fn class_means(k: usize, d: usize) -> Vec<Vec<f64>> {
    let scale = (d as f64).powf(-0.25);
    (1..=k).map(|c| vec![c as f64 * scale; d]).collect()
}

pub fn mixture(k: usize, d: usize, priors: Vec<f64>) -> Result<GmmSpec> {
    GmmSpec::new(priors, class_means(k, d))
}

pub fn sample_dataset<R: Rng + ?Sized>(spec: &GmmSpec, size: usize, rng: &mut R) -> Vec<LabeledSample> {
    spec.sample(size, rng)
}

/// Data of one replication.
#[derive(Debug, Clone)]
pub struct ReplicationData {
    pub spec: GmmSpec,
    pub train: Vec<LabeledSample>,
    pub holdout: Vec<LabeledSample>,
    pub target: Vec<LabeledSample>,
    pub seed: u64,
}

pub fn replication_seed(seed: u64, rep: usize) -> u64 {
    derive_seed(derive_seed(seed, TAG_REPLICATION), rep as u64)
}

fn frozen_priors(design: &SimDesign) -> Vec<f64> {
    sample_priors(design.k, &mut stream_rng(derive_seed(design.seed, TAG_PRIORS), 0))
}

pub fn replication_data(design: &SimDesign, rep: usize) -> Result<ReplicationData> {
    let seed = replication_seed(design.seed, rep);
    let priors = if design.redraw_priors {
        sample_priors(design.k, &mut stream_rng(seed, 0))
    } else {
        frozen_priors(design)
    };
    let spec = mixture(design.k, design.d, priors)?;
    let size = design.split_size();
    Ok(ReplicationData {
        train: spec.sample(size, &mut stream_rng(seed, 1)),
        holdout: spec.sample(size, &mut stream_rng(seed, 2)),
        target: spec.sample(size, &mut stream_rng(seed, 3)),
        spec,
        seed,
    })
}

pub fn fit_scores(
    source: ScoreSource,
    spec: &GmmSpec,
    train: &[LabeledSample],
) -> Result<Box<dyn ScoreFunction>> {
    Ok(match source {
        ScoreSource::Oracle => Box::new(gmm_posterior(spec)),
        ScoreSource::Softmax(cfg) => Box::new(train_softmax(train, spec.num_classes(), cfg)?),
    })
}

pub fn features(samples: &[LabeledSample]) -> Vec<FeatureVector> {
    samples.iter().map(|s| s.x.clone()).collect()
}

pub fn labels(samples: &[LabeledSample]) -> Vec<ClassLabel> {
    samples.iter().map(|s| s.y).collect()
}

/// Scores and pre-labels for both splits of one replication.
#[derive(Debug, Clone)]
pub struct ScoredReplication {
    pub target_scores: ScoreMatrix,
    pub holdout_scores: ScoreMatrix,
    pub pre_target: Vec<ClassLabel>,
    pub pre_holdout: Vec<ClassLabel>,
    pub target_truth: Vec<ClassLabel>,
    pub holdout_truth: Vec<ClassLabel>,
}

pub fn score_replication(design: &SimDesign, data: &ReplicationData) -> Result<ScoredReplication> {
    let tx = features(&data.target);
    let hx = features(&data.holdout);
    let mu = fit_scores(design.scores, &data.spec, &data.train)?;
    let target_scores = mu.score_matrix(&tx)?;
    let holdout_scores = mu.score_matrix(&hx)?;
    let (pre_t, pre_h) = match design.pre_scores {
        None => (target_scores.clone(), holdout_scores.clone()),
        Some(src) => {
            let pre = fit_scores(src, &data.spec, &data.train)?;
            (pre.score_matrix(&tx)?, pre.score_matrix(&hx)?)
        }
    };
    Ok(ScoredReplication {
        pre_target: argmax_preclassify(&pre_t, derive_seed(data.seed, TAG_TIES_TARGET)),
        pre_holdout: argmax_preclassify(&pre_h, derive_seed(data.seed, TAG_TIES_HOLDOUT)),
        target_scores,
        holdout_scores,
        target_truth: labels(&data.target),
        holdout_truth: labels(&data.holdout),
    })
}

/// Checks that no subject abstains in a group whose `θ̂` is at most its level.
///
/// Returns how many groups met that condition.
pub fn check_non_degradation(report: &DecisionReport, partition: &GroupPartition) -> Result<usize> {
    let mut applicable = 0;
    for (g, out) in report.outcomes.iter().enumerate() {
        let alpha = partition.alpha(g);
        if theta_within(1 + out.residuals as u64, 1 + out.holdouts as u64, alpha) {
            applicable += 1;
            if out.decided != out.subjects {
                return Err(PspError::NonDegradationViolated {
                    group: g,
                    theta_hat: out.theta_hat,
                    alpha,
                });
            }
        }
    }
    Ok(applicable)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Psp,
    Epsp,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Psp => "psp",
            Method::Epsp => "epsp",
            Method::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub method: Method,
    pub alpha: f64,
    /// Per group; empty for the oracle rule.
    pub theta_hat: Vec<f64>,
    pub metrics: ReplicationMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub alpha: f64,
    pub summary: MetricsSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub design: SimDesign,
    pub rows: Vec<SummaryRow>,
    pub replications: Vec<ReplicationRecord>,
    /// Group-level cases where `θ̂ ≤ α` forced full acceptance.
    pub non_degradation_checks: usize,
    /// Coarsest oracle grid spacing seen at a chosen cut-off.
    pub oracle_resolution: Option<f64>,
}

impl ExperimentSummary {
    pub fn row(&self, method: Method, alpha: f64) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.method == method && r.alpha == alpha)
    }
}

struct RepOutput {
    records: Vec<ReplicationRecord>,
    checks: usize,
    resolution: Option<f64>,
}

fn oracle_curves(
    design: &SimDesign,
    spec: &GmmSpec,
    n_mc: usize,
    seed: u64,
) -> Result<Vec<Option<PopulationCurves>>> {
    let rule = ArgmaxRule(gmm_posterior(spec));
    let template = design.preset.partition(design.k, design.alphas[0])?;
    (0..template.num_groups())
        .map(|g| match estimate_curves(spec, &rule, template.members(g), n_mc, seed) {
            Ok(c) => Ok(Some(c)),
            Err(PspError::NoGroupMembers) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Oracle rule per group; infeasible levels get an infinite cut-off.
fn rules_at(
    curves: &[Option<PopulationCurves>],
    partition: &GroupPartition,
) -> Result<(Vec<OracleRule>, f64)> {
    let mut rules = Vec::new();
    let mut resolution: f64 = 0.0;
    for (g, c) in curves.iter().enumerate() {
        let members = partition.members(g);
        let never = OracleRule {
            group: members.to_vec(),
            t_star: f64::INFINITY,
            resolution: 0.0,
        };
        let rule = match c {
            None => never,
            Some(c) => match oracle_threshold(c, members, partition.alpha(g)) {
                Ok(r) => r,
                Err(PspError::NoFeasibleThreshold { .. }) => never,
                Err(e) => return Err(e),
            },
        };
        resolution = resolution.max(rule.resolution);
        rules.push(rule);
    }
    Ok((rules, resolution))
}

fn run_replication(
    design: &SimDesign,
    rep: usize,
    shared_curves: Option<&[Option<PopulationCurves>]>,
) -> Result<RepOutput> {
    let data = replication_data(design, rep)?;
    let sc = score_replication(design, &data)?;
    let mut records = Vec::new();
    let mut checks = 0;
    let mut resolution = None;
    let own_curves = match (design.oracle_mc, shared_curves) {
        (Some(n), None) => Some(oracle_curves(design, &data.spec, n, derive_seed(data.seed, TAG_ORACLE))?),
        _ => None,
    };
    let curves = shared_curves.or(own_curves.as_deref());
    let oracle_inputs = match curves {
        Some(_) => {
            let post = gmm_posterior(&data.spec).score_matrix(&features(&data.target))?;
            let pre = argmax_preclassify(&post, derive_seed(data.seed, TAG_TIES_TARGET));
            Some((post, pre))
        }
        None => None,
    };
    for &alpha in &design.alphas {
        let partition = design.preset.partition(design.k, alpha)?;
        let report = psp_run(
            &sc.target_scores,
            &sc.holdout_scores,
            &sc.pre_target,
            &sc.pre_holdout,
            &sc.holdout_truth,
            &partition,
        )?;
        checks += check_non_degradation(&report, &partition)?;
        records.push(ReplicationRecord {
            rep,
            method: Method::Psp,
            alpha,
            theta_hat: report.outcomes.iter().map(|o| o.theta_hat).collect(),
            metrics: ReplicationMetrics::compute(&report.decisions, &sc.target_truth, &partition)?,
        });
        if let Some(f) = design.epsp_factor {
            let ap = vec![(alpha * f).min(1.0 - f64::EPSILON); partition.num_groups()];
            let report = epsp_run(
                &sc.target_scores,
                &sc.holdout_scores,
                &sc.pre_target,
                &sc.pre_holdout,
                &sc.holdout_truth,
                &partition,
                &ap,
            )?;
            records.push(ReplicationRecord {
                rep,
                method: Method::Epsp,
                alpha,
                theta_hat: report.outcomes.iter().map(|o| o.theta_hat).collect(),
                metrics: ReplicationMetrics::compute(&report.decisions, &sc.target_truth, &partition)?,
            });
        }
        if let (Some(curves), Some((post, pre))) = (curves, &oracle_inputs) {
            let (rules, res) = rules_at(curves, &partition)?;
            resolution = Some(resolution.unwrap_or(0.0f64).max(res));
            let decisions = oracle_decide(&rules, post, pre)?;
            records.push(ReplicationRecord {
                rep,
                method: Method::Oracle,
                alpha,
                theta_hat: Vec::new(),
                metrics: ReplicationMetrics::compute(&decisions, &sc.target_truth, &partition)?,
            });
        }
    }
    Ok(RepOutput {
        records,
        checks,
        resolution,
    })
}

/// Runs every replication of `design` and aggregates per method and level.
pub fn run_experiment(design: &SimDesign) -> Result<ExperimentSummary> {
    design.validate()?;
    // With frozen priors the population is fixed, so the oracle curves are
    // estimated once.
    let shared = match (design.oracle_mc, design.redraw_priors) {
        (Some(n), false) => {
            let spec = mixture(design.k, design.d, frozen_priors(design))?;
            Some(oracle_curves(design, &spec, n, derive_seed(design.seed, TAG_ORACLE))?)
        }
        _ => None,
    };
    let outputs: Vec<Result<RepOutput>> = (0..design.reps)
        .into_par_iter()
        .map(|rep| run_replication(design, rep, shared.as_deref()))
        .collect();
    let mut replications = Vec::new();
    let mut checks = 0;
    let mut resolution: Option<f64> = None;
    for (rep, out) in outputs.into_iter().enumerate() {
        let out = out.map_err(|e| PspError::Replication {
            replication: rep,
            source: Box::new(e),
        })?;
        checks += out.checks;
        if let Some(r) = out.resolution {
            resolution = Some(resolution.map_or(r, |v| v.max(r)));
        }
        replications.extend(out.records);
    }
    let mut rows = Vec::new();
    for method in [Method::Psp, Method::Epsp, Method::Oracle] {
        for &alpha in &design.alphas {
            let metrics: Vec<ReplicationMetrics> = replications
                .iter()
                .filter(|r| r.method == method && r.alpha == alpha)
                .map(|r| r.metrics.clone())
                .collect();
            if !metrics.is_empty() {
                rows.push(SummaryRow {
                    method,
                    alpha,
                    summary: aggregate(&metrics)?,
                });
            }
        }
    }
    Ok(ExperimentSummary {
        design: design.clone(),
        rows,
        replications,
        non_degradation_checks: checks,
        oracle_resolution: resolution,
    })
}

/// Error and power of a selection study.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionSummary {
    pub fdr: Estimate,
    pub power: Estimate,
    pub selected: Estimate,
    pub fdp: Vec<f64>,
}

/// Selection of subjects with labels in `region`, scored by the posterior
/// mass of the region, with every subject pre-selected.
pub fn run_selection_experiment(
    design: &SimDesign,
    region: &[u32],
    alpha: f64,
) -> Result<SelectionSummary> {
    design.validate()?;
    let task = SelectionTask::new(design.k, region, alpha)?;
    let results: Vec<Result<(f64, f64, f64)>> = (0..design.reps)
        .into_par_iter()
        .map(|rep| {
            let data = replication_data(design, rep)?;
            let mu = fit_scores(design.scores, &data.spec, &data.train)?;
            let mass = |xs: &[LabeledSample]| -> Result<Vec<f64>> {
                let m = mu.score_matrix(&features(xs))?;
                Ok(m.rows()
                    .map(|row| task.region.iter().map(|c| row[c.index()]).sum())
                    .collect())
            };
            let r = select_subjects(
                &task,
                &mass(&data.target)?,
                &mass(&data.holdout)?,
                &labels(&data.holdout),
                None,
                None,
            )?;
            let inside = data.target.iter().filter(|s| task.contains(s.y)).count();
            let hits = r.selected.iter().filter(|&&j| task.contains(data.target[j].y)).count();
            let false_sel = r.selected.len() - hits;
            Ok((
                false_sel as f64 / r.selected.len().max(1) as f64,
                hits as f64 / inside.max(1) as f64,
                r.selected.len() as f64,
            ))
        })
        .collect();
    let mut fdp = Vec::new();
    let mut power = Vec::new();
    let mut count = Vec::new();
    for (rep, r) in results.into_iter().enumerate() {
        let (a, b, c) = r.map_err(|e| PspError::Replication {
            replication: rep,
            source: Box::new(e),
        })?;
        fdp.push(a);
        power.push(b);
        count.push(c);
    }
    Ok(SelectionSummary {
        fdr: Estimate::from_samples(&fdp).expect("reps > 0"),
        power: Estimate::from_samples(&power).expect("reps > 0"),
        selected: Estimate::from_samples(&count).expect("reps > 0"),
        fdp,
    })
}

/// Coverage error and size of selected prediction sets.
#[derive(Debug, Clone, PartialEq)]
pub struct InfosetSummary {
    pub fcr: Estimate,
    pub selected: Estimate,
    pub mean_set_size: Estimate,
    pub max_set_size: usize,
    pub fcp: Vec<f64>,
}

pub fn run_infoset_experiment(design: &SimDesign, l: usize, alpha: f64) -> Result<InfosetSummary> {
    design.validate()?;
    let task = InformativeSetTask::new(design.k, l, alpha)?;
    let results: Vec<Result<(f64, f64, f64, usize)>> = (0..design.reps)
        .into_par_iter()
        .map(|rep| {
            let data = replication_data(design, rep)?;
            let mu = fit_scores(design.scores, &data.spec, &data.train)?;
            let ts = mu.score_matrix(&features(&data.target))?;
            let hs = mu.score_matrix(&features(&data.holdout))?;
            let r = informative_sets(&task, &ts, &hs, &labels(&data.holdout))?;
            let mut misses = 0;
            let mut sizes = 0;
            let mut largest = 0;
            for (j, set) in r.reported() {
                if !set.contains(&data.target[j].y) {
                    misses += 1;
                }
                sizes += set.len();
                largest = largest.max(set.len());
            }
            let n = r.selected.len();
            Ok((
                misses as f64 / n.max(1) as f64,
                n as f64,
                if n == 0 { 0.0 } else { sizes as f64 / n as f64 },
                largest,
            ))
        })
        .collect();
    let mut fcp = Vec::new();
    let mut count = Vec::new();
    let mut size = Vec::new();
    let mut max_set_size = 0;
    for (rep, r) in results.into_iter().enumerate() {
        let (a, b, c, d) = r.map_err(|e| PspError::Replication {
            replication: rep,
            source: Box::new(e),
        })?;
        fcp.push(a);
        count.push(b);
        size.push(c);
        max_set_size = max_set_size.max(d);
    }
    Ok(InfosetSummary {
        fcr: Estimate::from_samples(&fcp).expect("reps > 0"),
        selected: Estimate::from_samples(&count).expect("reps > 0"),
        mean_set_size: Estimate::from_samples(&size).expect("reps > 0"),
        max_set_size,
        fcp,
    })
}

/// Whether `θ̂ ≤ α` holds exactly for a count-based `θ̂ = num / den`.
pub fn theta_within(num: u64, den: u64, alpha: f64) -> bool {
    le_scaled(num as u128, den as u128, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    /// Emits only zero bits.
    struct Zeros;

    impl RngCore for Zeros {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0);
        }
    }

    #[test]
    fn equal_draws_give_uniform_priors() {
        assert_eq!(normalize(&[1.0; 4]), vec![0.25; 4]);
        let p = normalize(&[1.0, 2.0]);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
        // a constant generator yields equal Z's
        assert_eq!(sample_priors(5, &mut Zeros), vec![0.2; 5]);
    }

    #[test]
    fn priors_stay_in_bounds() {
        let mut rng = stream_rng(1, 0);
        for k in [2, 4, 6] {
            let lo = 1.0 / (1.0 + 2.0 * (k as f64 - 1.0));
            let hi = 2.0 / (2.0 + (k as f64 - 1.0));
            for _ in 0..2000 {
                let p = sample_priors(k, &mut rng);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(p.iter().all(|&v| v >= lo && v <= hi));
            }
        }
    }

    #[test]
    fn prior_mean_is_symmetric() {
        let mut rng = stream_rng(2, 0);
        let k = 4;
        let n = 100_000;
        let mean = (0..n).map(|_| sample_priors(k, &mut rng)[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.25).abs() < 0.01, "{mean}");
    }

    #[test]
    fn means_follow_design() {
        let m = class_means(3, 16);
        assert_eq!(m[0], vec![0.5; 16]);
        assert_eq!(m[2], vec![1.5; 16]);
    }

    #[test]
    fn sampled_moments() {
        let spec = mixture(3, 4, vec![0.2, 0.3, 0.5]).unwrap();
        let data = sample_dataset(&spec, 100_000, &mut stream_rng(3, 0));
        for c in 0..3 {
            let xs: Vec<&LabeledSample> = data.iter().filter(|s| s.y.index() == c).collect();
            let freq = xs.len() as f64 / data.len() as f64;
            assert!((freq - spec.priors()[c]).abs() < 0.01);
            let count = xs.len() as f64;
            for coord in 0..4 {
                let mean = xs.iter().map(|s| s.x[coord]).sum::<f64>() / count;
                let target = spec.means()[c][coord];
                assert!((mean - target).abs() < 3.0 / count.sqrt(), "class {c} mean {mean}");
                let var = xs.iter().map(|s| (s.x[coord] - mean).powi(2)).sum::<f64>() / (count - 1.0);
                assert!((var - 1.0).abs() < 0.05, "class {c} var {var}");
            }
        }
    }

    fn small(scores: ScoreSource) -> SimDesign {
        SimDesign {
            reps: 3,
            n0: 30,
            seed: 11,
            scores,
            epsp_factor: Some(1.0),
            ..SimDesign::new(3, Preset::Overall)
        }
    }

    #[test]
    fn experiments_are_deterministic() {
        let d = small(ScoreSource::Softmax(TrainConfig { epochs: 50, ..TrainConfig::default() }));
        let a = run_experiment(&d).unwrap();
        let b = run_experiment(&d).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2 * d.alphas.len());
    }

    #[test]
    fn replication_is_reproducible_alone() {
        let d = small(ScoreSource::Oracle);
        let full = run_experiment(&d).unwrap();
        let one = run_replication(&d, 2, None).unwrap();
        let from_full: Vec<_> = full.replications.iter().filter(|r| r.rep == 2).cloned().collect();
        assert_eq!(one.records, from_full);
    }

    #[test]
    fn epsp_at_same_level_matches_psp() {
        let s = run_experiment(&small(ScoreSource::Oracle)).unwrap();
        for &a in &s.design.alphas {
            let p = s.row(Method::Psp, a).unwrap();
            let e = s.row(Method::Epsp, a).unwrap();
            assert_eq!(p.summary, e.summary);
        }
    }

    #[test]
    fn oracle_rows_appear_when_requested() {
        let d = SimDesign {
            oracle_mc: Some(5000),
            epsp_factor: None,
            ..small(ScoreSource::Oracle)
        };
        let s = run_experiment(&d).unwrap();
        assert!(s.row(Method::Oracle, 0.1).is_some());
        assert!(s.oracle_resolution.is_some());
    }

    #[test]
    fn invalid_designs_rejected() {
        let mut d = SimDesign::new(1, Preset::Overall);
        assert!(run_experiment(&d).is_err());
        d.k = 3;
        d.alphas = vec![1.5];
        assert!(run_experiment(&d).is_err());
    }

    #[test]
    fn theta_comparison_is_exact() {
        assert!(theta_within(1, 10, 0.1));
        assert!(!theta_within(3, 10, 0.3));
    }
}
