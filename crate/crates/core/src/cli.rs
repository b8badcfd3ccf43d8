//! Command-line front end: simulation studies and decisions on score files.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::psp_run;
use crate::error::{PspError, Result};
use crate::evalues::epsp_run;
use crate::extensions::{informative_sets, select_subjects, InformativeSetTask, SelectionTask};
use crate::io::{read_labels, read_scores, write_csv};
use crate::models::{argmax_preclassify, TrainConfig};
use crate::rng::derive_seed;
use crate::simlab::{run_experiment, ExperimentSummary, Preset, ScoreSource, SimDesign};
use crate::types::{ClassLabel, DecisionReport, EvidenceKind, GroupPartition, ScoreMatrix};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "psp", version, about = "Classification with abstention and group-wise error control")]
pub struct Cli {
    /// TOML file whose keys fill in flags not given on the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Gaussian-mixture simulation study.
    Simulate(SimulateArgs),
    /// Decide labels from score files with selective p-values.
    Decide(DecideArgs),
    /// Decide labels from score files with selective e-values.
    Edecide(EdecideArgs),
    /// Select subjects whose label lies in a region of interest.
    Select(SelectArgs),
    /// Report short prediction sets for selected subjects.
    Infosets(InfosetsArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Decide(_) => "decide",
            Command::Edecide(_) => "edecide",
            Command::Select(_) => "select",
            Command::Infosets(_) => "infosets",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Overall,
    Classwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoresArg {
    Oracle,
    Softmax,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "overall")]
    pub preset: PresetArg,
    #[arg(long = "K", alias = "k", default_value_t = 4)]
    pub k: usize,
    /// Target levels, comma separated; defaults depend on the preset.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "oracle")]
    pub scores: ScoresArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    #[arg(long, default_value_t = 100)]
    pub n0: usize,
    /// Draw class priors once for the whole study.
    #[arg(long)]
    pub freeze_priors: bool,
    /// Also run the e-value procedure at `factor * alpha`.
    #[arg(long)]
    pub epsp_factor: Option<f64>,
    /// Also run the oracle rule with this many Monte-Carlo draws.
    #[arg(long)]
    pub oracle_mc: Option<usize>,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub step_size: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
}

#[derive(Debug, Args)]
pub struct Inputs {
    #[arg(long)]
    pub target_scores: Option<PathBuf>,
    #[arg(long)]
    pub holdout_scores: Option<PathBuf>,
    #[arg(long)]
    pub holdout_labels: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for breaking ties in the argmax pre-classification.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PreLabelArgs {
    /// Pre-labels for the targets; defaults to the argmax of the scores.
    #[arg(long)]
    pub target_pre_labels: Option<PathBuf>,
    #[arg(long)]
    pub holdout_pre_labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DecideArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub pre: PreLabelArgs,
    /// `overall`, `classwise`, or groups such as `1,2;3`.
    #[arg(long, default_value = "overall")]
    pub partition: String,
    /// One level per group, or one level for all groups.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EdecideArgs {
    #[command(flatten)]
    pub decide: DecideArgs,
    /// Levels of the score cut-off; defaults to the target levels.
    #[arg(long, value_delimiter = ',')]
    pub alpha_prime: Vec<f64>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SelectArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Labels of interest, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub region: Vec<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct InfosetsArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Largest reported set size.
    #[arg(long = "L", alias = "l")]
    pub l: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

/// Exit status for an error: configuration problems give 2, data problems 3.
pub fn exit_code(err: &PspError) -> i32 {
    match err {
        PspError::TooFewClasses(_)
        | PspError::OverlappingGroups { .. }
        | PspError::UncoveredLabel { .. }
        | PspError::EmptyGroup { .. }
        | PspError::AlphaOutOfRange { .. }
        | PspError::AlphaCountMismatch { .. }
        | PspError::InvalidSpec(_)
        | PspError::InvalidL { .. }
        | PspError::Config(_)
        | PspError::Io { .. } => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn parse(argv: &[OsString]) -> std::result::Result<Cli, i32> {
    let report = |e: clap::Error| {
        let _ = e.print();
        if e.use_stderr() {
            EXIT_CONFIG
        } else {
            0
        }
    };
    let cli = Cli::try_parse_from(argv).map_err(report)?;
    let Some(path) = &cli.config else {
        return Ok(cli);
    };
    let tokens = config_tokens(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })?;
    // Config flags go right after the subcommand so command-line flags,
    // parsed later, take precedence.
    let name = cli.command.name();
    let at = argv
        .iter()
        .enumerate()
        .skip(1)
        .position(|(i, a)| a == name && argv[i - 1] != "--config")
        .map(|p| p + 2)
        .expect("subcommand present after a successful parse");
    let mut merged = argv[..at].to_vec();
    merged.extend(tokens.into_iter().map(OsString::from));
    merged.extend_from_slice(&argv[at..]);
    Cli::try_parse_from(&merged).map_err(report)
}

/// Flattens a TOML table into `--key value` flags.
///
/// Arrays become comma lists; a `[partition]` section with `groups` and
/// `alphas` becomes `--partition 1,2;3 --alphas ...`.
pub fn config_tokens(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| PspError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| PspError::Config(format!("{}: {e}", path.display())))?;
    let mut tokens = Vec::new();
    for (key, value) in &table {
        if key == "partition" {
            if let toml::Value::Table(section) = value {
                for (k, v) in section {
                    let flag = match k.as_str() {
                        "groups" => "partition",
                        "alphas" => "alphas",
                        other => {
                            return Err(PspError::Config(format!("unknown partition key {other:?}")))
                        }
                    };
                    push_flag(&mut tokens, flag, v)?;
                }
                continue;
            }
        }
        push_flag(&mut tokens, key, value)?;
    }
    Ok(tokens)
}

fn push_flag(tokens: &mut Vec<String>, key: &str, value: &toml::Value) -> Result<()> {
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        toml::Value::Boolean(true) => tokens.push(flag),
        toml::Value::Boolean(false) => {}
        v => {
            tokens.push(flag);
            tokens.push(scalar_list(v)?);
        }
    }
    Ok(())
}

fn scalar_list(value: &toml::Value) -> Result<String> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Array(items) => {
            let parts = items.iter().map(scalar_list).collect::<Result<Vec<_>>>()?;
            let nested = items.iter().any(|v| matches!(v, toml::Value::Array(_)));
            parts.join(if nested { ";" } else { "," })
        }
        other => return Err(PspError::Config(format!("unsupported value {other}"))),
    })
}

/// Expands `overall`, `classwise` or an explicit `1,2;3` group list.
pub fn parse_partition(spec: &str, alphas: &[f64], k: usize) -> Result<GroupPartition> {
    let groups: Vec<Vec<u32>> = match spec.trim() {
        "overall" => vec![(1..=k as u32).collect()],
        "classwise" => (1..=k as u32).map(|c| vec![c]).collect(),
        s => s
            .split(';')
            .map(|g| {
                g.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<u32>()
                            .map_err(|_| PspError::Config(format!("bad label {v:?} in partition")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?,
    };
    let alphas = broadcast(alphas, groups.len(), "--alphas")?;
    GroupPartition::new(&groups, &alphas, k)
}

fn broadcast(values: &[f64], n: usize, flag: &str) -> Result<Vec<f64>> {
    match values.len() {
        0 => Err(PspError::Config(format!("{flag} is required"))),
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(PspError::AlphaCountMismatch {
            expected: n,
            actual: len,
        }),
    }
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| PspError::Config(format!("{flag} is required")))
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Decide(a) => decide(a, None),
        Command::Edecide(a) => decide(&a.decide, Some(&a.alpha_prime)),
        Command::Select(a) => select(a),
        Command::Infosets(a) => infosets(a),
    }
}

fn out_dir(out: &Option<PathBuf>) -> Result<&Path> {
    let dir = required(out, "--out")?;
    fs::create_dir_all(dir).map_err(|e| PspError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(dir)
}

fn meta(command: &str, entries: &[(&str, String)]) -> Vec<(String, String)> {
    let mut m = vec![
        ("tool".to_string(), format!("psp {}", env!("CARGO_PKG_VERSION"))),
        ("command".to_string(), command.to_string()),
    ];
    m.extend(entries.iter().map(|(k, v)| (k.to_string(), v.clone())));
    m
}

fn with_rows(mut m: Vec<(String, String)>, rows: usize) -> Vec<(String, String)> {
    m.push(("rows".into(), rows.to_string()));
    m
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

struct Loaded {
    target: ScoreMatrix,
    holdout: ScoreMatrix,
    truth: Vec<ClassLabel>,
    k: usize,
}

fn load(inputs: &Inputs) -> Result<Loaded> {
    let holdout = read_scores(required(&inputs.holdout_scores, "--holdout-scores")?)?;
    if holdout.is_empty() {
        return Err(PspError::ZeroCalibration);
    }
    let k = holdout.num_classes();
    let target = read_scores(required(&inputs.target_scores, "--target-scores")?)?;
    if !target.is_empty() && target.num_classes() != k {
        return Err(PspError::LengthMismatch {
            what: "target score columns",
            expected: k,
            actual: target.num_classes(),
        });
    }
    let truth = read_labels(required(&inputs.holdout_labels, "--holdout-labels")?, k)?;
    if truth.len() != holdout.len() {
        return Err(PspError::LengthMismatch {
            what: "hold-out labels",
            expected: holdout.len(),
            actual: truth.len(),
        });
    }
    Ok(Loaded {
        target,
        holdout,
        truth,
        k,
    })
}

fn decide(args: &DecideArgs, alpha_prime: Option<&[f64]>) -> Result<()> {
    let dir = out_dir(&args.inputs.out)?;
    let data = load(&args.inputs)?;
    let partition = parse_partition(&args.partition, &args.alphas, data.k)?;
    let seed = args.inputs.seed;
    let pre = |file: &Option<PathBuf>, scores: &ScoreMatrix, tag: u64| -> Result<Vec<ClassLabel>> {
        match file {
            Some(p) => read_labels(p, data.k),
            None => Ok(argmax_preclassify(scores, derive_seed(seed, tag))),
        }
    };
    let pre_target = pre(&args.pre.target_pre_labels, &data.target, 1)?;
    let pre_holdout = pre(&args.pre.holdout_pre_labels, &data.holdout, 2)?;
    let report = match alpha_prime {
        None => psp_run(
            &data.target,
            &data.holdout,
            &pre_target,
            &pre_holdout,
            &data.truth,
            &partition,
        )?,
        Some(ap) => {
            let ap = if ap.is_empty() {
                partition.alphas().to_vec()
            } else {
                broadcast(ap, partition.num_groups(), "--alpha-prime")?
            };
            epsp_run(
                &data.target,
                &data.holdout,
                &pre_target,
                &pre_holdout,
                &data.truth,
                &partition,
                &ap,
            )?
        }
    };
    let command = if alpha_prime.is_some() { "edecide" } else { "decide" };
    let m = meta(
        command,
        &[
            ("seed", seed.to_string()),
            ("partition", args.partition.clone()),
            ("alphas", join(partition.alphas())),
            ("K", data.k.to_string()),
            ("holdout_rows", data.holdout.len().to_string()),
        ],
    );
    write_report(dir, &m, &report, &partition)?;
    println!(
        "{command}: {} of {} subjects decided",
        report.decided_count(),
        report.len()
    );
    Ok(())
}

fn write_report(
    dir: &Path,
    m: &[(String, String)],
    report: &DecisionReport,
    partition: &GroupPartition,
) -> Result<()> {
    let rows = (0..report.len()).map(|j| {
        vec![
            j.to_string(),
            report.pre_labels[j].to_string(),
            report.evidence[j].to_string(),
            (report.groups[j] + 1).to_string(),
            report.decisions[j].to_string(),
        ]
    });
    write_csv(
        &dir.join("decisions.csv"),
        &with_rows(m.to_vec(), report.len()),
        &["subject_index", "pre_label", "p_or_e_value", "group", "decision"],
        rows,
    )?;
    let evidence = match report.kind {
        EvidenceKind::PValue => "p-value",
        EvidenceKind::EValue => "e-value",
    };
    let mut gm = m.to_vec();
    gm.push(("evidence".into(), evidence.into()));
    let groups = report.outcomes.iter().enumerate().map(|(g, o)| {
        let labels: Vec<String> = partition.members(g).iter().map(|l| l.to_string()).collect();
        vec![
            (g + 1).to_string(),
            labels.join(" "),
            partition.alpha(g).to_string(),
            o.theta_hat.to_string(),
            o.threshold.to_string(),
            o.l_hat.map_or_else(|| "0".into(), |l| l.to_string()),
            o.subjects.to_string(),
            o.decided.to_string(),
            o.holdouts.to_string(),
            o.residuals.to_string(),
        ]
    });
    write_csv(
        &dir.join("groups.csv"),
        &with_rows(gm, report.outcomes.len()),
        &[
            "group", "labels", "alpha", "theta_hat", "threshold", "l_hat", "subjects", "decided",
            "holdouts", "residuals",
        ],
        groups,
    )
}

fn select(args: &SelectArgs) -> Result<()> {
    let dir = out_dir(&args.inputs.out)?;
    let data = load(&args.inputs)?;
    let alpha = *required(&args.alpha, "--alpha")?;
    if args.region.is_empty() {
        return Err(PspError::Config("--region is required".into()));
    }
    let task = SelectionTask::new(data.k, &args.region, alpha)?;
    let mass = |m: &ScoreMatrix| -> Vec<f64> {
        m.rows()
            .map(|r| task.region.iter().map(|c| r[c.index()]).sum())
            .collect()
    };
    let mu = mass(&data.target);
    let r = select_subjects(&task, &mu, &mass(&data.holdout), &data.truth, None, None)?;
    let mut chosen = vec![false; mu.len()];
    for &j in &r.selected {
        chosen[j] = true;
    }
    let m = meta(
        "select",
        &[
            ("region", join(&args.region)),
            ("alpha", alpha.to_string()),
            ("theta_hat", r.theta_hat.to_f64().to_string()),
            ("threshold", r.threshold.threshold.to_f64().to_string()),
        ],
    );
    let rows = (0..mu.len()).map(|j| {
        vec![
            j.to_string(),
            mu[j].to_string(),
            r.pvalues[j].to_f64().to_string(),
            u8::from(chosen[j]).to_string(),
        ]
    });
    write_csv(
        &dir.join("selection.csv"),
        &with_rows(m, mu.len()),
        &["subject_index", "score", "p_value", "selected"],
        rows,
    )?;
    println!("select: {} of {} subjects selected", r.selected.len(), mu.len());
    Ok(())
}

fn infosets(args: &InfosetsArgs) -> Result<()> {
    let dir = out_dir(&args.inputs.out)?;
    let data = load(&args.inputs)?;
    let task = InformativeSetTask::new(
        data.k,
        *required(&args.l, "--L")?,
        *required(&args.alpha, "--alpha")?,
    )?;
    let r = informative_sets(&task, &data.target, &data.holdout, &data.truth)?;
    let mut chosen = vec![false; r.sets.len()];
    for &j in &r.selected {
        chosen[j] = true;
    }
    let m = meta(
        "infosets",
        &[
            ("L", task.l.to_string()),
            ("alpha", task.alpha.to_string()),
            ("theta_hat", r.theta_hat.to_f64().to_string()),
            ("threshold", r.threshold.threshold.to_f64().to_string()),
        ],
    );
    let rows = (0..r.sets.len()).map(|j| {
        let set: Vec<String> = r.sets[j].iter().map(|l| l.to_string()).collect();
        vec![
            j.to_string(),
            r.scores[j].to_string(),
            r.pvalues[j].to_f64().to_string(),
            u8::from(chosen[j]).to_string(),
            set.join(" "),
        ]
    });
    write_csv(
        &dir.join("sets.csv"),
        &with_rows(m, r.sets.len()),
        &["subject_index", "score", "p_value", "selected", "set"],
        rows,
    )?;
    println!("infosets: {} of {} subjects selected", r.selected.len(), r.sets.len());
    Ok(())
}

/// Builds the design described by `simulate` flags.
pub fn design_from_args(a: &SimulateArgs) -> SimDesign {
    let preset = match a.preset {
        PresetArg::Overall => Preset::Overall,
        PresetArg::Classwise => Preset::Classwise,
    };
    let mut design = SimDesign::new(a.k, preset);
    if !a.alphas.is_empty() {
        design.alphas = a.alphas.clone();
    }
    design.reps = a.reps;
    design.seed = a.seed;
    design.d = a.d;
    design.n0 = a.n0;
    design.redraw_priors = !a.freeze_priors;
    design.epsp_factor = a.epsp_factor;
    design.oracle_mc = a.oracle_mc;
    design.scores = match a.scores {
        ScoresArg::Oracle => ScoreSource::Oracle,
        ScoresArg::Softmax => ScoreSource::Softmax(TrainConfig {
            epochs: a.epochs,
            step_size: a.step_size,
            l2: a.l2,
        }),
    };
    design
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let dir = out_dir(&a.out)?;
    let design = design_from_args(a);
    let summary = run_experiment(&design)?;
    write_simulation(dir, &summary)?;
    for row in &summary.rows {
        let s = &row.summary;
        let worst = s
            .group_fdr
            .iter()
            .map(|e| e.mean)
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{:<6} alpha={:<5} max group FDR={:.4} power={:.4}",
            row.method, row.alpha, worst, s.overall_power.mean
        );
    }
    Ok(())
}

/// Writes `summary.csv`, `replications.csv` and `series.csv` into `dir`.
pub fn write_simulation(dir: &Path, summary: &ExperimentSummary) -> Result<()> {
    let d = &summary.design;
    let m = meta(
        "simulate",
        &[
            ("seed", d.seed.to_string()),
            ("preset", d.preset.to_string()),
            ("K", d.k.to_string()),
            ("d", d.d.to_string()),
            ("n0", d.n0.to_string()),
            ("reps", d.reps.to_string()),
            ("scores", d.scores.to_string()),
            ("redraw_priors", d.redraw_priors.to_string()),
            ("alphas", join(&d.alphas)),
        ],
    );
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for row in &summary.rows {
        let s = &row.summary;
        let groups = s.group_fdr.len();
        for g in 0..groups {
            // a singleton group reports that class's power
            let power = if groups == 1 {
                Some(s.overall_power)
            } else {
                s.class_power[g]
            };
            let mfdr = s.group_mfdr[g];
            rows.push(vec![
                row.method.to_string(),
                row.alpha.to_string(),
                (g + 1).to_string(),
                s.group_fdr[g].mean.to_string(),
                opt(s.group_fdr[g].se),
                opt(power.map(|p| p.mean)),
                opt(power.and_then(|p| p.se)),
                opt(mfdr.map(|e| e.mean)),
                opt(mfdr.and_then(|e| e.se)),
                s.group_decided[g].mean.to_string(),
            ]);
            for (metric, est) in [("fdr", Some(s.group_fdr[g])), ("power", power), ("mfdr", mfdr)] {
                series.push(vec![
                    row.method.to_string(),
                    metric.to_string(),
                    (g + 1).to_string(),
                    row.alpha.to_string(),
                    opt(est.map(|e| e.mean)),
                    opt(est.and_then(|e| e.se)),
                ]);
            }
        }
    }
    write_csv(
        &dir.join("summary.csv"),
        &with_rows(m.clone(), rows.len()),
        &[
            "method", "alpha", "group", "fdr", "fdr_se", "power", "power_se", "mfdr", "mfdr_se",
            "decisions",
        ],
        rows,
    )?;
    write_csv(
        &dir.join("series.csv"),
        &with_rows(m.clone(), series.len()),
        &["method", "metric", "group", "alpha", "mean", "se"],
        series,
    )?;
    let mut reps = Vec::new();
    for r in &summary.replications {
        for g in 0..r.metrics.group_fdp.len() {
            reps.push(vec![
                r.rep.to_string(),
                r.method.to_string(),
                r.alpha.to_string(),
                (g + 1).to_string(),
                r.metrics.group_fdp[g].to_string(),
                r.metrics.group_false[g].to_string(),
                r.metrics.group_decided[g].to_string(),
                r.theta_hat.get(g).map_or_else(|| "NA".into(), |t| t.to_string()),
                r.metrics.overall_power.to_string(),
            ]);
        }
    }
    write_csv(
        &dir.join("replications.csv"),
        &with_rows(m, reps.len()),
        &[
            "rep", "method", "alpha", "group", "fdp", "false_decisions", "decisions", "theta_hat",
            "overall_power",
        ],
        reps,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_specs() {
        let p = parse_partition("overall", &[0.1], 3).unwrap();
        assert_eq!(p.num_groups(), 1);
        let p = parse_partition("classwise", &[0.1], 3).unwrap();
        assert_eq!(p.alphas(), &[0.1; 3]);
        let p = parse_partition("1,3;2", &[0.1, 0.2], 3).unwrap();
        assert_eq!(p.alpha(p.group_of(ClassLabel::from_index(2))), 0.1);
        assert!(matches!(
            parse_partition("1;2", &[0.1], 3).unwrap_err(),
            PspError::UncoveredLabel { label: 3 }
        ));
        assert!(parse_partition("1,x", &[0.1], 2).is_err());
        assert!(parse_partition("overall", &[], 2).is_err());
    }

    #[test]
    fn config_flattening() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(
            &p,
            "seed = 3\nfreeze_priors = true\nalphas = [0.05, 0.1]\n[partition]\ngroups = [[1, 2], [3]]\n",
        )
        .unwrap();
        let t = config_tokens(&p).unwrap();
        assert_eq!(
            t,
            ["--alphas", "0.05,0.1", "--freeze-priors", "--partition", "1,2;3", "--seed", "3"]
        );
    }

    #[test]
    fn command_line_overrides_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "seed = 3\nreps = 7\n").unwrap();
        let argv = ["psp", "simulate", "--config", p.to_str().unwrap(), "--seed", "9"];
        let argv: Vec<OsString> = argv.iter().map(OsString::from).collect();
        let cli = parse(&argv).unwrap();
        match cli.command {
            Command::Simulate(a) => {
                assert_eq!(a.seed, 9);
                assert_eq!(a.reps, 7);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&PspError::ZeroCalibration), EXIT_DATA);
        assert_eq!(exit_code(&PspError::InvalidL { l: 0, max: 1 }), EXIT_CONFIG);
    }
}
