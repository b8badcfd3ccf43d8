//! One replication of the mixture study, decided class by class.
//!
//! Run with `cargo run --release --example decide`.

use psp::metrics::ReplicationMetrics;
use psp::models::TrainConfig;
use psp::simlab::{replication_data, score_replication, Preset, ScoreSource, SimDesign};
use psp::{psp_run, GroupPartition};

fn main() -> psp::Result<()> {
    let design = SimDesign {
        seed: 3,
        scores: ScoreSource::Softmax(TrainConfig::default()),
        ..SimDesign::new(4, Preset::Classwise)
    };
    let data = replication_data(&design, 0)?;
    let s = score_replication(&design, &data)?;

    let partition = GroupPartition::classwise(4, &[0.1, 0.1, 0.2, 0.2])?;
    let report = psp_run(
        &s.target_scores,
        &s.holdout_scores,
        &s.pre_target,
        &s.pre_holdout,
        &s.holdout_truth,
        &partition,
    )?;
    let m = ReplicationMetrics::compute(&report.decisions, &s.target_truth, &partition)?;

    println!("group  alpha  theta_hat  subjects  decided  fdp");
    for (g, o) in report.outcomes.iter().enumerate() {
        println!(
            "{:>5}  {:>5}  {:>9.4}  {:>8}  {:>7}  {:.3}",
            g + 1,
            partition.alpha(g),
            o.theta_hat,
            o.subjects,
            o.decided,
            m.group_fdp[g]
        );
    }
    println!(
        "decided {} of {} subjects, power {:.3}",
        report.decided_count(),
        report.len(),
        m.overall_power
    );
    Ok(())
}
