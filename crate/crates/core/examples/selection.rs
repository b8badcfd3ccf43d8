//! Selecting subjects whose label falls in a region of interest.

use psp::extensions::{select_subjects, SelectionTask};
use psp::simlab::{replication_data, run_selection_experiment, score_replication, Preset, SimDesign};

fn main() -> psp::Result<()> {
    let design = SimDesign {
        seed: 21,
        ..SimDesign::new(4, Preset::Overall)
    };
    let task = SelectionTask::new(4, &[3, 4], 0.1)?;

    let s = score_replication(&design, &replication_data(&design, 0)?)?;
    let mass = |m: &psp::ScoreMatrix| -> Vec<f64> {
        m.rows().map(|r| r[2] + r[3]).collect()
    };
    let result = select_subjects(
        &task,
        &mass(&s.target_scores),
        &mass(&s.holdout_scores),
        &s.holdout_truth,
        None,
        None,
    )?;
    let false_hits = result
        .selected
        .iter()
        .filter(|&&j| !task.contains(s.target_truth[j]))
        .count();
    println!(
        "one draw: selected {} of {}, {false_hits} outside the region, theta_hat {:.3}",
        result.selected.len(),
        s.target_truth.len(),
        result.theta_hat.to_f64()
    );

    let study = run_selection_experiment(&SimDesign { reps: 200, ..design }, &[3, 4], 0.1)?;
    println!(
        "200 draws: FDR {:.4} (se {:.4}), power {:.3}",
        study.fdr.mean,
        study.fdr.se.unwrap_or(f64::NAN),
        study.power.mean
    );
    Ok(())
}
