//! Prediction sets of at most `L` labels, reported only where informative.

use psp::extensions::{informative_sets, InformativeSetTask};
use psp::simlab::{replication_data, run_infoset_experiment, score_replication, Preset, SimDesign};

fn main() -> psp::Result<()> {
    let design = SimDesign {
        seed: 4,
        ..SimDesign::new(6, Preset::Overall)
    };
    let s = score_replication(&design, &replication_data(&design, 0)?)?;
    for l in 1..=3 {
        let task = InformativeSetTask::new(6, l, 0.1)?;
        let result = informative_sets(&task, &s.target_scores, &s.holdout_scores, &s.holdout_truth)?;
        let reported: Vec<_> = result.reported().collect();
        let missed = reported
            .iter()
            .filter(|(j, set)| !set.contains(&s.target_truth[*j]))
            .count();
        println!("L = {l}: {} sets reported, {missed} miss the label", reported.len());
        if let Some((j, set)) = reported.first() {
            let names: Vec<String> = set.iter().map(|c| c.to_string()).collect();
            println!("  subject {j}: {{{}}}", names.join(", "));
        }
    }
    let study = run_infoset_experiment(&SimDesign { reps: 100, ..design }, 2, 0.1)?;
    println!(
        "L = 2 over 100 draws: FCR {:.4}, mean set size {:.2}",
        study.fcr.mean, study.mean_set_size.mean
    );
    Ok(())
}
