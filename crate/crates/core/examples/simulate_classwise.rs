//! Per-class error control with one level shared by all classes.

use psp::models::TrainConfig;
use psp::simlab::{run_experiment, Method, Preset, ScoreSource, SimDesign};

fn main() -> psp::Result<()> {
    let design = SimDesign {
        reps: 100,
        seed: 7,
        scores: ScoreSource::Softmax(TrainConfig::default()),
        ..SimDesign::new(4, Preset::Classwise)
    };
    let summary = run_experiment(&design)?;
    print!("alpha");
    for c in 1..=design.k {
        print!("   fdr_{c}  pow_{c}");
    }
    println!();
    for &alpha in &design.alphas {
        let row = summary.row(Method::Psp, alpha).expect("every level is run");
        print!("{alpha:<5}");
        for c in 0..design.k {
            let power = row.summary.class_power[c].as_ref().map_or(f64::NAN, |e| e.mean);
            print!("  {:.4}  {:.3}", row.summary.group_fdr[c].mean, power);
        }
        println!();
    }
    Ok(())
}
