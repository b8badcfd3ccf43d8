//! Deciding from score files through the command-line entry point.

use psp::io::{write_labels, write_scores};
use psp::simlab::{replication_data, score_replication, Preset, SimDesign};

fn main() -> psp::Result<()> {
    let design = SimDesign::new(3, Preset::Overall);
    let s = score_replication(&design, &replication_data(&design, 0)?)?;
    let dir = std::env::temp_dir().join("psp-example");
    std::fs::create_dir_all(&dir).map_err(|e| psp::PspError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    write_scores(&dir.join("target.csv"), &[], &s.target_scores)?;
    write_scores(&dir.join("holdout.csv"), &[], &s.holdout_scores)?;
    write_labels(&dir.join("labels.csv"), &[], &s.holdout_truth)?;

    let path = |name: &str| dir.join(name).display().to_string();
    let argv = [
        "psp".to_string(),
        "decide".into(),
        "--partition".into(),
        "1,2;3".into(),
        "--alphas".into(),
        "0.1,0.2".into(),
        "--target-scores".into(),
        path("target.csv"),
        "--holdout-scores".into(),
        path("holdout.csv"),
        "--holdout-labels".into(),
        path("labels.csv"),
        "--out".into(),
        path("out"),
    ];
    let code = psp::cli::main_with_args(argv);
    println!("exit code {code}; outputs in {}", path("out"));
    if let Ok(groups) = std::fs::read_to_string(dir.join("out/groups.csv")) {
        print!("{groups}");
    }
    Ok(())
}
