//! e-value decisions next to p-value decisions on the same data.
//!
//! With `α' = α` both procedures label the same subjects; a smaller `α'`
//! trims the score cut-off and the e-values grow.

use psp::simlab::{replication_data, score_replication, Preset, SimDesign};
use psp::{epsp_run, psp_run, GroupPartition};

fn main() -> psp::Result<()> {
    let design = SimDesign {
        seed: 11,
        ..SimDesign::new(3, Preset::Overall)
    };
    let s = score_replication(&design, &replication_data(&design, 0)?)?;
    let alpha = 0.1;
    let partition = GroupPartition::overall(3, alpha)?;
    let run = |alpha_prime: Option<f64>| match alpha_prime {
        None => psp_run(
            &s.target_scores,
            &s.holdout_scores,
            &s.pre_target,
            &s.pre_holdout,
            &s.holdout_truth,
            &partition,
        ),
        Some(a) => epsp_run(
            &s.target_scores,
            &s.holdout_scores,
            &s.pre_target,
            &s.pre_holdout,
            &s.holdout_truth,
            &partition,
            &[a],
        ),
    };

    let p = run(None)?;
    println!("p-values          decided {:>4}", p.decided_count());
    for factor in [1.0, 0.75, 0.5, 0.25] {
        let e = run(Some(factor * alpha))?;
        let same = e.decided_indices() == p.decided_indices();
        println!(
            "e-values a'={:<6.3} decided {:>4}  cut-off {:>8.3}  same set: {same}",
            factor * alpha,
            e.decided_count(),
            e.outcomes[0].threshold
        );
    }
    Ok(())
}
