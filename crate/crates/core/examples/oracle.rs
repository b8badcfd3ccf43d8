//! Cut-offs of the population-optimal rule for a known mixture.

use psp::models::gmm_posterior;
use psp::oracle::{oracle_decide, oracle_rules};
use psp::simlab::{class_means, features, labels, mixture, sample_dataset};
use psp::models::{argmax_preclassify, ScoreFunction};
use psp::metrics::group_fdp;
use psp::GroupPartition;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> psp::Result<()> {
    let k = 4;
    let spec = mixture(k, 10, vec![0.4, 0.3, 0.2, 0.1])?;
    println!("class means scale {:.3}", class_means(k, 10)[0][0]);

    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let fresh = sample_dataset(&spec, 20_000, &mut rng);
    let posterior = gmm_posterior(&spec);
    let mu = posterior.score_matrix(&features(&fresh))?;
    let pre = argmax_preclassify(&mu, 6);
    let truth = labels(&fresh);

    for alpha in [0.05, 0.1, 0.2] {
        let partition = GroupPartition::overall(k, alpha)?;
        let rules = oracle_rules(&spec, &partition, 200_000, 1)?;
        let decisions = oracle_decide(&rules, &mu, &pre)?;
        let all: Vec<_> = partition.members(0).to_vec();
        let fdp = group_fdp(&decisions, &truth, &all)?;
        let decided = decisions.iter().filter(|d| !d.is_abstain()).count();
        println!(
            "alpha {alpha:<4}  t* {:.4} (grid step {:.1e})  fresh FDP {fdp:.4}  decided {decided}",
            rules[0].t_star, rules[0].resolution
        );
    }
    Ok(())
}
