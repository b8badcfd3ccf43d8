//! Training the built-in multinomial logistic classifier.

use psp::models::{train_softmax, ScoreFunction, TrainConfig};
use psp::simlab::{features, mixture, sample_dataset};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> psp::Result<()> {
    let spec = mixture(4, 10, vec![0.25; 4])?;
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let train = sample_dataset(&spec, 400, &mut rng);
    let test = sample_dataset(&spec, 4000, &mut rng);

    let model = train_softmax(&train, 4, TrainConfig::default())?;
    let history = model.loss_history();
    for (epoch, loss) in history.iter().enumerate().step_by(100) {
        println!("epoch {epoch:>4}  loss {loss:.5}");
    }
    println!("final loss {:.5}", history.last().unwrap());

    let scores = model.score_matrix(&features(&test))?;
    let hits = scores
        .rows()
        .zip(&test)
        .filter(|(row, z)| {
            let best = (0..4).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            best == z.y.index()
        })
        .count();
    println!("test accuracy {:.3}", hits as f64 / test.len() as f64);
    Ok(())
}
