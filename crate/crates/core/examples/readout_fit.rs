//! Ridge readout on a toy reservoir.
//!
//! Fits next-sample prediction from noisy random features, shows the weight
//! norm shrinking with the penalty, and saves and reloads the model.
//!
//! Run with `cargo run --release --example readout_fit`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srnn::readout::{feature_scale, fit_readout, predict, ReadoutModel};

fn main() -> srnn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let signal: Vec<f64> = (0..300).map(|k| 80.0 + 40.0 * (k as f64 * 0.2).sin()).collect();
    let gains: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..2.0)).collect();
    let features: Vec<Vec<f64>> = signal
        .iter()
        .map(|s| gains.iter().map(|g| (g * s + rng.gen_range(-5.0..5.0)).max(0.0)).collect())
        .collect();
    let (x, y) = (&features[..features.len() - 1], &signal[1..]);
    let scale = feature_scale(x);
    for rel in [0.0, 1e-3, 1e-1, 1.0, 10.0] {
        let m = fit_readout(x, y, rel * scale)?;
        let norm = m.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        println!("lambda = {rel:6} x scale: |w| = {norm:.4}, residual = {:.2}", m.residual);
    }
    let m = fit_readout(x, y, 0.1 * scale)?;
    let back = ReadoutModel::from_text(&m.to_text())?;
    assert_eq!(back, m);
    println!("prediction for the last bin: {:.2} Hz", predict(&back, &features[features.len() - 1]));
    Ok(())
}
