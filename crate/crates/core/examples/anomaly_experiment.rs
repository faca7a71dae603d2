//! The full three-phase experiment on synthetic ECG under each plasticity
//! setting, on the same network and input streams.
//!
//! Phase 1 trains on normal beats, phase 2 fits the readout, phase 3 scores
//! a test record with inverted-QRS beats. Prints the margin per setting and
//! writes the deviation traces to `out/anomaly_experiment/<setting>/`.
//!
//! Run with `cargo run --release --example anomaly_experiment [seed]`.

use std::path::Path;

use srnn::config::{Config, Plasticity};
use srnn::harness::{run_experiment, write_experiment, ExperimentData, RunSeeds};

fn main() -> srnn::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let base = Config { seed, ..Config::default() };
    let data = ExperimentData::synthetic(&base)?;
    println!(
        "train {} samples, test {} samples, {} abnormal ranges",
        data.train.len(),
        data.test.len(),
        data.annotations.ranges.iter().filter(|r| r.label == srnn::anomaly::Label::Abnormal).count()
    );
    for plasticity in Plasticity::ALL {
        let cfg = Config { plasticity, ..base.clone() };
        let t0 = std::time::Instant::now();
        let out = run_experiment(&cfg, &data, RunSeeds::for_config(&cfg, 0))?;
        let m = out.margin;
        let thr: f64 = out.network.excitatory().iter().map(|n| n.v_thr).sum::<f64>() / cfg.n_excitatory as f64;
        let w: Vec<f64> = out.network.plastic_weights().collect();
        println!(
            "{:13} W_thr {:8.3} Hz (D_no_max {:7.3}, D_ab_min {:7.3}), mean V_thr {thr:.3} V, mean W {:.3}, {:.1} s",
            plasticity.as_str(),
            m.w_thr,
            m.d_no_max,
            m.d_ab_min,
            w.iter().sum::<f64>() / w.len().max(1) as f64,
            t0.elapsed().as_secs_f64()
        );
        write_experiment(&out, &Path::new("out/anomaly_experiment").join(plasticity.as_str()))?;
    }
    Ok(())
}
