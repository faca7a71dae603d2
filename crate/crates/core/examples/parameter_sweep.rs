//! A small sweep over the presentation time in the binary regime, written
//! as long-form and per-cell CSVs, followed by the trend report.
//!
//! Run with `cargo run --release --example parameter_sweep [jobs]`.

use std::path::Path;

use srnn::config::Config;
use srnn::harness::{load_sweep, run_sweep, sweep_checks, write_sweep, ExperimentData};

fn main() -> srnn::Result<()> {
    let jobs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = Config::default().with_overrides(&[
        "lr_sdsp=2.0",
        "lr_thr=0.3",
        "sweep_t_bin=[0.007, 0.02]",
        "sweep_n_input=[10, 100]",
        "repeats=2",
        "train_beats=3",
        "test_beats=4",
        "test_anomalies=[2]",
    ])?;
    let data = ExperimentData::synthetic(&cfg)?;
    let rows = run_sweep(&cfg, &data, jobs)?;
    let dir = Path::new("out/parameter_sweep");
    write_sweep(&rows, &cfg, dir)?;
    print!("{}", std::fs::read_to_string(dir.join("sweep_cells.csv")).unwrap_or_default());
    for check in sweep_checks(&load_sweep(&dir.join("sweep.csv"))?) {
        println!("{check}");
    }
    Ok(())
}
