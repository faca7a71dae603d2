//! Snapshot a running network and continue from the snapshot.
//!
//! Run with `cargo run --release --example checkpoint_resume`.

use srnn::checkpoint;
use srnn::config::Config;
use srnn::engine::StepContext;
use srnn::harness::{build_run_network, RunSeeds};

fn main() -> srnn::Result<()> {
    let cfg = Config::default().with_overrides(&["t_bin=0.02"])?;
    let seeds = RunSeeds::for_config(&cfg, 0);
    let sim = cfg.sim_config(seeds.encoder);
    let ctx = StepContext::new(&sim, sim.learning());
    let mut net = build_run_network(&cfg, seeds)?;
    for k in 0..20 {
        net.run_bin(k, 0.4, &ctx)?;
    }
    let text = checkpoint::save(&net, &cfg);
    println!("checkpoint: {} lines, {} bytes", text.lines().count(), text.len());
    let (_, mut resumed) = checkpoint::load(&text)?;
    for k in 20..40 {
        let e = if k % 2 == 0 { 0.45 } else { -0.3 };
        let a = net.run_bin(k, e, &ctx)?;
        let b = resumed.run_bin(k, e, &ctx)?;
        assert_eq!(a, b, "resumed run diverged at bin {k}");
    }
    assert_eq!(net.plasticity_fingerprint(), resumed.plasticity_fingerprint());
    println!("20 further bins identical after reload, fingerprint {:016x}", net.plasticity_fingerprint());
    Ok(())
}
