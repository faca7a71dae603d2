//! Why learning thresholds must follow the firing threshold.
//!
//! A small all-to-all excitatory pool is driven hard while the threshold
//! controller pushes every firing threshold to its floor. With fixed learning
//! thresholds the membrane can no longer reach them, every arriving spike
//! depresses, and the plastic weights collapse to zero. With synchronized
//! learning thresholds the same drive leaves weights alive.
//!
//! Run with `cargo run --release --example threshold_interference`.

use srnn::harness::run_interference;

fn main() -> srnn::Result<()> {
    for sync in [false, true] {
        let out = run_interference(sync, 1, 10_000)?;
        let alive = out.driven_weights.iter().filter(|&&w| w > 0.0).count();
        let mean = out.driven_weights.iter().sum::<f64>() / out.driven_weights.len().max(1) as f64;
        println!(
            "threshold_sync = {sync:5}: {} driven weights, {alive} above zero, mean {mean:.3}, \
             all zero = {} after {} arrivals",
            out.driven_weights.len(),
            out.all_zero,
            out.arrivals
        );
    }
    Ok(())
}
