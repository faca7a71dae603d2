//! The spike-driven weight update on its discrete grid.
//!
//! Shows the three branches of the rule, the clamps, and the binary regime
//! in which a single step spans the whole weight range.
//!
//! Run with `cargo run --release --example sdsp_rule`.

use srnn::synapse::{apply_sdsp, EdgeWeight, SynapseParams};

fn main() {
    let (up, down) = (0.1, 0.1);
    for lr in [0.1, 0.5, 2.0] {
        let params = SynapseParams { lr_sdsp: lr, ..Default::default() };
        println!("lr_sdsp = {lr}: grid has {} levels", params.grid_levels() + 1);
        for (w, v_post) in [(1.0, 0.15), (1.0, 0.05), (1.0, 0.1), (2.0, 0.15), (0.0, 0.05), (0.0, 0.15)] {
            let start = if params.is_on_grid(w) { w } else { 0.0 };
            let next = apply_sdsp(EdgeWeight::plastic(start), v_post, up, down, &params);
            println!("  W = {start:.1}, V_post = {v_post:.2} V -> W = {:.1}", next.weight);
        }
    }

    // A random walk of potentiation and depression never leaves the grid.
    let params = SynapseParams { lr_sdsp: 0.2, ..Default::default() };
    let mut edge = EdgeWeight::plastic(1.0);
    let mut visited = std::collections::BTreeSet::new();
    for i in 0..200u32 {
        let v_post = if (i * 7919) % 3 == 0 { 0.05 } else { 0.15 };
        edge = apply_sdsp(edge, v_post, up, down, &params);
        visited.insert((edge.weight * 10.0).round() as i64);
    }
    let levels: Vec<f64> = visited.iter().map(|&l| l as f64 / 10.0).collect();
    println!("\nlr_sdsp = 0.2 random walk visited {levels:?}");
}
