//! Random three-layer topology: build, inspect, export, reload.
//!
//! Run with `cargo run --release --example build_topology [seed]`.

use srnn::topology::{build_network, degree_report, EdgeClass, Topology, TopologyConfig};

fn main() -> srnn::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = TopologyConfig { seed, ..Default::default() };
    let t = build_network(&cfg)?;
    let report = degree_report(&t);
    for c in &report.classes {
        println!(
            "{:5} {:5} edges, mean in-degree {:6.2}, mean out-degree {:6.2}",
            c.class.tag(),
            c.edges,
            c.in_degree.mean,
            c.out_degree.mean
        );
    }
    let n = cfg.n_excitatory as f64;
    println!("expected E->E edges {:.0} +- {:.1}", cfg.p_ee * n * (n - 1.0), (n * (n - 1.0) * cfg.p_ee * (1.0 - cfg.p_ee)).sqrt());
    println!("isolated excitatory neurons: {:?}", report.isolated_excitatory);

    let crossbar = t.crossbar();
    let active = crossbar.iter().flatten().filter(|w| **w != 0.0).count();
    println!("crossbar {} x {}, {active} active crosspoints", crossbar.len(), crossbar[0].len());

    let text = t.to_edge_list();
    let back = Topology::from_edge_list(&text)?;
    assert_eq!(back, t);
    println!("edge list: {} lines, round trip exact; first E->E line: {:?}", text.lines().count(),
        text.lines().find(|l| l.starts_with(EdgeClass::ExcitatoryToExcitatory.tag())).unwrap_or(""));
    Ok(())
}
