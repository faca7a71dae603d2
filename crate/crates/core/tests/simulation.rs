use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use srnn::config::Config;
use srnn::encoding::{self, InputEncoder};
use srnn::engine::{Learning, Network, StepContext};
use srnn::harness::{self, Cell, ExperimentData, RunSeeds};
use srnn::topology::build_network;

const DT: f64 = 1e-4;

#[test]
fn poisson_counts_have_binomial_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for rate in [10.0, 150.0, 1800.0] {
        let trials = 4000;
        let counts: Vec<f64> = (0..trials)
            .map(|_| {
                let bin = encoding::generate_poisson_bin(rate, 0.15, DT, &mut rng).unwrap();
                bin.iter().filter(|&&s| s).count() as f64
            })
            .collect();
        let n = 1500.0;
        let p = rate * DT;
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
        let (mu, s2) = (n * p, n * p * (1.0 - p));
        assert!((mean - mu).abs() <= 4.0 * (s2 / trials as f64).sqrt(), "rate {rate}: mean {mean} vs {mu}");
        assert!((var - s2).abs() <= 4.0 * s2 * (2.0 / trials as f64).sqrt() + 0.05, "rate {rate}: var {var} vs {s2}");
    }
}

#[test]
fn input_streams_are_independent_and_reproducible() {
    let mut a = InputEncoder::new(50, 3);
    let mut b = InputEncoder::new(50, 3);
    let steps = 20_000;
    let xa = a.encode_bin(400.0, steps, DT).unwrap();
    assert_eq!(xa, b.encode_bin(400.0, steps, DT).unwrap());

    // Pairwise coincidences match the product of marginals.
    let mut trains = vec![vec![false; steps]; 50];
    for (t, ids) in xa.iter().enumerate() {
        for &i in ids {
            trains[i as usize][t] = true;
        }
    }
    let p = 0.04;
    let expected = steps as f64 * p * p;
    let sd = (steps as f64 * p * p * (1.0 - p * p)).sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let both = trains[i].iter().zip(&trains[i + 1]).filter(|(x, y)| **x && **y).count() as f64;
        worst = worst.max((both - expected).abs() / sd);
    }
    assert!(worst < 4.5, "coincidence z {worst}");
    assert_ne!(trains[0], trains[1]);
}

#[test]
fn rate_above_one_spike_per_step_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(encoding::generate_poisson_bin(1e4, 0.01, DT, &mut rng).is_err());
    assert!(encoding::generate_poisson_bin(9_999.0, 0.01, DT, &mut rng).is_ok());
    assert!(encoding::generate_poisson_bin(-1.0, 0.01, DT, &mut rng).is_err());
}

fn small() -> Config {
    Config::default()
        .with_overrides(&["t_bin=0.007", "train_beats=2", "test_beats=4", "test_anomalies=[2]"])
        .unwrap()
}

#[test]
fn experiments_are_deterministic_per_seed() {
    let cfg = small();
    let data = ExperimentData::synthetic(&cfg).unwrap();
    let seeds = RunSeeds::for_config(&cfg, 0);
    let a = harness::run_experiment(&cfg, &data, seeds).unwrap();
    let b = harness::run_experiment(&cfg, &data, seeds).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.network.plasticity_fingerprint(), b.network.plasticity_fingerprint());
    let c = harness::run_experiment(&cfg, &data, RunSeeds::for_config(&cfg, 1)).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn sweep_rows_recompute_in_isolation() {
    let cfg = small().with_overrides(&["sweep_n_input=[10, 100]", "repeats=2"]).unwrap();
    let data = ExperimentData::synthetic(&cfg).unwrap();
    let rows = harness::run_sweep(&cfg, &data, 2).unwrap();
    assert_eq!(rows.len(), 4);
    let last = rows.last().unwrap();
    assert_eq!(&harness::run_cell(&cfg, &data, last.cell, last.repeat), last);
    // All cells of a repeat share one network.
    let cells: Vec<Cell> = rows.iter().map(|r| r.cell).collect();
    assert_eq!(
        RunSeeds::derive(cfg.seed, &cells[0], 1).topology,
        RunSeeds::derive(cfg.seed, &cells[3], 1).topology
    );
}

#[test]
fn firing_respects_refractory_ceiling() {
    let cfg = Config::default().with_overrides(&["f_poisson=1500", "t_bin=0.01"]).unwrap();
    let seeds = RunSeeds::for_config(&cfg, 0);
    let mut net = harness::build_run_network(&cfg, seeds).unwrap();
    let sim = cfg.sim_config(seeds.encoder);
    let ctx = StepContext::new(&sim, Learning::FROZEN);
    // floor(10 ms / 2 ms) + 1 spikes at most; the 21-step minimum interval allows 5.
    let mut max = 0;
    for k in 0..40 {
        max = max.max(net.run_bin(k, 0.5, &ctx).unwrap().max_count());
    }
    assert!(max <= 5, "{max}");
    assert!(max >= 3, "strong drive should approach the ceiling, got {max}");
}

#[test]
fn recurrent_spikes_arrive_one_step_late() {
    let cfg = Config::default()
        .with_overrides(&["n_input=1", "n_excitatory=2", "n_inhibitory=0", "p_in=1.0", "p_ee=1.0", "plasticity='none'"])
        .unwrap();
    let topo = Arc::new(build_network(&cfg.topology_config(0)).unwrap());
    let sim = cfg.sim_config(0);
    let mut net = Network::new(topo, &sim).unwrap();
    let ctx = StepContext::new(&sim, Learning::FROZEN);
    net.neurons[0].v_mem = 1.0;
    let fired = net.step(&[], &ctx).to_vec();
    assert_eq!(fired, vec![0]);
    assert_eq!(net.currents[1], 0.0);
    net.step(&[], &ctx);
    assert!(net.currents[1] > 0.0);
}
