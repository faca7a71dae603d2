//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run a subset by passing criterion numbers:
//! `cargo test --release --test acceptance -- 6 9`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srnn::config::{Config, Plasticity};
use srnn::harness::{self, Cell, ExperimentData, RunSeeds};
use srnn::neuron::{self, IpConfig, NeuronParams, NeuronState};
use srnn::readout;
use srnn::synapse::{self, EdgeWeight, SynapseParams};
use srnn::topology::{build_network, EdgeClass};

const DT: f64 = 1e-4;
const SEEDS: usize = 5;
const P_THR: [f64; 4] = [0.025, 0.05, 0.1, 0.3];
const S_LR: [f64; 5] = [0.1, 0.2, 0.5, 1.0, 2.0];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration) -> (bool, String) {
    (
        elapsed <= limit,
        format!("{:.2} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs()),
    )
}

fn lif_closed_form() -> Verdict {
    let t0 = Instant::now();
    let p = NeuronParams::excitatory();
    let mut worst: f64 = 0.0;
    for current in [10e-12, 50e-12, 120e-12, 400e-12] {
        let mut s = NeuronState::at_rest(&p, f64::INFINITY);
        for _ in 0..40 {
            s = neuron::step_membrane(s, &p, current, DT).unwrap();
        }
        let exact = current * p.resistance * (1.0 - (-4e-3 / (p.resistance * p.capacitance)).exp());
        worst = worst.max((s.v_mem - exact).abs() / exact);
    }
    let (fast, time) = within(t0.elapsed(), Duration::from_secs(1));
    verdict(worst <= 1e-9 && fast, format!("max relative error {worst:.3e} (tol 1e-9), {time}"))
}

fn calcium_trace() -> Verdict {
    let p = NeuronParams::excitatory();
    let mut s = NeuronState {
        calcium: 1.0,
        ..NeuronState::at_rest(&p, 0.2)
    };
    for _ in 0..1000 {
        s = neuron::update_calcium(s, &p, false, DT);
    }
    let decay_err = (s.calcium - (-1.0f64).exp()).abs() / (-1.0f64).exp();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let horizon = 20_000;
    let mut steps = rand::seq::index::sample(&mut rng, horizon, 100).into_vec();
    steps.sort_unstable();
    let mut s = NeuronState::at_rest(&p, 0.2);
    let mut next = steps.iter().peekable();
    for t in 0..horizon {
        let fired = next.next_if(|&&k| k == t).is_some();
        s = neuron::update_calcium(s, &p, fired, DT);
    }
    // Spike at step k contributes exp(-(horizon - 1 - k) dt / tau) at the end.
    let sum: f64 = steps
        .iter()
        .map(|&k| (-((horizon - 1 - k) as f64) * DT / p.calcium_tau).exp())
        .sum();
    let sup_err = (s.calcium - sum).abs() / sum;
    verdict(
        decay_err <= 1e-9 && sup_err <= 1e-9,
        format!(
            "decay relative error {decay_err:.3e}, {}-spike superposition relative error {sup_err:.3e} (tol 1e-9)",
            steps.len()
        ),
    )
}

fn threshold_fuzz() -> Verdict {
    let p = NeuronParams::excitatory();
    let mut violations = 0u64;
    for (i, &step) in P_THR.iter().enumerate() {
        let ip = IpConfig::with_step(step);
        let mut rng = ChaCha8Rng::seed_from_u64(30 + i as u64);
        let start = ip.v_thr_min + rng.gen_range(0..=ip.grid_levels()) as f64 * step;
        let mut s = NeuronState::at_rest(&p, start);
        for _ in 0..1_000_000 {
            let calcium = rng.gen_range(0.0..3.0 * ip.target_activity);
            s = neuron::apply_ip_with_calcium(s, &ip, calcium);
            let ok = s.thresholds_ordered()
                && s.v_thr >= ip.v_thr_min
                && s.v_thr <= ip.v_thr_max
                && ip.is_on_grid(s.v_thr);
            if !ok {
                violations += 1;
            }
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations over 10^6 updates for each LR_thr in {P_THR:?}"),
    )
}

fn weight_fuzz() -> Verdict {
    let mut violations = 0u64;
    for (i, &lr) in S_LR.iter().enumerate() {
        let params = SynapseParams {
            lr_sdsp: lr,
            ..SynapseParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(40 + i as u64);
        let mut w = EdgeWeight::plastic(rng.gen_range(0..=params.grid_levels()) as f64 * lr);
        for _ in 0..1_000_000 {
            let down = rng.gen_range(0.0..0.2);
            let up = down + rng.gen_range(0.0..0.05);
            let v_post = rng.gen_range(-0.05..0.45);
            w = synapse::apply_sdsp(w, v_post, up, down, &params);
            if !(0.0..=params.w_max).contains(&w.weight) || !params.is_on_grid(w.weight) {
                violations += 1;
            }
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations over 10^6 updates for each LR_SDSP in {S_LR:?}"),
    )
}

fn interference() -> Verdict {
    let t0 = Instant::now();
    let off = harness::run_interference(false, 5, 10_000).unwrap();
    let on = harness::run_interference(true, 5, 10_000).unwrap();
    let survivors = on.driven_weights.iter().filter(|&&w| w > 0.0).count();
    let (fast, time) = within(t0.elapsed(), Duration::from_secs(30));
    verdict(
        off.all_zero && off.arrivals <= 10_000 && survivors > 0 && fast,
        format!(
            "sync off: {} driven weights all zero = {} after {} arrivals; sync on: {survivors} of {} > 0 after {} arrivals; {time}",
            off.driven_weights.len(),
            off.all_zero,
            off.arrivals,
            on.driven_weights.len(),
            on.arrivals
        ),
    )
}

/// Runs `SEEDS` repeats of one configuration with the same seeds a sweep uses.
fn repeats(cfg: &Config, data: &ExperimentData) -> Vec<harness::ExperimentOutput> {
    (0..SEEDS)
        .map(|r| {
            let seeds = RunSeeds::derive(cfg.seed, &Cell::of(cfg), r);
            harness::run_experiment(cfg, data, seeds).unwrap()
        })
        .collect()
}

fn w_thr(outs: &[harness::ExperimentOutput]) -> Vec<f64> {
    outs.iter().map(|o| o.margin.w_thr).collect()
}

fn med(v: &[f64]) -> f64 {
    harness::median(v).unwrap()
}

fn fmt(v: &[f64]) -> String {
    let p: Vec<String> = v.iter().map(|x| format!("{x:.2}")).collect();
    format!("[{}]", p.join(", "))
}

fn ablation_trend() -> Verdict {
    let t0 = Instant::now();
    let base = Config {
        t_bin: 0.15,
        sigma: 0.3,
        ..Config::default()
    };
    let data = ExperimentData::synthetic(&base).unwrap();
    let run = |plasticity| {
        w_thr(&repeats(
            &Config {
                plasticity,
                ..base.clone()
            },
            &data,
        ))
    };
    let (none, sdsp, ip) = (run(Plasticity::None), run(Plasticity::SdspOnly), run(Plasticity::SdspPlusIp));
    let (a, b, c) = (med(&none), med(&sdsp), med(&ip));
    let positive = ip.iter().filter(|&&w| w > 0.0).count();
    let (fast, time) = within(t0.elapsed(), Duration::from_secs(15 * 60));
    verdict(
        a <= 0.0 && 0.0 < b && b <= c && positive >= 4 && fast,
        format!(
            "median W_thr none {a:.2} {}, sdsp_only {b:.2} {}, sdsp_plus_ip {c:.2} {}; {positive}/5 positive; {time}",
            fmt(&none),
            fmt(&sdsp),
            fmt(&ip)
        ),
    )
}

fn t_bin_trend() -> Verdict {
    let base = Config {
        lr_sdsp: 0.1,
        lr_thr: 0.3,
        ..Config::default()
    };
    let data = ExperimentData::synthetic(&base).unwrap();
    let mut medians = Vec::new();
    let mut detail = Vec::new();
    for t_bin in [0.007, 0.15, 0.6] {
        let w = w_thr(&repeats(&Config { t_bin, ..base.clone() }, &data));
        medians.push(med(&w));
        detail.push(format!("T_bin {} ms: median {:.2} {}", t_bin * 1e3, med(&w), fmt(&w)));
    }
    verdict(harness::non_decreasing(&medians), detail.join("; "))
}

fn binary(t_bin: f64) -> Config {
    Config {
        lr_sdsp: 2.0,
        lr_thr: 0.3,
        t_bin,
        ..Config::default()
    }
}

fn n_input_trend() -> Verdict {
    let base = binary(0.007);
    let data = ExperimentData::synthetic(&base).unwrap();
    let w10 = w_thr(&repeats(&Config { n_input: 10, ..base.clone() }, &data));
    let w100 = w_thr(&repeats(&Config { n_input: 100, ..base.clone() }, &data));
    let (a, b) = (med(&w10), med(&w100));
    verdict(
        b > a && b > 0.0,
        format!("median W_thr N_input 10: {a:.2} {}, N_input 100: {b:.2} {}", fmt(&w10), fmt(&w100)),
    )
}

fn f_poisson_trend() -> Verdict {
    let base = binary(0.007);
    let data = ExperimentData::synthetic(&base).unwrap();
    let ceiling = (base.t_bin / base.refractory_time + 1e-9).floor() as u32 + 1;
    let levels = [150.0, 750.0, 1200.0, 1500.0];
    let (mut no, mut ab, mut max_count) = (Vec::new(), Vec::new(), 0);
    for f_poisson in levels {
        let outs = repeats(&Config { f_poisson, ..base.clone() }, &data);
        no.push(med(&outs.iter().map(|o| o.margin.d_no_max).collect::<Vec<_>>()));
        ab.push(med(&outs.iter().map(|o| o.margin.d_ab_min).collect::<Vec<_>>()));
        let m = outs.iter().flat_map(|o| o.records.iter().map(|r| r.max_count())).max().unwrap_or(0);
        max_count = max_count.max(m);
    }
    let (slope, _, r2) = harness::linear_fit(&levels[..3], &no[..3]);
    let prev = ab[2] - ab[1];
    let last = ab[3] - ab[2];
    let linear = r2 >= 0.95 && slope > 0.0;
    let saturated = prev > 0.0 && last < 0.1 * prev;
    verdict(
        linear && saturated && max_count <= ceiling,
        format!(
            "D_no_max medians {} (R^2 {r2:.4}, slope {slope:.4}); D_ab_min medians {} (last step {last:.2} vs {prev:.2}); max bin count {max_count} <= {ceiling}",
            fmt(&no),
            fmt(&ab)
        ),
    )
}

/// Full-batch gradient descent on the ridge objective with step 1/L, where L
/// bounds the Hessian's largest eigenvalue by power iteration.
fn ridge_by_descent(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
    let p = x[0].len();
    // Parameters: p weights followed by the bias.
    let hess_mul = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; p + 1];
        for row in x {
            let r: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + v[p];
            for j in 0..p {
                out[j] += 2.0 * row[j] * r;
            }
            out[p] += 2.0 * r;
        }
        for j in 0..p {
            out[j] += 2.0 * lambda * v[j];
        }
        out
    };
    let mut v = vec![1.0; p + 1];
    let mut l = 0.0;
    for _ in 0..500 {
        let hv = hess_mul(&v);
        l = hv.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = hv.iter().map(|a| a / l).collect();
    }
    let step = 1.0 / (1.05 * l);
    let mut theta = vec![0.0; p + 1];
    for _ in 0..2_000_000 {
        let mut grad = vec![0.0; p + 1];
        for (row, t) in x.iter().zip(y) {
            let r: f64 = row.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>() + theta[p] - t;
            for j in 0..p {
                grad[j] += 2.0 * row[j] * r;
            }
            grad[p] += 2.0 * r;
        }
        for j in 0..p {
            grad[j] += 2.0 * lambda * theta[j];
        }
        if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-13 {
            break;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= step * g;
        }
    }
    theta
}

fn readout_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(15..40);
        let p = rng.gen_range(2..6);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0) + 0.5).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let lambda = rng.gen_range(0.01..2.0);
        let m = readout::fit_readout(&x, &y, lambda).unwrap();
        let oracle = ridge_by_descent(&x, &y, lambda);
        let mut fitted = m.weights.clone();
        fitted.push(m.bias);
        let diff = fitted.iter().zip(&oracle).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = oracle.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    verdict(worst <= 1e-6, format!("max relative deviation {worst:.3e} over 20 systems (tol 1e-6)"))
}

fn sorted_lines(text: &str) -> String {
    let mut lines: Vec<&str> = text.lines().collect();
    lines.sort_unstable();
    lines.join("\n")
}

fn sweep_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str, out: &str| {
        let out = dir.path().join(out);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_srnn"))
            .args(["--seed", "11", "--jobs", jobs, "--out-dir"])
            .arg(&out)
            .args([
                "--set",
                "t_bin=0.007",
                "--set",
                "sweep_lr_sdsp=[0.5, 2.0]",
                "--set",
                "sweep_n_input=[10, 100]",
                "--set",
                "repeats=2",
                "sweep",
            ])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read_to_string(out.join("sweep.csv")).unwrap()
    };
    let a = sorted_lines(&run("1", "a"));
    let b = sorted_lines(&run("2", "b"));
    let c = sorted_lines(&run("3", "c"));
    let rows = a.lines().count() - 1;
    verdict(
        a == b && b == c && rows == 8,
        format!("{rows} rows; jobs 1 vs 2 identical = {}, jobs 1 vs 3 identical = {}", a == b, a == c),
    )
}

fn topology_statistics() -> Verdict {
    let cfg = Config::default();
    let tc = cfg.topology_config(0);
    let (ne, ni, nin) = (tc.n_excitatory as f64, tc.n_inhibitory as f64, tc.n_input as f64);
    let classes = [
        (EdgeClass::InputToExcitatory, nin * ne, tc.p_in),
        (EdgeClass::ExcitatoryToExcitatory, ne * (ne - 1.0), tc.p_ee),
        (EdgeClass::ExcitatoryToInhibitory, ne * ni, tc.p_ei),
        (EdgeClass::InhibitoryToExcitatory, ni * ne, tc.p_ie),
    ];
    const RUNS: usize = 200;
    let mut counts = vec![Vec::with_capacity(RUNS); classes.len()];
    let mut forbidden = 0;
    for r in 0..RUNS {
        let seeds = RunSeeds::derive(cfg.seed, &Cell::of(&cfg), r);
        let t = build_network(&cfg.topology_config(seeds.topology)).unwrap();
        for (i, (class, _, _)) in classes.iter().enumerate() {
            counts[i].push(t.count(*class) as f64);
        }
        // Input and inhibitory sources may only target excitatory indices.
        forbidden += t
            .edges
            .iter()
            .filter(|e| {
                matches!(e.class, EdgeClass::InputToExcitatory | EdgeClass::InhibitoryToExcitatory)
                    && e.dst as usize >= tc.n_excitatory
            })
            .count();
        if t.check_structure().is_err() || t.config.p_ii != 0.0 {
            forbidden += 1;
        }
    }
    let n = RUNS as f64;
    let mut pass = forbidden == 0;
    let mut detail = Vec::new();
    for ((class, pairs, p), c) in classes.iter().zip(&counts) {
        let mean = c.iter().sum::<f64>() / n;
        let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let (mu, sigma2) = (pairs * p, pairs * p * (1.0 - p));
        let mean_z = (mean - mu) / (sigma2 / n).sqrt();
        let var_z = (var - sigma2) / (sigma2 * (2.0 / (n - 1.0)).sqrt());
        pass &= mean_z.abs() <= 4.0 && var_z.abs() <= 4.0;
        detail.push(format!("{} mean z {mean_z:+.2} var z {var_z:+.2}", class.tag()));
    }
    detail.push(format!("{forbidden} input->I or I->I edges"));
    verdict(pass, detail.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("analytic LIF integration", lif_closed_form),
        ("calcium trace decay and superposition", calcium_trace),
        ("threshold invariants under fuzz", threshold_fuzz),
        ("weight invariants under fuzz", weight_fuzz),
        ("learning-threshold interference regression", interference),
        ("plasticity ablation trend", ablation_trend),
        ("W_thr non-decreasing in T_bin", t_bin_trend),
        ("binary regime improves with N_input", n_input_trend),
        ("F_Poisson linear growth and refractory saturation", f_poisson_trend),
        ("ridge readout matches gradient descent", readout_oracle),
        ("sweep output independent of --jobs", sweep_determinism),
        ("topology edge statistics", topology_statistics),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} {n:>2} {name}: {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
