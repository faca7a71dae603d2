use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use srnn::config::Config;
use srnn::harness::{self, Check, ExperimentData, RunSeeds};
use srnn::ingest::{self, EcgSeries};
use srnn::readout::ReadoutModel;
use srnn::topology::{self, Topology};
use srnn::{checkpoint, Error, Result};

/// Spiking recurrent network experiments on ECG data.
///
/// Every stage reads and writes plain-text files in the output directory, so
/// stages can be rerun and inspected one at a time.
#[derive(Parser)]
#[command(name = "srnn", version)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Master seed; overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for all outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for `sweep`; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic training and test records and the annotations.
    GenData,
    /// Build the network topology and print its degree statistics.
    BuildNet,
    /// Phase 1: unsupervised plasticity on the training record.
    Train {
        #[arg(long)]
        topology: Option<PathBuf>,
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Phase 2: fit the linear readout on the frozen network.
    FitReadout {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Phase 3: deviation trace and margin on the annotated test record.
    Test {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        readout: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Run the configured grid of cells and repeats.
    Sweep,
    /// Evaluate trend predicates over sweep CSVs; exits nonzero on failure.
    Report {
        /// Sweep CSVs, each checked on its own.
        files: Vec<PathBuf>,
        /// Three sweep CSVs of the same grid: none, sdsp_only, sdsp_plus_ip.
        #[arg(long, num_args = 3, value_names = ["NONE", "SDSP_ONLY", "SDSP_PLUS_IP"])]
        ablation: Option<Vec<PathBuf>>,
    },
}

/// Sample rate assumed for CSV records without one.
const SAMPLE_RATE: f64 = 128.0;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn load_ecg(path: &Path) -> Result<EcgSeries> {
    let id = path.file_stem().map_or("record".into(), |s| s.to_string_lossy().into_owned());
    ingest::parse_ecg_csv(&read(path)?, SAMPLE_RATE, &id)
}

fn config(cli: &Cli) -> Result<Config> {
    let base = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    base.with_overrides(&overrides)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = config(cli)?;
    let dir = &cli.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let path = |given: &Option<PathBuf>, default: &str| given.clone().unwrap_or_else(|| dir.join(default));
    let seeds = RunSeeds::for_config(&cfg, 0);
    let seed_list = vec![
        ("master".to_string(), cfg.seed),
        ("topology".to_string(), seeds.topology),
        ("encoder".to_string(), seeds.encoder),
    ];

    match &cli.command {
        Command::GenData => {
            let data = ExperimentData::synthetic(&cfg)?;
            write(&dir.join("train.csv"), &data.train.to_csv())?;
            write(&dir.join("test.csv"), &data.test.to_csv())?;
            write(&dir.join("test.ann"), &data.annotations.to_text())?;
            write(&dir.join("manifest.txt"), &harness::manifest("gen-data", &cfg, &seed_list))?;
        }
        Command::BuildNet => {
            let t = topology::build_network(&cfg.topology_config(seeds.topology))?;
            let report = topology::degree_report(&t);
            for c in &report.classes {
                println!(
                    "{:5} edges {:6}  out-degree {:.2} [{}, {}]  in-degree {:.2} [{}, {}]",
                    c.class.tag(),
                    c.edges,
                    c.out_degree.mean,
                    c.out_degree.min,
                    c.out_degree.max,
                    c.in_degree.mean,
                    c.in_degree.min,
                    c.in_degree.max
                );
            }
            println!("isolated excitatory neurons: {}", report.isolated_excitatory.len());
            write(&dir.join("topology.txt"), &t.to_edge_list())?;
        }
        Command::Train { topology, train } => {
            let t = Topology::from_edge_list(&read(&path(topology, "topology.txt"))?)?;
            let train = load_ecg(&path(train, "train.csv"))?;
            let sim = cfg.sim_config(seeds.encoder);
            let mut net = srnn::engine::Network::new(std::sync::Arc::new(t), &sim)?;
            if cfg.plasticity != srnn::config::Plasticity::None {
                net.run_phase1(&train.values, &sim)?;
            }
            let w: Vec<f64> = net.plastic_weights().collect();
            let thr: Vec<f64> = net.excitatory().iter().map(|n| n.v_thr).collect();
            println!(
                "plasticity {}: mean E->E weight {:.4}, mean threshold {:.4} V",
                cfg.plasticity.as_str(),
                w.iter().sum::<f64>() / w.len().max(1) as f64,
                thr.iter().sum::<f64>() / thr.len().max(1) as f64
            );
            write(&dir.join("trained.ckpt"), &checkpoint::save(&net, &cfg))?;
            write(&dir.join("manifest.txt"), &harness::manifest("train", &cfg, &seed_list))?;
        }
        Command::FitReadout { checkpoint: ckpt, train } => {
            let (_, mut net) = checkpoint::load(&read(&path(ckpt, "trained.ckpt"))?)?;
            let train = load_ecg(&path(train, "train.csv"))?;
            let model = harness::fit_phase2(&mut net, &train.values, &cfg)?;
            println!("readout lambda {:.6e}, training residual {:.6e}", model.lambda, model.residual);
            write(&dir.join("readout.txt"), &model.to_text())?;
            write(&dir.join("fitted.ckpt"), &checkpoint::save(&net, &cfg))?;
        }
        Command::Test {
            checkpoint: ckpt,
            readout,
            test,
            annotations,
        } => {
            let (_, mut net) = checkpoint::load(&read(&path(ckpt, "fitted.ckpt"))?)?;
            let model = ReadoutModel::from_text(&read(&path(readout, "readout.txt"))?)?;
            let test = load_ecg(&path(test, "test.csv"))?;
            let ann = ingest::parse_annotations(&read(&path(annotations, "test.ann"))?, test.len())?;
            let records = net.run_phase3(&test.values, &model, &cfg.sim_config(seeds.encoder))?;
            let series = harness::annotate(&records, &ann, cfg.label_guard);
            harness::emit_dk_trace(&series, &dir.join("dk_trace.csv"))?;
            write(&dir.join("bins.csv"), &harness::bins_csv(&records))?;
            let margin = srnn::anomaly::margin(&series)?;
            print!("{}", harness::margin_text(&margin));
            write(&dir.join("margin.txt"), &harness::margin_text(&margin))?;
        }
        Command::Sweep => {
            let data = ExperimentData::synthetic(&cfg)?;
            let jobs = cli
                .jobs
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let rows = harness::run_sweep(&cfg, &data, jobs)?;
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            println!("{} rows, {failed} failed", rows.len());
            harness::write_sweep(&rows, &cfg, dir)?;
        }
        Command::Report { files, ablation } => {
            let mut checks: Vec<Check> = Vec::new();
            for f in files {
                println!("# {}", f.display());
                let c = harness::sweep_checks(&harness::load_sweep(f)?);
                for check in &c {
                    println!("{check}");
                }
                checks.extend(c);
            }
            if let Some(paths) = ablation {
                let sets = paths.iter().map(|p| harness::load_sweep(p)).collect::<Result<Vec<_>>>()?;
                println!("# ablation");
                let c = harness::ablation_checks(&sets[0], &sets[1], &sets[2]);
                for check in &c {
                    println!("{check}");
                }
                checks.extend(c);
            }
            return Ok(checks.iter().all(|c| c.pass));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
