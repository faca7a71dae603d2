//! Three-phase experiment, parameter sweeps and their text outputs.
//!
//! Seeds: the topology of repeat `r` depends only on `(master, r)`, so every
//! cell and every plasticity ablation of one repeat runs on the same network.
//! The encoder seed additionally hashes the cell coordinates. Both are pure
//! functions, so any sweep row can be recomputed in isolation.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::anomaly::{self, AnnotatedSeries, Label, MarginResult};
use crate::config::{Config, Plasticity};
use crate::engine::{BinRecord, Network};
use crate::error::{Error, Result};
use crate::ingest::{self, AnnotationSet, EcgSeries};
use crate::readout::{self, ReadoutModel};
use crate::topology::build_network;

const TAG_TOPOLOGY: u64 = 0x746f_706f;
const TAG_ENCODER: u64 = 0x656e_636f;
const TAG_DATA: u64 = 0x6461_7461;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Order-sensitive hash of a seed and a list of coordinates.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lr_sdsp: f64,
    pub lr_thr: f64,
    pub t_bin: f64,
    pub n_input: usize,
    pub f_poisson: f64,
}

impl Cell {
    pub fn of(cfg: &Config) -> Self {
        Self {
            lr_sdsp: cfg.lr_sdsp,
            lr_thr: cfg.lr_thr,
            t_bin: cfg.t_bin,
            n_input: cfg.n_input,
            f_poisson: cfg.f_poisson,
        }
    }

    fn coordinates(&self) -> [u64; 5] {
        [
            self.lr_sdsp.to_bits(),
            self.lr_thr.to_bits(),
            self.t_bin.to_bits(),
            self.n_input as u64,
            self.f_poisson.to_bits(),
        ]
    }

    /// `cfg` with this cell's values substituted.
    pub fn apply(&self, cfg: &Config) -> Config {
        Config {
            lr_sdsp: self.lr_sdsp,
            lr_thr: self.lr_thr,
            t_bin: self.t_bin,
            n_input: self.n_input,
            f_poisson: self.f_poisson,
            ..cfg.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    /// Identifies the run in outputs.
    pub cell: u64,
    pub topology: u64,
    pub encoder: u64,
}

impl RunSeeds {
    pub fn derive(master: u64, cell: &Cell, repeat: usize) -> Self {
        let mut parts = cell.coordinates().to_vec();
        parts.push(repeat as u64);
        let cell_seed = derive_seed(master, &parts);
        Self {
            cell: cell_seed,
            topology: derive_seed(master, &[TAG_TOPOLOGY, repeat as u64]),
            encoder: derive_seed(cell_seed, &[TAG_ENCODER]),
        }
    }

    pub fn for_config(cfg: &Config, repeat: usize) -> Self {
        Self::derive(cfg.seed, &Cell::of(cfg), repeat)
    }
}

/// Training waveform plus annotated test waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub train: EcgSeries,
    pub test: EcgSeries,
    pub annotations: AnnotationSet,
}

impl ExperimentData {
    /// Normal-only training beats and a test record with anomalies at
    /// `cfg.test_anomalies`.
    pub fn synthetic(cfg: &Config) -> Result<Self> {
        let seed = derive_seed(cfg.seed, &[TAG_DATA]);
        let (train, _) = ingest::make_synthetic_ecg(cfg.train_beats, &[], seed)?;
        let (test, annotations) = ingest::make_synthetic_ecg(cfg.test_beats, &cfg.test_anomalies, seed ^ 1)?;
        Ok(Self { train, test, annotations })
    }
}

/// Fresh network for one run.
pub fn build_run_network(cfg: &Config, seeds: RunSeeds) -> Result<Network> {
    let topology = build_network(&cfg.topology_config(seeds.topology))?;
    Network::new(Arc::new(topology), &cfg.sim_config(seeds.encoder))
}

/// Phase 2: runs the training waveform through the frozen network and fits
/// the readout with the relative ridge penalty of `cfg`.
pub fn fit_phase2(network: &mut Network, train: &[f64], cfg: &Config) -> Result<ReadoutModel> {
    let sim = cfg.sim_config(0);
    let (features, targets) = network.collect_readout_data(train, &sim)?;
    let lambda = cfg.ridge_lambda * readout::feature_scale(&features);
    readout::fit_readout(&features, &targets, lambda)
}

/// Deviation values from `k = 1` on, with their labels.
pub fn annotate(records: &[BinRecord], annotations: &AnnotationSet, guard: usize) -> AnnotatedSeries {
    let labels = annotations.sample_labels(records.len(), guard);
    let d = records.iter().skip(1).map(|r| r.d.unwrap_or(0.0)).collect();
    AnnotatedSeries::new(d, labels.into_iter().skip(1).collect())
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub seeds: RunSeeds,
    pub network: Network,
    pub readout: ReadoutModel,
    pub records: Vec<BinRecord>,
    /// `D(k)` for `k >= 1`.
    pub series: AnnotatedSeries,
    pub margin: MarginResult,
}

/// Phase 1 (per `cfg.plasticity`), phase 2 and phase 3 on one network.
pub fn run_experiment(cfg: &Config, data: &ExperimentData, seeds: RunSeeds) -> Result<ExperimentOutput> {
    let mut network = build_run_network(cfg, seeds)?;
    if cfg.plasticity != Plasticity::None {
        network.run_phase1(&data.train.values, &cfg.sim_config(seeds.encoder))?;
    }
    let readout = fit_phase2(&mut network, &data.train.values, cfg)?;
    let records = network.run_phase3(&data.test.values, &readout, &cfg.sim_config(seeds.encoder))?;
    let series = annotate(&records, &data.annotations, cfg.label_guard);
    let margin = anomaly::margin(&series)?;
    Ok(ExperimentOutput {
        seeds,
        network,
        readout,
        records,
        series,
        margin,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn margin_text(m: &MarginResult) -> String {
    let f_thr = m.f_thr.map_or("none".to_string(), |f| f.to_string());
    format!(
        "d_no_max = {}\nd_ab_min = {}\nw_thr = {}\nf_thr = {f_thr}\n",
        m.d_no_max, m.d_ab_min, m.w_thr
    )
}

/// Writes the readout, the deviation trace, per-bin rates and the margin.
pub fn write_experiment(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("readout.txt"), &out.readout.to_text())?;
    emit_dk_trace(&out.series, &dir.join("dk_trace.csv"))?;
    write_file(&dir.join("bins.csv"), &bins_csv(&out.records))?;
    write_file(&dir.join("margin.txt"), &margin_text(&out.margin))
}

/// `k,e_input_mv,f_in_hz,f_out_hz,d_hz,e_spikes`, one line per test bin.
pub fn bins_csv(records: &[BinRecord]) -> String {
    let mut out = String::from("k,e_input_mv,f_in_hz,f_out_hz,d_hz,e_spikes\n");
    for r in records {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            r.e_input,
            r.f_in,
            opt(r.f_out),
            opt(r.d),
            r.excitatory_counts.iter().sum::<u32>()
        );
    }
    out
}

/// CSV `k,d_hz,label`; `k` starts at 1 and unlabeled points have an empty
/// label.
pub fn dk_trace_csv(series: &AnnotatedSeries) -> String {
    let mut out = String::from("k,d_hz,label\n");
    for (i, (d, l)) in series.d.iter().zip(&series.labels).enumerate() {
        let _ = writeln!(out, "{},{d},{}", i + 1, l.map_or("", Label::as_str));
    }
    out
}

pub fn emit_dk_trace(series: &AnnotatedSeries, path: &Path) -> Result<()> {
    write_file(path, &dk_trace_csv(series))
}

pub fn parse_dk_trace(text: &str) -> Result<AnnotatedSeries> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "k,d_hz,label")) => {}
        _ => return Err(Error::parse(1, "expected header k,d_hz,label")),
    }
    let (mut d, mut labels) = (Vec::new(), Vec::new());
    for (i, line) in lines {
        let n = i + 1;
        let f: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
        if f.len() != 3 {
            return Err(Error::parse(n, "expected k,d_hz,label"));
        }
        if f[0].parse::<usize>().ok() != Some(d.len() + 1) {
            return Err(Error::parse(n, format!("expected k = {}", d.len() + 1)));
        }
        d.push(f[1].parse().map_err(|_| Error::parse(n, "bad d_hz"))?);
        labels.push(match f[2] {
            "" => None,
            l => Some(l.parse().map_err(|m: String| Error::parse(n, m))?),
        });
    }
    Ok(AnnotatedSeries::new(d, labels))
}

/// Grid of cells times repeats under one ablation setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub lr_sdsp: Vec<f64>,
    pub lr_thr: Vec<f64>,
    pub t_bin: Vec<f64>,
    pub n_input: Vec<usize>,
    pub f_poisson: Vec<f64>,
    pub repeats: usize,
    pub plasticity: Plasticity,
    pub threshold_sync: bool,
}

impl SweepSpec {
    /// Sweep lists of `cfg`; an empty list stands for the scalar value.
    pub fn from_config(cfg: &Config) -> Self {
        fn or<T: Clone>(list: &[T], scalar: T) -> Vec<T> {
            if list.is_empty() {
                vec![scalar]
            } else {
                list.to_vec()
            }
        }
        Self {
            lr_sdsp: or(&cfg.sweep_lr_sdsp, cfg.lr_sdsp),
            lr_thr: or(&cfg.sweep_lr_thr, cfg.lr_thr),
            t_bin: or(&cfg.sweep_t_bin, cfg.t_bin),
            n_input: or(&cfg.sweep_n_input, cfg.n_input),
            f_poisson: or(&cfg.sweep_f_poisson, cfg.f_poisson),
            repeats: cfg.repeats,
            plasticity: cfg.plasticity,
            threshold_sync: cfg.threshold_sync,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr_sdsp.is_empty()
            || self.lr_thr.is_empty()
            || self.t_bin.is_empty()
            || self.n_input.is_empty()
            || self.f_poisson.is_empty()
        {
            return Err(Error::Config("every sweep list must be nonempty".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }

    /// Cells in row-major order with `lr_sdsp` slowest.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &lr_sdsp in &self.lr_sdsp {
            for &lr_thr in &self.lr_thr {
                for &t_bin in &self.t_bin {
                    for &n_input in &self.n_input {
                        for &f_poisson in &self.f_poisson {
                            cells.push(Cell {
                                lr_sdsp,
                                lr_thr,
                                t_bin,
                                n_input,
                                f_poisson,
                            });
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: Cell,
    pub repeat: usize,
    pub seed: u64,
    /// Margin, or the error that stopped this cell.
    pub outcome: std::result::Result<MarginResult, String>,
}

/// Runs every cell and repeat of `cfg`'s sweep on a pool of `jobs` workers.
/// A failing cell yields an error row; the sweep continues.
pub fn run_sweep(cfg: &Config, data: &ExperimentData, jobs: usize) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;

    let spec = SweepSpec::from_config(cfg);
    spec.validate()?;
    let tasks: Vec<(Cell, usize)> = spec
        .cells()
        .into_iter()
        .flat_map(|c| (0..spec.repeats).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        tasks
            .par_iter()
            .map(|&(cell, repeat)| run_cell(cfg, data, cell, repeat))
            .collect()
    }))
}

/// One sweep row, computed exactly as inside [`run_sweep`].
pub fn run_cell(cfg: &Config, data: &ExperimentData, cell: Cell, repeat: usize) -> SweepRow {
    let seeds = RunSeeds::derive(cfg.seed, &cell, repeat);
    let outcome = cell
        .apply(cfg)
        .validate()
        .and_then(|()| run_experiment(&cell.apply(cfg), data, seeds))
        .map(|out| out.margin)
        .map_err(|e| e.to_string());
    SweepRow {
        cell,
        repeat,
        seed: seeds.cell,
        outcome,
    }
}

pub const SWEEP_HEADER: &str = "lr_sdsp,lr_thr,t_bin,n_input,f_poisson,seed,w_thr,d_no_max,d_ab_min,status";

/// Long-form CSV; failed cells carry empty numbers and `error: ...` status.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let c = &r.cell;
        let _ = write!(
            out,
            "{},{},{},{},{},{},",
            c.lr_sdsp, c.lr_thr, c.t_bin, c.n_input, c.f_poisson, r.seed
        );
        match &r.outcome {
            Ok(m) => {
                let _ = writeln!(out, "{},{},{},ok", m.w_thr, m.d_no_max, m.d_ab_min);
            }
            Err(e) => {
                let msg: String = e.chars().map(|ch| if ch == ',' || ch == '\n' { ';' } else { ch }).collect();
                let _ = writeln!(out, ",,,error: {msg}");
            }
        }
    }
    out
}

/// One parsed line of a sweep CSV; numbers are absent on error rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub cell: Cell,
    pub seed: u64,
    pub margin: Option<(f64, f64, f64)>,
    pub status: String,
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == SWEEP_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header {SWEEP_HEADER}"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim_end_matches('\r').splitn(10, ',').collect();
        if f.len() != 10 {
            return Err(Error::parse(n, "expected 10 fields"));
        }
        let num = |j: usize| f[j].parse::<f64>().map_err(|_| Error::parse(n, format!("bad field {}", j + 1)));
        let cell = Cell {
            lr_sdsp: num(0)?,
            lr_thr: num(1)?,
            t_bin: num(2)?,
            n_input: f[3].parse().map_err(|_| Error::parse(n, "bad n_input"))?,
            f_poisson: num(4)?,
        };
        let seed = f[5].parse().map_err(|_| Error::parse(n, "bad seed"))?;
        let margin = if f[9] == "ok" { Some((num(6)?, num(7)?, num(8)?)) } else { None };
        out.push(SweepRecord {
            cell,
            seed,
            margin,
            status: f[9].to_string(),
        });
    }
    Ok(out)
}

/// Per-cell means over successful repeats, in first-appearance order.
pub fn cell_means_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("lr_sdsp,lr_thr,t_bin,n_input,f_poisson,n_ok,mean_w_thr,mean_d_no_max,mean_d_ab_min\n");
    for (cell, group) in group_by_cell(records) {
        let ok: Vec<(f64, f64, f64)> = group.iter().filter_map(|r| r.margin).collect();
        let mean = |f: fn(&(f64, f64, f64)) -> f64| {
            if ok.is_empty() {
                String::new()
            } else {
                (ok.iter().map(f).sum::<f64>() / ok.len() as f64).to_string()
            }
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            cell.lr_sdsp,
            cell.lr_thr,
            cell.t_bin,
            cell.n_input,
            cell.f_poisson,
            ok.len(),
            mean(|m| m.0),
            mean(|m| m.1),
            mean(|m| m.2)
        );
    }
    out
}

pub fn group_by_cell(records: &[SweepRecord]) -> Vec<(Cell, Vec<&SweepRecord>)> {
    let mut groups: Vec<(Cell, Vec<&SweepRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(c, _)| *c == r.cell) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.cell, vec![r])),
        }
    }
    groups
}

/// Provenance record of one command invocation.
pub fn manifest(command: &str, cfg: &Config, seeds: &[(String, u64)]) -> String {
    let mut out = format!(
        "# srnn run manifest\ncommand = {command:?}\nversion = {:?}\n",
        env!("CARGO_PKG_VERSION")
    );
    for (name, seed) in seeds {
        let _ = writeln!(out, "seed.{name} = {seed}");
    }
    let _ = write!(out, "# configuration\n{}", cfg.to_toml());
    out
}

pub fn write_sweep(rows: &[SweepRow], cfg: &Config, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = sweep_csv(rows);
    write_file(&dir.join("sweep.csv"), &csv)?;
    write_file(&dir.join("sweep_cells.csv"), &cell_means_csv(&parse_sweep_csv(&csv)?))?;
    let seeds: Vec<(String, u64)> = vec![("master".into(), cfg.seed)];
    write_file(&dir.join("manifest.txt"), &manifest("sweep", cfg, &seeds))
}

pub fn load_sweep(path: &Path) -> Result<Vec<SweepRecord>> {
    parse_sweep_csv(&read_file(path)?)
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

pub fn non_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] <= w[1])
}

/// Least-squares line `y = slope x + intercept` and its R^2.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Outcome of one trend predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn fmt_values(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Median of one margin component per cell along the axis picked by `key`,
/// for records whose other coordinates equal those of the first record.
pub fn medians_along(
    records: &[SweepRecord],
    key: fn(&Cell) -> f64,
    value: fn(&(f64, f64, f64)) -> f64,
) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = group_by_cell(records)
        .into_iter()
        .filter_map(|(cell, group)| {
            let vals: Vec<f64> = group.iter().filter_map(|r| r.margin.as_ref().map(value)).collect();
            median(&vals).map(|m| (key(&cell), m))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Trend predicates over one sweep: for every swept axis, median `W_thr` is
/// non-decreasing along it; with four or more `F_Poisson` levels, `D_no_max`
/// grows linearly over all but the last level and `D_ab_min` saturates at
/// the last step.
pub fn sweep_checks(records: &[SweepRecord]) -> Vec<Check> {
    let axes: [(&str, fn(&Cell) -> f64); 5] = [
        ("lr_sdsp", |c| c.lr_sdsp),
        ("lr_thr", |c| c.lr_thr),
        ("t_bin", |c| c.t_bin),
        ("n_input", |c| c.n_input as f64),
        ("f_poisson", |c| c.f_poisson),
    ];
    let mut checks = Vec::new();
    let failed = records.iter().filter(|r| r.margin.is_none()).count();
    checks.push(Check {
        name: "all cells ran".into(),
        pass: failed == 0,
        detail: format!("{failed} error rows of {}", records.len()),
    });
    for (name, key) in axes {
        let mut levels: Vec<f64> = records.iter().map(|r| key(&r.cell)).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        if levels.len() < 2 {
            continue;
        }
        // Only one-dimensional sweeps have a well-defined trend.
        let others_fixed = axes.iter().filter(|(n, _)| *n != name).all(|(_, k)| {
            records.iter().all(|r| k(&r.cell) == k(&records[0].cell))
        });
        if !others_fixed {
            continue;
        }
        let w = medians_along(records, key, |m| m.0);
        let ys: Vec<f64> = w.iter().map(|p| p.1).collect();
        checks.push(Check {
            name: format!("median w_thr non-decreasing in {name}"),
            pass: non_decreasing(&ys),
            detail: fmt_values(&ys),
        });
        if name == "f_poisson" && w.len() >= 4 {
            checks.extend(saturation_checks(records));
        }
    }
    checks
}

/// Linear growth of `D_no_max` below the top `F_Poisson` level and
/// saturation of `D_ab_min` on the last step.
pub fn saturation_checks(records: &[SweepRecord]) -> Vec<Check> {
    let no = medians_along(records, |c| c.f_poisson, |m| m.1);
    let ab = medians_along(records, |c| c.f_poisson, |m| m.2);
    let n = no.len();
    if n < 4 {
        return Vec::new();
    }
    let xs: Vec<f64> = no[..n - 1].iter().map(|p| p.0).collect();
    let ys: Vec<f64> = no[..n - 1].iter().map(|p| p.1).collect();
    let (slope, _, r2) = linear_fit(&xs, &ys);
    let prev = ab[n - 2].1 - ab[n - 3].1;
    let last = ab[n - 1].1 - ab[n - 2].1;
    vec![
        Check {
            name: "d_no_max linear in f_poisson".into(),
            pass: r2 >= 0.95 && slope > 0.0,
            detail: format!("R^2 = {r2:.4}, slope = {slope:.4}, medians {}", fmt_values(&ys)),
        },
        Check {
            name: "d_ab_min saturates at the top f_poisson".into(),
            pass: prev > 0.0 && last < 0.1 * prev,
            detail: format!("last increase {last:.3} vs previous {prev:.3}"),
        },
    ]
}

/// Ablation ordering over three sweeps of the same grid:
/// median(none) <= 0 < median(sdsp_only) <= median(sdsp_plus_ip).
pub fn ablation_checks(none: &[SweepRecord], sdsp: &[SweepRecord], ip: &[SweepRecord]) -> Vec<Check> {
    let w = |rs: &[SweepRecord]| median(&rs.iter().filter_map(|r| r.margin.map(|m| m.0)).collect::<Vec<_>>());
    let (a, b, c) = (w(none), w(sdsp), w(ip));
    let positive = ip.iter().filter(|r| r.margin.is_some_and(|m| m.0 > 0.0)).count();
    let detail = format!("medians none {a:?}, sdsp_only {b:?}, sdsp_plus_ip {c:?}");
    let ordered = matches!((a, b, c), (Some(a), Some(b), Some(c)) if a <= 0.0 && 0.0 < b && b <= c);
    vec![
        Check {
            name: "ablation ordering".into(),
            pass: ordered,
            detail,
        },
        Check {
            name: "sdsp_plus_ip margin positive for 4 of 5 seeds".into(),
            pass: positive * 5 >= ip.len() * 4 && !ip.is_empty(),
            detail: format!("{positive} of {} positive", ip.len()),
        },
    ]
}

/// Result of driving a small all-to-all excitatory pool while the threshold
/// controller pushes every firing threshold to its floor.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceOutcome {
    pub threshold_sync: bool,
    /// Final weight of every plastic edge whose source fired.
    pub driven_weights: Vec<f64>,
    /// Spike arrivals on plastic edges until all driven weights were zero,
    /// or until the budget ran out.
    pub arrivals: u64,
    pub all_zero: bool,
}

/// Configuration of the interference experiment: ten excitatory neurons, all
/// inputs and all E->E pairs connected, no inhibition, a controller target
/// far above any reachable activity so that every fire lowers the threshold.
pub fn interference_config(threshold_sync: bool) -> Config {
    Config {
        n_input: 20,
        n_excitatory: 10,
        n_inhibitory: 0,
        p_in: 1.0,
        p_ee: 1.0,
        p_ei: 0.0,
        p_ie: 0.0,
        lr_sdsp: 0.1,
        lr_thr: 0.05,
        c_ip: 1000.0,
        initial_threshold: 0.3,
        threshold_sync,
        plasticity: Plasticity::SdspPlusIp,
        f_poisson: 150.0,
        t_bin: 0.01,
        ..Config::default()
    }
}

/// Drives the interference pool with a constant 0.5 mV sample until every
/// driven plastic weight is zero or `max_arrivals` spikes have arrived on
/// plastic edges.
pub fn run_interference(threshold_sync: bool, seed: u64, max_arrivals: u64) -> Result<InterferenceOutcome> {
    use crate::engine::StepContext;
    use crate::topology::EdgeClass;

    let cfg = interference_config(threshold_sync);
    let seeds = RunSeeds::derive(seed, &Cell::of(&cfg), 0);
    let mut net = build_run_network(&cfg, seeds)?;
    let sim = cfg.sim_config(seeds.encoder);
    let ctx = StepContext::new(&sim, sim.learning());
    let range = net.topology().class_range(EdgeClass::ExcitatoryToExcitatory);
    let sources: Vec<usize> = net.topology().edges[range.clone()].iter().map(|e| e.src as usize).collect();
    let mut fired = vec![false; cfg.n_excitatory];
    let mut arrivals = 0u64;
    let mut k = 0;
    let driven = |net: &Network, fired: &[bool]| -> Vec<f64> {
        net.weights[range.clone()]
            .iter()
            .zip(&sources)
            .filter(|(_, &s)| fired[s])
            .map(|(w, _)| w.weight)
            .collect()
    };
    loop {
        let rec = net.run_bin(k, 0.5, &ctx)?;
        k += 1;
        for (i, &c) in rec.excitatory_counts.iter().enumerate() {
            fired[i] |= c > 0;
            arrivals += u64::from(c) * (cfg.n_excitatory as u64 - 1);
        }
        let w = driven(&net, &fired);
        let all_zero = !w.is_empty() && w.iter().all(|&x| x == 0.0);
        if all_zero || arrivals >= max_arrivals {
            return Ok(InterferenceOutcome {
                threshold_sync,
                driven_weights: w,
                arrivals,
                all_zero,
            });
        }
    }
}
