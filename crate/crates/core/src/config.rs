//! Run configuration: one flat `key = value` file covering the simulation,
//! the topology, the data, the readout and the sweep grid.
//!
//! Unknown keys are rejected. Every key can be overridden from the command
//! line with `key=value`, where the value uses the same syntax as the file
//! (bare words are accepted for enumerations).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoding::EncoderConfig;
use crate::engine::{DMetricInput, SimConfig};
use crate::error::{Error, Result};
use crate::neuron::{IpConfig, NeuronParams};
use crate::synapse::SynapseParams;
use crate::topology::TopologyConfig;

/// Which plasticity runs in phase 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Plasticity {
    None,
    SdspOnly,
    #[default]
    SdspPlusIp,
}

impl Plasticity {
    pub const ALL: [Plasticity; 3] = [Plasticity::None, Plasticity::SdspOnly, Plasticity::SdspPlusIp];

    pub fn as_str(self) -> &'static str {
        match self {
            Plasticity::None => "none",
            Plasticity::SdspOnly => "sdsp_only",
            Plasticity::SdspPlusIp => "sdsp_plus_ip",
        }
    }
}

impl std::str::FromStr for Plasticity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Plasticity::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown plasticity {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Master seed; every topology, encoder and data seed derives from it.
    pub seed: u64,

    pub dt: f64,
    pub resistance: f64,
    pub capacitance: f64,
    pub reset_potential: f64,
    pub refractory_time: f64,
    pub calcium_tau: f64,

    pub tau_syn: f64,
    pub alpha: f64,
    pub w_max: f64,
    pub lr_sdsp: f64,

    pub lr_thr: f64,
    /// Learning-threshold step; half of `lr_thr` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_lthr: Option<f64>,
    pub c_ip: f64,
    pub sigma: f64,
    pub v_thr_min: f64,
    pub v_thr_max: f64,
    pub initial_threshold: f64,
    pub threshold_sync: bool,
    pub ip_post_spike_calcium: bool,
    pub plasticity: Plasticity,
    pub training_passes: usize,
    pub d_metric_input: DMetricInput,

    pub f_poisson: f64,
    pub t_bin: f64,
    pub n_input: usize,

    pub n_excitatory: usize,
    pub n_inhibitory: usize,
    pub n_output: usize,
    pub p_in: f64,
    pub p_ee: f64,
    pub p_ei: f64,
    pub p_ie: f64,
    pub p_ii: f64,
    pub allow_self_loops: bool,
    pub initial_plastic_weight: f64,

    /// Ridge penalty relative to the mean centred feature energy.
    pub ridge_lambda: f64,
    /// Normal samples this close to an abnormal range are left unlabeled.
    pub label_guard: usize,

    pub train_beats: usize,
    pub test_beats: usize,
    /// Beat indices of the test waveform that carry an anomaly.
    pub test_anomalies: Vec<usize>,

    pub sweep_lr_sdsp: Vec<f64>,
    pub sweep_lr_thr: Vec<f64>,
    pub sweep_t_bin: Vec<f64>,
    pub sweep_n_input: Vec<usize>,
    pub sweep_f_poisson: Vec<f64>,
    pub repeats: usize,
}

impl Default for Config {
    fn default() -> Self {
        let n = NeuronParams::excitatory();
        let s = SynapseParams::default();
        let ip = IpConfig::default();
        let e = EncoderConfig::default();
        let t = TopologyConfig::default();
        let sim = SimConfig::default();
        Self {
            seed: 0,
            dt: sim.dt,
            resistance: n.resistance,
            capacitance: n.capacitance,
            reset_potential: n.reset_potential,
            refractory_time: n.refractory_time,
            calcium_tau: n.calcium_tau,
            tau_syn: s.tau_syn,
            alpha: s.alpha,
            w_max: s.w_max,
            lr_sdsp: 2.0,
            lr_thr: ip.threshold_step,
            lr_lthr: None,
            c_ip: DEFAULT_TARGET_ACTIVITY,
            sigma: ip.healthy_band,
            v_thr_min: ip.v_thr_min,
            v_thr_max: ip.v_thr_max,
            initial_threshold: sim.initial_threshold,
            threshold_sync: ip.sync_learning_thresholds,
            ip_post_spike_calcium: ip.post_spike_calcium,
            plasticity: Plasticity::SdspPlusIp,
            training_passes: sim.training_passes,
            d_metric_input: sim.d_metric_input,
            f_poisson: e.f_poisson_max,
            t_bin: e.t_bin,
            n_input: e.n_input,
            n_excitatory: t.n_excitatory,
            n_inhibitory: t.n_inhibitory,
            n_output: t.n_output,
            p_in: t.p_in,
            p_ee: t.p_ee,
            p_ei: t.p_ei,
            p_ie: t.p_ie,
            p_ii: t.p_ii,
            allow_self_loops: t.allow_self_loops,
            initial_plastic_weight: t.initial_plastic_weight,
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            label_guard: 2,
            train_beats: 6,
            test_beats: 10,
            test_anomalies: vec![3, 7],
            sweep_lr_sdsp: Vec::new(),
            sweep_lr_thr: Vec::new(),
            sweep_t_bin: Vec::new(),
            sweep_n_input: Vec::new(),
            sweep_f_poisson: Vec::new(),
            repeats: 1,
        }
    }
}

pub const DEFAULT_RIDGE_LAMBDA: f64 = 0.1;

/// Calcium target of the threshold controller in experiments. A target of 1
/// drives the reservoir to near silence at 150 ms bins.
pub const DEFAULT_TARGET_ACTIVITY: f64 = 7.0;

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Applies `key=value` overrides in order and revalidates.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(&self.to_toml()).expect("own output parses");
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
            let (key, raw) = (key.trim(), raw.trim());
            table.insert(key.to_string(), parse_value(raw));
        }
        let cfg: Config = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config(0).validate()?;
        self.topology_config(0).validate()?;
        if !(self.ridge_lambda >= 0.0) {
            return Err(Error::Config(format!("ridge_lambda = {} must be >= 0", self.ridge_lambda)));
        }
        if self.train_beats < 2 || self.test_beats < 2 {
            return Err(Error::Config("train_beats and test_beats must be at least 2".into()));
        }
        if let Some(b) = self.test_anomalies.iter().find(|&&b| b >= self.test_beats) {
            return Err(Error::Config(format!("test anomaly at beat {b} beyond test_beats")));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }

    fn neuron(&self, excitatory: bool) -> NeuronParams {
        NeuronParams {
            resistance: self.resistance,
            capacitance: self.capacitance,
            reset_potential: self.reset_potential,
            refractory_time: self.refractory_time,
            calcium_tau: self.calcium_tau,
            excitatory,
        }
    }

    pub fn sim_config(&self, encoder_seed: u64) -> SimConfig {
        SimConfig {
            dt: self.dt,
            excitatory: self.neuron(true),
            inhibitory: self.neuron(false),
            synapse: SynapseParams {
                tau_syn: self.tau_syn,
                alpha: self.alpha,
                w_max: self.w_max,
                lr_sdsp: self.lr_sdsp,
                sdsp_enabled: self.plasticity != Plasticity::None,
            },
            ip: IpConfig {
                threshold_step: self.lr_thr,
                learning_threshold_step: self.lr_lthr.unwrap_or(self.lr_thr / 2.0),
                target_activity: self.c_ip,
                healthy_band: self.sigma,
                v_thr_min: self.v_thr_min,
                v_thr_max: self.v_thr_max,
                enabled: self.plasticity == Plasticity::SdspPlusIp,
                sync_learning_thresholds: self.threshold_sync,
                post_spike_calcium: self.ip_post_spike_calcium,
            },
            encoder: EncoderConfig {
                f_poisson_max: self.f_poisson,
                t_bin: self.t_bin,
                n_input: self.n_input,
                seed: encoder_seed,
            },
            initial_threshold: self.initial_threshold,
            training_passes: self.training_passes,
            d_metric_input: self.d_metric_input,
        }
    }

    pub fn topology_config(&self, topology_seed: u64) -> TopologyConfig {
        TopologyConfig {
            n_input: self.n_input,
            n_excitatory: self.n_excitatory,
            n_inhibitory: self.n_inhibitory,
            n_output: self.n_output,
            p_in: self.p_in,
            p_ee: self.p_ee,
            p_ei: self.p_ei,
            p_ie: self.p_ie,
            p_ii: self.p_ii,
            seed: topology_seed,
            allow_self_loops: self.allow_self_loops,
            initial_plastic_weight: self.initial_plastic_weight,
            w_max: self.w_max,
        }
    }
}

/// Parses an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
