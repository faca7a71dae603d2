//! Clock-driven simulation of the recurrent pool.
//!
//! One call to [`Network::step`] advances every neuron by `dt` in a fixed
//! order:
//!
//! 1. decay all synaptic currents;
//! 2. deliver the recurrent spikes emitted on the previous step and the
//!    external input spikes of this step, applying SDSP on plastic edges
//!    against the target's membrane value from before this step;
//! 3. integrate every membrane;
//! 4. detect fires, reset, start refractory periods;
//! 5. update every calcium trace;
//! 6. apply the threshold controller to each excitatory neuron that fired.
//!
//! Spikes emitted on step `t` reach their targets on step `t + 1`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::encoding::{self, EncoderConfig, InputEncoder};
use crate::error::{Error, Result};
use crate::neuron::{self, IpConfig, NeuronParams, NeuronState, Propagator};
use crate::readout::{self, ReadoutModel};
use crate::synapse::{self, EdgeWeight, SynapseParams};
use crate::topology::{EdgeClass, Topology};
use crate::anomaly;

/// Which input rate the deviation score compares the prediction against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DMetricInput {
    /// The encoder's target rate for the next sample.
    #[default]
    Target,
    /// The rate the input layer actually emitted during the next bin.
    Realized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub excitatory: NeuronParams,
    pub inhibitory: NeuronParams,
    pub synapse: SynapseParams,
    pub ip: IpConfig,
    pub encoder: EncoderConfig,
    /// Initial firing threshold of every neuron; inhibitory neurons keep it.
    pub initial_threshold: f64,
    /// Passes over the training waveform in phase 1.
    pub training_passes: usize,
    pub d_metric_input: DMetricInput,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            excitatory: NeuronParams::excitatory(),
            inhibitory: NeuronParams::inhibitory(),
            synapse: SynapseParams::default(),
            ip: IpConfig::default(),
            encoder: EncoderConfig::default(),
            initial_threshold: 0.2,
            training_passes: 3,
            d_metric_input: DMetricInput::Target,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.excitatory.validate()?;
        self.inhibitory.validate()?;
        self.synapse.validate()?;
        self.ip.validate()?;
        self.encoder.validate()?;
        let tau = self.excitatory.membrane_tau().min(self.inhibitory.membrane_tau());
        if !(self.dt > 0.0) || self.dt > tau / 10.0 {
            return Err(Error::Config(format!(
                "dt = {} s must be positive and at most tau_mem / 10 = {} s",
                self.dt,
                tau / 10.0
            )));
        }
        encoding::steps_per_bin(self.encoder.t_bin, self.dt)?;
        if !(self.initial_threshold > 0.0) {
            return Err(Error::Config("initial threshold must be positive".into()));
        }
        Ok(())
    }

    pub fn steps_per_bin(&self) -> usize {
        encoding::steps_per_bin(self.encoder.t_bin, self.dt).expect("validated config")
    }

    /// Plasticity switches of phase 1.
    pub fn learning(&self) -> Learning {
        Learning {
            sdsp: self.synapse.sdsp_enabled,
            ip: self.ip.enabled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Learning {
    pub sdsp: bool,
    pub ip: bool,
}

impl Learning {
    pub const FROZEN: Learning = Learning { sdsp: false, ip: false };
}

/// Spike-count record of one presented sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BinRecord {
    pub k: usize,
    /// Presented sample, mV.
    pub e_input: f64,
    /// Target input rate, Hz.
    pub f_in: f64,
    /// Mean rate the input neurons actually emitted, Hz.
    pub f_in_realized: f64,
    pub excitatory_counts: Vec<u32>,
    pub inhibitory_counts: Vec<u32>,
    /// Readout prediction for the next sample (phase 3).
    pub f_out: Option<f64>,
    /// `D(k) = |F_out(k - 1) - F_in(k)|` (phase 3, k >= 1).
    pub d: Option<f64>,
}

impl BinRecord {
    pub fn excitatory_rates(&self, t_bin: f64) -> Vec<f64> {
        self.excitatory_counts
            .iter()
            .map(|&c| encoding::measure_rate(c, t_bin))
            .collect()
    }

    pub fn max_count(&self) -> u32 {
        self.excitatory_counts
            .iter()
            .chain(&self.inhibitory_counts)
            .copied()
            .max()
            .unwrap_or(0)
    }
}

/// Delivery target of one edge: edge slot and global neuron index.
#[derive(Debug, Clone, Copy)]
struct Synapse {
    edge: u32,
    target: u32,
}

/// Outgoing edges per source in compressed-row form.
#[derive(Debug, Clone, Default)]
struct Fanout {
    offsets: Vec<u32>,
    synapses: Vec<Synapse>,
}

impl Fanout {
    fn build(n_sources: usize, mut list: Vec<(usize, Synapse)>) -> Self {
        list.sort_by_key(|(src, s)| (*src, s.edge));
        let mut offsets = vec![0u32; n_sources + 1];
        for (src, _) in &list {
            offsets[src + 1] += 1;
        }
        for i in 0..n_sources {
            offsets[i + 1] += offsets[i];
        }
        Self {
            offsets,
            synapses: list.into_iter().map(|(_, s)| s).collect(),
        }
    }

    fn of(&self, src: usize) -> &[Synapse] {
        &self.synapses[self.offsets[src] as usize..self.offsets[src + 1] as usize]
    }
}

/// Full dynamic state of one simulated network.
#[derive(Debug, Clone)]
pub struct Network {
    topology: Arc<Topology>,
    input_fanout: Arc<Fanout>,
    recurrent_fanout: Arc<Fanout>,
    /// Excitatory neurons first, then inhibitory.
    pub neurons: Vec<NeuronState>,
    /// Aggregated synaptic current per neuron, amperes.
    pub currents: Vec<f64>,
    /// Weight slot per topology edge.
    pub weights: Vec<EdgeWeight>,
    /// Recurrent neurons that fired on the last step, awaiting delivery.
    pub pending: Vec<u32>,
    pub encoder: InputEncoder,
    /// Steps simulated so far.
    pub clock: u64,
}

impl Network {
    pub fn new(topology: Arc<Topology>, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let tc = &topology.config;
        if tc.n_input != cfg.encoder.n_input {
            return Err(Error::Config(format!(
                "topology has {} inputs, encoder {}",
                tc.n_input, cfg.encoder.n_input
            )));
        }
        let mut neurons = vec![NeuronState::at_rest(&cfg.excitatory, cfg.initial_threshold); tc.n_excitatory];
        neurons.extend(vec![
            NeuronState::at_rest(&cfg.inhibitory, cfg.initial_threshold);
            tc.n_inhibitory
        ]);
        let n = neurons.len();
        Ok(Self {
            input_fanout: Arc::new(input_fanout(&topology)),
            recurrent_fanout: Arc::new(recurrent_fanout(&topology)),
            weights: topology.edges.iter().map(|e| e.weight).collect(),
            encoder: InputEncoder::new(tc.n_input, cfg.encoder.seed),
            topology,
            neurons,
            currents: vec![0.0; n],
            pending: Vec::new(),
            clock: 0,
        })
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn n_excitatory(&self) -> usize {
        self.topology.config.n_excitatory
    }

    pub fn plastic_weights(&self) -> impl Iterator<Item = f64> + '_ {
        let range = self.topology.class_range(EdgeClass::ExcitatoryToExcitatory);
        self.weights[range].iter().map(|w| w.weight)
    }

    pub fn excitatory(&self) -> &[NeuronState] {
        &self.neurons[..self.n_excitatory()]
    }

    /// Hash of every weight and threshold; unchanged while plasticity is
    /// frozen.
    pub fn plasticity_fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for w in &self.weights {
            w.weight.to_bits().hash(&mut h);
        }
        for n in &self.neurons {
            n.v_thr.to_bits().hash(&mut h);
            n.v_lthr_up.to_bits().hash(&mut h);
            n.v_lthr_down.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Advances one `dt`. `external` lists the input neurons spiking on this
    /// step; the returned slice lists the recurrent neurons that fired.
    pub fn step(&mut self, external: &[u32], ctx: &StepContext) -> &[u32] {
        let n_e = self.n_excitatory();

        for c in &mut self.currents {
            *c = neuron::flush(*c * ctx.syn_decay);
        }

        let pending = std::mem::take(&mut self.pending);
        let recurrent = Arc::clone(&self.recurrent_fanout);
        for &src in &pending {
            self.deliver(recurrent.of(src as usize), ctx);
        }
        let inputs = Arc::clone(&self.input_fanout);
        for &src in external {
            self.deliver(inputs.of(src as usize), ctx);
        }

        let mut fired = pending;
        fired.clear();
        for (i, (state, &current)) in self.neurons.iter_mut().zip(&self.currents).enumerate() {
            let (params, prop) = if i < n_e {
                (&ctx.cfg.excitatory, &ctx.prop_e)
            } else {
                (&ctx.cfg.inhibitory, &ctx.prop_i)
            };
            prop.membrane(state, params, current);
            let (next, spike) = neuron::check_fire(*state, params);
            *state = next;
            prop.calcium(state, spike);
            if spike {
                fired.push(i as u32);
                if i < n_e && ctx.learning.ip {
                    let calcium = if ctx.cfg.ip.post_spike_calcium {
                        state.calcium
                    } else {
                        state.calcium - 1.0
                    };
                    *state = neuron::apply_ip_with_calcium(*state, &ctx.cfg.ip, calcium);
                }
            }
        }
        self.pending = fired;
        self.clock += 1;
        &self.pending
    }

    fn deliver(&mut self, synapses: &[Synapse], ctx: &StepContext) {
        let params = &ctx.cfg.synapse;
        for s in synapses {
            let target = s.target as usize;
            let slot = &mut self.weights[s.edge as usize];
            self.currents[target] = synapse::inject_spike(self.currents[target], slot, params);
            if slot.plastic && ctx.learning.sdsp {
                let post = &self.neurons[target];
                *slot = synapse::apply_sdsp(*slot, post.v_mem, post.v_lthr_up, post.v_lthr_down, params);
            }
        }
    }

    /// Presents one sample for `t_bin` and returns its spike counts.
    pub fn run_bin(&mut self, k: usize, e_input: f64, ctx: &StepContext) -> Result<BinRecord> {
        let enc = &ctx.cfg.encoder;
        let f_in = encoding::ecg_to_rate(e_input, enc.f_poisson_max);
        let steps = ctx.steps;
        let inputs = self.encoder.encode_bin(f_in, steps, ctx.cfg.dt)?;
        let n_e = self.n_excitatory();
        let mut counts = vec![0u32; self.neurons.len()];
        let mut input_spikes = 0usize;
        for external in &inputs {
            input_spikes += external.len();
            for &i in self.step(external, ctx) {
                counts[i as usize] += 1;
            }
        }
        let inhibitory_counts = counts.split_off(n_e);
        let n_input = self.encoder.n_input().max(1);
        Ok(BinRecord {
            k,
            e_input,
            f_in,
            f_in_realized: input_spikes as f64 / (n_input as f64 * enc.t_bin),
            excitatory_counts: counts,
            inhibitory_counts,
            f_out: None,
            d: None,
        })
    }

    pub fn run_waveform(&mut self, samples: &[f64], ctx: &StepContext) -> Result<Vec<BinRecord>> {
        samples
            .iter()
            .enumerate()
            .map(|(k, &e)| self.run_bin(k, e, ctx))
            .collect()
    }

    /// Unsupervised phase: repeated passes over the training waveform with
    /// the configured plasticity switched on.
    pub fn run_phase1(&mut self, training: &[f64], cfg: &SimConfig) -> Result<()> {
        let ctx = StepContext::new(cfg, cfg.learning());
        for _ in 0..cfg.training_passes {
            for (k, &e) in training.iter().enumerate() {
                self.run_bin(k, e, &ctx)?;
            }
        }
        Ok(())
    }

    /// Readout training data with plasticity frozen: bin-`k` excitatory rates
    /// paired with the input rate of sample `k + 1`.
    pub fn collect_readout_data(
        &mut self,
        training: &[f64],
        cfg: &SimConfig,
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        if training.len() < 2 {
            return Err(Error::InvalidArgument("training waveform needs at least 2 samples".into()));
        }
        let ctx = StepContext::new(cfg, Learning::FROZEN);
        let records = self.run_waveform(training, &ctx)?;
        let features = records[..records.len() - 1]
            .iter()
            .map(|r| r.excitatory_rates(cfg.encoder.t_bin))
            .collect();
        let targets = records[1..].iter().map(|r| input_rate(r, cfg)).collect();
        Ok((features, targets))
    }

    /// Test phase: frozen network, readout prediction `F_out(k)` per bin and
    /// deviation `D(k + 1) = |F_out(k) - F_in(k + 1)|`.
    pub fn run_phase3(
        &mut self,
        test: &[f64],
        model: &ReadoutModel,
        cfg: &SimConfig,
    ) -> Result<Vec<BinRecord>> {
        if test.len() < 2 {
            return Err(Error::InvalidArgument("test waveform needs at least 2 samples".into()));
        }
        if model.dim() != self.n_excitatory() {
            return Err(Error::InvalidArgument(format!(
                "readout has {} weights for {} excitatory neurons",
                model.dim(),
                self.n_excitatory()
            )));
        }
        let ctx = StepContext::new(cfg, Learning::FROZEN);
        let mut records = self.run_waveform(test, &ctx)?;
        for r in &mut records {
            r.f_out = Some(readout::predict(model, &r.excitatory_rates(cfg.encoder.t_bin)));
        }
        for k in 1..records.len() {
            let prev = records[k - 1].f_out.expect("set above");
            records[k].d = Some(anomaly::deviation(prev, input_rate(&records[k], cfg)));
        }
        Ok(records)
    }
}

fn input_rate(r: &BinRecord, cfg: &SimConfig) -> f64 {
    match cfg.d_metric_input {
        DMetricInput::Target => r.f_in,
        DMetricInput::Realized => r.f_in_realized,
    }
}

fn input_fanout(t: &Topology) -> Fanout {
    let range = t.class_range(EdgeClass::InputToExcitatory);
    let list = t.edges[range.clone()]
        .iter()
        .zip(range)
        .map(|(e, idx)| {
            (
                e.src as usize,
                Synapse {
                    edge: idx as u32,
                    target: e.dst,
                },
            )
        })
        .collect();
    Fanout::build(t.config.n_input, list)
}

fn recurrent_fanout(t: &Topology) -> Fanout {
    let n_e = t.config.n_excitatory as u32;
    let mut list = Vec::new();
    for (idx, e) in t.edges.iter().enumerate() {
        let (src, target) = match e.class {
            EdgeClass::ExcitatoryToExcitatory => (e.src, e.dst),
            EdgeClass::ExcitatoryToInhibitory => (e.src, n_e + e.dst),
            EdgeClass::InhibitoryToExcitatory => (n_e + e.src, e.dst),
            _ => continue,
        };
        list.push((
            src as usize,
            Synapse {
                edge: idx as u32,
                target,
            },
        ));
    }
    Fanout::build(t.config.n_recurrent(), list)
}

/// Per-run constants derived from the configuration.
#[derive(Debug, Clone, Copy)]
pub struct StepContext {
    pub cfg: SimConfig,
    pub learning: Learning,
    pub steps: usize,
    syn_decay: f64,
    prop_e: Propagator,
    prop_i: Propagator,
}

impl StepContext {
    pub fn new(cfg: &SimConfig, learning: Learning) -> Self {
        Self {
            cfg: *cfg,
            learning,
            steps: cfg.steps_per_bin(),
            syn_decay: cfg.synapse.decay_factor(cfg.dt),
            prop_e: cfg.excitatory.propagator(cfg.dt),
            prop_i: cfg.inhibitory.propagator(cfg.dt),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_network, TopologyConfig};

    fn small(seed: u64) -> (Network, SimConfig) {
        let tc = TopologyConfig {
            n_input: 20,
            n_excitatory: 16,
            n_inhibitory: 4,
            p_in: 0.3,
            seed,
            ..Default::default()
        };
        let cfg = SimConfig {
            encoder: EncoderConfig {
                n_input: 20,
                t_bin: 0.02,
                seed,
                ..Default::default()
            },
            ..Default::default()
        };
        let t = Arc::new(build_network(&tc).unwrap());
        (Network::new(t, &cfg).unwrap(), cfg)
    }

    #[test]
    fn quiescent_network_stays_put() {
        let (mut net, cfg) = small(1);
        let before = net.neurons.clone();
        let ctx = StepContext::new(&cfg, cfg.learning());
        for _ in 0..50 {
            assert!(net.step(&[], &ctx).is_empty());
        }
        assert_eq!(net.neurons, before);
        assert!(net.currents.iter().all(|c| *c == 0.0));
        assert_eq!(net.clock, 50);
    }

    #[test]
    fn silent_input_gives_zero_counts() {
        let (mut net, cfg) = small(2);
        let ctx = StepContext::new(&cfg, cfg.learning());
        let r = net.run_bin(0, -2.0, &ctx).unwrap();
        assert_eq!(r.f_in, 0.0);
        assert!(r.excitatory_counts.iter().all(|c| *c == 0));
    }

    #[test]
    fn bins_are_reproducible() {
        let (mut a, cfg) = small(3);
        let (mut b, _) = small(3);
        let ctx = StepContext::new(&cfg, cfg.learning());
        for k in 0..5 {
            assert_eq!(a.run_bin(k, 0.3, &ctx).unwrap(), b.run_bin(k, 0.3, &ctx).unwrap());
        }
        assert_eq!(a.plasticity_fingerprint(), b.plasticity_fingerprint());
    }

    #[test]
    fn frozen_phases_keep_weights_and_thresholds() {
        let (mut net, cfg) = small(4);
        let fp = net.plasticity_fingerprint();
        let ctx = StepContext::new(&cfg, Learning::FROZEN);
        net.run_waveform(&[0.5, 0.2, 0.4], &ctx).unwrap();
        assert_eq!(net.plasticity_fingerprint(), fp);
    }

    #[test]
    fn phase3_requires_two_samples_and_matching_readout() {
        let (mut net, cfg) = small(5);
        let model = ReadoutModel::zeros(16);
        assert!(net.run_phase3(&[0.1], &model, &cfg).is_err());
        assert!(net.run_phase3(&[0.1, 0.2], &ReadoutModel::zeros(3), &cfg).is_err());
        let recs = net.run_phase3(&[0.1, 0.2, 0.3], &model, &cfg).unwrap();
        assert_eq!(recs[0].d, None);
        assert!(recs[1..].iter().all(|r| r.d.is_some()));
    }
}
