//! Exponential synaptic currents and the spike-driven plasticity rule.
//!
//! Every synapse shares one time constant, so the current flowing into a
//! neuron is kept as a single accumulator per post-synaptic neuron.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseParams {
    /// Decay time constant of the synaptic current, seconds.
    pub tau_syn: f64,
    /// Current injected per unit weight per spike, amperes.
    pub alpha: f64,
    pub w_max: f64,
    /// Weight step of one SDSP update.
    pub lr_sdsp: f64,
    pub sdsp_enabled: bool,
}

impl Default for SynapseParams {
    fn default() -> Self {
        Self {
            tau_syn: 5e-3,
            alpha: DEFAULT_ALPHA,
            w_max: 2.0,
            lr_sdsp: 0.1,
            sdsp_enabled: true,
        }
    }
}

/// Current per unit weight. A single unit-weight spike into a rested neuron
/// (tau_mem = 4 ms, tau_syn = 5 ms, R = 400 MOhm) peaks at about 8 mV.
pub const DEFAULT_ALPHA: f64 = 50e-12;

impl SynapseParams {
    pub fn decay_factor(&self, dt: f64) -> f64 {
        (-dt / self.tau_syn).exp()
    }

    /// Number of weight steps between 0 and `w_max`.
    pub fn grid_levels(&self) -> i64 {
        (self.w_max / self.lr_sdsp).round() as i64
    }

    pub fn is_on_grid(&self, w: f64) -> bool {
        let n = w / self.lr_sdsp;
        (n - n.round()).abs() < 1e-9 && n.round() >= 0.0 && n.round() as i64 <= self.grid_levels()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_syn > 0.0 && self.alpha > 0.0 && self.w_max > 0.0) {
            return Err(Error::Config(format!("invalid synapse parameters: {self:?}")));
        }
        if !(self.lr_sdsp > 0.0 && self.lr_sdsp <= self.w_max) {
            return Err(Error::Config(format!(
                "SDSP step {} must lie in (0, {}]",
                self.lr_sdsp, self.w_max
            )));
        }
        let n = self.w_max / self.lr_sdsp;
        if (n - n.round()).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "SDSP step {} does not divide the weight range [0, {}]",
                self.lr_sdsp, self.w_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Excitatory,
    Inhibitory,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Excitatory => 1.0,
            Sign::Inhibitory => -1.0,
        }
    }
}

/// Weight slot of one directed edge. Weights are stored non-negative; the
/// sign is applied when the spike is turned into current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeWeight {
    pub weight: f64,
    pub plastic: bool,
    pub sign: Sign,
}

impl EdgeWeight {
    pub fn fixed(weight: f64, sign: Sign) -> Self {
        Self {
            weight,
            plastic: false,
            sign,
        }
    }

    pub fn plastic(weight: f64) -> Self {
        Self {
            weight,
            plastic: true,
            sign: Sign::Excitatory,
        }
    }
}

pub fn decay_current(current: f64, params: &SynapseParams, dt: f64) -> f64 {
    current * params.decay_factor(dt)
}

pub fn inject_spike(current: f64, edge: &EdgeWeight, params: &SynapseParams) -> f64 {
    current + edge.sign.factor() * params.alpha * edge.weight
}

/// SDSP: on a pre-synaptic spike, potentiate if the post-synaptic membrane
/// is above `v_lthr_up`, depress if it is below `v_lthr_down`. Weights stay
/// on the `lr_sdsp` grid within `[0, w_max]`.
pub fn apply_sdsp(
    edge: EdgeWeight,
    v_post: f64,
    v_lthr_up: f64,
    v_lthr_down: f64,
    params: &SynapseParams,
) -> EdgeWeight {
    let direction = if v_post > v_lthr_up {
        1.0
    } else if v_post < v_lthr_down {
        -1.0
    } else {
        return edge;
    };
    let target = edge.weight + direction * params.lr_sdsp;
    let level = (target / params.lr_sdsp).round().clamp(0.0, params.grid_levels() as f64);
    EdgeWeight {
        weight: level * params.lr_sdsp,
        ..edge
    }
}
