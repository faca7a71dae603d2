//! Leaky integrate-and-fire dynamics with an event-driven, stepwise
//! threshold controller.
//!
//! The membrane obeys `C dV/dt = I_in - V/R`. Each neuron also carries a
//! calcium-like activity trace `C_fire` (`tau_IP dC/dt = -C + sum of spike
//! impulses`). When an excitatory neuron fires, its firing threshold moves
//! one grid step up or down depending on whether `C_fire` is above or below
//! the healthy band around the target activity, and the two learning
//! thresholds used by SDSP move with it by half a step so that
//! `V_Lthr_down <= V_Lthr_up < V_thr` keeps holding.

use crate::error::{Error, Result};

/// Tolerance used for grid-membership and divisibility checks on thresholds.
const GRID_EPS: f64 = 1e-9;

/// Decaying state below this magnitude is set to zero, so long silences never
/// reach subnormal floats.
pub const FLUSH_TO_ZERO: f64 = 1e-200;

#[inline]
pub fn flush(x: f64) -> f64 {
    if x.abs() < FLUSH_TO_ZERO {
        0.0
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronParams {
    /// Membrane resistance in ohms.
    pub resistance: f64,
    /// Membrane capacitance in farads.
    pub capacitance: f64,
    /// Potential the membrane is reset to after a spike, in volts.
    pub reset_potential: f64,
    /// Refractory period in seconds.
    pub refractory_time: f64,
    /// Time constant of the calcium trace in seconds.
    pub calcium_tau: f64,
    pub excitatory: bool,
}

impl NeuronParams {
    /// 400 MOhm, 10 pF, 100 ms calcium trace, 0 V reset, 2 ms refractory.
    pub fn excitatory() -> Self {
        Self {
            resistance: 400e6,
            capacitance: 10e-12,
            reset_potential: 0.0,
            refractory_time: 2e-3,
            calcium_tau: 100e-3,
            excitatory: true,
        }
    }

    pub fn inhibitory() -> Self {
        Self {
            excitatory: false,
            ..Self::excitatory()
        }
    }

    pub fn membrane_tau(&self) -> f64 {
        self.resistance * self.capacitance
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.resistance > 0.0
            && self.capacitance > 0.0
            && self.calcium_tau > 0.0
            && self.refractory_time >= 0.0
            && self.reset_potential.is_finite()
            && self.membrane_tau().is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid neuron parameters: {self:?}")))
        }
    }

    pub fn propagator(&self, dt: f64) -> Propagator {
        Propagator::new(self, dt)
    }
}

/// Precomputed per-step factors for a fixed `dt`.
///
/// The exponential-Euler update is exact for input current that is constant
/// over the step, so iterating it with any `dt` that divides an interval
/// reproduces the closed-form solution over that interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub dt: f64,
    membrane_decay: f64,
    resistance: f64,
    calcium_decay: f64,
}

impl Propagator {
    pub fn new(params: &NeuronParams, dt: f64) -> Self {
        Self {
            dt,
            membrane_decay: (-dt / params.membrane_tau()).exp(),
            resistance: params.resistance,
            calcium_decay: (-dt / params.calcium_tau).exp(),
        }
    }

    #[inline]
    pub fn membrane(&self, state: &mut NeuronState, params: &NeuronParams, current: f64) {
        if state.refractory_remaining > 0.0 {
            state.v_mem = params.reset_potential;
            let left = state.refractory_remaining - self.dt;
            // Absorb round-off so that t_ref / dt steps end the refractory period.
            state.refractory_remaining = if left > self.dt * GRID_EPS { left } else { 0.0 };
        } else {
            let d = self.membrane_decay;
            state.v_mem = flush(state.v_mem * d + current * self.resistance * (1.0 - d));
        }
    }

    #[inline]
    pub fn calcium(&self, state: &mut NeuronState, fired: bool) {
        state.calcium = flush(state.calcium * self.calcium_decay);
        if fired {
            state.calcium += 1.0;
        }
    }
}

/// Configuration of the stepwise threshold controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpConfig {
    /// Step of the firing threshold per update, in volts.
    pub threshold_step: f64,
    /// Step of each learning threshold per update, in volts.
    pub learning_threshold_step: f64,
    /// Target calcium level `C_IP`.
    pub target_activity: f64,
    /// Relative width `sigma` of the band in which no update happens.
    pub healthy_band: f64,
    pub v_thr_min: f64,
    pub v_thr_max: f64,
    pub enabled: bool,
    /// Move the learning thresholds together with the firing threshold.
    /// Switching this off reproduces fixed SDSP thresholds.
    pub sync_learning_thresholds: bool,
    /// Compare the calcium level after this spike's increment (true) or
    /// before it (false).
    pub post_spike_calcium: bool,
}

impl Default for IpConfig {
    fn default() -> Self {
        Self::with_step(0.025)
    }
}

impl IpConfig {
    /// Default controller with the learning-threshold step tied to half of
    /// the firing-threshold step.
    pub fn with_step(threshold_step: f64) -> Self {
        Self {
            threshold_step,
            learning_threshold_step: threshold_step / 2.0,
            target_activity: 1.0,
            healthy_band: 0.3,
            v_thr_min: 0.1,
            v_thr_max: 0.4,
            enabled: true,
            sync_learning_thresholds: true,
            post_spike_calcium: false,
        }
    }

    pub fn upper_band(&self) -> f64 {
        (1.0 + self.healthy_band / 2.0) * self.target_activity
    }

    pub fn lower_band(&self) -> f64 {
        (1.0 - self.healthy_band / 2.0) * self.target_activity
    }

    /// Number of grid intervals between `v_thr_min` and `v_thr_max`.
    pub fn grid_levels(&self) -> i64 {
        ((self.v_thr_max - self.v_thr_min) / self.threshold_step).round() as i64
    }

    pub fn is_on_grid(&self, v_thr: f64) -> bool {
        let n = (v_thr - self.v_thr_min) / self.threshold_step;
        (n - n.round()).abs() < GRID_EPS && n.round() >= 0.0 && n.round() as i64 <= self.grid_levels()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.healthy_band > 0.0 && self.healthy_band < 2.0) {
            return Err(Error::Config(format!(
                "healthy band sigma must lie in (0, 2), got {}",
                self.healthy_band
            )));
        }
        if !(self.target_activity > 0.0) {
            return Err(Error::Config("target activity must be positive".into()));
        }
        if !(self.v_thr_min > 0.0 && self.v_thr_min < self.v_thr_max) {
            return Err(Error::Config(format!(
                "threshold range [{}, {}] is empty or not positive",
                self.v_thr_min, self.v_thr_max
            )));
        }
        if !(self.threshold_step > 0.0 && self.learning_threshold_step >= 0.0) {
            return Err(Error::Config("threshold steps must be positive".into()));
        }
        let n = (self.v_thr_max - self.v_thr_min) / self.threshold_step;
        if (n - n.round()).abs() > 1e-6 || n.round() < 1.0 {
            return Err(Error::Config(format!(
                "threshold step {} does not divide the range [{}, {}]",
                self.threshold_step, self.v_thr_min, self.v_thr_max
            )));
        }
        Ok(())
    }
}

/// Dynamic variables of one neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    pub v_mem: f64,
    pub v_thr: f64,
    pub v_lthr_up: f64,
    pub v_lthr_down: f64,
    /// Calcium activity trace `C_fire`.
    pub calcium: f64,
    /// Remaining refractory time in seconds; zero when not refractory.
    pub refractory_remaining: f64,
}

impl NeuronState {
    /// Rested neuron with learning thresholds at half the firing threshold.
    pub fn at_rest(params: &NeuronParams, v_thr: f64) -> Self {
        Self {
            v_mem: params.reset_potential,
            v_thr,
            v_lthr_up: v_thr / 2.0,
            v_lthr_down: v_thr / 2.0,
            calcium: 0.0,
            refractory_remaining: 0.0,
        }
    }

    pub fn is_refractory(&self) -> bool {
        self.refractory_remaining > 0.0
    }

    /// `V_Lthr_down <= V_Lthr_up < V_thr`.
    pub fn thresholds_ordered(&self) -> bool {
        self.v_lthr_down <= self.v_lthr_up && self.v_lthr_up < self.v_thr
    }
}

/// Advances the membrane by one step of length `dt` under input current
/// `current` (amperes).
pub fn step_membrane(
    state: NeuronState,
    params: &NeuronParams,
    current: f64,
    dt: f64,
) -> Result<NeuronState> {
    if !current.is_finite() {
        return Err(Error::InvalidArgument(format!("input current {current} is not finite")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let mut next = state;
    Propagator::new(params, dt).membrane(&mut next, params, current);
    Ok(next)
}

/// Fires when the membrane strictly exceeds the threshold outside the
/// refractory period; the neuron is then reset and made refractory.
pub fn check_fire(state: NeuronState, params: &NeuronParams) -> (NeuronState, bool) {
    if state.is_refractory() || !(state.v_mem > state.v_thr) {
        return (state, false);
    }
    let next = NeuronState {
        v_mem: params.reset_potential,
        refractory_remaining: params.refractory_time,
        ..state
    };
    (next, true)
}

pub fn update_calcium(state: NeuronState, params: &NeuronParams, fired: bool, dt: f64) -> NeuronState {
    let mut next = state;
    next.calcium = flush(next.calcium * (-dt / params.calcium_tau).exp());
    if fired {
        next.calcium += 1.0;
    }
    next
}

/// Stepwise threshold update, called at the instant an excitatory neuron
/// fires.
///
/// `calcium` is the activity level compared against the band; normally the
/// state's own trace.
pub fn apply_ip(state: NeuronState, ip: &IpConfig) -> NeuronState {
    apply_ip_with_calcium(state, ip, state.calcium)
}

pub fn apply_ip_with_calcium(state: NeuronState, ip: &IpConfig, calcium: f64) -> NeuronState {
    let direction = if calcium > ip.upper_band() {
        1
    } else if calcium < ip.lower_band() {
        -1
    } else {
        return state;
    };

    let levels = ip.grid_levels();
    let target = state.v_thr + direction as f64 * ip.threshold_step;
    let level = ((target - ip.v_thr_min) / ip.threshold_step).round() as i64;
    let v_thr = ip.v_thr_min + level.clamp(0, levels) as f64 * ip.threshold_step;

    let mut next = state;
    next.v_thr = v_thr;
    if ip.sync_learning_thresholds && v_thr != state.v_thr {
        // The learning thresholds move only when the firing threshold does,
        // scaled to the realized change so a clamp suppresses both alike.
        let realized = (v_thr - state.v_thr) / ip.threshold_step;
        let shift = realized * ip.learning_threshold_step;
        next.v_lthr_up += shift;
        next.v_lthr_down += shift;
    }
    next
}
