//! A single leaky integrate-and-fire neuron.
//!
//! Integrates a constant current for one membrane time constant and compares
//! with the closed form, then sweeps the current to show the rate curve and
//! its refractory ceiling.
//!
//! Run with `cargo run --release --example lif_neuron`.

use srnn::neuron::{check_fire, step_membrane, update_calcium, NeuronParams, NeuronState};

fn main() -> srnn::Result<()> {
    let params = NeuronParams::excitatory();
    let dt = 1e-4;
    let tau = params.membrane_tau();
    println!("R = {} MOhm, C = {} pF, tau_mem = {} ms", params.resistance / 1e6, params.capacitance * 1e12, tau * 1e3);

    // Subthreshold integration: V(t) = I R (1 - exp(-t / tau)).
    let current = 100e-12;
    let mut state = NeuronState::at_rest(&params, f64::INFINITY);
    let steps = (tau / dt).round() as usize;
    for _ in 0..steps {
        state = step_membrane(state, &params, current, dt)?;
    }
    let exact = current * params.resistance * (1.0 - (-1.0f64).exp());
    println!("after {steps} steps of {} pA: V = {:.9} V, closed form {exact:.9} V", current * 1e12, state.v_mem);

    // Rate curve with a 0.2 V threshold.
    println!("\ncurrent (pA)  rate (Hz)");
    let ceiling = 1.0 / (params.refractory_time + dt);
    for pa in [400.0, 500.0, 600.0, 1000.0, 2000.0, 10_000.0, 100_000.0] {
        let mut s = NeuronState::at_rest(&params, 0.2);
        let mut spikes = 0;
        let steps = 10_000;
        for _ in 0..steps {
            s = step_membrane(s, &params, pa * 1e-12, dt)?;
            let (next, fired) = check_fire(s, &params);
            s = update_calcium(next, &params, fired, dt);
            spikes += usize::from(fired);
        }
        println!("{pa:12.0}  {:9.1}", spikes as f64 / (steps as f64 * dt));
    }
    println!("refractory ceiling: {ceiling:.1} Hz (one spike per {} steps)", (params.refractory_time / dt) as usize + 1);
    Ok(())
}
