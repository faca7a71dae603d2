//! Stepwise threshold control driven by the calcium trace.
//!
//! Two drives: a strong tonic current keeps the calcium above the band, so
//! every fire raises the threshold until the ceiling; sparse brief pulses
//! leave the calcium below the band, so every fire lowers it to the floor.
//! The learning thresholds follow at half the firing threshold.
//!
//! Run with `cargo run --release --example threshold_control`.

use srnn::neuron::{apply_ip_with_calcium, check_fire, step_membrane, update_calcium, IpConfig, NeuronParams, NeuronState};

fn simulate(ip: &IpConfig, drive: impl Fn(usize) -> f64) -> srnn::Result<(NeuronState, Vec<f64>)> {
    let params = NeuronParams::excitatory();
    let dt = 1e-4;
    let mut s = NeuronState::at_rest(&params, 0.2);
    let mut trajectory = vec![s.v_thr];
    for t in 0..30_000 {
        s = step_membrane(s, &params, drive(t), dt)?;
        let (next, fired) = check_fire(s, &params);
        let before = next.calcium * (-dt / params.calcium_tau).exp();
        s = update_calcium(next, &params, fired, dt);
        if fired {
            s = apply_ip_with_calcium(s, ip, before);
            if trajectory.last() != Some(&s.v_thr) {
                trajectory.push(s.v_thr);
            }
        }
    }
    Ok((s, trajectory))
}

fn main() -> srnn::Result<()> {
    for step in [0.025, 0.05, 0.1, 0.3] {
        let ip = IpConfig::with_step(step);
        let (tonic, up) = simulate(&ip, |_| 1500e-12)?;
        // 5 ms pulses every 500 ms.
        let (pulsed, down) = simulate(&ip, |t| if t % 5_000 < 50 { 3000e-12 } else { 0.0 })?;
        println!("LR_thr = {step:5.3} V");
        println!("  tonic : V_thr path {up:.3?}, final V_Lthr {:.4} V", tonic.v_lthr_up);
        println!("  pulsed: V_thr path {down:.3?}, final V_Lthr {:.4} V", pulsed.v_lthr_up);
    }
    Ok(())
}
