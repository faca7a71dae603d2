//! Rate coding of ECG samples into Poisson spike trains.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Rates above `RATE_CEILING * f_poisson_max` are clipped.
pub const RATE_CEILING: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    /// Maximum Poisson rate `F_Poisson`, hertz.
    pub f_poisson_max: f64,
    /// Presentation time of one sample, seconds.
    pub t_bin: f64,
    pub n_input: usize,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            f_poisson_max: 150.0,
            t_bin: 150e-3,
            n_input: 100,
            seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_poisson_max > 0.0 && self.t_bin > 0.0) {
            return Err(Error::Config(format!(
                "f_poisson_max and t_bin must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// `F_in = F_Poisson * (4 + 2 E) / 5`, clipped to `[0, 1.2 F_Poisson]`.
/// The map is zero at -2 mV and reaches `F_Poisson` at +0.5 mV.
pub fn ecg_to_rate(e_input_mv: f64, f_poisson_max: f64) -> f64 {
    let rate = f_poisson_max * (4.0 + 2.0 * e_input_mv) / 5.0;
    rate.clamp(0.0, RATE_CEILING * f_poisson_max)
}

/// Number of `dt` steps in one bin; `dt` must divide `t_bin`.
pub fn steps_per_bin(t_bin: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && t_bin > 0.0) {
        return Err(Error::Config(format!("t_bin {t_bin} and dt {dt} must be positive")));
    }
    let n = t_bin / dt;
    if (n - n.round()).abs() > 1e-6 * n.max(1.0) || n.round() < 1.0 {
        return Err(Error::Config(format!("dt = {dt} s does not divide t_bin = {t_bin} s")));
    }
    Ok(n.round() as usize)
}

/// Bernoulli approximation of a Poisson process: each step spikes
/// independently with probability `rate * dt`.
pub fn generate_poisson_bin<R: Rng + ?Sized>(
    rate: f64,
    t_bin: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<bool>> {
    let steps = steps_per_bin(t_bin, dt)?;
    let p = spike_probability(rate, dt)?;
    Ok((0..steps).map(|_| rng.gen::<f64>() < p).collect())
}

fn spike_probability(rate: f64, dt: f64) -> Result<f64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidArgument(format!("rate {rate} must be finite and >= 0")));
    }
    let p = rate * dt;
    if p >= 1.0 {
        return Err(Error::Config(format!(
            "rate {rate} Hz with dt {dt} s gives spike probability {p} >= 1 per step"
        )));
    }
    Ok(p)
}

pub fn measure_rate(spike_count: u32, t_bin: f64) -> f64 {
    spike_count as f64 / t_bin
}

/// One independent ChaCha stream per input neuron, all derived from the
/// encoder seed.
#[derive(Debug, Clone, PartialEq)]
pub struct InputEncoder {
    rngs: Vec<ChaCha8Rng>,
}

/// Serializable position of one input stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamPosition {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl InputEncoder {
    pub fn new(n_input: usize, seed: u64) -> Self {
        let rngs = (0..n_input)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                rng
            })
            .collect();
        Self { rngs }
    }

    pub fn n_input(&self) -> usize {
        self.rngs.len()
    }

    /// Spike trains of every input for one bin at a common rate, returned
    /// as the list of spiking inputs per step.
    pub fn encode_bin(&mut self, rate: f64, steps: usize, dt: f64) -> Result<Vec<Vec<u32>>> {
        let p = spike_probability(rate, dt)?;
        let mut by_step = vec![Vec::new(); steps];
        for (i, rng) in self.rngs.iter_mut().enumerate() {
            for slot in by_step.iter_mut() {
                if rng.gen::<f64>() < p {
                    slot.push(i as u32);
                }
            }
        }
        Ok(by_step)
    }

    pub fn positions(&self) -> Vec<StreamPosition> {
        self.rngs
            .iter()
            .map(|r| StreamPosition {
                seed: r.get_seed(),
                stream: r.get_stream(),
                word_pos: r.get_word_pos(),
            })
            .collect()
    }

    pub fn from_positions(positions: &[StreamPosition]) -> Self {
        let rngs = positions
            .iter()
            .map(|p| {
                let mut rng = ChaCha8Rng::from_seed(p.seed);
                rng.set_stream(p.stream);
                rng.set_word_pos(p.word_pos);
                rng
            })
            .collect();
        Self { rngs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_map_values() {
        assert!((ecg_to_rate(0.5, 150.0) - 150.0).abs() < 1e-12);
        assert_eq!(ecg_to_rate(-2.0, 150.0), 0.0);
        assert!((ecg_to_rate(0.0, 150.0) - 120.0).abs() < 1e-12);
        assert_eq!(ecg_to_rate(-3.0, 150.0), 0.0);
        assert!((ecg_to_rate(5.0, 150.0) - 180.0).abs() < 1e-12);
    }

    #[test]
    fn measured_rates() {
        assert_eq!(measure_rate(0, 0.15), 0.0);
        assert!((measure_rate(3, 0.15) - 20.0).abs() < 1e-12);
        assert!((measure_rate(1, 0.007) - 142.857).abs() < 1e-3);
    }

    #[test]
    fn zero_rate_is_silent_and_bad_rates_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let train = generate_poisson_bin(0.0, 0.15, 1e-4, &mut rng).unwrap();
        assert_eq!(train.len(), 1500);
        assert!(train.iter().all(|s| !s));
        assert!(generate_poisson_bin(1e4, 0.15, 1e-4, &mut rng).is_err());
        assert!(generate_poisson_bin(-1.0, 0.15, 1e-4, &mut rng).is_err());
        assert!(generate_poisson_bin(10.0, 0.15, 0.35e-3, &mut rng).is_err());
    }

    #[test]
    fn seeded_trains_repeat() {
        let a = generate_poisson_bin(150.0, 0.15, 1e-4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate_poisson_bin(150.0, 0.15, 1e-4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn encoder_positions_restore_streams() {
        let mut enc = InputEncoder::new(5, 3);
        enc.encode_bin(100.0, 70, 1e-4).unwrap();
        let mut restored = InputEncoder::from_positions(&enc.positions());
        assert_eq!(
            enc.encode_bin(100.0, 70, 1e-4).unwrap(),
            restored.encode_bin(100.0, 70, 1e-4).unwrap()
        );
    }
}
