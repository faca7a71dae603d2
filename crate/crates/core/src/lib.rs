//! Spiking randomly connected recurrent network with spike-driven synaptic
//! plasticity and a stepwise firing-threshold controller whose SDSP
//! learning thresholds move in lockstep with the firing threshold.
//!
//! The crate is organised bottom-up:
//!
//! - [`neuron`]: LIF membrane, refractory logic, calcium trace, threshold control
//! - [`synapse`]: exponential synaptic current and the SDSP weight rule
//! - [`topology`]: random input / E / I / output wiring
//! - [`encoding`]: ECG-to-rate map and Poisson input trains
//! - [`engine`]: the clock loop and the three training / readout / test phases
//! - [`readout`]: ridge-regression rate readout
//! - [`anomaly`]: deviation score and detection margin
//! - [`ingest`]: ECG and annotation files, synthetic ECG
//! - [`config`], [`checkpoint`], [`harness`]: experiment plumbing

pub mod anomaly;
pub mod checkpoint;
pub mod config;
pub mod encoding;
pub mod engine;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod neuron;
pub mod readout;
pub mod synapse;
pub mod topology;

pub use error::{Error, Result};
