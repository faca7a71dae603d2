//! From millivolts to Poisson spike trains.
//!
//! Generates one synthetic beat, maps each sample to an input rate, encodes
//! it with independent per-neuron streams and measures the realized rates.
//! Also shows the CSV and annotation formats the parsers accept.
//!
//! Run with `cargo run --release --example encode_ecg`.

use srnn::encoding::{ecg_to_rate, measure_rate, InputEncoder};
use srnn::ingest::{make_synthetic_ecg, parse_annotations, parse_ecg_csv};

fn main() -> srnn::Result<()> {
    let (series, ann) = make_synthetic_ecg(3, &[1], 7)?;
    let (f_max, t_bin, dt, n_input) = (150.0, 0.15, 1e-4, 100);
    let mut encoder = InputEncoder::new(n_input, 7);
    let steps = (t_bin / dt) as usize;
    println!("  k   E (mV)  F_in (Hz)  measured (Hz)  label");
    for k in (0..series.len()).step_by(8) {
        let rate = ecg_to_rate(series.values[k], f_max);
        let spikes: usize = encoder.encode_bin(rate, steps, dt)?.iter().map(Vec::len).sum();
        let measured = measure_rate(spikes as u32, t_bin) / n_input as f64;
        let label = ann.label_at(k).map_or("-", |l| l.as_str());
        println!("{k:3} {:8.3} {rate:10.2} {measured:14.2}  {label}", series.values[k]);
    }

    let csv = series.to_csv();
    let back = parse_ecg_csv(&csv, series.sample_rate, "copy")?;
    assert_eq!(back.values, series.values);
    let back_ann = parse_annotations(&ann.to_text(), series.len())?;
    assert_eq!(back_ann, ann);
    println!("\nCSV head:\n{}", csv.lines().take(3).collect::<Vec<_>>().join("\n"));
    println!("annotations:\n{}", ann.to_text().trim_end());
    Ok(())
}
