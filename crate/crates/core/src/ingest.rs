//! ECG waveform and annotation files, and a synthetic ECG generator.
//!
//! ECG CSV grammar (LF or CRLF):
//!
//! ```text
//! [header lines]          any lines before the first data line whose value
//!                         field is not a number
//! time_or_index,value_mV[,ignored...]
//! ```
//!
//! `time_or_index` is a number or an optionally single-quoted clock time
//! such as `'0:01.250'` (PhysioBank ATM export). Annotation grammar:
//!
//! ```text
//! start,end,label         inclusive sample range, label normal|abnormal
//! ```
//!
//! Blank lines and lines starting with `#` are skipped in annotation files.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::anomaly::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EcgSeries {
    /// Samples in millivolts.
    pub values: Vec<f64>,
    pub sample_rate: f64,
    pub record_id: String,
}

impl EcgSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,mV\n");
        for (k, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }
}

fn is_time_field(field: &str) -> bool {
    let f = field.trim().trim_matches('\'').trim_matches('"');
    if f.parse::<f64>().is_ok_and(f64::is_finite) {
        return true;
    }
    let parts: Vec<&str> = f.split(':').collect();
    (2..=3).contains(&parts.len())
        && parts[..parts.len() - 1]
            .iter()
            .all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
        && parts[parts.len() - 1].parse::<f64>().is_ok_and(|s| s >= 0.0)
}

pub fn parse_ecg_csv(text: &str, sample_rate: f64, record_id: &str) -> Result<EcgSeries> {
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidArgument(format!("sample rate {sample_rate} must be positive")));
    }
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if values.is_empty() {
                continue;
            }
            return Err(Error::parse(n, "blank line inside data"));
        }
        let mut fields = line.split(',');
        let time = fields.next().unwrap_or_default();
        let value = fields.next().map(str::trim);
        let parsed = value.and_then(|v| v.parse::<f64>().ok());
        match parsed {
            None if values.is_empty() => continue, // header
            None => return Err(Error::parse(n, format!("expected `time,value_mV`, got {line:?}"))),
            Some(v) if !v.is_finite() => return Err(Error::parse(n, format!("non-finite value {v}"))),
            Some(v) => {
                if !is_time_field(time) {
                    return Err(Error::parse(n, format!("bad time or index field {time:?}")));
                }
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::parse(1, "no data lines"));
    }
    Ok(EcgSeries {
        values,
        sample_rate,
        record_id: record_id.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnotationRange {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotationSet {
    /// Sorted by start, non-overlapping.
    pub ranges: Vec<AnnotationRange>,
}

impl AnnotationSet {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.ranges {
            let _ = writeln!(out, "{},{},{}", r.start, r.end, r.label.as_str());
        }
        out
    }

    pub fn label_at(&self, k: usize) -> Option<Label> {
        let i = self.ranges.partition_point(|r| r.end < k);
        self.ranges.get(i).filter(|r| r.start <= k).map(|r| r.label)
    }

    /// Per-sample labels. Normal samples within `guard` samples of an
    /// abnormal range are left unlabeled.
    pub fn sample_labels(&self, len: usize, guard: usize) -> Vec<Option<Label>> {
        let mut labels: Vec<Option<Label>> = (0..len).map(|k| self.label_at(k)).collect();
        for r in self.ranges.iter().filter(|r| r.label == Label::Abnormal) {
            let lo = r.start.saturating_sub(guard);
            let hi = (r.end + guard).min(len.saturating_sub(1));
            for l in labels.iter_mut().take(hi + 1).skip(lo) {
                if *l == Some(Label::Normal) {
                    *l = None;
                }
            }
        }
        labels
    }
}

pub fn parse_annotations(text: &str, series_len: usize) -> Result<AnnotationSet> {
    let mut ranges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(Error::parse(n, format!("expected `start,end,label`, got {line:?}")));
        }
        let start: usize = f[0].parse().map_err(|_| Error::parse(n, format!("bad start {:?}", f[0])))?;
        let end: usize = f[1].parse().map_err(|_| Error::parse(n, format!("bad end {:?}", f[1])))?;
        let label: Label = f[2].parse().map_err(|m: String| Error::parse(n, m))?;
        if start > end {
            return Err(Error::parse(n, format!("range start {start} after end {end}")));
        }
        if end >= series_len {
            return Err(Error::parse(n, format!("range end {end} beyond series length {series_len}")));
        }
        ranges.push((n, AnnotationRange { start, end, label }));
    }
    ranges.sort_by_key(|(_, r)| r.start);
    for pair in ranges.windows(2) {
        let (_, a) = pair[0];
        let (n, b) = pair[1];
        if b.start <= a.end {
            return Err(Error::parse(n, format!("range {}..={} overlaps {}..={}", b.start, b.end, a.start, a.end)));
        }
    }
    Ok(AnnotationSet {
        ranges: ranges.into_iter().map(|(_, r)| r).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    /// Peak amplitude in mV relative to the baseline.
    pub amplitude: f64,
    /// Position within the beat, seconds.
    pub center: f64,
    /// Gaussian standard deviation, seconds.
    pub width: f64,
}

impl Bump {
    fn at(&self, t: f64) -> f64 {
        self.amplitude * (-0.5 * ((t - self.center) / self.width).powi(2)).exp()
    }
}

/// Beat template and anomaly distortion of the synthetic ECG.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticEcgConfig {
    pub sample_rate: f64,
    pub samples_per_beat: usize,
    pub baseline: f64,
    pub p_wave: Bump,
    pub qrs: Bump,
    pub t_wave: Bump,
    /// Depth of the inverted QRS below the baseline, drawn uniformly.
    pub anomaly_depth: (f64, f64),
    /// Widening factor of the inverted QRS, drawn uniformly.
    pub anomaly_widening: (f64, f64),
    /// Samples of an anomalous beat deviating from the normal template by
    /// more than this (mV) are annotated abnormal.
    pub annotate_deviation: f64,
}

impl Default for SyntheticEcgConfig {
    fn default() -> Self {
        Self {
            sample_rate: 128.0,
            samples_per_beat: 96,
            baseline: -0.9,
            p_wave: Bump { amplitude: 0.15, center: 0.12, width: 0.025 },
            qrs: Bump { amplitude: 1.3, center: 0.30, width: 0.02 },
            t_wave: Bump { amplitude: 0.35, center: 0.55, width: 0.045 },
            anomaly_depth: (0.95, 1.05),
            anomaly_widening: (2.0, 3.0),
            annotate_deviation: 0.6,
        }
    }
}

impl SyntheticEcgConfig {
    fn beat(&self, qrs: Bump) -> Vec<f64> {
        (0..self.samples_per_beat)
            .map(|i| {
                let t = i as f64 / self.sample_rate;
                self.baseline + self.p_wave.at(t) + qrs.at(t) + self.t_wave.at(t)
            })
            .collect()
    }

    pub fn normal_beat(&self) -> Vec<f64> {
        self.beat(self.qrs)
    }
}

/// Periodic synthetic ECG with the beats at `anomalies` (beat indices)
/// replaced by an inverted, widened QRS complex, plus matching annotations.
pub fn make_synthetic_ecg(
    n_beats: usize,
    anomalies: &[usize],
    seed: u64,
) -> Result<(EcgSeries, AnnotationSet)> {
    make_synthetic_ecg_with(&SyntheticEcgConfig::default(), n_beats, anomalies, seed)
}

pub fn make_synthetic_ecg_with(
    cfg: &SyntheticEcgConfig,
    n_beats: usize,
    anomalies: &[usize],
    seed: u64,
) -> Result<(EcgSeries, AnnotationSet)> {
    if n_beats < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 beats, got {n_beats}")));
    }
    if let Some(bad) = anomalies.iter().find(|&&b| b >= n_beats) {
        return Err(Error::InvalidArgument(format!(
            "anomaly at beat {bad} outside 0..{n_beats}"
        )));
    }
    let mut anomalies = anomalies.to_vec();
    anomalies.sort_unstable();
    anomalies.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = cfg.normal_beat();
    let spb = cfg.samples_per_beat;
    let mut values = Vec::with_capacity(n_beats * spb);
    let mut abnormal_ranges = Vec::new();
    for b in 0..n_beats {
        if anomalies.binary_search(&b).is_ok() {
            let depth = rng.gen_range(cfg.anomaly_depth.0..=cfg.anomaly_depth.1);
            let widening = rng.gen_range(cfg.anomaly_widening.0..=cfg.anomaly_widening.1);
            let qrs = Bump {
                amplitude: -depth,
                width: cfg.qrs.width * widening,
                ..cfg.qrs
            };
            let beat = cfg.beat(qrs);
            let deviating: Vec<usize> = (0..spb)
                .filter(|&i| (beat[i] - normal[i]).abs() > cfg.annotate_deviation)
                .collect();
            if let (Some(&lo), Some(&hi)) = (deviating.first(), deviating.last()) {
                abnormal_ranges.push((b * spb + lo, b * spb + hi));
            }
            values.extend(beat);
        } else {
            values.extend_from_slice(&normal);
        }
    }

    let len = values.len();
    let mut ranges = Vec::new();
    let mut next = 0;
    for (lo, hi) in abnormal_ranges {
        if lo > next {
            ranges.push(AnnotationRange { start: next, end: lo - 1, label: Label::Normal });
        }
        ranges.push(AnnotationRange { start: lo, end: hi, label: Label::Abnormal });
        next = hi + 1;
    }
    if next < len {
        ranges.push(AnnotationRange { start: next, end: len - 1, label: Label::Normal });
    }
    Ok((
        EcgSeries {
            values,
            sample_rate: cfg.sample_rate,
            record_id: format!("synthetic-{seed}"),
        },
        AnnotationSet { ranges },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_lines() {
        let s = parse_ecg_csv("0,0.5\n1,-2.0\n", 128.0, "t").unwrap();
        assert_eq!(s.values, vec![0.5, -2.0]);
    }

    #[test]
    fn bad_index_field_is_located() {
        match parse_ecg_csv("abc,0.5\n", 128.0, "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        match parse_ecg_csv("0,0.1\n1,0.2\n2,x\n", 128.0, "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(parse_ecg_csv("", 128.0, "t").is_err());
        assert!(parse_ecg_csv("time,mV\n", 128.0, "t").is_err());
        assert!(parse_ecg_csv("0,NaN\n", 128.0, "t").is_err());
        assert!(parse_ecg_csv("0,inf\n", 128.0, "t").is_err());
    }

    #[test]
    fn physiobank_export_with_headers_and_second_channel() {
        let text = "'Elapsed time','MLII','V1'\r\n'hh:mm:ss.mmm','mV','mV'\r\n'0:00.000',-0.145,-0.065\r\n'0:00.008',-0.145,-0.065\r\n";
        let s = parse_ecg_csv(text, 128.0, "14046").unwrap();
        assert_eq!(s.values, vec![-0.145, -0.145]);
        assert_eq!(s.record_id, "14046");
    }

    #[test]
    fn annotations_parse_and_validate() {
        let a = parse_annotations("0,99,normal\n100,140,abnormal\n", 200).unwrap();
        assert_eq!(a.ranges.len(), 2);
        assert_eq!(a.label_at(120), Some(Label::Abnormal));
        assert_eq!(a.label_at(150), None);

        let order = parse_annotations("50,40,normal\n", 100).unwrap_err();
        assert!(order.to_string().contains("after end"));
        let overlap = parse_annotations("0,10,normal\n5,20,abnormal\n", 100).unwrap_err();
        assert!(matches!(overlap, Error::Parse { line: 2, .. }));
        assert!(parse_annotations("0,10,weird\n", 100).is_err());
        assert!(parse_annotations("0,100,normal\n", 100).is_err());
    }

    #[test]
    fn guard_band_unlabels_neighbours() {
        let a = parse_annotations("0,9,normal\n10,12,abnormal\n13,20,normal\n", 21).unwrap();
        let l = a.sample_labels(21, 2);
        assert_eq!(l[7], Some(Label::Normal));
        assert_eq!(l[8], None);
        assert_eq!(l[10], Some(Label::Abnormal));
        assert_eq!(l[14], None);
        assert_eq!(l[15], Some(Label::Normal));
        assert_eq!(a.sample_labels(21, 0)[9], Some(Label::Normal));
    }

    #[test]
    fn synthetic_without_anomalies_is_all_normal_and_periodic() {
        let (s, a) = make_synthetic_ecg(5, &[], 1).unwrap();
        assert_eq!(a.ranges.len(), 1);
        assert_eq!(a.ranges[0].label, Label::Normal);
        let spb = SyntheticEcgConfig::default().samples_per_beat;
        for k in spb..s.len() {
            assert_eq!(s.values[k], s.values[k - spb]);
        }
    }

    #[test]
    fn synthetic_stays_in_encoder_window() {
        let (s, a) = make_synthetic_ecg(8, &[2, 5], 3).unwrap();
        let max = s.values.iter().copied().fold(f64::MIN, f64::max);
        let min = s.values.iter().copied().fold(f64::MAX, f64::min);
        assert!(max <= 0.5 && min >= -2.0, "{min} {max}");
        assert_eq!(a.ranges.iter().filter(|r| r.label == Label::Abnormal).count(), 2);
        let text = a.to_text();
        assert_eq!(parse_annotations(&text, s.len()).unwrap(), a);
    }

    #[test]
    fn synthetic_errors_and_determinism() {
        assert!(make_synthetic_ecg(1, &[], 0).is_err());
        assert!(make_synthetic_ecg(4, &[4], 0).is_err());
        assert_eq!(make_synthetic_ecg(6, &[3], 9).unwrap(), make_synthetic_ecg(6, &[3], 9).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let (s, _) = make_synthetic_ecg(2, &[1], 4).unwrap();
        let back = parse_ecg_csv(&s.to_csv(), s.sample_rate, &s.record_id).unwrap();
        assert_eq!(back, s);
    }
}
