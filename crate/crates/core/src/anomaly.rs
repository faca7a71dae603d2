//! Deviation scores, the detection margin, and threshold detection.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Normal,
    Abnormal,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "normal" => Ok(Label::Normal),
            "abnormal" => Ok(Label::Abnormal),
            _ => Err(format!("unknown label {s:?}")),
        }
    }
}

/// Deviation values with an optional label each; unlabeled points take no
/// part in the margin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotatedSeries {
    pub d: Vec<f64>,
    pub labels: Vec<Option<Label>>,
}

impl AnnotatedSeries {
    pub fn new(d: Vec<f64>, labels: Vec<Option<Label>>) -> Self {
        assert_eq!(d.len(), labels.len(), "one label slot per deviation");
        Self { d, labels }
    }

    fn class(&self, label: Label) -> impl Iterator<Item = f64> + '_ {
        self.d
            .iter()
            .zip(&self.labels)
            .filter(move |(_, l)| **l == Some(label))
            .map(|(d, _)| *d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginResult {
    pub d_no_max: f64,
    pub d_ab_min: f64,
    /// `d_ab_min - d_no_max`; negative when the classes overlap.
    pub w_thr: f64,
    /// Midpoint threshold, present only when the margin is positive.
    pub f_thr: Option<f64>,
}

pub fn deviation(f_out_k: f64, f_in_next: f64) -> f64 {
    (f_out_k - f_in_next).abs()
}

pub fn margin(series: &AnnotatedSeries) -> Result<MarginResult> {
    let d_no_max = series
        .class(Label::Normal)
        .reduce(f64::max)
        .ok_or(Error::MissingLabel("normal"))?;
    let d_ab_min = series
        .class(Label::Abnormal)
        .reduce(f64::min)
        .ok_or(Error::MissingLabel("abnormal"))?;
    let w_thr = d_ab_min - d_no_max;
    Ok(MarginResult {
        d_no_max,
        d_ab_min,
        w_thr,
        f_thr: (w_thr > 0.0).then(|| (d_no_max + d_ab_min) / 2.0),
    })
}

/// True iff `d` strictly exceeds the judgment threshold.
pub fn detect(d: f64, f_thr: f64) -> bool {
    d > f_thr
}
