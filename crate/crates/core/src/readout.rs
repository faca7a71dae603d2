//! Linear rate readout fitted by ridge regression.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Columns whose centred sum of squares is below this are treated as
/// constant and excluded from the solve (weight 0).
const CONSTANT_COLUMN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Absolute ridge penalty the model was fitted with.
    pub lambda: f64,
    /// Training residual sum of squares.
    pub residual: f64,
}

impl ReadoutModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            lambda: 0.0,
            residual: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn raw_output(&self, rates: &[f64]) -> f64 {
        self.weights.iter().zip(rates).map(|(w, r)| w * r).sum::<f64>() + self.bias
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# srnn-readout lambda={} dim={} residual={}\nbias {}\n",
            self.lambda,
            self.dim(),
            self.residual,
            self.bias
        );
        for w in &self.weights {
            let _ = writeln!(out, "{w}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty readout file"))?;
        let body = header
            .strip_prefix("# srnn-readout")
            .ok_or_else(|| Error::parse(1, "missing srnn-readout header"))?;
        let (mut lambda, mut dim, mut residual) = (None, None, 0.0);
        for kv in body.split_whitespace() {
            let bad = || Error::parse(1, format!("bad header field {kv:?}"));
            match kv.split_once('=').ok_or_else(bad)? {
                ("lambda", v) => lambda = Some(v.parse::<f64>().map_err(|_| bad())?),
                ("dim", v) => dim = Some(v.parse::<usize>().map_err(|_| bad())?),
                ("residual", v) => residual = v.parse::<f64>().map_err(|_| bad())?,
                _ => return Err(bad()),
            }
        }
        let lambda = lambda.ok_or_else(|| Error::parse(1, "header lacks lambda"))?;
        let dim = dim.ok_or_else(|| Error::parse(1, "header lacks dim"))?;
        let (n, bias_line) = lines.next().ok_or_else(|| Error::parse(2, "missing bias line"))?;
        let bias = bias_line
            .strip_prefix("bias ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::parse(n + 1, "expected `bias <value>`"))?;
        let weights = lines
            .map(|(n, l)| l.trim().parse::<f64>().map_err(|_| Error::parse(n + 1, "bad weight")))
            .collect::<Result<Vec<_>>>()?;
        if weights.len() != dim {
            return Err(Error::parse(1, format!("header says dim={dim}, found {} weights", weights.len())));
        }
        Ok(Self {
            weights,
            bias,
            lambda,
            residual,
        })
    }
}

/// Mean centred squared norm of the feature columns; multiply a relative
/// ridge parameter by this to get an absolute penalty.
pub fn feature_scale(features: &[Vec<f64>]) -> f64 {
    let n = features.len();
    let p = features.first().map_or(0, Vec::len);
    if n == 0 || p == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for j in 0..p {
        let mean = features.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        total += features.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>();
    }
    total / p as f64
}

/// Minimizes `|X w + b - y|^2 + lambda |w|^2` with the bias unpenalized.
///
/// Row `k` of `features` must be aligned with `targets[k]`.
pub fn fit_readout(features: &[Vec<f64>], targets: &[f64], lambda: f64) -> Result<ReadoutModel> {
    let n = features.len();
    if n == 0 || n != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "{n} feature rows for {} targets",
            targets.len()
        )));
    }
    let p = features[0].len();
    if features.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidArgument("ragged feature matrix".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("ridge parameter {lambda} must be >= 0")));
    }
    if features.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite training data".into()));
    }

    let x = DMatrix::from_fn(n, p, |i, j| features[i][j]);
    let y = DVector::from_column_slice(targets);
    let x_mean = x.row_mean();
    let y_mean = y.mean();
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= &x_mean;
    }
    let yc = y.add_scalar(-y_mean);

    let active: Vec<usize> = (0..p)
        .filter(|&j| xc.column(j).norm_squared() > CONSTANT_COLUMN_EPS)
        .collect();
    let mut weights = vec![0.0; p];
    if !active.is_empty() {
        let xa = xc.select_columns(&active);
        let mut gram = xa.transpose() * &xa;
        for i in 0..active.len() {
            gram[(i, i)] += lambda;
        }
        let rhs = xa.transpose() * &yc;
        let max_diag = (0..active.len()).map(|i| gram[(i, i)]).fold(0.0, f64::max);
        let chol = gram.cholesky().ok_or_else(|| {
            Error::Singular(format!("{} active features, lambda = {lambda}", active.len()))
        })?;
        let min_pivot = chol.l_dirty().diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
        if lambda == 0.0 && min_pivot < 1e-12 * max_diag {
            return Err(Error::Singular(format!(
                "collinear features among {} active columns",
                active.len()
            )));
        }
        let solution = chol.solve(&rhs);
        for (k, &j) in active.iter().enumerate() {
            weights[j] = solution[k];
        }
    }
    let bias = y_mean - x_mean.iter().zip(&weights).map(|(m, w)| m * w).sum::<f64>();
    let mut model = ReadoutModel {
        weights,
        bias,
        lambda,
        residual: 0.0,
    };
    model.residual = features
        .iter()
        .zip(targets)
        .map(|(r, t)| (model.raw_output(r) - t).powi(2))
        .sum();
    Ok(model)
}

/// Predicted rate, clipped at 0 Hz.
pub fn predict(model: &ReadoutModel, rates: &[f64]) -> f64 {
    debug_assert_eq!(rates.len(), model.dim());
    model.raw_output(rates).max(0.0)
}
