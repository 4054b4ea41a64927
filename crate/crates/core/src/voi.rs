//! Value-of-information results and the shared "mean of max minus max of
//! means" estimator used by EVPI, EVPPI and every EVSI method.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::matrix::{argmax, Matrix};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VoiKind {
    Evpi,
    Evppi,
    Evsi,
}

/// Which estimator produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Direct computation from the PSA sample.
    #[serde(rename = "psa")]
    Psa,
    /// Regression (GAM) metamodel on the parameters of interest.
    #[serde(rename = "regression")]
    Regression,
    #[serde(rename = "rb")]
    RegressionBased,
    #[serde(rename = "is")]
    ImportanceSampling,
    #[serde(rename = "ga")]
    GaussianApproximation,
    #[serde(rename = "mm")]
    MomentMatching,
    #[serde(rename = "oracle")]
    NestedMonteCarlo,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Psa => "psa",
            Method::Regression => "regression",
            Method::RegressionBased => "rb",
            Method::ImportanceSampling => "is",
            Method::GaussianApproximation => "ga",
            Method::MomentMatching => "mm",
            Method::NestedMonteCarlo => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Free-form diagnostics attached to an estimate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Estimate before clamping at zero.
    pub raw_value: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub values: BTreeMap<String, f64>,
}

/// A value-of-information result in currency units per person.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoiEstimate {
    pub kind: VoiKind,
    pub method: Method,
    #[serde(rename = "N")]
    pub design_n: Option<u64>,
    pub value: f64,
    pub mc_se: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl VoiEstimate {
    pub fn from_gain(kind: VoiKind, method: Method, gain: DecisionGain) -> Self {
        Self {
            kind,
            method,
            design_n: None,
            value: gain.value,
            mc_se: Some(gain.std_error),
            diagnostics: Diagnostics {
                raw_value: gain.raw,
                ..Diagnostics::default()
            },
        }
    }

    pub fn with_n(mut self, n: u64) -> Self {
        self.design_n = Some(n);
        self
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.diagnostics.warnings.push(message.into());
    }

    pub fn note(&mut self, key: &str, value: f64) {
        self.diagnostics.values.insert(key.to_string(), value);
    }

    /// Standard error, zero when absent.
    pub fn se(&self) -> f64 {
        self.mc_se.unwrap_or(0.0)
    }
}

/// Result of [`decision_gain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionGain {
    /// Clamped at zero.
    pub value: f64,
    /// `mean_s max_t m[s][t] - max_t mean_s m[s][t]` before clamping.
    pub raw: f64,
    /// Standard error of the mean per-row regret against the strategy that is
    /// optimal on average.
    pub std_error: f64,
    /// Strategy that is optimal on average (ties to the lowest index).
    pub optimal: usize,
}

/// `(1/S) Σ_s max_t m[s][t] - max_t (1/S) Σ_s m[s][t]`.
///
/// Sums are accumulated sequentially in row order, so the result is
/// reproducible bit-for-bit. Negative values arising from rounding are
/// clamped to zero; the pre-clamp value is kept in `raw`.
pub fn decision_gain(m: &Matrix) -> DecisionGain {
    let s = m.rows();
    let mut sum_max = 0.0;
    let mut row_max = Vec::with_capacity(s);
    for r in 0..s {
        let row = m.row(r);
        let mut best = row[0];
        for &v in &row[1..] {
            if v > best {
                best = v;
            }
        }
        sum_max += best;
        row_max.push(best);
    }
    let first = sum_max / s as f64;
    let means = m.column_means();
    let optimal = argmax(&means);
    let second = means[optimal];
    let raw = first - second;
    let regret: Vec<f64> = row_max
        .iter()
        .enumerate()
        .map(|(r, &mx)| mx - m.get(r, optimal))
        .collect();
    DecisionGain {
        value: raw.max(0.0),
        raw,
        std_error: stats::std_error(&regret),
        optimal,
    }
}
