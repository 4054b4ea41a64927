//! Residual checks for a fitted metamodel: no systematic bias, no
//! structure against the fitted values, no gross outliers.

use serde::{Deserialize, Serialize};

use crate::stats;

use super::Metamodel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DiagnosticStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub residual_mean: f64,
    pub residual_sd: f64,
    pub response_sd: f64,
    /// Correlation of residuals with fitted values.
    pub residual_fitted_correlation: f64,
    /// `S · R²` of squared residuals regressed on fitted values; roughly
    /// chi-squared with one degree of freedom under constant variance.
    pub heteroscedasticity: f64,
    /// Residuals more than 4 standard deviations from zero.
    pub outliers: usize,
    pub status: DiagnosticStatus,
    pub messages: Vec<String>,
}

/// `|residual mean|` above this fraction of the response SD fails the fit.
pub const FAIL_MEAN_RATIO: f64 = 1e-6;
/// `|residual mean|` above this fraction of the response SD warns.
pub const WARN_MEAN_RATIO: f64 = 1e-8;
pub const WARN_CORRELATION: f64 = 0.05;
/// 99.9% point of chi-squared with one degree of freedom.
pub const WARN_HETEROSCEDASTICITY: f64 = 10.83;
pub const WARN_OUTLIER_FRACTION: f64 = 0.001;

pub fn residual_diagnostics(m: &Metamodel) -> ResidualDiagnostics {
    let y = m.response();
    let f = m.fitted();
    let n = y.len();
    let resid: Vec<f64> = y.iter().zip(f).map(|(a, b)| a - b).collect();
    let residual_mean = stats::mean(&resid);
    let residual_sd = stats::std_dev(&resid);
    let response_sd = stats::std_dev(y);
    let mut messages = Vec::new();
    let mut status = DiagnosticStatus::Pass;

    if f.iter().any(|v| !v.is_finite()) {
        return ResidualDiagnostics {
            residual_mean,
            residual_sd,
            response_sd,
            residual_fitted_correlation: f64::NAN,
            heteroscedasticity: f64::NAN,
            outliers: 0,
            status: DiagnosticStatus::Fail,
            messages: vec!["non-finite fitted values".into()],
        };
    }

    // Residuals at rounding level carry no information about misfit.
    let exact = response_sd == 0.0 || residual_sd <= 1e-8 * response_sd;
    let (corr, bp, outliers) = if exact {
        (0.0, 0.0, 0)
    } else {
        let corr = stats::correlation(&resid, f);
        let sq: Vec<f64> = resid.iter().map(|r| r * r).collect();
        let r = stats::correlation(&sq, f);
        let bp = if r.is_finite() { n as f64 * r * r } else { 0.0 };
        let outliers = resid.iter().filter(|r| (**r - residual_mean).abs() > 4.0 * residual_sd).count();
        (if corr.is_finite() { corr } else { 0.0 }, bp, outliers)
    };

    let scale = if response_sd > 0.0 { response_sd } else { 1.0 };
    if residual_mean.abs() > FAIL_MEAN_RATIO * scale {
        status = DiagnosticStatus::Fail;
        messages.push(format!(
            "residual mean {residual_mean:.3e} exceeds {FAIL_MEAN_RATIO:e} of the response SD"
        ));
    } else if residual_mean.abs() >= WARN_MEAN_RATIO * scale && !exact {
        status = DiagnosticStatus::Warn;
        messages.push(format!("residual mean {residual_mean:.3e} is not negligible"));
    }
    let mut warn = |msg: String| {
        if status == DiagnosticStatus::Pass {
            status = DiagnosticStatus::Warn;
        }
        messages.push(msg);
    };
    if corr.abs() >= WARN_CORRELATION {
        warn(format!("residuals correlate with fitted values (r = {corr:.3})"));
    }
    if bp > WARN_HETEROSCEDASTICITY {
        warn(format!(
            "residual variance changes with the fitted value (S·R² = {bp:.1}); \
             the regression may be missing a covariate or interaction"
        ));
    }
    if n > 0 && outliers as f64 / n as f64 > WARN_OUTLIER_FRACTION {
        warn(format!("{outliers} residuals beyond 4 standard deviations"));
    }
    ResidualDiagnostics {
        residual_mean,
        residual_sd,
        response_sd,
        residual_fitted_correlation: corr,
        heteroscedasticity: bp,
        outliers,
        status,
        messages,
    }
}
