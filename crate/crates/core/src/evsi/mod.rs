//! Expected value of sample information.
//!
//! Every method reduces to a matrix of posterior expected incremental net
//! benefits `μ_t(X_s)`, one row per simulated dataset, from which EVSI is
//! the mean of row maxima minus the maximum of column means.

mod ess;
mod ga;
mod is;
mod mm;
mod oracle;
mod rb;

use std::io::Write;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::StudyDesign;
use crate::psa::{format_decimal, PsaDataset};
use crate::voi::{decision_gain, Method, VoiEstimate, VoiKind};

pub use ess::{
    ess_direct, ess_direct_with, ess_from_posterior_means, ess_from_summary, ess_posterior_mean_plugin,
    ess_summary_plugin, EssEstimate, EssMethod, GammaPoissonConvention, PosteriorMeanConfig, WEAK_PRIOR_RATIO,
};
pub use ga::{evsi_ga, evsi_ga_from_fit, ga_rescale, GaWeight};
pub use is::{evsi_is, evsi_is_with, importance_weights, IsConfig, IsWeights};
pub use mm::{evsi_mm, evsi_mm_detailed, MmConfig, MmVarianceLedger, MmVarianceScale, DEFAULT_Q};
pub use oracle::{evsi_oracle, evsi_oracle_with, OracleConfig};
pub use rb::{evsi_rb, evsi_rb_with, evsi_rb_with_summary, RbConfig};

/// `μ_t(X_s)` on the incremental scale; the reference column is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMeanMatrix {
    values: Matrix,
    reference: usize,
}

impl PosteriorMeanMatrix {
    pub fn new(values: Matrix, reference: usize) -> Result<Self> {
        if reference >= values.cols() {
            return Err(Error::Argument(format!(
                "reference strategy {} out of range 1..{}",
                reference + 1,
                values.cols()
            )));
        }
        if values.rows() == 0 {
            return Err(Error::Argument("no simulated datasets".into()));
        }
        if !values.all_finite() {
            return Err(Error::Numeric("non-finite posterior mean".into()));
        }
        if (0..values.rows()).any(|r| values.get(r, reference) != 0.0) {
            return Err(Error::Argument("reference column of posterior means must be zero".into()));
        }
        Ok(Self { values, reference })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn reference(&self) -> usize {
        self.reference
    }
}

/// `(1/S) Σ_s max_t μ_t(X_s) − max_t (1/S) Σ_s μ_t(X_s)`.
pub fn evsi_from_posterior_means(mu: &PosteriorMeanMatrix, method: Method) -> VoiEstimate {
    VoiEstimate::from_gain(VoiKind::Evsi, method, decision_gain(&mu.values))
}

/// Columns of `ds` holding the design's parameters of interest, in
/// `design.phi_names()` order.
pub(crate) fn phi_columns(ds: &PsaDataset, design: &StudyDesign) -> Result<Matrix> {
    ds.parameter_columns(&design.phi_names())
}

pub(crate) fn warn_small_n(est: &mut VoiEstimate, n: u64) {
    if n < 10 {
        est.warn(format!(
            "N = {n} is below 10; approximations based on large-sample behaviour may be poor"
        ));
    }
}

/// Writes `method,N,evsi,se` rows for plotting EVSI against sample size.
pub fn write_evsi_csv<W: Write>(estimates: &[VoiEstimate], mut writer: W) -> Result<()> {
    writeln!(writer, "method,N,evsi,se")?;
    for e in estimates {
        let n = e.design_n.map(|n| n.to_string()).unwrap_or_default();
        let se = e.mc_se.map(format_decimal).unwrap_or_default();
        writeln!(writer, "{},{},{},{}", e.method, n, format_decimal(e.value), se)?;
    }
    Ok(())
}

/// JSON record of an estimate: `{kind, method, N, value, mc_se, diagnostics}`.
pub fn estimate_json(e: &VoiEstimate) -> String {
    serde_json::to_string(e).expect("estimates serialise")
}
