//! Regression-based EVSI: regress incremental net benefit on summaries of
//! data simulated at each PSA row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evppi::{InbRegression, DEFAULT_BOOTSTRAP};
use crate::matrix::Matrix;
use crate::metamodel::{GamConfig, MAX_COVARIATES};
use crate::model::{simulate_with, summarize_dataset, FutureDataset, StudyDesign};
use crate::parallel::try_map_indexed;
use crate::psa::{compute_incremental_net_benefit, compute_net_benefit, PsaDataset, ReferenceStrategy, WtpThreshold};
use crate::rng::{stream, Purpose};
use crate::stats;
use crate::voi::{Method, VoiEstimate};

use super::{evsi_from_posterior_means, phi_columns, PosteriorMeanMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbConfig {
    pub gam: GamConfig,
    /// Bootstrap replicates for the standard error; 0 reports the per-row
    /// standard error.
    pub bootstrap: usize,
    pub seed: u64,
}

impl RbConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            gam: GamConfig::default(),
            bootstrap: DEFAULT_BOOTSTRAP,
            seed,
        }
    }
}

/// Data summary used as regression covariates; one value per outcome.
pub type Summarizer = dyn Fn(&StudyDesign, &FutureDataset) -> Result<Vec<f64>> + Sync;

fn default_summary(design: &StudyDesign, x: &FutureDataset) -> Result<Vec<f64>> {
    Ok(summarize_dataset(design, x)?.values)
}

pub fn evsi_rb(ds: &PsaDataset, design: &StudyDesign, lambda: WtpThreshold, seed: u64) -> Result<VoiEstimate> {
    evsi_rb_with(ds, design, lambda, &RbConfig::with_seed(seed))
}

pub fn evsi_rb_with(ds: &PsaDataset, design: &StudyDesign, lambda: WtpThreshold, config: &RbConfig) -> Result<VoiEstimate> {
    evsi_rb_with_summary(ds, design, lambda, config, &default_summary)
}

/// Regression-based EVSI with a caller-supplied summary. Dataset `s` is
/// simulated from the stream `(seed, FutureData, s)`.
pub fn evsi_rb_with_summary(
    ds: &PsaDataset,
    design: &StudyDesign,
    lambda: WtpThreshold,
    config: &RbConfig,
    summarize: &Summarizer,
) -> Result<VoiEstimate> {
    if design.n_outcomes() > MAX_COVARIATES {
        return Err(Error::Dimension(format!(
            "the design has {} outcomes; regression on data summaries is unreliable \
             beyond five or six, so at most {MAX_COVARIATES} are accepted. Reduce the \
             summaries or use importance sampling or moment matching",
            design.n_outcomes()
        )));
    }
    let phi = phi_columns(ds, design)?;
    let s = ds.n_samples();
    let rows = try_map_indexed(s, |r| {
        let mut rng = stream(config.seed, Purpose::FutureData, r as u64);
        let x = simulate_with(design, phi.row(r), &mut rng)?;
        summarize(design, &x)
    })?;
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|w| w.len() != width) || width == 0 {
        return Err(Error::Argument("summaries must have one fixed, non-zero length".into()));
    }
    let w = Matrix::from_rows(&rows);
    let nb = compute_net_benefit(ds, lambda)?;
    let inb = compute_incremental_net_benefit(&nb, ReferenceStrategy::Auto)?;
    let regression = InbRegression::fit(&w, &inb, &config.gam)?;
    let mu = PosteriorMeanMatrix::new(regression.fitted().clone(), inb.reference)?;
    let mut est = evsi_from_posterior_means(&mu, Method::RegressionBased).with_n(design.sample_size());
    est.note("per_row_se", est.se());
    if config.bootstrap > 0 {
        let se = regression.bootstrap_se(&w, &inb, &config.gam, config.bootstrap, config.seed)?;
        est.mc_se = Some(se);
        est.note("bootstrap_replicates", config.bootstrap as f64);
    }
    for m in regression.warnings() {
        est.warn(m.clone());
    }
    if let Some(m) = (0..inb.values.cols()).find_map(|c| regression.metamodel(c)) {
        est.note("r_squared", m.r_squared());
        est.note("edf", m.edf());
    }
    est.note("summary_sd", stats::std_dev(&w.column(0)));
    Ok(est)
}
