//! Importance-sampling EVSI: reweight the conditional expected net benefits
//! of the PSA rows by the likelihood of each simulated dataset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{argmax, Matrix};
use crate::model::design::log_likelihood_unchecked;
use crate::model::{simulate_with, FutureDataset, StudyDesign};
use crate::parallel::try_map_indexed;
use crate::psa::{compute_net_benefit, AugmentedPsaDataset, WtpThreshold};
use crate::rng::{stream, Purpose};
use crate::stats;
use crate::voi::{Method, VoiEstimate};

use super::{evsi_from_posterior_means, phi_columns, PosteriorMeanMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsConfig {
    pub seed: u64,
    /// Warn when the median effective sample size falls below this share
    /// of the PSA rows.
    pub min_ess_fraction: f64,
}

impl IsConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            min_ess_fraction: 0.01,
        }
    }
}

/// Self-normalised likelihood weights over the PSA rows for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct IsWeights {
    pub weights: Vec<f64>,
    /// `1 / Σ w²`.
    pub ess: f64,
}

/// Weights `l_r ∝ p(x | φ_r)` over the rows of `phi` (columns aligned with
/// `design.phi_names()`), normalised in log space.
pub fn importance_weights(design: &StudyDesign, x: &FutureDataset, phi: &Matrix) -> Result<IsWeights> {
    let comps = design.outcome_components();
    let mut w: Vec<f64> = (0..phi.rows())
        .map(|r| log_likelihood_unchecked(design, &comps, x, phi.row(r)))
        .collect();
    if stats::normalize_log_weights(&mut w).is_none() {
        return Err(Error::Degenerate { n: x.sample_size });
    }
    let ess = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
    Ok(IsWeights { weights: w, ess })
}

pub fn evsi_is(aug: &AugmentedPsaDataset, design: &StudyDesign, lambda: WtpThreshold, seed: u64) -> Result<VoiEstimate> {
    evsi_is_with(aug, design, lambda, &IsConfig::with_seed(seed))
}

/// Dataset `s` is simulated at `φ_s` from the stream `(seed, FutureData, s)`.
pub fn evsi_is_with(
    aug: &AugmentedPsaDataset,
    design: &StudyDesign,
    lambda: WtpThreshold,
    config: &IsConfig,
) -> Result<VoiEstimate> {
    check_augmented(aug, design, lambda)?;
    let phi = phi_columns(&aug.base, design)?;
    let s = phi.rows();
    let reference = argmax(&aug.nmb.column_means());
    let eta = aug.incremental_eta(reference)?.values;
    let t = eta.cols();
    let rows = try_map_indexed(s, |r| -> Result<(Vec<f64>, f64, f64)> {
        let mut rng = stream(config.seed, Purpose::FutureData, r as u64);
        let x = simulate_with(design, phi.row(r), &mut rng)?;
        let w = importance_weights(design, &x, &phi)?;
        let mut mu = vec![0.0; t];
        let mut total = 0.0;
        for (q, &l) in w.weights.iter().enumerate() {
            total += l;
            if l == 0.0 {
                continue;
            }
            for (m, e) in mu.iter_mut().zip(eta.row(q)) {
                *m += l * e;
            }
        }
        mu[reference] = 0.0;
        Ok((mu, w.ess, (total - 1.0).abs()))
    })?;
    let mut mu = Matrix::zeros(s, t);
    let mut ess = Vec::with_capacity(s);
    let mut max_dev: f64 = 0.0;
    for (r, (m, e, dev)) in rows.into_iter().enumerate() {
        mu.row_mut(r).copy_from_slice(&m);
        ess.push(e);
        max_dev = max_dev.max(dev);
    }
    let mu = PosteriorMeanMatrix::new(mu, reference)?;
    let mut est = evsi_from_posterior_means(&mu, Method::ImportanceSampling).with_n(design.sample_size());
    ess.sort_by(f64::total_cmp);
    let median = stats::quantile_sorted(&ess, 0.5);
    est.note("median_ess", median);
    est.note("min_ess", ess[0]);
    est.note("max_weight_sum_error", max_dev);
    if median < config.min_ess_fraction * s as f64 {
        est.warn(format!(
            "median importance-sampling effective sample size {median:.1} is below {:.0}% of the \
             {s} PSA rows; the likelihood concentrates on few rows at N = {} and the estimate \
             may be unreliable",
            100.0 * config.min_ess_fraction,
            design.sample_size()
        ));
    }
    Ok(est)
}

/// The augmented dataset must carry η for exactly the design's φ, at this
/// threshold.
pub(crate) fn check_augmented(aug: &AugmentedPsaDataset, design: &StudyDesign, lambda: WtpThreshold) -> Result<()> {
    let mut want = design.phi_names();
    let mut have = aug.phi_names.clone();
    want.sort();
    have.sort();
    if want != have {
        return Err(Error::Argument(format!(
            "augmented dataset conditions on {:?} but the design informs {:?}",
            aug.phi_names,
            design.phi_names()
        )));
    }
    let nb = compute_net_benefit(&aug.base, lambda)?;
    let scale = nb.values.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let same = nb
        .values
        .as_slice()
        .iter()
        .zip(aug.nmb.as_slice())
        .all(|(a, b)| (a - b).abs() <= 1e-9 * scale);
    if !same {
        return Err(Error::Argument(
            "augmented dataset net benefit was computed at a different willingness-to-pay threshold".into(),
        ));
    }
    Ok(())
}
