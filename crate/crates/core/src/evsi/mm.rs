//! Moment-matching EVSI: estimate the preposterior variance of net benefit
//! from a few posterior re-runs of the model and shrink the EVPPI
//! conditional expectations to match it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{argmax, Matrix};
use crate::model::{evaluate_checked, simulate_with, DecisionModel, Metropolis, PosteriorSampler, StudyDesign};
use crate::parallel::try_map_indexed;
use crate::psa::{incremental, AugmentedPsaDataset, ReferenceStrategy, WtpThreshold};
use crate::rng::{stream, Purpose};
use crate::stats;
use crate::voi::{decision_gain, Method, VoiEstimate};

use super::is::check_augmented;
use super::{evsi_from_posterior_means, phi_columns, warn_small_n, PosteriorMeanMatrix};

pub const DEFAULT_Q: usize = 31;
/// EVPPI below this share of EVPI triggers a warning.
const MIN_EVPPI_RATIO: f64 = 0.4;

/// Scale on which the preposterior variance is matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MmVarianceScale {
    /// Variance of each comparator's incremental net benefit.
    Incremental,
    /// Variance of each strategy's own net benefit.
    NetBenefit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmConfig {
    /// Number of quantile points, `30 < q < 50`.
    pub q: usize,
    pub seed: u64,
    pub variance_scale: MmVarianceScale,
    pub metropolis: Metropolis,
}

impl MmConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            q: DEFAULT_Q,
            seed,
            variance_scale: MmVarianceScale::Incremental,
            metropolis: Metropolis::default(),
        }
    }
}

/// Working of the variance match, per strategy where applicable. The
/// reference strategy's entries are zero on the incremental scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmVarianceLedger {
    pub scale: MmVarianceScale,
    /// Parameter values at which data were simulated, one row per point.
    pub points: Vec<Vec<f64>>,
    /// `posterior_variance[q][t]`: variance of net benefit after updating on
    /// the data simulated at point `q`.
    pub posterior_variance: Vec<Vec<f64>>,
    pub prior_variance: Vec<f64>,
    /// `prior − mean_q posterior`, before clamping at zero.
    pub target_raw: Vec<f64>,
    pub target: Vec<f64>,
    pub eta_variance: Vec<f64>,
    /// `sqrt(target / eta_variance)`.
    pub shrinkage: Vec<f64>,
}

pub fn evsi_mm(
    model: &dyn DecisionModel,
    aug: &AugmentedPsaDataset,
    design: &StudyDesign,
    lambda: WtpThreshold,
    q: usize,
    seed: u64,
) -> Result<VoiEstimate> {
    let config = MmConfig {
        q,
        ..MmConfig::with_seed(seed)
    };
    Ok(evsi_mm_detailed(model, aug, design, lambda, &config)?.0)
}

/// Point `q` simulates data from the stream `(seed, MomentMatching, q)` and
/// re-runs the PSA from `(seed, MomentMatchingRerun, q)`.
pub fn evsi_mm_detailed(
    model: &dyn DecisionModel,
    aug: &AugmentedPsaDataset,
    design: &StudyDesign,
    lambda: WtpThreshold,
    config: &MmConfig,
) -> Result<(VoiEstimate, MmVarianceLedger)> {
    let nq = config.q;
    if !(nq > 30 && nq < 50) {
        return Err(Error::Argument(format!("moment matching needs 30 < Q < 50, got {nq}")));
    }
    check_augmented(aug, design, lambda)?;
    design.validate_against(model.parameters())?;
    if model.parameter_names() != aug.base.parameter_names() {
        return Err(Error::Argument("the model's parameters do not match the PSA dataset's".into()));
    }
    let s = aug.base.n_samples();
    let t = aug.nmb.cols();
    let reference = argmax(&aug.nmb.column_means());
    let incremental_scale = config.variance_scale == MmVarianceScale::Incremental;
    let prior_nb = if incremental_scale {
        incremental(&aug.nmb, ReferenceStrategy::Index(reference))?.values
    } else {
        aug.nmb.clone()
    };
    let eta_inb = aug.incremental_eta(reference)?.values;
    let eta_scale = if incremental_scale { &eta_inb } else { &aug.eta };

    let phi = phi_columns(&aug.base, design)?;
    let points = quantile_points(&phi, &eta_inb, reference, nq);

    let l = lambda.value();
    let posterior_variance = try_map_indexed(nq, |q| -> Result<Vec<f64>> {
        let mut rng = stream(config.seed, Purpose::MomentMatching, q as u64);
        let x = simulate_with(design, &points[q], &mut rng)?;
        let post = PosteriorSampler::new(model.parameters(), design, &x, s, config.metropolis, config.seed, q as u64)?;
        let mut rng = stream(config.seed, Purpose::MomentMatchingRerun, q as u64);
        let mut nb = Matrix::zeros(s, t);
        for j in 0..s {
            let theta = post.draw(j, &mut rng);
            let out = evaluate_checked(model, &theta, j + 1)?;
            for (c, o) in out.iter().enumerate() {
                nb.set(j, c, l * o.effect - o.cost);
            }
        }
        let nb = if incremental_scale {
            incremental(&nb, ReferenceStrategy::Index(reference))?.values
        } else {
            nb
        };
        Ok((0..t).map(|c| stats::variance(&nb.column(c))).collect())
    })?;

    let prior_variance: Vec<f64> = (0..t).map(|c| stats::variance(&prior_nb.column(c))).collect();
    let mut target_raw = vec![0.0; t];
    let mut target = vec![0.0; t];
    let mut eta_variance = vec![0.0; t];
    let mut shrinkage = vec![0.0; t];
    let mut rel_error: f64 = 0.0;
    for c in 0..t {
        let per_q: Vec<f64> = posterior_variance.iter().map(|v| v[c]).collect();
        target_raw[c] = prior_variance[c] - stats::mean(&per_q);
        target[c] = target_raw[c].max(0.0);
        eta_variance[c] = stats::variance(&eta_scale.column(c));
        if c == reference && (incremental_scale || eta_variance[c] == 0.0) {
            continue;
        }
        shrinkage[c] = if eta_variance[c] > 0.0 {
            (target[c] / eta_variance[c]).sqrt()
        } else if target[c] > 0.0 {
            return Err(Error::Estimation(format!(
                "strategy {}: conditional expected net benefit has zero variance but the \
                 preposterior variance is {:e}; EVPPI is degenerate",
                c + 1,
                target[c]
            )));
        } else {
            0.0
        };
        if target[c] > 0.0 {
            rel_error = rel_error.max(stats::std_error(&per_q) / (2.0 * target[c]));
        }
    }

    // Shrink each comparator about its mean, then move to the incremental
    // scale.
    let mut mu = Matrix::zeros(s, t);
    let means = eta_scale.column_means();
    for r in 0..s {
        for c in 0..t {
            mu.set(r, c, means[c] + (eta_scale.get(r, c) - means[c]) * shrinkage[c]);
        }
    }
    let mu = incremental(&mu, ReferenceStrategy::Index(reference))?.values;
    let mut max_mean_error: f64 = 0.0;
    let target_means = eta_inb.column_means();
    for (c, m) in mu.column_means().iter().enumerate() {
        max_mean_error = max_mean_error.max((m - target_means[c]).abs() / target_means[c].abs().max(1.0));
    }

    let mu = PosteriorMeanMatrix::new(mu, reference)?;
    let mut est = evsi_from_posterior_means(&mu, Method::MomentMatching).with_n(design.sample_size());
    let per_row = est.se();
    let se = (per_row * per_row + (est.value * rel_error).powi(2)).sqrt();
    est.mc_se = Some(se);
    est.note("per_row_se", per_row);
    est.note("quantile_points", nq as f64);
    est.note("max_mean_error", max_mean_error);
    warn_small_n(&mut est, design.sample_size());
    let evppi = decision_gain(&eta_inb).value;
    let evpi = decision_gain(&aug.nmb).value;
    est.note("evppi", evppi);
    est.note("evpi", evpi);
    if evpi > 0.0 && evppi < MIN_EVPPI_RATIO * evpi {
        est.warn(format!(
            "EVPPI is {:.0}% of EVPI; moment matching is most reliable when the parameters of \
             interest carry at least 40% of the decision uncertainty",
            100.0 * evppi / evpi
        ));
    }
    for c in 0..t {
        if target_raw[c] < 0.0 {
            est.warn(format!(
                "strategy {}: preposterior variance estimate {:e} clamped to zero",
                c + 1,
                target_raw[c]
            ));
        }
    }
    let ledger = MmVarianceLedger {
        scale: config.variance_scale,
        points,
        posterior_variance,
        prior_variance,
        target_raw,
        target,
        eta_variance,
        shrinkage,
    };
    Ok((est, ledger))
}

/// `Q` points at levels `(q − 0.5) / Q`. A scalar φ uses its own sample
/// quantiles; otherwise rows are ordered by the conditional expected INB of
/// the comparator whose expectation varies most, and the φ of the row at
/// each level is taken.
fn quantile_points(phi: &Matrix, eta_inb: &Matrix, reference: usize, nq: usize) -> Vec<Vec<f64>> {
    let s = phi.rows();
    let level = |q: usize| (q as f64 + 0.5) / nq as f64;
    if phi.cols() == 1 {
        let mut sorted = phi.column(0);
        sorted.sort_by(f64::total_cmp);
        return (0..nq).map(|q| vec![stats::quantile_sorted(&sorted, level(q))]).collect();
    }
    let spread: Vec<f64> = (0..eta_inb.cols())
        .map(|c| if c == reference { f64::NEG_INFINITY } else { stats::variance(&eta_inb.column(c)) })
        .collect();
    let key = eta_inb.column(argmax(&spread));
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
    (0..nq)
        .map(|q| {
            let i = ((level(q) * s as f64) as usize).min(s - 1);
            phi.row(order[i]).to_vec()
        })
        .collect()
}
