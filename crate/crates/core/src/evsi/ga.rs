//! Gaussian-approximation EVSI: shrink the parameters of interest toward
//! their mean and evaluate the EVPPI regressions there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evppi::{fit_evppi, EvppiConfig, EvppiFit};
use crate::matrix::Matrix;
use crate::model::StudyDesign;
use crate::psa::{PsaDataset, WtpThreshold};
use crate::stats;
use crate::voi::{decision_gain, Method, VoiEstimate};

use super::{evsi_from_posterior_means, EssEstimate, PosteriorMeanMatrix};

/// Weight given to each simulated φ when shrinking toward its mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaWeight {
    /// `sqrt(N / (N + n₀))`: the rescaled φ has the preposterior variance
    /// `Var(φ)·N / (N + n₀)` of a conjugate posterior mean.
    #[default]
    Variance,
    /// `N / (N + n₀)` applied to φ itself, which understates the
    /// preposterior spread for small `N`.
    Linear,
}

impl GaWeight {
    pub fn weight(self, n: f64, n0: f64) -> f64 {
        let w = n / (n + n0);
        match self {
            GaWeight::Variance => w.sqrt(),
            GaWeight::Linear => w,
        }
    }
}

/// `φ̃_p = w_p φ_p + (1 − w_p) φ̄_p` with `w_p` from `rule`; `φ̄` is the
/// column mean of `phi`.
pub fn ga_rescale(phi: &Matrix, n0: &[f64], n: f64, rule: GaWeight) -> Matrix {
    let means = phi.column_means();
    let mut out = phi.clone();
    for (c, (&m, &k)) in means.iter().zip(n0).enumerate() {
        let w = rule.weight(n, k);
        for r in 0..phi.rows() {
            out.set(r, c, w * phi.get(r, c) + (1.0 - w) * m);
        }
    }
    out
}

/// GA EVSI at every `N` in `n_list`, fitting the EVPPI regressions once.
/// `ess` supplies one `n₀` per parameter the design informs.
pub fn evsi_ga(
    ds: &PsaDataset,
    design: &StudyDesign,
    ess: &[EssEstimate],
    lambda: WtpThreshold,
    n_list: &[u64],
) -> Result<Vec<VoiEstimate>> {
    let names = design.phi_names();
    let n0 = names
        .iter()
        .map(|name| {
            ess.iter()
                .find(|e| &e.parameter == name)
                .map(|e| e.n0)
                .ok_or_else(|| Error::Argument(format!("no prior effective sample size for `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let config = EvppiConfig::default();
    let fit = fit_evppi(ds, &names, lambda, &config)?;
    evsi_ga_from_fit(&fit, &n0, n_list, GaWeight::default(), &config)
}

/// GA EVSI from an existing EVPPI fit whose parameters are, in order, the
/// ones `n0` refers to. The bootstrap refits each regression once and
/// reuses it for every `N`.
pub fn evsi_ga_from_fit(
    fit: &EvppiFit,
    n0: &[f64],
    n_list: &[u64],
    rule: GaWeight,
    config: &EvppiConfig,
) -> Result<Vec<VoiEstimate>> {
    if n0.len() != fit.phi.cols() {
        return Err(Error::Argument(format!(
            "{} prior effective sample sizes for {} parameters",
            n0.len(),
            fit.phi.cols()
        )));
    }
    if let Some(bad) = n0.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Argument(format!("prior effective sample size must be positive, got {bad}")));
    }
    if n_list.is_empty() {
        return Err(Error::Argument("no sample sizes given".into()));
    }
    let reference = fit.regression.reference();
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let (mu, extrapolated) = fit.regression.predict(&ga_rescale(&fit.phi, n0, n as f64, rule))?;
        let mu = PosteriorMeanMatrix::new(mu, reference)?;
        let mut est = evsi_from_posterior_means(&mu, Method::GaussianApproximation).with_n(n);
        est.note("per_row_se", est.se());
        if extrapolated > 0 {
            est.note("extrapolated_rows", extrapolated as f64);
        }
        for (name, k) in fit.augmented.phi_names.iter().zip(n0) {
            est.note(&format!("n0.{name}"), *k);
        }
        for w in fit.regression.warnings() {
            est.warn(w.clone());
        }
        out.push(est);
    }
    if config.bootstrap > 0 {
        let reps = fit.regression.bootstrap(&fit.phi, &fit.inb, &config.gam, config.bootstrap, config.seed, |r, x| {
            n_list
                .iter()
                .map(|&n| Ok(decision_gain(&r.predict(&ga_rescale(x, n0, n as f64, rule))?.0).raw))
                .collect::<Result<Vec<f64>>>()
        })?;
        for (i, est) in out.iter_mut().enumerate() {
            let values: Vec<f64> = reps.iter().map(|v| v[i]).collect();
            est.mc_se = Some(stats::std_dev(&values));
            est.note("bootstrap_replicates", config.bootstrap as f64);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin, run_psa};

    #[test]
    fn rescale_at_n_equal_n0_is_midpoint() {
        let phi = Matrix::from_rows(&[vec![1.0], vec![3.0], vec![8.0]]);
        let r = ga_rescale(&phi, &[7.0], 7.0, GaWeight::Linear);
        assert_eq!(r.column(0), vec![0.5 * 1.0 + 0.5 * 4.0, 0.5 * 3.0 + 0.5 * 4.0, 0.5 * 8.0 + 0.5 * 4.0]);
    }

    #[test]
    fn closed_form_and_limit() {
        let ex = builtin::normal_normal();
        let ds = run_psa(&ex.model, 5000, 41).unwrap();
        let lambda = WtpThreshold::new(ex.lambda).unwrap();
        let config = EvppiConfig { bootstrap: 30, ..EvppiConfig::default() };
        let fit = fit_evppi(&ds, &["phi".to_string()], lambda, &config).unwrap();
        let ns = [10, 50, 250, 4_000_000_000];
        let est = evsi_ga_from_fit(&fit, &[4.0], &ns, GaWeight::Variance, &config).unwrap();
        for (e, &n) in est.iter().zip(&ns[..3]) {
            let sd = 1000.0 * (n as f64 / (n as f64 + 4.0)).sqrt();
            let truth = stats::expected_gain_normal(200.0, sd);
            assert!((e.value - truth).abs() < 0.05 * truth, "N={n}: {} vs {truth}", e.value);
        }
        for w in est.windows(2) {
            assert!(w[1].value >= w[0].value);
        }
        let limit = est[3].value;
        assert!((limit - fit.estimate.value).abs() < 0.01 * fit.estimate.value);
        let linear = evsi_ga_from_fit(&fit, &[4.0], &ns, GaWeight::Linear, &config).unwrap();
        assert!(linear[0].value < est[0].value);
        assert!((linear[3].value - fit.estimate.value).abs() < 0.01 * fit.estimate.value);
    }

    #[test]
    fn variance_weight_matches_preposterior_variance() {
        let phi = Matrix::from_rows(&[vec![-1.0], vec![1.0]]);
        let r = ga_rescale(&phi, &[4.0], 12.0, GaWeight::Variance);
        let var = stats::variance(&r.column(0)) / stats::variance(&phi.column(0));
        assert!((var - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_n0() {
        let ex = builtin::normal_normal();
        let ds = run_psa(&ex.model, 500, 1).unwrap();
        let lambda = WtpThreshold::new(ex.lambda).unwrap();
        let config = EvppiConfig { bootstrap: 0, ..EvppiConfig::default() };
        let fit = fit_evppi(&ds, &["phi".to_string()], lambda, &config).unwrap();
        assert!(matches!(evsi_ga_from_fit(&fit, &[0.0], &[10], GaWeight::default(), &config), Err(Error::Argument(_))));
    }
}
