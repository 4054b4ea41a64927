//! Expected value of partial perfect information by regression of
//! incremental net benefit on the parameters of interest.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metamodel::{fit_metamodel, fit_metamodel_with_lambdas, DiagnosticStatus, GamConfig, Metamodel, MAX_COVARIATES};
use crate::parallel::try_map_indexed;
use crate::psa::{
    compute_incremental_net_benefit, compute_net_benefit, AugmentedPsaDataset, IncrementalNetBenefitMatrix,
    PsaDataset, ReferenceStrategy, WtpThreshold,
};
use crate::rng::{stream, Purpose};
use crate::stats;
use crate::voi::{decision_gain, Method, VoiEstimate, VoiKind};

/// Default number of bootstrap replicates for regression standard errors.
pub const DEFAULT_BOOTSTRAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvppiConfig {
    pub gam: GamConfig,
    /// Bootstrap replicates for the standard error; 0 skips the bootstrap
    /// and reports the per-row standard error instead.
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for EvppiConfig {
    fn default() -> Self {
        Self {
            gam: GamConfig::default(),
            bootstrap: DEFAULT_BOOTSTRAP,
            seed: 0,
        }
    }
}

/// One regression of INB per comparator on a shared covariate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct InbRegression {
    reference: usize,
    /// `None` in the reference column.
    models: Vec<Option<Metamodel>>,
    /// S × T fitted INB, reference column zero.
    fitted: Matrix,
    lambdas: Vec<Option<Vec<f64>>>,
    warnings: Vec<String>,
}

impl InbRegression {
    /// Fits `INB_t ~ s(x_1) + … + s(x_d)` for every `t` other than the
    /// reference. A failing residual check is an error carrying the report.
    pub fn fit(covariates: &Matrix, inb: &IncrementalNetBenefitMatrix, gam: &GamConfig) -> Result<Self> {
        let t = inb.values.cols();
        let s = inb.values.rows();
        if covariates.rows() != s {
            return Err(Error::Argument(format!(
                "{} covariate rows for {} net-benefit rows",
                covariates.rows(),
                s
            )));
        }
        let models = try_map_indexed(t, |c| {
            if c == inb.reference {
                Ok(None)
            } else {
                fit_metamodel(covariates, &inb.values.column(c), gam).map(Some)
            }
        })?;
        let mut fitted = Matrix::zeros(s, t);
        let mut warnings = Vec::new();
        let mut lambdas = Vec::with_capacity(t);
        for (c, m) in models.iter().enumerate() {
            let Some(m) = m else {
                lambdas.push(None);
                continue;
            };
            fitted.set_column(c, m.fitted());
            lambdas.push(Some(m.smoothing().iter().map(|&(_, l, _)| l).collect()));
            for w in m.warnings() {
                warnings.push(format!("strategy {}: {w}", c + 1));
            }
            let d = m.diagnostics();
            match d.status {
                DiagnosticStatus::Pass => {}
                DiagnosticStatus::Warn => {
                    for msg in &d.messages {
                        warnings.push(format!("strategy {}: {msg}", c + 1));
                    }
                }
                DiagnosticStatus::Fail => {
                    let report = serde_json::to_string(&d).unwrap_or_else(|_| d.messages.join("; "));
                    return Err(Error::Diagnostics(format!("strategy {}: {report}", c + 1)));
                }
            }
        }
        Ok(Self {
            reference: inb.reference,
            models,
            fitted,
            lambdas,
            warnings,
        })
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    /// Fitted INB at the training covariates, reference column zero.
    pub fn fitted(&self) -> &Matrix {
        &self.fitted
    }

    pub fn metamodel(&self, strategy: usize) -> Option<&Metamodel> {
        self.models.get(strategy).and_then(Option::as_ref)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Predicted INB at new covariates, with the number of rows that needed
    /// extrapolation in some comparator.
    pub fn predict(&self, covariates: &Matrix) -> Result<(Matrix, usize)> {
        let mut out = Matrix::zeros(covariates.rows(), self.models.len());
        let mut extrapolated = 0;
        for (c, m) in self.models.iter().enumerate() {
            if let Some(m) = m {
                let p = m.predict(covariates)?;
                extrapolated = extrapolated.max(p.extrapolated);
                out.set_column(c, &p.values);
            }
        }
        Ok((out, extrapolated))
    }

    /// The same regressions refitted at their selected smoothing weights on
    /// other data, without diagnostic checks. Falls back to a fresh weight
    /// search when a covariate has become constant.
    pub fn refit(&self, covariates: &Matrix, inb: &Matrix, gam: &GamConfig) -> Result<InbRegression> {
        let (s, t) = (inb.rows(), inb.cols());
        let mut models = Vec::with_capacity(t);
        let mut fitted = Matrix::zeros(s, t);
        for c in 0..t {
            let Some(lambdas) = &self.lambdas[c] else {
                models.push(None);
                continue;
            };
            let col = inb.column(c);
            let m = match fit_metamodel_with_lambdas(covariates, &col, gam, lambdas) {
                Ok(m) => m,
                Err(_) => fit_metamodel(covariates, &col, gam)?,
            };
            fitted.set_column(c, m.fitted());
            models.push(Some(m));
        }
        Ok(InbRegression {
            reference: self.reference,
            models,
            fitted,
            lambdas: self.lambdas.clone(),
            warnings: Vec::new(),
        })
    }

    /// Applies `stat` to refits on `replicates` bootstrap resamples of the
    /// rows. `stat` receives the refitted regression and the resampled
    /// covariates; replicate `b` uses the stream `(seed, Bootstrap, b)`.
    pub fn bootstrap<T, F>(
        &self,
        covariates: &Matrix,
        inb: &IncrementalNetBenefitMatrix,
        gam: &GamConfig,
        replicates: usize,
        seed: u64,
        stat: F,
    ) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&InbRegression, &Matrix) -> Result<T> + Sync + Send,
    {
        let s = inb.values.rows();
        try_map_indexed(replicates, |b| {
            let mut rng = stream(seed, Purpose::Bootstrap, b as u64);
            let idx: Vec<usize> = (0..s).map(|_| rng.random_range(0..s)).collect();
            let x = covariates.select_rows(&idx);
            let refit = self.refit(&x, &inb.values.select_rows(&idx), gam)?;
            stat(&refit, &x)
        })
    }

    /// Standard deviation of the decision gain over bootstrap refits.
    pub fn bootstrap_se(
        &self,
        covariates: &Matrix,
        inb: &IncrementalNetBenefitMatrix,
        gam: &GamConfig,
        replicates: usize,
        seed: u64,
    ) -> Result<f64> {
        let values = self.bootstrap(covariates, inb, gam, replicates, seed, |r, _| {
            Ok(decision_gain(r.fitted()).raw)
        })?;
        Ok(stats::std_dev(&values))
    }
}

/// Everything produced by an EVPPI fit, including the regressions reused by
/// the Gaussian-approximation EVSI method.
#[derive(Debug, Clone, PartialEq)]
pub struct EvppiFit {
    pub estimate: VoiEstimate,
    pub augmented: AugmentedPsaDataset,
    pub regression: InbRegression,
    pub inb: IncrementalNetBenefitMatrix,
    /// S × |φ| covariates, columns in `phi_names` order.
    pub phi: Matrix,
}

/// EVPPI of `phi_names` together with the augmented dataset.
pub fn estimate_evppi(
    ds: &PsaDataset,
    phi_names: &[String],
    lambda: WtpThreshold,
) -> Result<(VoiEstimate, AugmentedPsaDataset)> {
    let fit = fit_evppi(ds, phi_names, lambda, &EvppiConfig::default())?;
    Ok((fit.estimate, fit.augmented))
}

pub fn fit_evppi(ds: &PsaDataset, phi_names: &[String], lambda: WtpThreshold, config: &EvppiConfig) -> Result<EvppiFit> {
    if phi_names.is_empty() {
        return Err(Error::Argument("at least one parameter of interest required".into()));
    }
    for (i, a) in phi_names.iter().enumerate() {
        if phi_names[..i].contains(a) {
            return Err(Error::Argument(format!("parameter `{a}` listed twice")));
        }
    }
    if phi_names.len() > MAX_COVARIATES {
        return Err(Error::Dimension(format!(
            "{} parameters of interest; regression EVPPI is reliable for at most \
             {MAX_COVARIATES}. Group related parameters, or compute EVPPI for \
             smaller subsets",
            phi_names.len()
        )));
    }
    let phi = ds.parameter_columns(phi_names)?;
    let nb = compute_net_benefit(ds, lambda)?;
    let inb = compute_incremental_net_benefit(&nb, ReferenceStrategy::Auto)?;
    let regression = InbRegression::fit(&phi, &inb, &config.gam)?;

    let gain = decision_gain(regression.fitted());
    let mut estimate = VoiEstimate::from_gain(VoiKind::Evppi, Method::Regression, gain);
    estimate.note("per_row_se", gain.std_error);
    if config.bootstrap > 0 {
        let se = regression.bootstrap_se(&phi, &inb, &config.gam, config.bootstrap, config.seed)?;
        estimate.mc_se = Some(se);
        estimate.note("bootstrap_replicates", config.bootstrap as f64);
    }
    for w in regression.warnings() {
        estimate.warn(w.clone());
    }

    let base = nb.values.column(inb.reference);
    let base_mean = stats::mean(&base);
    let mut eta = regression.fitted().clone();
    for r in 0..eta.rows() {
        for v in eta.row_mut(r) {
            *v += base_mean;
        }
    }
    let augmented = AugmentedPsaDataset::new(ds.clone(), nb.values, eta, phi_names.to_vec())?;
    Ok(EvppiFit {
        estimate,
        augmented,
        regression,
        inb,
        phi,
    })
}
