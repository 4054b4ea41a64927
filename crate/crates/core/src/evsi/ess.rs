//! Prior effective sample size `n₀`: the number of study participants whose
//! information matches the prior's.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{conjugate_update, simulate_with, summarize_dataset, Metropolis, ParameterSpec, PosteriorSampler, Prior, SamplingFamily, StudyDesign};
use crate::parallel::try_map_indexed;
use crate::psa::PsaDataset;
use crate::rng::{stream, Purpose};
use crate::stats;

use super::importance_weights;
use super::phi_columns;

/// Estimates below this share of the pilot size are flagged as weak priors.
pub const WEAK_PRIOR_RATIO: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EssMethod {
    Direct,
    Summary,
    PosteriorMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssEstimate {
    pub parameter: String,
    pub n0: f64,
    pub method: EssMethod,
    /// Set when `n0` is tiny relative to the pilot size.
    pub weak_prior: bool,
    /// Value under the alternative convention, where one exists.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alternative: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl EssEstimate {
    /// Rejects non-positive or non-finite `n0`.
    pub fn new(parameter: impl Into<String>, n0: f64, method: EssMethod, pilot_n: Option<u64>) -> Result<Self> {
        let parameter = parameter.into();
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::Estimation(format!(
                "prior effective sample size for `{parameter}` is {n0}; it must be positive and finite"
            )));
        }
        Ok(Self {
            parameter,
            n0,
            method,
            weak_prior: pilot_n.is_some_and(|n| n0 < WEAK_PRIOR_RATIO * n as f64),
            alternative: None,
            notes: Vec::new(),
        })
    }
}

/// How to read the gamma–Poisson entry of the direct formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaPoissonConvention {
    /// `n₀ = rate / exposure`: the prior is worth as much as `rate` units of
    /// exposure. Equals the tabulated `1/b` when `b` is a scale.
    Rate,
    /// The tabulated `1/b` applied to the rate parameter.
    InverseRate,
}

/// Closed-form `n₀` for conjugate pairs: Beta–binomial `a + b`,
/// gamma–exponential `a`, gamma–Poisson per `convention`, normal–normal
/// `σ² / b`, inverse-gamma–normal `a`.
pub fn ess_direct_with(prior: &ParameterSpec, family: SamplingFamily, convention: GammaPoissonConvention) -> Result<EssEstimate> {
    let (n0, alternative, note) = match (prior.prior, family) {
        (Prior::Beta { a, b }, SamplingFamily::Binomial) => (a + b, None, None),
        (Prior::Gamma { shape, .. }, SamplingFamily::Exponential) => (shape, None, None),
        (Prior::Gamma { rate, .. }, SamplingFamily::Poisson { exposure }) => {
            let by_rate = rate / exposure;
            let inverse = 1.0 / rate;
            let note = "gamma–Poisson: rate convention n0 = rate / exposure; the alternative applies 1/b to the rate";
            match convention {
                GammaPoissonConvention::Rate => (by_rate, Some(inverse), Some(note)),
                GammaPoissonConvention::InverseRate => (inverse, Some(by_rate), Some(note)),
            }
        }
        (Prior::Normal { variance, .. }, SamplingFamily::Normal { variance: s2 }) => (s2 / variance, None, None),
        (Prior::InverseGamma { shape, .. }, SamplingFamily::NormalKnownMean { .. }) => (
            shape,
            Some(2.0 * shape),
            Some("inverse-gamma: each observation adds 1/2 to the shape, so the prior is also worth 2a observations"),
        ),
        (p, f) => {
            return Err(Error::NoDirectEss {
                prior: p.family().to_string(),
                likelihood: f.name().to_string(),
            })
        }
    };
    let mut est = EssEstimate::new(prior.name.clone(), n0, EssMethod::Direct, None)?;
    est.alternative = alternative;
    est.notes.extend(note.map(str::to_string));
    Ok(est)
}

pub fn ess_direct(prior: &ParameterSpec, family: SamplingFamily) -> Result<EssEstimate> {
    ess_direct_with(prior, family, GammaPoissonConvention::Rate)
}

/// `n · (Var(W) / Var(φ) − 1)`.
pub fn ess_summary_plugin(var_w: f64, var_phi: f64, n: u64) -> Result<f64> {
    if !(var_phi > 0.0) || !(var_w > var_phi) {
        return Err(Error::Estimation(format!(
            "summary variance {var_w:e} does not exceed the parameter variance {var_phi:e}; \
             the summary may not be on the parameter's scale"
        )));
    }
    Ok(n as f64 * (var_w / var_phi - 1.0))
}

/// `n · (Var(φ) / Var(μ_φ) − 1)`.
pub fn ess_posterior_mean_plugin(var_phi: f64, var_mu: f64, n: u64) -> Result<f64> {
    if !(var_mu > 0.0) || !(var_mu < var_phi) {
        return Err(Error::Estimation(format!(
            "posterior-mean variance {var_mu:e} is not strictly between 0 and the prior variance {var_phi:e}"
        )));
    }
    Ok(n as f64 * (var_phi / var_mu - 1.0))
}

struct Pilot {
    design: StudyDesign,
    /// Position of the parameter in `design.phi_names()`.
    component: usize,
    /// First outcome informing the parameter.
    outcome: usize,
}

fn pilot(design: &StudyDesign, phi_name: &str, n: u64) -> Result<Pilot> {
    if n < 2 {
        return Err(Error::Argument(format!("pilot sample size must be at least 2, got {n}")));
    }
    let component = design
        .phi_names()
        .iter()
        .position(|p| p == phi_name)
        .ok_or_else(|| Error::Argument(format!("the design does not inform `{phi_name}`")))?;
    let outcome = design
        .outcomes()
        .iter()
        .position(|o| o.parameter == phi_name)
        .expect("informed parameter has an outcome");
    Ok(Pilot {
        design: design.with_sample_size(n),
        component,
        outcome,
    })
}

/// Simulates a pilot study of size `n` at every PSA row and compares the
/// spread of the summary with the spread of the parameter. Row `s` uses
/// the stream `(seed, EssPilot, s)`.
pub fn ess_from_summary(design: &StudyDesign, ds: &PsaDataset, phi_name: &str, n: u64, seed: u64) -> Result<EssEstimate> {
    let p = pilot(design, phi_name, n)?;
    let phi = phi_columns(ds, &p.design)?;
    let w = try_map_indexed(phi.rows(), |r| {
        let mut rng = stream(seed, Purpose::EssPilot, r as u64);
        let x = simulate_with(&p.design, phi.row(r), &mut rng)?;
        Ok::<_, Error>(summarize_dataset(&p.design, &x)?.values[p.outcome])
    })?;
    let var_phi = stats::variance(&phi.column(p.component));
    let n0 = ess_summary_plugin(stats::variance(&w), var_phi, n)?;
    EssEstimate::new(phi_name, n0, EssMethod::Summary, Some(n))
}

/// Options for [`ess_from_posterior_means`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PosteriorMeanConfig {
    /// Priors of the model parameters. When the parameter's prior is known
    /// and conjugate to the data, posterior means are exact; when importance
    /// weights over the PSA rows degenerate, a Metropolis chain is used.
    pub priors: Option<Vec<ParameterSpec>>,
}

/// Iterations of the fallback Metropolis chain.
const METROPOLIS_ITERATIONS: usize = 5000;
/// Below this importance-sampling effective sample size the chain is used.
const MIN_IS_ESS: f64 = 10.0;

#[derive(Clone, Copy)]
enum Route {
    Conjugate,
    Importance,
    Chain,
}

/// Simulates a pilot study of size `n` at every PSA row, computes the
/// posterior mean of the parameter, and compares its spread with the
/// prior's.
pub fn ess_from_posterior_means(
    design: &StudyDesign,
    ds: &PsaDataset,
    phi_name: &str,
    n: u64,
    seed: u64,
    config: &PosteriorMeanConfig,
) -> Result<EssEstimate> {
    let p = pilot(design, phi_name, n)?;
    let phi = phi_columns(ds, &p.design)?;
    let prior = match &config.priors {
        Some(ps) => Some(
            ps.iter()
                .find(|q| q.name == phi_name)
                .ok_or_else(|| Error::Argument(format!("no prior given for `{phi_name}`")))?
                .clone(),
        ),
        None => None,
    };
    let conjugate = prior.as_ref().is_some_and(|pr| {
        let x = simulate_with(&p.design, phi.row(0), &mut stream(seed, Purpose::EssPilot, 0));
        x.is_ok_and(|x| conjugate_update(pr, &p.design, &x).is_ok())
    });
    let rows = try_map_indexed(phi.rows(), |r| -> Result<(f64, Route)> {
        let mut rng = stream(seed, Purpose::EssPilot, r as u64);
        let x = simulate_with(&p.design, phi.row(r), &mut rng)?;
        if conjugate {
            let pr = prior.as_ref().expect("conjugate implies a prior");
            return Ok((conjugate_update(pr, &p.design, &x)?.prior.mean(), Route::Conjugate));
        }
        match importance_weights(&p.design, &x, &phi) {
            Ok(w) if w.ess >= MIN_IS_ESS || prior.is_none() => {
                let mu = w.weights.iter().enumerate().map(|(q, l)| l * phi.get(q, p.component)).sum();
                Ok((mu, Route::Importance))
            }
            Err(e) if prior.is_none() => Err(e),
            _ => {
                let pr = prior.as_ref().expect("checked above");
                let post = PosteriorSampler::new(
                    std::slice::from_ref(pr),
                    &p.design,
                    &x,
                    METROPOLIS_ITERATIONS,
                    Metropolis::default(),
                    seed,
                    r as u64,
                )?;
                Ok((post.means()[0], Route::Chain))
            }
        }
    })?;
    let mu: Vec<f64> = rows.iter().map(|(m, _)| *m).collect();
    let var_phi = stats::variance(&phi.column(p.component));
    let n0 = ess_posterior_mean_plugin(var_phi, stats::variance(&mu), n)?;
    let mut est = EssEstimate::new(phi_name, n0, EssMethod::PosteriorMean, Some(n))?;
    let count = |f: fn(&Route) -> bool| rows.iter().filter(|(_, r)| f(r)).count();
    let (c, i, m) = (
        count(|r| matches!(r, Route::Conjugate)),
        count(|r| matches!(r, Route::Importance)),
        count(|r| matches!(r, Route::Chain)),
    );
    est.notes.push(format!("posterior means: {c} conjugate, {i} importance-weighted, {m} Metropolis"));
    if est.weak_prior {
        est.notes.push("posterior means are nearly as dispersed as the prior: the prior is weak relative to the pilot".into());
    }
    Ok(est)
}
