use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Prior distribution of a single model parameter.
///
/// Gamma and inverse-gamma are parameterised by shape and *rate* / *scale*
/// respectively; normal and log-normal take a variance, not a standard
/// deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Prior {
    Beta { a: f64, b: f64 },
    Gamma { shape: f64, rate: f64 },
    Normal { mean: f64, variance: f64 },
    InverseGamma { shape: f64, scale: f64 },
    LogNormal { mu: f64, sigma2: f64 },
}

/// Map from the parameter's support to the real line, used by the
/// random-walk sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Log,
    Logit,
}

impl Transform {
    pub fn forward(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
            Transform::Logit => (x / (1.0 - x)).ln(),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            Transform::Identity => y,
            Transform::Log => y.exp(),
            Transform::Logit => 1.0 / (1.0 + (-y).exp()),
        }
    }

    /// `ln |dx/dy|` at `y`.
    pub fn ln_jacobian(self, y: f64) -> f64 {
        match self {
            Transform::Identity => 0.0,
            Transform::Log => y,
            Transform::Logit => {
                let x = self.inverse(y);
                x.ln() + (1.0 - x).ln()
            }
        }
    }
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Prior::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            Prior::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            Prior::Normal { mean, variance } => mean.is_finite() && variance > 0.0 && variance.is_finite(),
            Prior::InverseGamma { shape, scale } => {
                shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
            Prior::LogNormal { mu, sigma2 } => mu.is_finite() && sigma2 > 0.0 && sigma2.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid hyperparameters for {self:?}")))
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Prior::Beta { .. } => "beta",
            Prior::Gamma { .. } => "gamma",
            Prior::Normal { .. } => "normal",
            Prior::InverseGamma { .. } => "inverse-gamma",
            Prior::LogNormal { .. } => "lognormal",
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Prior::Beta { a, b } => a / (a + b),
            Prior::Gamma { shape, rate } => shape / rate,
            Prior::Normal { mean, .. } => mean,
            Prior::InverseGamma { shape, scale } => {
                if shape > 1.0 {
                    scale / (shape - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Prior::LogNormal { mu, sigma2 } => (mu + sigma2 / 2.0).exp(),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Prior::Beta { a, b } => a * b / ((a + b) * (a + b) * (a + b + 1.0)),
            Prior::Gamma { shape, rate } => shape / (rate * rate),
            Prior::Normal { variance, .. } => variance,
            Prior::InverseGamma { shape, scale } => {
                if shape > 2.0 {
                    scale * scale / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0))
                } else {
                    f64::INFINITY
                }
            }
            Prior::LogNormal { mu, sigma2 } => (sigma2.exp() - 1.0) * (2.0 * mu + sigma2).exp(),
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        match self {
            Prior::Beta { .. } => (0.0..=1.0).contains(&x),
            Prior::Gamma { .. } | Prior::InverseGamma { .. } | Prior::LogNormal { .. } => x > 0.0 && x.is_finite(),
            Prior::Normal { .. } => x.is_finite(),
        }
    }

    pub fn transform(&self) -> Transform {
        match self {
            Prior::Beta { .. } => Transform::Logit,
            Prior::Gamma { .. } | Prior::InverseGamma { .. } | Prior::LogNormal { .. } => Transform::Log,
            Prior::Normal { .. } => Transform::Identity,
        }
    }

    /// Log density, `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            Prior::Beta { a, b } => {
                if !(x > 0.0 && x < 1.0) {
                    return f64::NEG_INFINITY;
                }
                (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
            }
            Prior::Gamma { shape, rate } => {
                if !(x > 0.0) {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            Prior::Normal { mean, variance } => {
                -0.5 * (2.0 * std::f64::consts::PI * variance).ln() - (x - mean) * (x - mean) / (2.0 * variance)
            }
            Prior::InverseGamma { shape, scale } => {
                if !(x > 0.0) {
                    return f64::NEG_INFINITY;
                }
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
            }
            Prior::LogNormal { mu, sigma2 } => {
                if !(x > 0.0) {
                    return f64::NEG_INFINITY;
                }
                let l = x.ln();
                -l - 0.5 * (2.0 * std::f64::consts::PI * sigma2).ln() - (l - mu) * (l - mu) / (2.0 * sigma2)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Prior::Beta { a, b } => Beta::new(a, b).expect("validated beta").sample(rng),
            Prior::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).expect("validated gamma").sample(rng),
            Prior::Normal { mean, variance } => Normal::new(mean, variance.sqrt()).expect("validated normal").sample(rng),
            Prior::InverseGamma { shape, scale } => {
                scale / Gamma::new(shape, 1.0).expect("validated inverse gamma").sample(rng)
            }
            Prior::LogNormal { mu, sigma2 } => LogNormal::new(mu, sigma2.sqrt()).expect("validated lognormal").sample(rng),
        }
    }
}

/// A named model parameter and its prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub prior: Prior,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, prior: Prior) -> Result<Self> {
        prior.validate()?;
        Ok(Self {
            name: name.into(),
            prior,
        })
    }
}
