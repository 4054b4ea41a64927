//! Proposed studies: sampling distributions of future data given the
//! parameters of interest, their summaries, and their likelihoods.
//!
//! Observations are kept as sufficient statistics so that very large
//! studies can be simulated at constant cost; each simulator draws the
//! statistics from their exact sampling distribution.

use rand::Rng;
use rand_distr::{Binomial, ChiSquared, Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::stats::{ln_choose, ln_factorial, xlny};

use super::prior::ParameterSpec;

/// Sampling distribution of one study outcome. `n` participants each
/// contribute one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SamplingFamily {
    /// Number of events in `n` trials with probability φ.
    Binomial,
    /// Mean φ, known variance.
    Normal { variance: f64 },
    /// Variance φ, known mean.
    NormalKnownMean { mean: f64 },
    /// Event count with rate φ per unit exposure; `exposure` per participant.
    Poisson { exposure: f64 },
    /// Event times with rate φ.
    Exponential,
}

impl SamplingFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SamplingFamily::Binomial => "binomial",
            SamplingFamily::Normal { .. } => "normal",
            SamplingFamily::NormalKnownMean { .. } => "normal-variance",
            SamplingFamily::Poisson { .. } => "poisson",
            SamplingFamily::Exponential => "exponential",
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SamplingFamily::Normal { variance } => variance > 0.0 && variance.is_finite(),
            SamplingFamily::NormalKnownMean { mean } => mean.is_finite(),
            SamplingFamily::Poisson { exposure } => exposure > 0.0 && exposure.is_finite(),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid sampling family {self:?}")))
        }
    }

    pub fn in_support(&self, phi: f64) -> bool {
        match self {
            SamplingFamily::Binomial => (0.0..=1.0).contains(&phi),
            SamplingFamily::Normal { .. } => phi.is_finite(),
            SamplingFamily::NormalKnownMean { .. } | SamplingFamily::Exponential => phi > 0.0 && phi.is_finite(),
            SamplingFamily::Poisson { .. } => phi >= 0.0 && phi.is_finite(),
        }
    }
}

/// One measured outcome of the study, linked to one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutcome {
    pub name: String,
    pub family: SamplingFamily,
    pub parameter: String,
}

/// A proposed data-collection exercise with `sample_size` participants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDesign {
    outcomes: Vec<StudyOutcome>,
    sample_size: u64,
}

impl StudyDesign {
    pub fn new(outcomes: Vec<StudyOutcome>, sample_size: u64) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Argument("a study design needs at least one outcome".into()));
        }
        for o in &outcomes {
            o.family.validate()?;
        }
        Ok(Self {
            outcomes,
            sample_size,
        })
    }

    pub fn outcomes(&self) -> &[StudyOutcome] {
        &self.outcomes
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn sample_size(&self) -> u64 {
        self.sample_size
    }

    pub fn with_sample_size(&self, n: u64) -> Self {
        Self {
            outcomes: self.outcomes.clone(),
            sample_size: n,
        }
    }

    /// Distinct linked parameters in order of first appearance (φ).
    pub fn phi_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for o in &self.outcomes {
            if !names.contains(&o.parameter) {
                names.push(o.parameter.clone());
            }
        }
        names
    }

    /// Position in `phi_names()` of each outcome's parameter.
    pub fn outcome_components(&self) -> Vec<usize> {
        let names = self.phi_names();
        self.outcomes
            .iter()
            .map(|o| names.iter().position(|n| *n == o.parameter).expect("present"))
            .collect()
    }

    /// Checks that every linked parameter exists in the model.
    pub fn validate_against(&self, parameters: &[ParameterSpec]) -> Result<()> {
        for o in &self.outcomes {
            if !parameters.iter().any(|p| p.name == o.parameter) {
                return Err(Error::Argument(format!(
                    "outcome `{}` links to unknown parameter `{}`",
                    o.name, o.parameter
                )));
            }
        }
        Ok(())
    }
}

/// Sufficient statistics of one simulated or observed outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Observation {
    Binomial { successes: u64, trials: u64 },
    /// `ss` is the within-sample sum of squares about `mean`.
    Normal { n: u64, mean: f64, ss: f64 },
    /// `ss` is the sum of squares about the known mean.
    NormalKnownMean { n: u64, ss: f64 },
    Poisson { events: u64, exposure: f64 },
    Exponential { n: u64, total: f64 },
}

impl Observation {
    pub fn normal_from_values(xs: &[f64]) -> Self {
        let n = xs.len() as u64;
        if n == 0 {
            return Observation::Normal { n, mean: 0.0, ss: 0.0 };
        }
        let mean = crate::stats::mean(xs);
        let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        Observation::Normal { n, mean, ss }
    }

    pub fn exponential_from_values(xs: &[f64]) -> Self {
        Observation::Exponential {
            n: xs.len() as u64,
            total: xs.iter().sum(),
        }
    }

    pub fn count(&self) -> u64 {
        match *self {
            Observation::Binomial { trials, .. } => trials,
            Observation::Normal { n, .. } | Observation::NormalKnownMean { n, .. } | Observation::Exponential { n, .. } => n,
            Observation::Poisson { exposure, .. } => {
                if exposure > 0.0 {
                    1
                } else {
                    0
                }
            }
        }
    }
}

/// Simulated study data together with the parameter values that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FutureDataset {
    pub sample_size: u64,
    pub phi: Vec<f64>,
    pub observations: Vec<Observation>,
}

/// Scale on which a summary is reported (the scale of the linked parameter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SummaryScale {
    Proportion,
    Mean,
    Variance,
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStatistic {
    pub values: Vec<f64>,
    pub scales: Vec<SummaryScale>,
}

fn check_phi(design: &StudyDesign, phi: &[f64]) -> Result<()> {
    let k = design.phi_names().len();
    if phi.len() != k {
        return Err(Error::Argument(format!(
            "expected {k} parameter values for the design, got {}",
            phi.len()
        )));
    }
    Ok(())
}

/// Draws a future dataset of the design's sample size at `phi`
/// (aligned with `design.phi_names()`).
pub fn simulate_with<R: Rng + ?Sized>(design: &StudyDesign, phi: &[f64], rng: &mut R) -> Result<FutureDataset> {
    check_phi(design, phi)?;
    let n = design.sample_size();
    let comps = design.outcome_components();
    let mut observations = Vec::with_capacity(design.n_outcomes());
    for (o, &c) in design.outcomes().iter().zip(&comps) {
        let p = phi[c];
        if !o.family.in_support(p) {
            return Err(Error::Domain(format!(
                "parameter `{}` = {p} is outside the support of the {} outcome `{}`",
                o.parameter,
                o.family.name(),
                o.name
            )));
        }
        observations.push(simulate_outcome(o.family, p, n, rng));
    }
    Ok(FutureDataset {
        sample_size: n,
        phi: phi.to_vec(),
        observations,
    })
}

fn simulate_outcome<R: Rng + ?Sized>(family: SamplingFamily, p: f64, n: u64, rng: &mut R) -> Observation {
    match family {
        SamplingFamily::Binomial => Observation::Binomial {
            successes: if n == 0 {
                0
            } else {
                Binomial::new(n, p).expect("p in [0,1]").sample(rng)
            },
            trials: n,
        },
        SamplingFamily::Normal { variance } => {
            if n == 0 {
                return Observation::Normal { n, mean: 0.0, ss: 0.0 };
            }
            let mean = Normal::new(p, (variance / n as f64).sqrt()).expect("finite").sample(rng);
            let ss = if n > 1 {
                variance * ChiSquared::new((n - 1) as f64).expect("df > 0").sample(rng)
            } else {
                0.0
            };
            Observation::Normal { n, mean, ss }
        }
        SamplingFamily::NormalKnownMean { .. } => Observation::NormalKnownMean {
            n,
            ss: if n == 0 {
                0.0
            } else {
                p * ChiSquared::new(n as f64).expect("df > 0").sample(rng)
            },
        },
        SamplingFamily::Poisson { exposure } => {
            let total = exposure * n as f64;
            let lambda = p * total;
            let events = if lambda > 0.0 {
                Poisson::new(lambda).expect("positive rate").sample(rng) as u64
            } else {
                0
            };
            Observation::Poisson {
                events,
                exposure: total,
            }
        }
        SamplingFamily::Exponential => Observation::Exponential {
            n,
            total: if n == 0 {
                0.0
            } else {
                Gamma::new(n as f64, 1.0 / p).expect("positive rate").sample(rng)
            },
        },
    }
}

/// [`simulate_with`] on the stream `(seed, FutureData, 0)`.
pub fn simulate_future_dataset(design: &StudyDesign, phi: &[f64], seed: u64) -> Result<FutureDataset> {
    simulate_with(design, phi, &mut stream(seed, Purpose::FutureData, 0))
}

fn check_conforms(design: &StudyDesign, x: &FutureDataset) -> Result<()> {
    if x.observations.len() != design.n_outcomes() {
        return Err(Error::Argument(format!(
            "dataset has {} outcomes, design has {}",
            x.observations.len(),
            design.n_outcomes()
        )));
    }
    for (o, obs) in design.outcomes().iter().zip(&x.observations) {
        let matches = matches!(
            (o.family, obs),
            (SamplingFamily::Binomial, Observation::Binomial { .. })
                | (SamplingFamily::Normal { .. }, Observation::Normal { .. })
                | (SamplingFamily::NormalKnownMean { .. }, Observation::NormalKnownMean { .. })
                | (SamplingFamily::Poisson { .. }, Observation::Poisson { .. })
                | (SamplingFamily::Exponential, Observation::Exponential { .. })
        );
        if !matches {
            return Err(Error::Argument(format!(
                "observation for `{}` does not match its {} family",
                o.name,
                o.family.name()
            )));
        }
    }
    Ok(())
}

/// Per-outcome summaries on the scale of the linked parameter: proportion,
/// mean, variance about the known mean, events per unit exposure, and
/// `1 / mean` for event times.
pub fn summarize_dataset(design: &StudyDesign, x: &FutureDataset) -> Result<SummaryStatistic> {
    check_conforms(design, x)?;
    let mut values = Vec::with_capacity(x.observations.len());
    let mut scales = Vec::with_capacity(x.observations.len());
    for (o, obs) in design.outcomes().iter().zip(&x.observations) {
        let empty = || Error::Argument(format!("outcome `{}` has no observations to summarise", o.name));
        let (v, s) = match *obs {
            Observation::Binomial { successes, trials } => {
                if trials == 0 {
                    return Err(empty());
                }
                (successes as f64 / trials as f64, SummaryScale::Proportion)
            }
            Observation::Normal { n, mean, .. } => {
                if n == 0 {
                    return Err(empty());
                }
                (mean, SummaryScale::Mean)
            }
            Observation::NormalKnownMean { n, ss } => {
                if n == 0 {
                    return Err(empty());
                }
                (ss / n as f64, SummaryScale::Variance)
            }
            Observation::Poisson { events, exposure } => {
                if exposure <= 0.0 {
                    return Err(empty());
                }
                (events as f64 / exposure, SummaryScale::Rate)
            }
            Observation::Exponential { n, total } => {
                if n == 0 {
                    return Err(empty());
                }
                (n as f64 / total, SummaryScale::Rate)
            }
        };
        values.push(v);
        scales.push(s);
    }
    Ok(SummaryStatistic { values, scales })
}

/// Log-likelihood of one observation at parameter value `p`, including all
/// normalising constants. `-inf` outside the support.
pub fn outcome_log_likelihood(family: SamplingFamily, obs: &Observation, p: f64) -> f64 {
    if !family.in_support(p) {
        return f64::NEG_INFINITY;
    }
    match (family, *obs) {
        (SamplingFamily::Binomial, Observation::Binomial { successes, trials }) => {
            let x = successes as f64;
            let f = (trials - successes) as f64;
            ln_choose(trials, successes) + xlny(x, p) + xlny(f, 1.0 - p)
        }
        (SamplingFamily::Normal { variance }, Observation::Normal { n, mean, ss }) => {
            if n == 0 {
                return 0.0;
            }
            let nf = n as f64;
            -0.5 * nf * (2.0 * std::f64::consts::PI * variance).ln()
                - (ss + nf * (mean - p) * (mean - p)) / (2.0 * variance)
        }
        (SamplingFamily::NormalKnownMean { .. }, Observation::NormalKnownMean { n, ss }) => {
            if n == 0 {
                return 0.0;
            }
            let nf = n as f64;
            -0.5 * nf * (2.0 * std::f64::consts::PI * p).ln() - ss / (2.0 * p)
        }
        (SamplingFamily::Poisson { .. }, Observation::Poisson { events, exposure }) => {
            let mu = p * exposure;
            xlny(events as f64, mu) - mu - ln_factorial(events)
        }
        (SamplingFamily::Exponential, Observation::Exponential { n, total }) => n as f64 * p.ln() - p * total,
        _ => f64::NAN,
    }
}

/// Joint log-likelihood of the dataset at `phi`, outcomes conditionally
/// independent given φ.
pub fn log_likelihood(design: &StudyDesign, x: &FutureDataset, phi: &[f64]) -> Result<f64> {
    check_phi(design, phi)?;
    check_conforms(design, x)?;
    Ok(log_likelihood_unchecked(design, &design.outcome_components(), x, phi))
}

/// Hot-loop variant without validation; `components` from
/// [`StudyDesign::outcome_components`].
pub(crate) fn log_likelihood_unchecked(design: &StudyDesign, components: &[usize], x: &FutureDataset, phi: &[f64]) -> f64 {
    let mut total = 0.0;
    for ((o, obs), &c) in design.outcomes().iter().zip(&x.observations).zip(components) {
        total += outcome_log_likelihood(o.family, obs, phi[c]);
        if total == f64::NEG_INFINITY {
            break;
        }
    }
    total
}
