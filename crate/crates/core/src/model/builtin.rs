//! Built-in example models with default study designs.
//!
//! All are two- or three-strategy models whose decision is close at the
//! default willingness-to-pay, so that information has value. None of them
//! describes a real clinical question.

use crate::error::{Error, Result};
use crate::psa::Strategy;

use super::design::{SamplingFamily, StudyDesign, StudyOutcome};
use super::prior::{ParameterSpec, Prior};
use super::{DecisionModel, StrategyOutcome};

/// Model defined by a plain function of θ.
#[derive(Clone)]
pub struct FnModel {
    name: &'static str,
    params: Vec<ParameterSpec>,
    strategies: Vec<Strategy>,
    eval: fn(&[f64]) -> Vec<StrategyOutcome>,
}

impl std::fmt::Debug for FnModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnModel")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

impl FnModel {
    pub fn new(
        name: &'static str,
        params: Vec<ParameterSpec>,
        strategies: Vec<Strategy>,
        eval: fn(&[f64]) -> Vec<StrategyOutcome>,
    ) -> Result<Self> {
        crate::psa::validate_strategies(&strategies)?;
        Ok(Self {
            name,
            params,
            strategies,
            eval,
        })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Replaces the prior of an existing parameter.
    pub fn set_prior(&mut self, name: &str, prior: Prior) -> Result<()> {
        set_prior(&mut self.params, self.name, name, prior)
    }
}

fn set_prior(params: &mut [ParameterSpec], model: &str, name: &str, prior: Prior) -> Result<()> {
    prior.validate()?;
    let p = params
        .iter_mut()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Argument(format!("model `{model}` has no parameter `{name}`")))?;
    p.prior = prior;
    Ok(())
}

impl DecisionModel for FnModel {
    fn parameters(&self) -> &[ParameterSpec] {
        &self.params
    }
    fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }
    fn evaluate(&self, theta: &[f64]) -> Vec<StrategyOutcome> {
        (self.eval)(theta)
    }
}

/// `constant + Σ coefficient · θ_index`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearTerm {
    pub constant: f64,
    pub coefficients: Vec<(usize, f64)>,
}

impl LinearTerm {
    pub fn eval(&self, theta: &[f64]) -> f64 {
        let mut v = self.constant;
        for &(i, c) in &self.coefficients {
            v += c * theta[i];
        }
        v
    }
}

/// Effects and costs that are linear in the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    params: Vec<ParameterSpec>,
    strategies: Vec<Strategy>,
    effects: Vec<LinearTerm>,
    costs: Vec<LinearTerm>,
}

impl LinearModel {
    pub fn new(
        params: Vec<ParameterSpec>,
        strategies: Vec<Strategy>,
        effects: Vec<LinearTerm>,
        costs: Vec<LinearTerm>,
    ) -> Result<Self> {
        crate::psa::validate_strategies(&strategies)?;
        if effects.len() != strategies.len() || costs.len() != strategies.len() {
            return Err(Error::Argument("one effect and one cost term per strategy required".into()));
        }
        for term in effects.iter().chain(&costs) {
            if term.coefficients.iter().any(|&(i, _)| i >= params.len()) {
                return Err(Error::Argument("linear term refers to an unknown parameter".into()));
            }
        }
        Ok(Self {
            params,
            strategies,
            effects,
            costs,
        })
    }

    /// Replaces the prior of an existing parameter.
    pub fn set_prior(&mut self, name: &str, prior: Prior) -> Result<()> {
        set_prior(&mut self.params, "linear", name, prior)
    }
}

impl DecisionModel for LinearModel {
    fn parameters(&self) -> &[ParameterSpec] {
        &self.params
    }
    fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }
    fn evaluate(&self, theta: &[f64]) -> Vec<StrategyOutcome> {
        self.effects
            .iter()
            .zip(&self.costs)
            .map(|(e, c)| StrategyOutcome {
                effect: e.eval(theta),
                cost: c.eval(theta),
            })
            .collect()
    }
}

fn spec(name: &str, prior: Prior) -> ParameterSpec {
    ParameterSpec::new(name, prior).expect("valid built-in prior")
}

fn outcome(name: &str, family: SamplingFamily, parameter: &str) -> StudyOutcome {
    StudyOutcome {
        name: name.into(),
        family,
        parameter: parameter.into(),
    }
}

/// A model with its default study and willingness-to-pay.
#[derive(Debug, Clone)]
pub struct Example<M> {
    pub model: M,
    pub design: StudyDesign,
    pub lambda: f64,
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 5] = ["normal-normal", "beta-binomial", "gamma-poisson", "gamma-exponential", "dr-tox"];

/// Linear-normal toy. With `λ = 20000` the incremental net benefit of
/// strategy 2 is `200 + 1000·phi + 400·psi`, `phi, psi ~ Normal(0, 1)`, and
/// the study observes `Normal(phi, 4)` per participant.
pub fn normal_normal() -> Example<LinearModel> {
    let params = vec![
        spec("phi", Prior::Normal { mean: 0.0, variance: 1.0 }),
        spec("psi", Prior::Normal { mean: 0.0, variance: 1.0 }),
    ];
    let model = LinearModel::new(
        params,
        Strategy::defaults(2),
        vec![
            LinearTerm::default(),
            LinearTerm {
                constant: 0.01,
                coefficients: vec![(0, 0.05), (1, 0.02)],
            },
        ],
        vec![LinearTerm::default(), LinearTerm::default()],
    )
    .expect("valid built-in model");
    let design = StudyDesign::new(vec![outcome("y", SamplingFamily::Normal { variance: 4.0 }, "phi")], 50)
        .expect("valid built-in design");
    Example {
        model,
        design,
        lambda: 20_000.0,
    }
}

fn beta_binomial_eval(th: &[f64]) -> Vec<StrategyOutcome> {
    let (p, gain, cost) = (th[0], th[1], th[2]);
    vec![
        StrategyOutcome { effect: 0.0, cost: 0.0 },
        StrategyOutcome {
            effect: p * gain,
            cost,
        },
    ]
}

/// Response probability `p ~ Beta(12, 28)` drives a QALY gain `p · gain`
/// at a cost `c`; the study counts responders.
pub fn beta_binomial() -> Example<FnModel> {
    let model = FnModel {
        name: "beta-binomial",
        params: vec![
            spec("p", Prior::Beta { a: 12.0, b: 28.0 }),
            spec("gain", Prior::Normal { mean: 1.0, variance: 0.0025 }),
            spec("c", Prior::Gamma { shape: 100.0, rate: 100.0 / 5800.0 }),
        ],
        strategies: Strategy::defaults(2),
        eval: beta_binomial_eval,
    };
    let design = StudyDesign::new(vec![outcome("responders", SamplingFamily::Binomial, "p")], 50)
        .expect("valid built-in design");
    Example {
        model,
        design,
        lambda: 20_000.0,
    }
}

const GP_YEARS: f64 = 5.0;
const GP_DISUTILITY: f64 = 0.1;
const GP_DRUG: f64 = 5_000.0;

fn gamma_poisson_eval(th: &[f64]) -> Vec<StrategyOutcome> {
    let (rate, reduction, cost_event) = (th[0], th[1], th[2]);
    let events = [rate * GP_YEARS, rate * (1.0 - reduction) * GP_YEARS];
    vec![
        StrategyOutcome {
            effect: -GP_DISUTILITY * events[0],
            cost: cost_event * events[0],
        },
        StrategyOutcome {
            effect: -GP_DISUTILITY * events[1],
            cost: cost_event * events[1] + GP_DRUG,
        },
    ]
}

/// Event rate `rate ~ Gamma(20, 40)` per person-year, relative reduction
/// `reduction` under treatment; the study counts events over one
/// person-year per participant.
pub fn gamma_poisson() -> Example<FnModel> {
    let model = FnModel {
        name: "gamma-poisson",
        params: vec![
            spec("rate", Prior::Gamma { shape: 20.0, rate: 40.0 }),
            spec("reduction", Prior::Beta { a: 30.0, b: 70.0 }),
            spec("cost.event", Prior::Gamma { shape: 100.0, rate: 100.0 / 5000.0 }),
        ],
        strategies: Strategy::defaults(2),
        eval: gamma_poisson_eval,
    };
    let design = StudyDesign::new(
        vec![outcome("events", SamplingFamily::Poisson { exposure: 1.0 }, "rate")],
        50,
    )
    .expect("valid built-in design");
    Example {
        model,
        design,
        lambda: 20_000.0,
    }
}

const GE_UTILITY: f64 = 0.8;
const GE_ANNUAL_COST: f64 = 2_000.0;
const GE_DRUG: f64 = 25_000.0;

fn gamma_exponential_eval(th: &[f64]) -> Vec<StrategyOutcome> {
    let (hazard, hr) = (th[0], th[1]);
    let life = [1.0 / hazard, 1.0 / (hazard * hr)];
    vec![
        StrategyOutcome {
            effect: GE_UTILITY * life[0],
            cost: GE_ANNUAL_COST * life[0],
        },
        StrategyOutcome {
            effect: GE_UTILITY * life[1],
            cost: GE_ANNUAL_COST * life[1] + GE_DRUG,
        },
    ]
}

/// Constant mortality hazard `hazard ~ Gamma(16, 80)`, treatment hazard
/// ratio `hr ~ LogNormal(ln 0.75, 0.01)`; the study observes survival times
/// under standard care.
pub fn gamma_exponential() -> Example<FnModel> {
    let model = FnModel {
        name: "gamma-exponential",
        params: vec![
            spec("hazard", Prior::Gamma { shape: 16.0, rate: 80.0 }),
            spec("hr", Prior::LogNormal { mu: 0.75f64.ln(), sigma2: 0.01 }),
        ],
        strategies: Strategy::defaults(2),
        eval: gamma_exponential_eval,
    };
    let design = StudyDesign::new(vec![outcome("survival", SamplingFamily::Exponential, "hazard")], 50)
        .expect("valid built-in design");
    Example {
        model,
        design,
        lambda: 20_000.0,
    }
}

/// Life years accrued without and with distant recurrence.
pub const DR_LIFE_YEARS: [f64; 2] = [12.0, 6.0];
/// Treatment acquisition costs per strategy.
pub const DR_DRUG_COST: [f64; 3] = [0.0, 27_000.0, 34_500.0];

fn dr_tox_eval(th: &[f64]) -> Vec<StrategyOutcome> {
    let p_dr1 = th[0];
    let hr = [1.0, th[1], th[2]];
    let p_tox = [th[3], th[4], th[5]];
    let (u_ndr, u_dr, u_tox, c_dr, c_tox) = (th[6], th[7], th[8], th[9], th[10]);
    (0..3)
        .map(|t| {
            let p_dr = 1.0 - (1.0 - p_dr1).powf(hr[t]);
            StrategyOutcome {
                effect: (1.0 - p_dr) * u_ndr * DR_LIFE_YEARS[0] + p_dr * u_dr * DR_LIFE_YEARS[1] + p_tox[t] * u_tox,
                cost: DR_DRUG_COST[t] + p_dr * c_dr + p_tox[t] * c_tox,
            }
        })
        .collect()
}

/// Three-strategy recurrence and toxicity cohort model using the parameter
/// names of the PSA CSV layout. Strategy `t` has recurrence probability
/// `1 − (1 − p.dr.t1)^hr.dr.t`; the study observes recurrence under
/// strategy 1.
pub fn dr_tox() -> Example<FnModel> {
    let model = FnModel {
        name: "dr-tox",
        params: vec![
            spec("p.dr.t1", Prior::Beta { a: 27.0, b: 73.0 }),
            spec("hr.dr.t2", Prior::LogNormal { mu: 0.58f64.ln(), sigma2: 0.0036 }),
            spec("hr.dr.t3", Prior::LogNormal { mu: 0.56f64.ln(), sigma2: 0.0036 }),
            spec("p.tox.t1", Prior::Beta { a: 38.0, b: 62.0 }),
            spec("p.tox.t2", Prior::Beta { a: 22.0, b: 78.0 }),
            spec("p.tox.t3", Prior::Beta { a: 6.0, b: 94.0 }),
            spec("u.ndr", Prior::Beta { a: 31.0, b: 6.0 }),
            spec("u.dr", Prior::Beta { a: 350.0, b: 150.0 }),
            spec("u.d.tox", Prior::Normal { mean: -0.025, variance: 3.6e-5 }),
            spec("c.dr", Prior::Gamma { shape: 8.0, rate: 8.0 / 100_000.0 }),
            spec("c.tox", Prior::Gamma { shape: 16.0, rate: 16.0 / 34_000.0 }),
        ],
        strategies: Strategy::defaults(3),
        eval: dr_tox_eval,
    };
    let design = StudyDesign::new(vec![outcome("recurrence", SamplingFamily::Binomial, "p.dr.t1")], 100)
        .expect("valid built-in design");
    Example {
        model,
        design,
        lambda: 20_000.0,
    }
}

/// A built-in model by name, boxed.
pub fn builtin(name: &str) -> Result<Example<Box<dyn DecisionModel>>> {
    fn boxed<M: DecisionModel + 'static>(e: Example<M>) -> Example<Box<dyn DecisionModel>> {
        Example {
            model: Box::new(e.model),
            design: e.design,
            lambda: e.lambda,
        }
    }
    Ok(match name {
        "normal-normal" => boxed(normal_normal()),
        "beta-binomial" => boxed(beta_binomial()),
        "gamma-poisson" => boxed(gamma_poisson()),
        "gamma-exponential" => boxed(gamma_exponential()),
        "dr-tox" => boxed(dr_tox()),
        other => {
            return Err(Error::Argument(format!(
                "unknown model `{other}` (expected one of {})",
                BUILTIN_NAMES.join(", ")
            )))
        }
    })
}
