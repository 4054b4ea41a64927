//! Flat `key = value` scenario files.
//!
//! ```text
//! # built-in model, optionally with replaced priors
//! model = beta-binomial
//! lambda = 20000
//! param.p = beta 12 28
//!
//! # or a model linear in its parameters
//! model = linear
//! strategies = standard, new
//! param.phi = normal 0 1
//! effect.t2 = 0.01
//! effect.t2.phi = 0.05
//! cost.t2 = 100
//!
//! outcome.y = normal phi 4
//! design.n = 50
//! population.incidence = 1000
//! population.horizon = 10
//! population.discount = 0.035
//! research.fixed = 100000
//! research.per_participant = 500
//! ```
//!
//! Prior families: `beta a b`, `gamma shape rate`, `normal mean variance`,
//! `inverse-gamma shape scale`, `lognormal mu sigma2`. Outcome families:
//! `binomial <param>`, `normal <param> <variance>`,
//! `normal-variance <param> <mean>`, `poisson <param> <exposure>`,
//! `exponential <param>`. Any `outcome.` line replaces the built-in model's
//! default study. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use crate::enbs::{CostModel, PopulationSpec};
use crate::error::{Error, Result};
use crate::psa::{PsaDataset, Strategy, WtpThreshold};

use super::builtin::{self, Example, FnModel, LinearModel, LinearTerm};
use super::design::{SamplingFamily, StudyDesign, StudyOutcome};
use super::prior::{ParameterSpec, Prior};
use super::DecisionModel;

/// Everything a run needs: model, study, threshold and optional ENBS inputs.
pub struct Scenario {
    pub model_name: String,
    pub model: Box<dyn DecisionModel>,
    pub design: StudyDesign,
    pub lambda: WtpThreshold,
    pub strategy_labels: Option<Vec<String>>,
    pub population: Option<PopulationSpec>,
    pub research: Option<CostModel>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("model_name", &self.model_name)
            .field("parameters", &self.model.parameters())
            .field("design", &self.design)
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl Scenario {
    /// Built-in model with its default study.
    pub fn builtin(name: &str) -> Result<Self> {
        let ex = builtin::builtin(name)?;
        Ok(Self {
            model_name: name.to_string(),
            model: ex.model,
            design: ex.design,
            lambda: WtpThreshold::new(ex.lambda)?,
            strategy_labels: None,
            population: None,
            research: None,
        })
    }

    /// [`super::run_psa`] with the configured strategy labels applied.
    pub fn run_psa(&self, s: usize, seed: u64) -> Result<PsaDataset> {
        let ds = super::run_psa(self.model.as_ref(), s, seed)?;
        match &self.strategy_labels {
            Some(labels) => ds.with_strategy_labels(labels),
            None => Ok(ds),
        }
    }
}

struct Entry {
    line: usize,
    value: String,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn number(e: &Entry, what: &str) -> Result<f64> {
    let v: f64 = e
        .value
        .trim()
        .parse()
        .map_err(|_| err(e.line, format!("{what}: `{}` is not a number", e.value)))?;
    if !v.is_finite() {
        return Err(err(e.line, format!("{what} must be finite")));
    }
    Ok(v)
}

fn count(e: &Entry, what: &str) -> Result<u64> {
    e.value
        .trim()
        .parse()
        .map_err(|_| err(e.line, format!("{what}: `{}` is not a non-negative integer", e.value)))
}

fn parse_prior(e: &Entry) -> Result<Prior> {
    let words: Vec<&str> = e.value.split_whitespace().collect();
    if words.len() != 3 {
        return Err(err(e.line, "expected `<family> <h1> <h2>`"));
    }
    let h = |i: usize| -> Result<f64> {
        words[i]
            .parse::<f64>()
            .map_err(|_| err(e.line, format!("`{}` is not a number", words[i])))
    };
    let (h1, h2) = (h(1)?, h(2)?);
    let prior = match words[0] {
        "beta" => Prior::Beta { a: h1, b: h2 },
        "gamma" => Prior::Gamma { shape: h1, rate: h2 },
        "normal" => Prior::Normal { mean: h1, variance: h2 },
        "inverse-gamma" => Prior::InverseGamma { shape: h1, scale: h2 },
        "lognormal" => Prior::LogNormal { mu: h1, sigma2: h2 },
        other => return Err(err(e.line, format!("unknown prior family `{other}`"))),
    };
    prior.validate().map_err(|x| err(e.line, x.to_string()))?;
    Ok(prior)
}

fn parse_outcome(name: &str, e: &Entry) -> Result<StudyOutcome> {
    let words: Vec<&str> = e.value.split_whitespace().collect();
    let arg = |i: usize| -> Result<f64> {
        let w = words
            .get(i)
            .ok_or_else(|| err(e.line, format!("`{}` outcome needs a numeric argument", words[0])))?;
        w.parse::<f64>().map_err(|_| err(e.line, format!("`{w}` is not a number")))
    };
    if words.len() < 2 {
        return Err(err(e.line, "expected `<family> <parameter> [argument]`"));
    }
    let (family, arity) = match words[0] {
        "binomial" => (SamplingFamily::Binomial, 2),
        "normal" => (SamplingFamily::Normal { variance: arg(2)? }, 3),
        "normal-variance" => (SamplingFamily::NormalKnownMean { mean: arg(2)? }, 3),
        "poisson" => (SamplingFamily::Poisson { exposure: arg(2)? }, 3),
        "exponential" => (SamplingFamily::Exponential, 2),
        other => return Err(err(e.line, format!("unknown outcome family `{other}`"))),
    };
    if words.len() != arity {
        return Err(err(e.line, format!("`{}` outcome takes {} fields", words[0], arity)));
    }
    Ok(StudyOutcome {
        name: name.to_string(),
        family,
        parameter: words[1].to_string(),
    })
}

fn with_overrides<M: DecisionModel + 'static>(
    mut ex: Example<M>,
    overrides: &[(&str, Prior, usize)],
    set: fn(&mut M, &str, Prior) -> Result<()>,
) -> Result<Example<Box<dyn DecisionModel>>> {
    for &(name, prior, line) in overrides {
        set(&mut ex.model, name, prior).map_err(|x| err(line, x.to_string()))?;
    }
    Ok(Example {
        model: Box::new(ex.model),
        design: ex.design,
        lambda: ex.lambda,
    })
}

/// `t<k>` → 0-based strategy column.
fn strategy_key(s: &str, line: usize) -> Result<usize> {
    s.strip_prefix('t')
        .and_then(|k| k.parse::<usize>().ok())
        .filter(|&k| k >= 1)
        .map(|k| k - 1)
        .ok_or_else(|| err(line, format!("`{s}` is not a strategy key of the form t<k>")))
}

/// Parses a scenario from text. Errors carry 1-based line numbers.
pub fn parse_config(text: &str) -> Result<Scenario> {
    // Keys in order of appearance; duplicates are rejected.
    let mut entries: Vec<(String, Entry)> = Vec::new();
    let mut seen = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| err(line, "expected `key = value`"))?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(err(line, "empty key"));
        }
        if let Some(prev) = seen.insert(key.clone(), line) {
            return Err(err(line, format!("`{key}` already set on line {prev}")));
        }
        entries.push((
            key,
            Entry {
                line,
                value: v.trim().to_string(),
            },
        ));
    }

    let find = |key: &str| entries.iter().find(|(k, _)| k == key).map(|(_, e)| e);
    let model_entry = find("model").ok_or_else(|| err(0, "missing `model` key"))?;
    let model_name = model_entry.value.clone();

    let mut params: Vec<(ParameterSpec, usize)> = Vec::new();
    let mut outcomes = Vec::new();
    let mut effects: BTreeMap<usize, LinearTerm> = BTreeMap::new();
    let mut costs: BTreeMap<usize, LinearTerm> = BTreeMap::new();
    let mut coef_entries: Vec<(bool, usize, String, &Entry)> = Vec::new();
    let mut population = [None, None, None];
    let mut research = [None, None];
    let mut lambda = None;
    let mut design_n = None;
    let mut labels = None;

    for (key, e) in &entries {
        let parts: Vec<&str> = key.splitn(3, '.').collect();
        match parts.as_slice() {
            ["model"] => {}
            ["lambda"] => lambda = Some((number(e, "lambda")?, e.line)),
            ["strategies"] => {
                let l: Vec<String> = e.value.split(',').map(|s| s.trim().to_string()).collect();
                if l.iter().any(|s| s.is_empty()) {
                    return Err(err(e.line, "empty strategy label"));
                }
                labels = Some((l, e.line));
            }
            ["param", _] | ["param", _, _] => {
                let name = &key["param.".len()..];
                params.push((ParameterSpec::new(name, parse_prior(e)?)?, e.line));
            }
            ["outcome", _] | ["outcome", _, _] => {
                let name = &key["outcome.".len()..];
                outcomes.push((parse_outcome(name, e)?, e.line));
            }
            [kind @ ("effect" | "cost"), t] => {
                let col = strategy_key(t, e.line)?;
                let map = if *kind == "effect" { &mut effects } else { &mut costs };
                map.entry(col).or_default().constant = number(e, key)?;
            }
            [kind @ ("effect" | "cost"), t, param] => {
                let col = strategy_key(t, e.line)?;
                coef_entries.push((*kind == "effect", col, param.to_string(), e));
            }
            ["design", "n"] => design_n = Some(count(e, "design.n")?),
            ["population", "incidence"] => population[0] = Some(number(e, key)?),
            ["population", "horizon"] => population[1] = Some(count(e, key)? as f64),
            ["population", "discount"] => population[2] = Some(number(e, key)?),
            ["research", "fixed"] => research[0] = Some(number(e, key)?),
            ["research", "per_participant"] => research[1] = Some(number(e, key)?),
            _ => return Err(err(e.line, format!("unknown key `{key}`"))),
        }
    }

    let (model, default_design, default_lambda): (Box<dyn DecisionModel>, Option<StudyDesign>, Option<f64>) =
        if model_name == "linear" {
            if params.is_empty() {
                return Err(err(model_entry.line, "a linear model needs at least one `param.` line"));
            }
            let specs: Vec<ParameterSpec> = params.iter().map(|(p, _)| p.clone()).collect();
            for (is_effect, col, pname, e) in coef_entries {
                let idx = specs
                    .iter()
                    .position(|p| p.name == pname)
                    .ok_or_else(|| err(e.line, format!("unknown parameter `{pname}`")))?;
                let map = if is_effect { &mut effects } else { &mut costs };
                map.entry(col).or_default().coefficients.push((idx, number(e, &pname)?));
            }
            let highest = effects.keys().chain(costs.keys()).max().map_or(0, |k| k + 1);
            let t = match &labels {
                Some((l, line)) => {
                    if l.len() < highest {
                        return Err(err(*line, format!("{} labels for {highest} strategies", l.len())));
                    }
                    l.len()
                }
                None => highest,
            };
            if t < 2 {
                return Err(err(model_entry.line, "a linear model needs at least two strategies"));
            }
            let term = |m: &BTreeMap<usize, LinearTerm>, i| m.get(&i).cloned().unwrap_or_default();
            let model = LinearModel::new(
                specs,
                Strategy::defaults(t),
                (0..t).map(|i| term(&effects, i)).collect(),
                (0..t).map(|i| term(&costs, i)).collect(),
            )
            .map_err(|x| err(model_entry.line, x.to_string()))?;
            (Box::new(model), None, None)
        } else {
            if let Some((_, _, _, e)) = coef_entries.first() {
                return Err(err(e.line, "effect/cost terms are only allowed with `model = linear`"));
            }
            if let Some((_, e)) = entries
                .iter()
                .find(|(k, _)| k.starts_with("effect.") || k.starts_with("cost."))
            {
                return Err(err(e.line, "effect/cost terms are only allowed with `model = linear`"));
            }
            let overrides: Vec<(&str, Prior, usize)> =
                params.iter().map(|(p, line)| (p.name.as_str(), p.prior, *line)).collect();
            let ex = match model_name.as_str() {
                "normal-normal" => with_overrides(builtin::normal_normal(), &overrides, LinearModel::set_prior)?,
                "beta-binomial" => with_overrides(builtin::beta_binomial(), &overrides, FnModel::set_prior)?,
                "gamma-poisson" => with_overrides(builtin::gamma_poisson(), &overrides, FnModel::set_prior)?,
                "gamma-exponential" => with_overrides(builtin::gamma_exponential(), &overrides, FnModel::set_prior)?,
                "dr-tox" => with_overrides(builtin::dr_tox(), &overrides, FnModel::set_prior)?,
                other => {
                    return Err(err(
                        model_entry.line,
                        format!(
                            "unknown model `{other}` (expected linear or one of {})",
                            builtin::BUILTIN_NAMES.join(", ")
                        ),
                    ))
                }
            };
            if let Some((l, line)) = &labels {
                if l.len() != ex.model.strategies().len() {
                    return Err(err(
                        *line,
                        format!("{} labels for {} strategies", l.len(), ex.model.strategies().len()),
                    ));
                }
            }
            (ex.model, Some(ex.design), Some(ex.lambda))
        };

    let n = design_n.or(default_design.as_ref().map(StudyDesign::sample_size));
    let design = if !outcomes.is_empty() {
        let line = outcomes[0].1;
        let list: Vec<StudyOutcome> = outcomes.into_iter().map(|(o, _)| o).collect();
        let d = StudyDesign::new(list, n.unwrap_or(0)).map_err(|x| err(line, x.to_string()))?;
        d.validate_against(model.parameters()).map_err(|x| err(line, x.to_string()))?;
        d
    } else {
        match default_design {
            Some(d) => d.with_sample_size(n.unwrap_or(d.sample_size())),
            None => return Err(err(model_entry.line, "no `outcome.` lines: the study design is undefined")),
        }
    };

    let lambda = match lambda {
        Some((v, line)) => WtpThreshold::new(v).map_err(|x| err(line, x.to_string()))?,
        None => match default_lambda {
            Some(v) => WtpThreshold::new(v)?,
            None => return Err(err(model_entry.line, "missing `lambda`")),
        },
    };

    let population = match population {
        [None, None, None] => None,
        [Some(i), Some(h), d] => Some(PopulationSpec::new(i, h as u32, d.unwrap_or(0.0))?),
        _ => {
            return Err(err(
                0,
                "population needs both `population.incidence` and `population.horizon`",
            ))
        }
    };
    let research = match research {
        [None, None] => None,
        [f, p] => Some(CostModel::new(f.unwrap_or(0.0), p.unwrap_or(0.0))?),
    };

    Ok(Scenario {
        model_name,
        model,
        design,
        lambda,
        strategy_labels: labels.map(|(l, _)| l),
        population,
        research,
    })
}

pub fn load_config(path: &Path) -> Result<Scenario> {
    parse_config(&std::fs::read_to_string(path)?)
}
