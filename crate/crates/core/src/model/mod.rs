//! Decision-analytic models, proposed studies and Bayesian updating.

pub mod builtin;
pub mod config;
pub mod design;
pub mod prior;
pub mod update;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::parallel::try_map_indexed;
use crate::psa::{PsaDataset, Strategy};
use crate::rng::{stream, Purpose};

pub use design::{
    log_likelihood, simulate_future_dataset, simulate_with, summarize_dataset, FutureDataset, Observation,
    SamplingFamily, StudyDesign, StudyOutcome, SummaryScale, SummaryStatistic,
};
pub use prior::{ParameterSpec, Prior, Transform};
pub use update::{conjugate_update, Metropolis, PosteriorSampler};

/// Health effect and cost of one strategy for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyOutcome {
    pub effect: f64,
    pub cost: f64,
}

/// A model mapping a parameter vector θ to per-strategy outcomes.
///
/// `evaluate` must be deterministic and free of side effects; PSA rows are
/// evaluated concurrently.
pub trait DecisionModel: Send + Sync {
    fn parameters(&self) -> &[ParameterSpec];
    fn strategies(&self) -> &[Strategy];
    /// `theta` is aligned with `parameters()`.
    fn evaluate(&self, theta: &[f64]) -> Vec<StrategyOutcome>;

    fn parameter_names(&self) -> Vec<String> {
        self.parameters().iter().map(|p| p.name.clone()).collect()
    }

    fn parameter_index(&self, name: &str) -> Result<usize> {
        self.parameters()
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::Argument(format!("unknown parameter `{name}`")))
    }
}

/// One joint draw from the independent priors.
pub fn draw_prior<R: Rng + ?Sized>(params: &[ParameterSpec], rng: &mut R) -> Vec<f64> {
    params.iter().map(|p| p.prior.sample(rng)).collect()
}

/// Evaluates the model at `theta`, checking output shape and finiteness.
/// `row` (1-based) only labels errors.
pub fn evaluate_checked(model: &dyn DecisionModel, theta: &[f64], row: usize) -> Result<Vec<StrategyOutcome>> {
    let out = model.evaluate(theta);
    if out.len() != model.strategies().len() {
        return Err(Error::Model(format!(
            "model returned {} outcomes for {} strategies at draw {row}",
            out.len(),
            model.strategies().len()
        )));
    }
    for (t, o) in out.iter().enumerate() {
        if !o.effect.is_finite() || !o.cost.is_finite() {
            return Err(Error::Model(format!(
                "non-finite output for strategy {} at draw {row} (theta = {theta:?})",
                t + 1
            )));
        }
    }
    Ok(out)
}

/// Assembles a dataset from parameter rows, evaluating the model in parallel.
pub fn evaluate_rows(model: &dyn DecisionModel, thetas: Vec<Vec<f64>>) -> Result<PsaDataset> {
    let s = thetas.len();
    if s < 2 {
        return Err(Error::Argument(format!("S ≥ 2 required, got {s}")));
    }
    let t = model.strategies().len();
    let outs = try_map_indexed(s, |r| evaluate_checked(model, &thetas[r], r + 1))?;
    let mut effects = Matrix::zeros(s, t);
    let mut costs = Matrix::zeros(s, t);
    for (r, row) in outs.iter().enumerate() {
        for (c, o) in row.iter().enumerate() {
            effects.set(r, c, o.effect);
            costs.set(r, c, o.cost);
        }
    }
    PsaDataset::new(
        model.parameter_names(),
        model.strategies().to_vec(),
        Matrix::from_rows(&thetas),
        effects,
        costs,
    )
}

/// Probabilistic sensitivity analysis: `s` independent prior draws, row `r`
/// drawn from the stream `(seed, PsaDraw, r)`.
pub fn run_psa(model: &dyn DecisionModel, s: usize, seed: u64) -> Result<PsaDataset> {
    if s < 2 {
        return Err(Error::Argument(format!("S ≥ 2 required, got {s}")));
    }
    let params = model.parameters();
    let thetas = crate::parallel::map_indexed(s, |r| draw_prior(params, &mut stream(seed, Purpose::PsaDraw, r as u64)));
    evaluate_rows(model, thetas)
}
