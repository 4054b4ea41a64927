//! Nested Monte Carlo EVSI: an unbiased but expensive reference that draws
//! parameters and data in an outer loop and averages net benefit over the
//! posterior in an inner loop.

use crate::error::{Error, Result};
use crate::matrix::{argmax, Matrix};
use crate::model::{draw_prior, evaluate_checked, simulate_with, DecisionModel, Metropolis, PosteriorSampler, StudyDesign};
use crate::parallel::try_map_indexed;
use crate::psa::WtpThreshold;
use crate::rng::{stream, Purpose};
use crate::voi::Method;
use crate::voi::VoiEstimate;

use super::{evsi_from_posterior_means, PosteriorMeanMatrix};

/// Smallest accepted loop size.
const MIN_LOOP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
    pub metropolis: Metropolis,
}

impl OracleConfig {
    pub fn new(outer: usize, inner: usize, seed: u64) -> Self {
        Self {
            outer,
            inner,
            seed,
            metropolis: Metropolis::default(),
        }
    }
}

pub fn evsi_oracle(
    model: &dyn DecisionModel,
    design: &StudyDesign,
    lambda: WtpThreshold,
    outer: usize,
    inner: usize,
    seed: u64,
) -> Result<VoiEstimate> {
    evsi_oracle_with(model, design, lambda, &OracleConfig::new(outer, inner, seed))
}

/// Outer draw `i` takes θ and the data from `(seed, OracleOuter, i)`. Every
/// inner loop restarts `(seed, OracleInner, 0)` and every Metropolis chain
/// `(seed, Metropolis, 0)`, so identical data give identical posterior means
/// and a study that teaches nothing has exactly zero value.
pub fn evsi_oracle_with(
    model: &dyn DecisionModel,
    design: &StudyDesign,
    lambda: WtpThreshold,
    config: &OracleConfig,
) -> Result<VoiEstimate> {
    if config.outer < MIN_LOOP || config.inner < MIN_LOOP {
        return Err(Error::Argument(format!(
            "nested Monte Carlo needs at least {MIN_LOOP} outer and inner draws, got {} and {}",
            config.outer, config.inner
        )));
    }
    design.validate_against(model.parameters())?;
    let params = model.parameters();
    let names = model.parameter_names();
    let phi_idx: Vec<usize> = design
        .phi_names()
        .iter()
        .map(|n| names.iter().position(|m| m == n).expect("design validated against the model"))
        .collect();
    let t = model.strategies().len();
    let l = lambda.value();
    let rows = try_map_indexed(config.outer, |i| -> Result<Vec<f64>> {
        let mut rng = stream(config.seed, Purpose::OracleOuter, i as u64);
        let theta = draw_prior(params, &mut rng);
        let phi: Vec<f64> = phi_idx.iter().map(|&k| theta[k]).collect();
        let x = simulate_with(design, &phi, &mut rng)?;
        let post = PosteriorSampler::new(params, design, &x, config.inner, config.metropolis, config.seed, 0)?;
        let mut rng = stream(config.seed, Purpose::OracleInner, 0);
        let mut sum = vec![0.0; t];
        for j in 0..config.inner {
            let draw = post.draw(j, &mut rng);
            for (s, o) in sum.iter_mut().zip(evaluate_checked(model, &draw, j + 1)?) {
                *s += l * o.effect - o.cost;
            }
        }
        Ok(sum.into_iter().map(|v| v / config.inner as f64).collect())
    })?;
    let nb = Matrix::from_rows(&rows);
    let reference = argmax(&nb.column_means());
    let mut mu = Matrix::zeros(config.outer, t);
    for r in 0..config.outer {
        for c in 0..t {
            mu.set(r, c, nb.get(r, c) - nb.get(r, reference));
        }
    }
    let mu = PosteriorMeanMatrix::new(mu, reference)?;
    let mut est = evsi_from_posterior_means(&mu, Method::NestedMonteCarlo).with_n(design.sample_size());
    est.note("outer", config.outer as f64);
    est.note("inner", config.inner as f64);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin;
    use crate::stats;

    #[test]
    fn zero_sample_size_has_zero_value() {
        let ex = builtin::normal_normal();
        let design = ex.design.with_sample_size(0);
        let e = evsi_oracle(&ex.model, &design, WtpThreshold::new(ex.lambda).unwrap(), 200, 200, 3).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.diagnostics.raw_value, 0.0);
    }

    #[test]
    fn normal_normal_closed_form() {
        let ex = builtin::normal_normal();
        let e = evsi_oracle(&ex.model, &ex.design, WtpThreshold::new(ex.lambda).unwrap(), 2000, 500, 8).unwrap();
        let truth = stats::expected_gain_normal(200.0, 1000.0 * (50.0f64 / 54.0).sqrt());
        assert!((e.value - truth).abs() < 3.0 * e.se() + 0.02 * truth, "{} ± {} vs {truth}", e.value, e.se());
    }

    #[test]
    fn loop_sizes_are_checked() {
        let ex = builtin::normal_normal();
        let lambda = WtpThreshold::new(ex.lambda).unwrap();
        assert!(matches!(evsi_oracle(&ex.model, &ex.design, lambda, 99, 500, 1), Err(Error::Argument(_))));
    }
}
