//! Statistical properties of the EVPPI and EVSI estimators on the built-in
//! models.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use evsi::evppi::{fit_evppi, EvppiConfig};
use evsi::evsi::{
    ess_direct, ess_from_posterior_means, ess_from_summary, evsi_ga_from_fit, evsi_is, evsi_mm, evsi_oracle,
    evsi_rb_with, GaWeight, PosteriorMeanConfig, RbConfig,
};
use evsi::model::{builtin, run_psa, Prior, SamplingFamily, StudyDesign, StudyOutcome};
use evsi::psa::{compute_net_benefit, evpi, WtpThreshold};
use evsi::stats::expected_gain_normal;

fn combined(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

#[test]
fn evsi_is_non_decreasing_in_n() {
    let ex = builtin::beta_binomial();
    let lambda = WtpThreshold::new(ex.lambda).unwrap();
    let ds = run_psa(&ex.model, 4000, 21).unwrap();
    let fit = fit_evppi(&ds, &ex.design.phi_names(), lambda, &EvppiConfig { bootstrap: 0, ..EvppiConfig::default() })
        .unwrap();
    let ns = [10u64, 50, 250];
    let mut curves = Vec::new();
    for &n in &ns {
        let d = ex.design.with_sample_size(n);
        let rb = evsi_rb_with(&ds, &d, lambda, &RbConfig { bootstrap: 40, ..RbConfig::with_seed(2) }).unwrap();
        let is = evsi_is(&fit.augmented, &d, lambda, 2).unwrap();
        let mm = evsi_mm(&ex.model, &fit.augmented, &d, lambda, 31, 2).unwrap();
        curves.push([rb, is, mm]);
    }
    for w in curves.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            assert!(
                b.value >= a.value - 3.0 * combined(a.se(), b.se()),
                "{}: N={:?} {} then N={:?} {}",
                a.method,
                a.design_n,
                a.value,
                b.design_n,
                b.value
            );
        }
    }
    // GA is exactly monotone on a fixed fit.
    let ga = evsi_ga_from_fit(&fit, &[40.0], &ns, GaWeight::Variance, &EvppiConfig { bootstrap: 0, ..EvppiConfig::default() })
        .unwrap();
    assert!(ga.windows(2).all(|w| w[1].value >= w[0].value));
}

#[test]
fn evppi_grows_with_the_parameter_set() {
    let ex = builtin::normal_normal();
    let lambda = WtpThreshold::new(ex.lambda).unwrap();
    let ds = run_psa(&ex.model, 4000, 22).unwrap();
    let config = EvppiConfig {
        bootstrap: 100,
        seed: 3,
        ..EvppiConfig::default()
    };
    let one = fit_evppi(&ds, &["phi".into()], lambda, &config).unwrap().estimate;
    let both = fit_evppi(&ds, &["phi".into(), "psi".into()], lambda, &config).unwrap().estimate;
    let total = evpi(&compute_net_benefit(&ds, lambda).unwrap());
    assert!(one.value <= both.value + 3.0 * combined(one.se(), both.se()));
    assert!(both.value <= total.value + 3.0 * combined(both.se(), total.se()));
    // With every parameter in φ the regression reproduces the PSA exactly.
    assert!((both.value - total.value).abs() < 1e-6 * total.value);
}

#[test]
fn evppi_matches_two_level_monte_carlo() {
    // INB = 200 + 1000·φ + 400·ψ: the inner loop averages over ψ at each φ.
    let ex = builtin::normal_normal();
    let lambda = WtpThreshold::new(ex.lambda).unwrap();
    let ds = run_psa(&ex.model, 4000, 23).unwrap();
    let regression = fit_evppi(&ds, &["phi".into()], lambda, &EvppiConfig { bootstrap: 100, seed: 4, ..EvppiConfig::default() })
        .unwrap()
        .estimate;
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let (outer, inner) = (1000, 1000);
    let mut conditional = Vec::with_capacity(outer);
    for _ in 0..outer {
        let phi: f64 = StandardNormal.sample(&mut rng);
        let mut sum = 0.0;
        for _ in 0..inner {
            let psi: f64 = StandardNormal.sample(&mut rng);
            sum += 200.0 + 1000.0 * phi + 400.0 * psi;
        }
        conditional.push(sum / inner as f64);
    }
    let gains: Vec<f64> = conditional.iter().map(|m| m.max(0.0)).collect();
    let mean_gain = gains.iter().sum::<f64>() / outer as f64;
    let mean_inb = conditional.iter().sum::<f64>() / outer as f64;
    let brute = mean_gain - mean_inb.max(0.0);
    let regret: Vec<f64> = conditional.iter().map(|m| (-m).max(0.0)).collect();
    let se = evsi::stats::std_error(&regret);
    assert!(
        (regression.value - brute).abs() <= 3.0 * combined(regression.se(), se),
        "{} ± {} vs {brute} ± {se}",
        regression.value,
        regression.se()
    );
}

#[test]
fn oracle_with_perfect_data_approaches_evpi() {
    let ex = builtin::normal_normal();
    let lambda = WtpThreshold::new(ex.lambda).unwrap();
    let design = StudyDesign::new(
        ["phi", "psi"]
            .iter()
            .map(|p| StudyOutcome {
                name: format!("y.{p}"),
                family: SamplingFamily::Normal { variance: 1e-8 },
                parameter: (*p).into(),
            })
            .collect(),
        10,
    )
    .unwrap();
    let e = evsi_oracle(&ex.model, &design, lambda, 3000, 200, 5).unwrap();
    let truth = expected_gain_normal(200.0, (1000.0f64.powi(2) + 400.0f64.powi(2)).sqrt());
    assert!((e.value - truth).abs() <= 3.0 * e.se(), "{} ± {} vs {truth}", e.value, e.se());
}

/// Large-sample target of the summary estimator when the summary is the
/// hazard MLE `n / Σx` under a `Gamma(a, b)` prior: that summary is biased
/// and its variance grows with φ², so the target is not `a`.
fn exponential_summary_target(a: f64, b: f64, n: f64) -> f64 {
    let var_phi = a / (b * b);
    let second_moment = a * (a + 1.0) / (b * b);
    let c = n / (n - 1.0);
    let var_w = c * c * var_phi + second_moment * n * n / ((n - 1.0).powi(2) * (n - 2.0));
    n * (var_w / var_phi - 1.0)
}

#[test]
fn ess_estimators_agree_on_conjugate_models() {
    const PILOT: u64 = 50;
    for name in ["beta-binomial", "gamma-exponential", "gamma-poisson"] {
        let ex = builtin::builtin(name).unwrap();
        let ds = run_psa(ex.model.as_ref(), 40_000, 25).unwrap();
        let outcome = &ex.design.outcomes()[0];
        let spec = ex.model.parameters().iter().find(|p| p.name == outcome.parameter).unwrap();
        let direct = ess_direct(spec, outcome.family).unwrap().n0;
        let summary_target = match (spec.prior, outcome.family) {
            (Prior::Gamma { shape, rate }, SamplingFamily::Exponential) => {
                exponential_summary_target(shape, rate, PILOT as f64)
            }
            _ => direct,
        };
        let summary = ess_from_summary(&ex.design, &ds, &outcome.parameter, PILOT, 6).unwrap().n0;
        let config = PosteriorMeanConfig {
            priors: Some(ex.model.parameters().to_vec()),
        };
        let post = ess_from_posterior_means(&ex.design, &ds, &outcome.parameter, PILOT, 6, &config).unwrap().n0;
        for (method, v, target) in [("summary", summary, summary_target), ("posterior-mean", post, direct)] {
            assert!((v - target).abs() <= 0.15 * target, "{name} {method}: {v} vs {target}");
        }
    }
}

#[test]
fn no_information_means_no_value() {
    let ex = builtin::gamma_poisson();
    let lambda = WtpThreshold::new(ex.lambda).unwrap();
    let e = evsi_oracle(&ex.model, &ex.design.with_sample_size(0), lambda, 150, 150, 7).unwrap();
    assert_eq!(e.value, 0.0);
}
