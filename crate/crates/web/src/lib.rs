//! Browser bindings for the value-of-information library.
//!
//! Every operation takes a JSON request and returns a JSON response, so the
//! same functions back the wasm exports and the native tests.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use evsi::enbs::{enbs_curve, CostModel, EnbsCurve, PopulationSpec};
use evsi::evppi::{fit_evppi, EvppiConfig};
use evsi::evsi::{ess_direct, evsi_ga_from_fit, evsi_rb_with, GaWeight, RbConfig};
use evsi::model::builtin::{self, BUILTIN_NAMES};
use evsi::model::run_psa;
use evsi::psa::{compute_net_benefit, decision_uncertainty_curves, evpi, DecisionUncertaintyCurves, WtpThreshold};

/// Keeps a request responsive on the page's main thread.
pub const MAX_SAMPLES: usize = 20_000;
pub const MAX_THRESHOLDS: usize = 400;

fn default_samples() -> usize {
    2000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMethod {
    Ga,
    Rb,
}

#[derive(Debug, Deserialize)]
pub struct EvsiCurveRequest {
    pub model: String,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: u64,
    pub n: Vec<u64>,
    #[serde(default = "default_method")]
    pub method: CurveMethod,
    /// Defaults to the model's own threshold.
    pub lambda: Option<f64>,
}

fn default_method() -> CurveMethod {
    CurveMethod::Ga
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct CurvePoint {
    pub n: u64,
    pub evsi: f64,
    pub se: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct EvsiCurveResponse {
    pub model: String,
    pub lambda: f64,
    pub evpi: f64,
    pub evppi: f64,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Deserialize)]
pub struct CurvesRequest {
    pub model: String,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: u64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub steps: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct CurvesResponse {
    pub strategies: Vec<String>,
    pub curves: DecisionUncertaintyCurves,
    /// EVPI at each threshold; equals the lowest expected loss there.
    pub evpi: Vec<f64>,
}

#[derive(Debug, Deserialize)]
pub struct EnbsRequest {
    /// `(N, per-person EVSI)` pairs.
    pub evsi: Vec<(u64, f64)>,
    pub incidence: f64,
    pub horizon: u32,
    #[serde(default)]
    pub discount: f64,
    pub fixed: f64,
    pub per_participant: f64,
}

fn parse<T: for<'de> Deserialize<'de>>(json: &str) -> Result<T, String> {
    serde_json::from_str(json).map_err(|e| format!("invalid request: {e}"))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn check_samples(samples: usize) -> Result<(), String> {
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(format!("samples must be between 2 and {MAX_SAMPLES}, got {samples}"));
    }
    Ok(())
}

/// Names of the built-in models, as a JSON array.
pub fn models() -> String {
    serde_json::to_string(&BUILTIN_NAMES).expect("static list")
}

/// EVSI at each requested sample size, with EVPI and EVPPI for scale.
pub fn evsi_curve(request: &str) -> Result<String, String> {
    let req: EvsiCurveRequest = parse(request)?;
    check_samples(req.samples)?;
    if req.n.is_empty() || req.n.contains(&0) {
        return Err("sample sizes must be a non-empty list of positive integers".into());
    }
    let ex = builtin::builtin(&req.model).map_err(|e| e.to_string())?;
    let lambda = WtpThreshold::new(req.lambda.unwrap_or(ex.lambda)).map_err(|e| e.to_string())?;
    let ds = run_psa(ex.model.as_ref(), req.samples, req.seed).map_err(|e| e.to_string())?;
    let total = evpi(&compute_net_benefit(&ds, lambda).map_err(|e| e.to_string())?);
    let config = EvppiConfig {
        bootstrap: 0,
        seed: req.seed,
        ..EvppiConfig::default()
    };
    let fit = fit_evppi(&ds, &ex.design.phi_names(), lambda, &config).map_err(|e| e.to_string())?;
    let estimates = match req.method {
        CurveMethod::Ga => {
            let n0 = ex
                .design
                .phi_names()
                .iter()
                .map(|name| {
                    let spec = ex.model.parameters().iter().find(|p| &p.name == name).expect("design parameter");
                    let outcome = ex.design.outcomes().iter().find(|o| &o.parameter == name).expect("outcome");
                    ess_direct(spec, outcome.family).map(|e| e.n0)
                })
                .collect::<evsi::Result<Vec<f64>>>()
                .map_err(|e| format!("{e}; use the rb method for this model"))?;
            evsi_ga_from_fit(&fit, &n0, &req.n, GaWeight::Variance, &config)
        }
        CurveMethod::Rb => {
            let rb = RbConfig {
                bootstrap: 0,
                ..RbConfig::with_seed(req.seed)
            };
            req.n
                .iter()
                .map(|&n| evsi_rb_with(&ds, &ex.design.with_sample_size(n), lambda, &rb))
                .collect()
        }
    }
    .map_err(|e| e.to_string())?;
    let points = estimates
        .iter()
        .map(|e| CurvePoint {
            n: e.design_n.unwrap_or_default(),
            evsi: e.value,
            se: e.se(),
        })
        .collect();
    to_json(&EvsiCurveResponse {
        model: req.model,
        lambda: lambda.value(),
        evpi: total.value,
        evppi: fit.estimate.value,
        points,
    })
}

/// CEAC, CEAF and expected loss over an evenly spaced threshold grid.
pub fn decision_curves(request: &str) -> Result<String, String> {
    let req: CurvesRequest = parse(request)?;
    check_samples(req.samples)?;
    if !(2..=MAX_THRESHOLDS).contains(&req.steps) {
        return Err(format!("steps must be between 2 and {MAX_THRESHOLDS}"));
    }
    if !(req.lambda_min > 0.0 && req.lambda_max > req.lambda_min && req.lambda_max.is_finite()) {
        return Err("thresholds need 0 < lambda_min < lambda_max".into());
    }
    let ex = builtin::builtin(&req.model).map_err(|e| e.to_string())?;
    let ds = run_psa(ex.model.as_ref(), req.samples, req.seed).map_err(|e| e.to_string())?;
    let step = (req.lambda_max - req.lambda_min) / (req.steps - 1) as f64;
    let lambdas: Vec<f64> = (0..req.steps).map(|i| req.lambda_min + step * i as f64).collect();
    let curves = decision_uncertainty_curves(&ds, &lambdas).map_err(|e| e.to_string())?;
    let evpi = lambdas
        .iter()
        .map(|&l| {
            let l = WtpThreshold::new(l)?;
            Ok(evpi(&compute_net_benefit(&ds, l)?).value)
        })
        .collect::<evsi::Result<Vec<f64>>>()
        .map_err(|e| e.to_string())?;
    to_json(&CurvesResponse {
        strategies: ds.strategies().iter().map(|s| s.label.clone()).collect(),
        curves,
        evpi,
    })
}

/// Expected net benefit of sampling and the optimal study size.
pub fn enbs(request: &str) -> Result<String, String> {
    let req: EnbsRequest = parse(request)?;
    let pop = PopulationSpec::new(req.incidence, req.horizon, req.discount).map_err(|e| e.to_string())?;
    let cost = CostModel::new(req.fixed, req.per_participant).map_err(|e| e.to_string())?;
    let curve: EnbsCurve = enbs_curve(&req.evsi, &pop, &cost).map_err(|e| e.to_string())?;
    to_json(&curve)
}

#[wasm_bindgen(js_name = models)]
pub fn models_js() -> String {
    models()
}

#[wasm_bindgen(js_name = evsiCurve)]
pub fn evsi_curve_js(request: &str) -> Result<String, JsValue> {
    evsi_curve(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = decisionCurves)]
pub fn decision_curves_js(request: &str) -> Result<String, JsValue> {
    decision_curves(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = enbs)]
pub fn enbs_js(request: &str) -> Result<String, JsValue> {
    enbs(request).map_err(|e| JsValue::from_str(&e))
}
