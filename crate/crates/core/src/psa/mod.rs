//! Probabilistic sensitivity analysis output and the quantities computed
//! directly from it: net benefit, incremental net benefit, EVPI and the
//! decision-uncertainty curves (CEAC, CEAF, expected loss).

mod csv_io;

pub use csv_io::{
    format_decimal, load_augmented_psa_dataset, load_psa_dataset, save_augmented_psa_dataset,
    save_psa_dataset, write_curves_csv,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{argmax, Matrix};
use crate::voi::{decision_gain, Method, VoiEstimate, VoiKind};

/// A decision option. `index` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub index: usize,
    pub label: String,
}

impl Strategy {
    pub fn new(index: usize, label: impl Into<String>) -> Self {
        Self {
            index,
            label: label.into(),
        }
    }

    /// Strategies `t1..tT` with default labels.
    pub fn defaults(count: usize) -> Vec<Strategy> {
        (1..=count).map(|k| Strategy::new(k, format!("t{k}"))).collect()
    }
}

pub(crate) fn validate_strategies(strategies: &[Strategy]) -> Result<()> {
    if strategies.len() < 2 {
        return Err(Error::Schema(format!(
            "at least 2 strategies required, found {}",
            strategies.len()
        )));
    }
    for (i, s) in strategies.iter().enumerate() {
        if s.index != i + 1 {
            return Err(Error::Schema(format!(
                "strategy indices must be 1..T in order; position {} has index {}",
                i + 1,
                s.index
            )));
        }
    }
    Ok(())
}

/// Willingness-to-pay per unit of effect (currency per QALY).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WtpThreshold(f64);

impl WtpThreshold {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Argument(format!(
                "willingness-to-pay must be positive and finite, got {lambda}"
            )));
        }
        Ok(Self(lambda))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Where a base column sits in a file; preserved so that files round-trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseColumn {
    Sim,
    Parameter(usize),
    Effect(usize),
    Cost(usize),
}

/// Joint draws of model parameters and per-strategy outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct PsaDataset {
    parameter_names: Vec<String>,
    strategies: Vec<Strategy>,
    parameters: Matrix,
    effects: Matrix,
    costs: Matrix,
    layout: Vec<BaseColumn>,
}

impl PsaDataset {
    /// Validates and builds a dataset with the default column layout
    /// (`sim`, parameters, then `qaly.t<k>`, `cost.t<k>` per strategy).
    pub fn new(
        parameter_names: Vec<String>,
        strategies: Vec<Strategy>,
        parameters: Matrix,
        effects: Matrix,
        costs: Matrix,
    ) -> Result<Self> {
        let mut layout = vec![BaseColumn::Sim];
        layout.extend((0..parameter_names.len()).map(BaseColumn::Parameter));
        for t in 0..strategies.len() {
            layout.push(BaseColumn::Effect(t));
            layout.push(BaseColumn::Cost(t));
        }
        Self::with_layout(parameter_names, strategies, parameters, effects, costs, layout)
    }

    pub(crate) fn with_layout(
        parameter_names: Vec<String>,
        strategies: Vec<Strategy>,
        parameters: Matrix,
        effects: Matrix,
        costs: Matrix,
        layout: Vec<BaseColumn>,
    ) -> Result<Self> {
        validate_strategies(&strategies)?;
        let s = effects.rows();
        if s < 2 {
            return Err(Error::Schema(format!("S ≥ 2 required, found {s} rows")));
        }
        let t = strategies.len();
        if effects.cols() != t || costs.cols() != t || costs.rows() != s {
            return Err(Error::Schema(
                "effect and cost matrices must be S × T".to_string(),
            ));
        }
        if parameters.rows() != s || parameters.cols() != parameter_names.len() {
            return Err(Error::Schema(
                "parameter matrix must be S × (number of parameters)".to_string(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &parameter_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate parameter name `{name}`")));
            }
        }
        for (label, m) in [("parameter", &parameters), ("effect", &effects), ("cost", &costs)] {
            if !m.all_finite() {
                return Err(Error::Schema(format!("non-finite {label} value in dataset")));
            }
        }
        Ok(Self {
            parameter_names,
            strategies,
            parameters,
            effects,
            costs,
            layout,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.effects.rows()
    }

    pub fn n_strategies(&self) -> usize {
        self.strategies.len()
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.parameter_names
    }

    /// `qaly.t<k>` and `cost.t<k>` names, strategy by strategy.
    pub fn outcome_names(&self) -> Vec<String> {
        (1..=self.n_strategies())
            .flat_map(|k| [format!("qaly.t{k}"), format!("cost.t{k}")])
            .collect()
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    pub fn parameters(&self) -> &Matrix {
        &self.parameters
    }

    pub fn effects(&self) -> &Matrix {
        &self.effects
    }

    pub fn costs(&self) -> &Matrix {
        &self.costs
    }

    pub fn layout(&self) -> &[BaseColumn] {
        &self.layout
    }

    pub fn parameter_index(&self, name: &str) -> Result<usize> {
        self.parameter_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Argument(format!("unknown parameter `{name}`")))
    }

    pub fn parameter_column(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.parameters.column(self.parameter_index(name)?))
    }

    /// S × |names| matrix of the named parameter columns.
    pub fn parameter_columns(&self, names: &[String]) -> Result<Matrix> {
        let cols = names
            .iter()
            .map(|n| self.parameter_column(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_columns(&cols))
    }

    pub fn with_strategy_labels(mut self, labels: &[String]) -> Result<Self> {
        if labels.len() != self.strategies.len() {
            return Err(Error::Argument(format!(
                "{} labels given for {} strategies",
                labels.len(),
                self.strategies.len()
            )));
        }
        for (s, l) in self.strategies.iter_mut().zip(labels) {
            s.label = l.clone();
        }
        Ok(self)
    }
}

/// Net monetary benefit `λ·effect − cost`, S × T.
#[derive(Debug, Clone, PartialEq)]
pub struct NetBenefitMatrix {
    pub values: Matrix,
    pub threshold: WtpThreshold,
}

/// Net benefit relative to a reference strategy, S × T, reference column zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalNetBenefitMatrix {
    pub values: Matrix,
    /// 0-based column of the reference strategy.
    pub reference: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceStrategy {
    /// Strategy with the highest mean net benefit (ties to lowest index).
    Auto,
    /// 0-based column.
    Index(usize),
}

pub fn compute_net_benefit(ds: &PsaDataset, lambda: WtpThreshold) -> Result<NetBenefitMatrix> {
    let (s, t) = (ds.n_samples(), ds.n_strategies());
    let l = lambda.value();
    let mut values = Matrix::zeros(s, t);
    for r in 0..s {
        for c in 0..t {
            let v = l * ds.effects.get(r, c) - ds.costs.get(r, c);
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "net benefit is not finite at row {} (strategy {})",
                    r + 1,
                    c + 1
                )));
            }
            values.set(r, c, v);
        }
    }
    Ok(NetBenefitMatrix {
        values,
        threshold: lambda,
    })
}

pub fn compute_incremental_net_benefit(
    nb: &NetBenefitMatrix,
    reference: ReferenceStrategy,
) -> Result<IncrementalNetBenefitMatrix> {
    incremental(&nb.values, reference)
}

/// `values[s][t] - values[s][t*]` for any S × T matrix.
pub fn incremental(values: &Matrix, reference: ReferenceStrategy) -> Result<IncrementalNetBenefitMatrix> {
    let t_star = match reference {
        ReferenceStrategy::Auto => argmax(&values.column_means()),
        ReferenceStrategy::Index(i) if i < values.cols() => i,
        ReferenceStrategy::Index(i) => {
            return Err(Error::Argument(format!(
                "reference strategy {} out of range 1..{}",
                i + 1,
                values.cols()
            )))
        }
    };
    let mut out = Matrix::zeros(values.rows(), values.cols());
    for r in 0..values.rows() {
        let base = values.get(r, t_star);
        for c in 0..values.cols() {
            if c != t_star {
                out.set(r, c, values.get(r, c) - base);
            }
        }
    }
    Ok(IncrementalNetBenefitMatrix {
        values: out,
        reference: t_star,
    })
}

/// Expected value of perfect information from a net-benefit matrix.
pub fn evpi(nb: &NetBenefitMatrix) -> VoiEstimate {
    VoiEstimate::from_gain(VoiKind::Evpi, Method::Psa, decision_gain(&nb.values))
}

/// PSA dataset augmented with net benefit and conditional expected net
/// benefit `η_t^s = E[NB_t | φ_s]` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPsaDataset {
    pub base: PsaDataset,
    pub nmb: Matrix,
    pub eta: Matrix,
    pub phi_names: Vec<String>,
}

impl AugmentedPsaDataset {
    pub fn new(base: PsaDataset, nmb: Matrix, eta: Matrix, phi_names: Vec<String>) -> Result<Self> {
        let (s, t) = (base.n_samples(), base.n_strategies());
        for (label, m) in [("nmb", &nmb), ("eta", &eta)] {
            if m.rows() != s || m.cols() != t {
                return Err(Error::Schema(format!("{label} must be {s} × {t}")));
            }
            if !m.all_finite() {
                return Err(Error::Schema(format!("non-finite {label} value")));
            }
        }
        for name in &phi_names {
            base.parameter_index(name)?;
        }
        Ok(Self {
            base,
            nmb,
            eta,
            phi_names,
        })
    }

    /// Checks the law of total expectation: column means of η agree with
    /// column means of net benefit to within `rel_tol` of the net-benefit scale.
    pub fn means_consistent(&self, rel_tol: f64) -> bool {
        let a = self.nmb.column_means();
        let b = self.eta.column_means();
        a.iter()
            .zip(&b)
            .all(|(x, y)| (x - y).abs() <= rel_tol * x.abs().max(1.0))
    }

    /// η on the incremental scale relative to `reference`.
    pub fn incremental_eta(&self, reference: usize) -> Result<IncrementalNetBenefitMatrix> {
        incremental(&self.eta, ReferenceStrategy::Index(reference))
    }
}

/// CEAC, CEAF and expected loss curves over a grid of thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionUncertaintyCurves {
    pub thresholds: Vec<f64>,
    /// `ceac[i][t]`: share of rows where `t` has the highest net benefit.
    pub ceac: Vec<Vec<f64>>,
    /// Counts behind `ceac`; each row sums to S.
    pub ceac_counts: Vec<Vec<usize>>,
    /// 0-based strategy with the highest expected net benefit at each threshold.
    pub ceaf: Vec<usize>,
    /// `elc[i][t]`: mean over rows of `(row max − NB_t)`.
    pub elc: Vec<Vec<f64>>,
}

pub fn decision_uncertainty_curves(ds: &PsaDataset, lambdas: &[f64]) -> Result<DecisionUncertaintyCurves> {
    if lambdas.is_empty() {
        return Err(Error::Argument("threshold list is empty".to_string()));
    }
    for w in lambdas.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Argument(
                "thresholds must be strictly increasing".to_string(),
            ));
        }
    }
    let s = ds.n_samples();
    let t = ds.n_strategies();
    let mut curves = DecisionUncertaintyCurves {
        thresholds: lambdas.to_vec(),
        ceac: Vec::with_capacity(lambdas.len()),
        ceac_counts: Vec::with_capacity(lambdas.len()),
        ceaf: Vec::with_capacity(lambdas.len()),
        elc: Vec::with_capacity(lambdas.len()),
    };
    for &l in lambdas {
        let nb = compute_net_benefit(ds, WtpThreshold::new(l)?)?;
        let mut counts = vec![0usize; t];
        let mut loss_sums = vec![0.0; t];
        for r in 0..s {
            let row = nb.values.row(r);
            let best = argmax(row);
            counts[best] += 1;
            let mx = row[best];
            for (acc, &v) in loss_sums.iter_mut().zip(row) {
                *acc += mx - v;
            }
        }
        curves
            .ceac
            .push(counts.iter().map(|&c| c as f64 / s as f64).collect());
        curves.ceac_counts.push(counts);
        curves.ceaf.push(argmax(&nb.values.column_means()));
        curves
            .elc
            .push(loss_sums.into_iter().map(|x| x / s as f64).collect());
    }
    Ok(curves)
}
