//! Additive penalised regression-spline metamodel.
//!
//! `y = β₀ + Σ_j f_j(x_j)` with each `f_j` a cubic B-spline, centred over the
//! training data, penalised by `∫ f_j''²`. The smoothing weight of each
//! covariate is chosen by generalised cross-validation on a fixed grid,
//! one covariate at a time.

mod bspline;
mod diagnostics;

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::psa::format_decimal;
use crate::stats;

use bspline::CubicBasis;
pub use diagnostics::{residual_diagnostics, DiagnosticStatus, ResidualDiagnostics};

/// Largest number of covariates accepted; beyond this the additive fit is
/// unreliable and parameters should be grouped or summarised instead.
pub const MAX_COVARIATES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GamConfig {
    /// Interior knots per covariate.
    pub knots: usize,
    /// Points on the log10 smoothing-weight grid.
    pub grid_points: usize,
    pub log10_lambda_min: f64,
    pub log10_lambda_max: f64,
    /// Weight of the penalty on the linear part of each smooth, relative to
    /// the curvature penalty. Lets heavy smoothing shrink a smooth to zero.
    pub null_space_shrinkage: f64,
    /// Passes of the coordinate-wise search.
    pub max_cycles: usize,
    /// Inflation of the degrees of freedom in the GCV score. Values above 1
    /// counter GCV's tendency to undersmooth pure noise.
    pub gcv_gamma: f64,
}

impl Default for GamConfig {
    fn default() -> Self {
        Self {
            knots: 10,
            grid_points: 41,
            log10_lambda_min: -6.0,
            log10_lambda_max: 6.0,
            null_space_shrinkage: 1e-4,
            max_cycles: 3,
            gcv_gamma: 1.4,
        }
    }
}

impl GamConfig {
    pub fn with_knots(mut self, knots: usize) -> Self {
        self.knots = knots;
        self
    }

    fn grid(&self) -> Vec<f64> {
        let n = self.grid_points.max(2);
        (0..n)
            .map(|i| {
                let e = self.log10_lambda_min + (self.log10_lambda_max - self.log10_lambda_min) * i as f64 / (n - 1) as f64;
                10f64.powf(e)
            })
            .collect()
    }
}

/// One fitted smooth term.
#[derive(Debug, Clone, PartialEq)]
struct Smooth {
    covariate: usize,
    basis: CubicBasis,
    /// Training means of the basis functions.
    center: Vec<f64>,
    /// Coefficients of the first `K − 1` centred basis functions.
    coef: Vec<f64>,
    lambda: f64,
    edf: f64,
}

impl Smooth {
    fn width(&self) -> usize {
        self.basis.len() - 1
    }

    /// Centred design row at `x`, extended linearly outside the training
    /// range. Returns whether `x` was outside.
    fn row(&self, x: f64, out: &mut [f64]) -> bool {
        let (lo, hi) = (self.basis.lo(), self.basis.hi());
        let outside = x < lo || x > hi;
        if outside {
            let b = if x < lo { lo } else { hi };
            let (v, d1, _) = self.basis.eval_with_derivatives(b);
            for k in 0..self.width() {
                out[k] = v[k] + (x - b) * d1[k] - self.center[k];
            }
        } else {
            let v = self.basis.eval(x);
            for k in 0..self.width() {
                out[k] = v[k] - self.center[k];
            }
        }
        outside
    }

    fn value(&self, x: f64, scratch: &mut [f64]) -> (f64, bool) {
        let outside = self.row(x, scratch);
        let mut f = 0.0;
        for (r, c) in scratch.iter().zip(&self.coef) {
            f += r * c;
        }
        (f, outside)
    }
}

/// A fitted additive model.
#[derive(Debug, Clone, PartialEq)]
pub struct Metamodel {
    n_covariates: usize,
    intercept: f64,
    smooths: Vec<Smooth>,
    dropped: Vec<usize>,
    fitted: Vec<f64>,
    response: Vec<f64>,
    edf: f64,
    gcv: f64,
    warnings: Vec<String>,
}

/// Predictions together with how many inputs fell outside the training
/// range of some covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub values: Vec<f64>,
    pub extrapolated: usize,
}

struct Design {
    z: DMatrix<f64>,
    yc: DVector<f64>,
    ztz: DMatrix<f64>,
    zty: DVector<f64>,
    /// Column range of each smooth in `z`.
    blocks: Vec<(usize, usize)>,
    /// Normalised penalty of each smooth (its block only).
    penalties: Vec<DMatrix<f64>>,
}

struct Solution {
    beta: DVector<f64>,
    edf_blocks: Vec<f64>,
    edf: f64,
    gcv: f64,
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Design {
    fn solve(&self, lambdas: &[f64], n: usize, gamma: f64) -> Result<Solution> {
        let p = self.ztz.nrows();
        let mut m = self.ztz.clone();
        for ((&(a, w), pen), &l) in self.blocks.iter().zip(&self.penalties).zip(lambdas) {
            for i in 0..w {
                for j in 0..w {
                    m[(a + i, a + j)] += l * pen[(i, j)];
                }
            }
        }
        let chol = m.cholesky().ok_or_else(|| {
            Error::Numeric("metamodel design is rank-deficient even after penalisation".into())
        })?;
        let beta = chol.solve(&self.zty);
        let hat = chol.solve(&self.ztz);
        let edf_blocks: Vec<f64> = self
            .blocks
            .iter()
            .map(|&(a, w)| (a..a + w).map(|i| hat[(i, i)]).sum())
            .collect();
        let edf = 1.0 + (0..p).map(|i| hat[(i, i)]).sum::<f64>();
        // Direct residuals: the shortcut through ZᵀZ cancels badly on
        // near-exact fits, where GCV must still rank the weights.
        let rss = (&self.yc - &self.z * &beta).norm_squared();
        let dof = n as f64 - gamma * edf;
        let gcv = if dof > 0.0 {
            n as f64 * rss / (dof * dof)
        } else {
            f64::INFINITY
        };
        Ok(Solution {
            beta,
            edf_blocks,
            edf,
            gcv,
        })
    }
}

/// Fits with smoothing weights chosen by GCV.
pub fn fit_metamodel(covariates: &Matrix, response: &[f64], config: &GamConfig) -> Result<Metamodel> {
    fit_impl(covariates, response, config, None)
}

/// Fits with fixed smoothing weights, one per non-constant covariate.
pub fn fit_metamodel_with_lambdas(
    covariates: &Matrix,
    response: &[f64],
    config: &GamConfig,
    lambdas: &[f64],
) -> Result<Metamodel> {
    fit_impl(covariates, response, config, Some(lambdas))
}

fn fit_impl(covariates: &Matrix, response: &[f64], config: &GamConfig, fixed: Option<&[f64]>) -> Result<Metamodel> {
    let n = covariates.rows();
    let d = covariates.cols();
    if response.len() != n {
        return Err(Error::Argument(format!(
            "{} covariate rows but {} responses",
            n,
            response.len()
        )));
    }
    if d == 0 {
        return Err(Error::Argument("at least one covariate required".into()));
    }
    if d > MAX_COVARIATES {
        return Err(Error::Dimension(format!(
            "{d} covariates requested; regression metamodels become unreliable beyond \
             five or six, so at most {MAX_COVARIATES} are accepted. Group parameters or \
             reduce the data summaries to fewer dimensions"
        )));
    }
    if config.knots == 0 {
        return Err(Error::Argument("at least one interior knot required".into()));
    }
    if !covariates.all_finite() || response.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite metamodel input".into()));
    }

    let mut warnings = Vec::new();
    let mut bases = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..d {
        let mut col = covariates.column(j);
        col.sort_by(f64::total_cmp);
        let (lo, hi) = (col[0], col[n - 1]);
        if !(hi - lo > 1e-12 * lo.abs().max(hi.abs()).max(1e-300)) {
            warnings.push(format!("covariate {} is constant and was dropped", j + 1));
            dropped.push(j);
            continue;
        }
        bases.push((j, CubicBasis::from_quantiles(&col, config.knots)));
    }
    let total_dim = 1 + bases.iter().map(|(_, b)| b.len() - 1).sum::<usize>();
    if n <= 10 * total_dim {
        return Err(Error::Argument(format!(
            "{n} rows are too few for a metamodel with {total_dim} basis functions \
             (more than {} required)",
            10 * total_dim
        )));
    }

    let y_mean = stats::mean(response);
    let yc: Vec<f64> = response.iter().map(|y| y - y_mean).collect();
    let yty: f64 = yc.iter().map(|v| v * v).sum();

    // Centred design, dropping the last basis function of each smooth.
    let p = total_dim - 1;
    let mut z = DMatrix::<f64>::zeros(n, p);
    let mut blocks = Vec::new();
    let mut centers = Vec::new();
    let mut offset = 0;
    for (j, basis) in &bases {
        let w = basis.len() - 1;
        let mut sums = vec![0.0; basis.len()];
        for r in 0..n {
            let v = basis.eval(covariates.get(r, *j));
            for k in 0..w {
                z[(r, offset + k)] = v[k];
            }
            for (s, vk) in sums.iter_mut().zip(&v) {
                *s += vk;
            }
        }
        let center: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
        for r in 0..n {
            for k in 0..w {
                z[(r, offset + k)] -= center[k];
            }
        }
        blocks.push((offset, w));
        centers.push(center);
        offset += w;
    }
    let ztz = z.transpose() * &z;
    let zty = z.transpose() * DVector::from_column_slice(&yc);

    let mut penalties = Vec::new();
    for ((_, basis), &(a, w)) in bases.iter().zip(&blocks) {
        let k = basis.len();
        let full = basis.penalty();
        let s = DMatrix::from_fn(w, w, |i, j| full[i * k + j]);
        let xi = basis.greville();
        let u = DVector::from_fn(w, |i, _| xi[i] - xi[k - 1]);
        let block = ztz.view((a, a), (w, w)).into_owned();
        let scale = frobenius(&block).max(f64::MIN_POSITIVE);
        let s_norm = frobenius(&s);
        let s_scaled = if s_norm > 0.0 { s * (scale / s_norm) } else { s };
        // Penalty on the linear part, scaled to the data information along
        // it, so that a weight λ shrinks a linear trend by 1 / (1 + λ·ε).
        let info = (u.transpose() * &block * &u)[(0, 0)] / u.dot(&u);
        let null = &u * u.transpose() / u.dot(&u);
        penalties.push(s_scaled + null * (info * config.null_space_shrinkage));
    }

    let design = Design {
        z,
        yc: DVector::from_column_slice(&yc),
        ztz,
        zty,
        blocks,
        penalties,
    };

    let lambdas = match fixed {
        Some(l) => {
            if l.len() != bases.len() {
                return Err(Error::Argument(format!(
                    "{} smoothing weights for {} smooth terms",
                    l.len(),
                    bases.len()
                )));
            }
            if l.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::Argument("smoothing weights must be finite and ≥ 0".into()));
            }
            l.to_vec()
        }
        None => select_lambdas(&design, n, config, yty / n as f64)?,
    };
    let sol = design.solve(&lambdas, n, config.gcv_gamma)?;

    let smooths: Vec<Smooth> = bases
        .into_iter()
        .zip(centers)
        .zip(design.blocks.iter())
        .enumerate()
        .map(|(i, (((j, basis), center), &(a, w)))| Smooth {
            covariate: j,
            basis,
            center,
            coef: sol.beta.as_slice()[a..a + w].to_vec(),
            lambda: lambdas[i],
            edf: sol.edf_blocks[i],
        })
        .collect();
    drop(design);

    let mut model = Metamodel {
        n_covariates: d,
        intercept: y_mean,
        smooths,
        dropped,
        fitted: Vec::new(),
        response: response.to_vec(),
        edf: sol.edf,
        gcv: sol.gcv,
        warnings,
    };
    let fitted = model.predict(covariates)?.values;
    if fitted.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("metamodel produced non-finite fitted values".into()));
    }
    model.fitted = fitted;
    Ok(model)
}

/// Coordinate-wise grid search; ties go to the larger weight.
fn select_lambdas(design: &Design, n: usize, config: &GamConfig, mean_sq: f64) -> Result<Vec<f64>> {
    let grid = config.grid();
    let k = design.blocks.len();
    let start = grid.len() / 2;
    let mut idx = vec![start; k];
    let lambdas_of = |idx: &[usize]| idx.iter().map(|&i| grid[i]).collect::<Vec<_>>();
    let abs_tol = 1e-24 * mean_sq;
    for _ in 0..config.max_cycles.max(1) {
        let mut changed = false;
        for j in 0..k {
            let mut best_i = idx[j];
            let mut best = f64::INFINITY;
            for gi in 0..grid.len() {
                let mut trial = idx.clone();
                trial[j] = gi;
                let g = design.solve(&lambdas_of(&trial), n, config.gcv_gamma)?.gcv;
                if best.is_infinite() || g <= best + 1e-12 * best + abs_tol {
                    best_i = gi;
                    best = best.min(g);
                }
            }
            if best_i != idx[j] {
                idx[j] = best_i;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(lambdas_of(&idx))
}

impl Metamodel {
    pub fn n_covariates(&self) -> usize {
        self.n_covariates
    }

    /// Fitted values at the training inputs, identical to
    /// `predict(training covariates)`.
    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Effective degrees of freedom including the intercept.
    pub fn edf(&self) -> f64 {
        self.edf
    }

    pub fn gcv(&self) -> f64 {
        self.gcv
    }

    /// Selected smoothing weight of each retained covariate, 0-based.
    pub fn smoothing(&self) -> Vec<(usize, f64, f64)> {
        self.smooths.iter().map(|s| (s.covariate, s.lambda, s.edf)).collect()
    }

    pub fn dropped_covariates(&self) -> &[usize] {
        &self.dropped
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn r_squared(&self) -> f64 {
        let tss: f64 = self.response.iter().map(|y| (y - self.intercept).powi(2)).sum();
        let rss: f64 = self.response.iter().zip(&self.fitted).map(|(y, f)| (y - f).powi(2)).sum();
        if tss > 0.0 {
            1.0 - rss / tss
        } else {
            1.0
        }
    }

    pub fn predict(&self, covariates: &Matrix) -> Result<Prediction> {
        if covariates.cols() != self.n_covariates {
            return Err(Error::Argument(format!(
                "metamodel has {} covariates, got {}",
                self.n_covariates,
                covariates.cols()
            )));
        }
        let width = self.smooths.iter().map(Smooth::width).max().unwrap_or(0);
        let rows: Vec<(f64, bool)> = crate::parallel::map_indexed(covariates.rows(), |r| {
            let mut scratch = vec![0.0; width];
            self.predict_row(covariates.row(r), &mut scratch)
        });
        let extrapolated = rows.iter().filter(|(_, o)| *o).count();
        Ok(Prediction {
            values: rows.into_iter().map(|(v, _)| v).collect(),
            extrapolated,
        })
    }

    fn predict_row(&self, x: &[f64], scratch: &mut [f64]) -> (f64, bool) {
        let mut v = self.intercept;
        let mut outside = false;
        for s in &self.smooths {
            let (f, o) = s.value(x[s.covariate], &mut scratch[..s.width()]);
            v += f;
            outside |= o;
        }
        (v, outside)
    }

    /// Component `f_j` of covariate `j` (0-based) at `x`; zero for a
    /// dropped covariate.
    pub fn component(&self, j: usize, x: f64) -> f64 {
        match self.smooths.iter().find(|s| s.covariate == j) {
            Some(s) => {
                let mut scratch = vec![0.0; s.width()];
                s.value(x, &mut scratch).0
            }
            None => 0.0,
        }
    }

    /// Writes `x,f_hat` for covariate `j` on `points` equally spaced values
    /// spanning the training range.
    pub fn write_component_csv<W: Write>(&self, j: usize, points: usize, mut writer: W) -> Result<()> {
        let s = self
            .smooths
            .iter()
            .find(|s| s.covariate == j)
            .ok_or_else(|| Error::Argument(format!("covariate {} has no fitted smooth", j + 1)))?;
        let (lo, hi) = (s.basis.lo(), s.basis.hi());
        writeln!(writer, "x,f_hat")?;
        let points = points.max(2);
        for i in 0..points {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            writeln!(writer, "{},{}", format_decimal(x), format_decimal(self.component(j, x)))?;
        }
        Ok(())
    }

    pub fn diagnostics(&self) -> ResidualDiagnostics {
        residual_diagnostics(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn uniform(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = stream(seed, Purpose::Generic, 0);
        Matrix::from_row_major(n, d, (0..n * d).map(|_| rng.random::<f64>()).collect())
    }

    #[test]
    fn linear_recovery() {
        let x = uniform(500, 1, 1);
        let y: Vec<f64> = (0..500).map(|r| 3.0 * x.get(r, 0) + 1.0).collect();
        let m = fit_metamodel(&x, &y, &GamConfig::default()).unwrap();
        for (f, t) in m.fitted().iter().zip(&y) {
            assert!((f - t).abs() < 1e-6);
        }
        assert!(m.r_squared() > 0.999999);
        let p = m.predict(&Matrix::from_rows(&[vec![0.25]])).unwrap();
        assert!((p.values[0] - 1.75).abs() < 1e-6);
    }

    #[test]
    fn constant_recovery() {
        let x = uniform(400, 2, 2);
        let y = vec![0.1; 400];
        let m = fit_metamodel(&x, &y, &GamConfig::default()).unwrap();
        assert!(m.fitted().iter().all(|f| (f - 0.1).abs() < 1e-12));
        assert!((m.edf() - 1.0).abs() < 0.1, "edf {}", m.edf());
        let p = m.predict(&Matrix::from_rows(&[vec![5.0, -3.0]])).unwrap();
        assert!((p.values[0] - 0.1).abs() < 1e-9);
        assert_eq!(p.extrapolated, 1);
    }

    #[test]
    fn smooth_recovery() {
        let n = 2000;
        let x = uniform(n, 1, 3);
        let mut rng = stream(3, Purpose::Generic, 1);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let truth: Vec<f64> = (0..n).map(|r| (2.0 * std::f64::consts::PI * x.get(r, 0)).sin()).collect();
        let y: Vec<f64> = truth.iter().map(|t| t + noise.sample(&mut rng)).collect();
        let m = fit_metamodel(&x, &y, &GamConfig::default()).unwrap();
        let mse = m.fitted().iter().zip(&truth).map(|(f, t)| (f - t).powi(2)).sum::<f64>() / n as f64;
        assert!(mse.sqrt() < 0.05, "rmse {}", mse.sqrt());
    }

    #[test]
    fn predict_on_training_inputs_is_exact() {
        let x = uniform(300, 2, 4);
        let y: Vec<f64> = (0..300).map(|r| (x.get(r, 0) * 3.0).exp() + x.get(r, 1)).collect();
        let m = fit_metamodel(&x, &y, &GamConfig::default()).unwrap();
        assert_eq!(m.predict(&x).unwrap().values, m.fitted());
    }

    #[test]
    fn fitted_mean_equals_response_mean() {
        let x = uniform(600, 3, 5);
        let y: Vec<f64> = (0..600).map(|r| 1e4 * x.get(r, 0).powi(2) - 50.0 * x.get(r, 2)).collect();
        let m = fit_metamodel(&x, &y, &GamConfig::default()).unwrap();
        let a = stats::mean(m.fitted());
        let b = stats::mean(&y);
        assert!((a - b).abs() <= 1e-9 * b.abs());
    }

    #[test]
    fn edf_decreases_with_penalty() {
        let x = uniform(400, 1, 6);
        let y: Vec<f64> = (0..400).map(|r| (5.0 * x.get(r, 0)).sin()).collect();
        let mut last = f64::INFINITY;
        for e in -6..=6 {
            let m = fit_metamodel_with_lambdas(&x, &y, &GamConfig::default(), &[10f64.powi(e)]).unwrap();
            assert!(m.edf() <= last + 1e-9);
            last = m.edf();
        }
    }

    #[test]
    fn too_many_covariates_and_too_few_rows() {
        let x = uniform(2000, 7, 7);
        let y = vec![0.0; 2000];
        assert!(matches!(fit_metamodel(&x, &y, &GamConfig::default()), Err(Error::Dimension(_))));
        let x = uniform(100, 1, 7);
        assert!(matches!(
            fit_metamodel(&x, &[0.0; 100], &GamConfig::default()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn constant_covariate_is_dropped() {
        let mut x = uniform(300, 2, 8);
        for r in 0..300 {
            x.set(r, 1, 2.0);
        }
        let y: Vec<f64> = (0..300).map(|r| x.get(r, 0)).collect();
        let m = fit_metamodel(&x, &y, &GamConfig::default()).unwrap();
        assert_eq!(m.dropped_covariates(), &[1]);
        assert_eq!(m.warnings().len(), 1);
    }

    #[test]
    fn component_dump() {
        let x = uniform(300, 1, 9);
        let y: Vec<f64> = (0..300).map(|r| x.get(r, 0) * 2.0).collect();
        let m = fit_metamodel(&x, &y, &GamConfig::default()).unwrap();
        let mut buf = Vec::new();
        m.write_component_csv(0, 5, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("x,f_hat\n"));
    }

    #[test]
    fn linear_tails_outside_training_range() {
        let x = uniform(400, 1, 10);
        let y: Vec<f64> = (0..400).map(|r| 2.0 * x.get(r, 0)).collect();
        let m = fit_metamodel(&x, &y, &GamConfig::default()).unwrap();
        let p = m.predict(&Matrix::from_rows(&[vec![2.0], vec![-1.0]])).unwrap();
        assert!((p.values[0] - 4.0).abs() < 1e-5 && (p.values[1] + 2.0).abs() < 1e-5);
        assert_eq!(p.extrapolated, 2);
    }

    #[test]
    fn pure_noise_stays_near_intercept_only() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let trials = 20;
        let mut ok = 0;
        for seed in 0..trials {
            let x = uniform(1000, 1, 100 + seed);
            let mut rng = stream(100 + seed, Purpose::Generic, 1);
            let y: Vec<f64> = (0..1000).map(|_| normal.sample(&mut rng)).collect();
            let m = fit_metamodel(&x, &y, &GamConfig::default()).unwrap();
            if (m.edf() - 1.0).abs() <= 2.0 {
                ok += 1;
            }
        }
        assert!(ok * 10 >= trials * 9, "{ok}/{trials}");
    }
}
