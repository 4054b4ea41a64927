//! Cubic B-spline basis with the integrated squared second-derivative
//! penalty.

use crate::stats::quantile_sorted;

const DEGREE: usize = 3;

/// Clamped cubic B-spline basis on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CubicBasis {
    /// Full knot vector: `lo` four times, interior knots, `hi` four times.
    knots: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl CubicBasis {
    /// Interior knots at the `j / (k + 1)` sample quantiles, duplicates and
    /// boundary values removed. `sorted` must be ascending with `lo < hi`.
    pub(crate) fn from_quantiles(sorted: &[f64], interior: usize) -> Self {
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        let mut inner: Vec<f64> = Vec::with_capacity(interior);
        for j in 1..=interior {
            let q = quantile_sorted(sorted, j as f64 / (interior + 1) as f64);
            if q > lo && q < hi && inner.last().is_none_or(|&last| q > last) {
                inner.push(q);
            }
        }
        let mut knots = vec![lo; DEGREE + 1];
        knots.extend(inner);
        knots.extend(std::iter::repeat_n(hi, DEGREE + 1));
        Self { knots, lo, hi }
    }

    pub(crate) fn len(&self) -> usize {
        self.knots.len() - DEGREE - 1
    }

    pub(crate) fn lo(&self) -> f64 {
        self.lo
    }

    pub(crate) fn hi(&self) -> f64 {
        self.hi
    }

    /// Greville abscissae: `x = Σ ξ_k B_k(x)`.
    pub(crate) fn greville(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| (self.knots[k + 1] + self.knots[k + 2] + self.knots[k + 3]) / 3.0)
            .collect()
    }

    /// Basis values of every degree 0..=3 at `x ∈ [lo, hi]`.
    fn tables(&self, x: f64) -> [Vec<f64>; DEGREE + 1] {
        let t = &self.knots;
        let m = t.len();
        let x = x.clamp(self.lo, self.hi);
        let mut span = 0;
        for i in 0..m - 1 {
            if t[i] < t[i + 1] && t[i] <= x && (x < t[i + 1] || (x == self.hi && t[i + 1] == self.hi)) {
                span = i;
                break;
            }
        }
        let mut n0 = vec![0.0; m - 1];
        n0[span] = 1.0;
        let mut out: [Vec<f64>; DEGREE + 1] = [n0, Vec::new(), Vec::new(), Vec::new()];
        for p in 1..=DEGREE {
            let prev = &out[p - 1];
            let mut cur = vec![0.0; m - 1 - p];
            for (i, c) in cur.iter_mut().enumerate() {
                let d1 = t[i + p] - t[i];
                let d2 = t[i + p + 1] - t[i + 1];
                let mut v = 0.0;
                if d1 > 0.0 {
                    v += (x - t[i]) / d1 * prev[i];
                }
                if d2 > 0.0 {
                    v += (t[i + p + 1] - x) / d2 * prev[i + 1];
                }
                *c = v;
            }
            out[p] = cur;
        }
        out
    }

    /// Derivative of the degree-`p` functions from degree-`p−1` values.
    fn differentiate(&self, lower: &[f64], p: usize) -> Vec<f64> {
        let t = &self.knots;
        let a = |i: usize| {
            let d = t[i + p] - t[i];
            if d > 0.0 {
                lower[i] / d
            } else {
                0.0
            }
        };
        (0..lower.len() - 1).map(|i| p as f64 * (a(i) - a(i + 1))).collect()
    }

    /// `(B(x), B'(x), B''(x))` for `x` clamped into `[lo, hi]`.
    pub(crate) fn eval_with_derivatives(&self, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let tab = self.tables(x);
        let d1 = self.differentiate(&tab[2], 3);
        let d2 = self.differentiate(&self.differentiate(&tab[1], 2), 3);
        let [_, _, _, v] = tab;
        (v, d1, d2)
    }

    pub(crate) fn eval(&self, x: f64) -> Vec<f64> {
        let [_, _, _, v] = self.tables(x);
        v
    }

    /// `∫ B_j''(x) B_k''(x) dx` over `[lo, hi]`, row-major `K × K`. Exact:
    /// second derivatives are linear on each knot interval and two-point
    /// Gauss–Legendre integrates cubics exactly.
    pub(crate) fn penalty(&self) -> Vec<f64> {
        let k = self.len();
        let mut s = vec![0.0; k * k];
        let g = 1.0 / 3f64.sqrt();
        for w in self.knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            for x in [mid - half * g, mid + half * g] {
                let (_, _, d2) = self.eval_with_derivatives(x);
                for i in 0..k {
                    for j in 0..k {
                        s[i * k + j] += half * d2[i] * d2[j];
                    }
                }
            }
        }
        s
    }
}
