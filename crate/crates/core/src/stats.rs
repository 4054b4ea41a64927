//! Small numeric helpers shared across modules.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

/// Sequential left-to-right mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut sum = 0.0;
    for &x in xs {
        sum += x;
    }
    sum / xs.len() as f64
}

/// Unbiased (n - 1) sample variance, two-pass.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let mut ss = 0.0;
    for &x in xs {
        ss += (x - m) * (x - m);
    }
    ss / (n as f64 - 1.0)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Standard error of a sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    std_dev(xs) / (xs.len() as f64).sqrt()
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Unit normal loss `L(z) = φ(z) - z (1 - Φ(z))`.
pub fn unit_normal_loss(z: f64) -> f64 {
    normal_pdf(z) - z * normal_cdf(-z)
}

/// `E[max(Y, 0)] - max(E[Y], 0)` for `Y ~ Normal(mean, sd²)`.
pub fn expected_gain_normal(mean: f64, sd: f64) -> f64 {
    if sd <= 0.0 {
        return 0.0;
    }
    sd * unit_normal_loss(mean.abs() / sd)
}

pub fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `x * ln(y)` with the convention `0 * ln(0) = 0`.
pub fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Log-sum-exp normalisation in place: returns `ln Σ exp(w)` and replaces
/// each entry with its normalised weight. Returns `None` when every entry is
/// `-inf` (or NaN).
pub fn normalize_log_weights(log_w: &mut [f64]) -> Option<f64> {
    let max = log_w
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut total = 0.0;
    for w in log_w.iter_mut() {
        *w = if w.is_nan() { 0.0 } else { (*w - max).exp() };
        total += *w;
    }
    for w in log_w.iter_mut() {
        *w /= total;
    }
    Some(max + total.ln())
}

/// Empirical quantile (type 7, linear interpolation) of sorted data.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n as f64 - 1.0) * level.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_normal_loss_at_zero() {
        assert!((unit_normal_loss(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn expected_gain_matches_quadrature() {
        let (m, s) = (0.3, 1.7);
        let steps = 200_000;
        let (lo, hi) = (m - 12.0 * s, m + 12.0 * s);
        let h = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for i in 0..steps {
            let y = lo + (i as f64 + 0.5) * h;
            acc += y.max(0.0) * normal_pdf((y - m) / s) / s * h;
        }
        assert!((acc - m.max(0.0) - expected_gain_normal(m, s)).abs() < 1e-8);
    }

    #[test]
    fn log_weights_sum_to_one() {
        let mut w = vec![-1000.0, -1001.0, f64::NEG_INFINITY, -999.5];
        normalize_log_weights(&mut w).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[2], 0.0);
        let mut dead = vec![f64::NEG_INFINITY; 3];
        assert!(normalize_log_weights(&mut dead).is_none());
    }
}
