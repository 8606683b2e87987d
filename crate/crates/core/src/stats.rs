//! Goodness-of-fit helpers for the Monte Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// `(k/n − p) / √(p(1−p)/n)`; zero when the variance vanishes and the
/// frequency is exact.
pub fn binomial_z(count: usize, n: usize, p: f64) -> f64 {
    let f = count as f64 / n as f64;
    let var = p * (1.0 - p) / n as f64;
    if var == 0.0 {
        return if (f - p).abs() == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (f - p) / var.sqrt()
}

/// Two-sample z for equality of two binomial frequencies with unpooled
/// variance.
pub fn two_proportion_z(k1: usize, n1: usize, k2: usize, n2: usize) -> f64 {
    let f1 = k1 as f64 / n1 as f64;
    let f2 = k2 as f64 / n2 as f64;
    let var = f1 * (1.0 - f1) / n1 as f64 + f2 * (1.0 - f2) / n2 as f64;
    if var == 0.0 {
        return if f1 == f2 { 0.0 } else { f64::INFINITY };
    }
    (f1 - f2) / var.sqrt()
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n − F|`. Samples equal
/// to `f64::INFINITY` are censored at `horizon`: the comparison then runs
/// over `[0, horizon)` only.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, horizon: Option<f64>) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Input("KS test needs at least one sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Input("KS sample contains NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut finite = 0usize;
    for (i, &x) in sorted.iter().enumerate() {
        if x.is_infinite() {
            break;
        }
        finite += 1;
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    if finite < sorted.len() {
        let h = horizon.ok_or_else(|| Error::Input("censored samples need a horizon".into()))?;
        d = d.max(cdf(h) - finite as f64 / n);
    }
    Ok(d)
}

/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Pearson chi-square of counts against expected probabilities. Cells with
/// zero expectation must have zero count. Returns `(statistic, dof, p)`.
pub fn chi_square(counts: &[usize], probs: &[f64]) -> Result<(f64, usize, f64)> {
    if counts.len() != probs.len() || counts.is_empty() {
        return Err(Error::Input("chi-square needs matching non-empty tables".into()));
    }
    let n: usize = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&k, &p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        if e == 0.0 {
            if k != 0 {
                return Ok((f64::INFINITY, 0, 0.0));
            }
            continue;
        }
        cells += 1;
        stat += (k as f64 - e).powi(2) / e;
    }
    if cells < 2 {
        return Ok((stat, 0, 1.0));
    }
    let dof = cells - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Input(e.to_string()))?;
    Ok((stat, dof, 1.0 - dist.cdf(stat)))
}
