//! Monte Carlo estimators for linear statistics and the hypothesis tests
//! used to compare them with the deterministic predictions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::dpp::{Configuration, SampleBatch};
use crate::error::{Error, Result};
use crate::testfn::TestFunction;

/// `Σ φ(x_i)` (real part).
pub fn linear_statistic(config: &Configuration, phi: &TestFunction) -> f64 {
    config.points.iter().map(|p| phi.eval_real(p)).sum()
}

/// Linear statistics of a batch, in replica order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearStatSample {
    /// Raw `Σφ(x_i)` per configuration.
    pub values: Vec<f64>,
    /// Value subtracted to form fluctuations.
    pub center: f64,
    pub n: usize,
    pub phi: String,
}

impl LinearStatSample {
    pub fn from_batch(batch: &SampleBatch, phi: &TestFunction, center: f64) -> Self {
        let n = batch.configurations.first().map_or(0, |c| c.len());
        let values = batch.configurations.iter().map(|c| linear_statistic(c, phi)).collect();
        Self { values, center, n, phi: phi.label() }
    }

    /// `Σφ(x_i) − center`.
    pub fn fluctuations(&self) -> Vec<f64> {
        self.values.iter().map(|v| v - self.center).collect()
    }
}

/// Sample mean and unbiased variance.
pub fn mean_variance(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = if x.len() > 1 { x.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, v)
}

/// Two-sided normal quantile for a confidence level (e.g. 0.99 ↦ 2.5758).
pub fn normal_quantile(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = normal_quantile(confidence);
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let den = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / den;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / den;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Fraction of configurations with `|Σφ/N − m| > λ` and its confidence
/// interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub lambda: f64,
    pub exceed: u64,
    pub total: u64,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
}

/// Empirical tail of `Σφ(x_i)/N` around `mean` (normally `∫φ ω/V`).
pub fn empirical_tail(values: &[f64], n: usize, mean: f64, lambda: f64, confidence: f64) -> Result<TailEstimate> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    let exceed = values.iter().filter(|v| (*v / n as f64 - mean).abs() > lambda).count() as u64;
    let total = values.len() as u64;
    let (ci_low, ci_high) = wilson_interval(exceed, total, confidence);
    Ok(TailEstimate { lambda, exceed, total, fraction: exceed as f64 / total as f64, ci_low, ci_high, confidence })
}

/// Chernoff bound from the Moser–Trudinger inequality on the sphere:
/// `2·exp(−N²λ²(1 + 1/N)/(2‖dφ‖²))`.
pub fn chernoff_tail_bound(n: usize, lambda: f64, dirichlet: f64) -> f64 {
    let nf = n as f64;
    2.0 * (-nf * nf * lambda * lambda * (1.0 + 1.0 / nf) / (2.0 * dirichlet)).exp()
}

/// The sharper form `2·exp(−2N²λ²/(‖dφ‖²(1 + 1/N)))`, reported for
/// comparison; it is not a valid bound (see the tail experiment).
pub fn sharp_form_tail_bound(n: usize, lambda: f64, dirichlet: f64) -> f64 {
    let nf = n as f64;
    2.0 * (-2.0 * nf * nf * lambda * lambda / (dirichlet * (1.0 + 1.0 / nf))).exp()
}

/// Kolmogorov survival function `Q(t) = 2Σ(−1)^{j−1}e^{−2j²t²}`.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t < 0.18 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * t * t).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic KS p-value with the Stephens correction for effective size `ne`.
fn ks_p_value(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_survival((s + 0.12 + 0.11 / s) * d)
}

/// One-sample Kolmogorov–Smirnov test: `(D, p)`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> (f64, f64) {
    let mut x = data.to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in x.iter().enumerate() {
        let f = cdf(*v);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    (d, ks_p_value(d, n))
}

/// Two-sample Kolmogorov–Smirnov test: `(D, p)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.total_cmp(q));
    y.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    (d, ks_p_value(d, ne))
}

/// Pearson chi-square test of observed counts against expected counts:
/// `(statistic, p)`.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::InvalidParameter("chi-square needs matching bins (at least two)".into()));
    }
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// Central-limit diagnostics for the fluctuations of a linear statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub replicas: usize,
    pub mean: f64,
    /// Standard error of the mean.
    pub mean_std_error: f64,
    pub variance: f64,
    pub variance_exact: f64,
    /// Limit variance `‖dφ‖²`.
    pub dirichlet: f64,
    pub variance_rel_error: f64,
    pub ks_distance: f64,
    pub ks_p_value: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Zero exact variance: normality is not tested.
    pub degenerate: bool,
}

/// Compare centered fluctuations with `Normal(0, variance_exact)`.
pub fn clt_check(fluctuations: &[f64], n: usize, variance_exact: f64, dirichlet: f64) -> Result<CltReport> {
    if fluctuations.len() < 2 {
        return Err(Error::InvalidParameter("need at least two replicas".into()));
    }
    let (mean, variance) = mean_variance(fluctuations);
    let r = fluctuations.len();
    let sd = variance.sqrt();
    let (skewness, excess_kurtosis) = if sd > 0.0 {
        let m3 = fluctuations.iter().map(|x| ((x - mean) / sd).powi(3)).sum::<f64>() / r as f64;
        let m4 = fluctuations.iter().map(|x| ((x - mean) / sd).powi(4)).sum::<f64>() / r as f64;
        (m3, m4 - 3.0)
    } else {
        (0.0, 0.0)
    };
    let degenerate = variance_exact <= 1e-14;
    let (ks_distance, ks_p) = if degenerate {
        (0.0, 1.0)
    } else {
        let normal = Normal::new(0.0, variance_exact.sqrt()).map_err(|e| Error::Numerical(e.to_string()))?;
        ks_one_sample(fluctuations, |x| normal.cdf(x))
    };
    Ok(CltReport {
        n,
        replicas: r,
        mean,
        mean_std_error: sd / (r as f64).sqrt(),
        variance,
        variance_exact,
        dirichlet,
        variance_rel_error: if degenerate { 0.0 } else { (variance / variance_exact - 1.0).abs() },
        ks_distance,
        ks_p_value: ks_p,
        skewness,
        excess_kurtosis,
        degenerate,
    })
}

/// One row of the Monte Carlo vs determinant comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfRow {
    pub t: f64,
    /// `log mean e^{−t·v}`.
    pub empirical: f64,
    /// `log det T[e^{−tφ}]`.
    pub exact: f64,
    /// Delta-method standard error of `empirical`.
    pub std_error: f64,
    pub discrepancy: f64,
}

impl MgfRow {
    /// `|discrepancy|` in units of the standard error.
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            self.discrepancy.abs() / self.std_error
        } else if self.discrepancy.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Empirical `log E[e^{−tΣφ}]` from raw statistics against `exact(t)`.
pub fn mgf_cross_check<F: Fn(f64) -> Result<f64>>(values: &[f64], ts: &[f64], exact: F) -> Result<Vec<MgfRow>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    ts.iter()
        .map(|&t| {
            let e: Vec<f64> = values.iter().map(|v| (-t * v).exp()).collect();
            let (m, var) = mean_variance(&e);
            let empirical = m.ln();
            let std_error = (var / e.len() as f64).sqrt() / m;
            let ex = exact(t)?;
            Ok(MgfRow { t, empirical, exact: ex, std_error, discrepancy: empirical - ex })
        })
        .collect()
}
