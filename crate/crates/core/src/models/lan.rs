//! Local asymptotic normality of the Gaussian location model.
//!
//! For the Gaussian model the log-likelihood ratio between θ and the local
//! alternative θ + λσ/√n is exactly λΔ − λ²/2 with Δ = √n(mean − θ)/σ ~ N(0,1).
//! The check draws full samples, evaluates the log-likelihood ratio from the
//! per-observation log densities, and reports the residual ψ together with a
//! Kolmogorov–Smirnov test of the Δ sample against N(0,1).

use super::gaussian::GaussianLocationModel;
use crate::error::{Error, Result};
use crate::normal::normal_cdf;
use crate::sampling::map_replications;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanReport {
    pub theta: f64,
    pub lambda: f64,
    pub n: u64,
    pub samples: u64,
    pub seed: u64,
    /// θ + λ/√(nI(θ))
    pub shifted_theta: f64,
    /// max over draws of |ln(f_{shifted}/f_θ) − (λΔ − λ²/2)|
    pub max_abs_residual: f64,
    pub delta_mean: f64,
    pub delta_variance: f64,
    pub ks_distance: f64,
    pub ks_p_value: f64,
}

impl LanReport {
    pub fn residual_within(&self, tolerance: f64) -> bool {
        self.max_abs_residual <= tolerance
    }

    pub fn ks_passes(&self, level: f64) -> bool {
        self.ks_p_value >= level
    }
}

pub fn check_lan_decomposition(
    model: &GaussianLocationModel,
    theta: f64,
    lambda: f64,
    n: u64,
    samples: u64,
    seed: u64,
) -> Result<LanReport> {
    model.check_parameter(theta)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    if n == 0 || samples == 0 {
        return Err(Error::domain("n and samples must be positive"));
    }
    let sigma = model.sigma();
    let shifted = theta + lambda / (n as f64 * model.fisher_information(theta)).sqrt();
    model.check_parameter(shifted)?;
    let root_n = (n as f64).sqrt();

    let draws: Vec<(f64, f64)> = map_replications(samples, seed, |rng| {
        let mut sum = 0.0;
        let mut log_alt = 0.0;
        let mut log_null = 0.0;
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            let x = theta + sigma * z;
            sum += x;
            log_alt += model.log_density(shifted, x);
            log_null += model.log_density(theta, x);
        }
        let mean = sum / n as f64;
        let delta = root_n * (mean - theta) / sigma;
        let residual = (log_alt - log_null) - (lambda * delta - 0.5 * lambda * lambda);
        (delta, residual)
    });

    let max_abs_residual = draws.iter().map(|d| d.1.abs()).fold(0.0, f64::max);
    let mut deltas: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let m = deltas.len() as f64;
    let delta_mean = deltas.iter().sum::<f64>() / m;
    let delta_variance = deltas.iter().map(|d| (d - delta_mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let (ks_distance, ks_p_value) = kolmogorov_smirnov(&mut deltas, normal_cdf);

    Ok(LanReport {
        theta,
        lambda,
        n,
        samples,
        seed,
        shifted_theta: shifted,
        max_abs_residual,
        delta_mean,
        delta_variance,
        ks_distance,
        ks_p_value,
    })
}

/// One-sample Kolmogorov–Smirnov statistic against `cdf` and its asymptotic
/// p-value (Kolmogorov distribution with Stephens' small-sample correction).
/// Sorts `sample` in place.
pub fn kolmogorov_smirnov<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> (f64, f64) {
    if sample.is_empty() {
        return (0.0, 1.0);
    }
    sample.sort_by(f64::total_cmp);
    let m = sample.len() as f64;
    let d = sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / m) - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max);
    let root = m.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d;
    (d, kolmogorov_survival(lambda))
}

/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = f64::from(k);
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
