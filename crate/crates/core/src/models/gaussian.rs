use crate::error::{Error, Result};
use crate::normal::{log_normal_interval, normal_cdf, normal_interval, normal_pdf};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Open interval (lower, upper) of admissible parameter values; either end may
/// be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterDomain {
    #[serde(with = "crate::extended::scalar")]
    lower: f64,
    #[serde(with = "crate::extended::scalar")]
    upper: f64,
}

impl ParameterDomain {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || !(lower < upper) {
            return Err(Error::domain(format!("parameter space ({lower}, {upper}) is empty")));
        }
        if lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(Error::domain("parameter space endpoints are misordered"));
        }
        Ok(Self { lower, upper })
    }

    pub fn real_line() -> Self {
        Self { lower: f64::NEG_INFINITY, upper: f64::INFINITY }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta.is_finite() && self.lower < theta && theta < self.upper
    }

    /// Whether the open interval (a, b) lies inside the domain.
    pub fn contains_interval(&self, a: f64, b: f64) -> bool {
        a < b && self.lower <= a && b <= self.upper
    }
}

impl fmt::Display for ParameterDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)
    }
}

/// N(θ, σ²)^n with σ known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLocationModel {
    sigma: f64,
    domain: ParameterDomain,
}

impl GaussianLocationModel {
    pub fn new(sigma: f64, domain: ParameterDomain) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be positive and finite, got {sigma}")));
        }
        Ok(Self { sigma, domain })
    }

    /// The model on the whole real line.
    pub fn with_sigma(sigma: f64) -> Result<Self> {
        Self::new(sigma, ParameterDomain::real_line())
    }

    pub fn standard() -> Self {
        Self { sigma: 1.0, domain: ParameterDomain::real_line() }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn domain(&self) -> ParameterDomain {
        self.domain
    }

    /// Fisher information of one observation, 1/σ², constant in θ.
    pub fn fisher_information(&self, _theta: f64) -> f64 {
        1.0 / (self.sigma * self.sigma)
    }

    pub fn check_parameter(&self, theta: f64) -> Result<()> {
        if self.domain.contains(theta) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { value: theta, domain: self.domain.to_string() })
        }
    }

    /// Standard deviation of the sample mean of n observations.
    pub fn mean_sd(&self, n: u64) -> f64 {
        self.sigma / (n as f64).sqrt()
    }

    /// P_{n,θ}(lo < mean < hi).
    pub fn mean_interval_probability(&self, theta: f64, n: u64, lo: f64, hi: f64) -> f64 {
        let (a, b) = self.standardize(theta, n, lo, hi);
        normal_interval(a, b)
    }

    /// ln P_{n,θ}(lo < mean < hi).
    pub fn log_mean_interval_probability(&self, theta: f64, n: u64, lo: f64, hi: f64) -> f64 {
        let (a, b) = self.standardize(theta, n, lo, hi);
        log_normal_interval(a, b)
    }

    /// Density of the sample mean under P_{n,θ}.
    pub fn mean_density(&self, theta: f64, n: u64, x: f64) -> f64 {
        let sd = self.mean_sd(n);
        normal_pdf((x - theta) / sd) / sd
    }

    /// Log density of a single observation.
    pub fn log_density(&self, theta: f64, x: f64) -> f64 {
        let z = (x - theta) / self.sigma;
        -0.5 * z * z - crate::normal::LN_SQRT_2PI - self.sigma.ln()
    }

    fn standardize(&self, theta: f64, n: u64, lo: f64, hi: f64) -> (f64, f64) {
        let scale = (n as f64).sqrt() / self.sigma;
        let z = |x: f64| {
            if x.is_infinite() {
                x
            } else {
                (x - theta) * scale
            }
        };
        (z(lo), z(hi))
    }

    fn check_pair(&self, theta1: f64, theta2: f64, n: u64) -> Result<()> {
        self.check_parameter(theta1)?;
        self.check_parameter(theta2)?;
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        Ok(())
    }

    /// |θ2 − θ1|√n / (2σ)
    fn half_separation(&self, theta1: f64, theta2: f64, n: u64) -> f64 {
        (theta2 - theta1).abs() * (n as f64).sqrt() / (2.0 * self.sigma)
    }
}

/// π(P_{n,θ1}, P_{n,θ2}) = Φ(−|θ2−θ1|√n/(2σ)).
pub fn affinity_exact_gaussian(
    model: &GaussianLocationModel,
    theta1: f64,
    theta2: f64,
    n: u64,
) -> Result<f64> {
    model.check_pair(theta1, theta2, n)?;
    Ok(normal_cdf(-model.half_separation(theta1, theta2, n)))
}

/// ‖P_{n,θ1} − P_{n,θ2}‖ = 1 − 2Φ(−|θ2−θ1|√n/(2σ)).
pub fn variation_distance_exact_gaussian(
    model: &GaussianLocationModel,
    theta1: f64,
    theta2: f64,
    n: u64,
) -> Result<f64> {
    model.check_pair(theta1, theta2, n)?;
    Ok(1.0 - 2.0 * normal_cdf(-model.half_separation(theta1, theta2, n)))
}

/// The likelihood-ratio event {f_{n,θ2} > f_{n,θ1}} as a half-line of the
/// sample mean: (mid, ∞) when θ2 > θ1, (−∞, mid) otherwise.
fn likelihood_ratio_region(theta1: f64, theta2: f64) -> (f64, f64) {
    let mid = 0.5 * (theta1 + theta2);
    if theta2 > theta1 {
        (mid, f64::INFINITY)
    } else {
        (f64::NEG_INFINITY, mid)
    }
}

/// P_{n,θ1}(f_{n,θ2}/f_{n,θ1} > 1), evaluated on the half-space event.
/// Zero for θ1 = θ2 (the ratio is identically one).
pub fn likelihood_ratio_exceedance(
    model: &GaussianLocationModel,
    theta1: f64,
    theta2: f64,
    n: u64,
) -> Result<f64> {
    model.check_pair(theta1, theta2, n)?;
    if theta1 == theta2 {
        return Ok(0.0);
    }
    let (lo, hi) = likelihood_ratio_region(theta1, theta2);
    Ok(model.mean_interval_probability(theta1, n, lo, hi))
}

/// Affinity through the Neyman–Pearson event E = {f_{θ2} > f_{θ1}}:
/// max(P_{θ1}(E), P_{θ2}(E^c)).
pub fn affinity_halfspace_gaussian(
    model: &GaussianLocationModel,
    theta1: f64,
    theta2: f64,
    n: u64,
) -> Result<f64> {
    model.check_pair(theta1, theta2, n)?;
    if theta1 == theta2 {
        return Ok(0.5);
    }
    let (lo, hi) = likelihood_ratio_region(theta1, theta2);
    let p1 = model.mean_interval_probability(theta1, n, lo, hi);
    let (clo, chi) = if lo.is_infinite() { (hi, f64::INFINITY) } else { (f64::NEG_INFINITY, lo) };
    let p2_complement = model.mean_interval_probability(theta2, n, clo, chi);
    Ok(p1.max(p2_complement))
}

/// Variation distance through the same event: P_{θ2}(E) − P_{θ1}(E).
pub fn variation_distance_halfspace_gaussian(
    model: &GaussianLocationModel,
    theta1: f64,
    theta2: f64,
    n: u64,
) -> Result<f64> {
    model.check_pair(theta1, theta2, n)?;
    if theta1 == theta2 {
        return Ok(0.0);
    }
    let (lo, hi) = likelihood_ratio_region(theta1, theta2);
    Ok(model.mean_interval_probability(theta2, n, lo, hi)
        - model.mean_interval_probability(theta1, n, lo, hi))
}

const QUADRATURE_PANELS: usize = 4000;
const QUADRATURE_SPAN_SD: f64 = 12.0;

/// ½∫min(f1, f2) over the sample-mean densities by composite Simpson.
///
/// For a pair of location-shifted Gaussians this equals the affinity; it
/// serves as an oracle independent of the Φ-based closed forms.
pub fn affinity_quadrature_gaussian(
    model: &GaussianLocationModel,
    theta1: f64,
    theta2: f64,
    n: u64,
) -> Result<f64> {
    model.check_pair(theta1, theta2, n)?;
    let overlap = integrate_pair(model, theta1, theta2, n, |a, b| a.min(b));
    Ok(0.5 * overlap)
}

/// ½∫|f1 − f2| by composite Simpson.
pub fn variation_distance_quadrature_gaussian(
    model: &GaussianLocationModel,
    theta1: f64,
    theta2: f64,
    n: u64,
) -> Result<f64> {
    model.check_pair(theta1, theta2, n)?;
    // ½∫|f1 − f2| = 1 − ∫min(f1, f2); integrating the overlap keeps the
    // quadrature error relative to the small quantity.
    let overlap = integrate_pair(model, theta1, theta2, n, |a, b| a.min(b));
    Ok(1.0 - overlap)
}

fn integrate_pair<F>(model: &GaussianLocationModel, theta1: f64, theta2: f64, n: u64, combine: F) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let sd = model.mean_sd(n);
    let lo = theta1.min(theta2) - QUADRATURE_SPAN_SD * sd;
    let hi = theta1.max(theta2) + QUADRATURE_SPAN_SD * sd;
    let mid = 0.5 * (theta1 + theta2);
    // The integrand has a kink at the midpoint; integrate each side separately.
    let f = |x: f64| combine(model.mean_density(theta1, n, x), model.mean_density(theta2, n, x));
    simpson(&f, lo, mid, QUADRATURE_PANELS) + simpson(&f, mid, hi, QUADRATURE_PANELS)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(a + i as f64 * h);
    }
    acc * h / 3.0
}
