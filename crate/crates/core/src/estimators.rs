//! The estimator zoo and its concentration probabilities
//! P_{n,θ}(|T_n − center| > radius).
//!
//! Every estimator in scope is a function of the sample mean, so the event is
//! a finite union of intervals of a N(θ, σ²/n) variable and its probability is
//! available in closed form. The Monte Carlo path draws the same sufficient
//! statistic and serves as an independent check.

use crate::error::{Error, Result};
use crate::models::GaussianLocationModel;
use crate::normal::{log_sum_exp, normal_cdf};
use crate::sampling::count_successes;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorSpec {
    /// The sample mean.
    Mle,
    /// The sample mean, replaced by `pivot` when it falls strictly within
    /// n^{-1/4} of it.
    Hodges { pivot: f64 },
    /// T_n ≡ value.
    Constant { value: f64 },
    /// Hodges with several pivots: the nearest pivot is returned when the mean
    /// lies strictly within n^{-1/4} of it. Used as a negative control for the
    /// uniqueness of superefficiency loci.
    PiecewiseHodges { pivots: Vec<f64> },
}

/// Which side owns the band boundary |mean − pivot| = n^{-1/4}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandConvention {
    /// |mean − pivot| < n^{-1/4} returns the pivot.
    #[default]
    Strict,
    /// |mean − pivot| ≤ n^{-1/4} returns the pivot.
    Closed,
}

/// Half-width n^{-1/4} of the Hodges band.
pub fn band_half_width(n: u64) -> f64 {
    (n as f64).powf(-0.25)
}

/// What the estimator outputs on a stretch of the sample-mean axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentOutput {
    Mean,
    Fixed(f64),
}

/// The estimator restricted to the open interval (lo, hi) of sample means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub output: SegmentOutput,
}

impl EstimatorSpec {
    pub fn hodges(pivot: f64) -> Self {
        EstimatorSpec::Hodges { pivot }
    }

    pub fn constant(value: f64) -> Self {
        EstimatorSpec::Constant { value }
    }

    pub fn validate(&self, model: &GaussianLocationModel) -> Result<()> {
        match self {
            EstimatorSpec::Mle => Ok(()),
            EstimatorSpec::Hodges { pivot } => model.check_parameter(*pivot),
            EstimatorSpec::Constant { value } => model.check_parameter(*value),
            EstimatorSpec::PiecewiseHodges { pivots } => {
                if pivots.is_empty() {
                    return Err(Error::domain("piecewise Hodges estimator needs at least one pivot"));
                }
                pivots.iter().try_for_each(|p| model.check_parameter(*p))
            }
        }
    }

    /// T_n as a function of the sample mean, with the band boundary as printed
    /// (strict).
    pub fn estimate(&self, n: u64, sample_mean: f64) -> f64 {
        self.estimate_with(n, sample_mean, BandConvention::Strict)
    }

    pub fn estimate_with(&self, n: u64, sample_mean: f64, convention: BandConvention) -> f64 {
        let in_band = |distance: f64, h: f64| match convention {
            BandConvention::Strict => distance < h,
            BandConvention::Closed => distance <= h,
        };
        match self {
            EstimatorSpec::Mle => sample_mean,
            EstimatorSpec::Constant { value } => *value,
            EstimatorSpec::Hodges { pivot } => {
                if in_band((sample_mean - pivot).abs(), band_half_width(n)) {
                    *pivot
                } else {
                    sample_mean
                }
            }
            EstimatorSpec::PiecewiseHodges { pivots } => {
                let nearest = pivots
                    .iter()
                    .copied()
                    .min_by(|a, b| (sample_mean - a).abs().total_cmp(&(sample_mean - b).abs()));
                match nearest {
                    Some(p) if in_band((sample_mean - p).abs(), band_half_width(n)) => p,
                    _ => sample_mean,
                }
            }
        }
    }

    /// Pivots (or the constant value) at which the estimator may beat the mean.
    pub fn special_points(&self) -> Vec<f64> {
        match self {
            EstimatorSpec::Mle => Vec::new(),
            EstimatorSpec::Hodges { pivot } => vec![*pivot],
            EstimatorSpec::Constant { value } => vec![*value],
            EstimatorSpec::PiecewiseHodges { pivots } => pivots.clone(),
        }
    }

    /// Piecewise description of T_n over the sample-mean axis. Segment
    /// endpoints carry zero probability, so boundary ownership is irrelevant.
    pub fn segments(&self, n: u64) -> Vec<Segment> {
        let whole = |output| vec![Segment { lo: f64::NEG_INFINITY, hi: f64::INFINITY, output }];
        match self {
            EstimatorSpec::Mle => whole(SegmentOutput::Mean),
            EstimatorSpec::Constant { value } => whole(SegmentOutput::Fixed(*value)),
            EstimatorSpec::Hodges { pivot } => pivot_segments(&[*pivot], band_half_width(n)),
            EstimatorSpec::PiecewiseHodges { pivots } => pivot_segments(pivots, band_half_width(n)),
        }
    }
}

fn pivot_segments(pivots: &[f64], half_width: f64) -> Vec<Segment> {
    let mut sorted = pivots.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut segments = Vec::with_capacity(2 * sorted.len() + 1);
    let mut cursor = f64::NEG_INFINITY;
    for (i, &p) in sorted.iter().enumerate() {
        let left_limit = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (sorted[i - 1] + p) };
        let right_limit = sorted.get(i + 1).map_or(f64::INFINITY, |next| 0.5 * (p + next));
        let lo = (p - half_width).max(left_limit);
        let hi = (p + half_width).min(right_limit);
        if lo > cursor {
            segments.push(Segment { lo: cursor, hi: lo, output: SegmentOutput::Mean });
        }
        segments.push(Segment { lo, hi, output: SegmentOutput::Fixed(p) });
        cursor = hi;
    }
    if cursor < f64::INFINITY {
        segments.push(Segment { lo: cursor, hi: f64::INFINITY, output: SegmentOutput::Mean });
    }
    segments
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::Mle => write!(f, "mle"),
            EstimatorSpec::Hodges { pivot } => write!(f, "hodges({pivot})"),
            EstimatorSpec::Constant { value } => write!(f, "constant({value})"),
            EstimatorSpec::PiecewiseHodges { pivots } => {
                let list: Vec<String> = pivots.iter().map(|p| p.to_string()).collect();
                write!(f, "piecewise-hodges({})", list.join(";"))
            }
        }
    }
}

/// The event {|T_n − center| > radius} under P_{n,θ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationQuery {
    pub theta: f64,
    pub n: u64,
    pub radius: f64,
    pub center: f64,
}

impl ConcentrationQuery {
    /// Centred at the sampling parameter: P_{n,θ}(|T_n − θ| > radius).
    pub fn centered(theta: f64, n: u64, radius: f64) -> Self {
        Self { theta, n, radius, center: theta }
    }

    /// Radius c·n^{-1/2}, centred at θ.
    pub fn scaled(theta: f64, n: u64, c: f64) -> Self {
        Self::centered(theta, n, c / (n as f64).sqrt())
    }

    fn validate(&self, model: &GaussianLocationModel) -> Result<()> {
        model.check_parameter(self.theta)?;
        if self.n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::domain(format!("radius must be positive, got {}", self.radius)));
        }
        if !self.center.is_finite() {
            return Err(Error::domain("center must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationResult {
    pub probability: f64,
    #[serde(with = "crate::extended::scalar")]
    pub log_probability: f64,
    pub method: Method,
    pub std_error: f64,
    pub n: u64,
    pub theta: f64,
    pub center: f64,
    pub radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Sample-mean intervals making up {|T_n − center| > radius}, pairwise disjoint.
fn event_intervals(spec: &EstimatorSpec, query: &ConcentrationQuery) -> Vec<(f64, f64)> {
    let below = query.center - query.radius;
    let above = query.center + query.radius;
    let mut pieces = Vec::new();
    for seg in spec.segments(query.n) {
        match seg.output {
            SegmentOutput::Fixed(v) => {
                if (v - query.center).abs() > query.radius {
                    pieces.push((seg.lo, seg.hi));
                }
            }
            SegmentOutput::Mean => {
                let left = (seg.lo, seg.hi.min(below));
                let right = (seg.lo.max(above), seg.hi);
                pieces.extend([left, right].into_iter().filter(|(a, b)| a < b));
            }
        }
    }
    pieces
}

/// ln P_{n,θ}(|T_n − center| > radius), finite even when the probability
/// underflows; −∞ when the event is empty.
pub fn concentration_log_probability(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    query: &ConcentrationQuery,
) -> Result<f64> {
    spec.validate(model)?;
    query.validate(model)?;
    let logs: Vec<f64> = event_intervals(spec, query)
        .into_iter()
        .map(|(a, b)| model.log_mean_interval_probability(query.theta, query.n, a, b))
        .collect();
    Ok(log_sum_exp(&logs))
}

/// Exact concentration probability from the sample-mean decomposition.
pub fn concentration_exact(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    query: &ConcentrationQuery,
) -> Result<ConcentrationResult> {
    let log_probability = concentration_log_probability(model, spec, query)?;
    let probability: f64 = event_intervals(spec, query)
        .into_iter()
        .map(|(a, b)| model.mean_interval_probability(query.theta, query.n, a, b))
        .fold(0.0, |acc, p| acc + p)
        .clamp(0.0, 1.0);
    Ok(ConcentrationResult {
        probability,
        log_probability,
        method: Method::Exact,
        std_error: 0.0,
        n: query.n,
        theta: query.theta,
        center: query.center,
        radius: query.radius,
        samples: None,
        seed: None,
    })
}

pub const MIN_MC_SAMPLES: u64 = 100;

/// How each Monte Carlo replication produces its sample mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// One N(θ, σ²/n) draw per replication.
    #[default]
    SufficientStatistic,
    /// n i.i.d. N(θ, σ²) draws, averaged. Validation only.
    FullSample,
}

/// Monte Carlo estimate of the concentration probability through the
/// sufficient statistic. Deterministic given `seed`.
pub fn concentration_mc(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    query: &ConcentrationQuery,
    samples: u64,
    seed: u64,
) -> Result<ConcentrationResult> {
    concentration_mc_with(model, spec, query, samples, seed, SamplingMode::SufficientStatistic)
}

pub fn concentration_mc_with(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    query: &ConcentrationQuery,
    samples: u64,
    seed: u64,
    mode: SamplingMode,
) -> Result<ConcentrationResult> {
    spec.validate(model)?;
    query.validate(model)?;
    if samples < MIN_MC_SAMPLES {
        return Err(Error::domain(format!("at least {MIN_MC_SAMPLES} replications are required, got {samples}")));
    }
    let n = query.n;
    let sigma = model.sigma();
    let sd = model.mean_sd(n);
    let hits = count_successes(samples, seed, |rng| {
        let mean = match mode {
            SamplingMode::SufficientStatistic => {
                let z: f64 = StandardNormal.sample(rng);
                query.theta + sd * z
            }
            SamplingMode::FullSample => {
                let total: f64 = (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        query.theta + sigma * z
                    })
                    .sum();
                total / n as f64
            }
        };
        (spec.estimate(n, mean) - query.center).abs() > query.radius
    });
    let p = hits as f64 / samples as f64;
    Ok(ConcentrationResult {
        probability: p,
        log_probability: p.ln(),
        method: Method::MonteCarlo,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        n,
        theta: query.theta,
        center: query.center,
        radius: query.radius,
        samples: Some(samples),
        seed: Some(seed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleBoundRow {
    pub n: u64,
    pub probability: f64,
}

/// Exact MLE concentration at radius c·n^{-1/2} compared with 2Φ(−c√I(θ)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleBoundReport {
    pub theta: f64,
    pub c: f64,
    /// 2Φ(−c√I(θ)), the upper bound for asymptotically efficient estimators.
    pub two_sided_bound: f64,
    /// Φ(−c√I(θ)), the lower bound every estimator meets at non-special points.
    pub one_sided_bound: f64,
    pub rows: Vec<MleBoundRow>,
    /// max |P_n − 2Φ(−c√I)| over the rows.
    pub max_deviation: f64,
    /// max P_n − min P_n over the rows.
    pub spread: f64,
}

impl MleBoundReport {
    pub fn equality_holds(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
    }

    pub fn lower_bound_holds(&self) -> bool {
        self.rows.iter().all(|r| r.probability >= self.one_sided_bound)
    }
}

pub fn mle_bound_check(
    model: &GaussianLocationModel,
    c: f64,
    n_list: &[u64],
    theta: f64,
) -> Result<MleBoundReport> {
    model.check_parameter(theta)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("c must be positive, got {c}")));
    }
    let scaled = c * model.fisher_information(theta).sqrt();
    let two_sided_bound = 2.0 * normal_cdf(-scaled);
    let one_sided_bound = normal_cdf(-scaled);
    let rows = n_list
        .iter()
        .map(|&n| {
            let r = concentration_exact(model, &EstimatorSpec::Mle, &ConcentrationQuery::scaled(theta, n, c))?;
            Ok(MleBoundRow { n, probability: r.probability })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = rows.iter().map(|r| (r.probability - two_sided_bound).abs()).fold(0.0, f64::max);
    let hi = rows.iter().map(|r| r.probability).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.probability).fold(f64::INFINITY, f64::min);
    let spread = if rows.is_empty() { 0.0 } else { hi - lo };
    Ok(MleBoundReport { theta, c, two_sided_bound, one_sided_bound, rows, max_deviation, spread })
}
