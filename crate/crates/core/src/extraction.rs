//! Recovering the point of superefficiency by certified interval shrinking.
//!
//! Given an estimator that beats Φ(−c√I) somewhere inside (L, R), each
//! iteration picks a sample size n matched to the current width, scans the
//! interval for *suitable* points
//!
//! ```text
//! P_{n,q}(|T_n − q| > c n^{-1/2}) ≤ a Φ(−c √Ī)
//! ```
//!
//! and replaces the interval by a cover of the suitable set that is shorter
//! by the factor (1+ε)^{-1}. Interval endpoints, grid points and every
//! certificate are exact rationals; only probabilities are floating point.

use crate::error::{Error, Result};
use crate::estimators::{concentration_exact, ConcentrationQuery, EstimatorSpec};
use crate::models::{affinity_exact_gaussian, GaussianLocationModel};
use crate::normal::normal_cdf;
use crate::rational::{ceil_to_u64, dyadic, floor_to_u64, serde_rational, to_f64, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Margin by which the exclusion premise must hold.
pub const PREMISE_MARGIN: f64 = 1e-12;

/// Smallest permitted scan resolution.
pub const MIN_GRID_POINTS: u32 = 16;

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Additive slack of the affinity assumption entering the exclusion premise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum AssumptionSlack {
    Fixed(f64),
    /// Reuse ε for the slack as well as for the geometric factor.
    SameAsEpsilon,
}

/// Interval with exact rational endpoints. Open when it bounds the search,
/// closed when it is the hull of a scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "serde_rational")]
    pub lower: Rational,
    #[serde(with = "serde_rational")]
    pub upper: Rational,
}

impl Interval {
    pub fn new(lower: Rational, upper: Rational) -> Result<Self> {
        if lower >= upper {
            return Err(Error::domain(format!("empty interval ({lower}, {upper})")));
        }
        Ok(Self { lower, upper })
    }

    pub fn width(&self) -> Rational {
        &self.upper - &self.lower
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lower + &self.upper) / rat(2)
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.6e}, {:.6e}]", to_f64(&self.lower), to_f64(&self.upper))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    #[serde(with = "serde_rational")]
    pub c: Rational,
    #[serde(with = "serde_rational")]
    pub a: Rational,
    #[serde(with = "serde_rational")]
    pub i_bar: Rational,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub assumption_slack: AssumptionSlack,
    pub n_min: u64,
    pub initial_interval: Interval,
    pub grid_points: u32,
    pub tolerance: f64,
    pub max_iterations: u32,
}

impl ExtractionConfig {
    /// c = 1, a = 1/2, Ī = 1.01, ε = 1/10 on (−0.05, 0.05), tolerance 1e−3.
    pub fn canonical() -> Self {
        let r = |n: i64, d: i64| Rational::new(BigInt::from(n), BigInt::from(d));
        Self {
            c: rat(1),
            a: r(1, 2),
            i_bar: r(101, 100),
            epsilon: r(1, 10),
            assumption_slack: AssumptionSlack::Fixed(0.0),
            n_min: 1,
            initial_interval: Interval { lower: r(-1, 20), upper: r(1, 20) },
            grid_points: 64,
            tolerance: 1e-3,
            max_iterations: 60,
        }
    }

    pub fn slack(&self) -> f64 {
        match self.assumption_slack {
            AssumptionSlack::Fixed(s) => s,
            AssumptionSlack::SameAsEpsilon => to_f64(&self.epsilon),
        }
    }

    fn one_plus_eps_pow(&self, k: usize) -> Rational {
        num_traits::pow(Rational::one() + &self.epsilon, k)
    }

    /// a·Φ(−c√Ī).
    pub fn threshold(&self) -> f64 {
        to_f64(&self.a) * normal_cdf(-to_f64(&self.c) * to_f64(&self.i_bar).sqrt())
    }

    /// Φ(−(1+ε)³c√Ī) − slack: the affinity floor for points that are close at scale n.
    pub fn affinity_floor(&self) -> f64 {
        let inflated = to_f64(&self.one_plus_eps_pow(3)) * to_f64(&self.c);
        normal_cdf(-inflated * to_f64(&self.i_bar).sqrt()) - self.slack()
    }

    /// The exclusion premise: affinity floor exceeds the threshold.
    pub fn premise_holds(&self) -> bool {
        self.affinity_floor() > self.threshold() + PREMISE_MARGIN
    }

    /// [4(1+ε)⁴c²/w², 4(1+ε)⁶c²/w²].
    pub fn n_range(&self, width: &Rational) -> (Rational, Rational) {
        let base = rat(4) * &self.c * &self.c / (width * width);
        (&base * self.one_plus_eps_pow(4), base * self.one_plus_eps_pow(6))
    }

    /// The admissibility condition for a starting width: the n range is longer
    /// than one and its lower end is at least N_min.
    pub fn width_admissible(&self, width: &Rational) -> bool {
        let (lo, hi) = self.n_range(width);
        &hi - &lo > Rational::one() && lo >= rat(self.n_min as i64)
    }

    pub fn validate(&self, model: &GaussianLocationModel) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !self.c.is_positive() {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if !(self.a.is_positive() && self.a < Rational::one()) {
            return bad(format!("a must lie in (0, 1), got {}", self.a));
        }
        if !self.epsilon.is_positive() {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if let AssumptionSlack::Fixed(s) = self.assumption_slack {
            if !(s.is_finite() && s >= 0.0) {
                return bad(format!("assumption slack must be nonnegative, got {s}"));
            }
        }
        if self.n_min == 0 {
            return bad("n_min must be at least 1".into());
        }
        if self.grid_points < MIN_GRID_POINTS {
            return bad(format!("grid_points must be at least {MIN_GRID_POINTS}, got {}", self.grid_points));
        }
        // step = w/(G+1) ≤ c n^{-1/2}/4 for every n the band admits.
        if rat(self.grid_points as i64 + 1) < rat(8) * self.one_plus_eps_pow(3) {
            return bad(format!(
                "grid_points = {} is too coarse: need grid_points + 1 >= 8(1+eps)^3 = {:.4}",
                self.grid_points,
                8.0 * to_f64(&self.one_plus_eps_pow(3))
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        let Interval { lower, upper } = &self.initial_interval;
        if lower >= upper {
            return bad(format!("initial interval ({lower}, {upper}) is empty"));
        }
        let (lo, hi) = (to_f64(lower), to_f64(upper));
        if !model.domain().contains_interval(lo, hi) {
            return bad(format!("initial interval ({lo}, {hi}) is not inside {}", model.domain()));
        }
        let i_bar = to_f64(&self.i_bar);
        let sup_info = [lo, 0.5 * (lo + hi), hi]
            .into_iter()
            .map(|q| model.fisher_information(q))
            .fold(f64::NEG_INFINITY, f64::max);
        if !(sup_info < i_bar) {
            return bad(format!("I_bar = {i_bar} must exceed sup I(q) = {sup_info} on the initial interval"));
        }
        if !self.premise_holds() {
            return bad(format!(
                "exclusion premise fails: Phi(-(1+eps)^3 c sqrt(I_bar)) - slack = {:.6e} is not above a Phi(-c sqrt(I_bar)) = {:.6e}",
                self.affinity_floor(),
                self.threshold()
            ));
        }
        let width = self.initial_interval.width();
        if !self.width_admissible(&width) {
            let (nlo, nhi) = self.n_range(&width);
            return Err(Error::Width {
                width: to_f64(&width),
                lower: to_f64(&nlo),
                upper: to_f64(&nhi),
                n_min: self.n_min,
            });
        }
        Ok(())
    }
}

/// Largest ε = 2^{-k} (k ≤ `max_k`) for which the exclusion premise holds.
pub fn select_epsilon(config: &ExtractionConfig, max_k: u32) -> Option<Rational> {
    (0..=max_k).map(dyadic).find(|eps| ExtractionConfig { epsilon: eps.clone(), ..config.clone() }.premise_holds())
}

/// Smallest integer n ≥ N_min in [4(1+ε)⁴c²/w², 4(1+ε)⁶c²/w²].
pub fn choose_n(theta1: &Rational, theta2: &Rational, config: &ExtractionConfig) -> Result<u64> {
    let width = theta2 - theta1;
    if !width.is_positive() {
        return Err(Error::domain(format!("empty interval ({theta1}, {theta2})")));
    }
    let (lo, hi) = config.n_range(&width);
    let width_error = || Error::Width {
        width: to_f64(&width),
        lower: to_f64(&lo),
        upper: to_f64(&hi),
        n_min: config.n_min,
    };
    let n = ceil_to_u64(&lo).ok_or_else(width_error)?.max(config.n_min).max(1);
    match floor_to_u64(&hi) {
        Some(top) if n <= top => Ok(n),
        _ => Err(width_error()),
    }
}

/// 2(1+ε)²c n^{-1/2} ≤ w ≤ 2(1+ε)³c n^{-1/2}, checked by squaring.
pub fn certify_sample_size(theta1: &Rational, theta2: &Rational, n: u64, config: &ExtractionConfig) -> bool {
    let width = theta2 - theta1;
    if !width.is_positive() || n == 0 {
        return false;
    }
    let w2n = &width * &width * rat(n as i64);
    let base = rat(4) * &config.c * &config.c;
    &base * config.one_plus_eps_pow(4) <= w2n && w2n <= base * config.one_plus_eps_pow(6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Suitability {
    pub probability: f64,
    pub suitable: bool,
}

/// P_{n,q}(|T_n − q| > c n^{-1/2}) against the threshold.
pub fn is_suitable(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    q: &Rational,
    n: u64,
    config: &ExtractionConfig,
) -> Result<Suitability> {
    if n < config.n_min {
        return Err(Error::domain(format!("n = {n} is below n_min = {}", config.n_min)));
    }
    let query = ConcentrationQuery::scaled(to_f64(q), n, to_f64(&config.c));
    let probability = concentration_exact(model, spec, &query)?.probability;
    Ok(Suitability { probability, suitable: probability <= config.threshold() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    #[serde(with = "serde_rational")]
    pub q: Rational,
    pub probability: f64,
    pub suitable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityScan {
    pub n: u64,
    pub threshold: f64,
    #[serde(with = "serde_rational")]
    pub grid_step: Rational,
    pub points: Vec<ScanPoint>,
    pub suitable_hull: Option<Interval>,
    pub diameter: f64,
}

impl SuitabilityScan {
    pub fn suitable_points(&self) -> impl Iterator<Item = &ScanPoint> {
        self.points.iter().filter(|p| p.suitable)
    }

    /// Exact hull diameter (0 without suitable points).
    pub fn exact_diameter(&self) -> Rational {
        self.suitable_hull.as_ref().map_or_else(Rational::zero, Interval::width)
    }
}

fn grid(interval: &Interval, grid_points: u32) -> (Rational, Vec<Rational>) {
    let step = interval.width() / rat(grid_points as i64 + 1);
    let points = (1..=grid_points as i64).map(|j| &interval.lower + &step * rat(j)).collect();
    (step, points)
}

/// Suitability of `grid_points` equally spaced rationals strictly inside `interval`.
pub fn scan_suitable(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    interval: &Interval,
    n: u64,
    config: &ExtractionConfig,
) -> Result<SuitabilityScan> {
    if config.grid_points < MIN_GRID_POINTS {
        return Err(Error::domain(format!("grid_points must be at least {MIN_GRID_POINTS}")));
    }
    if interval.lower >= interval.upper {
        return Err(Error::domain("scan interval is empty"));
    }
    let (grid_step, qs) = grid(interval, config.grid_points);
    let points = qs
        .into_par_iter()
        .map(|q| {
            let s = is_suitable(model, spec, &q, n, config)?;
            Ok(ScanPoint { q, probability: s.probability, suitable: s.suitable })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut suitable = points.iter().filter(|p| p.suitable);
    let suitable_hull = suitable.next().map(|first| {
        let last = suitable.next_back().unwrap_or(first);
        Interval { lower: first.q.clone(), upper: last.q.clone() }
    });
    let diameter = suitable_hull.as_ref().map_or(0.0, |h| to_f64(&h.width()));
    Ok(SuitabilityScan { n, threshold: config.threshold(), grid_step, points, suitable_hull, diameter })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkCertificate {
    /// (1+ε)·width_after ≤ width_before.
    pub width_ok: bool,
    /// (1+ε)²·diameter ≤ width_before.
    pub diameter_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShrinkOutcome {
    Shrunk { interval: Interval, certificate: ShrinkCertificate },
    NoSuitablePoint,
    Violation { interval: Interval, certificate: ShrinkCertificate },
}

/// Covers the suitable hull by an interval one grid step wider on each side,
/// clipped to `before`, and certifies the shrinkage.
pub fn shrink_interval(scan: &SuitabilityScan, before: &Interval, config: &ExtractionConfig) -> ShrinkOutcome {
    let Some(hull) = &scan.suitable_hull else {
        return ShrinkOutcome::NoSuitablePoint;
    };
    let lower = (&hull.lower - &scan.grid_step).max(before.lower.clone());
    let upper = (&hull.upper + &scan.grid_step).min(before.upper.clone());
    let interval = Interval { lower, upper };
    let width_before = before.width();
    let certificate = ShrinkCertificate {
        width_ok: interval.width() * (Rational::one() + &config.epsilon) <= width_before,
        diameter_ok: scan.exact_diameter() * config.one_plus_eps_pow(2) <= width_before,
    };
    if certificate.width_ok && certificate.diameter_ok {
        ShrinkOutcome::Shrunk { interval, certificate }
    } else {
        ShrinkOutcome::Violation { interval, certificate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionIteration {
    pub index: u32,
    pub interval_before: Interval,
    pub n: u64,
    /// Exact check of the band 2(1+ε)²c n^{-1/2} ≤ w ≤ 2(1+ε)³c n^{-1/2}.
    pub n_certified: bool,
    /// Exact check of grid_step ≤ c n^{-1/2}/4.
    pub resolution_ok: bool,
    pub scan: SuitabilityScan,
    pub interval_after: Option<Interval>,
    pub certificate: Option<ShrinkCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExtractionOutcome {
    Converged {
        #[serde(with = "serde_rational")]
        theta_hat: Rational,
        theta_hat_f64: f64,
    },
    NoSuperefficientPoint { at_iteration: u32 },
    AssumptionViolation { at_iteration: u32, detail: String },
    WidthError { at_iteration: u32, detail: String },
    IterationLimit { iterations: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionTrace {
    pub estimator: EstimatorSpec,
    pub sigma: f64,
    pub config: ExtractionConfig,
    pub threshold: f64,
    pub iterations: Vec<ExtractionIteration>,
    pub outcome: ExtractionOutcome,
}

impl ExtractionTrace {
    pub fn converged(&self) -> bool {
        matches!(self.outcome, ExtractionOutcome::Converged { .. })
    }

    pub fn theta_hat(&self) -> Option<f64> {
        match self.outcome {
            ExtractionOutcome::Converged { theta_hat_f64, .. } => Some(theta_hat_f64),
            _ => None,
        }
    }

    pub fn final_interval(&self) -> &Interval {
        self.iterations
            .iter()
            .rev()
            .find_map(|it| it.interval_after.as_ref())
            .unwrap_or(&self.config.initial_interval)
    }

    /// One line per iteration, then the outcome.
    pub fn render_text(&self) -> String {
        let ok = |b: bool| if b { "ok" } else { "FAIL" };
        let mut out = format!(
            "extraction for {} (sigma = {}), threshold {:.6e}, start {}\n",
            self.estimator, self.sigma, self.threshold, self.config.initial_interval
        );
        for it in &self.iterations {
            let hull = it.scan.suitable_hull.as_ref().map_or_else(|| "none".to_string(), Interval::to_string);
            let (w_cert, d_cert) = it
                .certificate
                .as_ref()
                .map_or(("-", "-"), |c| (ok(c.width_ok), ok(c.diameter_ok)));
            out.push_str(&format!(
                "iter {:>3}  width {:.6e}  n {:>10}  n-cert {}  grid {}  hull {}  diameter {:.6e}  width-cert {}  diameter-cert {}\n",
                it.index,
                to_f64(&it.interval_before.width()),
                it.n,
                ok(it.n_certified),
                ok(it.resolution_ok),
                hull,
                it.scan.diameter,
                w_cert,
                d_cert
            ));
        }
        let outcome = match &self.outcome {
            ExtractionOutcome::Converged { theta_hat_f64, .. } => {
                format!("converged: theta_hat = {theta_hat_f64:.9e}, final interval {}", self.final_interval())
            }
            ExtractionOutcome::NoSuperefficientPoint { at_iteration } => {
                format!("no superefficient point: no suitable point at iteration {at_iteration}")
            }
            ExtractionOutcome::AssumptionViolation { at_iteration, detail } => {
                format!("assumption violation at iteration {at_iteration}: {detail}")
            }
            ExtractionOutcome::WidthError { at_iteration, detail } => {
                format!("width error at iteration {at_iteration}: {detail}")
            }
            ExtractionOutcome::IterationLimit { iterations } => {
                format!("iteration limit reached after {iterations} iterations, interval {}", self.final_interval())
            }
        };
        out.push_str(&outcome);
        out.push('\n');
        out
    }
}

fn resolution_ok(step: &Rational, n: u64, config: &ExtractionConfig) -> bool {
    // step ≤ c/(4√n)  ⇔  16 n step² ≤ c²
    rat(16) * rat(n as i64) * step * step <= &config.c * &config.c
}

/// Runs the shrinking loop from the configured interval until its width is at
/// most the tolerance. Failures are recorded in the trace outcome.
pub fn extract_parameter(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    config: &ExtractionConfig,
) -> Result<ExtractionTrace> {
    config.validate(model)?;
    spec.validate(model)?;
    let mut interval = config.initial_interval.clone();
    let mut iterations = Vec::new();
    let outcome = loop {
        if to_f64(&interval.width()) <= config.tolerance {
            let theta_hat = interval.midpoint();
            break ExtractionOutcome::Converged { theta_hat_f64: to_f64(&theta_hat), theta_hat };
        }
        let index = iterations.len() as u32 + 1;
        if index > config.max_iterations {
            break ExtractionOutcome::IterationLimit { iterations: config.max_iterations };
        }
        let n = match choose_n(&interval.lower, &interval.upper, config) {
            Ok(n) => n,
            Err(e) => break ExtractionOutcome::WidthError { at_iteration: index, detail: e.to_string() },
        };
        let scan = scan_suitable(model, spec, &interval, n, config)?;
        let mut record = ExtractionIteration {
            index,
            interval_before: interval.clone(),
            n,
            n_certified: certify_sample_size(&interval.lower, &interval.upper, n, config),
            resolution_ok: resolution_ok(&scan.grid_step, n, config),
            interval_after: None,
            certificate: None,
            scan,
        };
        if !(record.n_certified && record.resolution_ok) {
            let detail = format!("sample size n = {n} failed its exact certificate");
            iterations.push(record);
            break ExtractionOutcome::AssumptionViolation { at_iteration: index, detail };
        }
        match shrink_interval(&record.scan, &interval, config) {
            ShrinkOutcome::NoSuitablePoint => {
                iterations.push(record);
                break ExtractionOutcome::NoSuperefficientPoint { at_iteration: index };
            }
            ShrinkOutcome::Violation { interval: after, certificate } => {
                let detail = format!(
                    "suitable hull {} of diameter {:.6e} cannot be covered by an interval of width <= (1+eps)^-1 * {:.6e}",
                    record.scan.suitable_hull.as_ref().expect("violation implies a hull"),
                    record.scan.diameter,
                    to_f64(&interval.width())
                );
                record.interval_after = Some(after);
                record.certificate = Some(certificate);
                iterations.push(record);
                break ExtractionOutcome::AssumptionViolation { at_iteration: index, detail };
            }
            ShrinkOutcome::Shrunk { interval: after, certificate } => {
                interval = after.clone();
                record.interval_after = Some(after);
                record.certificate = Some(certificate);
                iterations.push(record);
            }
        }
    };
    Ok(ExtractionTrace {
        estimator: spec.clone(),
        sigma: model.sigma(),
        config: config.clone(),
        threshold: config.threshold(),
        iterations,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    #[serde(with = "serde_rational")]
    pub q1: Rational,
    #[serde(with = "serde_rational")]
    pub q2: Rational,
    pub n: u64,
    pub p1: f64,
    pub p2: f64,
    pub threshold: f64,
    pub separation: f64,
    /// 2c n^{-1/2}
    pub separation_bound: f64,
    /// A sample mean within c n^{-1/2} of both points.
    #[serde(with = "serde_rational")]
    pub witness_mean: Rational,
    pub affinity: f64,
    pub affinity_floor: f64,
    /// |q2 − q1| ≤ 2c n^{-1/2}, exact.
    pub separation_holds: bool,
    /// The two deviation events cannot cover the sample space: max(p1, p2) < π.
    pub events_exclusive: bool,
    pub affinity_floor_holds: bool,
}

impl ExclusionReport {
    pub fn holds(&self) -> bool {
        self.separation_holds && self.events_exclusive && self.affinity_floor_holds
    }
}

/// For two suitable points within 2(1+ε)³c n^{-1/2} of each other, checks the
/// consequences of the exclusion argument.
pub fn lemma1_exclusion_check(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    q1: &Rational,
    q2: &Rational,
    n: u64,
    config: &ExtractionConfig,
) -> Result<ExclusionReport> {
    let s1 = is_suitable(model, spec, q1, n, config)?;
    let s2 = is_suitable(model, spec, q2, n, config)?;
    let sep = (q2 - q1).abs();
    let c2 = &config.c * &config.c;
    let sep2n = &sep * &sep * rat(n as i64);
    if q1 != q2 {
        if !(s1.suitable && s2.suitable) {
            return Err(Error::Rejected(format!("{q1} and {q2} are not both suitable at n = {n}")));
        }
        if sep2n > rat(4) * &c2 * config.one_plus_eps_pow(6) {
            return Err(Error::Rejected(format!(
                "|q2 - q1| = {:.6e} exceeds 2(1+eps)^3 c n^-1/2",
                to_f64(&sep)
            )));
        }
    }
    let (f1, f2) = (to_f64(q1), to_f64(q2));
    let affinity = affinity_exact_gaussian(model, f1, f2, n)?;
    let affinity_floor = config.affinity_floor();
    Ok(ExclusionReport {
        q1: q1.clone(),
        q2: q2.clone(),
        n,
        p1: s1.probability,
        p2: s2.probability,
        threshold: config.threshold(),
        separation: to_f64(&sep),
        separation_bound: 2.0 * to_f64(&config.c) / (n as f64).sqrt(),
        witness_mean: (q1 + q2) / rat(2),
        affinity,
        affinity_floor,
        separation_holds: sep2n <= rat(4) * c2,
        events_exclusive: q1 == q2 || s1.probability.max(s2.probability) < affinity,
        affinity_floor_holds: affinity >= affinity_floor - PREMISE_MARGIN,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountabilityReport {
    pub interval: Interval,
    pub n_chosen: u64,
    pub n_tested: Vec<u64>,
    /// Grid points suitable at every tested n.
    #[serde(with = "rational_vec")]
    pub persistent: Vec<Rational>,
    /// Maximal runs of adjacent persistent grid points.
    pub loci: usize,
    pub diameter: f64,
    /// 2c n^{-1/2} at the chosen n.
    pub diameter_bound: f64,
    pub holds: bool,
}

mod rational_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| r.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| crate::rational::parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Points of the initial interval that stay suitable for every n of the
/// admissible range (capped at `n_max`) must lie within 2c n^{-1/2} of each
/// other: at this scale there is room for at most one superefficiency locus.
pub fn countability_gap_check(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    config: &ExtractionConfig,
    n_max: u64,
) -> Result<CountabilityReport> {
    config.validate(model)?;
    let interval = config.initial_interval.clone();
    let n_chosen = choose_n(&interval.lower, &interval.upper, config)?;
    if n_max < n_chosen {
        return Err(Error::domain(format!("n_max = {n_max} is below the chosen n = {n_chosen}")));
    }
    let (_, hi) = config.n_range(&interval.width());
    let top = floor_to_u64(&hi).unwrap_or(u64::MAX).min(n_max);
    let n_tested: Vec<u64> = (n_chosen..=top).collect();

    let (_, qs) = grid(&interval, config.grid_points);
    let flags = qs
        .par_iter()
        .map(|q| {
            for &n in &n_tested {
                if !is_suitable(model, spec, q, n, config)?.suitable {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<Vec<bool>>>()?;
    let loci = flags.iter().enumerate().filter(|&(j, &f)| f && (j == 0 || !flags[j - 1])).count();
    let persistent: Vec<Rational> = qs.into_iter().zip(&flags).filter(|(_, &f)| f).map(|(q, _)| q).collect();

    let diameter_exact = match (persistent.first(), persistent.last()) {
        (Some(a), Some(b)) => b - a,
        _ => Rational::zero(),
    };
    let holds = &diameter_exact * &diameter_exact * rat(n_chosen as i64) <= rat(4) * &config.c * &config.c;
    Ok(CountabilityReport {
        interval,
        n_chosen,
        n_tested,
        persistent,
        loci,
        diameter: to_f64(&diameter_exact),
        diameter_bound: 2.0 * to_f64(&config.c) / (n_chosen as f64).sqrt(),
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn model() -> GaussianLocationModel {
        GaussianLocationModel::standard()
    }

    fn unit_config() -> ExtractionConfig {
        ExtractionConfig { i_bar: rat(1), ..ExtractionConfig::canonical() }
    }

    #[test]
    fn suitability_examples() {
        let cfg = unit_config();
        // 0.5 Φ(−1)
        assert!((cfg.threshold() - 0.079_327_626_965_728_53).abs() < 1e-15);
        let s = is_suitable(&model(), &EstimatorSpec::hodges(0.0), &rat(0), 16, &cfg).unwrap();
        assert!((s.probability - 0.045_500_263_896_358_41).abs() < 1e-14);
        assert!(s.suitable);
        let s = is_suitable(&model(), &EstimatorSpec::Mle, &r(3, 10), 50, &cfg).unwrap();
        assert!((s.probability - 0.317_310_507_862_914_1).abs() < 1e-14);
        assert!(!s.suitable);
        let s = is_suitable(&model(), &EstimatorSpec::constant(0.25), &r(1, 4), 7, &cfg).unwrap();
        assert_eq!(s.probability, 0.0);
        assert!(s.suitable);
    }

    #[test]
    fn choose_n_examples() {
        let cfg = unit_config();
        assert_eq!(choose_n(&rat(0), &r(2, 5), &cfg).unwrap(), 37);
        assert!(certify_sample_size(&rat(0), &r(2, 5), 37, &cfg));
        assert!(!certify_sample_size(&rat(0), &r(2, 5), 36, &cfg));
        assert!(!certify_sample_size(&rat(0), &r(2, 5), 45, &cfg));
        assert!(matches!(choose_n(&rat(0), &rat(4), &cfg), Err(Error::Width { .. })));
        // canonical width 0.1: [585.64, 708.6...]
        let canon = ExtractionConfig::canonical();
        assert_eq!(choose_n(&r(-1, 20), &r(1, 20), &canon).unwrap(), 586);
        let big_nmin = ExtractionConfig { n_min: 600, ..canon.clone() };
        assert_eq!(choose_n(&r(-1, 20), &r(1, 20), &big_nmin).unwrap(), 600);
        let too_big = ExtractionConfig { n_min: 709, ..canon };
        assert!(choose_n(&r(-1, 20), &r(1, 20), &too_big).is_err());
    }

    #[test]
    fn canonical_config_is_valid_and_premise_is_tight_enough() {
        let cfg = ExtractionConfig::canonical();
        cfg.validate(&model()).unwrap();
        // Φ(−1.331·√1.01) = 0.0905072 > 0.5·Φ(−√1.01) = 0.0787257
        assert!((cfg.affinity_floor() - 0.090_507_2).abs() < 1e-6);
        assert!((cfg.threshold() - 0.078_725_7).abs() < 1e-6);
        let coupled = ExtractionConfig { assumption_slack: AssumptionSlack::SameAsEpsilon, ..cfg.clone() };
        assert!(matches!(coupled.validate(&model()), Err(Error::Config(_))));
        let coarse = ExtractionConfig { grid_points: 16, epsilon: rat(1), ..cfg.clone() };
        assert!(matches!(coarse.validate(&model()), Err(Error::Config(_))));
        let low_info = ExtractionConfig { i_bar: rat(1), ..cfg.clone() };
        assert!(low_info.validate(&model()).is_err());
        let wide = ExtractionConfig { initial_interval: Interval::new(rat(-2), rat(2)).unwrap(), ..cfg };
        assert!(matches!(wide.validate(&model()), Err(Error::Width { .. })));
    }

    #[test]
    fn epsilon_helper_picks_largest_dyadic() {
        let cfg = ExtractionConfig::canonical();
        let eps = select_epsilon(&cfg, 30).unwrap();
        // Φ(−(17/16)³√1.01) = 0.11402 > 0.07873 > Φ(−(9/8)³√1.01) = 0.07623
        assert_eq!(eps, dyadic(4));
        let coupled = ExtractionConfig { assumption_slack: AssumptionSlack::SameAsEpsilon, ..cfg };
        let eps = select_epsilon(&coupled, 30).unwrap();
        assert!(ExtractionConfig { epsilon: eps.clone(), ..coupled.clone() }.premise_holds());
        assert!(!ExtractionConfig { epsilon: eps * rat(2), ..coupled }.premise_holds());
    }

    #[test]
    fn scans() {
        let cfg = ExtractionConfig::canonical();
        let iv = cfg.initial_interval.clone();
        let n = choose_n(&iv.lower, &iv.upper, &cfg).unwrap();
        let radius = 1.0 / (n as f64).sqrt();

        let scan = scan_suitable(&model(), &EstimatorSpec::hodges(0.0), &iv, n, &cfg).unwrap();
        assert_eq!(scan.points.len(), 64);
        assert!(scan.points.iter().all(|p| p.q > iv.lower && p.q < iv.upper));
        let hull = scan.suitable_hull.clone().unwrap();
        assert!(hull.lower <= rat(0) && rat(0) <= hull.upper);
        assert!(scan.diameter <= 2.0 * radius);

        let scan = scan_suitable(&model(), &EstimatorSpec::Mle, &iv, n, &cfg).unwrap();
        assert!(scan.suitable_hull.is_none());
        assert_eq!(scan.diameter, 0.0);
        assert_eq!(shrink_interval(&scan, &iv, &cfg), ShrinkOutcome::NoSuitablePoint);

        let scan = scan_suitable(&model(), &EstimatorSpec::constant(0.0), &iv, n, &cfg).unwrap();
        for p in &scan.points {
            assert_eq!(p.suitable, to_f64(&p.q).abs() <= radius);
        }
    }

    #[test]
    fn hodges_extraction_converges_with_certificates() {
        let cfg = ExtractionConfig::canonical();
        let trace = extract_parameter(&model(), &EstimatorSpec::hodges(0.0), &cfg).unwrap();
        let theta_hat = trace.theta_hat().expect("converged");
        assert!(theta_hat.abs() <= 1e-3);
        assert!(trace.iterations.len() <= 30);
        for it in &trace.iterations {
            assert!(it.n_certified && it.resolution_ok);
            let cert = it.certificate.as_ref().unwrap();
            assert!(cert.width_ok && cert.diameter_ok);
            let after = it.interval_after.as_ref().unwrap();
            assert!(it.interval_before.contains_interval(after));
            assert!(after.lower < rat(0) && rat(0) < after.upper);
        }
        // width 0.1 → ≤ 0.0909... after one step
        let first = trace.iterations[0].interval_after.as_ref().unwrap();
        assert!(first.width() * r(11, 10) <= r(1, 10));
        assert!(trace.render_text().lines().count() == trace.iterations.len() + 2);
    }

    #[test]
    fn mle_has_no_superefficient_point() {
        let trace = extract_parameter(&model(), &EstimatorSpec::Mle, &ExtractionConfig::canonical()).unwrap();
        assert_eq!(trace.outcome, ExtractionOutcome::NoSuperefficientPoint { at_iteration: 1 });
        assert_eq!(trace.iterations.len(), 1);
    }

    #[test]
    fn constant_extraction_finds_its_value() {
        let trace =
            extract_parameter(&model(), &EstimatorSpec::constant(0.02), &ExtractionConfig::canonical()).unwrap();
        let theta_hat = trace.theta_hat().expect("converged");
        assert!((theta_hat - 0.02).abs() <= 1e-3);
    }

    #[test]
    fn iteration_limit_and_trivial_convergence() {
        let cfg = ExtractionConfig { max_iterations: 3, ..ExtractionConfig::canonical() };
        let trace = extract_parameter(&model(), &EstimatorSpec::hodges(0.0), &cfg).unwrap();
        assert_eq!(trace.outcome, ExtractionOutcome::IterationLimit { iterations: 3 });
        let cfg = ExtractionConfig { tolerance: 0.5, ..ExtractionConfig::canonical() };
        let trace = extract_parameter(&model(), &EstimatorSpec::hodges(0.0), &cfg).unwrap();
        assert!(trace.iterations.is_empty());
        assert_eq!(trace.theta_hat(), Some(0.0));
    }

    #[test]
    fn separated_loci_surface_a_violation() {
        // At n far above the matched range the band n^{-1/4} no longer links
        // the pivots, both are suitable and no short cover exists.
        let cfg = ExtractionConfig::canonical();
        let iv = cfg.initial_interval.clone();
        let spec = EstimatorSpec::PiecewiseHodges { pivots: vec![-0.045, 0.045] };
        let scan = scan_suitable(&model(), &spec, &iv, 100_000, &cfg).unwrap();
        assert!(scan.diameter * 1.21 > 0.1);
        match shrink_interval(&scan, &iv, &cfg) {
            ShrinkOutcome::Violation { certificate, .. } => assert!(!certificate.diameter_ok),
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn lemma1_on_scan_outputs() {
        let cfg = ExtractionConfig::canonical();
        let iv = cfg.initial_interval.clone();
        let n = choose_n(&iv.lower, &iv.upper, &cfg).unwrap();
        let spec = EstimatorSpec::hodges(0.0);
        let scan = scan_suitable(&model(), &spec, &iv, n, &cfg).unwrap();
        let suitable: Vec<_> = scan.suitable_points().map(|p| p.q.clone()).collect();
        assert!(suitable.len() >= 2);
        for q1 in &suitable {
            for q2 in &suitable {
                let report = lemma1_exclusion_check(&model(), &spec, q1, q2, n, &cfg).unwrap();
                assert!(report.holds(), "{report:?}");
            }
        }
        let same = lemma1_exclusion_check(&model(), &spec, &rat(0), &rat(0), n, &cfg).unwrap();
        assert!(same.holds());
        let rejected = lemma1_exclusion_check(&model(), &EstimatorSpec::Mle, &rat(0), &r(1, 100), n, &cfg);
        assert!(matches!(rejected, Err(Error::Rejected(_))));
    }

    #[test]
    fn countability_checks() {
        let cfg = ExtractionConfig::canonical();
        let m = model();
        let hodges = countability_gap_check(&m, &EstimatorSpec::hodges(0.0), &cfg, 10_000).unwrap();
        assert!(hodges.holds);
        assert_eq!(hodges.loci, 1);
        assert_eq!(hodges.n_tested.first(), Some(&586));
        assert_eq!(hodges.n_tested.last(), Some(&708));

        let mle = countability_gap_check(&m, &EstimatorSpec::Mle, &cfg, 10_000).unwrap();
        assert!(mle.holds && mle.persistent.is_empty() && mle.loci == 0);

        // Pivots closer than 2c n^{-1/2} merge into a single locus.
        let close = EstimatorSpec::PiecewiseHodges { pivots: vec![0.0, 0.04] };
        let report = countability_gap_check(&m, &close, &cfg, 10_000).unwrap();
        assert!(report.holds);
        assert_eq!(report.loci, 1);

        // Pivots farther apart than 2c n^{-1/2} are not both suitable.
        let far = EstimatorSpec::PiecewiseHodges { pivots: vec![-0.045, 0.045] };
        let n = report.n_chosen;
        let p1 = is_suitable(&m, &far, &r(-45, 1000), n, &cfg).unwrap();
        let p2 = is_suitable(&m, &far, &r(45, 1000), n, &cfg).unwrap();
        assert!(!(p1.suitable && p2.suitable));
        assert!(countability_gap_check(&m, &far, &cfg, 10_000).unwrap().holds);
    }

    #[test]
    fn trace_round_trips_through_json() {
        let trace = extract_parameter(&model(), &EstimatorSpec::hodges(0.0), &ExtractionConfig::canonical()).unwrap();
        let text = serde_json::to_string(&trace).unwrap();
        let back: ExtractionTrace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, trace);
        let again = extract_parameter(&model(), &EstimatorSpec::hodges(0.0), &ExtractionConfig::canonical()).unwrap();
        assert_eq!(serde_json::to_string(&again).unwrap(), text);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn chosen_n_is_certified(num in 1i64..10_000, c_num in 1i64..8, eps_k in 1u32..6) {
            let cfg = ExtractionConfig { c: rat(c_num), epsilon: dyadic(eps_k), ..ExtractionConfig::canonical() };
            let width = r(num, 10_000);
            match choose_n(&rat(0), &width, &cfg) {
                Ok(n) => {
                    prop_assert!(certify_sample_size(&rat(0), &width, n, &cfg));
                    if n > 1 {
                        prop_assert!(!certify_sample_size(&rat(0), &width, n - 1, &cfg));
                    }
                }
                Err(Error::Width { .. }) => {
                    let (lo, hi) = cfg.n_range(&width);
                    prop_assert!(ceil_to_u64(&lo).unwrap() > floor_to_u64(&hi).unwrap());
                }
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn pivot_is_retained(pivot_milli in -40i64..=40) {
            let pivot = pivot_milli as f64 / 1000.0;
            let cfg = ExtractionConfig { tolerance: 1e-2, ..ExtractionConfig::canonical() };
            let trace = extract_parameter(&model(), &EstimatorSpec::hodges(pivot), &cfg).unwrap();
            prop_assert!(trace.converged());
            let p = crate::rational::from_f64(pivot).unwrap();
            for it in &trace.iterations {
                let after = it.interval_after.as_ref().unwrap();
                prop_assert!(after.lower <= &p + &it.scan.grid_step && &p - &it.scan.grid_step <= after.upper);
                prop_assert!(after.width() * (Rational::one() + &cfg.epsilon) <= it.interval_before.width());
            }
            prop_assert!((trace.theta_hat().unwrap() - pivot).abs() <= 1e-2);
        }
    }
}
