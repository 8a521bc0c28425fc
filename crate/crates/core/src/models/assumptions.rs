//! Grid checkers for the affinity, likelihood-ratio and variation-distance
//! regularity conditions.
//!
//! Each entry reports the signed slack of the inequality (positive means the
//! condition holds with room to spare). The model side is evaluated through
//! the likelihood-ratio half-space of the sample mean; the reference side
//! uses the Fisher information at the centre θ.

use super::gaussian::{
    likelihood_ratio_exceedance, variation_distance_halfspace_gaussian, affinity_halfspace_gaussian,
    GaussianLocationModel,
};
use crate::error::{Error, Result};
use crate::normal::normal_cdf;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// An entry passes when its slack is at least `-SLACK_PASS_TOLERANCE`.
pub const SLACK_PASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assumption {
    /// π(P_{n,θ1}, P_{n,θ2}) ≥ Φ(−|θ2−θ1|√(nI(θ))/2) − ε
    Affinity,
    /// P_{n,θ1}(f_{n,θ2}/f_{n,θ1} > 1) ≥ Φ(−|θ2−θ1|√(nI(θ))/2) − ε, θ1 ≠ θ2
    LikelihoodRatio,
    /// ‖P_{n,θ1} − P_{n,θ2}‖ ≤ 1 − 2Φ(−|θ2−θ1|√(nI(θ))/2) + ε
    VariationDistance,
}

impl Assumption {
    pub fn label(&self) -> &'static str {
        match self {
            Assumption::Affinity => "assumption-1",
            Assumption::LikelihoodRatio => "assumption-2",
            Assumption::VariationDistance => "assumption-4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub theta1: f64,
    pub theta2: f64,
    pub n: u64,
}

impl GridPoint {
    pub fn new(theta1: f64, theta2: f64, n: u64) -> Self {
        Self { theta1, theta2, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryStatus {
    Pass,
    Fail,
    /// The inequality is not defined for this grid point (θ1 = θ2 for the
    /// likelihood-ratio condition).
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionEntry {
    pub point: GridPoint,
    pub model_side: f64,
    pub reference_side: f64,
    pub slack: f64,
    pub status: EntryStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub assumption: Assumption,
    pub theta: f64,
    pub epsilon: f64,
    pub fisher_information: f64,
    pub entries: Vec<AssumptionEntry>,
}

impl AssumptionReport {
    /// True when no entry failed (rejected entries do not count as failures).
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.status != EntryStatus::Fail)
    }

    /// Largest |slack| over evaluated entries.
    pub fn max_abs_slack(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.status != EntryStatus::Rejected)
            .map(|e| e.slack.abs())
            .fold(0.0, f64::max)
    }
}

fn reference_affinity(info: f64, point: &GridPoint) -> f64 {
    normal_cdf(-(point.theta2 - point.theta1).abs() * (point.n as f64 * info).sqrt() / 2.0)
}

fn validate(model: &GaussianLocationModel, theta: f64, grid: &[GridPoint], epsilon: f64) -> Result<()> {
    model.check_parameter(theta)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be a finite nonnegative number, got {epsilon}")));
    }
    for point in grid {
        model.check_parameter(point.theta1)?;
        model.check_parameter(point.theta2)?;
        if point.n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
    }
    Ok(())
}

fn status(slack: f64) -> EntryStatus {
    if slack >= -SLACK_PASS_TOLERANCE {
        EntryStatus::Pass
    } else {
        EntryStatus::Fail
    }
}

fn run(
    assumption: Assumption,
    model: &GaussianLocationModel,
    theta: f64,
    grid: &[GridPoint],
    epsilon: f64,
    entry: impl Fn(&GridPoint, f64) -> Result<AssumptionEntry> + Sync,
) -> Result<AssumptionReport> {
    validate(model, theta, grid, epsilon)?;
    let info = model.fisher_information(theta);
    let entries = grid.par_iter().map(|p| entry(p, info)).collect::<Result<Vec<_>>>()?;
    Ok(AssumptionReport { assumption, theta, epsilon, fisher_information: info, entries })
}

/// Affinity condition; slack = π − [Φ(·) − ε].
pub fn check_assumption_1(
    model: &GaussianLocationModel,
    theta: f64,
    grid: &[GridPoint],
    epsilon: f64,
) -> Result<AssumptionReport> {
    run(Assumption::Affinity, model, theta, grid, epsilon, |point, info| {
        let model_side = affinity_halfspace_gaussian(model, point.theta1, point.theta2, point.n)?;
        let reference_side = reference_affinity(info, point) - epsilon;
        let slack = model_side - reference_side;
        Ok(AssumptionEntry { point: *point, model_side, reference_side, slack, status: status(slack) })
    })
}

/// Likelihood-ratio condition; slack = P(f2/f1 > 1) − [Φ(·) − ε].
pub fn check_assumption_2(
    model: &GaussianLocationModel,
    theta: f64,
    grid: &[GridPoint],
    epsilon: f64,
) -> Result<AssumptionReport> {
    run(Assumption::LikelihoodRatio, model, theta, grid, epsilon, |point, info| {
        let reference_side = reference_affinity(info, point) - epsilon;
        if point.theta1 == point.theta2 {
            return Ok(AssumptionEntry {
                point: *point,
                model_side: 0.0,
                reference_side,
                slack: 0.0,
                status: EntryStatus::Rejected,
            });
        }
        let model_side = likelihood_ratio_exceedance(model, point.theta1, point.theta2, point.n)?;
        let slack = model_side - reference_side;
        Ok(AssumptionEntry { point: *point, model_side, reference_side, slack, status: status(slack) })
    })
}

/// Variation-distance condition; slack = [1 − 2Φ(·) + ε] − ‖P1 − P2‖.
pub fn check_assumption_4(
    model: &GaussianLocationModel,
    theta: f64,
    grid: &[GridPoint],
    epsilon: f64,
) -> Result<AssumptionReport> {
    run(Assumption::VariationDistance, model, theta, grid, epsilon, |point, info| {
        let model_side = variation_distance_halfspace_gaussian(model, point.theta1, point.theta2, point.n)?;
        let reference_side = 1.0 - 2.0 * reference_affinity(info, point) + epsilon;
        let slack = reference_side - model_side;
        Ok(AssumptionEntry { point: *point, model_side, reference_side, slack, status: status(slack) })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ParameterDomain;
    use proptest::prelude::*;

    fn model(sigma: f64) -> GaussianLocationModel {
        GaussianLocationModel::with_sigma(sigma).unwrap()
    }

    #[test]
    fn affinity_condition_examples() {
        let r = check_assumption_1(&model(1.0), 0.0, &[GridPoint::new(0.0, 0.5, 16)], 0.0).unwrap();
        assert!(r.entries[0].slack.abs() <= 1e-12);
        assert!((r.entries[0].model_side - 0.158_655_253_931_457_05).abs() < 1e-14);
        let r = check_assumption_1(&model(1.0), 0.0, &[GridPoint::new(0.0, 0.0, 9)], 0.0).unwrap();
        assert_eq!(r.entries[0].model_side, 0.5);
        assert_eq!(r.entries[0].reference_side, 0.5);
        let r = check_assumption_1(&model(2.0), 0.0, &[GridPoint::new(-0.1, 0.1, 400)], 0.0).unwrap();
        assert!(r.entries[0].slack.abs() <= 1e-12);
        assert!(r.all_pass());
    }

    #[test]
    fn likelihood_ratio_condition_examples() {
        let grid = [GridPoint::new(0.0, 1.0, 4), GridPoint::new(0.0, -1.0, 4), GridPoint::new(0.2, 0.2, 4)];
        let r = check_assumption_2(&model(1.0), 0.0, &grid, 0.0).unwrap();
        assert!(r.entries[0].slack.abs() <= 1e-12);
        assert!(r.entries[1].slack.abs() <= 1e-12);
        assert_eq!(r.entries[2].status, EntryStatus::Rejected);
        assert!(r.all_pass());
        let r = check_assumption_2(&model(3.0), 0.0, &[GridPoint::new(0.0, 0.3, 900)], 0.0).unwrap();
        assert!((r.entries[0].model_side - 0.066_807_201_268_858_06).abs() < 1e-12);
        assert!(r.entries[0].slack.abs() <= 1e-12);
    }

    #[test]
    fn variation_condition_examples() {
        let grid = [GridPoint::new(0.0, 1.0, 4), GridPoint::new(0.4, 0.4, 10), GridPoint::new(0.0, 0.25, 64)];
        let r = check_assumption_4(&model(1.0), 0.0, &grid, 0.0).unwrap();
        for e in &r.entries {
            assert!(e.slack.abs() <= 1e-12);
            assert_eq!(e.status, EntryStatus::Pass);
        }
        let r = check_assumption_4(&model(1.0), 0.0, &grid[1..2], 0.05).unwrap();
        assert!((r.entries[0].slack - 0.05).abs() < 1e-15);
    }

    #[test]
    fn epsilon_shifts_slack_and_must_be_nonnegative() {
        let grid = [GridPoint::new(0.0, 1.0, 4)];
        let a1 = check_assumption_1(&model(2.0), 0.0, &grid, 0.03).unwrap();
        assert!((a1.entries[0].slack - 0.03).abs() < 1e-14);
        let a4 = check_assumption_4(&model(2.0), 0.0, &grid, 0.03).unwrap();
        assert!((a4.entries[0].slack - 0.03).abs() < 1e-14);
        assert!(check_assumption_4(&model(2.0), 0.0, &grid, -0.1).is_err());
    }

    #[test]
    fn outside_domain_is_an_error() {
        let bounded = GaussianLocationModel::new(1.0, ParameterDomain::new(0.0, 1.0).unwrap()).unwrap();
        assert!(check_assumption_1(&bounded, 0.5, &[GridPoint::new(0.5, 1.5, 4)], 0.0).is_err());
        assert!(check_assumption_1(&bounded, 2.0, &[], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn gaussian_slack_vanishes(
            sigma in 0.2f64..5.0,
            theta in -3.0f64..3.0,
            t1 in -3.0f64..3.0,
            t2 in -3.0f64..3.0,
            n in 1u64..100_000,
        ) {
            let m = model(sigma);
            let grid = [GridPoint::new(t1, t2, n)];
            for report in [
                check_assumption_1(&m, theta, &grid, 0.0).unwrap(),
                check_assumption_2(&m, theta, &grid, 0.0).unwrap(),
                check_assumption_4(&m, theta, &grid, 0.0).unwrap(),
            ] {
                prop_assert!(report.all_pass());
                prop_assert!(report.max_abs_slack() <= 1e-10);
            }
        }
    }
}
