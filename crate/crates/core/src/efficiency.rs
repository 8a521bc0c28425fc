//! Finite-grid approximation of the asymptotic efficiency
//!
//! ```text
//! ae_θ(T) = liminf_{c→∞} liminf_{n→∞} −ln P_{n,θ}(|T_n − θ| > c n^{-1/2}) / (c² I(θ)/2)
//! ```
//!
//! with −ln 0 = +∞. Each double liminf is replaced by a minimum over the upper
//! half of a finite grid; the full matrix of inner values is always returned
//! so the reduction can be audited. Probabilities are handled in log space
//! throughout.

use crate::error::{Error, Result};
use crate::estimators::{concentration_log_probability, ConcentrationQuery, EstimatorSpec};
use crate::models::GaussianLocationModel;
use crate::normal::normal_cdf;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyEstimate {
    pub estimator: EstimatorSpec,
    pub theta: f64,
    pub c_grid: Vec<f64>,
    pub n_grid: Vec<u64>,
    /// `log_probabilities[i][j]` = ln P at (c_grid[i], n_grid[j]).
    #[serde(with = "crate::extended::matrix")]
    pub log_probabilities: Vec<Vec<f64>>,
    /// `inner_values[i][j]` = −ln P / (c² I(θ)/2); +∞ when P = 0.
    #[serde(with = "crate::extended::matrix")]
    pub inner_values: Vec<Vec<f64>>,
    #[serde(with = "crate::extended::scalar")]
    pub ae_approx: f64,
}

/// Index of the first element of the upper half (the last ⌈len/2⌉ entries).
fn upper_half_start(len: usize) -> usize {
    len / 2
}

/// The tail-half liminf surrogate applied to an inner-value matrix.
pub fn reduce_inner_values(inner_values: &[Vec<f64>]) -> f64 {
    let rows = &inner_values[upper_half_start(inner_values.len())..];
    rows.iter()
        .map(|row| row[upper_half_start(row.len())..].iter().copied().fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min)
}

fn validate_grids(c_grid: &[f64], n_grid: &[u64]) -> Result<()> {
    if c_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::domain("efficiency grids must be nonempty"));
    }
    if c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::domain("c values must be positive and finite"));
    }
    if n_grid.contains(&0) {
        return Err(Error::domain("n values must be positive"));
    }
    if c_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("efficiency grids must be strictly ascending"));
    }
    Ok(())
}

pub fn ae_estimate(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    theta: f64,
    c_grid: &[f64],
    n_grid: &[u64],
) -> Result<EfficiencyEstimate> {
    validate_grids(c_grid, n_grid)?;
    model.check_parameter(theta)?;
    spec.validate(model)?;
    let info = model.fisher_information(theta);

    let log_probabilities = c_grid
        .par_iter()
        .map(|&c| {
            n_grid
                .iter()
                .map(|&n| concentration_log_probability(model, spec, &ConcentrationQuery::scaled(theta, n, c)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let inner_values: Vec<Vec<f64>> = c_grid
        .iter()
        .zip(&log_probabilities)
        .map(|(&c, row)| {
            let scale = c * c * info / 2.0;
            row.iter()
                .map(|&lp| if lp == f64::NEG_INFINITY { f64::INFINITY } else { (-lp).max(0.0) / scale })
                .collect()
        })
        .collect();
    let ae_approx = reduce_inner_values(&inner_values);

    Ok(EfficiencyEstimate {
        estimator: spec.clone(),
        theta,
        c_grid: c_grid.to_vec(),
        n_grid: n_grid.to_vec(),
        log_probabilities,
        inner_values,
        ae_approx,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub theta: f64,
    #[serde(with = "crate::extended::scalar")]
    pub mle: f64,
    /// Constant estimator at this θ.
    #[serde(with = "crate::extended::scalar")]
    pub constant: f64,
    /// Hodges estimator pivoted at the first θ of the list.
    #[serde(with = "crate::extended::scalar")]
    pub hodges: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub hodges_pivot: f64,
    pub c_grid: Vec<f64>,
    pub n_grid: Vec<u64>,
    pub rows: Vec<DichotomyRow>,
}

impl DichotomyReport {
    /// Plain-text table.
    pub fn render_table(&self) -> String {
        use crate::extended::format_extended as fx;
        let mut out = format!("{:>12} {:>14} {:>14} {:>14}\n", "theta", "mle", "constant", "hodges");
        for r in &self.rows {
            out.push_str(&format!(
                "{:>12} {:>14} {:>14} {:>14}\n",
                r.theta,
                fx(round6(r.mle)),
                fx(round6(r.constant)),
                fx(round6(r.hodges))
            ));
        }
        out
    }
}

fn round6(x: f64) -> f64 {
    if x.is_finite() {
        (x * 1e6).round() / 1e6
    } else {
        x
    }
}

/// ae for the MLE, the constant estimator at each θ and a Hodges estimator
/// pivoted at the first θ: the all-or-nothing picture.
pub fn corollary3_demo(
    model: &GaussianLocationModel,
    theta_list: &[f64],
    c_grid: &[f64],
    n_grid: &[u64],
) -> Result<DichotomyReport> {
    let pivot = *theta_list.first().ok_or_else(|| Error::domain("theta list must be nonempty"))?;
    let hodges = EstimatorSpec::hodges(pivot);
    let rows = theta_list
        .iter()
        .map(|&theta| {
            Ok(DichotomyRow {
                theta,
                mle: ae_estimate(model, &EstimatorSpec::Mle, theta, c_grid, n_grid)?.ae_approx,
                constant: ae_estimate(model, &EstimatorSpec::constant(theta), theta, c_grid, n_grid)?.ae_approx,
                hodges: ae_estimate(model, &hodges, theta, c_grid, n_grid)?.ae_approx,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DichotomyReport { hodges_pivot: pivot, c_grid: c_grid.to_vec(), n_grid: n_grid.to_vec(), rows })
}

/// Finite-scale form of the lower bound lim sup_n P_{n,θ}(|T_n − θ| > c n^{-1/2}) ≥ Φ(−c√I(θ)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    pub theta: f64,
    pub c: f64,
    pub max_tail_probability: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn concentration_lower_bound_check(
    model: &GaussianLocationModel,
    spec: &EstimatorSpec,
    theta: f64,
    c: f64,
    n_tail: &[u64],
) -> Result<LowerBoundCheck> {
    if n_tail.is_empty() {
        return Err(Error::domain("n tail must be nonempty"));
    }
    let max_tail_probability = n_tail
        .iter()
        .map(|&n| {
            crate::estimators::concentration_exact(model, spec, &ConcentrationQuery::scaled(theta, n, c))
                .map(|r| r.probability)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let bound = normal_cdf(-c * model.fisher_information(theta).sqrt());
    Ok(LowerBoundCheck { theta, c, max_tail_probability, bound, holds: max_tail_probability >= bound - 1e-10 })
}
