//! Statistical models and distances between their measures.
//!
//! All Gaussian computations go through the sample mean, which is sufficient
//! for the location model: under P_{n,θ} it is N(θ, σ²/n). Nothing here
//! integrates over the n-dimensional sample space.

mod assumptions;
mod discrete;
mod gaussian;
mod lan;

pub use assumptions::{
    check_assumption_1, check_assumption_2, check_assumption_4, Assumption, AssumptionEntry,
    AssumptionReport, EntryStatus, GridPoint, SLACK_PASS_TOLERANCE,
};
pub use discrete::{
    affinity_bruteforce_discrete, affinity_lower_bound_from_tv, affinity_neyman_pearson_discrete,
    affinity_randomized_discrete, variation_distance_bruteforce_discrete,
    variation_distance_discrete, AffinityResult, DiscreteModelPair, MAX_ENUMERATED_OUTCOMES,
};
pub use gaussian::{
    affinity_exact_gaussian, affinity_halfspace_gaussian, affinity_quadrature_gaussian,
    likelihood_ratio_exceedance, variation_distance_exact_gaussian,
    variation_distance_halfspace_gaussian, variation_distance_quadrature_gaussian,
    GaussianLocationModel, ParameterDomain,
};
pub use lan::{check_lan_decomposition, kolmogorov_smirnov, LanReport};
