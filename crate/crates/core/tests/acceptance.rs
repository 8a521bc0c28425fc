//! Acceptance gate: one line per criterion, nonzero exit on any failure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superefficiency::efficiency::ae_estimate;
use superefficiency::estimators::{concentration_exact, concentration_mc, mle_bound_check};
use superefficiency::extraction::{
    certify_sample_size, choose_n, countability_gap_check, extract_parameter, is_suitable, ExtractionConfig,
    ExtractionOutcome,
};
use superefficiency::models::{
    affinity_bruteforce_discrete, affinity_exact_gaussian, affinity_lower_bound_from_tv,
    affinity_neyman_pearson_discrete, check_lan_decomposition, likelihood_ratio_exceedance,
    variation_distance_bruteforce_discrete, variation_distance_discrete, variation_distance_exact_gaussian,
};
use superefficiency::rational::Rational;
use superefficiency::{normal_cdf, ConcentrationQuery, DiscreteModelPair, Error, EstimatorSpec, GaussianLocationModel};

struct Gate {
    failures: usize,
}

impl Gate {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        println!("[{}] {id:>2}. {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

const SIGMAS: [f64; 3] = [0.5, 1.0, 2.0];
const THETAS: [f64; 5] = [-1.0, -0.3, 0.0, 0.25, 0.8];
const NS: [u64; 4] = [1, 10, 100, 1000];

fn gaussian_grid() -> impl Iterator<Item = (GaussianLocationModel, f64, f64, u64)> {
    SIGMAS.into_iter().flat_map(|s| {
        let m = GaussianLocationModel::with_sigma(s).unwrap();
        THETAS.into_iter().flat_map(move |t1| {
            THETAS.into_iter().flat_map(move |t2| NS.into_iter().map(move |n| (m, t1, t2, n)))
        })
    })
}

fn random_pairs(count: usize, seed: u64) -> Vec<DiscreteModelPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.random_range(1..=12);
            let draw = |rng: &mut ChaCha8Rng| {
                let w: Vec<f64> = (0..k)
                    .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random::<f64>() })
                    .collect();
                let total: f64 = w.iter().sum();
                if total == 0.0 {
                    let mut e = vec![0.0; k];
                    e[0] = 1.0;
                    e
                } else {
                    w.iter().map(|x| x / total).collect()
                }
            };
            let p = draw(&mut rng);
            let q = draw(&mut rng);
            DiscreteModelPair::new(p, q).unwrap()
        })
        .collect()
}

fn criterion_1(gate: &mut Gate) {
    let (mut err_rhs, mut err_lr, mut cases) = (0.0f64, 0.0f64, 0);
    for (m, t1, t2, n) in gaussian_grid() {
        let pi = affinity_exact_gaussian(&m, t1, t2, n).unwrap();
        let rhs = normal_cdf(-(t2 - t1).abs() * (n as f64 * m.fisher_information(t1)).sqrt() / 2.0);
        err_rhs = err_rhs.max((pi - rhs).abs());
        // On the diagonal the likelihood ratio is identically one and the event is empty.
        if t1 != t2 {
            err_lr = err_lr.max((likelihood_ratio_exceedance(&m, t1, t2, n).unwrap() - pi).abs());
        }
        cases += 1;
    }
    gate.record(
        1,
        "Gaussian affinity equality",
        err_rhs <= 1e-10 && err_lr <= 1e-10,
        format!("{cases} cases, max |pi - rhs| = {err_rhs:.2e}, max |lr - pi| = {err_lr:.2e} (tol 1e-10)"),
    );
}

fn criterion_2(gate: &mut Gate) {
    let (mut err_pi, mut err_tv) = (0.0f64, 0.0f64);
    let pairs = random_pairs(200, 2);
    for pair in &pairs {
        let sweep = affinity_neyman_pearson_discrete(pair).value;
        let brute = affinity_bruteforce_discrete(pair).unwrap().value;
        err_pi = err_pi.max((sweep - brute).abs());
        let tv = variation_distance_discrete(pair);
        err_tv = err_tv.max((tv - variation_distance_bruteforce_discrete(pair).unwrap()).abs());
    }
    gate.record(
        2,
        "Discrete oracle equivalence",
        err_pi <= 1e-12 && err_tv <= 1e-12,
        format!("{} pairs, max affinity err = {err_pi:.2e}, max tv err = {err_tv:.2e} (tol 1e-12)", pairs.len()),
    );
}

fn criterion_3(gate: &mut Gate) {
    let mut worst_discrete = f64::INFINITY;
    for pair in random_pairs(200, 3) {
        let pi = affinity_bruteforce_discrete(&pair).unwrap().value;
        let bound = affinity_lower_bound_from_tv(variation_distance_discrete(&pair)).unwrap();
        worst_discrete = worst_discrete.min(pi - bound);
    }
    let mut gap = 0.0f64;
    for (m, t1, t2, n) in gaussian_grid() {
        let pi = affinity_exact_gaussian(&m, t1, t2, n).unwrap();
        let tv = variation_distance_exact_gaussian(&m, t1, t2, n).unwrap();
        gap = gap.max((pi - affinity_lower_bound_from_tv(tv).unwrap()).abs());
    }
    gate.record(
        3,
        "Affinity lower bound from variation distance",
        worst_discrete >= -1e-12 && gap <= 1e-10,
        format!("min discrete margin = {worst_discrete:.2e}, max Gaussian gap = {gap:.2e} (tol 1e-10)"),
    );
}

fn criterion_4(gate: &mut Gate) {
    let (mut residual, mut min_p, mut ok) = (0.0f64, 1.0f64, true);
    let m = GaussianLocationModel::standard();
    for (i, lambda) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        for (j, n) in [25u64, 100].into_iter().enumerate() {
            let r = check_lan_decomposition(&m, 0.0, lambda, n, 10_000, (10 * i + j) as u64).unwrap();
            residual = residual.max(r.max_abs_residual);
            min_p = min_p.min(r.ks_p_value);
            ok &= r.residual_within(1e-10) && r.ks_passes(0.01);
        }
    }
    gate.record(
        4,
        "LAN exactness",
        ok,
        format!("max |psi| = {residual:.2e} (tol 1e-10), min KS p-value = {min_p:.4} (level 0.01)"),
    );
}

fn criterion_5(gate: &mut Gate) {
    let m = GaussianLocationModel::standard();
    let specs = [EstimatorSpec::Mle, EstimatorSpec::hodges(0.0), EstimatorSpec::constant(0.0)];
    let (mut worst, mut configs, mut ok) = (0.0f64, 0, true);
    for spec in &specs {
        for theta in [0.0, 0.1, 0.5] {
            for n in [10u64, 100, 1000] {
                for c in [0.5, 1.0, 2.0] {
                    let q = ConcentrationQuery::scaled(theta, n, c);
                    let exact = concentration_exact(&m, spec, &q).unwrap().probability;
                    let mc = concentration_mc(&m, spec, &q, 1_000_000, configs).unwrap();
                    let dev = (exact - mc.probability).abs();
                    ok &= dev <= 3.5 * mc.std_error + 1e-6;
                    if mc.std_error > 0.0 {
                        worst = worst.max(dev / mc.std_error);
                    }
                    configs += 1;
                }
            }
        }
    }
    gate.record(
        5,
        "Exact vs Monte Carlo concentration",
        ok,
        format!("{configs} configurations x 1e6 draws, max |dev|/se = {worst:.3} (tol 3.5 se + 1e-6)"),
    );
}

fn criterion_6(gate: &mut Gate) {
    let (mut spread, mut dev, mut ok) = (0.0f64, 0.0f64, true);
    for sigma in SIGMAS {
        let m = GaussianLocationModel::with_sigma(sigma).unwrap();
        for c in [0.5, 1.0, 2.0] {
            let r = mle_bound_check(&m, c, &[10, 100, 10_000, 1_000_000], 0.3).unwrap();
            spread = spread.max(r.spread);
            dev = dev.max(r.max_deviation);
            ok &= r.spread <= 1e-12 && r.equality_holds(1e-12) && r.lower_bound_holds();
        }
    }
    gate.record(
        6,
        "MLE concentration is 2 Phi(-c/sigma) for every n",
        ok,
        format!("max spread over n = {spread:.2e}, max |p - 2 Phi(-c/sigma)| = {dev:.2e} (tol 1e-12)"),
    );
}

fn criterion_7(gate: &mut Gate) {
    let m = GaussianLocationModel::standard();
    let hodges = ae_estimate(&m, &EstimatorSpec::hodges(0.0), 0.0, &[1.0], &[1_000_000]).unwrap();
    let inner = hodges.inner_values[0][0];
    let c_grid = [1.0, 2.0, 4.0, 6.0, 8.0, 10.0];
    let n_grid = [100, 1_000, 10_000, 100_000, 1_000_000];
    let mle = ae_estimate(&m, &EstimatorSpec::Mle, 0.0, &c_grid, &n_grid).unwrap().ae_approx;
    let constant = ae_estimate(&m, &EstimatorSpec::constant(0.0), 0.0, &c_grid, &n_grid).unwrap().ae_approx;
    gate.record(
        7,
        "Superefficiency signature",
        inner > 100.0 && (1.0..=1.06).contains(&mle) && constant == f64::INFINITY,
        format!("Hodges inner value at (c=1, n=1e6) = {inner:.4}, MLE ae = {mle:.6}, constant ae = {constant}"),
    );
}

fn criterion_8(gate: &mut Gate) {
    let m = GaussianLocationModel::standard();
    let cfg = ExtractionConfig::canonical();
    let trace = extract_parameter(&m, &EstimatorSpec::hodges(0.0), &cfg).unwrap();
    let certified = trace.iterations.iter().all(|it| {
        it.n_certified && it.certificate.as_ref().is_some_and(|c| c.width_ok && c.diameter_ok)
    });
    let theta_hat = trace.theta_hat();
    let hodges_ok = theta_hat.is_some_and(|t| t.abs() <= 1e-3) && trace.iterations.len() <= 30 && certified;
    let mle = extract_parameter(&m, &EstimatorSpec::Mle, &cfg).unwrap();
    let mle_ok = mle.outcome == ExtractionOutcome::NoSuperefficientPoint { at_iteration: 1 };
    gate.record(
        8,
        "Extraction of the superefficiency point",
        hodges_ok && mle_ok,
        format!(
            "Hodges: {} iterations, theta_hat = {:?}, certificates {}; MLE: {:?}",
            trace.iterations.len(),
            theta_hat,
            if certified { "all ok" } else { "FAILED" },
            mle.outcome
        ),
    );
}

fn criterion_9(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let base = ExtractionConfig::canonical();
    let configs: Vec<ExtractionConfig> = [(1, 1, 1, 10), (1, 2, 1, 16), (2, 1, 1, 10), (3, 2, 1, 8)]
        .into_iter()
        .map(|(cn, cd, en, ed)| ExtractionConfig {
            c: Rational::new(cn.into(), cd.into()),
            epsilon: Rational::new(en.into(), ed.into()),
            ..base.clone()
        })
        .collect();
    let (mut admissible, mut certified) = (0, 0);
    while admissible < 1000 {
        let cfg = &configs[rng.random_range(0..configs.len())];
        let width = Rational::new(rng.random_range(1i64..=3_000_000).into(), 1_000_000.into());
        if !cfg.width_admissible(&width) {
            continue;
        }
        admissible += 1;
        let zero = Rational::from_integer(0.into());
        if choose_n(&zero, &width, cfg).is_ok_and(|n| certify_sample_size(&zero, &width, n, cfg)) {
            certified += 1;
        }
    }
    let mut width_errors = 0;
    for _ in 0..200 {
        let cfg = &configs[rng.random_range(0..configs.len())];
        // Above 2(1+eps)^3 c even n = 1 is too large.
        let eps = superefficiency::rational::to_f64(&cfg.epsilon);
        let limit = 2.0 * superefficiency::rational::to_f64(&cfg.c) * (1.0 + eps).powi(3) * 1.0001;
        let w = limit + rng.random::<f64>() * 100.0;
        let width = superefficiency::rational::from_f64(w).unwrap();
        let zero = Rational::from_integer(0.into());
        if matches!(choose_n(&zero, &width, cfg), Err(Error::Width { .. })) {
            width_errors += 1;
        }
    }
    gate.record(
        9,
        "Sample-size certification",
        certified == 1000 && width_errors == 200,
        format!("{certified}/1000 admissible widths certified exactly, {width_errors}/200 oversized widths rejected"),
    );
}

fn criterion_10(gate: &mut Gate) {
    let m = GaussianLocationModel::standard();
    let cfg = ExtractionConfig::canonical();
    let hodges = countability_gap_check(&m, &EstimatorSpec::hodges(0.0), &cfg, 100_000).unwrap();
    let mle = countability_gap_check(&m, &EstimatorSpec::Mle, &cfg, 100_000).unwrap();
    let close = countability_gap_check(&m, &EstimatorSpec::PiecewiseHodges { pivots: vec![0.0, 0.04] }, &cfg, 100_000)
        .unwrap();
    let far_spec = EstimatorSpec::PiecewiseHodges { pivots: vec![-0.045, 0.045] };
    let n = hodges.n_chosen;
    let r = |v: i64| Rational::new(v.into(), 1000.into());
    let both = is_suitable(&m, &far_spec, &r(-45), n, &cfg).unwrap().suitable
        && is_suitable(&m, &far_spec, &r(45), n, &cfg).unwrap().suitable;
    let ok = hodges.holds
        && hodges.loci == 1
        && mle.holds
        && mle.persistent.is_empty()
        && close.holds
        && close.loci == 1
        && !both;
    gate.record(
        10,
        "Single persistent locus at the interval scale",
        ok,
        format!(
            "Hodges: {} locus, diameter {:.4e} <= {:.4e}; MLE: {} persistent points; pivots 0/0.04: {} locus; pivots -0.045/0.045 both suitable at n={n}: {both}",
            hodges.loci,
            hodges.diameter,
            hodges.diameter_bound,
            mle.persistent.len(),
            close.loci
        ),
    );
}

fn main() {
    let mut gate = Gate { failures: 0 };
    criterion_1(&mut gate);
    criterion_2(&mut gate);
    criterion_3(&mut gate);
    criterion_4(&mut gate);
    criterion_5(&mut gate);
    criterion_6(&mut gate);
    criterion_7(&mut gate);
    criterion_8(&mut gate);
    criterion_9(&mut gate);
    criterion_10(&mut gate);
    if gate.failures > 0 {
        println!("{} criteria failed", gate.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
