use crate::config::Settings;
use crate::error::CliError;
use crate::output::{num, Artifact, Table};
use serde::Serialize;
use serde_json::json;
use superefficiency::efficiency::{ae_estimate, corollary3_demo};
use superefficiency::estimators::{concentration_exact, concentration_mc_with, SamplingMode};
use superefficiency::extraction::{extract_parameter, ExtractionConfig, ExtractionOutcome, ExtractionTrace};
use superefficiency::models::{
    affinity_bruteforce_discrete, affinity_exact_gaussian, affinity_halfspace_gaussian,
    affinity_lower_bound_from_tv, affinity_neyman_pearson_discrete, affinity_quadrature_gaussian,
    affinity_randomized_discrete, check_assumption_1, check_assumption_2, check_assumption_4,
    check_lan_decomposition, likelihood_ratio_exceedance, variation_distance_bruteforce_discrete,
    variation_distance_discrete, variation_distance_exact_gaussian, variation_distance_halfspace_gaussian,
    variation_distance_quadrature_gaussian, DiscreteModelPair, GridPoint, MAX_ENUMERATED_OUTCOMES,
};
use superefficiency::rational::to_f64;
use superefficiency::{ConcentrationQuery, EstimatorSpec, GaussianLocationModel};

/// Runs `command`. The optional error is a computational failure whose
/// artifacts are still written before exiting with its code.
pub fn run(command: &str, s: &Settings) -> Result<(Artifact, Option<CliError>), CliError> {
    let plain = |a: Artifact| (a, None);
    match command {
        "affinity" => distances(s, Distance::Affinity).map(plain),
        "tv" => distances(s, Distance::Variation).map(plain),
        "concentration" => concentration(s).map(plain),
        "efficiency" => efficiency(s).map(plain),
        "extract" => extract(s),
        "check-assumptions" => check_assumptions(s),
        "demo" => demo(s),
        other => Err(CliError::config(None, format!("unknown command {other:?}"))),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Distance {
    Affinity,
    Variation,
}

#[derive(Serialize)]
struct DistanceRow {
    theta1: f64,
    theta2: f64,
    n: u64,
    closed_form: f64,
    halfspace: f64,
    quadrature: f64,
    /// Likelihood-ratio exceedance for affinity, (1 − tv)/2 for variation distance.
    companion: f64,
    max_abs_diff: f64,
}

#[derive(Serialize)]
struct DiscreteRow {
    outcomes: usize,
    sweep: f64,
    bruteforce: Option<f64>,
    bound: f64,
}

fn pairs(s: &Settings) -> Result<Vec<(f64, f64, u64)>, CliError> {
    let (t1, t2, ns) = (s.nonempty_f64_list("theta1")?, s.nonempty_f64_list("theta2")?, s.nonempty_u64_list("n")?);
    let mut out = Vec::with_capacity(t1.len() * t2.len() * ns.len());
    for &a in &t1 {
        for &b in &t2 {
            out.extend(ns.iter().map(|&n| (a, b, n)));
        }
    }
    Ok(out)
}

fn distances(s: &Settings, which: Distance) -> Result<Artifact, CliError> {
    let model = s.model()?;
    let (name, header): (&'static str, &'static [&'static str]) = match which {
        Distance::Affinity => (
            "affinity",
            &["sigma", "theta1", "theta2", "n", "closed_form", "halfspace", "quadrature", "lr_exceedance", "max_abs_diff"],
        ),
        Distance::Variation => (
            "tv",
            &["sigma", "theta1", "theta2", "n", "closed_form", "halfspace", "quadrature", "affinity_bound", "max_abs_diff"],
        ),
    };
    let mut table = Table::new(name, header);
    let mut rows = Vec::new();
    for (theta1, theta2, n) in pairs(s)? {
        let (closed_form, halfspace, quadrature, companion) = match which {
            Distance::Affinity => (
                affinity_exact_gaussian(&model, theta1, theta2, n)?,
                affinity_halfspace_gaussian(&model, theta1, theta2, n)?,
                affinity_quadrature_gaussian(&model, theta1, theta2, n)?,
                likelihood_ratio_exceedance(&model, theta1, theta2, n)?,
            ),
            Distance::Variation => {
                let tv = variation_distance_exact_gaussian(&model, theta1, theta2, n)?;
                (
                    tv,
                    variation_distance_halfspace_gaussian(&model, theta1, theta2, n)?,
                    variation_distance_quadrature_gaussian(&model, theta1, theta2, n)?,
                    affinity_lower_bound_from_tv(tv)?,
                )
            }
        };
        let max_abs_diff = (halfspace - closed_form).abs().max((quadrature - closed_form).abs());
        table.push(vec![
            num(model.sigma()),
            num(theta1),
            num(theta2),
            n.to_string(),
            num(closed_form),
            num(halfspace),
            num(quadrature),
            num(companion),
            num(max_abs_diff),
        ]);
        rows.push(DistanceRow { theta1, theta2, n, closed_form, halfspace, quadrature, companion, max_abs_diff });
    }

    let (p, q) = (s.f64_list("p")?, s.f64_list("q")?);
    let discrete = if p.is_empty() && q.is_empty() {
        None
    } else {
        let pair = DiscreteModelPair::new(p, q).map_err(|e| CliError::config(Some("p"), e.to_string()))?;
        let small = pair.outcomes() <= MAX_ENUMERATED_OUTCOMES;
        let row = match which {
            Distance::Affinity => DiscreteRow {
                outcomes: pair.outcomes(),
                sweep: affinity_neyman_pearson_discrete(&pair).value,
                bruteforce: small.then(|| affinity_bruteforce_discrete(&pair).map(|r| r.value)).transpose()?,
                bound: affinity_randomized_discrete(&pair),
            },
            Distance::Variation => {
                let tv = variation_distance_discrete(&pair);
                DiscreteRow {
                    outcomes: pair.outcomes(),
                    sweep: tv,
                    bruteforce: small.then(|| variation_distance_bruteforce_discrete(&pair)).transpose()?,
                    bound: affinity_lower_bound_from_tv(tv)?,
                }
            }
        };
        Some(row)
    };

    let rows_len = rows.len();
    let mut artifact = Artifact::new(if which == Distance::Affinity { "affinity" } else { "tv" }, json!({
        "gaussian": rows,
        "discrete": discrete,
    }));
    artifact.summary = format!("{} rows", rows_len);
    if let Some(row) = &discrete {
        let (dname, dheader): (&'static str, &'static [&'static str]) = match which {
            Distance::Affinity => {
                ("affinity_discrete", &["outcomes", "neyman_pearson", "bruteforce", "randomized_bound", "abs_diff"])
            }
            Distance::Variation => ("tv_discrete", &["outcomes", "sweep", "bruteforce", "affinity_bound", "abs_diff"]),
        };
        let mut dt = Table::new(dname, dheader);
        dt.push(vec![
            row.outcomes.to_string(),
            num(row.sweep),
            row.bruteforce.map(num).unwrap_or_default(),
            num(row.bound),
            row.bruteforce.map(|b| num((b - row.sweep).abs())).unwrap_or_default(),
        ]);
        artifact.tables.push(dt);
    }
    artifact.tables.insert(0, table);
    Ok(artifact)
}

#[derive(Serialize)]
struct ConcentrationRow {
    n: u64,
    theta: f64,
    c: f64,
    radius: f64,
    p_exact: f64,
    p_mc: f64,
    std_error: f64,
    z_score: f64,
    seed: u64,
}

fn z_score(exact: f64, mc: f64, se: f64) -> f64 {
    if se > 0.0 {
        (mc - exact) / se
    } else if mc == exact {
        0.0
    } else {
        f64::INFINITY.copysign(mc - exact)
    }
}

fn concentration(s: &Settings) -> Result<Artifact, CliError> {
    let model = s.model()?;
    let spec = s.estimator()?;
    spec.validate(&model).map_err(|e| CliError::config(Some("estimator"), e.to_string()))?;
    let samples = s.u64("samples")?;
    let seed = s.u64("seed")?;
    let mode = match s.string("sampling") {
        "sufficient-statistic" => SamplingMode::SufficientStatistic,
        "full-sample" => SamplingMode::FullSample,
        other => return Err(CliError::config(Some("sampling"), format!("unknown sampling mode {other:?}"))),
    };
    let (thetas, ns, cs) = (s.nonempty_f64_list("theta")?, s.nonempty_u64_list("n")?, s.nonempty_f64_list("c")?);
    let mut table = Table::new(
        "concentration",
        &["n", "theta", "c", "radius", "p_exact", "p_mc", "std_error", "z_score"],
    );
    let mut rows = Vec::new();
    for &theta in &thetas {
        for &n in &ns {
            for &c in &cs {
                let row_seed = seed.wrapping_add(rows.len() as u64);
                let query = ConcentrationQuery::scaled(theta, n, c);
                let exact = concentration_exact(&model, &spec, &query)?;
                let mc = concentration_mc_with(&model, &spec, &query, samples, row_seed, mode)?;
                let z = z_score(exact.probability, mc.probability, mc.std_error);
                table.push(vec![
                    n.to_string(),
                    num(theta),
                    num(c),
                    num(query.radius),
                    num(exact.probability),
                    num(mc.probability),
                    num(mc.std_error),
                    num(z),
                ]);
                rows.push(ConcentrationRow {
                    n,
                    theta,
                    c,
                    radius: query.radius,
                    p_exact: exact.probability,
                    p_mc: mc.probability,
                    std_error: mc.std_error,
                    z_score: z,
                    seed: row_seed,
                });
            }
        }
    }
    let worst = rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
    let summary = format!("{} rows, estimator {spec}, max |z| = {worst:.3}", rows.len());
    let mut artifact = Artifact::new("concentration", json!({ "estimator": spec, "rows": rows }));
    artifact.tables.push(table);
    artifact.summary = summary;
    Ok(artifact)
}

fn efficiency(s: &Settings) -> Result<Artifact, CliError> {
    let model = s.model()?;
    let spec = s.estimator()?;
    let theta = s.f64("theta")?;
    let est = ae_estimate(&model, &spec, theta, &s.nonempty_f64_list("c_grid")?, &s.nonempty_u64_list("n_grid")?)?;
    let mut inner = Table::new("efficiency_inner", &["c", "n", "log_probability", "inner_value"]);
    for (i, c) in est.c_grid.iter().enumerate() {
        for (j, n) in est.n_grid.iter().enumerate() {
            inner.push(vec![num(*c), n.to_string(), num(est.log_probabilities[i][j]), num(est.inner_values[i][j])]);
        }
    }
    let mut summary = Table::new("efficiency_summary", &["estimator", "theta", "ae_approx"]);
    summary.push(vec![spec.to_string(), num(theta), num(est.ae_approx)]);
    let text = format!("ae_approx for {spec} at theta = {theta}: {}", num(est.ae_approx));
    let mut artifact = Artifact::new("efficiency", &est);
    artifact.tables.extend([inner, summary]);
    artifact.summary = text;
    Ok(artifact)
}

fn iteration_table(name: &'static str, trace: &ExtractionTrace) -> Table {
    let mut t = Table::new(
        name,
        &[
            "iteration",
            "lower",
            "upper",
            "width",
            "n",
            "n_certified",
            "resolution_ok",
            "suitable_points",
            "hull_lower",
            "hull_upper",
            "diameter",
            "after_lower",
            "after_upper",
            "width_ok",
            "diameter_ok",
        ],
    );
    for it in &trace.iterations {
        let hull = it.scan.suitable_hull.as_ref();
        let after = it.interval_after.as_ref();
        let cert = it.certificate.as_ref();
        t.push(vec![
            it.index.to_string(),
            num(to_f64(&it.interval_before.lower)),
            num(to_f64(&it.interval_before.upper)),
            num(to_f64(&it.interval_before.width())),
            it.n.to_string(),
            it.n_certified.to_string(),
            it.resolution_ok.to_string(),
            it.scan.suitable_points().count().to_string(),
            hull.map(|h| num(to_f64(&h.lower))).unwrap_or_default(),
            hull.map(|h| num(to_f64(&h.upper))).unwrap_or_default(),
            num(it.scan.diameter),
            after.map(|a| num(to_f64(&a.lower))).unwrap_or_default(),
            after.map(|a| num(to_f64(&a.upper))).unwrap_or_default(),
            cert.map(|c| c.width_ok.to_string()).unwrap_or_default(),
            cert.map(|c| c.diameter_ok.to_string()).unwrap_or_default(),
        ]);
    }
    t
}

fn outcome_line(trace: &ExtractionTrace) -> String {
    trace.render_text().lines().last().unwrap_or_default().to_string()
}

/// Error for failed outcomes; `None` when the run counts as a success.
fn outcome_error(trace: &ExtractionTrace, assert_exists: bool) -> Option<CliError> {
    match &trace.outcome {
        ExtractionOutcome::Converged { .. } | ExtractionOutcome::IterationLimit { .. } => None,
        ExtractionOutcome::NoSuperefficientPoint { .. } => {
            assert_exists.then(|| CliError::NoSuperefficientPoint(outcome_line(trace)))
        }
        ExtractionOutcome::AssumptionViolation { .. } => Some(CliError::AssumptionViolation(outcome_line(trace))),
        ExtractionOutcome::WidthError { .. } => Some(CliError::Width(outcome_line(trace))),
    }
}

fn extract(s: &Settings) -> Result<(Artifact, Option<CliError>), CliError> {
    let model = s.model()?;
    let spec = s.estimator()?;
    let config = s.extraction_config()?;
    let trace = extract_parameter(&model, &spec, &config)?;
    let error = outcome_error(&trace, s.bool("assert_exists")?);
    let mut artifact = Artifact::new("extract", &trace);
    artifact.tables.push(iteration_table("extract_iterations", &trace));
    artifact.texts.push(("extract_trace.txt".into(), trace.render_text()));
    artifact.summary = outcome_line(&trace);
    Ok((artifact, error))
}

fn check_assumptions(s: &Settings) -> Result<(Artifact, Option<CliError>), CliError> {
    let model = s.model()?;
    let theta = s.f64("theta")?;
    let epsilon = s.f64("epsilon")?;
    let grid: Vec<GridPoint> = pairs(s)?.into_iter().map(|(a, b, n)| GridPoint::new(a, b, n)).collect();
    let reports = [
        check_assumption_1(&model, theta, &grid, epsilon)?,
        check_assumption_2(&model, theta, &grid, epsilon)?,
        check_assumption_4(&model, theta, &grid, epsilon)?,
    ];
    let mut slack = Table::new(
        "assumptions",
        &["assumption", "theta1", "theta2", "n", "model_side", "reference_side", "slack", "status"],
    );
    for r in &reports {
        for e in &r.entries {
            let status = serde_json::to_value(e.status).expect("status").as_str().unwrap_or_default().to_string();
            slack.push(vec![
                r.assumption.label().to_string(),
                num(e.point.theta1),
                num(e.point.theta2),
                e.point.n.to_string(),
                num(e.model_side),
                num(e.reference_side),
                num(e.slack),
                status,
            ]);
        }
    }

    let seed = s.u64("seed")?;
    let samples = s.u64("lan_samples")?;
    let mut lan_reports = Vec::new();
    let mut lan = Table::new(
        "lan",
        &["lambda", "n", "samples", "seed", "max_abs_residual", "delta_mean", "delta_variance", "ks_distance", "ks_p_value"],
    );
    for &lambda in &s.f64_list("lan_lambda")? {
        for &n in &s.u64_list("lan_n")? {
            let row_seed = seed.wrapping_add(lan_reports.len() as u64);
            let r = check_lan_decomposition(&model, theta, lambda, n, samples, row_seed)?;
            lan.push(vec![
                num(lambda),
                n.to_string(),
                samples.to_string(),
                row_seed.to_string(),
                num(r.max_abs_residual),
                num(r.delta_mean),
                num(r.delta_variance),
                num(r.ks_distance),
                num(r.ks_p_value),
            ]);
            lan_reports.push(r);
        }
    }

    let max_slack = reports.iter().map(|r| r.max_abs_slack()).fold(0.0, f64::max);
    let max_residual = lan_reports.iter().map(|r| r.max_abs_residual).fold(0.0, f64::max);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.all_pass()).map(|r| r.assumption.label()).collect();
    let error = if !failed.is_empty() {
        Some(CliError::AssumptionViolation(format!("failing entries for {}", failed.join(", "))))
    } else if lan_reports.iter().any(|r| !r.residual_within(1e-10)) {
        Some(CliError::AssumptionViolation(format!("LAN residual {max_residual:.3e} exceeds 1e-10")))
    } else {
        None
    };
    let mut artifact = Artifact::new("check-assumptions", json!({ "assumptions": reports, "lan": lan_reports }));
    artifact.tables.extend([slack, lan]);
    artifact.summary = format!("max |slack| = {max_slack:.3e}, max LAN residual = {max_residual:.3e}");
    Ok((artifact, error))
}

fn demo(s: &Settings) -> Result<(Artifact, Option<CliError>), CliError> {
    let model = GaussianLocationModel::standard();
    let pivot = s.f64("pivot")?;
    let config = ExtractionConfig { tolerance: s.f64("tolerance")?, ..ExtractionConfig::canonical() };
    let hodges = extract_parameter(&model, &EstimatorSpec::hodges(pivot), &config)?;
    let mle = extract_parameter(&model, &EstimatorSpec::Mle, &config)?;
    let table = corollary3_demo(
        &model,
        &s.nonempty_f64_list("theta_list")?,
        &s.nonempty_f64_list("c_grid")?,
        &s.nonempty_u64_list("n_grid")?,
    )?;

    let mut dichotomy = Table::new("demo_dichotomy", &["theta", "mle", "constant", "hodges"]);
    for r in &table.rows {
        dichotomy.push(vec![num(r.theta), num(r.mle), num(r.constant), num(r.hodges)]);
    }
    let text = format!(
        "{}\nMLE contrast: {}\n\nasymptotic efficiency on the finite grid (Hodges pivot {}):\n{}",
        hodges.render_text().trim_end(),
        outcome_line(&mle),
        table.hodges_pivot,
        table.render_table()
    );
    let error = match (&hodges.outcome, &mle.outcome) {
        (ExtractionOutcome::Converged { .. }, ExtractionOutcome::NoSuperefficientPoint { .. }) => None,
        _ => outcome_error(&hodges, true)
            .or_else(|| Some(CliError::AssumptionViolation(format!("unexpected outcome: {}", outcome_line(&hodges))))),
    };
    let mut artifact = Artifact::new("demo", json!({ "hodges": hodges, "mle": mle, "dichotomy": table }));
    artifact.summary = outcome_line(&hodges);
    artifact.tables.extend([iteration_table("demo_iterations", &hodges), dichotomy]);
    artifact.texts.push(("demo.txt".into(), text));
    Ok((artifact, error))
}
