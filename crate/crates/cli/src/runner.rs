//! Subcommand implementations. Each returns a process exit code: zero only
//! when the run completed and, for the check subcommands, the verification
//! passed its threshold.

use std::path::{Path, PathBuf};

use thiserror::Error;

use infogeo_core::{
    ambient_inner, build_grid, divergence_hessian, fisher_information, fisher_mc_oracle,
    initial_direction, integrate_geodesic, metric_speed, natural_gradient_direction, replan_loop,
    samples, DirectionRule, DirectionSign, Divergence, GeodesicState, PlanStatus,
    Prior, QuadratureRule, Scenario, SensorManifold,
};

use crate::csvout::{fmt_sig, geodesic_csv, trace_csv};
use crate::scenario::{load_scenario, ScenarioError};
use crate::svg::render_svg;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Core(#[from] infogeo_core::CoreError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Global flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct GlobalOpts {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub quadrature_order: Option<usize>,
    pub ridge: bool,
}

fn load_with_overrides(
    path: &Path,
    opts: &GlobalOpts,
) -> Result<(Scenario, crate::scenario::ScenarioFile), CliError> {
    let mut file = load_scenario(path)?;
    if let Some(order) = opts.quadrature_order {
        file.prior.quadrature_order = order;
    }
    if opts.ridge {
        file.plan.ridge = true;
    }
    if let Some(seed) = opts.seed {
        file.output.seed = seed;
    }
    let scenario = file.to_scenario()?;
    Ok((scenario, file))
}

/// `simulate`: run the replanning loop, write the trace CSV (and SVG when
/// configured), print a per-iteration summary.
pub fn run_simulate(scenario_path: &Path, opts: &GlobalOpts) -> Result<i32, CliError> {
    let (scenario, file) = load_with_overrides(scenario_path, opts)?;
    let trace = replan_loop(&scenario)?;

    let csv_path = opts
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(&file.output.csv));
    write_file(&csv_path, &trace_csv(&trace))?;
    println!("wrote trace: {}", csv_path.display());

    if let Some(svg_name) = &file.output.svg {
        let svg_path = PathBuf::from(svg_name);
        write_file(&svg_path, &render_svg(&trace, &scenario))?;
        println!("wrote plot:  {}", svg_path.display());
    }

    for r in &trace.records {
        println!(
            "t={} det_F={} separation={}",
            fmt_sig(r.time),
            fmt_sig(r.det_fisher_mean),
            fmt_sig(r.bearing_separation)
        );
    }
    match &trace.status {
        PlanStatus::Completed => {
            println!("status: completed {} iterations", scenario.iterations);
            Ok(0)
        }
        PlanStatus::GuardStopped { time, platform } => {
            println!(
                "status: guard stop at t={} (platform {})",
                fmt_sig(*time),
                platform + 1
            );
            Ok(0)
        }
        PlanStatus::Degenerate { time, message } => {
            println!("status: degenerate at t={}: {}", fmt_sig(*time), message);
            Ok(1)
        }
    }
}

/// `geodesic`: integrate a single geodesic from the scenario's initial
/// configuration along the configured direction rule and dump
/// `(t, sigma, u, Q-speed)` rows.
pub fn run_geodesic(
    scenario_path: &Path,
    horizon: Option<f64>,
    step: Option<f64>,
    opts: &GlobalOpts,
) -> Result<i32, CliError> {
    let (scenario, _) = load_with_overrides(scenario_path, opts)?;
    let grid = build_grid(&scenario.prior)?;
    let manifold = SensorManifold::new(
        &scenario.model,
        &grid,
        scenario.initial_config.count(),
        scenario.ridge,
    );
    let q = infogeo_core::induced_metric(
        &scenario.initial_config,
        &scenario.model,
        &grid,
        scenario.ridge,
    )?;
    let sign = DirectionSign::TowardPriorMean {
        config: &scenario.initial_config,
        mean: scenario.prior.mean(),
    };
    let direction = match scenario.direction_rule {
        DirectionRule::DominantEigenvector => initial_direction(&q, scenario.speed, sign),
        DirectionRule::NaturalGradient => {
            let grad = infogeo_core::information_gradient(
                &scenario.initial_config,
                &scenario.model,
                &grid,
                scenario.ridge,
            )?;
            natural_gradient_direction(&q, &grad, scenario.speed)
                .unwrap_or_else(|| initial_direction(&q, scenario.speed, sign))
        }
    };

    let horizon = horizon.unwrap_or(scenario.replan_period);
    let step = step.unwrap_or(scenario.ode_step);
    if !(step > 0.0 && step.is_finite()) || !(horizon >= step) {
        return Err(CliError::Scenario(ScenarioError::Validation {
            key: "horizon/step".into(),
            message: "require horizon >= step > 0".into(),
        }));
    }
    let start = GeodesicState::new(scenario.initial_config.flat(), direction);
    let samples = match integrate_geodesic(&manifold, start, horizon, step) {
        Ok(s) => s,
        Err(failure) => {
            eprintln!("geodesic aborted at t={}: {}", failure.time, failure.source);
            failure.partial
        }
    };
    let speeds: Vec<f64> = samples
        .iter()
        .map(|(_, s)| metric_speed(&manifold, s).unwrap_or(f64::NAN))
        .collect();

    let csv_path = opts
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("geodesic.csv"));
    write_file(&csv_path, &geodesic_csv(&samples, &speeds))?;
    println!("wrote geodesic: {}", csv_path.display());
    let drift = (speeds.last().unwrap_or(&f64::NAN) - speeds[0]).abs() / speeds[0].abs();
    println!(
        "samples: {}  initial Q-speed: {}  relative drift: {}",
        samples.len(),
        fmt_sig(speeds[0]),
        fmt_sig(drift)
    );
    Ok(if drift.is_finite() && drift < 1e-3 { 0 } else { 1 })
}

/// `fisher-check`: Monte-Carlo estimate of the Fisher information against
/// the closed form at the prior mean. Exit 0 iff the relative Frobenius
/// error is below 1%.
pub fn run_fisher_check(
    scenario_path: &Path,
    kappa: Option<f64>,
    sample_count: usize,
    opts: &GlobalOpts,
) -> Result<i32, CliError> {
    let (mut scenario, file) = load_with_overrides(scenario_path, opts)?;
    if let Some(k) = kappa {
        scenario.model = infogeo_core::VonMisesModel::new(k)?;
    }
    let seed = opts.seed.unwrap_or(file.output.seed);
    let theta = scenario.prior.mean();

    let analytic = fisher_information(&scenario.initial_config, theta, &scenario.model)?;
    let estimate = fisher_mc_oracle(
        &scenario.initial_config,
        theta,
        &scenario.model,
        sample_count,
        seed,
    )?;
    let rel = (estimate.as_matrix() - analytic.as_matrix()).norm() / analytic.frobenius_norm();

    println!(
        "kappa={} samples={} seed={}",
        fmt_sig(scenario.model.kappa()),
        sample_count,
        seed
    );
    println!(
        "analytic: [[{}, {}], [{}, {}]]",
        fmt_sig(analytic.get(0, 0)),
        fmt_sig(analytic.get(0, 1)),
        fmt_sig(analytic.get(1, 0)),
        fmt_sig(analytic.get(1, 1))
    );
    println!(
        "estimate: [[{}, {}], [{}, {}]]",
        fmt_sig(estimate.get(0, 0)),
        fmt_sig(estimate.get(0, 1)),
        fmt_sig(estimate.get(1, 0)),
        fmt_sig(estimate.get(1, 1))
    );
    println!("max relative error: {}", fmt_sig(rel));
    Ok(if rel < 0.01 { 0 } else { 1 })
}

/// `divergence-check`: over seeded random metric/tangent field pairs,
/// verify that the second-difference Hessians of both divergences match
/// half the metric-space inner product. Exit 0 iff every relative
/// deviation is below 1e-4.
pub fn run_divergence_check(
    scenario_path: Option<&Path>,
    trials: usize,
    opts: &GlobalOpts,
) -> Result<i32, CliError> {
    let (prior, seed) = match scenario_path {
        Some(path) => {
            let (scenario, file) = load_with_overrides(path, opts)?;
            (scenario.prior, opts.seed.unwrap_or(file.output.seed))
        }
        None => {
            let mean = infogeo_core::ParameterPoint::new(1.0, 1.0)?;
            let cov = infogeo_core::SpdMatrix::new(
                infogeo_core::SymMatrix::from_diagonal(&[0.01, 0.01]),
            )?;
            let order = opts.quadrature_order.unwrap_or(9);
            (
                Prior::new(mean, cov, QuadratureRule::GaussHermite { order })?,
                opts.seed.unwrap_or(0),
            )
        }
    };
    let grid = build_grid(&prior)?;
    let mut rng = samples::rng(seed);

    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let (g, hp) = samples::random_metric_tangent_pair(&mut rng, prior.mean());
        let half_inner = 0.5 * ambient_inner(&g, &hp, &hp, &grid)?;
        let kl = divergence_hessian(Divergence::KullbackLeibler, &g, &hp, &grid)?;
        let mi = divergence_hessian(Divergence::MutualInformation, &g, &hp, &grid)?;
        let scale = half_inner.abs().max(1e-300);
        let err = ((kl - half_inner).abs() / scale)
            .max((mi - half_inner).abs() / scale)
            .max((kl - mi).abs() / scale);
        if err > worst {
            worst = err;
            println!(
                "trial {trial}: hessian(KL)={} hessian(MI)={} half-inner={} rel-err={}",
                fmt_sig(kl),
                fmt_sig(mi),
                fmt_sig(half_inner),
                fmt_sig(err)
            );
        }
    }
    println!("trials: {trials}  seed: {seed}  worst relative error: {}", fmt_sig(worst));
    Ok(if worst < 1e-4 { 0 } else { 1 })
}

