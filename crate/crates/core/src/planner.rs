//! Iterated geodesic replanning for mobile bearing sensors.
//!
//! Each iteration assembles the induced metric at the current
//! configuration, picks an initial direction, follows the configuration
//! geodesic for a fixed period, and repeats from the end point. Per-step
//! diagnostics (determinant of the Fisher matrix at the prior mean,
//! bearing separation, metric eigenvalues) make the runs comparable.
//!
//! The metric determines a geodesic only once an initial velocity is
//! chosen, and that choice is a policy isolated behind [`DirectionRule`]
//! so alternatives can be swapped:
//!
//! - [`DirectionRule::NaturalGradient`] (default): steepest ascent of the
//!   expected log-determinant of the Fisher matrix, measured in the
//!   induced metric (`u ~ Q^-1 grad`). Improving and sign-unambiguous;
//!   this is the rule the shipped scenarios run.
//! - [`DirectionRule::DominantEigenvector`]: the unit direction that
//!   maximizes the energy integrand `G(u, u)` itself, i.e. the top
//!   eigenvector of `Q`, with the sign fixed by a range-decrease rule on
//!   the first iteration and by continuity afterwards. Kept selectable;
//!   in near-orthogonal geometries its top mode can be a joint tangential
//!   rotation that gathers no information, which is why it is not the
//!   default.

use crate::error::{CoreError, Result};
use crate::linalg::{sym_eigen, Matrix, SpdMatrix};
use crate::manifold::{
    induced_metric, information_gradient, integrate_geodesic, metric_speed, GeodesicState,
    SensorManifold,
};
use crate::prior::{build_grid, Prior};
use crate::sensor::{bearing, fisher_information, ParameterPoint, SensorConfiguration, VonMisesModel};

/// Policy for turning the induced metric into an initial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionRule {
    #[default]
    NaturalGradient,
    DominantEigenvector,
}

/// Complete description of a planning run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Ground-truth emitter position; used only for reporting, never by
    /// the planner itself (which plans from the prior).
    pub target: ParameterPoint,
    pub prior: Prior,
    pub model: VonMisesModel,
    pub initial_config: SensorConfiguration,
    /// Per-platform speed bound (the fastest platform moves at this speed).
    pub speed: f64,
    /// Time between replans; one geodesic segment per iteration.
    pub replan_period: f64,
    pub iterations: usize,
    /// RK4 step for the geodesic segments.
    pub ode_step: f64,
    /// Platforms may not enter this disk around the prior mean.
    pub guard_radius: f64,
    /// Ridge-regularize Fisher matrices inside quadratures.
    pub ridge: bool,
    /// Initial-velocity policy.
    pub direction_rule: DirectionRule,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0) {
            return Err(CoreError::Domain("speed must be positive".into()));
        }
        if !(self.ode_step > 0.0) || self.replan_period < self.ode_step {
            return Err(CoreError::Domain(
                "require replan_period >= ode_step > 0".into(),
            ));
        }
        if self.iterations == 0 {
            return Err(CoreError::Domain("iterations must be >= 1".into()));
        }
        if self.guard_radius < 0.0 {
            return Err(CoreError::Domain("guard_radius must be >= 0".into()));
        }
        Ok(())
    }
}

/// How a planning run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanStatus {
    Completed,
    /// A platform reached the guard disk; trajectory clipped there.
    GuardStopped { time: f64, platform: usize },
    /// Geometry degenerated mid-run; partial trace retained.
    Degenerate { time: f64, message: String },
}

/// One row of the planning trace. Diagnostics are pure functions of the
/// configuration and the prior, so they can be recomputed from the
/// configuration alone.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRecord {
    pub time: f64,
    pub config: SensorConfiguration,
    /// Speed-scaled initial direction chosen at this configuration.
    pub direction: Vec<f64>,
    /// Eigenvalues of the induced metric, descending.
    pub q_eigenvalues: Vec<f64>,
    /// det F at the prior mean.
    pub det_fisher_mean: f64,
    /// Minimum pairwise bearing separation at the prior mean, in [0, pi].
    pub bearing_separation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanTrace {
    pub records: Vec<PlanRecord>,
    pub status: PlanStatus,
}

/// Sign-disambiguation context for [`initial_direction`].
#[derive(Debug, Clone, Copy)]
pub enum DirectionSign<'a> {
    /// First iteration: prefer the sign that decreases the summed
    /// platform-to-mean distances (ties broken lexicographically).
    TowardPriorMean {
        config: &'a SensorConfiguration,
        mean: ParameterPoint,
    },
    /// Later iterations: prefer the sign with positive dot product
    /// against the previous direction.
    Continuity { previous: &'a [f64] },
}

fn lexicographic_sign(v: &[f64]) -> f64 {
    for &c in v {
        if c != 0.0 {
            return if c > 0.0 { 1.0 } else { -1.0 };
        }
    }
    1.0
}

/// Rescales so the fastest platform moves exactly at `speed`. Returns
/// `None` for an all-zero vector.
fn scale_to_speed(v: &[f64], speed: f64) -> Option<Vec<f64>> {
    let max_platform_speed = v
        .chunks_exact(2)
        .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
        .fold(0.0_f64, f64::max);
    if max_platform_speed <= 0.0 {
        return None;
    }
    let scale = speed / max_platform_speed;
    Some(v.iter().map(|c| c * scale).collect())
}

/// Natural-gradient direction: the information gradient raised by the
/// inverse induced metric and scaled to the speed bound. Returns `None`
/// at a critical point of the information functional.
pub fn natural_gradient_direction(
    q: &SpdMatrix,
    info_gradient: &[f64],
    speed: f64,
) -> Option<Vec<f64>> {
    let n = q.dim();
    let g = Matrix::from_column_slice(n, 1, info_gradient);
    let raised = q.solve_matrix(&g);
    let v: Vec<f64> = (0..n).map(|i| raised[(i, 0)]).collect();
    scale_to_speed(&v, speed)
}

/// Chooses the motion direction at a configuration: the dominant
/// eigenvector of the induced metric, sign-disambiguated, and scaled so
/// the fastest platform moves exactly at `speed`.
pub fn initial_direction(q: &SpdMatrix, speed: f64, sign: DirectionSign) -> Vec<f64> {
    let eig = sym_eigen(q.sym());
    let n = q.dim();
    let mut v: Vec<f64> = (0..n).map(|i| eig.vectors[(i, 0)]).collect();

    let tie = 1e-12;
    let orientation = match sign {
        DirectionSign::TowardPriorMean { config, mean } => {
            // d/d eps of sum_j |p_j + eps v_j - mean| at eps = 0.
            let mut slope = 0.0;
            for (j, p) in config.platforms().iter().enumerate() {
                let dx = p[0] - mean.x;
                let dy = p[1] - mean.y;
                let dist = (dx * dx + dy * dy).sqrt();
                if dist > 0.0 {
                    slope += (v[2 * j] * dx + v[2 * j + 1] * dy) / dist;
                }
            }
            if slope.abs() <= tie {
                lexicographic_sign(&v)
            } else if slope < 0.0 {
                1.0
            } else {
                -1.0
            }
        }
        DirectionSign::Continuity { previous } => {
            let dot: f64 = v.iter().zip(previous).map(|(a, b)| a * b).sum();
            if dot.abs() <= tie {
                lexicographic_sign(&v)
            } else if dot > 0.0 {
                1.0
            } else {
                -1.0
            }
        }
    };

    for c in &mut v {
        *c *= orientation;
    }
    scale_to_speed(&v, speed).expect("eigenvectors are unit vectors")
}

/// det F and minimum pairwise bearing separation at a point, the two
/// scalar diagnostics tracked per iteration.
pub fn diagnostics(
    config: &SensorConfiguration,
    at: ParameterPoint,
    model: &VonMisesModel,
) -> Result<(f64, f64)> {
    let f = fisher_information(config, at, model)?;
    let det = f.get(0, 0) * f.get(1, 1) - f.get(0, 1) * f.get(0, 1);

    let mut separation = 0.0_f64;
    if config.count() >= 2 {
        let bearings: Result<Vec<f64>> = config
            .platforms()
            .iter()
            .map(|&p| bearing(p, at))
            .collect();
        let bearings = bearings?;
        separation = f64::INFINITY;
        for i in 0..bearings.len() {
            for j in i + 1..bearings.len() {
                let mut d = bearings[i] - bearings[j];
                // Wrap to (-pi, pi].
                d = d.sin().atan2(d.cos());
                separation = separation.min(d.abs());
            }
        }
    }
    Ok((det, separation))
}

fn guard_violation(
    config_flat: &[f64],
    mean: ParameterPoint,
    radius: f64,
) -> Option<usize> {
    for (j, p) in config_flat.chunks_exact(2).enumerate() {
        let d = ((p[0] - mean.x).powi(2) + (p[1] - mean.y).powi(2)).sqrt();
        if d < radius {
            return Some(j);
        }
    }
    None
}

/// Runs the replanning loop: one geodesic segment per iteration, a final
/// direction computation at the terminal configuration, and diagnostics at
/// every record. Deterministic given the scenario.
pub fn replan_loop(scenario: &Scenario) -> Result<PlanTrace> {
    scenario.validate()?;
    let grid = build_grid(&scenario.prior)?;
    let manifold = SensorManifold::new(
        &scenario.model,
        &grid,
        scenario.initial_config.count(),
        scenario.ridge,
    );
    let mean = scenario.prior.mean();

    let mut records: Vec<PlanRecord> = Vec::with_capacity(scenario.iterations + 1);
    let mut config = scenario.initial_config.clone();
    let mut previous_direction: Option<Vec<f64>> = None;
    let mut status = PlanStatus::Completed;

    for iteration in 0..=scenario.iterations {
        let time = iteration as f64 * scenario.replan_period;
        let q = match induced_metric(&config, &scenario.model, &grid, scenario.ridge) {
            Ok(q) => q,
            Err(e) => {
                status = PlanStatus::Degenerate {
                    time,
                    message: e.to_string(),
                };
                break;
            }
        };
        let sign = match &previous_direction {
            None => DirectionSign::TowardPriorMean {
                config: &config,
                mean,
            },
            Some(prev) => DirectionSign::Continuity { previous: prev },
        };
        let direction = match scenario.direction_rule {
            DirectionRule::DominantEigenvector => initial_direction(&q, scenario.speed, sign),
            DirectionRule::NaturalGradient => {
                let grad =
                    match information_gradient(&config, &scenario.model, &grid, scenario.ridge) {
                        Ok(g) => g,
                        Err(e) => {
                            status = PlanStatus::Degenerate {
                                time,
                                message: e.to_string(),
                            };
                            break;
                        }
                    };
                // At a critical point of the information functional the
                // ascent direction degenerates; fall back to the
                // eigenvector rule there.
                natural_gradient_direction(&q, &grad, scenario.speed)
                    .unwrap_or_else(|| initial_direction(&q, scenario.speed, sign))
            }
        };
        let (det_f, separation) = diagnostics(&config, mean, &scenario.model)?;
        records.push(PlanRecord {
            time,
            config: config.clone(),
            direction: direction.clone(),
            q_eigenvalues: sym_eigen(q.sym()).values,
            det_fisher_mean: det_f,
            bearing_separation: separation,
        });
        if iteration == scenario.iterations {
            break;
        }

        let start = GeodesicState::new(config.flat(), direction.clone());
        let initial_speed = metric_speed(&manifold, &start).unwrap_or(f64::NAN);
        match integrate_geodesic(&manifold, start, scenario.replan_period, scenario.ode_step) {
            Ok(samples) => {
                let mut clipped = None;
                for (idx, (t_local, state)) in samples.iter().enumerate().skip(1) {
                    if let Some(platform) =
                        guard_violation(&state.sigma, mean, scenario.guard_radius)
                    {
                        // Clip to the previous in-bounds sample.
                        clipped = Some((idx - 1, time + t_local, platform));
                        break;
                    }
                }
                let last_kept = clipped.map(|(idx, _, _)| idx).unwrap_or(samples.len() - 1);
                // A segment that does not conserve the metric speed up to the
                // kept sample is not a geodesic; treat it like any other
                // geometry failure instead of propagating a corrupted
                // configuration.
                let end_speed =
                    metric_speed(&manifold, &samples[last_kept].1).unwrap_or(f64::NAN);
                let drift = (end_speed - initial_speed).abs() / initial_speed.abs();
                if !drift.is_finite() || drift > 1e-3 {
                    status = PlanStatus::Degenerate {
                        time: time + samples[last_kept].0,
                        message: format!(
                            "metric-speed drift {drift:e} exceeds the geodesic contract"
                        ),
                    };
                    break;
                }
                config = SensorConfiguration::from_flat(&samples[last_kept].1.sigma)?;
                if let Some((_, t_stop, platform)) = clipped {
                    status = PlanStatus::GuardStopped {
                        time: t_stop,
                        platform,
                    };
                }
            }
            Err(failure) => {
                if let Some((_, state)) = failure.partial.last() {
                    config = SensorConfiguration::from_flat(&state.sigma)?;
                }
                status = PlanStatus::Degenerate {
                    time: time + failure.time,
                    message: failure.source.to_string(),
                };
            }
        }
        if status != PlanStatus::Completed {
            // Append the terminal record at the clipped configuration when
            // the geometry still permits it.
            let stop_time = match &status {
                PlanStatus::GuardStopped { time, .. } => *time,
                PlanStatus::Degenerate { time, .. } => *time,
                PlanStatus::Completed => unreachable!(),
            };
            if stop_time > time {
                if let (Ok(q), Ok((det_f, separation))) = (
                    induced_metric(&config, &scenario.model, &grid, scenario.ridge),
                    diagnostics(&config, mean, &scenario.model),
                ) {
                    let sign = DirectionSign::Continuity {
                        previous: &records.last().unwrap().direction,
                    };
                    let direction = match scenario.direction_rule {
                        DirectionRule::DominantEigenvector => {
                            initial_direction(&q, scenario.speed, sign)
                        }
                        DirectionRule::NaturalGradient => information_gradient(
                            &config,
                            &scenario.model,
                            &grid,
                            scenario.ridge,
                        )
                        .ok()
                        .and_then(|g| natural_gradient_direction(&q, &g, scenario.speed))
                        .unwrap_or_else(|| initial_direction(&q, scenario.speed, sign)),
                    };
                    records.push(PlanRecord {
                        time: stop_time,
                        config: config.clone(),
                        direction,
                        q_eigenvalues: sym_eigen(q.sym()).values,
                        det_fisher_mean: det_f,
                        bearing_separation: separation,
                    });
                }
            }
            break;
        }
        previous_direction = Some(direction);
    }

    Ok(PlanTrace { records, status })
}

/// Straight-line continuation of the final record: each platform moves
/// along its component of the last chosen direction for `duration`.
pub fn extrapolate(trace: &PlanTrace, duration: f64) -> Result<SensorConfiguration> {
    let last = trace
        .records
        .last()
        .ok_or_else(|| CoreError::Domain("cannot extrapolate an empty trace".into()))?;
    let flat: Vec<f64> = last
        .config
        .flat()
        .iter()
        .zip(&last.direction)
        .map(|(x, v)| x + duration * v)
        .collect();
    SensorConfiguration::from_flat(&flat)
}
