//! Information-geometric sensor management for bearings-only localization.
//!
//! A sensor configuration induces, through its Fisher information, a
//! Riemannian metric on the parameter plane. The space of such metrics is
//! itself Riemannian; pulling its inner product back through the
//! configuration-to-metric map endows the space of sensor configurations
//! with a metric whose geodesics the planner follows. The crate implements
//! that chain end to end:
//!
//! - [`linalg`]: dense symmetric/SPD kernel (Cholesky, eigen, expm);
//! - [`sensor`]: von Mises bearing model, Fisher information and its
//!   derivatives with respect to sensor coordinates;
//! - [`prior`]: Gaussian priors on the parameter plane with Gauss-Hermite
//!   or Monte-Carlo quadrature;
//! - [`ambient`]: the metric-space inner product, closed-form geodesics
//!   and the Kullback-Leibler / mutual-information divergences;
//! - [`manifold`]: the induced metric on sensor configurations, Christoffel
//!   symbols and fixed-step geodesic integration;
//! - [`planner`]: the iterated geodesic replanning loop with diagnostics;
//! - [`samples`]: seeded generators for verification runs.

pub mod ambient;
pub mod error;
pub mod linalg;
pub mod manifold;
pub mod planner;
pub mod prior;
pub mod samples;
pub mod sensor;

pub use ambient::{
    ambient_geodesic, ambient_inner, divergence, divergence_hessian, jeffreys_grid, kl_divergence,
    mi_divergence, mi_divergence_direct, AffineTangent, AmbientGeodesic, ConstantMetric,
    ConstantTangent, Divergence, ExpAffineMetric, FisherMetricField, FnMetric, FnTangent,
    MetricField, PerturbedMetric, TangentField,
};
pub use error::{CoreError, Result};
pub use linalg::{cholesky, mat_exp, solve, sym_eigen, Matrix, SpdMatrix, SymEigen, SymMatrix};
pub use manifold::{
    christoffel, christoffel_geodesic_rhs, induced_metric, induced_metric_sym,
    information_gradient, integrate_geodesic, metric_jacobian, metric_speed, ChristoffelTensor,
    ConfigurationMetric, ConformalMetric, ConstantConfigMetric, GeodesicFailure, GeodesicState,
    SensorManifold,
};
pub use planner::{
    diagnostics, extrapolate, initial_direction, natural_gradient_direction, replan_loop,
    DirectionRule, DirectionSign, PlanRecord, PlanStatus, PlanTrace, Scenario,
};
pub use prior::{
    build_grid, integrate_matrix, integrate_scalar, Prior, QuadratureGrid, QuadratureRule,
};
pub use sensor::{
    bearing, bessel_ratio, fisher_derivative, fisher_information, fisher_mc_oracle,
    ParameterPoint, SensorConfiguration, VonMisesModel,
};
