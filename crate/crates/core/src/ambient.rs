//! Operations on the space of Riemannian metrics over the parameter plane.
//!
//! A point of that space assigns an SPD matrix to each parameter value; a
//! tangent vector assigns a symmetric matrix. With an informative prior
//! `dF` replacing the volume form, the inner product is
//!
//! ```text
//! G_g(h, k) = integral of Tr(g^-1 h g^-1 k) dF(theta) ,
//! ```
//!
//! geodesics through `g0` with velocity `h` have the closed form
//! `g0 exp(g0^-1 h t)`, and both the Kullback-Leibler and the
//! mutual-information divergence have this inner product (halved) as their
//! Hessian, which is what justifies steering sensors along its geodesics.

use crate::error::{CoreError, Result};
use crate::linalg::{mat_exp, SpdMatrix, SymMatrix};
use crate::prior::{integrate_scalar, QuadratureGrid};
use crate::sensor::{fisher_information, ParameterPoint, SensorConfiguration, VonMisesModel};

/// Ridge factor for optional Fisher regularization: `F + eps tr(F) I`.
pub const RIDGE_EPSILON: f64 = 1e-8;

/// A field of SPD matrices over the parameter plane.
pub trait MetricField {
    fn metric_at(&self, theta: &ParameterPoint) -> Result<SpdMatrix>;
}

/// A field of symmetric matrices (a tangent vector to the metric space).
pub trait TangentField {
    fn tangent_at(&self, theta: &ParameterPoint) -> Result<SymMatrix>;
}

/// Metric field that is the same SPD matrix everywhere.
#[derive(Debug, Clone)]
pub struct ConstantMetric(pub SpdMatrix);

impl MetricField for ConstantMetric {
    fn metric_at(&self, _theta: &ParameterPoint) -> Result<SpdMatrix> {
        Ok(self.0.clone())
    }
}

/// Tangent field that is the same symmetric matrix everywhere.
#[derive(Debug, Clone)]
pub struct ConstantTangent(pub SymMatrix);

impl TangentField for ConstantTangent {
    fn tangent_at(&self, _theta: &ParameterPoint) -> Result<SymMatrix> {
        Ok(self.0.clone())
    }
}

/// Metric field backed by a closure.
pub struct FnMetric<F: Fn(&ParameterPoint) -> Result<SpdMatrix>>(pub F);

impl<F: Fn(&ParameterPoint) -> Result<SpdMatrix>> MetricField for FnMetric<F> {
    fn metric_at(&self, theta: &ParameterPoint) -> Result<SpdMatrix> {
        (self.0)(theta)
    }
}

/// Tangent field backed by a closure.
pub struct FnTangent<F: Fn(&ParameterPoint) -> Result<SymMatrix>>(pub F);

impl<F: Fn(&ParameterPoint) -> Result<SymMatrix>> TangentField for FnTangent<F> {
    fn tangent_at(&self, theta: &ParameterPoint) -> Result<SymMatrix> {
        (self.0)(theta)
    }
}

/// The Fisher metric a sensor configuration induces on the parameter plane.
///
/// With `ridge` set, a scale-aware diagonal shift keeps near-degenerate
/// geometries factorizable instead of erroring; off by default so that
/// genuine degeneracy surfaces as an error.
#[derive(Debug, Clone)]
pub struct FisherMetricField {
    config: SensorConfiguration,
    model: VonMisesModel,
    ridge: bool,
}

impl FisherMetricField {
    pub fn new(config: SensorConfiguration, model: VonMisesModel, ridge: bool) -> Self {
        FisherMetricField {
            config,
            model,
            ridge,
        }
    }

    pub fn config(&self) -> &SensorConfiguration {
        &self.config
    }
}

impl MetricField for FisherMetricField {
    fn metric_at(&self, theta: &ParameterPoint) -> Result<SpdMatrix> {
        let mut f = fisher_information(&self.config, *theta, &self.model)?;
        if self.ridge {
            let shift = RIDGE_EPSILON * f.trace();
            f = f.add(&SymMatrix::from_diagonal(&[shift, shift]));
        }
        SpdMatrix::new(f)
    }
}

/// Smooth SPD field `exp(S0 + (x - cx) Sx + (y - cy) Sy)`; positive
/// definite for any symmetric coefficients. Used to build seeded random
/// metric fields for the divergence checks.
#[derive(Debug, Clone)]
pub struct ExpAffineMetric {
    pub center: ParameterPoint,
    pub s0: SymMatrix,
    pub sx: SymMatrix,
    pub sy: SymMatrix,
}

impl MetricField for ExpAffineMetric {
    fn metric_at(&self, theta: &ParameterPoint) -> Result<SpdMatrix> {
        let s = self
            .s0
            .add_scaled(theta.x - self.center.x, &self.sx)
            .add_scaled(theta.y - self.center.y, &self.sy);
        let e = mat_exp(s.as_matrix())?;
        SpdMatrix::new(SymMatrix::symmetrize(&e))
    }
}

/// Symmetric-matrix field affine in the parameter coordinates.
#[derive(Debug, Clone)]
pub struct AffineTangent {
    pub center: ParameterPoint,
    pub h0: SymMatrix,
    pub hx: SymMatrix,
    pub hy: SymMatrix,
}

impl TangentField for AffineTangent {
    fn tangent_at(&self, theta: &ParameterPoint) -> Result<SymMatrix> {
        Ok(self
            .h0
            .add_scaled(theta.x - self.center.x, &self.hx)
            .add_scaled(theta.y - self.center.y, &self.hy))
    }
}

/// Base metric shifted along a tangent direction: `g + step * h`.
pub struct PerturbedMetric<'a> {
    base: &'a dyn MetricField,
    direction: &'a dyn TangentField,
    step: f64,
}

impl<'a> PerturbedMetric<'a> {
    pub fn new(base: &'a dyn MetricField, direction: &'a dyn TangentField, step: f64) -> Self {
        PerturbedMetric {
            base,
            direction,
            step,
        }
    }
}

impl MetricField for PerturbedMetric<'_> {
    fn metric_at(&self, theta: &ParameterPoint) -> Result<SpdMatrix> {
        let g = self.base.metric_at(theta)?;
        let h = self.direction.tangent_at(theta)?;
        SpdMatrix::new(g.sym().add_scaled(self.step, &h))
    }
}

/// Alternative weighting: replaces the prior weights by the volume form
/// `sqrt(det g)` of a metric field, evaluated over the same nodes and
/// renormalized.
///
/// This is a truncated surrogate for the Jeffreys-weighted integrals (the
/// true volume form is not a probability measure and extends beyond the
/// prior's node hull); it is provided as a documented alternative only,
/// with no claims beyond the node set it is built on. All quadrature-based
/// operations accept the resulting grid in place of the prior grid.
pub fn jeffreys_grid(
    prior: &crate::prior::Prior,
    metric: &dyn MetricField,
) -> Result<QuadratureGrid> {
    let base = crate::prior::build_grid(prior)?;
    let mean = prior.mean();
    let cov = prior.covariance();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * cov.det().sqrt());
    let mut weights = Vec::with_capacity(base.len());
    for (node, w) in base.iter() {
        let d = crate::linalg::Matrix::from_column_slice(2, 1, &[node.x - mean.x, node.y - mean.y]);
        let maha = (d.transpose() * cov.solve_matrix(&d))[(0, 0)];
        let density = norm * (-0.5 * maha).exp();
        let volume = metric.metric_at(node)?.det().sqrt();
        weights.push(w * volume / density);
    }
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(CoreError::Domain(
            "volume-form weights are not normalizable on this node set".into(),
        ));
    }
    for w in &mut weights {
        *w /= total;
    }
    QuadratureGrid::from_parts(base.nodes().to_vec(), weights)
}

/// Inner product of two tangent fields at the base metric `g`:
/// the quadrature of `Tr(g^-1 h g^-1 k)` against the prior.
pub fn ambient_inner(
    g: &dyn MetricField,
    h: &dyn TangentField,
    k: &dyn TangentField,
    grid: &QuadratureGrid,
) -> Result<f64> {
    integrate_scalar(
        |theta| {
            let gm = g.metric_at(theta)?;
            let x = gm.solve_sym(&h.tangent_at(theta)?);
            let y = gm.solve_sym(&k.tangent_at(theta)?);
            Ok((x * y).trace())
        },
        grid,
    )
}

/// Geodesic of the metric space through `gamma0` with initial velocity
/// `velocity`, evaluated lazily: pointwise
/// `gamma(t) = gamma0 exp(gamma0^-1 velocity t)`, symmetrized.
///
/// The curve solves the second-order equation
/// `gamma'' = gamma' gamma^-1 gamma'` and stays positive definite for all
/// `t` until floating-point overflow, which is reported as such.
pub struct AmbientGeodesic<'a> {
    gamma0: &'a dyn MetricField,
    velocity: &'a dyn TangentField,
    t: f64,
}

pub fn ambient_geodesic<'a>(
    gamma0: &'a dyn MetricField,
    velocity: &'a dyn TangentField,
    t: f64,
) -> AmbientGeodesic<'a> {
    AmbientGeodesic {
        gamma0,
        velocity,
        t,
    }
}

impl MetricField for AmbientGeodesic<'_> {
    fn metric_at(&self, theta: &ParameterPoint) -> Result<SpdMatrix> {
        let g0 = self.gamma0.metric_at(theta)?;
        let v = self.velocity.tangent_at(theta)?;
        let k = g0.solve_sym(&v) * self.t;
        let e = mat_exp(&k)?;
        let raw = g0.as_matrix() * e;
        SpdMatrix::new(SymMatrix::symmetrize(&raw))
    }
}

/// Divergence selector for [`divergence`] and [`divergence_hessian`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divergence {
    KullbackLeibler,
    MutualInformation,
}

fn kl_at(g: &SpdMatrix, h: &SpdMatrix) -> Result<f64> {
    // 0.5 Tr(g h^-1 - I) + 0.5 log(|h|/|g|), with the trace written as
    // Tr((g - h) h^-1) so that it vanishes identically when g == h.
    let diff = g.sym().sub(h.sym());
    let trace = h.solve_sym(&diff).trace();
    Ok(0.5 * trace + 0.5 * (h.log_det() - g.log_det()))
}

fn mi_at(g: &SpdMatrix, h: &SpdMatrix) -> Result<f64> {
    // log|0.5 (I + g^-1 h)| + log|0.5 (I + h^-1 g)|
    //   = 2 log|0.5 (g + h)| - log|g| - log|h| ,
    // evaluated through the midpoint Cholesky: manifestly symmetric and
    // exactly zero when g == h.
    let mid = SpdMatrix::new(g.sym().add(h.sym()).scaled(0.5))?;
    Ok(2.0 * mid.log_det() - (g.log_det() + h.log_det()))
}

/// Kullback-Leibler divergence between two metric fields under the prior.
/// Zero exactly when the fields agree; asymmetric in general.
pub fn kl_divergence(
    g: &dyn MetricField,
    h: &dyn MetricField,
    grid: &QuadratureGrid,
) -> Result<f64> {
    integrate_scalar(|p| kl_at(&g.metric_at(p)?, &h.metric_at(p)?), grid)
}

/// Mutual-information divergence between two metric fields: symmetric in
/// its arguments and zero exactly on the diagonal.
pub fn mi_divergence(
    g: &dyn MetricField,
    h: &dyn MetricField,
    grid: &QuadratureGrid,
) -> Result<f64> {
    integrate_scalar(|p| mi_at(&g.metric_at(p)?, &h.metric_at(p)?), grid)
}

/// Cross-check route for [`mi_divergence`]: evaluates the two
/// `log det (I + g^-1 h)/2`-style factors directly through LU determinants
/// instead of the midpoint Cholesky. Agrees with `mi_divergence` to
/// rounding; kept as an independent evaluation path.
pub fn mi_divergence_direct(
    g: &dyn MetricField,
    h: &dyn MetricField,
    grid: &QuadratureGrid,
) -> Result<f64> {
    integrate_scalar(
        |p| {
            let gm = g.metric_at(p)?;
            let hm = h.metric_at(p)?;
            let dim = gm.dim();
            let eye = nalgebra::DMatrix::<f64>::identity(dim, dim);
            let a = (&eye + gm.solve_sym(hm.sym())) * 0.5;
            let b = (&eye + hm.solve_sym(gm.sym())) * 0.5;
            let (da, db) = (a.determinant(), b.determinant());
            if da <= 0.0 || db <= 0.0 {
                return Err(CoreError::Domain(
                    "non-positive determinant in divergence factor".into(),
                ));
            }
            Ok(da.ln() + db.ln())
        },
        grid,
    )
}

/// Dispatches on the divergence selector.
pub fn divergence(
    div: Divergence,
    g: &dyn MetricField,
    h: &dyn MetricField,
    grid: &QuadratureGrid,
) -> Result<f64> {
    match div {
        Divergence::KullbackLeibler => kl_divergence(g, h, grid),
        Divergence::MutualInformation => mi_divergence(g, h, grid),
    }
}

/// Grid-averaged Frobenius norm of a metric field.
pub fn metric_field_norm(g: &dyn MetricField, grid: &QuadratureGrid) -> Result<f64> {
    integrate_scalar(|p| Ok(g.metric_at(p)?.sym().frobenius_norm()), grid)
}

/// Grid-averaged Frobenius norm of a tangent field.
pub fn tangent_field_norm(h: &dyn TangentField, grid: &QuadratureGrid) -> Result<f64> {
    integrate_scalar(|p| Ok(h.tangent_at(p)?.frobenius_norm()), grid)
}

/// Second derivative of the divergence along a tangent direction:
/// `d^2/d eps^2  Delta(g, g + eps h')` at `eps = 0`, by central second
/// differences with one Richardson step.
///
/// For both divergences this equals `0.5 * ambient_inner(g, h', h')` up to
/// the finite-difference error, which the step rule keeps well below the
/// 1e-4 contract.
pub fn divergence_hessian(
    div: Divergence,
    g: &dyn MetricField,
    hprime: &dyn TangentField,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let norm_g = metric_field_norm(g, grid)?;
    let norm_h = tangent_field_norm(hprime, grid)?;
    if norm_h == 0.0 {
        return Ok(0.0);
    }
    let eps = 1e-3 * norm_g / norm_h;

    let centered = |e: f64| -> Result<f64> {
        let map_step = |err: CoreError| match err {
            CoreError::NotPositiveDefinite { .. } => CoreError::StepTooLarge { step: e },
            other => other,
        };
        let plus = PerturbedMetric::new(g, hprime, e);
        let minus = PerturbedMetric::new(g, hprime, -e);
        let dp = divergence(div, g, &plus, grid).map_err(map_step)?;
        let dm = divergence(div, g, &minus, grid).map_err(map_step)?;
        // Delta(g, g) == 0 identically for both divergences.
        Ok((dp + dm) / (e * e))
    };

    let coarse = centered(eps)?;
    let fine = centered(eps / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}
