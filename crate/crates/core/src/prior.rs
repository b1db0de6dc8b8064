//! Informative prior on the parameter plane and quadrature over it.
//!
//! Every metric-space integral in this crate is an expectation against a
//! probability density on the parameter manifold. The prior is Gaussian;
//! expectations are evaluated either by a tensor Gauss-Hermite rule
//! (default, exact for per-axis polynomials up to degree `2 order - 1`)
//! or by seeded Monte-Carlo sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::linalg::{sym_eigen, SpdMatrix, SymMatrix, MAX_DIM};
use crate::sensor::ParameterPoint;

/// How expectations against the prior are discretized.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureRule {
    /// Tensor-product Gauss-Hermite with the given per-axis order.
    GaussHermite { order: usize },
    /// Seeded Monte-Carlo fallback (documented for higher-dimensional
    /// parameter manifolds; not the default).
    MonteCarlo { samples: usize, seed: u64 },
}

/// Gaussian prior with an attached quadrature descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    mean: ParameterPoint,
    covariance: SpdMatrix,
    rule: QuadratureRule,
}

impl Prior {
    pub fn new(mean: ParameterPoint, covariance: SpdMatrix, rule: QuadratureRule) -> Result<Self> {
        if covariance.dim() != 2 {
            return Err(CoreError::Dimension(covariance.dim()));
        }
        match rule {
            QuadratureRule::GaussHermite { order } => {
                if order == 0 || order > MAX_DIM {
                    return Err(CoreError::Domain(format!(
                        "Gauss-Hermite order must be in 1..={MAX_DIM}, got {order}"
                    )));
                }
            }
            QuadratureRule::MonteCarlo { samples, .. } => {
                if samples == 0 {
                    return Err(CoreError::Domain(
                        "Monte-Carlo quadrature needs at least one sample".into(),
                    ));
                }
            }
        }
        Ok(Prior {
            mean,
            covariance,
            rule,
        })
    }

    /// Gauss-Hermite prior of the given order.
    pub fn gaussian(mean: ParameterPoint, covariance: SpdMatrix, order: usize) -> Result<Self> {
        Prior::new(mean, covariance, QuadratureRule::GaussHermite { order })
    }

    pub fn mean(&self) -> ParameterPoint {
        self.mean
    }

    pub fn covariance(&self) -> &SpdMatrix {
        &self.covariance
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }
}

/// Discretization of the prior: nodes with positive weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<ParameterPoint>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Assembles a grid from explicit nodes and weights (weights positive,
    /// summing to 1 within 1e-12).
    pub fn from_parts(nodes: Vec<ParameterPoint>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(CoreError::Domain(
                "grid needs matching, non-empty nodes and weights".into(),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(CoreError::Domain("grid weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::Domain(format!(
                "grid weights sum to {total}, expected 1"
            )));
        }
        Ok(QuadratureGrid { nodes, weights })
    }

    pub fn nodes(&self) -> &[ParameterPoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ParameterPoint, f64)> {
        self.nodes.iter().zip(self.weights.iter().copied())
    }
}

/// One-dimensional Gauss-Hermite rule for a standard normal variable:
/// returns `(z_i, w_i)` with the weights normalized to sum to 1, so that
/// `E[f(Z)] ~= sum_i w_i f(z_i)` for `Z ~ N(0, 1)`.
///
/// Nodes and weights come from the Golub-Welsch eigenproblem of the
/// Hermite Jacobi matrix (off-diagonal `sqrt(k/2)`), with the physicists'
/// abscissas rescaled by `sqrt(2)`.
pub fn gauss_hermite_1d(order: usize) -> Result<Vec<(f64, f64)>> {
    if order == 0 || order > MAX_DIM {
        return Err(CoreError::Domain(format!(
            "Gauss-Hermite order must be in 1..={MAX_DIM}, got {order}"
        )));
    }
    let mut jacobi = SymMatrix::zeros(order);
    for k in 1..order {
        jacobi.set(k - 1, k, (k as f64 / 2.0).sqrt());
    }
    let eig = sym_eigen(&jacobi);
    let mut rule: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let w = eig.vectors[(0, i)] * eig.vectors[(0, i)];
            (std::f64::consts::SQRT_2 * eig.values[i], w)
        })
        .collect();
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
    // The exact rule is symmetric about zero; enforce that structure so odd
    // moments cancel to rounding instead of to eigen-solver accuracy.
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let node = 0.5 * (rule[j].0 - rule[i].0);
        let weight = 0.5 * (rule[i].1 + rule[j].1);
        rule[i] = (-node, weight);
        rule[j] = (node, weight);
    }
    if order % 2 == 1 {
        rule[order / 2].0 = 0.0;
    }
    Ok(rule)
}

/// Materializes the prior's quadrature rule into explicit nodes and weights
/// on the parameter plane.
pub fn build_grid(prior: &Prior) -> Result<QuadratureGrid> {
    let l = prior.covariance().cholesky_factor();
    let mean = prior.mean();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    match *prior.rule() {
        QuadratureRule::GaussHermite { order } => {
            let rule = gauss_hermite_1d(order)?;
            for &(zx, wx) in &rule {
                for &(zy, wy) in &rule {
                    let x = mean.x + l[(0, 0)] * zx;
                    let y = mean.y + l[(1, 0)] * zx + l[(1, 1)] * zy;
                    nodes.push(ParameterPoint::new(x, y)?);
                    weights.push(wx * wy);
                }
            }
        }
        QuadratureRule::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = 1.0 / samples as f64;
            for _ in 0..samples {
                let zx: f64 = StandardNormal.sample(&mut rng);
                let zy: f64 = StandardNormal.sample(&mut rng);
                let x = mean.x + l[(0, 0)] * zx;
                let y = mean.y + l[(1, 0)] * zx + l[(1, 1)] * zy;
                nodes.push(ParameterPoint::new(x, y)?);
                weights.push(w);
            }
        }
    }
    Ok(QuadratureGrid { nodes, weights })
}

/// Weighted sum of a scalar field over the grid.
///
/// Node evaluations happen in a fixed order and the reduction is ordered,
/// so the result does not depend on any parallelism in the caller.
pub fn integrate_scalar<F>(field: F, grid: &QuadratureGrid) -> Result<f64>
where
    F: Fn(&ParameterPoint) -> Result<f64>,
{
    let mut acc = 0.0;
    for (index, (node, w)) in grid.iter().enumerate() {
        let v = field(node)?;
        if !v.is_finite() {
            return Err(CoreError::NonFiniteField {
                index,
                x: node.x,
                y: node.y,
            });
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Weighted sum of a symmetric-matrix field over the grid.
pub fn integrate_matrix<F>(field: F, grid: &QuadratureGrid) -> Result<SymMatrix>
where
    F: Fn(&ParameterPoint) -> Result<SymMatrix>,
{
    let mut acc: Option<SymMatrix> = None;
    for (index, (node, w)) in grid.iter().enumerate() {
        let v = field(node)?;
        if !v.is_finite() {
            return Err(CoreError::NonFiniteField {
                index,
                x: node.x,
                y: node.y,
            });
        }
        acc = Some(match acc {
            None => v.scaled(w),
            Some(a) => a.add_scaled(w, &v),
        });
    }
    acc.ok_or_else(|| CoreError::Domain("empty quadrature grid".into()))
}
