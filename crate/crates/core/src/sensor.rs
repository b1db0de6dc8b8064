//! Bearings-only von Mises measurement model.
//!
//! A platform at `(x_j, y_j)` observes the bearing of an emitter at
//! `theta = (x_e, y_e)` with von Mises noise of concentration `kappa`.
//! The Fisher information of the joint measurement is
//!
//! ```text
//! F(theta) = kappa A(kappa) sum_j (1/R_j^2) n_j n_j^T ,
//! ```
//!
//! where `n_j = (sin phi_j, -cos phi_j)` is the unit normal to the line of
//! sight, `R_j` the range, and `A(kappa) = I1(kappa)/I0(kappa)` the Bessel
//! ratio. This module provides that matrix, its analytic derivatives with
//! respect to the sensor coordinates, and a seeded Monte-Carlo estimator of
//! the defining expectation used as an independent oracle.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::linalg::SymMatrix;

/// Two sensor/target positions closer than this have no defined bearing.
pub const COINCIDENT_TOL: f64 = 1e-12;

/// A point on the parameter plane (candidate emitter position).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterPoint {
    pub x: f64,
    pub y: f64,
}

impl ParameterPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(CoreError::Domain(format!(
                "parameter point must be finite, got ({x}, {y})"
            )));
        }
        Ok(ParameterPoint { x, y })
    }
}

/// Positions of the J mobile platforms; the flattened coordinate vector
/// `(x_1, y_1, ..., x_J, y_J)` is the chart on the configuration manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfiguration {
    platforms: Vec<[f64; 2]>,
}

impl SensorConfiguration {
    pub fn new(platforms: Vec<[f64; 2]>) -> Result<Self> {
        if platforms.is_empty() {
            return Err(CoreError::Domain(
                "a sensor configuration needs at least one platform".into(),
            ));
        }
        if platforms.iter().flatten().any(|c| !c.is_finite()) {
            return Err(CoreError::Domain(
                "sensor coordinates must be finite".into(),
            ));
        }
        Ok(SensorConfiguration { platforms })
    }

    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if coords.len() % 2 != 0 {
            return Err(CoreError::Domain(format!(
                "flattened configuration needs an even length, got {}",
                coords.len()
            )));
        }
        Self::new(coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    /// Number of platforms J.
    pub fn count(&self) -> usize {
        self.platforms.len()
    }

    /// Chart dimension n = 2J.
    pub fn dim(&self) -> usize {
        2 * self.platforms.len()
    }

    pub fn platform(&self, j: usize) -> [f64; 2] {
        self.platforms[j]
    }

    pub fn platforms(&self) -> &[[f64; 2]] {
        &self.platforms
    }

    pub fn flat(&self) -> Vec<f64> {
        self.platforms.iter().flatten().copied().collect()
    }
}

/// Von Mises bearing-noise model with cached Bessel ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct VonMisesModel {
    kappa: f64,
    bessel_ratio: f64,
}

impl VonMisesModel {
    pub fn new(kappa: f64) -> Result<Self> {
        let bessel_ratio = bessel_ratio(kappa)?;
        Ok(VonMisesModel {
            kappa,
            bessel_ratio,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Cached `A(kappa) = I1(kappa)/I0(kappa)`, in (0, 1).
    pub fn bessel_ratio(&self) -> f64 {
        self.bessel_ratio
    }

    /// The Fisher prefactor `kappa * A(kappa)`.
    pub fn kappa_a(&self) -> f64 {
        self.kappa * self.bessel_ratio
    }

    /// Draws a zero-mean von Mises angle in (-pi, pi] using the
    /// Best-Fisher rejection scheme.
    pub fn sample_centered(&self, rng: &mut impl Rng) -> f64 {
        let kappa = self.kappa;
        if kappa < 1e-7 {
            // Nearly uniform on the circle at this concentration.
            return (rng.random::<f64>() * 2.0 - 1.0) * PI;
        }
        let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
        let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
        let r = (1.0 + rho * rho) / (2.0 * rho);
        loop {
            let u1 = rng.random::<f64>();
            let z = (PI * u1).cos();
            let f = (1.0 + r * z) / (r + z);
            let c = kappa * (r - f);
            let u2 = rng.random::<f64>();
            if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
                let u3 = rng.random::<f64>();
                let angle = f.clamp(-1.0, 1.0).acos();
                return if u3 < 0.5 { -angle } else { angle };
            }
        }
    }
}

/// Bearing of `target` as seen from `sensor`, in (-pi, pi].
///
/// Uses the two-argument arctangent of `(y_s - y_e, x_s - x_e)`; the rest of
/// the model depends on the bearing only modulo pi, so the branch choice is
/// observationally irrelevant but fixed here once.
pub fn bearing(sensor: [f64; 2], target: ParameterPoint) -> Result<f64> {
    let dx = sensor[0] - target.x;
    let dy = sensor[1] - target.y;
    if (dx * dx + dy * dy).sqrt() < COINCIDENT_TOL {
        return Err(CoreError::Coincident {
            x: target.x,
            y: target.y,
        });
    }
    let phi = dy.atan2(dx);
    // atan2 maps (-0.0, negative) to -pi; fold onto the (-pi, pi] branch.
    if phi <= -PI {
        Ok(phi + 2.0 * PI)
    } else {
        Ok(phi)
    }
}

/// Bessel ratio `A(kappa) = I1(kappa)/I0(kappa)`, the von Mises mean
/// resultant length.
///
/// Evaluated by backward recurrence on the ratios `I_{v+1}/I_v`, which is
/// stable and overflow-free for all positive `kappa`.
pub fn bessel_ratio(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(CoreError::Domain(format!(
            "bessel_ratio requires kappa > 0, got {kappa}"
        )));
    }
    let start = kappa as usize + 40;
    let mut ratio = 0.0;
    for nu in (0..=start).rev() {
        ratio = 1.0 / (2.0 * (nu as f64 + 1.0) / kappa + ratio);
    }
    Ok(ratio)
}

fn line_of_sight(
    sensor: [f64; 2],
    theta: ParameterPoint,
) -> Result<(f64, f64, f64)> {
    let dx = sensor[0] - theta.x;
    let dy = sensor[1] - theta.y;
    let r2 = dx * dx + dy * dy;
    if r2.sqrt() < COINCIDENT_TOL {
        return Err(CoreError::Coincident {
            x: theta.x,
            y: theta.y,
        });
    }
    Ok((dx, dy, r2))
}

/// Fisher information of the joint bearing measurement at `theta`,
/// a symmetric positive semi-definite 2x2 matrix.
///
/// It is positive definite exactly when at least two bearings differ
/// modulo pi.
pub fn fisher_information(
    config: &SensorConfiguration,
    theta: ParameterPoint,
    model: &VonMisesModel,
) -> Result<SymMatrix> {
    let ka = model.kappa_a();
    let mut f = SymMatrix::zeros(2);
    for &p in config.platforms() {
        let (dx, dy, r2) = line_of_sight(p, theta)?;
        let term = SymMatrix::outer(&[dy, -dx], ka / (r2 * r2));
        f = f.add(&term);
    }
    Ok(f)
}

/// Analytic derivative of [`fisher_information`] along one sensor
/// coordinate (`axis` = 2j for `x_j`, 2j+1 for `y_j`).
///
/// Differentiates each rank-one term of the Fisher sum in full, including
/// the range factor `1/R_j^4`; certified against central finite
/// differences rather than against any printed expression.
pub fn fisher_derivative(
    config: &SensorConfiguration,
    theta: ParameterPoint,
    model: &VonMisesModel,
    axis: usize,
) -> Result<SymMatrix> {
    if axis >= config.dim() {
        return Err(CoreError::Domain(format!(
            "axis {axis} out of range for a {}-platform configuration",
            config.count()
        )));
    }
    let ka = model.kappa_a();
    let j = axis / 2;
    let (u, v, r2) = line_of_sight(config.platform(j), theta)?;
    let r4 = r2 * r2;
    let r6 = r4 * r2;
    let base = [v * v, -u * v, -u * v, u * u];
    let numerator = if axis % 2 == 0 {
        // d/dx_j of the numerator [[v^2, -uv], [-uv, u^2]].
        [0.0, -v, -v, 2.0 * u]
    } else {
        [2.0 * v, -u, -u, 0.0]
    };
    let range_scale = if axis % 2 == 0 { u } else { v };
    let mut entries = [0.0; 4];
    for (i, e) in entries.iter_mut().enumerate() {
        *e = ka * (numerator[i] / r4 - 4.0 * range_scale * base[i] / r6);
    }
    SymMatrix::new(2, &entries)
}

const MC_CHUNK: usize = 1 << 14;

/// Monte-Carlo estimator of the Fisher information as the expected outer
/// product of the log-likelihood gradient.
///
/// Deterministic given the seed, for any worker count: samples are drawn in
/// fixed chunks, each chunk on its own counter-derived stream, and partial
/// sums are reduced in chunk order.
pub fn fisher_mc_oracle(
    config: &SensorConfiguration,
    theta: ParameterPoint,
    model: &VonMisesModel,
    sample_count: usize,
    seed: u64,
) -> Result<SymMatrix> {
    if sample_count == 0 {
        return Err(CoreError::Domain("sample_count must be >= 1".into()));
    }
    // Per-sensor bearing gradients with respect to theta:
    // d(phi_j)/d(theta) = (dy_j, -dx_j) / R_j^2.
    let mut grads = Vec::with_capacity(config.count());
    for &p in config.platforms() {
        let (dx, dy, r2) = line_of_sight(p, theta)?;
        grads.push([dy / r2, -dx / r2]);
    }
    let kappa = model.kappa();

    let n_chunks = sample_count.div_ceil(MC_CHUNK);
    let partials: Vec<[f64; 3]> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let len = MC_CHUNK.min(sample_count - chunk * MC_CHUNK);
            let mut acc = [0.0_f64; 3];
            for _ in 0..len {
                let mut gx = 0.0;
                let mut gy = 0.0;
                for g in &grads {
                    let score = kappa * model.sample_centered(&mut rng).sin();
                    gx += score * g[0];
                    gy += score * g[1];
                }
                acc[0] += gx * gx;
                acc[1] += gx * gy;
                acc[2] += gy * gy;
            }
            acc
        })
        .collect();

    let mut total = [0.0_f64; 3];
    for p in partials {
        total[0] += p[0];
        total[1] += p[1];
        total[2] += p[2];
    }
    let inv_n = 1.0 / sample_count as f64;
    SymMatrix::new(
        2,
        &[
            total[0] * inv_n,
            total[1] * inv_n,
            total[1] * inv_n,
            total[2] * inv_n,
        ],
    )
}
