//! Seeded sample generators shared by the verification subcommands,
//! the acceptance suite and the benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ambient::{AffineTangent, ExpAffineMetric};
use crate::linalg::SymMatrix;
use crate::sensor::{ParameterPoint, SensorConfiguration};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric matrix with entries uniform in `[-scale, scale]`.
pub fn random_sym(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SymMatrix {
    let entries: Vec<f64> = (0..dim * dim)
        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale)
        .collect();
    SymMatrix::new(dim, &entries).expect("supported dimension")
}

/// Random smooth SPD metric field and symmetric tangent field centered on
/// `center`; the exponential construction keeps the metric positive
/// definite over the whole prior support.
pub fn random_metric_tangent_pair(
    rng: &mut ChaCha8Rng,
    center: ParameterPoint,
) -> (ExpAffineMetric, AffineTangent) {
    let metric = ExpAffineMetric {
        center,
        s0: random_sym(rng, 2, 0.5),
        sx: random_sym(rng, 2, 0.5),
        sy: random_sym(rng, 2, 0.5),
    };
    let tangent = AffineTangent {
        center,
        h0: random_sym(rng, 2, 0.5),
        hx: random_sym(rng, 2, 0.5),
        hy: random_sym(rng, 2, 0.5),
    };
    (metric, tangent)
}

/// Two-platform geometry with the target near the origin and every range
/// bounded away from zero, so Fisher matrices stay well conditioned.
pub fn random_two_sensor_geometry(
    rng: &mut ChaCha8Rng,
) -> (SensorConfiguration, ParameterPoint) {
    let target = ParameterPoint::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        .expect("finite");
    let mut platforms = Vec::with_capacity(2);
    while platforms.len() < 2 {
        let p = [
            4.0 * rng.random::<f64>() - 2.0,
            4.0 * rng.random::<f64>() - 2.0,
        ];
        let d = ((p[0] - target.x).powi(2) + (p[1] - target.y).powi(2)).sqrt();
        if d > 0.3 {
            platforms.push(p);
        }
    }
    (
        SensorConfiguration::new(platforms).expect("valid platforms"),
        target,
    )
}
