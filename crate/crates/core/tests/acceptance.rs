//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured figure so a run reads as a checklist.

use std::f64::consts::PI;
use std::time::Instant;

use infogeo_core::*;

fn fig3_config() -> SensorConfiguration {
    SensorConfiguration::new(vec![[0.0, 1.0], [1.0, 0.0]]).unwrap()
}

fn fig3_prior(order: usize) -> Prior {
    let mean = ParameterPoint::new(1.0, 1.0).unwrap();
    let cov = SpdMatrix::new(SymMatrix::from_diagonal(&[0.01, 0.01])).unwrap();
    Prior::gaussian(mean, cov, order).unwrap()
}

/// Criterion 1: the Monte-Carlo estimate of the defining Fisher
/// expectation matches the closed form within 1% relative Frobenius for
/// kappa in {0.5, 2, 10} over 20 seeded geometries, within 60 s.
#[test]
fn criterion_1_fisher_oracle_equivalence() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (k_idx, kappa) in [0.5, 2.0, 10.0].into_iter().enumerate() {
        let model = VonMisesModel::new(kappa).unwrap();
        let mut rng = samples::rng(1000 + k_idx as u64);
        for trial in 0..20 {
            let (config, target) = samples::random_two_sensor_geometry(&mut rng);
            let analytic = fisher_information(&config, target, &model).unwrap();
            let estimate = fisher_mc_oracle(
                &config,
                target,
                &model,
                1_000_000,
                7 + trial as u64,
            )
            .unwrap();
            let rel = (estimate.as_matrix() - analytic.as_matrix()).norm()
                / analytic.frobenius_norm();
            assert!(
                rel < 0.01,
                "kappa {kappa} trial {trial}: relative error {rel}"
            );
            worst = worst.max(rel);
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() <= 60.0,
        "runtime {elapsed:?} exceeds 60 s"
    );
    println!(
        "ACCEPTANCE 1 PASS: Fisher Monte-Carlo vs closed form, worst 1e6-sample error {worst:.3e} (< 1e-2), runtime {elapsed:.2?}"
    );
}

/// Power-series oracle for the modified Bessel functions of order 0 and 1.
fn bessel_series(nu: usize, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(nu as i32);
    for k in 1..=nu {
        term /= k as f64;
    }
    let mut sum = term;
    for k in 1..60 {
        term *= half * half / (k as f64 * (k + nu) as f64);
        sum += term;
    }
    sum
}

/// Criterion 2: the reference geometry at the prior mean gives an
/// isotropic Fisher matrix with scalar kappa A(kappa) = 1.3955493158...
/// for kappa = 2, certified against the series oracle.
#[test]
fn criterion_2_closed_form_reference_value() {
    let model = VonMisesModel::new(2.0).unwrap();
    let f = fisher_information(&fig3_config(), ParameterPoint::new(1.0, 1.0).unwrap(), &model)
        .unwrap();
    let oracle = 2.0 * bessel_series(1, 2.0) / bessel_series(0, 2.0);
    let reference = 1.3955493158;
    for (i, j, want) in [
        (0, 0, reference),
        (1, 1, reference),
        (0, 1, 0.0),
    ] {
        assert!(
            (f.get(i, j) - want).abs() < 1e-9,
            "F[{i}][{j}] = {} vs {want}",
            f.get(i, j)
        );
    }
    assert!((f.get(0, 0) - oracle).abs() < 1e-10);
    println!(
        "ACCEPTANCE 2 PASS: isotropic Fisher scalar {:.10} matches kappa A(kappa) within 1e-9",
        f.get(0, 0)
    );
}

/// Criterion 3: analytic Fisher derivatives match central finite
/// differences within 1e-6 relative over 100 seeded geometries.
#[test]
fn criterion_3_derivative_certification() {
    let model = VonMisesModel::new(2.0).unwrap();
    let mut rng = samples::rng(2000);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let (config, target) = samples::random_two_sensor_geometry(&mut rng);
        for axis in 0..config.dim() {
            let analytic = fisher_derivative(&config, target, &model, axis).unwrap();
            let mut plus = config.flat();
            plus[axis] += h;
            let mut minus = config.flat();
            minus[axis] -= h;
            let fp = fisher_information(
                &SensorConfiguration::from_flat(&plus).unwrap(),
                target,
                &model,
            )
            .unwrap();
            let fm = fisher_information(
                &SensorConfiguration::from_flat(&minus).unwrap(),
                target,
                &model,
            )
            .unwrap();
            let fd = fp.sub(&fm).scaled(1.0 / (2.0 * h));
            let rel = (analytic.as_matrix() - fd.as_matrix()).norm()
                / analytic.frobenius_norm().max(1e-12);
            assert!(rel < 1e-6, "trial {trial} axis {axis}: {rel}");
            worst = worst.max(rel);
        }
    }
    println!(
        "ACCEPTANCE 3 PASS: analytic dF vs finite differences over 100 geometries, worst relative error {worst:.3e} (< 1e-6)"
    );
}

/// Test-local RK4 for the matrix ODE gamma'' = gamma' gamma^-1 gamma',
/// using LU inversion; shares nothing with the closed-form path.
fn rk4_matrix_ode(g0: &Matrix, v0: &Matrix, t_end: f64, dt: f64) -> Matrix {
    let deriv = |g: &Matrix, gd: &Matrix| -> (Matrix, Matrix) {
        let inv = g.clone().try_inverse().expect("gamma invertible");
        (gd.clone(), gd * inv * gd)
    };
    let n = (t_end / dt).round() as usize;
    let h = t_end / n as f64;
    let mut g = g0.clone();
    let mut gd = v0.clone();
    for _ in 0..n {
        let (k1g, k1d) = deriv(&g, &gd);
        let (k2g, k2d) = deriv(&(&g + 0.5 * h * &k1g), &(&gd + 0.5 * h * &k1d));
        let (k3g, k3d) = deriv(&(&g + 0.5 * h * &k2g), &(&gd + 0.5 * h * &k2d));
        let (k4g, k4d) = deriv(&(&g + h * &k3g), &(&gd + h * &k3d));
        g += h / 6.0 * (&k1g + 2.0 * &k2g + 2.0 * &k3g + &k4g);
        gd += h / 6.0 * (&k1d + 2.0 * &k2d + 2.0 * &k3d + &k4d);
    }
    g
}

/// Criterion 4: the closed-form metric-space geodesic satisfies its ODE
/// (finite-difference residual < 1e-6) and matches direct RK4 integration
/// within 1e-6 over the unit interval, for 20 seeded pairs, within 5 s.
#[test]
fn criterion_4_ambient_geodesic() {
    let start = Instant::now();
    let theta = ParameterPoint::new(1.0, 1.0).unwrap();
    let mut rng = samples::rng(3000);
    let mut worst_residual: f64 = 0.0;
    let mut worst_match: f64 = 0.0;
    for trial in 0..20 {
        let g0 = {
            let s = samples::random_sym(&mut rng, 2, 0.35);
            SpdMatrix::new(SymMatrix::symmetrize(&mat_exp(s.as_matrix()).unwrap())).unwrap()
        };
        let v0 = samples::random_sym(&mut rng, 2, 0.5);
        let base = ConstantMetric(g0.clone());
        let vel = ConstantTangent(v0.clone());

        let eval = |t: f64| -> Matrix {
            ambient_geodesic(&base, &vel, t)
                .metric_at(&theta)
                .unwrap()
                .as_matrix()
                .clone()
        };

        // ODE residual by central differences.
        let h = 5e-4;
        for t in [0.25, 0.75] {
            let (gp, gc, gm) = (eval(t + h), eval(t), eval(t - h));
            let second = (&gp - 2.0 * &gc + &gm) / (h * h);
            let first = (&gp - &gm) / (2.0 * h);
            let inv = gc.clone().try_inverse().unwrap();
            let residual = (&second - &first * inv * &first).norm();
            assert!(residual < 1e-6, "trial {trial}: ODE residual {residual}");
            worst_residual = worst_residual.max(residual);
        }

        // Closed form vs direct RK4 integration of the ODE.
        let endpoint = rk4_matrix_ode(g0.as_matrix(), v0.as_matrix(), 1.0, 1e-3);
        let mismatch = (eval(1.0) - endpoint).norm();
        assert!(mismatch < 1e-6, "trial {trial}: RK4 mismatch {mismatch}");
        worst_match = worst_match.max(mismatch);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() <= 5.0, "runtime {elapsed:?} exceeds 5 s");
    println!(
        "ACCEPTANCE 4 PASS: closed-form geodesic ODE residual {worst_residual:.3e} (< 1e-6), RK4 agreement {worst_match:.3e} (< 1e-6), runtime {elapsed:.2?}"
    );
}

/// Criterion 5: over 50 seeded field pairs both divergence Hessians equal
/// half the inner product and each other within 1e-4, in under 10 s.
#[test]
fn criterion_5_divergence_metric_equality() {
    let start = Instant::now();
    let grid = build_grid(&fig3_prior(9)).unwrap();
    let center = ParameterPoint::new(1.0, 1.0).unwrap();
    let mut rng = samples::rng(7);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let (g, hp) = samples::random_metric_tangent_pair(&mut rng, center);
        let half_inner = 0.5 * ambient_inner(&g, &hp, &hp, &grid).unwrap();
        let kl = divergence_hessian(Divergence::KullbackLeibler, &g, &hp, &grid).unwrap();
        let mi = divergence_hessian(Divergence::MutualInformation, &g, &hp, &grid).unwrap();
        let scale = half_inner.abs();
        let err = ((kl - half_inner).abs() / scale)
            .max((mi - half_inner).abs() / scale)
            .max((kl - mi).abs() / scale);
        assert!(err < 1e-4, "trial {trial}: relative error {err}");
        worst = worst.max(err);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() <= 10.0, "runtime {elapsed:?} exceeds 10 s");
    println!(
        "ACCEPTANCE 5 PASS: KL/MI Hessians vs half inner product over 50 pairs, worst relative error {worst:.3e} (< 1e-4), runtime {elapsed:.2?}"
    );
}

/// Numeric KL between von Mises densities with equal concentration by
/// periodic trapezoid quadrature (normalizer included by quadrature too).
fn vm_kl_numeric(kappa: f64, dphi: f64) -> f64 {
    let m = 2048;
    let mut i0 = 0.0;
    let mut acc = 0.0;
    for k in 0..m {
        let z = -PI + 2.0 * PI * k as f64 / m as f64;
        let w = (kappa * z.cos()).exp();
        i0 += w;
        acc += w * 2.0 * (z + dphi / 2.0).sin() * (dphi / 2.0).sin();
    }
    kappa * acc / i0
}

/// Criterion 6: numerically integrated KL between nearby parameter values
/// approaches half the squared Fisher distance within 2% at |delta| = 1e-3.
#[test]
fn criterion_6_kl_small_distance_law() {
    let model = VonMisesModel::new(2.0).unwrap();
    let config = fig3_config();
    let theta = ParameterPoint::new(1.0, 1.0).unwrap();
    let f = fisher_information(&config, theta, &model).unwrap();
    let mut worst: f64 = 0.0;
    for dir in [
        [1.0, 0.0],
        [0.0, 1.0],
        [0.6, -0.8],
        [-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
        [0.28, 0.96],
    ] {
        let delta = [dir[0] * 1e-3, dir[1] * 1e-3];
        let shifted = ParameterPoint::new(theta.x + delta[0], theta.y + delta[1]).unwrap();
        let mut kl = 0.0;
        for &p in config.platforms() {
            let dphi = bearing(p, theta).unwrap() - bearing(p, shifted).unwrap();
            kl += vm_kl_numeric(model.kappa(), dphi);
        }
        let quad = 0.5
            * (f.get(0, 0) * delta[0] * delta[0]
                + 2.0 * f.get(0, 1) * delta[0] * delta[1]
                + f.get(1, 1) * delta[1] * delta[1]);
        let deviation = (kl / quad - 1.0).abs();
        assert!(deviation < 0.02, "direction {dir:?}: deviation {deviation}");
        worst = worst.max(deviation);
    }
    println!(
        "ACCEPTANCE 6 PASS: KL / (half squared Fisher distance) within {worst:.3e} of 1 (< 2e-2) at |delta| = 1e-3"
    );
}

/// Independent conformal-geodesic oracle with hand-derived symbols.
fn conformal_oracle(start: &GeodesicState, horizon: f64, dt: f64) -> Vec<f64> {
    let accel =
        |u: &[f64]| -> [f64; 2] { [-(u[0] * u[0]) + u[1] * u[1], -2.0 * u[0] * u[1]] };
    let mut s = [start.sigma[0], start.sigma[1]];
    let mut u = [start.velocity[0], start.velocity[1]];
    let n = (horizon / dt).round() as usize;
    let h = horizon / n as f64;
    for _ in 0..n {
        let a1 = accel(&u);
        let u2 = [u[0] + 0.5 * h * a1[0], u[1] + 0.5 * h * a1[1]];
        let a2 = accel(&u2);
        let u3 = [u[0] + 0.5 * h * a2[0], u[1] + 0.5 * h * a2[1]];
        let a3 = accel(&u3);
        let u4 = [u[0] + h * a3[0], u[1] + h * a3[1]];
        let a4 = accel(&u4);
        for i in 0..2 {
            s[i] += h / 6.0 * (u[i] + 2.0 * u2[i] + 2.0 * u3[i] + u4[i]);
            u[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
    }
    s.to_vec()
}

/// Criterion 7: configuration-space geodesics check out on the injectable
/// toy metric and on the reference scenario: oracle agreement < 1e-6, the
/// two Christoffel constructions agree < 1e-8, and the metric speed drifts
/// < 1e-3 over a unit horizon.
#[test]
fn criterion_7_configuration_geodesics() {
    // Toy conformal metric vs the independent tiny-step oracle.
    let start = GeodesicState::new(vec![0.0, 0.0], vec![0.3, 0.4]);
    let path = integrate_geodesic(&ConformalMetric, start.clone(), 1.0, 1e-3).unwrap();
    let end = &path.last().unwrap().1;
    let oracle = conformal_oracle(&start, 1.0, 1e-5);
    let toy_err: f64 = (0..2)
        .map(|i| (end.sigma[i] - oracle[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(toy_err < 1e-6, "conformal endpoint error {toy_err}");

    // Christoffel constructions on the sensor manifold.
    let model = VonMisesModel::new(2.0).unwrap();
    let grid = build_grid(&fig3_prior(9)).unwrap();
    let manifold = SensorManifold::new(&model, &grid, 2, false);
    let sigma = fig3_config().flat();
    let a = christoffel(&manifold, &sigma).unwrap();
    let b = christoffel_geodesic_rhs(&manifold, &sigma).unwrap();
    let mut christoffel_diff: f64 = 0.0;
    for l in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                christoffel_diff =
                    christoffel_diff.max((a.get(l, i, j) - b.get(l, i, j)).abs());
            }
        }
    }
    assert!(christoffel_diff < 1e-8, "constructions differ by {christoffel_diff}");

    // Metric-speed conservation over a unit horizon on the reference
    // scenario, with the planner's own initial direction.
    let q = induced_metric(&fig3_config(), &model, &grid, false).unwrap();
    let grad = information_gradient(&fig3_config(), &model, &grid, false).unwrap();
    let direction = natural_gradient_direction(&q, &grad, 0.01).unwrap();
    let start = GeodesicState::new(sigma, direction);
    let s0 = metric_speed(&manifold, &start).unwrap();
    let path = integrate_geodesic(&manifold, start, 1.0, 1e-3).unwrap();
    let s1 = metric_speed(&manifold, &path.last().unwrap().1).unwrap();
    let drift = (s1 - s0).abs() / s0;
    assert!(drift < 1e-3, "metric speed drift {drift}");

    println!(
        "ACCEPTANCE 7 PASS: toy-geodesic oracle error {toy_err:.3e} (< 1e-6), Christoffel agreement {christoffel_diff:.3e} (< 1e-8), speed drift {drift:.3e} (< 1e-3)"
    );
}
