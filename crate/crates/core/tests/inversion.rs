use proptest::prelude::*;
use spectral_inversion::dataio::{builtin, BUILTIN_LABELS};
use spectral_inversion::{
    build_curve, coulomb_ground_curve, estimate_critical_coupling, invert, iterate_once, CoulombParams, Config, Curve,
    Shape,
};

fn geom(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn seeded(alpha: f64) -> Config {
    Config { seed: Some(Shape::coulomb(alpha).unwrap()), ..Default::default() }
}

/// Model curve on a u-window starting just above the model's own zero.
fn model_curve(a: f64, b: f64, v0: f64) -> Curve {
    let start = (4.0 * b / (a * a)).max(0.0) + 0.5;
    coulomb_ground_curve(&CoulombParams::new(a, b, v0).unwrap(), (start, start + 12.0)).unwrap()
}

fn one_step_deviation(curve: &Curve, alpha: f64, a: f64, b: f64) -> f64 {
    let config = seeded(alpha);
    let (next, _, _) = iterate_once(curve, config.seed.as_ref().unwrap(), &config).unwrap();
    let Shape::Tabulated(t) = &next else { panic!("tabulated iterate expected") };
    t.radii()
        .iter()
        .zip(t.values())
        .map(|(&r, &f)| (f - (-a / r + b)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn one_step_exactness_for_each_seed_strength() {
    let (a, b, v0) = (0.1432232, 0.012167, 30.76632);
    let curve = model_curve(a, b, v0);
    for alpha in [0.1, 0.2, 1.0] {
        let dev = one_step_deviation(&curve, alpha, a, b);
        assert!(dev <= 1e-6, "alpha={alpha}: {dev}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn one_step_exactness_for_admissible_models(
        a in 0.05f64..1.0,
        b in -0.1f64..0.1,
        v0 in 0.0f64..40.0,
        alpha in 0.1f64..1.0,
    ) {
        let dev = one_step_deviation(&model_curve(a, b, v0), alpha, a, b);
        prop_assert!(dev <= 1e-6, "a={} b={} v0={} alpha={}: {}", a, b, v0, alpha, dev);
    }
}

#[test]
fn first_k_function_does_not_depend_on_seed_strength() {
    let curve = model_curve(0.3, -0.05, 2.0);
    let ks: Vec<_> = [0.2, 1.0]
        .iter()
        .map(|&alpha| {
            let config = seeded(alpha);
            iterate_once(&curve, config.seed.as_ref().unwrap(), &config).unwrap().1
        })
        .collect();
    let mut compared = 0;
    for ((&(r, k1), &(_, k2)), (&f1, &f2)) in ks[0]
        .samples()
        .iter()
        .zip(ks[1].samples())
        .zip(ks[0].boundary_flags().iter().zip(ks[1].boundary_flags()))
    {
        if !f1 && !f2 {
            assert!(((k1 - k2) / k1).abs() <= 1e-6, "r={r}: {k1} vs {k2}");
            compared += 1;
        }
    }
    assert!(compared >= 10);
}

fn hulthen_curve(alpha: f64, beta: f64) -> Curve {
    let data: Vec<(f64, f64)> = geom(1.03, 40.0, 16)
        .into_iter()
        .map(|w| {
            let v = w * beta * beta / alpha;
            (v, -(v * alpha - beta * beta).powi(2) / (4.0 * beta * beta))
        })
        .collect();
    build_curve(&data, None).unwrap()
}

#[test]
fn true_shape_is_a_fixed_point() {
    let shape = Shape::hulthen(0.2, 0.2).unwrap();
    let config = Config { r_grid: Some(geom(0.05, 20.0, 60)), ..Default::default() };
    let (next, _, residual) = iterate_once(&hulthen_curve(0.2, 0.2), &shape, &config).unwrap();
    assert!(residual < 1e-3, "{residual}");
    let Shape::Tabulated(t) = &next else { panic!("tabulated iterate expected") };
    for (&r, &f) in t.radii().iter().zip(t.values()) {
        if (0.5..=3.0).contains(&r) {
            assert!((f / shape.value(r) - 1.0).abs() < 0.01, "r={r}: {f}");
        }
    }
}

#[test]
fn different_coulomb_seeds_reach_the_same_shape() {
    let curve = hulthen_curve(0.2, 0.2);
    let r_grid = geom(0.05, 20.0, 80);
    let runs: Vec<_> = [0.5, 2.0]
        .iter()
        .map(|&alpha| {
            let config = Config { r_grid: Some(r_grid.clone()), max_iterations: 3, ..seeded(alpha) };
            (invert(&curve, &config).unwrap(), config.convergence_tol)
        })
        .collect();
    let (lo, hi) = *runs[0].0.trust_regions.last().unwrap();
    let tol = 2.0 * runs[0].1;
    for r in r_grid.into_iter().filter(|r| (lo..=hi).contains(r)) {
        let (f1, f2) = (runs[0].0.final_shape().value(r), runs[1].0.final_shape().value(r));
        assert!((f1 - f2).abs() <= tol, "r={r}: {f1} vs {f2}");
    }
}

#[test]
fn residuals_do_not_grow_on_embedded_datasets() {
    for label in BUILTIN_LABELS {
        let data = builtin(label).unwrap();
        let v0 = estimate_critical_coupling(data.points()).unwrap();
        let curve = build_curve(data.points(), Some(v0)).unwrap();
        let run = invert(&curve, &Config { max_iterations: 3, ..Default::default() }).unwrap();
        let h = &run.residual_history;
        assert!(h.len() >= 2, "{label}: {:?}", run.abort_reason);
        assert!(h[1] < h[0], "{label}: first iterate did not improve on the seed: {h:?}");
        for n in 2..h.len() {
            if h[n] > h[n - 1] + run.noise_floor {
                assert_eq!(n, h.len() - 1, "{label}: run continued after residual grew: {h:?}");
                assert!(!run.converged && run.abort_reason.is_some(), "{label}: growth not reported");
            }
        }
        if run.abort_reason.is_some() {
            assert!(!run.converged, "{label}");
        }
    }
}
