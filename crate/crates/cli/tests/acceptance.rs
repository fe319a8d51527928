//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_inversion::dataio::{builtin, load_run, BUILTIN_LABELS};
use spectral_inversion::optimize::{maximize, SearchOptions};
use spectral_inversion::{
    build_curve, coulomb_ground_curve, energy_curve, energy_from_k, energy_from_kinetic_potential, fit_coulomb,
    hulthen_equivalent, invert, iterate_once, k_function_from_shape, kinetic_potential_from_curve, solve_ground_state,
    solve_state, CoulombParams, Config, Curve, EigenProblem, KFun, Shape, SolverOptions,
};

type Outcome = Result<String, String>;

fn geom(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn ground(shape: &Shape, v: f64) -> f64 {
    solve_ground_state(&EigenProblem::new(shape, v), &SolverOptions::default()).unwrap().energy
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn solver_oracles() -> Outcome {
    let coulomb = [
        (1.0, 2.0, 1.0, 0),
        (1.0, 0.5, 1.0, 0),
        (0.2, 3.0, 1.0, 0),
        (1.0, 10.0, 1.0, 0),
        (0.7, 1.0, 2.0, 0),
        (1.0, 2.0, 1.0, 1),
        (1.0, 4.0, 1.0, 2),
        (0.3, 5.0, 0.5, 1),
        (2.0, 1.5, 1.0, 3),
        (1.0, 0.1, 1.0, 0),
    ];
    let hulthen = [
        (1.0, 1.0, 4.0, 1.0, 0),
        (1.0, 1.0, 1.5, 1.0, 0),
        (0.2, 0.2, 2.0, 1.0, 0),
        (0.2, 0.2, 40.0, 1.0, 0),
        (1.0, 1.0, 9.0, 1.0, 1),
        (1.0, 0.5, 10.0, 1.0, 2),
        (2.0, 1.0, 3.0, 0.5, 0),
        (0.5, 2.0, 20.0, 2.0, 0),
        (1.0, 0.3, 5.0, 1.0, 3),
        (3.0, 1.0, 2.0, 1.0, 1),
    ];
    let mut cases = Vec::new();
    for (alpha, v, m, n) in coulomb {
        let k = (n + 1) as f64;
        cases.push((Shape::coulomb(alpha).unwrap(), v, m, n, -m * (v * alpha).powi(2) / (4.0 * k * k)));
    }
    for (alpha, beta, v, m, n) in hulthen {
        let k2 = ((n + 1) as f64).powi(2);
        let want = -(m * v * alpha - beta * beta * k2).powi(2) / (4.0 * m * beta * beta * k2);
        cases.push((Shape::hulthen(alpha, beta).unwrap(), v, m, n, want));
    }
    let mut worst = 0.0f64;
    for (shape, v, m, n, want) in &cases {
        let problem = EigenProblem::new(shape, *v).with_mass(*m).with_state(*n, 0);
        let got = solve_state(&problem, &SolverOptions::default()).map_err(|e| format!("{shape} v={v}: {e}"))?;
        worst = worst.max(((got.energy - want) / want).abs());
    }
    check(worst <= 1e-6, format!("{} combinations, worst relative error {worst:.2e}", cases.len()))
}

fn k_fixture() -> Outcome {
    let r_grid = geom(0.5, 5.0, 25);
    let couplings = geom(0.2, 40.0, 60);
    let mut worst = 0.0f64;
    for alpha in [0.2, 1.0] {
        let k = k_function_from_shape(&Shape::coulomb(alpha).unwrap(), 1.0, &r_grid, &couplings, &SolverOptions::default())
            .map_err(|e| e.to_string())?;
        if k.boundary_flags().iter().any(|&b| b) {
            return Err(format!("alpha={alpha}: a maximizer reached the coupling boundary"));
        }
        for &(r, kr) in k.samples() {
            worst = worst.max((kr * r * r - 1.0).abs());
        }
    }
    check(worst <= 1e-3, format!("worst relative deviation from 1/r^2 {worst:.2e}"))
}

fn one_step() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    let mut drawn = Vec::new();
    for _ in 0..3 {
        let (a, b, v0): (f64, f64, f64) =
            (rng.random_range(0.05..1.0), rng.random_range(-0.1..0.1), rng.random_range(0.0..40.0));
        let start = (4.0 * b / (a * a)).max(0.0) + 0.5;
        let curve = coulomb_ground_curve(&CoulombParams::new(a, b, v0).unwrap(), (start, start + 12.0)).unwrap();
        let config = Config { seed: Some(Shape::coulomb(0.2).unwrap()), ..Default::default() };
        let (next, _, _) = iterate_once(&curve, config.seed.as_ref().unwrap(), &config).map_err(|e| e.to_string())?;
        let Shape::Tabulated(t) = &next else { return Err("iterate is not tabulated".into()) };
        for (&r, &f) in t.radii().iter().zip(t.values()) {
            worst = worst.max((f - (-a / r + b)).abs());
        }
        drawn.push(format!("({a:.3}, {b:.3}, {v0:.2})"));
    }
    check(worst <= 1e-6, format!("{{a, b, v0}} = {}; max deviation {worst:.2e}", drawn.join(" ")))
}

const PUBLISHED_FITS: [(&str, f64, f64, f64); 5] = [
    ("S1", 0.0654431, -0.075782, 0.539623),
    ("S2", 0.0233604, -0.046011, 1.948014),
    ("P1", 0.1589268, 0.0, 16.841319),
    ("P2", 0.1432232, 0.012167, 30.76632),
    ("V", 0.3773324, -0.086117, 0.181089),
];

/// Last published digit of `a`, `b` and `v0` in each row.
const PUBLISHED_DIGITS: [(f64, f64, f64); 5] =
    [(1e-7, 1e-6, 1e-6), (1e-7, 1e-6, 1e-6), (1e-7, 0.0, 1e-6), (1e-7, 1e-6, 1e-5), (1e-7, 1e-6, 1e-6)];

fn published_fits() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for ((label, a, b, v0), (da, db, dv0)) in PUBLISHED_FITS.into_iter().zip(PUBLISHED_DIGITS) {
        let data = builtin(label).unwrap();
        let fit = fit_coulomb(data.points(), 1.0).map_err(|e| format!("{label}: {e}"))?;
        let published = CoulombParams::new(a, b, v0).unwrap();
        let reference = data.points().iter().map(|&(v, e)| (published.energy(v) - e).abs()).fold(0.0, f64::max);
        // residual change the rounding of the published digits can account for
        let rounding = data
            .points()
            .iter()
            .map(|&(v, _)| {
                let u = v - v0;
                0.5 * (a * u * u / 2.0 * da + u.abs() * db + (a * a * u / 2.0 - b).abs() * dv0)
            })
            .fold(0.0, f64::max);
        let p = fit.params;
        let fine = fit.max_residual <= reference + rounding
            && (p.a - a).abs() / a <= 0.2
            && (p.v0 - v0).abs() <= 0.3f64.max(0.02 * v0.abs())
            && (label != "P1" || (p.b == 0.0 && fit.degenerate));
        ok &= fine;
        notes.push(format!(
            "{label} {:.9} vs {reference:.9} (+{rounding:.1e}){}",
            fit.max_residual,
            if fine { "" } else { " (!)" }
        ));
    }
    check(ok, format!("max residual, fitted vs published (+ rounding of published digits): {}", notes.join(", ")))
}

fn p2_model_numbers() -> Outcome {
    let (_, a, b, v0) = PUBLISHED_FITS[3];
    let p = CoulombParams::new(a, b, v0).unwrap();
    let u_c = p.alternate().v0 - p.v0;
    let peak = maximize(|u| p.energy(v0 + u), 0.0, u_c, &SearchOptions::default()).value;
    let ok = (u_c - 2.3726).abs() < 5e-5 && format!("{peak:.1e}") == "7.2e-3";
    check(ok, format!("u_c = {u_c:.5}, max F = {peak:.5}"))
}

fn pipeline() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    let argv = ["specinv", "invert", "--dataset", "P2", "--seed", "coulomb:0.2", "--iterations", "3", "--out"];
    let argv = argv.iter().map(|s| s.to_string()).chain([out.display().to_string()]);
    let code = specinv_cli::run(argv, &mut stdout, &mut stderr);
    if code != 0 {
        return Err(String::from_utf8_lossy(&stderr).trim().to_string());
    }
    let stored = load_run(&out).map_err(|e| e.to_string())?;
    let v0 = stored.manifest.v0.ok_or("run has no critical coupling")?;
    let f3 = stored.iterates.get(3).ok_or("fewer than 3 iterates")?;
    let u: Vec<f64> = stored.data.points().iter().map(|&(v, _)| v - v0).collect();
    let curve = energy_curve(f3, &u, 1.0, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let worst = curve
        .samples()
        .iter()
        .zip(stored.data.points())
        .map(|(&(_, f), &(_, e))| (f - e).abs())
        .fold(0.0, f64::max);
    check(worst <= 0.01, format!("max |F3 - F| at the data = {worst:.4}"))
}

fn property_suites() -> Outcome {
    let mut failed = Vec::new();

    let curve = Curve::coulomb_model(0.5, -0.05, 1.0, 0.0, (1.0, 12.0), 10).unwrap();
    let kp = kinetic_potential_from_curve(&curve, &geom(0.0625, 9.0, 300)).unwrap();
    let legendre = [2.0, 5.0, 10.0]
        .iter()
        .map(|&v| ((energy_from_kinetic_potential(&kp, v).unwrap().value - curve.eval(v)) / curve.eval(v)).abs())
        .fold(0.0, f64::max);
    if legendre > 1e-4 {
        failed.push(format!("Legendre {legendre:.1e}"));
    }

    let data: Vec<(f64, f64)> = geom(0.2, 40.0, 80).iter().map(|&v| (v, -v * v / 4.0)).collect();
    let curve = build_curve(&data, None).unwrap();
    let kp = kinetic_potential_from_curve(&curve, &geom(0.02, 350.0, 600)).unwrap();
    let mut convexity = 0.0f64;
    for v in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let s = energy_from_kinetic_potential(&kp, v).unwrap().arg;
        let h = 1e-2 * v;
        let f2 = (curve.eval(v + h) - 2.0 * curve.eval(v) + curve.eval(v - h)) / (h * h);
        let h = 2e-2 * s;
        let fbar2 = (kp.eval(s + h) - 2.0 * kp.eval(s) + kp.eval(s - h)) / (h * h);
        convexity = convexity.max((f2 * fbar2 * v.powi(3) + 1.0).abs());
    }
    if convexity > 0.05 {
        failed.push(format!("convexity {convexity:.3}"));
    }

    let base = Shape::hulthen(1.0, 0.5).unwrap();
    let (r_grid, couplings, opts) = (geom(0.5, 5.0, 20), geom(0.14, 6.0, 120), SolverOptions::default());
    let k0 = k_function_from_shape(&base, 1.0, &r_grid, &couplings, &opts).unwrap();
    let mut affine = 0.0f64;
    for (scale, shift) in [(0.5, -1.0), (0.5, 1.0), (2.0, -1.0), (2.0, 1.0)] {
        let k = k_function_from_shape(&base.affine_transform(scale, shift).unwrap(), 1.0, &r_grid, &couplings, &opts)
            .unwrap();
        for (&(_, want), &(_, got)) in k0.samples().iter().zip(k.samples()) {
            affine = affine.max(((got - want) / want).abs());
        }
    }
    if affine > 1e-3 {
        failed.push(format!("K invariance {affine:.1e}"));
    }

    let r = geom(0.01, 400.0, 3000);
    let inverse_square = KFun::from_samples(r.iter().map(|&r| (r, 1.0 / (r * r))).collect()).unwrap();
    let root = Shape::power(1.0, 0.5).unwrap();
    let lower = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .all(|&v| energy_from_k(&root, &inverse_square, v).unwrap().value < ground(&root, v));
    let k_root = k_function_from_shape(&root, 1.0, &geom(0.1, 40.0, 80), &geom(0.01, 200.0, 80), &opts).unwrap();
    let coulomb = Shape::coulomb(1.0).unwrap();
    let upper = [0.5, 1.0, 2.0].iter().all(|&v| energy_from_k(&coulomb, &k_root, v).unwrap().value > -v * v / 4.0);
    if !(lower && upper) {
        failed.push(format!("envelope lower={lower} upper={upper}"));
    }

    let mut equivalence = 0.0f64;
    for (_, a, b, v0) in PUBLISHED_FITS.iter().filter(|t| t.2 != 0.0) {
        let p = CoulombParams::new(*a, *b, *v0).unwrap();
        let h = hulthen_equivalent(&p).unwrap();
        for u in [0.5, 2.0, 6.0] {
            equivalence = equivalence.max((ground(&h.shape(), v0 + u) + h.energy_offset() - p.energy(v0 + u)).abs());
        }
    }
    if equivalence > 1e-5 {
        failed.push(format!("Hulthen equivalence {equivalence:.1e}"));
    }

    let detail = format!(
        "Legendre {legendre:.1e}, convexity {convexity:.3}, K invariance {affine:.1e}, envelope signs {}, equivalence {equivalence:.1e}",
        lower && upper
    );
    check(failed.is_empty(), if failed.is_empty() { detail } else { failed.join("; ") })
}

fn self_inversion() -> Outcome {
    let (alpha, beta) = (0.2, 0.2);
    let truth = Shape::hulthen(alpha, beta).unwrap();
    let data: Vec<(f64, f64)> = geom(1.03, 40.0, 16)
        .into_iter()
        .map(|w| {
            let v = w * beta * beta / alpha;
            (v, ground(&truth, v))
        })
        .collect();
    let curve = build_curve(&data, None).map_err(|e| e.to_string())?;
    let config = Config {
        seed: Some(Shape::coulomb(0.5).unwrap()),
        r_grid: Some(geom(0.05, 20.0, 80)),
        max_iterations: 10,
        ..Default::default()
    };
    let run = invert(&curve, &config).map_err(|e| e.to_string())?;
    let f = run.final_shape();
    let worst = (0..=50)
        .map(|i| 0.5 + 2.5 * i as f64 / 50.0)
        .map(|r| (f.value(r) / truth.value(r) - 1.0).abs())
        .fold(0.0, f64::max);
    check(worst <= 0.02, format!("{} iterates, worst relative error on [0.5, 3] {worst:.4}", run.iterates.len() - 1))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("solver matches Coulomb and Hulthen closed forms", solver_oracles),
        ("Coulomb K-function is 1/r^2 for any strength", k_fixture),
        ("one-step inversion of model curves", one_step),
        ("published model fits", published_fits),
        ("P2 model threshold and peak", p2_model_numbers),
        ("P2 pipeline, 3 iterations from -0.2/r", pipeline),
        ("property suites", property_suites),
        ("Hulthen self-inversion", self_inversion),
    ];
    assert_eq!(BUILTIN_LABELS.len(), PUBLISHED_FITS.len());
    let mut failures = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(criterion).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {}: {tag}: {name}: {detail} [{:.1}s]", i + 1, start.elapsed().as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
