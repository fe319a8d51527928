//! Iterative reconstruction of a potential shape from its spectral curve.
//!
//! Each step solves the current shape's curve `F^[n]`, forms its K-function
//! `K^[n](r) = max_x [F^[n](x) - x f^[n](r)]`, and takes the next shape as
//! `f^[n+1](r) = max_x [F(x) - K^[n](r)] / x` over the window where the
//! target curve `F` is known. Iterates are tabulated on the radii where
//! both maxima are interior (the trust region) and continued by `c/r + d`
//! outside it.

use rayon::prelude::*;

use crate::eigensolver::{solve_ground_state, EigenProblem, SolverOptions};
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::models;
use crate::optimize::{maximize, Extremum, SearchOptions};
use crate::potentials::{PotentialShape, TabulatedShape};
use crate::scalar::{lit, Real};
use crate::spectral::{KFunction, SpectralCurve};

#[derive(Clone, Debug)]
pub struct InversionConfig<T> {
    /// Starting shape; by default `-α/r` with `-α²x²/4` through the deepest point.
    pub seed: Option<PotentialShape<T>>,
    /// Radii of the tabulated iterates; by default 96 geometric points
    /// spanning twice the range the fitted Coulomb model maps the data onto.
    pub r_grid: Option<Vec<T>>,
    /// Couplings (working variable) where `F^[n]` is solved; by default the
    /// data abscissae and their midpoints.
    pub coupling_grid: Option<Vec<T>>,
    pub max_iterations: usize,
    /// Sup-norm change between successive iterates on the trust region.
    pub convergence_tol: T,
    /// Largest deviation `|F^[n] - F|` at the data accepted as converged.
    pub residual_tol: T,
    pub mass: T,
    /// Critical coupling the curve is shifted by, if any.
    pub v0: Option<T>,
    pub solver: SolverOptions<T>,
    /// Largest factor by which the K-step may extend the couplings above the data.
    pub extension_cap: T,
    /// The same below the data, where weakly bound states make solves costly.
    pub lower_extension_cap: T,
    /// Factor by which the target curve is continued beyond its samples with
    /// the fitted Coulomb model; `1` inverts the samples' range only.
    pub extrapolation: T,
}

impl<T: Real> Default for InversionConfig<T> {
    fn default() -> Self {
        Self {
            seed: None,
            r_grid: None,
            coupling_grid: None,
            max_iterations: 8,
            convergence_tol: lit(1e-3),
            residual_tol: lit(1e-2),
            mass: T::one(),
            v0: None,
            solver: SolverOptions::default(),
            extension_cap: lit(32.0),
            lower_extension_cap: lit(4.0),
            extrapolation: lit(4.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InversionRun<T> {
    /// `f^[0]` (the seed) followed by each computed iterate.
    pub iterates: Vec<PotentialShape<T>>,
    /// `K^[n]` of every iterate that was stepped from.
    pub k_functions: Vec<KFunction<T>>,
    /// `max |F^[n](x_j) - F(x_j)|` over the data, one entry per solved iterate.
    pub residual_history: Vec<T>,
    /// Sup-norm change of each new iterate on its trust region.
    pub changes: Vec<T>,
    /// Radial range over which each new iterate is determined by the data.
    pub trust_regions: Vec<(T, T)>,
    pub converged: bool,
    pub abort_reason: Option<String>,
    pub warnings: Vec<String>,
    /// Curve of the last solved iterate on the coupling grid.
    pub final_curve: Option<SpectralCurve<T>>,
    pub v0: Option<T>,
    pub r_grid: Vec<T>,
    pub coupling_grid: Vec<T>,
    /// Residual increases up to this size do not count as violations.
    pub noise_floor: T,
}

impl<T: Real> InversionRun<T> {
    pub fn final_shape(&self) -> &PotentialShape<T> {
        self.iterates.last().expect("run holds at least the seed")
    }

    pub fn final_residual(&self) -> Option<T> {
        self.residual_history.last().copied()
    }
}

/// Critical coupling from `(v, E)` data: the interpolant's root when the
/// data change sign, otherwise the canonical root of the Coulomb-model fit.
pub fn estimate_critical_coupling<T: Real>(data: &[(T, T)]) -> Result<T> {
    if data.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: data.len() });
    }
    if data.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::NonMonotoneAbscissae);
    }
    let (v, e): (Vec<T>, Vec<T>) = data.iter().copied().unzip();
    if let Some(root) = MonotoneCubic::new(v, e)?.root() {
        return Ok(root);
    }
    models::fit_coulomb(data, T::one())
        .map(|r| r.params.v0)
        .map_err(|e| Error::NoRoot(format!("no sign change in the data and the model fit failed: {e}")))
}

/// Resolved configuration for one curve.
struct Plan<T> {
    curve: SpectralCurve<T>,
    window: (T, T),
    data_x: Vec<T>,
    coupling_grid: Vec<T>,
    r_grid: Vec<T>,
    seed: PotentialShape<T>,
}

fn geometric<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(T::from_count(i) / T::from_count(n - 1)))
        .collect()
}

fn plan<T: Real>(curve: &SpectralCurve<T>, config: &InversionConfig<T>) -> Result<Plan<T>> {
    if let (Some(want), shift) = (config.v0, curve.shift()) {
        if want != T::zero() && shift != Some(want) {
            return Err(Error::InvalidParameter(format!(
                "curve must be stored in u = v - {want} before inversion"
            )));
        }
    }
    let curve = extend(curve, config);
    let window = curve.positive_window()?;
    let data_x: Vec<T> = curve
        .samples()
        .iter()
        .map(|s| s.0)
        .filter(|&x| x >= window.0 && x <= window.1)
        .collect();
    if data_x.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: data_x.len() });
    }

    let coupling_grid = match &config.coupling_grid {
        Some(g) => {
            if g.is_empty() {
                return Err(Error::InvalidGrid("coupling grid is empty".into()));
            }
            if g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::NonMonotoneAbscissae);
            }
            if g[0] < window.0 || g[g.len() - 1] > window.1 {
                return Err(Error::InvalidGrid(format!(
                    "couplings must lie in the curve window [{}, {}]",
                    window.0, window.1
                )));
            }
            let mut g = g.clone();
            g.extend(data_x.iter().copied());
            g.sort_by(|a, b| a.partial_cmp(b).unwrap());
            g.dedup();
            g
        }
        None => {
            let mut g = data_x.clone();
            g.extend(data_x.windows(2).map(|w| (w[0] + w[1]) / lit(2.0)));
            g.sort_by(|a, b| a.partial_cmp(b).unwrap());
            g
        }
    };

    let (x_deep, f_deep) = curve
        .samples()
        .iter()
        .copied()
        .filter(|s| s.0 > T::zero())
        .fold((T::zero(), T::zero()), |best, s| if s.1 < best.1 { s } else { best });
    let seed = match &config.seed {
        Some(s) => s.clone(),
        None => {
            if !(f_deep < T::zero()) {
                return Err(Error::Inversion("curve has no bound energies to scale the seed".into()));
            }
            PotentialShape::coulomb(lit::<T>(2.0) * (-f_deep / config.mass).sqrt() / x_deep)?
        }
    };

    let r_grid = match &config.r_grid {
        Some(r) => {
            if r.len() < 2 {
                return Err(Error::TooFewPoints { needed: 2, got: r.len() });
            }
            if r[0] <= T::zero() {
                return Err(Error::InvalidGrid("radii must be positive".into()));
            }
            if r.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::NonMonotoneAbscissae);
            }
            r.clone()
        }
        None => {
            let samples: Vec<(T, T)> = curve.samples().iter().copied().filter(|s| s.0 > T::zero()).collect();
            let a = models::fit_coulomb(&samples, config.mass)
                .map(|r| r.params.a)
                .unwrap_or_else(|_| lit::<T>(2.0) * (-f_deep / config.mass).sqrt() / x_deep);
            let two = lit::<T>(2.0);
            let scale = two / (config.mass * a);
            geometric(scale / (two * window.1), two * scale / window.0, 96)
        }
    };

    Ok(Plan { curve, window, data_x, coupling_grid, r_grid, seed })
}

/// The target curve continued by its Coulomb-model fit, when that applies.
///
/// Below the samples the continuation stops short of the model's critical
/// coupling, approaching it by the same factor as the upper end grows.
fn extend<T: Real>(curve: &SpectralCurve<T>, config: &InversionConfig<T>) -> SpectralCurve<T> {
    let factor = config.extrapolation;
    if curve.is_closed_form() || curve.is_extrapolated() || !(factor > T::one()) {
        return curve.clone();
    }
    let shift = curve.shift().unwrap_or_else(T::zero);
    let data: Vec<(T, T)> = curve.samples().iter().map(|&(x, e)| (x + shift, e)).collect();
    let Ok(fit) = models::fit_coulomb(&data, config.mass) else {
        return curve.clone();
    };
    let (lo, hi) = curve.sample_domain();
    let floor = (fit.params.v0 - shift).max(T::zero());
    if floor >= lo {
        return curve.clone();
    }
    let domain = (floor + (lo - floor) / factor, hi * factor);
    curve.clone().extrapolated(&fit.params, domain).unwrap_or_else(|_| curve.clone())
}

/// Ground-state energies of `shape` at each coupling, with the largest error estimate.
fn solve_at<T: Real>(
    shape: &PotentialShape<T>,
    couplings: &[T],
    mass: T,
    opts: &SolverOptions<T>,
) -> Vec<Result<(T, T)>> {
    couplings
        .par_iter()
        .map(|&x| {
            solve_ground_state(&EigenProblem::new(shape, x).with_mass(mass), opts)
                .map(|r| (r.energy, r.estimated_error))
        })
        .collect()
}

struct Solved<T> {
    samples: Vec<(T, T)>,
    max_error: T,
    residual: T,
    unbound: usize,
}

/// Couplings below the iterate's own critical coupling sit at threshold: they
/// count as `E = 0` in the residual and are left out of the solved samples.
fn solve_iterate<T: Real>(shape: &PotentialShape<T>, plan: &Plan<T>, config: &InversionConfig<T>) -> Result<Solved<T>> {
    let curve = &plan.curve;
    let mut samples = Vec::with_capacity(plan.coupling_grid.len());
    let mut max_error = T::zero();
    let mut residual = T::zero();
    let mut unbound = 0;
    for (&x, res) in plan.coupling_grid.iter().zip(solve_at(shape, &plan.coupling_grid, config.mass, &config.solver)) {
        let e = match res {
            Ok((e, err)) => {
                samples.push((x, e));
                max_error = max_error.max(err);
                e
            }
            Err(Error::NoBoundState { .. }) if samples.is_empty() => {
                unbound += 1;
                T::zero()
            }
            Err(e) => return Err(e),
        };
        if plan.data_x.contains(&x) {
            residual = residual.max((e - curve.eval(x)).abs());
        }
    }
    if samples.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: samples.len() });
    }
    Ok(Solved { samples, max_error, residual, unbound })
}

struct Step<T> {
    next: PotentialShape<T>,
    k: KFunction<T>,
    trust: (T, T),
    change: T,
}

/// Steps (ii) and (iii) from the solved curve of `shape`.
fn step<T: Real>(
    shape: &PotentialShape<T>,
    solved: &Solved<T>,
    plan: &Plan<T>,
    config: &InversionConfig<T>,
) -> Result<Step<T>> {
    let curve = &plan.curve;
    let opts = SearchOptions::default();
    let (lo, hi) = plan.window;
    let mut ext = solved.samples.clone();
    let cap_lo = ext[0].0 / config.lower_extension_cap;
    let cap_hi = ext[ext.len() - 1].0 * config.extension_cap;
    let mut down_open = true;
    let ratio = lit::<T>(1.1);

    loop {
        let (x, e): (Vec<T>, Vec<T>) = ext.iter().copied().unzip();
        let fn_curve = MonotoneCubic::new(x, e)?;
        let (elo, ehi) = fn_curve.domain();
        let k_found: Vec<Extremum<T>> = plan
            .r_grid
            .par_iter()
            .map(|&r| {
                let fr = shape.value(r);
                maximize(|x| fn_curve.eval(x) - x * fr, elo, ehi, &opts)
            })
            .collect();
        let f_found: Vec<Extremum<T>> = plan
            .r_grid
            .par_iter()
            .zip(&k_found)
            .map(|(_, k)| maximize(|x| (curve.eval(x) - k.value) / x, lo, hi, &opts))
            .collect();

        let wanted = |at_hi: bool| {
            k_found.iter().zip(&f_found).any(|(k, f)| {
                !f.at_boundary && k.at_boundary && ((k.arg == ehi) == at_hi)
            })
        };
        let up = wanted(true) && ehi < cap_hi;
        let down = wanted(false) && down_open && elo > cap_lo;
        if !up && !down {
            let ok: Vec<bool> = k_found.iter().zip(&f_found).map(|(k, f)| !k.at_boundary && !f.at_boundary).collect();
            let (start, len) = longest_run(&ok);
            if len < 2 {
                return Err(Error::Inversion("trust region is empty".into()));
            }
            let r: Vec<T> = plan.r_grid[start..start + len].to_vec();
            let f: Vec<T> = f_found[start..start + len].iter().map(|e| e.value).collect();
            let change = r
                .iter()
                .zip(&f)
                .map(|(&ri, &fi)| (fi - shape.value(ri)).abs())
                .fold(T::zero(), T::max);
            let trust = (r[0], r[r.len() - 1]);
            let next = PotentialShape::Tabulated(TabulatedShape::new(r, f)?.with_inverse_tail());
            let k = KFunction::from_extrema(&plan.r_grid, &k_found, curve.tolerance())?;
            return Ok(Step { next, k, trust, change });
        }

        if up {
            let new: Vec<T> = (1..=4).map(|i| ehi * ratio.powi(i)).filter(|&x| x <= cap_hi * ratio).collect();
            for (x, res) in new.iter().zip(solve_at(shape, &new, config.mass, &config.solver)) {
                ext.push((*x, res?.0));
            }
        }
        if down {
            let new: Vec<T> = (1..=4).map(|i| elo / ratio.powi(i)).collect();
            for (x, res) in new.iter().zip(solve_at(shape, &new, config.mass, &config.solver)) {
                match res {
                    Ok((e, _)) => ext.insert(0, (*x, e)),
                    Err(Error::NoBoundState { .. }) => {
                        down_open = false;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
}

fn longest_run(ok: &[bool]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut start = 0;
    for i in 0..=ok.len() {
        if i == ok.len() || !ok[i] {
            if i - start > best.1 {
                best = (start, i - start);
            }
            start = i + 1;
        }
    }
    best
}

/// One pass of the algorithm from `current`: returns the next iterate, the
/// K-function of `current`, and the residual of `current` against the curve.
pub fn iterate_once<T: Real>(
    curve: &SpectralCurve<T>,
    current: &PotentialShape<T>,
    config: &InversionConfig<T>,
) -> Result<(PotentialShape<T>, KFunction<T>, T)> {
    let plan = plan(curve, config)?;
    let solved = solve_iterate(current, &plan, config)?;
    let s = step(current, &solved, &plan, config)?;
    Ok((s.next, s.k, solved.residual))
}

/// Runs the iteration until the shape change and the curve residual both
/// pass, the iteration budget is spent, or a step fails.
///
/// Precondition failures are errors; a failure inside the loop ends the run
/// early with `converged = false` and the reason recorded.
pub fn invert<T: Real>(curve: &SpectralCurve<T>, config: &InversionConfig<T>) -> Result<InversionRun<T>> {
    let plan = plan(curve, config)?;
    let mut run = InversionRun {
        iterates: vec![plan.seed.clone()],
        k_functions: Vec::new(),
        residual_history: Vec::new(),
        changes: Vec::new(),
        trust_regions: Vec::new(),
        converged: false,
        abort_reason: None,
        warnings: Vec::new(),
        final_curve: None,
        v0: curve.shift(),
        r_grid: plan.r_grid.clone(),
        coupling_grid: plan.coupling_grid.clone(),
        noise_floor: plan.curve.tolerance(),
    };
    if !curve.is_concave() {
        run.warnings.push("target curve is not concave".into());
    }

    // increases smaller than the target's own interpolation uncertainty are not violations
    loop {
        let current = run.final_shape().clone();
        let solved = match solve_iterate(&current, &plan, config) {
            Ok(s) => s,
            Err(e) => {
                run.abort_reason = Some(format!("solving iterate {}: {e}", run.iterates.len() - 1));
                return Ok(run);
            }
        };
        if solved.unbound > 0 {
            let n = run.iterates.len() - 1;
            run.warnings.push(format!("iterate {n} has no bound state at the lowest {} couplings", solved.unbound));
        }
        run.noise_floor = run.noise_floor.max(lit::<T>(10.0) * solved.max_error);
        let residual = solved.residual;
        run.final_curve = SpectralCurve::from_samples(solved.samples.clone(), curve.shift()).ok();
        let n = run.residual_history.len();
        if n >= 2 && residual > run.residual_history[n - 1] + run.noise_floor {
            run.residual_history.push(residual);
            run.abort_reason = Some(format!("residual increased at iterate {n}"));
            return Ok(run);
        }
        run.residual_history.push(residual);

        if let Some(&change) = run.changes.last() {
            if change <= config.convergence_tol && residual <= config.residual_tol {
                run.converged = true;
                return Ok(run);
            }
        }
        if run.changes.len() >= config.max_iterations {
            return Ok(run);
        }

        match step(&current, &solved, &plan, config) {
            Ok(s) => {
                run.iterates.push(s.next);
                run.k_functions.push(s.k);
                run.trust_regions.push(s.trust);
                run.changes.push(s.change);
            }
            Err(e) => {
                run.abort_reason = Some(format!("stepping iterate {}: {e}", run.iterates.len() - 1));
                return Ok(run);
            }
        }
    }
}
