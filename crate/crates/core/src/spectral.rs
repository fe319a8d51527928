//! Spectral curves F(v), kinetic potentials f̄(s) and K-functions K(r), and
//! the Legendre-type transforms that connect them.
//!
//! Every transform is a bounded maximization over the window where F is
//! known. An optimizer landing on the window edge is flagged per grid point:
//! such values are still well defined but carry no information from outside
//! the window.

use rayon::prelude::*;

use crate::eigensolver::{energy_curve, SolverOptions};
use crate::error::{to_f64, Error, Result};
use crate::interp::MonotoneCubic;
use crate::models;
use crate::optimize::{maximize, minimize, Extremum, SearchOptions};
use crate::potentials::PotentialShape;
use crate::scalar::{lit, Real};

#[derive(Clone, Debug, PartialEq)]
enum CurveForm<T> {
    Interpolated(MonotoneCubic<T>),
    /// `-m a² x²/4 + b x`
    CoulombModel { a: T, b: T, mass: T },
}

/// Ground-state energy as a function of the coupling.
///
/// The curve is stored in its working variable `x`: the coupling `v` itself,
/// or `u = v - v0` when a shift is set.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCurve<T> {
    samples: Vec<(T, T)>,
    form: CurveForm<T>,
    domain: (T, T),
    shift: Option<T>,
    critical: Option<T>,
    concave: bool,
    dropped: usize,
    extension: Option<Extension<T>>,
}

/// Model continuation of an interpolated curve beyond its samples.
#[derive(Clone, Debug, PartialEq)]
struct Extension<T> {
    model: models::CoulombModelParams<T>,
    below: T,
    above: T,
}

fn concavity_ok<T: Real>(samples: &[(T, T)]) -> bool {
    let noise = lit::<T>(1e-6);
    samples.windows(3).all(|w| {
        let d1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        let d2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
        (d2 - d1) / (w[2].0 - w[0].0) <= noise
    })
}

impl<T: Real> SpectralCurve<T> {
    /// Interpolating curve through `(x, F)` samples already in the working variable.
    pub fn from_samples(samples: Vec<(T, T)>, shift: Option<T>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: samples.len() });
        }
        let (x, y): (Vec<T>, Vec<T>) = samples.iter().copied().unzip();
        let interp = MonotoneCubic::new(x, y)?;
        let domain = interp.domain();
        let critical = interp.root().map(|x0| x0 + shift.unwrap_or_else(T::zero));
        Ok(Self {
            concave: concavity_ok(&samples),
            samples,
            form: CurveForm::Interpolated(interp),
            domain,
            shift,
            critical,
            dropped: 0,
            extension: None,
        })
    }

    /// The closed-form curve `-m a² u²/4 + b u` on `domain` (in u), tagged with
    /// the critical coupling `v0`. `knots` evenly spaced samples stand in for data.
    pub fn coulomb_model(a: T, b: T, mass: T, v0: T, domain: (T, T), knots: usize) -> Result<Self> {
        if !(domain.1 > domain.0) {
            return Err(Error::EmptyDomain(format!("[{}, {}]", domain.0, domain.1)));
        }
        let knots = knots.max(2);
        let f = |u: T| -mass * a * a * u * u / lit(4.0) + b * u;
        let samples: Vec<(T, T)> = (0..knots)
            .map(|k| {
                let u = domain.0 + (domain.1 - domain.0) * T::from_count(k) / T::from_count(knots - 1);
                (u, f(u))
            })
            .collect();
        Ok(Self {
            concave: true,
            samples,
            form: CurveForm::CoulombModel { a, b, mass },
            domain,
            shift: Some(v0),
            critical: Some(v0),
            dropped: 0,
            extension: None,
        })
    }

    /// Continues the curve outside its samples by the Coulomb model `params`
    /// (in v), offset to join the end samples continuously, out to `domain`.
    pub fn extrapolated(mut self, params: &models::CoulombModelParams<T>, domain: (T, T)) -> Result<Self> {
        let (lo, hi) = self.sample_domain();
        if self.is_closed_form() {
            return Err(Error::InvalidParameter("closed-form curves need no extrapolation".into()));
        }
        if domain.0 > lo || domain.1 < hi {
            return Err(Error::EmptyDomain(format!(
                "extrapolation window [{}, {}] must contain the samples [{lo}, {hi}]",
                domain.0, domain.1
            )));
        }
        let shift = self.shift.unwrap_or_else(T::zero);
        let first = self.samples[0];
        let last = self.samples[self.samples.len() - 1];
        self.extension = Some(Extension {
            model: *params,
            below: first.1 - params.energy(first.0 + shift),
            above: last.1 - params.energy(last.0 + shift),
        });
        self.domain = domain;
        Ok(self)
    }

    /// Range covered by the samples, excluding any extrapolation.
    pub fn sample_domain(&self) -> (T, T) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    pub fn is_extrapolated(&self) -> bool {
        self.extension.is_some()
    }

    /// F at working-variable `x` (no domain check).
    pub fn eval(&self, x: T) -> T {
        if let Some(ext) = &self.extension {
            let (lo, hi) = self.sample_domain();
            let shift = self.shift.unwrap_or_else(T::zero);
            if x < lo {
                return ext.model.energy(x + shift) + ext.below;
            }
            if x > hi {
                return ext.model.energy(x + shift) + ext.above;
            }
        }
        match &self.form {
            CurveForm::Interpolated(p) => p.eval(x),
            CurveForm::CoulombModel { a, b, mass } => -*mass * *a * *a * x * x / lit(4.0) + *b * x,
        }
    }

    pub fn eval_checked(&self, x: T) -> Result<T> {
        if x < self.domain.0 || x > self.domain.1 {
            return Err(Error::EmptyDomain(format!(
                "{x} outside curve domain [{}, {}]",
                self.domain.0, self.domain.1
            )));
        }
        Ok(self.eval(x))
    }

    pub fn samples(&self) -> &[(T, T)] {
        &self.samples
    }

    pub fn domain(&self) -> (T, T) {
        self.domain
    }

    /// `v0` when the curve is stored in `u = v - v0`.
    pub fn shift(&self) -> Option<T> {
        self.shift
    }

    /// Coupling (in v) where F vanishes, when located.
    pub fn critical_coupling(&self) -> Option<T> {
        self.critical
    }

    /// Second divided differences of the samples are non-positive within 1e-6.
    pub fn is_concave(&self) -> bool {
        self.concave
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.form, CurveForm::CoulombModel { .. })
    }

    /// Number of requested couplings dropped for lack of a bound state.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub(crate) fn set_dropped(&mut self, dropped: usize) {
        self.dropped = dropped;
    }

    /// Leave-one-out interpolation residual over interior knots; zero for closed forms.
    pub fn interpolation_residual(&self) -> T {
        if self.is_closed_form() || self.samples.len() < 4 {
            return T::zero();
        }
        (1..self.samples.len() - 1)
            .filter_map(|i| {
                let (x, y): (Vec<T>, Vec<T>) = self
                    .samples
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i)
                    .map(|(_, &s)| s)
                    .unzip();
                let p = MonotoneCubic::new(x, y).ok()?;
                Some((p.eval(self.samples[i].0) - self.samples[i].1).abs())
            })
            .fold(T::zero(), T::max)
    }

    /// Tolerance carried by quantities derived from this curve.
    pub fn tolerance(&self) -> T {
        lit::<T>(10.0) * self.interpolation_residual()
    }

    /// Window of positive working-variable values, as needed by `1/x` transforms.
    pub(crate) fn positive_window(&self) -> Result<(T, T)> {
        let (lo, hi) = self.domain;
        if hi <= T::zero() {
            return Err(Error::EmptyDomain("curve has no positive couplings".into()));
        }
        Ok((lo.max(hi * lit(1e-12)), hi))
    }

    pub fn to_text(&self) -> String {
        let var = if self.shift.is_some() { "u" } else { "v" };
        let mut out = match self.shift {
            Some(v0) => format!("# spectral-curve variable=u shift={v0}\n"),
            None => "# spectral-curve variable=v\n".to_string(),
        };
        out.push_str(&format!("{var},F\n"));
        for (x, f) in &self.samples {
            out.push_str(&format!("{x},{f}\n"));
        }
        out
    }
}

/// Interpolating curve through `(v, E)` data (at least four points).
///
/// With `shift = Some(v0)` the curve is stored in `u = v - v0`. The critical
/// coupling is the interpolant's root when the data change sign, otherwise
/// the canonical root of the fitted Coulomb model.
pub fn build_curve<T: Real>(data: &[(T, T)], shift: Option<T>) -> Result<SpectralCurve<T>> {
    if data.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: data.len() });
    }
    if data.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::NonMonotoneAbscissae);
    }
    let v0 = shift.unwrap_or_else(T::zero);
    let samples: Vec<(T, T)> = data.iter().map(|&(v, e)| (v - v0, e)).collect();
    let mut curve = SpectralCurve::from_samples(samples, shift)?;
    if curve.critical.is_none() {
        curve.critical = models::fit_coulomb(data, T::one()).ok().map(|r| r.params.v0);
    }
    Ok(curve)
}

/// f̄(s) sampled on an s-grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticPotential<T> {
    samples: Vec<(T, T)>,
    boundary: Vec<bool>,
    interp: MonotoneCubic<T>,
    tolerance: T,
}

impl<T: Real> KineticPotential<T> {
    pub fn eval(&self, s: T) -> T {
        self.interp.eval(s)
    }

    pub fn samples(&self) -> &[(T, T)] {
        &self.samples
    }

    /// Grid points whose maximizing coupling sat on the curve's window edge.
    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn domain(&self) -> (T, T) {
        self.interp.domain()
    }

    pub fn tolerance(&self) -> T {
        self.tolerance
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].1 < w[0].1)
    }

    pub fn to_text(&self, source: &str) -> String {
        let mut out = format!("# kinetic-potential source={source}\ns,fbar\n");
        for (s, f) in &self.samples {
            out.push_str(&format!("{s},{f}\n"));
        }
        out
    }
}

/// K(r) sampled on a radial grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KFunction<T> {
    samples: Vec<(T, T)>,
    boundary: Vec<bool>,
    maximizers: Vec<T>,
    interp: MonotoneCubic<T>,
    tolerance: T,
}

impl<T: Real> KFunction<T> {
    /// Tabulated K from `(r, K)` samples, without provenance flags.
    pub fn from_samples(samples: Vec<(T, T)>) -> Result<Self> {
        let (r, k): (Vec<T>, Vec<T>) = samples.iter().copied().unzip();
        if r.first().is_some_and(|&r0| r0 <= T::zero()) {
            return Err(Error::NonPositiveRadius(to_f64(r[0])));
        }
        let interp = MonotoneCubic::new(r.clone(), k)?;
        Ok(Self {
            boundary: vec![false; samples.len()],
            maximizers: vec![T::nan(); samples.len()],
            samples,
            interp,
            tolerance: T::zero(),
        })
    }

    pub(crate) fn from_extrema(r_grid: &[T], found: &[Extremum<T>], tolerance: T) -> Result<Self> {
        let samples: Vec<(T, T)> = r_grid.iter().zip(found).map(|(&r, e)| (r, e.value)).collect();
        let (x, y): (Vec<T>, Vec<T>) = samples.iter().copied().unzip();
        Ok(Self {
            boundary: found.iter().map(|e| e.at_boundary).collect(),
            maximizers: found.iter().map(|e| e.arg).collect(),
            interp: MonotoneCubic::new(x, y)?,
            samples,
            tolerance,
        })
    }

    pub fn eval(&self, r: T) -> T {
        self.interp.eval(r)
    }

    pub fn samples(&self) -> &[(T, T)] {
        &self.samples
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    /// Coupling at which each K(r) maximum was attained.
    pub fn maximizers(&self) -> &[T] {
        &self.maximizers
    }

    pub fn domain(&self) -> (T, T) {
        self.interp.domain()
    }

    pub fn tolerance(&self) -> T {
        self.tolerance
    }

    /// K > 0 and decreasing on the grid, as expected for attractive shapes.
    pub fn is_positive_decreasing(&self) -> bool {
        self.samples.iter().all(|&(_, k)| k > T::zero()) && self.samples.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    pub fn to_text(&self, source: &str) -> String {
        let mut out = format!("# k-function source={source}\nr,K\n");
        for (r, k) in &self.samples {
            out.push_str(&format!("{r},{k}\n"));
        }
        out
    }
}

fn check_positive_grid<T: Real>(grid: &[T], what: &str) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: grid.len() });
    }
    if grid[0] <= T::zero() {
        return Err(Error::InvalidGrid(format!("{what} must be positive")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneAbscissae);
    }
    Ok(())
}

/// f̄(s) = max over the curve window of `[F(x) - s] / x`.
pub fn kinetic_potential_from_curve<T: Real>(curve: &SpectralCurve<T>, s_grid: &[T]) -> Result<KineticPotential<T>> {
    check_positive_grid(s_grid, "kinetic energies")?;
    let (lo, hi) = curve.positive_window()?;
    let opts = SearchOptions::default();
    let found: Vec<Extremum<T>> = s_grid
        .par_iter()
        .map(|&s| maximize(|x| (curve.eval(x) - s) / x, lo, hi, &opts))
        .collect();
    let samples: Vec<(T, T)> = s_grid.iter().zip(&found).map(|(&s, e)| (s, e.value)).collect();
    let (x, y): (Vec<T>, Vec<T>) = samples.iter().copied().unzip();
    Ok(KineticPotential {
        boundary: found.iter().map(|e| e.at_boundary).collect(),
        interp: MonotoneCubic::new(x, y)?,
        samples,
        tolerance: curve.tolerance() / lo,
    })
}

/// F(v) = min over the kinetic-potential domain of `s + v f̄(s)`.
pub fn energy_from_kinetic_potential<T: Real>(kp: &KineticPotential<T>, v: T) -> Result<Extremum<T>> {
    if !(v > T::zero()) {
        return Err(Error::InvalidParameter(format!("coupling must be positive, got {v}")));
    }
    let (lo, hi) = kp.domain();
    Ok(minimize(|s| s + v * kp.eval(s), lo, hi, &SearchOptions::default()))
}

/// K(r) = max over the curve window of `F(x) - x f(r)`.
pub fn k_function_from_curve<T: Real>(
    curve: &SpectralCurve<T>,
    shape: &PotentialShape<T>,
    r_grid: &[T],
) -> Result<KFunction<T>> {
    check_positive_grid(r_grid, "radii")?;
    let (lo, hi) = curve.domain();
    let opts = SearchOptions::default();
    let found: Vec<Extremum<T>> = r_grid
        .par_iter()
        .map(|&r| {
            let fr = shape.value(r);
            maximize(|x| curve.eval(x) - x * fr, lo, hi, &opts)
        })
        .collect();
    KFunction::from_extrema(r_grid, &found, curve.tolerance())
}

/// K^{[f]} for an arbitrary shape: solve F on the coupling grid, then transform.
pub fn k_function_from_shape<T: Real>(
    shape: &PotentialShape<T>,
    mass: T,
    r_grid: &[T],
    coupling_grid: &[T],
    opts: &SolverOptions<T>,
) -> Result<KFunction<T>> {
    check_positive_grid(coupling_grid, "couplings")?;
    let curve = energy_curve(shape, coupling_grid, mass, opts)?;
    k_function_from_curve(&curve, shape, r_grid)
}

/// min over the K-function's radial domain of `K(r) + v f(r)`.
///
/// Exact when `k` is the K-function of `shape`; an envelope approximation
/// when it belongs to a different basis shape.
pub fn energy_from_k<T: Real>(shape: &PotentialShape<T>, k: &KFunction<T>, v: T) -> Result<Extremum<T>> {
    let (lo, hi) = k.domain();
    if lo <= T::zero() {
        return Err(Error::NonPositiveRadius(to_f64(lo)));
    }
    Ok(minimize(|r| k.eval(r) + v * shape.value(r), lo, hi, &SearchOptions::default()))
}
