//! Bound states of H = (1/m)(-Δ) + v f(r) for central shapes.
//!
//! The radial function u = r ψ obeys
//! `u'' = [m (v f(r) - E) + l(l+1)/r²] u` with `u(0) = 0`.
//! It is integrated outward on a uniform grid with the Numerov three-point
//! recursion, started from the series `r^{l+1} (1 + c1 r + c2 r²)` built from
//! the shape's `C/r + D` behaviour at the origin. The eigenvalue of the box
//! `[0, r_max]` with a Dirichlet wall is located by bisection on the node
//! count, the box is grown until the exponential tail is resolved, and a
//! second solve at half the step gives a Richardson correction and the error
//! estimate.

use rayon::prelude::*;

use crate::error::{to_f64, Error, Result};
use crate::potentials::PotentialShape;
use crate::scalar::{lit, Real};
use crate::spectral::SpectralCurve;

#[derive(Clone, Copy, Debug)]
pub struct EigenProblem<'a, T> {
    pub shape: &'a PotentialShape<T>,
    pub coupling: T,
    pub mass: T,
    pub n: usize,
    pub l: usize,
}

impl<'a, T: Real> EigenProblem<'a, T> {
    /// Ground state of `-Δ + coupling * shape`.
    pub fn new(shape: &'a PotentialShape<T>, coupling: T) -> Self {
        Self { shape, coupling, mass: T::one(), n: 0, l: 0 }
    }

    pub fn with_mass(mut self, mass: T) -> Self {
        self.mass = mass;
        self
    }

    pub fn with_state(mut self, n: usize, l: usize) -> Self {
        self.n = n;
        self.l = l;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.mass > T::zero()) || !self.mass.is_finite() {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {}", self.mass)));
        }
        if !self.coupling.is_finite() {
            return Err(Error::InvalidParameter("coupling must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenResult<T> {
    pub energy: T,
    /// The estimated error meets the requested relative accuracy.
    pub converged: bool,
    pub node_count: usize,
    pub r_max: T,
    pub estimated_error: T,
    pub grid_points: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions<T> {
    /// Minimum number of grid intervals on `[0, r_max]`.
    pub grid_points: usize,
    /// Target relative accuracy of the returned energy.
    pub rel_tol: T,
    /// Minimum number of intervals inside the outer classical turning point.
    pub points_per_turning: usize,
    pub max_points: usize,
    /// Largest box tried before declaring that no bound state exists.
    pub r_cap: T,
    /// Relative energy change accepted when the box is doubled.
    pub truncation_tol: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            grid_points: 4000,
            rel_tol: lit(1e-6),
            points_per_turning: 200,
            max_points: 1 << 21,
            r_cap: lit(1e6),
            truncation_tol: lit(1e-8),
        }
    }
}

pub fn solve_ground_state<T: Real>(problem: &EigenProblem<'_, T>, opts: &SolverOptions<T>) -> Result<EigenResult<T>> {
    if problem.n != 0 || problem.l != 0 {
        return Err(Error::InvalidParameter("solve_ground_state requires n = l = 0".into()));
    }
    solve_state(problem, opts)
}

pub fn solve_state<T: Real>(problem: &EigenProblem<'_, T>, opts: &SolverOptions<T>) -> Result<EigenResult<T>> {
    problem.validate()?;
    let solver = Solver::new(problem, opts);
    solver.run()
}

/// Ground-state energies at each coupling, collected into a spectral curve.
///
/// Couplings without a bound state at the low end are dropped and recorded on
/// the curve; a failure above a successful coupling is an error.
pub fn energy_curve<T: Real>(
    shape: &PotentialShape<T>,
    couplings: &[T],
    mass: T,
    opts: &SolverOptions<T>,
) -> Result<SpectralCurve<T>> {
    if couplings.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneAbscissae);
    }
    let solved: Vec<Result<EigenResult<T>>> = couplings
        .par_iter()
        .map(|&v| solve_ground_state(&EigenProblem::new(shape, v).with_mass(mass), opts))
        .collect();
    let mut samples = Vec::with_capacity(couplings.len());
    let mut dropped = 0;
    for (&v, res) in couplings.iter().zip(solved) {
        match res {
            Ok(r) => samples.push((v, r.energy)),
            Err(Error::NoBoundState { .. }) if samples.is_empty() => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    let mut curve = SpectralCurve::from_samples(samples, None)?;
    curve.set_dropped(dropped);
    Ok(curve)
}

struct Solver<'p, 'a, T> {
    p: &'p EigenProblem<'a, T>,
    opts: &'p SolverOptions<T>,
    threshold: T,
    centrifugal: T,
    near: (T, T),
}

/// Potential terms on one uniform grid.
struct Grid<T> {
    h: T,
    /// `m v f(r_i) + l(l+1)/r_i²` for i = 0..=intervals (entry 0 unused).
    base: Vec<T>,
}

impl<'p, 'a, T: Real> Solver<'p, 'a, T> {
    fn new(p: &'p EigenProblem<'a, T>, opts: &'p SolverOptions<T>) -> Self {
        let l = T::from_count(p.l);
        Self {
            p,
            opts,
            threshold: p.coupling * p.shape.far_limit(),
            centrifugal: l * (l + T::one()),
            near: p.shape.near_origin(),
        }
    }

    fn effective(&self, r: T) -> T {
        self.p.coupling * self.p.shape.value(r) + self.centrifugal / (self.p.mass * r * r)
    }

    fn log_radii() -> impl DoubleEndedIterator<Item = T> {
        (0..=1600).map(|k| lit::<T>(10.0).powf(lit::<T>(-8.0) + T::from_count(k) / lit(100.0)))
    }

    /// Hardy's inequality `-Δ >= 1/(4 r²)` bounds every eigenvalue from below.
    fn lower_bound(&self) -> T {
        let four = lit::<T>(4.0);
        let m = self.p.mass;
        let bound = |r: T| T::one() / (four * m * r * r) + self.p.coupling * self.p.shape.value(r);
        let min = Self::log_radii().map(bound).fold(T::infinity(), T::min);
        let pad = lit::<T>(0.1) * min.abs() + lit(1e-12);
        min - pad
    }

    /// Largest radius where the effective potential is still below `energy`.
    fn outer_turning_point(&self, energy: T) -> Option<T> {
        let radii: Vec<T> = Self::log_radii().collect();
        let k = radii.iter().rposition(|&r| self.effective(r) <= energy)?;
        if k + 1 == radii.len() {
            return Some(radii[k]);
        }
        let (mut lo, mut hi) = (radii[k], radii[k + 1]);
        for _ in 0..60 {
            let mid = (lo + hi) / lit(2.0);
            if self.effective(mid) <= energy {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// Box size and grid resolution appropriate for a state at `energy`.
    fn layout(&self, energy: T) -> (T, usize) {
        let gap = (self.threshold - energy).max(T::min_positive_value());
        let kappa = (self.p.mass * gap).sqrt();
        let turning = self.outer_turning_point(energy).unwrap_or(T::one() / kappa);
        let r_max = (lit::<T>(30.0) / kappa)
            .max(lit::<T>(5.0) * turning)
            .min(self.opts.r_cap);
        (r_max, self.intervals_for(r_max, turning))
    }

    fn intervals_for(&self, r_max: T, turning: T) -> usize {
        let by_turning = (T::from_count(self.opts.points_per_turning) * r_max / turning)
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX);
        by_turning.max(self.opts.grid_points).min(self.opts.max_points)
    }

    fn grid(&self, r_max: T, intervals: usize) -> Grid<T> {
        let h = r_max / T::from_count(intervals);
        let m = self.p.mass;
        let v = self.p.coupling;
        let mut base = Vec::with_capacity(intervals + 1);
        base.push(T::zero());
        for i in 1..=intervals {
            let r = h * T::from_count(i);
            base.push(m * v * self.p.shape.value(r) + self.centrifugal / (r * r));
        }
        Grid { h, base }
    }

    /// Outward Numerov integration at `energy`: sign changes of u on (0, r_max].
    fn count_nodes(&self, grid: &Grid<T>, energy: T) -> usize {
        let m = self.p.mass;
        let v = self.p.coupling;
        let (c_coef, d_coef) = self.near;
        let l = self.p.l;
        let lf = T::from_count(l);
        let two = lit::<T>(2.0);
        let c1 = m * v * c_coef / (two * (lf + T::one()));
        let c2 = (m * v * c_coef * c1 + m * (v * d_coef - energy)) / (two * (two * lf + lit(3.0)));
        let series = |r: T| r.powi(l as i32 + 1) * (T::one() + c1 * r + c2 * r * r);

        let h = grid.h;
        let g = h * h / lit(12.0);
        let me = m * energy;
        let q = |i: usize| grid.base[i] - me;
        let last = grid.base.len() - 1;
        let big = T::max_value().sqrt().sqrt();
        let five = lit::<T>(5.0);

        let (mut i, mut prev, mut cur) = if l == 0 {
            let u1 = series(h);
            let w0 = two * c1;
            let u2 = (two * u1 * (T::one() + five * g * q(1)) + g * w0) / (T::one() - g * q(2));
            (2usize, u1, u2)
        } else {
            let s = (((l * (l + 1)) as f64 / 1.2).sqrt().ceil() as usize).max(1);
            let s = s.min(last.saturating_sub(2)).max(1);
            (s + 1, series(h * T::from_count(s)), series(h * T::from_count(s + 1)))
        };
        let mut nodes = usize::from(prev * cur < T::zero());
        while i < last {
            let next = (two * cur * (T::one() + five * g * q(i)) - prev * (T::one() - g * q(i - 1)))
                / (T::one() - g * q(i + 1));
            if next * cur < T::zero() {
                nodes += 1;
            }
            prev = cur;
            cur = next;
            if cur.abs() > big {
                prev = prev / big;
                cur = cur / big;
            }
            i += 1;
        }
        nodes
    }

    /// Dirichlet-box eigenvalue with `n` nodes, if it lies below the threshold.
    fn box_eigenvalue(&self, grid: &Grid<T>, e_low: T) -> Option<T> {
        let n = self.p.n;
        let scale = self.threshold.abs().max(e_low.abs()).max(T::min_positive_value());
        let top = self.threshold - lit::<T>(1e-12) * scale;
        if self.count_nodes(grid, top) <= n {
            return None;
        }
        let mut lo = e_low;
        while self.count_nodes(grid, lo) > n {
            lo = lo - lo.abs().max(T::one());
        }
        let mut hi = top;
        let eps = T::epsilon();
        for _ in 0..300 {
            let mid = (lo + hi) / lit(2.0);
            if (hi - lo) <= lit::<T>(4.0) * eps * mid.abs().max(eps) || mid <= lo || mid >= hi {
                break;
            }
            if self.count_nodes(grid, mid) > n {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some((lo + hi) / lit(2.0))
    }

    fn not_bound(&self) -> Error {
        if self.p.n == 0 && self.p.l == 0 {
            Error::NoBoundState { coupling: to_f64(self.p.coupling) }
        } else {
            Error::StateNotBound { n: self.p.n, l: self.p.l, coupling: to_f64(self.p.coupling) }
        }
    }

    fn run(&self) -> Result<EigenResult<T>> {
        let e_low = self.lower_bound();
        if !(e_low < self.threshold) {
            return Err(self.not_bound());
        }

        // grow the box until it holds the state and resolves its tail
        let guess = self.threshold - (self.threshold - e_low) / lit(8.0);
        let (mut r_max, mut intervals) = self.layout(guess);
        let mut energy = None;
        for _ in 0..64 {
            let grid = self.grid(r_max, intervals);
            match self.box_eigenvalue(&grid, e_low) {
                None => {
                    if r_max >= self.opts.r_cap {
                        return Err(self.not_bound());
                    }
                    r_max = (r_max * lit(4.0)).min(self.opts.r_cap);
                    intervals = (intervals * 4).min(self.opts.max_points);
                }
                Some(e) => {
                    energy = Some(e);
                    let (need, need_intervals) = self.layout(e);
                    let h_now = r_max / T::from_count(intervals);
                    let h_need = need / T::from_count(need_intervals);
                    if need > r_max * lit(1.001) || h_need < h_now * lit(0.999) {
                        r_max = need.max(r_max);
                        intervals = ((r_max / h_need).ceil().to_usize().unwrap_or(usize::MAX))
                            .max(need_intervals)
                            .min(self.opts.max_points);
                        continue;
                    }
                    break;
                }
            }
        }
        let mut energy =
            energy.ok_or_else(|| Error::NonConvergence("box search did not settle".into()))?;

        // double the box at fixed step until the energy stops moving
        for _ in 0..6 {
            if intervals * 2 > self.opts.max_points {
                break;
            }
            let grid = self.grid(r_max * lit(2.0), intervals * 2);
            let Some(e) = self.box_eigenvalue(&grid, e_low) else { break };
            let moved = (e - energy).abs() > self.opts.truncation_tol * energy.abs().max(T::min_positive_value());
            if !moved {
                break;
            }
            energy = e;
            r_max = r_max * lit(2.0);
            intervals *= 2;
        }

        // Richardson step; refine further while the estimate misses the target
        let mut coarse = energy;
        loop {
            let fine_intervals = intervals * 2;
            let grid = self.grid(r_max, fine_intervals);
            let fine = self
                .box_eigenvalue(&grid, e_low)
                .ok_or_else(|| Error::NonConvergence("state lost on grid refinement".into()))?;
            let diff = (fine - coarse) / lit(15.0);
            let extrapolated = fine + diff;
            let estimated_error = diff.abs();
            let floor = lit::<T>(1e-13) * e_low.abs();
            let converged = estimated_error <= self.opts.rel_tol * extrapolated.abs() + floor;
            if converged || fine_intervals * 2 > self.opts.max_points {
                let below = extrapolated - estimated_error.max(lit::<T>(1e-9) * extrapolated.abs());
                let node_count = self.count_nodes(&grid, below.max(e_low));
                return Ok(EigenResult {
                    energy: extrapolated,
                    converged,
                    node_count,
                    r_max,
                    estimated_error,
                    grid_points: fine_intervals,
                });
            }
            coarse = fine;
            intervals = fine_intervals;
        }
    }
}
