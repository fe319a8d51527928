//! Exactly solvable spectra: the shifted-Coulomb model `-a/r + b` and the
//! Hulthén potential, plus the least-squares fit of `{a, b, v0}` to
//! binding-energy data.

use std::fmt;

use crate::error::{to_f64, Error, Result};
use crate::potentials::PotentialShape;
use crate::scalar::{lit, Real};
use crate::spectral::SpectralCurve;

/// `E = b (v - v0) - m a² (v - v0)² / (4 (1 + n + l)²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoulombModelParams<T> {
    pub a: T,
    pub b: T,
    pub v0: T,
    pub m: T,
}

impl<T: Real> CoulombModelParams<T> {
    pub fn new(a: T, b: T, v0: T) -> Result<Self> {
        Self::with_mass(a, b, v0, T::one())
    }

    pub fn with_mass(a: T, b: T, v0: T, m: T) -> Result<Self> {
        if !(a > T::zero()) || !(m > T::zero()) {
            return Err(Error::InvalidParameter(format!("need a > 0 and m > 0, got a={a}, m={m}")));
        }
        if !b.is_finite() || !v0.is_finite() {
            return Err(Error::InvalidParameter("b and v0 must be finite".into()));
        }
        Ok(Self { a, b, v0, m })
    }

    /// The other root parametrization `(a, -b, v0 + 4b/(m a²))` of the same curve.
    pub fn alternate(&self) -> Self {
        Self {
            b: -self.b,
            v0: self.v0 + lit::<T>(4.0) * self.b / (self.m * self.a * self.a),
            ..*self
        }
    }

    pub fn shape(&self) -> PotentialShape<T> {
        PotentialShape::ShiftedCoulomb { a: self.a, b: self.b }
    }

    /// Ground-state energy at coupling `v`.
    pub fn energy(&self, v: T) -> T {
        coulomb_level(self, v, 0, 0)
    }
}

pub fn coulomb_level<T: Real>(p: &CoulombModelParams<T>, v: T, n: usize, l: usize) -> T {
    let u = v - p.v0;
    let k = T::from_count(1 + n + l);
    p.b * u - p.m * p.a * p.a * u * u / (lit::<T>(4.0) * k * k)
}

/// Closed-form ground-state curve in `u = v - v0` on the given u-window.
pub fn coulomb_ground_curve<T: Real>(p: &CoulombModelParams<T>, domain: (T, T)) -> Result<SpectralCurve<T>> {
    SpectralCurve::coulomb_model(p.a, p.b, p.m, p.v0, domain, 10)
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    /// Polish `{a, b, v0}` by Gauss-Newton after the linear stage.
    pub refine: bool,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { refine: false, max_iter: 100 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport<T> {
    pub params: CoulombModelParams<T>,
    pub rms_residual: T,
    pub max_residual: T,
    /// `(c0, c1, c2)` of the least-squares quadratic in v.
    pub quadratic: (T, T, T),
    /// Leading data points (in increasing v) that entered the fit.
    pub points_used: usize,
    /// The quadratic had no distinct real roots, so b was fixed to zero.
    pub degenerate: bool,
    pub alternate: CoulombModelParams<T>,
}

impl<T: Real> FitReport<T> {
    pub fn canonical_note(&self) -> String {
        if self.degenerate {
            "double root: b fixed to 0".to_string()
        } else {
            format!(
                "root of smallest |v0| chosen; alternate b = {}, v0 = {}",
                self.alternate.b, self.alternate.v0
            )
        }
    }
}

impl<T: Real> fmt::Display for FitReport<T> {
    /// Flat key = value record.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(f, "a = {}", p.a)?;
        writeln!(f, "b = {}", p.b)?;
        writeln!(f, "v0 = {}", p.v0)?;
        writeln!(f, "m = {}", p.m)?;
        writeln!(f, "rms_residual = {}", self.rms_residual)?;
        writeln!(f, "max_residual = {}", self.max_residual)?;
        writeln!(f, "points_used = {}", self.points_used)?;
        writeln!(f, "degenerate = {}", self.degenerate)?;
        writeln!(f, "c0 = {}", self.quadratic.0)?;
        writeln!(f, "c1 = {}", self.quadratic.1)?;
        writeln!(f, "c2 = {}", self.quadratic.2)?;
        writeln!(f, "alternate_b = {}", self.alternate.b)?;
        writeln!(f, "alternate_v0 = {}", self.alternate.v0)?;
        writeln!(f, "note = \"{}\"", self.canonical_note())
    }
}

/// Least-squares quadratic in the centred, scaled variable `t = (v - c)/s`.
struct Quadratic<T> {
    centre: T,
    scale: T,
    p: [T; 3],
}

impl<T: Real> Quadratic<T> {
    fn fit(data: &[(T, T)]) -> Option<Self> {
        let n = T::from_count(data.len());
        let centre = data.iter().map(|d| d.0).sum::<T>() / n;
        let scale = data.iter().map(|d| (d.0 - centre).abs()).fold(T::zero(), T::max);
        if !(scale > T::zero()) {
            return None;
        }
        let mut m = [[T::zero(); 4]; 3];
        for &(v, e) in data {
            let t = (v - centre) / scale;
            let basis = [T::one(), t, t * t];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = m[i][j] + basis[i] * basis[j];
                }
                m[i][3] = m[i][3] + basis[i] * e;
            }
        }
        let p = solve3(m)?;
        Some(Self { centre, scale, p })
    }

    fn eval(&self, v: T) -> T {
        let t = (v - self.centre) / self.scale;
        self.p[0] + t * (self.p[1] + t * self.p[2])
    }

    fn coefficients(&self) -> (T, T, T) {
        let (c, s) = (self.centre, self.scale);
        let [p0, p1, p2] = self.p;
        let two = lit::<T>(2.0);
        (
            p0 - p1 * c / s + p2 * c * c / (s * s),
            p1 / s - two * p2 * c / (s * s),
            p2 / (s * s),
        )
    }

    fn leading(&self) -> T {
        self.p[2] / (self.scale * self.scale)
    }

    /// Discriminant relative to the size of its terms.
    fn relative_discriminant(&self) -> T {
        let [p0, p1, p2] = self.p;
        let four = lit::<T>(4.0);
        let d = p1 * p1 - four * p0 * p2;
        d / (p1 * p1 + (four * p0 * p2).abs())
    }

    fn roots(&self) -> (T, T) {
        let [p0, p1, p2] = self.p;
        let disc = (p1 * p1 - lit::<T>(4.0) * p0 * p2).max(T::zero()).sqrt();
        let sign = if p1 < T::zero() { -T::one() } else { T::one() };
        let q = -(p1 + sign * disc) / lit(2.0);
        let back = |t: T| self.centre + self.scale * t;
        (back(q / p2), back(p0 / q))
    }

    fn vertex(&self) -> T {
        self.centre - self.scale * self.p[1] / (lit::<T>(2.0) * self.p[2])
    }
}

fn solve3<T: Real>(mut m: [[T; 4]; 3]) -> Option<[T; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col] == T::zero() {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] = m[row][k] - f * m[col][k];
            }
        }
    }
    let mut x = [T::zero(); 3];
    for i in (0..3).rev() {
        let s = (i + 1..3).fold(m[i][3], |acc, k| acc - m[i][k] * x[k]);
        x[i] = s / m[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn residuals<T: Real>(p: &CoulombModelParams<T>, data: &[(T, T)]) -> (T, T) {
    let (sum, max) = data.iter().fold((T::zero(), T::zero()), |(s, m), &(v, e)| {
        let r = (p.energy(v) - e).abs();
        (s + r * r, m.max(r))
    });
    ((sum / T::from_count(data.len())).sqrt(), max)
}

fn sse<T: Real>(p: &CoulombModelParams<T>, data: &[(T, T)]) -> T {
    data.iter().map(|&(v, e)| (p.energy(v) - e).powi(2)).sum()
}

/// Gauss-Newton on `(a, b, v0)` or, with `fix_b`, on `(a, v0)`; steps are halved
/// until the squared error does not increase.
fn gauss_newton<T: Real>(start: CoulombModelParams<T>, data: &[(T, T)], fix_b: bool, max_iter: usize) -> CoulombModelParams<T> {
    let mut p = start;
    let mut cost = sse(&p, data);
    let k = if fix_b { 2 } else { 3 };
    for _ in 0..max_iter {
        let mut m = [[T::zero(); 4]; 3];
        for &(v, e) in data {
            let u = v - p.v0;
            let r = e - p.energy(v);
            let ja = -p.m * p.a * u * u / lit(2.0);
            let jv = -p.b + p.m * p.a * p.a * u / lit(2.0);
            let row = if fix_b { [ja, jv, T::zero()] } else { [ja, u, jv] };
            for i in 0..k {
                for j in 0..k {
                    m[i][j] = m[i][j] + row[i] * row[j];
                }
                m[i][3] = m[i][3] + row[i] * r;
            }
        }
        let step = if fix_b {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det == T::zero() {
                break;
            }
            [
                (m[0][3] * m[1][1] - m[0][1] * m[1][3]) / det,
                (m[0][0] * m[1][3] - m[1][0] * m[0][3]) / det,
                T::zero(),
            ]
        } else {
            match solve3(m) {
                Some(s) => s,
                None => break,
            }
        };
        let mut lambda = T::one();
        let mut improved = false;
        for _ in 0..40 {
            let trial = if fix_b {
                CoulombModelParams { a: p.a + lambda * step[0], v0: p.v0 + lambda * step[1], ..p }
            } else {
                CoulombModelParams {
                    a: p.a + lambda * step[0],
                    b: p.b + lambda * step[1],
                    v0: p.v0 + lambda * step[2],
                    ..p
                }
            };
            let c = sse(&trial, data);
            if trial.a > T::zero() && c <= cost {
                improved = c < cost;
                p = trial;
                cost = c;
                break;
            }
            lambda = lambda / lit(2.0);
        }
        if !improved {
            break;
        }
    }
    p
}

pub fn fit_coulomb<T: Real>(data: &[(T, T)], m: T) -> Result<FitReport<T>> {
    fit_coulomb_with(data, m, &FitOptions::default())
}

/// Fits `{a, b, v0}` by least squares on the quadratic `c2 v² + c1 v + c0`.
///
/// When the full data set is not concave, the deepest points are dropped one
/// at a time (keeping at least three) until it is. The root of smallest
/// magnitude becomes v0. A quadratic without distinct real roots is read as
/// a double root: b = 0 and `(a, v0)` are refined against the data.
pub fn fit_coulomb_with<T: Real>(data: &[(T, T)], m: T, opts: &FitOptions) -> Result<FitReport<T>> {
    if data.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: data.len() });
    }
    if data.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::NonMonotoneAbscissae);
    }
    if !(m > T::zero()) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
    }

    let mut used = data.len();
    let quad = loop {
        let q = Quadratic::fit(&data[..used]).ok_or(Error::NotConcave)?;
        if q.leading() < T::zero() {
            break q;
        }
        if used == 3 {
            return Err(Error::NotConcave);
        }
        used -= 1;
    };
    let fitted = &data[..used];

    let c2 = quad.leading();
    let a = lit::<T>(2.0) * (-c2 / m).sqrt();
    let degenerate = quad.relative_discriminant() < lit(1e-10);
    let mut params = if degenerate {
        let start = CoulombModelParams { a, b: T::zero(), v0: quad.vertex(), m };
        gauss_newton(start, fitted, true, 100)
    } else {
        let (r1, r2) = quad.roots();
        let v0 = if r1.abs() <= r2.abs() { r1 } else { r2 };
        let b = lit::<T>(2.0) * c2 * v0 + quad.coefficients().1;
        CoulombModelParams { a, b, v0, m }
    };
    if opts.refine && !degenerate {
        params = gauss_newton(params, fitted, false, opts.max_iter);
    }
    debug_assert!(fitted.iter().all(|&(v, _)| quad.eval(v).is_finite()));

    let (rms_residual, max_residual) = residuals(&params, data);
    Ok(FitReport {
        alternate: params.alternate(),
        params,
        rms_residual,
        max_residual,
        quadratic: quad.coefficients(),
        points_used: used,
        degenerate,
    })
}

/// `-Δ/m + v [-α/(e^{βr} - 1)]`, optionally with the operator term `b (v - v0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HulthenModelParams<T> {
    pub alpha: T,
    pub beta: T,
    pub m: T,
    /// `(b, v0)` of the shifted operator.
    pub shift: Option<(T, T)>,
}

impl<T: Real> HulthenModelParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if !(alpha > T::zero()) || !(beta > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "Hulthen needs alpha > 0 and beta > 0, got {alpha}, {beta}"
            )));
        }
        Ok(Self { alpha, beta, m: T::one(), shift: None })
    }

    /// Shape multiplying the coupling: the Hulthén term plus the constant b.
    pub fn shape(&self) -> PotentialShape<T> {
        let h = PotentialShape::Hulthen { alpha: self.alpha, beta: self.beta };
        match self.shift {
            Some((b, _)) if b != T::zero() => PotentialShape::Affine { base: Box::new(h), scale: T::one(), shift: b },
            _ => h,
        }
    }

    /// Constant subtracted from the operator: `b v0`.
    pub fn energy_offset(&self) -> T {
        self.shift.map_or(T::zero(), |(b, v0)| -b * v0)
    }
}

/// Exact s-state energy `-(m v α - β²(n+1)²)² / (4 m β² (n+1)²)` plus any shift.
pub fn hulthen_level<T: Real>(p: &HulthenModelParams<T>, v: T, n: usize) -> Result<T> {
    let k = T::from_count(n + 1);
    let lhs = p.m * v * p.alpha;
    let rhs = p.beta * p.beta * k * k;
    if lhs < rhs {
        return Err(Error::HulthenNotBound { lhs: to_f64(lhs), rhs: to_f64(rhs) });
    }
    let e = -(lhs - rhs).powi(2) / (lit::<T>(4.0) * p.m * rhs);
    Ok(e + p.shift.map_or(T::zero(), |(b, v0)| b * (v - v0)))
}

/// The Hulthén operator whose ground-state curve equals the Coulomb model's:
/// `α = m v0 a²`, `β = m v0 a`, carrying `(b, v0)`.
pub fn hulthen_equivalent<T: Real>(p: &CoulombModelParams<T>) -> Result<HulthenModelParams<T>> {
    if !(p.v0 > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "Hulthen equivalent needs v0 > 0, got {}",
            p.v0
        )));
    }
    Ok(HulthenModelParams {
        alpha: p.m * p.v0 * p.a * p.a,
        beta: p.m * p.v0 * p.a,
        m: p.m,
        shift: Some((p.b, p.v0)),
    })
}
