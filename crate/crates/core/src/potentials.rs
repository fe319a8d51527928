//! Radial potential shapes f(r) for H = -Δ + v f(r).

use std::fmt;

use crate::error::{to_f64, Error, Result};
use crate::interp::MonotoneCubic;
use crate::scalar::{lit, Real};

/// The rule `c/r + d` used to continue tabulated shapes beyond their knots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseLinear<T> {
    pub c: T,
    pub d: T,
}

impl<T: Real> InverseLinear<T> {
    /// The unique `c/r + d` through two points.
    pub fn through(r1: T, f1: T, r2: T, f2: T) -> Self {
        let c = (f1 - f2) / (r1.recip() - r2.recip());
        Self { c, d: f1 - c / r1 }
    }

    pub fn eval(&self, r: T) -> T {
        self.c / r + self.d
    }
}

/// Continuation of a tabulated shape past its last knot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailRule<T> {
    /// Hold the last knot value.
    Constant,
    InverseLinear(InverseLinear<T>),
}

/// A shape known on a grid of radii: monotone cubic between knots, `c/r + d`
/// below the first knot and a [`TailRule`] above the last.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedShape<T> {
    interp: MonotoneCubic<T>,
    inner: InverseLinear<T>,
    outer: TailRule<T>,
}

impl<T: Real> TabulatedShape<T> {
    /// Tabulate with the small-r rule fitted to the two innermost knots and a
    /// constant large-r continuation.
    pub fn new(r: Vec<T>, f: Vec<T>) -> Result<Self> {
        Self::check_knots(&r, &f)?;
        let inner = InverseLinear::through(r[0], f[0], r[1], f[1]);
        let interp = MonotoneCubic::new(r, f)?;
        Ok(Self { interp, inner, outer: TailRule::Constant })
    }

    pub fn from_parts(r: Vec<T>, f: Vec<T>, inner: InverseLinear<T>, outer: TailRule<T>) -> Result<Self> {
        Self::check_knots(&r, &f)?;
        let interp = MonotoneCubic::new(r, f)?;
        Ok(Self { interp, inner, outer })
    }

    /// Replace the constant tail by `c/r + d` through the two outermost knots.
    ///
    /// Falls back to the constant tail when the fitted `c` is positive, i.e.
    /// when the shape is decreasing at its outer edge.
    pub fn with_inverse_tail(mut self) -> Self {
        let (r, f) = self.interp.knots();
        let n = r.len();
        let rule = InverseLinear::through(r[n - 2], f[n - 2], r[n - 1], f[n - 1]);
        self.outer = if rule.c <= T::zero() {
            TailRule::InverseLinear(rule)
        } else {
            TailRule::Constant
        };
        self
    }

    fn check_knots(r: &[T], f: &[T]) -> Result<()> {
        if r.len() != f.len() {
            return Err(Error::InvalidGrid("radii and values differ in length".into()));
        }
        if r.len() < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: r.len() });
        }
        if r[0] <= T::zero() {
            return Err(Error::NonPositiveRadius(to_f64(r[0])));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneAbscissae);
        }
        Ok(())
    }

    pub fn radii(&self) -> &[T] {
        self.interp.knots().0
    }

    pub fn values(&self) -> &[T] {
        self.interp.knots().1
    }

    pub fn inner_rule(&self) -> InverseLinear<T> {
        self.inner
    }

    pub fn outer_rule(&self) -> TailRule<T> {
        self.outer
    }

    /// Radial extent covered by knots.
    pub fn extent(&self) -> (T, T) {
        self.interp.domain()
    }

    pub fn eval(&self, r: T) -> T {
        let (lo, hi) = self.interp.domain();
        if r < lo {
            self.inner.eval(r)
        } else if r > hi {
            match self.outer {
                TailRule::Constant => *self.values().last().unwrap(),
                TailRule::InverseLinear(rule) => rule.eval(r),
            }
        } else {
            self.interp.eval(r)
        }
    }

    fn far_limit(&self) -> T {
        match self.outer {
            TailRule::Constant => *self.values().last().unwrap(),
            TailRule::InverseLinear(rule) => rule.d,
        }
    }

    fn affine(&self, scale: T, shift: T) -> Self {
        let map = |rule: InverseLinear<T>| InverseLinear { c: scale * rule.c, d: scale * rule.d + shift };
        let values: Vec<T> = self.values().iter().map(|&f| scale * f + shift).collect();
        Self {
            interp: MonotoneCubic::new(self.radii().to_vec(), values).expect("knots already validated"),
            inner: map(self.inner),
            outer: match self.outer {
                TailRule::Constant => TailRule::Constant,
                TailRule::InverseLinear(rule) => TailRule::InverseLinear(map(rule)),
            },
        }
    }

    /// Two-column text: one header line with the continuation rules, then `r,f` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("# shape r,f inner_c={} inner_d={}", self.inner.c, self.inner.d);
        match self.outer {
            TailRule::Constant => out.push_str(" outer=constant\n"),
            TailRule::InverseLinear(rule) => {
                out.push_str(&format!(" outer=inverse outer_c={} outer_d={}\n", rule.c, rule.d))
            }
        }
        for (r, f) in self.radii().iter().zip(self.values()) {
            out.push_str(&format!("{r},{f}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty shape file".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing shape header line".into()))?;
        let field = |key: &str| -> Option<&str> {
            header
                .split_whitespace()
                .find_map(|tok| tok.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
        };
        let num = |key: &str| -> Result<T> {
            field(key)
                .ok_or_else(|| Error::Parse(format!("shape header lacks '{key}'")))?
                .parse::<T>()
                .map_err(|_| Error::Parse(format!("bad number for '{key}'")))
        };
        let inner = InverseLinear { c: num("inner_c")?, d: num("inner_d")? };
        let outer = match field("outer") {
            Some("constant") | None => TailRule::Constant,
            Some("inverse") => TailRule::InverseLinear(InverseLinear { c: num("outer_c")?, d: num("outer_d")? }),
            Some(other) => return Err(Error::Parse(format!("unknown outer rule '{other}'"))),
        };
        let mut r = Vec::new();
        let mut f = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("shape row {}: expected two columns", k + 1)));
            };
            let parse = |s: &str| s.parse::<T>().map_err(|_| Error::Parse(format!("shape row {}: bad number '{s}'", k + 1)));
            r.push(parse(a)?);
            f.push(parse(b)?);
        }
        Self::from_parts(r, f, inner, outer)
    }
}

/// A central potential shape f(r), evaluable for every r > 0.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialShape<T> {
    /// `-alpha / r`
    Coulomb { alpha: T },
    /// `-a / r + b`
    ShiftedCoulomb { a: T, b: T },
    /// `-alpha / (exp(beta r) - 1)`
    Hulthen { alpha: T, beta: T },
    /// `-exp(-a r) / r`
    Yukawa { a: T },
    /// `-strength * r^(-exponent)`, `0 < exponent <= 1`
    Power { strength: T, exponent: T },
    Tabulated(TabulatedShape<T>),
    /// `scale * base(r) + shift`
    Affine { base: Box<PotentialShape<T>>, scale: T, shift: T },
}

fn positive<T: Real>(name: &str, x: T) -> Result<T> {
    if x > T::zero() && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

impl<T: Real> PotentialShape<T> {
    pub fn coulomb(alpha: T) -> Result<Self> {
        Ok(Self::Coulomb { alpha: positive("alpha", alpha)? })
    }

    pub fn shifted_coulomb(a: T, b: T) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::InvalidParameter("shift b must be finite".into()));
        }
        Ok(Self::ShiftedCoulomb { a: positive("a", a)?, b })
    }

    pub fn hulthen(alpha: T, beta: T) -> Result<Self> {
        Ok(Self::Hulthen { alpha: positive("alpha", alpha)?, beta: positive("beta", beta)? })
    }

    pub fn yukawa(a: T) -> Result<Self> {
        Ok(Self::Yukawa { a: positive("a", a)? })
    }

    pub fn power(strength: T, exponent: T) -> Result<Self> {
        let exponent = positive("exponent", exponent)?;
        if exponent > T::one() {
            return Err(Error::InvalidParameter(format!(
                "exponent {exponent} is more singular than Coulomb"
            )));
        }
        Ok(Self::Power { strength: positive("strength", strength)?, exponent })
    }

    pub fn tabulated(r: Vec<T>, f: Vec<T>) -> Result<Self> {
        Ok(Self::Tabulated(TabulatedShape::new(r, f)?))
    }

    /// f(r) for r > 0.
    pub fn evaluate(&self, r: T) -> Result<T> {
        if r > T::zero() {
            Ok(self.value(r))
        } else {
            Err(Error::NonPositiveRadius(to_f64(r)))
        }
    }

    /// f(r) without the radius check; callers guarantee r > 0.
    pub fn value(&self, r: T) -> T {
        match self {
            Self::Coulomb { alpha } => -*alpha / r,
            Self::ShiftedCoulomb { a, b } => -*a / r + *b,
            Self::Hulthen { alpha, beta } => -*alpha / (*beta * r).exp_m1(),
            Self::Yukawa { a } => -(-*a * r).exp() / r,
            Self::Power { strength, exponent } => -*strength * r.powf(-*exponent),
            Self::Tabulated(t) => t.eval(r),
            Self::Affine { base, scale, shift } => *scale * base.value(r) + *shift,
        }
    }

    /// lim f(r) as r → ∞.
    pub fn far_limit(&self) -> T {
        match self {
            Self::ShiftedCoulomb { b, .. } => *b,
            Self::Tabulated(t) => t.far_limit(),
            Self::Affine { base, scale, shift } => *scale * base.far_limit() + *shift,
            _ => T::zero(),
        }
    }

    /// Coefficients `(C, D)` of the small-r behaviour `f ≈ C/r + D`.
    ///
    /// Shapes less singular than Coulomb report `C = 0`.
    pub fn near_origin(&self) -> (T, T) {
        match self {
            Self::Coulomb { alpha } => (-*alpha, T::zero()),
            Self::ShiftedCoulomb { a, b } => (-*a, *b),
            Self::Hulthen { alpha, beta } => (-*alpha / *beta, *alpha / lit(2.0)),
            Self::Yukawa { a } => (-T::one(), *a),
            Self::Power { strength, exponent } if *exponent == T::one() => (-*strength, T::zero()),
            Self::Power { .. } => (T::zero(), T::zero()),
            Self::Tabulated(t) => (t.inner.c, t.inner.d),
            Self::Affine { base, scale, shift } => {
                let (c, d) = base.near_origin();
                (*scale * c, *scale * d + *shift)
            }
        }
    }

    /// The shape `scale * f(r) + shift`.
    pub fn affine_transform(&self, scale: T, shift: T) -> Result<Self> {
        positive("scale A", scale)?;
        if !shift.is_finite() {
            return Err(Error::InvalidParameter("shift B must be finite".into()));
        }
        let zero = T::zero();
        Ok(match self {
            Self::Coulomb { alpha } if shift == zero => Self::Coulomb { alpha: scale * *alpha },
            Self::Coulomb { alpha } => Self::ShiftedCoulomb { a: scale * *alpha, b: shift },
            Self::ShiftedCoulomb { a, b } => Self::ShiftedCoulomb { a: scale * *a, b: scale * *b + shift },
            Self::Hulthen { alpha, beta } if shift == zero => Self::Hulthen { alpha: scale * *alpha, beta: *beta },
            Self::Power { strength, exponent } if shift == zero => {
                Self::Power { strength: scale * *strength, exponent: *exponent }
            }
            Self::Tabulated(t) => Self::Tabulated(t.affine(scale, shift)),
            Self::Affine { base, scale: s, shift: t } => Self::Affine {
                base: base.clone(),
                scale: scale * *s,
                shift: scale * *t + shift,
            },
            other => Self::Affine { base: Box::new(other.clone()), scale, shift },
        })
    }

    /// Samples the shape on `r_grid` into a tabulated shape.
    pub fn tabulate(&self, r_grid: &[T]) -> Result<TabulatedShape<T>> {
        if let Some(&r) = r_grid.iter().find(|&&r| r <= T::zero()) {
            return Err(Error::NonPositiveRadius(to_f64(r)));
        }
        TabulatedShape::new(r_grid.to_vec(), r_grid.iter().map(|&r| self.value(r)).collect())
    }

    /// Tests the hypotheses of the uniqueness theorem on a probe grid: with
    /// g(r) = r f(r), g is negative at the smallest probe, non-decreasing and
    /// not constant.
    pub fn check_singular_class(&self, probe_grid: &[T]) -> Result<SingularClassReport<T>> {
        if probe_grid.is_empty() {
            return Err(Error::InvalidGrid("empty probe grid".into()));
        }
        if probe_grid[0] <= T::zero() {
            return Err(Error::NonPositiveRadius(to_f64(probe_grid[0])));
        }
        if probe_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneAbscissae);
        }
        let witnesses: Vec<(T, T)> = probe_grid.iter().map(|&r| (r, r * self.value(r))).collect();
        let scale = witnesses
            .iter()
            .fold(T::zero(), |m, &(_, g)| m.max(g.abs()))
            .max(T::min_positive_value());
        let slack = lit::<T>(1e-12) * scale;
        let negative_at_origin = witnesses[0].1 < T::zero();
        let non_decreasing = witnesses.windows(2).all(|w| w[1].1 >= w[0].1 - slack);
        let non_constant = witnesses.iter().any(|&(_, g)| (g - witnesses[0].1).abs() > slack);
        Ok(SingularClassReport {
            is_member: negative_at_origin && non_decreasing && non_constant,
            negative_at_origin,
            non_decreasing,
            non_constant,
            witnesses,
        })
    }

    /// Parses the `name:p1,p2` mini-grammar (`coulomb:1`, `shifted-coulomb:a,b`,
    /// `hulthen:alpha,beta`, `yukawa:a`, `power:strength,exponent`).
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
        let values: Vec<T> = params
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<T>()
                    .map_err(|_| Error::Parse(format!("bad potential parameter '{s}' in '{spec}'")))
            })
            .collect::<Result<_>>()?;
        let want = |n: usize| -> Result<()> {
            if values.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("potential '{name}' takes {n} parameter(s), got {}", values.len())))
            }
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "coulomb" => {
                want(1)?;
                Self::coulomb(values[0])
            }
            "shifted-coulomb" | "shifted_coulomb" => {
                want(2)?;
                Self::shifted_coulomb(values[0], values[1])
            }
            "hulthen" => {
                want(2)?;
                Self::hulthen(values[0], values[1])
            }
            "yukawa" => {
                want(1)?;
                Self::yukawa(values[0])
            }
            "power" => {
                want(2)?;
                Self::power(values[0], values[1])
            }
            other => Err(Error::Parse(format!("unknown potential kind '{other}'"))),
        }
    }
}

impl<T: Real> fmt::Display for PotentialShape<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Coulomb { alpha } => write!(f, "coulomb:{alpha}"),
            Self::ShiftedCoulomb { a, b } => write!(f, "shifted-coulomb:{a},{b}"),
            Self::Hulthen { alpha, beta } => write!(f, "hulthen:{alpha},{beta}"),
            Self::Yukawa { a } => write!(f, "yukawa:{a}"),
            Self::Power { strength, exponent } => write!(f, "power:{strength},{exponent}"),
            Self::Tabulated(t) => {
                let (lo, hi) = t.extent();
                write!(f, "tabulated({} knots on [{lo}, {hi}])", t.radii().len())
            }
            Self::Affine { base, scale, shift } => write!(f, "{scale}*({base})+{shift}"),
        }
    }
}

/// Outcome of [`PotentialShape::check_singular_class`].
#[derive(Clone, Debug, PartialEq)]
pub struct SingularClassReport<T> {
    pub is_member: bool,
    pub negative_at_origin: bool,
    pub non_decreasing: bool,
    pub non_constant: bool,
    /// Sampled `(r, g(r) = r f(r))`.
    pub witnesses: Vec<(T, T)>,
}
