//! Monotone shape-preserving piecewise cubic Hermite interpolation.
//!
//! Node slopes start from three-point parabolic estimates, so quadratic data
//! are reproduced exactly, and are then limited (Hyman filter) so that the
//! interpolant is monotone wherever the data are: slopes vanish at local
//! extrema of the data and never exceed three times the adjacent secants.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneCubic<T> {
    x: Vec<T>,
    y: Vec<T>,
    d: Vec<T>,
}

impl<T: Real> MonotoneCubic<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::InvalidGrid(format!(
                "abscissae ({n}) and ordinates ({}) differ in length",
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite knot".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneAbscissae);
        }

        let h: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<T> = y
            .windows(2)
            .zip(&h)
            .map(|(w, &hi)| (w[1] - w[0]) / hi)
            .collect();

        let mut d = vec![T::zero(); n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                d[i] = (h[i] * delta[i - 1] + h[i - 1] * delta[i]) / (h[i - 1] + h[i]);
            }
            d[0] = ((lit::<T>(2.0) * h[0] + h[1]) * delta[0] - h[0] * delta[1]) / (h[0] + h[1]);
            let (a, b) = (h[n - 2], h[n - 3]);
            d[n - 1] = ((lit::<T>(2.0) * a + b) * delta[n - 2] - a * delta[n - 3]) / (a + b);
        }

        let three = lit::<T>(3.0);
        for i in 0..n {
            let left = if i > 0 { Some(delta[i - 1]) } else { None };
            let right = if i + 1 < n { Some(delta[i]) } else { None };
            d[i] = match (left, right) {
                (Some(l), Some(r)) => {
                    if l * r <= T::zero() || d[i] * l <= T::zero() {
                        T::zero()
                    } else {
                        let cap = three * l.abs().min(r.abs());
                        d[i].signum() * d[i].abs().min(cap)
                    }
                }
                (Some(s), None) | (None, Some(s)) => {
                    if d[i] * s <= T::zero() {
                        T::zero()
                    } else {
                        d[i].signum() * d[i].abs().min(three * s.abs())
                    }
                }
                (None, None) => unreachable!(),
            };
        }

        Ok(Self { x, y, d })
    }

    pub fn knots(&self) -> (&[T], &[T]) {
        (&self.x, &self.y)
    }

    pub fn domain(&self) -> (T, T) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, t: T) -> usize {
        let n = self.x.len();
        match self
            .x
            .binary_search_by(|p| p.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Interpolated value; outside the knot range the end slope is continued linearly.
    pub fn eval(&self, t: T) -> T {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.d[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]);
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let two = lit::<T>(2.0);
        let three = lit::<T>(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    pub fn derivative(&self, t: T) -> T {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.d[0];
        }
        if t >= self.x[n - 1] {
            return self.d[n - 1];
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let six = lit::<T>(6.0);
        let three = lit::<T>(3.0);
        let four = lit::<T>(4.0);
        let dh00 = (six * s2 - six * s) / h;
        let dh10 = three * s2 - four * s + T::one();
        let dh01 = (six * s - six * s2) / h;
        let dh11 = three * s2 - lit::<T>(2.0) * s;
        dh00 * self.y[i] + dh10 * self.d[i] + dh01 * self.y[i + 1] + dh11 * self.d[i + 1]
    }

    /// Root of the interpolant inside the knot range, if the knot values change sign.
    pub fn root(&self) -> Option<T> {
        let n = self.x.len();
        let k = (0..n - 1).find(|&i| self.y[i] * self.y[i + 1] <= T::zero())?;
        if self.y[k] == T::zero() {
            return Some(self.x[k]);
        }
        let (mut lo, mut hi) = (self.x[k], self.x[k + 1]);
        let flo = self.eval(lo);
        for _ in 0..200 {
            let mid = (lo + hi) / lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) * flo > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some((lo + hi) / lit(2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_quadratic_exactly() {
        let x: Vec<f64> = (0..12).map(|i| 0.3 + 0.7 * (i as f64).powf(1.3)).collect();
        let y: Vec<f64> = x.iter().map(|v| -0.25 * v * v).collect();
        let p = MonotoneCubic::new(x.clone(), y).unwrap();
        for k in 0..200 {
            let t = x[0] + (x[11] - x[0]) * k as f64 / 199.0;
            assert!((p.eval(t) + 0.25 * t * t).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn flat_at_extremum() {
        let p = MonotoneCubic::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.derivative(1.0), 0.0);
        assert!(p.eval(0.5) <= 1.0 && p.eval(1.5) <= 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]),
            Err(Error::NonMonotoneAbscissae)
        );
        assert!(matches!(
            MonotoneCubic::new(vec![0.0], vec![1.0]),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn root_of_bracketed_data() {
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 - v).collect();
        let p = MonotoneCubic::new(x, y).unwrap();
        assert!((p.root().unwrap() - 2.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn monotone_data_give_monotone_interpolant(
            steps in prop::collection::vec((0.01f64..2.0, 0.0f64..3.0), 3..15),
        ) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let p = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
            for (i, yi) in y.iter().enumerate() {
                prop_assert!((p.eval(x[i]) - yi).abs() < 1e-12);
            }
            let (a, b) = p.domain();
            let mut prev = p.eval(a);
            for k in 1..=400 {
                let cur = p.eval(a + (b - a) * k as f64 / 400.0);
                prop_assert!(cur >= prev - 1e-12);
                prev = cur;
            }
        }
    }
}
