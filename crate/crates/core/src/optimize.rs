//! Bounded one-dimensional extremum search.
//!
//! The Legendre-type transforms in this crate maximize concave or unimodal
//! functions over a closed window. A coarse scan picks the best sample, and
//! golden-section search refines inside the neighbouring cells. An optimum
//! that lands on the window edge is reported as such instead of being
//! extrapolated.

use crate::scalar::{lit, Real};

/// Location and value of an extremum found on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum<T> {
    pub arg: T,
    pub value: T,
    /// The optimum sits on (or numerically at) an end of the search window.
    pub at_boundary: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions<T> {
    /// Relative width at which golden-section refinement stops.
    pub rel_tol: T,
    /// Number of cells in the initial scan.
    pub scan_cells: usize,
    pub max_iter: usize,
}

impl<T: Real> Default for SearchOptions<T> {
    fn default() -> Self {
        Self {
            rel_tol: lit(1e-8),
            scan_cells: 24,
            max_iter: 200,
        }
    }
}

pub fn maximize<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, opts: &SearchOptions<T>) -> Extremum<T> {
    assert!(hi >= lo, "search window reversed");
    if hi == lo {
        return Extremum { arg: lo, value: f(lo), at_boundary: true };
    }

    // geometric scan for windows spanning decades on the positive axis
    let cells = opts.scan_cells.max(2);
    let geometric = lo > T::zero() && hi / lo > lit(8.0);
    let node = |k: usize| -> T {
        if k == 0 {
            return lo;
        }
        if k == cells {
            return hi;
        }
        let s = T::from_count(k) / T::from_count(cells);
        if geometric {
            lo * (hi / lo).powf(s)
        } else {
            lo + (hi - lo) * s
        }
    };
    let samples: Vec<(T, T)> = (0..=cells).map(|k| (node(k), f(node(k)))).collect();
    let best = samples
        .iter()
        .enumerate()
        .fold(0usize, |b, (k, s)| if s.1 > samples[b].1 { k } else { b });

    let mut a = samples[best.saturating_sub(1)].0;
    let mut b = samples[(best + 1).min(cells)].0;

    let inv_phi = lit::<T>((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let scale = lo.abs().max(hi.abs()).max(T::min_positive_value());
    for _ in 0..opts.max_iter {
        if (b - a).abs() <= opts.rel_tol * (c.abs() + d.abs()).max(opts.rel_tol * scale) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }

    let (mut arg, mut value) = if fc >= fd { (c, fc) } else { (d, fd) };
    // endpoints are candidates in their own right
    for &(x, fx) in [samples[0], samples[cells]].iter() {
        if fx >= value {
            arg = x;
            value = fx;
        }
    }
    let edge = lit::<T>(10.0) * opts.rel_tol * scale;
    let at_boundary = (arg - lo).abs() <= edge || (hi - arg).abs() <= edge;
    if at_boundary {
        arg = if (arg - lo).abs() <= (hi - arg).abs() { lo } else { hi };
        value = f(arg);
    }
    Extremum { arg, value, at_boundary }
}

pub fn minimize<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, opts: &SearchOptions<T>) -> Extremum<T> {
    let e = maximize(|x| -f(x), lo, hi, opts);
    Extremum { value: -e.value, ..e }
}
