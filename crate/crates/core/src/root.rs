//! Safeguarded Newton/bisection for nondecreasing scalar equations.
//!
//! The radial equations of the Bregman subproblems are all of the form
//! `φ'(t) = 0` with `φ'` continuous and increasing on a known bracket. The
//! solver keeps a sign bracket `[lo, hi]` with `φ'(lo) ≤ 0 ≤ φ'(hi)`, tries a
//! Newton step from the current point when a derivative is available, and
//! bisects whenever that step leaves the bracket or fails to halve it.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("root not located within {iterations} iterations (bracket [{lo}, {hi}])")]
    MaxIterExceeded { iterations: usize, lo: f64, hi: f64 },
    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
}

/// Tolerances for [`find_root_increasing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions<S> {
    pub tol_x: S,
    pub tol_f: S,
    pub max_iter: usize,
}

impl<S: Scalar> Default for RootOptions<S> {
    fn default() -> Self {
        let eps = S::epsilon();
        Self {
            tol_x: S::lit(1e-14).max(eps * S::lit(4.0)),
            tol_f: S::lit(1e-12).max(eps * S::lit(16.0)),
            max_iter: 200,
        }
    }
}

/// A nondecreasing scalar function, optionally with its derivative.
pub trait IncreasingFn<S> {
    fn value(&self, t: S) -> S;

    fn derivative(&self, _t: S) -> Option<S> {
        None
    }
}

/// Wraps a plain closure without derivative information.
pub struct ValueOnly<F>(pub F);

impl<S, F: Fn(S) -> S> IncreasingFn<S> for ValueOnly<F> {
    fn value(&self, t: S) -> S {
        (self.0)(t)
    }
}

/// Wraps a closure together with its derivative.
pub struct WithDerivative<F, D>(pub F, pub D);

impl<S, F: Fn(S) -> S, D: Fn(S) -> S> IncreasingFn<S> for WithDerivative<F, D> {
    fn value(&self, t: S) -> S {
        (self.0)(t)
    }

    fn derivative(&self, t: S) -> Option<S> {
        Some((self.1)(t))
    }
}

/// Locates a root of a nondecreasing `f` in `[lo, hi]`.
///
/// Returns `t ∈ [lo, hi]` with `|f(t)| ≤ tol_f`, or the midpoint of a sign
/// bracket no wider than `tol_x` (or than one floating point spacing, when
/// `tol_x` is below the resolution at `t`).
pub fn find_root_increasing<S: Scalar, F: IncreasingFn<S> + ?Sized>(
    f: &F,
    lo: S,
    hi: S,
    opts: &RootOptions<S>,
) -> Result<S, RootError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(RootError::InvalidBracket {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let f_lo = f.value(lo);
    let f_hi = f.value(hi);
    if f_lo > opts.tol_f || f_hi < -opts.tol_f || f_lo.is_nan() || f_hi.is_nan() {
        return Err(RootError::NoSignChange {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            f_lo: f_lo.as_f64(),
            f_hi: f_hi.as_f64(),
        });
    }
    if f_lo.abs() <= opts.tol_f {
        return Ok(lo);
    }
    if f_hi.abs() <= opts.tol_f {
        return Ok(hi);
    }

    let (mut a, mut b) = (lo, hi);
    let mut t = a + (b - a) * S::half();
    let mut force_bisect = false;
    for _ in 0..opts.max_iter {
        let ft = f.value(t);
        if ft.abs() <= opts.tol_f {
            return Ok(t);
        }
        let width_before = b - a;
        if ft < S::zero() {
            a = t;
        } else {
            b = t;
        }
        let width = b - a;
        let mid = a + width * S::half();
        if width <= opts.tol_x || mid <= a || mid >= b {
            return Ok(mid);
        }

        let newton = if force_bisect {
            None
        } else {
            f.derivative(t)
                .filter(|d| *d > S::zero() && d.is_finite())
                .map(|d| t - ft / d)
                .filter(|c| *c > a && *c < b)
        };
        // Fall back to bisection on the next step if this one shrank the
        // bracket by less than half.
        force_bisect = width > width_before * S::half();
        t = newton.unwrap_or(mid);
    }
    Err(RootError::MaxIterExceeded {
        iterations: opts.max_iter,
        lo: a.as_f64(),
        hi: b.as_f64(),
    })
}
