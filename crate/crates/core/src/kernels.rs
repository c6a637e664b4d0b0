//! The Bregman kernel family `h(x) = α·√(1+‖x‖²) + (β/2)·‖x‖²`.
//!
//! `h` is `β`-strongly convex with an `(α+β)`-Lipschitz gradient. The
//! Euclidean kernel `‖x‖²/2` is the member `α = 0, β = 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dist_sq, dot, norm_scaled, norm_sq};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel weights must satisfy alpha >= 0 and beta > 0 (got alpha = {alpha}, beta = {beta})")]
    InvalidWeights { alpha: f64, beta: f64 },
}

/// Kernel weights `(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Kernel<S: Scalar> {
    alpha: S,
    beta: S,
}

/// `√(1+t²)` for `t ≥ 0`, factoring out `t` when `t²` would overflow
/// (above `1e150` in `f64`, a proportionally smaller cutoff in `f32`).
#[inline]
pub(crate) fn sqrt_one_plus_sq<S: Scalar>(t: S) -> S {
    let cutoff = S::lit(1e150).min(S::max_value().sqrt() / S::lit(16.0));
    if t > cutoff {
        t * (S::one() + (S::one() / t).powi(2)).sqrt()
    } else {
        (S::one() + t * t).sqrt()
    }
}

impl<S: Scalar> Kernel<S> {
    pub fn new(alpha: S, beta: S) -> Result<Self, KernelError> {
        if !(alpha >= S::zero()) || !(beta > S::zero()) || !alpha.is_finite() || !beta.is_finite() {
            return Err(KernelError::InvalidWeights {
                alpha: alpha.as_f64(),
                beta: beta.as_f64(),
            });
        }
        Ok(Self { alpha, beta })
    }

    /// `‖x‖²/2`
    pub fn euclidean() -> Self {
        Self {
            alpha: S::zero(),
            beta: S::one(),
        }
    }

    #[inline]
    pub fn alpha(&self) -> S {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> S {
        self.beta
    }

    pub fn is_euclidean(&self) -> bool {
        self.alpha == S::zero() && self.beta == S::one()
    }

    /// Strong convexity modulus `σ = β`.
    #[inline]
    pub fn sigma(&self) -> S {
        self.beta
    }

    /// Gradient Lipschitz constant `α + β`.
    #[inline]
    pub fn l_grad(&self) -> S {
        self.alpha + self.beta
    }

    /// `(σ, L_∇h)`
    pub fn bounds(&self) -> (S, S) {
        (self.sigma(), self.l_grad())
    }

    pub fn value(&self, x: &[S]) -> S {
        self.alpha * sqrt_one_plus_sq(norm_scaled(x)) + self.beta * S::half() * norm_sq(x)
    }

    /// Radial factor `α(1+t²)^{-1/2} + β` so that `∇h(x) = factor(‖x‖)·x`.
    #[inline]
    pub fn grad_factor(&self, t: S) -> S {
        if self.alpha == S::zero() {
            return self.beta;
        }
        self.alpha / sqrt_one_plus_sq(t) + self.beta
    }

    pub fn grad(&self, x: &[S]) -> Vec<S> {
        let c = self.grad_factor(norm_scaled(x));
        x.iter().map(|&v| c * v).collect()
    }

    /// `D_h(x, y) = h(x) − h(y) − ⟨x − y, ∇h(y)⟩`.
    ///
    /// The `α` part is evaluated through
    /// `(√(1+‖x‖²)·√(1+‖y‖²) − 1 − ⟨x,y⟩) / √(1+‖y‖²)` and the Lagrange
    /// identity, which avoids the cancellation of the textbook formula when
    /// `x ≈ y`. The result is clamped at zero.
    pub fn bregman_distance(&self, x: &[S], y: &[S]) -> S {
        let quad = self.beta * S::half() * dist_sq(x, y);
        if self.alpha == S::zero() {
            return quad;
        }
        let xx = norm_sq(x);
        let yy = norm_sq(y);
        let xy = dot(x, y);
        let sx = sqrt_one_plus_sq(xx.sqrt());
        let sy = sqrt_one_plus_sq(yy.sqrt());
        let one_plus_xy = S::one() + xy;
        let gap = if one_plus_xy >= S::zero() {
            // sx·sy − (1 + ⟨x,y⟩) = (‖x−y‖² + ‖x‖²‖y‖² − ⟨x,y⟩²) / (sx·sy + 1 + ⟨x,y⟩)
            let lagrange = (xx * yy - xy * xy).max(S::zero());
            (dist_sq(x, y) + lagrange) / (sx * sy + one_plus_xy)
        } else {
            sx * sy - one_plus_xy
        };
        let smooth = self.alpha * gap / sy;
        (smooth + quad).max(S::zero())
    }
}
