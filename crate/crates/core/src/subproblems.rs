//! Solvers for the Bregman proximal subproblem
//!
//! ```text
//! T_λ(u) = argmin_x { f(x) + ⟨x − u, ω⟩ + D_h(x, u)/λ }
//!        = argmin_x { λ f(x) + ⟨x, p_λ(u)⟩ + h(x) },   p_λ(u) = λω − ∇h(u)
//! ```
//!
//! for the kernel family of [`crate::kernels`], together with the Euclidean
//! proximal maps used by the Euclidean methods and the baselines.
//!
//! Both closed forms reduce to a radial search: the minimizer points along a
//! fixed direction and only its length `t*` needs a scalar root.

use std::cmp::Ordering;

use thiserror::Error;

use crate::kernels::{sqrt_one_plus_sq, Kernel};
use crate::linalg::{norm, norm_l1};
use crate::root::{find_root_increasing, RootError, RootOptions, WithDerivative};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubproblemError {
    #[error("sparsity level {r} is outside 1..={n}")]
    InvalidRank { r: usize, n: usize },
    #[error("radius must be positive (got {0})")]
    InvalidRadius(f64),
    #[error("stepsize must be positive (got {0})")]
    InvalidStepsize(f64),
    #[error("radial root search failed: {0}")]
    Root(#[from] RootError),
}

/// One instance of the subproblem: base point `u`, linear term `ω`, stepsize
/// `λ` and kernel.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemQuery<'a, S: Scalar> {
    pub u: &'a [S],
    pub omega: &'a [S],
    pub lambda: S,
    pub kernel: &'a Kernel<S>,
}

impl<'a, S: Scalar> SubproblemQuery<'a, S> {
    pub fn new(u: &'a [S], omega: &'a [S], lambda: S, kernel: &'a Kernel<S>) -> Result<Self, SubproblemError> {
        if !(lambda > S::zero()) {
            return Err(SubproblemError::InvalidStepsize(lambda.as_f64()));
        }
        Ok(Self {
            u,
            omega,
            lambda,
            kernel,
        })
    }

    /// `p_λ(u) = λω − ∇h(u)`
    pub fn p_lambda(&self) -> Vec<S> {
        let c = self.kernel.grad_factor(crate::linalg::norm_scaled(self.u));
        self.omega
            .iter()
            .zip(self.u)
            .map(|(&w, &u)| self.lambda * w - c * u)
            .collect()
    }

    /// Objective `λf(x) + ⟨x, p⟩ + h(x)` without the `f` term; useful for
    /// comparing candidate minimizers that are all feasible for `f = δ_D`.
    pub fn smooth_objective(&self, p: &[S], x: &[S]) -> S {
        crate::linalg::dot(x, p) + self.kernel.value(x)
    }
}

/// Result of a radial solve: the minimizer and its radial scale `t*`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution<S> {
    pub x: Vec<S>,
    pub t: S,
}

/// Indices of the `r` largest magnitudes, ties broken towards the lower index.
fn top_r_indices<S: Scalar>(x: &[S], r: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    let order = |&i: &usize, &j: &usize| -> Ordering {
        x[j].abs()
            .partial_cmp(&x[i].abs())
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    };
    if r < idx.len() {
        idx.select_nth_unstable_by(r - 1, order);
        idx.truncate(r);
    }
    idx
}

/// `H_r(x)`: keeps the `r` largest-magnitude coordinates.
pub fn hard_threshold<S: Scalar>(x: &[S], r: usize) -> Result<Vec<S>, SubproblemError> {
    let n = x.len();
    if r < 1 || r > n {
        return Err(SubproblemError::InvalidRank { r, n });
    }
    let mut out = vec![S::zero(); n];
    for i in top_r_indices(x, r) {
        out[i] = x[i];
    }
    Ok(out)
}

/// `S_λ(x)_i = max(|x_i| − λ, 0)·sgn(x_i)`, the proximal map of `λ‖·‖₁`.
pub fn soft_threshold<S: Scalar>(x: &[S], lam: S) -> Vec<S> {
    x.iter()
        .map(|&v| {
            let m = v.abs() - lam;
            if m > S::zero() {
                m * v.signum()
            } else {
                S::zero()
            }
        })
        .collect()
}

/// Euclidean projection onto `{z : ‖z‖₁ ≤ radius}` by the sort-and-shift rule.
pub fn project_l1_ball<S: Scalar>(x: &[S], radius: S) -> Vec<S> {
    if norm_l1(x) <= radius {
        return x.to_vec();
    }
    let mut mags: Vec<S> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumsum = S::zero();
    let mut theta = S::zero();
    for (j, &m) in mags.iter().enumerate() {
        cumsum = cumsum + m;
        let candidate = (cumsum - radius) / S::from_usize(j + 1).unwrap();
        if m > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    soft_threshold(x, theta)
}

/// `prox_{λ‖·‖₁}`
pub fn prox_l1<S: Scalar>(z: &[S], lam: S) -> Vec<S> {
    soft_threshold(z, lam)
}

/// `prox_{λ‖·‖∞}(z) = z − λ·Proj(z/λ; B₁)` (Moreau decomposition).
pub fn prox_linf<S: Scalar>(z: &[S], lam: S) -> Vec<S> {
    if lam == S::zero() {
        return z.to_vec();
    }
    let scaled: Vec<S> = z.iter().map(|&v| v / lam).collect();
    let proj = project_l1_ball(&scaled, S::one());
    z.iter().zip(&proj).map(|(&v, &p)| v - lam * p).collect()
}

/// Euclidean projection onto `D = {‖x‖₀ ≤ r, ‖x‖ ≤ R}`: hard threshold, then
/// radial scaling into the ball.
pub fn prox_l0_ball_euclidean<S: Scalar>(z: &[S], r: usize, radius: S) -> Result<Vec<S>, SubproblemError> {
    if !(radius > S::zero()) {
        return Err(SubproblemError::InvalidRadius(radius.as_f64()));
    }
    let mut h = hard_threshold(z, r)?;
    let nh = norm(&h);
    if nh > radius {
        let s = radius / nh;
        h.iter_mut().for_each(|v| *v = *v * s);
    }
    Ok(h)
}

/// Bregman subproblem with `f = δ_D`, `D = {‖x‖₀ ≤ r, ‖x‖ ≤ R}`.
///
/// With `p = p_λ(u)` and `c = ‖H_r(p)‖`, the minimizer is
/// `−t*·H_r(p)/c` where `t* = R` if `c ≥ αR(1+R²)^{-1/2} + βR` (the radial
/// derivative is nonpositive at `R`), otherwise the root in `(0, R)` of
/// `αt(1+t²)^{-1/2} + βt − c`.
pub fn solve_l0_ball<S: Scalar>(
    query: &SubproblemQuery<'_, S>,
    r: usize,
    radius: S,
) -> Result<RadialSolution<S>, SubproblemError> {
    let p = query.p_lambda();
    solve_l0_ball_from_p(&p, query.kernel, r, radius)
}

/// [`solve_l0_ball`] with `p_λ(u)` already formed.
pub fn solve_l0_ball_from_p<S: Scalar>(
    p: &[S],
    kernel: &Kernel<S>,
    r: usize,
    radius: S,
) -> Result<RadialSolution<S>, SubproblemError> {
    if !(radius > S::zero()) {
        return Err(SubproblemError::InvalidRadius(radius.as_f64()));
    }
    let mut h = hard_threshold(p, r)?;
    let c = norm(&h);
    if c == S::zero() {
        return Ok(RadialSolution {
            x: vec![S::zero(); p.len()],
            t: S::zero(),
        });
    }
    let (alpha, beta) = (kernel.alpha(), kernel.beta());
    let t = if c >= alpha * radius / sqrt_one_plus_sq(radius) + beta * radius {
        radius
    } else if alpha == S::zero() {
        c / beta
    } else {
        let phi = |t: S| alpha * t / sqrt_one_plus_sq(t) + beta * t - c;
        let dphi = |t: S| alpha / sqrt_one_plus_sq(t).powi(3) + beta;
        find_root_increasing(&WithDerivative(phi, dphi), S::zero(), radius, &RootOptions::default())?
    };
    let s = -t / c;
    h.iter_mut().for_each(|v| *v = *v * s);
    Ok(RadialSolution { x: h, t })
}

/// Bregman subproblem for a proper lsc convex positively homogeneous `f`
/// whose Euclidean proximal map `prox(z, λ) = prox_{λf}(z)` is available.
///
/// The minimizer is `t*·v` with `v = prox_{λf}(−p_λ(u))` and `t*` the root of
/// `αt(1+t²‖v‖²)^{-1/2} + βt − 1`; when `v = 0`, `t* = 1/(α+β)`.
pub fn solve_homogeneous<S: Scalar, P>(query: &SubproblemQuery<'_, S>, prox: P) -> Result<RadialSolution<S>, SubproblemError>
where
    P: Fn(&[S], S) -> Vec<S>,
{
    let neg_p: Vec<S> = query.p_lambda().into_iter().map(|v| -v).collect();
    let v = prox(&neg_p, query.lambda);
    let (alpha, beta) = (query.kernel.alpha(), query.kernel.beta());
    let nv = norm(&v);
    if nv == S::zero() {
        return Ok(RadialSolution {
            x: v,
            t: S::one() / (alpha + beta),
        });
    }
    let t = if alpha == S::zero() {
        S::one() / beta
    } else {
        let phi = |t: S| alpha * t / sqrt_one_plus_sq(t * nv) + beta * t - S::one();
        let dphi = |t: S| alpha / sqrt_one_plus_sq(t * nv).powi(3) + beta;
        find_root_increasing(&WithDerivative(phi, dphi), S::zero(), S::one() / beta, &RootOptions::default())?
    };
    Ok(RadialSolution {
        x: v.into_iter().map(|e| t * e).collect(),
        t,
    })
}

/// ℓ₁ closed form `T_λ(u) = −t*·S_λ(p_λ(u))`, kept as an independent path
/// for cross-checking [`solve_homogeneous`].
pub fn solve_l1_closed_form<S: Scalar>(query: &SubproblemQuery<'_, S>) -> Result<RadialSolution<S>, SubproblemError> {
    let s = soft_threshold(&query.p_lambda(), query.lambda);
    let (alpha, beta) = (query.kernel.alpha(), query.kernel.beta());
    let ns = norm(&s);
    if ns == S::zero() {
        return Ok(RadialSolution {
            x: s,
            t: S::one() / (alpha + beta),
        });
    }
    let t = if alpha == S::zero() {
        S::one() / beta
    } else {
        let phi = |t: S| alpha * t / sqrt_one_plus_sq(t * ns) + beta * t - S::one();
        let dphi = |t: S| alpha / sqrt_one_plus_sq(t * ns).powi(3) + beta;
        find_root_increasing(&WithDerivative(phi, dphi), S::zero(), S::one() / beta, &RootOptions::default())?
    };
    Ok(RadialSolution {
        x: s.into_iter().map(|e| -t * e).collect(),
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, dist_sq};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernel(a: f64, b: f64) -> Kernel<f64> {
        Kernel::new(a, b).unwrap()
    }

    #[test]
    fn p_lambda_examples() {
        let k = kernel(0.3, 2.0);
        let q = SubproblemQuery::new(&[0.0, 0.0], &[0.0, 0.0], 0.7, &k).unwrap();
        assert_eq!(q.p_lambda(), vec![0.0, 0.0]);
        let e = Kernel::euclidean();
        let q = SubproblemQuery::new(&[1.0, 0.0], &[0.0, 1.0], 2.0, &e).unwrap();
        assert_eq!(q.p_lambda(), vec![-1.0, 2.0]);
        let k = kernel(1.0, 1.0);
        let q = SubproblemQuery::new(&[1.0, 0.0], &[0.0, 0.0], 1.0, &k).unwrap();
        let p = q.p_lambda();
        assert!((p[0] + 1.70711).abs() < 1e-5);
        assert!(SubproblemQuery::new(&[1.0], &[1.0], 0.0, &k).is_err());
    }

    #[test]
    fn hard_threshold_examples() {
        assert_eq!(hard_threshold(&[3.0, -1.0, 2.0, 0.0], 2).unwrap(), vec![3.0, 0.0, 2.0, 0.0]);
        assert_eq!(hard_threshold(&[2.0, -2.0], 1).unwrap(), vec![2.0, 0.0]);
        assert_eq!(hard_threshold(&[1.0, -2.0, 2.0, 2.0], 2).unwrap(), vec![0.0, -2.0, 2.0, 0.0]);
        assert_eq!(hard_threshold(&[0.0, 0.0, 5.0], 2).unwrap(), vec![0.0, 0.0, 5.0]);
        assert!(matches!(hard_threshold(&[1.0, 2.0], 0), Err(SubproblemError::InvalidRank { r: 0, n: 2 })));
        assert!(matches!(hard_threshold(&[1.0, 2.0], 3), Err(SubproblemError::InvalidRank { r: 3, n: 2 })));
    }

    #[test]
    fn hard_threshold_is_homogeneous() {
        let x = [0.3, -1.7, 2.9, 0.11, -0.5];
        let hx = hard_threshold(&x, 2).unwrap();
        let cx: Vec<f64> = x.iter().map(|v| -3.0 * v).collect();
        let hcx = hard_threshold(&cx, 2).unwrap();
        for (a, b) in hcx.iter().zip(&hx) {
            assert_eq!(*a, -3.0 * b);
        }
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[2.5, 0.3], 1.0), vec![1.5, 0.0]);
        let x = [0.2, -4.0, 1e-3];
        assert_eq!(soft_threshold(&x, 0.0), x.to_vec());
        let nx: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = soft_threshold(&nx, 0.7);
        let b = soft_threshold(&x, 0.7);
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(*p, -q);
        }
    }

    /// Projected gradient on the ℓ₁ ball with exact projection replaced by
    /// bisection on the KKT threshold; independent of the sort-based rule.
    fn l1_projection_oracle(x: &[f64], radius: f64) -> Vec<f64> {
        if norm_l1(x) <= radius {
            return x.to_vec();
        }
        let excess = |theta: f64| x.iter().map(|v| (v.abs() - theta).max(0.0)).sum::<f64>() - radius;
        let (mut lo, mut hi) = (0.0, x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        soft_threshold(x, 0.5 * (lo + hi))
    }

    #[test]
    fn l1_projection_examples() {
        assert_eq!(project_l1_ball(&[0.3, 0.2], 1.0), vec![0.3, 0.2]);
        assert_eq!(project_l1_ball(&[3.0, 0.0], 1.0), vec![1.0, 0.0]);
        let p = project_l1_ball(&[2.0, 1.0], 1.0);
        assert_eq!(p, vec![1.0, 0.0]);
        let o = l1_projection_oracle(&[2.0, 1.0], 1.0);
        assert!(dist(&p, &o) < 1e-8);
    }

    #[test]
    fn moreau_decomposition_recomposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let z: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lam = rng.random_range(0.1..2.0);
            let prox = prox_linf(&z, lam);
            let scaled: Vec<f64> = z.iter().map(|v| v / lam).collect();
            let proj = project_l1_ball(&scaled, 1.0);
            for i in 0..6 {
                assert!((prox[i] + lam * proj[i] - z[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn euclidean_l0_prox_examples() {
        assert_eq!(prox_l0_ball_euclidean(&[3.0, -1.0, 2.0], 2, 10.0).unwrap(), vec![3.0, 0.0, 2.0]);
        assert_eq!(prox_l0_ball_euclidean(&[3.0, 0.0, 4.0], 1, 1.0).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(prox_l0_ball_euclidean(&[0.0, 0.0], 1, 1.0).unwrap(), vec![0.0, 0.0]);
        assert!(prox_l0_ball_euclidean(&[1.0], 2, 1.0).is_err());
        assert!(prox_l0_ball_euclidean(&[1.0], 1, 0.0).is_err());
    }

    /// All supports of size ≤ r.
    fn supports(n: usize, r: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..r {
            let mut next = Vec::new();
            for s in &out {
                let start = s.last().map_or(0, |l| l + 1);
                for i in start..n {
                    let mut t = s.clone();
                    t.push(i);
                    next.push(t);
                }
            }
            out.extend(next);
        }
        out.sort();
        out.dedup();
        out
    }

    #[test]
    fn euclidean_l0_prox_is_optimal_against_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.random_range(1..=6);
            let r = rng.random_range(1..=n.min(3));
            let radius = rng.random_range(0.2..3.0);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x = prox_l0_ball_euclidean(&z, r, radius).unwrap();
            let best = supports(n, r)
                .into_iter()
                .map(|s| {
                    let mut c = vec![0.0; n];
                    for &i in &s {
                        c[i] = z[i];
                    }
                    let nc = norm(&c);
                    if nc > radius {
                        c.iter_mut().for_each(|v| *v *= radius / nc);
                    }
                    dist_sq(&c, &z)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(dist_sq(&x, &z) <= best + 1e-12);
        }
    }

    #[test]
    fn l0_ball_examples() {
        let k = kernel(1.0, 1.0);
        // p = 0
        let u = [0.0, 0.0, 0.0];
        let q = SubproblemQuery::new(&u, &u, 0.5, &k).unwrap();
        let s = solve_l0_ball(&q, 1, 1.0).unwrap();
        assert_eq!(s.x, vec![0.0; 3]);
        // boundary case: ‖H_r(p)‖ = 2 ≥ 1/√2 + 1
        let s = solve_l0_ball_from_p(&[0.0, 2.0, 0.0], &k, 1, 1.0).unwrap();
        assert_eq!(s.t, 1.0);
        assert_eq!(s.x, vec![0.0, -1.0, 0.0]);
        // interior root
        let s = solve_l0_ball_from_p(&[1.0, 0.0, 0.0], &k, 1, 1.0).unwrap();
        assert!((s.t - 0.53095).abs() < 1e-4);
        assert!((s.x[0] + 0.53095).abs() < 1e-4);
        // R = 3, c = 3.5: between 1/√10 + 3 and 3/√10 + 3, so the root is interior
        let s = solve_l0_ball_from_p(&[3.5, 0.0], &k, 1, 3.0).unwrap();
        assert!(s.t < 3.0);
        assert!((s.t / (1.0 + s.t * s.t).sqrt() + s.t - 3.5).abs() < 1e-10);
        // Euclidean kernel uses the closed form
        let s = solve_l0_ball_from_p(&[0.3, -0.4], &Kernel::euclidean(), 2, 1.0).unwrap();
        assert_eq!(s.x, vec![-0.3, 0.4]);
    }

    /// Exhaustive search over supports of size ≤ r, using the radial
    /// reduction on each support and a fine grid for the length.
    fn l0_ball_brute_force(p: &[f64], k: &Kernel<f64>, r: usize, radius: f64) -> f64 {
        let n = p.len();
        let grid = 100_000;
        let mut best = k.value(&vec![0.0; n]);
        for s in supports(n, r) {
            if s.is_empty() {
                continue;
            }
            let mut ps = vec![0.0; n];
            for &i in &s {
                ps[i] = p[i];
            }
            let c = norm(&ps);
            if c == 0.0 {
                continue;
            }
            // on a fixed support, for fixed length t the best direction is −p_S/‖p_S‖
            for j in 0..=grid {
                let t = radius * j as f64 / grid as f64;
                let val = k.alpha() * (1.0 + t * t).sqrt() + 0.5 * k.beta() * t * t - c * t;
                best = best.min(val);
            }
        }
        best
    }

    #[test]
    fn l0_ball_matches_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let n = rng.random_range(1..=6);
            let r = rng.random_range(1..=n.min(2));
            let k = kernel(rng.random_range(0.0..2.0), rng.random_range(0.2..3.0));
            let radius = rng.random_range(0.2..3.0);
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let lam = rng.random_range(0.1..2.0);
            let q = SubproblemQuery::new(&u, &w, lam, &k).unwrap();
            let p = q.p_lambda();
            let s = solve_l0_ball(&q, r, radius).unwrap();
            assert!(crate::linalg::count_nonzero(&s.x) <= r);
            assert!(norm(&s.x) <= radius * (1.0 + 1e-12));
            let ours = q.smooth_objective(&p, &s.x);
            let brute = l0_ball_brute_force(&p, &k, r, radius);
            assert!((ours - brute).abs() <= 1e-6, "ours {ours} brute {brute}");
        }
    }

    fn first_order_residual<P: Fn(&[f64], f64) -> Vec<f64>>(q: &SubproblemQuery<'_, f64>, x: &[f64], prox: P) -> f64 {
        // 0 ∈ λ∂f(x) + p + ∇h(x)  ⇔  x = prox_{λf}(x − p − ∇h(x))
        let p = q.p_lambda();
        let g = q.kernel.grad(x);
        let z: Vec<f64> = (0..x.len()).map(|i| x[i] - p[i] - g[i]).collect();
        dist(&prox(&z, q.lambda), x)
    }

    #[test]
    fn homogeneous_examples() {
        let k = kernel(1.0, 1.0);
        // v = 0: λ ≥ ‖p‖∞ for ℓ₁
        let u = [0.1, -0.2];
        let w = [0.0, 0.0];
        let q = SubproblemQuery::new(&u, &w, 5.0, &k).unwrap();
        let s = solve_homogeneous(&q, prox_l1).unwrap();
        assert_eq!(s.x, vec![0.0, 0.0]);
        assert_eq!(s.t, 0.5);
        // p = (2.5, 0.3): u = 0, ω = p, λ = 1
        let z = [0.0, 0.0];
        let w = [2.5, 0.3];
        let q = SubproblemQuery::new(&z, &w, 1.0, &k).unwrap();
        let s = solve_homogeneous(&q, prox_l1).unwrap();
        assert!((s.t - 0.5678).abs() < 1e-3);
        assert!((s.x[0] + 0.8517).abs() < 1e-3);
        assert_eq!(s.x[1], 0.0);
        let c = solve_l1_closed_form(&q).unwrap();
        assert!((c.x[0] - s.x[0]).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_reduces_to_prox_for_euclidean_kernel() {
        let e = Kernel::euclidean();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let u: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let w: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lam = rng.random_range(0.05..2.0);
            let q = SubproblemQuery::new(&u, &w, lam, &e).unwrap();
            let z: Vec<f64> = (0..5).map(|i| u[i] - lam * w[i]).collect();
            for (s, direct) in [
                (solve_homogeneous(&q, prox_l1).unwrap(), prox_l1(&z, lam)),
                (solve_homogeneous(&q, prox_linf).unwrap(), prox_linf(&z, lam)),
            ] {
                assert!(dist(&s.x, &direct) <= 1e-10);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn homogeneous_first_order_and_l1_formula(
            u in proptest::collection::vec(-3.0..3.0f64, 4),
            w in proptest::collection::vec(-3.0..3.0f64, 4),
            lam in 0.05..2.0f64,
            a in 0.0..2.0f64,
            b in 0.1..3.0f64,
        ) {
            let k = kernel(a, b);
            let q = SubproblemQuery::new(&u, &w, lam, &k).unwrap();
            let s1 = solve_homogeneous(&q, prox_l1).unwrap();
            prop_assert!(first_order_residual(&q, &s1.x, prox_l1) <= 1e-8);
            let c = solve_l1_closed_form(&q).unwrap();
            for i in 0..4 {
                prop_assert!((c.x[i] - s1.x[i]).abs() <= 1e-10);
            }
            let si = solve_homogeneous(&q, prox_linf).unwrap();
            prop_assert!(first_order_residual(&q, &si.x, prox_linf) <= 1e-8);
        }
    }
}
