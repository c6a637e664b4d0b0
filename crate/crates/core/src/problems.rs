//! Problem definitions: the sparse affine-feasibility family used by the
//! benchmark, and small quadratic problems for unit tests.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::Kernel;
use crate::linalg::{count_nonzero, dist_sq, norm, norm_l1, norm_inf, Cholesky, Matrix};
use crate::scalar::Scalar;
use crate::subproblems::{
    prox_l0_ball_euclidean, prox_l1, prox_linf, solve_homogeneous, solve_l0_ball, SubproblemError, SubproblemQuery,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("invalid dimensions: need 1 <= m < n and 1 <= r <= n (got m = {m}, n = {n}, r = {r})")]
    InvalidDimensions { m: usize, n: usize, r: usize },
    #[error("radius must be positive and finite (got {0})")]
    InvalidRadius(f64),
    #[error("A·Aᵀ numerically singular after {attempts} draws")]
    RankDeficient { attempts: usize },
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
}

/// `min f(x) + g(x)` with `g` smooth and `f` handled through its proximal
/// maps.
pub trait CompositeProblem<S: Scalar>: Sync {
    fn dim(&self) -> usize;

    /// `(g(x), ∇g(x))`
    fn g_and_grad(&self, x: &[S]) -> (S, Vec<S>);

    fn grad(&self, x: &[S]) -> Vec<S> {
        self.g_and_grad(x).1
    }

    /// `f(x)`, `+∞` outside its domain.
    fn f_value(&self, x: &[S]) -> S;

    fn l_grad_g(&self) -> S;

    /// `argmin_x { λf(x) + ⟨x, p_λ(u)⟩ + h(x) }` for the query's kernel.
    fn bregman_step(&self, query: &SubproblemQuery<'_, S>) -> Result<Vec<S>, SubproblemError>;

    /// `prox_{λf}(z)`
    fn prox(&self, z: &[S], lambda: S) -> Result<Vec<S>, SubproblemError>;

    /// `prox_{γg}(z)`
    fn prox_g(&self, z: &[S], gamma: S) -> Vec<S>;

    fn objective(&self, x: &[S]) -> S {
        self.f_value(x) + self.g_and_grad(x).0
    }
}

/// How the right-hand side `b` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BMode {
    /// i.i.d. standard Gaussian entries.
    #[default]
    Gaussian,
    /// `b = A·x♮` with `x♮` r-sparse and `‖x♮‖ = min(1, R)`, so `x♮ ∈ C ∩ D`.
    Planted,
    /// `b = A·x♮` with `x♮` r-sparse and i.i.d. standard Gaussian nonzeros
    /// (no normalization). `x♮ ∈ D` only when `R ≥ ‖x♮‖`.
    Sparse,
}

impl BMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BMode::Gaussian => "gaussian",
            BMode::Planted => "planted",
            BMode::Sparse => "sparse",
        }
    }
}

impl fmt::Display for BMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(BMode::Gaussian),
            "planted" => Ok(BMode::Planted),
            "sparse" => Ok(BMode::Sparse),
            other => Err(format!("unknown b mode {other:?} (expected gaussian, planted or sparse)")),
        }
    }
}

/// Default sparsity level `⌈m/5⌉`.
pub fn default_sparsity(m: usize) -> usize {
    m.div_ceil(5)
}

/// Everything needed to regenerate an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub seed: u64,
    pub b_mode: BMode,
}

/// `min ½dist²(x, C) + δ_D(x)` with `C = {Ax = b}` and
/// `D = {‖x‖₀ ≤ r, ‖x‖ ≤ R}`.
#[derive(Debug, Clone)]
pub struct FeasibilityInstance<S: Scalar> {
    spec: InstanceSpec,
    a: Matrix<S>,
    b: Vec<S>,
    radius: S,
    gram: Cholesky<S>,
    planted: Option<Vec<S>>,
}

const MAX_DRAWS: usize = 8;

/// Relative pivot floor for the Gram factorization.
fn gram_tolerance<S: Scalar>() -> S {
    S::lit(1e-10).max(S::epsilon() * S::lit(64.0))
}

/// Draws a feasibility instance. `A` has i.i.d. standard Gaussian entries
/// from a ChaCha8 stream seeded with `seed`; rank-deficient draws are
/// replaced by fresh ones from the same stream.
pub fn generate_instance<S: Scalar>(
    m: usize,
    n: usize,
    r: usize,
    radius: f64,
    seed: u64,
    b_mode: BMode,
) -> Result<FeasibilityInstance<S>, ProblemError> {
    if m == 0 || m >= n || r == 0 || r > n {
        return Err(ProblemError::InvalidDimensions { m, n, r });
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(ProblemError::InvalidRadius(radius));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let (a, gram) = (0..MAX_DRAWS)
        .find_map(|_| {
            let data: Vec<S> = (0..m * n).map(|_| S::lit(draw(&mut rng))).collect();
            let a = Matrix::from_row_major(m, n, data).expect("sizes agree");
            Cholesky::factor(&a.gram(), gram_tolerance()).ok().map(|g| (a, g))
        })
        .ok_or(ProblemError::RankDeficient { attempts: MAX_DRAWS })?;

    let (b, planted) = match b_mode {
        BMode::Gaussian => ((0..m).map(|_| S::lit(draw(&mut rng))).collect(), None),
        BMode::Planted | BMode::Sparse => {
            let support = sample(&mut rng, n, r);
            let mut x = vec![S::zero(); n];
            for i in support.iter() {
                x[i] = S::lit(draw(&mut rng));
            }
            if b_mode == BMode::Planted {
                let target = S::lit(radius.min(1.0));
                let nx = norm(&x);
                x.iter_mut().for_each(|v| *v = *v * target / nx);
            }
            (a.mul_vec(&x), Some(x))
        }
    };
    Ok(FeasibilityInstance {
        spec: InstanceSpec {
            m,
            n,
            r,
            radius,
            seed,
            b_mode,
        },
        a,
        b,
        radius: S::lit(radius),
        gram,
        planted,
    })
}

impl<S: Scalar> FeasibilityInstance<S> {
    pub fn from_spec(spec: &InstanceSpec) -> Result<Self, ProblemError> {
        generate_instance(spec.m, spec.n, spec.r, spec.radius, spec.seed, spec.b_mode)
    }

    /// Builds an instance from explicit data (no planted point).
    pub fn from_parts(a: Matrix<S>, b: Vec<S>, r: usize, radius: S) -> Result<Self, ProblemError> {
        let (m, n) = (a.rows(), a.cols());
        if m == 0 || m > n || r == 0 || r > n || b.len() != m {
            return Err(ProblemError::InvalidDimensions { m, n, r });
        }
        if !(radius > S::zero()) || !radius.is_finite() {
            return Err(ProblemError::InvalidRadius(radius.as_f64()));
        }
        let gram = Cholesky::factor(&a.gram(), gram_tolerance()).map_err(|_| ProblemError::RankDeficient { attempts: 1 })?;
        Ok(Self {
            spec: InstanceSpec {
                m,
                n,
                r,
                radius: radius.as_f64(),
                seed: 0,
                b_mode: BMode::Gaussian,
            },
            a,
            b,
            radius,
            gram,
            planted: None,
        })
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.a
    }

    pub fn rhs(&self) -> &[S] {
        &self.b
    }

    pub fn sparsity(&self) -> usize {
        self.spec.r
    }

    pub fn radius(&self) -> S {
        self.radius
    }

    /// The point used to build `b`, for planted modes.
    pub fn planted_point(&self) -> Option<&[S]> {
        self.planted.as_deref()
    }

    /// `Proj_C(x) = x − Aᵀ(AAᵀ)⁻¹(Ax − b)`
    pub fn proj_affine(&self, x: &[S]) -> Vec<S> {
        let mut res = self.a.mul_vec(x);
        res.iter_mut().zip(&self.b).for_each(|(v, &bi)| *v = *v - bi);
        let corr = self.a.tmul_vec(&self.gram.solve(&res));
        x.iter().zip(&corr).map(|(&xi, &ci)| xi - ci).collect()
    }

    /// Whether `x ∈ D` up to a relative slack on the radius.
    pub fn in_d(&self, x: &[S]) -> bool {
        count_nonzero(x) <= self.spec.r && norm(x) <= self.radius * (S::one() + S::lit(1e-10))
    }
}

impl<S: Scalar> CompositeProblem<S> for FeasibilityInstance<S> {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn g_and_grad(&self, x: &[S]) -> (S, Vec<S>) {
        let p = self.proj_affine(x);
        let grad: Vec<S> = x.iter().zip(&p).map(|(&xi, &pi)| xi - pi).collect();
        (S::half() * crate::linalg::norm_sq(&grad), grad)
    }

    fn f_value(&self, x: &[S]) -> S {
        if self.in_d(x) {
            S::zero()
        } else {
            S::infinity()
        }
    }

    fn l_grad_g(&self) -> S {
        S::one()
    }

    fn bregman_step(&self, query: &SubproblemQuery<'_, S>) -> Result<Vec<S>, SubproblemError> {
        Ok(solve_l0_ball(query, self.spec.r, self.radius)?.x)
    }

    fn prox(&self, z: &[S], _lambda: S) -> Result<Vec<S>, SubproblemError> {
        prox_l0_ball_euclidean(z, self.spec.r, self.radius)
    }

    /// `z + (γ/(1+γ))(Proj_C(z) − z)`
    fn prox_g(&self, z: &[S], gamma: S) -> Vec<S> {
        let p = self.proj_affine(z);
        let c = gamma / (S::one() + gamma);
        z.iter().zip(&p).map(|(&zi, &pi)| zi + c * (pi - zi)).collect()
    }
}

/// Positively homogeneous penalties with cheap proximal maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty<S> {
    Zero,
    L1(S),
    LInf(S),
}

/// `g(x) = (w/2)‖x − c‖² + ⟨q, x⟩` plus a homogeneous penalty. A negative
/// `w` gives a concave (divergent) test problem.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem<S> {
    pub weight: S,
    pub center: Vec<S>,
    pub linear: Vec<S>,
    pub penalty: Penalty<S>,
}

impl<S: Scalar> QuadraticProblem<S> {
    pub fn new(weight: S, center: Vec<S>, penalty: Penalty<S>) -> Self {
        let linear = vec![S::zero(); center.len()];
        Self {
            weight,
            center,
            linear,
            penalty,
        }
    }

    /// `‖x‖²/2` (or `0` when `weight = 0`) in dimension `n`, no penalty.
    pub fn isotropic(weight: S, n: usize) -> Self {
        Self::new(weight, vec![S::zero(); n], Penalty::Zero)
    }
}

impl<S: Scalar> CompositeProblem<S> for QuadraticProblem<S> {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn g_and_grad(&self, x: &[S]) -> (S, Vec<S>) {
        let value = self.weight * S::half() * dist_sq(x, &self.center) + crate::linalg::dot(&self.linear, x);
        let grad = x
            .iter()
            .zip(&self.center)
            .zip(&self.linear)
            .map(|((&xi, &ci), &qi)| self.weight * (xi - ci) + qi)
            .collect();
        (value, grad)
    }

    fn f_value(&self, x: &[S]) -> S {
        match self.penalty {
            Penalty::Zero => S::zero(),
            Penalty::L1(mu) => mu * norm_l1(x),
            Penalty::LInf(mu) => mu * norm_inf(x),
        }
    }

    fn l_grad_g(&self) -> S {
        self.weight.abs()
    }

    fn bregman_step(&self, query: &SubproblemQuery<'_, S>) -> Result<Vec<S>, SubproblemError> {
        let penalty = self.penalty;
        Ok(solve_homogeneous(query, |z, lam| prox_penalty(penalty, z, lam))?.x)
    }

    fn prox(&self, z: &[S], lambda: S) -> Result<Vec<S>, SubproblemError> {
        Ok(prox_penalty(self.penalty, z, lambda))
    }

    fn prox_g(&self, z: &[S], gamma: S) -> Vec<S> {
        let denom = S::one() + gamma * self.weight;
        z.iter()
            .zip(&self.center)
            .zip(&self.linear)
            .map(|((&zi, &ci), &qi)| (zi + gamma * (self.weight * ci - qi)) / denom)
            .collect()
    }
}

fn prox_penalty<S: Scalar>(penalty: Penalty<S>, z: &[S], lambda: S) -> Vec<S> {
    match penalty {
        Penalty::Zero => z.to_vec(),
        Penalty::L1(mu) => prox_l1(z, lambda * mu),
        Penalty::LInf(mu) => prox_linf(z, lambda * mu),
    }
}

/// Kernel-aware subproblem for an instance, as a free function.
pub fn feasibility_bregman_step<S: Scalar>(
    instance: &FeasibilityInstance<S>,
    u: &[S],
    omega: &[S],
    lambda: S,
    kernel: &Kernel<S>,
) -> Result<Vec<S>, SubproblemError> {
    let q = SubproblemQuery::new(u, omega, lambda, kernel)?;
    instance.bregman_step(&q)
}
