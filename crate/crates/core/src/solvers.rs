//! Iteration drivers: BiFRB, iFRB and FRB, plus Douglas-Rachford and
//! inertial Tseng baselines.
//!
//! One BiFRB step from `(x_{k−1}, x_k)`:
//!
//! ```text
//! y_k     = x_k + λ_{k−1}(∇g(x_{k−1}) − ∇g(x_k))
//! ω_k     = ∇g(x_k) + (α_k/λ_k)(x_{k−1} − x_k)
//! x_{k+1} = argmin { f(x) + ⟨x − y_k, ω_k⟩ + D_h(x, y_k)/λ_k }
//! ```
//!
//! iFRB is the same step with the Euclidean kernel, and FRB is iFRB with
//! `α_k = 0`. Every FRB-family step also advances the merit parameters and
//! reports the descent slack of `H_{p_k}(z_k)`, `z_k = (x_{k+1}, x_k)`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{Kernel, KernelError};
use crate::linalg::{all_finite, dist_sq, norm};
use crate::params::{
    abc_constants, bifrb_fixed_cert, ifrb_fixed_cert, AbcConstants, Certificate, MeritParams, NesterovSchedule,
    ParamsError, StepMode, DEFAULT_SAFETY,
};
use crate::problems::CompositeProblem;
use crate::scalar::Scalar;
use crate::subproblems::{SubproblemError, SubproblemQuery};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("subproblem failure: {0}")]
    Subproblem(#[from] SubproblemError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("non-finite iterate produced at step {k}")]
    NonFiniteIterate { k: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Kernel weights used for BiFRB in the benchmark.
pub const BENCH_KERNEL: (f64, f64) = (0.1, 2.51);
pub const BIFRB_ALPHA: f64 = 0.9;
pub const IFRB_ALPHA: f64 = 0.49;
pub const ITSENG_ALPHA: f64 = 0.49;
pub const DR_GAMMA: f64 = 0.5;
/// Start factor of the large-start halving heuristic.
pub const LARGE_START_FACTOR: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Bifrb,
    Ifrb,
    Frb,
    Dr,
    Itseng,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [
        MethodKind::Bifrb,
        MethodKind::Ifrb,
        MethodKind::Frb,
        MethodKind::Dr,
        MethodKind::Itseng,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Bifrb => "bifrb",
            MethodKind::Ifrb => "ifrb",
            MethodKind::Frb => "frb",
            MethodKind::Dr => "dr",
            MethodKind::Itseng => "itseng",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown solver {s:?} (expected one of bifrb, ifrb, frb, dr, itseng)"))
    }
}

/// Inertial parameters `α_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InertiaRule<S> {
    Constant(S),
    /// `α_k = (t_k − 1)/t_{k+1}`
    Nesterov,
}

/// Stepsizes `λ_k`, `k ≥ −1`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSizes<S> {
    Constant(S),
    /// `seq[j] = λ_{j−1}`; the last entry repeats past the end.
    Sequence(Vec<S>),
}

impl<S: Scalar> StepSizes<S> {
    pub fn at(&self, k: i64) -> S {
        match self {
            StepSizes::Constant(l) => *l,
            StepSizes::Sequence(v) => {
                let idx = ((k + 1).max(0) as usize).min(v.len() - 1);
                v[idx]
            }
        }
    }
}

/// Optional multiplicative stepsize heuristic: start at `start_factor` times
/// the base stepsize and halve whenever the run looks unhealthy, never going
/// below the base value. Both the FRB family and DR halve when iterates blow
/// up or move by more than `1000/k`; the FRB family also halves when the
/// descent test fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalvingHeuristic<S> {
    pub start_factor: S,
}

impl<S: Scalar> Default for HalvingHeuristic<S> {
    fn default() -> Self {
        Self {
            start_factor: S::lit(10.0),
        }
    }
}

/// Stepsize and inertial schedule with the merit-parameter seed `p_{−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan<S> {
    pub mode: StepMode,
    pub steps: StepSizes<S>,
    pub inertia: InertiaRule<S>,
    pub p_initial: S,
    pub lambda_lo: S,
    pub lambda_hi: S,
    pub heuristic: Option<HalvingHeuristic<S>>,
}

impl<S: Scalar> StepPlan<S> {
    /// Constant stepsize plan from a certificate.
    pub fn from_certificate(cert: &Certificate<S>, inertia: InertiaRule<S>) -> Self {
        Self {
            mode: cert.mode,
            steps: StepSizes::Constant(cert.lambda),
            inertia,
            p_initial: cert.p_initial,
            lambda_lo: cert.lambda,
            lambda_hi: cert.lambda,
            heuristic: None,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.lambda_lo > S::zero() && self.lambda_lo <= self.lambda_hi) {
            return Err(SolverError::InvalidConfig(format!(
                "need 0 < lambda_lo <= lambda_hi (got {}, {})",
                self.lambda_lo, self.lambda_hi
            )));
        }
        if let StepSizes::Sequence(v) = &self.steps {
            if v.is_empty() || v.iter().any(|&l| !(l > S::zero())) {
                return Err(SolverError::InvalidConfig("stepsizes must be positive".into()));
            }
        }
        if let InertiaRule::Constant(a) = self.inertia {
            if !(a >= S::zero() && a < S::one()) {
                return Err(SolverError::InvalidConfig(format!("inertial parameter {a} outside [0, 1)")));
            }
        }
        if let Some(h) = self.heuristic {
            if !(h.start_factor >= S::one()) {
                return Err(SolverError::InvalidConfig("heuristic start factor must be >= 1".into()));
            }
        }
        Ok(())
    }

    fn alpha(&self, k: i64, memo: &mut NesterovSchedule<S>) -> S {
        match self.inertia {
            InertiaRule::Constant(a) => a,
            InertiaRule::Nesterov => memo.alpha(k),
        }
    }
}

/// A method together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Method<S: Scalar> {
    Bifrb { kernel: Kernel<S>, plan: StepPlan<S> },
    Ifrb { plan: StepPlan<S> },
    Frb { plan: StepPlan<S> },
    /// `gamma` is the base parameter; with a heuristic the run starts at
    /// `start_factor · gamma`.
    Dr { gamma: S, heuristic: Option<HalvingHeuristic<S>> },
    Itseng { lambda: S, alpha: S },
}

impl<S: Scalar> Method<S> {
    pub fn kind(&self) -> MethodKind {
        match self {
            Method::Bifrb { .. } => MethodKind::Bifrb,
            Method::Ifrb { .. } => MethodKind::Ifrb,
            Method::Frb { .. } => MethodKind::Frb,
            Method::Dr { .. } => MethodKind::Dr,
            Method::Itseng { .. } => MethodKind::Itseng,
        }
    }

    /// Benchmark settings: BiFRB with kernel `(0.1, 2.51)`, `α = 0.9` and the
    /// certified fixed stepsize; iFRB with `α = 0.49`; FRB with `α = 0`;
    /// DR with `γ = 0.5`; iTseng with `λ = 0.95/(2L_∇g)` and `α = 0.49`.
    pub fn bench_default(kind: MethodKind, l_grad_g: S) -> Result<Self, SolverError> {
        let safety = S::lit(DEFAULT_SAFETY);
        Ok(match kind {
            MethodKind::Bifrb => {
                let kernel = Kernel::new(S::lit(BENCH_KERNEL.0), S::lit(BENCH_KERNEL.1))?;
                let cert = bifrb_fixed_cert(kernel.sigma(), kernel.l_grad(), l_grad_g, safety)?;
                Method::Bifrb {
                    kernel,
                    plan: StepPlan::from_certificate(&cert, InertiaRule::Constant(S::lit(BIFRB_ALPHA))),
                }
            }
            MethodKind::Ifrb => {
                let alpha = S::lit(IFRB_ALPHA);
                let cert = ifrb_fixed_cert(l_grad_g, alpha, safety)?;
                Method::Ifrb {
                    plan: StepPlan::from_certificate(&cert, InertiaRule::Constant(alpha)),
                }
            }
            MethodKind::Frb => {
                let cert = ifrb_fixed_cert(l_grad_g, S::zero(), safety)?;
                Method::Frb {
                    plan: StepPlan::from_certificate(&cert, InertiaRule::Constant(S::zero())),
                }
            }
            MethodKind::Dr => Method::Dr {
                gamma: S::lit(DR_GAMMA),
                heuristic: None,
            },
            MethodKind::Itseng => Method::Itseng {
                lambda: safety / (S::two() * l_grad_g),
                alpha: S::lit(ITSENG_ALPHA),
            },
        })
    }

    /// Large-start settings: the FRB family starts from `150×` its certified
    /// stepsize with descent-triggered halving; DR starts from `150×` the
    /// nonconvex DR bound `(√(3/2) − 1)/L_∇g` (slightly shrunk) with
    /// divergence-triggered halving; iTseng is unchanged.
    pub fn large_start(kind: MethodKind, l_grad_g: S) -> Result<Self, SolverError> {
        let heuristic = Some(HalvingHeuristic {
            start_factor: S::lit(LARGE_START_FACTOR),
        });
        let mut method = Self::bench_default(kind, l_grad_g)?;
        match &mut method {
            Method::Bifrb { plan, .. } | Method::Ifrb { plan } | Method::Frb { plan } => plan.heuristic = heuristic,
            Method::Dr { gamma, heuristic: h } => {
                *gamma = dr_gamma_bound(l_grad_g) * S::lit(0.9999);
                *h = heuristic;
            }
            Method::Itseng { .. } => {}
        }
        Ok(method)
    }
}

/// `(√(3/2) − 1)/L_∇g`, the largest DR parameter covered by the nonconvex
/// DR convergence theory for an `L_∇g`-smooth `g`.
pub fn dr_gamma_bound<S: Scalar>(l_grad_g: S) -> S {
    (S::lit(1.5).sqrt() - S::one()) / l_grad_g
}

/// Two-iterate window of the FRB family, with cached gradients.
#[derive(Debug, Clone)]
pub struct SolverState<S: Scalar> {
    /// `x_{k−1}`
    pub x_prev: Vec<S>,
    /// `x_k`
    pub x_cur: Vec<S>,
    pub grad_prev: Vec<S>,
    pub grad_cur: Vec<S>,
    /// `F(x_k)`
    pub f_cur: S,
    /// `λ_{k−1}`
    pub lambda_prev: S,
    /// `λ_k`, the stepsize of the next step.
    pub lambda_cur: S,
    pub merit: MeritParams<S>,
    /// `H_{p_{k−1}}(z_{k−1}) = F(x_k) + p_{k−1}‖x_k − x_{k−1}‖²`
    pub merit_value: S,
    /// Index of `x_cur`.
    pub k: usize,
    step_scale: S,
    nesterov: NesterovSchedule<S>,
}

impl<S: Scalar> SolverState<S> {
    pub fn new<P: CompositeProblem<S> + ?Sized>(problem: &P, x_prev: Vec<S>, x_cur: Vec<S>, plan: &StepPlan<S>) -> Self {
        let grad_prev = problem.grad(&x_prev);
        let (g_cur, grad_cur) = problem.g_and_grad(&x_cur);
        let f_cur = problem.f_value(&x_cur) + g_cur;
        let step_scale = plan.heuristic.map_or(S::one(), |h| h.start_factor);
        let merit = MeritParams::initial(plan.p_initial);
        let merit_value = merit_value(f_cur, plan.p_initial, &x_cur, &x_prev);
        Self {
            lambda_prev: step_scale * plan.steps.at(-1),
            lambda_cur: step_scale * plan.steps.at(0),
            x_prev,
            x_cur,
            grad_prev,
            grad_cur,
            f_cur,
            merit,
            merit_value,
            k: 0,
            step_scale,
            nesterov: NesterovSchedule::new(),
        }
    }
}

/// Quantities of one FRB-family step needed by the diagnostics.
#[derive(Debug, Clone)]
pub struct StepInfo<S> {
    pub y: Vec<S>,
    /// `x_{k−1}` of the step (the state now holds `x_k, x_{k+1}`).
    pub x_older: Vec<S>,
    pub alpha: S,
    pub lambda: S,
    pub lambda_prev: S,
    /// `H_{p_k}(z_k)`
    pub merit_value: S,
    /// `M_{1,k}`
    pub m1: S,
    /// `‖z_k − z_{k−1}‖²`
    pub step_sq: S,
    pub descent_slack: S,
}

/// `H_p(x_next, x_cur) = F + p‖x_next − x_cur‖²`
pub fn merit_value<S: Scalar>(f_value: S, p: S, x_next: &[S], x_cur: &[S]) -> S {
    if p == S::zero() {
        return f_value;
    }
    f_value + p * dist_sq(x_next, x_cur)
}

enum Subsolve<'a, S: Scalar> {
    Bregman(&'a Kernel<S>),
    Euclidean,
}

fn frb_family_step<S: Scalar, P: CompositeProblem<S> + ?Sized>(
    mut state: SolverState<S>,
    problem: &P,
    plan: &StepPlan<S>,
    subsolve: Subsolve<'_, S>,
    force_zero_inertia: bool,
) -> Result<(SolverState<S>, StepInfo<S>), SolverError> {
    let k = state.k as i64;
    let lambda = state.lambda_cur;
    let lambda_prev = state.lambda_prev;
    let alpha = if force_zero_inertia {
        S::zero()
    } else {
        plan.alpha(k, &mut state.nesterov)
    };

    let y: Vec<S> = state
        .x_cur
        .iter()
        .zip(&state.grad_prev)
        .zip(&state.grad_cur)
        .map(|((&x, &gp), &gc)| x + lambda_prev * (gp - gc))
        .collect();
    let coef = alpha / lambda;
    let omega: Vec<S> = state
        .grad_cur
        .iter()
        .zip(&state.x_prev)
        .zip(&state.x_cur)
        .map(|((&g, &xp), &xc)| g + coef * (xp - xc))
        .collect();

    let (x_next, abc) = match subsolve {
        Subsolve::Bregman(kernel) => {
            let q = SubproblemQuery::new(&y, &omega, lambda, kernel)?;
            let abc = abc_constants(kernel.sigma(), kernel.l_grad(), problem.l_grad_g())?;
            (problem.bregman_step(&q)?, abc)
        }
        Subsolve::Euclidean => {
            if !(lambda > S::zero()) {
                return Err(SubproblemError::InvalidStepsize(lambda.as_f64()).into());
            }
            let z: Vec<S> = y.iter().zip(&omega).map(|(&u, &w)| u - lambda * w).collect();
            let abc = AbcConstants {
                a: S::zero(),
                b: S::one(),
                c: problem.l_grad_g(),
            };
            (problem.prox(&z, lambda)?, abc)
        }
    };
    if !all_finite(&x_next) {
        return Err(SolverError::NonFiniteIterate { k: state.k });
    }

    let (g_next, grad_next) = problem.g_and_grad(&x_next);
    let f_next = problem.f_value(&x_next) + g_next;
    let merit = state.merit.next(lambda_prev, lambda, alpha, &abc);
    let d_new = dist_sq(&x_next, &state.x_cur);
    let d_old = dist_sq(&state.x_cur, &state.x_prev);
    let h_new = merit_value(f_next, merit.p_cur, &x_next, &state.x_cur);
    let step_sq = d_new + d_old;
    let descent_slack = state.merit_value - h_new - merit.m1_cur * step_sq;

    let x_older = std::mem::replace(&mut state.x_prev, std::mem::replace(&mut state.x_cur, x_next));
    state.grad_prev = std::mem::replace(&mut state.grad_cur, grad_next);
    state.f_cur = f_next;
    state.merit = merit;
    state.merit_value = h_new;
    state.k += 1;
    state.lambda_prev = lambda;
    state.lambda_cur = state.step_scale * plan.steps.at(state.k as i64);

    let info = StepInfo {
        y,
        x_older,
        alpha,
        lambda,
        lambda_prev,
        merit_value: h_new,
        m1: merit.m1_cur,
        step_sq,
        descent_slack,
    };
    Ok((state, info))
}

/// One BiFRB step with the Bregman subproblem of `kernel`.
pub fn bifrb_step<S: Scalar, P: CompositeProblem<S> + ?Sized>(
    state: SolverState<S>,
    problem: &P,
    kernel: &Kernel<S>,
    plan: &StepPlan<S>,
) -> Result<(SolverState<S>, StepInfo<S>), SolverError> {
    frb_family_step(state, problem, plan, Subsolve::Bregman(kernel), false)
}

/// One iFRB step: `x_{k+1} = prox_{λ_k f}(y_k − λ_k ω_k)`.
pub fn ifrb_step<S: Scalar, P: CompositeProblem<S> + ?Sized>(
    state: SolverState<S>,
    problem: &P,
    plan: &StepPlan<S>,
) -> Result<(SolverState<S>, StepInfo<S>), SolverError> {
    frb_family_step(state, problem, plan, Subsolve::Euclidean, false)
}

/// One FRB step: iFRB with zero inertia regardless of the plan's rule.
pub fn frb_step<S: Scalar, P: CompositeProblem<S> + ?Sized>(
    state: SolverState<S>,
    problem: &P,
    plan: &StepPlan<S>,
) -> Result<(SolverState<S>, StepInfo<S>), SolverError> {
    frb_family_step(state, problem, plan, Subsolve::Euclidean, true)
}

/// `M₂ = √2·max{L_∇h/λ̲ + L_∇g + 6p, (L_∇h·L_∇g·λ̄ + 1)/λ̲}`
pub fn m2_constant<S: Scalar>(l_grad_h: S, l_grad_g: S, p: S, lambda_lo: S, lambda_hi: S) -> S {
    let first = l_grad_h / lambda_lo + l_grad_g + S::lit(6.0) * p;
    let second = (l_grad_h * l_grad_g * lambda_hi + S::one()) / lambda_lo;
    S::SQRT_2() * first.max(second)
}

/// Subgradient residual and its certified bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationarity<S> {
    /// `‖(A_k, B_k)‖`
    pub residual: S,
    /// `M₂‖z_k − z_{k−1}‖`
    pub bound: S,
    pub m2: S,
}

/// Builds the element `(A_k, B_k) ∈ ∂H_p(z_k)` from
/// `u_k = (∇h(y_k) − ∇h(x_{k+1}))/λ_k − ∇g(x_k) + α_k(x_k − x_{k−1})/λ_k ∈ ∂f(x_{k+1})`:
/// `A_k = u_k + ∇g(x_{k+1}) + 2p(x_{k+1} − x_k)`, `B_k = 2p(x_k − x_{k+1})`,
/// with `p = max(0, p̄)`.
pub fn stationarity_residual<S: Scalar>(
    state: &SolverState<S>,
    info: &StepInfo<S>,
    kernel: &Kernel<S>,
    l_grad_g: S,
    p_bar: S,
    lambda_lo: S,
    lambda_hi: S,
) -> Stationarity<S> {
    let p = p_bar.max(S::zero());
    let (x_next, x_k, x_km1) = (&state.x_cur, &state.x_prev, &info.x_older);
    let (grad_next, grad_k) = (&state.grad_cur, &state.grad_prev);
    let hy = kernel.grad(&info.y);
    let hx = kernel.grad(x_next);
    let inv = S::one() / info.lambda;
    let two_p = S::two() * p;
    let mut sq = S::zero();
    for i in 0..x_next.len() {
        let u = (hy[i] - hx[i]) * inv - grad_k[i] + info.alpha * (x_k[i] - x_km1[i]) * inv;
        let a = u + grad_next[i] + two_p * (x_next[i] - x_k[i]);
        let b = two_p * (x_k[i] - x_next[i]);
        sq = sq + a * a + b * b;
    }
    let m2 = m2_constant(kernel.l_grad(), l_grad_g, p, lambda_lo, lambda_hi);
    Stationarity {
        residual: sq.sqrt(),
        bound: m2 * info.step_sq.sqrt(),
        m2,
    }
}

/// State of the Douglas-Rachford iteration.
#[derive(Debug, Clone)]
pub struct DrState<S> {
    pub z: Vec<S>,
    /// Last `prox_{γf}` output (the reported iterate).
    pub x: Vec<S>,
    pub k: usize,
}

/// Result of one DR sweep.
#[derive(Debug, Clone)]
pub struct DrInfo<S> {
    pub y: Vec<S>,
    pub z_prev: Vec<S>,
}

/// `y⁺ = prox_{γg}(z)`, `x⁺ = prox_{γf}(2y⁺ − z)`, `z⁺ = z + x⁺ − y⁺`.
pub fn dr_step<S: Scalar, P: CompositeProblem<S> + ?Sized>(
    mut state: DrState<S>,
    problem: &P,
    gamma: S,
) -> Result<(DrState<S>, DrInfo<S>), SolverError> {
    if !(gamma > S::zero()) {
        return Err(SolverError::InvalidConfig(format!("DR parameter must be positive (got {gamma})")));
    }
    let y = problem.prox_g(&state.z, gamma);
    let reflected: Vec<S> = y.iter().zip(&state.z).map(|(&yi, &zi)| S::two() * yi - zi).collect();
    let x = problem.prox(&reflected, gamma)?;
    if !all_finite(&x) || !all_finite(&y) {
        return Err(SolverError::NonFiniteIterate { k: state.k });
    }
    let z_next: Vec<S> = state
        .z
        .iter()
        .zip(&x)
        .zip(&y)
        .map(|((&zi, &xi), &yi)| zi + xi - yi)
        .collect();
    let z_prev = std::mem::replace(&mut state.z, z_next);
    state.x = x;
    state.k += 1;
    Ok((state, DrInfo { y, z_prev }))
}

/// State of the inertial Tseng iteration.
#[derive(Debug, Clone)]
pub struct TsengState<S> {
    pub x_prev: Vec<S>,
    pub x_cur: Vec<S>,
    /// Last forward-backward point `p`, which lies in `dom f`.
    pub p: Vec<S>,
    /// `g(p)`
    pub g_p: S,
    pub k: usize,
}

/// `w = x_k + α(x_k − x_{k−1})`, `p = prox_{λf}(w − λ∇g(w))`,
/// `x_{k+1} = p + λ(∇g(w) − ∇g(p))`.
pub fn itseng_step<S: Scalar, P: CompositeProblem<S> + ?Sized>(
    mut state: TsengState<S>,
    problem: &P,
    lambda: S,
    alpha: S,
) -> Result<TsengState<S>, SolverError> {
    if !(lambda > S::zero()) || !(alpha >= S::zero() && alpha < S::one()) {
        return Err(SolverError::InvalidConfig(format!(
            "iTseng needs lambda > 0 and alpha in [0, 1) (got {lambda}, {alpha})"
        )));
    }
    let w: Vec<S> = state
        .x_cur
        .iter()
        .zip(&state.x_prev)
        .map(|(&x, &xp)| x + alpha * (x - xp))
        .collect();
    let gw = problem.grad(&w);
    let fwd: Vec<S> = w.iter().zip(&gw).map(|(&wi, &gi)| wi - lambda * gi).collect();
    let p = problem.prox(&fwd, lambda)?;
    let (g_p, gp) = problem.g_and_grad(&p);
    let x_next: Vec<S> = p
        .iter()
        .zip(&gw)
        .zip(&gp)
        .map(|((&pi, &a), &b)| pi + lambda * (a - b))
        .collect();
    if !all_finite(&x_next) {
        return Err(SolverError::NonFiniteIterate { k: state.k });
    }
    state.x_prev = std::mem::replace(&mut state.x_cur, x_next);
    state.p = p;
    state.g_p = g_p;
    state.k += 1;
    Ok(state)
}

/// Stopping rule: `max(‖x_{k+1}−x_k‖, ‖x_k−x_{k−1}‖) / max(1, ‖x_k‖, ‖x_{k−1}‖) < tol`
/// or `max_iter` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminationSpec {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TerminationSpec {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10001,
        }
    }
}

impl TerminationSpec {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(SolverError::InvalidConfig(format!(
                "termination needs tol > 0 and max_iter >= 1 (got {}, {})",
                self.tol, self.max_iter
            )));
        }
        Ok(())
    }
}

/// Relative successive-change ratio of the stopping rule.
pub fn change_ratio<S: Scalar>(x_next: &[S], x_cur: &[S], x_prev: &[S]) -> S {
    let num = dist_sq(x_next, x_cur).max(dist_sq(x_cur, x_prev)).sqrt();
    let den = S::one().max(norm(x_cur)).max(norm(x_prev));
    num / den
}

/// One line of a trace. `k` is the index of the step (`x_{k+1}` was just
/// produced). Merit-related fields are present for the FRB family only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `F` at the reported iterate.
    pub objective: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub merit: Option<f64>,
    /// `‖z_k − z_{k−1}‖` (for DR and iTseng, `‖x_{k+1} − x_k‖`).
    pub step_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub descent_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stationarity_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stationarity_bound: Option<f64>,
    pub ratio: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// Seconds since the start of the run.
    pub elapsed: f64,
}

/// Result of [`run_solver`].
#[derive(Debug, Clone)]
pub struct Trace<S> {
    pub method: MethodKind,
    pub records: Vec<IterationRecord>,
    /// Reported final iterate (for iTseng, the forward-backward point).
    pub x_final: Vec<S>,
    pub final_objective: S,
    pub iterations: usize,
    pub converged: bool,
    /// Reported iterates `x_0, x_1, …` when requested.
    pub iterates: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> Trace<S> {
    /// One JSON object per record, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn p_trace(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.p).collect()
    }

    pub fn m1_trace(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.m1).collect()
    }
}

/// Initial points and trace options.
#[derive(Debug, Clone, Default)]
pub struct RunOptions<S> {
    /// `x_0` (default: origin).
    pub x_init: Option<Vec<S>>,
    /// `x_{−1}` (default: `x_0`).
    pub x_prev_init: Option<Vec<S>>,
    pub keep_iterates: bool,
}

/// Runs `method` on `problem` from the options' starting point until the
/// stopping rule fires. `hook` sees every record as it is produced.
pub fn run_solver<S, P, H>(
    problem: &P,
    method: &Method<S>,
    termination: &TerminationSpec,
    options: &RunOptions<S>,
    mut hook: H,
) -> Result<Trace<S>, SolverError>
where
    S: Scalar,
    P: CompositeProblem<S> + ?Sized,
    H: FnMut(&IterationRecord),
{
    termination.validate()?;
    let n = problem.dim();
    let x0 = options.x_init.clone().unwrap_or_else(|| vec![S::zero(); n]);
    let xm1 = options.x_prev_init.clone().unwrap_or_else(|| x0.clone());
    if x0.len() != n || xm1.len() != n {
        return Err(SolverError::InvalidConfig(format!("starting points must have dimension {n}")));
    }
    let ctx = RunContext {
        termination,
        keep: options.keep_iterates,
        start: Instant::now(),
    };
    match method {
        Method::Bifrb { kernel, plan } => run_frb_family(problem, method.kind(), Some(kernel), plan, x0, xm1, &ctx, &mut hook),
        Method::Ifrb { plan } | Method::Frb { plan } => {
            run_frb_family(problem, method.kind(), None, plan, x0, xm1, &ctx, &mut hook)
        }
        Method::Dr { gamma, heuristic } => run_dr(problem, *gamma, *heuristic, x0, &ctx, &mut hook),
        Method::Itseng { lambda, alpha } => run_itseng(problem, *lambda, *alpha, x0, xm1, &ctx, &mut hook),
    }
}

/// [`run_solver`] without a hook.
pub fn run<S: Scalar, P: CompositeProblem<S> + ?Sized>(
    problem: &P,
    method: &Method<S>,
    termination: &TerminationSpec,
    options: &RunOptions<S>,
) -> Result<Trace<S>, SolverError> {
    run_solver(problem, method, termination, options, |_| {})
}

struct RunContext<'a> {
    termination: &'a TerminationSpec,
    keep: bool,
    start: Instant,
}

#[allow(clippy::too_many_arguments)]
fn run_frb_family<S, P, H>(
    problem: &P,
    kind: MethodKind,
    kernel: Option<&Kernel<S>>,
    plan: &StepPlan<S>,
    x0: Vec<S>,
    xm1: Vec<S>,
    ctx: &RunContext<'_>,
    hook: &mut H,
) -> Result<Trace<S>, SolverError>
where
    S: Scalar,
    P: CompositeProblem<S> + ?Sized,
    H: FnMut(&IterationRecord),
{
    plan.validate()?;
    let euclid = Kernel::euclidean();
    let diag_kernel = kernel.unwrap_or(&euclid);
    let l_grad_g = problem.l_grad_g();
    let tol = S::lit(ctx.termination.tol);
    let (lambda_lo, lambda_hi) = match plan.heuristic {
        Some(h) => (plan.lambda_lo, h.start_factor * plan.lambda_hi),
        None => (plan.lambda_lo, plan.lambda_hi),
    };
    let mut iterates = ctx.keep.then(|| vec![x0.clone()]);
    let mut records = Vec::new();
    let mut state = SolverState::new(problem, xm1, x0, plan);
    let mut converged = false;
    while records.len() < ctx.termination.max_iter {
        let (next, info) = match kind {
            MethodKind::Bifrb => bifrb_step(state, problem, diag_kernel, plan)?,
            MethodKind::Frb => frb_step(state, problem, plan)?,
            _ => ifrb_step(state, problem, plan)?,
        };
        state = next;
        let stat = stationarity_residual(&state, &info, diag_kernel, l_grad_g, state.merit.p_bar, lambda_lo, lambda_hi);
        let ratio = change_ratio(&state.x_cur, &state.x_prev, &info.x_older);
        let rec = IterationRecord {
            k: state.k - 1,
            objective: state.f_cur.as_f64(),
            merit: Some(info.merit_value.as_f64()),
            step_norm: info.step_sq.sqrt().as_f64(),
            m1: Some(info.m1.as_f64()),
            p: Some(state.merit.p_cur.as_f64()),
            descent_slack: Some(info.descent_slack.as_f64()),
            stationarity_residual: Some(stat.residual.as_f64()),
            stationarity_bound: Some(stat.bound.as_f64()),
            ratio: ratio.as_f64(),
            lambda: info.lambda.as_f64(),
            alpha: info.alpha.as_f64(),
            elapsed: ctx.start.elapsed().as_secs_f64(),
        };
        hook(&rec);
        records.push(rec);
        if let Some(v) = iterates.as_mut() {
            v.push(state.x_cur.clone());
        }
        if plan.heuristic.is_some() {
            let tol_descent = S::lit(1e-12) * state.merit_value.abs().max(S::one());
            let diverging = info.step_sq.sqrt() > S::lit(1e3) / S::lit(state.k as f64) || norm(&state.x_cur) > S::lit(1e10);
            let unhealthy = info.descent_slack < -tol_descent || diverging;
            if unhealthy && state.step_scale > S::one() {
                state.step_scale = (state.step_scale * S::half()).max(S::one());
                state.lambda_cur = state.step_scale * plan.steps.at(state.k as i64);
            }
        }
        if ratio < tol {
            converged = true;
            break;
        }
    }
    Ok(Trace {
        method: kind,
        iterations: records.len(),
        records,
        final_objective: state.f_cur,
        x_final: state.x_cur,
        converged,
        iterates,
    })
}

fn run_dr<S, P, H>(
    problem: &P,
    gamma_base: S,
    heuristic: Option<HalvingHeuristic<S>>,
    x0: Vec<S>,
    ctx: &RunContext<'_>,
    hook: &mut H,
) -> Result<Trace<S>, SolverError>
where
    S: Scalar,
    P: CompositeProblem<S> + ?Sized,
    H: FnMut(&IterationRecord),
{
    if let Some(h) = heuristic {
        if !(h.start_factor >= S::one()) {
            return Err(SolverError::InvalidConfig("heuristic start factor must be >= 1".into()));
        }
    }
    let mut gamma = heuristic.map_or(gamma_base, |h| h.start_factor * gamma_base);
    let mut y_last: Option<Vec<S>> = None;
    let tol = S::lit(ctx.termination.tol);
    let mut iterates = ctx.keep.then(|| vec![x0.clone()]);
    let mut state = DrState {
        z: x0.clone(),
        x: x0,
        k: 0,
    };
    let mut records = Vec::new();
    let mut converged = false;
    let mut objective = problem.objective(&state.x);
    while records.len() < ctx.termination.max_iter {
        let x_before = state.x.clone();
        let (next, info) = dr_step(state, problem, gamma)?;
        state = next;
        objective = problem.objective(&state.x);
        // ‖x⁺ − y⁺‖ = ‖z⁺ − z‖ relative to the size of the three points
        let gap = crate::linalg::dist(&state.x, &info.y);
        let den = S::one()
            .max(norm(&info.z_prev))
            .max(norm(&info.y))
            .max(norm(&state.x));
        let ratio = gap / den;
        let gamma_used = gamma;
        if heuristic.is_some() && gamma > gamma_base {
            let moved = y_last.as_ref().map_or(S::zero(), |yl| crate::linalg::dist(yl, &info.y));
            let k = S::lit(state.k as f64);
            if norm(&info.y) > S::lit(1e10) || moved > S::lit(1e3) / k {
                gamma = (gamma * S::half()).max(gamma_base);
            }
        }
        let rec = IterationRecord {
            k: state.k - 1,
            objective: objective.as_f64(),
            merit: None,
            step_norm: crate::linalg::dist(&state.x, &x_before).as_f64(),
            m1: None,
            p: None,
            descent_slack: None,
            stationarity_residual: None,
            stationarity_bound: None,
            ratio: ratio.as_f64(),
            lambda: gamma_used.as_f64(),
            alpha: 0.0,
            elapsed: ctx.start.elapsed().as_secs_f64(),
        };
        hook(&rec);
        records.push(rec);
        if let Some(v) = iterates.as_mut() {
            v.push(state.x.clone());
        }
        y_last = Some(info.y);
        if ratio < tol {
            converged = true;
            break;
        }
    }
    Ok(Trace {
        method: MethodKind::Dr,
        iterations: records.len(),
        records,
        final_objective: objective,
        x_final: state.x,
        converged,
        iterates,
    })
}

fn run_itseng<S, P, H>(
    problem: &P,
    lambda: S,
    alpha: S,
    x0: Vec<S>,
    xm1: Vec<S>,
    ctx: &RunContext<'_>,
    hook: &mut H,
) -> Result<Trace<S>, SolverError>
where
    S: Scalar,
    P: CompositeProblem<S> + ?Sized,
    H: FnMut(&IterationRecord),
{
    let tol = S::lit(ctx.termination.tol);
    let mut iterates = ctx.keep.then(|| vec![x0.clone()]);
    let g0 = problem.g_and_grad(&x0).0;
    let mut state = TsengState {
        p: x0.clone(),
        g_p: g0,
        x_prev: xm1,
        x_cur: x0,
        k: 0,
    };
    let mut records = Vec::new();
    let mut converged = false;
    while records.len() < ctx.termination.max_iter {
        let x_older = state.x_prev.clone();
        state = itseng_step(state, problem, lambda, alpha)?;
        let objective = problem.f_value(&state.p) + state.g_p;
        let ratio = change_ratio(&state.x_cur, &state.x_prev, &x_older);
        let rec = IterationRecord {
            k: state.k - 1,
            objective: objective.as_f64(),
            merit: None,
            step_norm: crate::linalg::dist(&state.x_cur, &state.x_prev).as_f64(),
            m1: None,
            p: None,
            descent_slack: None,
            stationarity_residual: None,
            stationarity_bound: None,
            ratio: ratio.as_f64(),
            lambda: lambda.as_f64(),
            alpha: alpha.as_f64(),
            elapsed: ctx.start.elapsed().as_secs_f64(),
        };
        hook(&rec);
        records.push(rec);
        if let Some(v) = iterates.as_mut() {
            v.push(state.p.clone());
        }
        if ratio < tol {
            converged = true;
            break;
        }
    }
    let final_objective = problem.f_value(&state.p) + state.g_p;
    Ok(Trace {
        method: MethodKind::Itseng,
        iterations: records.len(),
        records,
        final_objective,
        x_final: state.p,
        converged,
        iterates,
    })
}
