//! Merit-function parameters and stepsize certificates.
//!
//! Along a run the quadratic merit function `H_p(x, y) = F(x) + p‖x − y‖²`
//! is driven by the pair `(p_k, M_{1,k})`:
//!
//! ```text
//! p_k     = (a/2)·λ_{k−1}²/λ_k + (b/λ_k − c)/2 − p_{k−1}
//! M_{1,k} = p_{k−1} − (α_k + b·c·λ_{k−1})/(2λ_k) − a·λ_{k−1}²/(2λ_k)
//! ```
//!
//! with `a = (L_∇h − σ)L_∇g²`, `b = σ`, `c = L_∇g`. Convergence needs
//! `liminf p_k ≥ 0`, `liminf M_{1,k} > 0` and a uniform bound `p_k ≤ p̄`; the
//! certificates below pick stepsizes and `p_{−1}` for which that holds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("invalid bounds: need sigma > 0 and l_grad_h >= sigma, l_grad_g >= 0 (got sigma = {sigma}, l_grad_h = {l_grad_h}, l_grad_g = {l_grad_g})")]
    InvalidBounds { sigma: f64, l_grad_h: f64, l_grad_g: f64 },
    #[error("fixed-stepsize hypotheses violated: {0}")]
    HypothesisViolated(String),
    #[error("inertial bound must lie in [0, 1/2) (got {0})")]
    InvalidAlpha(f64),
    #[error("safety factor must lie in (0, 1] (got {0})")]
    InvalidSafety(f64),
    #[error("stepsize {lambda} is not below the certified maximum {lambda_max}")]
    StepTooLarge { lambda: f64, lambda_max: f64 },
}

/// Default margin applied to every strict stepsize bound.
pub const DEFAULT_SAFETY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AbcConstants<S: Scalar> {
    pub a: S,
    pub b: S,
    pub c: S,
}

pub fn abc_constants<S: Scalar>(sigma: S, l_grad_h: S, l_grad_g: S) -> Result<AbcConstants<S>, ParamsError> {
    if !(sigma > S::zero()) || !(l_grad_h >= sigma) || !(l_grad_g >= S::zero()) {
        return Err(ParamsError::InvalidBounds {
            sigma: sigma.as_f64(),
            l_grad_h: l_grad_h.as_f64(),
            l_grad_g: l_grad_g.as_f64(),
        });
    }
    Ok(AbcConstants {
        a: (l_grad_h - sigma) * l_grad_g * l_grad_g,
        b: sigma,
        c: l_grad_g,
    })
}

/// Running `(p_{k−1}, p_k, M_{1,k}, p̄)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MeritParams<S: Scalar> {
    pub p_prev: S,
    pub p_cur: S,
    pub m1_cur: S,
    pub p_bar: S,
}

impl<S: Scalar> MeritParams<S> {
    /// State before the first step: `p_cur = p_{−1}`. `M_{1,−1}` is undefined
    /// and stored as NaN.
    pub fn initial(p_initial: S) -> Self {
        Self {
            p_prev: p_initial,
            p_cur: p_initial,
            m1_cur: S::nan(),
            p_bar: p_initial,
        }
    }

    /// Advances one index given `λ_{k−1}`, `λ_k` and `α_k`.
    pub fn next(&self, lambda_prev: S, lambda_cur: S, alpha_cur: S, abc: &AbcConstants<S>) -> Self {
        let two = S::two();
        let lp2 = lambda_prev * lambda_prev;
        let p_new = abc.a / two * (lp2 / lambda_cur) + (abc.b / lambda_cur - abc.c) / two - self.p_cur;
        let m1 = self.p_cur - (alpha_cur + abc.b * abc.c * lambda_prev) / (two * lambda_cur) - abc.a * lp2 / (two * lambda_cur);
        Self {
            p_prev: self.p_cur,
            p_cur: p_new,
            m1_cur: m1,
            p_bar: self.p_bar.max(p_new),
        }
    }
}

/// Free-function form of [`MeritParams::next`].
pub fn next_merit_params<S: Scalar>(
    prev: &MeritParams<S>,
    lambda_prev: S,
    lambda_cur: S,
    alpha_cur: S,
    abc: &AbcConstants<S>,
) -> MeritParams<S> {
    prev.next(lambda_prev, lambda_cur, alpha_cur, abc)
}

/// `p_k` from the parity-split telescoping sums.
///
/// `lambdas[j]` holds `λ_{j−1}`, so `lambdas[0] = λ_{−1}`; it must cover
/// indices up to `k`. `k = −1` returns `p_initial`.
pub fn closed_form_p<S: Scalar>(k: i64, lambdas: &[S], p_initial: S, abc: &AbcConstants<S>) -> S {
    assert!(k >= -1, "index must be at least -1");
    assert!(lambdas.len() as i64 >= k + 2, "stepsizes must cover indices -1..=k");
    if k == -1 {
        return p_initial;
    }
    let lam = |i: i64| lambdas[(i + 1) as usize];
    let two = S::two();
    // one telescoped pair: p_j − p_{j−2} for j ≥ 1
    let pair = |j: i64| {
        abc.a / two * (lam(j - 1) * lam(j - 1) / lam(j) - lam(j - 2) * lam(j - 2) / lam(j - 1))
            + abc.b / two * (S::one() / lam(j) - S::one() / lam(j - 1))
    };
    if k % 2 == 0 {
        let half = k / 2;
        let base = (abc.a * lam(-1) * lam(-1) + abc.b) / (two * lam(0)) - abc.c / two - p_initial;
        (1..=half).fold(base, |acc, i| acc + pair(2 * i))
    } else {
        let half = (k - 1) / 2;
        // p_1 − p_{−1} involves λ_{−1}, λ_0, λ_1 only
        let first = abc.a / two * (lam(0) * lam(0) / lam(1) - lam(-1) * lam(-1) / lam(0))
            + abc.b / two * (S::one() / lam(1) - S::one() / lam(0));
        (1..=half).fold(p_initial + first, |acc, i| acc + pair(2 * i + 1))
    }
}

/// Which stepsize rule produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepMode {
    Fixed,
    Dynamic,
    EuclideanFixed,
}

/// Fixed-stepsize certificate, serializable as a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Certificate<S: Scalar> {
    pub sigma: S,
    pub l_grad_h: S,
    pub l_grad_g: S,
    pub lambda: S,
    /// Supremum of admissible constant stepsizes.
    pub lambda_max: S,
    pub p_initial: S,
    pub p_interval: (S, S),
    pub mode: StepMode,
}

impl<S: Scalar> Certificate<S> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn abc(&self) -> AbcConstants<S> {
        abc_constants(self.sigma, self.l_grad_h, self.l_grad_g).expect("certificate bounds were validated")
    }

    /// `max(p_{−1}, p_0)`: with a constant stepsize `p_k` alternates between
    /// these two values.
    pub fn p_bar(&self) -> S {
        let abc = self.abc();
        let even = MeritParams::initial(self.p_initial)
            .next(self.lambda, self.lambda, S::zero(), &abc)
            .p_cur;
        self.p_initial.max(even)
    }
}

fn check_safety<S: Scalar>(safety: S) -> Result<(), ParamsError> {
    if safety > S::zero() && safety <= S::one() {
        Ok(())
    } else {
        Err(ParamsError::InvalidSafety(safety.as_f64()))
    }
}

/// `λ* = (√((2bc+c)² + 4a(b−2)) − 2bc − c) / (2a)`, the positive root of
/// `−aλ² − (2bc+c)λ + b − 2`.
pub fn bifrb_lambda_star<S: Scalar>(abc: &AbcConstants<S>) -> S {
    let (a, b, c) = (abc.a, abc.b, abc.c);
    let lin = S::two() * b * c + c;
    let disc = lin * lin + S::lit(4.0) * a * (b - S::two());
    if a == S::zero() {
        return if lin > S::zero() { (b - S::two()) / lin } else { S::infinity() };
    }
    // rationalized form of the same root, stable when 4a(b−2) ≪ lin²
    S::two() * (b - S::two()) / (disc.sqrt() + lin)
}

/// Supremum of constant stepsizes accepted by the non-Euclidean fixed rule:
/// `min{λ*, (σ−1)/((σ+1)L_∇g)}`.
pub fn bifrb_lambda_max<S: Scalar>(sigma: S, l_grad_h: S, l_grad_g: S) -> Result<S, ParamsError> {
    let abc = abc_constants(sigma, l_grad_h, l_grad_g)?;
    if !(sigma > S::two()) {
        return Err(ParamsError::HypothesisViolated(format!("sigma = {sigma} must exceed 2")));
    }
    if !((l_grad_h - sigma) * sigma > S::lit(0.25)) {
        return Err(ParamsError::HypothesisViolated(format!(
            "(l_grad_h - sigma) * sigma = {} must exceed 1/4",
            (l_grad_h - sigma) * sigma
        )));
    }
    if !(l_grad_g > S::zero()) {
        return Err(ParamsError::HypothesisViolated("l_grad_g must be positive".into()));
    }
    let other = (sigma - S::one()) / ((sigma + S::one()) * l_grad_g);
    Ok(bifrb_lambda_star(&abc).min(other))
}

/// Feasible `p_{−1}` interval for a constant stepsize `λ`:
/// `(max(0, 1/(2λ) + bc/2 + aλ/2), min(aλ/2 + (b/λ − c)/2, (b−1)/(2λ) − (b+1)c/2))`.
pub fn bifrb_p_interval<S: Scalar>(abc: &AbcConstants<S>, lambda: S) -> (S, S) {
    let two = S::two();
    let (a, b, c) = (abc.a, abc.b, abc.c);
    let lo = (S::one() / (two * lambda) + b * c / two + a * lambda / two).max(S::zero());
    let hi = (a * lambda / two + (b / lambda - c) / two).min((b - S::one()) / (two * lambda) - (b + S::one()) * c / two);
    (lo, hi)
}

/// Certificate for a given constant stepsize, checked against the
/// non-Euclidean fixed rule. `p_{−1}` is the interval midpoint.
pub fn bifrb_cert_at<S: Scalar>(sigma: S, l_grad_h: S, l_grad_g: S, lambda: S) -> Result<Certificate<S>, ParamsError> {
    let lambda_max = bifrb_lambda_max(sigma, l_grad_h, l_grad_g)?;
    if !(lambda > S::zero() && lambda < lambda_max) {
        return Err(ParamsError::StepTooLarge {
            lambda: lambda.as_f64(),
            lambda_max: lambda_max.as_f64(),
        });
    }
    let abc = abc_constants(sigma, l_grad_h, l_grad_g)?;
    let p_interval = bifrb_p_interval(&abc, lambda);
    Ok(Certificate {
        sigma,
        l_grad_h,
        l_grad_g,
        lambda,
        lambda_max,
        p_initial: (p_interval.0 + p_interval.1) / S::two(),
        p_interval,
        mode: StepMode::Fixed,
    })
}

/// Non-Euclidean fixed stepsize: `λ = safety·min{λ*, (σ−1)/((σ+1)L_∇g)}`.
/// Valid for any inertial schedule with `α_k ∈ [0, 1)`.
pub fn bifrb_fixed_cert<S: Scalar>(sigma: S, l_grad_h: S, l_grad_g: S, safety: S) -> Result<Certificate<S>, ParamsError> {
    check_safety(safety)?;
    let lambda_max = bifrb_lambda_max(sigma, l_grad_h, l_grad_g)?;
    let lambda = if safety == S::one() {
        // strict inequality: step one ulp inside
        lambda_max * (S::one() - S::epsilon())
    } else {
        safety * lambda_max
    };
    bifrb_cert_at(sigma, l_grad_h, l_grad_g, lambda)
}

/// Feasible `p_{−1}` interval of the Euclidean rules,
/// `(L/2 + ᾱ/(2ε), 1/(2λ₀) − L − ᾱ/(2ε))`.
pub fn euclidean_p_interval<S: Scalar>(l_grad_g: S, alpha_bar: S, epsilon: S, lambda0: S) -> (S, S) {
    let two = S::two();
    let shift = alpha_bar / (two * epsilon);
    (l_grad_g / two + shift, S::one() / (two * lambda0) - l_grad_g - shift)
}

/// Euclidean fixed stepsize: `λ = safety·(1 − 2ᾱ)/(3L_∇g)`, for inertial
/// parameters `α_k ≤ ᾱ < 1/2`.
pub fn ifrb_fixed_cert<S: Scalar>(l_grad_g: S, alpha_bar: S, safety: S) -> Result<Certificate<S>, ParamsError> {
    check_safety(safety)?;
    if !(alpha_bar >= S::zero() && alpha_bar < S::half()) {
        return Err(ParamsError::InvalidAlpha(alpha_bar.as_f64()));
    }
    if !(l_grad_g > S::zero()) {
        return Err(ParamsError::InvalidBounds {
            sigma: 1.0,
            l_grad_h: 1.0,
            l_grad_g: l_grad_g.as_f64(),
        });
    }
    let lambda_max = (S::one() - S::two() * alpha_bar) / (S::lit(3.0) * l_grad_g);
    let lambda = if safety == S::one() {
        lambda_max * (S::one() - S::epsilon())
    } else {
        safety * lambda_max
    };
    let p_interval = euclidean_p_interval(l_grad_g, alpha_bar, lambda, lambda);
    Ok(Certificate {
        sigma: S::one(),
        l_grad_h: S::one(),
        l_grad_g,
        lambda,
        lambda_max,
        p_initial: (p_interval.0 + p_interval.1) / S::two(),
        p_interval,
        mode: StepMode::EuclideanFixed,
    })
}

/// Outcome of [`dynamic_schedule_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ScheduleReport<S: Scalar> {
    pub epsilon_ok: bool,
    pub lower_bound_ok: bool,
    pub upper_bound_ok: bool,
    pub increments_ok: bool,
    pub lambda_hi_limit: S,
    pub p_initial: Option<S>,
}

impl<S: Scalar> ScheduleReport<S> {
    pub fn is_valid(&self) -> bool {
        self.epsilon_ok && self.lower_bound_ok && self.upper_bound_ok && self.increments_ok
    }
}

/// Checks a Euclidean dynamic stepsize schedule.
///
/// `schedule[j]` is `λ_{j−1}` (so `schedule[0] = λ_{−1}`), `increments[k]`
/// the summable bound `a_k` for `k ≥ 0`. Requires `λ_k ∈ [ε, ε/(2ᾱ + 3εL))`
/// and `0 ≤ 1/λ_k − 1/λ_{k−1} ≤ a_k`.
pub fn dynamic_schedule_check<S: Scalar>(
    schedule: &[S],
    alpha_bar: S,
    l_grad_g: S,
    increments: &[S],
    epsilon: S,
) -> ScheduleReport<S> {
    let three = S::lit(3.0);
    let epsilon_ok = epsilon > S::zero()
        && alpha_bar >= S::zero()
        && alpha_bar < S::half()
        && l_grad_g > S::zero()
        && epsilon < (S::one() - S::two() * alpha_bar) / (three * l_grad_g)
        && !schedule.is_empty();
    let lambda_hi_limit = epsilon / (S::two() * alpha_bar + three * epsilon * l_grad_g);
    let lower_bound_ok = schedule.iter().all(|&l| l >= epsilon);
    let upper_bound_ok = schedule.iter().all(|&l| l < lambda_hi_limit);
    let increments_ok = schedule.len() >= 2
        && schedule.windows(2).enumerate().all(|(k, w)| {
            let inc = S::one() / w[1] - S::one() / w[0];
            let bound = increments.get(k).copied().unwrap_or(S::nan());
            // relative slack for the reciprocal subtraction
            let slack = S::lit(64.0) * S::epsilon() * (S::one() / w[1]);
            inc >= -slack && inc <= bound + slack
        });
    let mut report = ScheduleReport {
        epsilon_ok,
        lower_bound_ok,
        upper_bound_ok,
        increments_ok,
        lambda_hi_limit,
        p_initial: None,
    };
    if report.is_valid() {
        let (lo, hi) = euclidean_p_interval(l_grad_g, alpha_bar, epsilon, schedule[1]);
        if lo < hi {
            report.p_initial = Some((lo + hi) / S::two());
        }
    }
    report
}

/// Nesterov inertial parameters `α_k = (t_k − 1)/t_{k+1}` with
/// `t_{k+1} = (1 + √(1 + 4t_k²))/2` and `t_{−1} = 1`.
///
/// The `t` sequence is memoized per instance; share by cloning or keep one
/// per run.
#[derive(Debug, Clone)]
pub struct NesterovSchedule<S> {
    // t[j] = t_{j−1}
    t: Vec<S>,
}

impl<S: Scalar> Default for NesterovSchedule<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> NesterovSchedule<S> {
    pub fn new() -> Self {
        Self { t: vec![S::one()] }
    }

    fn t(&mut self, k: i64) -> S {
        let idx = (k + 1) as usize;
        while self.t.len() <= idx {
            let last = *self.t.last().unwrap();
            let next = (S::one() + (S::one() + S::lit(4.0) * last * last).sqrt()) / S::two();
            self.t.push(next);
        }
        self.t[idx]
    }

    /// `α_k` for `k ≥ −1`.
    pub fn alpha(&mut self, k: i64) -> S {
        assert!(k >= -1, "index must be at least -1");
        (self.t(k) - S::one()) / self.t(k + 1)
    }
}

/// Stateless `α_k`; recomputes the `t` recursion from `t_{−1}`.
pub fn nesterov_alpha<S: Scalar>(k: i64) -> S {
    NesterovSchedule::new().alpha(k)
}

/// Tail statistics of a run standing in for the liminf conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Assumption3Report<S: Scalar> {
    pub p_tail_min: S,
    pub m1_tail_min: S,
    pub p_max: S,
    pub valid: bool,
}

/// Summarizes traces of `p_k` and `M_{1,k}`: minima over the last `tail`
/// entries and the overall maximum of `p_k` (the `p̄` certificate).
pub fn assumption3_report<S: Scalar>(p_trace: &[S], m1_trace: &[S], tail: usize) -> Assumption3Report<S> {
    assert!(!p_trace.is_empty() && !m1_trace.is_empty(), "traces must be nonempty");
    let tail_of = |v: &[S]| {
        let t = tail.clamp(1, v.len());
        v[v.len() - t..].iter().fold(S::infinity(), |m, &x| m.min(x))
    };
    let p_tail_min = tail_of(p_trace);
    let m1_tail_min = tail_of(m1_trace);
    let p_max = p_trace.iter().fold(S::neg_infinity(), |m, &x| m.max(x));
    Assumption3Report {
        p_tail_min,
        m1_tail_min,
        p_max,
        valid: p_tail_min >= S::zero() && m1_tail_min > S::zero() && p_max.is_finite(),
    }
}

/// Default tail window: the last quarter of the run.
pub fn default_tail(len: usize) -> usize {
    (len / 4).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SIG: f64 = 2.51;
    const LH: f64 = 2.61;

    #[test]
    fn abc_examples() {
        let k = abc_constants(SIG, LH, 1.0).unwrap();
        assert!((k.a - 0.1).abs() < 1e-12 && k.b == 2.51 && k.c == 1.0);
        assert_eq!(abc_constants(1.0, 1.0, 5.0).unwrap(), AbcConstants { a: 0.0, b: 1.0, c: 5.0 });
        assert_eq!(abc_constants(1.0, 2.0, 1.0).unwrap(), AbcConstants { a: 1.0, b: 1.0, c: 1.0 });
        assert!(abc_constants(0.0, 1.0, 1.0).is_err());
        assert!(abc_constants(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn recursion_examples() {
        let abc = AbcConstants { a: 0.0, b: 1.0, c: 1.0 };
        let m = MeritParams::<f64>::initial(2.0).next(0.1, 0.1, 0.0, &abc);
        assert!((m.p_cur - 2.5).abs() < 1e-12);
        assert!((m.m1_cur - 1.5).abs() < 1e-12);
        assert_eq!(m.p_prev, 2.0);
        assert_eq!(m.p_bar, 2.5);

        let abc = abc_constants(SIG, LH, 1.0).unwrap();
        let m = MeritParams::initial(7.59575).next(0.08, 0.08, 0.9, &abc);
        assert!((m.p_cur - 7.59575).abs() < 1e-9);
        assert!((m.m1_cur - 0.71175).abs() < 1e-9);
        let m2 = m.next(0.08, 0.08, 0.9, &abc);
        assert!((m2.m1_cur - m.m1_cur).abs() < 1e-9);
    }

    #[test]
    fn closed_form_base_and_parity() {
        let abc = abc_constants(SIG, LH, 1.0).unwrap();
        let l = [0.07, 0.09];
        let p0 = closed_form_p(0, &l, 3.0, &abc);
        let expect = (abc.a * 0.07 * 0.07 + abc.b) / (2.0 * 0.09) - abc.c / 2.0 - 3.0;
        assert!((p0 - expect).abs() < 1e-12);
        let fixed = vec![0.08; 12];
        for k in (1..10).step_by(2) {
            assert_eq!(closed_form_p(k, &fixed, 4.2, &abc), 4.2);
        }
        assert_eq!(closed_form_p(-1, &fixed, 4.2, &abc), 4.2);
    }

    fn recursion(k: i64, lambdas: &[f64], p0: f64, alphas: f64, abc: &AbcConstants<f64>) -> f64 {
        let mut m = MeritParams::initial(p0);
        for j in 0..=k {
            let jj = j as usize;
            m = m.next(lambdas[jj], lambdas[jj + 1], alphas, abc);
        }
        m.p_cur
    }

    proptest! {
        #[test]
        fn closed_form_equals_recursion(
            lambdas in proptest::collection::vec(0.05..0.1f64, 52),
            p0 in -5.0..10.0f64,
            a in 0.0..2.0f64,
        ) {
            let abc = AbcConstants { a, b: 2.51, c: 1.0 };
            for k in 0..=50i64 {
                let cf = closed_form_p(k, &lambdas, p0, &abc);
                let rec = recursion(k, &lambdas, p0, 0.3, &abc);
                prop_assert!((cf - rec).abs() <= 1e-12 * rec.abs().max(1.0), "k = {k}: {cf} vs {rec}");
            }
        }
    }

    #[test]
    fn fixed_certificate_numbers() {
        let abc = abc_constants(SIG, LH, 1.0).unwrap();
        let ls = bifrb_lambda_star(&abc);
        assert!((ls - 0.08460).abs() < 1e-5);
        // λ* is the sign change of −aλ² − (2bc+c)λ + b − 2
        let q = |l: f64| -abc.a * l * l - (2.0 * abc.b * abc.c + abc.c) * l + abc.b - 2.0;
        assert!(q(0.99 * ls) > 0.0 && q(1.01 * ls) < 0.0);
        let other = (SIG - 1.0) / (SIG + 1.0);
        assert!((other - 0.43020).abs() < 1e-5);
        assert_eq!(bifrb_lambda_max(SIG, LH, 1.0).unwrap(), ls);

        let cert = bifrb_cert_at(SIG, LH, 1.0, 0.08).unwrap();
        assert!((cert.p_interval.0 - 7.509).abs() < 1e-9);
        assert!((cert.p_interval.1 - 7.6825).abs() < 1e-9);
        assert!((cert.p_initial - 7.59575).abs() < 1e-9);

        let safe = bifrb_fixed_cert(SIG, LH, 1.0, DEFAULT_SAFETY).unwrap();
        assert!((safe.lambda - 0.95 * ls).abs() < 1e-15);
        assert!(matches!(bifrb_fixed_cert(1.0, 1.0, 1.0, 0.95), Err(ParamsError::HypothesisViolated(_))));
        assert!(matches!(bifrb_fixed_cert(2.51, 2.55, 1.0, 0.95), Err(ParamsError::HypothesisViolated(_))));
        assert!(matches!(bifrb_cert_at(SIG, LH, 1.0, 0.09), Err(ParamsError::StepTooLarge { .. })));
        assert!(bifrb_fixed_cert(SIG, LH, 1.0, 1.5).is_err());
    }

    #[test]
    fn fixed_certificate_inequalities_hold() {
        for &(s, lh, lg) in &[(2.51, 2.61, 1.0), (3.0, 4.0, 2.0), (2.2, 2.4, 0.5), (10.0, 10.1, 1.0)] {
            let cert = bifrb_fixed_cert(s, lh, lg, DEFAULT_SAFETY).unwrap();
            let abc = cert.abc();
            let (a, b, c, l) = (abc.a, abc.b, abc.c, cert.lambda);
            assert!(a / 2.0 * l + (b / l - c) / 2.0 > 0.0);
            assert!(1.0 / (2.0 * l) + b * c / 2.0 + a * l / 2.0 < (b - 1.0) / (2.0 * l) - (b + 1.0) * c / 2.0);
            assert!(1.0 / (2.0 * l) + b * c / 2.0 + a * l / 2.0 < a * l / 2.0 + b / (2.0 * l) - c / 2.0);
            assert!(cert.p_interval.1 - cert.p_interval.0 > 0.0);
            // the interval endpoints sum to aλ/2 + (b/λ − c)/2 ⇒ p_k constant from the midpoint
            let mut m = MeritParams::initial(cert.p_initial);
            let mut m1 = vec![];
            for _ in 0..6 {
                m = m.next(l, l, 0.99, &abc);
                assert!((m.p_cur - cert.p_initial).abs() < 1e-9 * cert.p_initial.abs().max(1.0));
                m1.push(m.m1_cur);
            }
            assert!(m1.iter().all(|&v| v > 0.0));
            assert!((m1[0] - m1[1]).abs() < 1e-9 * m1[0].abs().max(1.0));
        }
    }

    #[test]
    fn certificate_json_has_documented_fields() {
        let cert = bifrb_fixed_cert(SIG, LH, 1.0, DEFAULT_SAFETY).unwrap();
        let v: serde_json::Value = serde_json::from_str(&cert.to_json()).unwrap();
        for key in ["sigma", "l_grad_h", "l_grad_g", "lambda", "p_initial", "p_interval", "mode"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["mode"], "fixed");
        let back: Certificate<f64> = serde_json::from_str(&cert.to_json()).unwrap();
        assert_eq!(back, cert);
    }

    #[test]
    fn euclidean_certificate() {
        let c = ifrb_fixed_cert::<f64>(1.0, 0.49, 1.0).unwrap();
        assert!((c.lambda_max - 0.02 / 3.0).abs() < 1e-15);
        assert!((ifrb_fixed_cert::<f64>(1.0, 0.0, 1.0).unwrap().lambda_max - 1.0 / 3.0).abs() < 1e-15);
        assert!((ifrb_fixed_cert::<f64>(2.0, 0.25, 1.0).unwrap().lambda_max - 0.5 / 6.0).abs() < 1e-15);
        assert!(matches!(ifrb_fixed_cert(1.0, 0.5, 0.95), Err(ParamsError::InvalidAlpha(_))));

        // the midpoint keeps M_{1,k} > 0 for α_k = ᾱ at every parity
        for &(lg, ab) in &[(1.0, 0.49), (1.0, 0.0), (2.0, 0.25)] {
            let c = ifrb_fixed_cert(lg, ab, DEFAULT_SAFETY).unwrap();
            assert!(c.p_interval.0 < c.p_interval.1);
            let abc = c.abc();
            assert_eq!(abc.a, 0.0);
            let mut m = MeritParams::initial(c.p_initial);
            for _ in 0..6 {
                m = m.next(c.lambda, c.lambda, ab, &abc);
                assert!(m.m1_cur > 0.0, "{lg} {ab}: {}", m.m1_cur);
                assert!(m.p_cur > 0.0);
            }
        }
    }

    #[test]
    fn dynamic_schedule_examples() {
        let (ab, lg) = (0.2, 1.0);
        let eps = 0.1; // < (1 − 0.4)/3 = 0.2
        let hi_limit = eps / (2.0 * ab + 3.0 * eps * lg);
        let lam_bar = 0.9 * hi_limit;

        let constant = vec![0.12; 20];
        let r = dynamic_schedule_check(&constant, ab, lg, &[0.0; 19], eps);
        assert!(r.is_valid(), "{r:?}");
        let p = r.p_initial.unwrap();
        let abc = AbcConstants { a: 0.0, b: 1.0, c: lg };
        let mut m = MeritParams::initial(p);
        for _ in 0..10 {
            m = m.next(0.12, 0.12, ab, &abc);
            assert!(m.m1_cur > 0.0);
        }

        let dec: Vec<f64> = (-1..30).map(|k| eps + (lam_bar - eps) * 2f64.powi(-(k + 1))).collect();
        let incs: Vec<f64> = dec.windows(2).map(|w| 1.0 / w[1] - 1.0 / w[0]).collect();
        let r = dynamic_schedule_check(&dec, ab, lg, &incs, eps);
        assert!(r.is_valid(), "{r:?}");

        let mut up = constant.clone();
        up[5] = 0.13;
        let r = dynamic_schedule_check(&up, ab, lg, &[1.0; 19], eps);
        assert!(!r.increments_ok && !r.is_valid());

        let r = dynamic_schedule_check(&constant, ab, lg, &[0.0; 19], 0.5);
        assert!(!r.epsilon_ok);
    }

    #[test]
    fn nesterov_values() {
        assert_eq!(nesterov_alpha::<f64>(-1), 0.0);
        let mut s = NesterovSchedule::<f64>::new();
        let t0 = (1.0 + 5f64.sqrt()) / 2.0;
        let t1 = (1.0 + (1.0 + 4.0 * t0 * t0).sqrt()) / 2.0;
        assert!((t1 - 2.19353).abs() < 1e-5);
        assert!((s.alpha(0) - (t0 - 1.0) / t1).abs() < 1e-15);
        assert!((s.alpha(0) - 0.28175).abs() < 1e-5);
        let (a10, a50) = (s.alpha(10), s.alpha(50));
        assert!(a10 < a50 && a50 < 1.0);
        let mut prev = -1.0;
        for k in -1..200 {
            let a = s.alpha(k);
            assert!(a > prev && a < 1.0);
            prev = a;
        }
        assert_eq!(nesterov_alpha::<f64>(37), s.alpha(37));
    }

    #[test]
    fn nesterov_schedule_accepted_by_fixed_certificate() {
        let cert = bifrb_fixed_cert(SIG, LH, 1.0, DEFAULT_SAFETY).unwrap();
        let abc = cert.abc();
        let mut sched = NesterovSchedule::new();
        let mut m = MeritParams::initial(cert.p_initial);
        let (mut ps, mut m1s) = (vec![], vec![]);
        for k in 0..2000 {
            m = m.next(cert.lambda, cert.lambda, sched.alpha(k), &abc);
            ps.push(m.p_cur);
            m1s.push(m.m1_cur);
        }
        let rep = assumption3_report(&ps, &m1s, default_tail(ps.len()));
        assert!(rep.valid, "{rep:?}");
    }

    #[test]
    fn assumption3_examples() {
        let r = assumption3_report(&[7.6; 8], &[0.71; 8], 2);
        assert_eq!((r.p_tail_min, r.m1_tail_min, r.p_max), (7.6, 0.71, 7.6));
        assert!(r.valid);
        let r = assumption3_report(&[7.6; 8], &[0.71, 0.71, 0.71, 0.71, 0.71, 0.71, -0.1, 0.71], 2);
        assert!(!r.valid);
        // a negative entry before the tail window is tolerated
        let r = assumption3_report(&[-1.0, 2.0, 2.0, 2.0], &[0.5; 4], 2);
        assert!(r.valid);
        assert_eq!(r.p_max, 2.0);
    }
}
