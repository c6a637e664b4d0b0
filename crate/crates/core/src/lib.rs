//! Bregman inertial forward-reflected-backward splitting (BiFRB) for
//! nonconvex composite problems `min_x f(x) + g(x)`, with `f` proper lsc and
//! prox-friendly and `g` smooth with a Lipschitz gradient.
//!
//! Everything is generic over the floating-point type through [`Scalar`];
//! `f64` aliases are exported at the crate root for the common case.

// `!(a < b)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod kernels;
pub mod linalg;
pub mod params;
pub mod problems;
pub mod root;
pub mod scalar;
pub mod solvers;
pub mod subproblems;

pub use bench::{
    aggregate, derive_seed, fit_geometric, rate_fit, run_benchmark, table1_sizes, BenchConfig, BenchError, BenchReport,
    BenchmarkRow, Protocol, RateFit, ReportFormat,
};
pub use kernels::{Kernel, KernelError};
pub use params::{
    abc_constants, assumption3_report, bifrb_cert_at, bifrb_fixed_cert, closed_form_p, dynamic_schedule_check,
    ifrb_fixed_cert, nesterov_alpha, AbcConstants, Assumption3Report, Certificate, MeritParams, NesterovSchedule,
    ParamsError, ScheduleReport, StepMode,
};
pub use problems::{generate_instance, BMode, CompositeProblem, FeasibilityInstance, ProblemError, QuadraticProblem};
pub use root::{find_root_increasing, RootError, RootOptions};
pub use scalar::Scalar;
pub use solvers::{
    run, run_solver, HalvingHeuristic, InertiaRule, IterationRecord, Method, MethodKind, RunOptions, SolverError,
    StepPlan, TerminationSpec, Trace,
};
pub use subproblems::{RadialSolution, SubproblemError, SubproblemQuery};

pub type KernelF64 = Kernel<f64>;
pub type CertificateF64 = Certificate<f64>;
pub type MeritParamsF64 = MeritParams<f64>;
