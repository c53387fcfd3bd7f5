//! Inertial accelerated methods with implicit Hessian-driven damping for
//! strongly quasiconvex minimization.
//!
//! The crate provides
//!
//! * [`problems`]: objectives with analytic gradients and their
//!   strong-quasiconvexity metadata (γ, L, κ, x*),
//! * [`analysis`]: admissible parameter boxes, certified rate constants,
//!   empirical assumption checks and Lyapunov energies,
//! * [`dynamics`]: fixed-step RK4 simulation of
//!   `ẍ + αẋ + ∇f(x + βẋ) = ε(t)`,
//! * [`optimizers`]: the inertial accelerated algorithm (IAA / IAA-Per) and
//!   the HBM, NAG, HBM-H and NAG-H baselines,
//! * [`perturbations`]: counter-based reproducible noise models,
//! * [`rates`]: empirical rate fits and certificates.
//!
//! The discrete scheme is
//!
//! ```text
//! y_k     = x_k + α (x_k − x_{k−1})
//! z_k     = x_k + β (x_k − x_{k−1})
//! x_{k+1} = y_k − s ∇f(z_k) + s ε_k
//! ```
//!
//! obtained from the continuous system with time step `√s` after renaming
//! `1 − α√s → α` and `β/√s → β`.

// `!(a <= b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod optimizers;
pub mod perturbations;
pub mod point;
pub mod problems;
pub mod rates;

pub use analysis::{
    check_assumptions, continuous_energy, discrete_energy, parameter_box, rate_constants,
    Assumption, AssumptionReport, DerivedConstants, DomainBox, Interval, ParameterBox, Theorem,
};
pub use dynamics::{
    energy_nonincreasing, integrate, rate_certificate, rhs, Certificate, OdeConfig, OdeState,
    TrajectoryRecord,
};
pub use error::{Error, Result};
pub use optimizers::{
    run, run_from, step_baseline, step_iaa, AlgorithmConfig, BaselineStep, IterateRecord, RunResult, StopReason,
    StoppingRule, Variant,
};
pub use perturbations::{Direction, PerturbationModel, PerturbationSpec};
pub use point::Point;
pub use problems::{builtin_problem, eval_pair, Objective, Problem};
pub use rates::{
    fit_rate, fit_rate_with_floor, geometric_sum_oracle, oscillation_metric, oscillation_of,
    theorem_bounds, BoundCheck, FitKind, GeometricCheck, RateFit,
};
