//! Discrete inertial methods.
//!
//! * IAA / IAA-Per: `y = x_k + α d_k`, `z = x_k + β d_k`,
//!   `x_{k+1} = y − s∇f(z) + sε_k`, with `d_k = x_k − x_{k−1}`.
//! * HBM: `x_{k+1} = x_k + α d_k − β∇f(x_k)`.
//! * NAG: `y = x_k + α d_k`, `x_{k+1} = y − β∇f(y)`.
//! * HBM-H / NAG-H: `y = x_k + α d_k − θ(∇f(x_k) − ∇f(x_{k−1}))`, then
//!   `x_{k+1} = y − β∇f(x_k)` (HBM-H) or `y − β∇f(y)` (NAG-H).
//!
//! Perturbed baselines add `β ε_k`. Runs use `x_{−1} := x_0`.

use std::fmt;
use std::str::FromStr;

use crate::analysis::{parameter_box, Theorem};
use crate::error::{Error, Result};
use crate::perturbations::PerturbationSpec;
use crate::point::Point;
use crate::problems::Problem;

pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Iaa,
    Hbm,
    Nag,
    HbmH,
    NagH,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Iaa, Variant::Hbm, Variant::Nag, Variant::HbmH, Variant::NagH];

    pub fn is_baseline(self) -> bool {
        self != Variant::Iaa
    }

    fn corrected(self) -> bool {
        matches!(self, Variant::HbmH | Variant::NagH)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Iaa => "iaa",
            Variant::Hbm => "hbm",
            Variant::Nag => "nag",
            Variant::HbmH => "hbm-h",
            Variant::NagH => "nag-h",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "iaa" | "iaa-per" => Ok(Variant::Iaa),
            "hbm" | "hbm-per" => Ok(Variant::Hbm),
            "nag" | "nag-per" => Ok(Variant::Nag),
            "hbm-h" | "hbm-h-per" => Ok(Variant::HbmH),
            "nag-h" | "nag-h-per" => Ok(Variant::NagH),
            _ => Err(Error::Parse(format!("unknown algorithm `{s}`"))),
        }
    }
}

/// Coefficients of one method.
///
/// IAA uses `(alpha, beta, s)`; HBM and NAG use `alpha` and `beta` as the
/// gradient step; HBM-H and NAG-H additionally use `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub s: f64,
    pub perturb: PerturbationSpec,
}

impl AlgorithmConfig {
    pub fn iaa(alpha: f64, beta: f64, s: f64) -> Self {
        AlgorithmConfig { variant: Variant::Iaa, alpha, beta, theta: 0.0, s, perturb: PerturbationSpec::none() }
    }

    pub fn hbm(alpha: f64, step: f64) -> Self {
        Self::baseline(Variant::Hbm, alpha, 0.0, step)
    }

    pub fn nag(alpha: f64, step: f64) -> Self {
        Self::baseline(Variant::Nag, alpha, 0.0, step)
    }

    pub fn hbm_h(alpha: f64, theta: f64, step: f64) -> Self {
        Self::baseline(Variant::HbmH, alpha, theta, step)
    }

    pub fn nag_h(alpha: f64, theta: f64, step: f64) -> Self {
        Self::baseline(Variant::NagH, alpha, theta, step)
    }

    pub fn baseline(variant: Variant, alpha: f64, theta: f64, step: f64) -> Self {
        AlgorithmConfig { variant, alpha, beta: step, theta, s: 0.0, perturb: PerturbationSpec::none() }
    }

    pub fn with_perturbation(mut self, perturb: PerturbationSpec) -> Self {
        self.perturb = perturb;
        self
    }

    /// Energy weight `c = β/(αs)` of the IAA Lyapunov sequence.
    pub fn energy_weight(&self) -> Option<f64> {
        (self.variant == Variant::Iaa && self.alpha > 0.0 && self.s > 0.0)
            .then(|| self.beta / (self.alpha * self.s))
    }

    fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be ≥ 0, got {v}")))
            }
        };
        nonneg("alpha", self.alpha)?;
        nonneg("beta", self.beta)?;
        nonneg("theta", self.theta)?;
        if self.variant == Variant::Iaa && !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size s must be > 0, got {}", self.s)));
        }
        Ok(())
    }

    /// Warnings for IAA parameters outside the certified box (T41 unperturbed,
    /// T42 perturbed). Baselines have no certified box.
    pub fn box_warnings(&self, p: &Problem) -> Vec<String> {
        if self.variant != Variant::Iaa {
            return Vec::new();
        }
        let theorem = if self.perturb.is_none() { Theorem::T41 } else { Theorem::T42 };
        let mut out = Vec::new();
        if (self.s * p.lipschitz() - 1.0).abs() > 1e-12 {
            out.push(format!("s = {} differs from 1/L = {}; {theorem} does not apply", self.s, 1.0 / p.lipschitz()));
        }
        match parameter_box(p, theorem, None, None) {
            Ok(bx) if bx.contains(self.alpha, self.beta) => {}
            Ok(_) => out.push(format!(
                "(alpha, beta) = ({}, {}) lies outside the {theorem} box; no certified rate",
                self.alpha, self.beta
            )),
            Err(e) => out.push(e.to_string()),
        }
        out
    }
}

impl fmt::Display for AlgorithmConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            Variant::Iaa => write!(f, "iaa(alpha={}, beta={}, s={})", self.alpha, self.beta, self.s)?,
            Variant::Hbm | Variant::Nag => write!(f, "{}(alpha={}, beta={})", self.variant, self.alpha, self.beta)?,
            Variant::HbmH | Variant::NagH => write!(
                f,
                "{}(alpha={}, theta={}, beta={})",
                self.variant, self.alpha, self.theta, self.beta
            )?,
        }
        if !self.perturb.is_none() {
            write!(f, " + {}", self.perturb)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    /// Threshold on `f(x_k) − f*` (or on `‖∇f(x_k)‖` when `f*` is unknown);
    /// zero disables the tolerance trigger.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule { tol: 1e-10, max_iter: 100_000 }
    }
}

impl StoppingRule {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        StoppingRule { tol, max_iter }
    }

    /// Fixed iteration budget; the tolerance never triggers.
    pub fn iterations(max_iter: usize) -> Self {
        StoppingRule { tol: 0.0, max_iter }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIter,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Tolerance => "tolerance",
            StopReason::MaxIter => "max_iter",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Point,
    /// `f(x_k) − f*`, or raw `f(x_k)` when `f*` is unknown.
    pub value_error: f64,
    pub grad_norm: f64,
    pub dist: Option<f64>,
    /// `‖x_k − x_{k−1}‖`.
    pub step: f64,
    /// Discrete energy with `c = β/(αs)` (IAA only).
    pub energy: Option<f64>,
    /// Cumulative gradient evaluations spent by the method (diagnostics excluded).
    pub grad_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<IterateRecord>,
    pub stop: StopReason,
    pub grad_evals: usize,
    pub warnings: Vec<String>,
}

impl RunResult {
    /// Index `k` of the last iterate.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("runs record at least x_0 and x_1")
    }
}

/// One IAA / IAA-Per step.
pub fn step_iaa(p: &Problem, cfg: &AlgorithmConfig, x_k: &[f64], x_km1: &[f64], eps_k: &[f64]) -> Result<Point> {
    if cfg.variant != Variant::Iaa {
        return Err(Error::InvalidParameter(format!("step_iaa called with variant {}", cfg.variant)));
    }
    let z: Vec<f64> = x_k.iter().zip(x_km1).map(|(a, b)| a + cfg.beta * (a - b)).collect();
    let g = p.gradient(&z);
    let next: Vec<f64> = x_k
        .iter()
        .zip(x_km1)
        .zip(g.iter().zip(eps_k))
        .map(|((a, b), (gi, ei))| {
            let y = a + cfg.alpha * (a - b);
            y - cfg.s * gi + cfg.s * ei
        })
        .collect();
    let next = Point::new(next);
    if !next.is_finite() {
        return Err(Error::NonFiniteIterate { last_finite_k: 0 });
    }
    Ok(next)
}

/// Output of a baseline step.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineStep {
    pub x_next: Point,
    /// `∇f(x_k)`, to cache as `g_{k−1}` for the next step. Plain NAG never
    /// evaluates it.
    pub g_k: Option<Point>,
    pub grad_evals: usize,
}

/// One HBM / NAG / HBM-H / NAG-H step, optionally perturbed by `β ε_k`.
pub fn step_baseline(
    p: &Problem,
    cfg: &AlgorithmConfig,
    x_k: &[f64],
    x_km1: &[f64],
    g_km1: Option<&[f64]>,
    eps_k: &[f64],
) -> Result<BaselineStep> {
    let (alpha, beta, theta) = (cfg.alpha, cfg.beta, cfg.theta);
    let momentum = |a: f64, b: f64| a + alpha * (a - b);
    let (x_next, g_k, evals) = match cfg.variant {
        Variant::Iaa => {
            return Err(Error::InvalidParameter("step_baseline called with IAA".into()));
        }
        Variant::Hbm => {
            let g = p.gradient(x_k);
            let x: Vec<f64> = (0..x_k.len()).map(|i| momentum(x_k[i], x_km1[i]) - beta * g[i]).collect();
            (x, Some(g), 1)
        }
        Variant::Nag => {
            let y: Vec<f64> = x_k.iter().zip(x_km1).map(|(a, b)| momentum(*a, *b)).collect();
            let gy = p.gradient(&y);
            let x: Vec<f64> = y.iter().zip(gy.iter()).map(|(yi, gi)| yi - beta * gi).collect();
            (x, None, 1)
        }
        Variant::HbmH | Variant::NagH => {
            let g_prev = g_km1.ok_or(Error::MissingGradientCache)?;
            let g = p.gradient(x_k);
            let y: Vec<f64> = (0..x_k.len())
                .map(|i| momentum(x_k[i], x_km1[i]) - theta * (g[i] - g_prev[i]))
                .collect();
            if cfg.variant == Variant::HbmH {
                let x: Vec<f64> = y.iter().zip(g.iter()).map(|(yi, gi)| yi - beta * gi).collect();
                (x, Some(g), 1)
            } else {
                let gy = p.gradient(&y);
                let x: Vec<f64> = y.iter().zip(gy.iter()).map(|(yi, gi)| yi - beta * gi).collect();
                (x, Some(g), 2)
            }
        }
    };
    let x_next: Vec<f64> = x_next.iter().zip(eps_k).map(|(xi, ei)| xi + beta * ei).collect();
    let x_next = Point::new(x_next);
    if !x_next.is_finite() {
        return Err(Error::NonFiniteIterate { last_finite_k: 0 });
    }
    Ok(BaselineStep { x_next, g_k, grad_evals: evals })
}

fn make_record(
    p: &Problem,
    c: Option<f64>,
    k: usize,
    x: &Point,
    prev: &Point,
    grad_evals: usize,
) -> IterateRecord {
    let step = x.dist(prev);
    let value_error = p.value_error(x);
    let energy = match (c, p.min_value()) {
        (Some(c), Some(_)) => Some(value_error + 0.5 * c * step * step),
        _ => None,
    };
    IterateRecord {
        k,
        x: x.clone(),
        value_error,
        grad_norm: p.gradient(x).norm(),
        dist: p.dist_to_min(x),
        step,
        energy,
        grad_evals,
    }
}

/// Runs `cfg` from `(x0, x1)` until `stop` triggers; every iterate is recorded.
pub fn run(p: &Problem, cfg: &AlgorithmConfig, x0: &Point, x1: &Point, stop: &StoppingRule) -> Result<RunResult> {
    cfg.validate()?;
    for x in [x0, x1] {
        x.check_dim(p.dim())?;
        x.check_finite()?;
    }
    if !(stop.tol >= 0.0 && stop.tol.is_finite()) || stop.max_iter == 0 {
        return Err(Error::InvalidParameter("stopping rule needs tol ≥ 0 and max_iter ≥ 1".into()));
    }
    let warnings = cfg.box_warnings(p);
    let c = cfg.energy_weight();
    let dim = p.dim();
    let perturbed = !cfg.perturb.is_none();
    let use_value = p.min_value().is_some();

    let mut evals = 0;
    let mut g_cache = if cfg.variant.corrected() {
        evals += 1;
        Some(p.gradient(x0))
    } else {
        None
    };

    let mut records = vec![make_record(p, c, 0, x0, x0, 0), make_record(p, c, 1, x1, x0, evals)];
    let mut prev = x0.clone();
    let mut cur = x1.clone();
    let zero = Point::zeros(dim);

    let reason = loop {
        let last = records.last().expect("nonempty");
        let k = last.k;
        let criterion = if use_value { last.value_error } else { last.grad_norm };
        if stop.tol > 0.0 && criterion <= stop.tol {
            break StopReason::Tolerance;
        }
        if k >= stop.max_iter {
            break StopReason::MaxIter;
        }
        let eps = if perturbed { cfg.perturb.sample_discrete(k as u64, dim) } else { zero.clone() };
        let next = match cfg.variant {
            Variant::Iaa => {
                evals += 1;
                step_iaa(p, cfg, &cur, &prev, &eps)
            }
            _ => step_baseline(p, cfg, &cur, &prev, g_cache.as_deref(), &eps).map(|out| {
                evals += out.grad_evals;
                if out.g_k.is_some() {
                    g_cache = out.g_k;
                }
                out.x_next
            }),
        }
        .map_err(|e| match e {
            Error::NonFiniteIterate { .. } => Error::NonFiniteIterate { last_finite_k: k },
            other => other,
        })?;
        if next.norm() > DIVERGENCE_BOUND {
            return Err(Error::Divergence { at: (k + 1) as f64 });
        }
        records.push(make_record(p, c, k + 1, &next, &cur, evals));
        prev = std::mem::replace(&mut cur, next);
    };

    Ok(RunResult { records, stop: reason, grad_evals: evals, warnings })
}

/// Helper for runs started with `x_0 = x_1`.
pub fn run_from(p: &Problem, cfg: &AlgorithmConfig, x0: &Point, stop: &StoppingRule) -> Result<RunResult> {
    run(p, cfg, x0, x0, stop)
}
