//! Admissible parameter boxes, certified rate constants, empirical assumption
//! checks and Lyapunov energies.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::point::{dot, Point};
use crate::problems::Problem;

/// Slack below which an inequality sample counts as a violation.
pub const ASSUMPTION_SLACK: f64 = -1e-9;

/// Tolerance on `s·L = 1` for the discrete theorems.
const STEP_TOL: f64 = 1e-12;

/// Which convergence theorem a parameter box comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Exponential decay of the unperturbed continuous system.
    T31,
    /// Perturbed continuous system.
    T32,
    /// Linear rate of IAA with `s = 1/L`.
    T41,
    /// Power rate of IAA-Per with `s = 1/L`.
    T42,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [Theorem::T31, Theorem::T32, Theorem::T41, Theorem::T42];

    pub fn is_discrete(self) -> bool {
        matches!(self, Theorem::T41 | Theorem::T42)
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Theorem::T31 => "T31",
            Theorem::T32 => "T32",
            Theorem::T41 => "T41",
            Theorem::T42 => "T42",
        };
        f.write_str(s)
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T31" => Ok(Theorem::T31),
            "T32" => Ok(Theorem::T32),
            "T41" => Ok(Theorem::T41),
            "T42" => Ok(Theorem::T42),
            _ => Err(Error::Parse(format!("unknown theorem `{s}`"))),
        }
    }
}

/// A real interval with explicit endpoint semantics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_inclusive: bool,
    pub hi_inclusive: bool,
}

impl Interval {
    pub fn new(lo: f64, lo_inclusive: bool, hi: f64, hi_inclusive: bool) -> Self {
        Interval { lo, hi, lo_inclusive, hi_inclusive }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_inclusive { v >= self.lo } else { v > self.lo };
        let below = if self.hi_inclusive { v <= self.hi } else { v < self.hi };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi || (self.lo == self.hi && self.lo_inclusive && self.hi_inclusive))
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_inclusive { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_inclusive { ']' } else { ')' }
        )
    }
}

/// Constants derived from a theorem at a given parameter choice.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DerivedConstants {
    /// `λ = 2α/(κ+4)` (continuous theorems).
    pub lambda: Option<f64>,
    /// `c = β/(αs)` (discrete theorems).
    pub c: Option<f64>,
    /// Energy contraction factor of T41.
    pub rho: Option<f64>,
    /// Energy contraction factor of T42.
    pub sigma: Option<f64>,
    /// Noise amplification constant of T42.
    pub n: Option<f64>,
}

/// Admissible `(α, β)` region of one theorem for one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBox {
    pub theorem: Theorem,
    pub gamma: f64,
    pub kappa: f64,
    pub lipschitz: f64,
    /// Step size (discrete theorems only).
    pub s: Option<f64>,
    pub alpha_interval: Interval,
    /// The queried α, if any.
    pub alpha: Option<f64>,
    /// Admissible β at the queried α.
    pub beta_interval: Option<Interval>,
    pub derived: DerivedConstants,
}

impl ParameterBox {
    /// Admissible β interval at `alpha`; `None` when the bounds cross or the
    /// discriminant is not positive.
    pub fn beta_interval_at(&self, alpha: f64) -> Option<Interval> {
        beta_interval(self.theorem, self.gamma, self.kappa, alpha)
    }

    /// Whether `(alpha, beta)` lies in the box, with exact endpoint semantics.
    pub fn contains(&self, alpha: f64, beta: f64) -> bool {
        self.alpha_interval.contains(alpha)
            && self.beta_interval_at(alpha).is_some_and(|b| b.contains(beta))
    }
}

fn alpha_interval(theorem: Theorem, gamma: f64, kappa: f64) -> Interval {
    match theorem {
        Theorem::T31 => Interval::new(0.0, false, (kappa + 4.0) / 4.0 * (gamma / kappa).sqrt(), true),
        Theorem::T32 => {
            Interval::new(0.0, false, (kappa + 4.0) / 4.0 * (gamma / (2.0 * kappa)).sqrt(), true)
        }
        Theorem::T41 | Theorem::T42 => Interval::new(0.0, false, 0.5, false),
    }
}

fn beta_interval(theorem: Theorem, gamma: f64, kappa: f64, alpha: f64) -> Option<Interval> {
    let interval = match theorem {
        Theorem::T31 => {
            let k2 = (kappa + 2.0).powi(4);
            let k4 = kappa + 4.0;
            let hi = ((alpha * alpha * k2 + 16.0 * gamma * k4.powi(3)).sqrt()
                - alpha * (kappa + 2.0).powi(2))
                / (4.0 * gamma * k4);
            Interval::new(0.0, true, hi, true)
        }
        Theorem::T32 => {
            let k2 = (kappa + 2.0).powi(4);
            let k4 = kappa + 4.0;
            let r2 = std::f64::consts::SQRT_2;
            let hi = ((2.0 * alpha * alpha * k2 + 27.0 * gamma * k4.powi(3)).sqrt()
                - r2 * alpha * (kappa + 2.0).powi(2))
                / (9.0 * r2 * gamma * k4);
            Interval::new(0.0, true, hi, true)
        }
        Theorem::T41 => {
            let a2 = alpha * alpha;
            let disc = -15.0 * a2 * a2 + 2.0 * a2 + 1.0;
            if !(disc > 0.0) {
                return None;
            }
            let r = disc.sqrt();
            let lo = (1.0 + a2 - r) / (8.0 * alpha);
            let hi = alpha.min((1.0 + a2 + r) / (8.0 * alpha));
            Interval::new(lo, false, hi, false)
        }
        Theorem::T42 => {
            let disc = 1.0 - 16.0 * alpha.powi(4);
            if !(disc > 0.0) {
                return None;
            }
            let r = disc.sqrt();
            let lo = (1.0 - r) / (8.0 * alpha);
            let hi = (0.5 * alpha).min((1.0 + r) / (8.0 * alpha));
            Interval::new(lo, false, hi, false)
        }
    };
    if interval.is_empty() || !interval.hi.is_finite() {
        None
    } else {
        Some(interval)
    }
}

fn resolve_step(p: &Problem, theorem: Theorem, s: Option<f64>) -> Result<Option<f64>> {
    if !theorem.is_discrete() {
        return Ok(None);
    }
    let s = s.unwrap_or(1.0 / p.lipschitz());
    if (s * p.lipschitz() - 1.0).abs() > STEP_TOL {
        return Err(Error::InvalidParameter(format!(
            "{theorem} requires s = 1/L = {}, got {s}",
            1.0 / p.lipschitz()
        )));
    }
    Ok(Some(s))
}

/// The admissible α interval of `theorem` and, when `alpha` is given, the β
/// interval at that α together with the constants that do not depend on β.
pub fn parameter_box(
    p: &Problem,
    theorem: Theorem,
    alpha: Option<f64>,
    s: Option<f64>,
) -> Result<ParameterBox> {
    let s = resolve_step(p, theorem, s)?;
    let alpha_interval = alpha_interval(theorem, p.gamma(), p.kappa());
    let mut bx = ParameterBox {
        theorem,
        gamma: p.gamma(),
        kappa: p.kappa(),
        lipschitz: p.lipschitz(),
        s,
        alpha_interval,
        alpha,
        beta_interval: None,
        derived: DerivedConstants::default(),
    };
    if let Some(a) = alpha {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {a}")));
        }
        if !alpha_interval.contains(a) {
            return Err(Error::InfeasibleAlpha { alpha: a, interval: alpha_interval.to_string() });
        }
        bx.beta_interval = Some(bx.beta_interval_at(a).ok_or(Error::EmptyBetaInterval { alpha: a })?);
        if !theorem.is_discrete() {
            bx.derived.lambda = Some(2.0 * a / (p.kappa() + 4.0));
        }
    }
    Ok(bx)
}

/// The two candidates whose minimum is ρ (T41) or σ (T42). No box check.
pub fn contraction_branches(p: &Problem, theorem: Theorem, alpha: f64, beta: f64) -> (f64, f64) {
    let l = p.lipschitz();
    let g2 = p.gamma() * p.gamma();
    let pl_den = 2.0 * l / g2 + beta / 2.0;
    let step_den = beta / 2.0 * (1.0 + l * beta + l / alpha);
    let a3 = alpha.powi(3);
    match theorem {
        Theorem::T42 => (
            (1.0 / l) * (0.5 - beta / alpha) / pl_den,
            l / (2.0 * alpha) * (beta - 4.0 * alpha * beta * beta - a3) / step_den,
        ),
        _ => (
            (1.0 / (2.0 * l)) * (1.0 - beta / alpha) / pl_den,
            l / (2.0 * alpha) * ((alpha * alpha + 1.0) * beta - 4.0 * alpha * beta * beta - a3)
                / step_den,
        ),
    }
}

/// All constants the theorem defines at `(alpha, beta, s)`.
pub fn rate_constants(
    p: &Problem,
    theorem: Theorem,
    alpha: f64,
    beta: f64,
    s: f64,
) -> Result<DerivedConstants> {
    let s = resolve_step(p, theorem, Some(s))?;
    let bx = parameter_box(p, theorem, None, s)?;
    if !bx.contains(alpha, beta) {
        return Err(Error::OutOfBox { alpha, beta });
    }
    let mut d = DerivedConstants::default();
    match theorem {
        Theorem::T31 | Theorem::T32 => {
            d.lambda = Some(2.0 * alpha / (p.kappa() + 4.0));
        }
        Theorem::T41 => {
            let (a, b) = contraction_branches(p, theorem, alpha, beta);
            d.c = s.map(|s| beta / (alpha * s));
            d.rho = Some(a.min(b));
        }
        Theorem::T42 => {
            let (a, b) = contraction_branches(p, theorem, alpha, beta);
            d.c = s.map(|s| beta / (alpha * s));
            d.sigma = Some(a.min(b));
            d.n = Some((0.5 + beta / alpha + alpha / (2.0 * beta)) / p.lipschitz());
        }
    }
    Ok(d)
}

/// Structural inequality being sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Gradient characterization of strong quasiconvexity (sampled on pairs).
    Sqc,
    /// Polyak–Łojasiewicz with `η = γ²/4L`.
    Pl,
    /// `⟨∇f(x), x − x*⟩ ≥ κ (f(x) − f*)`.
    A1,
    /// `f(x) ≥ f* + γ/4 ‖x − x*‖²`.
    QuadGrowth,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Assumption::Sqc => "SQC",
            Assumption::Pl => "PL",
            Assumption::A1 => "A1",
            Assumption::QuadGrowth => "QuadGrowth",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub assumption: Assumption,
    pub samples: usize,
    pub violations: usize,
    /// Smallest slack observed (negative means violated).
    pub worst_margin: f64,
    pub pass: bool,
}

/// Per-axis sampling box.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox(pub Vec<(f64, f64)>);

impl DomainBox {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        DomainBox(vec![(lo, hi); dim])
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        Point::new(self.0.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect())
    }
}

struct Tally {
    assumption: Assumption,
    samples: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new(assumption: Assumption) -> Self {
        Tally { assumption, samples: 0, violations: 0, worst: f64::INFINITY }
    }

    fn push(&mut self, slack: f64) {
        self.samples += 1;
        // NaN slack counts as a violation
        if !(slack >= ASSUMPTION_SLACK) {
            self.violations += 1;
        }
        self.worst = self.worst.min(if slack.is_nan() { f64::NEG_INFINITY } else { slack });
    }

    fn report(self) -> AssumptionReport {
        AssumptionReport {
            assumption: self.assumption,
            samples: self.samples,
            violations: self.violations,
            worst_margin: self.worst,
            pass: self.violations == 0,
        }
    }
}

/// Samples the four structural inequalities on `domain`; deterministic in `seed`.
///
/// Reports come back in the order SQC, PL, A1, QuadGrowth.
pub fn check_assumptions(
    p: &Problem,
    domain: &DomainBox,
    samples: usize,
    seed: u64,
) -> Result<Vec<AssumptionReport>> {
    let (x_star, f_star) = p.require_minimizer()?;
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be ≥ 1".into()));
    }
    if domain.0.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: domain.0.len() });
    }
    if domain.0.iter().any(|&(lo, hi)| !(lo < hi && lo.is_finite() && hi.is_finite())) {
        return Err(Error::InvalidParameter("domain box needs finite lo < hi on every axis".into()));
    }
    let (gamma, l, kappa) = (p.gamma(), p.lipschitz(), p.kappa());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut qg = Tally::new(Assumption::QuadGrowth);
    let mut pl = Tally::new(Assumption::Pl);
    let mut a1 = Tally::new(Assumption::A1);
    let mut sqc = Tally::new(Assumption::Sqc);

    for _ in 0..samples {
        let x = domain.sample(&mut rng);
        let fx = p.value(&x) - f_star;
        let gx = p.gradient(&x);
        let dx = x.sub(x_star);
        qg.push(fx - gamma / 4.0 * dx.norm_sq());
        pl.push(gx.norm_sq() - gamma * gamma / (2.0 * l) * fx);
        a1.push(gx.dot(&dx) - kappa * fx);

        // pair check: order so that f(lo) ≤ f(hi), then test at hi
        let y = domain.sample(&mut rng);
        let fy = p.value(&y) - f_star;
        let (low, high) = if fx <= fy { (&x, &y) } else { (&y, &x) };
        let g_high = if fx <= fy { p.gradient(&y) } else { gx.clone() };
        let d = low.sub(high);
        sqc.push(-gamma / 2.0 * d.norm_sq() - dot(&g_high, &d));
    }

    Ok(vec![sqc.report(), pl.report(), a1.report(), qg.report()])
}

/// Continuous Lyapunov energy
/// `E = f(x+βv) − f* + ½‖λ(x−x*) + v‖² + (λ²/2)‖x−x*‖²`, `λ = 2α/(κ+4)`.
pub fn continuous_energy(p: &Problem, alpha: f64, beta: f64, x: &[f64], v: &[f64]) -> Result<f64> {
    let (x_star, f_star) = p.require_minimizer()?;
    Ok(continuous_energy_unchecked(p, x_star, f_star, alpha, beta, x, v))
}

pub(crate) fn continuous_energy_unchecked(
    p: &Problem,
    x_star: &[f64],
    f_star: f64,
    alpha: f64,
    beta: f64,
    x: &[f64],
    v: &[f64],
) -> f64 {
    let lambda = 2.0 * alpha / (p.kappa() + 4.0);
    let shifted: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi + beta * vi).collect();
    let mut vel = 0.0;
    let mut dist = 0.0;
    for ((xi, vi), si) in x.iter().zip(v).zip(x_star) {
        let d = xi - si;
        let w = lambda * d + vi;
        vel += w * w;
        dist += d * d;
    }
    p.value(&shifted) - f_star + 0.5 * vel + 0.5 * lambda * lambda * dist
}

/// Discrete energy `E_k = f(x_k) − f* + (c/2)‖x_k − x_{k−1}‖²`.
pub fn discrete_energy(p: &Problem, c: f64, x_k: &[f64], x_km1: &[f64]) -> Result<f64> {
    let f_star = p.min_value().ok_or(Error::MissingMinimizer)?;
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidParameter(format!("energy weight c must be ≥ 0, got {c}")));
    }
    let step: f64 = x_k.iter().zip(x_km1).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(p.value(x_k) - f_star + 0.5 * c * step)
}
