//! Differentiable objectives and their strong-quasiconvexity metadata.
//!
//! A [`Problem`] pairs an [`Objective`] (value and analytic gradient) with the
//! constants the convergence theory is stated in: the strong-quasiconvexity
//! modulus `gamma`, the gradient Lipschitz constant `lipschitz` and the
//! quasar-convexity constant `kappa` (defaulting to `gamma / lipschitz`).
//! The metadata is asserted by the caller; [`crate::analysis::check_assumptions`]
//! falsifies it empirically.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::point::Point;

/// Stationarity tolerance required of a declared minimizer.
pub const MINIMIZER_GRAD_TOL: f64 = 1e-10;

/// A smooth objective `f: R^n -> R` with analytic gradient.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `out` (`out.len() == dim`).
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// `f(x) = x² + 2 sin² x`, nonconvex but ½-strongly quasiconvex with 6-Lipschitz gradient.
#[derive(Debug, Clone, Copy, Default)]
pub struct SineBowl;

impl Objective for SineBowl {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s = x[0].sin();
        x[0] * x[0] + 2.0 * s * s
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 2.0 * x[0] + 2.0 * (2.0 * x[0]).sin();
    }
}

/// `f(x, y) = x²/10 + y²/5 − arctan(1 / (x² + 2y² + 0.2))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ArctanValley;

impl Objective for ArctanValley {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        let r = a * a + 2.0 * b * b;
        a * a / 10.0 + b * b / 5.0 - (1.0 / (r + 0.2)).atan()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let (a, b) = (x[0], x[1]);
        let u = a * a + 2.0 * b * b + 0.2;
        // d/dr arctan(1/u) = -1 / (u² + 1)
        let w = 1.0 / (u * u + 1.0);
        out[0] = a / 5.0 + 2.0 * a * w;
        out[1] = 2.0 * b / 5.0 + 4.0 * b * w;
    }
}

/// Diagonal quadratic `f(x) = ½ Σ λᵢ xᵢ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalQuadratic {
    spectrum: Vec<f64>,
}

impl DiagonalQuadratic {
    pub fn new(spectrum: Vec<f64>) -> Result<Self> {
        if spectrum.is_empty() {
            return Err(Error::InvalidParameter("quadratic spectrum is empty".into()));
        }
        if spectrum.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidParameter(
                "quadratic eigenvalues must be positive and finite".into(),
            ));
        }
        Ok(DiagonalQuadratic { spectrum })
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }
}

impl Objective for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.spectrum.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.spectrum).map(|(v, l)| l * v * v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, v), l) in out.iter_mut().zip(x).zip(&self.spectrum) {
            *o = l * v;
        }
    }
}

/// An objective together with the constants the theory needs.
#[derive(Clone)]
pub struct Problem {
    name: String,
    objective: Arc<dyn Objective>,
    gamma: f64,
    lipschitz: f64,
    kappa: f64,
    minimizer: Option<Point>,
    min_value: Option<f64>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("gamma", &self.gamma)
            .field("lipschitz", &self.lipschitz)
            .field("kappa", &self.kappa)
            .field("minimizer", &self.minimizer)
            .field("min_value", &self.min_value)
            .finish()
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

impl Problem {
    /// Wraps `objective` with modulus `gamma` and Lipschitz constant `lipschitz`;
    /// `kappa` defaults to `gamma / lipschitz`.
    pub fn new(
        name: impl Into<String>,
        objective: Arc<dyn Objective>,
        gamma: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        let gamma = positive("gamma", gamma)?;
        let lipschitz = positive("lipschitz", lipschitz)?;
        if objective.dim() == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Problem {
            name: name.into(),
            objective,
            gamma,
            lipschitz,
            kappa: gamma / lipschitz,
            minimizer: None,
            min_value: None,
        })
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = positive("kappa", kappa)?;
        Ok(self)
    }

    /// Declares `x*`; the gradient there must vanish to within [`MINIMIZER_GRAD_TOL`].
    /// The optimal value is evaluated from the objective.
    pub fn with_minimizer(mut self, x_star: Point) -> Result<Self> {
        x_star.check_dim(self.dim())?;
        x_star.check_finite()?;
        let g = self.gradient(&x_star);
        let gn = g.norm();
        if gn > MINIMIZER_GRAD_TOL {
            return Err(Error::InvalidParameter(format!(
                "declared minimizer is not stationary: ‖∇f(x*)‖ = {gn:e}"
            )));
        }
        self.min_value = Some(self.objective.value(&x_star));
        self.minimizer = Some(x_star);
        Ok(self)
    }

    /// Overrides the optimal value (e.g. with a closed form).
    pub fn with_min_value(mut self, value: f64) -> Self {
        self.min_value = Some(value);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn minimizer(&self) -> Option<&Point> {
        self.minimizer.as_ref()
    }

    pub fn min_value(&self) -> Option<f64> {
        self.min_value
    }

    pub fn objective(&self) -> &dyn Objective {
        self.objective.as_ref()
    }

    /// Unchecked evaluation, used on hot paths.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    /// Unchecked gradient, used on hot paths.
    pub fn gradient(&self, x: &[f64]) -> Point {
        let mut out = Point::zeros(self.dim());
        self.objective.gradient(x, &mut out);
        out
    }

    pub(crate) fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.objective.gradient(x, out)
    }

    /// `‖x − x*‖`, when `x*` is known.
    pub fn dist_to_min(&self, x: &[f64]) -> Option<f64> {
        self.minimizer.as_ref().map(|m| m.dist(x))
    }

    /// `f(x) − f*` if `f*` is known, else `f(x)`.
    pub fn value_error(&self, x: &[f64]) -> f64 {
        let v = self.value(x);
        match self.min_value {
            Some(fs) => v - fs,
            None => v,
        }
    }

    pub(crate) fn require_minimizer(&self) -> Result<(&Point, f64)> {
        match (&self.minimizer, self.min_value) {
            (Some(x), Some(f)) => Ok((x, f)),
            _ => Err(Error::MissingMinimizer),
        }
    }
}

/// Checked evaluation: `(f(x), ∇f(x))`.
pub fn eval_pair(p: &Problem, x: &Point) -> Result<(f64, Point)> {
    x.check_dim(p.dim())?;
    x.check_finite()?;
    let v = p.value(x);
    let g = p.gradient(x);
    if !v.is_finite() || !g.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    Ok((v, g))
}

/// The one-dimensional sine bowl: γ = ½, L = 6, x* = 0, f* = 0.
pub fn example51() -> Problem {
    Problem::new("example51", Arc::new(SineBowl), 0.5, 6.0)
        .and_then(|p| p.with_minimizer(Point::zeros(1)))
        .expect("built-in metadata is valid")
}

/// The two-dimensional arctan valley: γ = 0.2, L = 8, x* = 0, f* = −arctan 5.
pub fn example52() -> Problem {
    Problem::new("example52", Arc::new(ArctanValley), 0.2, 8.0)
        .and_then(|p| p.with_minimizer(Point::zeros(2)))
        .map(|p| p.with_min_value(-(5.0f64).atan()))
        .expect("built-in metadata is valid")
}

/// Diagonal quadratic with the given eigenvalues: γ = λ_min, L = λ_max.
pub fn quadratic(spectrum: Vec<f64>) -> Result<Problem> {
    let q = DiagonalQuadratic::new(spectrum)?;
    let lo = q.spectrum().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = q.spectrum().iter().cloned().fold(0.0, f64::max);
    let dim = q.dim();
    let name = format!(
        "quadratic({dim},[{}])",
        q.spectrum().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    );
    Problem::new(name, Arc::new(q), lo, hi)?
        .with_minimizer(Point::zeros(dim))
        .map(|p| p.with_min_value(0.0))
}

/// Resolves `example51`, `example52` or `quadratic(d, [l1, ..., ld])`.
pub fn builtin_problem(name: &str) -> Result<Problem> {
    let trimmed: String = name.chars().filter(|c| !c.is_whitespace()).collect();
    match trimmed.as_str() {
        "example51" => return Ok(example51()),
        "example52" => return Ok(example52()),
        _ => {}
    }
    let inner = trimmed
        .strip_prefix("quadratic(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))?;
    let (dim, spectrum) = inner
        .split_once(',')
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))?;
    let dim: usize = dim
        .parse()
        .map_err(|_| Error::Parse(format!("bad quadratic dimension in `{name}`")))?;
    let list = spectrum
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("expected [eigenvalues] in `{name}`")))?;
    let eigs = list
        .split(',')
        .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad eigenvalue `{t}`"))))
        .collect::<Result<Vec<f64>>>()?;
    if eigs.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: eigs.len() });
    }
    quadratic(eigs)
}
