//! Empirical rate fits, oscillation counts and the weighted geometric sum
//! used to bound perturbed runs.

use std::fmt;

use crate::analysis::{rate_constants, Theorem};
use crate::error::{Error, Result};
use crate::optimizers::{AlgorithmConfig, IterateRecord, Variant};
use crate::point::dot;
use crate::problems::Problem;

/// Values at or below this are dropped before taking logs.
pub const FIT_FLOOR: f64 = 1e-15;
const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    /// `log v = a + r t`
    Exponential,
    /// `log v = a + r log t`
    Power,
}

impl fmt::Display for FitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitKind::Exponential => "exponential",
            FitKind::Power => "power",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub kind: FitKind,
    /// Decay rate: minus the slope of the log-linear fit, so `e^{−0.3k}`
    /// gives 0.3 and `k^{−2}` gives 2.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Half-open index range of the input series that was fitted.
    pub window: (usize, usize),
}

/// Least-squares fit over the trailing `window_fraction` of `series`
/// (`(t, value)` pairs), ignoring values `≤` [`FIT_FLOOR`].
pub fn fit_rate(series: &[(f64, f64)], kind: FitKind, window_fraction: f64) -> Result<RateFit> {
    fit_rate_with_floor(series, kind, window_fraction, FIT_FLOOR)
}

/// As [`fit_rate`] with an explicit floor. A floor of zero keeps every
/// positive value.
pub fn fit_rate_with_floor(
    series: &[(f64, f64)],
    kind: FitKind,
    window_fraction: f64,
    floor: f64,
) -> Result<RateFit> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("window fraction must be in (0, 1], got {window_fraction}")));
    }
    if !(floor >= 0.0) {
        return Err(Error::InvalidParameter(format!("fit floor must be ≥ 0, got {floor}")));
    }
    let n = series.len();
    let take = ((n as f64) * window_fraction).ceil() as usize;
    let start = n - take.min(n);
    let mut xs = Vec::with_capacity(take);
    let mut ys = Vec::with_capacity(take);
    for &(t, v) in &series[start..] {
        if !t.is_finite() || !v.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        if v <= floor {
            continue;
        }
        let x = match kind {
            FitKind::Exponential => t,
            FitKind::Power if t > 0.0 => t.ln(),
            FitKind::Power => continue,
        };
        xs.push(x);
        ys.push(v.ln());
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { needed: MIN_FIT_POINTS, got: xs.len() });
    }
    let (slope, intercept, r2) = least_squares(&xs, &ys);
    Ok(RateFit { kind, rate: -slope, intercept, r_squared: r2, window: (start, n) })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    // a constant series is fitted perfectly by a flat line
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Result of [`geometric_sum_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricCheck {
    /// `max_k S_k k^q`.
    pub max_scaled: f64,
    /// `S_k k^q` at `k_max`.
    pub last_scaled: f64,
    /// Whether `S_k k^q` is nonincreasing over the last 10% of indices.
    pub bounded: bool,
}

/// Evaluates `S_k = Σ_{i=1}^{k} θ^{k−i} i^{−q}` for `k ≤ k_max` and checks
/// that `S_k = O(k^{−q})`.
pub fn geometric_sum_oracle(theta: f64, q: f64, k_max: usize) -> Result<GeometricCheck> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta must be in (0, 1), got {theta}")));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must be > 0, got {q}")));
    }
    if k_max < 10 {
        return Err(Error::InsufficientData { needed: 10, got: k_max });
    }
    let tail_from = k_max - k_max / 10;
    let mut s = 0.0;
    let mut max_scaled: f64 = 0.0;
    let mut prev = f64::INFINITY;
    let mut bounded = true;
    for k in 1..=k_max {
        let kf = k as f64;
        s = theta * s + kf.powf(-q);
        let scaled = s * kf.powf(q);
        max_scaled = max_scaled.max(scaled);
        if k > tail_from && scaled > prev + 1e-9 * prev.max(1.0) {
            bounded = false;
        }
        prev = scaled;
    }
    Ok(GeometricCheck { max_scaled, last_scaled: prev, bounded })
}

/// Fraction of consecutive increments `(x_{k+1} − x_k, x_{k+2} − x_{k+1})`
/// with negative inner product.
pub fn oscillation_metric(records: &[IterateRecord]) -> Result<f64> {
    let pts: Vec<&[f64]> = records.iter().map(|r| r.x.as_slice()).collect();
    oscillation_of(&pts)
}

/// [`oscillation_metric`] on raw points.
pub fn oscillation_of<P: AsRef<[f64]>>(points: &[P]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: points.len() });
    }
    let inc: Vec<Vec<f64>> = points
        .windows(2)
        .map(|w| w[1].as_ref().iter().zip(w[0].as_ref()).map(|(a, b)| a - b).collect())
        .collect();
    let reversals = inc.windows(2).filter(|w| dot(&w[0], &w[1]) < 0.0).count();
    Ok(reversals as f64 / (inc.len() - 1) as f64)
}

/// First `k` with `value_error ≤ tol`.
pub fn iterations_to(records: &[IterateRecord], tol: f64) -> Option<usize> {
    records.iter().find(|r| r.value_error <= tol).map(|r| r.k)
}

/// Relative slack for the discrete theorem bounds.
pub const BOUND_SLACK: f64 = 1e-9;

/// Outcome of one inequality checked along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub theorem: Theorem,
    pub checked: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen (0 when both sides vanish).
    pub worst_ratio: f64,
    pub pass: bool,
}

struct BoundTally {
    check: BoundCheck,
    abs_slack: f64,
}

impl BoundTally {
    fn new(name: &'static str, theorem: Theorem, abs_slack: f64) -> Self {
        BoundTally {
            check: BoundCheck { name, theorem, checked: 0, violations: 0, worst_ratio: 0.0, pass: true },
            abs_slack,
        }
    }

    fn push(&mut self, lhs: f64, rhs: f64) {
        let c = &mut self.check;
        c.checked += 1;
        if !(lhs <= rhs * (1.0 + BOUND_SLACK) + self.abs_slack) {
            c.violations += 1;
            c.pass = false;
        }
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / (rhs + self.abs_slack) };
        if ratio.is_nan() || ratio > c.worst_ratio {
            c.worst_ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        }
    }
}

/// Checks the certified discrete bounds along an IAA run recorded from
/// `k = 0`.
///
/// Unperturbed runs get the contraction `E_{k+1} ≤ (1−ρ)E_k` and the value,
/// distance and step envelopes `E_1(1−ρ)^{k−1}`, `(4E_1/γ)(1−ρ)^{k−1}`,
/// `(2αE_1/(Lβ))(1−ρ)^{k−1}`. Perturbed runs get
/// `E_{k+1} ≤ (1−σ)E_k + N‖ε_k‖²`. Fails with `OutOfBox` (or
/// `InvalidParameter` for `s ≠ 1/L`) when no theorem covers `cfg`.
///
/// Each side may exceed the other by `BOUND_SLACK` relative, plus `4ε|f*|`
/// absolute: `f(x) − f*` cannot resolve anything finer when `f* ≠ 0`.
pub fn theorem_bounds(p: &Problem, cfg: &AlgorithmConfig, records: &[IterateRecord]) -> Result<Vec<BoundCheck>> {
    if cfg.variant != Variant::Iaa {
        return Err(Error::InvalidParameter(format!("no certified bounds for {}", cfg.variant)));
    }
    let x_star = p.minimizer().ok_or(Error::MissingMinimizer)?;
    if records.len() < 3 || records.iter().enumerate().any(|(i, r)| r.k != i) {
        return Err(Error::InsufficientData { needed: 3, got: records.len() });
    }
    let energy: Vec<f64> =
        records.iter().map(|r| r.energy.ok_or(Error::MissingMinimizer)).collect::<Result<_>>()?;
    let e1 = energy[1];
    let last = records.len() - 1;
    let abs = 4.0 * f64::EPSILON * p.min_value().unwrap_or(0.0).abs();

    if cfg.perturb.is_none() {
        let rho = rate_constants(p, Theorem::T41, cfg.alpha, cfg.beta, cfg.s)?.rho.expect("T41 defines rho");
        let mut contraction = BoundTally::new("energy_contraction", Theorem::T41, abs);
        let mut value = BoundTally::new("value_envelope", Theorem::T41, abs);
        let mut dist = BoundTally::new("distance_envelope", Theorem::T41, abs);
        let mut step = BoundTally::new("step_envelope", Theorem::T41, abs);
        let dist_scale = 4.0 * e1 / p.gamma();
        let step_scale = 2.0 * cfg.alpha * e1 / (p.lipschitz() * cfg.beta);
        for k in 1..=last {
            let decay = (1.0 - rho).powi(k as i32 - 1);
            let r = &records[k];
            if k < last {
                contraction.push(energy[k + 1], (1.0 - rho) * energy[k]);
            }
            value.push(r.value_error, e1 * decay);
            dist.push(r.x.dist(x_star).powi(2), dist_scale * decay);
            step.push(r.step * r.step, step_scale * decay);
        }
        Ok(vec![contraction.check, value.check, dist.check, step.check])
    } else {
        let d = rate_constants(p, Theorem::T42, cfg.alpha, cfg.beta, cfg.s)?;
        let (sigma, n) = (d.sigma.expect("T42 defines sigma"), d.n.expect("T42 defines N"));
        let mut contraction = BoundTally::new("perturbed_energy_contraction", Theorem::T42, abs);
        for k in 1..last {
            let eps = cfg.perturb.sample_discrete(k as u64, p.dim());
            contraction.push(energy[k + 1], (1.0 - sigma) * energy[k] + n * eps.norm_sq());
        }
        Ok(vec![contraction.check])
    }
}
