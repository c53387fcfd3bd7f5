//! Continuous-time inertial dynamics with implicit Hessian damping,
//!
//! ```text
//! ẍ(t) + α ẋ(t) + ∇f(x(t) + β ẋ(t)) = ε(t),
//! ```
//!
//! written as the first-order system `(ẋ, v̇) = (v, −αv − ∇f(x + βv) + ε(t))`
//! and advanced with the classical fixed-step fourth-order Runge–Kutta scheme.

use crate::analysis::continuous_energy_unchecked;
use crate::error::{Error, Result};
use crate::perturbations::PerturbationSpec;
use crate::point::{norm, Point};
use crate::problems::Problem;

/// Blow-up threshold on `‖x‖` and `‖v‖`.
pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct OdeState {
    pub t: f64,
    pub x: Point,
    /// Velocity `ẋ`.
    pub v: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub x: Point,
    pub v: Point,
    /// `f(x + βv) − f*` (raw `f(x + βv)` when `f*` is unknown).
    pub value_error: f64,
    /// `‖x − x*‖`, when `x*` is known.
    pub traj_error: Option<f64>,
    pub speed: f64,
    /// Continuous Lyapunov energy, when `x*` and `f*` are known.
    pub energy: Option<f64>,
}

/// Integration settings for [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct OdeConfig {
    pub alpha: f64,
    pub beta: f64,
    pub perturbation: PerturbationSpec,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub record_every: usize,
}

impl OdeConfig {
    /// Unperturbed run on `[0, t_end]` with `dt = 1e-3`, recording every 100 steps.
    pub fn new(alpha: f64, beta: f64, t_end: f64) -> Self {
        OdeConfig {
            alpha,
            beta,
            perturbation: PerturbationSpec::none(),
            t0: 0.0,
            t_end,
            dt: 1e-3,
            record_every: 100,
        }
    }

    /// Perturbed runs start at `t0 = 1` so `1/t^p` profiles are finite.
    pub fn perturbed(mut self, perturbation: PerturbationSpec) -> Self {
        if !perturbation.is_none() && self.t0 == 0.0 {
            self.t0 = 1.0;
        }
        self.perturbation = perturbation;
        self
    }

    pub fn with_span(mut self, t0: f64, t_end: f64) -> Self {
        self.t0 = t0;
        self.t_end = t_end;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    /// Number of steps needed to reach `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end - self.t0) / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be ≥ 0, got {}", self.beta)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end > self.t0) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} must exceed t0 = {}",
                self.t_end, self.t0
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Right-hand side `(v, −αv − ∇f(x + βv) + ε(t))`.
///
/// `step` is the 1-based integrator step the stage belongs to; only the
/// gaussian perturbation model uses it.
pub fn rhs(
    p: &Problem,
    alpha: f64,
    beta: f64,
    pert: &PerturbationSpec,
    state: &OdeState,
    step: u64,
) -> Result<(Point, Point)> {
    if !(state.x.is_finite() && state.v.is_finite() && state.t.is_finite()) {
        return Err(Error::NonFiniteState { t: state.t });
    }
    state.x.check_dim(p.dim())?;
    state.v.check_dim(p.dim())?;
    let eps = if pert.is_none() { None } else { Some(pert.sample_continuous(state.t, step, p.dim())?) };
    let mut dv = Point::zeros(p.dim());
    accel(p, alpha, beta, &state.x, &state.v, eps.as_deref(), &mut dv);
    if !dv.is_finite() {
        return Err(Error::NonFiniteState { t: state.t });
    }
    Ok((state.v.clone(), dv))
}

fn accel(p: &Problem, alpha: f64, beta: f64, x: &[f64], v: &[f64], eps: Option<&[f64]>, out: &mut [f64]) {
    let shifted: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi + beta * vi).collect();
    p.gradient_into(&shifted, out);
    for (o, vi) in out.iter_mut().zip(v) {
        *o = -alpha * vi - *o;
    }
    if let Some(e) = eps {
        for (o, ei) in out.iter_mut().zip(e) {
            *o += ei;
        }
    }
}

fn record(p: &Problem, cfg: &OdeConfig, t: f64, x: &[f64], v: &[f64]) -> TrajectoryRecord {
    let shifted: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi + cfg.beta * vi).collect();
    let (traj_error, energy) = match (p.minimizer(), p.min_value()) {
        (Some(xs), Some(fs)) => (
            Some(xs.dist(x)),
            Some(continuous_energy_unchecked(p, xs, fs, cfg.alpha, cfg.beta, x, v)),
        ),
        (Some(xs), None) => (Some(xs.dist(x)), None),
        _ => (None, None),
    };
    TrajectoryRecord {
        t,
        x: Point::from(x),
        v: Point::from(v),
        value_error: p.value_error(&shifted),
        traj_error,
        speed: norm(v),
        energy,
    }
}

/// Integrates from `(x0, v0)` at `cfg.t0` to `cfg.t_end` with fixed-step RK4.
///
/// Records are taken at step indices that are multiples of `record_every`
/// (times `t0 + j·record_every·dt`) and at the final step.
pub fn integrate(p: &Problem, cfg: &OdeConfig, x0: &Point, v0: &Point) -> Result<Vec<TrajectoryRecord>> {
    cfg.validate()?;
    x0.check_dim(p.dim())?;
    v0.check_dim(p.dim())?;
    if !(x0.is_finite() && v0.is_finite()) {
        return Err(Error::NonFiniteState { t: cfg.t0 });
    }
    let n = p.dim();
    let steps = cfg.steps();
    let dt = cfg.dt;
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let pert = &cfg.perturbation;
    let noisy = !pert.is_none();

    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    let mut records = Vec::with_capacity(steps / cfg.record_every + 2);
    records.push(record(p, cfg, cfg.t0, &x, &v));

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut xs = vec![0.0; n];
    let mut vs = vec![0.0; n];

    let eps_at = |t: f64, step: u64| -> Result<Option<Point>> {
        if noisy {
            pert.sample_continuous(t, step, n).map(Some)
        } else {
            Ok(None)
        }
    };

    for step in 1..=steps {
        let t = cfg.t0 + (step - 1) as f64 * dt;
        let tag = step as u64;

        // stage 1: (v, a(x, v))
        let e = eps_at(t, tag)?;
        accel(p, alpha, beta, &x, &v, e.as_deref(), &mut k1);
        // stage 2
        for i in 0..n {
            xs[i] = x[i] + 0.5 * dt * v[i];
            vs[i] = v[i] + 0.5 * dt * k1[i];
        }
        let e = eps_at(t + 0.5 * dt, tag)?;
        let v2 = vs.clone();
        accel(p, alpha, beta, &xs, &vs, e.as_deref(), &mut k2);
        // stage 3
        for i in 0..n {
            xs[i] = x[i] + 0.5 * dt * v2[i];
            vs[i] = v[i] + 0.5 * dt * k2[i];
        }
        let v3 = vs.clone();
        accel(p, alpha, beta, &xs, &vs, e.as_deref(), &mut k3);
        // stage 4
        for i in 0..n {
            xs[i] = x[i] + dt * v3[i];
            vs[i] = v[i] + dt * k3[i];
        }
        let e = eps_at(t + dt, tag)?;
        let v4 = vs.clone();
        accel(p, alpha, beta, &xs, &vs, e.as_deref(), &mut k4);

        for i in 0..n {
            x[i] += dt / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
            v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        let t_next = cfg.t0 + step as f64 * dt;
        if x.iter().chain(&v).any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteState { t: t_next });
        }
        if norm(&x) > DIVERGENCE_BOUND || norm(&v) > DIVERGENCE_BOUND {
            return Err(Error::Divergence { at: t_next });
        }
        if step % cfg.record_every == 0 || step == steps {
            records.push(record(p, cfg, t_next, &x, &v));
        }
    }
    Ok(records)
}

/// Outcome of an energy-decay certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub pass: bool,
    /// `min_t [E(t0)·exp(−(λκ/2)(t − t0)) − E(t)]`.
    pub worst_slack: f64,
}

fn energies(records: &[TrajectoryRecord]) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    records.iter().map(|r| r.energy.ok_or(Error::MissingMinimizer)).collect()
}

/// Checks `E(t) ≤ E(t0)·exp(−(λκ/2)(t − t0)) + tol` at every record,
/// `tol = max(1e−6, 1e−6·E(t0))`.
pub fn rate_certificate(records: &[TrajectoryRecord], lam: f64, kappa: f64) -> Result<Certificate> {
    let e = energies(records)?;
    let t0 = records[0].t;
    let e0 = e[0];
    let tol = f64::max(1e-6, 1e-6 * e0);
    let worst_slack = records
        .iter()
        .zip(&e)
        .map(|(r, ei)| e0 * (-(lam * kappa / 2.0) * (r.t - t0)).exp() - ei)
        .fold(f64::INFINITY, f64::min);
    Ok(Certificate { pass: worst_slack >= -tol, worst_slack })
}

/// Largest energy increase between consecutive records and whether it stays
/// within `rel_slack·E(t0)`.
pub fn energy_nonincreasing(records: &[TrajectoryRecord], rel_slack: f64) -> Result<(bool, f64)> {
    let e = energies(records)?;
    let worst = e.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let worst = if e.len() < 2 { 0.0 } else { worst };
    Ok((worst <= rel_slack * e[0], worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbations::Direction;
    use crate::problems::{builtin_problem, example51};
    use approx::assert_abs_diff_eq;

    #[test]
    fn equilibrium_rhs() {
        let p = example51();
        let s = OdeState { t: 0.0, x: Point::zeros(1), v: Point::zeros(1) };
        let (dx, dv) = rhs(&p, 1.0, 0.2, &PerturbationSpec::none(), &s, 1).unwrap();
        assert_eq!((dx[0], dv[0]), (0.0, 0.0));
    }

    #[test]
    fn rhs_at_three() {
        let p = example51();
        let s = OdeState { t: 0.0, x: Point::new(vec![3.0]), v: Point::zeros(1) };
        let (dx, dv) = rhs(&p, 1.0, 0.2, &PerturbationSpec::none(), &s, 1).unwrap();
        assert_eq!(dx[0], 0.0);
        assert_abs_diff_eq!(dv[0], -5.441169, epsilon = 1e-6);
    }

    #[test]
    fn zero_beta_is_heavy_ball_system() {
        let p = example51();
        let s = OdeState { t: 0.0, x: Point::new(vec![1.3]), v: Point::new(vec![-0.4]) };
        let (_, dv) = rhs(&p, 0.7, 0.0, &PerturbationSpec::none(), &s, 1).unwrap();
        assert_eq!(dv[0], -0.7 * -0.4 - p.gradient(&[1.3])[0]);
    }

    #[test]
    fn rhs_adds_perturbation_and_rejects_nan() {
        let p = example51();
        let pert = PerturbationSpec::power_decay(2.0, 1.0, Direction::Axis(0)).unwrap();
        let s = OdeState { t: 4.0, x: Point::zeros(1), v: Point::zeros(1) };
        let (_, dv) = rhs(&p, 1.0, 0.0, &pert, &s, 1).unwrap();
        assert_eq!(dv[0], 0.5);
        let bad = OdeState { t: 0.0, x: Point::new(vec![f64::NAN]), v: Point::zeros(1) };
        assert!(matches!(rhs(&p, 1.0, 0.0, &pert, &bad, 1), Err(Error::NonFiniteState { .. })));
    }

    #[test]
    fn constant_trajectory_at_minimizer() {
        let p = example51();
        let cfg = OdeConfig::new(1.0, 0.1, 2.0).with_record_every(250);
        let recs = integrate(&p, &cfg, &Point::zeros(1), &Point::zeros(1)).unwrap();
        assert_eq!(recs.len(), 9);
        assert!(recs.iter().all(|r| r.energy == Some(0.0) && r.x[0] == 0.0));
        let cert = rate_certificate(&recs, 24.0 / 49.0, 1.0 / 12.0).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.worst_slack, 0.0);
    }

    #[test]
    fn record_times_and_final_record() {
        let p = example51();
        let cfg = OdeConfig::new(1.0, 0.1, 1.05).with_dt(0.1).with_record_every(3);
        let recs = integrate(&p, &cfg, &Point::new(vec![1.0]), &Point::zeros(1)).unwrap();
        let times: Vec<f64> = recs.iter().map(|r| r.t).collect();
        // 11 steps: records at 0, 3, 6, 9 and the final step 11
        assert_eq!(times.len(), 5);
        assert_abs_diff_eq!(times[1], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(*times.last().unwrap(), 1.1, epsilon = 1e-12);
    }

    #[test]
    fn inflated_energy_fails_certificate() {
        let p = example51();
        let cfg = OdeConfig::new(1.0, 0.1, 5.0);
        let mut recs = integrate(&p, &cfg, &Point::new(vec![3.0]), &Point::zeros(1)).unwrap();
        assert!(rate_certificate(&recs, 24.0 / 49.0, 1.0 / 12.0).unwrap().pass);
        let e0 = recs[0].energy.unwrap();
        recs.last_mut().unwrap().energy = Some(e0 * 2.0);
        let cert = rate_certificate(&recs, 24.0 / 49.0, 1.0 / 12.0).unwrap();
        assert!(!cert.pass && cert.worst_slack < 0.0);
    }

    #[test]
    fn certificate_errors() {
        assert_eq!(rate_certificate(&[], 1.0, 1.0), Err(Error::EmptyTrajectory));
    }

    #[test]
    fn divergence_is_reported() {
        // negative-curvature-free but huge step: unstable explicit run on a stiff quadratic
        let p = builtin_problem("quadratic(1,[1e12])").unwrap();
        let cfg = OdeConfig::new(1.0, 0.0, 10.0).with_dt(1.0);
        let err = integrate(&p, &cfg, &Point::new(vec![1.0]), &Point::zeros(1)).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn invalid_config() {
        let p = example51();
        let x = Point::new(vec![1.0]);
        let v = Point::zeros(1);
        assert!(integrate(&p, &OdeConfig::new(0.0, 0.1, 1.0), &x, &v).is_err());
        assert!(integrate(&p, &OdeConfig::new(1.0, -0.1, 1.0), &x, &v).is_err());
        assert!(integrate(&p, &OdeConfig::new(1.0, 0.1, 1.0).with_dt(0.0), &x, &v).is_err());
        assert!(integrate(&p, &OdeConfig::new(1.0, 0.1, 1.0).with_span(2.0, 1.0), &x, &v).is_err());
        assert!(integrate(&p, &OdeConfig::new(1.0, 0.1, 1.0), &Point::zeros(2), &v).is_err());
    }

    #[test]
    fn perturbed_defaults_to_t0_one() {
        let pert = PerturbationSpec::power_decay(0.1, 1.0, Direction::Axis(0)).unwrap();
        let cfg = OdeConfig::new(1.0, 0.1, 10.0).perturbed(pert);
        assert_eq!(cfg.t0, 1.0);
    }
}
