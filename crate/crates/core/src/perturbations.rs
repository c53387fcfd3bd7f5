//! Additive perturbation models `ε_k` / `ε(t)`.
//!
//! Random draws are counter-based: the value for `(seed, k, coordinate)` is a
//! pure function of those three numbers, so sampling order never matters.
//! Each `(seed, k)` selects a ChaCha8 stream (`stream = k`); coordinate `j`
//! reads the two 64-bit words starting at word position `4j`. A standard normal
//! is produced by the Box–Muller cosine branch
//! `z = sqrt(−2 ln u₁) · cos(2π u₂)` with `u₁ ∈ (0, 1]`, `u₂ ∈ [0, 1)` taken
//! from the top 53 bits of each word.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::point::{norm, Point};

/// Stream reserved for drawing a random fixed direction.
const DIRECTION_STREAM: u64 = u64::MAX;

/// Direction of a deterministic power-decay perturbation.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    /// Canonical basis vector `e_i` (zero-based index).
    Axis(usize),
    /// A unit vector drawn once from the seed.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationModel {
    None,
    /// `‖ε_k‖ = c0 / k^p` along a fixed direction.
    PowerDecay { c0: f64, p: f64, direction: Direction },
    /// `ε_k ~ N(0, σ_k² I)`, `σ_k = sigma0 / (1 + decay·k)`.
    GaussianDecay { sigma0: f64, decay: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub model: PerturbationModel,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec::none()
    }
}

impl PerturbationSpec {
    pub fn none() -> Self {
        PerturbationSpec { model: PerturbationModel::None, seed: 0 }
    }

    pub fn power_decay(c0: f64, p: f64, direction: Direction) -> Result<Self> {
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("c0 must be ≥ 0, got {c0}")));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter(format!("p must be > 0, got {p}")));
        }
        Ok(PerturbationSpec { model: PerturbationModel::PowerDecay { c0, p, direction }, seed: 0 })
    }

    pub fn gaussian_decay(sigma0: f64, decay: f64, seed: u64) -> Result<Self> {
        if !(sigma0.is_finite() && sigma0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma0 must be ≥ 0, got {sigma0}")));
        }
        if !(decay.is_finite() && decay >= 0.0) {
            return Err(Error::InvalidParameter(format!("decay must be ≥ 0, got {decay}")));
        }
        Ok(PerturbationSpec { model: PerturbationModel::GaussianDecay { sigma0, decay }, seed })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_none(&self) -> bool {
        matches!(self.model, PerturbationModel::None)
    }

    /// Whether samples depend on `seed`.
    pub fn uses_seed(&self) -> bool {
        matches!(
            self.model,
            PerturbationModel::GaussianDecay { .. } | PerturbationModel::PowerDecay { direction: Direction::Random, .. }
        )
    }

    /// Per-coordinate standard deviation of the gaussian model at `k`.
    pub fn sigma_at(&self, k: u64) -> Option<f64> {
        match self.model {
            PerturbationModel::GaussianDecay { sigma0, decay } => {
                Some(sigma0 / (1.0 + decay * k as f64))
            }
            _ => None,
        }
    }

    /// `ε_k` for `k ≥ 1`. Pure in `(seed, k, dim)`.
    pub fn sample_discrete(&self, k: u64, dim: usize) -> Point {
        match &self.model {
            PerturbationModel::None => Point::zeros(dim),
            PerturbationModel::PowerDecay { c0, p, direction } => {
                let mag = c0 / (k as f64).powf(*p);
                self.unit_direction(direction, dim).scale(mag)
            }
            PerturbationModel::GaussianDecay { .. } => {
                let sigma = self.sigma_at(k).unwrap_or(0.0);
                Point::new(standard_normals(self.seed, k, dim).into_iter().map(|z| sigma * z).collect())
            }
        }
    }

    /// `ε(t)` for the continuous system at integrator step `step` (1-based).
    ///
    /// The power-decay profile is evaluated exactly at `t`; the gaussian model
    /// returns the draw frozen for the whole step (`sample_discrete(step)`).
    pub fn sample_continuous(&self, t: f64, step: u64, dim: usize) -> Result<Point> {
        match &self.model {
            PerturbationModel::None => Ok(Point::zeros(dim)),
            PerturbationModel::PowerDecay { c0, p, direction } => {
                if !(t > 0.0) {
                    return Err(Error::NonPositiveTime { t });
                }
                Ok(self.unit_direction(direction, dim).scale(c0 / t.powf(*p)))
            }
            PerturbationModel::GaussianDecay { .. } => Ok(self.sample_discrete(step.max(1), dim)),
        }
    }

    fn unit_direction(&self, direction: &Direction, dim: usize) -> Point {
        match direction {
            Direction::Axis(i) => {
                let mut e = Point::zeros(dim);
                if let Some(slot) = e.get_mut(*i) {
                    *slot = 1.0;
                }
                e
            }
            Direction::Random => {
                let z = standard_normals(self.seed, DIRECTION_STREAM, dim);
                let n = norm(&z);
                Point::new(z.into_iter().map(|v| v / n).collect())
            }
        }
    }
}

/// `dim` independent standard normals keyed by `(seed, counter)`.
pub fn standard_normals(seed: u64, counter: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter);
    (0..dim)
        .map(|j| {
            rng.set_word_pos(4 * j as u128);
            let u1 = unit_open_closed(rng.next_u64());
            let u2 = unit_closed_open(rng.next_u64());
            (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
        })
        .collect()
}

fn unit_closed_open(w: u64) -> f64 {
    (w >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn unit_open_closed(w: u64) -> f64 {
    ((w >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.model {
            PerturbationModel::None => write!(f, "none"),
            PerturbationModel::PowerDecay { c0, p, direction } => {
                write!(f, "power:c0={c0},p={p}")?;
                match direction {
                    Direction::Axis(i) => write!(f, ",dir=e{}", i + 1),
                    Direction::Random => write!(f, ",dir=random"),
                }
            }
            PerturbationModel::GaussianDecay { sigma0, decay } => {
                write!(f, "gauss:sigma0={sigma0},decay={decay}")
            }
        }
    }
}

/// Parses `none`, `power:c0=<r>,p=<r>[,dir=e<i>|random]` or
/// `gauss:sigma0=<r>,decay=<r>`. The seed is supplied separately.
impl FromStr for PerturbationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(PerturbationSpec::none());
        }
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad perturbation spec `{s}`")))?;
        let mut c0 = None;
        let mut p = None;
        let mut sigma0 = None;
        let mut decay = None;
        let mut direction = Direction::Axis(0);
        for item in args.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number `{value}` for `{key}`")))
            };
            match key {
                "c0" => c0 = Some(num()?),
                "p" => p = Some(num()?),
                "sigma0" => sigma0 = Some(num()?),
                "decay" => decay = Some(num()?),
                "dir" => {
                    direction = if value == "random" {
                        Direction::Random
                    } else {
                        let i: usize = value
                            .strip_prefix('e')
                            .and_then(|i| i.parse().ok())
                            .filter(|i| *i >= 1)
                            .ok_or_else(|| Error::Parse(format!("bad direction `{value}`")))?;
                        Direction::Axis(i - 1)
                    }
                }
                _ => return Err(Error::Parse(format!("unknown perturbation key `{key}`"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("missing `{k}` in `{s}`"));
        match kind {
            "power" => PerturbationSpec::power_decay(
                c0.ok_or_else(|| missing("c0"))?,
                p.ok_or_else(|| missing("p"))?,
                direction,
            ),
            "gauss" => PerturbationSpec::gaussian_decay(
                sigma0.ok_or_else(|| missing("sigma0"))?,
                decay.ok_or_else(|| missing("decay"))?,
                0,
            ),
            _ => Err(Error::Parse(format!("unknown perturbation model `{kind}`"))),
        }
    }
}
