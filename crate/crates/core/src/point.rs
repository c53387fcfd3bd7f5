use std::fmt;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// A point of `R^n`, stored densely.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    /// Builds a point, rejecting NaN/Inf entries.
    pub fn finite(coords: Vec<f64>) -> Result<Self> {
        let p = Point(coords);
        p.check_finite()?;
        Ok(p)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn splat(dim: usize, value: f64) -> Self {
        Point(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteInput)
        }
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got: self.dim() })
        }
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    /// `self - other`
    pub fn sub(&self, other: &[f64]) -> Point {
        Point(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    /// `self + t * dir`
    pub fn add_scaled(&self, t: f64, dir: &[f64]) -> Point {
        Point(self.0.iter().zip(dir).map(|(a, d)| a + t * d).collect())
    }

    pub fn scale(&self, t: f64) -> Point {
        Point(self.0.iter().map(|a| t * a).collect())
    }

    /// Euclidean distance to `other`.
    pub fn dist(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
