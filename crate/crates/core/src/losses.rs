//! Per-sample losses with certified strong convexity and smoothness.

use crate::error::{Error, Result};

/// `(mu, L, C)`: strong convexity modulus, smoothness constant, and the
/// uniform bound on per-sample minimizer norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConstants {
    pub mu: f64,
    pub smoothness: f64,
    pub minimizer_bound: f64,
}

impl LossConstants {
    pub fn new(mu: f64, smoothness: f64, minimizer_bound: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::param("mu", format!("must be positive, got {mu}")));
        }
        if !(smoothness >= mu && smoothness.is_finite()) {
            return Err(Error::param(
                "L",
                format!("must satisfy L >= mu = {mu}, got {smoothness}"),
            ));
        }
        if !(minimizer_bound > 0.0 && minimizer_bound.is_finite()) {
            return Err(Error::param(
                "C",
                format!("must be positive, got {minimizer_bound}"),
            ));
        }
        Ok(LossConstants {
            mu,
            smoothness,
            minimizer_bound,
        })
    }

    pub fn condition_number(&self) -> f64 {
        self.smoothness / self.mu
    }

    /// Drift constant `C' = (1 + sqrt(L/mu)) L C / mu`.
    pub fn drift_constant(&self) -> f64 {
        (1.0 + self.condition_number().sqrt()) * self.smoothness * self.minimizer_bound / self.mu
    }

    /// Largest admissible fixed step, `2 / (mu + L)`.
    pub fn max_step(&self) -> f64 {
        2.0 / (self.mu + self.smoothness)
    }
}

/// Loss attached to one streamed sample.
pub trait SampleLoss {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> Result<f64>;
    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>>;
    fn minimizer(&self) -> &[f64];
}

/// `f(w) = 1/2 sum_j q_j (w_j - c_j)^2` with every `q_j` in `[mu, L]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticLoss {
    center: Vec<f64>,
    curvature: Vec<f64>,
}

/// Slack on the `||c|| <= C` check; covers `sqrt` round-off when every
/// coordinate sits on a box boundary.
const NORM_SLACK: f64 = 1e-12;

impl QuadraticLoss {
    pub fn new(center: Vec<f64>, curvature: Vec<f64>, constants: &LossConstants) -> Result<Self> {
        if center.len() != curvature.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                found: curvature.len(),
            });
        }
        if center.is_empty() {
            return Err(Error::param("center", "dimension must be at least 1"));
        }
        if let Some(q) = curvature
            .iter()
            .find(|q| !(**q >= constants.mu && **q <= constants.smoothness))
        {
            return Err(Error::param(
                "curvature",
                format!(
                    "entry {q} outside [mu, L] = [{}, {}]",
                    constants.mu, constants.smoothness
                ),
            ));
        }
        let norm = norm(&center);
        if norm.is_nan() || norm > constants.minimizer_bound * (1.0 + NORM_SLACK) {
            return Err(Error::param(
                "center",
                format!(
                    "norm {norm} exceeds minimizer bound C = {}",
                    constants.minimizer_bound
                ),
            ));
        }
        Ok(QuadraticLoss { center, curvature })
    }

    /// Same curvature `q` in every coordinate.
    pub fn isotropic(center: Vec<f64>, q: f64, constants: &LossConstants) -> Result<Self> {
        let d = center.len();
        Self::new(center, vec![q; d], constants)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    fn check_dim(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                found: w.len(),
            });
        }
        Ok(())
    }
}

impl SampleLoss for QuadraticLoss {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        Ok(0.5
            * w.iter()
                .zip(&self.center)
                .zip(&self.curvature)
                .map(|((w, c), q)| q * (w - c) * (w - c))
                .sum::<f64>())
    }

    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        Ok(w.iter()
            .zip(&self.center)
            .zip(&self.curvature)
            .map(|((w, c), q)| q * (w - c))
            .collect())
    }

    fn minimizer(&self) -> &[f64] {
        &self.center
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
