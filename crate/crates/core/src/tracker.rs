//! Budgeted fixed-step gradient descent on the current streaming objective.

use crate::error::{Error, Result};
use crate::losses::LossConstants;
use crate::objective::StreamingObjective;

#[derive(Clone, Debug, PartialEq)]
pub struct TrackerConfig {
    eta: f64,
    budget: u32,
    w0: Vec<f64>,
}

impl TrackerConfig {
    /// Validates `0 < eta <= 2 / (mu + L)` and `budget >= 1`.
    pub fn new(eta: f64, budget: u32, w0: Vec<f64>, constants: &LossConstants) -> Result<Self> {
        let max = constants.max_step();
        if !(eta > 0.0 && eta <= max) {
            return Err(Error::param(
                "eta",
                format!("step size {eta} outside the admissible interval (0, {max}]"),
            ));
        }
        if budget == 0 {
            return Err(Error::param("E", "gradient budget must be at least 1"));
        }
        if w0.is_empty() {
            return Err(Error::param("w0", "dimension must be at least 1"));
        }
        Ok(TrackerConfig { eta, budget, w0 })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn w0(&self) -> &[f64] {
        &self.w0
    }

    pub fn start(&self) -> TrackerState {
        TrackerState {
            w: self.w0.clone(),
            t: 0,
        }
    }
}

/// Iterate `w_t` after `t` time steps.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackerState {
    pub w: Vec<f64>,
    pub t: usize,
}

impl TrackerState {
    /// Runs `E` gradient steps on `obj`, which must already hold sample `t + 1`.
    pub fn step(&mut self, cfg: &TrackerConfig, obj: &StreamingObjective) -> Result<()> {
        self.step_observed(cfg, obj, |_, _| {})
    }

    /// Like [`step`](Self::step), calling `observe(k, w_{t,k})` for
    /// `k = 0..=E` (the starting point and each inner iterate).
    pub fn step_observed(
        &mut self,
        cfg: &TrackerConfig,
        obj: &StreamingObjective,
        mut observe: impl FnMut(u32, &[f64]),
    ) -> Result<()> {
        if obj.t() != self.t + 1 {
            return Err(Error::TimeMismatch {
                state: self.t,
                objective: obj.t(),
            });
        }
        let mut grad = vec![0.0; self.w.len()];
        observe(0, &self.w);
        for k in 1..=cfg.budget {
            obj.gradient_into(&self.w, &mut grad)?;
            for (w, g) in self.w.iter_mut().zip(&grad) {
                *w -= cfg.eta * g;
            }
            observe(k, &self.w);
        }
        self.t += 1;
        Ok(())
    }

    /// `||w_t - argmin F_t||`.
    pub fn tracking_error(&self, obj: &StreamingObjective) -> Result<f64> {
        if obj.t() != self.t {
            return Err(Error::TimeMismatch {
                state: self.t,
                objective: obj.t(),
            });
        }
        let target = obj.exact_minimizer()?;
        if target.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                expected: target.len(),
                found: self.w.len(),
            });
        }
        Ok(distance(&self.w, &target))
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
