//! The streaming objective `F_t(w) = sum_i a_i(t) f_i(w)`.
//!
//! For uniform and discounted weights the objective keeps a running summary
//! updated through the scheme's two-term recursion, so gradient and
//! minimizer queries cost O(d) regardless of `t`. Custom weights fall back
//! to summing over the retained history.

use crate::error::{Error, Result};
use crate::losses::{QuadraticLoss, SampleLoss};
use crate::weights::WeightScheme;

/// Running weighted moments of the absorbed quadratics.
#[derive(Clone, Debug, PartialEq)]
struct FastState {
    /// `sum_i a_i(t) c_i`
    center: Vec<f64>,
    /// `sum_i a_i(t) q_i`
    curvature: Vec<f64>,
    /// `sum_i a_i(t) q_i c_i`
    moment: Vec<f64>,
}

impl FastState {
    fn from_loss(loss: &QuadraticLoss) -> Self {
        FastState {
            center: loss.center().to_vec(),
            curvature: loss.curvature().to_vec(),
            moment: moment(loss).collect(),
        }
    }

    fn blend(&mut self, carry: f64, fresh: f64, loss: &QuadraticLoss) {
        for (s, c) in self.center.iter_mut().zip(loss.center()) {
            *s = carry * *s + fresh * c;
        }
        for (s, q) in self.curvature.iter_mut().zip(loss.curvature()) {
            *s = carry * *s + fresh * q;
        }
        for (s, m) in self.moment.iter_mut().zip(moment(loss)) {
            *s = carry * *s + fresh * m;
        }
    }
}

fn moment(loss: &QuadraticLoss) -> impl Iterator<Item = f64> + '_ {
    loss.center()
        .iter()
        .zip(loss.curvature())
        .map(|(c, q)| q * c)
}

#[derive(Clone, Debug)]
pub struct StreamingObjective {
    scheme: WeightScheme,
    history: Vec<QuadraticLoss>,
    keep_history: bool,
    t: usize,
    dim: Option<usize>,
    fast: Option<FastState>,
}

impl StreamingObjective {
    /// Empty objective; the first `absorb` defines `F_1`.
    pub fn new(scheme: WeightScheme) -> Self {
        StreamingObjective {
            scheme,
            history: Vec::new(),
            keep_history: true,
            t: 0,
            dim: None,
            fast: None,
        }
    }

    /// Stop retaining absorbed losses. Only schemes with a recursion
    /// can drop their history.
    pub fn without_history(mut self) -> Result<Self> {
        if matches!(self.scheme, WeightScheme::Custom(_)) {
            return Err(Error::Unsupported(
                "custom weights need the full history".to_string(),
            ));
        }
        self.keep_history = false;
        self.history = Vec::new();
        Ok(self)
    }

    pub fn scheme(&self) -> &WeightScheme {
        &self.scheme
    }

    /// Number of samples absorbed.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn history(&self) -> &[QuadraticLoss] {
        &self.history
    }

    pub fn has_fast_path(&self) -> bool {
        self.fast.is_some()
    }

    pub fn absorb(&mut self, loss: QuadraticLoss) -> Result<()> {
        if let Some(d) = self.dim {
            if loss.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: loss.dim(),
                });
            }
        }
        match &self.scheme {
            WeightScheme::Custom(_) => {}
            scheme => match self.fast.as_mut() {
                None => self.fast = Some(FastState::from_loss(&loss)),
                Some(state) => {
                    let coeffs = scheme.recursion_coeffs(self.t)?;
                    state.blend(coeffs.carry, coeffs.fresh, &loss);
                }
            },
        }
        self.dim = Some(loss.dim());
        self.t += 1;
        if self.keep_history {
            self.history.push(loss);
        }
        Ok(())
    }

    fn check_query(&self, w: &[f64]) -> Result<()> {
        let d = self.dim.ok_or(Error::EmptyObjective)?;
        if w.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: w.len(),
            });
        }
        Ok(())
    }

    /// `grad F_t(w)`, written into `out` without allocating.
    pub fn gradient_into(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_query(w)?;
        if out.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                found: out.len(),
            });
        }
        match &self.fast {
            Some(state) => {
                for (((g, w), q), m) in out
                    .iter_mut()
                    .zip(w)
                    .zip(&state.curvature)
                    .zip(&state.moment)
                {
                    *g = q * w - m;
                }
                Ok(())
            }
            None => {
                let direct = self.direct_gradient(w)?;
                out.copy_from_slice(&direct);
                Ok(())
            }
        }
    }

    pub fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; w.len()];
        self.gradient_into(w, &mut out)?;
        Ok(out)
    }

    /// `sum_i a_i(t) grad f_i(w)` summed over the retained history.
    pub fn direct_gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_query(w)?;
        let weights = self.history_weights()?;
        let mut out = vec![0.0; w.len()];
        for (a, loss) in weights.iter().zip(&self.history) {
            for (g, gi) in out.iter_mut().zip(loss.gradient(w)?) {
                *g += a * gi;
            }
        }
        Ok(out)
    }

    fn history_weights(&self) -> Result<Vec<f64>> {
        if self.t == 0 {
            return Err(Error::EmptyObjective);
        }
        if !self.keep_history {
            return Err(Error::Unsupported(
                "history was dropped; direct summation is unavailable".to_string(),
            ));
        }
        self.scheme.weights(self.t)
    }

    /// The weighted center `sum_i a_i(t) c_i`.
    pub fn weighted_center(&self) -> Result<Vec<f64>> {
        if let Some(state) = &self.fast {
            return Ok(state.center.clone());
        }
        let weights = self.history_weights()?;
        let mut out = vec![0.0; self.dim.unwrap_or(0)];
        for (a, loss) in weights.iter().zip(&self.history) {
            for (o, c) in out.iter_mut().zip(loss.center()) {
                *o += a * c;
            }
        }
        Ok(out)
    }

    /// Exact minimizer of `F_t`.
    ///
    /// Elementwise `(sum_i a_i q_i c_i) / (sum_i a_i q_i)`, which reduces to
    /// the weighted center when every sample shares one curvature.
    pub fn exact_minimizer(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim.ok_or(Error::EmptyObjective)?];
        self.minimizer_into(&mut out)?;
        Ok(out)
    }

    pub fn minimizer_into(&self, out: &mut [f64]) -> Result<()> {
        let d = self.dim.ok_or(Error::EmptyObjective)?;
        if out.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: out.len(),
            });
        }
        if let Some(state) = &self.fast {
            for ((o, m), q) in out.iter_mut().zip(&state.moment).zip(&state.curvature) {
                *o = m / q;
            }
            return Ok(());
        }
        let weights = self.history_weights()?;
        let mut curvature = vec![0.0; d];
        out.fill(0.0);
        for (a, loss) in weights.iter().zip(&self.history) {
            for (o, m) in out.iter_mut().zip(moment(loss)) {
                *o += a * m;
            }
            for (s, q) in curvature.iter_mut().zip(loss.curvature()) {
                *s += a * q;
            }
        }
        for (o, q) in out.iter_mut().zip(&curvature) {
            *o /= q;
        }
        Ok(())
    }
}
